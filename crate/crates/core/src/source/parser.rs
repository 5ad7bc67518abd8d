//! Recursive-descent parser producing the surface syntax.

use super::ast::{AliasAnn, Pos, Split};
use super::lexer::{tokenize, Kw, Tok, Token};
use super::surface::*;
use super::ParseError;
use crate::fraction::Fraction;
use crate::lifetime::Lft;
use crate::types::Type;
use crate::{Own, OwnType};

pub struct Parser {
    toks: Vec<Token>,
    i: usize,
}

type PResult<T> = Result<T, ParseError>;

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Num(s) => format!("`{s}`"),
        Tok::Kw(k) => format!("`{}`", super::lexer::keyword_text(*k)),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Underscore => "`_`".into(),
        Tok::Eof => "end of input".into(),
    }
}

impl Parser {
    pub fn new(src: &str) -> PResult<Self> {
        Ok(Parser {
            toks: tokenize(src)?,
            i: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let j = (self.i + k).min(self.toks.len() - 1);
        &self.toks[j].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn err<T>(&self, what: &str) -> PResult<T> {
        Err(ParseError::new(
            self.pos(),
            format!("expected {what}, found {}", describe(self.peek())),
        ))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: Kw) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: Kw) -> bool {
        if self.is_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(&format!("`{s}`"))
        }
    }

    fn expect_kw(&mut self, k: Kw) -> PResult<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.err(&format!("`{}`", super::lexer::keyword_text(k)))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.err("an identifier"),
        }
    }

    fn lft(&mut self) -> PResult<Lft> {
        self.ident().map(Lft)
    }

    // ---- types ----

    fn fraction(&mut self) -> PResult<Own> {
        let pos = self.pos();
        let Tok::Num(n) = self.peek().clone() else {
            return self.err("an ownership amount");
        };
        self.bump();
        let mut text = n;
        if self.eat_sym("/") {
            let Tok::Num(d) = self.peek().clone() else {
                return self.err("a denominator");
            };
            self.bump();
            text = format!("{text}/{d}");
        }
        Own::parse_literal(&text)
            .ok_or_else(|| ParseError::new(pos, format!("invalid ownership amount `{text}`")))
    }

    pub fn ty(&mut self) -> PResult<OwnType> {
        if self.eat_kw(Kw::Int) {
            return Ok(Type::Int);
        }
        self.expect_kw(Kw::Ref)?;
        self.expect_sym("<")?;
        let lft = self.lft()?;
        self.expect_sym(",")?;
        let own = self.fraction()?;
        let lend = if self.eat_kw(Kw::Lend) {
            let b = self.lft()?;
            self.expect_sym(":")?;
            Some((b, self.fraction()?))
        } else {
            None
        };
        self.expect_sym(">")?;
        Ok(Type::reference(lft, own, lend))
    }

    // ---- program ----

    pub fn program(&mut self) -> PResult<SProgram> {
        let mut funs = Vec::new();
        loop {
            if self.is_kw(Kw::Fn) {
                funs.push(self.fun_annotated()?);
            } else if let Some(f) = self.try_bare_fun()? {
                funs.push(f);
            } else {
                break;
            }
        }
        let main = if matches!(self.peek(), Tok::Eof) {
            None
        } else {
            Some(self.expr()?)
        };
        if !matches!(self.peek(), Tok::Eof) {
            return self.err("end of input");
        }
        Ok(SProgram {
            funs,
            main,
            end: self.pos(),
        })
    }

    fn fun_annotated(&mut self) -> PResult<SFun> {
        let pos = self.pos();
        self.expect_kw(Kw::Fn)?;
        let name = self.ident()?;
        let mut lfts = Vec::new();
        let mut order = Vec::new();
        if self.eat_sym("<") {
            if !self.is_sym(">") {
                loop {
                    let p = self.pos();
                    lfts.push((p, self.lft()?));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                if self.eat_sym(";") {
                    loop {
                        let a = self.lft()?;
                        self.expect_sym("<")?;
                        let b = self.lft()?;
                        order.push((a, b));
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
            }
            self.expect_sym(">")?;
        }
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.is_sym(")") {
            loop {
                let p = self.pos();
                let pname = self.ident()?;
                self.expect_sym(":")?;
                let ty = self.ty()?;
                let post = if self.eat_sym("=>") {
                    Some(self.ty()?)
                } else {
                    None
                };
                params.push(SParam {
                    pos: p,
                    name: pname,
                    ty: Some(ty),
                    post,
                });
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        let ret = if self.eat_sym("->") {
            if self.eat_sym("(") {
                let mut tys = vec![self.ty()?];
                while self.eat_sym(",") {
                    tys.push(self.ty()?);
                }
                self.expect_sym(")")?;
                Some(tys)
            } else {
                Some(vec![self.ty()?])
            }
        } else {
            None
        };
        self.expect_sym("{")?;
        let body = self.expr()?;
        self.expect_sym("}")?;
        Ok(SFun {
            pos,
            name,
            lfts,
            order,
            params,
            ret,
            body,
            annotated: true,
        })
    }

    /// `f(x, y) { .. }` with no types.
    fn try_bare_fun(&mut self) -> PResult<Option<SFun>> {
        let Tok::Ident(name) = self.peek().clone() else {
            return Ok(None);
        };
        if !matches!(self.peek_at(1), Tok::Sym("(")) {
            return Ok(None);
        }
        let save = self.i;
        let pos = self.pos();
        self.bump();
        self.bump();
        let mut params = Vec::new();
        if !self.is_sym(")") {
            loop {
                let p = self.pos();
                match self.peek().clone() {
                    Tok::Ident(x) => {
                        self.bump();
                        params.push(SParam {
                            pos: p,
                            name: x,
                            ty: None,
                            post: None,
                        });
                    }
                    _ => {
                        self.i = save;
                        return Ok(None);
                    }
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        if !self.eat_sym(")") || !self.is_sym("{") {
            self.i = save;
            return Ok(None);
        }
        self.bump();
        let body = self.expr()?;
        self.expect_sym("}")?;
        Ok(Some(SFun {
            pos,
            name,
            lfts: vec![],
            order: vec![],
            params,
            ret: None,
            body,
            annotated: false,
        }))
    }

    // ---- expressions ----

    fn mk(&self, pos: Pos, kind: SKind) -> SExpr {
        SExpr { pos, kind }
    }

    /// Optional `; expr` continuation of a statement. A `;` directly
    /// before a closing token is tolerated.
    fn cont(&mut self) -> PResult<Option<Box<SExpr>>> {
        if self.eat_sym(";") {
            if self.at_expr_end() {
                return Ok(None);
            }
            return Ok(Some(Box::new(self.expr()?)));
        }
        Ok(None)
    }

    fn at_expr_end(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Eof | Tok::Sym(")") | Tok::Sym("}") | Tok::Kw(Kw::Else) | Tok::Kw(Kw::In)
        )
    }

    pub fn expr(&mut self) -> PResult<SExpr> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Kw(Kw::Let) => {
                self.bump();
                let pat = self.pattern()?;
                self.expect_sym("=")?;
                let rhs = self.rhs()?;
                self.expect_kw(Kw::In)?;
                let body = self.expr()?;
                Ok(self.mk(
                    pos,
                    SKind::Let {
                        pat,
                        rhs,
                        body: Box::new(body),
                    },
                ))
            }
            Tok::Kw(Kw::Newlft) => {
                self.bump();
                let l = self.lft()?;
                self.expect_kw(Kw::In)?;
                let body = self.expr()?;
                Ok(self.mk(pos, SKind::NewLft(l, Box::new(body))))
            }
            Tok::Kw(Kw::Endlft) => {
                self.bump();
                let l = self.lft()?;
                let cont = self.cont()?;
                Ok(self.mk(pos, SKind::EndLft(l, cont)))
            }
            Tok::Kw(Kw::Alias) => {
                self.bump();
                self.expect_sym("(")?;
                let x = self.ident()?;
                self.expect_sym("=")?;
                let y = self.ident()?;
                self.expect_sym(")")?;
                let ann = if self.eat_kw(Kw::As) {
                    let tx = self.ty()?;
                    let ty = if self.eat_sym(",") {
                        Some(self.ty()?)
                    } else {
                        None
                    };
                    Some(AliasAnn { x: tx, y: ty })
                } else {
                    None
                };
                let cont = self.cont()?;
                Ok(self.mk(pos, SKind::Alias { x, y, ann, cont }))
            }
            Tok::Kw(Kw::If) => {
                self.bump();
                let c = self.cond()?;
                self.expect_kw(Kw::Then)?;
                let t = self.expr()?;
                self.expect_kw(Kw::Else)?;
                let e = self.expr()?;
                Ok(self.mk(pos, SKind::If(c, Box::new(t), Box::new(e))))
            }
            Tok::Kw(Kw::Ifz) => {
                self.bump();
                let x = self.ident()?;
                self.expect_kw(Kw::Then)?;
                let t = self.expr()?;
                self.expect_kw(Kw::Else)?;
                let e = self.expr()?;
                Ok(self.mk(pos, SKind::Ifz(x, Box::new(t), Box::new(e))))
            }
            Tok::Kw(Kw::Assert) => {
                self.bump();
                self.expect_sym("(")?;
                let c = self.cond()?;
                self.expect_sym(")")?;
                let cont = self.cont()?;
                Ok(self.mk(pos, SKind::Assert(c, cont)))
            }
            Tok::Kw(Kw::Fail) => {
                self.bump();
                Ok(self.mk(pos, SKind::Fail))
            }
            Tok::Ident(x) if matches!(self.peek_at(1), Tok::Sym(":=")) => {
                self.bump();
                self.bump();
                let val = self.val()?;
                let cont = self.cont()?;
                Ok(self.mk(pos, SKind::Assign { x, val, cont }))
            }
            Tok::Sym("(") => self.paren_expr(),
            _ => {
                let v = self.val()?;
                let cont = self.cont()?;
                Ok(self.mk(pos, SKind::Value(v, cont)))
            }
        }
    }

    /// `(` starts a grouped expression, a tuple, `()`, or a parenthesized
    /// value.
    fn paren_expr(&mut self) -> PResult<SExpr> {
        let pos = self.pos();
        let save = self.i;
        if let Ok(kind) = self.value_or_tuple() {
            if self.at_expr_end() || self.is_sym(";") {
                let kind = match kind {
                    SKind::Value(v, _) => SKind::Value(v, self.cont()?),
                    other => other,
                };
                return Ok(self.mk(pos, kind));
            }
        }
        self.i = save;
        self.expect_sym("(")?;
        let inner = self.expr()?;
        self.expect_sym(")")?;
        if self.is_sym(";") {
            return Err(ParseError::new(
                self.pos(),
                "a parenthesized block cannot be followed by `;`".to_string(),
            ));
        }
        Ok(inner)
    }

    fn value_or_tuple(&mut self) -> PResult<SKind> {
        if matches!(self.peek_at(1), Tok::Sym(")")) {
            return Ok(SKind::Value(self.val()?, None));
        }
        self.expect_sym("(")?;
        let p0 = self.pos();
        let first = self.val()?;
        if self.eat_sym(",") {
            let mut items = vec![(p0, first)];
            loop {
                let p = self.pos();
                items.push((p, self.val()?));
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(")")?;
            return Ok(SKind::Tuple(items));
        }
        self.expect_sym(")")?;
        // a parenthesized value may continue as an operand
        Ok(SKind::Value(self.val_continue(first)?, None))
    }

    fn pattern(&mut self) -> PResult<SPat> {
        match self.peek().clone() {
            Tok::Underscore => {
                self.bump();
                Ok(SPat::Wild)
            }
            Tok::Ident(x) => {
                self.bump();
                Ok(SPat::One(x))
            }
            Tok::Sym("(") => {
                self.bump();
                let mut xs = vec![self.ident()?];
                while self.eat_sym(",") {
                    xs.push(self.ident()?);
                }
                self.expect_sym(")")?;
                Ok(SPat::Tuple(xs))
            }
            _ => self.err("a pattern"),
        }
    }

    fn rhs(&mut self) -> PResult<SRhs> {
        if let Tok::Ident(y) = self.peek().clone() {
            match self.peek_at(1) {
                Tok::Kw(Kw::In) => {
                    self.bump();
                    return Ok(SRhs::Alias {
                        y,
                        split: Split::Transfer,
                    });
                }
                Tok::Kw(Kw::Borrow) => {
                    self.bump();
                    self.bump();
                    let lft = self.lft()?;
                    let amount = if self.eat_sym(":") {
                        Some(self.fraction()?)
                    } else {
                        None
                    };
                    return Ok(SRhs::Alias {
                        y,
                        split: Split::Borrow { lft, amount },
                    });
                }
                Tok::Kw(Kw::As) => {
                    self.bump();
                    self.bump();
                    let t = self.ty()?;
                    return Ok(SRhs::Alias {
                        y,
                        split: Split::As(t),
                    });
                }
                _ => {}
            }
        }
        Ok(SRhs::Val(self.val()?))
    }

    fn cond(&mut self) -> PResult<Cond> {
        let mut c = Cond::Val(self.val()?);
        while self.eat_sym("&&") {
            let rhs = Cond::Val(self.val()?);
            c = Cond::And(Box::new(c), Box::new(rhs));
        }
        Ok(c)
    }

    // ---- values: comparison < additive < multiplicative < unary ----

    pub fn val(&mut self) -> PResult<Val> {
        let lhs = self.additive()?;
        self.comparison_tail(lhs)
    }

    fn comparison_tail(&mut self, lhs: Val) -> PResult<Val> {
        let op = match self.peek() {
            Tok::Sym("=") => SOp::Eq,
            Tok::Sym("!=") => SOp::Ne,
            Tok::Sym("<") => SOp::Lt,
            Tok::Sym("<=") => SOp::Le,
            Tok::Sym(">") => SOp::Gt,
            Tok::Sym(">=") => SOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.additive()?;
        Ok(Val::Bin(op, Box::new(lhs), Box::new(rhs)))
    }

    /// Continues parsing binary operators after an already-parsed operand.
    fn val_continue(&mut self, first: Val) -> PResult<Val> {
        let m = self.multiplicative_tail(first)?;
        let a = self.additive_tail(m)?;
        self.comparison_tail(a)
    }

    fn additive(&mut self) -> PResult<Val> {
        let lhs = self.multiplicative()?;
        self.additive_tail(lhs)
    }

    fn additive_tail(&mut self, mut lhs: Val) -> PResult<Val> {
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => SOp::Add,
                Tok::Sym("-") => SOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Val::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn multiplicative(&mut self) -> PResult<Val> {
        let lhs = self.unary()?;
        self.multiplicative_tail(lhs)
    }

    fn multiplicative_tail(&mut self, mut lhs: Val) -> PResult<Val> {
        while self.eat_sym("*") {
            let rhs = self.unary()?;
            lhs = Val::Bin(SOp::Mul, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Val> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Sym("*") => {
                self.bump();
                Ok(Val::Deref(self.ident()?))
            }
            Tok::Sym("-") => {
                self.bump();
                match self.peek().clone() {
                    Tok::Num(n) => {
                        self.bump();
                        Ok(Val::Int(-int_literal(pos, &n)?))
                    }
                    _ => {
                        let v = self.unary()?;
                        Ok(Val::Bin(SOp::Sub, Box::new(Val::Int(0)), Box::new(v)))
                    }
                }
            }
            Tok::Num(n) => {
                self.bump();
                Ok(Val::Int(int_literal(pos, &n)?))
            }
            Tok::Underscore => {
                self.bump();
                Ok(Val::Havoc)
            }
            Tok::Kw(Kw::Mkref) => {
                self.bump();
                let lft = if self.eat_sym("<") {
                    let l = self.lft()?;
                    self.expect_sym(">")?;
                    Some(l)
                } else {
                    None
                };
                let inner = self.unary()?;
                Ok(Val::MkRef {
                    inner: Box::new(inner),
                    lft,
                })
            }
            Tok::Sym("(") => {
                self.bump();
                if self.eat_sym(")") {
                    return Ok(Val::Unit);
                }
                let v = self.val()?;
                self.expect_sym(")")?;
                Ok(v)
            }
            Tok::Ident(x) => {
                self.bump();
                if let Some(lfts) = self.try_call_lfts()? {
                    let args = self.call_args()?;
                    return Ok(Val::Call { f: x, lfts, args });
                }
                if self.is_sym("(") {
                    let args = self.call_args()?;
                    return Ok(Val::Call {
                        f: x,
                        lfts: vec![],
                        args,
                    });
                }
                Ok(Val::Var(x))
            }
            _ => self.err("an expression"),
        }
    }

    /// `<α, β>(` after a function name; backtracks if it is a comparison.
    fn try_call_lfts(&mut self) -> PResult<Option<Vec<Lft>>> {
        if !self.is_sym("<") {
            return Ok(None);
        }
        let save = self.i;
        self.bump();
        let mut lfts = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Ident(l) => {
                    self.bump();
                    lfts.push(Lft(l));
                }
                _ => {
                    self.i = save;
                    return Ok(None);
                }
            }
            if !self.eat_sym(",") {
                break;
            }
        }
        if self.eat_sym(">") && self.is_sym("(") {
            return Ok(Some(lfts));
        }
        self.i = save;
        Ok(None)
    }

    fn call_args(&mut self) -> PResult<Vec<(Pos, Val)>> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.is_sym(")") {
            loop {
                let p = self.pos();
                args.push((p, self.val()?));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(args)
    }
}

fn int_literal(pos: Pos, text: &str) -> PResult<i64> {
    if text.contains('.') {
        return Err(ParseError::new(pos, format!("`{text}` is not an integer")));
    }
    text.parse::<i64>()
        .map_err(|_| ParseError::new(pos, format!("integer literal `{text}` out of range")))
}
