//! Lowers surface syntax to the core language and makes every binder
//! unique.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::surface::*;
use super::{ParseError, ParseErrorKind};
use crate::lifetime::Lft;
use crate::types::Type;

struct Lower {
    avoid: HashSet<String>,
    counter: usize,
}

type Prefix = Vec<(Pos, String, Rhs)>;

fn node(pos: Pos, kind: ExprKind) -> Expr {
    Expr { id: 0, pos, kind }
}

fn wrap(prefix: Prefix, body: Expr) -> Expr {
    prefix.into_iter().rev().fold(body, |body, (pos, x, rhs)| {
        node(
            pos,
            ExprKind::Let {
                pat: Pattern::One(x),
                rhs,
                body: Box::new(body),
            },
        )
    })
}

impl Lower {
    fn fresh(&mut self, hint: &str) -> String {
        loop {
            self.counter += 1;
            let name = format!("_{hint}{}", self.counter);
            if !self.avoid.contains(&name) {
                self.avoid.insert(name.clone());
                return name;
            }
        }
    }

    fn unit(&mut self, pos: Pos) -> Expr {
        let t = self.fresh("u");
        wrap(
            vec![(pos, t.clone(), Rhs::Arith(Arith::Int(0)))],
            node(pos, ExprKind::Var(t)),
        )
    }

    fn atom(&mut self, pos: Pos, v: &Val, pre: &mut Prefix) -> String {
        if let Val::Var(x) = v {
            return x.clone();
        }
        let rhs = self.rhs_of(pos, v, pre);
        let t = self.fresh("t");
        pre.push((pos, t.clone(), rhs));
        t
    }

    fn rhs_of(&mut self, pos: Pos, v: &Val, pre: &mut Prefix) -> Rhs {
        match v {
            Val::Var(y) => Rhs::Alias {
                y: y.clone(),
                split: Split::Transfer,
            },
            Val::Deref(x) => Rhs::Deref(x.clone()),
            Val::Havoc => Rhs::Havoc,
            Val::Unit => Rhs::Arith(Arith::Int(0)),
            Val::Int(n) => Rhs::Arith(Arith::Int(*n)),
            Val::Call { f, lfts, args } => {
                let args = args.iter().map(|(p, a)| self.atom(*p, a, pre)).collect();
                Rhs::Call {
                    f: f.clone(),
                    lfts: lfts.clone(),
                    args,
                }
            }
            Val::MkRef { inner, lft } => {
                let y = self.atom(pos, inner, pre);
                Rhs::MkRef {
                    y,
                    lft: lft.clone(),
                }
            }
            Val::Bin(..) => Rhs::Arith(self.arith_of(pos, v, pre)),
        }
    }

    fn arith_of(&mut self, pos: Pos, v: &Val, pre: &mut Prefix) -> Arith {
        let bin = |op, a, b| Arith::Bin(op, Box::new(a), Box::new(b));
        match v {
            Val::Int(n) => Arith::Int(*n),
            Val::Unit => Arith::Int(0),
            Val::Var(x) => Arith::Var(x.clone()),
            Val::Bin(op, a, b) => {
                let a = self.arith_of(pos, a, pre);
                let b = self.arith_of(pos, b, pre);
                match op {
                    SOp::Add => bin(Op::Add, a, b),
                    SOp::Sub => bin(Op::Sub, a, b),
                    SOp::Mul => bin(Op::Mul, a, b),
                    SOp::Eq => bin(Op::Eq, a, b),
                    SOp::Lt => bin(Op::Lt, a, b),
                    SOp::Le => bin(Op::Le, a, b),
                    SOp::Gt => bin(Op::Lt, b, a),
                    SOp::Ge => bin(Op::Le, b, a),
                    SOp::Ne => bin(Op::Sub, Arith::Int(1), bin(Op::Eq, a, b)),
                }
            }
            other => Arith::Var(self.atom(pos, other, pre)),
        }
    }

    /// `if c then a else b` as `ifz` chains. Comparisons yield 0 for true;
    /// any other value is true when nonzero.
    fn branch(&mut self, pos: Pos, c: &Cond, then: Expr, els: Expr) -> Expr {
        match c {
            Cond::And(a, b) => {
                let inner = self.branch(pos, b, then, els.clone());
                self.branch(pos, a, inner, els)
            }
            Cond::Val(v) => {
                let mut pre = Vec::new();
                let (scrutinee, then, els) = match v {
                    Val::Bin(op, a, b) if op.is_comparison() => {
                        let a = self.arith_of(pos, a, &mut pre);
                        let b = self.arith_of(pos, b, &mut pre);
                        let bin = |op, a, b| Arith::Bin(op, Box::new(a), Box::new(b));
                        let (arith, swap) = match op {
                            SOp::Eq => (bin(Op::Sub, a, b), false),
                            SOp::Ne => (bin(Op::Sub, a, b), true),
                            SOp::Lt => (bin(Op::Lt, a, b), false),
                            SOp::Le => (bin(Op::Le, a, b), false),
                            SOp::Gt => (bin(Op::Lt, b, a), false),
                            SOp::Ge => (bin(Op::Le, b, a), false),
                            _ => unreachable!(),
                        };
                        let c = self.fresh("c");
                        pre.push((pos, c.clone(), Rhs::Arith(arith)));
                        if swap {
                            (c, els, then)
                        } else {
                            (c, then, els)
                        }
                    }
                    Val::Havoc => {
                        let h = self.atom(pos, v, &mut pre);
                        (h, then, els)
                    }
                    other => {
                        let t = self.atom(pos, other, &mut pre);
                        (t, els, then)
                    }
                };
                wrap(
                    pre,
                    node(
                        pos,
                        ExprKind::IfZ {
                            x: scrutinee,
                            then: Box::new(then),
                            els: Box::new(els),
                        },
                    ),
                )
            }
        }
    }

    fn cont(&mut self, pos: Pos, c: Option<Box<SExpr>>) -> Result<Expr, ParseError> {
        match c {
            Some(e) => self.expr(*e),
            None => Ok(self.unit(pos)),
        }
    }

    fn expr(&mut self, e: SExpr) -> Result<Expr, ParseError> {
        let pos = e.pos;
        Ok(match e.kind {
            SKind::Let { pat, rhs, body } => {
                let mut pre = Vec::new();
                let rhs = match rhs {
                    SRhs::Alias { y, split } => Rhs::Alias { y, split },
                    SRhs::Val(v) => self.rhs_of(pos, &v, &mut pre),
                };
                let pat = match pat {
                    SPat::One(x) => Pattern::One(x),
                    SPat::Wild => Pattern::One(self.fresh("w")),
                    SPat::Tuple(xs) => {
                        if !matches!(rhs, Rhs::Call { .. }) {
                            return Err(ParseError::new(
                                pos,
                                "a tuple pattern must bind a function call".into(),
                            ));
                        }
                        Pattern::Tuple(xs)
                    }
                };
                let body = self.expr(*body)?;
                let let_node = node(
                    pos,
                    ExprKind::Let {
                        pat,
                        rhs,
                        body: Box::new(body),
                    },
                );
                wrap(pre, let_node)
            }
            SKind::NewLft(l, body) => node(
                pos,
                ExprKind::NewLft {
                    lft: l,
                    body: Box::new(self.expr(*body)?),
                },
            ),
            SKind::EndLft(l, cont) => {
                let cont = self.cont(pos, cont)?;
                node(
                    pos,
                    ExprKind::EndLft {
                        lft: l,
                        cont: Box::new(cont),
                    },
                )
            }
            SKind::Alias { x, y, ann, cont } => {
                let cont = self.cont(pos, cont)?;
                node(
                    pos,
                    ExprKind::Alias {
                        x,
                        y,
                        ann,
                        cont: Box::new(cont),
                    },
                )
            }
            SKind::Assign { x, val, cont } => {
                let mut pre = Vec::new();
                let y = self.atom(pos, &val, &mut pre);
                let cont = self.cont(pos, cont)?;
                wrap(
                    pre,
                    node(
                        pos,
                        ExprKind::Assign {
                            x,
                            y,
                            cont: Box::new(cont),
                        },
                    ),
                )
            }
            SKind::If(c, t, f) => {
                let t = self.expr(*t)?;
                let f = self.expr(*f)?;
                self.branch(pos, &c, t, f)
            }
            SKind::Ifz(x, t, f) => node(
                pos,
                ExprKind::IfZ {
                    x,
                    then: Box::new(self.expr(*t)?),
                    els: Box::new(self.expr(*f)?),
                },
            ),
            SKind::Assert(c, cont) => {
                let rest = self.cont(pos, cont)?;
                self.branch(pos, &c, rest, node(pos, ExprKind::Fail))
            }
            SKind::Fail => node(pos, ExprKind::Fail),
            SKind::Value(v, None) => {
                let mut pre = Vec::new();
                let x = self.atom(pos, &v, &mut pre);
                wrap(pre, node(pos, ExprKind::Var(x)))
            }
            SKind::Value(v, Some(cont)) => {
                let mut pre = Vec::new();
                let rhs = self.rhs_of(pos, &v, &mut pre);
                let w = self.fresh("w");
                pre.push((pos, w, rhs));
                let cont = self.expr(*cont)?;
                wrap(pre, cont)
            }
            SKind::Tuple(items) => {
                let mut pre = Vec::new();
                let xs = items
                    .iter()
                    .map(|(p, v)| self.atom(*p, v, &mut pre))
                    .collect();
                wrap(pre, node(pos, ExprKind::Tuple(xs)))
            }
        })
    }
}

fn surface_names(p: &SProgram) -> HashSet<String> {
    // every identifier-looking string is avoided by fresh names; collecting
    // binders and uses through Debug output keeps this independent of the
    // surface AST's shape
    let text = format!("{p:?}");
    let mut out = HashSet::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' || c == '\'' {
            cur.push(c);
        } else if !cur.is_empty() {
            out.insert(std::mem::take(&mut cur));
        }
    }
    out
}

pub fn lower(p: SProgram) -> Result<Program, ParseError> {
    let mut lw = Lower {
        avoid: surface_names(&p),
        counter: 0,
    };
    let mut funs = Vec::new();
    for f in p.funs {
        let body = lw.expr(f.body)?;
        let params = f
            .params
            .into_iter()
            .map(|sp| {
                let ty = sp.ty.unwrap_or(Type::Int);
                Param {
                    name: sp.name,
                    post: sp.post.unwrap_or_else(|| ty.clone()),
                    ty,
                }
            })
            .collect();
        funs.push(FunDef {
            name: f.name,
            lfts: f.lfts.into_iter().map(|(_, l)| l).collect(),
            order: f.order,
            params,
            ret: f.ret.unwrap_or_else(|| vec![Type::Int]),
            body,
            pos: f.pos,
            annotated: f.annotated,
        });
    }
    let main = match p.main {
        Some(e) => lw.expr(e)?,
        None => lw.unit(p.end),
    };
    let mut prog = Program { funs, main };
    uniquify(&mut prog, lw.avoid)?;
    number(&mut prog);
    Ok(prog)
}

/// Assigns pre-order node ids across functions then main.
pub fn number(p: &mut Program) {
    fn go(e: &mut Expr, next: &mut NodeId) {
        e.id = *next;
        *next += 1;
        match &mut e.kind {
            ExprKind::Var(_) | ExprKind::Tuple(_) | ExprKind::Fail => {}
            ExprKind::Let { body, .. } | ExprKind::NewLft { body, .. } => go(body, next),
            ExprKind::Assign { cont, .. }
            | ExprKind::Alias { cont, .. }
            | ExprKind::EndLft { cont, .. } => go(cont, next),
            ExprKind::IfZ { then, els, .. } => {
                go(then, next);
                go(els, next);
            }
        }
    }
    let mut next = 0;
    for f in &mut p.funs {
        go(&mut f.body, &mut next);
    }
    go(&mut p.main, &mut next);
}

struct Renamer {
    taken_vars: HashSet<String>,
    taken_lfts: HashSet<String>,
    avoid: HashSet<String>,
}

#[derive(Clone, Default)]
struct Scope {
    vars: HashMap<String, String>,
    lfts: HashMap<String, String>,
}

impl Renamer {
    fn pick(taken: &mut HashSet<String>, avoid: &HashSet<String>, x: &str) -> String {
        if !taken.contains(x) {
            taken.insert(x.to_string());
            return x.to_string();
        }
        let mut k = 2;
        loop {
            let cand = format!("{x}_{k}");
            if !taken.contains(&cand) && !avoid.contains(&cand) {
                taken.insert(cand.clone());
                return cand;
            }
            k += 1;
        }
    }

    fn bind_var(&mut self, sc: &mut Scope, x: &str) -> String {
        let n = Self::pick(&mut self.taken_vars, &self.avoid, x);
        sc.vars.insert(x.to_string(), n.clone());
        n
    }

    fn bind_lft(&mut self, sc: &mut Scope, l: &Lft) -> Lft {
        let n = Self::pick(&mut self.taken_lfts, &self.avoid, &l.0);
        sc.lfts.insert(l.0.clone(), n.clone());
        Lft(n)
    }

    fn var(sc: &Scope, pos: Pos, x: &str) -> Result<String, ParseError> {
        sc.vars.get(x).cloned().ok_or_else(|| ParseError {
            pos,
            message: format!("unbound variable `{x}`"),
            kind: ParseErrorKind::Unbound,
        })
    }

    fn lft(sc: &Scope, pos: Pos, l: &Lft) -> Result<Lft, ParseError> {
        sc.lfts
            .get(&l.0)
            .cloned()
            .map(Lft)
            .ok_or_else(|| ParseError {
                pos,
                message: format!("unbound lifetime `{l}`"),
                kind: ParseErrorKind::Unbound,
            })
    }

    fn ty(sc: &Scope, pos: Pos, t: &crate::OwnType) -> Result<crate::OwnType, ParseError> {
        let mut err = None;
        let out = t.subst(&|l: &Lft| match Self::lft(sc, pos, l) {
            Ok(n) => n,
            Err(_) => l.clone(),
        });
        for l in [t.lft(), t.lend_lft()].into_iter().flatten() {
            if let Err(e) = Self::lft(sc, pos, l) {
                err = Some(e);
            }
        }
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    fn expr(&mut self, sc: &Scope, e: &mut Expr) -> Result<(), ParseError> {
        let pos = e.pos;
        match &mut e.kind {
            ExprKind::Var(x) => *x = Self::var(sc, pos, x)?,
            ExprKind::Tuple(xs) => {
                for x in xs {
                    *x = Self::var(sc, pos, x)?;
                }
            }
            ExprKind::Fail => {}
            ExprKind::Let { pat, rhs, body } => {
                match rhs {
                    Rhs::Arith(a) => {
                        for v in a.vars() {
                            Self::var(sc, pos, v)?;
                        }
                        *a = a.rename(&|x| sc.vars.get(x).cloned().unwrap_or_default());
                    }
                    Rhs::Alias { y, split } => {
                        *y = Self::var(sc, pos, y)?;
                        match split {
                            Split::Transfer => {}
                            Split::Borrow { lft, .. } => *lft = Self::lft(sc, pos, lft)?,
                            Split::As(t) => *t = Self::ty(sc, pos, t)?,
                        }
                    }
                    Rhs::MkRef { y, lft } => {
                        *y = Self::var(sc, pos, y)?;
                        if let Some(l) = lft {
                            *l = Self::lft(sc, pos, l)?;
                        }
                    }
                    Rhs::Deref(y) => *y = Self::var(sc, pos, y)?,
                    Rhs::Call { lfts, args, .. } => {
                        for l in lfts {
                            *l = Self::lft(sc, pos, l)?;
                        }
                        for a in args {
                            *a = Self::var(sc, pos, a)?;
                        }
                    }
                    Rhs::Havoc => {}
                }
                let mut inner = sc.clone();
                match pat {
                    Pattern::One(x) => *x = self.bind_var(&mut inner, x),
                    Pattern::Tuple(xs) => {
                        let mut seen = HashSet::new();
                        for x in xs.iter() {
                            if !seen.insert(x.clone()) {
                                return Err(ParseError {
                                    pos,
                                    message: format!("`{x}` is bound twice in one pattern"),
                                    kind: ParseErrorKind::DuplicateBinder,
                                });
                            }
                        }
                        for x in xs {
                            *x = self.bind_var(&mut inner, x);
                        }
                    }
                }
                self.expr(&inner, body)?;
            }
            ExprKind::Assign { x, y, cont } => {
                *x = Self::var(sc, pos, x)?;
                *y = Self::var(sc, pos, y)?;
                self.expr(sc, cont)?;
            }
            ExprKind::IfZ { x, then, els } => {
                *x = Self::var(sc, pos, x)?;
                self.expr(sc, then)?;
                self.expr(sc, els)?;
            }
            ExprKind::Alias { x, y, ann, cont } => {
                *x = Self::var(sc, pos, x)?;
                *y = Self::var(sc, pos, y)?;
                if let Some(a) = ann {
                    a.x = Self::ty(sc, pos, &a.x)?;
                    if let Some(t) = &a.y {
                        a.y = Some(Self::ty(sc, pos, t)?);
                    }
                }
                self.expr(sc, cont)?;
            }
            ExprKind::NewLft { lft, body } => {
                let mut inner = sc.clone();
                *lft = self.bind_lft(&mut inner, lft);
                self.expr(&inner, body)?;
            }
            ExprKind::EndLft { lft, cont } => {
                *lft = Self::lft(sc, pos, lft)?;
                self.expr(sc, cont)?;
            }
        }
        Ok(())
    }
}

fn uniquify(p: &mut Program, avoid: HashSet<String>) -> Result<(), ParseError> {
    let mut r = Renamer {
        taken_vars: HashSet::new(),
        taken_lfts: HashSet::new(),
        avoid,
    };
    // main first so top-level names stay as written
    r.expr(&Scope::default(), &mut p.main)?;
    for f in &mut p.funs {
        let mut sc = Scope::default();
        let mut seen = HashSet::new();
        for l in &f.lfts {
            if !seen.insert(l.0.clone()) {
                return Err(ParseError {
                    pos: f.pos,
                    message: format!("lifetime `{l}` is declared twice in `{}`", f.name),
                    kind: ParseErrorKind::DuplicateBinder,
                });
            }
            // signature lifetimes are local to the function and are not renamed
            sc.lfts.insert(l.0.clone(), l.0.clone());
        }
        for (a, b) in &f.order {
            for l in [a, b] {
                Renamer::lft(&sc, f.pos, l)?;
            }
        }
        let mut seen = HashSet::new();
        for prm in &mut f.params {
            if !seen.insert(prm.name.clone()) {
                return Err(ParseError {
                    pos: f.pos,
                    message: format!("parameter `{}` is declared twice in `{}`", prm.name, f.name),
                    kind: ParseErrorKind::DuplicateBinder,
                });
            }
            prm.ty = Renamer::ty(&sc, f.pos, &prm.ty)?;
            prm.post = Renamer::ty(&sc, f.pos, &prm.post)?;
            prm.name = r.bind_var(&mut sc, &prm.name);
        }
        for t in &mut f.ret {
            *t = Renamer::ty(&sc, f.pos, t)?;
        }
        // newlft inside a body must not reuse a signature lifetime
        let added: Vec<String> = f
            .lfts
            .iter()
            .filter(|l| r.taken_lfts.insert(l.0.clone()))
            .map(|l| l.0.clone())
            .collect();
        r.expr(&sc, &mut f.body)?;
        for l in added {
            r.taken_lfts.remove(&l);
        }
    }
    Ok(())
}
