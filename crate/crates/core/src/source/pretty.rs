//! Printing core programs back to concrete syntax.

use std::collections::HashMap;
use std::fmt::Write;

use super::ast::*;
use crate::fraction::Fraction;
use crate::lifetime::Lft;
use crate::OwnType;

fn arith(a: &Arith, top: bool) -> String {
    match a {
        Arith::Int(n) => n.to_string(),
        Arith::Var(x) => x.clone(),
        Arith::Bin(op, l, r) => {
            let s = format!("{} {} {}", arith(l, false), op.symbol(), arith(r, false));
            if top {
                s
            } else {
                format!("({s})")
            }
        }
    }
}

pub fn arith_text(a: &Arith) -> String {
    arith(a, true)
}

fn rhs(r: &Rhs) -> String {
    match r {
        // a bare variable would parse as an alias
        Rhs::Arith(Arith::Var(x)) => format!("0 + {x}"),
        Rhs::Arith(a) => arith(a, true),
        Rhs::Alias { y, split } => match split {
            Split::Transfer => y.clone(),
            Split::Borrow { lft, amount: None } => format!("{y} borrow {lft}"),
            Split::Borrow {
                lft,
                amount: Some(s),
            } => format!("{y} borrow {lft}: {}", s.pretty()),
            Split::As(t) => format!("{y} as {t}"),
        },
        Rhs::MkRef { y, lft: None } => format!("mkref {y}"),
        Rhs::MkRef { y, lft: Some(l) } => format!("mkref<{l}> {y}"),
        Rhs::Deref(y) => format!("*{y}"),
        Rhs::Call { f, lfts, args } => {
            let l = if lfts.is_empty() {
                String::new()
            } else {
                let names: Vec<_> = lfts.iter().map(|l| l.0.as_str()).collect();
                format!("<{}>", names.join(", "))
            };
            format!("{f}{l}({})", args.join(", "))
        }
        Rhs::Havoc => "_".into(),
    }
}

fn pattern(p: &Pattern) -> String {
    match p {
        Pattern::One(x) => x.clone(),
        Pattern::Tuple(xs) => format!("({})", xs.join(", ")),
    }
}

fn indent(out: &mut String, n: usize) {
    for _ in 0..n {
        out.push_str("  ");
    }
}

fn expr(out: &mut String, e: &Expr, depth: usize) {
    indent(out, depth);
    match &e.kind {
        ExprKind::Var(x) => out.push_str(x),
        ExprKind::Tuple(xs) => {
            let _ = write!(out, "({})", xs.join(", "));
        }
        ExprKind::Fail => out.push_str("fail"),
        ExprKind::Let { pat, rhs: r, body } => {
            let _ = writeln!(out, "let {} = {} in", pattern(pat), rhs(r));
            expr(out, body, depth);
        }
        ExprKind::Assign { x, y, cont } => {
            let _ = writeln!(out, "{x} := {y};");
            expr(out, cont, depth);
        }
        ExprKind::IfZ { x, then, els } => {
            let _ = writeln!(out, "ifz {x} then (");
            expr(out, then, depth + 1);
            out.push('\n');
            indent(out, depth);
            out.push_str(") else (\n");
            expr(out, els, depth + 1);
            out.push('\n');
            indent(out, depth);
            out.push(')');
        }
        ExprKind::Alias { x, y, ann, cont } => {
            let _ = write!(out, "alias({x} = {y})");
            if let Some(a) = ann {
                let _ = write!(out, " as {}", a.x);
                if let Some(t) = &a.y {
                    let _ = write!(out, ", {t}");
                }
            }
            out.push_str(";\n");
            expr(out, cont, depth);
        }
        ExprKind::NewLft { lft, body } => {
            let _ = writeln!(out, "newlft {lft} in");
            expr(out, body, depth);
        }
        ExprKind::EndLft { lft, cont } => {
            let _ = writeln!(out, "endlft {lft};");
            expr(out, cont, depth);
        }
    }
}

pub fn pretty_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr(&mut out, e, 0);
    out
}

fn signature(f: &FunDef) -> String {
    let mut s = String::new();
    if !f.annotated {
        let names: Vec<_> = f.params.iter().map(|p| p.name.as_str()).collect();
        let _ = write!(s, "{}({})", f.name, names.join(", "));
        return s;
    }
    let _ = write!(s, "fn {}", f.name);
    if !f.lfts.is_empty() {
        let names: Vec<_> = f.lfts.iter().map(|l| l.0.as_str()).collect();
        let _ = write!(s, "<{}", names.join(", "));
        if !f.order.is_empty() {
            let pairs: Vec<_> = f.order.iter().map(|(a, b)| format!("{a} < {b}")).collect();
            let _ = write!(s, "; {}", pairs.join(", "));
        }
        s.push('>');
    }
    let params: Vec<String> = f
        .params
        .iter()
        .map(|p| {
            if p.post == p.ty {
                format!("{}: {}", p.name, p.ty)
            } else {
                format!("{}: {} => {}", p.name, p.ty, p.post)
            }
        })
        .collect();
    let _ = write!(s, "({})", params.join(", "));
    match f.ret.as_slice() {
        [crate::types::Type::Int] => {}
        [t] => {
            let _ = write!(s, " -> {t}");
        }
        ts => {
            let parts: Vec<_> = ts.iter().map(|t| t.to_string()).collect();
            let _ = write!(s, " -> ({})", parts.join(", "));
        }
    }
    s
}

pub fn pretty(p: &Program) -> String {
    let mut out = String::new();
    for f in &p.funs {
        let _ = writeln!(out, "{} {{", signature(f));
        expr(&mut out, &f.body, 1);
        out.push_str("\n}\n\n");
    }
    expr(&mut out, &p.main, 0);
    out.push('\n');
    out
}

/// Renames every binder to a positional name and clears ids and positions,
/// so alpha-equivalent programs compare equal.
pub fn canonical(p: &Program) -> Program {
    let mut c = Canon::default();
    let mut out = p.clone();
    for f in &mut out.funs {
        let mut lfts = HashMap::new();
        for (i, l) in f.lfts.iter_mut().enumerate() {
            let n = Lft(format!("'p{i}"));
            lfts.insert(l.clone(), n.clone());
            *l = n;
        }
        let m = |l: &Lft| lfts.get(l).cloned().unwrap_or_else(|| l.clone());
        for (a, b) in &mut f.order {
            *a = m(a);
            *b = m(b);
        }
        for prm in &mut f.params {
            prm.ty = prm.ty.subst(&m);
            prm.post = prm.post.subst(&m);
        }
        for t in &mut f.ret {
            *t = t.subst(&m);
        }
        c.lfts = lfts;
        for prm in &mut f.params {
            prm.name = c.bind(&prm.name);
        }
        f.pos = Pos::default();
        c.expr(&mut f.body);
    }
    c.lfts.clear();
    c.expr(&mut out.main);
    out
}

#[derive(Default)]
struct Canon {
    vars: HashMap<String, String>,
    lfts: HashMap<Lft, Lft>,
    nv: usize,
    nl: usize,
}

impl Canon {
    fn bind(&mut self, x: &str) -> String {
        let n = format!("'v{}", self.nv);
        self.nv += 1;
        self.vars.insert(x.to_string(), n.clone());
        n
    }

    fn var(&self, x: &str) -> String {
        self.vars.get(x).cloned().unwrap_or_else(|| x.to_string())
    }

    fn lft(&self, l: &Lft) -> Lft {
        self.lfts.get(l).cloned().unwrap_or_else(|| l.clone())
    }

    fn ty(&self, t: &OwnType) -> OwnType {
        t.subst(&|l| self.lft(l))
    }

    fn expr(&mut self, e: &mut Expr) {
        e.id = 0;
        e.pos = Pos::default();
        match &mut e.kind {
            ExprKind::Var(x) => *x = self.var(x),
            ExprKind::Tuple(xs) => {
                for x in xs {
                    *x = self.var(x);
                }
            }
            ExprKind::Fail => {}
            ExprKind::Let { pat, rhs, body } => {
                match rhs {
                    Rhs::Arith(a) => *a = a.rename(&|x| self.var(x)),
                    Rhs::Alias { y, split } => {
                        *y = self.var(y);
                        match split {
                            Split::Transfer => {}
                            Split::Borrow { lft, .. } => *lft = self.lft(lft),
                            Split::As(t) => *t = self.ty(t),
                        }
                    }
                    Rhs::MkRef { y, lft } => {
                        *y = self.var(y);
                        if let Some(l) = lft {
                            *l = self.lft(l);
                        }
                    }
                    Rhs::Deref(y) => *y = self.var(y),
                    Rhs::Call { lfts, args, .. } => {
                        for l in lfts {
                            *l = self.lft(l);
                        }
                        for a in args {
                            *a = self.var(a);
                        }
                    }
                    Rhs::Havoc => {}
                }
                match pat {
                    Pattern::One(x) => *x = self.bind(x),
                    Pattern::Tuple(xs) => {
                        for x in xs {
                            *x = self.bind(x);
                        }
                    }
                }
                self.expr(body);
            }
            ExprKind::Assign { x, y, cont } => {
                *x = self.var(x);
                *y = self.var(y);
                self.expr(cont);
            }
            ExprKind::IfZ { x, then, els } => {
                *x = self.var(x);
                self.expr(then);
                self.expr(els);
            }
            ExprKind::Alias { x, y, ann, cont } => {
                *x = self.var(x);
                *y = self.var(y);
                if let Some(a) = ann {
                    a.x = self.ty(&a.x);
                    a.y = a.y.as_ref().map(|t| self.ty(t));
                }
                self.expr(cont);
            }
            ExprKind::NewLft { lft, body } => {
                let n = Lft(format!("'l{}", self.nl));
                self.nl += 1;
                self.lfts.insert(lft.clone(), n.clone());
                *lft = n;
                self.expr(body);
            }
            ExprKind::EndLft { lft, cont } => {
                *lft = self.lft(lft);
                self.expr(cont);
            }
        }
    }
}

pub fn alpha_equivalent(a: &Program, b: &Program) -> bool {
    canonical(a) == canonical(b)
}
