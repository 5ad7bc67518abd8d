//! Core (desugared) syntax of the source language.

use std::fmt;

use crate::lifetime::Lft;
use crate::{Own, OwnType};

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Eq,
    Lt,
    Le,
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Eq => "=",
            Op::Lt => "<",
            Op::Le => "<=",
        }
    }

    /// Comparisons yield 0 for true and 1 for false, matching `ifz`.
    pub fn apply(self, a: i64, b: i64) -> i64 {
        let truth = |c: bool| if c { 0 } else { 1 };
        match self {
            Op::Add => a.wrapping_add(b),
            Op::Sub => a.wrapping_sub(b),
            Op::Mul => a.wrapping_mul(b),
            Op::Eq => truth(a == b),
            Op::Lt => truth(a < b),
            Op::Le => truth(a <= b),
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            Op::Eq | Op::Lt | Op::Le => 1,
            Op::Add | Op::Sub => 2,
            Op::Mul => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Arith {
    Int(i64),
    Var(String),
    Bin(Op, Box<Arith>, Box<Arith>),
}

impl Arith {
    pub fn vars(&self) -> Vec<&String> {
        match self {
            Arith::Int(_) => vec![],
            Arith::Var(x) => vec![x],
            Arith::Bin(_, a, b) => {
                let mut v = a.vars();
                v.extend(b.vars());
                v
            }
        }
    }

    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> Arith {
        match self {
            Arith::Int(n) => Arith::Int(*n),
            Arith::Var(x) => Arith::Var(f(x)),
            Arith::Bin(op, a, b) => Arith::Bin(*op, Box::new(a.rename(f)), Box::new(b.rename(f))),
        }
    }
}

/// How ownership moves from `y` to a new alias `x` in `let x = y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Split {
    /// Everything goes to `x`; `y` keeps a zero-ownership reference.
    Transfer,
    /// `y` lends to `x` for lifetime `lft`; the whole ownership unless an
    /// amount is given.
    Borrow { lft: Lft, amount: Option<Own> },
    /// `x` gets exactly this type.
    As(OwnType),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rhs {
    Arith(Arith),
    Alias {
        y: String,
        split: Split,
    },
    MkRef {
        y: String,
        lft: Option<Lft>,
    },
    Deref(String),
    Call {
        f: String,
        lfts: Vec<Lft>,
        args: Vec<String>,
    },
    Havoc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    One(String),
    Tuple(Vec<String>),
}

impl Pattern {
    pub fn names(&self) -> Vec<&String> {
        match self {
            Pattern::One(x) => vec![x],
            Pattern::Tuple(xs) => xs.iter().collect(),
        }
    }
}

/// Target types for the two sides of an `alias`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliasAnn {
    pub x: OwnType,
    pub y: Option<OwnType>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub id: NodeId,
    pub pos: Pos,
    pub kind: ExprKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Var(String),
    /// Multiple return values.
    Tuple(Vec<String>),
    Let {
        pat: Pattern,
        rhs: Rhs,
        body: Box<Expr>,
    },
    Assign {
        x: String,
        y: String,
        cont: Box<Expr>,
    },
    IfZ {
        x: String,
        then: Box<Expr>,
        els: Box<Expr>,
    },
    Alias {
        x: String,
        y: String,
        ann: Option<AliasAnn>,
        cont: Box<Expr>,
    },
    NewLft {
        lft: Lft,
        body: Box<Expr>,
    },
    EndLft {
        lft: Lft,
        cont: Box<Expr>,
    },
    Fail,
}

impl Expr {
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Var(_) | ExprKind::Tuple(_) | ExprKind::Fail => vec![],
            ExprKind::Let { body, .. } => vec![body],
            ExprKind::Assign { cont, .. }
            | ExprKind::Alias { cont, .. }
            | ExprKind::EndLft { cont, .. } => vec![cont],
            ExprKind::NewLft { body, .. } => vec![body],
            ExprKind::IfZ { then, els, .. } => vec![then, els],
        }
    }

    /// Pre-order walk.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Program variables bound by this node.
    pub fn binders(&self) -> Vec<&String> {
        match &self.kind {
            ExprKind::Let { pat, .. } => pat.names(),
            _ => vec![],
        }
    }

    pub fn count_nodes(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: OwnType,
    pub post: OwnType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunDef {
    pub name: String,
    pub lfts: Vec<Lft>,
    /// `(a, b)` means `a < b`.
    pub order: Vec<(Lft, Lft)>,
    pub params: Vec<Param>,
    /// One element for a plain return, several for a tuple return.
    pub ret: Vec<OwnType>,
    pub body: Expr,
    pub pos: Pos,
    /// False for the bare `f(x, y) { .. }` form, which parses but cannot
    /// be checked.
    pub annotated: bool,
}

impl FunDef {
    pub fn returns_tuple(&self) -> bool {
        self.ret.len() > 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub funs: Vec<FunDef>,
    pub main: Expr,
}

impl Program {
    pub fn fun(&self, name: &str) -> Option<&FunDef> {
        self.funs.iter().find(|f| f.name == name)
    }

    /// Every program-variable binder in the program, parameters included.
    pub fn all_binders(&self) -> Vec<String> {
        let mut out = Vec::new();
        for f in &self.funs {
            out.extend(f.params.iter().map(|p| p.name.clone()));
            f.body
                .walk(&mut |e| out.extend(e.binders().into_iter().cloned()));
        }
        self.main
            .walk(&mut |e| out.extend(e.binders().into_iter().cloned()));
        out
    }

    /// Whether no program variable is bound twice.
    pub fn binders_unique(&self) -> bool {
        let all = self.all_binders();
        let mut seen = std::collections::HashSet::new();
        all.iter().all(|x| seen.insert(x))
    }

    pub fn bodies(&self) -> impl Iterator<Item = &Expr> {
        self.funs
            .iter()
            .map(|f| &f.body)
            .chain(std::iter::once(&self.main))
    }
}
