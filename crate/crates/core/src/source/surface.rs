//! Surface syntax: what the parser produces before desugaring.

use super::ast::{AliasAnn, Pos, Split};
use crate::lifetime::Lft;
use crate::OwnType;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl SOp {
    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            SOp::Eq | SOp::Ne | SOp::Lt | SOp::Le | SOp::Gt | SOp::Ge
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Val {
    Int(i64),
    Var(String),
    Deref(String),
    Havoc,
    Unit,
    Call {
        f: String,
        lfts: Vec<Lft>,
        args: Vec<(Pos, Val)>,
    },
    MkRef {
        inner: Box<Val>,
        lft: Option<Lft>,
    },
    Bin(SOp, Box<Val>, Box<Val>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cond {
    Val(Val),
    And(Box<Cond>, Box<Cond>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SPat {
    One(String),
    Wild,
    Tuple(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SRhs {
    Val(Val),
    Alias { y: String, split: Split },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SExpr {
    pub pos: Pos,
    pub kind: SKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SKind {
    Let {
        pat: SPat,
        rhs: SRhs,
        body: Box<SExpr>,
    },
    NewLft(Lft, Box<SExpr>),
    EndLft(Lft, Option<Box<SExpr>>),
    Alias {
        x: String,
        y: String,
        ann: Option<AliasAnn>,
        cont: Option<Box<SExpr>>,
    },
    Assign {
        x: String,
        val: Val,
        cont: Option<Box<SExpr>>,
    },
    If(Cond, Box<SExpr>, Box<SExpr>),
    Ifz(String, Box<SExpr>, Box<SExpr>),
    Assert(Cond, Option<Box<SExpr>>),
    Fail,
    /// A value in tail position, or a statement when followed by `;`.
    Value(Val, Option<Box<SExpr>>),
    Tuple(Vec<(Pos, Val)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SParam {
    pub pos: Pos,
    pub name: String,
    pub ty: Option<OwnType>,
    pub post: Option<OwnType>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SFun {
    pub pos: Pos,
    pub name: String,
    pub lfts: Vec<(Pos, Lft)>,
    pub order: Vec<(Lft, Lft)>,
    pub params: Vec<SParam>,
    pub ret: Option<Vec<OwnType>>,
    pub body: SExpr,
    pub annotated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SProgram {
    pub funs: Vec<SFun>,
    pub main: Option<SExpr>,
    pub end: Pos,
}
