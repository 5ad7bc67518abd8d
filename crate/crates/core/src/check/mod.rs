//! The typing judgment `Θ | L | Γ ⊢ e : τ ⊳ L' | Γ'`.
//!
//! Core expressions are let-chains whose every path ends in a variable, a
//! tuple of variables or `fail`, so the outgoing `L' | Γ'` of a function body
//! is fixed by its signature and checked at each return site. Every node's
//! incoming environment and the choices made there are kept as evidence for
//! the translator and the auditor.

mod error;

use std::collections::HashMap;
use std::fmt::Write;

use indexmap::IndexMap;
use num_traits::Zero;

pub use error::{TypeError, TypeErrorKind, Warning};

use crate::fraction::Fraction;
use crate::lifetime::{Lft, LftError, LifetimeEnv};
use crate::source::{Expr, ExprKind, FunDef, NodeId, Pattern, Pos, Program, Rhs, Split};
use crate::types::{add_types, is_sum, split_type, Type, WfError};
use crate::{Own, OwnType, TypeEnv};

/// Declared type of a function.
#[derive(Debug, Clone, PartialEq)]
pub struct FnSig {
    pub name: String,
    pub lfts: Vec<Lft>,
    pub order: LifetimeEnv,
    pub params: Vec<(String, OwnType)>,
    pub post: Vec<OwnType>,
    pub ret: Vec<OwnType>,
    pub pos: Pos,
}

impl FnSig {
    fn from_def(f: &FunDef) -> Result<FnSig, TypeError> {
        let order = LifetimeEnv::from_order(f.lfts.iter().cloned(), f.order.iter().cloned())
            .map_err(|e| TypeError::new(f.pos, lft_error(e)))?;
        Ok(FnSig {
            name: f.name.clone(),
            lfts: f.lfts.clone(),
            order,
            params: f
                .params
                .iter()
                .map(|p| (p.name.clone(), p.ty.clone()))
                .collect(),
            post: f.params.iter().map(|p| p.post.clone()).collect(),
            ret: f.ret.clone(),
            pos: f.pos,
        })
    }

    /// Indices of reference-typed parameters, in declaration order. The
    /// translated function returns these after its result.
    pub fn ref_params(&self) -> Vec<usize> {
        (0..self.params.len())
            .filter(|&i| self.params[i].1.is_ref())
            .collect()
    }
}

fn lft_error(e: LftError) -> TypeErrorKind {
    match e {
        LftError::Unknown(l) => TypeErrorKind::UnknownLifetime(l.to_string()),
        LftError::NotMinimal(l) => TypeErrorKind::LifetimeNotMinimal(l.to_string()),
        other => TypeErrorKind::LifetimeOrderViolation(other.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub lenv: LifetimeEnv,
    pub tenv: TypeEnv,
}

/// What the checker decided at a node, beyond the environments.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Plain,
    /// `let x = y`: `before = new + old`.
    LetAlias {
        before: OwnType,
        new: OwnType,
        old: OwnType,
    },
    MkRef {
        lft: Lft,
    },
    Deref {
        own: Own,
    },
    Alias {
        before_x: OwnType,
        before_y: OwnType,
        after_x: OwnType,
        after_y: OwnType,
    },
    EndLft {
        dropped: Vec<String>,
    },
    Call {
        inst: Vec<Lft>,
        pre: Vec<OwnType>,
        post: Vec<OwnType>,
        results: Vec<OwnType>,
    },
    /// T-Var: `Γ = Δ + Γ' + returned`.
    Return {
        residue: TypeEnv,
        dropped: Vec<String>,
        returned: Vec<OwnType>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeInfo {
    /// `None` for main.
    pub func: Option<String>,
    pub pos: Pos,
    pub before: Snapshot,
    /// Environment handed to the continuation, for nodes that have one.
    pub after: Option<Snapshot>,
    pub step: Step,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedProgram {
    pub program: Program,
    pub sigs: IndexMap<String, FnSig>,
    pub nodes: HashMap<NodeId, NodeInfo>,
    pub warnings: Vec<Warning>,
    /// Checked without well-formedness; only good for auditing.
    pub permissive: bool,
}

impl TypedProgram {
    pub fn node(&self, id: NodeId) -> &NodeInfo {
        &self.nodes[&id]
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CheckOptions {
    /// Skip well-formedness of environments. The resulting evidence is what
    /// the rules compute without their side conditions; it is meant for
    /// running the ownership audit on programs the checker rejects.
    pub permissive: bool,
}

pub fn check_program(p: &Program) -> Result<TypedProgram, TypeError> {
    check_program_with(p, CheckOptions::default())
}

pub fn check_program_with(p: &Program, opts: CheckOptions) -> Result<TypedProgram, TypeError> {
    let mut sigs = IndexMap::new();
    for f in &p.funs {
        if !f.annotated {
            return Err(TypeError::new(
                f.pos,
                TypeErrorKind::AnnotationRequired(format!(
                    "function `{}` needs a typed signature `fn {}<..>(x: T => T', ..) -> T`",
                    f.name, f.name
                )),
            ));
        }
        let sig = FnSig::from_def(f)?;
        if !opts.permissive {
            let all = sig
                .params
                .iter()
                .map(|(_, t)| t)
                .chain(&sig.post)
                .chain(&sig.ret);
            for t in all {
                crate::types::check_well_formed(&sig.order, t)
                    .map_err(|e| TypeError::new(f.pos, wf_error(e)))?;
            }
        }
        sigs.insert(f.name.clone(), sig);
    }
    let mut ck = Checker {
        sigs: &sigs,
        nodes: HashMap::new(),
        warnings: Vec::new(),
        opts,
        func: None,
        target: Target::main(),
    };
    for f in &p.funs {
        let sig = &sigs[&f.name];
        ck.func = Some(f.name.clone());
        ck.target = Target {
            lenv: sig.order.clone(),
            post: sig
                .params
                .iter()
                .map(|(x, _)| x.clone())
                .zip(sig.post.iter().cloned())
                .collect(),
            ret: Some(sig.ret.clone()),
        };
        let tenv: TypeEnv = sig.params.iter().cloned().collect();
        ck.expr(
            &f.body,
            State {
                lenv: sig.order.clone(),
                tenv,
            },
        )?;
    }
    ck.func = None;
    ck.target = Target::main();
    ck.expr(&p.main, State::default())?;
    let Checker {
        nodes, warnings, ..
    } = ck;
    Ok(TypedProgram {
        program: p.clone(),
        sigs,
        nodes,
        warnings,
        permissive: opts.permissive,
    })
}

fn wf_error(e: WfError) -> TypeErrorKind {
    match e {
        WfError::UnknownLifetime(l) => TypeErrorKind::UnknownLifetime(l.to_string()),
        WfError::LendOrder { .. } => TypeErrorKind::LifetimeOrderViolation(e.to_string()),
        WfError::OwnRange(_) | WfError::Overcommitted(_) => {
            TypeErrorKind::SplitUnderivable(e.to_string())
        }
    }
}

#[derive(Debug, Clone, Default)]
struct State {
    lenv: LifetimeEnv,
    tenv: TypeEnv,
}

impl State {
    fn snapshot(&self) -> Snapshot {
        Snapshot {
            lenv: self.lenv.clone(),
            tenv: self.tenv.clone(),
        }
    }
}

/// The fixed `L' | Γ'` and return types every path must reach.
struct Target {
    lenv: LifetimeEnv,
    post: TypeEnv,
    /// `None` for main, which returns a single integer.
    ret: Option<Vec<OwnType>>,
}

impl Target {
    fn main() -> Self {
        Target {
            lenv: LifetimeEnv::new(),
            post: TypeEnv::new(),
            ret: None,
        }
    }
}

struct Checker<'a> {
    sigs: &'a IndexMap<String, FnSig>,
    nodes: HashMap<NodeId, NodeInfo>,
    warnings: Vec<Warning>,
    opts: CheckOptions,
    func: Option<String>,
    target: Target,
}

type CResult<T> = Result<T, TypeError>;

fn kind_err(var: &str, ty: &OwnType, expected: &'static str) -> TypeErrorKind {
    TypeErrorKind::KindMismatch {
        var: var.to_string(),
        ty: ty.to_string(),
        expected,
    }
}

fn halve(t: &OwnType) -> OwnType {
    match t {
        Type::Int => Type::Int,
        Type::Ref { lft, own, lend } => Type::reference(
            lft.clone(),
            own.half(),
            lend.as_ref().map(|l| (l.lft.clone(), l.amount.half())),
        ),
    }
}

impl Checker<'_> {
    fn record(&mut self, e: &Expr, before: &State, after: Option<&State>, step: Step) {
        self.nodes.insert(
            e.id,
            NodeInfo {
                func: self.func.clone(),
                pos: e.pos,
                before: before.snapshot(),
                after: after.map(State::snapshot),
                step,
            },
        );
    }

    fn lookup<'s>(&self, st: &'s State, pos: Pos, x: &str) -> CResult<&'s OwnType> {
        st.tenv
            .get(x)
            .ok_or_else(|| TypeError::new(pos, TypeErrorKind::UnavailableVariable(x.to_string())))
    }

    fn int_var(&self, st: &State, pos: Pos, x: &str) -> CResult<()> {
        let t = self.lookup(st, pos, x)?;
        if t.is_ref() {
            return Err(TypeError::new(pos, kind_err(x, t, "an integer")));
        }
        Ok(())
    }

    fn ref_var(&self, st: &State, pos: Pos, x: &str) -> CResult<OwnType> {
        let t = self.lookup(st, pos, x)?;
        if !t.is_ref() {
            return Err(TypeError::new(pos, kind_err(x, t, "a reference")));
        }
        Ok(t.clone())
    }

    fn well_formed(&self, st: &State, pos: Pos) -> CResult<()> {
        if self.opts.permissive {
            return Ok(());
        }
        st.tenv.check_well_formed(&st.lenv).map_err(|(x, e)| {
            let kind = match e {
                WfError::LendOrder { .. } => TypeErrorKind::LifetimeOrderViolation(format!(
                    "`{x}` would get type {e}; lends must go to a strictly shorter lifetime"
                )),
                other => match wf_error(other) {
                    TypeErrorKind::SplitUnderivable(m) => {
                        TypeErrorKind::SplitUnderivable(format!("`{x}`: {m}"))
                    }
                    k => k,
                },
            };
            TypeError::new(pos, kind)
        })
    }

    fn expr(&mut self, e: &Expr, st: State) -> CResult<()> {
        let pos = e.pos;
        match &e.kind {
            ExprKind::Fail => {
                self.record(e, &st, None, Step::Plain);
                Ok(())
            }
            ExprKind::Var(x) => self.ret(e, &st, std::slice::from_ref(x)),
            ExprKind::Tuple(xs) => self.ret(e, &st, xs),
            ExprKind::Let { pat, rhs, body } => {
                let (next, step) = self.let_rhs(&st, pos, pat, rhs)?;
                self.well_formed(&next, pos)?;
                self.record(e, &st, Some(&next), step);
                self.expr(body, next)
            }
            ExprKind::Assign { x, y, cont } => {
                let t = self.ref_var(&st, pos, x)?;
                if t.own() != Own::from_ratio(1, 1) {
                    return Err(TypeError::new(
                        pos,
                        TypeErrorKind::OwnershipInsufficient {
                            var: x.clone(),
                            ty: t.to_string(),
                        },
                    ));
                }
                self.int_var(&st, pos, y)?;
                self.record(e, &st, Some(&st), Step::Plain);
                self.expr(cont, st)
            }
            ExprKind::IfZ { x, then, els } => {
                self.int_var(&st, pos, x)?;
                self.record(e, &st, None, Step::Plain);
                let a = self.expr(then, st.clone());
                let b = self.expr(els, st);
                match (a, b) {
                    (Ok(()), Ok(())) => Ok(()),
                    (Err(err), Ok(())) => Err(branch_mismatch(err, "then")),
                    (Ok(()), Err(err)) => Err(branch_mismatch(err, "else")),
                    (Err(err), Err(_)) => Err(err),
                }
            }
            ExprKind::Alias { x, y, ann, cont } => {
                let tx = self.ref_var(&st, pos, x)?;
                let ty = self.ref_var(&st, pos, y)?;
                let combined = add_types(&tx, &ty).map_err(|err| {
                    TypeError::new(
                        pos,
                        TypeErrorKind::SplitUnderivable(format!("alias({x} = {y}): {err}")),
                    )
                })?;
                if tx.lft() != ty.lft() {
                    self.warnings.push(Warning {
                        pos,
                        message: format!(
                            "alias({x} = {y}) relates lifetimes `{}` and `{}`; ownership moves by borrowing",
                            tx.lft().unwrap(),
                            ty.lft().unwrap()
                        ),
                    });
                }
                let rx = match ann {
                    Some(a) => a.x.clone(),
                    None if tx.lft() == ty.lft() => halve(&combined),
                    None => {
                        return Err(TypeError::new(
                            pos,
                            TypeErrorKind::AnnotationRequired(format!(
                                "alias({x} = {y}) between lifetimes `{}` and `{}` needs `as T, T`",
                                tx.lft().unwrap(),
                                ty.lft().unwrap()
                            )),
                        ))
                    }
                };
                let underivable = |detail: String| {
                    TypeError::new(
                        pos,
                        TypeErrorKind::SplitUnderivable(format!(
                            "alias({x} = {y}): combined type `{combined}` {detail}"
                        )),
                    )
                };
                let ry = match ann.as_ref().and_then(|a| a.y.clone()) {
                    Some(ry) => {
                        if !is_sum(&combined, &rx, &ry) {
                            return Err(underivable(format!("is not `{rx}` + `{ry}`")));
                        }
                        ry
                    }
                    None => split_type(&combined, &rx)
                        .map_err(|_| underivable(format!("has no part `{rx}`")))?,
                };
                let mut next = st.clone();
                next.tenv.insert(x.clone(), rx.clone());
                next.tenv.insert(y.clone(), ry.clone());
                self.well_formed(&next, pos)?;
                self.record(
                    e,
                    &st,
                    Some(&next),
                    Step::Alias {
                        before_x: tx,
                        before_y: ty,
                        after_x: rx,
                        after_y: ry,
                    },
                );
                self.expr(cont, next)
            }
            ExprKind::NewLft { lft, body } => {
                let mut next = st.clone();
                next.lenv
                    .add_min(lft.clone())
                    .map_err(|err| TypeError::new(pos, lft_error(err)))?;
                self.record(e, &st, Some(&next), Step::Plain);
                self.expr(body, next)
            }
            ExprKind::EndLft { lft, cont } => {
                let lenv = st
                    .lenv
                    .end(lft)
                    .map_err(|err| TypeError::new(pos, lft_error(err)))?;
                let dropped: Vec<String> = st
                    .tenv
                    .iter()
                    .filter(|(_, t)| t.lft() == Some(lft))
                    .map(|(x, _)| x.clone())
                    .collect();
                let next = State {
                    lenv,
                    tenv: st.tenv.lift(lft),
                };
                self.well_formed(&next, pos)?;
                self.record(e, &st, Some(&next), Step::EndLft { dropped });
                self.expr(cont, next)
            }
        }
    }

    fn let_rhs(
        &mut self,
        st: &State,
        pos: Pos,
        pat: &Pattern,
        rhs: &Rhs,
    ) -> CResult<(State, Step)> {
        let mut next = st.clone();
        let single = |pat: &Pattern| -> CResult<String> {
            match pat {
                Pattern::One(x) => Ok(x.clone()),
                Pattern::Tuple(_) => Err(TypeError::new(
                    pos,
                    TypeErrorKind::ArityMismatch("a tuple pattern needs a call".into()),
                )),
            }
        };
        let step = match rhs {
            Rhs::Arith(a) => {
                for v in a.vars() {
                    self.int_var(st, pos, v)?;
                }
                next.tenv.insert(single(pat)?, Type::Int);
                Step::Plain
            }
            Rhs::Havoc => {
                next.tenv.insert(single(pat)?, Type::Int);
                Step::Plain
            }
            Rhs::Deref(y) => {
                let t = self.ref_var(st, pos, y)?;
                next.tenv.insert(single(pat)?, Type::Int);
                Step::Deref { own: t.own() }
            }
            Rhs::MkRef { y, lft } => {
                self.int_var(st, pos, y)?;
                let lft = match lft {
                    Some(l) if st.lenv.contains(l) => l.clone(),
                    Some(l) => {
                        return Err(TypeError::new(
                            pos,
                            TypeErrorKind::UnknownLifetime(l.to_string()),
                        ))
                    }
                    None => self.default_lft(st, pos, "mkref")?,
                };
                next.tenv.insert(single(pat)?, Type::full(lft.clone()));
                Step::MkRef { lft }
            }
            Rhs::Alias { y, split } => {
                let x = single(pat)?;
                let before = self.lookup(st, pos, y)?.clone();
                let underivable = |part: &OwnType| {
                    TypeError::new(
                        pos,
                        TypeErrorKind::SplitUnderivable(format!(
                            "`{y}: {before}` cannot give `{part}` to `{x}`"
                        )),
                    )
                };
                let (new, old) = match (split, &before) {
                    (Split::Transfer, t) => (t.clone(), t.nullify()),
                    (_, Type::Int) => {
                        return Err(TypeError::new(pos, kind_err(y, &before, "a reference")))
                    }
                    (Split::Borrow { lft, amount }, t) => {
                        if !st.lenv.contains(lft) {
                            return Err(TypeError::new(
                                pos,
                                TypeErrorKind::UnknownLifetime(lft.to_string()),
                            ));
                        }
                        let s = amount.clone().unwrap_or_else(|| t.own());
                        let new = Type::reference(lft.clone(), s, None);
                        let old = split_type(t, &new).map_err(|_| underivable(&new))?;
                        (new, old)
                    }
                    (Split::As(new), t) => {
                        let old = split_type(t, new).map_err(|_| underivable(new))?;
                        (new.clone(), old)
                    }
                };
                next.tenv.insert(y.clone(), old.clone());
                next.tenv.insert(x, new.clone());
                Step::LetAlias { before, new, old }
            }
            Rhs::Call { f, lfts, args } => return self.call(st, pos, pat, f, lfts, args),
        };
        Ok((next, step))
    }

    fn default_lft(&self, st: &State, pos: Pos, what: &str) -> CResult<Lft> {
        match st.lenv.minimal().as_slice() {
            [l] => Ok(l.clone()),
            [] => Err(TypeError::new(
                pos,
                TypeErrorKind::AnnotationRequired(format!(
                    "{what} needs a live lifetime; open one with `newlft`"
                )),
            )),
            many => Err(TypeError::new(
                pos,
                TypeErrorKind::AnnotationRequired(format!(
                    "{what} has several candidate lifetimes ({}); write one explicitly",
                    many.iter()
                        .map(|l| l.0.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                )),
            )),
        }
    }

    fn call(
        &mut self,
        st: &State,
        pos: Pos,
        pat: &Pattern,
        f: &str,
        lfts: &[Lft],
        args: &[String],
    ) -> CResult<(State, Step)> {
        let sig = self
            .sigs
            .get(f)
            .ok_or_else(|| TypeError::new(pos, TypeErrorKind::UnknownFunction(f.to_string())))?;
        if args.len() != sig.params.len() {
            return Err(TypeError::new(
                pos,
                TypeErrorKind::ArityMismatch(format!(
                    "`{f}` takes {} arguments, {} given",
                    sig.params.len(),
                    args.len()
                )),
            ));
        }
        for (i, a) in args.iter().enumerate() {
            if args[..i].contains(a) {
                return Err(TypeError::new(
                    pos,
                    TypeErrorKind::DuplicateArgument(a.clone()),
                ));
            }
        }
        let actual: Vec<OwnType> = args
            .iter()
            .map(|a| self.lookup(st, pos, a).cloned())
            .collect::<CResult<_>>()?;
        let inst = if !lfts.is_empty() {
            if lfts.len() != sig.lfts.len() {
                return Err(TypeError::new(
                    pos,
                    TypeErrorKind::ArityMismatch(format!(
                        "`{f}` takes {} lifetime arguments, {} given",
                        sig.lfts.len(),
                        lfts.len()
                    )),
                ));
            }
            lfts.to_vec()
        } else {
            self.infer_lfts(st, pos, sig, args, &actual)?
        };
        for l in &inst {
            if !st.lenv.contains(l) {
                return Err(TypeError::new(
                    pos,
                    TypeErrorKind::UnknownLifetime(l.to_string()),
                ));
            }
        }
        let map: HashMap<Lft, Lft> = sig.lfts.iter().cloned().zip(inst.iter().cloned()).collect();
        let sub = |l: &Lft| map.get(l).cloned().unwrap_or_else(|| l.clone());
        for (a, b) in sig.order.pairs() {
            if !st.lenv.lt(&sub(a), &sub(b)) {
                return Err(TypeError::new(
                    pos,
                    TypeErrorKind::CallOrderNotEntailed {
                        f: f.to_string(),
                        lhs: sub(a).to_string(),
                        rhs: sub(b).to_string(),
                    },
                ));
            }
        }
        let pre: Vec<OwnType> = sig.params.iter().map(|(_, t)| t.subst(&sub)).collect();
        let post: Vec<OwnType> = sig.post.iter().map(|t| t.subst(&sub)).collect();
        let results: Vec<OwnType> = sig.ret.iter().map(|t| t.subst(&sub)).collect();
        for ((a, want), have) in args.iter().zip(&pre).zip(&actual) {
            if want != have {
                return Err(TypeError::new(
                    pos,
                    TypeErrorKind::ArgumentMismatch {
                        f: f.to_string(),
                        var: a.clone(),
                        actual: have.to_string(),
                        expected: want.to_string(),
                    },
                ));
            }
        }
        let names = pat.names();
        if names.len() != results.len() || (results.len() > 1) != matches!(pat, Pattern::Tuple(_)) {
            return Err(TypeError::new(
                pos,
                TypeErrorKind::ArityMismatch(format!(
                    "`{f}` returns {} value(s), the pattern binds {}",
                    results.len(),
                    names.len()
                )),
            ));
        }
        let mut next = st.clone();
        for (a, t) in args.iter().zip(&post) {
            next.tenv.insert(a.clone(), t.clone());
        }
        for (x, t) in names.into_iter().zip(&results) {
            next.tenv.insert(x.clone(), t.clone());
        }
        Ok((
            next,
            Step::Call {
                inst,
                pre,
                post,
                results,
            },
        ))
    }

    /// Matches parameter types against argument types; lifetimes that occur
    /// in no parameter type default to the unique minimal live lifetime.
    fn infer_lfts(
        &self,
        st: &State,
        pos: Pos,
        sig: &FnSig,
        args: &[String],
        actual: &[OwnType],
    ) -> CResult<Vec<Lft>> {
        let mut map: HashMap<&Lft, Lft> = HashMap::new();
        let mismatch = |i: usize| {
            TypeError::new(
                pos,
                TypeErrorKind::ArgumentMismatch {
                    f: sig.name.clone(),
                    var: args[i].clone(),
                    actual: actual[i].to_string(),
                    expected: sig.params[i].1.to_string(),
                },
            )
        };
        for (i, ((_, want), have)) in sig.params.iter().zip(actual).enumerate() {
            let pairs = [(want.lft(), have.lft()), (want.lend_lft(), have.lend_lft())];
            for (w, h) in pairs {
                match (w, h) {
                    (Some(w), Some(h)) => match map.get(w) {
                        Some(prev) if prev != h => return Err(mismatch(i)),
                        _ => {
                            map.insert(w, h.clone());
                        }
                    },
                    (None, None) => {}
                    _ => return Err(mismatch(i)),
                }
            }
        }
        let mut out = Vec::new();
        for l in &sig.lfts {
            match map.get(l) {
                Some(h) => out.push(h.clone()),
                None => out.push(self.default_lft(
                    st,
                    pos,
                    &format!("lifetime parameter `{l}` of `{}`", sig.name),
                )?),
            }
        }
        Ok(out)
    }

    fn ret(&mut self, e: &Expr, st: &State, names: &[String]) -> CResult<()> {
        let pos = e.pos;
        let live: Vec<&Lft> = st
            .lenv
            .lifetimes()
            .filter(|l| !self.target.lenv.contains(l))
            .collect();
        if let Some(l) = live.first() {
            return Err(TypeError::new(
                pos,
                TypeErrorKind::ScopeEscape(format!(
                    "lifetime `{l}` is still live when the {} returns; end it with `endlft {l}`",
                    self.what()
                )),
            ));
        }
        if let Some(l) = self.target.lenv.lifetimes().find(|l| !st.lenv.contains(l)) {
            return Err(TypeError::new(
                pos,
                TypeErrorKind::ScopeEscape(format!(
                    "signature lifetime `{l}` ended inside the body"
                )),
            ));
        }
        let mut required = self.target.post.clone();
        let mut returned = Vec::new();
        match &self.target.ret {
            None => {
                let [x] = names else {
                    return Err(TypeError::new(
                        pos,
                        TypeErrorKind::PostEnvMismatch("main must return one integer".into()),
                    ));
                };
                let t = self.lookup(st, pos, x)?;
                if t.is_ref() {
                    return Err(TypeError::new(
                        pos,
                        kind_err(x, t, "an integer result of main"),
                    ));
                }
                returned.push(Type::Int);
            }
            Some(ret) => {
                if ret.len() != names.len() {
                    return Err(TypeError::new(
                        pos,
                        TypeErrorKind::ArityMismatch(format!(
                            "the function returns {} value(s), {} given",
                            ret.len(),
                            names.len()
                        )),
                    ));
                }
                for (x, t) in names.iter().zip(ret) {
                    self.lookup(st, pos, x)?;
                    let sum = match required.get(x) {
                        Some(prev) => add_types(prev, t).map_err(|err| {
                            TypeError::new(
                                pos,
                                TypeErrorKind::PostEnvMismatch(format!(
                                    "`{x}` cannot be returned as `{t}` and also keep its declared type: {err}"
                                )),
                            )
                        })?,
                        None => t.clone(),
                    };
                    required.insert(x.clone(), sum);
                    returned.push(t.clone());
                }
            }
        }
        let mut residue = TypeEnv::new();
        for (x, need) in required.iter() {
            let have = self.lookup(st, pos, x).map_err(|_| {
                TypeError::new(
                    pos,
                    TypeErrorKind::PostEnvMismatch(format!(
                        "`{x}` must be `{need}` at return but is gone"
                    )),
                )
            })?;
            let rest = split_type(have, need).map_err(|_| {
                let escape = need
                    .lft()
                    .into_iter()
                    .chain(need.lend_lft())
                    .chain(have.lft())
                    .chain(have.lend_lft())
                    .find(|l| !self.target.lenv.contains(l));
                let kind = match escape {
                    Some(l) => TypeErrorKind::ScopeEscape(format!(
                        "`{x}: {have}` mentions lifetime `{l}`, which does not outlive the {}",
                        self.what()
                    )),
                    None => TypeErrorKind::PostEnvMismatch(format!(
                        "`{x}` has `{have}` at return, which does not provide `{need}`"
                    )),
                };
                TypeError::new(pos, kind)
            })?;
            if !rest.is_void() {
                residue.insert(x.clone(), rest);
            }
        }
        let mut dropped = Vec::new();
        for (x, t) in st.tenv.iter() {
            if required.contains(x) {
                continue;
            }
            if t.is_ref() {
                dropped.push(x.clone());
            }
            if !t.is_void() {
                residue.insert(x.clone(), t.clone());
            }
        }
        self.record(
            e,
            st,
            None,
            Step::Return {
                residue,
                dropped,
                returned,
            },
        );
        Ok(())
    }

    fn what(&self) -> String {
        match &self.func {
            Some(f) => format!("function `{f}`"),
            None => "program".into(),
        }
    }
}

fn branch_mismatch(err: TypeError, branch: &'static str) -> TypeError {
    match err.kind {
        TypeErrorKind::PostEnvMismatch(detail) => TypeError {
            pos: err.pos,
            kind: TypeErrorKind::BranchEnvMismatch { branch, detail },
        },
        _ => err,
    }
}

/// Environment comments: for each source line that ends in a
/// node with a continuation, the environment after that line. Compiler
/// temporaries (names starting with `_`) are hidden.
pub fn dump_env(tp: &TypedProgram) -> Vec<(u32, String)> {
    let mut last: std::collections::BTreeMap<(Option<String>, u32), NodeId> = Default::default();
    for body in tp.program.bodies() {
        body.walk(&mut |e| {
            let info = &tp.nodes.get(&e.id);
            if let Some(info) = info {
                if info.after.is_some() {
                    let key = (info.func.clone(), e.pos.line);
                    let slot = last.entry(key).or_insert(e.id);
                    if e.id > *slot {
                        *slot = e.id;
                    }
                }
            }
        });
    }
    let mut out: Vec<(u32, String)> = Vec::new();
    for ((_, line), id) in last {
        let info = &tp.nodes[&id];
        let after = info.after.as_ref().unwrap();
        let mut s = String::new();
        if let Step::EndLft { dropped } = &info.step {
            let shown: Vec<&str> = dropped
                .iter()
                .filter(|x| !x.starts_with('_'))
                .map(String::as_str)
                .collect();
            if !shown.is_empty() {
                let _ = write!(s, "dispose {}; ", shown.join(", "));
            }
        }
        let parts: Vec<String> = after
            .tenv
            .iter()
            .filter(|(x, _)| !x.starts_with('_'))
            .map(|(x, t)| format!("{x}: {t}"))
            .collect();
        s.push_str(&parts.join(", "));
        out.push((line, s));
    }
    out.sort_by_key(|(l, _)| *l);
    out
}

/// Whether every ownership in the evidence is exact and in range; used by
/// tests as a cheap sanity pass.
pub fn evidence_in_range(tp: &TypedProgram) -> bool {
    tp.nodes.values().all(|n| {
        n.before
            .tenv
            .iter()
            .all(|(_, t)| t.own().in_unit_interval() && !t.lent().is_zero() == t.lend().is_some())
    })
}
