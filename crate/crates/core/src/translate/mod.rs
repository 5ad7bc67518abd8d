//! Type-directed translation into the target language.
//!
//! References become pairs `(current, prophecy)`. Every function returns its
//! result followed by its reference-typed parameters, in declaration order.

use std::collections::HashSet;

use thiserror::Error;

use crate::check::{FnSig, Step, TypedProgram};
use crate::fraction::Fraction;
use crate::source::{self, Expr, ExprKind, NodeId, Pattern, Rhs};
use crate::target::{Arith, Atom, Origin, Pat, TFun, TRhs, Tail, TargetProgram, Term};
use crate::OwnType;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("no typing evidence for node {0}")]
    MissingEvidence(NodeId),
    #[error("internal translation error at node {node}: {msg}")]
    Internal { node: NodeId, msg: String },
}

#[derive(Debug, Clone, Copy)]
pub struct TranslateOptions {
    /// Fold `let x = (_, _)` into the conversion that overwrites it.
    pub peephole: bool,
    /// Emit `Sync` markers for the oracle run.
    pub sync: bool,
}

impl Default for TranslateOptions {
    fn default() -> Self {
        TranslateOptions {
            peephole: true,
            sync: true,
        }
    }
}

type TResult<T> = Result<T, TranslateError>;

/// A pair rebinding `let x = (a, b)`.
type Bind = (String, Arith, Arith);

fn fst(x: &str) -> Arith {
    Arith::Atom(Atom::Fst(x.to_string()))
}

fn snd(x: &str) -> Arith {
    Arith::Atom(Atom::Snd(x.to_string()))
}

fn own_pos(t: &OwnType) -> bool {
    t.own().is_positive()
}

/// `Conv^{τy→ρy}_{τx→ρx}(x, y)`: the pair rebindings that move values and
/// prophecies when ownership moves between two aliases.
pub fn conv_alias(
    tx: (&OwnType, &OwnType),
    ty: (&OwnType, &OwnType),
    x: &str,
    y: &str,
) -> Option<Vec<Bind>> {
    conv(tx, ty, x, y, false)
}

fn conv(
    (tx, rx): (&OwnType, &OwnType),
    (ty, ry): (&OwnType, &OwnType),
    x: &str,
    y: &str,
    swapped: bool,
) -> Option<Vec<Bind>> {
    if !own_pos(tx) && !own_pos(rx) {
        Some(vec![])
    } else if own_pos(ty) && own_pos(rx) && own_pos(ry) {
        Some(vec![(x.to_string(), fst(y), snd(x))])
    } else if own_pos(tx) && !own_pos(rx) {
        Some(vec![
            (y.to_string(), fst(x), snd(y)),
            (x.to_string(), snd(y), snd(x)),
        ])
    } else if !swapped {
        conv((ty, ry), (tx, rx), y, x, true)
    } else {
        None
    }
}

fn wrap(binds: Vec<Bind>, body: Term) -> Term {
    binds
        .into_iter()
        .rev()
        .fold(body, |t, (x, a, b)| Term::let_(x, TRhs::Pair(a, b), t))
}

fn subst_fresh(a: &Arith, x: &str) -> Arith {
    match a {
        Arith::Atom(Atom::Fst(v)) if v == x => Arith::Atom(Atom::Nondet(Origin::Fresh)),
        Arith::Atom(Atom::Snd(v)) if v == x => Arith::Atom(Atom::Nondet(Origin::Prophecy)),
        Arith::Atom(_) => a.clone(),
        Arith::Bin(op, l, r) => Arith::Bin(
            *op,
            Box::new(subst_fresh(l, x)),
            Box::new(subst_fresh(r, x)),
        ),
    }
}

struct Ctx<'t> {
    tp: &'t TypedProgram,
    opts: TranslateOptions,
    taken: HashSet<String>,
}

impl<'t> Ctx<'t> {
    fn fresh(&mut self, base: &str) -> String {
        let mut name = format!("{base}'");
        let mut k = 1;
        while self.taken.contains(&name) {
            name = format!("{base}'{k}");
            k += 1;
        }
        self.taken.insert(name.clone());
        name
    }

    fn info(&self, e: &Expr) -> TResult<&'t crate::check::NodeInfo> {
        self.tp
            .nodes
            .get(&e.id)
            .ok_or(TranslateError::MissingEvidence(e.id))
    }

    fn internal(e: &Expr, msg: impl Into<String>) -> TranslateError {
        TranslateError::Internal {
            node: e.id,
            msg: msg.into(),
        }
    }

    fn conv(
        &self,
        e: &Expr,
        tx: (&OwnType, &OwnType),
        ty: (&OwnType, &OwnType),
        x: &str,
        y: &str,
    ) -> TResult<Vec<Bind>> {
        conv_alias(tx, ty, x, y).ok_or_else(|| {
            Self::internal(
                e,
                format!(
                    "no conversion for {x}: {} -> {}, {y}: {} -> {}",
                    tx.0, tx.1, ty.0, ty.1
                ),
            )
        })
    }

    /// `let x = (_, _) in Conv(...)`, folding the fresh pair into the first
    /// rebinding of `x` when enabled.
    fn fresh_pair(&self, x: &str, mut binds: Vec<Bind>, body: Term) -> Term {
        if self.opts.peephole && binds.first().map(|b| b.0 == x).unwrap_or(false) {
            let (_, a, b) = binds.remove(0);
            let first = (x.to_string(), subst_fresh(&a, x), subst_fresh(&b, x));
            binds.insert(0, first);
            return wrap(binds, body);
        }
        Term::let_(
            x,
            TRhs::Pair(
                Arith::Atom(Atom::Nondet(Origin::Fresh)),
                Arith::Atom(Atom::Nondet(Origin::Prophecy)),
            ),
            wrap(binds, body),
        )
    }

    fn sig(&self, f: &str, e: &Expr) -> TResult<&'t FnSig> {
        self.tp
            .sigs
            .get(f)
            .ok_or_else(|| Self::internal(e, format!("no signature for `{f}`")))
    }

    fn expr(&mut self, e: &Expr, func: Option<&'t FnSig>) -> TResult<Term> {
        let info = self.info(e)?;
        let gamma = &info.before.tenv;
        let ty = |x: &str| {
            gamma
                .get(x)
                .cloned()
                .ok_or_else(|| Self::internal(e, format!("`{x}` is not typed here")))
        };
        let t = match &e.kind {
            ExprKind::Fail => Term::Fail,
            ExprKind::Var(x) => self.ret(e, func, std::slice::from_ref(x))?,
            ExprKind::Tuple(xs) => self.ret(e, func, xs)?,
            ExprKind::Let { pat, rhs, body } => {
                let x = match pat {
                    Pattern::One(x) => x.clone(),
                    Pattern::Tuple(_) => String::new(),
                };
                match rhs {
                    Rhs::Arith(a) => {
                        let body = self.expr(body, func)?;
                        Term::let_(x, TRhs::Arith(arith(a)), body)
                    }
                    Rhs::Havoc => {
                        let body = self.expr(body, func)?;
                        Term::let_(
                            x,
                            TRhs::Arith(Arith::Atom(Atom::Nondet(Origin::Havoc))),
                            body,
                        )
                    }
                    Rhs::MkRef { y, .. } => {
                        let body = self.expr(body, func)?;
                        Term::let_(
                            x,
                            TRhs::Pair(
                                Arith::Atom(Atom::Var(y.clone())),
                                Arith::Atom(Atom::Nondet(Origin::Prophecy)),
                            ),
                            body,
                        )
                    }
                    Rhs::Deref(y) => {
                        let Step::Deref { own } = &info.step else {
                            return Err(Self::internal(e, "dereference without evidence"));
                        };
                        let body = self.expr(body, func)?;
                        let read = if own.is_positive() {
                            Atom::Fst(y.clone())
                        } else {
                            Atom::Nondet(Origin::DerefZero)
                        };
                        Term::let_(x, TRhs::Arith(Arith::Atom(read)), body)
                    }
                    Rhs::Alias { y, .. } => {
                        let body = self.expr(body, func)?;
                        let tyy = ty(y)?;
                        if !tyy.is_ref() {
                            Term::let_(x, TRhs::Arith(Arith::Atom(Atom::Var(y.clone()))), body)
                        } else {
                            let Step::LetAlias { before, new, old } = &info.step else {
                                return Err(Self::internal(e, "alias without evidence"));
                            };
                            let null = before.nullify();
                            let binds = self.conv(e, (&null, new), (before, old), &x, y)?;
                            self.fresh_pair(&x, binds, body)
                        }
                    }
                    Rhs::Call { f, args, .. } => {
                        let sig = self.sig(f, e)?;
                        let body = self.expr(body, func)?;
                        let result = match pat {
                            Pattern::One(x) => Pat::Var(x.clone()),
                            Pattern::Tuple(xs) => {
                                Pat::Tuple(xs.iter().map(|x| Pat::Var(x.clone())).collect())
                            }
                        };
                        let refs = sig.ref_params();
                        let pat = if refs.is_empty() {
                            result
                        } else {
                            let mut v = vec![result];
                            v.extend(refs.iter().map(|&i| Pat::Var(args[i].clone())));
                            Pat::Tuple(v)
                        };
                        Term::Call {
                            pat,
                            f: f.clone(),
                            args: args.iter().map(|a| Atom::Var(a.clone())).collect(),
                            body: Box::new(body),
                        }
                    }
                }
            }
            ExprKind::Assign { x, y, cont } => {
                let body = self.expr(cont, func)?;
                Term::let_(
                    x.clone(),
                    TRhs::Pair(Arith::Atom(Atom::Var(y.clone())), snd(x)),
                    body,
                )
            }
            ExprKind::IfZ { x, then, els } => Term::If {
                cond: Atom::Var(x.clone()),
                then: Box::new(self.expr(then, func)?),
                els: Box::new(self.expr(els, func)?),
            },
            ExprKind::Alias { x, y, cont, .. } => {
                let Step::Alias {
                    before_x,
                    before_y,
                    after_x,
                    after_y,
                } = &info.step
                else {
                    return Err(Self::internal(e, "alias assumption without evidence"));
                };
                let binds = self.conv(e, (before_x, after_x), (before_y, after_y), x, y)?;
                let body = self.expr(cont, func)?;
                wrap(binds, body)
            }
            ExprKind::NewLft { body, .. } => self.expr(body, func)?,
            ExprKind::EndLft { cont, .. } => {
                let Step::EndLft { dropped } = &info.step else {
                    return Err(Self::internal(e, "endlft without evidence"));
                };
                let body = self.expr(cont, func)?;
                assumes(dropped, body)
            }
        };
        Ok(if self.opts.sync {
            Term::Sync {
                node: e.id,
                body: Box::new(t),
            }
        } else {
            t
        })
    }

    fn ret(&mut self, e: &Expr, func: Option<&FnSig>, names: &[String]) -> TResult<Term> {
        let info = self.info(e)?;
        let Step::Return {
            dropped, returned, ..
        } = &info.step
        else {
            return Err(Self::internal(e, "return without evidence"));
        };
        let Some(sig) = func else {
            let x = names
                .first()
                .ok_or_else(|| Self::internal(e, "main returns nothing"))?;
            return Ok(assumes(
                dropped,
                Term::Ret(Tail::Atom(Atom::Var(x.clone()))),
            ));
        };
        let gamma = &info.before.tenv;
        let mut copies: Vec<(String, Vec<Bind>)> = Vec::new();
        let mut result = Vec::new();
        for (x, rt) in names.iter().zip(returned) {
            let param = sig.params.iter().position(|(p, _)| p == x);
            match param {
                Some(i) if rt.is_ref() => {
                    let have = gamma
                        .get(x)
                        .ok_or_else(|| Self::internal(e, format!("`{x}` is not typed here")))?;
                    let copy = self.fresh(x);
                    let null = rt.nullify();
                    let binds = self.conv(e, (&null, rt), (have, &sig.post[i]), &copy, x)?;
                    copies.push((copy.clone(), binds));
                    result.push(Tail::Atom(Atom::Var(copy)));
                }
                _ => result.push(Tail::Atom(Atom::Var(x.clone()))),
            }
        }
        let result = if result.len() == 1 {
            result.pop().unwrap()
        } else {
            Tail::Tuple(result)
        };
        let refs = sig.ref_params();
        let tail = if refs.is_empty() {
            result
        } else {
            let mut v = vec![result];
            v.extend(
                refs.iter()
                    .map(|&i| Tail::Atom(Atom::Var(sig.params[i].0.clone()))),
            );
            Tail::Tuple(v)
        };
        let mut t = Term::Ret(tail);
        for (copy, binds) in copies.into_iter().rev() {
            t = self.fresh_pair(&copy, binds, t);
        }
        Ok(assumes(dropped, t))
    }
}

fn arith(a: &source::Arith) -> Arith {
    match a {
        source::Arith::Int(n) => Arith::Atom(Atom::Int(*n)),
        source::Arith::Var(x) => Arith::Atom(Atom::Var(x.clone())),
        source::Arith::Bin(op, l, r) => Arith::Bin(*op, Box::new(arith(l)), Box::new(arith(r))),
    }
}

/// `assume(fst x = snd x)` for each dropped reference.
fn assumes(dropped: &[String], body: Term) -> Term {
    dropped.iter().rev().fold(body, |t, x| Term::Assume {
        a: Atom::Fst(x.clone()),
        b: Atom::Snd(x.clone()),
        body: Box::new(t),
    })
}

/// Translates a checked program.
pub fn translate_program(tp: &TypedProgram, opts: TranslateOptions) -> TResult<TargetProgram> {
    let mut ctx = Ctx {
        tp,
        opts,
        taken: tp.program.all_binders().into_iter().collect(),
    };
    let mut funs = Vec::new();
    for f in &tp.program.funs {
        let sig = ctx.sig(&f.name, &f.body)?;
        let body = ctx.expr(&f.body, Some(sig))?;
        funs.push(TFun {
            name: f.name.clone(),
            params: f.params.iter().map(|p| p.name.clone()).collect(),
            body,
        });
    }
    let main = ctx.expr(&tp.program.main, None)?;
    Ok(TargetProgram { funs, main })
}
