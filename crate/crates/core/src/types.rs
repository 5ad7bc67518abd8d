//! Borrowable fractional ownership types and their algebra.
//!
//! A reference type `ref<α, r lend β: s>` says the reference lives for `α`,
//! holds ownership `r`, and currently lends `s` to references of lifetime
//! `β`. Type addition distributes ownership between aliases: sharing within
//! one lifetime, borrowing across two.

use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::fraction::Fraction;
use crate::lifetime::{Lft, LftError, LifetimeEnv};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lend<Q> {
    pub lft: Lft,
    pub amount: Q,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type<Q> {
    Int,
    Ref {
        lft: Lft,
        own: Q,
        lend: Option<Lend<Q>>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AddError {
    #[error("cannot combine an integer with a reference")]
    KindMismatch,
    #[error("no addition rule relates `{left}` and `{right}`")]
    NoRule { left: String, right: String },
    #[error("ownership would exceed 1 (`{left}` + `{right}`)")]
    Overflow { left: String, right: String },
    #[error("`{part}` is not a summand of `{whole}`")]
    NotASummand { whole: String, part: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WfError {
    #[error("lifetime `{0}` is not in scope")]
    UnknownLifetime(Lft),
    #[error("ownership {0} is outside [0, 1]")]
    OwnRange(String),
    #[error("ownership plus lent amount exceeds 1 in `{0}`")]
    Overcommitted(String),
    #[error("`{ty}` lends to `{target}`, which is not shorter than `{base}`")]
    LendOrder { ty: String, base: Lft, target: Lft },
}

impl<Q: Fraction> Type<Q> {
    /// Builds a reference type, normalizing a zero lend to no lend.
    pub fn reference(lft: impl Into<Lft>, own: Q, lend: Option<(Lft, Q)>) -> Self {
        let lend = lend
            .filter(|(_, s)| !s.is_zero())
            .map(|(lft, amount)| Lend { lft, amount });
        Type::Ref {
            lft: lft.into(),
            own,
            lend,
        }
    }

    pub fn full(lft: impl Into<Lft>) -> Self {
        Type::reference(lft, Q::one(), None)
    }

    pub fn is_ref(&self) -> bool {
        matches!(self, Type::Ref { .. })
    }

    pub fn lft(&self) -> Option<&Lft> {
        match self {
            Type::Int => None,
            Type::Ref { lft, .. } => Some(lft),
        }
    }

    /// `own(int)` is 0.
    pub fn own(&self) -> Q {
        match self {
            Type::Int => Q::zero(),
            Type::Ref { own, .. } => own.clone(),
        }
    }

    pub fn lend(&self) -> Option<&Lend<Q>> {
        match self {
            Type::Int => None,
            Type::Ref { lend, .. } => lend.as_ref(),
        }
    }

    pub fn lend_lft(&self) -> Option<&Lft> {
        self.lend().map(|l| &l.lft)
    }

    pub fn lent(&self) -> Q {
        self.lend()
            .map(|l| l.amount.clone())
            .unwrap_or_else(Q::zero)
    }

    /// Same lifetime, all ownership removed.
    pub fn nullify(&self) -> Self {
        match self {
            Type::Int => Type::Int,
            Type::Ref { lft, .. } => Type::reference(lft.clone(), Q::zero(), None),
        }
    }

    /// Whether this type carries nothing worth tracking (`int` or an
    /// ownerless, non-lending reference).
    pub fn is_void(&self) -> bool {
        match self {
            Type::Int => true,
            Type::Ref { own, lend, .. } => own.is_zero() && lend.is_none(),
        }
    }

    pub fn mentions(&self, l: &Lft) -> bool {
        self.lft() == Some(l) || self.lend_lft() == Some(l)
    }

    pub fn subst(&self, map: &dyn Fn(&Lft) -> Lft) -> Self {
        match self {
            Type::Int => Type::Int,
            Type::Ref { lft, own, lend } => Type::Ref {
                lft: map(lft),
                own: own.clone(),
                lend: lend.as_ref().map(|l| Lend {
                    lft: map(&l.lft),
                    amount: l.amount.clone(),
                }),
            },
        }
    }

    /// `τ↑α`: a lend to `α` is returned to the lender.
    pub fn lift(&self, ended: &Lft) -> Self {
        match self {
            Type::Ref {
                lft,
                own,
                lend: Some(l),
            } if &l.lft == ended => {
                Type::reference(lft.clone(), own.clone() + l.amount.clone(), None)
            }
            other => other.clone(),
        }
    }
}

impl<Q: Fraction> fmt::Display for Type<Q> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Ref { lft, own, lend } => {
                write!(f, "ref<{}, {}", lft, own.pretty())?;
                if let Some(l) = lend {
                    write!(f, " lend {}: {}", l.lft, l.amount.pretty())?;
                }
                f.write_str(">")
            }
        }
    }
}

fn overflow<Q: Fraction>(a: &Type<Q>, b: &Type<Q>) -> AddError {
    AddError::Overflow {
        left: a.to_string(),
        right: b.to_string(),
    }
}

/// `a + b` under the addition rules. Sharing is tried before borrowing.
/// Two ownerless, non-lending references of different lifetimes sum either
/// way; the one with the smaller lifetime name is taken so that addition
/// commutes.
pub fn add_types<Q: Fraction>(a: &Type<Q>, b: &Type<Q>) -> Result<Type<Q>, AddError> {
    let mut all = sums(a, b)?;
    all.sort_by(|x, y| x.lft().cmp(&y.lft()));
    Ok(all.swap_remove(0))
}

/// Every type derivable as `a + b`.
pub fn sums<Q: Fraction>(a: &Type<Q>, b: &Type<Q>) -> Result<Vec<Type<Q>>, AddError> {
    match (a, b) {
        (Type::Int, Type::Int) => Ok(vec![Type::Int]),
        (Type::Int, _) | (_, Type::Int) => Err(AddError::KindMismatch),
        (
            Type::Ref {
                lft: la,
                own: ra,
                lend: ba,
            },
            Type::Ref {
                lft: lb,
                own: rb,
                lend: bb,
            },
        ) => {
            if la == lb {
                // A-Share; a missing lend is a zero lend to any lifetime
                let target = match (ba, bb) {
                    (Some(x), Some(y)) if x.lft != y.lft => {
                        return Err(AddError::NoRule {
                            left: a.to_string(),
                            right: b.to_string(),
                        })
                    }
                    (Some(x), _) | (_, Some(x)) => Some(x.lft.clone()),
                    (None, None) => None,
                };
                let own = ra.clone() + rb.clone();
                let lent = a.lent() + b.lent();
                if own > Q::one() || lent > Q::one() {
                    return Err(overflow(a, b));
                }
                return Ok(vec![Type::reference(
                    la.clone(),
                    own,
                    target.map(|t| (t, lent)),
                )]);
            }
            let all: Vec<Type<Q>> = borrow_merge(a, b)
                .into_iter()
                .chain(borrow_merge(b, a))
                .collect();
            if all.is_empty() {
                return Err(AddError::NoRule {
                    left: a.to_string(),
                    right: b.to_string(),
                });
            }
            let fit: Vec<Type<Q>> = all.into_iter().filter(|t| t.own() <= Q::one()).collect();
            if fit.is_empty() {
                return Err(overflow(a, b));
            }
            Ok(fit)
        }
    }
}

/// Whether `whole` is derivable as `a + b`.
pub fn is_sum<Q: Fraction>(whole: &Type<Q>, a: &Type<Q>, b: &Type<Q>) -> bool {
    sums(a, b).is_ok_and(|all| all.contains(whole))
}

/// A-Borrow read left to right: `lender` lends to `borrower`'s lifetime.
fn borrow_merge<Q: Fraction>(lender: &Type<Q>, borrower: &Type<Q>) -> Option<Type<Q>> {
    let (
        Type::Ref {
            lft: la,
            own: r,
            lend,
        },
        Type::Ref {
            lft: lb,
            own: s,
            lend: None,
        },
    ) = (lender, borrower)
    else {
        return None;
    };
    match lend {
        Some(l) if &l.lft == lb && &l.amount == s => {
            Some(Type::reference(la.clone(), r.clone() + s.clone(), None))
        }
        // zero-amount borrow: (β, 0) is identified with no lend
        None if s.is_zero() => Some(Type::reference(la.clone(), r.clone(), None)),
        _ => None,
    }
}

/// Finds `right` with `left + right = whole`.
pub fn split_type<Q: Fraction>(whole: &Type<Q>, left: &Type<Q>) -> Result<Type<Q>, AddError> {
    let not_summand = || AddError::NotASummand {
        whole: whole.to_string(),
        part: left.to_string(),
    };
    match (whole, left) {
        (Type::Int, Type::Int) => return Ok(Type::Int),
        (Type::Int, _) | (_, Type::Int) => return Err(AddError::KindMismatch),
        _ => {}
    }
    let mut candidates = Vec::new();
    let (
        Type::Ref {
            lft: wl,
            own: wr,
            lend: wb,
        },
        Type::Ref {
            lft: ll,
            own: lr,
            lend: lb,
        },
    ) = (whole, left)
    else {
        unreachable!()
    };
    if wl == ll && wr >= lr {
        let lent_ok = match (wb, lb) {
            (_, None) => true,
            (Some(w), Some(l)) => w.lft == l.lft && w.amount >= l.amount,
            (None, Some(_)) => false,
        };
        if lent_ok {
            let target = wb.as_ref().map(|w| w.lft.clone());
            let rest = whole.lent() - left.lent();
            candidates.push(Type::reference(
                wl.clone(),
                wr.clone() - lr.clone(),
                target.map(|t| (t, rest)),
            ));
        }
    }
    if wb.is_none() {
        match lb {
            // left is the lender, right is the borrower
            Some(l) if wl == ll && lr.clone() + l.amount.clone() == *wr => {
                candidates.push(Type::reference(l.lft.clone(), l.amount.clone(), None));
            }
            // left is the borrower, right is the lender
            None if wl != ll && wr >= lr => {
                candidates.push(Type::reference(
                    wl.clone(),
                    wr.clone() - lr.clone(),
                    Some((ll.clone(), lr.clone())),
                ));
            }
            _ => {}
        }
    }
    candidates
        .into_iter()
        .find(|right| is_sum(whole, left, right))
        .ok_or_else(not_summand)
}

/// `L ⊢ τ`: lifetimes in scope, `r + s ≤ 1`, and lends go to shorter lifetimes.
pub fn check_well_formed<Q: Fraction>(env: &LifetimeEnv, t: &Type<Q>) -> Result<(), WfError> {
    let Type::Ref { lft, own, lend } = t else {
        return Ok(());
    };
    if !env.contains(lft) {
        return Err(WfError::UnknownLifetime(lft.clone()));
    }
    if !own.in_unit_interval() {
        return Err(WfError::OwnRange(own.pretty()));
    }
    if let Some(l) = lend {
        if !env.contains(&l.lft) {
            return Err(WfError::UnknownLifetime(l.lft.clone()));
        }
        if !l.amount.in_unit_interval() || own.clone() + l.amount.clone() > Q::one() {
            return Err(WfError::Overcommitted(t.to_string()));
        }
        if !env.lt(&l.lft, lft) {
            return Err(WfError::LendOrder {
                ty: t.to_string(),
                base: lft.clone(),
                target: l.lft.clone(),
            });
        }
    }
    Ok(())
}

pub fn well_formed<Q: Fraction>(env: &LifetimeEnv, t: &Type<Q>) -> bool {
    check_well_formed(env, t).is_ok()
}

/// Finite map from variables to types, kept in binding order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeEnv<Q> {
    bindings: IndexMap<String, Type<Q>>,
}

impl<Q> Default for TypeEnv<Q> {
    fn default() -> Self {
        TypeEnv {
            bindings: IndexMap::new(),
        }
    }
}

impl<Q: Fraction> TypeEnv<Q> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, x: &str) -> Option<&Type<Q>> {
        self.bindings.get(x)
    }

    pub fn contains(&self, x: &str) -> bool {
        self.bindings.contains_key(x)
    }

    pub fn insert(&mut self, x: impl Into<String>, t: Type<Q>) {
        self.bindings.insert(x.into(), t);
    }

    pub fn remove(&mut self, x: &str) -> Option<Type<Q>> {
        self.bindings.shift_remove(x)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Type<Q>)> {
        self.bindings.iter()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = &String> {
        self.bindings.keys()
    }

    pub fn own_of(&self, x: &str) -> Q {
        self.get(x).map(Type::own).unwrap_or_else(Q::zero)
    }

    pub fn lft_of(&self, x: &str) -> Option<&Lft> {
        self.get(x).and_then(Type::lft)
    }

    /// Variables bound to reference types.
    pub fn ref_vars(&self) -> Vec<String> {
        self.bindings
            .iter()
            .filter(|(_, t)| t.is_ref())
            .map(|(x, _)| x.clone())
            .collect()
    }

    /// `Γ↑α`: drops bindings living for `α` and returns lends to `α`.
    pub fn lift(&self, ended: &Lft) -> TypeEnv<Q> {
        TypeEnv {
            bindings: self
                .bindings
                .iter()
                .filter(|(_, t)| t.lft() != Some(ended))
                .map(|(x, t)| (x.clone(), t.lift(ended)))
                .collect(),
        }
    }

    pub fn check_well_formed(&self, env: &LifetimeEnv) -> Result<(), (String, WfError)> {
        for (x, t) in &self.bindings {
            check_well_formed(env, t).map_err(|e| (x.clone(), e))?;
        }
        Ok(())
    }

    pub fn well_formed(&self, env: &LifetimeEnv) -> bool {
        self.check_well_formed(env).is_ok()
    }

    pub fn subst(&self, map: &dyn Fn(&Lft) -> Lft) -> TypeEnv<Q> {
        TypeEnv {
            bindings: self
                .bindings
                .iter()
                .map(|(x, t)| (x.clone(), t.subst(map)))
                .collect(),
        }
    }
}

impl<Q: Fraction> FromIterator<(String, Type<Q>)> for TypeEnv<Q> {
    fn from_iter<I: IntoIterator<Item = (String, Type<Q>)>>(iter: I) -> Self {
        TypeEnv {
            bindings: iter.into_iter().collect(),
        }
    }
}

impl<Q: Fraction> fmt::Display for TypeEnv<Q> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .bindings
            .iter()
            .map(|(x, t)| format!("{x}: {t}"))
            .collect();
        f.write_str(&parts.join(", "))
    }
}

/// Pointwise addition; a variable bound on one side only passes through.
pub fn env_add<Q: Fraction>(a: &TypeEnv<Q>, b: &TypeEnv<Q>) -> Result<TypeEnv<Q>, AddError> {
    let mut out = a.clone();
    for (x, tb) in b.iter() {
        let t = match a.get(x) {
            Some(ta) => add_types(ta, tb)?,
            None => tb.clone(),
        };
        out.insert(x.clone(), t);
    }
    Ok(out)
}

/// Ends a minimal lifetime: `(L↑α, Γ↑α)`.
pub fn end_lifetime<Q: Fraction>(
    lenv: &LifetimeEnv,
    tenv: &TypeEnv<Q>,
    ended: &Lft,
) -> Result<(LifetimeEnv, TypeEnv<Q>), LftError> {
    let lenv = lenv.end(ended)?;
    Ok((lenv, tenv.lift(ended)))
}
