use bfo::fraction::Fraction;
use bfo::lifetime::{Lft, LifetimeEnv};
use bfo::types::{end_lifetime, is_sum, split_type, Type};
use bfo::{Own, OwnType, TypeEnv};
use num_traits::{One, Zero};
use proptest::prelude::*;

pub const LFTS: [&str; 3] = ["a", "b", "c"];

pub fn q<Q: Fraction>(k: i64) -> Q {
    Q::from_ratio(k, 12)
}

/// Reference types over three lifetimes with ownership on a 1/12 grid.
pub fn any_type<Q: Fraction>() -> impl Strategy<Value = Type<Q>> {
    let reference = (
        0..3usize,
        0..=12i64,
        proptest::option::of((0..3usize, 0..=12i64)),
    )
        .prop_map(|(l, r, lend)| {
            let lend = lend.map(|(m, s)| (Lft::new(LFTS[m]), q::<Q>(s.min(12 - r))));
            Type::reference(LFTS[l], q(r), lend)
        });
    prop_oneof![1 => Just(Type::Int), 9 => reference]
}

/// Pairs that are known to add: a share within one lifetime or a borrow
/// between two.
pub fn summands<Q: Fraction>() -> impl Strategy<Value = (Type<Q>, Type<Q>)> {
    let share = (
        0..3usize,
        0..=12i64,
        0..=12i64,
        0..3usize,
        0..=12i64,
        0..=12i64,
    )
        .prop_map(|(l, r1, r2, m, s1, s2)| {
            let r2 = r2.min(12 - r1);
            let s1 = s1.min(12 - r1 - r2);
            let s2 = s2.min(12 - r1 - r2 - s1);
            let lend = |s: i64| Some((Lft::new(LFTS[m]), q::<Q>(s)));
            (
                Type::reference(LFTS[l], q(r1), lend(s1)),
                Type::reference(LFTS[l], q(r2), lend(s2)),
            )
        });
    let borrow = (0..3usize, 1..3usize, 0..=12i64, 0..=12i64).prop_map(|(l, d, r, s)| {
        let m = (l + d) % 3;
        let s = s.min(12 - r);
        (
            Type::reference(LFTS[l], q(r), Some((Lft::new(LFTS[m]), q::<Q>(s)))),
            Type::reference(LFTS[m], q(s), None),
        )
    });
    prop_oneof![share, borrow]
}

pub fn pairs<Q: Fraction>() -> impl Strategy<Value = (Type<Q>, Type<Q>)> {
    prop_oneof![(any_type::<Q>(), any_type::<Q>()), summands::<Q>()]
}

pub fn sorted(mut v: Vec<Type<Own>>) -> Vec<Type<Own>> {
    v.sort_by_key(|t| t.to_string());
    v
}

/// Builds the aliases of a single address by sharing, borrowing and ending
/// lifetimes, starting from one full reference.
#[derive(Debug, Clone)]
pub enum Op {
    /// Split variable `i` (mod count), keeping `k`/4 of its ownership and
    /// lend on the left.
    Share(usize, i64),
    /// Variable `i` lends `k`/4 of its ownership to a fresh shorter lifetime.
    Borrow(usize, i64),
    /// End the minimal lifetime.
    End,
}

pub fn ops() -> impl Strategy<Value = Vec<Op>> {
    let op = prop_oneof![
        (any::<usize>(), 0..=4i64).prop_map(|(i, k)| Op::Share(i, k)),
        (any::<usize>(), 0..=4i64).prop_map(|(i, k)| Op::Borrow(i, k)),
        Just(Op::End),
    ];
    proptest::collection::vec(op, 0..16)
}

pub fn quarter(x: &Own, k: i64) -> Own {
    x.clone() * Own::new(k.into(), 4.into())
}

pub fn total_own(env: &TypeEnv) -> Own {
    env.iter()
        .map(|(_, t)| t.own())
        .fold(Own::zero(), |a, b| a + b)
}

pub struct Aliases {
    pub lenv: LifetimeEnv,
    pub tenv: TypeEnv,
    fresh: usize,
}

impl Aliases {
    pub fn new() -> Self {
        let mut lenv = LifetimeEnv::new();
        lenv.declare(Lft::new("l0")).unwrap();
        let mut tenv = TypeEnv::new();
        tenv.insert("x0", Type::full("l0"));
        Aliases {
            lenv,
            tenv,
            fresh: 1,
        }
    }

    fn pick(&self, i: usize) -> Option<(String, OwnType)> {
        let vars: Vec<String> = self.tenv.vars().cloned().collect();
        if vars.is_empty() {
            return None;
        }
        let x = vars[i % vars.len()].clone();
        let t = self.tenv.get(&x).unwrap().clone();
        Some((x, t))
    }

    fn var(&mut self) -> String {
        self.fresh += 1;
        format!("x{}", self.fresh)
    }

    pub fn apply(&mut self, op: &Op) -> Result<(), TestCaseError> {
        match op {
            Op::Share(i, k) => {
                let Some((x, t)) = self.pick(*i) else {
                    return Ok(());
                };
                let lend = t.lend().map(|l| (l.lft.clone(), quarter(&l.amount, *k)));
                let left = Type::reference(t.lft().unwrap().clone(), quarter(&t.own(), *k), lend);
                let right =
                    split_type(&t, &left).map_err(|e| TestCaseError::fail(e.to_string()))?;
                prop_assert!(is_sum(&t, &left, &right));
                self.tenv.insert(x, left);
                let y = self.var();
                self.tenv.insert(y, right);
            }
            Op::Borrow(i, k) => {
                let Some((x, t)) = self.pick(*i) else {
                    return Ok(());
                };
                if t.lend().is_some() {
                    return Ok(());
                }
                let s = quarter(&t.own(), *k);
                let g = Lft::new(format!("l{}", self.fresh));
                self.lenv.add_min(g.clone()).unwrap();
                let lender = Type::reference(
                    t.lft().unwrap().clone(),
                    t.own() - s.clone(),
                    Some((g.clone(), s.clone())),
                );
                let borrower = Type::reference(g, s, None);
                prop_assert!(is_sum(&t, &lender, &borrower));
                self.tenv.insert(x, lender);
                let y = self.var();
                self.tenv.insert(y, borrower);
            }
            Op::End => {
                let Some(alpha) = self.lenv.minimal().into_iter().find(|l| l.as_str() != "l0")
                else {
                    return Ok(());
                };
                let before = total_own(&self.tenv);
                let (lenv, tenv) = end_lifetime(&self.lenv, &self.tenv, &alpha).unwrap();
                // references of the ended lifetime are disposed
                let tenv: TypeEnv = tenv
                    .iter()
                    .filter(|(_, t)| t.lft() != Some(&alpha))
                    .map(|(x, t)| (x.clone(), t.clone()))
                    .collect();
                prop_assert_eq!(total_own(&tenv), before);
                prop_assert!(tenv.iter().all(|(_, t)| !t.mentions(&alpha)));
                prop_assert!(tenv.well_formed(&lenv), "{tenv} in {lenv:?}");
                self.lenv = lenv;
                self.tenv = tenv;
            }
        }
        prop_assert!(
            self.tenv.well_formed(&self.lenv),
            "{} after {op:?}",
            self.tenv
        );
        prop_assert_eq!(
            total_own(&self.tenv),
            if self.tenv.is_empty() {
                Own::zero()
            } else {
                Own::one()
            }
        );
        Ok(())
    }
}
