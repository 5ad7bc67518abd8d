//! Lifetime variables and strict partial orders over them.

use std::collections::BTreeSet;
use std::fmt;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Lft(pub String);

impl Lft {
    pub fn new(name: impl Into<String>) -> Self {
        Lft(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Lft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Lft {
    fn from(s: &str) -> Self {
        Lft(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LftError {
    #[error("unknown lifetime `{0}`")]
    Unknown(Lft),
    #[error("lifetime `{0}` is not minimal")]
    NotMinimal(Lft),
    #[error("lifetime `{0}` is already declared")]
    Duplicate(Lft),
    #[error("ordering `{0} < {1}` would create a cycle")]
    Cycle(Lft, Lft),
}

/// A strict partial order on lifetime variables, kept transitively closed.
///
/// `(a, b)` in `below` means `a ⊏ b` (`a` is the shorter lifetime).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LifetimeEnv {
    lfts: IndexSet<Lft>,
    below: BTreeSet<(Lft, Lft)>,
}

impl LifetimeEnv {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an order from declared lifetimes and `a < b` pairs.
    pub fn from_order(
        lfts: impl IntoIterator<Item = Lft>,
        pairs: impl IntoIterator<Item = (Lft, Lft)>,
    ) -> Result<Self, LftError> {
        let mut env = LifetimeEnv::new();
        for l in lfts {
            env.declare(l)?;
        }
        for (a, b) in pairs {
            env.relate(a, b)?;
        }
        Ok(env)
    }

    pub fn declare(&mut self, l: Lft) -> Result<(), LftError> {
        if !self.lfts.insert(l.clone()) {
            return Err(LftError::Duplicate(l));
        }
        Ok(())
    }

    /// Adds `a ⊏ b` and closes transitively.
    pub fn relate(&mut self, a: Lft, b: Lft) -> Result<(), LftError> {
        for l in [&a, &b] {
            if !self.lfts.contains(l) {
                return Err(LftError::Unknown(l.clone()));
            }
        }
        if a == b || self.lt(&b, &a) {
            return Err(LftError::Cycle(a, b));
        }
        let mut lower: Vec<Lft> = self.below_of(&a).cloned().collect();
        lower.push(a.clone());
        let mut upper: Vec<Lft> = self.above_of(&b).cloned().collect();
        upper.push(b.clone());
        for lo in &lower {
            for hi in &upper {
                self.below.insert((lo.clone(), hi.clone()));
            }
        }
        Ok(())
    }

    /// Introduces a fresh lifetime below every existing one.
    pub fn add_min(&mut self, l: Lft) -> Result<(), LftError> {
        let existing: Vec<Lft> = self.lfts.iter().cloned().collect();
        self.declare(l.clone())?;
        for other in existing {
            self.below.insert((l.clone(), other));
        }
        Ok(())
    }

    pub fn contains(&self, l: &Lft) -> bool {
        self.lfts.contains(l)
    }

    pub fn lt(&self, a: &Lft, b: &Lft) -> bool {
        self.below.contains(&(a.clone(), b.clone()))
    }

    pub fn is_empty(&self) -> bool {
        self.lfts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.lfts.len()
    }

    pub fn lifetimes(&self) -> impl Iterator<Item = &Lft> {
        self.lfts.iter()
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(Lft, Lft)> {
        self.below.iter()
    }

    fn below_of<'a>(&'a self, l: &'a Lft) -> impl Iterator<Item = &'a Lft> + 'a {
        self.below
            .iter()
            .filter(move |(_, b)| b == l)
            .map(|(a, _)| a)
    }

    fn above_of<'a>(&'a self, l: &'a Lft) -> impl Iterator<Item = &'a Lft> + 'a {
        self.below
            .iter()
            .filter(move |(a, _)| a == l)
            .map(|(_, b)| b)
    }

    pub fn is_minimal(&self, l: &Lft) -> bool {
        self.contains(l) && self.below_of(l).next().is_none()
    }

    pub fn minimal(&self) -> Vec<Lft> {
        self.lfts
            .iter()
            .filter(|l| self.is_minimal(l))
            .cloned()
            .collect()
    }

    /// The subposet induced by removing `l`; fails unless `l` is minimal.
    pub fn end(&self, l: &Lft) -> Result<LifetimeEnv, LftError> {
        if !self.contains(l) {
            return Err(LftError::Unknown(l.clone()));
        }
        if !self.is_minimal(l) {
            return Err(LftError::NotMinimal(l.clone()));
        }
        Ok(self.without(l))
    }

    pub fn without(&self, l: &Lft) -> LifetimeEnv {
        let mut lfts = self.lfts.clone();
        lfts.shift_remove(l);
        let below = self
            .below
            .iter()
            .filter(|(a, b)| a != l && b != l)
            .cloned()
            .collect();
        LifetimeEnv { lfts, below }
    }

    /// Whether every ordering of `other` (and every lifetime it declares)
    /// also holds here.
    pub fn entails(&self, other: &LifetimeEnv) -> bool {
        other.lfts.iter().all(|l| self.contains(l))
            && other.below.iter().all(|(a, b)| self.lt(a, b))
    }

    pub fn is_strict_order(&self) -> bool {
        let irreflexive = self.below.iter().all(|(a, b)| a != b);
        let antisym = self.below.iter().all(|(a, b)| !self.lt(b, a));
        let transitive = self.below.iter().all(|(a, b)| {
            self.below
                .iter()
                .filter(|(c, _)| c == b)
                .all(|(_, d)| self.lt(a, d))
        });
        irreflexive && antisym && transitive
    }

    /// Renames lifetimes; pairs and lifetimes missing from `map` are kept.
    pub fn rename(&self, map: &dyn Fn(&Lft) -> Lft) -> LifetimeEnv {
        LifetimeEnv {
            lfts: self.lfts.iter().map(map).collect(),
            below: self.below.iter().map(|(a, b)| (map(a), map(b))).collect(),
        }
    }
}

impl fmt::Display for LifetimeEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.lfts.iter().map(|l| l.0.as_str()).collect();
        write!(f, "{{{}}}", names.join(", "))?;
        if !self.below.is_empty() {
            let pairs: Vec<_> = self
                .below
                .iter()
                .map(|(a, b)| format!("{a} < {b}"))
                .collect();
            write!(f, " with {}", pairs.join(", "))?;
        }
        Ok(())
    }
}
