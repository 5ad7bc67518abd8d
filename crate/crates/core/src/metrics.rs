//! Per-address ownership accounting over a typed register.
//!
//! Every binding `x: τ` whose register value is address `a` contributes to
//! `a`'s sums. The sums are taken over a multiset, so the same variable may
//! contribute several entries (a live binding plus discarded residues).

use std::collections::BTreeMap;
use std::hash::Hash;

use crate::fraction::Fraction;
use crate::lifetime::Lft;
use crate::types::Type;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metrics<Q> {
    /// Total ownership held at the address.
    pub own: Q,
    /// Ownership held by references of each lifetime.
    pub own_by_lft: BTreeMap<Lft, Q>,
    /// Amount lent *to* each lifetime.
    pub borrowed_by: BTreeMap<Lft, Q>,
    /// Amount lent *from* references of each lifetime.
    pub borrowed_from: BTreeMap<Lft, Q>,
    /// Amount lent from lifetime `.0` to lifetime `.1`.
    pub borrows: BTreeMap<(Lft, Lft), Q>,
}

impl<Q: Fraction> Default for Metrics<Q> {
    fn default() -> Self {
        Metrics {
            own: Q::zero(),
            own_by_lft: BTreeMap::new(),
            borrowed_by: BTreeMap::new(),
            borrowed_from: BTreeMap::new(),
            borrows: BTreeMap::new(),
        }
    }
}

fn bump<K: Ord, Q: Fraction>(map: &mut BTreeMap<K, Q>, k: K, v: &Q) {
    let slot = map.entry(k).or_insert_with(Q::zero);
    *slot = slot.clone() + v.clone();
}

fn get<K: Ord, Q: Fraction>(map: &BTreeMap<K, Q>, k: &K) -> Q {
    map.get(k).cloned().unwrap_or_else(Q::zero)
}

impl<Q: Fraction> Metrics<Q> {
    pub fn own_at(&self, l: &Lft) -> Q {
        get(&self.own_by_lft, l)
    }

    pub fn bby(&self, l: &Lft) -> Q {
        get(&self.borrowed_by, l)
    }

    pub fn bfrm(&self, l: &Lft) -> Q {
        get(&self.borrowed_from, l)
    }

    pub fn brr(&self, from: &Lft, to: &Lft) -> Q {
        get(&self.borrows, &(from.clone(), to.clone()))
    }

    fn add_entry(&mut self, t: &Type<Q>) {
        let Type::Ref { lft, own, lend } = t else {
            return;
        };
        self.own = self.own.clone() + own.clone();
        bump(&mut self.own_by_lft, lft.clone(), own);
        if let Some(l) = lend {
            bump(&mut self.borrowed_by, l.lft.clone(), &l.amount);
            bump(&mut self.borrowed_from, lft.clone(), &l.amount);
            bump(&mut self.borrows, (lft.clone(), l.lft.clone()), &l.amount);
        }
    }

    /// Every lifetime any sum is indexed by.
    pub fn lifetimes(&self) -> Vec<Lft> {
        let mut all: Vec<Lft> = self
            .own_by_lft
            .keys()
            .chain(self.borrowed_by.keys())
            .chain(self.borrowed_from.keys())
            .cloned()
            .collect();
        all.sort();
        all.dedup();
        all
    }

    pub fn fraction_consistent(&self) -> bool {
        self.own <= Q::one()
    }

    /// Lifetimes `α` where `BBy(α) > own(α) + BFrm(α)`.
    pub fn borrow_violations(&self) -> Vec<Lft> {
        self.lifetimes()
            .into_iter()
            .filter(|l| self.bby(l) > self.own_at(l) + self.bfrm(l))
            .collect()
    }
}

/// Metrics for address `addr` over `(type, register value)` entries.
/// Entries whose value is not `Some(addr)` are ignored.
pub fn ownership_metrics<'a, Q, A>(
    entries: impl IntoIterator<Item = (&'a Type<Q>, Option<&'a A>)>,
    addr: &A,
) -> Metrics<Q>
where
    Q: Fraction,
    A: PartialEq + 'a,
{
    let mut m = Metrics::default();
    for (t, a) in entries {
        if a == Some(addr) {
            m.add_entry(t);
        }
    }
    m
}

/// Metrics for every address mentioned by the entries.
pub fn metrics_by_address<'a, Q, A>(
    entries: impl IntoIterator<Item = (&'a Type<Q>, Option<&'a A>)>,
) -> BTreeMap<A, Metrics<Q>>
where
    Q: Fraction,
    A: Ord + Clone + Hash + 'a,
{
    let mut out: BTreeMap<A, Metrics<Q>> = BTreeMap::new();
    for (t, a) in entries {
        if let (Some(a), true) = (a, t.is_ref()) {
            out.entry(a.clone()).or_default().add_entry(t);
        }
    }
    out
}
