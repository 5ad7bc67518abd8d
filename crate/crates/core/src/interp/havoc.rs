use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Where `_` gets its values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum HavocSpec {
    /// Uniform over `lo..=hi` from a seeded generator.
    Seed { seed: u64, lo: i64, hi: i64 },
    /// Explicit values in order; 0 once they run out.
    List(Vec<i64>),
}

#[derive(Debug, Clone)]
pub struct Havoc {
    source: Source,
    used: Vec<i64>,
}

#[derive(Debug, Clone)]
enum Source {
    Rng(ChaCha8Rng, i64, i64),
    List(Vec<i64>, usize),
}

impl Havoc {
    pub fn new(spec: &HavocSpec) -> Self {
        let source = match spec {
            HavocSpec::Seed { seed, lo, hi } => {
                Source::Rng(ChaCha8Rng::seed_from_u64(*seed), *lo, (*hi).max(*lo))
            }
            HavocSpec::List(v) => Source::List(v.clone(), 0),
        };
        Havoc {
            source,
            used: Vec::new(),
        }
    }

    pub fn seeded(seed: u64, lo: i64, hi: i64) -> Self {
        Havoc::new(&HavocSpec::Seed { seed, lo, hi })
    }

    pub fn list(values: Vec<i64>) -> Self {
        Havoc::new(&HavocSpec::List(values))
    }

    pub fn next(&mut self) -> i64 {
        let v = match &mut self.source {
            Source::Rng(rng, lo, hi) => rng.gen_range(*lo..=*hi),
            Source::List(v, i) => {
                let out = v.get(*i).copied().unwrap_or(0);
                *i += 1;
                out
            }
        };
        self.used.push(v);
        v
    }

    /// Every value handed out so far.
    pub fn used(&self) -> &[i64] {
        &self.used
    }
}
