//! Differential testing of the translation: source runs drive the target
//! through [`oracle_run`], and [`explore`] must find every failure a source
//! run finds.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::check::TypedProgram;
use crate::interp::{run, Havoc, HavocSpec, RunOptions, Status, StuckError};
use crate::target::{
    explore, oracle_run, Divergence, ExploreOptions, ExploreReport, OracleOptions, TargetError,
};
use crate::translate::{translate_program, TranslateError, TranslateOptions};

#[derive(Debug, Error)]
pub enum CrossError {
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error(transparent)]
    Stuck(#[from] StuckError),
}

#[derive(Debug, Clone)]
pub struct CrossOptions {
    pub streams: u64,
    /// Stream `i` uses seed `first_seed + i`.
    pub first_seed: u64,
    /// Range of havoc values in the source runs.
    pub lo: i64,
    pub hi: i64,
    pub fuel: u64,
    pub explore: ExploreOptions,
    /// Minimize the havoc values of the first inconsistent stream.
    pub shrink: bool,
}

impl Default for CrossOptions {
    fn default() -> Self {
        CrossOptions {
            streams: 100,
            first_seed: 0,
            lo: -2,
            hi: 2,
            fuel: 5_000,
            explore: ExploreOptions::default(),
            shrink: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StreamResult {
    pub seed: u64,
    pub havoc: Vec<i64>,
    pub source_status: Status,
    pub target_status: String,
    pub consistent: bool,
    pub divergence: Option<Divergence>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub havoc: Vec<i64>,
    pub source_status: Status,
    pub divergence: Option<Divergence>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossReport {
    pub streams: Vec<StreamResult>,
    pub explore: ExploreReport,
    /// Some stream made the source program fail.
    pub source_failed: bool,
    pub passed: bool,
    pub counterexample: Option<Counterexample>,
}

impl CrossReport {
    pub fn inconsistent(&self) -> usize {
        self.streams.iter().filter(|s| !s.consistent).count()
    }

    /// A source failure that exploration did not find.
    pub fn missed_failure(&self) -> bool {
        self.source_failed && !self.explore.fail_reachable
    }
}

fn one_run(
    tp: &TypedProgram,
    target: &crate::target::TargetProgram,
    havoc: &mut Havoc,
    fuel: u64,
) -> Result<(Status, String, Option<Divergence>), CrossError> {
    let src = run(&tp.program, havoc, RunOptions { fuel, trace: true })?;
    let o = oracle_run(tp, target, &src, &OracleOptions::default())?;
    Ok((src.status, o.target_status, o.divergence))
}

/// Removes havoc values one at a time while the run stays inconsistent.
fn shrink(
    tp: &TypedProgram,
    target: &crate::target::TargetProgram,
    mut values: Vec<i64>,
    fuel: u64,
) -> Result<Counterexample, CrossError> {
    let mut i = 0;
    while i < values.len() {
        let mut cand = values.clone();
        cand.remove(i);
        let (_, _, d) = one_run(tp, target, &mut Havoc::list(cand.clone()), fuel)?;
        if d.is_some() {
            values = cand;
        } else {
            i += 1;
        }
    }
    let mut havoc = Havoc::list(values.clone());
    let (source_status, _, divergence) = one_run(tp, target, &mut havoc, fuel)?;
    Ok(Counterexample {
        havoc: values,
        source_status,
        divergence,
    })
}

pub fn crosscheck(tp: &TypedProgram, opts: &CrossOptions) -> Result<CrossReport, CrossError> {
    let target = translate_program(tp, TranslateOptions::default())?;
    let streams = (0..opts.streams)
        .into_par_iter()
        .map(|i| {
            let seed = opts.first_seed + i;
            let mut havoc = Havoc::new(&HavocSpec::Seed {
                seed,
                lo: opts.lo,
                hi: opts.hi,
            });
            let (source_status, target_status, divergence) =
                one_run(tp, &target, &mut havoc, opts.fuel)?;
            Ok(StreamResult {
                seed,
                havoc: havoc.used().to_vec(),
                source_status,
                target_status,
                consistent: divergence.is_none(),
                divergence,
            })
        })
        .collect::<Result<Vec<_>, CrossError>>()?;
    let explore = explore(&target, &opts.explore)?;
    let source_failed = streams.iter().any(|s| s.source_status == Status::Fail);
    let counterexample = match streams.iter().find(|s| !s.consistent) {
        Some(s) if opts.shrink => Some(shrink(tp, &target, s.havoc.clone(), opts.fuel)?),
        Some(s) => Some(Counterexample {
            havoc: s.havoc.clone(),
            source_status: s.source_status.clone(),
            divergence: s.divergence.clone(),
        }),
        None => None,
    };
    let passed = counterexample.is_none() && !(source_failed && !explore.fail_reachable);
    Ok(CrossReport {
        streams,
        explore,
        source_failed,
        passed,
        counterexample,
    })
}
