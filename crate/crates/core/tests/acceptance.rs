//! Acceptance run over the corpus manifest: one line per criterion.
//!
//! Runs without the libtest harness so the lines show up in `cargo test`
//! output. The exit status is nonzero if a criterion fails for a reason the
//! manifest does not record.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use bfo::check::{check_program, check_program_with, dump_env, CheckOptions, TypedProgram};
use bfo::corpus::{Corpus, EnvComments, Safety};
use bfo::crosscheck::{crosscheck, CrossOptions};
use bfo::interp::audit::{audit_run, ViolationKind};
use bfo::interp::{Havoc, RunOptions};
use bfo::source::parse;
use bfo::target::normalize::compare;
use bfo::target::{emit, explore, lower, parse_ml, ExploreOptions, Profile};
use bfo::translate::{translate_program, TranslateOptions};
use bfo::types::{add_types, is_sum, split_type};
use bfo::Own;
use common::algebra::{ops, pairs, Aliases, Op};
use common::envs::{bindings, env_comments};
use common::instrs::{build, program};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rayon::prelude::*;

const STREAMS: u64 = 100;
const PROPERTY_CASES: u32 = 10_000;
const MONOTONE_PROGRAMS: usize = 20;

struct Outcome {
    ok: bool,
    detail: String,
    /// Failure the manifest records as expected.
    known: bool,
}

impl Outcome {
    fn new(problems: Vec<String>, summary: String) -> Self {
        let ok = problems.is_empty();
        let detail = if ok { summary } else { problems.join("; ") };
        Outcome {
            ok,
            detail,
            known: false,
        }
    }
}

fn typed(c: &Corpus, file: &str) -> Result<TypedProgram, String> {
    let src = c.read(file).map_err(|e| e.to_string())?;
    let p = parse(&src).map_err(|e| format!("{file}: {e}"))?;
    check_program(&p).map_err(|e| format!("{file}: {e}"))
}

fn split_comment(c: &str) -> (Option<BTreeSet<String>>, BTreeSet<String>) {
    match c.strip_prefix("dispose ") {
        Some(rest) => {
            let (d, e) = rest.split_once(';').unwrap_or((rest, ""));
            let disposed = d.split(',').map(|x| x.trim().to_string()).collect();
            (Some(disposed), bindings(e).into_iter().collect())
        }
        None => (None, bindings(c).into_iter().collect()),
    }
}

fn typing_goldens(c: &Corpus) -> Outcome {
    let mut problems = Vec::new();
    let mut lines = 0;
    for p in &c.manifest.programs {
        let Some(mode) = p.env_comments else { continue };
        let tp = match typed(c, &p.file) {
            Ok(tp) => tp,
            Err(e) => {
                problems.push(e);
                continue;
            }
        };
        let src = c.read(&p.file).unwrap();
        let dump = dump_env(&tp);
        for (line, comment) in env_comments(&src) {
            lines += 1;
            let Some((_, got)) = dump.iter().find(|(l, _)| *l == line) else {
                problems.push(format!("{}:{line}: no environment", p.name));
                continue;
            };
            let (want_d, want) = split_comment(&comment);
            let (got_d, got_env) = split_comment(got);
            // a comment need not mention what the line disposes
            let disposal = want_d.is_none_or(|d| got_d == Some(d));
            let fits = disposal
                && match mode {
                    EnvComments::Exact => want == got_env,
                    EnvComments::Partial => want.is_subset(&got_env),
                };
            if !fits {
                problems.push(format!("{}:{line}: want `{comment}`, got `{got}`", p.name));
            }
        }
    }
    let mut rejected = 0;
    for p in c.manifest.programs.iter().filter(|p| !p.well_typed()) {
        let src = c.read(&p.file).unwrap();
        match parse(&src).map(|prog| check_program(&prog)) {
            Ok(Err(e)) if e.kind.name() == p.check => rejected += 1,
            Ok(Err(e)) => problems.push(format!("{}: {e}, expected {}", p.name, p.check)),
            Ok(Ok(_)) => problems.push(format!("{}: type-checks, expected {}", p.name, p.check)),
            Err(e) => problems.push(format!("{}: {e}", p.name)),
        }
    }
    Outcome::new(
        problems,
        format!(
            "{lines} environment comments reproduced, {rejected} programs rejected as expected"
        ),
    )
}

fn first_difference(a: &str, b: &str) -> String {
    for (x, y) in a.lines().zip(b.lines()) {
        if x != y {
            return format!("`{}` vs `{}`", x.trim(), y.trim());
        }
    }
    "lengths differ".into()
}

fn translation_goldens(c: &Corpus) -> Outcome {
    let mut problems = Vec::new();
    let mut unexpected = false;
    for tr in &c.manifest.translations {
        let verdict = typed(c, &tr.source).and_then(|tp| {
            let t =
                translate_program(&tp, TranslateOptions::default()).map_err(|e| e.to_string())?;
            let ours = parse_ml(&emit(&t, Profile::Ml)).map_err(|e| e.to_string())?;
            let theirs = parse_ml(&c.read(&tr.target).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            Ok(compare(&ours, &theirs))
        });
        match verdict {
            Ok(None) => unexpected |= !tr.matches,
            Ok(Some((ours, theirs))) => {
                unexpected |= tr.matches;
                problems.push(format!(
                    "{} differs from {}: {}",
                    tr.source,
                    tr.target,
                    first_difference(&ours, &theirs)
                ));
            }
            Err(e) => {
                unexpected = true;
                problems.push(e);
            }
        }
    }
    let n = c.manifest.translations.len();
    let mut o = Outcome::new(problems, format!("{n} listings match after normalization"));
    if !o.ok {
        o.detail = format!(
            "{} of {n} listings differ: {}",
            n - c.manifest.translations.iter().filter(|t| t.matches).count(),
            o.detail
        );
    }
    o.known = !o.ok && !unexpected;
    o
}

fn audit(c: &Corpus) -> Outcome {
    let safe: Vec<_> = c
        .manifest
        .programs
        .iter()
        .filter(|p| p.well_typed() && p.safety == Some(Safety::Safe))
        .collect();
    let mut problems: Vec<String> = safe
        .par_iter()
        .flat_map_iter(|p| {
            let tp = match typed(c, &p.file) {
                Ok(tp) => tp,
                Err(e) => return vec![e],
            };
            (0..STREAMS)
                .filter_map(|seed| {
                    let r = audit_run(
                        &tp,
                        &mut Havoc::seeded(seed, -2, 2),
                        RunOptions {
                            fuel: 20_000,
                            trace: false,
                        },
                    );
                    match r {
                        Ok(r) => r.violation.map(|v| format!("{} seed {seed}: {v}", p.name)),
                        Err(e) => Some(format!("{} seed {seed}: {e}", p.name)),
                    }
                })
                .take(1)
                .collect()
        })
        .collect();
    let mut expected_violations = 0;
    for p in c.manifest.programs.iter().filter(|p| p.audit_own.is_some()) {
        let want = p.audit_own.clone().unwrap();
        let src = c.read(&p.file).unwrap();
        let tp = check_program_with(&parse(&src).unwrap(), CheckOptions { permissive: true });
        let Ok(tp) = tp else {
            problems.push(format!("{}: permissive check failed", p.name));
            continue;
        };
        let r = audit_run(
            &tp,
            &mut Havoc::list(vec![]),
            RunOptions {
                fuel: 20_000,
                trace: true,
            },
        );
        match r {
            Ok(r) => {
                let last = r.run.trace.last().map(|e| e.rule);
                match r.violation {
                    Some(v)
                        if v.kind == (ViolationKind::Fraction { own: want.clone() })
                            && last == Some("Rs-Endlft") =>
                    {
                        expected_violations += 1
                    }
                    v => problems.push(format!(
                        "{}: expected own sum {want} after endlft, got {v:?} after {last:?}",
                        p.name
                    )),
                }
            }
            Err(e) => problems.push(format!("{}: {e}", p.name)),
        }
    }
    Outcome::new(
        problems,
        format!(
            "{} safe programs x {STREAMS} streams without violations, {expected_violations} permissive run(s) with the expected ownership sum",
            safe.len()
        ),
    )
}

fn differential(c: &Corpus) -> Outcome {
    let programs: Vec<_> = c
        .manifest
        .programs
        .iter()
        .filter(|p| p.well_typed())
        .collect();
    let opts = CrossOptions {
        streams: STREAMS,
        ..CrossOptions::default()
    };
    let rows: Vec<Result<(String, bool), String>> = programs
        .par_iter()
        .map(|p| {
            let tp = typed(c, &p.file)?;
            let r = crosscheck(&tp, &opts).map_err(|e| format!("{}: {e}", p.name))?;
            if let Some(cx) = &r.counterexample {
                return Err(format!(
                    "{}: inconsistent on havoc {:?}: {:?}",
                    p.name, cx.havoc, cx.divergence
                ));
            }
            if r.source_failed && !(r.explore.fail_reachable && r.explore.witness.is_some()) {
                return Err(format!("{}: source reaches fail, explore does not", p.name));
            }
            match (p.safety, r.explore.fail_reachable) {
                (Some(Safety::Safe), true) => {
                    Err(format!("{}: fail reachable in a safe program", p.name))
                }
                (Some(Safety::Unsafe), false) => {
                    Err(format!("{}: no fail found in an unsafe program", p.name))
                }
                _ => Ok((p.name.clone(), r.source_failed)),
            }
        })
        .collect();
    let mut problems: Vec<String> = rows
        .iter()
        .filter_map(|r| r.as_ref().err().cloned())
        .collect();
    let failing = rows.iter().filter(|r| matches!(r, Ok((_, true)))).count();
    for t in &c.manifest.targets {
        let r = c
            .read(&t.file)
            .map_err(|e| e.to_string())
            .and_then(|s| parse_ml(&s).map_err(|e| e.to_string()))
            .and_then(|m| lower(&m).map_err(|e| e.to_string()))
            .and_then(|p| explore(&p, &ExploreOptions::default()).map_err(|e| e.to_string()));
        match r {
            Ok(r) if r.fail_reachable == (t.safety == Safety::Unsafe) => {}
            Ok(r) => problems.push(format!("{}: fail_reachable = {}", t.name, r.fail_reachable)),
            Err(e) => problems.push(format!("{}: {e}", t.name)),
        }
    }
    Outcome::new(
        problems,
        format!(
            "{} programs x {STREAMS} streams consistent, {failing} with source failures all found by explore, {} target programs as expected",
            programs.len(),
            c.manifest.targets.len()
        ),
    )
}

fn check_property<S: Strategy>(
    name: &str,
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Option<String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&strategy, test)
        .err()
        .map(|e| format!("{name}: {e}"))
}

fn properties() -> Outcome {
    let mut problems = Vec::new();
    problems.extend(check_property(
        "commutativity",
        PROPERTY_CASES,
        pairs::<Own>(),
        |(a, b)| {
            if add_types(&a, &b).ok() != add_types(&b, &a).ok() {
                return Err(TestCaseError::fail(format!("{a} + {b}")));
            }
            Ok(())
        },
    ));
    problems.extend(check_property(
        "split/add round trip",
        PROPERTY_CASES,
        pairs::<Own>(),
        |(a, b)| {
            if let Ok(whole) = add_types(&a, &b) {
                for part in [&a, &b] {
                    match split_type(&whole, part) {
                        Ok(rest) if is_sum(&whole, part, &rest) => {}
                        r => return Err(TestCaseError::fail(format!("{whole} - {part}: {r:?}"))),
                    }
                }
            }
            Ok(())
        },
    ));
    problems.extend(check_property(
        "ownership conservation and well-formedness under end_lifetime",
        PROPERTY_CASES,
        ops(),
        |ops| {
            let mut s = Aliases::new();
            for op in &ops {
                s.apply(op)?;
            }
            while s.lenv.len() > 1 {
                s.apply(&Op::End)?;
            }
            Ok(())
        },
    ));
    let mut runner = TestRunner::deterministic();
    let (d1, d2): (Vec<i64>, Vec<i64>) = (vec![0, 1], (-2..=2).collect());
    let mut non_trivial = 0;
    for _ in 0..MONOTONE_PROGRAMS {
        let prog = program().new_tree(&mut runner).unwrap().current();
        let p = build(&prog);
        let run = |domain: &Vec<i64>| {
            explore(
                &p,
                &ExploreOptions {
                    domain: domain.clone(),
                    ..ExploreOptions::default()
                },
            )
        };
        match (run(&d1), run(&d2)) {
            (Ok(small), Ok(large)) => {
                non_trivial += usize::from(small.fail_reachable);
                if small.fail_reachable && !large.fail_reachable {
                    problems.push(format!("monotonicity: {prog:?}"));
                }
            }
            (r1, r2) => problems.push(format!("monotonicity: {:?} {:?}", r1.err(), r2.err())),
        }
    }
    Outcome::new(
        problems,
        format!(
            "3 algebra properties x {PROPERTY_CASES} cases, domain monotonicity on {MONOTONE_PROGRAMS} programs ({non_trivial} failing over {{0,1}})"
        ),
    )
}

fn expressiveness(c: &Corpus) -> Outcome {
    let mut problems = Vec::new();
    let mut columns = [0usize; 3];
    let mut neither = Vec::new();
    for p in c.manifest.programs.iter().filter(|p| p.benchmark) {
        let col = match (p.consort, p.rusthorn) {
            (true, false) => 0,
            (false, true) => 1,
            (false, false) => 2,
            (true, true) => continue,
        };
        if col == 2 {
            neither.push(p.name.as_str());
        }
        match typed(c, &p.file) {
            Ok(_) => columns[col] += 1,
            Err(e) => problems.push(e),
        }
    }
    if columns.contains(&0) {
        problems.push(format!("empty column: {columns:?}"));
    }
    Outcome::new(
        problems,
        format!(
            "type-checked {} fractional-only, {} borrow-only, {} neither ({})",
            columns[0],
            columns[1],
            columns[2],
            neither.join(", ")
        ),
    )
}

fn main() -> ExitCode {
    let c = match Corpus::load() {
        Ok(c) => c,
        Err(e) => {
            println!("acceptance: cannot load corpus: {e}");
            return ExitCode::FAILURE;
        }
    };
    let criteria: [(&str, u64, &dyn Fn() -> Outcome); 6] = [
        ("typing goldens", 1, &|| typing_goldens(&c)),
        ("translation goldens", 1, &|| translation_goldens(&c)),
        ("ownership audit", 30, &|| audit(&c)),
        ("differential suite", 120, &|| differential(&c)),
        ("type algebra properties", 60, &|| properties()),
        ("expressiveness matrix", 1, &|| expressiveness(&c)),
    ];
    let (mut unexpected, mut passed) = (0, 0);
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let mut o = f();
        let elapsed = t.elapsed();
        let slow = elapsed > Duration::from_secs(*limit);
        if slow {
            o.ok = false;
            o.known = false;
            o.detail = format!("over time limit; {}", o.detail);
        }
        let verdict = match (o.ok, o.known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (recorded in manifest)",
            (false, false) => "FAIL",
        };
        if o.ok {
            passed += 1;
        } else if !o.known {
            unexpected += 1;
        }
        let timing = format!("{:.2}s, limit {limit}s", elapsed.as_secs_f64());
        println!(
            "criterion {} {name}: {verdict} [{timing}] {}",
            i + 1,
            o.detail
        );
    }
    println!(
        "acceptance: {passed} of {} criteria pass, {unexpected} unexpected failures",
        criteria.len()
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
