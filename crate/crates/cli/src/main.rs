use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bfo::check::{check_program_with, dump_env, CheckOptions, TypedProgram};
use bfo::corpus::{Corpus, Safety};
use bfo::crosscheck::{crosscheck, CrossOptions};
use bfo::interp::audit::audit_run;
use bfo::interp::{describe, run, Havoc, HavocSpec, RunOptions, Status};
use bfo::source::parse;
use bfo::target::{emit, explore, lower, parse_ml, ExploreOptions, Profile, TargetProgram};
use bfo::translate::{translate_program, TranslateOptions};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

/// Version of every `--json` document.
const JSON_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "bfo",
    version,
    about = "Borrowable fractional ownership toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Type-check a source program.
    Check(Opts),
    /// Run a source program.
    RunSource(Opts),
    /// Search a target program (`.ml`, or the translation of a source
    /// program) for a reachable failure.
    RunTarget(Opts),
    /// Translate a source program into the target language.
    Translate(Opts),
    /// Run a source program, checking ownership invariants at every step.
    Audit(Opts),
    /// Differential test of a source program against its translation.
    Crosscheck(Opts),
    /// Check every corpus program against its manifest entry.
    Corpus(CorpusOpts),
}

#[derive(Args, Debug, Clone)]
struct Opts {
    file: PathBuf,
    /// Comma-separated havoc values, consumed in order.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true, conflicts_with = "seed")]
    havoc: Option<HavocList>,
    /// Seed for havoc values drawn from the domain.
    #[arg(long)]
    seed: Option<u64>,
    /// Range of nondeterministic values, `LO..HI` inclusive.
    #[arg(long, value_parser = parse_domain, allow_hyphen_values = true, default_value = "-2..2")]
    domain: (i64, i64),
    /// Step limit for source runs.
    #[arg(long, default_value_t = 100_000)]
    fuel: u64,
    /// Call depth limit for target exploration.
    #[arg(long, default_value_t = 64)]
    depth: usize,
    /// Step budget for target exploration.
    #[arg(long, default_value_t = 400_000)]
    budget: u64,
    /// Number of havoc streams for crosscheck.
    #[arg(long, default_value_t = 100)]
    streams: u64,
    #[arg(long, value_parser = parse_profile, default_value = "ml")]
    emit: Profile,
    #[arg(long)]
    json: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Print every executed step.
    #[arg(long)]
    trace: bool,
    /// Print the type environment after each line.
    #[arg(long)]
    dump_env: bool,
    #[arg(long)]
    no_peephole: bool,
    /// Skip well-formedness checks so ill-typed programs can be audited.
    #[arg(long)]
    audit_only: bool,
}

#[derive(Args, Debug, Clone)]
struct CorpusOpts {
    /// Corpus directory (default: `$BFO_CORPUS` or the bundled corpus).
    dir: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    streams: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone)]
struct HavocList(Vec<i64>);

fn parse_list(s: &str) -> Result<HavocList, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<i64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()
        .map(HavocList)
}

fn parse_domain(s: &str) -> Result<(i64, i64), String> {
    let (lo, hi) = s.split_once("..").ok_or("expected LO..HI")?;
    let lo: i64 = lo.trim().parse().map_err(|e| format!("`{lo}`: {e}"))?;
    let hi: i64 = hi.trim().parse().map_err(|e| format!("`{hi}`: {e}"))?;
    if lo > hi {
        return Err("empty domain".into());
    }
    Ok((lo, hi))
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    s.parse::<Profile>().map_err(|e| e.to_string())
}

#[derive(Debug, Error)]
enum Fail {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Semantic(String),
}

impl Fail {
    fn code(&self) -> u8 {
        match self {
            Fail::Semantic(_) => 1,
            Fail::Io(_) => 2,
        }
    }
}

/// What a command prints and how it exits.
struct Outcome {
    text: String,
    json: Value,
    ok: bool,
}

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail::Io(format!("{}: {e}", path.display())))
}

fn file_name(path: &Path) -> String {
    path.display().to_string()
}

fn load_typed(o: &Opts) -> Result<(String, TypedProgram), Fail> {
    let text = read(&o.file)?;
    let name = file_name(&o.file);
    let p = parse(&text).map_err(|e| Fail::Semantic(format!("{name}:{e}")))?;
    let tp = check_program_with(
        &p,
        CheckOptions {
            permissive: o.audit_only,
        },
    )
    .map_err(|e| Fail::Semantic(e.render(&name)))?;
    Ok((text, tp))
}

fn havoc(o: &Opts) -> Havoc {
    match (&o.havoc, o.seed) {
        (Some(v), _) => Havoc::new(&HavocSpec::List(v.0.clone())),
        (None, seed) => Havoc::new(&HavocSpec::Seed {
            seed: seed.unwrap_or(0),
            lo: o.domain.0,
            hi: o.domain.1,
        }),
    }
}

fn explore_opts(o: &Opts) -> ExploreOptions {
    ExploreOptions {
        domain: (o.domain.0..=o.domain.1).collect(),
        depth: o.depth,
        budget: o.budget,
    }
}

fn translate_opts(o: &Opts) -> TranslateOptions {
    TranslateOptions {
        peephole: !o.no_peephole,
        ..TranslateOptions::default()
    }
}

fn cmd_check(o: &Opts) -> Result<Outcome, Fail> {
    let text = read(&o.file)?;
    let name = file_name(&o.file);
    let p = parse(&text).map_err(|e| Fail::Semantic(format!("{name}:{e}")))?;
    let tp = match check_program_with(
        &p,
        CheckOptions {
            permissive: o.audit_only,
        },
    ) {
        Ok(tp) => tp,
        Err(e) => {
            return Ok(Outcome {
                text: e.render(&name),
                json: json!({
                    "ok": false,
                    "error": {
                        "code": e.code(),
                        "kind": e.kind.name(),
                        "line": e.pos.line,
                        "column": e.pos.col,
                        "message": e.kind.to_string(),
                    }
                }),
                ok: false,
            })
        }
    };
    let mut out = String::new();
    for w in &tp.warnings {
        let _ = writeln!(out, "{name}:{}: warning: {}", w.pos, w.message);
    }
    let envs = dump_env(&tp);
    if o.dump_env {
        let lines: Vec<&str> = text.lines().collect();
        let shown: Vec<(&str, &str)> = envs
            .iter()
            .map(|(l, env)| {
                let src = lines.get(*l as usize - 1).copied().unwrap_or("");
                let src = src.split("//").next().unwrap_or("").trim_end();
                (src, env.as_str())
            })
            .collect();
        let width = shown
            .iter()
            .map(|(s, _)| s.chars().count())
            .max()
            .unwrap_or(0);
        for (src, env) in shown {
            let pad = width - src.chars().count();
            if env.is_empty() {
                let _ = writeln!(out, "{src}");
            } else {
                let _ = writeln!(out, "{src}{:pad$}  // {env}", "");
            }
        }
    }
    let _ = write!(out, "{name}: ok");
    let env_json: Vec<Value> = envs
        .iter()
        .map(|(l, e)| json!({"line": l, "env": e}))
        .collect();
    Ok(Outcome {
        text: out,
        json: json!({
            "ok": true,
            "functions": tp.sigs.keys().collect::<Vec<_>>(),
            "warnings": tp.warnings.iter().map(|w| w.message.clone()).collect::<Vec<_>>(),
            "env": env_json,
        }),
        ok: true,
    })
}

fn cmd_run_source(o: &Opts) -> Result<Outcome, Fail> {
    let text = read(&o.file)?;
    let name = file_name(&o.file);
    let p = parse(&text).map_err(|e| Fail::Semantic(format!("{name}:{e}")))?;
    let r = run(
        &p,
        &mut havoc(o),
        RunOptions {
            fuel: o.fuel,
            trace: o.trace,
        },
    )
    .map_err(|e| Fail::Semantic(format!("{name}: {e}")))?;
    let mut out = String::new();
    for ev in &r.trace {
        let _ = writeln!(out, "{}{}", "  ".repeat(ev.depth), describe(&p, ev));
    }
    let _ = write!(out, "{} after {} steps", r.status, r.steps);
    if !r.havoc_used.is_empty() {
        let _ = write!(out, " (havoc {})", join(&r.havoc_used));
    }
    let trace: Vec<Value> = r
        .trace
        .iter()
        .map(|ev| json!({"rule": ev.rule, "node": ev.node, "depth": ev.depth, "value": ev.value}))
        .collect();
    Ok(Outcome {
        text: out,
        json: json!({
            "status": r.status,
            "steps": r.steps,
            "havoc": r.havoc_used,
            "trace": trace,
        }),
        ok: r.status != Status::Fail,
    })
}

fn join(v: &[i64]) -> String {
    v.iter().map(i64::to_string).collect::<Vec<_>>().join(",")
}

fn load_target(o: &Opts) -> Result<TargetProgram, Fail> {
    if o.file.extension().is_some_and(|e| e == "ml") {
        let text = read(&o.file)?;
        let name = file_name(&o.file);
        let ml = parse_ml(&text).map_err(|e| Fail::Semantic(format!("{name}: {e}")))?;
        lower(&ml).map_err(|e| Fail::Semantic(format!("{name}: {e}")))
    } else {
        let (_, tp) = load_typed(o)?;
        translate_program(&tp, translate_opts(o)).map_err(|e| Fail::Semantic(e.to_string()))
    }
}

fn cmd_run_target(o: &Opts) -> Result<Outcome, Fail> {
    let t = load_target(o)?;
    let r = explore(&t, &explore_opts(o)).map_err(|e| Fail::Semantic(e.to_string()))?;
    let mut out = String::new();
    if let Some(w) = &r.witness {
        if o.trace {
            for s in &w.steps {
                let _ = writeln!(out, "{s}");
            }
        }
    }
    let verdict = if r.fail_reachable {
        "Fail reachable"
    } else if r.complete {
        "no Fail reachable"
    } else {
        "no Fail found within bounds"
    };
    let _ = write!(
        out,
        "{verdict}: {} paths ({} done, {} infeasible, {} bounded), {} steps, depth {}",
        r.paths, r.done, r.infeasible, r.bounded, r.steps, r.depth_reached
    );
    if let Some(w) = &r.witness {
        let _ = write!(out, "; witness of {} steps", w.steps.len());
    }
    Ok(Outcome {
        text: out,
        json: serde_json::to_value(&r).unwrap_or(Value::Null),
        ok: !r.fail_reachable,
    })
}

fn cmd_translate(o: &Opts) -> Result<Outcome, Fail> {
    let (_, tp) = load_typed(o)?;
    let opts = TranslateOptions {
        sync: false,
        ..translate_opts(o)
    };
    let t = translate_program(&tp, opts).map_err(|e| Fail::Semantic(e.to_string()))?;
    let text = emit(&t, o.emit);
    Ok(Outcome {
        json: json!({"profile": format!("{:?}", o.emit).to_lowercase(), "text": text}),
        text,
        ok: true,
    })
}

fn cmd_audit(o: &Opts) -> Result<Outcome, Fail> {
    let (_, tp) = load_typed(o)?;
    let r = audit_run(
        &tp,
        &mut havoc(o),
        RunOptions {
            fuel: o.fuel,
            trace: false,
        },
    )
    .map_err(|e| Fail::Semantic(e.to_string()))?;
    let text = match &r.violation {
        Some(v) => format!("violation: {v}"),
        None => format!(
            "{} after {} steps: no violations in {} checks, max ownership {}",
            r.run.status, r.run.steps, r.checks, r.max_own
        ),
    };
    Ok(Outcome {
        text,
        json: json!({
            "status": r.run.status,
            "steps": r.run.steps,
            "checks": r.checks,
            "max_own": r.max_own,
            "violation": r.violation,
        }),
        ok: r.violation.is_none(),
    })
}

fn cmd_crosscheck(o: &Opts) -> Result<Outcome, Fail> {
    let (_, tp) = load_typed(o)?;
    let opts = CrossOptions {
        streams: o.streams,
        first_seed: o.seed.unwrap_or(0),
        lo: o.domain.0,
        hi: o.domain.1,
        fuel: o.fuel,
        explore: explore_opts(o),
        shrink: true,
    };
    let r = crosscheck(&tp, &opts).map_err(|e| Fail::Semantic(e.to_string()))?;
    let mut out = String::new();
    for s in &r.streams {
        let verdict = if s.consistent {
            "consistent"
        } else {
            "INCONSISTENT"
        };
        let _ = writeln!(
            out,
            "seed {}: source {}, target {}, {verdict}",
            s.seed, s.source_status, s.target_status
        );
    }
    let _ = writeln!(
        out,
        "explore: fail_reachable={} complete={} paths={}",
        r.explore.fail_reachable, r.explore.complete, r.explore.paths
    );
    if r.missed_failure() {
        let _ = writeln!(out, "a source run failed but exploration found no Fail");
    }
    if let Some(c) = &r.counterexample {
        let _ = writeln!(
            out,
            "counterexample: havoc [{}], source {}",
            join(&c.havoc),
            c.source_status
        );
        if let Some(d) = &c.divergence {
            let _ = writeln!(out, "  {:?} at step {}: {}", d.kind, d.step, d.message);
        }
    }
    let _ = write!(
        out,
        "{}: {} of {} streams consistent",
        if r.passed { "pass" } else { "FAIL" },
        r.streams.len() - r.inconsistent(),
        r.streams.len()
    );
    Ok(Outcome {
        text: out,
        json: serde_json::to_value(&r).unwrap_or(Value::Null),
        ok: r.passed,
    })
}

fn cmd_corpus(o: &CorpusOpts) -> Result<Outcome, Fail> {
    let corpus = match &o.dir {
        Some(d) => Corpus::load_from(d),
        None => Corpus::load(),
    }
    .map_err(|e| Fail::Io(e.to_string()))?;
    let rows: Vec<(String, bool, String)> = corpus
        .manifest
        .programs
        .par_iter()
        .map(|entry| {
            let verdict = || -> Result<String, String> {
                let text = corpus.read(&entry.file).map_err(|e| e.to_string())?;
                let p = parse(&text).map_err(|e| e.to_string())?;
                let tp = match bfo::check::check_program(&p) {
                    Ok(tp) if entry.well_typed() => tp,
                    Ok(_) => return Err(format!("type-checks, expected {}", entry.check)),
                    Err(e) if e.kind.name() == entry.check => {
                        return Ok(format!("rejected ({})", entry.check))
                    }
                    Err(e) => return Err(e.to_string()),
                };
                let opts = CrossOptions {
                    streams: o.streams,
                    ..CrossOptions::default()
                };
                let r = crosscheck(&tp, &opts).map_err(|e| e.to_string())?;
                if !r.passed {
                    return Err(format!("{} inconsistent streams", r.inconsistent()));
                }
                match (entry.safety, r.explore.fail_reachable) {
                    (Some(Safety::Safe), true) => Err("Fail reachable in a safe program".into()),
                    (Some(Safety::Unsafe), false) => {
                        Err("no Fail found in an unsafe program".into())
                    }
                    _ => Ok(format!("ok, fail_reachable={}", r.explore.fail_reachable)),
                }
            };
            match verdict() {
                Ok(m) => (entry.name.clone(), true, m),
                Err(m) => (entry.name.clone(), false, m),
            }
        })
        .collect();
    let mut out = String::new();
    for (name, ok, msg) in &rows {
        let _ = writeln!(out, "{} {name}: {msg}", if *ok { "pass" } else { "FAIL" });
    }
    let passed = rows.iter().filter(|r| r.1).count();
    let _ = write!(out, "{passed} of {} programs as expected", rows.len());
    Ok(Outcome {
        text: out,
        json: json!({
            "programs": rows.iter().map(|(n, ok, m)| json!({"name": n, "ok": ok, "message": m})).collect::<Vec<_>>(),
        }),
        ok: passed == rows.len(),
    })
}

fn write_out(text: &str, path: Option<&Path>) -> Result<(), Fail> {
    match path {
        Some(p) => {
            let mut body = text.to_string();
            if !body.ends_with('\n') {
                body.push('\n');
            }
            std::fs::write(p, body).map_err(|e| Fail::Io(format!("{}: {e}", p.display())))
        }
        None => {
            use std::io::Write;
            // A closed pipe (`bfo .. | head`) is not an error.
            let _ = writeln!(std::io::stdout().lock(), "{}", text.trim_end_matches('\n'));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, json, output, result) = match &cli.command {
        Command::Check(o) => ("check", o.json, o.output.clone(), cmd_check(o)),
        Command::RunSource(o) => ("run-source", o.json, o.output.clone(), cmd_run_source(o)),
        Command::RunTarget(o) => ("run-target", o.json, o.output.clone(), cmd_run_target(o)),
        Command::Translate(o) => ("translate", o.json, o.output.clone(), cmd_translate(o)),
        Command::Audit(o) => ("audit", o.json, o.output.clone(), cmd_audit(o)),
        Command::Crosscheck(o) => ("crosscheck", o.json, o.output.clone(), cmd_crosscheck(o)),
        Command::Corpus(o) => ("corpus", o.json, None, cmd_corpus(o)),
    };
    let (text, code) = match result {
        Ok(out) => {
            let text = if json {
                let mut doc = json!({"version": JSON_VERSION, "command": name});
                if let (Value::Object(d), Value::Object(body)) = (&mut doc, out.json) {
                    d.extend(body);
                } else {
                    doc["result"] = Value::Null;
                }
                serde_json::to_string_pretty(&doc).expect("JSON values serialize")
            } else {
                out.text
            };
            (text, if out.ok { 0 } else { 1 })
        }
        Err(e) => {
            if json {
                let doc = json!({"version": JSON_VERSION, "command": name, "error": e.to_string(), "exit": e.code()});
                println!(
                    "{}",
                    serde_json::to_string_pretty(&doc).expect("JSON values serialize")
                );
            } else {
                eprintln!("error: {e}");
            }
            return ExitCode::from(e.code());
        }
    };
    if let Err(e) = write_out(&text, output.as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(e.code());
    }
    ExitCode::from(code)
}
