//! Small-step interpreter for source configurations `⟨H, R, F̄, e⟩`.
//!
//! The register is kept per frame: a call pushes a frame binding the
//! callee's parameters, which is the substitution-based rule up to renaming.

pub mod audit;
mod havoc;

use std::fmt;

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

pub use havoc::{Havoc, HavocSpec};

use crate::source::{pretty_expr, Expr, ExprKind, NodeId, Pattern, Program, Rhs};

pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", content = "value")]
pub enum Value {
    Int(i64),
    Addr(usize),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Addr(a) => write!(f, "@{a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "value")]
pub enum Status {
    Running,
    Fail,
    AliasFail,
    Done(i64),
    FuelExhausted,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Running => f.write_str("Running"),
            Status::Fail => f.write_str("Fail"),
            Status::AliasFail => f.write_str("AliasFail"),
            Status::Done(v) => write!(f, "Done({v})"),
            Status::FuelExhausted => f.write_str("FuelExhausted"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("stuck at node {node}: {reason}")]
pub struct StuckError {
    pub node: NodeId,
    pub reason: String,
}

/// A suspended `let pat = [] in body`.
#[derive(Debug, Clone)]
pub struct Pending<'p> {
    pub pat: &'p Pattern,
    pub body: &'p Expr,
    pub call: NodeId,
}

#[derive(Debug, Clone)]
pub struct Frame<'p> {
    pub func: Option<String>,
    pub regs: IndexMap<String, Value>,
    /// Set on every frame but the top one.
    pub pending: Option<Pending<'p>>,
}

#[derive(Debug, Clone)]
pub struct Config<'p> {
    pub heap: Vec<i64>,
    pub frames: Vec<Frame<'p>>,
    pub cur: &'p Expr,
    pub status: Status,
}

/// One executed step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Event {
    pub rule: &'static str,
    pub node: NodeId,
    /// Frame depth the node ran in (0 is main).
    pub depth: usize,
    /// The value bound by a `let`, when it is an integer.
    pub value: Option<i64>,
    /// Values held by reference variables of the frame, read before the step.
    pub refs: Vec<(String, i64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunResult {
    pub status: Status,
    pub steps: u64,
    pub havoc_used: Vec<i64>,
    pub trace: Vec<Event>,
}

fn stuck(e: &Expr, reason: impl Into<String>) -> StuckError {
    StuckError {
        node: e.id,
        reason: reason.into(),
    }
}

impl<'p> Config<'p> {
    pub fn initial(p: &'p Program) -> Self {
        Config {
            heap: Vec::new(),
            frames: vec![Frame {
                func: None,
                regs: IndexMap::new(),
                pending: None,
            }],
            cur: &p.main,
            status: Status::Running,
        }
    }

    pub fn depth(&self) -> usize {
        self.frames.len() - 1
    }

    pub fn top(&self) -> &Frame<'p> {
        self.frames.last().unwrap()
    }

    fn top_mut(&mut self) -> &mut Frame<'p> {
        self.frames.last_mut().unwrap()
    }

    fn get(&self, x: &str) -> Result<Value, StuckError> {
        self.top()
            .regs
            .get(x)
            .copied()
            .ok_or_else(|| stuck(self.cur, format!("`{x}` is unbound")))
    }

    fn int(&self, x: &str) -> Result<i64, StuckError> {
        match self.get(x)? {
            Value::Int(n) => Ok(n),
            Value::Addr(_) => Err(stuck(self.cur, format!("`{x}` holds an address"))),
        }
    }

    fn addr(&self, x: &str) -> Result<usize, StuckError> {
        match self.get(x)? {
            Value::Addr(a) if a < self.heap.len() => Ok(a),
            _ => Err(stuck(
                self.cur,
                format!("`{x}` does not hold a live address"),
            )),
        }
    }

    fn arith(&self, a: &crate::source::Arith) -> Result<i64, StuckError> {
        use crate::source::Arith;
        match a {
            Arith::Int(n) => Ok(*n),
            Arith::Var(x) => self.int(x),
            Arith::Bin(op, l, r) => Ok(op.apply(self.arith(l)?, self.arith(r)?)),
        }
    }

    /// Heap values behind the current frame's reference variables.
    pub fn ref_values(&self) -> Vec<(String, i64)> {
        self.top()
            .regs
            .iter()
            .filter_map(|(x, v)| match v {
                Value::Addr(a) => self.heap.get(*a).map(|h| (x.clone(), *h)),
                Value::Int(_) => None,
            })
            .collect()
    }

    /// Performs one step. Returns the rule applied and the integer bound, if
    /// any.
    pub fn step(
        &mut self,
        p: &'p Program,
        havoc: &mut Havoc,
    ) -> Result<(&'static str, Option<i64>), StuckError> {
        debug_assert_eq!(self.status, Status::Running);
        let e = self.cur;
        match &e.kind {
            ExprKind::Fail => {
                self.status = Status::Fail;
                Ok(("Rs-Fail", None))
            }
            ExprKind::Var(x) => self.ret(e, std::slice::from_ref(x)),
            ExprKind::Tuple(xs) => self.ret(e, xs),
            ExprKind::Let { pat, rhs, body } => {
                let one = || match pat {
                    Pattern::One(x) => Ok(x.clone()),
                    Pattern::Tuple(_) => Err(stuck(e, "tuple pattern without a call")),
                };
                let (rule, v) = match rhs {
                    Rhs::Arith(a) => ("Rs-Arith", Value::Int(self.arith(a)?)),
                    Rhs::Havoc => ("Rs-Havoc", Value::Int(havoc.next())),
                    Rhs::Alias { y, .. } => ("Rs-Let", self.get(y)?),
                    Rhs::MkRef { y, .. } => {
                        let n = self.int(y)?;
                        self.heap.push(n);
                        ("Rs-MkRef", Value::Addr(self.heap.len() - 1))
                    }
                    Rhs::Deref(y) => {
                        let a = self.addr(y)?;
                        ("Rs-Deref", Value::Int(self.heap[a]))
                    }
                    Rhs::Call { f, args, .. } => {
                        let def = p
                            .fun(f)
                            .ok_or_else(|| stuck(e, format!("no function `{f}`")))?;
                        let mut regs = IndexMap::new();
                        for (prm, a) in def.params.iter().zip(args) {
                            regs.insert(prm.name.clone(), self.get(a)?);
                        }
                        self.top_mut().pending = Some(Pending {
                            pat,
                            body,
                            call: e.id,
                        });
                        self.frames.push(Frame {
                            func: Some(f.clone()),
                            regs,
                            pending: None,
                        });
                        self.cur = &def.body;
                        return Ok(("Rs-Call", None));
                    }
                };
                self.top_mut().regs.insert(one()?, v);
                self.cur = body;
                let shown = match v {
                    Value::Int(n) => Some(n),
                    Value::Addr(_) => None,
                };
                Ok((rule, shown))
            }
            ExprKind::Assign { x, y, cont } => {
                let a = self.addr(x)?;
                // heap cells hold integers only
                let n = self.int(y)?;
                self.heap[a] = n;
                self.cur = cont;
                Ok(("Rs-Assign", None))
            }
            ExprKind::IfZ { x, then, els } => {
                if self.int(x)? == 0 {
                    self.cur = then;
                    Ok(("Rs-IfTrue", None))
                } else {
                    self.cur = els;
                    Ok(("Rs-IfFalse", None))
                }
            }
            ExprKind::Alias { x, y, cont, .. } => {
                if self.get(x)? == self.get(y)? {
                    self.cur = cont;
                    Ok(("Rs-Alias", None))
                } else {
                    self.status = Status::AliasFail;
                    Ok(("Rs-AliasFail", None))
                }
            }
            ExprKind::NewLft { body, .. } => {
                self.cur = body;
                Ok(("Rs-Newlft", None))
            }
            ExprKind::EndLft { cont, .. } => {
                self.cur = cont;
                Ok(("Rs-Endlft", None))
            }
        }
    }

    fn ret(
        &mut self,
        e: &'p Expr,
        xs: &[String],
    ) -> Result<(&'static str, Option<i64>), StuckError> {
        let vals: Vec<Value> = xs.iter().map(|x| self.get(x)).collect::<Result<_, _>>()?;
        if self.frames.len() == 1 {
            match vals.as_slice() {
                [Value::Int(n)] => {
                    self.status = Status::Done(*n);
                    return Ok(("Rs-Var", Some(*n)));
                }
                _ => return Err(stuck(e, "main must return one integer")),
            }
        }
        self.frames.pop();
        let caller = self.top_mut();
        let pending = caller
            .pending
            .take()
            .ok_or_else(|| stuck(e, "no return context"))?;
        let names = pending.pat.names();
        if names.len() != vals.len() {
            return Err(stuck(e, "return arity does not match the pattern"));
        }
        for (x, v) in names.into_iter().zip(vals) {
            caller.regs.insert(x.clone(), v);
        }
        self.cur = pending.body;
        Ok(("Rs-Var", None))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub fuel: u64,
    pub trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            fuel: DEFAULT_FUEL,
            trace: false,
        }
    }
}

/// Runs from `⟨∅, ∅, ·, main⟩` until a terminal status or the fuel runs out.
pub fn run(p: &Program, havoc: &mut Havoc, opts: RunOptions) -> Result<RunResult, StuckError> {
    let mut ok = |_: &Config| Ok::<(), std::convert::Infallible>(());
    run_observed(p, havoc, opts, &mut ok).map(|(r, _)| r)
}

/// Like [`run`], calling `observe` with each configuration just before it
/// steps. An observer error stops the run and is returned alongside the
/// partial result.
pub fn run_observed<'p, E>(
    p: &'p Program,
    havoc: &mut Havoc,
    opts: RunOptions,
    observe: &mut dyn FnMut(&Config<'p>) -> Result<(), E>,
) -> Result<(RunResult, Option<E>), StuckError> {
    let mut cfg = Config::initial(p);
    let mut trace = Vec::new();
    let mut steps = 0;
    let start = havoc.used().len();
    let mut failure = None;
    while cfg.status == Status::Running {
        if steps >= opts.fuel {
            cfg.status = Status::FuelExhausted;
            break;
        }
        if let Err(err) = observe(&cfg) {
            failure = Some(err);
            break;
        }
        let node = cfg.cur.id;
        let depth = cfg.depth();
        let refs = if opts.trace {
            cfg.ref_values()
        } else {
            Vec::new()
        };
        let (rule, value) = cfg.step(p, havoc)?;
        steps += 1;
        if opts.trace {
            trace.push(Event {
                rule,
                node,
                depth,
                value,
                refs,
            });
        }
    }
    let result = RunResult {
        status: cfg.status,
        steps,
        havoc_used: havoc.used()[start..].to_vec(),
        trace,
    };
    Ok((result, failure))
}

/// `rule  redex` for `--trace`.
pub fn describe(p: &Program, ev: &Event) -> String {
    let mut redex = String::new();
    for body in p.bodies() {
        body.walk(&mut |e| {
            if e.id == ev.node && redex.is_empty() {
                redex = pretty_expr(e)
                    .lines()
                    .next()
                    .unwrap_or("")
                    .trim()
                    .to_string();
            }
        });
    }
    format!("{:<13}{}", ev.rule, redex)
}
