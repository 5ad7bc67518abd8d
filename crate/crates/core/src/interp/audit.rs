//! Ownership audit: at every configuration, the typed view `Γ_tot = Γ + Δ`
//! of all frames must give each address total ownership at most 1 and
//! satisfy `BBy(α) ≤ own(α) + BFrm(α)` for every lifetime.
//!
//! Types come from the checker's per-node snapshots. Lifetime names are
//! per activation, so each frame maps its names to global instances, and
//! residues discarded at returns (Δ) are kept with their addresses.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::{run_observed, Config, Havoc, RunOptions, RunResult, StuckError, Value};
use crate::check::{Step, TypedProgram};
use crate::fraction::Fraction;
use crate::lifetime::Lft;
use crate::metrics::ownership_metrics;
use crate::source::{ExprKind, NodeId, Rhs};
use crate::{Own, OwnType};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditViolation {
    /// Number of steps executed before the offending configuration.
    pub step: u64,
    pub node: NodeId,
    pub address: usize,
    pub kind: ViolationKind,
    /// `var: type` for every binding at the address, residues marked `Δ`.
    pub holders: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    /// Total ownership above 1.
    Fraction { own: String },
    /// `BBy(α) > own(α) + BFrm(α)`.
    Borrow {
        lft: String,
        bby: String,
        own: String,
        bfrm: String,
    },
}

impl fmt::Display for AuditViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::Fraction { own } => write!(
                f,
                "step {}: ownership sum at address @{} is {own} > 1",
                self.step, self.address
            )?,
            ViolationKind::Borrow { lft, bby, own, bfrm } => write!(
                f,
                "step {}: at address @{}, BBy({lft}) = {bby} exceeds own({lft}) + BFrm({lft}) = {own} + {bfrm}",
                self.step, self.address
            )?,
        }
        write!(f, " [{}]", self.holders.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuditError {
    #[error(transparent)]
    Stuck(#[from] StuckError),
    #[error("no typing evidence for node {0}")]
    MissingEvidence(NodeId),
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub run: RunResult,
    pub checks: u64,
    /// Largest per-address ownership sum seen.
    pub max_own: String,
    pub violation: Option<AuditViolation>,
}

type Entry = (OwnType, usize, String);

struct Auditor<'t> {
    tp: &'t TypedProgram,
    /// Per frame: local lifetime name to global instance.
    lsub: Vec<HashMap<Lft, Lft>>,
    /// Typed entries of suspended callers by address, tagged with the frame
    /// depth. Frames suspend and resume in stack order, so each address's
    /// list is also in stack order.
    suspended: HashMap<usize, Vec<(usize, Entry)>>,
    suspended_addrs: Vec<Vec<usize>>,
    /// Residues discarded at returns (Δ).
    delta: HashMap<usize, Vec<Entry>>,
    /// Addresses whose entries changed outside the active frame.
    dirty: HashSet<usize>,
    fresh: usize,
    checks: u64,
    max_own: Own,
}

fn global(map: &HashMap<Lft, Lft>, t: &OwnType) -> OwnType {
    t.subst(&|l| map.get(l).cloned().unwrap_or_else(|| l.clone()))
}

enum Stop {
    Violation(AuditViolation),
    Missing(NodeId),
}

impl<'t> Auditor<'t> {
    fn new(tp: &'t TypedProgram) -> Self {
        Auditor {
            tp,
            lsub: vec![HashMap::new()],
            suspended: HashMap::new(),
            suspended_addrs: Vec::new(),
            delta: HashMap::new(),
            dirty: HashSet::new(),
            fresh: 0,
            checks: 0,
            max_own: Own::from_ratio(0, 1),
        }
    }

    fn evidence(&self, id: NodeId) -> Result<&'t crate::check::NodeInfo, Stop> {
        self.tp.nodes.get(&id).ok_or(Stop::Missing(id))
    }

    /// Reference entries of the frame at `depth`, typed as at `node`.
    fn frame_entries(
        &self,
        cfg: &Config,
        depth: usize,
        node: NodeId,
        skip: &[String],
    ) -> Result<Vec<Entry>, Stop> {
        let info = self.evidence(node)?;
        let frame = &cfg.frames[depth];
        let mut out = Vec::new();
        for (x, t) in info.before.tenv.iter() {
            if !t.is_ref() || skip.contains(x) {
                continue;
            }
            if let Some(Value::Addr(a)) = frame.regs.get(x) {
                out.push((global(&self.lsub[depth], t), *a, format!("{x}#{depth}")));
            }
        }
        Ok(out)
    }

    fn call_args(&self, call: NodeId) -> Vec<String> {
        let mut args = Vec::new();
        for body in self.tp.program.bodies() {
            body.walk(&mut |e| {
                if e.id == call {
                    if let ExprKind::Let {
                        rhs: Rhs::Call { args: a, .. },
                        ..
                    } = &e.kind
                    {
                        args = a.clone();
                    }
                }
            });
        }
        args
    }

    fn check(&mut self, cfg: &Config, step: u64) -> Result<(), Stop> {
        self.checks += 1;
        let top = self.frame_entries(cfg, cfg.depth(), cfg.cur.id, &[])?;
        let mut addrs: Vec<usize> = top.iter().map(|(_, a, _)| *a).collect();
        addrs.extend(self.dirty.drain());
        addrs.sort_unstable();
        addrs.dedup();
        for addr in addrs {
            let mut entries: Vec<&Entry> = Vec::new();
            if let Some(v) = self.suspended.get(&addr) {
                entries.extend(v.iter().map(|(_, e)| e));
            }
            entries.extend(top.iter().filter(|(_, a, _)| *a == addr));
            if let Some(v) = self.delta.get(&addr) {
                entries.extend(v.iter());
            }
            let m = ownership_metrics(entries.iter().map(|(t, a, _)| (t, Some(a))), &addr);
            if m.own > self.max_own {
                self.max_own = m.own.clone();
            }
            let kind = if !m.fraction_consistent() {
                Some(ViolationKind::Fraction {
                    own: m.own.pretty(),
                })
            } else {
                m.borrow_violations()
                    .first()
                    .map(|l| ViolationKind::Borrow {
                        lft: l.to_string(),
                        bby: m.bby(l).pretty(),
                        own: m.own_at(l).pretty(),
                        bfrm: m.bfrm(l).pretty(),
                    })
            };
            if let Some(kind) = kind {
                return Err(Stop::Violation(AuditViolation {
                    step,
                    node: cfg.cur.id,
                    address: addr,
                    kind,
                    holders: entries
                        .iter()
                        .map(|(t, _, x)| format!("{x}: {t}"))
                        .collect(),
                }));
            }
        }
        Ok(())
    }

    /// Shadow bookkeeping for the step `cfg` is about to take.
    fn advance(&mut self, cfg: &Config) -> Result<(), Stop> {
        let e = cfg.cur;
        let d = cfg.depth();
        match &e.kind {
            ExprKind::NewLft { lft, .. } => {
                self.fresh += 1;
                let g = Lft(format!("{}#{}", lft, self.fresh));
                self.lsub[d].insert(lft.clone(), g);
            }
            ExprKind::EndLft { lft, .. } => {
                let g = self.lsub[d].remove(lft).unwrap_or_else(|| lft.clone());
                for (addr, v) in self.delta.iter_mut() {
                    let before = v.len();
                    let mut touched = false;
                    *v = std::mem::take(v)
                        .into_iter()
                        .filter(|(t, _, _)| t.lft() != Some(&g))
                        .map(|(t, a, x)| {
                            touched |= t.lend_lft() == Some(&g);
                            (t.lift(&g), a, x)
                        })
                        .collect();
                    if touched || v.len() != before {
                        self.dirty.insert(*addr);
                    }
                }
            }
            ExprKind::Let {
                rhs: Rhs::Call { f, .. },
                ..
            } => {
                let info = self.evidence(e.id)?;
                let Step::Call { inst, .. } = &info.step else {
                    return Err(Stop::Missing(e.id));
                };
                let args = self.call_args(e.id);
                let entries = self.frame_entries(cfg, d, e.id, &args)?;
                let mut addrs = Vec::new();
                for entry in entries {
                    addrs.push(entry.1);
                    self.dirty.insert(entry.1);
                    self.suspended.entry(entry.1).or_default().push((d, entry));
                }
                self.suspended_addrs.push(addrs);
                let sig = &self.tp.sigs[f];
                let map = sig
                    .lfts
                    .iter()
                    .zip(inst)
                    .map(|(l, i)| {
                        let g = self.lsub[d].get(i).cloned().unwrap_or_else(|| i.clone());
                        (l.clone(), g)
                    })
                    .collect();
                self.lsub.push(map);
            }
            ExprKind::Var(_) | ExprKind::Tuple(_) if d > 0 => {
                let info = self.evidence(e.id)?;
                if let Step::Return { residue, .. } = &info.step {
                    let frame = cfg.top();
                    for (x, t) in residue.iter() {
                        if let Some(Value::Addr(a)) = frame.regs.get(x) {
                            let entry = (global(&self.lsub[d], t), *a, format!("Δ {x}#{d}"));
                            self.delta.entry(*a).or_default().push(entry);
                            self.dirty.insert(*a);
                        }
                    }
                }
                self.lsub.pop();
                for addr in self.suspended_addrs.pop().unwrap_or_default() {
                    if let Some(v) = self.suspended.get_mut(&addr) {
                        if v.last().map(|(k, _)| *k) == Some(d - 1) {
                            v.pop();
                        }
                        if v.is_empty() {
                            self.suspended.remove(&addr);
                        }
                    }
                    self.dirty.insert(addr);
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Runs `tp` and audits every configuration reached.
pub fn audit_run(
    tp: &TypedProgram,
    havoc: &mut Havoc,
    opts: RunOptions,
) -> Result<AuditReport, AuditError> {
    let mut auditor = Auditor::new(tp);
    let mut step = 0u64;
    let (run, stop) = run_observed(&tp.program, havoc, opts, &mut |cfg| {
        auditor.check(cfg, step)?;
        auditor.advance(cfg)?;
        step += 1;
        Ok::<(), Stop>(())
    })?;
    let violation = match stop {
        None => None,
        Some(Stop::Violation(v)) => Some(v),
        Some(Stop::Missing(id)) => return Err(AuditError::MissingEvidence(id)),
    };
    Ok(AuditReport {
        run,
        checks: auditor.checks,
        max_own: auditor.max_own.pretty(),
        violation,
    })
}
