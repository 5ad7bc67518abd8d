use bfo::source::Op;
use bfo::target::{Arith, Atom, Origin, TRhs, Tail, TargetProgram, Term};
use proptest::prelude::*;

// Random straight-line programs with branching, checked against a brute
// force enumeration of the nondeterministic values.

#[derive(Debug, Clone)]
pub enum Instr {
    Nondet,
    Const(i64),
    Bin(Op, usize, usize),
    Assume(usize, usize),
    AssumeConst(usize, i64),
    /// `ifz v then .. else fail`, or the other way round.
    IfFail(usize, bool),
    /// Both branches continue with the rest.
    IfSplit(usize),
}

pub fn instr() -> impl Strategy<Value = Instr> {
    let op = prop_oneof![
        Just(Op::Add),
        Just(Op::Sub),
        Just(Op::Mul),
        Just(Op::Eq),
        Just(Op::Lt),
        Just(Op::Le)
    ];
    prop_oneof![
        3 => Just(Instr::Nondet),
        1 => (-3..=3i64).prop_map(Instr::Const),
        3 => (op, any::<usize>(), any::<usize>()).prop_map(|(o, i, j)| Instr::Bin(o, i, j)),
        1 => (any::<usize>(), any::<usize>()).prop_map(|(i, j)| Instr::Assume(i, j)),
        1 => (any::<usize>(), -3..=3i64).prop_map(|(i, c)| Instr::AssumeConst(i, c)),
        2 => (any::<usize>(), any::<bool>()).prop_map(|(i, b)| Instr::IfFail(i, b)),
        1 => any::<usize>().prop_map(Instr::IfSplit),
    ]
}

pub fn program() -> impl Strategy<Value = Vec<Instr>> {
    proptest::collection::vec(instr(), 0..9).prop_filter("at most 4 nondets", |v| {
        v.iter().filter(|i| matches!(i, Instr::Nondet)).count() <= 4
    })
}

/// `v0 = 0` first, then one variable per value-producing instruction.
pub fn build(prog: &[Instr]) -> TargetProgram {
    fn go(prog: &[Instr], n: usize) -> Term {
        let v = |i: usize| format!("v{}", i % n);
        let Some((first, rest)) = prog.split_first() else {
            return Term::Ret(Tail::Atom(Atom::Var(format!("v{}", n - 1))));
        };
        let bind = |rhs: TRhs| Term::let_(format!("v{n}"), rhs, go(rest, n + 1));
        match first {
            Instr::Nondet => bind(nondet()),
            Instr::Const(c) => bind(int(*c)),
            Instr::Bin(op, i, j) => bind(TRhs::Arith(Arith::Bin(
                *op,
                Box::new(Arith::Atom(Atom::Var(v(*i)))),
                Box::new(Arith::Atom(Atom::Var(v(*j)))),
            ))),
            Instr::Assume(i, j) => Term::Assume {
                a: Atom::Var(v(*i)),
                b: Atom::Var(v(*j)),
                body: Box::new(go(rest, n)),
            },
            Instr::AssumeConst(i, c) => Term::Assume {
                a: Atom::Var(v(*i)),
                b: Atom::Int(*c),
                body: Box::new(go(rest, n)),
            },
            Instr::IfFail(i, fail_on_zero) => {
                let (then, els) = if *fail_on_zero {
                    (Term::Fail, go(rest, n))
                } else {
                    (go(rest, n), Term::Fail)
                };
                Term::If {
                    cond: Atom::Var(v(*i)),
                    then: Box::new(then),
                    els: Box::new(els),
                }
            }
            Instr::IfSplit(i) => Term::If {
                cond: Atom::Var(v(*i)),
                then: Box::new(go(rest, n)),
                els: Box::new(go(rest, n)),
            },
        }
    }
    main_only(Term::let_("v0", int(0), go(prog, 1)))
}

/// Whether some assignment of domain values to the nondets reaches `fail`.
pub fn brute_force_fails(prog: &[Instr], domain: &[i64]) -> bool {
    let holes = prog.iter().filter(|i| matches!(i, Instr::Nondet)).count();
    let mut choice = vec![0usize; holes];
    loop {
        if run_once(prog, &choice.iter().map(|&k| domain[k]).collect::<Vec<_>>()) {
            return true;
        }
        // next assignment, odometer style
        let mut i = 0;
        loop {
            if i == holes {
                return false;
            }
            choice[i] += 1;
            if choice[i] < domain.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

fn run_once(prog: &[Instr], inputs: &[i64]) -> bool {
    let mut vals = vec![0i64];
    let mut inputs = inputs.iter();
    let truth = |c: bool| if c { 0 } else { 1 };
    for ins in prog {
        let n = vals.len();
        match ins {
            Instr::Nondet => vals.push(*inputs.next().unwrap()),
            Instr::Const(c) => vals.push(*c),
            Instr::Bin(op, i, j) => {
                let (a, b) = (vals[i % n], vals[j % n]);
                vals.push(match op {
                    Op::Add => a.wrapping_add(b),
                    Op::Sub => a.wrapping_sub(b),
                    Op::Mul => a.wrapping_mul(b),
                    Op::Eq => truth(a == b),
                    Op::Lt => truth(a < b),
                    Op::Le => truth(a <= b),
                });
            }
            Instr::Assume(i, j) if vals[i % n] != vals[j % n] => return false,
            Instr::AssumeConst(i, c) if vals[i % n] != *c => return false,
            Instr::IfFail(i, fail_on_zero) if (vals[i % n] == 0) == *fail_on_zero => return true,
            _ => {}
        }
    }
    false
}

fn main_only(main: Term) -> TargetProgram {
    TargetProgram { funs: vec![], main }
}

fn int(n: i64) -> TRhs {
    TRhs::Arith(Arith::Atom(Atom::Int(n)))
}

fn nondet() -> TRhs {
    TRhs::Arith(Arith::Atom(Atom::Nondet(Origin::Input)))
}
