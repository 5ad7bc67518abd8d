use std::collections::HashMap;

use bfo::check::{check_program, TypedProgram};
use bfo::corpus::Corpus;
use bfo::interp::{run, Havoc, RunOptions};
use bfo::source::{parse, parse_type};
use bfo::target::normalize::compare;
use bfo::target::{
    emit, oracle_run, parse_ml, Arith, Atom, OracleOptions, Origin, Pat, Profile, TRhs, Term,
};
use bfo::translate::{conv_alias, translate_program, TranslateOptions};

fn typed_src(src: &str) -> TypedProgram {
    check_program(&parse(src).unwrap()).unwrap()
}

fn main_term(src: &str) -> Term {
    translate_program(
        &typed_src(src),
        TranslateOptions {
            sync: false,
            ..Default::default()
        },
    )
    .unwrap()
    .main
}

/// Every `let x = rhs` in the term, in order.
fn lets(t: &Term) -> Vec<(String, TRhs)> {
    let mut out = Vec::new();
    t.walk(&mut |t| {
        if let Term::Let {
            pat: Pat::Var(x),
            rhs,
            ..
        } = t
        {
            out.push((x.clone(), rhs.clone()));
        }
    });
    out
}

fn assumes(t: &Term) -> Vec<(Atom, Atom)> {
    let mut out = Vec::new();
    t.walk(&mut |t| {
        if let Term::Assume { a, b, .. } = t {
            out.push((a.clone(), b.clone()));
        }
    });
    out
}

fn atom(a: Atom) -> Arith {
    Arith::Atom(a)
}

fn fst(x: &str) -> Arith {
    atom(Atom::Fst(x.into()))
}

fn snd(x: &str) -> Arith {
    atom(Atom::Snd(x.into()))
}

#[test]
fn mkref_pairs_the_value_with_a_prophecy() {
    let t = main_term("newlft a in let y = 3 in let x = mkref y in x := 4; endlft a; 0");
    let ls = lets(&t);
    let (_, rhs) = ls.iter().find(|(x, _)| x == "x").unwrap();
    assert_eq!(
        rhs,
        &TRhs::Pair(
            atom(Atom::Var("y".into())),
            atom(Atom::Nondet(Origin::Prophecy))
        )
    );
}

#[test]
fn zero_ownership_read_is_nondeterministic() {
    let t =
        main_term("newlft a in let x = mkref 1 in let y = x in let v = *x in y := 2; endlft a; v");
    let ls = lets(&t);
    let (_, rhs) = ls.iter().find(|(x, _)| x == "v").unwrap();
    assert_eq!(rhs, &TRhs::Arith(atom(Atom::Nondet(Origin::DerefZero))));
}

#[test]
fn positive_ownership_read_takes_the_first_component() {
    let t = main_term("newlft a in let x = mkref 1 in let v = *x in endlft a; v");
    let ls = lets(&t);
    let (_, rhs) = ls.iter().find(|(x, _)| x == "v").unwrap();
    assert_eq!(rhs, &TRhs::Arith(fst("x")));
}

#[test]
fn assignment_updates_the_first_component() {
    let t = main_term("newlft a in let x = mkref 1 in x := 5; endlft a; 0");
    let ls = lets(&t);
    let last_x = ls.iter().rfind(|(x, _)| x == "x").unwrap();
    let TRhs::Pair(_, second) = &last_x.1 else {
        panic!("{last_x:?}")
    };
    assert_eq!(second, &snd("x"));
}

#[test]
fn ending_a_lifetime_resolves_each_dropped_reference() {
    let src = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../corpus/minmax-typed.bfo"
    ))
    .unwrap();
    let t = main_term(&src);
    let resolved: Vec<String> = assumes(&t)
        .into_iter()
        .filter_map(|(a, b)| match (a, b) {
            (Atom::Fst(x), Atom::Snd(y)) if x == y => Some(x),
            _ => None,
        })
        .collect();
    for x in ["p", "q"] {
        assert_eq!(
            resolved.iter().filter(|r| *r == x).count(),
            1,
            "{x} in {resolved:?}"
        );
    }
}

#[test]
fn borrow_program_has_one_assume_per_dropped_reference() {
    let t = main_term(
        &std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../corpus/rusthorn-demo.bfo"
        ))
        .unwrap(),
    );
    // y at `endlft β`, x at `endlft α`
    let a = assumes(&t);
    assert_eq!(
        a,
        vec![
            (Atom::Fst("y".into()), Atom::Snd("y".into())),
            (Atom::Fst("x".into()), Atom::Snd("x".into()))
        ]
    );
}

fn ty(s: &str) -> bfo::OwnType {
    parse_type(s).unwrap()
}

#[test]
fn conv_no_ownership_on_either_side_of_x() {
    let (tx, rx) = (ty("ref<a, 0>"), ty("ref<a, 0>"));
    let (t_y, ry) = (ty("ref<a, 1>"), ty("ref<a, 1>"));
    assert_eq!(conv_alias((&tx, &rx), (&t_y, &ry), "x", "y"), Some(vec![]));
}

#[test]
fn conv_sharing_copies_the_current_value() {
    // the shared-cell alias: x 0 → 0.5, y 1 → 0.5
    let (tx, rx) = (ty("ref<a, 0>"), ty("ref<a, 0.5>"));
    let (t_y, ry) = (ty("ref<a, 1>"), ty("ref<a, 0.5>"));
    assert_eq!(
        conv_alias((&tx, &rx), (&t_y, &ry), "x", "y"),
        Some(vec![("x".to_string(), fst("y"), snd("x"))])
    );
}

#[test]
fn conv_giving_up_ownership_takes_the_prophecy() {
    // x 1 → 0 lending to y 0 → 1
    let (tx, rx) = (ty("ref<a, 1>"), ty("ref<a, 0 lend b: 1>"));
    let (t_y, ry) = (ty("ref<b, 0>"), ty("ref<b, 1>"));
    assert_eq!(
        conv_alias((&tx, &rx), (&t_y, &ry), "x", "y"),
        Some(vec![
            ("y".to_string(), fst("x"), snd("y")),
            ("x".to_string(), snd("y"), snd("x"))
        ])
    );
}

#[test]
fn conv_is_symmetric_by_one_swap() {
    // y gives up its ownership to x
    let (tx, rx) = (ty("ref<a, 0.5>"), ty("ref<a, 1>"));
    let (t_y, ry) = (ty("ref<a, 0.5>"), ty("ref<a, 0>"));
    assert_eq!(
        conv_alias((&tx, &rx), (&t_y, &ry), "x", "y"),
        Some(vec![
            ("x".to_string(), fst("y"), snd("x")),
            ("y".to_string(), snd("x"), snd("y"))
        ])
    );
}

fn corpus() -> Corpus {
    Corpus::load().unwrap()
}

fn well_typed(c: &Corpus) -> Vec<(String, TypedProgram)> {
    c.manifest
        .programs
        .iter()
        .filter(|p| p.well_typed())
        .map(|p| (p.name.clone(), typed_src(&c.read(&p.file).unwrap())))
        .collect()
}

/// Reference variables become pairs and integers stay scalars: no name is
/// bound to both, and projections only apply to pairs.
fn check_pair_typing(t: &Term, kinds: &mut HashMap<String, bool>) -> Result<(), String> {
    let mut err = None;
    t.walk(&mut |t| {
        let mut use_atom = |a: &Atom, kinds: &HashMap<String, bool>| {
            if let Atom::Fst(x) | Atom::Snd(x) = a {
                if kinds.get(x) == Some(&false) {
                    err = Some(format!("projection of scalar `{x}`"));
                }
            }
        };
        match t {
            Term::Let {
                pat: Pat::Var(x),
                rhs,
                ..
            } => {
                let pair = matches!(rhs, TRhs::Pair(..));
                let atoms: Vec<&Atom> = match rhs {
                    TRhs::Arith(a) => a.atoms(),
                    TRhs::Pair(a, b) => a.atoms().into_iter().chain(b.atoms()).collect(),
                };
                for a in atoms {
                    use_atom(a, kinds);
                }
                if let Some(&k) = kinds.get(x) {
                    if k != pair {
                        err = Some(format!("`{x}` is both a pair and a scalar"));
                    }
                }
                kinds.insert(x.clone(), pair);
            }
            Term::Assume { a, b, .. } => {
                use_atom(a, kinds);
                use_atom(b, kinds);
            }
            _ => {}
        }
    });
    err.map_or(Ok(()), Err)
}

#[test]
fn references_are_pairs_and_integers_are_scalars() {
    for (name, tp) in well_typed(&corpus()) {
        let t = translate_program(&tp, TranslateOptions::default()).unwrap();
        let mut kinds = HashMap::new();
        check_pair_typing(&t.main, &mut kinds).unwrap_or_else(|e| panic!("{name}: {e}"));
        for f in &t.funs {
            let mut kinds = HashMap::new();
            check_pair_typing(&f.body, &mut kinds)
                .unwrap_or_else(|e| panic!("{name}/{}: {e}", f.name));
        }
    }
}

#[test]
fn functions_return_their_reference_arguments() {
    for (name, tp) in well_typed(&corpus()) {
        let t = translate_program(&tp, TranslateOptions::default()).unwrap();
        for f in &t.funs {
            let sig = &tp.sigs[&f.name];
            let width = 1 + sig.ref_params().len();
            let mut tails = Vec::new();
            f.body.walk(&mut |t| {
                if let Term::Ret(tail) = t {
                    tails.push(tail.clone());
                }
            });
            for tail in tails {
                let n = match &tail {
                    bfo::target::Tail::Tuple(v) if width > 1 => v.len(),
                    _ => 1,
                };
                assert_eq!(n, width, "{name}/{}", f.name);
            }
        }
    }
}

#[test]
fn peephole_does_not_change_behavior() {
    let mut folded = 0;
    for (name, tp) in well_typed(&corpus()) {
        let plain = translate_program(
            &tp,
            TranslateOptions {
                peephole: false,
                sync: true,
            },
        )
        .unwrap();
        let opt = translate_program(&tp, TranslateOptions::default()).unwrap();
        let fresh_pairs = |t: &bfo::target::TargetProgram| {
            emit(t, Profile::Ml).matches("(nondet(), nondet())").count()
        };
        assert!(fresh_pairs(&plain) >= fresh_pairs(&opt), "{name}");
        folded += fresh_pairs(&plain) - fresh_pairs(&opt);
        for seed in 0..10 {
            let src = run(
                &tp.program,
                &mut Havoc::seeded(seed, -2, 2),
                RunOptions {
                    fuel: 5_000,
                    trace: true,
                },
            )
            .unwrap();
            for t in [&plain, &opt] {
                let o = oracle_run(&tp, t, &src, &OracleOptions::default()).unwrap();
                assert!(o.consistent, "{name} seed {seed}: {:?}", o.divergence);
            }
        }
    }
    assert!(folded > 0);
}

#[test]
fn listings_compare_as_recorded() {
    let c = corpus();
    for tr in &c.manifest.translations {
        let tp = typed_src(&c.read(&tr.source).unwrap());
        let t = translate_program(&tp, TranslateOptions::default()).unwrap();
        let ours = parse_ml(&emit(&t, Profile::Ml)).unwrap();
        let theirs = parse_ml(&c.read(&tr.target).unwrap()).unwrap();
        let diff = compare(&ours, &theirs);
        assert_eq!(
            diff.is_none(),
            tr.matches,
            "{} vs {}: {diff:?}",
            tr.source,
            tr.target
        );
    }
}

#[test]
fn translation_is_deterministic() {
    let c = corpus();
    for (name, tp) in well_typed(&c) {
        let a = emit(
            &translate_program(&tp, TranslateOptions::default()).unwrap(),
            Profile::Sexp,
        );
        let b = emit(
            &translate_program(&tp, TranslateOptions::default()).unwrap(),
            Profile::Sexp,
        );
        assert_eq!(a, b, "{name}");
    }
}
