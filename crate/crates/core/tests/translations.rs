use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ctl_datalog::ctl::{model_check, to_enf, to_pnf, truth_oracle, Formula};
use ctl_datalog::datalog::{evaluate, evaluate_naive, evaluate_succ, stratify};
use ctl_datalog::decision::{bounded_contained, bounded_satisfiable, evaluate_std_via_ctl, BoundedVerdict};
use ctl_datalog::gen::{random_database, random_formula, random_program, random_std, random_structure, FormulaClass};
use ctl_datalog::kripke::{db_to_kripke, domain_of, kripke_to_db, parse_kripke, render_kripke, ChildOrder};
use ctl_datalog::std_bridge::{ctl_to_std, flatten, recognize_std, std_to_ctl};
use ctl_datalog::tds_bridge::eval_tds;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn semi_naive_agrees_with_naive(seed in any::<u64>()) {
        let mut r = rng(seed);
        let counters = seed % 3 == 0;
        let (p, d) = random_program(&mut r, counters);
        let (fast, slow) = if counters {
            (evaluate_succ(&p, &d, 3).unwrap(), evaluate_naive(&p, &d, Some(3)).unwrap())
        } else {
            (evaluate(&p, &d).unwrap(), evaluate_naive(&p, &d, None).unwrap())
        };
        prop_assert!(fast.same_facts(&slow));
    }

    #[test]
    fn fixpoint_checker_agrees_with_path_oracle(seed in any::<u64>(), states in 1usize..=4, depth in 1usize..=4) {
        let mut r = rng(seed);
        let k = random_structure(&mut r, states, 2, None);
        let f = random_formula(&mut r, 2, depth, FormulaClass::Any);
        prop_assert_eq!(model_check(&k, &f).unwrap(), truth_oracle(&k, &f).unwrap());
    }

    #[test]
    fn normal_forms_keep_truth_sets(seed in any::<u64>(), depth in 1usize..=5) {
        let mut r = rng(seed);
        let k = random_structure(&mut r, 4, 2, None);
        let f = random_formula(&mut r, 2, depth, FormulaClass::Any);
        let want = model_check(&k, &f).unwrap();
        let enf = to_enf(&f);
        let pnf = to_pnf(&f);
        prop_assert!(enf.is_enf() && pnf.is_pnf());
        prop_assert_eq!(model_check(&k, &enf).unwrap(), want.clone());
        prop_assert_eq!(model_check(&k, &pnf).unwrap(), want);
    }

    #[test]
    fn std_program_computes_the_formula(seed in any::<u64>(), states in 1usize..=6, depth in 1usize..=4) {
        let mut r = rng(seed);
        let k = random_structure(&mut r, states, 2, None);
        let f = random_formula(&mut r, 2, depth, FormulaClass::Enf);
        let want: std::collections::BTreeSet<String> = model_check(&k, &f).unwrap().iter().map(|s| k.state_name(s).to_string()).collect();
        let prog = flatten(&ctl_to_std(&f, 2).unwrap());
        let out = evaluate(&prog, &kripke_to_db(&k).to_fact_store()).unwrap();
        let got = out.unary_names("G");
        prop_assert_eq!(got, want);
    }

    #[test]
    fn std_on_arbitrary_databases_matches_closure(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = random_database(&mut r, 5, 2);
        let p = random_std(&mut r, 2, 3);
        let direct = evaluate(&flatten(&p), &d.to_fact_store()).unwrap();
        let via = evaluate_std_via_ctl(&p, &d).unwrap();
        prop_assert_eq!(direct.unary_names("G"), via.unary_names("G"));
        let domain = domain_of(&d);
        match db_to_kripke(&d) {
            Ok(k) => prop_assert_eq!(k.num_states(), domain.len()),
            Err(_) => prop_assert!(domain.is_empty()),
        }
    }

    #[test]
    fn tds_agrees_under_both_child_orders(seed in any::<u64>(), states in 1usize..=4, depth in 1usize..=3) {
        let mut r = rng(seed);
        let k = random_structure(&mut r, states, 2, Some(2));
        let f = random_formula(&mut r, 2, depth, FormulaClass::Pnf);
        let want = model_check(&k, &f).unwrap();
        prop_assert_eq!(eval_tds(&f, &k, &ChildOrder::ByName).unwrap(), want.clone());
        prop_assert_eq!(eval_tds(&f, &k, &ChildOrder::ByNameDescending).unwrap(), want);
    }

    #[test]
    fn recognizer_inverts_flatten(seed in any::<u64>(), depth in 1usize..=4) {
        let mut r = rng(seed);
        let p = random_std(&mut r, 2, depth);
        let back = recognize_std(&flatten(&p)).unwrap();
        prop_assert_eq!(std_to_ctl(&back), std_to_ctl(&p));
        prop_assert!(stratify(&flatten(&p)).is_ok());
    }

    #[test]
    fn enf_round_trips_through_std(seed in any::<u64>(), depth in 1usize..=5) {
        let mut r = rng(seed);
        let f = random_formula(&mut r, 3, depth, FormulaClass::Enf);
        prop_assert_eq!(std_to_ctl(&ctl_to_std(&f, 3).unwrap()), f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bounded_sat_is_monotone_and_replayable(seed in any::<u64>(), depth in 1usize..=3) {
        let mut r = rng(seed);
        let f = random_formula(&mut r, 2, depth, FormulaClass::Any);
        let mut found_at = None;
        for b in 1..=3 {
            match bounded_satisfiable(&f, b).unwrap() {
                BoundedVerdict::Holds { witness: Some(w), .. } => {
                    prop_assert!(w.structure.num_states() <= b);
                    let replay = parse_kripke(&render_kripke(&w.structure)).unwrap();
                    prop_assert!(model_check(&replay, &f).unwrap().contains(w.state));
                    found_at.get_or_insert(b);
                }
                BoundedVerdict::ExhaustedBound(_) => prop_assert!(found_at.is_none(), "lost a model at bound {}", b),
                other => prop_assert!(false, "unexpected verdict {:?}", other.kind()),
            }
        }
    }

    #[test]
    fn containment_counterexamples_replay(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f1 = random_formula(&mut r, 2, 3, FormulaClass::Any);
        let f2 = random_formula(&mut r, 2, 3, FormulaClass::Any);
        let mut refuted = false;
        for b in 1..=3 {
            match bounded_contained(&f1, &f2, b).unwrap() {
                BoundedVerdict::CounterexampleFound(w) => {
                    let s1 = model_check(&w.structure, &f1).unwrap();
                    let s2 = model_check(&w.structure, &f2).unwrap();
                    prop_assert!(s1.contains(w.state) && !s2.contains(w.state));
                    refuted = true;
                }
                BoundedVerdict::Holds { witness: None, .. } => prop_assert!(!refuted),
                other => prop_assert!(false, "unexpected verdict {:?}", other.kind()),
            }
        }
    }
}

#[test]
fn self_containment_always_holds() {
    let f = Formula::eu(Formula::Atom(0), Formula::ax(Formula::Atom(1)));
    assert_eq!(bounded_contained(&f, &f, 3).unwrap().kind(), "holds");
}
