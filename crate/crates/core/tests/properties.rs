use proptest::prelude::*;
use proptest::test_runner::RngSeed;

use pac_core::ac3::{ac3, ac3_with, Ac3Status, DomainSet, QueueDiscipline};
use pac_core::format::{parse_instance, write_instance};
use pac_core::generator::{generate, generate_tree, GenSpec};
use pac_core::harness::{pearson, run_heuristic, HeuristicId, SearchSettings};
use pac_core::oracle::{enumerate, frequencies, solutions};
use pac_core::pac::{boolean_support_sets, propagate, Mode, PropagationConfig, Propagator, Status};
use pac_core::search::Outcome;

fn small_spec() -> impl Strategy<Value = GenSpec> {
    (2usize..=7, 2usize..=4, 0.0f64..=1.0, 0.0f64..=0.7, any::<u64>()).prop_map(|(n, m, p1, p2, seed)| GenSpec { n, m, p1, p2, seed })
}

fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        rng_seed: RngSeed::Fixed(0x9ac),
        ..ProptestConfig::default()
    })]

    #[test]
    fn ac3_keeps_every_solution(spec in small_spec()) {
        let inst = generate(&spec).unwrap();
        let out = ac3(&inst, DomainSet::full(&inst)).unwrap();
        let sols = solutions(&inst, usize::MAX);
        if matches!(out.status, Ac3Status::Wipeout(_)) {
            prop_assert!(sols.is_empty());
        }
        for s in &sols {
            for (x, &v) in s.iter().enumerate() {
                prop_assert!(out.domains.is_live(x, v));
            }
        }
    }

    #[test]
    fn ac3_fixpoint_ignores_queue_order(spec in small_spec(), qseed in any::<u64>()) {
        let inst = generate(&spec).unwrap();
        let a = ac3_with(&inst, DomainSet::full(&inst), QueueDiscipline::Fifo).unwrap();
        let b = ac3_with(&inst, DomainSet::full(&inst), QueueDiscipline::Random(qseed)).unwrap();
        prop_assert_eq!(a.status == Ac3Status::Consistent, b.status == Ac3Status::Consistent);
        if a.status == Ac3Status::Consistent {
            prop_assert_eq!(a.domains, b.domains);
        }
    }

    #[test]
    fn boolean_mode_is_arc_consistency(spec in small_spec()) {
        let inst = generate(&spec).unwrap();
        let a = ac3(&inst, DomainSet::full(&inst)).unwrap();
        let b = propagate(&inst, &PropagationConfig::default().with_mode(Mode::Boolean)).unwrap();
        prop_assert_eq!(a.status == Ac3Status::Consistent, b.status != Status::Wipeout);
        if a.status == Ac3Status::Consistent {
            prop_assert_eq!(boolean_support_sets(&b), a.domains);
        }
    }

    #[test]
    fn pac_is_exact_on_trees(n in 2usize..=9, m in 2usize..=4, p2 in 0.0f64..=0.6, seed in any::<u64>()) {
        let inst = generate_tree(n, m, p2, seed).unwrap();
        let census = enumerate(&inst, None);
        let res = propagate(&inst, &PropagationConfig { epsilon: 1e-30, ..Default::default() }).unwrap();
        if census.is_satisfiable() {
            prop_assert!(max_diff(&res.beliefs, &frequencies(&census).unwrap()) <= 1e-9);
            let d = inst.graph_info().diameter;
            prop_assert!(matches!(res.status, Status::Converged(k) if k <= d + 1));
        } else {
            prop_assert_eq!(res.status, Status::Wipeout);
        }
    }

    #[test]
    fn pac_zeros_match_arc_consistency(spec in small_spec()) {
        // a value is zero in pAC exactly when AC removes it
        let inst = generate(&spec).unwrap();
        let a = ac3(&inst, DomainSet::full(&inst)).unwrap();
        let prop = Propagator::new(&inst, PropagationConfig::default()).unwrap();
        let mut state = prop.initial_state();
        // every round that changes the zero pattern removes a value; stopping
        // there keeps long geometric decays from underflowing to zero
        let rounds = if a.status == Ac3Status::Consistent {
            a.removals + 2
        } else {
            inst.domain_sizes().iter().sum::<usize>() + 2
        };
        let mut wiped = false;
        for _ in 0..rounds {
            wiped |= prop.round(&mut state).unwrap().wiped.is_some();
            if wiped {
                break;
            }
        }
        prop_assert_eq!(wiped, a.status != Ac3Status::Consistent);
        if !wiped {
            for x in 0..inst.num_vars() {
                for v in 0..inst.domain_size(x) {
                    prop_assert_eq!(state.beliefs[x][v] > 0.0, a.domains.is_live(x, v));
                }
            }
        }
    }

    #[test]
    fn beliefs_ignore_message_scale(spec in small_spec(), scale in 1e-3f64..1e3) {
        let inst = generate(&spec).unwrap();
        let prop = Propagator::new(&inst, PropagationConfig::default()).unwrap();
        let (mut a, mut b) = (prop.initial_state(), prop.initial_state());
        for e in inst.edges() {
            prop.scale_message(&mut b, e.x, e.y, scale).unwrap();
        }
        for _ in 0..4 {
            prop.round(&mut a).unwrap();
            prop.round(&mut b).unwrap();
            prop_assert!(max_diff(&a.beliefs, &b.beliefs) <= 1e-12);
        }
    }

    #[test]
    fn variable_relabelling_permutes_beliefs(spec in small_spec(), rot in 0usize..7) {
        let inst = generate(&spec).unwrap();
        let n = inst.num_vars();
        let perm: Vec<usize> = (0..n).map(|x| (x + rot) % n).collect();
        let moved = inst.permute_variables(&perm).unwrap();
        let cfg = PropagationConfig { max_iter: 60, ..Default::default() };
        let a = propagate(&inst, &cfg).unwrap();
        let b = propagate(&moved, &cfg).unwrap();
        prop_assert_eq!(a.status, b.status);
        for x in 0..n {
            for (p, q) in a.beliefs[x].iter().zip(&b.beliefs[perm[x]]) {
                prop_assert!((p - q).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn search_agrees_with_the_oracle(spec in small_spec(), seed in any::<u64>()) {
        let inst = generate(&spec).unwrap();
        let sat = enumerate(&inst, None).is_satisfiable();
        for h in ["lex", "random", "first-fail", "brelaz", "pac-static", "pac-dynamic", "peleg", "mst-static"] {
            let r = run_heuristic(&inst, HeuristicId::parse(h).unwrap(), &SearchSettings::default(), seed).unwrap();
            match &r.outcome {
                Outcome::Solution(a) => prop_assert!(sat && inst.is_solution(a), "{}", h),
                Outcome::Unsatisfiable => prop_assert!(!sat, "{}", h),
                Outcome::LimitReached => prop_assert!(false, "no limit was set"),
            }
            let again = run_heuristic(&inst, HeuristicId::parse(h).unwrap(), &SearchSettings::default(), seed).unwrap();
            prop_assert_eq!(r, again);
        }
    }

    #[test]
    fn peleg_keeps_solution_indicators(spec in small_spec()) {
        let inst = generate(&spec).unwrap();
        let prop = Propagator::new(&inst, PropagationConfig::default().with_mode(Mode::Peleg)).unwrap();
        for s in solutions(&inst, 3) {
            let ind: Vec<Vec<f64>> = s
                .iter()
                .enumerate()
                .map(|(x, &v)| (0..inst.domain_size(x)).map(|i| if i == v { 1.0 } else { 0.0 }).collect())
                .collect();
            let mut state = prop.state_from_beliefs(ind.clone()).unwrap();
            prop.round(&mut state).unwrap();
            prop_assert_eq!(&state.beliefs, &ind);
        }
    }

    #[test]
    fn text_format_round_trips(spec in small_spec()) {
        let inst = generate(&spec).unwrap();
        let text = write_instance(&inst, &spec.header());
        prop_assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn pearson_is_bounded_and_symmetric(xs in prop::collection::vec(-1e3f64..1e3, 2..20), shift in -5.0f64..5.0) {
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * 0.5 + (i as f64) * shift).collect();
        if let (Ok(a), Ok(b)) = (pearson(&xs, &ys), pearson(&ys, &xs)) {
            prop_assert!((-1.0..=1.0).contains(&a));
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
