//! Property tests for the data-type invariants of every module.

use deeptherm::experiment::{ExperimentConfig, ResultRecord};
use deeptherm::haar::{self, HaarParams};
use deeptherm::perm::{self, Permutation};
use deeptherm::projected::{self, GramStrategy, ProjectedMatrix};
use deeptherm::seed;
use deeptherm::statevector::{self, Boundary, Geometry, Placement, Statevector};
use deeptherm::statmech;
use deeptherm::theory::{self, Speed, TheoryParams};
use proptest::prelude::*;

fn evolved(q: usize, len_a: usize, len_b: usize, steps: u64, seed_value: u64) -> (Statevector, Geometry) {
    let geometry = Geometry::edge_obc(len_a, len_b).unwrap();
    let mut state = Statevector::product_state(geometry.sites(), q).unwrap();
    statevector::evolve_brick_wall(&mut state, steps, &geometry, seed_value).unwrap();
    (state, geometry)
}

fn perm_strategy(m: usize) -> impl Strategy<Value = Permutation> {
    Just((0..m).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_map(|v| Permutation::from_images(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evolution_preserves_norm_and_length(q in 2usize..=3, len_a in 1usize..=3, len_b in 1usize..=3, steps in 0u64..=4, s in any::<u64>()) {
        let (state, geometry) = evolved(q, len_a, len_b, steps, s);
        prop_assert_eq!(state.amplitudes().len(), q.pow(geometry.sites() as u32));
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sampled_gates_are_unitary(q in 2usize..=4, s in any::<u64>()) {
        let gate = statevector::sample_haar_gate(q, &mut seed::rng_from_seed(s));
        prop_assert!(statevector::unitarity_defect(&gate, q * q) < 1e-12);
    }

    #[test]
    fn periodic_chains_need_even_length(len_a in 1usize..=8, len_b in 0usize..=8) {
        let g = Geometry::new(Boundary::Periodic, Placement::Bulk, len_a, len_b);
        prop_assert_eq!(g.is_ok(), (len_a + len_b) % 2 == 0);
    }

    #[test]
    fn bulk_region_is_centred(len_a in 1usize..=6, len_b in 0usize..=9) {
        let g = Geometry::new(Boundary::Open, Placement::Bulk, len_a, len_b).unwrap();
        prop_assert_eq!(g.a_offset(), len_b / 2);
        prop_assert_eq!(g.b_left() + g.b_right(), len_b);
        prop_assert!(g.b_right() >= g.b_left() && g.b_right() - g.b_left() <= 1);
    }

    #[test]
    fn projected_ensemble_invariants(q in 2usize..=3, len_a in 1usize..=2, len_b in 1usize..=3, steps in 0u64..=3, s in any::<u64>()) {
        let (state, geometry) = evolved(q, len_a, len_b, steps, s);
        let proj = ProjectedMatrix::from_state(&state, &geometry).unwrap();
        let p = proj.born_weights();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        let gram = proj.gram_dense().unwrap();
        let n = proj.dim_b();
        for a in 0..n {
            for b in 0..n {
                let g = gram[a * n + b];
                prop_assert!((g - gram[b * n + a].conj()).norm() < 1e-12);
                prop_assert!(g.norm_sqr() <= p[a] * p[b] + 1e-14);
            }
        }
        for k in 1..=3 {
            let f = projected::frame_potential(&proj, k).unwrap();
            prop_assert!(f.value >= f.haar_value() - 1e-12);
            prop_assert!(f.excluded_mass < 1e-8);
        }
    }

    #[test]
    fn gram_strategies_agree(len_b in 1usize..=5, block in 1usize..=40, s in any::<u64>()) {
        let (state, geometry) = evolved(2, 2, len_b, 2, s);
        let proj = ProjectedMatrix::from_state(&state, &geometry).unwrap();
        let dense = projected::frame_potentials_with(&proj, &[1, 2, 3], GramStrategy::Dense).unwrap();
        let blocked = projected::frame_potentials_with(&proj, &[1, 2, 3], GramStrategy::Blocked { block }).unwrap();
        for (d, b) in dense.iter().zip(&blocked) {
            prop_assert!((d.value - b.value).abs() <= 1e-12 * d.value.max(1e-300));
        }
    }

    #[test]
    fn weingarten_is_a_class_function(sigma in perm_strategy(4), tau in perm_strategy(4), d in prop::sample::select(vec![4.0f64, 9.0, 16.0])) {
        let table = statmech::weingarten_table(4, d).unwrap();
        let conj = tau.compose(&sigma).unwrap().compose(&tau.inverse()).unwrap();
        let (a, b) = (table.value(&sigma).unwrap(), table.value(&conj).unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-12));
    }

    #[test]
    fn haar_frame_potential_orderings(q in 2usize..=4, len_a in 1usize..=4, len_b in 0usize..=6, k in 1usize..=4) {
        let fh = haar::haar_frame_potential_f64(q, len_a, k);
        prop_assert!(haar::haar_frame_potential_f64(q, len_a, k + 1) <= fh);
        prop_assert!(haar::haar_frame_potential_f64(q, len_a + 1, k) <= fh);
        let state_fp = haar::haar_state_projected_fp(&HaarParams::new(q, len_a, len_b, k).unwrap());
        prop_assert!(state_fp >= fh * (1.0 - 1e-12));
    }

    #[test]
    fn design_time_monotone(q in 2usize..=5, len_a in 1usize..=8, k in 1usize..=4, eps in 0.05f64..0.95) {
        let t = theory::design_time(q, len_a, k, eps, Speed::Purity).unwrap();
        prop_assert!(theory::design_time(q, len_a, k + 1, eps, Speed::Purity).unwrap() > t);
        prop_assert!(theory::design_time(q, len_a, k, eps * 0.9, Speed::Purity).unwrap() > t);
    }

    #[test]
    fn nonint_distance_decreases_in_time(q in 2usize..=5, len_a in 1usize..=8, k in 1usize..=3, t in 0.0f64..20.0) {
        let now = theory::delta2_nonint(q, len_a, t, k, Speed::Purity);
        prop_assert!(now >= 0.0);
        prop_assert!(theory::delta2_nonint(q, len_a, t + 0.5, k, Speed::Purity) <= now);
    }

    #[test]
    fn theory_params_validation(q in 0usize..=4, len_a in 0usize..=3, k in 0usize..=3, eps in -0.5f64..1.5) {
        let p = TheoryParams { q, len_a, t: 1.0, k, n: 0.0, epsilon: eps, placement: Placement::Edge, boundary: Boundary::Open };
        let valid = q >= 2 && len_a >= 1 && k >= 1 && eps > 0.0 && eps < 1.0;
        prop_assert_eq!(p.validate().is_ok(), valid);
    }

    #[test]
    fn config_text_round_trip(len_a in 1usize..=6, lbs in prop::collection::vec(1usize..=12, 1..4), t_max in 0u64..20, seed_value in any::<u64>(), bulk in any::<bool>()) {
        let mut cfg = ExperimentConfig::new(2, len_a, lbs, t_max, vec![1, 2], 8);
        cfg.master_seed = seed_value;
        if bulk {
            cfg.placement = Placement::Bulk;
        }
        prop_assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn result_record_csv_round_trip(mean in -1e6f64..1e6, sem in prop::option::of(0.0f64..10.0), t in 0u64..40, n in 0usize..1000) {
        let r = ResultRecord {
            q: 2, len_a: 6, len_b: 12, placement: Placement::Edge, boundary: Boundary::Open,
            t, k: 2, observable: "F_k".into(), mean, sem, n_realizations: n, excluded_mass_max: 0.0, master_seed: 5,
        };
        prop_assert_eq!(ResultRecord::from_csv(&r.to_csv()).unwrap(), r);
    }

    #[test]
    fn distinct_realizations_get_distinct_seeds(master in any::<u64>(), a in 0u64..1_000_000, b in 0u64..1_000_000) {
        prop_assume!(a != b);
        prop_assert_ne!(seed::realization_seed(master, a), seed::realization_seed(master, b));
        prop_assert_eq!(seed::realization_seed(master, a), seed::realization_seed(master, a));
    }

    #[test]
    fn overlap_log_matches_exact(a in perm_strategy(6), b in perm_strategy(6), q in 2u64..=5) {
        let exact = perm::permutation_overlap(&a, &b, q).unwrap() as f64;
        let log = perm::log_permutation_overlap(&a, &b, q as f64).unwrap();
        prop_assert!((exact.ln() - log).abs() < 1e-12);
    }
}
