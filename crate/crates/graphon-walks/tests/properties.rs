//! Property tests for the structural invariants: serialization round trips,
//! norm inequalities, refinement isometry, and trajectory well-formedness.

use ndarray::{Array1, Array2};
use proptest::prelude::*;

use graphon_walks::convergence::lemma_hs_difference_check;
use graphon_walks::discretize::{refine_to_grid, sampled_graph, StepFunction, WeightedGraph};
use graphon_walks::solver::GridField;
use graphon_walks::walks::{gillespie_walk, WalkMode};
use graphon_walks::{cut_norm_interval_estimate, Graphon};

fn unit_interval() -> impl Strategy<Value = f64> {
    (0u64..=1_000_000).prop_map(|k| k as f64 / 1_000_000.0)
}

fn symmetric_unit_matrix(n: usize) -> impl Strategy<Value = Array2<f64>> {
    proptest::collection::vec(unit_interval(), n * (n + 1) / 2).prop_map(move |upper| {
        let mut a = Array2::zeros((n, n));
        let mut it = upper.into_iter();
        for i in 0..n {
            for j in i..n {
                let v = it.next().unwrap();
                a[[i, j]] = v;
                a[[j, i]] = v;
            }
        }
        a
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_csv_round_trip_is_bit_exact(a in (2usize..6).prop_flat_map(symmetric_unit_matrix)) {
        let g = WeightedGraph::new(a).unwrap();
        let s = g.to_csv_string();
        let back = WeightedGraph::from_csv_string(&s).unwrap();
        prop_assert_eq!(back.adjacency(), g.adjacency());
        prop_assert_eq!(back.to_csv_string(), s);
    }

    #[test]
    fn step_csv_round_trip_is_bit_exact(values in proptest::collection::vec(-1e6..1e6f64, 1..20)) {
        let u = StepFunction::new(Array1::from_vec(values));
        let back = StepFunction::from_csv_string(&u.to_csv_string()).unwrap();
        prop_assert_eq!(back.values(), u.values());
    }

    #[test]
    fn refinement_preserves_l2_exactly(
        values in proptest::collection::vec(-100.0..100.0f64, 1..12),
        multiplier in 1usize..6,
    ) {
        let u = StepFunction::new(Array1::from_vec(values));
        let refined = refine_to_grid(&u, u.n() * multiplier).unwrap();
        // identical up to summation order; the error scale of the mean is
        // set by the absolute values, not the (possibly cancelling) sum
        let norm = u.l2_norm();
        prop_assert!((refined.l2_norm() - norm).abs() <= 32.0 * f64::EPSILON * norm.max(1.0));
        let mean = u.values().mean().unwrap();
        let scale = u.values().iter().map(|v| v.abs()).sum::<f64>() / u.n() as f64;
        prop_assert!((refined.l1_mass() - mean).abs() <= 32.0 * f64::EPSILON * scale.max(1.0));
    }

    #[test]
    fn norm_chain_on_random_block_graphons(
        a in (2usize..5).prop_flat_map(symmetric_unit_matrix),
    ) {
        let w = Graphon::uniform_block(a).unwrap();
        let n = 32;
        let cut = cut_norm_interval_estimate(&w, n);
        let l1 = w.lp_norm(1.0, n);
        let l2 = w.lp_norm(2.0, n);
        let linf = w.lp_norm(f64::INFINITY, n);
        prop_assert!(cut <= l1 + 1e-12);
        prop_assert!(l1 <= l2 + 1e-12);
        prop_assert!(l2 <= linf + 1e-12);
        prop_assert!(linf <= 1.0);
    }

    #[test]
    fn sampled_graph_round_trips_through_step_graphon(
        a in (2usize..6).prop_flat_map(symmetric_unit_matrix),
    ) {
        let g = WeightedGraph::new(a).unwrap();
        let eta = graphon_walks::discretize::step_graphon(&g);
        let back = sampled_graph(&eta, g.n());
        prop_assert_eq!(back.adjacency(), g.adjacency());
    }

    #[test]
    fn hs_difference_bound_on_random_kernels(
        seed in any::<u64>(),
        applications in 1usize..5,
    ) {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = 16;
        let a = Array2::from_shape_fn((n, n), |_| rng.random::<f64>());
        let b = Array2::from_shape_fn((n, n), |_| rng.random::<f64>());
        let f = GridField::new(Array1::from_shape_fn(n, |_| rng.random::<f64>() * 4.0 - 2.0));
        prop_assert!(lemma_hs_difference_check(&a, &b, &f, applications, 1.0));
    }

    #[test]
    fn trajectories_are_well_formed(seed in any::<u64>(), start in 0usize..8) {
        let w = Graphon::stripe(0.25).unwrap();
        let g = graphon_walks::discretize::quotient_graph(&w, 8, 4);
        for mode in [WalkMode::NodeCentric { kappa: 1.0 }, WalkMode::EdgeCentric] {
            let traj = gillespie_walk(&g, mode, start, 4.0, seed).unwrap();
            prop_assert_eq!(traj.events[0], (0.0, start));
            for pair in traj.events.windows(2) {
                prop_assert!(pair[1].0 > pair[0].0);
                prop_assert!(g.adjacency()[[pair[0].1, pair[1].1]] > 0.0);
            }
        }
    }
}
