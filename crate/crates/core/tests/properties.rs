use proptest::prelude::*;
use rowstoch_core::spectral::{limit_matrix, perron_left_vector, SpectralOptions};
use rowstoch_core::{DMatrix, DirectedGraph, WeightMatrix};

fn graphs() -> impl Strategy<Value = DirectedGraph> {
    (1usize..=12, 0.0f64..=1.0, any::<u64>())
        .prop_map(|(n, prob, seed)| DirectedGraph::random_strongly_connected(n, prob, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn local_degree_weights_are_valid(graph in graphs()) {
        prop_assert!(graph.is_strongly_connected());
        let a = WeightMatrix::local_degree(&graph);
        prop_assert!(a.violations(&graph).is_empty());
        for i in 0..graph.n() {
            prop_assert!(a.matrix()[(i, i)] > 0.0);
            let sum: f64 = a.matrix().row(i).iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn perron_identities(graph in graphs()) {
        let a = WeightMatrix::local_degree(&graph);
        let pi = perron_left_vector(&a, SpectralOptions::default().tol).unwrap();
        let n = graph.n();
        prop_assert!(pi.iter().all(|&p| p > 0.0));
        prop_assert!((pi.sum() - 1.0).abs() < 1e-12);
        let y_inf = limit_matrix(&pi);
        prop_assert!((a.matrix().transpose() * &pi - &pi).amax() < 1e-11);
        prop_assert!((a.matrix() * &y_inf - &y_inf).amax() < 1e-11);
        prop_assert!((&y_inf * &y_inf - &y_inf).amax() < 1e-11);
        let inv = DMatrix::from_diagonal(&pi.map(|p| 1.0 / p));
        prop_assert!((&y_inf * inv - DMatrix::from_element(n, n, 1.0)).amax() < 1e-10);
    }

    #[test]
    fn graph_json_round_trip(graph in graphs()) {
        let back = DirectedGraph::from_json(&graph.to_json()).unwrap();
        prop_assert_eq!(back, graph);
    }
}
