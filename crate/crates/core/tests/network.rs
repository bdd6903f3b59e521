use nalgebra::DMatrix;
use proptest::prelude::*;
use srtlab_core::sim::network::{average_clustering_adjacency, spectral_radius_adjacency};

fn graph() -> impl Strategy<Value = Vec<Vec<bool>>> {
    (1usize..7).prop_flat_map(|n| {
        prop::collection::vec(any::<bool>(), n * n).prop_map(move |bits| {
            let mut adj = vec![vec![false; n]; n];
            for i in 0..n {
                for j in i + 1..n {
                    adj[i][j] = bits[i * n + j];
                    adj[j][i] = bits[i * n + j];
                }
            }
            adj
        })
    })
}

/// Counts ordered triples `(j, i, k)` with both `j` and `k` adjacent to `i`.
fn clustering_by_triples(adj: &[Vec<bool>]) -> f64 {
    let n = adj.len();
    let mut total = 0.0;
    for i in 0..n {
        let (mut closed, mut open) = (0u32, 0u32);
        for j in 0..n {
            for k in 0..n {
                if j != k && j != i && k != i && adj[i][j] && adj[i][k] {
                    open += 1;
                    if adj[j][k] {
                        closed += 1;
                    }
                }
            }
        }
        if open > 0 {
            total += f64::from(closed) / f64::from(open);
        }
    }
    total / n as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn clustering_matches_triple_count(adj in graph()) {
        prop_assert!((average_clustering_adjacency(&adj) - clustering_by_triples(&adj)).abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_matches_dense_eigensolver(adj in graph()) {
        let n = adj.len();
        let m = DMatrix::from_fn(n, n, |i, j| if adj[i][j] { 1.0 } else { 0.0 });
        let expected = m.symmetric_eigenvalues().iter().fold(0.0_f64, |a, x: &f64| a.max(x.abs()));
        let got = spectral_radius_adjacency(&adj).unwrap();
        prop_assert!((got - expected).abs() < 1e-8, "{} vs {}", got, expected);
    }
}
