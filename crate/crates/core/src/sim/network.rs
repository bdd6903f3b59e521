//! Statistics of the unweighted interbank graph.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::SimError;
use crate::domain::NetExposureMatrix;

pub const SPECTRAL_TOLERANCE: f64 = 1e-8;
pub const SPECTRAL_MAX_ITERATIONS: usize = 10_000;

/// `(in, out)` degree per bank after netting: out counts the banks it is a
/// net creditor of, in counts its net creditors.
pub fn degrees(a: &NetExposureMatrix) -> (Vec<usize>, Vec<usize>) {
    let n = a.size();
    let mut ins = vec![0; n];
    let mut outs = vec![0; n];
    for i in 0..n {
        for &v in a.row(i) {
            if v > 0.0 {
                outs[i] += 1;
            } else if v < 0.0 {
                ins[i] += 1;
            }
        }
    }
    (ins, outs)
}

/// Mean local clustering coefficient of the symmetrized graph. Nodes with
/// fewer than two neighbours contribute zero.
pub fn average_clustering(a: &NetExposureMatrix) -> f64 {
    average_clustering_adjacency(&a.undirected_adjacency())
}

/// [`average_clustering`] on an explicit symmetric adjacency matrix.
pub fn average_clustering_adjacency(adj: &[Vec<bool>]) -> f64 {
    let n = adj.len();
    if n == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        let nbrs: Vec<usize> = (0..n).filter(|&j| j != i && adj[i][j]).collect();
        let k = nbrs.len();
        if k < 2 {
            continue;
        }
        let mut links = 0usize;
        for (x, &u) in nbrs.iter().enumerate() {
            for &v in &nbrs[x + 1..] {
                if adj[u][v] {
                    links += 1;
                }
            }
        }
        total += links as f64 / (k * (k - 1) / 2) as f64;
    }
    total / n as f64
}

/// Largest eigenvalue of the symmetrized, binarized adjacency matrix.
pub fn spectral_radius(a: &NetExposureMatrix) -> Result<f64, SimError> {
    spectral_radius_adjacency(&a.undirected_adjacency())
}

/// Power iteration on `adj + I` from the all-ones vector.
///
/// The shift keeps bipartite graphs (whose spectrum is symmetric) from
/// oscillating. Iteration stops once the residual of the Rayleigh quotient
/// drops below [`SPECTRAL_TOLERANCE`].
pub fn spectral_radius_adjacency(adj: &[Vec<bool>]) -> Result<f64, SimError> {
    let n = adj.len();
    if !adj.iter().flatten().any(|x| *x) {
        return Ok(0.0);
    }
    let norm = |v: &[f64]| libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    let mut v = vec![1.0 / libm::sqrt(n as f64); n];
    let mut w = vec![0.0; n];
    for _ in 0..SPECTRAL_MAX_ITERATIONS {
        for i in 0..n {
            w[i] = v[i] + (0..n).filter(|&j| adj[i][j]).map(|j| v[j]).sum::<f64>();
        }
        let theta: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let residual = libm::sqrt(
            v.iter()
                .zip(&w)
                .map(|(a, b)| (b - theta * a) * (b - theta * a))
                .sum::<f64>(),
        );
        if residual <= SPECTRAL_TOLERANCE {
            return Ok(theta - 1.0);
        }
        let len = norm(&w);
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / len;
        }
    }
    Err(SimError::NoConvergence {
        iterations: SPECTRAL_MAX_ITERATIONS,
    })
}

/// Fixed-width histogram; bin `k` covers `[k * width, (k + 1) * width)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Histogram {
    pub width: f64,
    pub counts: BTreeMap<i64, u64>,
}

impl Histogram {
    pub fn new(width: f64) -> Self {
        Histogram {
            width,
            counts: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, value: f64) {
        // nudge values sitting on a bin edge up despite rounding in the division
        let bin = libm::floor(value / self.width + 1e-9) as i64;
        *self.counts.entry(bin).or_insert(0) += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// `(lower edge, count)` in ascending order.
    pub fn bins(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        self.counts.iter().map(|(&k, &c)| (k as f64 * self.width, c))
    }

    pub fn mean(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.bins().map(|(x, c)| x * c as f64).sum::<f64>() / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: usize) -> Vec<Vec<bool>> {
        (0..n).map(|i| (0..n).map(|j| i != j).collect()).collect()
    }

    fn star(n: usize) -> Vec<Vec<bool>> {
        (0..n)
            .map(|i| (0..n).map(|j| i != j && (i == 0 || j == 0)).collect())
            .collect()
    }

    #[test]
    fn zero_matrix_has_no_degrees() {
        let (i, o) = degrees(&NetExposureMatrix::zeros(4));
        assert_eq!(i, vec![0; 4]);
        assert_eq!(o, vec![0; 4]);
        assert_eq!(spectral_radius(&NetExposureMatrix::zeros(4)).unwrap(), 0.0);
    }

    #[test]
    fn clustering_of_triangle_and_star() {
        assert_eq!(average_clustering_adjacency(&complete(3)), 1.0);
        assert_eq!(average_clustering_adjacency(&star(5)), 0.0);
    }

    #[test]
    fn complete_graph_radius() {
        for n in 2..8 {
            let r = spectral_radius_adjacency(&complete(n)).unwrap();
            assert!((r - (n - 1) as f64).abs() < 1e-8);
        }
        // star K_{1,4} has radius 2 and a symmetric spectrum
        let r = spectral_radius_adjacency(&star(5)).unwrap();
        assert!((r - 2.0).abs() < 1e-8);
    }

    #[test]
    fn histogram_bins() {
        let mut h = Histogram::new(0.05);
        h.add(0.0);
        h.add(1.0);
        h.add(0.049);
        let bins: Vec<_> = h.bins().collect();
        assert_eq!(bins.len(), 2);
        assert_eq!(bins[0], (0.0, 2));
        assert!((bins[1].0 - 1.0).abs() < 1e-12);
    }
}
