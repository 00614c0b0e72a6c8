//! Shared oracles for the integration suites. Everything here is coded
//! independently of the library's own computation paths: determinants by
//! cofactor expansion, covariance by explicit deviation vectors, Shapley
//! values by full enumeration (the library's own enumerator is exercised
//! against closed forms before it is trusted as an oracle).
#![allow(dead_code)] // each test target uses a different subset

use corrshap::dataset::{DataMatrix, FeatureKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random well-scaled numeric dataset with mild neighbour correlations.
pub fn random_dataset(m: usize, n: usize, seed: u64) -> DataMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let base: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut row = base.clone();
        for c in 1..m {
            row[c] += 0.4 * base[c - 1];
        }
        rows.push(row);
    }
    DataMatrix::from_rows(
        (0..m).map(|i| format!("x{i}")).collect(),
        vec![FeatureKind::Numeric; m],
        rows,
    )
    .unwrap()
}

/// Determinant by cofactor expansion.
pub fn det_cofactor(a: &[f64], n: usize) -> f64 {
    if n == 1 {
        return a[0];
    }
    let mut det = 0.0;
    for col in 0..n {
        let mut minor = Vec::with_capacity((n - 1) * (n - 1));
        for r in 1..n {
            for c in 0..n {
                if c != col {
                    minor.push(a[r * n + c]);
                }
            }
        }
        let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
        det += sign * a[col] * det_cofactor(&minor, n - 1);
    }
    det
}

/// Cramer determinant-ratio solution of `gram · a = −c`.
pub fn cramer_solve(gram: &[f64], c: &[f64], q: usize) -> Vec<f64> {
    let det_a = det_cofactor(gram, q);
    (0..q)
        .map(|j| {
            let mut replaced = gram.to_vec();
            for r in 0..q {
                replaced[r * q + j] = -c[r];
            }
            det_cofactor(&replaced, q) / det_a
        })
        .collect()
}

/// Coalition Gram matrix and covariance right-hand side read off a cache.
pub fn gram_and_rhs(
    cache: &corrshap::CovarianceCache,
    coalition: &[usize],
    k: usize,
) -> (Vec<f64>, Vec<f64>) {
    let q = coalition.len();
    let mut gram = vec![0.0; q * q];
    let mut c = vec![0.0; q];
    for (u, &tu) in coalition.iter().enumerate() {
        for (v, &tv) in coalition.iter().enumerate() {
            gram[u * q + v] = cache.covariance(tu, tv).unwrap();
        }
        c[u] = cache.covariance(tu, k).unwrap();
    }
    (gram, c)
}

/// Sample covariance of two columns via explicit deviation vectors; the
/// independent two-pass oracle.
pub fn two_pass_cov(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let dx: Vec<f64> = x.iter().map(|v| v - mx).collect();
    let dy: Vec<f64> = y.iter().map(|v| v - my).collect();
    dx.iter().zip(&dy).map(|(a, b)| a * b).sum::<f64>() / (n - 1) as f64
}

/// Background whose empirical covariance is exactly diagonal: sign-pattern
/// columns are orthogonal with zero means, and all the arithmetic is exact in
/// f64, so every off-diagonal covariance entry is bitwise zero.
pub fn hadamard_background(copies: usize) -> DataMatrix {
    let pattern = [
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ];
    let mut rows = Vec::new();
    for _ in 0..copies {
        for row in pattern {
            rows.push(row.to_vec());
        }
    }
    DataMatrix::from_rows(
        vec!["a".into(), "b".into(), "c".into()],
        vec![FeatureKind::Numeric; 3],
        rows,
    )
    .unwrap()
}
