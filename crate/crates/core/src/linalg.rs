//! Small dense linear-system helpers shared by the adjustment solver and the
//! built-in models. Everything here is plain `f64` on row-major buffers; the
//! systems involved are tiny (coalition Gram matrices, normal equations).

/// Outcome of a failed elimination: the smallest pivot magnitude encountered,
/// so callers can report how close to singular the system was.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct NearSingular {
    pub smallest_pivot: f64,
}

/// Solves `a · x = b` by Gaussian elimination with partial pivoting.
///
/// `a` is a row-major `n × n` matrix; both buffers are consumed as scratch.
/// A pivot is rejected when its magnitude falls below
/// `rel_tol × max |diag(a)|` (of the original matrix), which keeps the
/// threshold scale-free.
pub(crate) fn solve(
    mut a: Vec<f64>,
    mut b: Vec<f64>,
    n: usize,
    rel_tol: f64,
) -> Result<Vec<f64>, NearSingular> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);

    let max_diag = (0..n).map(|i| a[i * n + i].abs()).fold(0.0_f64, f64::max);
    let floor = if max_diag > 0.0 { rel_tol * max_diag } else { 0.0 };
    let mut smallest_pivot = f64::INFINITY;

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = a[col * n + col].abs();
        for row in col + 1..n {
            let mag = a[row * n + col].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        smallest_pivot = smallest_pivot.min(pivot_mag);
        if pivot_mag <= floor || pivot_mag == 0.0 {
            return Err(NearSingular { smallest_pivot });
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for k in col + 1..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }

    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col * n + k] * x[k];
        }
        x[col] = acc / a[col * n + col];
    }
    Ok(x)
}

/// Lower-triangular Cholesky factor of a symmetric matrix, or `None` when the
/// matrix is not positive definite.
pub(crate) fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * n + j] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Fixed-order pairwise summation. Deterministic for a given slice regardless
/// of how the values were produced, and far more accurate than a naive left
/// fold on long Monte-Carlo streams.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
