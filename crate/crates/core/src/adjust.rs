//! Multicollinearity adjustment factors.
//!
//! Given a coalition of numeric features under evaluation, every other
//! numeric feature `k` receives an additive adjustment
//! `AF_k(x) = a_1·x_{t1} + … + a_q·x_{tq}` over the coalition members such
//! that the adjusted column `X_k + AF_k` has zero empirical covariance with
//! every coalition member. The coefficients solve the coalition Gram system
//!
//! ```text
//! A · a = −c,   A[u][v] = cov(X_{tu}, X_{tv}),   c[u] = cov(X_{tu}, X_k)
//! ```
//!
//! which is the zero-correlation condition written out: for each member t,
//! `cov(X_t, X_k) + Σ_v a_v · cov(X_t, X_{tv}) = 0`. The system is solved by
//! Gaussian elimination with partial pivoting; a coalition whose Gram matrix
//! is (near-)singular — linearly dependent members — is rejected, since the
//! adjustment is then not identifiable.
//!
//! Adjustments use raw (uncentered) feature values: `AF_k` is homogeneous
//! linear in the coalition values, and covariances are unaffected by the
//! missing centering.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dataset::{CovarianceCache, DataMatrix};
use crate::linalg;

/// Relative variance floor below which a coalition member is considered
/// constant and the adjustment undefined: `var(X_t)` must exceed
/// `1e-12 × mean numeric variance`.
pub const DEGENERATE_VARIANCE_REL_TOL: f64 = 1e-12;

/// Relative pivot floor for the Gram elimination: a pivot below
/// `1e-10 × max diag(A)` rejects the coalition as singular.
pub const SINGULAR_PIVOT_REL_TOL: f64 = 1e-10;

/// Normalized empirical-orthogonality bound a built plan must satisfy:
/// `|cov(X_t, X_k + AF_k)| <= 1e-8 · sd(X_t) · sd(X_k)`.
pub const ORTHOGONALITY_REL_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum AdjustError {
    #[error("coalition is empty")]
    EmptyCoalition,
    #[error("feature index {index} out of range for {width} features")]
    FeatureOutOfRange { index: usize, width: usize },
    #[error("duplicate feature index {0} in coalition")]
    DuplicateCoalitionFeature(usize),
    #[error("feature {0} is not numeric; the adjustment is only defined for numeric features")]
    NonNumericFeature(usize),
    #[error("target feature {0} is a coalition member")]
    TargetInCoalition(usize),
    #[error("feature {feature} has degenerate variance {variance:.3e}; adjustment undefined")]
    DegenerateVariance { feature: usize, variance: f64 },
    #[error(
        "coalition members are linearly dependent (smallest elimination pivot {smallest_pivot:.3e}); drop one"
    )]
    SingularCoalition { smallest_pivot: f64 },
    #[error(
        "adjusted feature {feature} failed the orthogonality check (normalized covariance {normalized:.3e})"
    )]
    OrthogonalityCheckFailed { feature: usize, normalized: f64 },
    #[error("expected row of width {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
}

/// An ordered set of distinct numeric feature indices treated as one player.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoalitionSpec {
    indices: Vec<usize>,
}

impl CoalitionSpec {
    /// Validates indices against a dataset: non-empty, distinct, in range,
    /// all numeric.
    pub fn new(indices: Vec<usize>, data: &DataMatrix) -> Result<Self, AdjustError> {
        Self::validate(&indices, data.n_cols(), |c| data.is_numeric(c))?;
        Ok(CoalitionSpec { indices })
    }

    /// Validates against a covariance cache instead of the raw data.
    pub fn from_cache(indices: Vec<usize>, cache: &CovarianceCache) -> Result<Self, AdjustError> {
        Self::validate(&indices, cache.n_features(), |c| cache.is_numeric(c))?;
        Ok(CoalitionSpec { indices })
    }

    fn validate(
        indices: &[usize],
        width: usize,
        is_numeric: impl Fn(usize) -> bool,
    ) -> Result<(), AdjustError> {
        if indices.is_empty() {
            return Err(AdjustError::EmptyCoalition);
        }
        for (i, &idx) in indices.iter().enumerate() {
            if idx >= width {
                return Err(AdjustError::FeatureOutOfRange { index: idx, width });
            }
            if indices[..i].contains(&idx) {
                return Err(AdjustError::DuplicateCoalitionFeature(idx));
            }
            if !is_numeric(idx) {
                return Err(AdjustError::NonNumericFeature(idx));
            }
        }
        Ok(())
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.indices.contains(&idx)
    }
}

fn check_member(cache: &CovarianceCache, t: usize) -> Result<(), AdjustError> {
    if t >= cache.n_features() {
        return Err(AdjustError::FeatureOutOfRange {
            index: t,
            width: cache.n_features(),
        });
    }
    if !cache.is_numeric(t) {
        return Err(AdjustError::NonNumericFeature(t));
    }
    let var = cache.variance(t).expect("numeric feature has variance");
    if var <= DEGENERATE_VARIANCE_REL_TOL * cache.mean_numeric_variance() || var == 0.0 {
        return Err(AdjustError::DegenerateVariance { feature: t, variance: var });
    }
    Ok(())
}

/// Adjustment coefficients for feature `k` against an arbitrary coalition:
/// solves the Gram system `A·a = −c`. Single features and pairs are the
/// q = 1 and q = 2 cases of this routine.
pub fn af_coalition(
    cache: &CovarianceCache,
    coalition: &[usize],
    k: usize,
) -> Result<Vec<f64>, AdjustError> {
    if coalition.is_empty() {
        return Err(AdjustError::EmptyCoalition);
    }
    for (i, &t) in coalition.iter().enumerate() {
        if coalition[..i].contains(&t) {
            return Err(AdjustError::DuplicateCoalitionFeature(t));
        }
        check_member(cache, t)?;
    }
    if k >= cache.n_features() {
        return Err(AdjustError::FeatureOutOfRange {
            index: k,
            width: cache.n_features(),
        });
    }
    if coalition.contains(&k) {
        return Err(AdjustError::TargetInCoalition(k));
    }
    if !cache.is_numeric(k) {
        return Err(AdjustError::NonNumericFeature(k));
    }

    let q = coalition.len();
    let mut gram = vec![0.0; q * q];
    let mut rhs = vec![0.0; q];
    for (u, &tu) in coalition.iter().enumerate() {
        for (v, &tv) in coalition.iter().enumerate() {
            gram[u * q + v] = cache.covariance(tu, tv).expect("numeric pair");
        }
        rhs[u] = -cache.covariance(tu, k).expect("numeric pair");
    }
    linalg::solve(gram, rhs, q, SINGULAR_PIVOT_REL_TOL)
        .map_err(|e| AdjustError::SingularCoalition { smallest_pivot: e.smallest_pivot })
}

/// Coefficient `a` such that `X_k + a·X_j` is empirically uncorrelated with
/// `X_j`; equals `−cov(X_j, X_k) / var(X_j)`.
pub fn af_single(cache: &CovarianceCache, j: usize, k: usize) -> Result<f64, AdjustError> {
    let coeffs = af_coalition(cache, &[j], k)?;
    Ok(coeffs[0])
}

/// Coefficients `(a, b)` such that `X_k + a·X_i + b·X_j` is empirically
/// uncorrelated with both `X_i` and `X_j`.
pub fn af_pair(
    cache: &CovarianceCache,
    i: usize,
    j: usize,
    k: usize,
) -> Result<(f64, f64), AdjustError> {
    let coeffs = af_coalition(cache, &[i, j], k)?;
    Ok((coeffs[0], coeffs[1]))
}

/// Complete adjustment plan for one coalition: coefficients for every numeric
/// non-coalition feature, and the list of non-numeric features left alone.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustmentPlan {
    coalition: CoalitionSpec,
    coefficients: BTreeMap<usize, Vec<f64>>,
    skipped: Vec<usize>,
    width: usize,
}

impl AdjustmentPlan {
    pub fn coalition(&self) -> &CoalitionSpec {
        &self.coalition
    }

    /// Coefficient vector (coalition order) for an adjustable feature.
    pub fn coefficients(&self, k: usize) -> Option<&[f64]> {
        self.coefficients.get(&k).map(|v| v.as_slice())
    }

    /// Iterator over (adjustable feature, coefficient vector), ascending.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.coefficients.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    /// Non-numeric features the plan leaves unadjusted.
    pub fn skipped(&self) -> &[usize] {
        &self.skipped
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Per-feature additive deltas for a fixed vector of coalition values:
    /// `delta_k = Σ_t a_t · v_t`. The deltas depend only on the coalition
    /// values, so estimators compute them once per instance.
    pub fn deltas(&self, coalition_values: &[f64]) -> Result<Vec<(usize, f64)>, AdjustError> {
        if coalition_values.len() != self.coalition.len() {
            return Err(AdjustError::WidthMismatch {
                expected: self.coalition.len(),
                got: coalition_values.len(),
            });
        }
        Ok(self
            .coefficients
            .iter()
            .map(|(&k, coeffs)| {
                let mut delta = 0.0;
                for (a, v) in coeffs.iter().zip(coalition_values) {
                    delta += a * v;
                }
                (k, delta)
            })
            .collect())
    }

    /// CSV rendering of the plan for audit: one row per adjustable feature,
    /// one coefficient column per coalition member.
    pub fn to_csv(&self, feature_names: &[String]) -> String {
        let mut out = String::from("feature");
        for &t in self.coalition.indices() {
            out.push_str(&format!(",coeff_{}", feature_names[t]));
        }
        out.push('\n');
        for (k, coeffs) in self.iter() {
            out.push_str(&feature_names[k]);
            for a in coeffs {
                out.push_str(&format!(",{a}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the adjustment plan for a coalition and verifies the empirical
/// orthogonality invariant against the background data before returning it.
pub fn build_plan(
    cache: &CovarianceCache,
    data: &DataMatrix,
    coalition: &CoalitionSpec,
) -> Result<AdjustmentPlan, AdjustError> {
    let m = data.n_cols();
    let mut coefficients = BTreeMap::new();
    let mut skipped = Vec::new();
    for k in 0..m {
        if coalition.contains(k) {
            continue;
        }
        if !data.is_numeric(k) {
            skipped.push(k);
            continue;
        }
        let coeffs = af_coalition(cache, coalition.indices(), k)?;
        coefficients.insert(k, coeffs);
    }
    let plan = AdjustmentPlan {
        coalition: coalition.clone(),
        coefficients,
        skipped,
        width: m,
    };
    verify_orthogonality(&plan, data, cache)?;
    Ok(plan)
}

/// Recomputes, column-wise on the raw data, the covariance between each
/// coalition member and each adjusted column `X_k + AF_k`, and checks the
/// normalized bound. Row-wise application with values taken from each row is
/// exactly the random-variable identity the construction targets.
fn verify_orthogonality(
    plan: &AdjustmentPlan,
    data: &DataMatrix,
    cache: &CovarianceCache,
) -> Result<(), AdjustError> {
    let n = data.n_rows();
    let denom = (n - 1) as f64;
    for (k, coeffs) in plan.iter() {
        // adjusted column z = x_k + sum_t a_t x_t, built row by row
        let mut adjusted = Vec::with_capacity(n);
        for r in 0..n {
            let mut z = data.value(r, k);
            for (a, &t) in coeffs.iter().zip(plan.coalition.indices()) {
                z += a * data.value(r, t);
            }
            adjusted.push(z);
        }
        let mean_z = adjusted.iter().sum::<f64>() / n as f64;
        let sd_k = cache.sd(k).expect("adjustable features are numeric");
        for &t in plan.coalition.indices() {
            let mean_t = cache.mean(t);
            let mut acc = 0.0;
            for r in 0..n {
                acc += (data.value(r, t) - mean_t) * (adjusted[r] - mean_z);
            }
            let cov = acc / denom;
            let sd_t = cache.sd(t).expect("coalition members are numeric");
            let scale = sd_t * sd_k;
            let normalized = if scale > 0.0 { cov.abs() / scale } else { cov.abs() };
            if normalized > ORTHOGONALITY_REL_TOL {
                return Err(AdjustError::OrthogonalityCheckFailed {
                    feature: k,
                    normalized,
                });
            }
        }
    }
    Ok(())
}

/// Applies a plan to one row: each adjustable feature `k` becomes
/// `row_k + Σ_t a_t·v_t` where `v` holds the coalition values to adjust
/// against. Coalition members and skipped features are unchanged.
pub fn apply_plan(
    plan: &AdjustmentPlan,
    instance_coalition_values: &[f64],
    row: &[f64],
) -> Result<Vec<f64>, AdjustError> {
    if row.len() != plan.width {
        return Err(AdjustError::WidthMismatch {
            expected: plan.width,
            got: row.len(),
        });
    }
    let deltas = plan.deltas(instance_coalition_values)?;
    let mut out = row.to_vec();
    for (k, delta) in deltas {
        if delta != 0.0 {
            out[k] += delta;
        }
    }
    Ok(out)
}
