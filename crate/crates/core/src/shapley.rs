//! Monte-Carlo Shapley estimation with and without the multicollinearity
//! correction, plus an exact enumeration oracle for small feature counts.
//!
//! Each iteration draws a donor row uniformly with replacement from the
//! background data and a uniform random insertion order. Features ordered
//! before the target take the instance's values, features after take the
//! donor's, and the marginal contribution is the prediction difference
//! between the vector with the target present (instance value) and absent
//! (donor value). A coalition is treated as a single player: one insertion
//! slot for the whole block.
//!
//! In corrected (`mcc`) mode, every instance-sourced numeric feature ahead of
//! the target additionally receives its adjustment `AF_k`, computed from the
//! instance's coalition values and applied identically to both vectors, so
//! the features left in place carry no correlation trace of the coalition
//! being randomized. The adjustment coefficients come from covariances of the
//! background data itself — the same matrix the donors are drawn from. Since
//! both vectors shift together, a purely additive model sees no change; the
//! correction acts through model interactions.
//!
//! Per-iteration randomness is a counter-based stream derived from
//! `(seed, target, iteration)`, and aggregation is fixed-order pairwise
//! summation, so estimates are bitwise identical no matter how iterations are
//! partitioned across workers.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::adjust::{build_plan, AdjustError, CoalitionSpec};
use crate::dataset::{compute_covariance, DataMatrix, DatasetError};
use crate::linalg::pairwise_sum;
use crate::models::PredictorHandle;

/// Largest feature count `exact_shapley` will enumerate.
pub const EXACT_MAX_FEATURES: usize = 12;
/// Largest background `exact_shapley` will average over.
pub const EXACT_MAX_BACKGROUND: usize = 64;

#[derive(Debug, Error)]
pub enum ShapleyError {
    #[error(transparent)]
    Adjust(#[from] AdjustError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("feature index {index} out of range for {width} features")]
    InvalidFeature { index: usize, width: usize },
    #[error("feature {0} is not numeric; corrected mode requires a numeric target")]
    NonNumericFeature(usize),
    #[error("estimator needs at least one iteration")]
    ZeroIterations,
    #[error("expected width {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("exact enumeration supports at most {max} features, got {m}")]
    TooManyFeatures { m: usize, max: usize },
    #[error("exact enumeration supports at most {max} background rows, got {n}")]
    BackgroundTooLarge { n: usize, max: usize },
}

/// Whether the multicollinearity correction is applied during vector
/// construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Multicollinearity-corrected.
    Mcc,
    /// Plain permutation sampling, no correction.
    Nmcc,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        match s.to_ascii_lowercase().as_str() {
            "mcc" => Some(Mode::Mcc),
            "nmcc" => Some(Mode::Nmcc),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Mcc => write!(f, "mcc"),
            Mode::Nmcc => write!(f, "nmcc"),
        }
    }
}

/// Estimation settings plus the background data donors and covariances are
/// drawn from.
#[derive(Debug, Clone)]
pub struct EstimatorConfig<'a> {
    /// Monte-Carlo iterations M.
    pub iterations: usize,
    pub seed: u64,
    pub mode: Mode,
    pub background: &'a DataMatrix,
    /// Worker threads; any value yields bitwise-identical estimates.
    pub workers: usize,
}

impl<'a> EstimatorConfig<'a> {
    pub fn new(background: &'a DataMatrix, mode: Mode) -> Self {
        EstimatorConfig {
            iterations: 10_000,
            seed: 42,
            mode,
            background,
            workers: 1,
        }
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

/// What an estimate attributes to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Feature(usize),
    Coalition(Vec<usize>),
}

impl Target {
    /// Human-readable label: feature name, or coalition names joined by '+'.
    pub fn label(&self, feature_names: &[String]) -> String {
        match self {
            Target::Feature(j) => feature_names[*j].clone(),
            Target::Coalition(indices) => indices
                .iter()
                .map(|&t| feature_names[t].as_str())
                .collect::<Vec<_>>()
                .join("+"),
        }
    }
}

/// A Monte-Carlo Shapley estimate. `value` is in the model's output units
/// (logits for classifiers); `std_error` is the within-run standard error,
/// the sample standard deviation of per-iteration marginals over √M.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyEstimate {
    pub value: f64,
    pub std_error: f64,
    pub iterations: usize,
    pub target: Target,
    pub mode: Mode,
}

impl ShapleyEstimate {
    /// Quadrature-combined standard error of this and another estimate; the
    /// scale for comparing two estimates.
    pub fn combined_std_error(&self, other: &ShapleyEstimate) -> f64 {
        (self.std_error * self.std_error + other.std_error * other.std_error).sqrt()
    }
}

/// SplitMix64 finalizer; the fixed mixing function behind all derived seeds.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Stable identifier for an attribution target; a singleton coalition hashes
/// identically to the bare feature, so the two entry points share streams.
fn target_id(indices: &[usize]) -> u64 {
    let mut h = 0x7065726d75746564u64;
    for &i in indices {
        h = mix64(h ^ (i as u64 + 1));
    }
    h
}

/// 32-byte ChaCha seed for one iteration of one target.
fn stream_seed(seed: u64, target: u64, iteration: u64) -> [u8; 32] {
    let a = mix64(seed ^ mix64(target));
    let b = mix64(a ^ iteration);
    let c = mix64(b);
    let d = mix64(c);
    let mut out = [0u8; 32];
    out[0..8].copy_from_slice(&b.to_le_bytes());
    out[8..16].copy_from_slice(&c.to_le_bytes());
    out[16..24].copy_from_slice(&d.to_le_bytes());
    out[24..32].copy_from_slice(&mix64(d).to_le_bytes());
    out
}

const BLOCK: u32 = u32::MAX;

struct IterationScratch {
    slots: Vec<u32>,
    plus: Vec<f64>,
    minus: Vec<f64>,
}

/// One Monte-Carlo iteration: returns the marginal contribution of the
/// coalition block for the iteration's donor row and insertion order.
#[allow(clippy::too_many_arguments)]
fn iteration_marginal(
    model: &PredictorHandle,
    background: &DataMatrix,
    instance: &[f64],
    coalition: &[usize],
    base_slots: &[u32],
    deltas: Option<&[f64]>,
    seed: u64,
    target: u64,
    iteration: u64,
    scratch: &mut IterationScratch,
) -> f64 {
    let mut rng = ChaCha8Rng::from_seed(stream_seed(seed, target, iteration));
    let donor_idx = rng.gen_range(0..background.n_rows() as u64) as usize;
    let donor = background.row(donor_idx);

    // Fisher-Yates over the non-coalition features plus one block slot.
    scratch.slots.clear();
    scratch.slots.extend_from_slice(base_slots);
    let len = scratch.slots.len();
    for i in (1..len).rev() {
        let j = rng.gen_range(0..(i + 1) as u64) as usize;
        scratch.slots.swap(i, j);
    }

    scratch.plus.clear();
    scratch.plus.extend_from_slice(donor);
    for &slot in scratch.slots.iter() {
        if slot == BLOCK {
            break;
        }
        let k = slot as usize;
        scratch.plus[k] = instance[k];
        if let Some(deltas) = deltas {
            let delta = deltas[k];
            if delta != 0.0 {
                scratch.plus[k] += delta;
            }
        }
    }
    scratch.minus.clear();
    scratch.minus.extend_from_slice(&scratch.plus);
    for &t in coalition {
        scratch.plus[t] = instance[t];
    }

    model.predict_one(&scratch.plus) - model.predict_one(&scratch.minus)
}

fn validate_common(
    model: &PredictorHandle,
    config: &EstimatorConfig<'_>,
    instance: &[f64],
) -> Result<(), ShapleyError> {
    if config.iterations == 0 {
        return Err(ShapleyError::ZeroIterations);
    }
    let m = config.background.n_cols();
    if instance.len() != m {
        return Err(ShapleyError::WidthMismatch {
            expected: m,
            got: instance.len(),
        });
    }
    if model.width() != m {
        return Err(ShapleyError::WidthMismatch {
            expected: m,
            got: model.width(),
        });
    }
    for (c, &v) in instance.iter().enumerate() {
        if !v.is_finite() {
            return Err(ShapleyError::Dataset(DatasetError::NonFiniteValue {
                row: 0,
                column: config.background.feature_names()[c].clone(),
            }));
        }
    }
    Ok(())
}

/// Shared estimator body. `coalition` indices are validated by the caller.
fn estimate_block(
    model: &PredictorHandle,
    config: &EstimatorConfig<'_>,
    instance: &[f64],
    coalition: Vec<usize>,
    target: Target,
) -> Result<ShapleyEstimate, ShapleyError> {
    validate_common(model, config, instance)?;
    let background = config.background;
    let m = background.n_cols();

    // Per-feature additive adjustments; constant across iterations because
    // AF is always evaluated at the instance's coalition values.
    let deltas: Option<Vec<f64>> = match config.mode {
        Mode::Nmcc => None,
        Mode::Mcc => {
            let cache = compute_covariance(background)?;
            let spec = CoalitionSpec::from_cache(coalition.clone(), &cache)?;
            let plan = build_plan(&cache, background, &spec)?;
            let values: Vec<f64> = coalition.iter().map(|&t| instance[t]).collect();
            let mut dense = vec![0.0; m];
            for (k, delta) in plan.deltas(&values)? {
                dense[k] = delta;
            }
            Some(dense)
        }
    };

    let base_slots: Vec<u32> = (0..m as u32)
        .filter(|c| !coalition.contains(&(*c as usize)))
        .chain(std::iter::once(BLOCK))
        .collect();

    let tid = target_id(&coalition);
    let run = |t: u64, scratch: &mut IterationScratch| {
        iteration_marginal(
            model,
            background,
            instance,
            &coalition,
            &base_slots,
            deltas.as_deref(),
            config.seed,
            tid,
            t,
            scratch,
        )
    };

    let iterations = config.iterations;
    let marginals: Vec<f64> = if config.workers <= 1 {
        let mut scratch = IterationScratch {
            slots: Vec::with_capacity(base_slots.len()),
            plus: Vec::with_capacity(m),
            minus: Vec::with_capacity(m),
        };
        (0..iterations as u64).map(|t| run(t, &mut scratch)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .expect("thread pool");
        pool.install(|| {
            use rayon::prelude::*;
            (0..iterations as u64)
                .into_par_iter()
                .map_init(
                    || IterationScratch {
                        slots: Vec::with_capacity(base_slots.len()),
                        plus: Vec::with_capacity(m),
                        minus: Vec::with_capacity(m),
                    },
                    |scratch, t| run(t, scratch),
                )
                .collect()
        })
    };

    let mean = pairwise_sum(&marginals) / iterations as f64;
    let std_error = if iterations > 1 {
        let sq: Vec<f64> = marginals.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&sq) / (iterations - 1) as f64;
        (var / iterations as f64).sqrt()
    } else {
        0.0
    };

    Ok(ShapleyEstimate {
        value: mean,
        std_error,
        iterations,
        target,
        mode: config.mode,
    })
}

/// Monte-Carlo Shapley value of feature `j` for `instance`. In corrected mode
/// `j` must be numeric and its adjustment plan buildable.
pub fn estimate_single(
    model: &PredictorHandle,
    config: &EstimatorConfig<'_>,
    instance: &[f64],
    j: usize,
) -> Result<ShapleyEstimate, ShapleyError> {
    let m = config.background.n_cols();
    if j >= m {
        return Err(ShapleyError::InvalidFeature { index: j, width: m });
    }
    if config.mode == Mode::Mcc && !config.background.is_numeric(j) {
        return Err(ShapleyError::NonNumericFeature(j));
    }
    estimate_block(model, config, instance, vec![j], Target::Feature(j))
}

/// Monte-Carlo Shapley value of a coalition treated as one player: one
/// insertion slot for the whole block, all members present or absent
/// together. A singleton coalition is bitwise identical to
/// [`estimate_single`] at the same seed.
pub fn estimate_coalition(
    model: &PredictorHandle,
    config: &EstimatorConfig<'_>,
    instance: &[f64],
    coalition: &CoalitionSpec,
) -> Result<ShapleyEstimate, ShapleyError> {
    let m = config.background.n_cols();
    for &t in coalition.indices() {
        if t >= m {
            return Err(ShapleyError::InvalidFeature { index: t, width: m });
        }
    }
    estimate_block(
        model,
        config,
        instance,
        coalition.indices().to_vec(),
        Target::Coalition(coalition.indices().to_vec()),
    )
}

/// One estimate per feature, each from its own derived random stream.
/// Per-feature failures (e.g. corrected mode on a categorical column) are
/// collected rather than aborting the batch.
pub fn estimate_all(
    model: &PredictorHandle,
    config: &EstimatorConfig<'_>,
    instance: &[f64],
) -> Vec<Result<ShapleyEstimate, ShapleyError>> {
    (0..config.background.n_cols())
        .map(|j| estimate_single(model, config, instance, j))
        .collect()
}

/// Classical subset-weighted Shapley value by full enumeration:
///
/// ```text
/// φ_j = Σ_{S ⊆ F∖{j}} |S|!(m−|S|−1)!/m! · [v(S ∪ {j}) − v(S)]
/// ```
///
/// where `v(S)` is the mean prediction over background rows with instance
/// values spliced in on `S`. Exponential in `m`; intended as a test oracle.
pub fn exact_shapley(
    model: &PredictorHandle,
    background: &DataMatrix,
    instance: &[f64],
    j: usize,
) -> Result<f64, ShapleyError> {
    let m = background.n_cols();
    if m > EXACT_MAX_FEATURES {
        return Err(ShapleyError::TooManyFeatures {
            m,
            max: EXACT_MAX_FEATURES,
        });
    }
    let n = background.n_rows();
    if n > EXACT_MAX_BACKGROUND {
        return Err(ShapleyError::BackgroundTooLarge {
            n,
            max: EXACT_MAX_BACKGROUND,
        });
    }
    if j >= m {
        return Err(ShapleyError::InvalidFeature { index: j, width: m });
    }
    if instance.len() != m {
        return Err(ShapleyError::WidthMismatch {
            expected: m,
            got: instance.len(),
        });
    }
    if model.width() != m {
        return Err(ShapleyError::WidthMismatch {
            expected: m,
            got: model.width(),
        });
    }

    let mut factorial = vec![1.0f64; m + 1];
    for i in 1..=m {
        factorial[i] = factorial[i - 1] * i as f64;
    }

    // v(S) for every subset mask
    let total = 1usize << m;
    let mut coalition_value = vec![0.0f64; total];
    let mut composite = vec![0.0f64; m];
    for (mask, slot) in coalition_value.iter_mut().enumerate() {
        let mut acc = 0.0;
        for r in 0..n {
            let row = background.row(r);
            for c in 0..m {
                composite[c] = if (mask >> c) & 1 == 1 { instance[c] } else { row[c] };
            }
            acc += model.predict_one(&composite);
        }
        *slot = acc / n as f64;
    }

    let bit = 1usize << j;
    let mut phi = 0.0;
    for mask in 0..total {
        if mask & bit != 0 {
            continue;
        }
        let s = mask.count_ones() as usize;
        let weight = factorial[s] * factorial[m - s - 1] / factorial[m];
        phi += weight * (coalition_value[mask | bit] - coalition_value[mask]);
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureKind;
    use crate::models::OutputKind;
    use rand::Rng;

    fn gaussian_background(m: usize, n: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| {
                        let u: f64 = rng.gen_range(-1.0f64..1.0);
                        u * 1.5
                    })
                    .collect()
            })
            .collect();
        DataMatrix::from_rows(
            (0..m).map(|i| format!("x{i}")).collect(),
            vec![FeatureKind::Numeric; m],
            rows,
        )
        .unwrap()
    }

    fn linear_model(weights: Vec<f64>) -> PredictorHandle {
        let width = weights.len();
        PredictorHandle::from_fn(width, OutputKind::RegressionScore, "linear-probe", move |row| {
            weights.iter().zip(row).map(|(w, x)| w * x).sum()
        })
    }

    #[test]
    fn nmcc_matches_linear_closed_form_and_exact_oracle() {
        let background = gaussian_background(3, 40, 5);
        let weights = vec![2.0, -1.5, 0.75];
        let model = linear_model(weights.clone());
        let instance = vec![1.2, -0.3, 0.8];
        let config = EstimatorConfig::new(&background, Mode::Nmcc)
            .with_iterations(40_000)
            .with_seed(11);
        for j in 0..3 {
            let est = estimate_single(&model, &config, &instance, j).unwrap();
            let mean_j = background.column(j).iter().sum::<f64>() / background.n_rows() as f64;
            let analytic = weights[j] * (instance[j] - mean_j);
            assert!(
                (est.value - analytic).abs() <= 4.0 * est.std_error,
                "feature {j}: {} vs analytic {analytic} (se {})",
                est.value,
                est.std_error
            );
            let oracle = exact_shapley(&model, &background, &instance, j).unwrap();
            assert!((oracle - analytic).abs() <= 1e-10);
        }
    }

    #[test]
    fn mcc_equals_nmcc_bitwise_under_diagonal_covariance() {
        // Hadamard-pattern columns have exactly zero pairwise covariance.
        let rows = vec![
            vec![1.0, 1.0, 1.0],
            vec![1.0, -1.0, -1.0],
            vec![-1.0, 1.0, -1.0],
            vec![-1.0, -1.0, 1.0],
            vec![1.0, 1.0, 1.0],
            vec![1.0, -1.0, -1.0],
            vec![-1.0, 1.0, -1.0],
            vec![-1.0, -1.0, 1.0],
        ];
        let background = DataMatrix::from_rows(
            vec!["a".into(), "b".into(), "c".into()],
            vec![FeatureKind::Numeric; 3],
            rows,
        )
        .unwrap();
        let model = PredictorHandle::from_fn(3, OutputKind::RegressionScore, "interactive", |r| {
            r[0] * r[1] + 0.5 * r[2] + (r[0] + r[2]).tanh()
        });
        let instance = vec![1.0, -1.0, 1.0];
        for j in 0..3 {
            let nmcc = estimate_single(
                &model,
                &EstimatorConfig::new(&background, Mode::Nmcc).with_iterations(500),
                &instance,
                j,
            )
            .unwrap();
            let mcc = estimate_single(
                &model,
                &EstimatorConfig::new(&background, Mode::Mcc).with_iterations(500),
                &instance,
                j,
            )
            .unwrap();
            assert_eq!(nmcc.value.to_bits(), mcc.value.to_bits());
            assert_eq!(nmcc.std_error.to_bits(), mcc.std_error.to_bits());
        }
    }

    #[test]
    fn singleton_coalition_is_bitwise_identical_to_single() {
        let background = gaussian_background(4, 30, 9);
        let model = PredictorHandle::from_fn(4, OutputKind::RegressionScore, "probe", |r| {
            r[0].tanh() + r[1] * r[2] - 0.2 * r[3]
        });
        let instance = vec![0.4, -1.1, 0.9, 0.1];
        for mode in [Mode::Nmcc, Mode::Mcc] {
            let config = EstimatorConfig::new(&background, mode).with_iterations(800);
            let single = estimate_single(&model, &config, &instance, 1).unwrap();
            let spec = CoalitionSpec::new(vec![1], &background).unwrap();
            let block = estimate_coalition(&model, &config, &instance, &spec).unwrap();
            assert_eq!(single.value.to_bits(), block.value.to_bits());
            assert_eq!(single.std_error.to_bits(), block.std_error.to_bits());
        }
    }

    #[test]
    fn coalition_of_independent_features_is_additive_in_closed_form() {
        let background = gaussian_background(4, 50, 3);
        let weights = vec![1.0, -2.0, 0.5, 3.0];
        let model = linear_model(weights.clone());
        let instance = vec![0.9, 0.4, -1.2, 0.3];
        let config = EstimatorConfig::new(&background, Mode::Nmcc)
            .with_iterations(40_000)
            .with_seed(4);
        let spec = CoalitionSpec::new(vec![0, 1], &background).unwrap();
        let est = estimate_coalition(&model, &config, &instance, &spec).unwrap();
        let mean = |j: usize| background.column(j).iter().sum::<f64>() / background.n_rows() as f64;
        let analytic =
            weights[0] * (instance[0] - mean(0)) + weights[1] * (instance[1] - mean(1));
        assert!(
            (est.value - analytic).abs() <= 4.0 * est.std_error,
            "{} vs {analytic}",
            est.value
        );
    }

    #[test]
    fn estimate_all_is_deterministic_and_collects_errors() {
        let background = DataMatrix::from_rows(
            vec!["x".into(), "flag".into()],
            vec![FeatureKind::Numeric, FeatureKind::EncodedCategorical],
            vec![
                vec![0.5, 0.0],
                vec![-1.0, 1.0],
                vec![2.0, 0.0],
                vec![0.0, 1.0],
            ],
        )
        .unwrap();
        let model = PredictorHandle::from_fn(2, OutputKind::RegressionScore, "probe", |r| {
            r[0] * (1.0 + r[1])
        });
        let instance = vec![1.0, 1.0];
        let config = EstimatorConfig::new(&background, Mode::Mcc).with_iterations(300);
        let first = estimate_all(&model, &config, &instance);
        let second = estimate_all(&model, &config, &instance);
        assert!(first[0].is_ok());
        // corrected mode on the categorical column fails, collected not fatal
        assert!(matches!(
            first[1],
            Err(ShapleyError::NonNumericFeature(1))
        ));
        let (a, b) = (first[0].as_ref().unwrap(), second[0].as_ref().unwrap());
        assert_eq!(a.value.to_bits(), b.value.to_bits());

        // the uncorrected mode has no numeric precondition on the target
        let nmcc = EstimatorConfig::new(&background, Mode::Nmcc).with_iterations(300);
        assert!(estimate_single(&model, &nmcc, &instance, 1).is_ok());
    }

    #[test]
    fn correction_cancels_for_linear_models() {
        // the adjustment shifts both vectors identically, so for a linear
        // model the marginal is unchanged up to floating-point noise; this
        // guards against ever applying the shift to only one vector
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let rows: Vec<Vec<f64>> = (0..120)
            .map(|_| {
                let u: f64 = rng.gen_range(-1.0..1.0);
                let a = u + 0.2 * rng.gen_range(-1.0..1.0);
                let b = u + 0.2 * rng.gen_range(-1.0..1.0);
                let c: f64 = rng.gen_range(-1.0..1.0);
                vec![a, b, c]
            })
            .collect();
        let background = DataMatrix::from_rows(
            vec!["a".into(), "b".into(), "c".into()],
            vec![FeatureKind::Numeric; 3],
            rows,
        )
        .unwrap();
        let model = linear_model(vec![2.0, -1.0, 0.5]);
        let instance = vec![0.9, 0.7, -0.4];
        for j in 0..3 {
            let nmcc = estimate_single(
                &model,
                &EstimatorConfig::new(&background, Mode::Nmcc).with_iterations(5_000),
                &instance,
                j,
            )
            .unwrap();
            let mcc = estimate_single(
                &model,
                &EstimatorConfig::new(&background, Mode::Mcc).with_iterations(5_000),
                &instance,
                j,
            )
            .unwrap();
            assert!(
                (nmcc.value - mcc.value).abs() <= 1e-9,
                "feature {j}: corrected {} vs uncorrected {}",
                mcc.value,
                nmcc.value
            );
        }
    }

    #[test]
    fn corrected_mode_rejects_constant_target_feature() {
        let background = DataMatrix::from_rows(
            vec!["x".into(), "fixed".into()],
            vec![FeatureKind::Numeric; 2],
            vec![vec![1.0, 5.0], vec![2.0, 5.0], vec![-1.0, 5.0], vec![0.5, 5.0]],
        )
        .unwrap();
        let model = PredictorHandle::from_fn(2, OutputKind::RegressionScore, "probe", |r| {
            r[0] + r[1]
        });
        let config = EstimatorConfig::new(&background, Mode::Mcc).with_iterations(200);
        let err = estimate_single(&model, &config, &[1.0, 5.0], 1).unwrap_err();
        assert!(matches!(
            err,
            ShapleyError::Adjust(AdjustError::DegenerateVariance { feature: 1, .. })
        ));
    }

    #[test]
    fn single_feature_gets_full_attribution() {
        let background = gaussian_background(1, 32, 8);
        let model = PredictorHandle::from_fn(1, OutputKind::RegressionScore, "probe", |r| {
            (2.0 * r[0]).sin() + r[0]
        });
        let instance = vec![0.7];
        let config = EstimatorConfig::new(&background, Mode::Nmcc).with_iterations(20_000);
        let est = estimate_single(&model, &config, &instance, 0).unwrap();
        let mean_pred = (0..background.n_rows())
            .map(|r| model.predict_one(background.row(r)))
            .sum::<f64>()
            / background.n_rows() as f64;
        let expected = model.predict_one(&instance) - mean_pred;
        assert!((est.value - expected).abs() <= 4.0 * est.std_error.max(1e-12));
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let background = gaussian_background(5, 64, 21);
        let model = PredictorHandle::from_fn(5, OutputKind::RegressionScore, "probe", |r| {
            r.iter().enumerate().map(|(i, x)| (i as f64 + 1.0) * x.tanh()).sum()
        });
        let instance = vec![0.3, -0.6, 1.4, 0.0, -1.0];
        for mode in [Mode::Nmcc, Mode::Mcc] {
            let serial = estimate_single(
                &model,
                &EstimatorConfig::new(&background, mode).with_iterations(4_000),
                &instance,
                2,
            )
            .unwrap();
            let parallel = estimate_single(
                &model,
                &EstimatorConfig::new(&background, mode)
                    .with_iterations(4_000)
                    .with_workers(4),
                &instance,
                2,
            )
            .unwrap();
            assert_eq!(serial.value.to_bits(), parallel.value.to_bits());
            assert_eq!(serial.std_error.to_bits(), parallel.std_error.to_bits());
        }
    }

    #[test]
    fn nmcc_sum_approximates_efficiency() {
        let background = gaussian_background(4, 48, 33);
        let model = PredictorHandle::from_fn(4, OutputKind::RegressionScore, "probe", |r| {
            r[0] * r[1] + r[2].tanh() - 0.8 * r[3] + 0.3 * r[0]
        });
        let instance = vec![1.1, -0.7, 0.2, 0.9];
        let config = EstimatorConfig::new(&background, Mode::Nmcc)
            .with_iterations(50_000)
            .with_seed(2);
        let estimates: Vec<ShapleyEstimate> = estimate_all(&model, &config, &instance)
            .into_iter()
            .map(|e| e.unwrap())
            .collect();
        let sum: f64 = estimates.iter().map(|e| e.value).sum();
        let joint_sigma: f64 = estimates
            .iter()
            .map(|e| e.std_error * e.std_error)
            .sum::<f64>()
            .sqrt();
        let mean_pred = (0..background.n_rows())
            .map(|r| model.predict_one(background.row(r)))
            .sum::<f64>()
            / background.n_rows() as f64;
        let total = model.predict_one(&instance) - mean_pred;
        assert!(
            (sum - total).abs() <= 5.0 * joint_sigma,
            "sum {sum} vs total {total} (sigma {joint_sigma})"
        );
    }

    #[test]
    fn ignored_feature_has_no_attribution() {
        let background = gaussian_background(3, 40, 13);
        let model = linear_model(vec![2.0, 0.0, -1.0]);
        let instance = vec![0.5, 1.5, -0.5];
        for mode in [Mode::Nmcc, Mode::Mcc] {
            let config = EstimatorConfig::new(&background, mode).with_iterations(10_000);
            let est = estimate_single(&model, &config, &instance, 1).unwrap();
            assert!(est.value.abs() <= 4.0 * est.std_error.max(1e-12));
        }
    }

    #[test]
    fn exact_shapley_single_feature_case() {
        let background = gaussian_background(1, 20, 41);
        let model = PredictorHandle::from_fn(1, OutputKind::RegressionScore, "probe", |r| {
            r[0] * r[0]
        });
        let instance = vec![1.5];
        let phi = exact_shapley(&model, &background, &instance, 0).unwrap();
        let mean_pred = (0..background.n_rows())
            .map(|r| model.predict_one(background.row(r)))
            .sum::<f64>()
            / background.n_rows() as f64;
        assert!((phi - (model.predict_one(&instance) - mean_pred)).abs() <= 1e-12);
    }

    #[test]
    fn exact_shapley_symmetry_axiom() {
        // exchangeable columns, equal instance values: equal attributions
        let rows = vec![
            vec![1.0, 1.0],
            vec![-1.0, -1.0],
            vec![2.0, 2.0],
            vec![-2.0, -2.0],
        ];
        let background = DataMatrix::from_rows(
            vec!["a".into(), "b".into()],
            vec![FeatureKind::Numeric; 2],
            rows,
        )
        .unwrap();
        let model = PredictorHandle::from_fn(2, OutputKind::RegressionScore, "sum", |r| {
            r[0] + r[1]
        });
        let instance = vec![1.3, 1.3];
        let phi0 = exact_shapley(&model, &background, &instance, 0).unwrap();
        let phi1 = exact_shapley(&model, &background, &instance, 1).unwrap();
        assert!((phi0 - phi1).abs() <= 1e-12);
    }

    #[test]
    fn exact_shapley_linear_closed_form() {
        let background = gaussian_background(3, 30, 55);
        let weights = vec![0.7, -2.2, 1.1];
        let model = linear_model(weights.clone());
        let instance = vec![0.25, 1.0, -0.75];
        for j in 0..3 {
            let phi = exact_shapley(&model, &background, &instance, j).unwrap();
            let mean_j = background.column(j).iter().sum::<f64>() / background.n_rows() as f64;
            assert!((phi - weights[j] * (instance[j] - mean_j)).abs() <= 1e-10);
        }
    }

    #[test]
    fn exact_shapley_guards() {
        let background = gaussian_background(2, 80, 4);
        let model = linear_model(vec![1.0, 1.0]);
        assert!(matches!(
            exact_shapley(&model, &background, &[0.0, 0.0], 0),
            Err(ShapleyError::BackgroundTooLarge { n: 80, .. })
        ));
        let wide = gaussian_background(13, 10, 4);
        let wide_model = linear_model(vec![1.0; 13]);
        assert!(matches!(
            exact_shapley(&wide_model, &wide, &[0.0; 13], 0),
            Err(ShapleyError::TooManyFeatures { m: 13, .. })
        ));
    }

    #[test]
    fn nmcc_converges_to_exact_oracle_smoke() {
        // deeper version runs in the acceptance suite at M = 200k
        let background = gaussian_background(4, 24, 61);
        let model = PredictorHandle::from_fn(4, OutputKind::RegressionScore, "probe", |r| {
            r[0] * r[1] - (r[2] - 0.5).max(0.0) + 0.4 * r[3]
        });
        let instance = vec![0.8, -0.4, 1.2, -0.9];
        let config = EstimatorConfig::new(&background, Mode::Nmcc)
            .with_iterations(60_000)
            .with_seed(7);
        for j in [0usize, 2] {
            let est = estimate_single(&model, &config, &instance, j).unwrap();
            let oracle = exact_shapley(&model, &background, &instance, j).unwrap();
            assert!(
                (est.value - oracle).abs() <= 5.0 * est.std_error,
                "feature {j}: {} vs oracle {oracle}",
                est.value
            );
        }
    }
}
