//! Wall-clock comparison of corrected vs uncorrected estimation.
//!
//! The corrected path adds one covariance pass, one plan solve, and a handful
//! of additions per iteration, so its cost should track the uncorrected path
//! closely across feature widths. Runs execute serially at a declared worker
//! count to keep measurements meaningful, and the timed estimates are
//! returned so callers can assert timing never changes values.
//!
//! Per-iteration cost is dominated by vector construction and prediction,
//! both roughly linear in width for the built-in models, so wider
//! configurations extrapolate linearly from the measured widths; defaults
//! stop at width 1000 to stay desk-scale once model refits are included.

use std::time::Instant;

use crate::harness::{
    generate_synthetic, HarnessError, RunConfig, SyntheticSpec, TargetFn,
};
use crate::harness::synth::CorrelationBlock;
use crate::models::ModelSpec;
use crate::shapley::{estimate_single, EstimatorConfig, Mode, ShapleyEstimate};

/// Timing result for one synthetic feature width.
#[derive(Debug, Clone)]
pub struct TimingRow {
    pub width: usize,
    pub nmcc_median_s: f64,
    pub nmcc_spread_s: f64,
    pub mcc_median_s: f64,
    pub mcc_spread_s: f64,
    /// `mcc_median_s / nmcc_median_s`
    pub ratio: f64,
    pub nmcc_estimate: ShapleyEstimate,
    pub mcc_estimate: ShapleyEstimate,
}

#[derive(Debug, Clone)]
pub struct TimingTable {
    pub rows: Vec<TimingRow>,
    pub iterations: usize,
    pub seed: u64,
    pub repeats: usize,
}

impl TimingTable {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("width,nmcc_median_s,nmcc_spread_s,mcc_median_s,mcc_spread_s,ratio\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.4}\n",
                row.width,
                row.nmcc_median_s,
                row.nmcc_spread_s,
                row.mcc_median_s,
                row.mcc_spread_s,
                row.ratio
            ));
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!(
            "## timing (M = {}, seed = {}, repeats = {})\n\n",
            self.iterations, self.seed, self.repeats
        );
        out.push_str("| width | nmcc (s) | mcc (s) | ratio |\n|---:|---:|---:|---:|\n");
        for row in &self.rows {
            out.push_str(&format!(
                "| {} | {:.3} ± {:.3} | {:.3} ± {:.3} | {:.3} |\n",
                row.width,
                row.nmcc_median_s,
                row.nmcc_spread_s,
                row.mcc_median_s,
                row.mcc_spread_s,
                row.ratio
            ));
        }
        out
    }
}

fn median_and_spread(samples: &mut [f64]) -> (f64, f64) {
    samples.sort_by(|a, b| a.partial_cmp(b).expect("finite durations"));
    let median = if samples.len() % 2 == 1 {
        samples[samples.len() / 2]
    } else {
        0.5 * (samples[samples.len() / 2 - 1] + samples[samples.len() / 2])
    };
    let spread = samples[samples.len() - 1] - samples[0];
    (median, spread)
}

/// Benchmark dataset for one width: standard-normal features with one mildly
/// correlated pair so the corrected path has real work to do.
pub(crate) fn timing_dataset(width: usize, seed: u64) -> Result<crate::dataset::DataMatrix, HarnessError> {
    let mut weights = vec![0.0; width];
    for (i, w) in weights.iter_mut().take(5).enumerate() {
        *w = 1.5 - 0.4 * i as f64;
    }
    let blocks = if width >= 2 {
        vec![CorrelationBlock::pair(0, 1, 0.5)]
    } else {
        vec![]
    };
    generate_synthetic(&SyntheticSpec {
        rows: 200,
        features: width,
        blocks,
        target: TargetFn::Linear { weights },
        noise_sd: 0.5,
        seed,
    })
}

/// Times corrected and uncorrected single-feature estimation at each feature
/// width, `repeats` times (at least 5), reporting medians, spreads, and the
/// corrected/uncorrected ratio per width.
pub fn run_timing(
    widths: &[usize],
    model_spec: &ModelSpec,
    cfg: &RunConfig,
    repeats: usize,
) -> Result<TimingTable, HarnessError> {
    let repeats = repeats.max(5);
    let mut rows = Vec::with_capacity(widths.len());
    for &width in widths {
        if width == 0 {
            return Err(HarnessError::InvalidSpec("width must be >= 1".into()));
        }
        let data = timing_dataset(width, cfg.seed)?;
        let target_col = data.feature_index("y")?;
        let model = model_spec.fit(&data, target_col)?;
        let predictors = data.drop_column(target_col)?;
        let instance = predictors.row(0).to_vec();

        let time_mode = |mode: Mode| -> Result<(f64, f64, ShapleyEstimate), HarnessError> {
            let config = EstimatorConfig {
                iterations: cfg.iterations,
                seed: cfg.seed,
                mode,
                background: &predictors,
                workers: cfg.workers,
            };
            let mut samples = Vec::with_capacity(repeats);
            let mut estimate = None;
            for _ in 0..repeats {
                let start = Instant::now();
                let est = estimate_single(&model, &config, &instance, 0)?;
                samples.push(start.elapsed().as_secs_f64());
                estimate = Some(est);
            }
            let (median, spread) = median_and_spread(&mut samples);
            Ok((median, spread, estimate.expect("at least one repeat")))
        };

        let (nmcc_median_s, nmcc_spread_s, nmcc_estimate) = time_mode(Mode::Nmcc)?;
        let (mcc_median_s, mcc_spread_s, mcc_estimate) = time_mode(Mode::Mcc)?;
        rows.push(TimingRow {
            width,
            nmcc_median_s,
            nmcc_spread_s,
            mcc_median_s,
            mcc_spread_s,
            ratio: mcc_median_s / nmcc_median_s,
            nmcc_estimate,
            mcc_estimate,
        });
    }
    Ok(TimingTable {
        rows,
        iterations: cfg.iterations,
        seed: cfg.seed,
        repeats,
    })
}
