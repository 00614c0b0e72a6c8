//! Experiment runners that exercise the correction patterns at desk scale:
//! synthetic data with controlled correlation structure, clone-injection
//! scenarios, coalition experiments, and corrected-vs-uncorrected timing.

mod report;
mod scenario;
mod synth;
mod timing;

use thiserror::Error;

use crate::adjust::AdjustError;
use crate::dataset::DatasetError;
use crate::models::ModelError;
use crate::shapley::ShapleyError;

pub use report::{estimates_to_csv, RatioRow, ReportRow, ScenarioReport};
pub use scenario::{pick_instance_by_deviation, run_combination, run_scenario1, run_scenario2};
pub use synth::{generate_synthetic, CorrelationBlock, SyntheticSpec, TargetFn};
pub use timing::{run_timing, TimingRow, TimingTable};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("requested correlation block is not positive definite")]
    InfeasibleCorrelation,
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Shapley(#[from] ShapleyError),
    #[error(transparent)]
    Adjust(#[from] AdjustError),
}

/// Shared knobs for scenario and timing runs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Monte-Carlo iterations per estimate.
    pub iterations: usize,
    pub seed: u64,
    /// Worker threads for estimation; does not change any estimate bit.
    pub workers: usize,
    /// Injected-clone noise, relative to the cloned feature's sd. The default
    /// keeps the clone correlation above 0.999.
    pub clone_noise_rel: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            iterations: 10_000,
            seed: 42,
            workers: 1,
            clone_noise_rel: 0.01,
        }
    }
}

impl RunConfig {
    pub fn new(iterations: usize, seed: u64) -> Self {
        RunConfig {
            iterations,
            seed,
            ..RunConfig::default()
        }
    }
}

pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
