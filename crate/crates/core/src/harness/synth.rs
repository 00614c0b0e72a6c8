//! Seeded synthetic datasets with controlled correlation structure.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{DataMatrix, FeatureKind};
use crate::harness::HarnessError;
use crate::linalg;

/// A group of features with prescribed pairwise correlations.
#[derive(Debug, Clone)]
pub struct CorrelationBlock {
    /// Feature indices in the block.
    pub features: Vec<usize>,
    /// Upper-triangle pairwise correlations in row-major order:
    /// (0,1), (0,2), …, (0,q−1), (1,2), … — length q·(q−1)/2.
    pub pairwise: Vec<f64>,
}

impl CorrelationBlock {
    /// All pairs in the block share one correlation.
    pub fn uniform(features: Vec<usize>, rho: f64) -> Self {
        let q = features.len();
        CorrelationBlock {
            features,
            pairwise: vec![rho; q * (q - 1) / 2],
        }
    }

    pub fn pair(a: usize, b: usize, rho: f64) -> Self {
        CorrelationBlock {
            features: vec![a, b],
            pairwise: vec![rho],
        }
    }

    fn correlation_matrix(&self) -> Vec<f64> {
        let q = self.features.len();
        let mut r = vec![0.0; q * q];
        for i in 0..q {
            r[i * q + i] = 1.0;
        }
        let mut idx = 0;
        for i in 0..q {
            for j in i + 1..q {
                r[i * q + j] = self.pairwise[idx];
                r[j * q + i] = self.pairwise[idx];
                idx += 1;
            }
        }
        r
    }
}

/// How the target column is generated from the feature row.
#[derive(Debug, Clone)]
pub enum TargetFn {
    /// `y = Σ w_t · x_t`
    Linear { weights: Vec<f64> },
    /// `y = Σ w_t · (stair(x_t) − 1.5)` where `stair` counts how many of the
    /// thresholds −0.75, 0, 0.75 are crossed. A saturating staircase in every
    /// feature: piecewise-constant, so trees need several splits per relevant
    /// feature, and flat in the tails.
    StepMix { weights: Vec<f64> },
}

const STAIR_THRESHOLDS: [f64; 3] = [-0.75, 0.0, 0.75];

impl TargetFn {
    fn weights(&self) -> &[f64] {
        match self {
            TargetFn::Linear { weights } | TargetFn::StepMix { weights } => weights,
        }
    }

    fn evaluate(&self, row: &[f64]) -> f64 {
        match self {
            TargetFn::Linear { weights } => {
                weights.iter().zip(row).map(|(w, x)| w * x).sum()
            }
            TargetFn::StepMix { weights } => weights
                .iter()
                .zip(row)
                .map(|(w, x)| {
                    let mut stair = 0.0;
                    for threshold in STAIR_THRESHOLDS {
                        if *x > threshold {
                            stair += 1.0;
                        }
                    }
                    w * (stair - 1.5)
                })
                .sum(),
        }
    }
}

/// Recipe for a synthetic dataset: standard-normal features, optional
/// correlation blocks realized by per-block Cholesky mixing, and a target
/// column `y` with additive Gaussian noise. Deterministic by seed.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub rows: usize,
    pub features: usize,
    pub blocks: Vec<CorrelationBlock>,
    pub target: TargetFn,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<(), HarnessError> {
        if self.rows < 50 {
            return Err(HarnessError::InvalidSpec(format!(
                "need at least 50 rows, got {}",
                self.rows
            )));
        }
        if self.features == 0 {
            return Err(HarnessError::InvalidSpec("need at least one feature".into()));
        }
        if self.target.weights().len() != self.features {
            return Err(HarnessError::InvalidSpec(format!(
                "target weights length {} != feature count {}",
                self.target.weights().len(),
                self.features
            )));
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return Err(HarnessError::InvalidSpec(format!(
                "noise_sd must be finite and >= 0, got {}",
                self.noise_sd
            )));
        }
        let mut seen = vec![false; self.features];
        for block in &self.blocks {
            let q = block.features.len();
            if q < 2 {
                return Err(HarnessError::InvalidSpec(
                    "correlation blocks need at least two features".into(),
                ));
            }
            if block.pairwise.len() != q * (q - 1) / 2 {
                return Err(HarnessError::InvalidSpec(format!(
                    "block over {q} features needs {} pairwise entries, got {}",
                    q * (q - 1) / 2,
                    block.pairwise.len()
                )));
            }
            for &rho in &block.pairwise {
                if !(-1.0..1.0).contains(&rho) {
                    return Err(HarnessError::InvalidSpec(format!(
                        "block correlations must lie in (-1, 1), got {rho}"
                    )));
                }
            }
            for &f in &block.features {
                if f >= self.features {
                    return Err(HarnessError::InvalidSpec(format!(
                        "block feature {f} out of range"
                    )));
                }
                if seen[f] {
                    return Err(HarnessError::InvalidSpec(format!(
                        "feature {f} appears in more than one block"
                    )));
                }
                seen[f] = true;
            }
        }
        Ok(())
    }
}

/// Generates the dataset described by `spec`. Feature columns are named
/// `x0..x{m-1}`; the target column `y` is appended last.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<DataMatrix, HarnessError> {
    spec.validate()?;
    let m = spec.features;
    let n = spec.rows;

    // Cholesky factors up front so infeasible blocks fail before drawing.
    let mut factors = Vec::with_capacity(spec.blocks.len());
    for block in &spec.blocks {
        let q = block.features.len();
        let l = linalg::cholesky(&block.correlation_matrix(), q)
            .ok_or(HarnessError::InfeasibleCorrelation)?;
        factors.push(l);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = StandardNormal;
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..m).map(|_| normal.sample(&mut rng)).collect())
        .collect();

    for (block, l) in spec.blocks.iter().zip(&factors) {
        let q = block.features.len();
        let mut raw = vec![0.0; q];
        for row in rows.iter_mut() {
            for (slot, &f) in raw.iter_mut().zip(&block.features) {
                *slot = row[f];
            }
            for (i, &f) in block.features.iter().enumerate() {
                let mut acc = 0.0;
                for k in 0..=i {
                    acc += l[i * q + k] * raw[k];
                }
                row[f] = acc;
            }
        }
    }

    for row in rows.iter_mut() {
        let mut y = spec.target.evaluate(row);
        if spec.noise_sd > 0.0 {
            let eps: f64 = normal.sample(&mut rng);
            y += spec.noise_sd * eps;
        }
        row.push(y);
    }

    let mut names: Vec<String> = (0..m).map(|i| format!("x{i}")).collect();
    names.push("y".to_string());
    let kinds = vec![FeatureKind::Numeric; m + 1];
    Ok(DataMatrix::from_rows(names, kinds, rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::correlation;

    #[test]
    fn independent_features_show_only_sampling_noise() {
        let spec = SyntheticSpec {
            rows: 200,
            features: 3,
            blocks: vec![],
            target: TargetFn::Linear {
                weights: vec![1.0, 0.0, 0.0],
            },
            noise_sd: 0.1,
            seed: 8,
        };
        let data = generate_synthetic(&spec).unwrap();
        for a in 0..3 {
            for b in a + 1..3 {
                let corr = correlation(&data.column(a), &data.column(b));
                assert!(corr.abs() <= 0.15, "corr(x{a}, x{b}) = {corr}");
            }
        }
    }

    #[test]
    fn block_correlation_is_realized() {
        let spec = SyntheticSpec {
            rows: 1000,
            features: 4,
            blocks: vec![CorrelationBlock::pair(0, 1, 0.82)],
            target: TargetFn::Linear {
                weights: vec![1.0, 1.0, 0.0, 0.0],
            },
            noise_sd: 0.2,
            seed: 3,
        };
        let data = generate_synthetic(&spec).unwrap();
        let corr = correlation(&data.column(0), &data.column(1));
        assert!((corr - 0.82).abs() <= 0.08, "realized corr {corr}");
    }

    #[test]
    fn infeasible_block_is_rejected() {
        let spec = SyntheticSpec {
            rows: 100,
            features: 3,
            blocks: vec![CorrelationBlock {
                features: vec![0, 1, 2],
                pairwise: vec![0.9, 0.9, -0.9],
            }],
            target: TargetFn::Linear {
                weights: vec![1.0, 0.0, 0.0],
            },
            noise_sd: 0.0,
            seed: 1,
        };
        assert!(matches!(
            generate_synthetic(&spec),
            Err(HarnessError::InfeasibleCorrelation)
        ));
    }

    #[test]
    fn generation_is_deterministic_by_seed() {
        let spec = SyntheticSpec {
            rows: 60,
            features: 2,
            blocks: vec![CorrelationBlock::pair(0, 1, 0.5)],
            target: TargetFn::StepMix {
                weights: vec![1.0, 2.0],
            },
            noise_sd: 0.3,
            seed: 99,
        };
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn spec_validation_catches_misuse() {
        let base = SyntheticSpec {
            rows: 100,
            features: 2,
            blocks: vec![],
            target: TargetFn::Linear {
                weights: vec![1.0, 0.0],
            },
            noise_sd: 0.1,
            seed: 0,
        };
        let too_small = SyntheticSpec { rows: 10, ..base.clone() };
        assert!(matches!(
            generate_synthetic(&too_small),
            Err(HarnessError::InvalidSpec(_))
        ));
        let bad_weights = SyntheticSpec {
            target: TargetFn::Linear { weights: vec![1.0] },
            ..base.clone()
        };
        assert!(matches!(
            generate_synthetic(&bad_weights),
            Err(HarnessError::InvalidSpec(_))
        ));
        let overlapping = SyntheticSpec {
            features: 3,
            target: TargetFn::Linear {
                weights: vec![1.0, 0.0, 0.0],
            },
            blocks: vec![
                CorrelationBlock::pair(0, 1, 0.5),
                CorrelationBlock::pair(1, 2, 0.5),
            ],
            ..base
        };
        assert!(matches!(
            generate_synthetic(&overlapping),
            Err(HarnessError::InvalidSpec(_))
        ));
    }
}
