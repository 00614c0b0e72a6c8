//! Cross-module estimator properties that need real datasets and models.

mod common;

use corrshap::adjust::CoalitionSpec;
use corrshap::dataset::{compute_covariance, correlation, inject_correlated_clone};
use corrshap::harness::{
    generate_synthetic, pick_instance_by_deviation, CorrelationBlock, SyntheticSpec, TargetFn,
};
use corrshap::models::{ModelFamily, ModelSpec};
use corrshap::shapley::{estimate_coalition, estimate_single, EstimatorConfig, Mode};

use common::two_pass_cov;

/// Corrected values are not additive: on a dataset with a near-perfectly
/// correlated pair, each member's corrected value recovers the shared credit,
/// so the member sum overshoots the coalition's own corrected value by far
/// more than sampling noise.
#[test]
fn corrected_values_are_not_additive_under_correlation() {
    let data = generate_synthetic(&SyntheticSpec {
        rows: 600,
        features: 5,
        blocks: vec![],
        target: TargetFn::StepMix {
            weights: vec![4.0, 1.5, 1.0, 0.5, 0.0],
        },
        noise_sd: 0.5,
        seed: 19,
    })
    .unwrap();
    let x0 = data.feature_index("x0").unwrap();
    let cache = compute_covariance(&data).unwrap();
    let noise_sd = 0.01 * cache.sd(x0).unwrap();
    let cloned = inject_correlated_clone(&data, x0, noise_sd, 91).unwrap();

    let target_col = cloned.feature_index("y").unwrap();
    let model = ModelSpec {
        k: 5,
        ..ModelSpec::new(ModelFamily::Knn)
    }
    .fit(&cloned, target_col)
    .unwrap();
    let predictors = cloned.drop_column(target_col).unwrap();
    let a = predictors.feature_index("x0").unwrap();
    let b = predictors.feature_index("x0_corr").unwrap();
    let row = pick_instance_by_deviation(&predictors, &[a]);
    let instance = predictors.row(row).to_vec();

    let config = EstimatorConfig::new(&predictors, Mode::Mcc)
        .with_iterations(10_000)
        .with_seed(23)
        .with_workers(2);
    let coalition = CoalitionSpec::new(vec![a, b], &predictors).unwrap();
    let joint = estimate_coalition(&model, &config, &instance, &coalition).unwrap();
    let single_a = estimate_single(&model, &config, &instance, a).unwrap();
    let single_b = estimate_single(&model, &config, &instance, b).unwrap();

    let gap = (joint.value - single_a.value - single_b.value).abs();
    let sigma = (joint.std_error.powi(2) + single_a.std_error.powi(2) + single_b.std_error.powi(2))
        .sqrt();
    assert!(
        gap > 5.0 * sigma,
        "expected a wide non-additivity gap, got {gap:.4} vs 5 sigma = {:.4}",
        5.0 * sigma
    );
}

/// The synthetic clone construction hits the advertised correlation level.
#[test]
fn injected_clone_correlation_is_near_one() {
    let data = generate_synthetic(&SyntheticSpec {
        rows: 500,
        features: 3,
        blocks: vec![],
        target: TargetFn::Linear {
            weights: vec![1.0, 0.5, 0.0],
        },
        noise_sd: 0.2,
        seed: 3,
    })
    .unwrap();
    let x0 = data.feature_index("x0").unwrap();
    let cache = compute_covariance(&data).unwrap();
    let cloned =
        inject_correlated_clone(&data, x0, 0.01 * cache.sd(x0).unwrap(), 11).unwrap();
    let corr = correlation(
        &cloned.column(x0),
        &cloned.column(cloned.feature_index("x0_corr").unwrap()),
    );
    assert!(corr >= 0.999, "clone correlation {corr}");
}

/// Covariance on a fixed-seed synthetic dataset matches the independently
/// coded two-pass oracle elementwise.
#[test]
fn covariance_matches_independent_two_pass_oracle() {
    let data = generate_synthetic(&SyntheticSpec {
        rows: 200,
        features: 3,
        blocks: vec![CorrelationBlock::pair(0, 1, 0.6)],
        target: TargetFn::Linear {
            weights: vec![1.0, -1.0, 0.5],
        },
        noise_sd: 0.4,
        seed: 8,
    })
    .unwrap();
    let cache = compute_covariance(&data).unwrap();
    for j in 0..data.n_cols() {
        for k in 0..data.n_cols() {
            let oracle = two_pass_cov(&data.column(j), &data.column(k));
            let got = cache.covariance(j, k).unwrap();
            assert!(
                (got - oracle).abs() <= 1e-12,
                "cov[{j}][{k}] {got} vs oracle {oracle}"
            );
        }
    }
}
