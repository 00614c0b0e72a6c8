//! Clone-injection and correlated-set experiment runners.
//!
//! Each runner fits the model per arm (the same fitting seed across arms, so
//! arms differ only in the data), estimates corrected and uncorrected values
//! for one deterministically chosen probe row, and reports the derived
//! ratios. The probe row is the one with the largest standardized deviation
//! in the feature (or coalition) of interest, so the ratios are well resolved
//! against Monte-Carlo noise.

use crate::adjust::CoalitionSpec;
use crate::dataset::{compute_covariance, inject_correlated_clone, DataMatrix};
use crate::harness::{mix64, HarnessError, RunConfig, ScenarioReport};
use crate::models::{ModelSpec, PredictorHandle};
use crate::shapley::{estimate_coalition, estimate_single, EstimatorConfig, Mode, ShapleyEstimate};

/// Row index with the largest sum of absolute z-scores over `cols`;
/// deterministic, ties keep the earliest row.
pub fn pick_instance_by_deviation(data: &DataMatrix, cols: &[usize]) -> usize {
    let n = data.n_rows();
    let cache = compute_covariance(data).expect("n >= 2 by construction");
    let mut best_row = 0;
    let mut best_score = f64::NEG_INFINITY;
    for r in 0..n {
        let mut score = 0.0;
        for &c in cols {
            let sd = cache.sd(c).unwrap_or(1.0);
            let scale = if sd > 0.0 { sd } else { 1.0 };
            score += (data.value(r, c) - cache.mean(c)).abs() / scale;
        }
        if score > best_score {
            best_score = score;
            best_row = r;
        }
    }
    best_row
}

struct Arm {
    predictors: DataMatrix,
    model: PredictorHandle,
}

fn fit_arm(data: &DataMatrix, target_col: usize, spec: &ModelSpec, fit_seed: u64) -> Result<Arm, HarnessError> {
    let spec = spec.with_seed(fit_seed);
    let model = spec.fit(data, target_col)?;
    let predictors = data.drop_column(target_col)?;
    Ok(Arm { predictors, model })
}

fn estimate(
    arm: &Arm,
    cfg: &RunConfig,
    instance_row: usize,
    mode: Mode,
    feature: &str,
) -> Result<ShapleyEstimate, HarnessError> {
    let j = arm.predictors.feature_index(feature)?;
    let config = EstimatorConfig {
        iterations: cfg.iterations,
        seed: cfg.seed,
        mode,
        background: &arm.predictors,
        workers: cfg.workers,
    };
    Ok(estimate_single(
        &arm.model,
        &config,
        arm.predictors.row(instance_row),
        j,
    )?)
}

fn estimate_group(
    arm: &Arm,
    cfg: &RunConfig,
    instance_row: usize,
    mode: Mode,
    features: &[&str],
) -> Result<ShapleyEstimate, HarnessError> {
    let indices: Vec<usize> = features
        .iter()
        .map(|f| arm.predictors.feature_index(f))
        .collect::<Result<_, _>>()?;
    let coalition = CoalitionSpec::new(indices, &arm.predictors)?;
    let config = EstimatorConfig {
        iterations: cfg.iterations,
        seed: cfg.seed,
        mode,
        background: &arm.predictors,
        workers: cfg.workers,
    };
    Ok(estimate_coalition(
        &arm.model,
        &config,
        arm.predictors.row(instance_row),
        &coalition,
    )?)
}

fn clone_noise_sd(data: &DataMatrix, col: usize, rel: f64) -> Result<f64, HarnessError> {
    let cache = compute_covariance(data)?;
    let sd = cache
        .sd(col)
        .ok_or_else(|| HarnessError::InvalidSpec("clone source must be numeric".into()))?;
    Ok(rel * sd)
}

/// Single-feature clone experiment. Two arms: the original data, and the data
/// with a near-perfectly correlated clone of `feature` appended and the model
/// refit. Reports corrected and uncorrected values of the feature (and its
/// clone in the second arm), the halving ratio
/// `nmcc_with_clone / nmcc_baseline`, and the restoration ratio
/// `mcc_with_clone / nmcc_baseline`.
pub fn run_scenario1(
    data: &DataMatrix,
    target_col: usize,
    feature: &str,
    model_spec: &ModelSpec,
    cfg: &RunConfig,
) -> Result<ScenarioReport, HarnessError> {
    let feature_col = data.feature_index(feature)?;
    let fit_seed = mix64(cfg.seed ^ 0x5349_4d46_4954_0001);
    let clone_seed = mix64(cfg.seed ^ 0x434c_4f4e_4530_0001);

    let base = fit_arm(data, target_col, model_spec, fit_seed)?;
    let instance_row = pick_instance_by_deviation(
        &base.predictors,
        &[base.predictors.feature_index(feature)?],
    );

    let noise_sd = clone_noise_sd(data, feature_col, cfg.clone_noise_rel)?;
    let cloned_data = inject_correlated_clone(data, feature_col, noise_sd, clone_seed)?;
    let clone_name = format!("{feature}_corr");
    let with_clone = fit_arm(&cloned_data, target_col, model_spec, fit_seed)?;

    let mut report = ScenarioReport {
        scenario: "scenario1".to_string(),
        rows: vec![],
        ratios: vec![],
        iterations: cfg.iterations,
        seed: cfg.seed,
        dataset_fingerprint: data.fingerprint(),
    };
    let model_name = model_spec.family.to_string();

    let base_nmcc = estimate(&base, cfg, instance_row, Mode::Nmcc, feature)?;
    let base_mcc = estimate(&base, cfg, instance_row, Mode::Mcc, feature)?;
    let clone_nmcc = estimate(&with_clone, cfg, instance_row, Mode::Nmcc, feature)?;
    let clone_mcc = estimate(&with_clone, cfg, instance_row, Mode::Mcc, feature)?;
    let clone_col_nmcc = estimate(&with_clone, cfg, instance_row, Mode::Nmcc, &clone_name)?;
    let clone_col_mcc = estimate(&with_clone, cfg, instance_row, Mode::Mcc, &clone_name)?;

    let r_base_nmcc = report.push_estimate("baseline", &model_name, feature, &base_nmcc);
    let r_base_mcc = report.push_estimate("baseline", &model_name, feature, &base_mcc);
    let r_clone_nmcc = report.push_estimate("with_clone", &model_name, feature, &clone_nmcc);
    let r_clone_mcc = report.push_estimate("with_clone", &model_name, feature, &clone_mcc);
    let r_cc_nmcc = report.push_estimate("with_clone", &model_name, &clone_name, &clone_col_nmcc);
    let r_cc_mcc = report.push_estimate("with_clone", &model_name, &clone_name, &clone_col_mcc);

    report.push_ratio("halving", r_clone_nmcc, r_base_nmcc);
    report.push_ratio("restoration", r_clone_mcc, r_base_nmcc);
    report.push_ratio("clone_restoration", r_cc_mcc, r_base_nmcc);
    report.push_ratio("baseline_mcc_over_nmcc", r_base_mcc, r_base_nmcc);
    report.push_ratio("clone_halving", r_cc_nmcc, r_base_nmcc);
    Ok(report)
}

/// Correlated-set experiment. Two arms: the model fit without the correlated
/// set `correlated`, and the model fit on all columns. Reports the reduction
/// ratio `nmcc_all / nmcc_without` and the recovery ratio
/// `mcc_all / mcc_without`.
pub fn run_scenario2(
    data: &DataMatrix,
    target_col: usize,
    feature: &str,
    correlated: &[&str],
    model_spec: &ModelSpec,
    cfg: &RunConfig,
) -> Result<ScenarioReport, HarnessError> {
    if correlated.contains(&feature) {
        return Err(HarnessError::InvalidSpec(
            "the feature of interest cannot be in the removed correlated set".into(),
        ));
    }
    let fit_seed = mix64(cfg.seed ^ 0x5349_4d46_4954_0002);

    let mut keep: Vec<usize> = Vec::new();
    let mut removed = Vec::new();
    for c in correlated {
        removed.push(data.feature_index(c)?);
    }
    for c in 0..data.n_cols() {
        if !removed.contains(&c) {
            keep.push(c);
        }
    }
    let reduced = data.select_columns(&keep)?;
    let reduced_target = reduced.feature_index(&data.feature_names()[target_col])?;

    let without = fit_arm(&reduced, reduced_target, model_spec, fit_seed)?;
    let all = fit_arm(data, target_col, model_spec, fit_seed)?;
    let instance_row =
        pick_instance_by_deviation(&all.predictors, &[all.predictors.feature_index(feature)?]);

    let mut report = ScenarioReport {
        scenario: "scenario2".to_string(),
        rows: vec![],
        ratios: vec![],
        iterations: cfg.iterations,
        seed: cfg.seed,
        dataset_fingerprint: data.fingerprint(),
    };
    let model_name = model_spec.family.to_string();

    let without_nmcc = estimate(&without, cfg, instance_row, Mode::Nmcc, feature)?;
    let without_mcc = estimate(&without, cfg, instance_row, Mode::Mcc, feature)?;
    let all_nmcc = estimate(&all, cfg, instance_row, Mode::Nmcc, feature)?;
    let all_mcc = estimate(&all, cfg, instance_row, Mode::Mcc, feature)?;

    let r_wo_nmcc = report.push_estimate("without_correlated", &model_name, feature, &without_nmcc);
    let r_wo_mcc = report.push_estimate("without_correlated", &model_name, feature, &without_mcc);
    let r_all_nmcc = report.push_estimate("all_features", &model_name, feature, &all_nmcc);
    let r_all_mcc = report.push_estimate("all_features", &model_name, feature, &all_mcc);

    report.push_ratio("reduction", r_all_nmcc, r_wo_nmcc);
    report.push_ratio("recovery", r_all_mcc, r_wo_mcc);
    report.push_ratio("baseline_mcc_over_nmcc", r_wo_mcc, r_wo_nmcc);
    Ok(report)
}

/// Coalition experiment. Arm one estimates the coalition's corrected and
/// uncorrected values on the original data, plus each member's corrected
/// value (their sum exceeding the coalition value exhibits non-additivity).
/// Arm two appends a near-perfect clone of every member, refits, and
/// re-estimates the coalition, yielding coalition halving and restoration
/// ratios.
pub fn run_combination(
    data: &DataMatrix,
    target_col: usize,
    features: &[&str],
    model_spec: &ModelSpec,
    cfg: &RunConfig,
) -> Result<ScenarioReport, HarnessError> {
    if features.len() < 2 {
        return Err(HarnessError::InvalidSpec(
            "combination runs need at least two features".into(),
        ));
    }
    let fit_seed = mix64(cfg.seed ^ 0x5349_4d46_4954_0003);

    let base = fit_arm(data, target_col, model_spec, fit_seed)?;
    let member_cols: Vec<usize> = features
        .iter()
        .map(|f| base.predictors.feature_index(f))
        .collect::<Result<_, _>>()?;
    let instance_row = pick_instance_by_deviation(&base.predictors, &member_cols);

    let mut cloned_data = data.clone();
    for (i, f) in features.iter().enumerate() {
        let col = cloned_data.feature_index(f)?;
        let noise_sd = clone_noise_sd(&cloned_data, col, cfg.clone_noise_rel)?;
        let clone_seed = mix64(cfg.seed ^ 0x434c_4f4e_4530_0002 ^ (i as u64 + 1));
        cloned_data = inject_correlated_clone(&cloned_data, col, noise_sd, clone_seed)?;
    }
    let with_clones = fit_arm(&cloned_data, target_col, model_spec, fit_seed)?;

    let mut report = ScenarioReport {
        scenario: "combination".to_string(),
        rows: vec![],
        ratios: vec![],
        iterations: cfg.iterations,
        seed: cfg.seed,
        dataset_fingerprint: data.fingerprint(),
    };
    let model_name = model_spec.family.to_string();
    let group_label = features.join("+");

    let base_nmcc = estimate_group(&base, cfg, instance_row, Mode::Nmcc, features)?;
    let base_mcc = estimate_group(&base, cfg, instance_row, Mode::Mcc, features)?;
    let clone_nmcc = estimate_group(&with_clones, cfg, instance_row, Mode::Nmcc, features)?;
    let clone_mcc = estimate_group(&with_clones, cfg, instance_row, Mode::Mcc, features)?;

    let r_base_nmcc = report.push_estimate("baseline", &model_name, &group_label, &base_nmcc);
    let r_base_mcc = report.push_estimate("baseline", &model_name, &group_label, &base_mcc);
    let r_clone_nmcc =
        report.push_estimate("with_clones", &model_name, &group_label, &clone_nmcc);
    let r_clone_mcc = report.push_estimate("with_clones", &model_name, &group_label, &clone_mcc);

    for f in features {
        let member_mcc = estimate(&base, cfg, instance_row, Mode::Mcc, f)?;
        report.push_estimate("baseline", &model_name, f, &member_mcc);
    }

    report.push_ratio("halving", r_clone_nmcc, r_base_nmcc);
    report.push_ratio("restoration", r_clone_mcc, r_base_nmcc);
    report.push_ratio("baseline_mcc_over_nmcc", r_base_mcc, r_base_nmcc);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureKind;
    use crate::harness::{generate_synthetic, CorrelationBlock, SyntheticSpec, TargetFn};
    use crate::models::ModelFamily;

    #[test]
    fn picks_the_most_deviant_row() {
        let data = DataMatrix::from_rows(
            vec!["a".into(), "b".into()],
            vec![FeatureKind::Numeric; 2],
            vec![
                vec![0.0, 1.0],
                vec![0.1, 1.0],
                vec![10.0, 1.0],
                vec![-0.1, 1.0],
            ],
        )
        .unwrap();
        assert_eq!(pick_instance_by_deviation(&data, &[0]), 2);
    }

    #[test]
    fn scenario1_report_is_self_consistent() {
        let spec = SyntheticSpec {
            rows: 300,
            features: 4,
            blocks: vec![],
            target: TargetFn::StepMix {
                weights: vec![3.0, 1.0, 1.0, 0.0],
            },
            noise_sd: 0.5,
            seed: 5,
        };
        let data = generate_synthetic(&spec).unwrap();
        let target_col = data.feature_index("y").unwrap();
        let model = ModelSpec::new(ModelFamily::Tree);
        let cfg = RunConfig {
            iterations: 1500,
            seed: 11,
            ..RunConfig::default()
        };
        let report = run_scenario1(&data, target_col, "x0", &model, &cfg).unwrap();
        assert_eq!(report.rows.len(), 6);
        for ratio in &report.ratios {
            let recomputed =
                report.rows[ratio.numerator].value / report.rows[ratio.denominator].value;
            assert_eq!(ratio.value, recomputed);
        }
        // identical invocation reproduces the report exactly
        let again = run_scenario1(&data, target_col, "x0", &model, &cfg).unwrap();
        assert_eq!(report.to_csv(), again.to_csv());
    }

    #[test]
    fn scenario2_rejects_feature_inside_removed_set() {
        let spec = SyntheticSpec {
            rows: 120,
            features: 3,
            blocks: vec![CorrelationBlock::pair(0, 1, 0.8)],
            target: TargetFn::Linear {
                weights: vec![1.0, 1.0, 0.5],
            },
            noise_sd: 0.2,
            seed: 2,
        };
        let data = generate_synthetic(&spec).unwrap();
        let target_col = data.feature_index("y").unwrap();
        let model = ModelSpec::new(ModelFamily::Tree);
        let cfg = RunConfig::new(500, 3);
        assert!(matches!(
            run_scenario2(&data, target_col, "x0", &["x0"], &model, &cfg),
            Err(HarnessError::InvalidSpec(_))
        ));
    }

    #[test]
    fn combination_reports_member_values_for_nonadditivity() {
        let spec = SyntheticSpec {
            rows: 200,
            features: 3,
            blocks: vec![],
            target: TargetFn::StepMix {
                weights: vec![2.0, 2.0, 1.0],
            },
            noise_sd: 0.4,
            seed: 9,
        };
        let data = generate_synthetic(&spec).unwrap();
        let target_col = data.feature_index("y").unwrap();
        let model = ModelSpec::new(ModelFamily::Tree);
        let cfg = RunConfig::new(800, 21);
        let report =
            run_combination(&data, target_col, &["x0", "x1"], &model, &cfg).unwrap();
        // coalition rows (4) plus one per member
        assert_eq!(report.rows.len(), 6);
        assert!(report.row("baseline", "x0+x1", Mode::Mcc).is_some());
        assert!(report.row("baseline", "x0", Mode::Mcc).is_some());
        assert!(report.ratio("halving").is_some());
    }
}
