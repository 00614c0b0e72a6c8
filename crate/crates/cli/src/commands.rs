//! Subcommand implementations and error-to-exit-code mapping.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use corrshap::adjust::{build_plan, AdjustError, CoalitionSpec};
use corrshap::dataset::{compute_covariance, load_csv, DataMatrix, DatasetError, FeatureKind};
use corrshap::harness::{
    estimates_to_csv, generate_synthetic, run_combination, run_scenario1, run_scenario2,
    run_timing, CorrelationBlock, HarnessError, RunConfig, ScenarioReport, SyntheticSpec,
    TargetFn,
};
use corrshap::models::{ModelError, ModelSpec, PredictorHandle};
use corrshap::shapley::{
    estimate_coalition, estimate_single, EstimatorConfig, Mode, ShapleyError, ShapleyEstimate,
};

use crate::CommonOpts;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or references to unknown columns: exit 1.
    Usage(String),
    /// Unreadable/invalid data or model fitting problems: exit 2.
    Data(String),
    /// Singular or degenerate numerical conditions: exit 3.
    Numerical(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn adjust_error(e: AdjustError) -> CliError {
    match e {
        AdjustError::DegenerateVariance { .. }
        | AdjustError::SingularCoalition { .. }
        | AdjustError::OrthogonalityCheckFailed { .. } => CliError::Numerical(e.to_string()),
        AdjustError::EmptyCoalition
        | AdjustError::FeatureOutOfRange { .. }
        | AdjustError::DuplicateCoalitionFeature(_)
        | AdjustError::NonNumericFeature(_)
        | AdjustError::TargetInCoalition(_)
        | AdjustError::WidthMismatch { .. } => CliError::Usage(e.to_string()),
    }
}

fn dataset_error(e: DatasetError) -> CliError {
    match e {
        DatasetError::UnknownColumn { .. } | DatasetError::ColumnOutOfRange { .. } => {
            CliError::Usage(e.to_string())
        }
        other => CliError::Data(other.to_string()),
    }
}

fn model_error(e: ModelError) -> CliError {
    match e {
        ModelError::SingularDesign => CliError::Numerical(e.to_string()),
        ModelError::UnknownFamily(_)
        | ModelError::UnknownOption(_)
        | ModelError::InvalidOption { .. }
        | ModelError::InvalidHyperparameter(_) => CliError::Usage(e.to_string()),
        ModelError::Dataset(inner) => dataset_error(inner),
        other => CliError::Data(other.to_string()),
    }
}

fn shapley_error(e: ShapleyError) -> CliError {
    match e {
        ShapleyError::Adjust(inner) => adjust_error(inner),
        ShapleyError::Dataset(inner) => dataset_error(inner),
        ShapleyError::NonNumericFeature(_)
        | ShapleyError::InvalidFeature { .. }
        | ShapleyError::ZeroIterations
        | ShapleyError::WidthMismatch { .. } => CliError::Usage(e.to_string()),
        other => CliError::Data(other.to_string()),
    }
}

fn harness_error(e: HarnessError) -> CliError {
    match e {
        HarnessError::InfeasibleCorrelation => CliError::Numerical(e.to_string()),
        HarnessError::InvalidSpec(m) => CliError::Usage(m),
        HarnessError::Dataset(inner) => dataset_error(inner),
        HarnessError::Model(inner) => model_error(inner),
        HarnessError::Shapley(inner) => shapley_error(inner),
        HarnessError::Adjust(inner) => adjust_error(inner),
    }
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, contents)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

struct Loaded {
    predictors: DataMatrix,
    model: PredictorHandle,
}

fn load_and_fit(common: &CommonOpts, opts: &BTreeMap<String, String>) -> Result<Loaded, CliError> {
    let mut schema = BTreeMap::new();
    for name in &common.categorical {
        if !name.is_empty() {
            schema.insert(name.clone(), FeatureKind::EncodedCategorical);
        }
    }
    let outcome = load_csv(&common.data, &schema).map_err(dataset_error)?;
    if outcome.dropped_rows > 0 {
        eprintln!(
            "note: dropped {} row(s) with missing or unparseable cells",
            outcome.dropped_rows
        );
    }
    let data = outcome.data;
    let target_col = data.feature_index(&common.target).map_err(dataset_error)?;
    let spec = ModelSpec::from_options(&common.model, opts).map_err(model_error)?;
    let model = spec.fit(&data, target_col).map_err(model_error)?;
    let predictors = data.drop_column(target_col).map_err(dataset_error)?;
    Ok(Loaded { predictors, model })
}

fn modes_for(mode: &str) -> Result<Vec<Mode>, CliError> {
    match mode.to_ascii_lowercase().as_str() {
        "both" => Ok(vec![Mode::Nmcc, Mode::Mcc]),
        other => Mode::parse(other)
            .map(|m| vec![m])
            .ok_or_else(|| CliError::Usage(format!("unknown mode '{mode}'; use mcc, nmcc or both"))),
    }
}

fn run_config(common: &CommonOpts, clone_noise: f64) -> RunConfig {
    RunConfig {
        iterations: common.iterations,
        seed: common.seed,
        workers: common.workers,
        clone_noise_rel: clone_noise,
    }
}

fn estimate_rows_to_markdown(
    instance: usize,
    estimates: &[(String, ShapleyEstimate)],
    seed: u64,
) -> String {
    let mut out = String::from("| instance | target | mode | value | std_error | M | seed |\n");
    out.push_str("|---:|---|---|---:|---:|---:|---:|\n");
    for (label, est) in estimates {
        out.push_str(&format!(
            "| {} | {} | {} | {:.6} | {:.6} | {} | {} |\n",
            instance, label, est.mode, est.value, est.std_error, est.iterations, seed
        ));
    }
    out
}

fn render_estimates(
    common: &CommonOpts,
    instance: usize,
    estimates: &[(String, ShapleyEstimate)],
) -> Result<(), CliError> {
    let contents = match common.format.as_str() {
        "csv" => estimates_to_csv(instance, estimates, common.seed),
        "md" => estimate_rows_to_markdown(instance, estimates, common.seed),
        other => return Err(CliError::Usage(format!("unknown format '{other}'"))),
    };
    emit(common.out.as_deref(), &contents)
}

fn render_report(common: &CommonOpts, report: &ScenarioReport) -> Result<(), CliError> {
    let contents = match common.format.as_str() {
        "csv" => report.to_csv(),
        "md" => report.to_markdown(),
        other => return Err(CliError::Usage(format!("unknown format '{other}'"))),
    };
    emit(common.out.as_deref(), &contents)?;
    // ratios go to stderr so the data stream stays machine-readable
    for ratio in &report.ratios {
        eprintln!("{}: {:.4}", ratio.name, ratio.value);
    }
    Ok(())
}

fn instance_row(predictors: &DataMatrix, instance: usize) -> Result<Vec<f64>, CliError> {
    if instance >= predictors.n_rows() {
        return Err(CliError::Usage(format!(
            "instance {instance} out of range for {} rows",
            predictors.n_rows()
        )));
    }
    Ok(predictors.row(instance).to_vec())
}

pub fn explain(
    common: &CommonOpts,
    opts: &BTreeMap<String, String>,
    instance: usize,
    feature: Option<&str>,
    plan_out: Option<&Path>,
) -> Result<(), CliError> {
    let loaded = load_and_fit(common, opts)?;
    let row = instance_row(&loaded.predictors, instance)?;
    let modes = modes_for(&common.mode)?;

    let targets: Vec<usize> = match feature {
        Some(name) => vec![loaded.predictors.feature_index(name).map_err(dataset_error)?],
        None => (0..loaded.predictors.n_cols()).collect(),
    };

    let mut rows = Vec::new();
    for &j in &targets {
        for &mode in &modes {
            let config = EstimatorConfig {
                iterations: common.iterations,
                seed: common.seed,
                mode,
                background: &loaded.predictors,
                workers: common.workers,
            };
            let est = estimate_single(&loaded.model, &config, &row, j).map_err(shapley_error)?;
            rows.push((loaded.predictors.feature_names()[j].clone(), est));
        }
    }

    if let Some(path) = plan_out {
        if let Some(&j) = targets.first() {
            let cache = compute_covariance(&loaded.predictors).map_err(dataset_error)?;
            let coalition =
                CoalitionSpec::new(vec![j], &loaded.predictors).map_err(adjust_error)?;
            let plan =
                build_plan(&cache, &loaded.predictors, &coalition).map_err(adjust_error)?;
            emit(Some(path), &plan.to_csv(loaded.predictors.feature_names()))?;
        }
    }
    render_estimates(common, instance, &rows)
}

pub fn explain_group(
    common: &CommonOpts,
    opts: &BTreeMap<String, String>,
    instance: usize,
    features: &[String],
) -> Result<(), CliError> {
    let loaded = load_and_fit(common, opts)?;
    let row = instance_row(&loaded.predictors, instance)?;
    let modes = modes_for(&common.mode)?;
    let indices: Vec<usize> = features
        .iter()
        .map(|f| loaded.predictors.feature_index(f))
        .collect::<Result<_, _>>()
        .map_err(dataset_error)?;
    let coalition = CoalitionSpec::new(indices, &loaded.predictors).map_err(adjust_error)?;
    let label = features.join("+");

    let mut rows = Vec::new();
    for &mode in &modes {
        let config = EstimatorConfig {
            iterations: common.iterations,
            seed: common.seed,
            mode,
            background: &loaded.predictors,
            workers: common.workers,
        };
        let est = estimate_coalition(&loaded.model, &config, &row, &coalition)
            .map_err(shapley_error)?;
        rows.push((label.clone(), est));
    }
    render_estimates(common, instance, &rows)
}

fn scenario_prereqs(
    common: &CommonOpts,
    opts: &BTreeMap<String, String>,
) -> Result<(DataMatrix, usize, ModelSpec), CliError> {
    let mut schema = BTreeMap::new();
    for name in &common.categorical {
        if !name.is_empty() {
            schema.insert(name.clone(), FeatureKind::EncodedCategorical);
        }
    }
    let outcome = load_csv(&common.data, &schema).map_err(dataset_error)?;
    let data = outcome.data;
    let target_col = data.feature_index(&common.target).map_err(dataset_error)?;
    let spec = ModelSpec::from_options(&common.model, opts).map_err(model_error)?;
    Ok((data, target_col, spec))
}

pub fn scenario1(
    common: &CommonOpts,
    opts: &BTreeMap<String, String>,
    feature: &str,
    clone_noise: f64,
) -> Result<(), CliError> {
    let (data, target_col, spec) = scenario_prereqs(common, opts)?;
    let cfg = run_config(common, clone_noise);
    let report =
        run_scenario1(&data, target_col, feature, &spec, &cfg).map_err(harness_error)?;
    render_report(common, &report)
}

pub fn scenario2(
    common: &CommonOpts,
    opts: &BTreeMap<String, String>,
    feature: &str,
    correlated: &[String],
) -> Result<(), CliError> {
    let (data, target_col, spec) = scenario_prereqs(common, opts)?;
    let cfg = run_config(common, 0.01);
    let correlated: Vec<&str> = correlated.iter().map(|s| s.as_str()).collect();
    let report = run_scenario2(&data, target_col, feature, &correlated, &spec, &cfg)
        .map_err(harness_error)?;
    render_report(common, &report)
}

pub fn combination(
    common: &CommonOpts,
    opts: &BTreeMap<String, String>,
    features: &[String],
    clone_noise: f64,
) -> Result<(), CliError> {
    let (data, target_col, spec) = scenario_prereqs(common, opts)?;
    let cfg = run_config(common, clone_noise);
    let features: Vec<&str> = features.iter().map(|s| s.as_str()).collect();
    let report =
        run_combination(&data, target_col, &features, &spec, &cfg).map_err(harness_error)?;
    render_report(common, &report)
}

#[allow(clippy::too_many_arguments)]
pub fn bench(
    widths: &[usize],
    model: &str,
    opts: &BTreeMap<String, String>,
    iterations: usize,
    seed: u64,
    repeats: usize,
    workers: usize,
    out: Option<&Path>,
    format: &str,
) -> Result<(), CliError> {
    let spec = ModelSpec::from_options(model, opts).map_err(model_error)?;
    let cfg = RunConfig {
        iterations,
        seed,
        workers,
        clone_noise_rel: 0.01,
    };
    let table = run_timing(widths, &spec, &cfg, repeats).map_err(harness_error)?;
    let contents = match format {
        "csv" => table.to_csv(),
        "md" => table.to_markdown(),
        other => return Err(CliError::Usage(format!("unknown format '{other}'"))),
    };
    emit(out, &contents)
}

fn parse_block(text: &str) -> Result<CorrelationBlock, CliError> {
    let (features, rho) = text.split_once(':').ok_or_else(|| {
        CliError::Usage(format!("--block expects 'i,j,...:rho', got '{text}'"))
    })?;
    let indices: Vec<usize> = features
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("bad block feature list in '{text}'")))?;
    let rho: f64 = rho
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("bad block correlation in '{text}'")))?;
    Ok(CorrelationBlock::uniform(indices, rho))
}

fn data_to_csv(data: &DataMatrix) -> String {
    let mut out = data.feature_names().join(",");
    out.push('\n');
    for r in 0..data.n_rows() {
        let row: Vec<String> = data.row(r).iter().map(|v| format!("{v}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub fn synth(
    rows: usize,
    width: usize,
    blocks: &[String],
    target_fn: &str,
    weights: &[f64],
    noise: f64,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let mut padded = weights.to_vec();
    if padded.is_empty() {
        padded = vec![2.0, 1.0, 0.5];
    }
    padded.resize(width, 0.0);
    let target = match target_fn {
        "linear" => TargetFn::Linear { weights: padded },
        "step" => TargetFn::StepMix { weights: padded },
        other => {
            return Err(CliError::Usage(format!(
                "unknown target function '{other}'; use linear or step"
            )))
        }
    };
    let blocks = blocks
        .iter()
        .map(|b| parse_block(b))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = SyntheticSpec {
        rows,
        features: width,
        blocks,
        target,
        noise_sd: noise,
        seed,
    };
    let data = generate_synthetic(&spec).map_err(harness_error)?;
    emit(out, &data_to_csv(&data))
}
