//! Report structures shared by the scenario runners, with CSV and markdown
//! rendering.

use std::fmt::Write as _;

use crate::shapley::{Mode, ShapleyEstimate};

/// One estimate row of a scenario report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    /// Experiment arm, e.g. `baseline` or `with_clone`.
    pub condition: String,
    /// Model descriptor the arm was fit with.
    pub model: String,
    /// Feature name or `+`-joined coalition.
    pub target: String,
    pub mode: Mode,
    pub value: f64,
    pub std_error: f64,
}

/// A derived ratio, referencing the two estimate rows it was computed from so
/// reports stay self-auditing.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub name: String,
    pub numerator: usize,
    pub denominator: usize,
    pub value: f64,
}

/// Output of one scenario run: estimate rows, derived ratios, and enough
/// metadata to reproduce the run.
#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub scenario: String,
    pub rows: Vec<ReportRow>,
    pub ratios: Vec<RatioRow>,
    pub iterations: usize,
    pub seed: u64,
    /// Content hash of the input dataset.
    pub dataset_fingerprint: u64,
}

impl ScenarioReport {
    pub(crate) fn push_estimate(
        &mut self,
        condition: &str,
        model: &str,
        target: &str,
        estimate: &ShapleyEstimate,
    ) -> usize {
        self.rows.push(ReportRow {
            condition: condition.to_string(),
            model: model.to_string(),
            target: target.to_string(),
            mode: estimate.mode,
            value: estimate.value,
            std_error: estimate.std_error,
        });
        self.rows.len() - 1
    }

    pub(crate) fn push_ratio(&mut self, name: &str, numerator: usize, denominator: usize) {
        let value = self.rows[numerator].value / self.rows[denominator].value;
        self.ratios.push(RatioRow {
            name: name.to_string(),
            numerator,
            denominator,
            value,
        });
    }

    /// Looks up a ratio by name.
    pub fn ratio(&self, name: &str) -> Option<&RatioRow> {
        self.ratios.iter().find(|r| r.name == name)
    }

    /// Looks up an estimate row by (condition, target, mode).
    pub fn row(&self, condition: &str, target: &str, mode: Mode) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.condition == condition && r.target == target && r.mode == mode)
    }

    /// CSV with the fixed column set
    /// `scenario,condition,model,target,mode,value,std_error,M,seed`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,condition,model,target,mode,value,std_error,M,seed\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                self.scenario,
                row.condition,
                row.model,
                row.target,
                row.mode,
                row.value,
                row.std_error,
                self.iterations,
                self.seed
            );
        }
        out
    }

    /// Markdown rendering: an estimate table plus a ratio table, mirroring
    /// the tabular layout the experiments are usually read in.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "## {} (M = {}, seed = {}, data {:016x})\n",
            self.scenario, self.iterations, self.seed, self.dataset_fingerprint
        );
        let _ = writeln!(out, "| condition | model | target | mode | value | std_error |");
        let _ = writeln!(out, "|---|---|---|---|---:|---:|");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {:.4} | {:.4} |",
                row.condition, row.model, row.target, row.mode, row.value, row.std_error
            );
        }
        if !self.ratios.is_empty() {
            let _ = writeln!(out, "\n| ratio | value | rows |");
            let _ = writeln!(out, "|---|---:|---|");
            for ratio in &self.ratios {
                let _ = writeln!(
                    out,
                    "| {} | {:.4} | {}/{} |",
                    ratio.name, ratio.value, ratio.numerator, ratio.denominator
                );
            }
        }
        out
    }
}

/// CSV rendering of plain per-feature or coalition estimates:
/// `instance,target,mode,value,std_error,M,seed` — one row per estimate.
pub fn estimates_to_csv(
    instance_id: usize,
    estimates: &[(String, ShapleyEstimate)],
    seed: u64,
) -> String {
    let mut out = String::from("instance,target,mode,value,std_error,M,seed\n");
    for (label, est) in estimates {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            instance_id, label, est.mode, est.value, est.std_error, est.iterations, seed
        );
    }
    out
}
