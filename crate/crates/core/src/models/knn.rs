//! k-nearest-neighbours regression on internally standardized features.

use std::sync::Arc;

use crate::dataset::DataMatrix;
use crate::models::{split_target, ModelError, OutputKind, Predict, PredictorHandle};

struct KnnModel {
    /// standardized training rows, row-major
    rows: Vec<f64>,
    targets: Vec<f64>,
    means: Vec<f64>,
    scales: Vec<f64>,
    width: usize,
    k: usize,
}

impl KnnModel {
    fn standardize(&self, row: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for c in 0..self.width {
            out.push((row[c] - self.means[c]) / self.scales[c]);
        }
    }
}

impl Predict for KnnModel {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let mut query = Vec::with_capacity(self.width);
        self.standardize(row, &mut query);
        let n = self.targets.len();
        // (distance^2, row index); index tiebreak keeps ordering total
        let mut dists: Vec<(f64, usize)> = (0..n)
            .map(|r| {
                let train = &self.rows[r * self.width..(r + 1) * self.width];
                let mut d = 0.0;
                for c in 0..self.width {
                    let diff = query[c] - train[c];
                    d += diff * diff;
                }
                (d, r)
            })
            .collect();
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1)));
        let mut acc = 0.0;
        for &(_, r) in dists.iter().take(self.k) {
            acc += self.targets[r];
        }
        acc / self.k as f64
    }
}

/// Mean target of the `k` nearest training rows under Euclidean distance on
/// z-scored numeric features. Standardization uses training means and sds so
/// no single wide-scaled feature dominates the metric; constant columns get
/// unit scale. Ties in distance break by training-row index.
pub fn fit_knn(data: &DataMatrix, target: usize, k: usize) -> Result<PredictorHandle, ModelError> {
    if k == 0 {
        return Err(ModelError::InvalidHyperparameter("k must be >= 1".to_string()));
    }
    let (predictors, targets) = split_target(data, target)?;
    let n = predictors.n_rows();
    if k > n {
        return Err(ModelError::KTooLarge { k, n });
    }
    let width = predictors.n_cols();
    let mut means = vec![0.0; width];
    let mut scales = vec![1.0; width];
    for c in 0..width {
        let col = predictors.column(c);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        means[c] = mean;
        if var > 0.0 {
            scales[c] = var.sqrt();
        }
    }
    let mut rows = Vec::with_capacity(n * width);
    for r in 0..n {
        for c in 0..width {
            rows.push((predictors.value(r, c) - means[c]) / scales[c]);
        }
    }
    Ok(PredictorHandle::from_model(
        Arc::new(KnnModel {
            rows,
            targets,
            means,
            scales,
            width,
            k,
        }),
        OutputKind::RegressionScore,
        format!("knn(k={k})"),
        width,
    ))
}
