//! Linear and logistic predictors.

use std::sync::Arc;

use crate::dataset::DataMatrix;
use crate::linalg;
use crate::models::{split_target, ModelError, OutputKind, Predict, PredictorHandle};

struct LinearModel {
    /// intercept followed by one weight per feature
    weights: Vec<f64>,
}

impl Predict for LinearModel {
    fn predict_row(&self, row: &[f64]) -> f64 {
        let mut acc = self.weights[0];
        for (w, x) in self.weights[1..].iter().zip(row) {
            acc += w * x;
        }
        acc
    }
}

/// Ordinary least squares via the normal equations, with `ridge_eps` added to
/// every diagonal entry of the Gram matrix. With `ridge_eps = 0` a singular
/// design (e.g. duplicated columns) is rejected.
pub fn fit_linear(
    data: &DataMatrix,
    target: usize,
    ridge_eps: f64,
) -> Result<PredictorHandle, ModelError> {
    if !ridge_eps.is_finite() || ridge_eps < 0.0 {
        return Err(ModelError::InvalidHyperparameter(format!(
            "ridge_eps must be finite and >= 0, got {ridge_eps}"
        )));
    }
    let (predictors, y) = split_target(data, target)?;
    let n = predictors.n_rows();
    let p = predictors.n_cols() + 1; // intercept first

    let mut gram = vec![0.0; p * p];
    let mut moment = vec![0.0; p];
    for r in 0..n {
        let row = predictors.row(r);
        // design row is (1, x_1, ..., x_m)
        for a in 0..p {
            let xa = if a == 0 { 1.0 } else { row[a - 1] };
            moment[a] += xa * y[r];
            for b in a..p {
                let xb = if b == 0 { 1.0 } else { row[b - 1] };
                gram[a * p + b] += xa * xb;
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[a * p + b] = gram[b * p + a];
        }
        gram[a * p + a] += ridge_eps;
    }

    let weights = linalg::solve(gram, moment, p, 1e-10).map_err(|_| ModelError::SingularDesign)?;
    Ok(PredictorHandle::from_model(
        Arc::new(LinearModel { weights }),
        OutputKind::RegressionScore,
        format!("linear(ridge_eps={ridge_eps})"),
        predictors.n_cols(),
    ))
}

struct LogisticModel {
    weights: Vec<f64>,
}

impl Predict for LogisticModel {
    fn predict_row(&self, row: &[f64]) -> f64 {
        // pre-sigmoid score: attributions stay additive on the logit scale
        let mut acc = self.weights[0];
        for (w, x) in self.weights[1..].iter().zip(row) {
            acc += w * x;
        }
        acc
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Full-batch gradient-descent logistic regression on a binary 0/1 target.
/// `predict_batch` returns logits, not probabilities.
pub fn fit_logistic(
    data: &DataMatrix,
    target: usize,
    learning_rate: f64,
    epochs: usize,
) -> Result<PredictorHandle, ModelError> {
    if !learning_rate.is_finite() || learning_rate <= 0.0 {
        return Err(ModelError::InvalidHyperparameter(format!(
            "learning rate must be positive, got {learning_rate}"
        )));
    }
    if epochs == 0 {
        return Err(ModelError::InvalidHyperparameter(
            "epochs must be >= 1".to_string(),
        ));
    }
    let (predictors, y) = split_target(data, target)?;
    for &v in &y {
        if v != 0.0 && v != 1.0 {
            return Err(ModelError::NonBinaryTarget(v));
        }
    }

    let n = predictors.n_rows();
    let p = predictors.n_cols() + 1;
    let mut weights = vec![0.0; p];
    let inv_n = 1.0 / n as f64;
    for _ in 0..epochs {
        let mut grad = vec![0.0; p];
        for r in 0..n {
            let row = predictors.row(r);
            let mut z = weights[0];
            for (w, x) in weights[1..].iter().zip(row) {
                z += w * x;
            }
            let err = sigmoid(z) - y[r];
            grad[0] += err;
            for (g, x) in grad[1..].iter_mut().zip(row) {
                *g += err * x;
            }
        }
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= learning_rate * g * inv_n;
        }
    }

    Ok(PredictorHandle::from_model(
        Arc::new(LogisticModel { weights }),
        OutputKind::ClassificationLogit,
        format!("logistic(lr={learning_rate},epochs={epochs})"),
        predictors.n_cols(),
    ))
}

/// Mean binary cross-entropy of a logit-output model on a dataset; exposed so
/// training behaviour can be inspected without widening the predictor surface.
pub fn logistic_loss(model: &PredictorHandle, data: &DataMatrix, target: usize) -> f64 {
    let (predictors, y) = split_target(data, target).expect("valid target column");
    let n = predictors.n_rows();
    let mut loss = 0.0;
    for r in 0..n {
        let z = model.predict_one(predictors.row(r));
        // numerically stable: log(1+e^z) - y z
        let log1pe = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
        loss += log1pe - y[r] * z;
    }
    loss / n as f64
}
