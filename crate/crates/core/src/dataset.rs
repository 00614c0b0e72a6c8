//! Tabular dataset ingestion, feature metadata, and covariance statistics.
//!
//! A [`DataMatrix`] is an immutable n×m table of finite reals with named,
//! kinded columns. Categorical columns must arrive already encoded (one-hot
//! or integer levels); no encoding is performed here, and columns marked
//! [`FeatureKind::EncodedCategorical`] are excluded from covariance-based
//! adjustments downstream. Missing-value policy is row-drop at ingestion.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

/// How a column participates in the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    /// Real-valued; participates in covariance statistics and adjustment.
    Numeric,
    /// Pre-encoded categorical (e.g. one-hot 0/1). Carried through model
    /// fitting and prediction unchanged, never adjusted.
    EncodedCategorical,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureKind::Numeric => write!(f, "numeric"),
            FeatureKind::EncodedCategorical => write!(f, "categorical"),
        }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {message}")]
    FileUnreadable { path: String, message: String },
    #[error("duplicate column name '{0}'")]
    DuplicateColumnName(String),
    #[error("no usable rows after dropping rows with missing or unparseable cells")]
    NoUsableRows,
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("dataset must have at least one column")]
    NoColumns,
    #[error("non-finite value at row {row}, column '{column}'")]
    NonFiniteValue { row: usize, column: String },
    #[error("column '{0}' is not numeric")]
    NonNumericFeature(String),
    #[error("categorical column '{column}' has {levels} distinct values; expected a small encoded level set")]
    TooManyLevels { column: String, levels: usize },
    #[error("noise standard deviation must be finite and >= 0, got {0}")]
    InvalidNoiseSd(f64),
    #[error("column index {index} out of range for {width} columns")]
    ColumnOutOfRange { index: usize, width: usize },
    #[error("unknown column '{name}'; available: {available}")]
    UnknownColumn { name: String, available: String },
}

/// Immutable tabular dataset: row-major values plus per-column metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Vec<f64>,
    n_rows: usize,
    feature_names: Vec<String>,
    feature_kinds: Vec<FeatureKind>,
}

/// Result of a CSV load: the parsed matrix plus how many rows were dropped
/// because of missing or unparseable cells.
#[derive(Debug)]
pub struct LoadOutcome {
    pub data: DataMatrix,
    pub dropped_rows: usize,
}

impl DataMatrix {
    /// Builds a matrix from row-major values, validating every invariant:
    /// unique names, matching widths, n >= 2, finite values, and small level
    /// sets for encoded-categorical columns.
    pub fn from_rows(
        feature_names: Vec<String>,
        feature_kinds: Vec<FeatureKind>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, DatasetError> {
        let m = feature_names.len();
        if m == 0 {
            return Err(DatasetError::NoColumns);
        }
        assert_eq!(
            feature_kinds.len(),
            m,
            "feature_kinds length must match feature_names"
        );
        for (i, name) in feature_names.iter().enumerate() {
            if feature_names[..i].contains(name) {
                return Err(DatasetError::DuplicateColumnName(name.clone()));
            }
        }
        if rows.len() < 2 {
            return Err(DatasetError::TooFewRows(rows.len()));
        }
        let n_rows = rows.len();
        let mut values = Vec::with_capacity(n_rows * m);
        for (r, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), m, "row {r} width must match column count");
            for (c, v) in row.into_iter().enumerate() {
                if !v.is_finite() {
                    return Err(DatasetError::NonFiniteValue {
                        row: r,
                        column: feature_names[c].clone(),
                    });
                }
                values.push(v);
            }
        }
        let matrix = DataMatrix {
            values,
            n_rows,
            feature_names,
            feature_kinds,
        };
        matrix.check_categorical_levels()?;
        Ok(matrix)
    }

    fn check_categorical_levels(&self) -> Result<(), DatasetError> {
        const MAX_LEVELS: usize = 64;
        for (c, kind) in self.feature_kinds.iter().enumerate() {
            if *kind != FeatureKind::EncodedCategorical {
                continue;
            }
            let mut levels: Vec<u64> = (0..self.n_rows)
                .map(|r| self.value(r, c).to_bits())
                .collect();
            levels.sort_unstable();
            levels.dedup();
            if levels.len() > MAX_LEVELS {
                return Err(DatasetError::TooManyLevels {
                    column: self.feature_names[c].clone(),
                    levels: levels.len(),
                });
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.feature_names.len()
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let m = self.n_cols();
        &self.values[row * m..(row + 1) * m]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.value(r, col)).collect()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_kinds(&self) -> &[FeatureKind] {
        &self.feature_kinds
    }

    pub fn kind(&self, col: usize) -> FeatureKind {
        self.feature_kinds[col]
    }

    pub fn is_numeric(&self, col: usize) -> bool {
        self.feature_kinds[col] == FeatureKind::Numeric
    }

    /// Index of a column by name.
    pub fn feature_index(&self, name: &str) -> Result<usize, DatasetError> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| DatasetError::UnknownColumn {
                name: name.to_string(),
                available: self.feature_names.join(", "),
            })
    }

    /// New matrix without the given column; used to split off a target or to
    /// remove a correlated set before refitting.
    pub fn drop_column(&self, col: usize) -> Result<DataMatrix, DatasetError> {
        self.select_columns(
            &(0..self.n_cols())
                .filter(|&c| c != col)
                .collect::<Vec<_>>(),
        )
    }

    /// New matrix with only the first `rows` rows; handy for capping oracle
    /// backgrounds.
    pub fn head(&self, rows: usize) -> Result<DataMatrix, DatasetError> {
        if rows < 2 {
            return Err(DatasetError::TooFewRows(rows));
        }
        let rows = rows.min(self.n_rows);
        Ok(DataMatrix {
            values: self.values[..rows * self.n_cols()].to_vec(),
            n_rows: rows,
            feature_names: self.feature_names.clone(),
            feature_kinds: self.feature_kinds.clone(),
        })
    }

    /// New matrix keeping only `cols`, in the order given.
    pub fn select_columns(&self, cols: &[usize]) -> Result<DataMatrix, DatasetError> {
        for &c in cols {
            if c >= self.n_cols() {
                return Err(DatasetError::ColumnOutOfRange {
                    index: c,
                    width: self.n_cols(),
                });
            }
        }
        if cols.is_empty() {
            return Err(DatasetError::NoColumns);
        }
        let names = cols.iter().map(|&c| self.feature_names[c].clone()).collect();
        let kinds = cols.iter().map(|&c| self.feature_kinds[c]).collect();
        let mut values = Vec::with_capacity(self.n_rows * cols.len());
        for r in 0..self.n_rows {
            for &c in cols {
                values.push(self.value(r, c));
            }
        }
        Ok(DataMatrix {
            values,
            n_rows: self.n_rows,
            feature_names: names,
            feature_kinds: kinds,
        })
    }

    /// 64-bit FNV-1a digest over shape, names, kinds, and value bits. Used to
    /// fingerprint report inputs.
    pub fn fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf29ce484222325;
        const PRIME: u64 = 0x100000001b3;
        let mut h = OFFSET;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(PRIME);
            }
        };
        eat(&(self.n_rows as u64).to_le_bytes());
        eat(&(self.n_cols() as u64).to_le_bytes());
        for (name, kind) in self.feature_names.iter().zip(&self.feature_kinds) {
            eat(name.as_bytes());
            eat(&[match kind {
                FeatureKind::Numeric => 0u8,
                FeatureKind::EncodedCategorical => 1u8,
            }]);
        }
        for v in &self.values {
            eat(&v.to_bits().to_le_bytes());
        }
        h
    }
}

/// Loads a CSV file with a mandatory header row. Columns are `Numeric` unless
/// overridden by `schema` (name → kind); every cell must still parse as a
/// finite real ('.' decimal separator) because categorical columns are
/// expected to be pre-encoded. Rows with missing or unparseable cells are
/// dropped and counted.
pub fn load_csv(
    path: &Path,
    schema: &BTreeMap<String, FeatureKind>,
) -> Result<LoadOutcome, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| DatasetError::FileUnreadable {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| DatasetError::FileUnreadable {
            path: path.display().to_string(),
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let m = headers.len();
    if m == 0 {
        return Err(DatasetError::NoColumns);
    }
    for (i, name) in headers.iter().enumerate() {
        if headers[..i].contains(name) {
            return Err(DatasetError::DuplicateColumnName(name.clone()));
        }
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(_) => {
                dropped += 1;
                continue;
            }
        };
        if record.len() != m {
            dropped += 1;
            continue;
        }
        let mut row = Vec::with_capacity(m);
        let mut ok = true;
        for cell in record.iter() {
            match cell.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            rows.push(row);
        } else {
            dropped += 1;
        }
    }
    if rows.is_empty() {
        return Err(DatasetError::NoUsableRows);
    }

    let kinds: Vec<FeatureKind> = headers
        .iter()
        .map(|name| schema.get(name).copied().unwrap_or(FeatureKind::Numeric))
        .collect();
    let data = DataMatrix::from_rows(headers, kinds, rows)?;
    Ok(LoadOutcome {
        data,
        dropped_rows: dropped,
    })
}

/// Sample means, variances, and the full covariance matrix of a dataset's
/// numeric columns. Uses the unbiased n−1 denominator; entries involving a
/// non-numeric column are flagged unusable and surface as `None` from
/// [`CovarianceCache::covariance`], never as a silent zero.
#[derive(Debug, Clone)]
pub struct CovarianceCache {
    means: Vec<f64>,
    cov: Vec<f64>,
    numeric_mask: Vec<bool>,
    m: usize,
    n: usize,
}

impl CovarianceCache {
    pub fn n_features(&self) -> usize {
        self.m
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn mean(&self, col: usize) -> f64 {
        self.means[col]
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn is_numeric(&self, col: usize) -> bool {
        self.numeric_mask[col]
    }

    pub fn numeric_mask(&self) -> &[bool] {
        &self.numeric_mask
    }

    fn usable(&self, j: usize, k: usize) -> bool {
        self.numeric_mask[j] && self.numeric_mask[k]
    }

    /// Sample covariance between two numeric columns; `None` when either
    /// column is non-numeric (never silently zero).
    pub fn covariance(&self, j: usize, k: usize) -> Option<f64> {
        if self.usable(j, k) {
            Some(self.cov[j * self.m + k])
        } else {
            None
        }
    }

    pub fn variance(&self, j: usize) -> Option<f64> {
        self.covariance(j, j)
    }

    pub fn sd(&self, j: usize) -> Option<f64> {
        self.variance(j).map(f64::sqrt)
    }

    /// Average variance across numeric columns; the reference scale for the
    /// degenerate-variance gate in the adjustment solver.
    pub fn mean_numeric_variance(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for j in 0..self.m {
            if self.numeric_mask[j] {
                sum += self.cov[j * self.m + j];
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }
}

/// Two-pass sample covariance over the numeric columns of `data`, with the
/// unbiased n−1 denominator. Symmetric by construction: each pair is computed
/// once and mirrored.
pub fn compute_covariance(data: &DataMatrix) -> Result<CovarianceCache, DatasetError> {
    let n = data.n_rows();
    if n < 2 {
        return Err(DatasetError::TooFewRows(n));
    }
    let m = data.n_cols();
    let mut means = vec![0.0; m];
    for c in 0..m {
        let mut sum = 0.0;
        for r in 0..n {
            sum += data.value(r, c);
        }
        means[c] = sum / n as f64;
    }
    let numeric_mask: Vec<bool> = (0..m).map(|c| data.is_numeric(c)).collect();
    let denom = (n - 1) as f64;
    let mut cov = vec![f64::NAN; m * m];
    for j in 0..m {
        if !numeric_mask[j] {
            continue;
        }
        for k in j..m {
            if !numeric_mask[k] {
                continue;
            }
            let mut acc = 0.0;
            for r in 0..n {
                acc += (data.value(r, j) - means[j]) * (data.value(r, k) - means[k]);
            }
            let c = acc / denom;
            cov[j * m + k] = c;
            cov[k * m + j] = c;
        }
    }
    Ok(CovarianceCache {
        means,
        cov,
        numeric_mask,
        m,
        n,
    })
}

/// Appends a noisy copy of numeric column `j`, named `<name>_corr`:
/// `clone_i = x_i + eps_i` with `eps ~ Normal(0, noise_sd^2)` from the given
/// seed. The original matrix is unchanged.
pub fn inject_correlated_clone(
    data: &DataMatrix,
    j: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<DataMatrix, DatasetError> {
    if j >= data.n_cols() {
        return Err(DatasetError::ColumnOutOfRange {
            index: j,
            width: data.n_cols(),
        });
    }
    if !data.is_numeric(j) {
        return Err(DatasetError::NonNumericFeature(
            data.feature_names()[j].clone(),
        ));
    }
    if !noise_sd.is_finite() || noise_sd < 0.0 {
        return Err(DatasetError::InvalidNoiseSd(noise_sd));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut names = data.feature_names().to_vec();
    names.push(format!("{}_corr", data.feature_names()[j]));
    let mut kinds = data.feature_kinds().to_vec();
    kinds.push(FeatureKind::Numeric);

    let rows: Vec<Vec<f64>> = if noise_sd == 0.0 {
        (0..data.n_rows())
            .map(|r| {
                let mut row = data.row(r).to_vec();
                row.push(data.value(r, j));
                row
            })
            .collect()
    } else {
        let normal = Normal::new(0.0, noise_sd).expect("validated noise_sd");
        (0..data.n_rows())
            .map(|r| {
                let mut row = data.row(r).to_vec();
                row.push(data.value(r, j) + normal.sample(&mut rng));
                row
            })
            .collect()
    };
    DataMatrix::from_rows(names, kinds, rows)
}

/// Pearson correlation between two equal-length slices; test and harness
/// convenience.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}
