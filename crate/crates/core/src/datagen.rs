//! Synthetic dataset generators and CSV ingestion.
//!
//! All generators are pure functions of their seed. CSV files use a comma
//! separator, a required header row, UTF-8 and `.` decimals; the save
//! format mirrors the load format exactly.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::dag::DagAdjacency;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid generator parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("column '{name}' not found in header")]
    MissingColumn { name: String },
    #[error("non-numeric cell '{value}' at row {row}, column '{column}'")]
    NonNumeric { row: usize, column: String, value: String },
    #[error("column '{column}' has zero variance, cannot standardize")]
    ZeroVariance { column: String },
    #[error("no data rows")]
    Empty,
}

/// A design matrix with optional response vector and provenance record.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: Option<DVector<f64>>,
    pub column_names: Vec<String>,
    pub response_name: Option<String>,
    pub provenance: String,
}

/// The generating model behind a synthetic dataset.
#[derive(Debug, Clone)]
pub enum GroundTruth {
    Bvs {
        gamma: Vec<bool>,
        beta: Vec<f64>,
        noise_variance: f64,
    },
    Bsl {
        adjacency: DagAdjacency,
        weights: DMatrix<f64>,
    },
}

fn center_column(col: &mut [f64]) {
    let mean = col.iter().sum::<f64>() / col.len() as f64;
    for v in col.iter_mut() {
        *v -= mean;
    }
}

/// Subtracts each column's mean in place.
pub fn center_columns(matrix: &mut DMatrix<f64>) {
    for j in 0..matrix.ncols() {
        let mut col: Vec<f64> = matrix.column(j).iter().copied().collect();
        center_column(&mut col);
        matrix.set_column(j, &DVector::from_vec(col));
    }
}

/// Rescales each column to zero mean and unit (population) variance.
/// Errors on zero-variance columns. Idempotent within 1e-12.
pub fn standardize_columns(
    matrix: &mut DMatrix<f64>,
    names: &[String],
) -> Result<(), DataError> {
    let n = matrix.nrows() as f64;
    for j in 0..matrix.ncols() {
        let mut col: Vec<f64> = matrix.column(j).iter().copied().collect();
        center_column(&mut col);
        let variance = col.iter().map(|v| v * v).sum::<f64>() / n;
        if variance < 1e-24 {
            return Err(DataError::ZeroVariance {
                column: names.get(j).cloned().unwrap_or_else(|| format!("col{j}")),
            });
        }
        let sd = variance.sqrt();
        for v in col.iter_mut() {
            *v /= sd;
        }
        matrix.set_column(j, &DVector::from_vec(col));
    }
    Ok(())
}

/// Synthetic spike-and-slab regression data: γ* ~ Bernoulli(ρ),
/// β*_j = γ*_j·Unif(−4,4), X ~ Unif(−3,3) column-centered,
/// y = Xβ* + N(0,1) noise, centered.
pub fn generate_bvs(
    predictors: usize,
    rows: usize,
    rho: f64,
    seed: u64,
) -> Result<(Dataset, GroundTruth), DataError> {
    if predictors == 0 || rows == 0 {
        return Err(DataError::BadParams(format!(
            "need at least one predictor and one row, got m={predictors}, n={rows}"
        )));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(DataError::BadParams(format!(
            "inclusion probability must be in [0,1], got {rho}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma: Vec<bool> = (0..predictors).map(|_| rng.random::<f64>() < rho).collect();
    let beta: Vec<f64> = gamma
        .iter()
        .map(|&on| {
            let alpha: f64 = rng.random_range(-4.0..4.0);
            if on {
                alpha
            } else {
                0.0
            }
        })
        .collect();
    let mut x = DMatrix::zeros(rows, predictors);
    for j in 0..predictors {
        for i in 0..rows {
            x[(i, j)] = rng.random_range(-3.0..3.0);
        }
    }
    center_columns(&mut x);
    let noise = Normal::new(0.0, 1.0).expect("valid normal");
    let beta_vec = DVector::from_column_slice(&beta);
    let mut y = &x * &beta_vec;
    for i in 0..rows {
        y[i] += noise.sample(&mut rng);
    }
    let mut y_vals: Vec<f64> = y.iter().copied().collect();
    center_column(&mut y_vals);
    let dataset = Dataset {
        x,
        y: Some(DVector::from_vec(y_vals)),
        column_names: (1..=predictors).map(|j| format!("x{j}")).collect(),
        response_name: Some("y".into()),
        provenance: format!("bvs-synthetic m={predictors} n={rows} rho={rho} seed={seed}"),
    };
    let truth = GroundTruth::Bvs { gamma, beta, noise_variance: 1.0 };
    Ok((dataset, truth))
}

/// Synthetic linear-SEM data from an Erdős–Rényi DAG: a uniform node order
/// with forward edges included independently with probability
/// degree/(nodes−1), edge weights Unif(0,2), unit Gaussian noise,
/// standardized columns.
pub fn generate_bsl(
    nodes: usize,
    degree: usize,
    rows: usize,
    seed: u64,
) -> Result<(Dataset, GroundTruth), DataError> {
    if nodes < 2 {
        return Err(DataError::BadParams(format!("need at least 2 nodes, got {nodes}")));
    }
    if degree >= nodes {
        return Err(DataError::BadParams(format!(
            "expected degree {degree} must be below the node count {nodes}"
        )));
    }
    if rows == 0 {
        return Err(DataError::BadParams("need at least one row".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..nodes).collect();
    order.shuffle(&mut rng);
    let edge_prob = degree as f64 / (nodes - 1) as f64;
    let mut adjacency = DagAdjacency::empty(nodes);
    let mut weights = DMatrix::zeros(nodes, nodes);
    for a in 0..nodes {
        for b in (a + 1)..nodes {
            if rng.random::<f64>() < edge_prob {
                let (u, v) = (order[a], order[b]);
                adjacency.set_edge(u, v, true);
                weights[(u, v)] = rng.random_range(0.0..2.0);
            }
        }
    }
    let noise = Normal::new(0.0, 1.0).expect("valid normal");
    let mut x = DMatrix::zeros(rows, nodes);
    for i in 0..rows {
        for &v in &order {
            let mut value: f64 = noise.sample(&mut rng);
            for u in adjacency.parents(v) {
                value += weights[(u, v)] * x[(i, u)];
            }
            x[(i, v)] = value;
        }
    }
    let column_names: Vec<String> = (1..=nodes).map(|j| format!("x{j}")).collect();
    standardize_columns(&mut x, &column_names)?;
    let dataset = Dataset {
        x,
        y: None,
        column_names,
        response_name: None,
        provenance: format!("bsl-synthetic n={nodes} d={degree} rows={rows} seed={seed}"),
    };
    let truth = GroundTruth::Bsl { adjacency, weights };
    Ok((dataset, truth))
}

/// Loads a headered CSV. The named response column becomes `y` (centered);
/// the remaining columns become the design matrix, standardized when
/// `standardize` is set.
pub fn load_csv(
    path: &Path,
    response: Option<&str>,
    standardize: bool,
) -> Result<Dataset, DataError> {
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> =
        reader.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let response_idx = match response {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| DataError::MissingColumn { name: name.to_string() })?,
        ),
        None => None,
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(header.len());
        for (col_idx, cell) in record.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| DataError::NonNumeric {
                row: row_idx + 2, // 1-based, after the header line
                column: header
                    .get(col_idx)
                    .cloned()
                    .unwrap_or_else(|| format!("col{col_idx}")),
                value: cell.to_string(),
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    let n = rows.len();
    let predictor_cols: Vec<usize> =
        (0..header.len()).filter(|&j| Some(j) != response_idx).collect();
    let mut x = DMatrix::zeros(n, predictor_cols.len());
    for (out_j, &j) in predictor_cols.iter().enumerate() {
        for i in 0..n {
            x[(i, out_j)] = rows[i][j];
        }
    }
    let column_names: Vec<String> =
        predictor_cols.iter().map(|&j| header[j].clone()).collect();
    if standardize {
        standardize_columns(&mut x, &column_names)?;
    }
    let y = response_idx.map(|j| {
        let mut col: Vec<f64> = (0..n).map(|i| rows[i][j]).collect();
        center_column(&mut col);
        DVector::from_vec(col)
    });
    Ok(Dataset {
        x,
        y,
        column_names,
        response_name: response.map(|s| s.to_string()),
        provenance: format!("csv:{} standardize={standardize}", path.display()),
    })
}

/// Writes a dataset as CSV (predictors first, response last). Floats are
/// printed in shortest round-trip form, so save → load reproduces the
/// values exactly.
pub fn save_csv(dataset: &Dataset, path: &Path) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = dataset.column_names.clone();
    if dataset.y.is_some() {
        header.push(dataset.response_name.clone().unwrap_or_else(|| "y".into()));
    }
    writer.write_record(&header)?;
    for i in 0..dataset.x.nrows() {
        let mut record: Vec<String> =
            (0..dataset.x.ncols()).map(|j| dataset.x[(i, j)].to_string()).collect();
        if let Some(y) = &dataset.y {
            record.push(y[i].to_string());
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}
