use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named numeric column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), values }
    }
}

/// Pearson's r between two equally long samples.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson_named(&Column::new("x", x.to_vec()), &Column::new("y", y.to_vec()))
}

fn centred(c: &Column) -> Result<(Vec<f64>, f64)> {
    let n = c.values.len() as f64;
    let mean = c.values.iter().sum::<f64>() / n;
    let dev: Vec<f64> = c.values.iter().map(|v| v - mean).collect();
    let ss: f64 = dev.iter().map(|d| d * d).sum();
    if !(ss > 0.0) {
        return Err(Error::ConstantColumn(c.name.clone()));
    }
    Ok((dev, ss.sqrt()))
}

fn pearson_named(x: &Column, y: &Column) -> Result<f64> {
    if x.values.len() != y.values.len() {
        return Err(Error::LengthMismatch { what: "column lengths", left: x.values.len(), right: y.values.len() });
    }
    if x.values.len() < 3 {
        return Err(Error::Precondition(format!("correlation needs at least 3 rows, got {}", x.values.len())));
    }
    let (dx, sx) = centred(x)?;
    let (dy, sy) = centred(y)?;
    let cov: f64 = dx.iter().zip(&dy).map(|(a, b)| a * b).sum();
    Ok((cov / (sx * sy)).clamp(-1.0, 1.0))
}

/// Correlations of each ADV token column (rows) with each feature column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    /// `values[row][column]`.
    pub values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn get(&self, row: &str, column: &str) -> Option<f64> {
        let i = self.rows.iter().position(|r| r == row)?;
        let j = self.columns.iter().position(|c| c == column)?;
        Some(self.values[i][j])
    }
}

/// Pearson matrix between `adv_tokens` (usually x_a, x_d, x_v) and `features`.
pub fn pearson_matrix(features: &[Column], adv_tokens: &[Column]) -> Result<CorrelationMatrix> {
    let mut values = Vec::with_capacity(adv_tokens.len());
    for t in adv_tokens {
        let row = features.iter().map(|f| pearson_named(t, f)).collect::<Result<Vec<_>>>()?;
        values.push(row);
    }
    Ok(CorrelationMatrix {
        rows: adv_tokens.iter().map(|c| c.name.clone()).collect(),
        columns: features.iter().map(|c| c.name.clone()).collect(),
        values,
    })
}
