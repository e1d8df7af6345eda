//! Least-squares scaling fits over summary columns.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` against `x`, optionally in log-log space.
/// Log-log requires strictly positive data.
pub fn fit_scaling(x: &[f64], y: &[f64], loglog: bool) -> Result<FitResult> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::FitTooFewPoints(x.len().min(y.len())));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = if loglog {
        for &v in x.iter().chain(y.iter()) {
            if v <= 0.0 {
                return Err(Error::FitNonPositive(v));
            }
        }
        (x.iter().map(|v| v.ln()).collect(), y.iter().map(|v| v.ln()).collect())
    } else {
        (x.to_vec(), y.to_vec())
    };

    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|v| (v - mean_x) * (v - mean_x)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("x values are all identical".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| (a - mean_x) * (b - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;

    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|b| (b - mean_y) * (b - mean_y)).sum();
    let stderr = (ss_res / (n - 2.0) / sxx).sqrt();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(FitResult { slope, intercept, stderr, r_squared })
}

/// Read two named columns from a CSV file with a header row. Rows where
/// either field is empty or non-numeric are skipped.
pub fn read_csv_columns(path: &Path, x_name: &str, y_name: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Config("empty CSV".into()))?;
    let columns: Vec<&str> = header.split(',').collect();
    let find = |name: &str| -> Result<usize> {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::Config(format!("column `{name}` not found in {columns:?}")))
    };
    let xi = find(x_name)?;
    let yi = find(y_name)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if let (Some(xf), Some(yf)) = (fields.get(xi), fields.get(yi)) {
            if let (Ok(x), Ok(y)) = (xf.parse::<f64>(), yf.parse::<f64>()) {
                xs.push(x);
                ys.push(y);
            }
        }
    }
    Ok((xs, ys))
}
