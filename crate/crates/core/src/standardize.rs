//! Per-feature z-score transform.
//!
//! Fitted on training rows only. Used by the perturbation sampler and the
//! synthetic generator; models themselves train on raw feature values.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Column means and standard deviations of a fit set.
///
/// Standard deviations are population deviations (divide by n). A column
/// with zero variance gets its deviation clamped to 1 so the transform maps
/// it to a constant 0 instead of aborting the run; `clamped` records which
/// columns were degenerate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
    pub clamped: Vec<usize>,
}

impl Standardizer {
    /// Fit on the rows of a training set.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Standardizer> {
        if rows.is_empty() {
            return Err(Error::Validation(
                "cannot fit a standardizer on an empty training set".into(),
            ));
        }
        let d = rows[0].len();
        let n = rows.len() as f64;
        let mut means = vec![0.0; d];
        for row in rows {
            for (m, &v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut vars = vec![0.0; d];
        for row in rows {
            for j in 0..d {
                let delta = row[j] - means[j];
                vars[j] += delta * delta;
            }
        }
        let mut clamped = Vec::new();
        let stddevs = vars
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let sd = (v / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    clamped.push(j);
                    1.0
                }
            })
            .collect();
        Ok(Standardizer {
            means,
            stddevs,
            clamped,
        })
    }

    pub fn n_features(&self) -> usize {
        self.means.len()
    }

    /// z-score a single row.
    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stddevs))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }

    /// z-score a batch of rows.
    pub fn apply(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply_row(r)).collect()
    }

    /// Map a standardized row back to raw feature space.
    pub fn invert_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stddevs))
            .map(|(&z, (&m, &s))| m + z * s)
            .collect()
    }
}
