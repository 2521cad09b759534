use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Single-pass mean and co-moment accumulator for a fixed-length vector of
/// quantities (Welford update, Chan et al. merge).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamingMoments {
    count: u64,
    mean: Vec<f64>,
    // dim × dim, row-major: Σ (x_i − mean_i)(x_j − mean_j)
    comoment: Vec<f64>,
}

impl StreamingMoments {
    pub fn new(dim: usize) -> Self {
        StreamingMoments {
            count: 0,
            mean: vec![0.0; dim],
            comoment: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn update(&mut self, values: &[f64]) -> Result<()> {
        let d = self.dim();
        if values.len() != d {
            return Err(Error::ShapeMismatch {
                expected: d,
                found: values.len(),
            });
        }
        self.count += 1;
        let n = self.count as f64;
        let delta: Vec<f64> = values.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        for (m, dl) in self.mean.iter_mut().zip(&delta) {
            *m += dl / n;
        }
        for i in 0..d {
            for j in 0..d {
                self.comoment[i * d + j] += delta[i] * (values[j] - self.mean[j]);
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &StreamingMoments) -> Result<()> {
        let d = self.dim();
        if other.dim() != d {
            return Err(Error::ShapeMismatch {
                expected: d,
                found: other.dim(),
            });
        }
        if other.count == 0 {
            return Ok(());
        }
        if self.count == 0 {
            *self = other.clone();
            return Ok(());
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta: Vec<f64> = other.mean.iter().zip(&self.mean).map(|(b, a)| b - a).collect();
        for i in 0..d {
            for j in 0..d {
                self.comoment[i * d + j] += other.comoment[i * d + j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for (m, dl) in self.mean.iter_mut().zip(&delta) {
            *m += dl * nb / n;
        }
        self.count += other.count;
        Ok(())
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Unbiased covariance of quantities `i` and `j`; 0 with fewer than two values.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        self.comoment[i * self.dim() + j] / (self.count - 1) as f64
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.covariance(i, i)
    }

    pub fn variances(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.variance(i)).collect()
    }

    /// Standard error of the mean of quantity `i`.
    pub fn stderr(&self, i: usize) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        (self.variance(i) / self.count as f64).sqrt()
    }

    pub fn covariance_matrix(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|j| self.covariance(i, j)).collect()).collect()
    }
}

/// Functional-style wrapper: returns the accumulator after absorbing `values`.
pub fn update_moments(mut acc: StreamingMoments, values: &[f64]) -> Result<StreamingMoments> {
    acc.update(values)?;
    Ok(acc)
}

pub fn merge_moments(mut a: StreamingMoments, b: &StreamingMoments) -> Result<StreamingMoments> {
    a.merge(b)?;
    Ok(a)
}
