use serde::{Deserialize, Serialize};

use crate::montecarlo::AutocovEstimate;
use crate::{Error, Result};

/// Minimum number of significant leading lags for a mixing fit.
pub const MIN_DECAY_LAGS: usize = 10;

/// Significance multiple applied to lag standard errors.
pub const SIGNIFICANCE_Z: f64 = 3.0;

/// Exponential envelope `|ρ(u)| ≈ A e^{−λu}` fitted on the leading lags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingFit {
    pub lambda_hat: f64,
    pub prefactor: f64,
    /// Lag range `[start, end]` of the fit window.
    pub window: (f64, f64),
    pub n_points: usize,
    pub r_squared: f64,
    pub lambda_stderr: f64,
    /// Covariance of `(ln A, λ)`.
    pub param_cov: [[f64; 2]; 2],
}

impl MixingFit {
    pub fn envelope(&self, u: f64) -> f64 {
        self.prefactor * (-self.lambda_hat * u).exp()
    }
}

/// Number of leading lags with `|ρ̂| > 3·stderr`.
pub fn significant_run(autocov: &AutocovEstimate) -> usize {
    autocov
        .values
        .iter()
        .zip(&autocov.stderr)
        .take_while(|(v, se)| v.abs() > SIGNIFICANCE_Z * **se)
        .count()
}

pub(crate) struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
    /// Covariance of `(intercept, slope)` from the residual variance.
    pub cov: [[f64; 2]; 2],
}

pub(crate) fn ols(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let syy: f64 = ys.iter().map(|y| (y - ym).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ssr: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let s2 = if xs.len() > 2 { ssr / (n - 2.0) } else { 0.0 };
    let r_squared = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    LineFit {
        intercept,
        slope,
        r_squared,
        cov: [
            [s2 * (1.0 / n + xm * xm / sxx), -xm * s2 / sxx],
            [-xm * s2 / sxx, s2 / sxx],
        ],
    }
}

/// Least-squares line through `(lag, ln|ρ̂|)` over the leading run of
/// significant lags; `λ̂` is minus the slope.
pub fn fit_mixing_rate(autocov: &AutocovEstimate) -> Result<MixingFit> {
    let run = significant_run(autocov);
    if run < MIN_DECAY_LAGS {
        return Err(Error::NoDecayWindow {
            found: run,
            required: MIN_DECAY_LAGS,
        });
    }
    let xs = &autocov.lags[..run];
    let ys: Vec<f64> = autocov.values[..run].iter().map(|v| v.abs().ln()).collect();
    let line = ols(xs, &ys);
    if line.slope >= 0.0 {
        return Err(Error::NonDecayingFit { slope: line.slope });
    }
    // (ln A, λ) = (intercept, −slope)
    let c = line.cov;
    Ok(MixingFit {
        lambda_hat: -line.slope,
        prefactor: line.intercept.exp(),
        window: (xs[0], xs[run - 1]),
        n_points: run,
        r_squared: line.r_squared,
        lambda_stderr: c[1][1].sqrt(),
        param_cov: [[c[0][0], -c[0][1]], [-c[1][0], c[1][1]]],
    })
}
