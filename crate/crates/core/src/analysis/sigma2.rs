use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use statrs::distribution::{ContinuousCDF, Normal};

use super::mixing::{MixingFit, SIGNIFICANCE_Z};
use crate::montecarlo::{AutocovEstimate, EnsembleStats};
use crate::{Error, Result};

/// The fit window starts at `WINDOW_START / λ̂`.
pub const WINDOW_START: f64 = 10.0;
/// The largest observation time must reach `MIN_HORIZON / λ̂`.
pub const MIN_HORIZON: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sigma2Method {
    Growth,
    GreenKubo,
}

/// Effective diffusivity estimate with a 95% confidence interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sigma2Estimate {
    pub method: Sigma2Method,
    pub value: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub diagnostics: Map<String, Value>,
}

/// Two-sided 95% normal quantile.
pub fn z95() -> f64 {
    Normal::standard().inverse_cdf(0.975)
}

impl Sigma2Estimate {
    fn new(method: Sigma2Method, value: f64, stderr: f64, diagnostics: Map<String, Value>) -> Self {
        let half = z95() * stderr;
        Sigma2Estimate {
            method,
            value,
            stderr,
            ci_low: value - half,
            ci_high: value + half,
            diagnostics,
        }
    }

    pub fn overlaps(&self, other: &Sigma2Estimate) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }

    /// Whether the whole CI lies in `[lo, hi]`.
    pub fn ci_within(&self, lo: f64, hi: f64) -> bool {
        lo <= self.ci_low && self.ci_high <= hi
    }

    /// Whether the CI intersects `[lo, hi]`.
    pub fn ci_meets(&self, lo: f64, hi: f64) -> bool {
        self.ci_low <= hi && lo <= self.ci_high
    }
}

/// Fits `E[X_t²] = σ² t + b` by weighted least squares over observation times
/// `t ≥ 10/λ̂`, with weights from the per-time standard errors. The standard
/// error of the slope uses the full across-time covariance of `X_t²`.
///
/// Pass `f64::INFINITY` for `lambda_hat` to fit every positive time.
pub fn estimate_sigma2_growth(stats: &EnsembleStats, lambda_hat: f64) -> Result<Sigma2Estimate> {
    if !(lambda_hat > 0.0) {
        return Err(Error::Config(format!("lambda_hat must be positive, got {lambda_hat}")));
    }
    let t_max = stats.times.last().copied().unwrap_or(0.0);
    if t_max < MIN_HORIZON / lambda_hat {
        return Err(Error::WindowTooShort(format!(
            "largest observation time {t_max} < {MIN_HORIZON}/λ̂ = {}",
            MIN_HORIZON / lambda_hat
        )));
    }
    let start = WINDOW_START / lambda_hat;
    let idx: Vec<usize> = (0..stats.times.len()).filter(|&i| stats.times[i] >= start && stats.times[i] > 0.0).collect();
    if idx.len() < 2 {
        return Err(Error::WindowTooShort(format!("{} observation times at t ≥ {start}", idx.len())));
    }
    let n = stats.x2.count() as f64;
    let y: Vec<f64> = idx.iter().map(|&i| stats.x2.mean()[i]).collect();
    let t: Vec<f64> = idx.iter().map(|&i| stats.times[i]).collect();
    let sigma: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| idx.iter().map(|&j| stats.x2.covariance(i, j) / n).collect())
        .collect();
    let weighted = sigma.iter().enumerate().all(|(k, row)| row[k] > 0.0);
    let w: Vec<f64> = (0..idx.len()).map(|k| if weighted { 1.0 / sigma[k][k] } else { 1.0 }).collect();

    let (s0, s1, s2) = w.iter().zip(&t).fold((0.0, 0.0, 0.0), |(a, b, c), (wi, ti)| (a + wi, b + wi * ti, c + wi * ti * ti));
    let det = s0 * s2 - s1 * s1;
    // Rows of (AᵀWA)⁻¹AᵀW: intercept and slope as linear functionals of y.
    let l_int: Vec<f64> = (0..t.len()).map(|k| w[k] * (s2 - s1 * t[k]) / det).collect();
    let l_slope: Vec<f64> = (0..t.len()).map(|k| w[k] * (s0 * t[k] - s1) / det).collect();
    let dot = |l: &[f64]| l.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
    let slope = dot(&l_slope);
    let intercept = dot(&l_int);
    let var: f64 = (0..t.len())
        .flat_map(|i| (0..t.len()).map(move |j| (i, j)))
        .map(|(i, j)| l_slope[i] * sigma[i][j] * l_slope[j])
        .sum();
    let chi2: f64 = (0..t.len()).map(|k| w[k] * (y[k] - intercept - slope * t[k]).powi(2)).sum();

    let mut diag = Map::new();
    diag.insert("intercept".into(), intercept.into());
    diag.insert("window_start".into(), start.into());
    diag.insert("n_points".into(), idx.len().into());
    diag.insert("weighted".into(), weighted.into());
    diag.insert("residual_chi2".into(), chi2.into());
    diag.insert("lambda_hat".into(), lambda_hat.into());
    diag.insert("n_paths".into(), stats.n_paths.into());
    Ok(Sigma2Estimate::new(Sigma2Method::Growth, slope, var.max(0.0).sqrt(), diag))
}

fn trapezoid(h: f64, ys: &[f64]) -> f64 {
    if ys.len() < 2 {
        return 0.0;
    }
    h * (ys.iter().sum::<f64>() - 0.5 * (ys[0] + ys[ys.len() - 1]))
}

/// Index of the last lag with `|ρ̂| > 3·stderr`, if any.
pub fn truncation_index(autocov: &AutocovEstimate) -> Option<usize> {
    autocov
        .values
        .iter()
        .zip(&autocov.stderr)
        .rposition(|(v, se)| v.abs() > SIGNIFICANCE_Z * se)
}

/// `σ² = 1 + 2∫₀^∞ ρ(u) du`: trapezoid rule up to the last significant lag,
/// then the fitted exponential envelope beyond it.
///
/// The integral's standard error comes from the spread of per-batch
/// integrals; the tail's from the fit covariance (delta method). If no lag is
/// significant, `ρ` is taken as 0 and the result is 1 with no fit needed.
pub fn estimate_sigma2_greenkubo(autocov: &AutocovEstimate, fit: Option<&MixingFit>) -> Result<Sigma2Estimate> {
    let mut diag = Map::new();
    let Some(last) = truncation_index(autocov) else {
        diag.insert("truncation_lag".into(), Value::Null);
        diag.insert("integral".into(), 0.0.into());
        diag.insert("tail".into(), 0.0.into());
        diag.insert("value_without_factor_two".into(), 1.0.into());
        return Ok(Sigma2Estimate::new(Sigma2Method::GreenKubo, 1.0, 0.0, diag));
    };
    let fit = fit.ok_or(Error::NoMixingFit)?;
    let h = autocov.lag_step();
    let run = last + 1;
    let cut = autocov.lags[last];
    let integral = trapezoid(h, &autocov.values[..run]);

    let b = autocov.batch_values.len();
    let var_integral = if b > 1 {
        let ints: Vec<f64> = autocov.batch_values.iter().map(|c| trapezoid(h, &c[..run])).collect();
        let m = ints.iter().sum::<f64>() / b as f64;
        ints.iter().map(|v| (v - m).powi(2)).sum::<f64>() / ((b - 1) * b) as f64
    } else {
        0.0
    };

    let lambda = fit.lambda_hat;
    let tail = autocov.values[last].signum() * fit.envelope(cut) / lambda;
    // ∂T/∂lnA = T, ∂T/∂λ = −T (u_L + 1/λ)
    let grad = [tail, -tail * (cut + 1.0 / lambda)];
    let c = fit.param_cov;
    let var_tail = grad[0] * grad[0] * c[0][0] + 2.0 * grad[0] * grad[1] * c[0][1] + grad[1] * grad[1] * c[1][1];

    let total = integral + tail;
    let se = 2.0 * (var_integral + var_tail.max(0.0)).sqrt();
    diag.insert("truncation_lag".into(), cut.into());
    diag.insert("integral".into(), integral.into());
    diag.insert("tail".into(), tail.into());
    diag.insert("integral_stderr".into(), var_integral.sqrt().into());
    diag.insert("tail_stderr".into(), var_tail.max(0.0).sqrt().into());
    diag.insert("lambda_hat".into(), lambda.into());
    diag.insert("value_without_factor_two".into(), (1.0 + total).into());
    Ok(Sigma2Estimate::new(Sigma2Method::GreenKubo, 1.0 + 2.0 * total, se, diag))
}
