use super::ks::{gaussian_cdf, ks_p_value, ks_statistic};
use super::report::TestReport;
use crate::montecarlo::EnsembleStats;
use crate::{Error, Result};

/// Minimum ensemble size for [`clt_fdd_test`].
pub const MIN_CLT_PATHS: usize = 1000;

/// Minimum horizon for [`lln_check`].
pub const MIN_LLN_HORIZON: f64 = 100.0;

fn retained(stats: &EnsembleStats) -> Result<&[Vec<f64>]> {
    stats
        .samples
        .as_deref()
        .ok_or_else(|| Error::Config("ensemble was run without keep_samples".into()))
}

fn column(stats: &EnsembleStats, time: f64) -> Result<usize> {
    stats
        .times
        .iter()
        .position(|&t| (t - time).abs() <= 1e-9 * time.abs().max(1.0))
        .ok_or_else(|| Error::Config(format!("time {time} is not an observation time of the ensemble")))
}

/// Finite-dimensional CLT check at observation times `T_i = t_i/ε`.
///
/// The scaled vector `Y_i = √(ε/σ²)·X_{T_i}` is compared with Brownian motion
/// at times `t_i = ε T_i`: each marginal by KS against `N(0, t_i)` at level
/// `level/m`, and each covariance `Cov(Y_i, Y_j)` against `min(t_i, t_j)`
/// within 3 standard errors.
pub fn clt_fdd_test(stats: &EnsembleStats, times: &[f64], eps: f64, sigma2: f64, level: f64) -> Result<TestReport> {
    let samples = retained(stats)?;
    let cols = times.iter().map(|&t| column(stats, t)).collect::<Result<Vec<_>>>()?;
    clt_fdd_test_samples(samples, &cols, times, eps, sigma2, level)
}

/// [`clt_fdd_test`] on a raw `samples[path][column]` matrix.
pub fn clt_fdd_test_samples(
    samples: &[Vec<f64>],
    cols: &[usize],
    times: &[f64],
    eps: f64,
    sigma2: f64,
    level: f64,
) -> Result<TestReport> {
    let m = cols.len();
    if m < 2 || times.len() != m {
        return Err(Error::Config(format!("clt test needs at least 2 observation times, got {m}")));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("clt observation times must be increasing".into()));
    }
    if !(eps > 0.0 && sigma2 > 0.0) {
        return Err(Error::Config(format!("eps = {eps} and sigma2 = {sigma2} must be positive")));
    }
    if samples.len() < MIN_CLT_PATHS {
        return Err(Error::InsufficientSamples {
            found: samples.len(),
            required: MIN_CLT_PATHS,
        });
    }
    let scale = (eps / sigma2).sqrt();
    let y: Vec<Vec<f64>> = cols.iter().map(|&c| samples.iter().map(|row| scale * row[c]).collect()).collect();
    let bm_t: Vec<f64> = times.iter().map(|t| eps * t).collect();

    let mut parts = Vec::new();
    for (i, yi) in y.iter().enumerate() {
        let d = ks_statistic(yi, gaussian_cdf(bm_t[i]))?;
        let p = ks_p_value(d, yi.len());
        parts.push(
            TestReport::p_value_test(format!("marginal ks t={}", bm_t[i]), d, p, level / m as f64)
                .with_input("time", times[i])
                .with_input("scaled_time", bm_t[i]),
        );
    }
    let n = samples.len() as f64;
    let means: Vec<f64> = y.iter().map(|v| v.iter().sum::<f64>() / n).collect();
    for i in 0..m {
        for j in i..m {
            let prods: Vec<f64> = y[i].iter().zip(&y[j]).map(|(a, b)| (a - means[i]) * (b - means[j])).collect();
            let cov = prods.iter().sum::<f64>() / (n - 1.0);
            let pm = prods.iter().sum::<f64>() / n;
            let se = (prods.iter().map(|p| (p - pm).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
            let target = bm_t[i].min(bm_t[j]);
            let score = if se > 0.0 { (cov - target).abs() / se } else if cov == target { 0.0 } else { f64::INFINITY };
            parts.push(
                TestReport::margin_test(format!("covariance ({i},{j})"), score, 3.0)
                    .with_input("covariance", cov)
                    .with_input("target", target)
                    .with_input("stderr", se),
            );
        }
    }
    Ok(TestReport::composite("clt_fdd", parts)
        .with_input("n_paths", samples.len())
        .with_input("eps", eps)
        .with_input("sigma2", sigma2)
        .with_input("level", level))
}

/// Law-of-large-numbers check at horizon `T`: passes iff the mean of
/// `|X_T/T|` stays under the diffusive envelope
/// `√(σ²/T)·(1 + 3/√n)`.
pub fn lln_check(x_t: &[f64], horizon: f64, sigma2: f64) -> Result<TestReport> {
    if horizon < MIN_LLN_HORIZON {
        return Err(Error::Config(format!("lln horizon {horizon} is below {MIN_LLN_HORIZON}")));
    }
    if x_t.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = x_t.len() as f64;
    let stat = x_t.iter().map(|x| (x / horizon).abs()).sum::<f64>() / n;
    let scale = (sigma2 / horizon).sqrt();
    Ok(TestReport::margin_test("lln", stat, 3.0 * scale / n.sqrt() + scale)
        .with_input("horizon", horizon)
        .with_input("sigma2", sigma2)
        .with_input("n_paths", x_t.len()))
}

/// [`lln_check`] at the ensemble's last observation time.
pub fn lln_check_ensemble(stats: &EnsembleStats, sigma2: f64) -> Result<TestReport> {
    let samples = retained(stats)?;
    let last = stats.times.len().checked_sub(1).ok_or(Error::EmptySample)?;
    let x: Vec<f64> = samples.iter().map(|row| row[last]).collect();
    lln_check(&x, stats.times[last], sigma2)
}
