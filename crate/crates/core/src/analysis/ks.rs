use std::f64::consts::PI;

use statrs::distribution::{ContinuousCDF, Normal};

use super::report::TestReport;
use crate::{Error, Result};

/// `D = sup |F̂_n − F|` for a sample and a continuous reference cdf.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Survival function of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-theta form converges fast for small λ.
        let z = -PI * PI / (8.0 * lambda * lambda);
        let cdf = (2.0 * PI).sqrt() / lambda * (1..=6).map(|k| ((2 * k - 1) as f64).powi(2)).map(|m| (m * z).exp()).sum::<f64>();
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// Asymptotic p-value of `D` for sample size `n`, with Stephens' small-sample
/// adjustment `λ = (√n + 0.12 + 0.11/√n)·D`.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

/// One-sample Kolmogorov–Smirnov test at `level`.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64, level: f64) -> Result<TestReport> {
    let d = ks_statistic(sample, cdf)?;
    let p = ks_p_value(d, sample.len());
    Ok(TestReport::p_value_test("ks", d, p, level).with_input("n", sample.len()))
}

/// Cdf of `N(0, variance)`.
pub fn gaussian_cdf(variance: f64) -> impl Fn(f64) -> f64 {
    let normal = Normal::new(0.0, variance.sqrt()).expect("positive variance");
    move |x| normal.cdf(x)
}

/// Quantile of the standard normal distribution.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub fn uniform_cdf(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn single_point() {
        assert_eq!(ks_statistic(&[0.5], uniform_cdf).unwrap(), 0.5);
    }

    #[test]
    fn empty_sample() {
        assert_eq!(ks_test(&[], uniform_cdf, 0.01).unwrap_err(), Error::EmptySample);
    }

    #[test]
    fn series_forms_agree_at_switch() {
        let lo = {
            let z = -PI * PI / (8.0 * 1.18f64.powi(2));
            1.0 - (2.0 * PI).sqrt() / 1.18 * (1..=6).map(|k| (((2 * k - 1) as f64).powi(2) * z).exp()).sum::<f64>()
        };
        assert!((lo - kolmogorov_sf(1.18)).abs() < 1e-12);
        // Tabulated: P(K > 1.36) ≈ 0.049, P(K > 1.63) ≈ 0.0098.
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 5e-4);
        assert!((kolmogorov_sf(1.628) - 0.0100).abs() < 2e-4);
        assert!((kolmogorov_sf(0.5) - 0.9639).abs() < 5e-4);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn quantile_inverts_cdf() {
        assert!(normal_quantile(0.5).abs() < 1e-12);
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-9);
        let p = gaussian_cdf(1.0)(normal_quantile(0.1));
        assert!((p - 0.1).abs() < 1e-9, "{p}");
    }

    #[test]
    fn gaussian_vs_uniform_rejects() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        assert!(!ks_test(&xs, uniform_cdf, 0.01).unwrap().passed());
    }

    #[test]
    fn level_under_null() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cdf = gaussian_cdf(1.0);
        let runs = 100;
        let passes = (0..runs)
            .filter(|_| {
                let xs: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
                ks_test(&xs, &cdf, 0.01).unwrap().passed()
            })
            .count();
        assert!(passes >= 98, "{passes}/{runs}");
    }

    #[test]
    fn null_p_values_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ps: Vec<f64> = (0..200)
            .map(|_| {
                let xs: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
                ks_test(&xs, uniform_cdf, 0.01).unwrap().p_value.unwrap()
            })
            .collect();
        assert!(ks_test(&ps, uniform_cdf, 0.01).unwrap().passed());
    }
}
