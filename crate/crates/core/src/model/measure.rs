//! The invariant law π ∝ exp(−½ Σ a_k k² (c_k² + s_k²)) of the environment.

use rand::Rng;
use rand_distr::StandardNormal;

use super::EnvState;

/// Per-mode variances `1 / (a_k k²)` of π.
pub fn pi_variances(a: &[f64]) -> Vec<f64> {
    a.iter()
        .enumerate()
        .map(|(j, &ak)| {
            let k = (j + 1) as f64;
            1.0 / (ak * k * k)
        })
        .collect()
}

/// Draws one environment from π. Coordinates are sampled in the order
/// `c₁, s₁, c₂, s₂, …`.
pub fn pi_sample<R: Rng + ?Sized>(rng: &mut R, a: &[f64]) -> EnvState {
    let mut env = EnvState::zeros(a.len());
    for (j, var) in pi_variances(a).into_iter().enumerate() {
        let sd = var.sqrt();
        env.c[j] = sd * rng.sample::<f64, _>(StandardNormal);
        env.s[j] = sd * rng.sample::<f64, _>(StandardNormal);
    }
    env
}

/// `log` of the normalized density of π at `env`.
pub fn pi_log_density(env: &EnvState, a: &[f64]) -> f64 {
    let mut log_density = 0.0;
    for (j, &ak) in a.iter().enumerate() {
        let k2 = ((j + 1) * (j + 1)) as f64;
        let r2 = env.c[j] * env.c[j] + env.s[j] * env.s[j];
        // normalizer of mode k is 2π / (a_k k²)
        log_density -= 0.5 * ak * k2 * r2 + (std::f64::consts::TAU / (ak * k2)).ln();
    }
    log_density
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn variances_match_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = [1.0, 2.0];
        let draws: Vec<EnvState> = (0..100_000).map(|_| pi_sample(&mut rng, &a)).collect();
        let n = draws.len() as f64;
        for (j, expected) in [(0usize, 1.0), (1, 0.125)] {
            let cs: Vec<f64> = draws.iter().map(|e| e.c[j]).collect();
            let ss: Vec<f64> = draws.iter().map(|e| e.s[j]).collect();
            for xs in [cs, ss] {
                let (mean, var) = sample_moments(&xs);
                // Var of the sample variance of a Gaussian is 2σ⁴/(n−1)
                let se = expected * (2.0 / (n - 1.0)).sqrt();
                assert!((var - expected).abs() < 3.0 * se, "mode {j}: {var} vs {expected}");
                assert!(mean.abs() < 3.0 * (expected / n).sqrt());
            }
        }
        // distinct coordinates are uncorrelated
        let c1: Vec<f64> = draws.iter().map(|e| e.c[0]).collect();
        let s2: Vec<f64> = draws.iter().map(|e| e.s[1]).collect();
        let corr = c1.iter().zip(&s2).map(|(x, y)| x * y).sum::<f64>()
            / n
            / (1.0f64 * 0.125).sqrt();
        assert!(corr.abs() < 3.0 / n.sqrt(), "corr = {corr}");
    }

    #[test]
    fn log_density_values() {
        let tau_ln = std::f64::consts::TAU.ln();
        let origin = EnvState::zeros(1);
        assert!((pi_log_density(&origin, &[1.0]) + tau_ln).abs() < 1e-15);
        assert!((pi_log_density(&origin, &[1.0]) + 1.8379).abs() < 1e-4);
        let env = EnvState {
            c: vec![1.0],
            s: vec![0.0],
        };
        assert!((pi_log_density(&env, &[1.0]) + 0.5 + tau_ln).abs() < 1e-15);
    }

    #[test]
    fn density_integrates_to_one() {
        // trapezoid rule on [−8, 8]²; spectrally accurate for the Gaussian
        for a in [1.0, 0.7, 3.0] {
            let m = 801;
            let h = 16.0 / (m - 1) as f64;
            let mut total = 0.0;
            for i in 0..m {
                for k in 0..m {
                    let env = EnvState {
                        c: vec![-8.0 + i as f64 * h],
                        s: vec![-8.0 + k as f64 * h],
                    };
                    let wi = if i == 0 || i == m - 1 { 0.5 } else { 1.0 };
                    let wk = if k == 0 || k == m - 1 { 0.5 } else { 1.0 };
                    total += wi * wk * pi_log_density(&env, &[a]).exp();
                }
            }
            total *= h * h;
            assert!((total - 1.0).abs() < 1e-6, "a = {a}: {total}");
        }
    }
}
