use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ensemble::{par_map_paths, start_path, EnsembleConfig, InitMode, PathStart};
use crate::integrate::{steps_for, Representation};
use crate::model::{g_observable, h_observable, pi_sample, EnvState, PolyTestFn};
use crate::{Error, Result};

/// Samples drawn from π to center custom observables.
pub const CENTERING_DRAWS: usize = 200_000;

/// Upper bound on the number of batches carried in an [`AutocovEstimate`].
pub const MAX_BATCHES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    /// `g = Σ k a_k s_k`, the displacement drift (π-mean 0).
    G,
    /// `h = Σ a_k c_k` (π-mean 0).
    H,
    Custom(PolyTestFn),
}

impl Observable {
    pub fn eval(&self, env: &EnvState, a: &[f64]) -> f64 {
        match self {
            Observable::G => g_observable(env, a),
            Observable::H => h_observable(env, a),
            Observable::Custom(f) => f.eval_env(env),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Observable::G => "g",
            Observable::H => "h",
            Observable::Custom(_) => "custom",
        }
    }
}

/// Stationary autocovariance `ρ(u) = E_π[f(Z_u) f(Z_0)]` on a lag grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocovEstimate {
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_paths: usize,
    /// Batch means of `ρ` (paths grouped in index order), for propagating
    /// uncertainty through functionals of the whole curve.
    pub batch_values: Vec<Vec<f64>>,
}

impl AutocovEstimate {
    /// Builds an estimate from per-path lag curves; the standard error is the
    /// across-path spread.
    pub fn from_path_curves(lags: Vec<f64>, curves: &[Vec<f64>]) -> Self {
        let p = curves.len();
        let l = lags.len();
        let mut values = vec![0.0; l];
        let mut stderr = vec![0.0; l];
        for i in 0..l {
            let mean = curves.iter().map(|c| c[i]).sum::<f64>() / p as f64;
            let var = if p > 1 {
                curves.iter().map(|c| (c[i] - mean).powi(2)).sum::<f64>() / (p - 1) as f64
            } else {
                0.0
            };
            values[i] = mean;
            stderr[i] = (var / p as f64).sqrt();
        }
        let batches = p.min(MAX_BATCHES).max(1);
        let batch_values = (0..batches)
            .map(|b| {
                let (lo, hi) = (b * p / batches, (b + 1) * p / batches);
                let chunk = &curves[lo..hi];
                (0..l)
                    .map(|i| chunk.iter().map(|c| c[i]).sum::<f64>() / chunk.len() as f64)
                    .collect()
            })
            .collect();
        AutocovEstimate {
            lags,
            values,
            stderr,
            n_paths: p,
            batch_values,
        }
    }

    pub fn lag_step(&self) -> f64 {
        if self.lags.len() > 1 {
            self.lags[1] - self.lags[0]
        } else {
            0.0
        }
    }
}

/// Estimates the stationary autocovariance of `observable` from paths
/// started in π. Each path records the observable every
/// `sim.record_stride` steps over `[0, sim.t_end]` and contributes the
/// time-averaged lag products; paths are independent, which gives the
/// standard errors.
pub fn stationary_autocov(config: &EnsembleConfig, observable: &Observable, max_lag: f64) -> Result<AutocovEstimate> {
    if config.init != InitMode::Stationary {
        return Err(Error::NotStationaryInit);
    }
    if config.sim.representation == Representation::History {
        return Err(Error::Config("autocovariance needs the reduced or environment representation".into()));
    }
    config.spec.clone().validate()?;
    config.sim.validate()?;
    if config.n_paths < 2 {
        return Err(Error::Config("autocovariance needs at least 2 paths".into()));
    }
    if !(max_lag >= 0.0) || max_lag > config.sim.t_end / 5.0 * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "max_lag {max_lag} must lie in [0, t_end/5 = {}]",
            config.sim.t_end / 5.0
        )));
    }
    let dt = config.sim.dt;
    let stride = config.sim.record_stride;
    let spacing = dt * stride as f64;
    let n_lags = steps_for(max_lag, spacing) + 1;
    let steps = config.sim.steps();
    let n_records = steps / stride + 1;
    let a = &config.spec.a;

    let center = match observable {
        Observable::Custom(f) => {
            // independent stream, away from every path stream
            let mut rng = ChaCha8Rng::seed_from_u64(config.sim.seed ^ 0x9e37_79b9_7f4a_7c15);
            rng.set_stream(u64::MAX);
            (0..CENTERING_DRAWS).map(|_| f.eval_env(&pi_sample(&mut rng, a))).sum::<f64>() / CENTERING_DRAWS as f64
        }
        _ => 0.0,
    };

    let sqrt_dt = dt.sqrt();
    let curves = par_map_paths(config.n_paths, config.workers, |index| {
        let PathStart {
            mut process,
            spec,
            mut rng,
        } = start_path(config, index)?;
        let mut ys = Vec::with_capacity(n_records);
        let observe = |p: &crate::integrate::Process| observable.eval(&p.env().expect("env-capable representation"), a) - center;
        ys.push(observe(&process));
        for k in 0..steps {
            let db = crate::integrate::rng::brownian_increment(&mut rng, sqrt_dt);
            process.step(&spec, db, dt).map_err(|e| e.at((k + 1) as f64 * dt))?;
            if (k + 1) % stride == 0 {
                ys.push(observe(&process));
            }
        }
        Ok(lag_products(&ys, n_lags))
    })?;
    let lags = (0..n_lags).map(|l| l as f64 * spacing).collect();
    Ok(AutocovEstimate::from_path_curves(lags, &curves))
}

/// Time-averaged lag products `(1/(N−ℓ)) Σ y_i y_{i+ℓ}` for `ℓ < n_lags`.
pub fn lag_products(ys: &[f64], n_lags: usize) -> Vec<f64> {
    (0..n_lags)
        .map(|l| {
            let m = ys.len().saturating_sub(l);
            if m == 0 {
                return 0.0;
            }
            ys[..m].iter().zip(&ys[l..]).map(|(p, q)| p * q).sum::<f64>() / m as f64
        })
        .collect()
}
