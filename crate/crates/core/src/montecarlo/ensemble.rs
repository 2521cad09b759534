use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::moments::StreamingMoments;
use crate::integrate::{path_rng, steps_for, PathRng, Process, Representation, SimConfig};
use crate::model::{env_to_full, pi_sample, ModelSpec};
use crate::{Error, Result};

/// Burn-in (time units) used in fixed mode when none is configured.
pub const DEFAULT_BURN_IN: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// Start every path from the spec's `(u0, v0)`.
    Fixed,
    /// Draw each path's initial environment independently from π.
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    pub spec: ModelSpec,
    pub sim: SimConfig,
    pub observation_times: Vec<f64>,
    pub init: InitMode,
    /// Fixed mode only: time simulated before `X` is re-zeroed and
    /// observation starts. `None` selects [`DEFAULT_BURN_IN`].
    #[serde(default)]
    pub burn_in: Option<f64>,
    /// Thread count; affects wall-clock time only.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Retain the per-path observation matrix (needed by the CLT test).
    #[serde(default)]
    pub keep_samples: bool,
}

impl EnsembleConfig {
    pub fn new(spec: ModelSpec, sim: SimConfig, n_paths: usize, observation_times: Vec<f64>, init: InitMode) -> Self {
        EnsembleConfig {
            n_paths,
            spec,
            sim,
            observation_times,
            init,
            burn_in: None,
            workers: None,
            keep_samples: false,
        }
    }

    pub fn effective_burn_in(&self) -> f64 {
        match self.init {
            InitMode::Stationary => 0.0,
            InitMode::Fixed => self.burn_in.unwrap_or(DEFAULT_BURN_IN),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.clone().validate()?;
        self.sim.validate()?;
        if self.n_paths < 2 {
            return Err(Error::Config(format!("ensemble.n_paths must be at least 2, got {}", self.n_paths)));
        }
        if self.observation_times.is_empty() {
            return Err(Error::Config("ensemble.observation_times is empty".into()));
        }
        if self.observation_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("ensemble.observation_times must be increasing".into()));
        }
        for &t in &self.observation_times {
            if !(t >= 0.0) || t > self.sim.t_end * (1.0 + 1e-12) {
                return Err(Error::Config(format!("observation time {t} lies outside [0, t_end]")));
            }
            let k = steps_for(t, self.sim.dt);
            if (k as f64 * self.sim.dt - t).abs() > 1e-9 * t.max(1.0) {
                return Err(Error::Config(format!("observation time {t} is not on the dt grid")));
            }
        }
        if let Some(b) = self.burn_in {
            if !(b >= 0.0) || !b.is_finite() {
                return Err(Error::Config(format!("ensemble.burn_in must be non-negative, got {b}")));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn observation_steps(&self) -> Vec<usize> {
        self.observation_times.iter().map(|&t| steps_for(t, self.sim.dt)).collect()
    }
}

/// Per-path state at the start of observation.
pub(crate) struct PathStart {
    pub process: Process,
    pub spec: ModelSpec,
    pub rng: PathRng,
}

/// Initializes path `index`: draws from π (stationary) or starts from the
/// spec's environment and runs the burn-in (fixed). Only the path's own
/// stream is consumed.
pub(crate) fn start_path(config: &EnsembleConfig, index: usize) -> Result<PathStart> {
    let mut rng = path_rng(config.sim.seed, index as u64);
    let rep = config.sim.representation;
    let scheme = config.sim.env_scheme;
    match config.init {
        InitMode::Stationary => {
            let env = pi_sample(&mut rng, &config.spec.a);
            let full = env_to_full(&env, 0.0);
            let spec = ModelSpec {
                a: config.spec.a.clone(),
                u0: full.u.clone(),
                v0: full.v.clone(),
            };
            let process = match rep {
                Representation::Environment => Process::from_env(env, scheme),
                _ => Process::start(rep, &full, scheme),
            };
            Ok(PathStart { process, spec, rng })
        }
        InitMode::Fixed => {
            let spec = config.spec.clone();
            let mut process = Process::start(rep, &spec.initial_state(), scheme);
            let burn = steps_for(config.effective_burn_in(), config.sim.dt);
            let sqrt_dt = config.sim.dt.sqrt();
            for k in 0..burn {
                let db = crate::integrate::rng::brownian_increment(&mut rng, sqrt_dt);
                process
                    .step(&spec, db, config.sim.dt)
                    .map_err(|e| e.at(-((burn - k - 1) as f64) * config.sim.dt))?;
            }
            Ok(PathStart { process, spec, rng })
        }
    }
}

/// Maps `f` over path indices on a pool of `workers` threads. Results come
/// back in index order; the reported error is the one with the lowest index.
pub(crate) fn par_map_paths<T, F>(n_paths: usize, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let run = || -> Vec<Result<T>> { (0..n_paths).into_par_iter().map(&f).collect() };
    let results = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::Path {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Ensemble statistics of the displacement at the observation times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub n_paths: usize,
    /// Moments of the vector `(X_{t_1}, …, X_{t_m})` across paths.
    pub x: StreamingMoments,
    /// Moments of `(X_{t_1}², …, X_{t_m}²)` across paths.
    pub x2: StreamingMoments,
    /// `samples[path][time]`, when retained.
    pub samples: Option<Vec<Vec<f64>>>,
}

impl EnsembleStats {
    /// Builds statistics from a per-path observation matrix, merging in
    /// path order.
    pub fn from_samples(times: Vec<f64>, samples: Vec<Vec<f64>>, keep: bool) -> Result<Self> {
        let m = times.len();
        let mut x = StreamingMoments::new(m);
        let mut x2 = StreamingMoments::new(m);
        for row in &samples {
            x.update(row)?;
            let sq: Vec<f64> = row.iter().map(|v| v * v).collect();
            x2.update(&sq)?;
        }
        Ok(EnsembleStats {
            times,
            n_paths: samples.len(),
            x,
            x2,
            samples: keep.then_some(samples),
        })
    }

    pub fn mean_x(&self) -> Vec<f64> {
        self.x.mean().to_vec()
    }

    pub fn mean_x_stderr(&self) -> Vec<f64> {
        (0..self.times.len()).map(|i| self.x.stderr(i)).collect()
    }

    pub fn var_x(&self) -> Vec<f64> {
        self.x.variances()
    }

    /// `E[X_t²]` per observation time.
    pub fn second_moment(&self) -> Vec<f64> {
        self.x2.mean().to_vec()
    }

    pub fn second_moment_stderr(&self) -> Vec<f64> {
        (0..self.times.len()).map(|i| self.x2.stderr(i)).collect()
    }

    /// Covariance of `X` across observation-time pairs.
    pub fn cov_x(&self) -> Vec<Vec<f64>> {
        self.x.covariance_matrix()
    }
}

/// Runs `n_paths` independent paths and collects displacement statistics at
/// the observation times. Each path uses stream `(seed, path index)`;
/// statistics are identical for any worker count.
pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleStats> {
    config.validate()?;
    let obs = config.observation_steps();
    let last = *obs.last().unwrap();
    let dt = config.sim.dt;
    let sqrt_dt = dt.sqrt();
    let samples = par_map_paths(config.n_paths, config.workers, |index| {
        let PathStart {
            mut process,
            spec,
            mut rng,
        } = start_path(config, index)?;
        let x_start = process.x();
        let mut row = Vec::with_capacity(obs.len());
        let mut next = obs.iter().peekable();
        for k in 0..=last {
            while next.peek() == Some(&&k) {
                row.push(process.x() - x_start);
                next.next();
            }
            if k == last {
                break;
            }
            let db = crate::integrate::rng::brownian_increment(&mut rng, sqrt_dt);
            process.step(&spec, db, dt).map_err(|e| e.at((k + 1) as f64 * dt))?;
        }
        Ok(row)
    })?;
    EnsembleStats::from_samples(config.observation_times.clone(), samples, config.keep_samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(init: InitMode, n_paths: usize, times: Vec<f64>) -> EnsembleConfig {
        let t_end = *times.last().unwrap();
        EnsembleConfig::new(
            ModelSpec::canonical(),
            SimConfig::new(0.01, t_end.max(0.01), 21, Representation::Environment),
            n_paths,
            times,
            init,
        )
    }

    #[test]
    fn zero_horizon_has_zero_second_moment() {
        let stats = run_ensemble(&cfg(InitMode::Stationary, 10, vec![0.0])).unwrap();
        assert_eq!(stats.second_moment(), vec![0.0]);
        assert_eq!(stats.mean_x(), vec![0.0]);
    }

    #[test]
    fn zero_environment_mean_is_zero_by_symmetry() {
        let mut c = cfg(InitMode::Fixed, 2000, vec![1.0, 5.0, 10.0]);
        c.burn_in = Some(0.0);
        let stats = run_ensemble(&c).unwrap();
        for (m, se) in stats.mean_x().iter().zip(stats.mean_x_stderr()) {
            assert!(m.abs() < 3.0 * se, "{m} ± {se}");
        }
    }

    #[test]
    fn stationary_short_time_growth_is_at_least_diffusive() {
        let stats = run_ensemble(&cfg(InitMode::Stationary, 4000, vec![0.1, 0.5])).unwrap();
        for ((t, m2), se) in stats.times.iter().zip(stats.second_moment()).zip(stats.second_moment_stderr()) {
            assert!(m2 >= t - 3.0 * se, "E[X²]={m2} at t={t}");
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut a = cfg(InitMode::Stationary, 64, vec![1.0, 2.0]);
        a.workers = Some(1);
        let mut b = a.clone();
        b.workers = Some(4);
        assert_eq!(run_ensemble(&a).unwrap(), run_ensemble(&b).unwrap());
    }

    #[test]
    fn representations_agree_in_distribution_at_short_time() {
        // same stationary draws and increments; reduced and environment
        // differ only by discretization error
        let mut env = cfg(InitMode::Stationary, 200, vec![1.0]);
        env.keep_samples = true;
        let mut red = env.clone();
        red.sim.representation = Representation::Reduced;
        let (e, r) = (run_ensemble(&env).unwrap(), run_ensemble(&red).unwrap());
        let worst = e
            .samples
            .unwrap()
            .iter()
            .zip(r.samples.unwrap())
            .map(|(p, q)| (p[0] - q[0]).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.2, "{worst}");
    }

    #[test]
    fn invalid_observation_times() {
        assert!(run_ensemble(&cfg(InitMode::Stationary, 10, vec![1.0, 0.5])).is_err());
        let mut c = cfg(InitMode::Stationary, 10, vec![0.5]);
        c.observation_times = vec![0.505];
        assert!(run_ensemble(&c).is_err());
        c.observation_times = vec![0.9];
        assert!(run_ensemble(&c).is_err());
        assert!(run_ensemble(&cfg(InitMode::Stationary, 1, vec![0.5])).is_err());
    }

    #[test]
    fn failure_is_tagged_with_path_index() {
        let mut c = cfg(InitMode::Fixed, 4, vec![100.0]);
        c.spec = ModelSpec::with_coefficients(vec![40.0; 6]).unwrap();
        c.sim.dt = 2.0;
        c.burn_in = Some(0.0);
        let err = run_ensemble(&c).unwrap_err();
        assert!(matches!(err, Error::Path { index: 0, .. }), "{err}");
        assert!(err.is_numerical());
    }
}
