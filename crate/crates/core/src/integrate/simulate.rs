use std::borrow::Cow;
use std::fmt::Write as _;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::rng::brownian_increment;
use super::steppers::{step_env, step_history, step_reduced, EnvScheme, NonFiniteStep};
use crate::model::{full_to_env, g_observable, EnvState, FullState, ModelSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    History,
    Reduced,
    Environment,
}

impl Representation {
    pub const ALL: [Representation; 3] = [
        Representation::History,
        Representation::Reduced,
        Representation::Environment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Representation::History => "history",
            Representation::Reduced => "reduced",
            Representation::Environment => "environment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_representation")]
    pub representation: Representation,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default)]
    pub env_scheme: EnvScheme,
}

fn default_representation() -> Representation {
    Representation::Environment
}

fn default_stride() -> usize {
    1
}

impl SimConfig {
    pub fn new(dt: f64, t_end: f64, seed: u64, representation: Representation) -> Self {
        SimConfig {
            dt,
            t_end,
            seed,
            representation,
            record_stride: 1,
            env_scheme: EnvScheme::EulerMaruyama,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("sim.dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("sim.t_end must be non-negative, got {}", self.t_end)));
        }
        if self.t_end > 0.0 && self.dt > self.t_end {
            return Err(Error::Config(format!(
                "sim.dt = {} exceeds sim.t_end = {}",
                self.dt, self.t_end
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("sim.record_stride must be at least 1".into()));
        }
        if self.t_end / self.dt > 1e12 {
            return Err(Error::Config("sim.t_end / sim.dt is too large".into()));
        }
        Ok(())
    }

    /// `ceil(t_end / dt)`, tolerant of round-off in the ratio.
    pub fn steps(&self) -> usize {
        steps_for(self.t_end, self.dt)
    }
}

pub(crate) fn steps_for(horizon: f64, dt: f64) -> usize {
    if horizon <= 0.0 {
        return 0;
    }
    let ratio = horizon / dt;
    let rounded = ratio.round();
    if (ratio - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        rounded as usize
    } else {
        ratio.ceil() as usize
    }
}

/// A running process in one of the three representations.
#[derive(Debug, Clone)]
pub enum Process {
    History { x: f64, path: Vec<f64> },
    Reduced(FullState),
    Environment { env: EnvState, x: f64, scheme: EnvScheme },
}

impl Process {
    /// Starts a process at `initial`, converting to environment coordinates
    /// where needed. The history form uses only `initial.x`; its static
    /// potential comes from the spec.
    pub fn start(representation: Representation, initial: &FullState, scheme: EnvScheme) -> Self {
        match representation {
            Representation::History => Process::History {
                x: initial.x,
                path: Vec::new(),
            },
            Representation::Reduced => Process::Reduced(initial.clone()),
            Representation::Environment => Process::Environment {
                env: full_to_env(initial),
                x: initial.x,
                scheme,
            },
        }
    }

    /// Environment process started at `env` with zero displacement.
    pub fn from_env(env: EnvState, scheme: EnvScheme) -> Self {
        Process::Environment { env, x: 0.0, scheme }
    }

    pub fn x(&self) -> f64 {
        match self {
            Process::History { x, .. } | Process::Environment { x, .. } => *x,
            Process::Reduced(st) => st.x,
        }
    }

    /// Environment coordinates, if the representation carries them.
    pub fn env(&self) -> Option<Cow<'_, EnvState>> {
        match self {
            Process::History { .. } => None,
            Process::Reduced(st) => Some(Cow::Owned(full_to_env(st))),
            Process::Environment { env, .. } => Some(Cow::Borrowed(env)),
        }
    }

    pub fn step(&mut self, spec: &ModelSpec, db: f64, dt: f64) -> Result<(), NonFiniteStep> {
        match self {
            Process::History { x, path } => {
                let next = step_history(*x, path, spec, db, dt)?;
                path.push(*x);
                *x = next;
                Ok(())
            }
            Process::Reduced(st) => step_reduced(st, &spec.a, db, dt),
            Process::Environment { env, x, scheme } => {
                // X = B + ∫ g dt, left-point
                *x += db + g_observable(env, &spec.a) * dt;
                step_env(env, &spec.a, db, dt, *scheme)?;
                if x.is_finite() {
                    Ok(())
                } else {
                    Err(NonFiniteStep)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecordedStates {
    /// History representation: only the displacement is tracked.
    Displacement,
    Full(Vec<FullState>),
    Env(Vec<EnvState>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub representation: Representation,
    pub dt: f64,
    pub record_stride: usize,
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub states: RecordedStates,
    /// Every increment used, at full resolution; `B_t` is their running sum.
    pub db: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `B_t` on the recording grid.
    pub fn brownian_path(&self) -> Vec<f64> {
        let mut b = 0.0;
        let mut out = vec![0.0];
        for (i, d) in self.db.iter().enumerate() {
            b += d;
            if (i + 1) % self.record_stride == 0 {
                out.push(b);
            }
        }
        out
    }

    /// CSV with header `time,x,c1,s1,…` (environment), `time,x,u1,v1,…`
    /// (reduced) or `time,x` (history); floats carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut header = String::from("time,x");
        match &self.states {
            RecordedStates::Displacement => {}
            RecordedStates::Full(st) => {
                for j in 1..=st.first().map_or(0, |s| s.u.len()) {
                    write!(header, ",u{j},v{j}").unwrap();
                }
            }
            RecordedStates::Env(st) => {
                for j in 1..=st.first().map_or(0, |s| s.c.len()) {
                    write!(header, ",c{j},s{j}").unwrap();
                }
            }
        }
        writeln!(out, "{header}")?;
        let mut line = String::new();
        for i in 0..self.times.len() {
            line.clear();
            write!(line, "{},{}", fmt17(self.times[i]), fmt17(self.x[i])).unwrap();
            let pairs: Box<dyn Iterator<Item = (f64, f64)>> = match &self.states {
                RecordedStates::Displacement => Box::new(std::iter::empty()),
                RecordedStates::Full(st) => Box::new(st[i].u.iter().copied().zip(st[i].v.iter().copied())),
                RecordedStates::Env(st) => Box::new(st[i].c.iter().copied().zip(st[i].s.iter().copied())),
            };
            for (p, q) in pairs {
                write!(line, ",{},{}", fmt17(p), fmt17(q)).unwrap();
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Decimal with 17 significant digits; parses back to the identical `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Runs one path from `X_0 = 0`, `(U, V) = (u0, v0)`, drawing increments
/// from `rng` step by step.
pub fn simulate<R: rand::Rng + ?Sized>(spec: &ModelSpec, config: &SimConfig, rng: &mut R) -> Result<Trajectory> {
    config.validate()?;
    let sqrt_dt = config.dt.sqrt();
    run(spec, config, Process::start(config.representation, &spec.initial_state(), config.env_scheme), |_| {
        brownian_increment(rng, sqrt_dt)
    })
}

/// Like [`simulate`] but driven by a prescribed increment sequence, which
/// must hold at least `config.steps()` values.
pub fn simulate_with_increments(spec: &ModelSpec, config: &SimConfig, db: &[f64]) -> Result<Trajectory> {
    config.validate()?;
    let steps = config.steps();
    if db.len() < steps {
        return Err(Error::ShapeMismatch {
            expected: steps,
            found: db.len(),
        });
    }
    run(spec, config, Process::start(config.representation, &spec.initial_state(), config.env_scheme), |i| db[i])
}

/// Runs an already-started process (e.g. a stationary environment draw).
pub fn simulate_process<R: rand::Rng + ?Sized>(
    spec: &ModelSpec,
    config: &SimConfig,
    process: Process,
    rng: &mut R,
) -> Result<Trajectory> {
    config.validate()?;
    let sqrt_dt = config.dt.sqrt();
    run(spec, config, process, |_| brownian_increment(rng, sqrt_dt))
}

fn run(
    spec: &ModelSpec,
    config: &SimConfig,
    mut process: Process,
    mut next_db: impl FnMut(usize) -> f64,
) -> Result<Trajectory> {
    let steps = config.steps();
    let stride = config.record_stride;
    let n_records = steps / stride + 1;
    let mut times = Vec::with_capacity(n_records);
    let mut xs = Vec::with_capacity(n_records);
    let mut db_all = Vec::with_capacity(steps);
    let mut states = match &process {
        Process::History { .. } => RecordedStates::Displacement,
        Process::Reduced(_) => RecordedStates::Full(Vec::with_capacity(n_records)),
        Process::Environment { .. } => RecordedStates::Env(Vec::with_capacity(n_records)),
    };
    let mut record = |k: usize, p: &Process, states: &mut RecordedStates| {
        times.push(k as f64 * config.dt);
        xs.push(p.x());
        match (states, p) {
            (RecordedStates::Full(v), Process::Reduced(st)) => v.push(st.clone()),
            (RecordedStates::Env(v), Process::Environment { env, .. }) => v.push(env.clone()),
            _ => {}
        }
    };
    record(0, &process, &mut states);
    for k in 0..steps {
        let db = next_db(k);
        db_all.push(db);
        process
            .step(spec, db, config.dt)
            .map_err(|e| e.at((k + 1) as f64 * config.dt))?;
        if (k + 1) % stride == 0 {
            record(k + 1, &process, &mut states);
        }
    }
    Ok(Trajectory {
        representation: config.representation,
        dt: config.dt,
        record_stride: stride,
        times,
        x: xs,
        states,
        db: db_all,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::rng::{brownian_increments, path_rng};
    use crate::model::env_to_full;

    #[test]
    fn zero_horizon_gives_single_record() {
        for rep in Representation::ALL {
            let cfg = SimConfig::new(0.01, 0.0, 1, rep);
            let tr = simulate(&ModelSpec::canonical(), &cfg, &mut path_rng(1, 0)).unwrap();
            assert_eq!(tr.times, vec![0.0]);
            assert_eq!(tr.x, vec![0.0]);
            assert!(tr.db.is_empty());
        }
    }

    #[test]
    fn stride_controls_record_count() {
        let cfg = SimConfig::new(0.01, 1.0, 1, Representation::Environment).with_stride(10);
        assert_eq!(cfg.steps(), 100);
        let tr = simulate(&ModelSpec::canonical(), &cfg, &mut path_rng(1, 0)).unwrap();
        assert_eq!(tr.len(), 11);
        assert_eq!(tr.db.len(), 100);
        assert!((tr.times[10] - 1.0).abs() < 1e-12);
        assert_eq!(tr.brownian_path().len(), 11);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(SimConfig::new(0.0, 1.0, 0, Representation::Reduced).validate().is_err());
        assert!(SimConfig::new(2.0, 1.0, 0, Representation::Reduced).validate().is_err());
        assert!(SimConfig::new(0.1, 1.0, 0, Representation::Reduced)
            .with_stride(0)
            .validate()
            .is_err());
    }

    #[test]
    fn simulate_matches_prescribed_increments() {
        let spec = ModelSpec::new(vec![1.0, 0.5], vec![0.2, 0.0], vec![-0.1, 0.3]).unwrap();
        let cfg = SimConfig::new(0.01, 2.0, 9, Representation::Reduced);
        let a = simulate(&spec, &cfg, &mut path_rng(9, 0)).unwrap();
        let db = brownian_increments(&mut path_rng(9, 0), 0.01, cfg.steps());
        let b = simulate_with_increments(&spec, &cfg, &db).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn environment_displacement_matches_reduced_on_same_path() {
        // x = B + ∫ g dt reconstructed from the environment agrees with the
        // reduced displacement, and the gap shrinks with dt (median of paths).
        let spec = ModelSpec::canonical();
        let mut medians = Vec::new();
        for dt in [0.02, 0.005] {
            let per = steps_for(dt, 0.001);
            let mut sups: Vec<f64> = (0..15)
                .map(|p| {
                    let fine = brownian_increments(&mut path_rng(5, p), 0.001, 10_000);
                    let coarse: Vec<f64> = fine.chunks(per).map(|c| c.iter().sum()).collect();
                    let mk = |rep| SimConfig {
                        env_scheme: EnvScheme::Milstein,
                        ..SimConfig::new(dt, 10.0, 0, rep)
                    };
                    let red = simulate_with_increments(&spec, &mk(Representation::Reduced), &coarse).unwrap();
                    let env = simulate_with_increments(&spec, &mk(Representation::Environment), &coarse).unwrap();
                    red.x.iter().zip(&env.x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
                })
                .collect();
            sups.sort_by(f64::total_cmp);
            medians.push(sups[7]);
        }
        assert!(medians[1] < 0.5 * medians[0], "{medians:?}");
        assert!(medians[1] < 0.1, "{medians:?}");
    }

    #[test]
    fn history_equals_reduced_to_round_off() {
        // With a left Riemann sum the naive integrator reproduces the reduced
        // Euler scheme algebraically.
        let spec = ModelSpec::new(vec![1.0, 0.5], vec![0.4, -0.2], vec![0.1, 0.3]).unwrap();
        let cfg = SimConfig::new(0.01, 3.0, 2, Representation::History);
        let db = brownian_increments(&mut path_rng(2, 0), 0.01, cfg.steps());
        let hist = simulate_with_increments(&spec, &cfg, &db).unwrap();
        let red = simulate_with_increments(
            &spec,
            &SimConfig {
                representation: Representation::Reduced,
                ..cfg.clone()
            },
            &db,
        )
        .unwrap();
        for (p, q) in hist.x.iter().zip(&red.x) {
            assert!((p - q).abs() < 1e-10, "{p} vs {q}");
        }
    }

    #[test]
    fn environment_start_is_the_rotated_initial_state() {
        let spec = ModelSpec::new(vec![1.0], vec![0.7], vec![-0.4]).unwrap();
        let cfg = SimConfig::new(0.1, 0.0, 0, Representation::Environment);
        let tr = simulate(&spec, &cfg, &mut path_rng(0, 0)).unwrap();
        let RecordedStates::Env(st) = &tr.states else { panic!() };
        let back = env_to_full(&st[0], 0.0);
        assert!((back.u[0] - 0.7).abs() < 1e-15 && (back.v[0] + 0.4).abs() < 1e-15);
    }

    #[test]
    fn csv_layout() {
        let cfg = SimConfig::new(0.5, 1.0, 3, Representation::Environment);
        let spec = ModelSpec::with_coefficients(vec![1.0, 2.0]).unwrap();
        let tr = simulate(&spec, &cfg, &mut path_rng(3, 0)).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "time,x,c1,s1,c2,s2");
        assert_eq!(lines.len(), 4);
        let fields: Vec<f64> = lines[2].split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields[1], tr.x[1]);
        let RecordedStates::Env(st) = &tr.states else { panic!() };
        assert_eq!(fields[4], st[1].c[1]);
        assert_eq!(fmt17(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn non_finite_failure_carries_time() {
        // absurd step size blows the environment up
        let spec = ModelSpec::with_coefficients(vec![50.0; 8]).unwrap();
        let cfg = SimConfig::new(5.0, 1e4, 1, Representation::Environment);
        let err = simulate(&spec, &cfg, &mut path_rng(1, 0)).unwrap_err();
        let t = err.failure_time().expect("numerical failure");
        assert!(t > 0.0 && t <= 1e4);
    }
}
