//! Single-step updates for the three representations of the process.
//!
//! All trigonometric terms are evaluated at the displacement reduced onto the
//! torus, so precision does not degrade as `|x|` grows.

use serde::{Deserialize, Serialize};

use crate::model::{eval_f_prime, eval_g_prime, g_observable, reduced_drift, wrap_angle};
use crate::model::{EnvState, FullState, ModelSpec};
use crate::Error;

/// A step produced a non-finite value; the caller attaches the time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonFiniteStep;

impl NonFiniteStep {
    pub fn at(self, time: f64) -> Error {
        Error::NonFiniteState { time }
    }
}

/// Time-stepping scheme for the environment representation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvScheme {
    /// Plain Euler–Maruyama (strong order ½ for this multiplicative noise).
    #[default]
    EulerMaruyama,
    /// Euler–Maruyama plus the Milstein correction `−½ j² z (ΔB² − Δt)`,
    /// strong order 1 for the scalar driving noise.
    Milstein,
}

/// Euler–Maruyama step of the reduced system
/// `dX = dB + Σ j a_j (sin(jX) U_j − cos(jX) V_j) dt`, `dU_j = cos(jX) dt`,
/// `dV_j = sin(jX) dt`.
pub fn step_reduced(state: &mut FullState, a: &[f64], db: f64, dt: f64) -> Result<(), NonFiniteStep> {
    let theta = wrap_angle(state.x);
    let drift = reduced_drift(state, a);
    for j in 0..a.len() {
        let (sin, cos) = (((j + 1) as f64) * theta).sin_cos();
        state.u[j] += cos * dt;
        state.v[j] += sin * dt;
    }
    state.x += db + drift * dt;
    if state.is_finite() {
        Ok(())
    } else {
        Err(NonFiniteStep)
    }
}

/// One step of the environment process. Reads no displacement: the
/// environment evolves autonomously.
pub fn step_env(
    state: &mut EnvState,
    a: &[f64],
    db: f64,
    dt: f64,
    scheme: EnvScheme,
) -> Result<(), NonFiniteStep> {
    let g = g_observable(state, a);
    let dx = db + g * dt;
    let milstein = match scheme {
        EnvScheme::EulerMaruyama => 0.0,
        EnvScheme::Milstein => 0.5 * (db * db - dt),
    };
    for j in 0..a.len() {
        let k = (j + 1) as f64;
        let (c, s) = (state.c[j], state.s[j]);
        let k2 = k * k;
        state.c[j] = c - k * s * dx + (1.0 - 0.5 * k2 * c) * dt - k2 * c * milstein;
        state.s[j] = s + k * c * dx - 0.5 * k2 * s * dt - k2 * s * milstein;
    }
    if state.is_finite() {
        Ok(())
    } else {
        Err(NonFiniteStep)
    }
}

/// Euler step of the original equation, integrating the occupation term by a
/// left Riemann sum over the stored grid path. Cost is linear in
/// `path.len()`.
pub fn step_history(x: f64, path: &[f64], spec: &ModelSpec, db: f64, dt: f64) -> Result<f64, NonFiniteStep> {
    let memory: f64 = path.iter().map(|&xi| eval_f_prime(x - xi, &spec.a)).sum::<f64>() * dt;
    let next = x + db - (eval_g_prime(x, spec) + memory) * dt;
    if next.is_finite() {
        Ok(next)
    } else {
        Err(NonFiniteStep)
    }
}
