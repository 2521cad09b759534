//! Domain types of the self-repelling diffusion and closed-form objects
//! attached to them: potentials, state transforms, the invariant law, the
//! generator of the environment process and the variance bounds.

mod generator;
mod measure;
mod potential;
mod transform;

pub use generator::{apply_generator, Generator, GeneratorVariant, Monomial, PolyTestFn};
pub use measure::{pi_log_density, pi_sample, pi_variances};
pub use potential::{
    eta_eval, eval_f_prime, eval_g_prime, g_observable, h_norm_squared, h_observable,
    reduced_drift, sigma2_bounds,
};
pub use transform::{env_to_full, full_to_env};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest supported number of Fourier modes.
pub const MAX_MODES: usize = 64;

/// Smallest admissible interaction coefficient.
pub const MIN_COEFFICIENT: f64 = 1e-12;

/// Interaction coefficients `a_1..a_n` of `F(x) = Σ a_k cos(kx)` together
/// with the initial environment `(U(0), V(0)) = (u0, v0)`.
///
/// The static potential implied by `(u0, v0)` is
/// `G(x) = Σ a_k (u0_k cos kx + v0_k sin kx)`, which makes the history,
/// reduced and environment representations describe the same process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelSpec", into = "RawModelSpec")]
pub struct ModelSpec {
    pub a: Vec<f64>,
    pub u0: Vec<f64>,
    pub v0: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModelSpec {
    n: usize,
    a: Vec<f64>,
    #[serde(default)]
    u0: Option<Vec<f64>>,
    #[serde(default)]
    v0: Option<Vec<f64>>,
}

impl TryFrom<RawModelSpec> for ModelSpec {
    type Error = Error;

    fn try_from(raw: RawModelSpec) -> Result<Self> {
        let zeros = vec![0.0; raw.n];
        let spec = ModelSpec {
            a: raw.a,
            u0: raw.u0.unwrap_or_else(|| zeros.clone()),
            v0: raw.v0.unwrap_or(zeros),
        };
        validate_dims(raw.n, &spec)?;
        spec.validate()
    }
}

impl From<ModelSpec> for RawModelSpec {
    fn from(spec: ModelSpec) -> Self {
        RawModelSpec {
            n: spec.n(),
            a: spec.a,
            u0: Some(spec.u0),
            v0: Some(spec.v0),
        }
    }
}

fn validate_dims(n: usize, spec: &ModelSpec) -> Result<()> {
    if n == 0 || n > MAX_MODES {
        return Err(Error::ModeCount(n));
    }
    for (what, len) in [("a", spec.a.len()), ("u0", spec.u0.len()), ("v0", spec.v0.len())] {
        if len != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                found: len,
            });
        }
    }
    Ok(())
}

impl ModelSpec {
    /// Builds and validates a spec.
    pub fn new(a: Vec<f64>, u0: Vec<f64>, v0: Vec<f64>) -> Result<Self> {
        ModelSpec { a, u0, v0 }.validate()
    }

    /// Spec with the given coefficients and a zero initial environment.
    pub fn with_coefficients(a: Vec<f64>) -> Result<Self> {
        let n = a.len();
        Self::new(a, vec![0.0; n], vec![0.0; n])
    }

    /// `n = 1`, `a = (1)`, zero initial environment.
    pub fn canonical() -> Self {
        ModelSpec {
            a: vec![1.0],
            u0: vec![0.0],
            v0: vec![0.0],
        }
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    /// Returns the spec unchanged iff `1 <= n <= 64`, all lengths agree and
    /// every coefficient exceeds [`MIN_COEFFICIENT`].
    pub fn validate(self) -> Result<Self> {
        validate_dims(self.a.len(), &self)?;
        for (index, &value) in self.a.iter().enumerate() {
            if !(value > MIN_COEFFICIENT) || !value.is_finite() {
                return Err(Error::NonPositiveCoefficient { index, value });
            }
        }
        for (what, values) in [("u0", &self.u0), ("v0", &self.v0)] {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("{what} contains a non-finite entry")));
            }
        }
        Ok(self)
    }

    /// Parses a `[model]`-style TOML table with keys `n`, `a`, `u0`, `v0`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn initial_state(&self) -> FullState {
        FullState {
            x: 0.0,
            u: self.u0.clone(),
            v: self.v0.clone(),
        }
    }
}

/// The Markov lift `(X_t, U_t, V_t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub x: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl FullState {
    pub fn zeros(n: usize) -> Self {
        FullState {
            x: 0.0,
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.u.iter().chain(&self.v).all(|v| v.is_finite())
    }

    /// Position on the torus `R / 2πZ`.
    pub fn theta(&self) -> f64 {
        wrap_angle(self.x)
    }
}

/// The environment seen from the particle, `(C_t, S_t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub c: Vec<f64>,
    pub s: Vec<f64>,
}

impl EnvState {
    pub fn zeros(n: usize) -> Self {
        EnvState {
            c: vec![0.0; n],
            s: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().chain(&self.s).all(|v| v.is_finite())
    }

    /// Coordinates in the interleaved order `(c₁, s₁, …, cₙ, sₙ)` used by
    /// [`PolyTestFn`].
    pub fn to_interleaved(&self) -> Vec<f64> {
        self.c.iter().zip(&self.s).flat_map(|(&c, &s)| [c, s]).collect()
    }

    pub fn from_interleaved(z: &[f64]) -> Self {
        let (c, s) = z.chunks_exact(2).map(|p| (p[0], p[1])).unzip();
        EnvState { c, s }
    }
}

/// Reduces an angle into `[0, 2π)`.
#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    let t = x.rem_euclid(std::f64::consts::TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if t >= std::f64::consts::TAU {
        0.0
    } else {
        t
    }
}
