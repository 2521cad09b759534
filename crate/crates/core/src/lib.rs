//! Simulation and statistical verification of the one-dimensional
//! self-repelling diffusion
//!
//! ```text
//! dX_t = dB_t − (G′(X_t) + ∫₀ᵗ F′(X_t − X_s) ds) dt,   F(x) = Σ a_k cos(kx)
//! ```
//!
//! The process is available in three equivalent representations:
//!
//! - the naive history integrator, which evaluates the occupation integral
//!   directly (cost per step grows linearly with elapsed time);
//! - the reduced Markov lift `(X, U, V)` with `dU_j = cos(jX) dt`,
//!   `dV_j = sin(jX) dt`;
//! - the environment seen from the particle `(C, S)`, an autonomous diffusion
//!   on `R^{2n}` with an explicit product-Gaussian invariant law.
//!
//! [`montecarlo`] runs reproducible parallel ensembles on top of
//! [`integrate`], and [`analysis`] turns ensemble output into verdicts
//! (invariant-law fit, mixing rate, effective variance, CLT, LLN).

pub mod analysis;
pub mod error;
pub mod integrate;
pub mod model;
pub mod montecarlo;

pub use error::{Error, Result};
pub use model::{EnvState, FullState, ModelSpec};
