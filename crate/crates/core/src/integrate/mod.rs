//! Time stepping of the history, reduced and environment representations,
//! all driven by one Brownian increment sequence so paths can be compared
//! pathwise.

mod coupling;
pub mod rng;
mod simulate;
mod steppers;

pub use coupling::{coupled_consistency_run, DiscrepancyReport, DiscrepancyRow};
pub use rng::{brownian_increments, path_rng, PathRng};
pub use simulate::{
    fmt17, simulate, simulate_process, simulate_with_increments, Process, RecordedStates,
    Representation, SimConfig, Trajectory,
};
pub(crate) use simulate::steps_for;
pub use steppers::{step_env, step_history, step_reduced, EnvScheme, NonFiniteStep};
