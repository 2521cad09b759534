//! Reproducible parallel ensembles and streaming statistics.
//!
//! Paths are embarrassingly parallel. Each path draws from its own stream
//! `(seed, path index)` and per-path results are merged in ascending index
//! order, so every statistic is bit-identical for any worker count.

mod autocov;
mod ensemble;
mod moments;
mod report;

pub use autocov::{lag_products, stationary_autocov, AutocovEstimate, Observable, CENTERING_DRAWS};
pub use ensemble::{run_ensemble, EnsembleConfig, EnsembleStats, InitMode, DEFAULT_BURN_IN};
pub use moments::{merge_moments, update_moments, StreamingMoments};
pub use report::EnsembleReport;
