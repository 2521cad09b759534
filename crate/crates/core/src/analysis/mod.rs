//! Statistical verdicts on ensemble output.

mod clt;
mod gof;
mod ks;
mod mixing;
mod report;
mod sigma2;

pub use clt::{clt_fdd_test, clt_fdd_test_samples, lln_check, lln_check_ensemble, MIN_CLT_PATHS, MIN_LLN_HORIZON};
pub use gof::{generator_mean, generator_stationarity, invariant_gof, subsample, MIN_GOF_SAMPLES};
pub use ks::{gaussian_cdf, kolmogorov_sf, ks_p_value, ks_statistic, ks_test, normal_quantile, uniform_cdf};
pub use mixing::{fit_mixing_rate, significant_run, MixingFit, MIN_DECAY_LAGS, SIGNIFICANCE_Z};
pub use report::{Comparison, ReportSet, TestReport, Verdict};
pub use sigma2::{estimate_sigma2_greenkubo, estimate_sigma2_growth, truncation_index, z95, Sigma2Estimate, Sigma2Method};
