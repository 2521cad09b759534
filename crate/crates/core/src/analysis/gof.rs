use rand::Rng;

use super::ks::{gaussian_cdf, ks_statistic, ks_p_value};
use super::report::TestReport;
use crate::model::{pi_sample, pi_variances, Generator, GeneratorVariant, PolyTestFn};
use crate::montecarlo::StreamingMoments;
use crate::{EnvState, Error, Result};

/// Minimum number of (decorrelated) states for [`invariant_gof`].
pub const MIN_GOF_SAMPLES: usize = 1000;

/// Keeps every `k`-th state, with `k` the smallest stride whose time spacing
/// is at least `min_spacing`, given states recorded every `record_dt`.
pub fn subsample<T: Clone>(states: &[T], record_dt: f64, min_spacing: f64) -> Vec<T> {
    let k = ((min_spacing / record_dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    states.iter().step_by(k).cloned().collect()
}

/// Per-coordinate KS of environment samples against the marginals of π,
/// Bonferroni-corrected over the `2n` coordinates.
pub fn invariant_gof(samples: &[EnvState], a: &[f64], level: f64) -> Result<TestReport> {
    if samples.len() < MIN_GOF_SAMPLES {
        return Err(Error::InsufficientSamples {
            found: samples.len(),
            required: MIN_GOF_SAMPLES,
        });
    }
    let n = a.len();
    if let Some(bad) = samples.iter().find(|e| e.n() != n) {
        return Err(Error::DimensionMismatch {
            what: "environment sample",
            expected: n,
            found: bad.n(),
        });
    }
    let variances = pi_variances(a);
    let per_test = level / (2 * n) as f64;
    let mut parts = Vec::with_capacity(2 * n);
    for (k, &var) in variances.iter().enumerate() {
        let cdf = gaussian_cdf(var);
        for (name, coord) in [("c", 0), ("s", 1)] {
            let xs: Vec<f64> = samples.iter().map(|e| if coord == 0 { e.c[k] } else { e.s[k] }).collect();
            let d = ks_statistic(&xs, &cdf)?;
            let p = ks_p_value(d, xs.len());
            parts.push(
                TestReport::p_value_test(format!("ks {name}{}", k + 1), d, p, per_test)
                    .with_input("variance", var)
                    .with_input("n", xs.len()),
            );
        }
    }
    Ok(TestReport::composite("invariant_gof", parts)
        .with_input("n_samples", samples.len())
        .with_input("level", level))
}

/// Monte Carlo mean of `Gf` over `draws` samples from π.
pub fn generator_mean<R: Rng + ?Sized>(
    f: &PolyTestFn,
    a: &[f64],
    variant: GeneratorVariant,
    draws: usize,
    rng: &mut R,
) -> (f64, f64) {
    let gen = Generator::new(f, a);
    let mut acc = StreamingMoments::new(1);
    for _ in 0..draws {
        let env = pi_sample(rng, a);
        acc.update(&[gen.apply(&env, variant)]).expect("dim 1");
    }
    (acc.mean()[0], acc.stderr(0))
}

/// Stationarity check `∫ Gf dπ = 0`: passes iff the Monte Carlo mean is within
/// `z` standard errors of `target`.
pub fn generator_stationarity<R: Rng + ?Sized>(
    f: &PolyTestFn,
    a: &[f64],
    variant: GeneratorVariant,
    draws: usize,
    target: f64,
    z: f64,
    rng: &mut R,
) -> TestReport {
    let (mean, se) = generator_mean(f, a, variant, draws, rng);
    let score = if se > 0.0 {
        (mean - target).abs() / se
    } else if mean == target {
        0.0
    } else {
        f64::INFINITY
    };
    TestReport::margin_test("generator_stationarity", score, z)
        .with_input("mean", mean)
        .with_input("stderr", se)
        .with_input("target", target)
        .with_input("draws", draws)
        .with_input("variant", serde_json::to_value(variant).expect("serializes"))
}
