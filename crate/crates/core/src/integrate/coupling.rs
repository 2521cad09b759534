//! Pathwise cross-validation of the three representations on one Brownian
//! path.

use serde::{Deserialize, Serialize};

use super::rng::{brownian_increments, path_rng};
use super::simulate::{simulate_with_increments, steps_for, RecordedStates, Representation, SimConfig};
use super::steppers::EnvScheme;
use crate::model::{full_to_env, ModelSpec};
use crate::{Error, Result};

/// The reference solution runs this many times finer than the finest `dt`.
pub const REFERENCE_REFINEMENT: usize = 16;

/// Discrepancies at one step size. Each is a sup over the time grid of one
/// coupled path, reduced to the median over replicate paths; `d_hist_max` is
/// the worst replicate. Paths started near a saddle of the environment can
/// separate macroscopically under perturbation, so the mean is not robust.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyRow {
    pub dt: f64,
    /// sup |rotate(reduced) − environment| over records and coordinates,
    /// environment stepped with the Milstein correction.
    pub d_redenv: f64,
    /// Same, with a plain Euler–Maruyama environment step.
    pub d_redenv_euler: f64,
    /// sup |x_history − x_reduced| at equal `dt` (round-off level: the left
    /// Riemann sum reproduces the reduced scheme algebraically).
    pub d_hist_same_dt: f64,
    /// sup |x_history(dt) − x_reference| against the reduced system on the
    /// reference grid.
    pub d_hist: f64,
    pub d_hist_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub horizon: f64,
    pub seed: u64,
    pub replicates: usize,
    pub reference_dt: f64,
    /// Discrepancy of the initial records (identically transformed).
    pub d_redenv_initial: f64,
    pub rows: Vec<DiscrepancyRow>,
}

impl DiscrepancyReport {
    /// Successive ratios `D(dt_{i+1}) / D(dt_i)` of the reduced/environment
    /// discrepancy.
    pub fn redenv_ratios(&self) -> Vec<f64> {
        self.rows.windows(2).map(|w| w[1].d_redenv / w[0].d_redenv).collect()
    }

    pub fn redenv_euler_ratios(&self) -> Vec<f64> {
        self.rows
            .windows(2)
            .map(|w| w[1].d_redenv_euler / w[0].d_redenv_euler)
            .collect()
    }
}

/// Runs the history, reduced and environment integrators at every `dt` of
/// `dt_list` (decreasing, each dividing the horizon) on shared Brownian
/// paths: for each replicate one reference-grid path is drawn from stream
/// `(seed, replicate)` and every coarser increment is a sum of reference
/// increments.
pub fn coupled_consistency_run(
    spec: &ModelSpec,
    horizon: f64,
    dt_list: &[f64],
    seed: u64,
    replicates: usize,
) -> Result<DiscrepancyReport> {
    if dt_list.is_empty() {
        return Err(Error::Config("dt_list is empty".into()));
    }
    if dt_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("dt_list must be strictly decreasing".into()));
    }
    if replicates == 0 {
        return Err(Error::Config("at least one replicate path is required".into()));
    }
    let dt_min = *dt_list.last().unwrap();
    let reference_dt = dt_min / REFERENCE_REFINEMENT as f64;
    let fine_steps = steps_for(horizon, reference_dt);
    if (fine_steps as f64 * reference_dt - horizon).abs() > 1e-9 * horizon.max(1.0) {
        return Err(Error::Config(format!("dt {dt_min} does not divide horizon {horizon}")));
    }
    let mut per_dt = Vec::with_capacity(dt_list.len());
    for &dt in dt_list {
        let per = steps_for(dt, reference_dt);
        if (per as f64 * reference_dt - dt).abs() > 1e-9 * dt || steps_for(horizon, dt) * per != fine_steps {
            return Err(Error::Config(format!("dt {dt} does not divide horizon {horizon}")));
        }
        per_dt.push(per);
    }

    let mut samples = vec![[const { Vec::new() }; 4]; dt_list.len()];
    let mut d_redenv_initial = 0.0f64;
    for r in 0..replicates {
        let fine = brownian_increments(&mut path_rng(seed, r as u64), reference_dt, fine_steps);
        let reference = simulate_with_increments(
            spec,
            &SimConfig::new(reference_dt, horizon, seed, Representation::Reduced),
            &fine,
        )?;
        for (i, (&dt, &per)) in dt_list.iter().zip(&per_dt).enumerate() {
            let d = compare_at(spec, horizon, dt, per, seed, &fine, &reference.x)?;
            d_redenv_initial = d_redenv_initial.max(d.initial);
            for (acc, v) in samples[i].iter_mut().zip([d.redenv, d.redenv_euler, d.hist_same_dt, d.hist]) {
                acc.push(v);
            }
        }
    }
    let rows = dt_list
        .iter()
        .zip(samples)
        .map(|(&dt, [mut redenv, mut euler, mut same, mut hist])| DiscrepancyRow {
            dt,
            d_redenv: median(&mut redenv),
            d_redenv_euler: median(&mut euler),
            d_hist_same_dt: median(&mut same),
            d_hist_max: hist.iter().copied().fold(0.0, f64::max),
            d_hist: median(&mut hist),
        })
        .collect();
    Ok(DiscrepancyReport {
        horizon,
        seed,
        replicates,
        reference_dt,
        d_redenv_initial,
        rows,
    })
}

struct PathDiscrepancy {
    initial: f64,
    redenv: f64,
    redenv_euler: f64,
    hist_same_dt: f64,
    hist: f64,
}

fn compare_at(
    spec: &ModelSpec,
    horizon: f64,
    dt: f64,
    per: usize,
    seed: u64,
    fine: &[f64],
    reference_x: &[f64],
) -> Result<PathDiscrepancy> {
    let coarse: Vec<f64> = fine.chunks(per).map(|c| c.iter().sum()).collect();
    let cfg = |rep, scheme| SimConfig {
        env_scheme: scheme,
        ..SimConfig::new(dt, horizon, seed, rep)
    };
    let red = simulate_with_increments(spec, &cfg(Representation::Reduced, EnvScheme::EulerMaruyama), &coarse)?;
    let hist = simulate_with_increments(spec, &cfg(Representation::History, EnvScheme::EulerMaruyama), &coarse)?;
    let env_m = simulate_with_increments(spec, &cfg(Representation::Environment, EnvScheme::Milstein), &coarse)?;
    let env_e = simulate_with_increments(spec, &cfg(Representation::Environment, EnvScheme::EulerMaruyama), &coarse)?;

    let RecordedStates::Full(red_states) = &red.states else { unreachable!() };
    let rotated: Vec<_> = red_states.iter().map(full_to_env).collect();
    let sup_env = |env: &RecordedStates| {
        let RecordedStates::Env(env_states) = env else { unreachable!() };
        let per_record: Vec<f64> = rotated
            .iter()
            .zip(env_states)
            .map(|(r, e)| {
                r.c.iter()
                    .zip(&e.c)
                    .chain(r.s.iter().zip(&e.s))
                    .map(|(p, q)| (p - q).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        (per_record[0], per_record.into_iter().fold(0.0, f64::max))
    };
    let (initial, redenv) = sup_env(&env_m.states);
    let (_, redenv_euler) = sup_env(&env_e.states);
    let reference_on_grid: Vec<f64> = reference_x.iter().step_by(per).copied().collect();
    Ok(PathDiscrepancy {
        initial,
        redenv,
        redenv_euler,
        hist_same_dt: sup_diff(&hist.x, &red.x),
        hist: sup_diff(&hist.x, &reference_on_grid),
    })
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len();
    if m % 2 == 1 {
        xs[m / 2]
    } else {
        0.5 * (xs[m / 2 - 1] + xs[m / 2])
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}
