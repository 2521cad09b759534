use std::path::PathBuf;
use std::str::FromStr;

use repelsim::analysis::{
    clt_fdd_test, estimate_sigma2_greenkubo, estimate_sigma2_growth, fit_mixing_rate, generator_stationarity,
    invariant_gof, normal_quantile, lln_check, subsample, MixingFit, Sigma2Estimate, TestReport, MIN_GOF_SAMPLES,
};
use repelsim::integrate::{path_rng, simulate, RecordedStates, Representation, SimConfig};
use repelsim::model::{pi_sample, pi_variances, sigma2_bounds, GeneratorVariant, PolyTestFn};
use repelsim::montecarlo::{
    run_ensemble, stationary_autocov, AutocovEstimate, EnsembleConfig, EnsembleStats, InitMode, Observable,
    DEFAULT_BURN_IN,
};
use repelsim::EnvState;
use serde::{Deserialize, Serialize};

use crate::config::{stage_seed, InvariantSource, RunConfig};
use crate::output::{ensure_dir, write_csv, write_json, write_manifest};
use crate::{CliError, Invocation, EXIT_FAIL, EXIT_PASS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Invariant,
    Generator,
    Sigma2,
    Clt,
    Lln,
    All,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        <Suite as clap::ValueEnum>::from_str(s, true).map_err(|_| CliError::Config(format!("unknown suite `{s}`")))
    }
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub config_hash: String,
    pub seed: u64,
    pub all_pass: bool,
    pub reports: Vec<TestReport>,
    pub mixing: Option<MixingFit>,
    pub sigma2: Vec<Sigma2Estimate>,
}

impl VerifyReport {
    pub fn find(&self, test: &str) -> Option<&TestReport> {
        self.reports.iter().find(|r| r.test == test)
    }
}

/// Everything a verification run computed.
#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub report: VerifyReport,
    pub autocov: Option<AutocovEstimate>,
    pub stats: Option<EnsembleStats>,
    pub growth: Option<Sigma2Estimate>,
    pub green_kubo: Option<Sigma2Estimate>,
    pub invariant_samples: Option<Vec<EnvState>>,
}

const STAGE_AUTOCOV: u64 = 1;
const STAGE_ENSEMBLE: u64 = 2;
const STAGE_INVARIANT: u64 = 3;
const STAGE_GENERATOR: u64 = 4;

/// Splits a failure into hard errors (configuration, numerical) and
/// statistical ones, which become failed reports.
fn soft<T>(r: repelsim::Result<T>) -> Result<Result<T, String>, CliError> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e) => {
            let hard = CliError::Run(e.clone());
            if hard.exit_code() == EXIT_FAIL {
                Ok(Err(e.to_string()))
            } else {
                Err(hard)
            }
        }
    }
}

struct Pipeline<'a> {
    cfg: &'a RunConfig,
    seed: u64,
    autocov: Option<AutocovEstimate>,
    fit: Option<Result<MixingFit, String>>,
    stats: Option<EnsembleStats>,
    growth: Option<Result<Sigma2Estimate, String>>,
}

impl<'a> Pipeline<'a> {
    fn autocov(&mut self) -> Result<&AutocovEstimate, CliError> {
        if self.autocov.is_none() {
            let a = &self.cfg.analysis;
            let sim = SimConfig::new(self.cfg.sim.dt, a.autocov_t_end, stage_seed(self.seed, STAGE_AUTOCOV), Representation::Reduced)
                .with_stride(a.autocov_stride);
            let mut ec = EnsembleConfig::new(self.cfg.model.clone(), sim, a.autocov_paths, vec![a.autocov_t_end], InitMode::Stationary);
            ec.workers = self.cfg.ensemble.workers;
            self.autocov = Some(stationary_autocov(&ec, &Observable::G, a.max_lag)?);
        }
        Ok(self.autocov.as_ref().unwrap())
    }

    fn fit(&mut self) -> Result<Result<MixingFit, String>, CliError> {
        if self.fit.is_none() {
            let fit = soft(fit_mixing_rate(self.autocov()?))?;
            self.fit = Some(fit);
        }
        Ok(self.fit.clone().unwrap())
    }

    fn stats(&mut self) -> Result<&EnsembleStats, CliError> {
        if self.stats.is_none() {
            let mut ec = self.cfg.ensemble_config(stage_seed(self.seed, STAGE_ENSEMBLE));
            ec.keep_samples = true;
            self.stats = Some(run_ensemble(&ec)?);
        }
        Ok(self.stats.as_ref().unwrap())
    }

    fn growth(&mut self) -> Result<Result<Sigma2Estimate, String>, CliError> {
        if self.growth.is_none() {
            let est = match self.fit()? {
                Ok(fit) => soft(estimate_sigma2_growth(self.stats()?, fit.lambda_hat))?,
                Err(e) => Err(format!("no mixing rate: {e}")),
            };
            self.growth = Some(est);
        }
        Ok(self.growth.clone().unwrap())
    }

    fn column(&mut self, t: f64) -> Result<Vec<f64>, CliError> {
        let stats = self.stats()?;
        let idx = stats
            .times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.max(1.0))
            .ok_or_else(|| CliError::Config(format!("time {t} is not an ensemble observation time")))?;
        Ok(stats.samples.as_ref().expect("samples kept").iter().map(|r| r[idx]).collect())
    }
}

fn invariant_samples(p: &mut Pipeline) -> Result<Result<(Vec<EnvState>, serde_json::Map<String, serde_json::Value>), String>, CliError> {
    let cfg = p.cfg;
    let a = &cfg.analysis;
    let seed = stage_seed(p.seed, STAGE_INVARIANT);
    let mut info = serde_json::Map::new();
    if a.invariant_source == InvariantSource::PiSample {
        let mut rng = path_rng(seed, 0);
        info.insert("source".into(), "pi-sample".into());
        return Ok(Ok(((0..a.invariant_draws).map(|_| pi_sample(&mut rng, &cfg.model.a)).collect(), info)));
    }
    let lambda = match p.fit()? {
        Ok(f) => Some(f.lambda_hat),
        Err(e) if a.invariant_spacing.is_none() => return Ok(Err(format!("no mixing rate for subsampling: {e}"))),
        Err(_) => None,
    };
    let spacing = a.invariant_spacing.unwrap_or_else(|| 5.0 / lambda.unwrap());
    let burn_in = lambda.map_or(DEFAULT_BURN_IN, |l| 10.0 / l);
    let stride = ((spacing / a.invariant_dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let record_dt = stride as f64 * a.invariant_dt;
    let mut samples = Vec::new();
    let mut chains = 0u64;
    while samples.len() < MIN_GOF_SAMPLES {
        let mut sim = SimConfig::new(a.invariant_dt, a.invariant_horizon, seed, Representation::Environment).with_stride(stride);
        sim.env_scheme = a.invariant_scheme;
        let traj = simulate(&cfg.model, &sim, &mut path_rng(seed, chains))?;
        let RecordedStates::Env(states) = traj.states else {
            unreachable!("environment run records environment states")
        };
        let kept: Vec<EnvState> = states
            .into_iter()
            .zip(&traj.times)
            .filter(|(_, &t)| t >= burn_in)
            .map(|(s, _)| s)
            .collect();
        if kept.is_empty() {
            return Ok(Err(format!("horizon {} leaves no samples after burn-in {burn_in}", a.invariant_horizon)));
        }
        samples.extend(subsample(&kept, record_dt, spacing));
        chains += 1;
    }
    info.insert("source".into(), "simulation".into());
    info.insert("chains".into(), chains.into());
    info.insert("spacing".into(), (record_dt).into());
    info.insert("burn_in".into(), burn_in.into());
    info.insert("horizon".into(), a.invariant_horizon.into());
    info.insert("dt".into(), a.invariant_dt.into());
    Ok(Ok((samples, info)))
}

/// Test functions for the stationarity check: per mode `c, s, c², s², cs, c⁴`,
/// plus the first cross term when there are several modes.
pub fn generator_basis(n: usize) -> Vec<(String, PolyTestFn)> {
    let mut out = Vec::new();
    for j in 1..=n {
        let (c, s) = (PolyTestFn::c_index(j), PolyTestFn::s_index(j));
        out.push((format!("c{j}"), PolyTestFn::monomial(n, 1.0, &[(c, 1)])));
        out.push((format!("s{j}"), PolyTestFn::monomial(n, 1.0, &[(s, 1)])));
        out.push((format!("c{j}^2"), PolyTestFn::monomial(n, 1.0, &[(c, 2)])));
        out.push((format!("s{j}^2"), PolyTestFn::monomial(n, 1.0, &[(s, 2)])));
        out.push((format!("c{j}s{j}"), PolyTestFn::monomial(n, 1.0, &[(c, 1), (s, 1)])));
        out.push((format!("c{j}^4"), PolyTestFn::monomial(n, 1.0, &[(c, 4)])));
    }
    if n >= 2 {
        out.push(("c1c2".into(), PolyTestFn::monomial(n, 1.0, &[(PolyTestFn::c_index(1), 1), (PolyTestFn::c_index(2), 1)])));
    }
    out
}

fn generator_reports(cfg: &RunConfig, seed: u64) -> Vec<TestReport> {
    let a = &cfg.model.a;
    let draws = cfg.analysis.generator_draws;
    let variant = cfg.analysis.generator_variant;
    let seed = stage_seed(seed, STAGE_GENERATOR);
    let basis = generator_basis(a.len());
    let parts = basis
        .iter()
        .enumerate()
        .map(|(i, (name, f))| {
            let mut r = generator_stationarity(f, a, variant, draws, 0.0, 3.0, &mut path_rng(seed, i as u64));
            r.test = format!("generator f={name}");
            r
        })
        .collect();
    let mut out = vec![TestReport::composite("generator_stationarity", parts).with_input("variant", serde_json::to_value(variant).unwrap())];
    if variant == GeneratorVariant::ItoCorrected {
        // The printed generator drops −½Σj²(c∂c + s∂s); on c₁² the mean of the
        // printed form is E_π[c₁²].
        let c2 = PolyTestFn::monomial(a.len(), 1.0, &[(PolyTestFn::c_index(1), 2)]);
        let target = pi_variances(a)[0];
        let mut r = generator_stationarity(&c2, a, GeneratorVariant::AsPrinted, draws, target, 3.0, &mut path_rng(seed, basis.len() as u64));
        r.test = "generator_as_printed_detector".into();
        out.push(r);
    }
    out
}

fn mixing_report(fit: &MixingFit) -> TestReport {
    TestReport::composite(
        "mixing",
        vec![
            TestReport::lower_bound_test("lambda_positive", fit.lambda_hat, f64::MIN_POSITIVE),
            TestReport::lower_bound_test("log_linear_r_squared", fit.r_squared, 0.9),
        ],
    )
    .with_input("lambda_hat", fit.lambda_hat)
    .with_input("lambda_stderr", fit.lambda_stderr)
    .with_input("window_end", fit.window.1)
    .with_input("n_points", fit.n_points)
}

/// The growth CI must lie within the bounds widened by `slack` and meet the
/// bounds themselves.
pub fn bounds_report(est: &Sigma2Estimate, a: &[f64], slack: f64) -> TestReport {
    let (lo, hi) = sigma2_bounds(a);
    let excess = ((lo - slack) - est.ci_low).max(est.ci_high - (hi + slack)).max(0.0);
    let gap = (lo - est.ci_high).max(est.ci_low - hi).max(0.0);
    TestReport::composite(
        "sigma2_bounds",
        vec![
            TestReport::margin_test("ci_within_widened_bounds", excess, 0.0),
            TestReport::margin_test("ci_meets_bounds", gap, 0.0),
        ],
    )
    .with_input("lower", lo)
    .with_input("upper", hi)
    .with_input("slack", slack)
    .with_input("value", est.value)
    .with_input("ci_low", est.ci_low)
    .with_input("ci_high", est.ci_high)
}

/// Distance between two CIs (0 when they overlap).
pub fn ci_gap(a: &Sigma2Estimate, b: &Sigma2Estimate) -> f64 {
    (a.ci_low - b.ci_high).max(b.ci_low - a.ci_high).max(0.0)
}

/// Runs `suite` on `cfg` without touching the filesystem.
pub fn run_verify(cfg: &RunConfig, suite: Suite) -> Result<VerifyOutcome, CliError> {
    let seed = cfg.sim.seed;
    let mut p = Pipeline {
        cfg,
        seed,
        autocov: None,
        fit: None,
        stats: None,
        growth: None,
    };
    let mut reports = Vec::new();
    let mut estimates = Vec::new();
    let mut invariant = None;
    let mut green_kubo = None;

    if suite.includes(Suite::Invariant) {
        match invariant_samples(&mut p)? {
            Ok((samples, info)) => {
                let mut r = match soft(invariant_gof(&samples, &cfg.model.a, cfg.analysis.level))? {
                    Ok(r) => r,
                    Err(e) => TestReport::failed("invariant_gof", e),
                };
                r.inputs.extend(info);
                reports.push(r);
                invariant = Some(samples);
            }
            Err(e) => reports.push(TestReport::failed("invariant_gof", e)),
        }
    }
    if suite.includes(Suite::Generator) {
        reports.extend(generator_reports(cfg, seed));
    }
    if suite.includes(Suite::Sigma2) {
        match p.fit()? {
            Ok(fit) => reports.push(mixing_report(&fit)),
            Err(e) => reports.push(TestReport::failed("mixing", e)),
        }
        let growth = p.growth()?;
        match &growth {
            Ok(g) => {
                reports.push(bounds_report(g, &cfg.model.a, cfg.analysis.bound_slack));
                estimates.push(g.clone());
            }
            Err(e) => reports.push(TestReport::failed("sigma2_bounds", e)),
        }
        let fit = p.fit()?.ok();
        match soft(estimate_sigma2_greenkubo(p.autocov()?, fit.as_ref()))? {
            Ok(gk) => {
                estimates.push(gk.clone());
                reports.push(match &growth {
                    Ok(g) => TestReport::margin_test("sigma2_cross_validation", ci_gap(g, &gk), 0.0)
                        .with_input("growth", g.value)
                        .with_input("green_kubo", gk.value),
                    Err(e) => TestReport::failed("sigma2_cross_validation", e),
                });
                green_kubo = Some(gk);
            }
            Err(e) => reports.push(TestReport::failed("sigma2_cross_validation", e)),
        }
    }
    if suite.includes(Suite::Clt) {
        match p.growth()? {
            Ok(g) => {
                let a = &cfg.analysis;
                let r = match soft(clt_fdd_test(p.stats()?, &a.clt_times, a.clt_eps, g.value, a.level))? {
                    Ok(r) => r,
                    Err(e) => TestReport::failed("clt_fdd", e),
                };
                reports.push(r);
            }
            Err(e) => reports.push(TestReport::failed("clt_fdd", e)),
        }
    }
    if suite.includes(Suite::Lln) {
        match p.growth()? {
            Ok(g) => {
                let t = cfg.analysis.lln_horizon;
                let x = p.column(t)?;
                reports.push(match soft(lln_check(&x, t, g.value))? {
                    Ok(r) => r,
                    Err(e) => TestReport::failed("lln", e),
                });
            }
            Err(e) => reports.push(TestReport::failed("lln", e)),
        }
    }

    let growth = p.growth.clone().and_then(Result::ok);
    let report = VerifyReport {
        suite,
        config_hash: cfg.hash(),
        seed,
        all_pass: reports.iter().all(TestReport::passed),
        reports,
        mixing: p.fit.clone().and_then(Result::ok),
        sigma2: estimates,
    };
    Ok(VerifyOutcome {
        report,
        autocov: p.autocov,
        stats: p.stats,
        growth,
        green_kubo,
        invariant_samples: invariant,
    })
}

fn write_plot_data(cfg: &RunConfig, out: &VerifyOutcome) -> Result<Vec<PathBuf>, CliError> {
    let dir = &cfg.output.dir;
    let mut files = Vec::new();
    if let Some(ac) = &out.autocov {
        let path = dir.join("autocov.csv");
        let rows = (0..ac.lags.len()).map(|i| vec![ac.lags[i], ac.values[i], ac.stderr[i]]);
        write_csv(&path, &["lag", "value", "stderr"], rows)?;
        files.push(path);
    }
    if let Some(stats) = &out.stats {
        let path = dir.join("growth.csv");
        let m = stats.second_moment();
        let se = stats.second_moment_stderr();
        let rows = (0..stats.times.len()).map(|i| {
            let t = stats.times[i];
            vec![t, m[i], se[i], if t > 0.0 { m[i] / t } else { f64::NAN }, if t > 0.0 { se[i] / t } else { f64::NAN }]
        });
        write_csv(&path, &["time", "mean_x2", "stderr_x2", "ratio", "ratio_stderr"], rows)?;
        files.push(path);
        if let (Some(g), Some(samples)) = (&out.growth, &stats.samples) {
            let path = dir.join("qq.csv");
            let eps = cfg.analysis.clt_eps;
            let mut rows = Vec::new();
            for &t in &cfg.analysis.clt_times {
                let Some(idx) = stats.times.iter().position(|&s| (s - t).abs() <= 1e-9 * t.max(1.0)) else {
                    continue;
                };
                let scale = (eps / g.value).sqrt() / (eps * t).sqrt();
                let mut z: Vec<f64> = samples.iter().map(|r| scale * r[idx]).collect();
                z.sort_by(f64::total_cmp);
                let n = z.len() as f64;
                rows.extend(z.iter().enumerate().map(|(k, &v)| vec![t, normal_quantile((k as f64 + 0.5) / n), v]));
            }
            write_csv(&path, &["time", "theoretical", "empirical"], rows)?;
            files.push(path);
        }
    }
    if let Some(samples) = &out.invariant_samples {
        let path = dir.join("invariant_qq.csv");
        let mut rows = Vec::new();
        for (k, var) in pi_variances(&cfg.model.a).into_iter().enumerate() {
            for (coord, pick) in [(0.0, true), (1.0, false)] {
                let mut z: Vec<f64> = samples.iter().map(|e| if pick { e.c[k] } else { e.s[k] } / var.sqrt()).collect();
                z.sort_by(f64::total_cmp);
                let n = z.len() as f64;
                rows.extend(
                    z.iter()
                        .enumerate()
                        .map(|(i, &v)| vec![(k + 1) as f64, coord, normal_quantile((i as f64 + 0.5) / n), v]),
                );
            }
        }
        write_csv(&path, &["mode", "coordinate", "theoretical", "empirical"], rows)?;
        files.push(path);
    }
    Ok(files)
}

/// Runs a suite and writes `report.json`, plot-ready CSVs and the manifest.
/// Returns exit code 0 iff every verdict passes.
pub fn cmd_verify(inv: &Invocation, suite: Suite) -> Result<(i32, VerifyOutcome), CliError> {
    let cfg = inv.resolve()?;
    let outcome = run_verify(&cfg, suite)?;
    ensure_dir(&cfg.output.dir)?;
    let report_path = cfg.output.dir.join("report.json");
    write_json(&report_path, &outcome.report)?;
    let mut files = vec![report_path];
    if cfg.output.csv() {
        files.extend(write_plot_data(&cfg, &outcome)?);
    }
    write_manifest(&cfg, "verify", &files)?;
    let code = if outcome.report.all_pass { EXIT_PASS } else { EXIT_FAIL };
    Ok((code, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        assert_eq!("sigma2".parse::<Suite>().unwrap(), Suite::Sigma2);
        assert_eq!("ALL".parse::<Suite>().unwrap(), Suite::All);
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(generator_basis(1).len(), 6);
        assert_eq!(generator_basis(2).len(), 13);
    }

    fn est(value: f64, half: f64) -> Sigma2Estimate {
        Sigma2Estimate {
            method: repelsim::analysis::Sigma2Method::Growth,
            value,
            stderr: half / 1.96,
            ci_low: value - half,
            ci_high: value + half,
            diagnostics: Default::default(),
        }
    }

    #[test]
    fn bounds_logic() {
        assert!(bounds_report(&est(2.0, 0.5), &[1.0], 0.2).passed());
        assert!(bounds_report(&est(2.9, 0.25), &[1.0], 0.2).passed());
        // CI [3.1, 3.5] leaves [0.8, 3.2] and misses [1, 3].
        let r = bounds_report(&est(3.3, 0.2), &[1.0], 0.2);
        assert!(!r.passed());
        assert_eq!(r.statistic, 2.0);
        assert!(r.check_consistency());
        assert!(!bounds_report(&est(0.9, 0.05), &[1.0], 0.2).passed());
    }

    #[test]
    fn gap_is_zero_on_overlap() {
        assert_eq!(ci_gap(&est(2.0, 0.5), &est(2.8, 0.4)), 0.0);
        assert!((ci_gap(&est(2.0, 0.1), &est(3.0, 0.1)) - 0.8).abs() < 1e-12);
    }
}
