use std::time::Instant;

use repelsim::analysis::TestReport;
use repelsim::integrate::{brownian_increments, path_rng, simulate_with_increments, Representation, SimConfig};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::output::{ensure_dir, write_json, write_manifest};
use crate::{CliError, Invocation, EXIT_FAIL, EXIT_PASS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchEntry {
    pub representation: Representation,
    pub horizon: f64,
    pub steps: usize,
    /// Median over repeats of the per-step wall-clock cost.
    pub per_step_ns: f64,
    pub runs_per_sample: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config_hash: String,
    pub dt: f64,
    pub entries: Vec<BenchEntry>,
    /// Per-step cost at the longest horizon over that at the shortest.
    pub ratios: Vec<(Representation, f64)>,
    pub checks: TestReport,
}

impl BenchReport {
    pub fn ratio(&self, rep: Representation) -> Option<f64> {
        self.ratios.iter().find(|(r, _)| *r == rep).map(|(_, v)| *v)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn time_one(cfg: &RunConfig, rep: Representation, horizon: f64) -> Result<BenchEntry, CliError> {
    let a = &cfg.analysis;
    let dt = a.bench_dt;
    let sim = SimConfig::new(dt, horizon, cfg.sim.seed, rep);
    let steps = sim.steps();
    let sim = sim.with_stride(steps.max(1));
    let db = brownian_increments(&mut path_rng(cfg.sim.seed, 0), dt, steps);
    let run = || simulate_with_increments(&cfg.model, &sim, &db);

    let start = Instant::now();
    run()?;
    let once = start.elapsed().as_secs_f64().max(1e-9);
    let k = ((a.bench_min_time / once).ceil() as usize).max(1);
    let mut per_step = Vec::with_capacity(a.bench_repeats);
    for _ in 0..a.bench_repeats {
        let start = Instant::now();
        for _ in 0..k {
            std::hint::black_box(run()?);
        }
        per_step.push(start.elapsed().as_secs_f64() * 1e9 / (k * steps.max(1)) as f64);
    }
    Ok(BenchEntry {
        representation: rep,
        horizon,
        steps,
        per_step_ns: median(per_step),
        runs_per_sample: k,
        samples: a.bench_repeats,
    })
}

/// Times the three steppers at each configured horizon. History per-step
/// cost must grow by more than 5× between the shortest and longest horizon;
/// reduced and environment costs must stay within a factor 2.
pub fn run_bench(cfg: &RunConfig) -> Result<BenchReport, CliError> {
    let horizons = &cfg.analysis.bench_horizons;
    let mut entries = Vec::new();
    for rep in Representation::ALL {
        for &h in horizons {
            entries.push(time_one(cfg, rep, h)?);
        }
    }
    let (h0, h1) = (horizons[0], horizons[horizons.len() - 1]);
    let cost = |rep, h| {
        entries
            .iter()
            .find(|e: &&BenchEntry| e.representation == rep && e.horizon == h)
            .map(|e| e.per_step_ns)
            .unwrap()
    };
    let ratios: Vec<(Representation, f64)> = Representation::ALL.iter().map(|&r| (r, cost(r, h1) / cost(r, h0))).collect();
    let parts = ratios
        .iter()
        .map(|&(rep, ratio)| match rep {
            Representation::History => TestReport::lower_bound_test("history cost growth", ratio, 5.0),
            _ => TestReport::margin_test(format!("{} cost flat", rep.name()), ratio.log2().abs(), 1.0),
        }
        .with_input("ratio", ratio))
        .collect();
    Ok(BenchReport {
        config_hash: cfg.hash(),
        dt: cfg.analysis.bench_dt,
        entries,
        ratios,
        checks: TestReport::composite("bench", parts).with_input("horizons", serde_json::json!([h0, h1])),
    })
}

pub fn cmd_bench(inv: &Invocation) -> Result<(i32, BenchReport), CliError> {
    let cfg = inv.resolve()?;
    let report = run_bench(&cfg)?;
    ensure_dir(&cfg.output.dir)?;
    let path = cfg.output.dir.join("bench.json");
    write_json(&path, &report)?;
    write_manifest(&cfg, "bench", &[path])?;
    Ok((if report.checks.passed() { EXIT_PASS } else { EXIT_FAIL }, report))
}
