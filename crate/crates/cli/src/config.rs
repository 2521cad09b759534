use std::path::{Path, PathBuf};

use repelsim::integrate::{EnvScheme, Representation, SimConfig};
use repelsim::model::GeneratorVariant;
use repelsim::montecarlo::{EnsembleConfig, InitMode};
use repelsim::ModelSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::CliError;

/// Full run configuration, one TOML file with `model`, `sim`, `ensemble`,
/// `analysis` and `output` sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "ModelSpec::canonical")]
    pub model: ModelSpec,
    #[serde(default = "default_sim")]
    pub sim: SimConfig,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_sim() -> SimConfig {
    SimConfig::new(0.01, 1.0, 0, Representation::Environment)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub n_paths: usize,
    pub t_end: f64,
    pub init: InitMode,
    pub representation: Representation,
    /// Explicit observation times; otherwise a grid with `observation_step`.
    pub observation_times: Option<Vec<f64>>,
    pub observation_step: f64,
    pub burn_in: Option<f64>,
    pub workers: Option<usize>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            n_paths: 4000,
            t_end: 400.0,
            init: InitMode::Stationary,
            representation: Representation::Reduced,
            observation_times: None,
            observation_step: 10.0,
            burn_in: None,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvariantSource {
    /// Long environment-representation runs from the fixed start.
    Simulation,
    /// Direct draws from π (null case).
    PiSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub level: f64,
    pub autocov_paths: usize,
    pub autocov_t_end: f64,
    pub autocov_stride: usize,
    pub max_lag: f64,
    pub invariant_source: InvariantSource,
    pub invariant_dt: f64,
    pub invariant_horizon: f64,
    pub invariant_scheme: EnvScheme,
    /// Overrides the `5/λ̂` subsampling spacing.
    pub invariant_spacing: Option<f64>,
    pub invariant_draws: usize,
    pub generator_variant: GeneratorVariant,
    pub generator_draws: usize,
    /// Allowed CI excursion beyond the variance bounds.
    pub bound_slack: f64,
    pub clt_times: Vec<f64>,
    pub clt_eps: f64,
    pub lln_horizon: f64,
    pub bench_horizons: Vec<f64>,
    pub bench_dt: f64,
    pub bench_repeats: usize,
    /// Minimum wall-clock seconds per timing sample.
    pub bench_min_time: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            level: 0.01,
            autocov_paths: 1600,
            autocov_t_end: 500.0,
            autocov_stride: 25,
            max_lag: 20.0,
            invariant_source: InvariantSource::Simulation,
            invariant_dt: 0.005,
            invariant_horizon: 2000.0,
            invariant_scheme: EnvScheme::EulerMaruyama,
            invariant_spacing: None,
            invariant_draws: 5000,
            generator_variant: GeneratorVariant::ItoCorrected,
            generator_draws: 1_000_000,
            bound_slack: 0.2,
            clt_times: vec![100.0, 200.0, 400.0],
            clt_eps: 0.01,
            lln_horizon: 200.0,
            bench_horizons: vec![10.0, 50.0, 250.0],
            bench_dt: 0.02,
            bench_repeats: 5,
            bench_min_time: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            formats: vec![Format::Json, Format::Csv],
        }
    }
}

impl OutputSection {
    pub fn csv(&self) -> bool {
        self.formats.contains(&Format::Csv)
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelSpec::canonical(),
            sim: default_sim(),
            ensemble: EnsembleSection::default(),
            analysis: AnalysisSection::default(),
            output: OutputSection::default(),
        }
    }
}

/// Parses the right-hand side of an override as a TOML value, falling back
/// to a bare string.
fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Sets `dotted.key = raw` in `table`, creating intermediate tables.
pub fn apply_override(table: &mut Table, dotted: &str, raw: &str) -> Result<(), CliError> {
    let parts: Vec<&str> = dotted.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("malformed override key `{dotted}`")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override `{dotted}`: `{p}` is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_value(raw));
    Ok(())
}

impl RunConfig {
    /// Loads `path` (or the defaults when `None`) and applies `key=value`
    /// overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                text.parse::<Table>()
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => Table::new(),
        };
        for (k, v) in overrides {
            apply_override(&mut table, k, v)?;
        }
        Self::from_table(table)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        Self::from_table(text.parse::<Table>().map_err(|e| CliError::Config(e.to_string()))?)
    }

    fn from_table(mut table: Table) -> Result<Self, CliError> {
        // A partial `sim` section (e.g. only a seed override) keeps the
        // default step and horizon.
        if let Some(Value::Table(sim)) = table.get_mut("sim") {
            let d = default_sim();
            sim.entry("dt").or_insert(Value::Float(d.dt));
            sim.entry("t_end").or_insert(Value::Float(d.t_end));
        }
        let cfg: RunConfig = Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model.clone().validate()?;
        self.sim.validate()?;
        let a = &self.analysis;
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(CliError::Config(msg.to_string())) };
        check(a.level > 0.0 && a.level < 1.0, "analysis.level must lie in (0, 1)")?;
        check(a.autocov_paths >= 2, "analysis.autocov_paths must be at least 2")?;
        check(a.autocov_stride >= 1, "analysis.autocov_stride must be at least 1")?;
        check(a.max_lag > 0.0, "analysis.max_lag must be positive")?;
        check(a.invariant_dt > 0.0 && a.invariant_horizon > 0.0, "analysis.invariant_dt and invariant_horizon must be positive")?;
        check(a.clt_eps > 0.0, "analysis.clt_eps must be positive")?;
        check(a.bench_dt > 0.0 && !a.bench_horizons.is_empty(), "analysis.bench_dt must be positive and bench_horizons nonempty")?;
        check(a.bench_repeats >= 1, "analysis.bench_repeats must be at least 1")?;
        check(self.ensemble.observation_step > 0.0, "ensemble.observation_step must be positive")?;
        if let Some(w) = self.ensemble.workers {
            check(w >= 1, "ensemble.workers must be at least 1")?;
        }
        self.ensemble_config(0).validate()?;
        Ok(())
    }

    pub fn observation_times(&self) -> Vec<f64> {
        let e = &self.ensemble;
        match &e.observation_times {
            Some(t) => t.clone(),
            None => {
                let k = (e.t_end / e.observation_step + 1e-9).floor() as usize;
                (1..=k).map(|i| i as f64 * e.observation_step).collect()
            }
        }
    }

    /// The displacement ensemble, seeded with `seed`.
    pub fn ensemble_config(&self, seed: u64) -> EnsembleConfig {
        let e = &self.ensemble;
        let mut sim = SimConfig::new(self.sim.dt, e.t_end, seed, e.representation);
        sim.env_scheme = self.sim.env_scheme;
        let mut cfg = EnsembleConfig::new(self.model.clone(), sim, e.n_paths, self.observation_times(), e.init);
        cfg.burn_in = e.burn_in;
        cfg.workers = e.workers;
        cfg
    }

    /// Hash of everything that can change results (worker count and output
    /// location excluded).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.ensemble.workers = None;
        c.output = OutputSection::default();
        let digest = Sha256::digest(serde_json::to_vec(&c).expect("config serializes"));
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Independent seed for a pipeline stage.
pub fn stage_seed(seed: u64, stage: u64) -> u64 {
    seed.wrapping_add(stage.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}
