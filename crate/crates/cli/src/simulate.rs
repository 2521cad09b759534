use std::fs::File;
use std::io::BufWriter;

use repelsim::integrate::{path_rng, simulate};

use crate::output::{ensure_dir, write_manifest};
use crate::{CliError, Invocation, EXIT_PASS};

/// Simulates one trajectory of the configured model and writes
/// `trajectory.csv` plus the manifest.
pub fn cmd_simulate(inv: &Invocation) -> Result<i32, CliError> {
    let cfg = inv.resolve()?;
    let mut rng = path_rng(cfg.sim.seed, 0);
    let traj = simulate(&cfg.model, &cfg.sim, &mut rng)?;
    ensure_dir(&cfg.output.dir)?;
    let path = cfg.output.dir.join("trajectory.csv");
    let file = File::create(&path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    traj.write_csv(BufWriter::new(file)).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    write_manifest(&cfg, "simulate", &[path])?;
    Ok(EXIT_PASS)
}
