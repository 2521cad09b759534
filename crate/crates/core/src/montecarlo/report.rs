use serde::{Deserialize, Serialize};

use super::{AutocovEstimate, EnsembleStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocovSection {
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Serializable ensemble summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub config_hash: String,
    pub seed: u64,
    pub times: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub var_x: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub autocov: Option<AutocovSection>,
}

impl EnsembleReport {
    pub fn new(config_hash: impl Into<String>, seed: u64, stats: &EnsembleStats, autocov: Option<&AutocovEstimate>) -> Self {
        EnsembleReport {
            config_hash: config_hash.into(),
            seed,
            times: stats.times.clone(),
            mean_x: stats.mean_x(),
            var_x: stats.var_x(),
            cov: stats.cov_x(),
            autocov: autocov.map(|a| AutocovSection {
                lags: a.lags.clone(),
                values: a.values.clone(),
                stderr: a.stderr.clone(),
            }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_fields() {
        let stats = EnsembleStats::from_samples(vec![1.0, 2.0], vec![vec![0.5, 1.0], vec![-0.5, 0.0]], false).unwrap();
        let json = EnsembleReport::new("abc", 7, &stats, None).to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["config_hash", "seed", "times", "mean_x", "var_x", "cov", "autocov"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["mean_x"][0], 0.0);
        assert_eq!(v["var_x"][0], 0.5);
        assert_eq!(v["cov"][0][1], 0.5);
    }
}
