use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// How `statistic`/`p_value` is compared to `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// Pass iff `p_value >= threshold`.
    PValueAtLeast,
    /// Pass iff `statistic <= threshold`.
    StatisticAtMost,
    /// Pass iff `statistic >= threshold`.
    StatisticAtLeast,
}

/// Outcome of one statistical check.
///
/// Composite checks carry their parts in `subtests`; their own statistic is
/// the number of failing parts, compared against a threshold of 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub threshold: f64,
    pub comparison: Comparison,
    pub verdict: Verdict,
    pub inputs: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subtests: Vec<TestReport>,
}

impl TestReport {
    pub fn p_value_test(test: impl Into<String>, statistic: f64, p_value: f64, level: f64) -> Self {
        TestReport {
            test: test.into(),
            statistic,
            p_value: Some(p_value),
            threshold: level,
            comparison: Comparison::PValueAtLeast,
            verdict: Verdict::from_bool(p_value >= level),
            inputs: Map::new(),
            subtests: Vec::new(),
        }
    }

    pub fn margin_test(test: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        TestReport {
            test: test.into(),
            statistic,
            p_value: None,
            threshold,
            comparison: Comparison::StatisticAtMost,
            verdict: Verdict::from_bool(statistic <= threshold),
            inputs: Map::new(),
            subtests: Vec::new(),
        }
    }

    pub fn lower_bound_test(test: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        TestReport {
            comparison: Comparison::StatisticAtLeast,
            verdict: Verdict::from_bool(statistic >= threshold),
            ..TestReport::margin_test(test, statistic, threshold)
        }
    }

    /// Failed check for a computation that could not be carried out.
    pub fn failed(test: impl Into<String>, reason: impl std::fmt::Display) -> Self {
        TestReport::margin_test(test, 1.0, 0.0).with_input("error", reason.to_string())
    }

    /// Passes iff every part passes.
    pub fn composite(test: impl Into<String>, subtests: Vec<TestReport>) -> Self {
        let failed = subtests.iter().filter(|t| !t.passed()).count();
        let mut report = TestReport::margin_test(test, failed as f64, 0.0);
        report.subtests = subtests;
        report
    }

    pub fn with_input(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    /// Re-derives the verdict from the stored comparison.
    pub fn check_consistency(&self) -> bool {
        let holds = match self.comparison {
            Comparison::PValueAtLeast => self.p_value.is_some_and(|p| p >= self.threshold),
            Comparison::StatisticAtMost => self.statistic <= self.threshold,
            Comparison::StatisticAtLeast => self.statistic >= self.threshold,
        };
        holds == self.passed() && self.subtests.iter().all(TestReport::check_consistency)
    }
}

/// A batch of reports with an overall verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSet {
    pub all_pass: bool,
    pub reports: Vec<TestReport>,
}

impl ReportSet {
    pub fn new(reports: Vec<TestReport>) -> Self {
        ReportSet {
            all_pass: reports.iter().all(TestReport::passed),
            reports,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
