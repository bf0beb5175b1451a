//! Verification report: one record per check, an environment fingerprint so
//! a report can be traced back to the run that produced it, and a stable
//! serialization — two runs of the same config differ only in the timestamp.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::config::{RunConfig, StructureChoice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
}

/// Outcome of a single check. `measured <= threshold` is the pass
/// condition; for checks with several bounds the binding one (largest
/// measured-to-threshold ratio) is promoted here and the rest stay in the
/// witness string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub title: String,
    pub status: CheckStatus,
    pub measured: f64,
    pub threshold: f64,
    pub witness: String,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }

    /// A check that could not produce a measurement at all.
    pub fn broken(id: &str, title: &str, error: impl std::fmt::Display) -> Self {
        CheckResult {
            id: id.to_string(),
            title: title.to_string(),
            status: CheckStatus::Fail,
            measured: f64::INFINITY,
            threshold: 0.0,
            witness: format!("check did not run: {error}"),
        }
    }

    pub fn summary_line(&self) -> String {
        let status = match self.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
        };
        format!(
            "[{}] {status} measured={:.6e} threshold={:.6e} {}",
            self.id, self.measured, self.threshold, self.title
        )
    }
}

/// Accumulates the individual bounds of one check and reduces them to a
/// single record. Entries are compared by measured/threshold, so bounds in
/// different units can share a check without drowning each other out.
#[derive(Debug, Default)]
pub struct Assertions {
    entries: Vec<(String, f64, f64)>,
}

impl Assertions {
    pub fn new() -> Self {
        Assertions::default()
    }

    pub fn push(&mut self, label: impl Into<String>, measured: f64, threshold: f64) {
        self.entries.push((label.into(), measured, threshold));
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn margin(measured: f64, threshold: f64) -> f64 {
        if !measured.is_finite() {
            return f64::INFINITY;
        }
        if threshold > 0.0 && measured >= 0.0 {
            measured / threshold
        } else if measured <= threshold {
            // slack-style bound, comfortably met: never binding
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    }

    pub fn into_result(self, id: &str, title: &str) -> CheckResult {
        if self.entries.is_empty() {
            return CheckResult::broken(id, title, "no measurements were produced");
        }
        let pass = self
            .entries
            .iter()
            .all(|(_, m, t)| m.is_finite() && m <= t);
        let binding = self
            .entries
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| {
                Self::margin(a.1, a.2)
                    .partial_cmp(&Self::margin(b.1, b.2))
                    .expect("margins are never NaN")
            })
            .map(|(i, _)| i)
            .expect("nonempty");
        let (label, measured, threshold) = self.entries[binding].clone();
        let mut witness = format!("binding: {label}");
        let mut ordered: Vec<&(String, f64, f64)> = self.entries.iter().collect();
        ordered.sort_by(|a, b| {
            Self::margin(b.1, b.2)
                .partial_cmp(&Self::margin(a.1, a.2))
                .expect("margins are never NaN")
                .then_with(|| a.0.cmp(&b.0))
        });
        for (l, m, t) in ordered.into_iter().take(4) {
            witness.push_str(&format!("; {l}: {m:.4e} vs {t:.4e}"));
        }
        CheckResult {
            id: id.to_string(),
            title: title.to_string(),
            status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
            measured,
            threshold,
            witness,
        }
    }
}

/// What the run depended on, echoed into the report so two reports are
/// comparable at a glance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvFingerprint {
    pub version: String,
    pub seed: u64,
    pub dimension: usize,
    pub scaling: Vec<u32>,
    pub grid_sizes: Vec<usize>,
    pub gamma: (i64, i64),
    pub structure: StructureChoice,
    pub alpha_integral: (i64, i64),
}

impl EnvFingerprint {
    pub fn from_config(config: &RunConfig) -> Self {
        EnvFingerprint {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            dimension: config.dimension,
            scaling: config.scaling.clone(),
            grid_sizes: config.grid_sizes.clone(),
            gamma: config.gamma,
            structure: config.structure,
            alpha_integral: config.alpha_integral,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// seconds since the unix epoch; the only field two identical runs may
    /// disagree on
    pub created_unix: u64,
    pub environment: EnvFingerprint,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn new(environment: EnvFingerprint, mut checks: Vec<CheckResult>) -> Self {
        checks.sort_by(|a, b| a.id.cmp(&b.id));
        let passed = checks.iter().all(CheckResult::passed);
        let created_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        VerificationReport { created_unix, environment, checks, passed }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for check in &self.checks {
            out.push_str(&check.summary_line());
            out.push('\n');
        }
        out.push_str(if self.passed { "overall: PASS\n" } else { "overall: FAIL\n" });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_checks() -> Vec<CheckResult> {
        let mut a = Assertions::new();
        a.push("sum defect", 3.0e-15, 1.0e-14);
        a.push("overlap", 0.0, 0.0);
        let first = a.into_result("b-partition", "partition identities");
        let mut b = Assertions::new();
        b.push("ratio", 31.0, 25.0);
        let second = b.into_result("a-bracket", "norm bracket");
        vec![first, second]
    }

    #[test]
    fn the_binding_bound_is_promoted_and_failures_dominate() {
        let checks = sample_checks();
        assert_eq!(checks[1].status, CheckStatus::Fail);
        assert_eq!(checks[1].measured, 31.0);
        assert!(checks[1].witness.starts_with("binding: ratio"));
        assert_eq!(checks[0].status, CheckStatus::Pass);
    }

    #[test]
    fn reports_sort_checks_and_fail_overall_on_any_failure() {
        let env = EnvFingerprint::from_config(&RunConfig::default_run());
        let report = VerificationReport::new(env, sample_checks());
        assert_eq!(report.checks[0].id, "a-bracket");
        assert!(!report.passed);
    }

    #[test]
    fn serialization_is_stable_up_to_the_timestamp() {
        let env = EnvFingerprint::from_config(&RunConfig::default_run());
        let mut one = VerificationReport::new(env.clone(), sample_checks());
        let mut two = VerificationReport::new(env, sample_checks());
        one.created_unix = 0;
        two.created_unix = 0;
        assert_eq!(one.to_json().unwrap(), two.to_json().unwrap());
    }

    #[test]
    fn degenerate_thresholds_only_pass_at_zero() {
        let mut a = Assertions::new();
        a.push("exact", 1.0e-300, 0.0);
        let result = a.into_result("x", "exactness");
        assert_eq!(result.status, CheckStatus::Fail);
    }
}
