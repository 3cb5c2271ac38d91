use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::oracle::OracleCaps;
use crate::schedule::{MemorySchedule, ScheduleKind};
use crate::theory::{classify_regime, Regime};
use crate::triangular::SamplingMethod;
use crate::walk::WalkParams;
use crate::{Error, Result};

/// Longest auxiliary path (limit horizon or linear walk) a run may request.
pub const MAX_LIMIT_HORIZON: u64 = 100_000_000;

/// The model, given either as `(s, p, q, r)` or as `(s, α, β)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    VerifyClt,
    VerifySlln,
    VerifyStops,
    CompareSettings,
    Exact,
    Azuma,
}

impl ExperimentKind {
    fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::VerifyClt => "verify-clt",
            ExperimentKind::VerifySlln => "verify-slln",
            ExperimentKind::VerifyStops => "verify-stops",
            ExperimentKind::CompareSettings => "compare-settings",
            ExperimentKind::Exact => "exact",
            ExperimentKind::Azuma => "azuma",
        }
    }

    fn uses_replications(self) -> bool {
        self != ExperimentKind::Exact
    }

    fn uses_grid(self) -> bool {
        matches!(self, ExperimentKind::VerifySlln | ExperimentKind::VerifyClt)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for the report and CSV artifacts; nothing is written if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Also write the per-replication sample CSV.
    #[serde(default)]
    pub samples: bool,
}

fn default_slln_from() -> u64 {
    1 << 14
}

/// An experiment as written in a JSON config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub model: ModelConfig,
    pub schedule: ScheduleKind,
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    /// Overrides the schedule at `n` (exact kind only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replications: Option<u64>,
    pub seed: u64,
    #[serde(default)]
    pub method: SamplingMethod,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub caps: OracleCaps,
    /// Horizon `N*` for the per-path estimate of the limit `M`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_horizon: Option<u64>,
    /// Smallest grid point entering the strong-law maximum.
    #[serde(default = "default_slln_from")]
    pub slln_from: u64,
}

/// A validated experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub raw: RawConfig,
    pub params: WalkParams,
    pub schedule: MemorySchedule,
}

impl ExperimentConfig {
    pub fn kind(&self) -> ExperimentKind {
        self.raw.experiment
    }

    pub fn seed(&self) -> u64 {
        self.raw.seed
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.raw.seed = seed;
    }

    pub fn set_output_dir(&mut self, dir: PathBuf) {
        self.raw.output.dir = Some(dir);
    }

    /// Row length for single-`n` kinds.
    pub fn n(&self) -> u64 {
        self.raw.n.expect("validated")
    }

    pub fn replications(&self) -> u64 {
        self.raw.replications.expect("validated")
    }

    /// `m_n`, honouring the exact-kind override.
    pub fn memory(&self) -> Result<u64> {
        match self.raw.m {
            Some(m) => Ok(m),
            None => self.schedule.m_of(self.n()),
        }
    }

    /// `N*`, defaulting to the horizon at which the centring contamination
    /// `(m / N*)^{α − β/2}` drops to 0.1.
    pub fn limit_horizon(&self) -> Result<u64> {
        if let Some(h) = self.raw.limit_horizon {
            return Ok(h);
        }
        let m = self.memory()? as f64;
        let exponent = self.params.alpha - self.params.beta / 2.0;
        let h = (m * 0.1f64.powf(-1.0 / exponent)).ceil();
        if !(h <= MAX_LIMIT_HORIZON as f64) {
            return Err(Error::ResourceLimit {
                what: "default limit horizon",
                requested: if h.is_finite() { h as u64 } else { u64::MAX },
                cap: MAX_LIMIT_HORIZON,
            });
        }
        Ok((h as u64).max(self.n()))
    }

    /// The grid for grid-based kinds, with its default.
    pub fn grid(&self) -> Vec<u64> {
        if let Some(g) = &self.raw.grid {
            return g.clone();
        }
        match self.kind() {
            ExperimentKind::VerifySlln => (10..=20).map(|k| 1u64 << k).collect(),
            _ => {
                let n = self.n();
                (0..=5).rev().map(|k| n >> k).filter(|&x| x >= 2).collect()
            }
        }
    }
}

fn build_params(model: &ModelConfig, errors: &mut Vec<String>) -> Option<WalkParams> {
    let probs = model.p.is_some() || model.q.is_some() || model.r.is_some();
    let rates = model.alpha.is_some() || model.beta.is_some();
    let result = match (probs, rates) {
        (true, true) => {
            errors.push("model: give either p, q, r or alpha, beta, not both".into());
            return None;
        }
        (false, false) => {
            errors.push("model: one of p or alpha is required".into());
            return None;
        }
        (true, false) => {
            let Some(p) = model.p else {
                errors.push("model: p is required with q and r".into());
                return None;
            };
            let r = model.r.unwrap_or(0.0);
            let q = model.q.unwrap_or(1.0 - p - r);
            WalkParams::new(model.s, p, q, r)
        }
        (false, true) => {
            let Some(alpha) = model.alpha else {
                errors.push("model: alpha is required with beta".into());
                return None;
            };
            WalkParams::from_alpha_beta(model.s, alpha, model.beta.unwrap_or(1.0))
        }
    };
    match result {
        Ok(p) => Some(p),
        Err(Error::InvalidParams(list)) => {
            errors.extend(list.into_iter().map(|e| format!("model: {e}")));
            None
        }
        Err(e) => {
            errors.push(format!("model: {e}"));
            None
        }
    }
}

/// Largest `n` at which the schedule is consulted.
fn schedule_horizon(raw: &RawConfig) -> Option<u64> {
    let mut h = raw.n.unwrap_or(0);
    if let Some(g) = &raw.grid {
        h = h.max(g.iter().copied().max().unwrap_or(0));
    }
    if raw.experiment == ExperimentKind::CompareSettings {
        h = h.max(raw.limit_horizon.unwrap_or(0));
    }
    (h > 0).then_some(h)
}

/// Parses and validates a JSON experiment config, reporting every problem found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
    validate(raw)
}

pub fn validate(raw: RawConfig) -> Result<ExperimentConfig> {
    let mut errors = Vec::new();
    let kind = raw.experiment;
    let params = build_params(&raw.model, &mut errors);
    let schedule = match MemorySchedule::from_kind(raw.schedule.clone()) {
        Ok(s) => Some(s),
        Err(e) => {
            errors.push(format!("schedule: {e}"));
            None
        }
    };

    match (kind, raw.n) {
        (ExperimentKind::VerifySlln, Some(_)) => {
            errors.push("n: verify-slln takes a grid, not n".into())
        }
        (ExperimentKind::VerifySlln, None) => {}
        (_, None) => errors.push(format!("n: required for {}", kind.name())),
        (_, Some(0)) => errors.push("n: must be >= 1".into()),
        _ => {}
    }
    if let Some(grid) = &raw.grid {
        if !kind.uses_grid() {
            errors.push(format!("grid: not used by {}", kind.name()));
        } else if grid.is_empty() {
            errors.push("grid: must be nonempty".into());
        } else if grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] == 0 {
            errors.push("grid: must be positive and strictly increasing".into());
        } else if kind == ExperimentKind::VerifyClt && raw.n.is_some_and(|n| grid.iter().any(|&g| g > n)) {
            errors.push("grid: points must not exceed n".into());
        }
    }
    if raw.m.is_some() && kind != ExperimentKind::Exact {
        errors.push("m: only the exact kind accepts an explicit m".into());
    }
    if let (Some(m), Some(n)) = (raw.m, raw.n) {
        if m == 0 || m > n {
            errors.push(format!("m: condition 1 <= m_n <= n fails (m = {m}, n = {n})"));
        }
    }
    match raw.replications {
        Some(0) if kind.uses_replications() => {
            errors.push("replications: must be >= 1 (R = 0)".into())
        }
        None if kind.uses_replications() => {
            errors.push(format!("replications: required for {}", kind.name()))
        }
        Some(_) if !kind.uses_replications() => {
            errors.push("replications: not used by exact".into())
        }
        _ => {}
    }
    if let Some(h) = raw.limit_horizon {
        if h > MAX_LIMIT_HORIZON {
            errors.push(format!("limit_horizon: {h} exceeds the cap {MAX_LIMIT_HORIZON}"));
        }
        if raw.n.is_some_and(|n| h < n) {
            errors.push("limit_horizon: must be >= n".into());
        }
    }

    if let Some(schedule) = &schedule {
        if let Some(h) = schedule_horizon(&raw) {
            if raw.m.is_none() {
                match schedule.validate(h) {
                    Ok(report) => {
                        if let Some(v) = report.violations.first() {
                            errors.push(match v.m {
                                Some(m) => format!(
                                    "schedule: condition 1 <= m_n <= n fails at n = {} (m_n = {m})",
                                    v.n
                                ),
                                None => format!("schedule: table has no entry for n = {}", v.n),
                            });
                        }
                    }
                    Err(e) => errors.push(format!("schedule: {e}")),
                }
            }
        }
        let needs_growth = matches!(
            kind,
            ExperimentKind::VerifyClt
                | ExperimentKind::VerifySlln
                | ExperimentKind::VerifyStops
                | ExperimentKind::CompareSettings
        );
        if needs_growth && !schedule.is_builtin() {
            errors.push(format!(
                "schedule: {} needs m_n -> infinity, which only built-in schedules guarantee",
                kind.name()
            ));
        }
    }

    if let Some(params) = &params {
        match kind {
            ExperimentKind::VerifyClt if params.has_stops() => errors.push(
                "model: verify-clt covers the walk without stops (r = 0); use verify-stops".into(),
            ),
            ExperimentKind::VerifyStops if !params.has_stops() => {
                errors.push("model: verify-stops needs stops (r > 0)".into())
            }
            ExperimentKind::CompareSettings if params.has_stops() => errors.push(
                "model: the linear setting is defined without stops (r = 0)".into(),
            ),
            _ => {}
        }
        let centred = matches!(
            kind,
            ExperimentKind::VerifyClt | ExperimentKind::VerifyStops | ExperimentKind::CompareSettings
        );
        if centred && classify_regime(params) == Regime::Supercritical && raw.limit_horizon.is_none() {
            let exponent = params.alpha - params.beta / 2.0;
            if let (Some(n), Some(schedule)) = (raw.n, &schedule) {
                if let Ok(m) = schedule.m_of(n) {
                    let h = m as f64 * 0.1f64.powf(-1.0 / exponent);
                    if !(h <= MAX_LIMIT_HORIZON as f64) {
                        errors.push(format!(
                            "limit_horizon: the default N* = {h:.3e} exceeds the cap {MAX_LIMIT_HORIZON}; set limit_horizon"
                        ));
                    }
                }
            }
        }
    }

    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    Ok(ExperimentConfig {
        raw,
        params: params.expect("no errors"),
        schedule: schedule.expect("no errors"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(text: &str) -> Vec<String> {
        match parse_config(text) {
            Err(Error::Config(list)) => list,
            other => panic!("expected config errors, got {other:?}"),
        }
    }

    const MINIMAL: &str = r#"{
        "model": {"s": 0.5, "alpha": 0.25},
        "schedule": {"kind": "proportional", "gamma": 0.5},
        "experiment": "simulate",
        "n": 1024, "replications": 10, "seed": 1
    }"#;

    #[test]
    fn minimal_config() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.kind(), ExperimentKind::Simulate);
        assert_eq!(cfg.params.alpha, 0.25);
        assert_eq!(cfg.params.beta, 1.0);
        assert_eq!(cfg.raw.method, SamplingMethod::Collapsed);
        assert_eq!(cfg.memory().unwrap(), 512);
    }

    #[test]
    fn probability_sum_is_named() {
        let list = errors(
            r#"{"model": {"s": 1, "p": 0.5, "q": 0.2, "r": 0.2},
                "schedule": {"kind": "proportional", "gamma": 0.5},
                "experiment": "simulate", "n": 10, "replications": 5, "seed": 0}"#,
        );
        assert!(list.iter().any(|e| e.contains("p + q + r = 1")), "{list:?}");
    }

    #[test]
    fn table_violation_is_named() {
        let list = errors(
            r#"{"model": {"s": 1, "p": 0.75},
                "schedule": {"kind": "table", "values": [1, 1, 4], "declared_gamma": 0.5},
                "experiment": "simulate", "n": 3, "replications": 5, "seed": 0}"#,
        );
        assert!(list.iter().any(|e| e.contains("1 <= m_n <= n fails at n = 3")), "{list:?}");
    }

    #[test]
    fn zero_replications() {
        let text = MINIMAL.replace("\"replications\": 10", "\"replications\": 0");
        assert!(errors(&text).iter().any(|e| e.contains("R = 0")));
    }

    #[test]
    fn all_errors_reported() {
        let list = errors(
            r#"{"model": {"s": 2, "alpha": 0.25},
                "schedule": {"kind": "proportional", "gamma": 1.5},
                "experiment": "verify-stops", "replications": 0, "seed": 0}"#,
        );
        assert!(list.len() >= 4, "{list:?}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("\"seed\": 1", "\"seed\": 1, \"colour\": 3");
        assert!(errors(&text)[0].contains("colour"));
        let text = MINIMAL.replace("\"alpha\": 0.25", "\"alpha\": 0.25, \"gamma\": 1");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn hypotheses_checked() {
        let text = MINIMAL
            .replace("simulate", "verify-clt")
            .replace(r#"{"kind": "proportional", "gamma": 0.5}"#, r#"{"kind": "table", "values": [1], "declared_gamma": 1}"#)
            .replace("1024", "1");
        assert!(errors(&text).iter().any(|e| e.contains("m_n -> infinity")));
        let text = MINIMAL.replace("simulate", "verify-stops");
        assert!(errors(&text).iter().any(|e| e.contains("r > 0")));
        let text = MINIMAL.replace("simulate", "exact").replace(", \"replications\": 10", ", \"m\": 2000");
        assert!(errors(&text).iter().any(|e| e.contains("1 <= m_n <= n")));
    }

    #[test]
    fn default_limit_horizon() {
        let text = MINIMAL.replace("0.25", "0.9").replace("simulate", "verify-clt");
        let cfg = parse_config(&text).unwrap();
        let h = cfg.limit_horizon().unwrap();
        assert!((h as f64 / (512.0 * 10f64.powf(2.5)) - 1.0).abs() < 1e-5);
        let text = MINIMAL.replace("0.25", "0.55").replace("simulate", "verify-clt");
        assert!(errors(&text).iter().any(|e| e.contains("limit_horizon")));
    }

    #[test]
    fn default_grids() {
        let text = MINIMAL.replace("simulate", "verify-clt").replace("1024", "8192");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.grid(), vec![256, 512, 1024, 2048, 4096, 8192]);
    }
}
