//! Memory schedules `n ↦ m_n` with their ratio `γ_n = m_n / n`.

use serde::{Deserialize, Serialize};

use crate::exact::{self, Rational};
use crate::{Error, Result};

/// Schedule shapes, as written in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScheduleKind {
    /// `m_n = ⌈γ n⌉`.
    Proportional { gamma: f64 },
    /// `m_n = ⌈n^θ⌉`.
    Power { theta: f64 },
    /// `m_n = max(1, ⌈n / ln(n + 1)⌉)`, capped at `n`.
    SublinearLog,
    /// `m_n = values[n − 1]`.
    Table { values: Vec<u64>, declared_gamma: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemorySchedule {
    kind: ScheduleKind,
    declared_gamma: f64,
    exact_gamma: Option<Rational>,
}

/// A failure of `1 <= m_n <= n`, or a table index with no entry (`m = None`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub n: u64,
    pub m: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScheduleReport {
    /// `γ_1, …, γ_N` (NaN where `m_n` is undefined).
    pub gamma_n: Vec<f64>,
    /// `sup |γ_n − declared γ|` over `n ∈ [N/2, N]`.
    pub max_gamma_deviation: f64,
    pub violations: Vec<Violation>,
}

/// Ceiling that forgives floating-point noise around an integer.
fn snapped_ceil(x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.ceil()
    }
}

/// `⌈n a / b⌉` for a positive fraction, in integers.
fn ceil_ratio(n: u64, a: i128, b: i128) -> u64 {
    if let (Ok(a), Ok(b)) = (u64::try_from(a), u64::try_from(b)) {
        if let Some(na) = n.checked_mul(a) {
            return na.div_ceil(b);
        }
    }
    let na = n as i128 * a;
    ((na + b - 1) / b) as u64
}

impl MemorySchedule {
    pub fn from_kind(kind: ScheduleKind) -> Result<Self> {
        let (declared_gamma, exact_gamma) = match &kind {
            ScheduleKind::Proportional { gamma } => {
                if !(*gamma > 0.0 && *gamma <= 1.0) {
                    return Err(Error::Schedule(format!(
                        "proportional schedule needs gamma in (0, 1] (gamma = {gamma})"
                    )));
                }
                (*gamma, exact::decimal(*gamma))
            }
            ScheduleKind::Power { theta } => {
                if !(*theta > 0.0 && *theta < 1.0) {
                    return Err(Error::Schedule(format!(
                        "power schedule needs theta in (0, 1) (theta = {theta})"
                    )));
                }
                (0.0, None)
            }
            ScheduleKind::SublinearLog => (0.0, None),
            ScheduleKind::Table {
                values,
                declared_gamma,
            } => {
                if values.is_empty() {
                    return Err(Error::Schedule("table schedule is empty".into()));
                }
                if !(0.0..=1.0).contains(declared_gamma) {
                    return Err(Error::Schedule(format!(
                        "declared_gamma must lie in [0, 1] (declared_gamma = {declared_gamma})"
                    )));
                }
                (*declared_gamma, None)
            }
        };
        Ok(MemorySchedule {
            kind,
            declared_gamma,
            exact_gamma,
        })
    }

    pub fn proportional(gamma: f64) -> Result<Self> {
        Self::from_kind(ScheduleKind::Proportional { gamma })
    }

    pub fn power(theta: f64) -> Result<Self> {
        Self::from_kind(ScheduleKind::Power { theta })
    }

    pub fn sublinear_log() -> Self {
        Self::from_kind(ScheduleKind::SublinearLog).expect("no parameters to validate")
    }

    pub fn table(values: Vec<u64>, declared_gamma: f64) -> Result<Self> {
        Self::from_kind(ScheduleKind::Table {
            values,
            declared_gamma,
        })
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    /// The limit `γ` the schedule claims; a hypothesis, not a measurement.
    pub fn declared_gamma(&self) -> f64 {
        self.declared_gamma
    }

    /// Built-in kinds satisfy `m_n → ∞` and `γ_n → declared γ` by construction.
    pub fn is_builtin(&self) -> bool {
        !matches!(self.kind, ScheduleKind::Table { .. })
    }

    /// The entry for `n` without range checking (tables only may violate it).
    fn raw_m(&self, n: u64) -> Result<u64> {
        let nf = n as f64;
        let m = match &self.kind {
            ScheduleKind::Proportional { gamma } => match self.exact_gamma {
                Some(g) => ceil_ratio(n, *g.numer(), *g.denom()),
                None => snapped_ceil(gamma * nf) as u64,
            },
            ScheduleKind::Power { theta } => snapped_ceil(nf.powf(*theta)) as u64,
            ScheduleKind::SublinearLog => snapped_ceil(nf / (nf + 1.0).ln()) as u64,
            ScheduleKind::Table { values, .. } => {
                return values.get((n - 1) as usize).copied().ok_or_else(|| {
                    Error::Schedule(format!(
                        "table schedule has no entry for n = {n} (length {})",
                        values.len()
                    ))
                });
            }
        };
        Ok(m.clamp(1, n))
    }

    /// `m_n`, guaranteed to satisfy `1 <= m_n <= n`.
    pub fn m_of(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::arg("schedule index n must be >= 1"));
        }
        let m = self.raw_m(n)?;
        if m == 0 || m > n {
            return Err(Error::Schedule(format!(
                "condition 1 <= m_n <= n fails at n = {n} (m_n = {m})"
            )));
        }
        Ok(m)
    }

    pub fn gamma_of(&self, n: u64) -> Result<f64> {
        Ok(self.m_of(n)? as f64 / n as f64)
    }

    /// Checks `1 <= m_n <= n` for every `n <= horizon` and measures how far
    /// `γ_n` strays from the declared limit on the upper half of the range.
    pub fn validate(&self, horizon: u64) -> Result<ScheduleReport> {
        if horizon == 0 {
            return Err(Error::arg("validation horizon must be >= 1"));
        }
        let lower = (horizon / 2).max(1);
        let mut gamma_n = Vec::with_capacity(horizon as usize);
        let mut violations = Vec::new();
        let mut max_gamma_deviation: f64 = 0.0;
        for n in 1..=horizon {
            match self.raw_m(n) {
                Ok(m) => {
                    if m == 0 || m > n {
                        violations.push(Violation { n, m: Some(m) });
                    }
                    let g = m as f64 / n as f64;
                    gamma_n.push(g);
                    if n >= lower {
                        max_gamma_deviation = max_gamma_deviation.max((g - self.declared_gamma).abs());
                    }
                }
                Err(_) => {
                    violations.push(Violation { n, m: None });
                    gamma_n.push(f64::NAN);
                }
            }
        }
        Ok(ScheduleReport {
            gamma_n,
            max_gamma_deviation,
            violations,
        })
    }
}
