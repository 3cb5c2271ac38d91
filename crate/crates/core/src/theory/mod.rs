//! Closed-form predictions for the triangular process.
//!
//! The regime is set by the sign of `2α − β`: subcritical below zero,
//! critical at zero, supercritical above (`β = 1` without stops). All limit
//! variances below use a single formula family in which `β = 1` recovers the
//! case without stops.

mod moments;

use std::fmt;

use num_rational::Ratio;
use serde::Serialize;

pub use statrs::function::gamma::{gamma as gamma_fn, ln_gamma};
pub use moments::{moment_recursions, row_moments, MomentSequences, RowMoments};

use crate::walk::WalkParams;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
        })
    }
}

/// Compares `2α` with `β`, exactly when both came from short decimals.
pub fn classify_regime(params: &WalkParams) -> Regime {
    let ordering = match params.exact_rates() {
        Some((alpha, beta)) => (alpha * Ratio::from_integer(2)).cmp(&beta),
        None => (2.0 * params.alpha)
            .partial_cmp(&params.beta)
            .expect("validated parameters are finite"),
    };
    match ordering {
        std::cmp::Ordering::Less => Regime::Subcritical,
        std::cmp::Ordering::Equal => Regime::Critical,
        std::cmp::Ordering::Greater => Regime::Supercritical,
    }
}

/// `γ_n + x (1 − γ_n)`: the weight of the remembered prefix in `γ_n T_n`.
///
/// With `x = α` it scales the conditional mean; with `x = β` the
/// conditional move count.
pub fn memory_factor(gamma_n: f64, x: f64) -> f64 {
    gamma_n + x * (1.0 - gamma_n)
}

/// Scale dividing `γ_n T_n` (or its centred residual) in a limit theorem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Normalization {
    #[serde(rename = "sqrt(m_n)")]
    SqrtMemory,
    #[serde(rename = "sqrt(m_n log m_n)")]
    SqrtMemoryLog,
    #[serde(rename = "sqrt(Sigma_m)")]
    SqrtMoves,
    #[serde(rename = "sqrt(Sigma_m log Sigma_m)")]
    SqrtMovesLog,
}

impl Normalization {
    /// The scale for a row with memory `m` and base move count `sigma_m`.
    pub fn scale(&self, m: u64, sigma_m: u64) -> f64 {
        let m = m as f64;
        let s = sigma_m as f64;
        match self {
            Normalization::SqrtMemory => m.sqrt(),
            Normalization::SqrtMemoryLog => (m * m.ln()).sqrt(),
            Normalization::SqrtMoves => s.sqrt(),
            Normalization::SqrtMovesLog => (s * s.ln()).sqrt(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Centering {
    #[serde(rename = "none")]
    None,
    /// Subtract `M · c_n · m_n^α` with `M` the almost-sure limit of `W_n / n^α`.
    #[serde(rename = "M*c_n*m_n^alpha")]
    LimitTimesMemoryFactor,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoryPrediction {
    pub regime: Regime,
    pub normalization: Normalization,
    pub variance: f64,
    pub centering: Centering,
    /// Human-readable statement of the limit being targeted.
    pub formula: &'static str,
}

/// Limit law of the normalised (and, when supercritical, centred) `γ_n T_n`.
pub fn limit_prediction(params: &WalkParams, gamma: f64) -> Result<TheoryPrediction> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::arg(format!("gamma must lie in [0, 1] (gamma = {gamma})")));
    }
    let (alpha, beta) = (params.alpha, params.beta);
    let c = memory_factor(gamma, alpha);
    let spread = beta * gamma * (1.0 - gamma);
    let stops = params.has_stops();
    let regime = classify_regime(params);
    let prediction = match (regime, stops) {
        (Regime::Subcritical, false) => TheoryPrediction {
            regime,
            normalization: Normalization::SqrtMemory,
            variance: c * c / (1.0 - 2.0 * alpha) + spread,
            centering: Centering::None,
            formula: "gamma_n T_n / sqrt(m_n) -> N(0, (gamma + alpha(1-gamma))^2/(1-2 alpha) + gamma(1-gamma))",
        },
        (Regime::Critical, false) => TheoryPrediction {
            regime,
            normalization: Normalization::SqrtMemoryLog,
            variance: (1.0 + gamma) * (1.0 + gamma) / 4.0,
            centering: Centering::None,
            formula: "gamma_n T_n / sqrt(m_n log m_n) -> N(0, (1 + gamma)^2/4)",
        },
        (Regime::Supercritical, false) => TheoryPrediction {
            regime,
            normalization: Normalization::SqrtMemory,
            variance: c * c / (2.0 * alpha - 1.0) + spread,
            centering: Centering::LimitTimesMemoryFactor,
            formula: "(gamma_n T_n - M c_n m_n^alpha) / sqrt(m_n) -> N(0, (gamma + alpha(1-gamma))^2/(2 alpha - 1) + gamma(1-gamma))",
        },
        (Regime::Subcritical, true) => TheoryPrediction {
            regime,
            normalization: Normalization::SqrtMoves,
            variance: beta * c * c / (beta - 2.0 * alpha) + spread,
            centering: Centering::None,
            formula: "gamma_n T_n / sqrt(Sigma_m) -> N(0, beta (gamma + alpha(1-gamma))^2/(beta - 2 alpha) + beta gamma(1-gamma))",
        },
        (Regime::Critical, true) => {
            let weight = gamma + beta * (1.0 - gamma) / 2.0;
            TheoryPrediction {
                regime,
                normalization: Normalization::SqrtMovesLog,
                variance: weight * weight,
                centering: Centering::None,
                formula: "gamma_n T_n / sqrt(Sigma_m log Sigma_m) -> N(0, (gamma + beta(1-gamma)/2)^2)",
            }
        }
        (Regime::Supercritical, true) => TheoryPrediction {
            regime,
            normalization: Normalization::SqrtMoves,
            variance: beta * c * c / (2.0 * alpha - beta) + spread,
            centering: Centering::LimitTimesMemoryFactor,
            formula: "(gamma_n T_n - M c_n m_n^alpha) / sqrt(Sigma_m) -> N(0, beta (gamma + alpha(1-gamma))^2/(2 alpha - beta) + beta gamma(1-gamma))",
        },
    };
    Ok(prediction)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticConstants {
    /// `lim E[W_n] / n^α = (2s − 1) / Γ(1 + α)`, the mean of the limit `M`
    /// when supercritical.
    pub mean_limit: f64,
    /// `lim E[Σ_n] / n^β = 1 / Γ(1 + β)`.
    pub mean_moves_limit: f64,
    /// `lim E[W_n^2] / n^{2α} = 1 / ((2α − β) Γ(2α))`, when `2α > β`.
    pub second_moment_constant: Option<f64>,
}

pub fn asymptotic_constants(params: &WalkParams) -> AsymptoticConstants {
    let (alpha, beta) = (params.alpha, params.beta);
    let second_moment_constant = (classify_regime(params) == Regime::Supercritical)
        .then(|| 1.0 / ((2.0 * alpha - beta) * gamma_fn(2.0 * alpha)));
    AsymptoticConstants {
        mean_limit: (2.0 * params.s - 1.0) / gamma_fn(1.0 + alpha),
        mean_moves_limit: 1.0 / gamma_fn(1.0 + beta),
        second_moment_constant,
    }
}
