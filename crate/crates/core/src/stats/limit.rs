use serde::Serialize;

use crate::theory::{classify_regime, Regime};
use crate::walk::{Trajectory, WalkParams};
use crate::{Error, Result};

/// Per-path estimate of the almost-sure limit `M = lim W_n / n^α`.
///
/// Using `M̂` in place of `M` when centring a row with memory `m` leaves a
/// relative contamination of order `(m / N*)^{α − 1/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub m_hat: f64,
    pub horizon: u64,
    #[serde(skip)]
    pub params: WalkParams,
}

/// `M̂ = W_{N*} / (N*)^α` on `path`.
pub fn estimate_limit_m(path: &Trajectory, params: &WalkParams, horizon: u64) -> Result<LimitEstimate> {
    if classify_regime(params) != Regime::Supercritical {
        return Err(Error::arg(format!(
            "the limit M exists only in the supercritical regime (2 alpha > beta; alpha = {}, beta = {})",
            params.alpha, params.beta
        )));
    }
    if horizon == 0 || horizon as usize > path.len() {
        return Err(Error::arg(format!(
            "horizon {horizon} must lie in 1..={} (path length)",
            path.len()
        )));
    }
    let w = path.position(horizon as usize) as f64;
    Ok(LimitEstimate {
        m_hat: w / (horizon as f64).powf(params.alpha),
        horizon,
        params: *params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{par_replicate, StreamKey};
    use crate::stats::summarize;
    use crate::theory::asymptotic_constants;
    use crate::walk::simulate_base_walk;

    #[test]
    fn formula_on_a_path() {
        let params = WalkParams::from_alpha_beta(1.0, 0.9, 1.0).unwrap();
        let path = Trajectory::from_steps(&[1, 1, -1, 1, 1, 1, 1, -1, 1, 1]).unwrap();
        let est = estimate_limit_m(&path, &params, 10).unwrap();
        assert!((est.m_hat - 6.0 / 10f64.powf(0.9)).abs() < 1e-15);
        assert!(estimate_limit_m(&path, &params, 11).is_err());
        let sub = WalkParams::standard(1.0, 0.6).unwrap();
        assert!(estimate_limit_m(&path, &sub, 10).is_err());
    }

    #[test]
    fn mean_matches_limit_constant() {
        let params = WalkParams::standard(1.0, 0.9).unwrap();
        let horizon = 10_000u64;
        let m_hats = par_replicate(10_000, StreamKey::new(2024), |_, key| {
            let path = simulate_base_walk(&params, horizon as usize, key).unwrap();
            estimate_limit_m(&path, &params, horizon).unwrap().m_hat
        });
        let s = summarize(&m_hats).unwrap();
        let target = asymptotic_constants(&params).mean_limit;
        assert!((s.mean - target).abs() < 4.0 * s.se_mean(), "{} vs {target}", s.mean);
    }

    #[test]
    fn estimates_settle_with_horizon() {
        let params = WalkParams::standard(1.0, 0.9).unwrap();
        let mut gaps: Vec<(f64, f64)> = par_replicate(301, StreamKey::new(77), |_, key| {
            let path = simulate_base_walk(&params, 64_000, key).unwrap();
            let last = estimate_limit_m(&path, &params, 64_000).unwrap().m_hat;
            let early = estimate_limit_m(&path, &params, 1_000).unwrap().m_hat;
            let late = estimate_limit_m(&path, &params, 16_000).unwrap().m_hat;
            ((early - last).abs(), (late - last).abs())
        });
        let median = |v: &mut Vec<f64>| {
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        };
        let mut early: Vec<f64> = gaps.iter().map(|g| g.0).collect();
        let mut late: Vec<f64> = gaps.drain(..).map(|g| g.1).collect();
        assert!(median(&mut late) < median(&mut early));
    }
}
