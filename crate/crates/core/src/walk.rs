//! The base elephant random walk, standard and with stops.
//!
//! A walk is driven by its one-step conditional law rather than by explicit
//! uniform memory indices: given `(n, W_n, Σ_n)` the next step is `+1`, `-1`
//! or `0` with probabilities
//!
//! ```text
//! (β Σ_n / n + α W_n / n) / 2,   (β Σ_n / n − α W_n / n) / 2,   1 − β Σ_n / n
//! ```
//!
//! which has the same law as copying (prob. `p`), flipping (prob. `q`) or
//! skipping (prob. `r`) a uniformly remembered past step.

use rand::Rng;
use serde::Serialize;

use crate::exact::{self, Rational};
use crate::rng::{StreamKey, StreamRng};
use crate::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-12;

/// Model parameters `(s, p, q, r)` with derived `α = p − q`, `β = 1 − r`.
///
/// The first step is always `±1` (`+1` with probability `s`); only later
/// steps may be `0`. With `r = 0` this is the standard ERW and `p` must lie
/// strictly inside `(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WalkParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(skip)]
    exact: Option<(Rational, Rational)>,
}

impl WalkParams {
    /// Parameters from step-copy / step-flip / stop probabilities.
    pub fn new(s: f64, p: f64, q: f64, r: f64) -> Result<Self> {
        let mut problems = Vec::new();
        check_unit("s", s, &mut problems);
        for (name, v) in [("p", p), ("q", q), ("r", r)] {
            if !(v >= 0.0) {
                problems.push(format!("{name} >= 0 violated ({name} = {v})"));
            }
        }
        let total = p + q + r;
        if !((total - 1.0).abs() <= SUM_TOLERANCE) {
            problems.push(format!("p + q + r = 1 violated (p + q + r = {total})"));
        }
        if !(r < 1.0) {
            problems.push(format!("r in [0, 1) violated (r = {r})"));
        }
        if r == 0.0 && !(p > 0.0 && p < 1.0) {
            problems.push(format!(
                "standard walk (r = 0) requires p in (0, 1) (p = {p})"
            ));
        }
        if !problems.is_empty() {
            return Err(Error::InvalidParams(problems));
        }
        let exact = match (exact::decimal(p), exact::decimal(q), exact::decimal(r)) {
            (Some(p), Some(q), Some(r)) => Some((p - q, Rational::from_integer(1) - r)),
            _ => None,
        };
        Ok(WalkParams {
            s,
            p,
            q,
            r,
            alpha: p - q,
            beta: 1.0 - r,
            exact,
        })
    }

    /// Standard ERW (`r = 0`, `q = 1 − p`).
    pub fn standard(s: f64, p: f64) -> Result<Self> {
        let mut params = Self::new(s, p, 1.0 - p, 0.0)?;
        // α = 2p − 1 exactly, rather than p − (1 − p) in floating point.
        params.alpha = 2.0 * p - 1.0;
        if let Some(p) = exact::decimal(p) {
            params.exact = Some((p * 2 - 1, Rational::from_integer(1)));
        }
        Ok(params)
    }

    /// Parameters from `(s, α, β)` via `p = (β + α)/2`, `q = (β − α)/2`, `r = 1 − β`.
    pub fn from_alpha_beta(s: f64, alpha: f64, beta: f64) -> Result<Self> {
        let mut problems = Vec::new();
        check_unit("s", s, &mut problems);
        if !(beta > 0.0 && beta <= 1.0) {
            problems.push(format!("beta in (0, 1] violated (beta = {beta})"));
        } else if !(alpha.abs() <= beta) {
            problems.push(format!(
                "alpha in [-beta, beta] violated (alpha = {alpha}, beta = {beta})"
            ));
        } else if beta == 1.0 && alpha.abs() == 1.0 {
            problems.push(format!(
                "standard walk (beta = 1) requires alpha in (-1, 1) (alpha = {alpha})"
            ));
        }
        if !problems.is_empty() {
            return Err(Error::InvalidParams(problems));
        }
        let exact = match (exact::decimal(alpha), exact::decimal(beta)) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        };
        Ok(WalkParams {
            s,
            p: 0.5 * (beta + alpha),
            q: 0.5 * (beta - alpha),
            r: 1.0 - beta,
            alpha,
            beta,
            exact,
        })
    }

    pub fn has_stops(&self) -> bool {
        self.r > 0.0
    }

    /// Exact `(α, β)` when every input was a short decimal.
    pub(crate) fn exact_rates(&self) -> Option<(Rational, Rational)> {
        self.exact
    }

    /// Conditional law of the next step without state validation.
    #[inline]
    pub(crate) fn law_at(&self, n: u64, w: i64, sigma: u64) -> StepLaw {
        let n = n as f64;
        let move_rate = self.beta * sigma as f64;
        let drift = self.alpha * w as f64;
        let p_up = ((move_rate + drift) / (2.0 * n)).clamp(0.0, 1.0);
        let p_down = ((move_rate - drift) / (2.0 * n)).clamp(0.0, 1.0);
        let p_stay = ((n - move_rate) / n).clamp(0.0, 1.0);
        StepLaw {
            p_up,
            p_down,
            p_stay,
        }
    }
}

fn check_unit(name: &str, v: f64, problems: &mut Vec<String>) {
    if !(0.0..=1.0).contains(&v) {
        problems.push(format!("{name} in [0, 1] violated ({name} = {v})"));
    }
}

/// Probabilities of `+1`, `−1` and `0` for the next step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepLaw {
    pub p_up: f64,
    pub p_down: f64,
    pub p_stay: f64,
}

impl StepLaw {
    /// Maps a uniform draw on `[0, 1)` to a step.
    #[inline]
    pub fn step_for(&self, u: f64) -> i8 {
        if u < self.p_up {
            1
        } else if u < self.p_up + self.p_down {
            -1
        } else if self.p_stay > 0.0 {
            0
        } else {
            // u within rounding of 1 with p_stay = 0.
            -1
        }
    }

    #[inline]
    pub fn mean(&self) -> f64 {
        self.p_up - self.p_down
    }

    #[inline]
    pub fn move_prob(&self) -> f64 {
        self.p_up + self.p_down
    }
}

/// Checks that `(w, sigma)` is a reachable state at time `n`.
pub(crate) fn check_state(n: u64, w: i64, sigma: u64, params: &WalkParams) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidState("time index must be >= 1".into()));
    }
    if sigma == 0 || sigma > n {
        return Err(Error::InvalidState(format!(
            "move count must satisfy 1 <= Sigma <= n (Sigma = {sigma}, n = {n})"
        )));
    }
    if w.unsigned_abs() > sigma {
        return Err(Error::InvalidState(format!(
            "position must satisfy |W| <= Sigma (W = {w}, Sigma = {sigma})"
        )));
    }
    if !(w.unsigned_abs() + sigma).is_multiple_of(2) {
        return Err(Error::InvalidState(format!(
            "position and move count must share parity (W = {w}, Sigma = {sigma})"
        )));
    }
    if !params.has_stops() && sigma != n {
        return Err(Error::InvalidState(format!(
            "without stops every step moves, so Sigma = n (Sigma = {sigma}, n = {n})"
        )));
    }
    Ok(())
}

/// Conditional law of step `n + 1` given `W_n = w` and `Σ_n = sigma`.
pub fn step_distribution(n: u64, w: i64, sigma: u64, params: &WalkParams) -> Result<StepLaw> {
    check_state(n, w, sigma, params)?;
    Ok(params.law_at(n, w, sigma))
}

/// A base-walk path of length `N`.
///
/// `positions` and `moves` carry `N + 1` entries with `W_0 = Σ_0 = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    steps: Vec<i8>,
    positions: Vec<i64>,
    moves: Vec<u64>,
}

impl Trajectory {
    pub(crate) fn with_capacity(n: usize) -> Self {
        let mut positions = Vec::with_capacity(n + 1);
        let mut moves = Vec::with_capacity(n + 1);
        positions.push(0);
        moves.push(0);
        Trajectory {
            steps: Vec::with_capacity(n),
            positions,
            moves,
        }
    }

    /// Builds a trajectory from explicit steps, checking each is in `{-1, 0, 1}`.
    pub fn from_steps(steps: &[i8]) -> Result<Self> {
        let mut traj = Self::with_capacity(steps.len());
        for &x in steps {
            if !(-1..=1).contains(&x) {
                return Err(Error::arg(format!("step {x} not in {{-1, 0, 1}}")));
            }
            traj.push(x);
        }
        Ok(traj)
    }

    #[inline]
    pub(crate) fn push(&mut self, x: i8) {
        let w = self.positions[self.steps.len()] + x as i64;
        let sigma = self.moves[self.steps.len()] + (x != 0) as u64;
        self.steps.push(x);
        self.positions.push(w);
        self.moves.push(sigma);
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[i8] {
        &self.steps
    }

    /// `W_0, …, W_N`.
    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    /// `Σ_0, …, Σ_N`.
    pub fn moves(&self) -> &[u64] {
        &self.moves
    }

    /// `W_k`, for `0 <= k <= N`.
    pub fn position(&self, k: usize) -> i64 {
        self.positions[k]
    }

    /// `Σ_k`, for `0 <= k <= N`.
    pub fn move_count(&self, k: usize) -> u64 {
        self.moves[k]
    }

    /// Verifies the path invariants, returning the first violation found.
    pub fn check_invariants(&self, stops_allowed: bool) -> Result<(), String> {
        if self.positions.first() != Some(&0) || self.moves.first() != Some(&0) {
            return Err("W_0 and Sigma_0 must be 0".into());
        }
        if let Some(&first) = self.steps.first() {
            if first == 0 {
                return Err("first step must be +1 or -1".into());
            }
        }
        for (i, &x) in self.steps.iter().enumerate() {
            let k = i + 1;
            if self.positions[k] - self.positions[k - 1] != x as i64 {
                return Err(format!("W_{k} - W_{} != X_{k}", k - 1));
            }
            if self.moves[k] - self.moves[k - 1] != (x * x) as u64 {
                return Err(format!("Sigma_{k} - Sigma_{} != X_{k}^2", k - 1));
            }
            let (w, sigma) = (self.positions[k], self.moves[k]);
            if w.unsigned_abs() > sigma || sigma > k as u64 {
                return Err(format!("|W_{k}| <= Sigma_{k} <= {k} violated"));
            }
            if !stops_allowed && (x == 0 || sigma != k as u64) {
                return Err(format!("step {k} is a stop in a walk without stops"));
            }
        }
        Ok(())
    }

    fn advance(&mut self, params: &WalkParams, horizon: usize, rng: &mut StreamRng) {
        if horizon == 0 {
            return;
        }
        self.steps.reserve(horizon.saturating_sub(self.len()));
        if self.is_empty() {
            let x = if rng.random::<f64>() < params.s { 1 } else { -1 };
            self.push(x);
        }
        while self.len() < horizon {
            let k = self.len();
            let law = params.law_at(k as u64, self.positions[k], self.moves[k]);
            self.push(law.step_for(rng.random::<f64>()));
        }
    }
}

/// Simulates `X_1, …, X_N` of the base walk from stream `key`.
pub fn simulate_base_walk(params: &WalkParams, horizon: usize, key: StreamKey) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(Error::arg("horizon must be >= 1"));
    }
    let mut traj = Trajectory::with_capacity(horizon);
    traj.advance(params, horizon, &mut key.rng());
    Ok(traj)
}

/// Continues `traj` up to `horizon` with fresh randomness from `key`.
///
/// The first `traj.len()` steps are kept as they are.
pub fn extend_base_walk(
    traj: &Trajectory,
    params: &WalkParams,
    horizon: usize,
    key: StreamKey,
) -> Result<Trajectory> {
    if horizon < traj.len() {
        return Err(Error::arg(format!(
            "new horizon {horizon} is shorter than the trajectory ({})",
            traj.len()
        )));
    }
    let mut out = traj.clone();
    out.advance(params, horizon, &mut key.rng());
    Ok(out)
}

/// The state `(W_N, Σ_N)` reached by continuing `traj` up to `horizon`.
///
/// Consumes the same random numbers as [`extend_base_walk`] with the same
/// key, so the endpoint agrees with that extended path, but keeps no history.
pub fn extend_endpoint(
    traj: &Trajectory,
    params: &WalkParams,
    horizon: usize,
    key: StreamKey,
) -> Result<(i64, u64)> {
    if traj.is_empty() || horizon < traj.len() {
        return Err(Error::arg(format!(
            "need a nonempty trajectory no longer than the horizon {horizon} (length {})",
            traj.len()
        )));
    }
    let mut rng = key.rng();
    let mut k = traj.len();
    let (mut w, mut sigma) = (traj.position(k), traj.move_count(k));
    while k < horizon {
        let x = params.law_at(k as u64, w, sigma).step_for(rng.random::<f64>());
        w += x as i64;
        sigma += (x != 0) as u64;
        k += 1;
    }
    Ok((w, sigma))
}
