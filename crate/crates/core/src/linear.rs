//! The linear-setting walk `W'_n`.
//!
//! A single path whose step `n + 1` copies or flips a uniformly chosen step
//! among its own first `m_n`. Unlike the triangular rows, every step
//! remembers the same path, so the two processes differ in law even though
//! one-step conditional laws look alike.

use rand::Rng;

use crate::rng::StreamKey;
use crate::schedule::MemorySchedule;
use crate::walk::{Trajectory, WalkParams};
use crate::{Error, Result};

/// Simulates `Z_1, …, Z_N` using
/// `P(Z_{n+1} = +1 | past) = (1 + α W'_{m_n} / m_n) / 2`.
pub fn simulate_linear_walk(
    params: &WalkParams,
    schedule: &MemorySchedule,
    horizon: usize,
    key: StreamKey,
) -> Result<Trajectory> {
    if params.has_stops() {
        return Err(Error::arg("the linear setting is defined without stops (r must be 0)"));
    }
    if horizon == 0 {
        return Err(Error::arg("horizon must be >= 1"));
    }
    let mut rng = key.rng();
    let mut path = Trajectory::with_capacity(horizon);
    path.push(if rng.random::<f64>() < params.s { 1 } else { -1 });
    for n in 1..horizon as u64 {
        let m = schedule.m_of(n)?;
        // Prefix W'_{m_n} of this same path; m_n <= n so it is already known.
        let remembered = path.position(m as usize);
        let law = params.law_at(m, remembered, m);
        path.push(law.step_for(rng.random::<f64>()));
    }
    Ok(path)
}
