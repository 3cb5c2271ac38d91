//! Exact moment recursions of the base walk and the row moments they imply.
//!
//! From the one-step law,
//!
//! ```text
//! E[W_{n+1}]   = (1 + α/n) E[W_n]
//! E[W_{n+1}^2] = (1 + 2α/n) E[W_n^2] + β E[Σ_n]/n
//! E[Σ_{n+1}]   = (1 + β/n) E[Σ_n]
//! ```
//!
//! with `E[W_1] = 2s − 1` and `E[W_1^2] = E[Σ_1] = 1`.

use serde::Serialize;

use crate::walk::WalkParams;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MomentSequences {
    mean_w: Vec<f64>,
    mean_w2: Vec<f64>,
    mean_sigma: Vec<f64>,
}

pub fn moment_recursions(params: &WalkParams, horizon: u64) -> Result<MomentSequences> {
    if horizon == 0 {
        return Err(Error::arg("horizon must be >= 1"));
    }
    let len = horizon as usize;
    let mut mean_w = Vec::with_capacity(len);
    let mut mean_w2 = Vec::with_capacity(len);
    let mut mean_sigma = Vec::with_capacity(len);
    let (mut w, mut w2, mut sigma) = (2.0 * params.s - 1.0, 1.0, 1.0);
    for n in 1..=horizon {
        mean_w.push(w);
        mean_w2.push(w2);
        mean_sigma.push(sigma);
        let nf = n as f64;
        w *= 1.0 + params.alpha / nf;
        w2 = w2 * (1.0 + 2.0 * params.alpha / nf) + params.beta * sigma / nf;
        sigma *= 1.0 + params.beta / nf;
    }
    Ok(MomentSequences {
        mean_w,
        mean_w2,
        mean_sigma,
    })
}

impl MomentSequences {
    pub fn horizon(&self) -> u64 {
        self.mean_w.len() as u64
    }

    fn index(&self, n: u64) -> usize {
        assert!(
            n >= 1 && n <= self.horizon(),
            "moment index {n} outside 1..={}",
            self.horizon()
        );
        (n - 1) as usize
    }

    /// `E[W_n]`.
    pub fn mean_w(&self, n: u64) -> f64 {
        self.mean_w[self.index(n)]
    }

    /// `E[W_n^2]`.
    pub fn mean_w2(&self, n: u64) -> f64 {
        self.mean_w2[self.index(n)]
    }

    /// `E[Σ_n]`.
    pub fn mean_sigma(&self, n: u64) -> f64 {
        self.mean_sigma[self.index(n)]
    }

    pub fn var_w(&self, n: u64) -> f64 {
        let m = self.mean_w(n);
        self.mean_w2(n) - m * m
    }
}

/// Exact unconditional moments of row `n` with memory `m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RowMoments {
    pub mean_t: f64,
    pub var_t: f64,
    /// `E[B_n^2] = E[Var[B_n | base]]`.
    pub mean_b2: f64,
    pub mean_xi: f64,
}

/// Row moments by the tower rule over the conditional moments at `m`.
///
/// `T = A + B` with `A = k W_m`, `k = 1 + α(n − m)/m`, and `B` conditionally
/// centred, so `Var T = k² Var W_m + E[Var(B | base)]`.
pub fn row_moments(params: &WalkParams, n: u64, m: u64, seq: &MomentSequences) -> Result<RowMoments> {
    if m == 0 || m > n {
        return Err(Error::arg(format!("row needs 1 <= m <= n (m = {m}, n = {n})")));
    }
    if m > seq.horizon() {
        return Err(Error::arg(format!(
            "moment sequences stop at {} but m = {m}",
            seq.horizon()
        )));
    }
    let mf = m as f64;
    let array_len = (n - m) as f64;
    let k = 1.0 + params.alpha * array_len / mf;
    let mean_b2 = array_len
        * (params.beta * seq.mean_sigma(m) / mf - params.alpha * params.alpha * seq.mean_w2(m) / (mf * mf));
    Ok(RowMoments {
        mean_t: k * seq.mean_w(m),
        var_t: k * k * seq.var_w(m) + mean_b2,
        mean_b2,
        mean_xi: seq.mean_sigma(m) * (1.0 + params.beta * array_len / mf),
    })
}
