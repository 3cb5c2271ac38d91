//! Exact finite-`n` distributions by dynamic programming.
//!
//! The base walk is propagated forward over its reachable states: `W_n`
//! alone without stops, `(W_n, Σ_n)` with stops. The law of a row sum `T_n`
//! is then the mixture, over the base state at `m`, of `W_m` plus `n − m`
//! i.i.d. array steps. The array counts factor as
//! `K ~ Bin(n − m, p_up + p_down)` moves and `N_up | K ~ Bin(K, p_up / (p_up + p_down))`,
//! so each mixture component is computed exactly without sampling.
//!
//! These laws are the ground truth for every Monte Carlo check in the crate.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::triangular;
use crate::walk::WalkParams;
use crate::{Error, Result};

const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Size caps for the dynamic programs. Exceeding one is an error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleCaps {
    /// Largest `n` for walks without stops (`O(n)` states).
    pub max_n_walk: u64,
    /// Largest `n` for walks with stops (`O(n²)` states).
    pub max_n_stops: u64,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps {
            max_n_walk: 4096,
            max_n_stops: 512,
        }
    }
}

impl OracleCaps {
    fn check(&self, params: &WalkParams, n: u64) -> Result<()> {
        let (cap, what) = if params.has_stops() {
            (self.max_n_stops, "oracle horizon with stops")
        } else {
            (self.max_n_walk, "oracle horizon")
        };
        if n > cap {
            return Err(Error::ResourceLimit {
                what,
                requested: n,
                cap,
            });
        }
        Ok(())
    }
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// A finite distribution over sorted, distinct states.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf<S> {
    support: Vec<S>,
    probs: Vec<f64>,
}

impl<S: Copy + Ord> Pmf<S> {
    /// Builds a pmf, checking order, non-negativity and total mass.
    pub fn new(support: Vec<S>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() || support.is_empty() {
            return Err(Error::arg("pmf needs matching, nonempty support and probabilities"));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::arg("pmf support must be strictly increasing"));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::arg("pmf probabilities must be non-negative"));
        }
        let pmf = Pmf { support, probs };
        let total = pmf.total();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::arg(format!("pmf mass is {total}, not 1")));
        }
        Ok(pmf)
    }

    /// Sorts and merges `(state, prob)` pairs, dropping zero-probability states.
    fn collect(mut pairs: Vec<(S, f64)>) -> Result<Self> {
        pairs.sort_by_key(|p| p.0);
        let mut support = Vec::with_capacity(pairs.len());
        let mut sums: Vec<CompensatedSum> = Vec::with_capacity(pairs.len());
        for (s, p) in pairs {
            if support.last() == Some(&s) {
                sums.last_mut().expect("parallel vectors").add(p);
            } else {
                support.push(s);
                let mut acc = CompensatedSum::default();
                acc.add(p);
                sums.push(acc);
            }
        }
        let (support, probs): (Vec<S>, Vec<f64>) = support
            .into_iter()
            .zip(sums.iter().map(CompensatedSum::value))
            .filter(|&(_, p)| p > 0.0)
            .unzip();
        Self::new(support, probs)
    }

    pub fn support(&self) -> &[S] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (S, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn prob(&self, state: S) -> f64 {
        self.support
            .binary_search(&state)
            .map(|i| self.probs[i])
            .unwrap_or(0.0)
    }

    pub fn index_of(&self, state: &S) -> Option<usize> {
        self.support.binary_search(state).ok()
    }

    pub fn total(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for &p in &self.probs {
            acc.add(p);
        }
        acc.value()
    }

    /// `E[f(S)]` with compensated summation in support order.
    pub fn expectation(&self, f: impl Fn(S) -> f64) -> f64 {
        let mut acc = CompensatedSum::default();
        for (s, p) in self.iter() {
            acc.add(p * f(s));
        }
        acc.value()
    }

    /// Law of `f(S)`.
    pub fn map<K: Copy + Ord>(&self, f: impl Fn(S) -> K) -> Pmf<K> {
        Pmf::collect(self.iter().map(|(s, p)| (f(s), p)).collect())
            .expect("image of a valid pmf is a valid pmf")
    }

    /// Draws by inversion from a uniform `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> S {
        let mut acc = 0.0;
        for (s, p) in self.iter() {
            acc += p;
            if u < acc {
                return s;
            }
        }
        *self.support.last().expect("pmf is nonempty")
    }
}

/// Integer fields of a pmf state, for CSV export.
pub trait StateFields {
    fn fields(&self) -> Vec<i64>;
}

impl StateFields for i64 {
    fn fields(&self) -> Vec<i64> {
        vec![*self]
    }
}

impl StateFields for (i64, i64) {
    fn fields(&self) -> Vec<i64> {
        vec![self.0, self.1]
    }
}

impl<S: Copy + Ord + StateFields> Pmf<S> {
    /// Writes `columns..., prob` rows. `columns` names the state fields.
    pub fn write_csv<W: Write>(&self, writer: W, columns: &[&str]) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = columns.to_vec();
        header.push("prob");
        out.write_record(&header)?;
        for (s, p) in self.iter() {
            let mut record: Vec<String> = s.fields().iter().map(i64::to_string).collect();
            if record.len() != columns.len() {
                return Err(Error::arg("column count does not match state fields"));
            }
            record.push(p.to_string());
            out.write_record(&record)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Raw and central moments of orders `1..=k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub raw: Vec<f64>,
    pub central: Vec<f64>,
}

impl Moments {
    pub fn mean(&self) -> f64 {
        self.raw[0]
    }

    /// Requires `k >= 2`.
    pub fn variance(&self) -> f64 {
        self.central[1]
    }
}

/// Moments of a scalar pmf up to order `k <= 4`.
pub fn pmf_moments(pmf: &Pmf<i64>, k: usize) -> Result<Moments> {
    if k == 0 || k > 4 {
        return Err(Error::arg(format!("moment order must be in 1..=4 (k = {k})")));
    }
    let raw: Vec<f64> = (1..=k)
        .map(|j| pmf.expectation(|s| (s as f64).powi(j as i32)))
        .collect();
    let mean = raw[0];
    let central = (1..=k)
        .map(|j| pmf.expectation(|s| (s as f64 - mean).powi(j as i32)))
        .collect();
    Ok(Moments { raw, central })
}

/// `Bin(trials, p)` pmf over `0..=trials`.
///
/// Weights follow the ratio recurrence outward from the mode and are then
/// normalised, which stays accurate where direct factorials overflow.
pub(crate) fn binomial_pmf(trials: u64, p: f64) -> Vec<f64> {
    let len = trials as usize + 1;
    let mut w = vec![0.0; len];
    if p <= 0.0 {
        w[0] = 1.0;
        return w;
    }
    if p >= 1.0 {
        w[len - 1] = 1.0;
        return w;
    }
    let odds = p / (1.0 - p);
    let mode = (((trials + 1) as f64 * p).floor() as usize).min(len - 1);
    w[mode] = 1.0;
    for k in mode..len - 1 {
        w[k + 1] = w[k] * ((trials as usize - k) as f64 / (k + 1) as f64) * odds;
    }
    for k in (1..=mode).rev() {
        w[k - 1] = w[k] * (k as f64 / (trials as usize - k + 1) as f64) / odds;
    }
    let mut total = CompensatedSum::default();
    for &x in &w {
        total.add(x);
    }
    let total = total.value();
    for x in &mut w {
        *x /= total;
    }
    w
}

/// Law of the base-walk state at time `n`: entries `(W_n, Σ_n, prob)`.
fn state_law(params: &WalkParams, n: u64, caps: &OracleCaps) -> Result<Vec<(i64, u64, f64)>> {
    if n == 0 {
        return Err(Error::arg("oracle horizon must be >= 1"));
    }
    caps.check(params, n)?;
    if params.has_stops() {
        Ok(stops_state_law(params, n))
    } else {
        Ok(plain_state_law(params, n))
    }
}

/// Without stops: `dist[j] = P(W_k = 2j − k)`.
fn plain_state_law(params: &WalkParams, n: u64) -> Vec<(i64, u64, f64)> {
    let mut dist = vec![1.0 - params.s, params.s];
    for k in 1..n {
        let mut next = vec![0.0; dist.len() + 1];
        for (j, &prob) in dist.iter().enumerate() {
            if prob == 0.0 {
                continue;
            }
            let w = 2 * j as i64 - k as i64;
            let law = params.law_at(k, w, k);
            next[j + 1] += prob * law.p_up;
            next[j] += prob * law.p_down;
        }
        dist = next;
    }
    dist.iter()
        .enumerate()
        .filter(|&(_, &p)| p > 0.0)
        .map(|(j, &p)| (2 * j as i64 - n as i64, n, p))
        .collect()
}

/// With stops: `layers[σ][j] = P(Σ_k = σ, W_k = 2j − σ)`.
fn stops_state_law(params: &WalkParams, n: u64) -> Vec<(i64, u64, f64)> {
    let n_us = n as usize;
    let mut layers: Vec<Vec<f64>> = (0..=n_us).map(|sigma| vec![0.0; sigma + 1]).collect();
    layers[1][0] = 1.0 - params.s;
    layers[1][1] = params.s;
    for k in 1..n_us {
        let mut next: Vec<Vec<f64>> = (0..=n_us).map(|sigma| vec![0.0; sigma + 1]).collect();
        for sigma in 1..=k {
            for j in 0..=sigma {
                let prob = layers[sigma][j];
                if prob == 0.0 {
                    continue;
                }
                let w = 2 * j as i64 - sigma as i64;
                let law = params.law_at(k as u64, w, sigma as u64);
                next[sigma + 1][j + 1] += prob * law.p_up;
                next[sigma + 1][j] += prob * law.p_down;
                next[sigma][j] += prob * law.p_stay;
            }
        }
        layers = next;
    }
    let mut out = Vec::new();
    for (sigma, layer) in layers.iter().enumerate() {
        for (j, &p) in layer.iter().enumerate() {
            if p > 0.0 {
                out.push((2 * j as i64 - sigma as i64, sigma as u64, p));
            }
        }
    }
    out
}

/// Law of the base walk at time `n`.
#[derive(Clone, Debug, PartialEq)]
pub enum WalkPmf {
    /// Without stops: law of `W_n`.
    Position(Pmf<i64>),
    /// With stops: joint law of `(W_n, Σ_n)`.
    Joint(Pmf<(i64, i64)>),
}

impl WalkPmf {
    /// Law of `W_n`.
    pub fn positions(&self) -> Pmf<i64> {
        match self {
            WalkPmf::Position(p) => p.clone(),
            WalkPmf::Joint(j) => j.map(|(w, _)| w),
        }
    }

    /// Law of `Σ_n`. Without stops this is a point mass at `n`.
    pub fn moves(&self, n: u64) -> Pmf<i64> {
        match self {
            WalkPmf::Position(p) => p.map(|_| n as i64),
            WalkPmf::Joint(j) => j.map(|(_, s)| s),
        }
    }
}

pub fn walk_pmf(params: &WalkParams, n: u64, caps: &OracleCaps) -> Result<WalkPmf> {
    let states = state_law(params, n, caps)?;
    if params.has_stops() {
        let pairs = states.into_iter().map(|(w, s, p)| ((w, s as i64), p)).collect();
        Ok(WalkPmf::Joint(Pmf::collect(pairs)?))
    } else {
        let pairs = states.into_iter().map(|(w, _, p)| (w, p)).collect();
        Ok(WalkPmf::Position(Pmf::collect(pairs)?))
    }
}

/// Joint law of `(T_n, Ξ_n)` for row `n` with memory `m`.
pub fn t_xi_pmf(params: &WalkParams, n: u64, m: u64, caps: &OracleCaps) -> Result<Pmf<(i64, i64)>> {
    if m == 0 || m > n {
        return Err(Error::arg(format!("row needs 1 <= m <= n (m = {m}, n = {n})")));
    }
    caps.check(params, n)?;
    let states = state_law(params, m, caps)?;
    let array_len = n - m;
    let n_us = n as usize;
    // grid[ξ][j] = P(Ξ_n = ξ, T_n = 2j − ξ)
    let mut grid: Vec<Vec<CompensatedSum>> = (0..=n_us)
        .map(|xi| vec![CompensatedSum::default(); xi + 1])
        .collect();
    for (w, sigma, weight) in states {
        let law = params.law_at(m, w, sigma);
        let move_prob = law.move_prob();
        let moves = binomial_pmf(array_len, move_prob);
        let up_share = if move_prob > 0.0 { law.p_up / move_prob } else { 0.0 };
        for (k, &pk) in moves.iter().enumerate() {
            if pk == 0.0 {
                continue;
            }
            let xi = sigma as usize + k;
            // T = w + 2·up − k, so j = (T + ξ)/2 = (w + σ)/2 + up.
            let base_j = ((w + sigma as i64) / 2) as usize;
            for (up, &pu) in binomial_pmf(k as u64, up_share).iter().enumerate() {
                if pu > 0.0 {
                    grid[xi][base_j + up].add(weight * pk * pu);
                }
            }
        }
    }
    let mut pairs = Vec::new();
    for (xi, layer) in grid.iter().enumerate() {
        for (j, acc) in layer.iter().enumerate() {
            let p = acc.value();
            if p > 0.0 {
                pairs.push(((2 * j as i64 - xi as i64, xi as i64), p));
            }
        }
    }
    Pmf::collect(pairs)
}

/// Law of `T_n` for row `n` with memory `m`.
pub fn t_pmf(params: &WalkParams, n: u64, m: u64, caps: &OracleCaps) -> Result<Pmf<i64>> {
    if params.has_stops() {
        return Ok(t_xi_pmf(params, n, m, caps)?.map(|(t, _)| t));
    }
    if m == 0 || m > n {
        return Err(Error::arg(format!("row needs 1 <= m <= n (m = {m}, n = {n})")));
    }
    caps.check(params, n)?;
    let states = state_law(params, m, caps)?;
    let array_len = n - m;
    // acc[j] = P(T_n = 2j − n)
    let mut acc = vec![CompensatedSum::default(); n as usize + 1];
    for (w, _, weight) in states {
        let law = params.law_at(m, w, m);
        let base_j = ((w + m as i64) / 2) as usize;
        for (up, &pu) in binomial_pmf(array_len, law.p_up).iter().enumerate() {
            if pu > 0.0 {
                acc[base_j + up].add(weight * pu);
            }
        }
    }
    let pairs = acc
        .iter()
        .enumerate()
        .map(|(j, a)| (2 * j as i64 - n as i64, a.value()))
        .collect();
    Pmf::collect(pairs)
}

/// Tower-rule moments of `T_n`: means and variances of the conditional
/// moments averaged over the exact law of the base state at `m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TowerMoments {
    pub mean_t: f64,
    pub var_t: f64,
    pub mean_xi: f64,
    pub var_xi: f64,
}

pub fn tower_moments(params: &WalkParams, n: u64, m: u64, caps: &OracleCaps) -> Result<TowerMoments> {
    if m == 0 || m > n {
        return Err(Error::arg(format!("row needs 1 <= m <= n (m = {m}, n = {n})")));
    }
    let states = state_law(params, m, caps)?;
    let mut sums = [CompensatedSum::default(); 6];
    for (w, sigma, p) in &states {
        let cm = triangular::moments_unchecked(*w, *sigma, n, m, params);
        let terms = [
            cm.mean_t,
            cm.mean_t * cm.mean_t,
            cm.var_b,
            cm.mean_xi,
            cm.mean_xi * cm.mean_xi,
            cm.var_xi_part,
        ];
        for (acc, t) in sums.iter_mut().zip(terms) {
            acc.add(p * t);
        }
    }
    let [mean_a, mean_a2, mean_var_b, mean_xi, mean_xi2, mean_var_xi] = sums.map(|s| s.value());
    Ok(TowerMoments {
        mean_t: mean_a,
        var_t: mean_var_b + (mean_a2 - mean_a * mean_a),
        mean_xi,
        var_xi: mean_var_xi + (mean_xi2 - mean_xi * mean_xi),
    })
}
