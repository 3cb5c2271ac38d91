//! The ERW with gradually increasing memory in the triangular-array setting.
//!
//! Row `n` keeps the first `m_n` steps of the base walk and appends `n − m_n`
//! array increments. Given the base walk, the array increments are i.i.d.
//! with the step law at `(m_n, W_{m_n}, Σ_{m_n})`, so a row is determined by
//! the base state at `m_n` plus either `n − m_n` single draws (`Direct`) or
//! one multinomial draw of the up/down/stay counts (`Collapsed`).
//!
//! Rows share the base walk but use independent array randomness, which is
//! what [`sample_coupled_sequence`] reproduces across a grid of `n`.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::rng::{self, StreamKey, StreamRng};
use crate::schedule::MemorySchedule;
use crate::walk::{self, simulate_base_walk, StepLaw, Trajectory, WalkParams};
use crate::{Error, Result};

/// Largest ensemble, in bytes of samples, kept in memory at once.
const MAX_ENSEMBLE_BYTES: u64 = 4 << 30;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMethod {
    /// One draw per array increment.
    Direct,
    /// One multinomial draw of the up/down/stay counts.
    #[default]
    Collapsed,
}

/// One realisation of row `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TriangularSample {
    pub n: u64,
    pub m: u64,
    pub gamma_n: f64,
    /// Base position `W_{m_n}`.
    pub w_m: i64,
    /// Base move count `Σ_{m_n}`.
    pub sigma_m: u64,
    /// Row sum `T_n`.
    pub t: i64,
    /// Row move count `Ξ_n`.
    pub xi: u64,
    /// Conditional mean of `T_n` given the base walk.
    pub a: f64,
    /// Residual `T_n − A_n`.
    pub b: f64,
}

impl TriangularSample {
    /// `γ_n B_n`.
    pub fn scaled_residual(&self) -> f64 {
        self.gamma_n * self.b
    }

    /// `γ_n T_n`.
    pub fn scaled_sum(&self) -> f64 {
        self.gamma_n * self.t as f64
    }
}

/// Array increments of a row together with the partial sums `S_k^{(n)}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowTrajectory {
    pub increments: Vec<i8>,
    pub partial_sums: Vec<i64>,
}

/// Moments of the row given the base walk up to `m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionalMoments {
    /// `E[T_n | base] = W_m + α (n − m) W_m / m`.
    pub mean_t: f64,
    /// `Var[B_n | base] = (n − m)(β Σ_m / m − α² (W_m / m)²)`.
    pub var_b: f64,
    /// `E[Ξ_n | base] = Σ_m + (n − m) β Σ_m / m`.
    pub mean_xi: f64,
    /// `Var[Ξ_n | base] = (n − m)(β Σ_m / m)(1 − β Σ_m / m)`.
    pub var_xi_part: f64,
}

pub fn conditional_moments(
    w_m: i64,
    sigma_m: u64,
    n: u64,
    m: u64,
    params: &WalkParams,
) -> Result<ConditionalMoments> {
    if m > n {
        return Err(Error::arg(format!("memory m = {m} exceeds row length n = {n}")));
    }
    walk::check_state(m, w_m, sigma_m, params)?;
    Ok(moments_unchecked(w_m, sigma_m, n, m, params))
}

pub(crate) fn moments_unchecked(
    w_m: i64,
    sigma_m: u64,
    n: u64,
    m: u64,
    params: &WalkParams,
) -> ConditionalMoments {
    let array_len = (n - m) as f64;
    let mf = m as f64;
    let drift = w_m as f64 / mf;
    let move_prob = params.beta * sigma_m as f64 / mf;
    ConditionalMoments {
        mean_t: w_m as f64 + params.alpha * array_len * drift,
        var_b: array_len * (move_prob - params.alpha * params.alpha * drift * drift),
        mean_xi: sigma_m as f64 + array_len * move_prob,
        var_xi_part: array_len * move_prob * (1.0 - move_prob),
    }
}

/// Up/down counts of `trials` i.i.d. steps with law `law`, drawn exactly.
fn multinomial_counts(trials: u64, law: &StepLaw, rng: &mut StreamRng) -> (u64, u64) {
    if trials == 0 {
        return (0, 0);
    }
    let up = Binomial::new(trials, law.p_up.clamp(0.0, 1.0))
        .expect("probability clamped to [0, 1]")
        .sample(rng);
    let rest = trials - up;
    let tail = 1.0 - law.p_up;
    let down = if rest == 0 || tail <= 0.0 {
        0
    } else {
        Binomial::new(rest, (law.p_down / tail).clamp(0.0, 1.0))
            .expect("probability clamped to [0, 1]")
            .sample(rng)
    };
    (up, down)
}

fn check_row(base: &Trajectory, n: u64, m: u64) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::arg(format!("row needs 1 <= m <= n (m = {m}, n = {n})")));
    }
    if (base.len() as u64) < m {
        return Err(Error::arg(format!(
            "base walk has {} steps but row memory is m = {m}",
            base.len()
        )));
    }
    Ok(())
}

fn assemble(n: u64, m: u64, w_m: i64, sigma_m: u64, up: u64, down: u64, params: &WalkParams) -> TriangularSample {
    let t = w_m + up as i64 - down as i64;
    let xi = sigma_m + up + down;
    let moments = moments_unchecked(w_m, sigma_m, n, m, params);
    TriangularSample {
        n,
        m,
        gamma_n: m as f64 / n as f64,
        w_m,
        sigma_m,
        t,
        xi,
        a: moments.mean_t,
        b: t as f64 - moments.mean_t,
    }
}

/// Samples row `n` with memory `m` on top of `base`.
pub fn sample_row(
    base: &Trajectory,
    n: u64,
    m: u64,
    params: &WalkParams,
    key: StreamKey,
    method: SamplingMethod,
) -> Result<TriangularSample> {
    check_row(base, n, m)?;
    let w_m = base.position(m as usize);
    let sigma_m = base.move_count(m as usize);
    let law = params.law_at(m, w_m, sigma_m);
    let mut rng = key.rng();
    let (up, down) = match method {
        SamplingMethod::Collapsed => multinomial_counts(n - m, &law, &mut rng),
        SamplingMethod::Direct => {
            let (mut up, mut down) = (0, 0);
            for _ in m..n {
                match law.step_for(rng.random::<f64>()) {
                    1 => up += 1,
                    -1 => down += 1,
                    _ => {}
                }
            }
            (up, down)
        }
    };
    Ok(assemble(n, m, w_m, sigma_m, up, down, params))
}

/// Like the direct method of [`sample_row`], also returning the row path.
///
/// Draws the same random numbers, so the sample equals
/// `sample_row(.., SamplingMethod::Direct)` with the same key.
pub fn sample_row_trajectory(
    base: &Trajectory,
    n: u64,
    m: u64,
    params: &WalkParams,
    key: StreamKey,
) -> Result<(TriangularSample, RowTrajectory)> {
    check_row(base, n, m)?;
    let w_m = base.position(m as usize);
    let sigma_m = base.move_count(m as usize);
    let law = params.law_at(m, w_m, sigma_m);
    let mut rng = key.rng();
    let mut increments: Vec<i8> = base.steps()[..m as usize].to_vec();
    let (mut up, mut down) = (0, 0);
    for _ in m..n {
        let x = law.step_for(rng.random::<f64>());
        match x {
            1 => up += 1,
            -1 => down += 1,
            _ => {}
        }
        increments.push(x);
    }
    let partial_sums = increments
        .iter()
        .scan(0i64, |acc, &x| {
            *acc += x as i64;
            Some(*acc)
        })
        .collect();
    let sample = assemble(n, m, w_m, sigma_m, up, down, params);
    Ok((
        sample,
        RowTrajectory {
            increments,
            partial_sums,
        },
    ))
}

/// `reps` independent rows at `n`, each on a fresh base walk of length `m_n`.
///
/// Replication `r` uses `master.derive(r)`; the result does not depend on
/// scheduling or thread count.
pub fn sample_ensemble(
    params: &WalkParams,
    schedule: &MemorySchedule,
    n: u64,
    reps: u64,
    master: StreamKey,
    method: SamplingMethod,
) -> Result<Vec<TriangularSample>> {
    if reps == 0 {
        return Err(Error::arg("replications must be >= 1"));
    }
    let bytes = reps.saturating_mul(std::mem::size_of::<TriangularSample>() as u64);
    if bytes > MAX_ENSEMBLE_BYTES {
        return Err(Error::ResourceLimit {
            what: "ensemble size in bytes",
            requested: bytes,
            cap: MAX_ENSEMBLE_BYTES,
        });
    }
    let m = schedule.m_of(n)?;
    rng::par_replicate(reps, master, |_, key| {
        let base = simulate_base_walk(params, m as usize, key.derive(rng::BASE_WALK))?;
        sample_row(&base, n, m, params, key.derive(rng::ARRAY), method)
    })
    .into_iter()
    .collect()
}

/// Rows `n_1 < … < n_J` sharing one base walk of length `max m_{n_j}`.
///
/// Row `n_j` draws its array increments from `key.derive(ARRAY).derive(n_j)`.
pub fn sample_coupled_sequence(
    params: &WalkParams,
    schedule: &MemorySchedule,
    grid: &[u64],
    key: StreamKey,
    method: SamplingMethod,
) -> Result<Vec<TriangularSample>> {
    let (base, memories) = coupled_base(params, schedule, grid, key)?;
    grid.iter()
        .zip(memories)
        .map(|(&n, m)| sample_row(&base, n, m, params, row_key(key, n), method))
        .collect()
}

pub(crate) fn row_key(key: StreamKey, n: u64) -> StreamKey {
    key.derive(rng::ARRAY).derive(n)
}

/// The shared base walk of a coupled sequence and the memory of each row.
pub fn coupled_base(
    params: &WalkParams,
    schedule: &MemorySchedule,
    grid: &[u64],
    key: StreamKey,
) -> Result<(Trajectory, Vec<u64>)> {
    if grid.is_empty() {
        return Err(Error::arg("grid must be nonempty"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("grid must be strictly increasing"));
    }
    let memories = grid.iter().map(|&n| schedule.m_of(n)).collect::<Result<Vec<_>>>()?;
    let longest = *memories.iter().max().expect("grid is nonempty");
    let base = simulate_base_walk(params, longest as usize, key.derive(rng::BASE_WALK))?;
    Ok((base, memories))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain(s: f64, p: f64) -> WalkParams {
        WalkParams::standard(s, p).unwrap()
    }

    #[test]
    fn conditional_mean_example() {
        let params = plain(0.5, 0.75);
        let cm = conditional_moments(4, 10, 40, 10, &params).unwrap();
        assert!((cm.mean_t - 10.0).abs() < 1e-12);
        let cm = conditional_moments(0, 20, 50, 20, &params).unwrap();
        assert_eq!(cm.mean_t, 0.0);
        assert_eq!(cm.var_b, 30.0);
        assert!(conditional_moments(0, 20, 10, 20, &params).is_err());
    }

    #[test]
    fn move_count_identity_with_stops() {
        // γ_n E[Ξ_n | base] = (γ_n + β (1 − γ_n)) Σ_m with γ_n = 1/2, β = 1/2.
        let params = WalkParams::from_alpha_beta(0.5, 0.1, 0.5).unwrap();
        let m = 12;
        let cm = conditional_moments(2, 6, 2 * m, m, &params).unwrap();
        assert!((0.5 * cm.mean_xi - 4.5).abs() < 1e-12);
    }

    #[test]
    fn single_array_step() {
        let params = plain(1.0, 0.75);
        let base = simulate_base_walk(&params, 1, StreamKey::new(0)).unwrap();
        for method in [SamplingMethod::Direct, SamplingMethod::Collapsed] {
            let mut twos = 0;
            for seed in 0..4000 {
                let s = sample_row(&base, 2, 1, &params, StreamKey::new(seed), method).unwrap();
                assert!(s.t == 2 || s.t == 0);
                twos += (s.t == 2) as u32;
            }
            let freq = twos as f64 / 4000.0;
            assert!((freq - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / 4000.0).sqrt());
        }
    }

    #[test]
    fn sample_fields_consistent() {
        let params = WalkParams::from_alpha_beta(0.3, -0.2, 0.6).unwrap();
        let base = simulate_base_walk(&params, 40, StreamKey::new(5)).unwrap();
        let s = sample_row(&base, 100, 40, &params, StreamKey::new(6), SamplingMethod::Collapsed).unwrap();
        assert_eq!(s.w_m, base.position(40));
        assert_eq!(s.sigma_m, base.move_count(40));
        assert!((s.a + s.b - s.t as f64).abs() < 1e-12);
        let c = s.gamma_n + params.alpha * (1.0 - s.gamma_n);
        assert!((s.a - s.w_m as f64 / s.gamma_n * c).abs() < 1e-9);
    }

    #[test]
    fn row_trajectory_matches_direct_sample() {
        let params = plain(0.5, 0.8);
        let base = simulate_base_walk(&params, 30, StreamKey::new(1)).unwrap();
        let direct = sample_row(&base, 90, 30, &params, StreamKey::new(2), SamplingMethod::Direct).unwrap();
        let (sample, row) = sample_row_trajectory(&base, 90, 30, &params, StreamKey::new(2)).unwrap();
        assert_eq!(sample, direct);
        assert_eq!(&row.increments[..30], base.steps());
        assert_eq!(*row.partial_sums.last().unwrap(), sample.t);
        assert_eq!(row.partial_sums[29], base.position(30));
        assert_eq!(row.increments.len(), 90);
    }

    #[test]
    fn short_base_rejected() {
        let params = plain(0.5, 0.8);
        let base = simulate_base_walk(&params, 10, StreamKey::new(1)).unwrap();
        assert!(sample_row(&base, 40, 20, &params, StreamKey::new(0), SamplingMethod::Direct).is_err());
        assert!(sample_row(&base, 5, 8, &params, StreamKey::new(0), SamplingMethod::Direct).is_err());
    }

    #[test]
    fn ensemble_is_reproducible_and_matches_rows() {
        let params = plain(0.5, 0.7);
        let schedule = MemorySchedule::proportional(0.25).unwrap();
        let master = StreamKey::new(42);
        let a = sample_ensemble(&params, &schedule, 64, 50, master, SamplingMethod::Collapsed).unwrap();
        let b = sample_ensemble(&params, &schedule, 64, 50, master, SamplingMethod::Collapsed).unwrap();
        assert_eq!(a, b);

        let key = master.derive(0);
        let base = simulate_base_walk(&params, 16, key.derive(rng::BASE_WALK)).unwrap();
        let row = sample_row(&base, 64, 16, &params, key.derive(rng::ARRAY), SamplingMethod::Collapsed).unwrap();
        assert_eq!(a[0], row);
        assert!(sample_ensemble(&params, &schedule, 64, 0, master, SamplingMethod::Direct).is_err());
    }

    #[test]
    fn coupled_rows_share_base() {
        let params = plain(0.5, 0.625);
        let schedule = MemorySchedule::proportional(0.5).unwrap();
        let grid = [10, 20, 40, 80];
        let key = StreamKey::new(3);
        let rows = sample_coupled_sequence(&params, &schedule, &grid, key, SamplingMethod::Collapsed).unwrap();
        let (base, _) = coupled_base(&params, &schedule, &grid, key).unwrap();
        for row in &rows {
            assert_eq!(row.w_m, base.position(row.m as usize));
        }
        let single = sample_coupled_sequence(&params, &schedule, &[40], key, SamplingMethod::Collapsed).unwrap();
        let (short_base, _) = coupled_base(&params, &schedule, &[40], key).unwrap();
        let direct = sample_row(&short_base, 40, 20, &params, row_key(key, 40), SamplingMethod::Collapsed).unwrap();
        assert_eq!(single[0], direct);

        let full = MemorySchedule::proportional(1.0).unwrap();
        let rows = sample_coupled_sequence(&params, &full, &grid, key, SamplingMethod::Direct).unwrap();
        let (base, _) = coupled_base(&params, &full, &grid, key).unwrap();
        for (row, &n) in rows.iter().zip(&grid) {
            assert_eq!(row.t, base.position(n as usize));
        }
        assert!(sample_coupled_sequence(&params, &schedule, &[], key, SamplingMethod::Direct).is_err());
        assert!(sample_coupled_sequence(&params, &schedule, &[5, 5], key, SamplingMethod::Direct).is_err());
    }
}
