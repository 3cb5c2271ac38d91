use rayon::prelude::*;
use serde::Serialize;

use crate::{Error, Result};

const CHUNK: usize = 1024;

/// One-pass central moments up to order four, mergeable across chunks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SummaryStats {
    pub count: u64,
    pub mean: f64,
    #[serde(skip)]
    m2: f64,
    #[serde(skip)]
    m3: f64,
    #[serde(skip)]
    m4: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for SummaryStats {
    fn default() -> Self {
        SummaryStats::new()
    }
}

impl SummaryStats {
    pub fn new() -> Self {
        SummaryStats {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            m3: 0.0,
            m4: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2 - 4.0 * delta_n * self.m3;
        self.m3 += term * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term;
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    /// Combines two summaries as if their samples were concatenated.
    pub fn merge(&self, other: &SummaryStats) -> SummaryStats {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        let d2 = delta * delta;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 = self.m3
            + other.m3
            + d2 * delta * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * delta * (na * other.m3 - nb * self.m3) / n;
        SummaryStats {
            count: self.count + other.count,
            mean: self.mean + delta * nb / n,
            m2,
            m3,
            m4,
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        (self.m2 / (self.count - 1) as f64).max(0.0)
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn se_mean(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }

    /// Standard error of the sample variance from the empirical fourth
    /// central moment: `sqrt((μ4 − (n − 3)/(n − 1) σ⁴) / n)`.
    pub fn se_variance(&self) -> f64 {
        let n = self.count as f64;
        let mu4 = self.m4 / n;
        let var = self.variance();
        ((mu4 - (n - 3.0) / (n - 1.0) * var * var) / n).max(0.0).sqrt()
    }

    /// Second raw moment `E[X²]` and the standard error of its estimate.
    pub fn second_moment(&self) -> (f64, f64) {
        let n = self.count as f64;
        let raw = self.m2 / n + self.mean * self.mean;
        // Var(X²) = μ4' − (μ2')², written in central moments.
        let (mu2, mu3, mu4) = (self.m2 / n, self.m3 / n, self.m4 / n);
        let m = self.mean;
        let mu4_raw = mu4 + 4.0 * m * mu3 + 6.0 * m * m * mu2 + m.powi(4);
        let var_sq = (mu4_raw - raw * raw).max(0.0);
        (raw, (var_sq / n).sqrt())
    }
}

/// Summary of `samples` with a fixed chunking and merge tree, so the result
/// is identical whatever the thread count.
pub fn summarize(samples: &[f64]) -> Result<SummaryStats> {
    if samples.len() < 2 {
        return Err(Error::arg(format!("summary needs at least 2 samples (got {})", samples.len())));
    }
    let mut level: Vec<SummaryStats> = samples
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut s = SummaryStats::new();
            for &x in chunk {
                s.push(x);
            }
            s
        })
        .collect();
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| match pair {
                [a, b] => a.merge(b),
                [a] => *a,
                _ => unreachable!(),
            })
            .collect();
    }
    Ok(level[0])
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;

    fn serial(xs: &[f64]) -> SummaryStats {
        let mut s = SummaryStats::new();
        xs.iter().for_each(|&x| s.push(x));
        s
    }

    #[test]
    fn two_points() {
        let s = summarize(&[1.0, -1.0]).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.variance(), 2.0);
        assert_eq!((s.min, s.max), (-1.0, 1.0));
        assert!(summarize(&[1.0]).is_err());
    }

    #[test]
    fn merge_matches_concatenation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect::<Vec<f64>>();
        let whole = serial(&xs);
        let merged = serial(&xs[..3_217]).merge(&serial(&xs[3_217..]));
        assert_eq!(merged.count, whole.count);
        assert!((merged.mean - whole.mean).abs() < 1e-14);
        assert!((merged.variance() / whole.variance() - 1.0).abs() < 1e-12);
        assert!((merged.m3 - whole.m3).abs() < 1e-9 * whole.m4);
        assert!((merged.m4 / whole.m4 - 1.0).abs() < 1e-12);
        assert_eq!(merged.min, whole.min);
    }

    #[test]
    fn standard_normal_variance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..1_000_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let s = summarize(&xs).unwrap();
        assert!((0.99..=1.01).contains(&s.variance()), "{}", s.variance());
        // For a normal population Var(s²) ≈ 2σ⁴/n.
        assert!((s.se_variance() / (2.0f64 / 1e6).sqrt() - 1.0).abs() < 0.05);
        let (raw, se) = s.second_moment();
        assert!((raw - 1.0).abs() < 4.0 * se);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let xs: Vec<f64> = (0..50_000).map(|i| ((i * 7919) % 1000) as f64 / 7.0).collect();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let one = pool.install(|| summarize(&xs).unwrap());
        assert_eq!(one, summarize(&xs).unwrap());
    }
}
