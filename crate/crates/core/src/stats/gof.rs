use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::oracle::Pmf;
use crate::{Error, Result};

/// A reference distribution function.
///
/// The empirical side is right-continuous; `cdf_left` is `P(X < x)` and only
/// differs from `cdf` at atoms.
pub trait Cdf {
    fn cdf(&self, x: f64) -> f64;

    fn cdf_left(&self, x: f64) -> f64 {
        self.cdf(x)
    }
}

#[derive(Clone, Debug)]
pub struct NormalCdf(Normal);

impl NormalCdf {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !mean.is_finite() {
            return Err(Error::arg(format!(
                "normal reference needs finite mean and positive variance (variance = {variance})"
            )));
        }
        Normal::new(mean, variance.sqrt())
            .map(NormalCdf)
            .map_err(|e| Error::arg(e.to_string()))
    }
}

impl Cdf for NormalCdf {
    fn cdf(&self, x: f64) -> f64 {
        self.0.cdf(x)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PointMass(pub f64);

impl Cdf for PointMass {
    fn cdf(&self, x: f64) -> f64 {
        if x >= self.0 {
            1.0
        } else {
            0.0
        }
    }

    fn cdf_left(&self, x: f64) -> f64 {
        if x > self.0 {
            1.0
        } else {
            0.0
        }
    }
}

/// Any continuous distribution function given as a closure.
pub struct Continuous<F>(pub F);

impl<F: Fn(f64) -> f64> Cdf for Continuous<F> {
    fn cdf(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and
/// `reference`, checked on both sides of every distinct sample point.
pub fn ks_distance(samples: &[f64], reference: &impl Cdf) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::arg("KS distance needs at least one sample"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::arg("KS distance got a NaN sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        d = d
            .max((j as f64 / n - reference.cdf(x)).abs())
            .max((i as f64 / n - reference.cdf_left(x)).abs());
        i = j;
    }
    Ok(d)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
}

fn upper_tail(statistic: f64, dof: u64) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    if statistic.is_infinite() {
        return 0.0;
    }
    let law = ChiSquared::new(dof as f64).expect("dof is positive");
    law.sf(statistic)
}

/// Groups consecutive cells so that every group has weight at least `floor`;
/// a short tail joins the last complete group.
fn merge_cells(weights: &[f64], floor: f64) -> Vec<std::ops::Range<usize>> {
    let mut groups: Vec<std::ops::Range<usize>> = Vec::new();
    let mut start = 0;
    let mut acc = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        acc += w;
        if acc >= floor {
            groups.push(start..k + 1);
            start = k + 1;
            acc = 0.0;
        }
    }
    if start < weights.len() {
        match groups.last_mut() {
            Some(last) => last.end = weights.len(),
            None => groups.push(0..weights.len()),
        }
    }
    groups
}

/// Pearson goodness of fit of `samples` to `pmf`, merging neighbouring
/// support states until each bin expects at least `min_expected` draws.
///
/// A sample outside the support gives an infinite statistic and p-value 0.
pub fn chi_square_gof<S: Copy + Ord>(samples: &[S], pmf: &Pmf<S>, min_expected: f64) -> Result<ChiSquare> {
    if samples.is_empty() {
        return Err(Error::arg("chi-square needs at least one sample"));
    }
    if !(min_expected > 0.0) {
        return Err(Error::arg("min_expected must be positive"));
    }
    let mut observed = vec![0u64; pmf.len()];
    for s in samples {
        match pmf.index_of(s) {
            Some(i) => observed[i] += 1,
            None => {
                return Ok(ChiSquare {
                    statistic: f64::INFINITY,
                    dof: 0,
                    p_value: 0.0,
                })
            }
        }
    }
    let n = samples.len() as f64;
    let expected: Vec<f64> = pmf.probs().iter().map(|p| p * n).collect();
    let groups = merge_cells(&expected, min_expected);
    let mut statistic = 0.0;
    for g in &groups {
        let e: f64 = expected[g.clone()].iter().sum();
        let o: u64 = observed[g.clone()].iter().sum();
        statistic += (o as f64 - e).powi(2) / e;
    }
    let dof = groups.len() as u64 - 1;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: upper_tail(statistic, dof),
    })
}

/// Two-sample chi-square homogeneity test on the pooled support.
pub fn chi_square_two_sample<S: Copy + Ord>(a: &[S], b: &[S], min_expected: f64) -> Result<ChiSquare> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::arg("both samples must be nonempty"));
    }
    let mut table: BTreeMap<S, (u64, u64)> = BTreeMap::new();
    for s in a {
        table.entry(*s).or_default().0 += 1;
    }
    for s in b {
        table.entry(*s).or_default().1 += 1;
    }
    let cells: Vec<(u64, u64)> = table.into_values().collect();
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let smaller = na.min(nb) / (na + nb);
    let pooled: Vec<f64> = cells.iter().map(|&(x, y)| (x + y) as f64 * smaller).collect();
    let groups = merge_cells(&pooled, min_expected);
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let mut statistic = 0.0;
    for g in &groups {
        let (x, y) = cells[g.clone()]
            .iter()
            .fold((0u64, 0u64), |acc, c| (acc.0 + c.0, acc.1 + c.1));
        let diff = ka * x as f64 - kb * y as f64;
        statistic += diff * diff / (x + y) as f64;
    }
    let dof = groups.len() as u64 - 1;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: upper_tail(statistic, dof),
    })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;

    #[test]
    fn ks_degenerate_cases() {
        let normal = NormalCdf::new(0.0, 1.0).unwrap();
        assert!((ks_distance(&[0.0], &normal).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(ks_distance(&[2.0; 10], &PointMass(2.0)).unwrap(), 0.0);
        assert_eq!(ks_distance(&[1.0; 4], &PointMass(2.0)).unwrap(), 1.0);
        assert!(ks_distance(&[], &normal).is_err());
    }

    #[test]
    fn ks_null_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let d = ks_distance(&xs, &NormalCdf::new(0.0, 1.0).unwrap()).unwrap();
        assert!(d < 0.01, "{d}");
        let uniform = Continuous(|x: f64| x.clamp(0.0, 1.0));
        let us: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_distance(&us, &uniform).unwrap() < 0.01);
        let shifted = ks_distance(&xs, &NormalCdf::new(0.1, 1.0).unwrap()).unwrap();
        assert!(shifted > 0.03);
    }

    #[test]
    fn chi_square_null_and_mismatch() {
        let pmf = Pmf::new(vec![0i64, 1, 2, 3, 4], vec![0.1, 0.2, 0.4, 0.2, 0.1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<i64> = (0..100_000).map(|_| pmf.quantile(rng.random())).collect();
        let res = chi_square_gof(&xs, &pmf, 5.0).unwrap();
        assert_eq!(res.dof, 4);
        assert!(res.p_value > 0.001, "{res:?}");

        let coin = Pmf::new(vec![0i64, 1], vec![0.5, 0.5]).unwrap();
        let res = chi_square_gof(&[0i64; 1000], &coin, 5.0).unwrap();
        assert!((res.statistic - 1000.0).abs() < 1e-9);
        assert!(res.p_value < 1e-100);

        let res = chi_square_gof(&[7i64], &coin, 5.0).unwrap();
        assert!(res.statistic.is_infinite() && res.p_value == 0.0);
    }

    #[test]
    fn sparse_tails_are_merged() {
        assert_eq!(merge_cells(&[1.0, 1.0, 6.0, 10.0, 2.0], 5.0), vec![0..3, 3..5]);
        assert_eq!(merge_cells(&[1.0, 1.0], 5.0), vec![0..2]);
        let pmf = Pmf::new(vec![0i64, 1, 2], vec![0.001, 0.998, 0.001]).unwrap();
        let res = chi_square_gof(&[1i64; 100], &pmf, 5.0).unwrap();
        assert_eq!(res.dof, 0);
        assert_eq!(res.p_value, 1.0);
    }

    #[test]
    fn p_value_decreases_with_statistic() {
        let mut last = 1.0;
        for k in 1..50 {
            let p = upper_tail(k as f64, 6);
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn two_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<i64> = (0..20_000).map(|_| rng.random_range(0..10)).collect();
        let b: Vec<i64> = (0..30_000).map(|_| rng.random_range(0..10)).collect();
        assert!(chi_square_two_sample(&a, &b, 5.0).unwrap().p_value > 0.001);
        let c: Vec<i64> = (0..30_000).map(|_| rng.random_range(0..9)).collect();
        assert!(chi_square_two_sample(&a, &c, 5.0).unwrap().p_value < 1e-10);
    }
}
