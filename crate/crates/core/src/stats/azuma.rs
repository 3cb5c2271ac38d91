use serde::Serialize;

use crate::{Error, Result};

/// `2 exp(−x² / (2 γ_n (1 − γ_n) m_n))`, the martingale tail bound for
/// `P(|γ_n B_n| >= x)`.
pub fn azuma_bound(x: f64, m: u64, gamma_n: f64) -> f64 {
    let scale = 2.0 * gamma_n * (1.0 - gamma_n) * m as f64;
    if scale <= 0.0 {
        return if x > 0.0 { 0.0 } else { 2.0 };
    }
    2.0 * (-(x * x) / scale).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AzumaRow {
    pub x: f64,
    pub exceed_freq: f64,
    pub se: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AzumaReport {
    pub n: u64,
    pub m: u64,
    pub gamma_n: f64,
    pub rows: Vec<AzumaRow>,
    pub pass: bool,
}

/// Thresholds `x` at which `|samples|` exceeds with the given frequencies.
pub fn tail_grid(samples: &[f64], tail_levels: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::arg("tail grid needs samples"));
    }
    let mut abs: Vec<f64> = samples.iter().map(|x| x.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let n = abs.len();
    tail_levels
        .iter()
        .map(|&level| {
            if !(level > 0.0 && level < 1.0) {
                return Err(Error::arg(format!("tail level must lie in (0, 1) (got {level})")));
            }
            let idx = (((1.0 - level) * n as f64).floor() as usize).min(n - 1);
            Ok(abs[idx])
        })
        .collect()
}

/// Compares the empirical tail of `|γ_n B_n|` with the bound at each `x`.
///
/// A grid point passes iff `freq <= 1.1 · bound + 4 · SE`.
pub fn azuma_tail_check(scaled_b: &[f64], n: u64, m: u64, gamma_n: f64, grid: &[f64]) -> Result<AzumaReport> {
    if scaled_b.is_empty() {
        return Err(Error::arg("Azuma check needs samples"));
    }
    if m == 0 || m > n {
        return Err(Error::arg(format!("row needs 1 <= m <= n (m = {m}, n = {n})")));
    }
    let total = scaled_b.len() as f64;
    let rows: Vec<AzumaRow> = grid
        .iter()
        .map(|&x| {
            let hits = scaled_b.iter().filter(|b| b.abs() >= x).count() as f64;
            let freq = hits / total;
            let se = (freq * (1.0 - freq) / total).sqrt();
            let bound = azuma_bound(x, m, gamma_n);
            AzumaRow {
                x,
                exceed_freq: freq,
                se,
                bound,
                pass: freq <= 1.1 * bound + 4.0 * se,
            }
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    Ok(AzumaReport {
        n,
        m,
        gamma_n,
        rows,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use crate::schedule::MemorySchedule;
    use crate::triangular::{sample_ensemble, SamplingMethod};
    use crate::walk::WalkParams;

    #[test]
    fn bound_values() {
        let (m, g) = (512u64, 0.5);
        let x = (2.0 * g * (1.0 - g) * m as f64).sqrt();
        assert!((azuma_bound(x, m, g) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((azuma_bound(x, m, g) - 0.7357589).abs() < 1e-7);
        assert_eq!(azuma_bound(0.0, m, g), 2.0);
    }

    #[test]
    fn grid_levels() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        let grid = tail_grid(&xs, &[0.5, 0.01]).unwrap();
        assert_eq!(grid, vec![501.0, 991.0]);
        assert!(tail_grid(&xs, &[1.5]).is_err());
    }

    #[test]
    fn subcritical_rows_respect_bound() {
        let params = WalkParams::standard(0.5, 0.625).unwrap();
        let schedule = MemorySchedule::proportional(0.5).unwrap();
        let n = 1024;
        let rows = sample_ensemble(&params, &schedule, n, 20_000, StreamKey::new(4), SamplingMethod::Collapsed).unwrap();
        let b: Vec<f64> = rows.iter().map(|r| r.scaled_residual()).collect();
        let grid = tail_grid(&b, &[0.5, 0.1, 0.01, 0.001]).unwrap();
        let report = azuma_tail_check(&b, n, rows[0].m, rows[0].gamma_n, &grid).unwrap();
        assert!(report.pass, "{report:?}");
    }
}
