use std::time::Instant;

use super::config::{ExperimentConfig, ExperimentKind};
use super::report::{Artifact, ExperimentReport, ResultRow, RunOutput};
use crate::linear::simulate_linear_walk;
use crate::oracle::{pmf_moments, t_pmf, t_xi_pmf, walk_pmf, WalkPmf};
use crate::rng::{self, par_replicate, StreamKey};
use crate::stats::{
    azuma_tail_check, chi_square_two_sample, ks_distance, summarize, tail_grid, NormalCdf, SummaryStats,
};
use crate::theory::{
    gamma_fn, limit_prediction, memory_factor, moment_recursions, MomentSequences, row_moments, Normalization, Regime,
    TheoryPrediction,
};
use crate::triangular::{sample_coupled_sequence, sample_ensemble, sample_row, TriangularSample};
use crate::walk::{extend_endpoint, simulate_base_walk, WalkParams};
use crate::{Error, Result};

pub const SAMPLE_COLUMNS: [&str; 10] = ["rep", "n", "m", "gamma_n", "W_m", "Sigma_m", "T", "Xi", "A", "B"];

const SE_BAND: f64 = 4.0;
const EXACT_VS_LIMIT: f64 = 0.05;
const KS_PLAIN: f64 = 0.02;
const CRITICAL_VS_LIMIT: f64 = 0.15;
const RESIDUAL_VS_LIMIT: f64 = 0.15;
const STOPS_VS_LIMIT: f64 = 0.10;
const KS_STOPS: f64 = 0.03;
const SLLN_LEVEL: f64 = 0.05;
const SLLN_SHARE: f64 = 0.95;
const MOVES_HORIZON: u64 = 1_000_000;
const MOVES_TOLERANCE: f64 = 1e-3;
const IDENTITY_TOLERANCE: f64 = 1e-10;
const TAIL_LEVELS: [f64; 9] = [0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001];

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    theory: TheoryPrediction,
    rows: Vec<ResultRow>,
    artifacts: Vec<Artifact>,
}

/// Runs the experiment described by `cfg`. The result depends only on the
/// config, not on thread count; only `runtime_seconds` varies between runs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let start = Instant::now();
    let theory = limit_prediction(&cfg.params, cfg.schedule.declared_gamma())?;
    let mut run = Run {
        cfg,
        theory,
        rows: Vec::new(),
        artifacts: Vec::new(),
    };
    match cfg.kind() {
        ExperimentKind::Simulate => run.simulate()?,
        ExperimentKind::VerifyClt => run.verify_clt()?,
        ExperimentKind::VerifySlln => run.verify_slln()?,
        ExperimentKind::VerifyStops => run.verify_stops()?,
        ExperimentKind::CompareSettings => run.compare_settings()?,
        ExperimentKind::Exact => run.exact()?,
        ExperimentKind::Azuma => run.azuma()?,
    }
    let report = ExperimentReport {
        config: cfg.raw.clone(),
        theory: run.theory,
        results: run.rows,
        seed: cfg.seed(),
        version: env!("CARGO_PKG_VERSION"),
        runtime_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutput {
        report,
        artifacts: run.artifacts,
    })
}

fn samples_csv(samples: &[(u64, TriangularSample)]) -> Result<Vec<u8>> {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(SAMPLE_COLUMNS)?;
    for (rep, s) in samples {
        out.write_record([
            rep.to_string(),
            s.n.to_string(),
            s.m.to_string(),
            s.gamma_n.to_string(),
            s.w_m.to_string(),
            s.sigma_m.to_string(),
            s.t.to_string(),
            s.xi.to_string(),
            s.a.to_string(),
            s.b.to_string(),
        ])?;
    }
    out.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Summary of the finite values only, with the number dropped.
fn summarize_finite(xs: &[f64]) -> Result<(SummaryStats, usize)> {
    let finite: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
    Ok((summarize(&finite)?, xs.len() - finite.len()))
}

/// `E[((γ_n T_n − M̂ c_n m^α) / √m)²]` for the walk without stops, with
/// `M̂ = W_N / N^α`.
///
/// The array residual is conditionally centred given the whole base walk,
/// so the second moment splits into `c_n² E[(W_m − ρ W_N)²] + γ_n² E[B_n²]`
/// with `ρ = (m / N)^α`, and `E[W_m W_N] = E[W_m²] ∏_{m <= k < N} (1 + α / k)`.
fn exact_residual_second_moment(
    params: &WalkParams,
    n: u64,
    m: u64,
    horizon: u64,
    seq: &MomentSequences,
) -> Result<f64> {
    let alpha = params.alpha;
    let growth = (m..horizon).map(|k| (alpha / k as f64).ln_1p()).sum::<f64>().exp();
    let rho = (m as f64 / horizon as f64).powf(alpha);
    let w2 = seq.mean_w2(m);
    let gap = w2 - 2.0 * rho * growth * w2 + rho * rho * seq.mean_w2(horizon);
    let g = m as f64 / n as f64;
    let c = memory_factor(g, alpha);
    let rm = row_moments(params, n, m, seq)?;
    Ok((c * c * gap + g * g * rm.mean_b2) / m as f64)
}

impl Run<'_> {
    fn master(&self) -> StreamKey {
        StreamKey::new(self.cfg.seed())
    }

    fn push(&mut self, row: ResultRow) {
        self.rows.push(row);
    }

    fn keep_samples(&mut self, samples: &[TriangularSample]) -> Result<()> {
        if self.cfg.raw.output.samples {
            let tagged: Vec<(u64, TriangularSample)> =
                samples.iter().enumerate().map(|(i, s)| (i as u64, *s)).collect();
            self.artifacts.push(Artifact {
                name: "samples.csv".into(),
                bytes: samples_csv(&tagged)?,
            });
        }
        Ok(())
    }

    fn ensemble(&self) -> Result<Vec<TriangularSample>> {
        let cfg = self.cfg;
        sample_ensemble(
            &cfg.params,
            &cfg.schedule,
            cfg.n(),
            cfg.replications(),
            self.master(),
            cfg.raw.method,
        )
    }

    /// `γ_n T_n / scale` for each sample under the predicted normalisation.
    fn normalised(&self, samples: &[TriangularSample]) -> Vec<f64> {
        let norm = self.theory.normalization;
        samples
            .iter()
            .map(|s| s.scaled_sum() / norm.scale(s.m, s.sigma_m))
            .collect()
    }

    /// `Var(γ_n T_n)` at `(n, m)` from the moment recursions.
    fn exact_scaled_var(&self, n: u64, m: u64) -> Result<f64> {
        let seq = moment_recursions(&self.cfg.params, m)?;
        let rm = row_moments(&self.cfg.params, n, m, &seq)?;
        let g = m as f64 / n as f64;
        Ok(g * g * rm.var_t)
    }

    /// Mean of `(γ_n B_n)² / m_n` against its exact value.
    fn residual_identity(&mut self, samples: &[TriangularSample]) -> Result<()> {
        let (n, m) = (samples[0].n, samples[0].m);
        let seq = moment_recursions(&self.cfg.params, m)?;
        let rm = row_moments(&self.cfg.params, n, m, &seq)?;
        let g = m as f64 / n as f64;
        let target = g * g * rm.mean_b2 / m as f64;
        let ys: Vec<f64> = samples
            .iter()
            .map(|s| s.scaled_residual().powi(2) / m as f64)
            .collect();
        let s = summarize(&ys)?;
        self.push(ResultRow::within_se(
            "mean of (gamma_n B_n)^2 / m_n",
            s.mean,
            s.se_mean(),
            target,
            SE_BAND,
        ));
        Ok(())
    }

    fn simulate(&mut self) -> Result<()> {
        let samples = self.ensemble()?;
        let x = self.normalised(&samples);
        let (s, dropped) = summarize_finite(&x)?;
        let norm = serde_json::to_value(self.theory.normalization)?;
        let label = format!("gamma_n T_n / {}", norm.as_str().unwrap_or("scale"));
        self.push(ResultRow::describe(format!("mean of {label}"), s.mean).with_se(s.se_mean()));
        self.push(
            ResultRow::describe(format!("variance of {label}"), s.variance())
                .with_se(s.se_variance())
                .with_target(self.theory.variance),
        );
        if dropped > 0 {
            self.push(ResultRow::describe("samples with undefined normalisation", dropped as f64));
        }
        let m = samples[0].m as f64;
        let b: Vec<f64> = samples.iter().map(|s| s.scaled_residual() / m.sqrt()).collect();
        let sb = summarize(&b)?;
        self.push(ResultRow::describe("mean of gamma_n B_n / sqrt(m_n)", sb.mean).with_se(sb.se_mean()));
        self.push(ResultRow::describe("variance of gamma_n B_n / sqrt(m_n)", sb.variance()).with_se(sb.se_variance()));
        let xi: Vec<f64> = samples.iter().map(|s| s.xi as f64).collect();
        let sx = summarize(&xi)?;
        self.push(ResultRow::describe("mean of Xi_n", sx.mean).with_se(sx.se_mean()));
        self.keep_samples(&samples)
    }

    fn verify_clt(&mut self) -> Result<()> {
        match self.theory.regime {
            Regime::Subcritical => self.clt_subcritical(),
            Regime::Critical => self.clt_critical(),
            Regime::Supercritical => {
                let samples = self.residual_clt(true)?;
                self.residual_identity(&samples)
            }
        }
    }

    fn clt_subcritical(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let (n, m) = (cfg.n(), cfg.memory()?);
        let g = m as f64 / n as f64;
        let limit = self.theory.variance;

        let exact = if n <= cfg.raw.caps.max_n_walk {
            let law = t_pmf(&cfg.params, n, m, &cfg.raw.caps)?;
            g * g * pmf_moments(&law, 2)?.variance() / m as f64
        } else {
            self.exact_scaled_var(n, m)? / m as f64
        };

        let samples = self.ensemble()?;
        let x = self.normalised(&samples);
        let s = summarize(&x)?;
        self.push(ResultRow::within_se(
            "variance of gamma_n T_n / sqrt(m_n) vs exact finite-n variance",
            s.variance(),
            s.se_variance(),
            exact,
            SE_BAND,
        ));
        self.push(ResultRow::within(
            "exact finite-n variance vs limit variance",
            exact,
            limit,
            EXACT_VS_LIMIT * limit,
        ));
        let d = ks_distance(&x, &NormalCdf::new(0.0, limit)?)?;
        self.push(ResultRow::below("KS distance to N(0, limit variance)", d, KS_PLAIN));
        self.residual_identity(&samples)?;
        self.keep_samples(&samples)
    }

    fn clt_critical(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let limit = self.theory.variance;
        let mut trend = Vec::new();
        for n in cfg.grid() {
            let m = cfg.schedule.m_of(n)?;
            if m < 2 {
                continue;
            }
            let v = self.exact_scaled_var(n, m)? / (m as f64 * (m as f64).ln());
            self.push(ResultRow::describe(format!("exact variance at n = {n}"), v).with_target(limit));
            trend.push(v);
        }
        if let Some(&last) = trend.last() {
            let gaps: Vec<f64> = trend.iter().map(|v| (v - limit).abs()).collect();
            let closing = gaps.windows(2).all(|w| w[1] < w[0]);
            let one_sided = trend.windows(2).all(|w| w[1] <= w[0]) || trend.windows(2).all(|w| w[1] >= w[0]);
            let mut row = ResultRow::decided("exact variance approaches the limit monotonically", last, closing && one_sided);
            row.target = Some(limit);
            self.push(row);
            self.push(ResultRow::within(
                "exact variance at largest grid n vs limit variance",
                last,
                limit,
                CRITICAL_VS_LIMIT * limit,
            ));
        }

        let (n, m) = (cfg.n(), cfg.memory()?);
        let exact = self.exact_scaled_var(n, m)? / (m as f64 * (m as f64).ln());
        let samples = self.ensemble()?;
        let x = self.normalised(&samples);
        let (s, _) = summarize_finite(&x)?;
        self.push(ResultRow::within_se(
            "variance of gamma_n T_n / sqrt(m_n log m_n) vs exact finite-n variance",
            s.variance(),
            s.se_variance(),
            exact,
            SE_BAND,
        ));
        let finite: Vec<f64> = x.into_iter().filter(|v| v.is_finite()).collect();
        let d = ks_distance(&finite, &NormalCdf::new(0.0, limit)?)?;
        self.push(ResultRow::describe("KS distance to N(0, limit variance)", d));
        self.residual_identity(&samples)?;
        self.keep_samples(&samples)
    }

    /// Rows centred by `M̂ c_n m_n^α`, with `M̂` read off each row's own base
    /// walk extended to `N*`. Returns the rows.
    fn residual_clt(&mut self, assert_limit: bool) -> Result<Vec<TriangularSample>> {
        let cfg = self.cfg;
        let params = &cfg.params;
        let (n, m) = (cfg.n(), cfg.memory()?);
        let horizon = cfg.limit_horizon()?;
        let method = cfg.raw.method;
        let draws: Vec<Result<(TriangularSample, f64)>> = par_replicate(cfg.replications(), self.master(), |_, key| {
            let base = simulate_base_walk(params, m as usize, key.derive(rng::BASE_WALK))?;
            let row = sample_row(&base, n, m, params, key.derive(rng::ARRAY), method)?;
            let (w, _) = extend_endpoint(&base, params, horizon as usize, key.derive(rng::EXTENSION))?;
            Ok((row, w as f64 / (horizon as f64).powf(params.alpha)))
        });
        let draws = draws.into_iter().collect::<Result<Vec<_>>>()?;
        let g = m as f64 / n as f64;
        let centre = memory_factor(g, params.alpha) * (m as f64).powf(params.alpha);
        let norm = self.theory.normalization;
        let residuals: Vec<f64> = draws
            .iter()
            .map(|(s, m_hat)| (s.scaled_sum() - m_hat * centre) / norm.scale(s.m, s.sigma_m))
            .collect();

        let (s, _) = summarize_finite(&residuals)?;
        let limit = self.theory.variance;
        let name = "variance of centred residual (gamma_n T_n - M_hat c_n m_n^alpha) / scale";
        if assert_limit {
            let mut row = ResultRow::within(name, s.variance(), limit, RESIDUAL_VS_LIMIT * limit);
            row.se = Some(s.se_variance());
            self.push(row);
        } else {
            self.push(ResultRow::describe(name, s.variance()).with_se(s.se_variance()).with_target(limit));
        }
        self.push(ResultRow::describe("mean of centred residual", s.mean).with_se(s.se_mean()));

        let seq = moment_recursions(params, horizon)?;
        if norm == Normalization::SqrtMemory {
            let exact = exact_residual_second_moment(params, n, m, horizon, &seq)?;
            let mean = s.mean;
            self.push(ResultRow::within_se(
                "second moment of centred residual vs exact finite-n value",
                s.variance() + mean * mean,
                s.se_variance(),
                exact,
                SE_BAND,
            ));
        }

        let m_hats: Vec<f64> = draws.iter().map(|d| d.1).collect();
        let sm = summarize(&m_hats)?;
        let exact_mean = seq.mean_w(horizon) / (horizon as f64).powf(params.alpha);
        self.push(ResultRow::within_se("mean of M_hat", sm.mean, sm.se_mean(), exact_mean, SE_BAND));
        self.push(ResultRow::describe(
            "limit of E[W_n] / n^alpha",
            (2.0 * params.s - 1.0) / gamma_fn(1.0 + params.alpha),
        ));
        self.push(ResultRow::describe("limit horizon N*", horizon as f64));
        self.push(ResultRow::describe(
            "centring contamination (m_n / N*)^(alpha - beta/2)",
            (m as f64 / horizon as f64).powf(params.alpha - params.beta / 2.0),
        ));
        let samples: Vec<TriangularSample> = draws.iter().map(|d| d.0).collect();
        self.keep_samples(&samples)?;
        Ok(samples)
    }

    fn verify_stops(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let params = &cfg.params;
        let (n, m) = (cfg.n(), cfg.memory()?);
        let limit = self.theory.variance;

        let seq = moment_recursions(params, MOVES_HORIZON.max(m))?;
        let constant = seq.mean_sigma(MOVES_HORIZON) * gamma_fn(1.0 + params.beta)
            / (MOVES_HORIZON as f64).powf(params.beta);
        self.push(ResultRow::within(
            "Gamma(1 + beta) E[Sigma_N] / N^beta at N = 10^6",
            constant,
            1.0,
            MOVES_TOLERANCE,
        ));

        let samples = if self.theory.regime == Regime::Supercritical {
            self.residual_clt(false)?
        } else {
            let samples = self.ensemble()?;
            let x = self.normalised(&samples);
            let (s, dropped) = summarize_finite(&x)?;
            let d = ks_distance(
                &x.iter().copied().filter(|v| v.is_finite()).collect::<Vec<_>>(),
                &NormalCdf::new(0.0, limit)?,
            )?;
            if self.theory.regime == Regime::Subcritical {
                let mut row = ResultRow::within(
                    "variance of gamma_n T_n / sqrt(Sigma_m) vs limit variance",
                    s.variance(),
                    limit,
                    STOPS_VS_LIMIT * limit,
                );
                row.se = Some(s.se_variance());
                self.push(row);
                self.push(ResultRow::below("KS distance to N(0, limit variance)", d, KS_STOPS));
            } else {
                self.push(
                    ResultRow::describe("variance of gamma_n T_n / sqrt(Sigma_m log Sigma_m)", s.variance())
                        .with_se(s.se_variance())
                        .with_target(limit),
                );
                self.push(ResultRow::describe("KS distance to N(0, limit variance)", d));
                self.push(ResultRow::describe("samples with Sigma_m < 2 (excluded)", dropped as f64));
            }
            self.keep_samples(&samples)?;
            samples
        };

        let g = m as f64 / n as f64;
        let mb = (m as f64).powf(params.beta);
        let xi: Vec<f64> = samples.iter().map(|s| g * s.xi as f64 / mb).collect();
        let sx = summarize(&xi)?;
        let target = memory_factor(g, params.beta) * seq.mean_sigma(m) / mb;
        self.push(ResultRow::within_se(
            "mean of gamma_n Xi_n / m_n^beta",
            sx.mean,
            sx.se_mean(),
            target,
            SE_BAND,
        ));
        self.residual_identity(&samples)
    }

    fn verify_slln(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let grid = cfg.grid();
        let from = cfg.raw.slln_from;
        if !grid.iter().any(|&n| n >= from) {
            return Err(Error::arg(format!("no grid point reaches slln_from = {from}")));
        }
        let params = &cfg.params;
        let runs: Vec<Result<Vec<TriangularSample>>> = par_replicate(cfg.replications(), self.master(), |_, key| {
            sample_coupled_sequence(params, &cfg.schedule, &grid, key, cfg.raw.method)
        });
        let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
        let maxima: Vec<f64> = runs
            .iter()
            .map(|rows| {
                rows.iter()
                    .filter(|s| s.n >= from)
                    .map(|s| (s.t as f64 / s.n as f64).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let share = maxima.iter().filter(|&&x| x < SLLN_LEVEL).count() as f64 / maxima.len() as f64;
        let mut row = ResultRow::decided(
            format!("share of seeds with max |T_n|/n < {SLLN_LEVEL} over n >= {from}"),
            share,
            share >= SLLN_SHARE,
        );
        row.target = Some(SLLN_SHARE);
        self.push(row);
        let mut sorted = maxima.clone();
        sorted.sort_by(f64::total_cmp);
        self.push(ResultRow::describe("median over seeds of max |T_n|/n", sorted[sorted.len() / 2]));
        self.push(ResultRow::describe("largest max |T_n|/n", *sorted.last().expect("nonempty")));
        let last = *grid.last().expect("nonempty");
        let finals: Vec<f64> = runs
            .iter()
            .filter_map(|rows| rows.last().map(|s| s.t as f64 / last as f64))
            .collect();
        if finals.len() >= 2 {
            let s = summarize(&finals)?;
            self.push(ResultRow::describe(format!("mean of T_n / n at n = {last}"), s.mean).with_se(s.se_mean()));
        }
        if cfg.raw.output.samples {
            let tagged: Vec<(u64, TriangularSample)> = runs
                .iter()
                .enumerate()
                .flat_map(|(rep, rows)| rows.iter().map(move |s| (rep as u64, *s)))
                .collect();
            self.artifacts.push(Artifact {
                name: "samples.csv".into(),
                bytes: samples_csv(&tagged)?,
            });
        }
        Ok(())
    }

    fn compare_settings(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let params = &cfg.params;
        let (n, m) = (cfg.n(), cfg.memory()?);
        let g = m as f64 / n as f64;
        let supercritical = self.theory.regime == Regime::Supercritical;
        let norm = self.theory.normalization;

        let rows = if supercritical {
            self.residual_clt(true)?
        } else {
            let rows = self.ensemble()?;
            let x = self.normalised(&rows);
            let s = summarize(&x)?;
            self.push(
                ResultRow::describe("triangular: variance of gamma_n T_n / scale", s.variance())
                    .with_se(s.se_variance())
                    .with_target(self.theory.variance),
            );
            self.keep_samples(&rows)?;
            rows
        };
        let triangular_t: Vec<i64> = rows.iter().map(|s| s.t).collect();

        let horizon = if supercritical { cfg.limit_horizon()? } else { n };
        let early = (horizon / 16).max(n);
        let centre = memory_factor(g, params.alpha) * (m as f64).powf(params.alpha);
        let paths: Vec<Result<(i64, f64, f64, f64)>> = par_replicate(cfg.replications(), self.master(), |_, key| {
            let path = simulate_linear_walk(params, &cfg.schedule, horizon as usize, key.derive(rng::LINEAR))?;
            let w_n = path.position(n as usize);
            let stat = if supercritical {
                let m_hat = path.position(horizon as usize) as f64 / (horizon as f64).powf(params.alpha);
                (g * w_n as f64 - m_hat * centre) / norm.scale(m, m)
            } else {
                g * w_n as f64 / norm.scale(m, m)
            };
            Ok((
                w_n,
                stat,
                path.position(early as usize).unsigned_abs() as f64,
                path.position(horizon as usize).unsigned_abs() as f64,
            ))
        });
        let paths = paths.into_iter().collect::<Result<Vec<_>>>()?;
        let stats: Vec<f64> = paths.iter().map(|p| p.1).collect();
        let s = summarize(&stats)?;
        let label = if supercritical {
            "linear: variance of (gamma_n W'_n - M_hat' c_n m_n^alpha) / sqrt(m_n)"
        } else {
            "linear: variance of gamma_n W'_n / scale"
        };
        self.push(ResultRow::describe(label, s.variance()).with_se(s.se_variance()));
        if horizon > early {
            let a = summarize(&paths.iter().map(|p| p.2).collect::<Vec<_>>())?.mean;
            let b = summarize(&paths.iter().map(|p| p.3).collect::<Vec<_>>())?.mean;
            self.push(
                ResultRow::describe(
                    format!("linear: growth exponent of E|W'_n| between n = {early} and {horizon}"),
                    (b / a).ln() / (horizon as f64 / early as f64).ln(),
                )
                .with_target(params.alpha),
            );
        }
        let linear_w: Vec<i64> = paths.iter().map(|p| p.0).collect();
        let test = chi_square_two_sample(&triangular_t, &linear_w, 5.0)?;
        self.push(ResultRow::describe("two-sample chi-square p-value, T_n vs W'_n", test.p_value));
        Ok(())
    }

    fn exact(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let params = &cfg.params;
        let caps = &cfg.raw.caps;
        let (n, m) = (cfg.n(), cfg.memory()?);
        let law = if params.has_stops() {
            let joint = t_xi_pmf(params, n, m, caps)?;
            let mut buf = Vec::new();
            joint.write_csv(&mut buf, &["t", "xi"])?;
            self.artifacts.push(Artifact {
                name: "pmf_T_Xi.csv".into(),
                bytes: buf,
            });
            joint.map(|(t, _)| t)
        } else {
            t_pmf(params, n, m, caps)?
        };
        let mut buf = Vec::new();
        law.write_csv(&mut buf, &["state"])?;
        self.artifacts.push(Artifact {
            name: "pmf_T.csv".into(),
            bytes: buf,
        });
        let mut buf = Vec::new();
        match walk_pmf(params, m, caps)? {
            WalkPmf::Position(p) => p.write_csv(&mut buf, &["state"])?,
            WalkPmf::Joint(j) => j.write_csv(&mut buf, &["w", "sigma"])?,
        }
        self.artifacts.push(Artifact {
            name: "pmf_W_m.csv".into(),
            bytes: buf,
        });

        let moments = pmf_moments(&law, 2)?;
        let seq = moment_recursions(params, m)?;
        let tower = row_moments(params, n, m, &seq)?;
        let tol = |x: f64| IDENTITY_TOLERANCE * x.abs().max(1.0);
        self.push(ResultRow::within("E[T_n]", moments.mean(), tower.mean_t, tol(tower.mean_t)));
        self.push(ResultRow::within("Var T_n", moments.variance(), tower.var_t, tol(tower.var_t)));
        self.push(ResultRow::describe("support size of T_n", law.len() as f64));
        let norm = self.theory.normalization;
        if norm == Normalization::SqrtMemory || norm == Normalization::SqrtMemoryLog {
            let g = m as f64 / n as f64;
            let scale = norm.scale(m, m);
            if scale > 0.0 {
                self.push(
                    ResultRow::describe("Var of normalised gamma_n T_n", g * g * moments.variance() / (scale * scale))
                        .with_target(self.theory.variance),
                );
            }
        }
        Ok(())
    }

    fn azuma(&mut self) -> Result<()> {
        let samples = self.ensemble()?;
        let (n, m, g) = (samples[0].n, samples[0].m, samples[0].gamma_n);
        let b: Vec<f64> = samples.iter().map(|s| s.scaled_residual()).collect();
        let grid = tail_grid(&b, &TAIL_LEVELS)?;
        let report = azuma_tail_check(&b, n, m, g, &grid)?;
        let mut out = csv::Writer::from_writer(Vec::new());
        out.write_record(["level", "x", "exceed_freq", "se", "bound", "pass"])?;
        for (level, row) in TAIL_LEVELS.iter().zip(&report.rows) {
            out.write_record([
                level.to_string(),
                row.x.to_string(),
                row.exceed_freq.to_string(),
                row.se.to_string(),
                row.bound.to_string(),
                row.pass.to_string(),
            ])?;
            self.rows.push(ResultRow {
                name: format!("P(|gamma_n B_n| >= {:.4}) at tail level {level}", row.x),
                value: row.exceed_freq,
                se: Some(row.se),
                target: Some(row.bound),
                tolerance: Some(0.1 * row.bound + SE_BAND * row.se),
                pass: Some(row.pass),
            });
        }
        self.artifacts.push(Artifact {
            name: "azuma.csv".into(),
            bytes: out.into_inner().map_err(|e| Error::Io(e.into_error()))?,
        });
        self.keep_samples(&samples)
    }
}
