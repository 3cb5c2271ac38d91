//! Property tests for path, row, summary and pmf invariants.

use erwlab::oracle::{t_pmf, walk_pmf};
use erwlab::stats::SummaryStats;
use erwlab::triangular::{conditional_moments, sample_row};
use erwlab::walk::simulate_base_walk;
use erwlab::{MemorySchedule, OracleCaps, SamplingMethod, StreamKey, WalkParams};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = WalkParams> {
    (0.0..=1.0f64, -0.95..0.95f64, 0.05..=1.0f64, any::<bool>()).prop_map(|(s, a, b, stops)| {
        let beta = if stops { b.min(0.99) } else { 1.0 };
        WalkParams::from_alpha_beta(s, a * beta, beta).unwrap()
    })
}

fn method() -> impl Strategy<Value = SamplingMethod> {
    prop_oneof![Just(SamplingMethod::Direct), Just(SamplingMethod::Collapsed)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn paths_keep_their_invariants(p in params(), len in 1usize..400, seed in any::<u64>()) {
        let path = simulate_base_walk(&p, len, StreamKey::new(seed)).unwrap();
        prop_assert_eq!(path.len(), len);
        prop_assert!(path.check_invariants(p.has_stops()).is_ok());
    }

    #[test]
    fn rows_keep_their_invariants(
        p in params(),
        n in 2u64..600,
        gamma in 0.01..=1.0f64,
        seed in any::<u64>(),
        method in method(),
    ) {
        let schedule = MemorySchedule::proportional(gamma).unwrap();
        let m = schedule.m_of(n).unwrap();
        prop_assert!(1 <= m && m <= n);
        let base = simulate_base_walk(&p, m as usize, StreamKey::new(seed)).unwrap();
        let row = sample_row(&base, n, m, &p, StreamKey::new(seed ^ 1), method).unwrap();
        prop_assert!(row.t.unsigned_abs() <= row.xi && row.xi <= n);
        prop_assert!(row.sigma_m <= row.xi);
        prop_assert!((row.a + row.b - row.t as f64).abs() < 1e-9 * (1.0 + n as f64));
        if !p.has_stops() {
            prop_assert_eq!((row.t - n as i64).rem_euclid(2), 0);
            prop_assert_eq!(row.xi, n);
        }
        let cm = conditional_moments(row.w_m, row.sigma_m, n, m, &p).unwrap();
        prop_assert!(cm.var_b >= -1e-9 && cm.var_xi_part >= -1e-9);
    }

    #[test]
    fn schedules_stay_in_range(theta in 0.01..0.99f64, gamma in 0.001..=1.0f64, n in 1u64..5_000_000) {
        for s in [MemorySchedule::power(theta).unwrap(), MemorySchedule::proportional(gamma).unwrap(), MemorySchedule::sublinear_log()] {
            let m = s.m_of(n).unwrap();
            prop_assert!(1 <= m && m <= n);
        }
    }

    #[test]
    fn merge_equals_concatenation(xs in prop::collection::vec(-1e3..1e3f64, 2..200), split in 0usize..200) {
        let split = split.min(xs.len());
        let mut whole = SummaryStats::new();
        xs.iter().for_each(|&x| whole.push(x));
        let (mut a, mut b) = (SummaryStats::new(), SummaryStats::new());
        xs[..split].iter().for_each(|&x| a.push(x));
        xs[split..].iter().for_each(|&x| b.push(x));
        let merged = a.merge(&b);
        prop_assert_eq!(merged.count, whole.count);
        prop_assert!((merged.mean - whole.mean).abs() <= 1e-9 * (1.0 + whole.mean.abs()));
        prop_assert!((merged.variance() - whole.variance()).abs() <= 1e-8 * (1.0 + whole.variance()));
        prop_assert!(merged.variance() >= 0.0);
        prop_assert_eq!((merged.min, merged.max), (whole.min, whole.max));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn oracle_laws_are_normalised(p in params(), n in 1u64..60, frac in 0.0..=1.0f64) {
        let caps = OracleCaps::default();
        let m = ((n as f64 * frac).ceil() as u64).clamp(1, n);
        let row = t_pmf(&p, n, m, &caps).unwrap();
        prop_assert!((row.total() - 1.0).abs() < 1e-12);
        prop_assert!(row.probs().iter().all(|&q| q >= 0.0));
        prop_assert!(row.support().iter().all(|t| t.unsigned_abs() <= n));
        if !p.has_stops() {
            prop_assert!(row.support().iter().all(|t| (t - n as i64).rem_euclid(2) == 0));
        }
        let walk = walk_pmf(&p, n, &caps).unwrap().positions();
        let full = t_pmf(&p, n, n, &caps).unwrap();
        prop_assert_eq!(walk.support(), full.support());
        for (a, b) in walk.probs().iter().zip(full.probs()) {
            prop_assert!((a - b).abs() < 1e-14);
        }
    }
}
