//! Estimators and hypothesis tests shared by the experiments.

mod azuma;
mod gof;
mod limit;
mod summary;

pub use azuma::{azuma_bound, azuma_tail_check, tail_grid, AzumaReport, AzumaRow};
pub use gof::{chi_square_gof, chi_square_two_sample, ks_distance, Cdf, ChiSquare, Continuous, NormalCdf, PointMass};
pub use limit::{estimate_limit_m, LimitEstimate};
pub use summary::{summarize, SummaryStats};
