//! Simulation laboratory for elephant random walks (ERW) with gradually
//! increasing memory in the triangular-array setting, with and without stops.
//!
//! The crate is organised bottom-up:
//!
//! - [`walk`]: the base walk, its one-step conditional law and path simulation.
//! - [`schedule`]: memory schedules `n -> m_n`.
//! - [`triangular`]: row sampling, the conditional-mean/residual split and the
//!   coupled sequence `T_n` across rows.
//! - [`linear`]: the linear-setting walk, kept for comparison experiments.
//! - [`theory`]: regime classification, limit variances, moment recursions and
//!   the gamma function.
//! - [`oracle`]: exact finite-`n` laws by dynamic programming.
//! - [`stats`]: summaries, goodness-of-fit tests and tail checks.
//! - [`experiment`]: the configuration-driven runner behind the `erwlab` CLI.
//!
//! All randomness flows through [`rng::StreamKey`], so every result is a pure
//! function of its configuration and master seed.

pub mod error;
pub mod experiment;
pub mod linear;
pub mod oracle;
pub mod rng;
pub mod schedule;
pub mod stats;
pub mod theory;
pub mod triangular;
pub mod walk;

mod exact;

pub use error::{Error, Result};
pub use oracle::{OracleCaps, Pmf};
pub use rng::StreamKey;
pub use schedule::MemorySchedule;
pub use triangular::{SamplingMethod, TriangularSample};
pub use walk::{StepLaw, Trajectory, WalkParams};
