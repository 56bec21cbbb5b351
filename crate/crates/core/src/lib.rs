//! Phase-noise to intensity-noise conversion in three-level Λ (EIT/CPT)
//! systems.
//!
//! A diode laser with phase-diffusion noise drives both arms of a Λ system.
//! The resonant atoms turn that phase noise into intensity noise on the two
//! fields, and the zero-lag cross-correlation g²(0) of the two intensity
//! fluctuations flips from correlation to anticorrelation within a very
//! narrow two-photon detuning window.
//!
//! The crate is organised as:
//!
//! * [`model`]: parameters of the Λ system and the matrix generators of the
//!   phase-averaged first- and second-moment equations.
//! * [`moments`]: stationary mean and covariance solves, and g²(0).
//! * [`oracle`]: a brute-force Monte-Carlo integrator of the stochastic Bloch
//!   equations, used to validate the moment solver and to synthesise traces.
//! * [`spectro`]: detuning sweeps, linewidth extraction, trend curves, EIT
//!   spectra, zero-power extrapolation and Doppler averaging.
//! * [`trace`]: offline analysis of two-channel intensity time series.
//!
//! All rates and detunings are angular frequencies in rad/μs; times are in μs.
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod exec;
pub mod linalg;
pub mod model;
pub mod moments;
pub mod oracle;
pub mod spectro;
pub mod stats;
pub mod trace;
pub mod units;

pub use error::{Error, Result};
pub use exec::{Executor, Serial};
pub use model::{
    build_first_moment_generators, build_second_moment_generators, Component, DensityVector,
    GeneratorSet, ModelParams, StateLabeling,
};
pub use moments::{
    cross_correlation, solve_stationary_covariance, solve_stationary_mean, CorrelationResult,
    MomentState,
};
pub use oracle::{OracleConfig, TrajectoryStats};
pub use spectro::{SpectrumResult, TrendCurve};
pub use trace::TraceSet;
