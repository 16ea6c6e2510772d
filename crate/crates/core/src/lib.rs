//! Simulation and analysis toolkit for a broadband Raman quantum memory
//! with four-wave-mixing noise.
//!
//! The crate covers the full chain from physical parameters to measurable
//! statistics:
//!
//! - [`params`]: parameter sets, dimensionless couplings, effective time;
//! - [`greens`]: numerical Green's functions of one control stage;
//! - [`channel`]: composition into transmission/retrieval channels;
//! - [`statistics`]: photon-number moments, g² autocorrelations, scans;
//! - [`uncertainty`]: seeded Monte-Carlo error bands;
//! - [`counts`]: estimators over experimental coincidence records;
//! - [`stats_tests`]: Welch, Student-t and Shapiro–Wilk tests;
//! - [`cache`]: keyed binary cache for Green's sets.

pub mod cache;
pub mod channel;
pub mod counts;
pub mod error;
pub mod greens;
pub mod linalg;
pub mod params;
pub mod statistics;
pub mod uncertainty;

pub use channel::{channel_retrieval, channel_transmission, LinearChannel};
pub use error::{Error, Result};
pub use greens::{
    build_greens, check_commutators, check_convergence, uniform_mode, ConvergenceReport,
    Discretization, GreensSet,
};
pub use params::{derive_couplings, effective_time_map, ControlPulse, Couplings, MemoryParams};
pub use statistics::{
    channel_moments, incoherent_g2, memory_efficiency_model, noise_g2, scan_input_number,
    scan_ratio_r, snr_model, EffResult, InputKind, InputState, Moments, ScanCurve, ScanPoint,
    StateFamily,
};
pub use uncertainty::{mc_band, sample_params, McBand, McPoint, McScan, McTask, ParamUncertainty};
