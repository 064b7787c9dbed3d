//! CSIT-free downlink precoding for FDD massive MIMO.
//!
//! The base station transmits over `N` time slots with deterministic
//! precoders built from column permutations of the DFT matrix. Each device
//! combines its `N` received samples with the matching permuted DFT matrix
//! and the entrywise inverse of its (estimated) channel, which cancels every
//! other device's symbol exactly. Two pilot slots let each device estimate
//! its own line-of-sight channel by a codebook search, either per
//! subcarrier ([`estimator::algorithm1`]) or jointly across OFDM subcarriers
//! ([`estimator::algorithm2`]).
//!
//! Module map:
//!
//! * [`dft`] - circulant index, DFT matrix, permuted family, precoders
//! * [`channel`] - array geometry, mmWave LoS/NLoS channels, noise
//! * [`transceiver`] - frames, precoded transmission, received blocks
//! * [`receiver`] - combiner, gains, SINR and spectral-efficiency metrics
//! * [`estimator`] - codebooks, gain/score estimation, search algorithms
//! * [`baselines`] - MRT, ZF and WMMSE with full CSIT
//! * [`harness`] - experiment configuration, presets, Monte Carlo runs, CSV
//!
//! Indices are zero-based throughout the API: device `k` uses combiner
//! `F_k` and symbol slot `k`, and the two pilots occupy slots `N - 2` and
//! `N - 1`.

pub mod baselines;
pub mod channel;
pub mod dft;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod receiver;
pub mod rng;
pub mod transceiver;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub use error::{Error, Result};

/// Dense complex matrix.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = DVector<Complex64>;

/// Converts a power in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
