//! Quantum Cramér-Rao bounds for SU(2) and SU(1,1) interferometers.
//!
//! Everything is driven by the five photon-number moments of the two-mode
//! state after the first splitter ([`moments::ModeStatistics`]). From those we
//! build the 2x2 information matrix over the phase sum and difference, in the
//! lossless case ([`qfim_ideal`]) and under photon loss described by a
//! one-parameter family of Kraus representations ([`qfim_lossy`]). The loss
//! family parameter is minimized numerically by [`optimizer`]. The
//! [`fock_oracle`] module recomputes the same quantities by brute force in a
//! truncated Fock space and exists for verification.

pub mod cli;
pub mod error;
pub mod fock_oracle;
pub mod moments;
pub mod optimizer;
pub mod qfim_ideal;
pub mod qfim_lossy;

pub use error::{Error, Result};

/// Relative difference `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
