//! Null-space projection (NSP) spectrum sharing between a colocated MIMO radar
//! and a MIMO communication receiver.
//!
//! The radar projects its transmit waveform onto the null space of the
//! radar-to-communication interference channel. When that channel is perturbed
//! (for example by the heave of a ship-mounted radar) the projection changes,
//! and so does the radar's maximum-likelihood angle-of-arrival accuracy. This
//! crate simulates both effects:
//!
//! - [`array`]: uniform linear array steering vectors and matrices.
//! - [`waveform`]: orthogonal constant-envelope BPSK waveforms and their correlation.
//! - [`channel`]: interference channel, Rayleigh wave-height perturbations, second moments.
//! - [`nsp`]: SVD null space, projector, projection and leakage.
//! - [`estimator`]: received-signal synthesis, matched filter and ML grid search.
//! - [`montecarlo`]: paired multi-arm trials and their aggregation.
//! - [`cli`]: flat key-value configuration and CSV/manifest output.

pub mod array;
pub mod channel;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod montecarlo;
pub mod nsp;
pub mod waveform;

pub use error::{Error, Result};

use nalgebra::{Complex, DMatrix, DVector};

/// Complex double used for all baseband quantities.
pub type C64 = Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = DVector<C64>;
