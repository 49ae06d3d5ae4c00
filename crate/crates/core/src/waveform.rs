//! Orthogonal constant-envelope BPSK transmit waveforms.
//!
//! Row `m` of the waveform matrix is the baseband signal of transmit element
//! `m` over `L` unit-spaced snapshots. Rows follow Walsh-Hadamard sign
//! patterns scaled by `1/√L`, which keeps every sample at the same magnitude
//! and makes the correlation matrix `X Xᴴ` the identity.

use crate::{CMatrix, Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct RadarWaveform {
    /// `M_T × L` sample matrix.
    pub samples: CMatrix,
    /// Common magnitude of every sample.
    pub amplitude: f64,
}

impl RadarWaveform {
    pub fn num_tx(&self) -> usize {
        self.samples.nrows()
    }

    pub fn num_samples(&self) -> usize {
        self.samples.ncols()
    }
}

/// `R = X Xᴴ`, the discrete form of `∫ x(t) x(t)ᴴ dt` over the observation.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub entries: CMatrix,
}

impl CorrelationMatrix {
    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }
}

/// Sign of Sylvester-Hadamard entry `(row, col)`.
fn walsh_sign(row: usize, col: usize) -> f64 {
    if (row & col).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Deterministic orthogonal BPSK rows with amplitude `1/√num_samples`.
///
/// Uses the first `num_tx` rows of the Hadamard matrix of order `p` (the
/// smallest power of two `≥ num_tx`), tiled `num_samples / p` times.
pub fn generate_orthogonal_bpsk(num_tx: usize, num_samples: usize) -> Result<RadarWaveform> {
    if num_tx == 0 {
        return Err(Error::InvalidArgument("num_tx must be at least 1".into()));
    }
    if num_samples < num_tx {
        return Err(Error::InvalidArgument(format!(
            "{num_samples} samples cannot carry {num_tx} orthogonal rows"
        )));
    }
    let order = num_tx.next_power_of_two();
    if num_samples % order != 0 {
        return Err(Error::InvalidArgument(format!(
            "num_samples ({num_samples}) must be a multiple of {order}"
        )));
    }
    let amplitude = 1.0 / (num_samples as f64).sqrt();
    let samples = CMatrix::from_fn(num_tx, num_samples, |m, n| {
        C64::new(amplitude * walsh_sign(m, n % order), 0.0)
    });
    Ok(RadarWaveform { samples, amplitude })
}

/// Correlation of any waveform matrix (original or projected).
pub fn correlation_of(samples: &CMatrix) -> CorrelationMatrix {
    CorrelationMatrix {
        entries: samples * samples.adjoint(),
    }
}

pub fn correlation_matrix(waveform: &RadarWaveform) -> CorrelationMatrix {
    correlation_of(&waveform.samples)
}
