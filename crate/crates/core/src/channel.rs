//! Interference channel and wave-height perturbation sampling.
//!
//! The radar-to-communication channel `H_I` is `N_R × M_T` with i.i.d.
//! unit-power circular complex Gaussian entries. Ship motion perturbs it by
//! `ΔH_I`, whose entries are Rayleigh wave heights
//! `p(h) = (2h/h_rms²)·exp(−(h/h_rms)²)`.
//!
//! Every sampler takes an explicit random stream. Wave heights are drawn by
//! inverting the Rayleigh CDF with exactly one uniform per height, so two
//! models that differ only in `h_rms` and share a stream produce perturbations
//! that are exact scalings of each other.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::{CMatrix, Error, Result, C64};

/// `N_R × M_T` channel from the radar transmitter to the communication receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceChannel {
    pub entries: CMatrix,
}

impl InterferenceChannel {
    pub fn new(entries: CMatrix) -> Self {
        Self { entries }
    }

    pub fn n_rx(&self) -> usize {
        self.entries.nrows()
    }

    pub fn m_tx(&self) -> usize {
        self.entries.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PerturbationStyle {
    /// Raw nonnegative Rayleigh heights on the real axis.
    #[default]
    RealPositive,
    /// Rayleigh magnitude with an independent uniform phase.
    ComplexUniformPhase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationModel {
    h_rms: f64,
    pub style: PerturbationStyle,
}

impl PerturbationModel {
    pub fn new(h_rms: f64, style: PerturbationStyle) -> Result<Self> {
        if !(h_rms >= 0.0 && h_rms.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "h_rms must be finite and nonnegative, got {h_rms}"
            )));
        }
        Ok(Self { h_rms, style })
    }

    pub fn h_rms(&self) -> f64 {
        self.h_rms
    }
}

/// `E{vec(ΔH) vec(ΔH)ᴴ}` with column-stacking `vec`; no mean is removed.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondMomentMatrix {
    pub entries: CMatrix,
}

/// One unit-power circular complex Gaussian draw.
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn sample_interference_channel<R: Rng + ?Sized>(
    n_rx: usize,
    m_tx: usize,
    rng: &mut R,
) -> InterferenceChannel {
    InterferenceChannel::new(CMatrix::from_fn(n_rx, m_tx, |_, _| complex_gaussian(rng)))
}

/// One Rayleigh wave height. Always consumes one uniform, even for `h_rms = 0`.
pub fn sample_wave_height<R: Rng + ?Sized>(model: &PerturbationModel, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    // 1 − u lies in (0, 1], so the log is finite
    model.h_rms * (-(1.0 - u).ln()).sqrt()
}

pub fn rms_wave_height(heights: &[f64]) -> Result<f64> {
    if heights.is_empty() {
        return Err(Error::InvalidArgument(
            "rms wave height of an empty record is undefined".into(),
        ));
    }
    let mean_sq = heights.iter().map(|h| h * h).sum::<f64>() / heights.len() as f64;
    Ok(mean_sq.sqrt())
}

/// `ΔH_I` with i.i.d. entries drawn according to `model`.
pub fn sample_perturbation<R: Rng + ?Sized>(
    n_rx: usize,
    m_tx: usize,
    model: &PerturbationModel,
    rng: &mut R,
) -> CMatrix {
    CMatrix::from_fn(n_rx, m_tx, |_, _| {
        let h = sample_wave_height(model, rng);
        match model.style {
            PerturbationStyle::RealPositive => C64::new(h, 0.0),
            PerturbationStyle::ComplexUniformPhase => {
                let phase = 2.0 * PI * rng.random::<f64>();
                C64::from_polar(h, phase)
            }
        }
    })
}

/// `H_ΔI = H_I + ΔH_I`.
pub fn perturbed_channel(h: &InterferenceChannel, dh: &CMatrix) -> Result<InterferenceChannel> {
    if h.entries.shape() != dh.shape() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", h.entries.shape()),
            actual: format!("{:?}", dh.shape()),
        });
    }
    Ok(InterferenceChannel::new(&h.entries + dh))
}

pub fn empirical_second_moment(samples: &[CMatrix]) -> Result<SecondMomentMatrix> {
    let first = samples.first().ok_or_else(|| {
        Error::InvalidArgument("second moment needs at least one sample".into())
    })?;
    let shape = first.shape();
    let dim = shape.0 * shape.1;
    let mut acc = CMatrix::zeros(dim, dim);
    for s in samples {
        if s.shape() != shape {
            return Err(Error::DimensionMismatch {
                expected: format!("{shape:?}"),
                actual: format!("{:?}", s.shape()),
            });
        }
        // nalgebra storage is column-major, i.e. already vec(ΔH)
        let v = crate::CVector::from_column_slice(s.as_slice());
        acc.ger(C64::new(1.0, 0.0), &v, &v.conjugate(), C64::new(1.0, 0.0));
    }
    acc /= C64::new(samples.len() as f64, 0.0);
    Ok(SecondMomentMatrix { entries: acc })
}
