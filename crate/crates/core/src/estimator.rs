//! Point-target echo synthesis and maximum-likelihood angle estimation.
//!
//! For a waveform `X` (original or projected) the receive snapshot is
//! `y(n) = α A(θ) x(n) + n(n)`. The matched filter collapses it to
//! `E = Σ_n y(n) x(n − τ_r)ᴴ e^{jω_D n}` and the ML statistic is
//!
//! ```text
//!              | a_Rᴴ(θ) E a_T*(θ) |²
//!   f(θ) = ------------------------------
//!           M_R · a_Tᴴ(θ) Rᵀ a_T(θ)
//! ```
//!
//! with `R = X Xᴴ` of the waveform actually transmitted. Delay and Doppler
//! are taken as known (zero) in the experiments, so the arg max runs over
//! angle only.

use rand::Rng;

use crate::array::{receive_steering, steering_matrix, transmit_steering, ArrayGeometry};
use crate::channel::complex_gaussian;
use crate::waveform::CorrelationMatrix;
use crate::{CMatrix, CVector, Error, Result, C64};

/// Relative floor on the objective denominator, scaled by `trace(R)`.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiveSnapshot {
    /// `M_R × L` received samples.
    pub samples: CMatrix,
    pub true_angle: f64,
    pub path_gain: C64,
    pub noise_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedFilterOutput {
    /// `M_R × M_T`.
    pub entries: CMatrix,
    /// Delay in samples.
    pub delay: usize,
    /// Doppler in rad/sample.
    pub doppler: f64,
}

/// Search grid over `[−90°, 90°]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MLGrid {
    degrees: Vec<f64>,
    pub step: f64,
}

impl MLGrid {
    pub fn uniform(step_deg: f64) -> Result<Self> {
        if !(step_deg > 0.0 && step_deg <= 180.0 && step_deg.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "grid step must be in (0, 180] degrees, got {step_deg}"
            )));
        }
        let n = (180.0 / step_deg + 1e-9).floor() as usize;
        let mut degrees: Vec<f64> = (0..=n).map(|i| -90.0 + i as f64 * step_deg).collect();
        if *degrees.last().unwrap() < 90.0 - 1e-9 {
            degrees.push(90.0);
        }
        Ok(Self {
            degrees,
            step: step_deg.to_radians(),
        })
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    /// Grid angles in degrees, increasing.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn angle(&self, index: usize) -> f64 {
        self.degrees[index].to_radians()
    }

    pub fn angles(&self) -> impl Iterator<Item = f64> + '_ {
        self.degrees.iter().map(|d| d.to_radians())
    }
}

/// `M_R × L` matrix of i.i.d. circular complex Gaussian noise, variance `noise_power`.
pub fn sample_noise<R: Rng + ?Sized>(rows: usize, cols: usize, noise_power: f64, rng: &mut R) -> CMatrix {
    let scale = noise_power.sqrt();
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng) * scale)
}

/// Echo `α A(θ) X + N` for an explicit noise realization.
pub fn received_with_noise(
    geometry: &ArrayGeometry,
    waveform: &CMatrix,
    true_angle: f64,
    path_gain: C64,
    noise: &CMatrix,
    noise_power: f64,
) -> Result<ReceiveSnapshot> {
    if waveform.nrows() != geometry.num_tx {
        return Err(Error::DimensionMismatch {
            expected: format!("{} waveform rows", geometry.num_tx),
            actual: format!("{}", waveform.nrows()),
        });
    }
    if noise.shape() != (geometry.num_rx, waveform.ncols()) {
        return Err(Error::DimensionMismatch {
            expected: format!("noise {:?}", (geometry.num_rx, waveform.ncols())),
            actual: format!("{:?}", noise.shape()),
        });
    }
    let a = steering_matrix(
        &receive_steering(geometry, true_angle),
        &transmit_steering(geometry, true_angle),
    );
    let samples = a.entries * waveform * path_gain + noise;
    Ok(ReceiveSnapshot {
        samples,
        true_angle,
        path_gain,
        noise_power,
    })
}

pub fn simulate_received<R: Rng + ?Sized>(
    geometry: &ArrayGeometry,
    waveform: &CMatrix,
    true_angle: f64,
    path_gain: C64,
    noise_power: f64,
    rng: &mut R,
) -> Result<ReceiveSnapshot> {
    if !(noise_power >= 0.0 && noise_power.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise power must be nonnegative, got {noise_power}"
        )));
    }
    let noise = sample_noise(geometry.num_rx, waveform.ncols(), noise_power, rng);
    received_with_noise(geometry, waveform, true_angle, path_gain, &noise, noise_power)
}

/// `E(τ, ω_D) = Σ_n y(n) x(n − τ)ᴴ e^{jω_D n}`; samples before the delay see no waveform.
pub fn matched_filter(y: &ReceiveSnapshot, waveform: &CMatrix, delay: usize, doppler: f64) -> MatchedFilterOutput {
    let (m_r, len) = y.samples.shape();
    let m_t = waveform.nrows();
    let entries = if delay == 0 && doppler == 0.0 {
        &y.samples * waveform.adjoint()
    } else {
        let mut e = CMatrix::zeros(m_r, m_t);
        for n in delay..len.min(waveform.ncols() + delay) {
            let rot = C64::from_polar(1.0, doppler * n as f64);
            let yn = y.samples.column(n) * rot;
            let xn = waveform.column(n - delay);
            e += yn * xn.adjoint();
        }
        e
    };
    MatchedFilterOutput {
        entries,
        delay,
        doppler,
    }
}

/// ML statistic at `angle`, or `None` where the denominator falls below the floor.
pub fn ml_objective(
    angle: f64,
    e: &MatchedFilterOutput,
    r: &CorrelationMatrix,
    geometry: &ArrayGeometry,
) -> Option<f64> {
    let a_t = transmit_steering(geometry, angle).entries;
    let a_r = receive_steering(geometry, angle).entries;
    objective_with(&a_t, &a_r, e, &r.entries.transpose(), floor_of(r), geometry.num_rx)
}

fn floor_of(r: &CorrelationMatrix) -> f64 {
    DENOMINATOR_FLOOR * r.trace().abs()
}

fn objective_with(
    a_t: &CVector,
    a_r: &CVector,
    e: &MatchedFilterOutput,
    r_t: &CMatrix,
    floor: f64,
    num_rx: usize,
) -> Option<f64> {
    let denom = (a_t.adjoint() * r_t * a_t)[(0, 0)].re;
    if !(denom > floor) {
        return None;
    }
    let num = (a_r.adjoint() * &e.entries * a_t.conjugate())[(0, 0)].norm_sqr();
    Some(num / (num_rx as f64 * denom))
}

/// Steering vectors for every grid angle, reusable across estimates.
#[derive(Debug, Clone)]
pub struct SteeringTable {
    transmit: Vec<CVector>,
    receive: Vec<CVector>,
}

impl SteeringTable {
    pub fn new(grid: &MLGrid, geometry: &ArrayGeometry) -> Self {
        let (transmit, receive) = grid
            .angles()
            .map(|a| {
                (
                    transmit_steering(geometry, a).entries,
                    receive_steering(geometry, a).entries,
                )
            })
            .unzip();
        Self { transmit, receive }
    }
}

/// Grid index of the ML angle estimate; ties go to the smaller angle.
pub fn estimate_aoa_index(
    y: &ReceiveSnapshot,
    waveform: &CMatrix,
    r: &CorrelationMatrix,
    grid: &MLGrid,
    geometry: &ArrayGeometry,
) -> Result<usize> {
    estimate_with_table(y, waveform, r, &SteeringTable::new(grid, geometry), geometry.num_rx)
}

/// As [`estimate_aoa_index`], with precomputed steering vectors.
pub fn estimate_with_table(
    y: &ReceiveSnapshot,
    waveform: &CMatrix,
    r: &CorrelationMatrix,
    table: &SteeringTable,
    num_rx: usize,
) -> Result<usize> {
    if table.transmit.is_empty() {
        return Err(Error::EstimationFailure("empty search grid".into()));
    }
    let e = matched_filter(y, waveform, 0, 0.0);
    let r_t = r.entries.transpose();
    let floor = floor_of(r);
    let mut best: Option<(usize, f64)> = None;
    for (i, (a_t, a_r)) in table.transmit.iter().zip(&table.receive).enumerate() {
        if let Some(v) = objective_with(a_t, a_r, &e, &r_t, floor, num_rx) {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    best.map(|(i, _)| i).ok_or_else(|| {
        Error::EstimationFailure("objective denominator is degenerate at every grid angle".into())
    })
}

/// ML angle estimate in radians.
pub fn estimate_aoa(
    y: &ReceiveSnapshot,
    waveform: &CMatrix,
    r: &CorrelationMatrix,
    grid: &MLGrid,
    geometry: &ArrayGeometry,
) -> Result<f64> {
    estimate_aoa_index(y, waveform, r, grid, geometry).map(|i| grid.angle(i))
}
