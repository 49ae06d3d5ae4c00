//! Uniform linear array geometry and narrowband steering.
//!
//! Angles are measured from broadside in radians. Element 0 is the phase
//! reference, and the propagation delay to element `k` appears only as the
//! phase `2π·d·k·sin θ` (with `d` in wavelengths).

use std::f64::consts::PI;

use crate::{CMatrix, CVector, Error, Result, C64};

/// Carrier at the centre of the 3550-3600 MHz shared band.
pub const DEFAULT_CARRIER_HZ: f64 = 3.575e9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub num_tx: usize,
    pub num_rx: usize,
    /// Inter-element spacing in wavelengths.
    pub element_spacing: f64,
    /// ω_c in rad/s. Only enters through the spacing-in-wavelengths convention.
    pub carrier_angular_frequency: f64,
}

impl ArrayGeometry {
    /// Half-wavelength ULA with `num_tx` transmit and `num_rx` receive elements.
    pub fn new(num_tx: usize, num_rx: usize) -> Result<Self> {
        Self::with_spacing(num_tx, num_rx, 0.5)
    }

    pub fn with_spacing(num_tx: usize, num_rx: usize, element_spacing: f64) -> Result<Self> {
        if num_tx == 0 || num_rx == 0 {
            return Err(Error::InvalidArgument(format!(
                "array needs at least one element per side (num_tx={num_tx}, num_rx={num_rx})"
            )));
        }
        if !(element_spacing > 0.0 && element_spacing.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "element spacing must be positive, got {element_spacing}"
            )));
        }
        Ok(Self {
            num_tx,
            num_rx,
            element_spacing,
            carrier_angular_frequency: 2.0 * PI * DEFAULT_CARRIER_HZ,
        })
    }

    /// Free-space wavelength of the carrier in metres.
    pub fn wavelength(&self) -> f64 {
        2.0 * PI * 299_792_458.0 / self.carrier_angular_frequency
    }
}

/// Unit-modulus array response for one side of the array.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub entries: CVector,
    pub angle: f64,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `A(θ) = a_R(θ) a_T(θ)ᵀ`, an `M_R × M_T` rank-one matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringMatrix {
    pub entries: CMatrix,
}

fn ula_response(len: usize, spacing: f64, angle: f64) -> SteeringVector {
    let phase_step = -2.0 * PI * spacing * angle.sin();
    let entries = CVector::from_fn(len, |k, _| C64::from_polar(1.0, phase_step * k as f64));
    SteeringVector { entries, angle }
}

/// Transmit steering vector `a_T(θ)`; entry `k` is `exp(−j·2π·d·k·sin θ)`.
pub fn transmit_steering(geometry: &ArrayGeometry, angle: f64) -> SteeringVector {
    ula_response(geometry.num_tx, geometry.element_spacing, angle)
}

/// Receive steering vector `a_R(θ)`, same phase law over `M_R` elements.
pub fn receive_steering(geometry: &ArrayGeometry, angle: f64) -> SteeringVector {
    ula_response(geometry.num_rx, geometry.element_spacing, angle)
}

/// Outer product with a plain (non-conjugating) transpose.
pub fn steering_matrix(receive: &SteeringVector, transmit: &SteeringVector) -> SteeringMatrix {
    SteeringMatrix {
        entries: &receive.entries * transmit.entries.transpose(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn broadside_is_all_ones() {
        let g = ArrayGeometry::new(4, 4).unwrap();
        let a = transmit_steering(&g, 0.0);
        assert_eq!(a.len(), 4);
        assert!(a.entries.iter().all(|&z| close(z, C64::new(1.0, 0.0))));
        let r = receive_steering(&g, 0.0);
        assert!(r.entries.iter().all(|&z| close(z, C64::new(1.0, 0.0))));
    }

    #[test]
    fn thirty_degrees_two_elements() {
        let g = ArrayGeometry::new(2, 2).unwrap();
        let a = transmit_steering(&g, 30f64.to_radians());
        assert!(close(a.entries[0], C64::new(1.0, 0.0)));
        assert!(close(a.entries[1], C64::new(0.0, -1.0)));

        let r = receive_steering(&g, (-30f64).to_radians());
        assert!(close(r.entries[0], C64::new(1.0, 0.0)));
        assert!(close(r.entries[1], C64::new(0.0, 1.0)));
    }

    #[test]
    fn norm_equals_length_and_conjugate_symmetry() {
        let g = ArrayGeometry::new(7, 5).unwrap();
        for deg in -90..=90 {
            let th = (deg as f64).to_radians();
            let a = transmit_steering(&g, th);
            assert_abs_diff_eq!(a.entries.norm_squared(), 7.0, epsilon = 1e-12);
            let r = receive_steering(&g, th);
            let r_neg = receive_steering(&g, -th);
            for (x, y) in r.entries.iter().zip(r_neg.entries.iter()) {
                assert!(close(x.conj(), *y));
            }
        }
    }

    #[test]
    fn equal_sine_gives_equal_vectors() {
        let g = ArrayGeometry::new(6, 2).unwrap();
        let th = 0.4_f64;
        let a = transmit_steering(&g, th);
        let b = transmit_steering(&g, PI - th);
        for (x, y) in a.entries.iter().zip(b.entries.iter()) {
            assert!(close(*x, *y));
        }
    }

    #[test]
    fn steering_matrix_matches_brute_force_and_is_rank_one() {
        let g = ArrayGeometry::new(4, 3).unwrap();
        for deg in -90..=90 {
            let th = (deg as f64).to_radians();
            let ar = receive_steering(&g, th);
            let at = transmit_steering(&g, th);
            let a = steering_matrix(&ar, &at);
            assert_eq!(a.entries.shape(), (3, 4));
            for l in 0..3 {
                for k in 0..4 {
                    assert!(close(a.entries[(l, k)], ar.entries[l] * at.entries[k]));
                    assert_abs_diff_eq!(a.entries[(l, k)].norm(), 1.0, epsilon = 1e-12);
                }
            }
            assert_abs_diff_eq!(a.entries.norm_squared(), 12.0, epsilon = 1e-10);
            let sv = a.entries.clone().singular_values();
            let mut sv: Vec<f64> = sv.iter().copied().collect();
            sv.sort_by(|x, y| y.total_cmp(x));
            assert!(sv[1] < 1e-12, "second singular value {}", sv[1]);
        }
    }

    #[test]
    fn broadside_two_by_two_all_ones() {
        let g = ArrayGeometry::new(2, 2).unwrap();
        let a = steering_matrix(&receive_steering(&g, 0.0), &transmit_steering(&g, 0.0));
        assert!(a.entries.iter().all(|&z| close(z, C64::new(1.0, 0.0))));
    }

    #[test]
    fn rejects_degenerate_geometry() {
        assert!(ArrayGeometry::new(0, 4).is_err());
        assert!(ArrayGeometry::new(4, 0).is_err());
        assert!(ArrayGeometry::with_spacing(4, 4, 0.0).is_err());
        assert!(ArrayGeometry::with_spacing(4, 4, f64::NAN).is_err());
    }
}
