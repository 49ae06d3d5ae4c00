//! Null-space projection of the radar waveform.
//!
//! The right singular vectors of the interference channel whose singular
//! values vanish span its null space `V̆`. The radar transmits `P X` with
//! `P = V̆ V̆ᴴ`, which the communication receiver cannot see through that
//! channel.

use crate::channel::InterferenceChannel;
use crate::{CMatrix, Error, Result};

/// Singular values at or below `rel_tolerance · σ_max` count as vanishing.
pub const DEFAULT_REL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct NullSpaceBasis {
    /// `M_T × k` matrix with orthonormal columns.
    pub columns: CMatrix,
    /// Channel singular values, descending, `min(N_R, M_T)` of them.
    pub singular_values: Vec<f64>,
    pub tolerance: f64,
}

impl NullSpaceBasis {
    pub fn nullity(&self) -> usize {
        self.columns.ncols()
    }

    pub fn rank(&self) -> usize {
        self.columns.nrows() - self.nullity()
    }
}

/// Orthogonal projector onto a subspace of the transmit space.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    pub entries: CMatrix,
}

impl Projector {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: CMatrix::identity(dim, dim),
        }
    }

    /// `trace(P)`, equal to the dimension of the target subspace.
    pub fn rank(&self) -> f64 {
        self.entries.trace().re
    }
}

pub fn null_space_basis(h: &InterferenceChannel, rel_tolerance: f64) -> Result<NullSpaceBasis> {
    let (n_rx, m_tx) = h.entries.shape();
    if n_rx == 0 || m_tx == 0 {
        return Err(Error::InvalidArgument("channel matrix is empty".into()));
    }
    if !(rel_tolerance > 0.0 && rel_tolerance.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "relative tolerance must be positive, got {rel_tolerance}"
        )));
    }

    // The SVD is thin, so a wide channel is padded with zero rows to recover
    // the full set of right singular vectors.
    let square = if n_rx < m_tx {
        let mut padded = CMatrix::zeros(m_tx, m_tx);
        padded.view_mut((0, 0), (n_rx, m_tx)).copy_from(&h.entries);
        padded
    } else {
        h.entries.clone()
    };
    let svd = square.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::InvalidArgument("SVD did not return right singular vectors".into()))?;

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    let threshold = rel_tolerance * sigma_max;

    let effective = n_rx.min(m_tx);
    let null_rows: Vec<usize> = order
        .iter()
        .enumerate()
        .filter(|&(pos, &i)| pos >= effective || sigma_max == 0.0 || svd.singular_values[i] <= threshold)
        .map(|(_, &i)| i)
        .collect();

    if null_rows.is_empty() {
        return Err(Error::NoNullSpace {
            rank: effective,
            num_tx: m_tx,
        });
    }

    // Rows of Vᴴ are conjugated right singular vectors.
    let mut columns = CMatrix::zeros(m_tx, null_rows.len());
    for (c, &r) in null_rows.iter().enumerate() {
        for k in 0..m_tx {
            columns[(k, c)] = v_t[(r, k)].conj();
        }
    }

    Ok(NullSpaceBasis {
        columns,
        singular_values: sigma.into_iter().take(effective).collect(),
        tolerance: rel_tolerance,
    })
}

/// `P = V̆ V̆ᴴ`.
pub fn projector(basis: &NullSpaceBasis) -> Result<Projector> {
    if basis.nullity() == 0 {
        return Err(Error::InvalidArgument(
            "cannot build a projector from an empty basis".into(),
        ));
    }
    Ok(Projector {
        entries: &basis.columns * basis.columns.adjoint(),
    })
}

/// Projector onto the null space of `h` with the default tolerance.
pub fn null_space_projector(h: &InterferenceChannel) -> Result<(Projector, usize)> {
    let basis = null_space_basis(h, DEFAULT_REL_TOLERANCE)?;
    let nullity = basis.nullity();
    Ok((projector(&basis)?, nullity))
}

/// `X̆ = P X`.
pub fn project_waveform(p: &Projector, samples: &CMatrix) -> Result<CMatrix> {
    if p.dim() != samples.nrows() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} waveform rows", p.dim()),
            actual: format!("{}", samples.nrows()),
        });
    }
    Ok(&p.entries * samples)
}

/// Interference reaching the communication receiver relative to transmitted
/// energy: `‖H X̆‖_F / ‖X̆‖_F`, with `0/0 = 0`.
pub fn leakage(h_true: &InterferenceChannel, projected: &CMatrix) -> Result<f64> {
    if h_true.m_tx() != projected.nrows() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} waveform rows", h_true.m_tx()),
            actual: format!("{}", projected.nrows()),
        });
    }
    let energy = projected.norm();
    if energy == 0.0 {
        return Ok(0.0);
    }
    Ok((&h_true.entries * projected).norm() / energy)
}
