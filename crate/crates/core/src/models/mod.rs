//! Tight-binding Bloch Hamiltonians in the periodic gauge and the projectors onto their occupied bands.

mod format;
mod gauge;
mod zoo;

pub use format::{format_real, parse_harmonics, read_harmonics, write_harmonics};
pub use gauge::{gauge_transform, random_gauge, UnitaryField};
pub use zoo::{
    haldane, kane_mele, kane_mele_spin_cherns, random_hamiltonian, random_trs_hamiltonian,
    trs_hamiltonian_residual, KaneMele, RandomModel,
};

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{axis_node, wrap_angle, Grid2, ProjectionField};
use crate::numerics::{eigh_unchecked, op_dist, projector_from_columns, CMatrix};
use crate::trs::TrsStructure;

/// `H(k) = Σ_m A_m e^{i m·k}` with `A_{−m} = A_m*`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochHamiltonian {
    dim: usize,
    harmonics: BTreeMap<(i32, i32), CMatrix>,
    trs: Option<TrsStructure>,
    provenance: String,
}

impl BlochHamiltonian {
    /// Validates Hermiticity of the coefficient set and, if given, the time-reversal condition `J conj(A_m) J⁻¹ = A_m`.
    pub fn new(
        dim: usize,
        harmonics: BTreeMap<(i32, i32), CMatrix>,
        trs: Option<TrsStructure>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput(
                "Hamiltonian dimension must be positive".into(),
            ));
        }
        for (m, a) in &harmonics {
            if a.shape() != (dim, dim) {
                return Err(Error::InvalidInput(format!(
                    "harmonic {m:?} has shape {:?}, expected {dim}x{dim}",
                    a.shape()
                )));
            }
            if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "harmonic {m:?} has non-finite entries"
                )));
            }
        }
        for (&(m1, m2), a) in &harmonics {
            let zero = CMatrix::zeros(dim, dim);
            let partner = harmonics.get(&(-m1, -m2)).unwrap_or(&zero);
            let res = op_dist(&partner.adjoint(), a);
            if res > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "harmonics violate A_(-m) = A_m* at m = ({m1}, {m2}) (residual {res:e})"
                )));
            }
        }
        if let Some(t) = &trs {
            if t.dim() != dim {
                return Err(Error::InvalidInput(
                    "time-reversal structure has the wrong dimension".into(),
                ));
            }
            for (m, a) in &harmonics {
                let res = op_dist(&t.conjugate(a), a);
                if res > 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "harmonic {m:?} violates J conj(A) J^-1 = A (residual {res:e})"
                    )));
                }
            }
        }
        Ok(Self {
            dim,
            harmonics,
            trs,
            provenance: provenance.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn harmonics(&self) -> &BTreeMap<(i32, i32), CMatrix> {
        &self.harmonics
    }

    pub fn trs(&self) -> Option<&TrsStructure> {
        self.trs.as_ref()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn at(&self, k1: f64, k2: f64) -> CMatrix {
        let mut h = CMatrix::zeros(self.dim, self.dim);
        for (&(m1, m2), a) in &self.harmonics {
            let phase = Complex64::from_polar(1.0, m1 as f64 * k1 + m2 as f64 * k2);
            h += a * phase;
        }
        // exact Hermitian symmetry despite rounding in the sum
        (&h + h.adjoint()) * Complex64::new(0.5, 0.0)
    }

    /// `Σ_m ‖A_m‖` bounds every `‖H(k)‖`.
    pub fn coefficient_norm(&self) -> f64 {
        self.harmonics.values().map(crate::numerics::op_norm).sum()
    }
}

/// Accumulates hopping terms while keeping `A_{−m} = A_m*`.
#[derive(Debug, Clone)]
pub struct HarmonicBuilder {
    dim: usize,
    harmonics: BTreeMap<(i32, i32), CMatrix>,
}

impl HarmonicBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            harmonics: BTreeMap::new(),
        }
    }

    fn entry(&mut self, m: (i32, i32)) -> &mut CMatrix {
        let dim = self.dim;
        self.harmonics
            .entry(m)
            .or_insert_with(|| CMatrix::zeros(dim, dim))
    }

    /// Adds `amplitude` at `(row, col)` of `A_m` and its conjugate at `(col, row)` of `A_{−m}`.
    pub fn add_hopping(
        &mut self,
        m: (i32, i32),
        row: usize,
        col: usize,
        amplitude: Complex64,
    ) -> &mut Self {
        self.entry(m)[(row, col)] += amplitude;
        self.entry((-m.0, -m.1))[(col, row)] += amplitude.conj();
        self
    }

    /// Block version of [`Self::add_hopping`]: `block` lands at `(row, col)` of `A_m`.
    pub fn add_block(
        &mut self,
        m: (i32, i32),
        row: usize,
        col: usize,
        block: &CMatrix,
    ) -> &mut Self {
        let (r, c) = block.shape();
        let mut a = self.entry(m).view_mut((row, col), (r, c)).into_owned();
        a += block;
        self.entry(m).view_mut((row, col), (r, c)).copy_from(&a);
        let mut b = self
            .entry((-m.0, -m.1))
            .view_mut((col, row), (c, r))
            .into_owned();
        b += block.adjoint();
        self.entry((-m.0, -m.1))
            .view_mut((col, row), (c, r))
            .copy_from(&b);
        self
    }

    pub fn add_onsite(&mut self, site: usize, energy: f64) -> &mut Self {
        self.entry((0, 0))[(site, site)] += Complex64::new(energy, 0.0);
        self
    }

    pub fn build(
        self,
        trs: Option<TrsStructure>,
        provenance: impl Into<String>,
    ) -> Result<BlochHamiltonian> {
        let harmonics = self
            .harmonics
            .into_iter()
            .filter(|(_, a)| a.iter().any(|z| z.norm() > 0.0))
            .collect();
        BlochHamiltonian::new(self.dim, harmonics, trs, provenance)
    }
}

/// Certified separation between band `r` and band `r + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapWindow {
    pub occupied: usize,
    pub min_gap: f64,
    pub k1: f64,
    pub k2: f64,
}

pub const DEFAULT_MIN_GAP: f64 = 1e-3;
pub const GAP_GRID: usize = 64;

/// Lower-`r` band projector of `H` and its certified gap.
///
/// The gap is scanned on a 64×64 grid, once more on a twice finer patch
/// around the smallest value found, and finally polished by a compass search
/// so that band touchings between grid nodes are not missed.
pub fn spectral_projector(
    h: &BlochHamiltonian,
    occupied: usize,
    g_min: f64,
) -> Result<(ProjectionField, GapWindow)> {
    if occupied == 0 || occupied >= h.dim() {
        return Err(Error::InvalidInput(format!(
            "occupied band count {occupied} must lie strictly between 0 and {}",
            h.dim()
        )));
    }
    let window = certify_gap(h, occupied)?;
    if window.min_gap < g_min {
        return Err(Error::GapClosed {
            k1: window.k1,
            k2: window.k2,
            gap: window.min_gap,
        });
    }
    Ok((band_projector(h, occupied), window))
}

/// Projector onto the lowest `occupied` bands, without a gap certificate.
pub fn band_projector(h: &BlochHamiltonian, occupied: usize) -> ProjectionField {
    let model = Arc::new(h.clone());
    let dim = h.dim();
    ProjectionField::new(
        dim,
        occupied,
        format!("{} [occupied {occupied}]", h.provenance()),
        move |k1, k2| {
            let (_, v) = eigh_unchecked(&model.at(k1, k2));
            projector_from_columns(&v.columns(0, occupied).into_owned())
        },
    )
    .with_trs_opt(h.trs().cloned())
}

fn gap_at(h: &BlochHamiltonian, occupied: usize, k1: f64, k2: f64) -> f64 {
    let ev = h.at(k1, k2).symmetric_eigenvalues();
    let mut ev: Vec<f64> = ev.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev[occupied] - ev[occupied - 1]
}

pub fn certify_gap(h: &BlochHamiltonian, occupied: usize) -> Result<GapWindow> {
    let grid = Grid2::new(GAP_GRID, GAP_GRID)?;
    let coarse: Vec<(f64, f64, f64)> = (0..GAP_GRID * GAP_GRID)
        .into_par_iter()
        .map(|idx| {
            let (k1, k2) = (grid.k1(idx / GAP_GRID), grid.k2(idx % GAP_GRID));
            (gap_at(h, occupied, k1, k2), k1, k2)
        })
        .collect();
    let mut worst =
        coarse.iter().copied().fold(
            (f64::INFINITY, 0.0, 0.0),
            |a, b| if b.0 < a.0 { b } else { a },
        );
    let step = axis_node(1, 2 * GAP_GRID) - axis_node(0, 2 * GAP_GRID);
    let (c1, c2) = (worst.1, worst.2);
    for a in -2i32..=2 {
        for b in -2i32..=2 {
            let (k1, k2) = (c1 + a as f64 * step, c2 + b as f64 * step);
            let g = gap_at(h, occupied, k1, k2);
            if g < worst.0 {
                worst = (g, k1, k2);
            }
        }
    }
    // compass search: conical closures sit between nodes and need a local minimizer to show up
    let mut h_step = step;
    while h_step > 1e-10 && worst.0 > 0.0 {
        let mut moved = false;
        for (a, b) in [
            (1.0, 0.0),
            (-1.0, 0.0),
            (0.0, 1.0),
            (0.0, -1.0),
            (1.0, 1.0),
            (1.0, -1.0),
            (-1.0, 1.0),
            (-1.0, -1.0),
        ] {
            let (k1, k2) = (worst.1 + a * h_step, worst.2 + b * h_step);
            let g = gap_at(h, occupied, k1, k2);
            if g < worst.0 {
                worst = (g, k1, k2);
                moved = true;
            }
        }
        if !moved {
            h_step /= 2.0;
        }
    }
    Ok(GapWindow {
        occupied,
        min_gap: worst.0,
        k1: wrap_angle(worst.1),
        k2: wrap_angle(worst.2),
    })
}
