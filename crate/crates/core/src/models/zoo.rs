use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{spectral_projector, BlochHamiltonian, GapWindow, HarmonicBuilder};
use crate::error::{Error, Result};
use crate::field::{Grid2, ProjectionField};
use crate::invariants::fhs_chern;
use crate::numerics::{c64, gaussian_matrix, hermitian_part, op_dist, CMatrix};
use crate::trs::TrsStructure;

const A: usize = 0;
const B: usize = 1;

/// Cells of the B partners of the A site at the origin, for the bonds `δ₁, δ₂, δ₃`.
const NN_CELLS: [(i32, i32); 3] = [(0, 0), (-1, 0), (0, -1)];

fn nn_vectors() -> [[f64; 2]; 3] {
    let h = 3f64.sqrt() / 2.0;
    [[0.0, 1.0], [-h, -0.5], [h, -0.5]]
}

fn lattice_vectors() -> [[f64; 2]; 2] {
    let h = 3f64.sqrt() / 2.0;
    [[h, 1.5], [-h, 1.5]]
}

/// Haldane model on the honeycomb lattice, sublattice order (A, B).
///
/// `H_AB = t₁(1 + e^{−ik₁} + e^{−ik₂})`, and the diagonal carries the mass
/// `±M` plus `2t₂ Σ_b cos(k·b ± φ)` over the second-neighbour phases
/// `k₁, k₂ − k₁, −k₂`. The lower band is topological for
/// `|M| < 3√3 |t₂ sin φ|`.
pub fn haldane(t1: f64, t2: f64, phi: f64, mass: f64) -> BlochHamiltonian {
    let mut b = HarmonicBuilder::new(2);
    b.add_onsite(A, mass).add_onsite(B, -mass);
    for cell in NN_CELLS {
        b.add_hopping(cell, A, B, c64(t1, 0.0));
    }
    for m in [(1, 0), (-1, 1), (0, -1)] {
        b.add_hopping(m, A, A, Complex64::from_polar(t2, phi));
        b.add_hopping(m, B, B, Complex64::from_polar(t2, -phi));
    }
    b.build(
        None,
        format!("haldane(t1={t1}, t2={t2}, phi={phi}, M={mass})"),
    )
    .expect("haldane coefficients are Hermitian")
}

/// Kane–Mele parameters; the default is a topological point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KaneMele {
    pub t: f64,
    pub lambda_so: f64,
    pub lambda_r: f64,
    pub lambda_v: f64,
}

impl Default for KaneMele {
    fn default() -> Self {
        Self {
            t: 1.0,
            lambda_so: 0.06,
            lambda_r: 0.05,
            lambda_v: 0.1,
        }
    }
}

impl KaneMele {
    pub fn trivial() -> Self {
        Self {
            lambda_v: 0.5,
            ..Self::default()
        }
    }

    /// Staggering at which the spin-conserving model closes its gap.
    pub fn critical_stagger(&self) -> f64 {
        3.0 * 3f64.sqrt() * self.lambda_so
    }
}

fn pauli() -> [CMatrix; 3] {
    let o = c64(0.0, 0.0);
    let one = c64(1.0, 0.0);
    let i = c64(0.0, 1.0);
    [
        CMatrix::from_row_slice(2, 2, &[o, one, one, o]),
        CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        CMatrix::from_row_slice(2, 2, &[one, o, o, -one]),
    ]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn kane_mele_raw(p: &KaneMele) -> Result<BlochHamiltonian> {
    let [sx, sy, sz] = pauli();
    let id2 = CMatrix::identity(2, 2);
    let delta = nn_vectors();
    let lat = lattice_vectors();
    let mut b = HarmonicBuilder::new(4);
    // sublattice ⊗ spin: index = 2·site + spin
    let offset = |site: usize| 2 * site;

    b.add_onsite(0, p.lambda_v)
        .add_onsite(1, p.lambda_v)
        .add_onsite(2, -p.lambda_v)
        .add_onsite(3, -p.lambda_v);

    // nearest neighbours: amplitude ⟨A,0|H|B,m⟩ with bond vector d from B to A equal to −δ
    for (d, cell) in delta.iter().zip(NN_CELLS) {
        let (dx, dy) = (-d[0], -d[1]);
        let rashba = (&sx * c64(dy, 0.0) - &sy * c64(dx, 0.0)) * c64(0.0, p.lambda_r);
        let block = &id2 * c64(p.t, 0.0) + rashba;
        b.add_block(cell, offset(A), offset(B), &block);
    }

    // second neighbours: for each site and each displacement L = p a₁ + q a₂ from
    // the source to the target, ν = sign(d₁ × d₂) along the two bonds traversed
    let displacements = [(1, 0), (0, 1), (1, -1), (-1, 0), (0, -1), (-1, 1)];
    for site in [A, B] {
        let sign = if site == A { 1.0 } else { -1.0 };
        let first: Vec<[f64; 2]> = delta.iter().map(|d| [sign * d[0], sign * d[1]]).collect();
        let second: Vec<[f64; 2]> = delta.iter().map(|d| [-sign * d[0], -sign * d[1]]).collect();
        for (pa, qa) in displacements {
            let l = [
                pa as f64 * lat[0][0] + qa as f64 * lat[1][0],
                pa as f64 * lat[0][1] + qa as f64 * lat[1][1],
            ];
            let mut nu = None;
            for d1 in &first {
                for d2 in &second {
                    if (d1[0] + d2[0] - l[0]).abs() < 1e-9 && (d1[1] + d2[1] - l[1]).abs() < 1e-9 {
                        nu = Some(cross(*d1, *d2).signum());
                    }
                }
            }
            let nu = nu.ok_or_else(|| {
                Error::ModelConstructionError(format!("no bond path for displacement {l:?}"))
            })?;
            // the target sits in cell 0 and the source in cell −L
            let block = &sz * c64(0.0, p.lambda_so * nu);
            let m = (-pa, -qa);
            // each unordered pair appears twice (±L), so add half of the symmetrized hopping
            b.add_block(m, offset(site), offset(site), &(block * c64(0.5, 0.0)));
        }
    }

    let label = format!(
        "kane_mele(t={}, so={}, r={}, v={})",
        p.t, p.lambda_so, p.lambda_r, p.lambda_v
    );
    b.build(Some(TrsStructure::spin_half(2)), label)
        .map_err(|e| {
            Error::ModelConstructionError(format!("time-reversal or Hermiticity check failed: {e}"))
        })
}

/// Kane–Mele model, 4 bands in sublattice ⊗ spin order with `J = Id₂ ⊗ [[0,−1],[1,0]]`.
///
/// The coefficients come from bond geometry: nearest-neighbour hopping `t`,
/// Rashba `iλ_R (s × d̂)_z`, intrinsic spin-orbit `iλ_SO ν s_z` on second
/// neighbours and a staggered potential `±λ_v`. Two checks guard the
/// construction: the time-reversal condition on every coefficient, and
/// opposite spin-sector Chern numbers of the spin-conserving (`λ_R = 0`) model.
pub fn kane_mele(p: &KaneMele) -> Result<BlochHamiltonian> {
    if p.t == 0.0 {
        return Err(Error::InvalidInput(
            "Kane-Mele hopping t must be nonzero".into(),
        ));
    }
    let h = kane_mele_raw(p)?;
    spin_sector_check(&KaneMele {
        lambda_r: 0.0,
        ..*p
    })?;
    Ok(h)
}

fn spin_sector_check(p: &KaneMele) -> Result<()> {
    let h = kane_mele_raw(p)?;
    let up = [0usize, 2];
    let down = [1usize, 3];
    for (_, a) in h.harmonics() {
        for &i in &up {
            for &j in &down {
                if a[(i, j)].norm() > 1e-14 || a[(j, i)].norm() > 1e-14 {
                    return Err(Error::ModelConstructionError(
                        "spin sectors couple without Rashba".into(),
                    ));
                }
            }
        }
    }
    let sector = |idx: [usize; 2]| -> Result<Option<i64>> {
        let mut harmonics = BTreeMap::new();
        for (m, a) in h.harmonics() {
            let block = CMatrix::from_fn(2, 2, |r, c| a[(idx[r], idx[c])]);
            harmonics.insert(*m, block);
        }
        let sub = BlochHamiltonian::new(2, harmonics, None, "spin sector")?;
        match spectral_projector(&sub, 1, 1e-6) {
            Ok((field, _)) => Ok(Some(fhs_chern(&field, Grid2::new(48, 48)?)?)),
            Err(Error::GapClosed { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    if let (Some(c_up), Some(c_down)) = (sector(up)?, sector(down)?) {
        if c_up != -c_down {
            return Err(Error::ModelConstructionError(format!(
                "spin-sector Chern numbers ({c_up}, {c_down}) are not opposite"
            )));
        }
    }
    Ok(())
}

/// Spin-sector Chern numbers of the spin-conserving model, for diagnostics.
pub fn kane_mele_spin_cherns(p: &KaneMele) -> Result<(i64, i64)> {
    let h = kane_mele_raw(&KaneMele {
        lambda_r: 0.0,
        ..*p
    })?;
    let mut out = [0i64; 2];
    for (slot, idx) in [[0usize, 2], [1, 3]].into_iter().enumerate() {
        let mut harmonics = BTreeMap::new();
        for (m, a) in h.harmonics() {
            harmonics.insert(*m, CMatrix::from_fn(2, 2, |r, c| a[(idx[r], idx[c])]));
        }
        let sub = BlochHamiltonian::new(2, harmonics, None, "spin sector")?;
        let (field, _) = spectral_projector(&sub, 1, 1e-6)?;
        out[slot] = fhs_chern(&field, Grid2::new(48, 48)?)?;
    }
    Ok((out[0], out[1]))
}

/// A seeded random model together with its certified occupied-band field.
#[derive(Debug, Clone)]
pub struct RandomModel {
    pub hamiltonian: BlochHamiltonian,
    pub field: ProjectionField,
    pub gap: GapWindow,
    pub attempts: usize,
}

const REJECTION_BUDGET: usize = 200;
/// Splits the occupied and empty blocks of the random models.
const BAND_OFFSET: f64 = 1.0;
/// Overall size of the random coefficients relative to [`BAND_OFFSET`].
const COEFFICIENT_SCALE: f64 = 0.5;

fn harmonic_indices(max_order: i32) -> Vec<(i32, i32)> {
    let mut out = Vec::new();
    for m1 in -max_order..=max_order {
        for m2 in -max_order..=max_order {
            // one representative of each ±m pair, plus m = 0
            if (m1, m2) >= (0, 0) {
                out.push((m1, m2));
            }
        }
    }
    out
}

fn random_coefficients(
    dim: usize,
    occupied: usize,
    max_order: i32,
    rng: &mut ChaCha8Rng,
    symmetrize: impl Fn(CMatrix) -> CMatrix,
) -> BTreeMap<(i32, i32), CMatrix> {
    let mut harmonics = BTreeMap::new();
    for m in harmonic_indices(max_order) {
        let scale = COEFFICIENT_SCALE / (1.0 + (m.0 * m.0 + m.1 * m.1) as f64);
        let g = gaussian_matrix(dim, dim, rng) * c64(scale, 0.0);
        if m == (0, 0) {
            let mut a = symmetrize(hermitian_part(&g));
            for i in 0..dim {
                a[(i, i)] += c64(
                    if i < occupied {
                        -BAND_OFFSET
                    } else {
                        BAND_OFFSET
                    },
                    0.0,
                );
            }
            harmonics.insert(m, hermitian_part(&a));
        } else {
            let a = symmetrize(g);
            harmonics.insert((-m.0, -m.1), a.adjoint());
            harmonics.insert(m, a);
        }
    }
    harmonics
}

fn check_orders(dim: usize, occupied: usize, max_order: i32) -> Result<()> {
    if occupied == 0 || dim < occupied + 1 {
        return Err(Error::InvalidInput(format!(
            "need 0 < r < D, got D = {dim}, r = {occupied}"
        )));
    }
    if max_order < 0 {
        return Err(Error::InvalidInput(
            "harmonic order must be non-negative".into(),
        ));
    }
    Ok(())
}

/// Random gapped time-reversal symmetric model with `|m|_∞ ≤ max_order`.
///
/// Gaussian coefficients are averaged with their time-reversal image,
/// `A ← (A + J conj(A) J⁻¹)/2`, and a constant offset pushes the first `r`
/// orbitals down. Draws are rejected until the gap at `r` is at least `g_min`.
pub fn random_trs_hamiltonian(
    dim: usize,
    occupied: usize,
    max_order: i32,
    seed: u64,
    g_min: f64,
) -> Result<RandomModel> {
    if dim % 2 != 0 || occupied % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "D = {dim} and r = {occupied} must both be even"
        )));
    }
    if dim < occupied + 2 {
        return Err(Error::InvalidInput(format!(
            "need D ≥ r + 2, got D = {dim}, r = {occupied}"
        )));
    }
    check_orders(dim, occupied, max_order)?;
    let trs = TrsStructure::spin_half(dim / 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=REJECTION_BUDGET {
        let t = trs.clone();
        let harmonics = random_coefficients(dim, occupied, max_order, &mut rng, move |a| {
            (&a + t.conjugate(&a)) * c64(0.5, 0.0)
        });
        let h = BlochHamiltonian::new(
            dim,
            harmonics,
            Some(trs.clone()),
            format!("random_trs(D={dim}, r={occupied}, M={max_order}, seed={seed})"),
        )?;
        match spectral_projector(&h, occupied, g_min) {
            Ok((field, gap)) => {
                return Ok(RandomModel {
                    hamiltonian: h,
                    field,
                    gap,
                    attempts: attempt,
                })
            }
            Err(Error::GapClosed { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::GenerationFailed(format!(
        "no gapped draw in {REJECTION_BUDGET} attempts (seed {seed})"
    )))
}

/// Random gapped model without time-reversal symmetry.
pub fn random_hamiltonian(
    dim: usize,
    occupied: usize,
    max_order: i32,
    seed: u64,
    g_min: f64,
) -> Result<RandomModel> {
    check_orders(dim, occupied, max_order)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=REJECTION_BUDGET {
        let harmonics = random_coefficients(dim, occupied, max_order, &mut rng, |a| a);
        let h = BlochHamiltonian::new(
            dim,
            harmonics,
            None,
            format!("random(D={dim}, r={occupied}, M={max_order}, seed={seed})"),
        )?;
        match spectral_projector(&h, occupied, g_min) {
            Ok((field, gap)) => {
                return Ok(RandomModel {
                    hamiltonian: h,
                    field,
                    gap,
                    attempts: attempt,
                })
            }
            Err(Error::GapClosed { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::GenerationFailed(format!(
        "no gapped draw in {REJECTION_BUDGET} attempts (seed {seed})"
    )))
}

/// `T H(k) T⁻¹ − H(−k)` on a grid, worst case.
pub fn trs_hamiltonian_residual(h: &BlochHamiltonian, grid: Grid2) -> Option<f64> {
    let t = h.trs()?;
    Some(
        grid.nodes()
            .map(|(k1, k2)| op_dist(&t.conjugate(&h.at(k1, k2)), &h.at(-k1, -k2)))
            .fold(0.0, f64::max),
    )
}
