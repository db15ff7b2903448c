use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{ladder, DecompositionOptions, FrameField};
use crate::error::{Error, Result};
use crate::field::{Grid2, ProjectionField};
use crate::invariants::{delta_with, matching_family, symmetric_matching};
use crate::numerics::{
    c64, connect_loops, range_basis, unitary_log, winding, CMatrix, LogOptions, PhaseLoop,
    UnitaryLoop,
};
use crate::transport::{TransportSheet, Transporter};
use crate::trs::canonical_j;

/// `diag(e^{i a k₂}, …)` with the given per-column exponents.
pub(crate) fn diagonal_phases(exponents: &[f64], k2: f64) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(
        exponents.len(),
        exponents
            .iter()
            .map(|&a| Complex64::from_polar(1.0, a * k2)),
    ))
}

/// Exponents of the law `diag(e^{ihk₂}, 1, …, 1[, e^{−ihk₂}, 1, …, 1])`.
pub(crate) fn law_exponents(rank: usize, h: i64, symmetric: bool) -> Vec<f64> {
    let mut out = vec![0.0; rank];
    if rank > 0 {
        out[0] = h as f64;
        if symmetric {
            out[rank / 2] = -(h as f64);
        }
    }
    out
}

/// `F(t_i,k₂_j) = U(t_i,k₂_j) · basis · G(t_i,k₂_j)` on every sheet node.
pub(crate) fn rotate(sheet: &TransportSheet, basis: &CMatrix, gluing: &[CMatrix]) -> Vec<CMatrix> {
    let nk = sheet.k_len();
    (0..sheet.t_len() * nk)
        .into_par_iter()
        .map(|idx| sheet.at(idx / nk, idx % nk) * basis * &gluing[idx])
        .collect()
}

/// Symmetric gluing data for a prescribed `h` with `(−1)^h = δ`.
pub(crate) struct Glued {
    pub matching: Vec<CMatrix>,
    /// `G(t_i,k₂_j)`, `t` slow, both `t = ±π` stored.
    pub gluing: Vec<CMatrix>,
    /// Frame `U V G` with `T v_j(t,k₂) = v_{n+j}(−t,−k₂)`.
    pub frame: Vec<CMatrix>,
}

/// Builds `G` with `α(k₂) G(π,k₂) = G(−π,k₂) Λ(k₂)` and
/// `J conj(G(t,k₂)) J⁻¹ = G(−t,−k₂)`, where `Λ = diag(e^{ihk₂},1,…,e^{−ihk₂},1,…)`.
///
/// On `k₂ ∈ [0, π]` the seam column is
/// `G(π,k₂) = exp(−i[(π−k₂)L + k₂R]/2π) · Y^{k₂/π}` with `L`, `R` the
/// symplectic logarithms of `α(0)`, `α(π)` and, for odd `h`,
/// `Y = diag(i,1,…,i,1,…)`; the seam condition extends it to `k₂ < 0`. The
/// `t = 0` column `diag(e^{irk₂},1,…,e^{irk₂},1,…)` has the same determinant
/// winding `2r`, and a loop homotopy fills `t ∈ (0, π)`; `t < 0` is the mirror
/// image.
pub(crate) fn glue(
    field: &ProjectionField,
    h: i64,
    grid: Grid2,
    opts: &DecompositionOptions,
) -> Result<Glued> {
    let (tr, basis, family) = symmetric_matching(field, grid, &opts.invariants_on(grid))?;
    let sheet = tr.sheet();
    let r = field.rank();
    let n = r / 2;
    let jq = canonical_j(n);
    let jq_inv = jq.adjoint();
    let log_opts = LogOptions::with_constraint(&jq);
    let l = unitary_log(family.at_zero(), &log_opts)?;
    let rr = unitary_log(family.at_pi(), &log_opts)?;
    let odd = h.rem_euclid(2) == 1;
    let mut y_exp = vec![0.0; r];
    if odd {
        y_exp[0] = 0.5;
        y_exp[n] = 0.5;
    }
    let law = law_exponents(r, h, true);
    let alphas = family.samples();
    let nk = grid.n2();

    let positive = |k: f64| {
        let gen = (&l * c64(PI - k, 0.0) + &rr * c64(k, 0.0)) * c64(-1.0 / (2.0 * PI), 0.0);
        crate::numerics::exp_i_hermitian(&gen) * diagonal_phases(&y_exp, k)
    };
    let seam: Vec<CMatrix> = (0..nk)
        .map(|j| {
            let k = grid.k2(j);
            if k >= 0.0 {
                positive(k)
            } else {
                alphas[j].adjoint()
                    * &jq
                    * positive(-k).map(|z| z.conj())
                    * &jq_inv
                    * diagonal_phases(&law, k)
            }
        })
        .collect();
    let seam = UnitaryLoop::new_unchecked(seam)?;
    let w = seam.det_winding()?;
    if w % 2 != 0 {
        return Err(Error::Unresolved(format!(
            "seam gluing loop has odd determinant winding {w}"
        )));
    }
    let mut base_exp = vec![0.0; r];
    base_exp[0] = (w / 2) as f64;
    base_exp[n] = (w / 2) as f64;
    let base = UnitaryLoop::new_unchecked(
        (0..nk)
            .map(|j| diagonal_phases(&base_exp, grid.k2(j)))
            .collect(),
    )?;
    let path = connect_loops(&base, &seam, opts.contraction_seed)?;

    let n1 = grid.n1();
    let half = n1 / 2;
    let upper: Vec<Vec<CMatrix>> = (0..=half)
        .into_par_iter()
        .map(|s| match s {
            0 => base.samples().to_vec(),
            s if s == half => seam.samples().to_vec(),
            s => path.eval(s as f64 / half as f64).into_samples(),
        })
        .collect();
    let mut gluing = vec![CMatrix::zeros(0, 0); (n1 + 1) * nk];
    for (s, row) in upper.iter().enumerate() {
        for j in 0..nk {
            gluing[(half + s) * nk + j] = row[j].clone();
            if s > 0 {
                let mirrored = &row[Grid2::mirror_index(j, nk)];
                gluing[(half - s) * nk + j] = &jq * mirrored.map(|z| z.conj()) * &jq_inv;
            }
        }
    }
    let frame = rotate(&sheet, &basis, &gluing);
    Ok(Glued {
        matching: alphas.to_vec(),
        gluing,
        frame,
    })
}

/// Orthonormal frame of `P` periodic up to `v₁(π,k₂) = e^{iCh(P)k₂} v₁(−π,k₂)`.
pub fn pseudo_periodic_frame(field: &ProjectionField) -> Result<FrameField> {
    pseudo_periodic_frame_with(field, &DecompositionOptions::default())
}

/// The gluing is `G(t,·)`, a homotopy from `Id` at `t = −π` to
/// `α⁻¹ diag(e^{ihk₂},1,…)` at `t = π`, evaluated at `s = (t+π)/2π`.
pub fn pseudo_periodic_frame_with(
    field: &ProjectionField,
    opts: &DecompositionOptions,
) -> Result<FrameField> {
    ladder(
        opts.grid,
        opts.max_refinements,
        "pseudo-periodic frame",
        |grid| {
            let tr = Transporter::new(field, false, grid, &opts.transport)?;
            let sheet = tr.sheet();
            let r = field.rank();
            let basis = range_basis(sheet.base(), r);
            let nk = grid.n2();
            if r == 0 {
                let frame = vec![CMatrix::zeros(field.dim(), 0); (grid.n1() + 1) * nk];
                return Ok(FrameField::new(grid, frame, 0, None)?);
            }
            let family = matching_family(&sheet, &basis)?;
            let h = winding(&PhaseLoop::from_unnormalized(
                family.samples().iter().map(|a| a.determinant()).collect(),
            )?)?;
            let law = law_exponents(r, h, false);
            let end = UnitaryLoop::new_unchecked(
                (0..nk)
                    .map(|j| family.samples()[j].adjoint() * diagonal_phases(&law, grid.k2(j)))
                    .collect(),
            )?;
            let start = UnitaryLoop::new_unchecked(vec![CMatrix::identity(r, r); nk])?;
            let path = connect_loops(&start, &end, opts.contraction_seed)?;
            let n1 = grid.n1();
            let rows: Vec<Vec<CMatrix>> = (0..=n1)
                .into_par_iter()
                .map(|i| match i {
                    0 => start.samples().to_vec(),
                    i if i == n1 => end.samples().to_vec(),
                    i => path.eval(i as f64 / n1 as f64).into_samples(),
                })
                .collect();
            let gluing: Vec<CMatrix> = rows.into_iter().flatten().collect();
            Ok(FrameField::new(
                grid,
                rotate(&sheet, &basis, &gluing),
                h,
                None,
            )?)
        },
    )
}

/// Kramers-paired frame of a time-reversal symmetric `P`: fully periodic when
/// `δ(P) = +1`; for `δ(P) = −1` exactly `v₁` and `v_{n+1}` carry the laws
/// `e^{ik₂}` and `e^{−ik₂}`.
pub fn symmetric_frame(field: &ProjectionField) -> Result<FrameField> {
    symmetric_frame_with(field, &DecompositionOptions::default())
}

pub fn symmetric_frame_with(
    field: &ProjectionField,
    opts: &DecompositionOptions,
) -> Result<FrameField> {
    let trs = field.trs().cloned().ok_or_else(|| {
        Error::InvalidInput("a symmetric frame needs a time-reversal symmetric field".into())
    })?;
    if field.rank() % 2 != 0 {
        return Err(Error::OddQuaternionicDimension(field.rank()));
    }
    if field.rank() == 0 {
        let grid = opts.grid;
        let frame = vec![CMatrix::zeros(field.dim(), 0); (grid.n1() + 1) * grid.n2()];
        return FrameField::new(grid, frame, 0, Some(trs));
    }
    let delta = delta_with(field, &opts.invariants())?.value;
    let h = if delta == 1 { 0 } else { 1 };
    ladder(opts.grid, opts.max_refinements, "symmetric frame", |grid| {
        let glued = glue(field, h, grid, opts)?;
        Ok(FrameField::new(
            grid,
            kramers_signs(glued.frame, field.rank() / 2),
            h,
            Some(trs.clone()),
        )?)
    })
}

/// Negates the second half of each frame so that `v_{n+j}(t,k₂) = −T v_j(−t,−k₂)`.
pub(crate) fn kramers_signs(mut frame: Vec<CMatrix>, n: usize) -> Vec<CMatrix> {
    for v in &mut frame {
        v.columns_mut(n, n).iter_mut().for_each(|z| *z = -*z);
    }
    frame
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{haldane, kane_mele, spectral_projector, KaneMele};
    use crate::trs::TrsStructure;

    fn km(p: &KaneMele) -> ProjectionField {
        spectral_projector(&kane_mele(p).unwrap(), 2, 1e-3)
            .unwrap()
            .0
    }

    fn audit(frame: &FrameField, field: &ProjectionField) {
        assert!(
            frame.gram_residual() <= 1e-10,
            "gram {}",
            frame.gram_residual()
        );
        assert!(
            frame.reconstruction_residual(field) <= 1e-8,
            "reconstruction {}",
            frame.reconstruction_residual(field)
        );
        assert!(
            frame.boundary_residual() <= 1e-8,
            "boundary {}",
            frame.boundary_residual()
        );
    }

    #[test]
    fn constant_projector_gives_periodic_frames() {
        let mut p = CMatrix::zeros(4, 4);
        p[(0, 0)] = c64(1.0, 0.0);
        p[(2, 2)] = c64(1.0, 0.0);
        let field = ProjectionField::constant(p, 2, "c").with_trs(TrsStructure::canonical(2));
        let opts = DecompositionOptions::with_grid(Grid2::new(8, 8).unwrap());
        let f = pseudo_periodic_frame_with(&field, &opts).unwrap();
        audit(&f, &field);
        assert_eq!(f.boundary_phase(), 0);
        let s = symmetric_frame_with(&field, &opts).unwrap();
        audit(&s, &field);
        assert!(s.pseudo_periodic_columns(1e-8).is_empty());
        assert!(s.kramers_residual().unwrap() <= 1e-12);
    }

    #[test]
    fn haldane_frame_carries_the_chern_number() {
        let (p, _) = spectral_projector(&haldane(1.0, 0.2, PI / 2.0, 0.1), 1, 1e-3).unwrap();
        let f = pseudo_periodic_frame(&p).unwrap();
        audit(&f, &p);
        assert_eq!(
            f.boundary_phase(),
            crate::invariants::chern(&p).unwrap().value
        );
        assert_ne!(f.boundary_phase(), 0);
    }

    #[test]
    fn kane_mele_symmetric_frames() {
        for (params, pseudo) in [(KaneMele::default(), 2), (KaneMele::trivial(), 0)] {
            let field = km(&params);
            let f = symmetric_frame(&field).unwrap();
            audit(&f, &field);
            assert!(f.kramers_residual().unwrap() <= 1e-8);
            let cols = f.pseudo_periodic_columns(1e-6);
            assert_eq!(cols.len(), pseudo);
            if pseudo == 2 {
                assert_eq!(cols, vec![0, 1]);
                assert_eq!((f.column_law(0), f.column_law(1)), (1, -1));
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let field = km(&KaneMele::default());
        let f = symmetric_frame_with(
            &field,
            &DecompositionOptions::with_grid(Grid2::new(8, 8).unwrap()),
        )
        .unwrap();
        let back = FrameField::from_text(&f.to_text()).unwrap();
        assert_eq!(back, f);
        assert!(FrameField::from_text("z2frames-frame 2\n").is_err());
    }
}
