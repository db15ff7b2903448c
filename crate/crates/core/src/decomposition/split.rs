use rayon::prelude::*;
use serde::Serialize;

use super::frames::{diagonal_phases, glue, kramers_signs, law_exponents};
use super::{ladder, DecompositionOptions, FrameField, Retry};
use crate::error::{Error, Result};
use crate::field::{Grid2, ProjectionField};
use crate::invariants::{chern_with, delta_with};
use crate::numerics::{op_dist, CMatrix};
use crate::stretch::Stretch;
use crate::trs::canonical_j;

/// Unitary correction `G(t_i,k₂_j)` of a transported quaternionic frame, with
/// `α(k₂) G(π,k₂) = G(−π,k₂) Λ(k₂)` and `J conj(G(t,k₂)) J⁻¹ = G(−t,−k₂)`.
#[derive(Debug, Clone)]
pub struct GluingMatrixPath {
    grid: Grid2,
    h: i64,
    samples: Vec<CMatrix>,
    seam_residual: f64,
    symmetry_residual: f64,
}

impl GluingMatrixPath {
    fn new(grid: Grid2, h: i64, samples: Vec<CMatrix>, matching: &[CMatrix]) -> Self {
        let nk = grid.n2();
        let nt = grid.n1() + 1;
        let r = samples[0].nrows();
        let jq = canonical_j(r / 2);
        let law = law_exponents(r, h, true);
        let seam_residual = (0..nk)
            .map(|j| {
                let lhs = &matching[j] * &samples[(nt - 1) * nk + j];
                op_dist(&lhs, &(&samples[j] * diagonal_phases(&law, grid.k2(j))))
            })
            .fold(0.0, f64::max);
        let symmetry_residual = (0..nt * nk)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / nk, idx % nk);
                let mirrored = &samples[(nt - 1 - i) * nk + Grid2::mirror_index(j, nk)];
                op_dist(&(&jq * samples[idx].map(|z| z.conj())), &(mirrored * &jq))
            })
            .reduce(|| 0.0, f64::max);
        Self {
            grid,
            h,
            samples,
            seam_residual,
            symmetry_residual,
        }
    }

    pub fn grid(&self) -> Grid2 {
        self.grid
    }

    pub fn h(&self) -> i64 {
        self.h
    }

    /// `G(t_i, k₂_j)` for `i = 0..=N₁`.
    pub fn at(&self, i: usize, j: usize) -> &CMatrix {
        &self.samples[i * self.grid.n2() + j]
    }

    /// `Λ(k₂) = diag(e^{ihk₂},1,…,1,e^{−ihk₂},1,…,1)`.
    pub fn endpoint_law(&self, k2: f64) -> CMatrix {
        diagonal_phases(&law_exponents(self.samples[0].nrows(), self.h, true), k2)
    }

    /// `max ‖α G(π,·) − G(−π,·) Λ‖` over the `k₂` nodes.
    pub fn seam_residual(&self) -> f64 {
        self.seam_residual
    }

    /// `max ‖J conj(G(t,k₂)) − G(−t,−k₂) J‖` over all nodes.
    pub fn symmetry_residual(&self) -> f64 {
        self.symmetry_residual
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitResiduals {
    /// `max ‖(P^±)² − P^±‖`.
    pub idempotency: f64,
    /// `max ‖P⁻ P⁺‖`.
    pub orthogonality: f64,
    /// `max ‖P⁻ + P⁺ − P‖`.
    pub sum: f64,
    /// `max ‖T P⁺(k) T⁻¹ − P⁻(−k)‖`.
    pub exchange: f64,
}

impl SplitResiduals {
    pub fn max(&self) -> f64 {
        self.idempotency
            .max(self.orthogonality)
            .max(self.sum)
            .max(self.exchange)
    }
}

/// `P = P⁻ ⊕ P⁺` with `T P⁺(k) T⁻¹ = P⁻(−k)` and `Ch(P⁻) = h`.
///
/// The factors are interpolated from their values on the grid nodes; the
/// residuals are measured there. When `coordinates` is set, the grid lives on
/// stretched coordinates: node `(i, j)` sits at
/// `coordinates.point(grid.k1(i), grid.k2(j))`, and the gluing path and frame
/// belong to the pulled-back field (see [`SplitCertificate::frame_field`]).
#[derive(Debug, Clone)]
pub struct SplitCertificate {
    pub lower: ProjectionField,
    pub upper: ProjectionField,
    pub h: i64,
    pub delta: i8,
    pub chern_lower: i64,
    pub chern_upper: i64,
    pub residuals: SplitResiduals,
    pub grid: Grid2,
    pub gluing: GluingMatrixPath,
    /// Kramers-paired frame whose first half spans `P⁻` and second half `P⁺`.
    pub frame: FrameField,
    pub coordinates: Option<Stretch>,
}

impl SplitCertificate {
    /// The field whose node projectors `frame` spans: `field` itself, or its
    /// pullback along `coordinates`.
    pub fn frame_field(&self, field: &ProjectionField) -> ProjectionField {
        match &self.coordinates {
            Some(stretch) => stretch.pullback(field),
            None => field.clone(),
        }
    }
}

pub fn split(field: &ProjectionField, h: i64) -> Result<SplitCertificate> {
    split_with(field, h, &DecompositionOptions::default())
}

/// Splits a time-reversal symmetric field into `P⁻ ⊕ P⁺` with `Ch(P⁻) = h`.
///
/// Possible exactly when `(−1)^h = δ(P)`; otherwise the result is
/// [`Error::ParityObstruction`]. Fields with features too sharp for uniform
/// grids are split on stretched coordinates; the factors are returned on the
/// original torus, with the Chern numbers of the stretched factors, which agree
/// since the stretch has degree one.
pub fn split_with(
    field: &ProjectionField,
    h: i64,
    opts: &DecompositionOptions,
) -> Result<SplitCertificate> {
    if field.trs().is_none() {
        return Err(Error::InvalidInput(
            "splitting needs a time-reversal symmetric field".into(),
        ));
    }
    let r = field.rank();
    if r % 2 != 0 {
        return Err(Error::OddQuaternionicDimension(r));
    }
    if r == 0 {
        return Err(Error::InvalidInput("cannot split a rank-0 field".into()));
    }
    let delta = delta_with(field, &opts.invariants())?.value as i8;
    let parity: i8 = if h.rem_euclid(2) == 0 { 1 } else { -1 };
    if parity != delta {
        return Err(Error::ParityObstruction { delta, h });
    }
    match Stretch::for_field(field) {
        Some(stretch) => {
            let mut cert = split_sheet(&stretch.pullback(field), h, delta, opts)?;
            cert.lower = stretch.pushforward(&cert.lower);
            cert.upper = stretch.pushforward(&cert.upper);
            cert.coordinates = Some(stretch);
            Ok(cert)
        }
        None => split_sheet(field, h, delta, opts),
    }
}

fn split_sheet(
    field: &ProjectionField,
    h: i64,
    delta: i8,
    opts: &DecompositionOptions,
) -> Result<SplitCertificate> {
    let trs = field.trs().cloned().expect("checked by the caller");
    let n = field.rank() / 2;
    ladder(opts.grid, opts.max_refinements, "splitting", |grid| {
        let glued = glue(field, h, grid, opts)?;
        let (n1, nk) = (grid.n1(), grid.n2());
        let projector = |v: &CMatrix, from: usize| {
            let cols = v.columns(from, n);
            cols * cols.adjoint()
        };
        // the t = π row repeats t = −π up to phases
        let lower: Vec<CMatrix> = glued.frame[..n1 * nk]
            .par_iter()
            .map(|v| projector(v, 0))
            .collect();
        let upper: Vec<CMatrix> = glued.frame[..n1 * nk]
            .par_iter()
            .map(|v| projector(v, n))
            .collect();

        let mut residuals = SplitResiduals {
            idempotency: 0.0,
            orthogonality: 0.0,
            sum: 0.0,
            exchange: 0.0,
        };
        for i in 0..n1 {
            for j in 0..nk {
                let idx = i * nk + j;
                let (lo, up) = (&lower[idx], &upper[idx]);
                let mirror = ((n1 - i) % n1) * nk + Grid2::mirror_index(j, nk);
                residuals.idempotency = residuals
                    .idempotency
                    .max(op_dist(&(lo * lo), lo))
                    .max(op_dist(&(up * up), up));
                residuals.orthogonality = residuals
                    .orthogonality
                    .max(crate::numerics::op_norm(&(lo * up)));
                residuals.sum = residuals
                    .sum
                    .max(op_dist(&(lo + up), &field.at(grid.k1(i), grid.k2(j))));
                residuals.exchange = residuals
                    .exchange
                    .max(op_dist(&trs.conjugate(up), &lower[mirror]));
            }
        }
        let provenance = field.provenance();
        let lower = field.subfield_from_samples(grid, lower, n, format!("split-({provenance})"))?;
        let upper = field.subfield_from_samples(grid, upper, n, format!("split+({provenance})"))?;
        let inv = opts.invariants();
        let chern_lower = chern_with(&lower, &inv)?.value;
        let chern_upper = chern_with(&upper, &inv)?.value;
        if chern_lower != h || chern_upper != -h {
            return Err(Retry::from(Error::Unresolved(format!(
                "split factors have Chern numbers ({chern_lower}, {chern_upper}) on grid {grid}, expected ({h}, {})",
                -h
            ))));
        }
        let gluing = GluingMatrixPath::new(grid, h, glued.gluing, &glued.matching);
        let frame = FrameField::new(grid, kramers_signs(glued.frame, n), h, Some(trs.clone()))?;
        Ok(SplitCertificate {
            lower,
            upper,
            h,
            delta,
            chern_lower,
            chern_upper,
            residuals,
            grid,
            gluing,
            frame,
            coordinates: None,
        })
    })
}
