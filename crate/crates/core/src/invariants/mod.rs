//! Matching matrices, the Chern number, the Z2 invariant and two independent oracles.
//!
//! The Chern number is the determinant winding of the matching matrices of a
//! transported frame. The Z2 invariant compares symplectic square roots of the
//! matching matrices at the two time-reversal invariant lines `k₂ = 0, π` with
//! a continuous phase of `det α` between them.

mod fhs;
mod matching;
mod wilson;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

pub use fhs::fhs_chern;
pub use matching::{matching_family, MatchingFamily};
pub use wilson::{wilson_z2, WILSON_GRID};

use crate::error::{Error, Result};
use crate::field::{Grid2, ProjectionField};
use crate::numerics::{range_basis, unitary_log, CMatrix, LogOptions};
use crate::transport::{TransportOptions, Transporter};
use crate::trs::{canonical_j, quaternionic_basis};

/// Default grid for invariant pipelines.
pub const DEFAULT_GRID: usize = 32;
/// Pre-rounding tolerance for the Z2 integrality condition.
pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantOptions {
    pub grid: Grid2,
    /// Grid doublings allowed after an under-resolved attempt.
    pub max_refinements: u32,
    pub transport: TransportOptions,
    /// Mixes the quaternionic basis; `None` uses the deterministic greedy choice.
    pub basis_seed: Option<u64>,
}

impl Default for InvariantOptions {
    fn default() -> Self {
        Self {
            grid: Grid2::new(DEFAULT_GRID, DEFAULT_GRID).expect("even grid"),
            max_refinements: 5,
            transport: TransportOptions::default(),
            basis_seed: None,
        }
    }
}

impl InvariantOptions {
    pub fn with_grid(grid: Grid2) -> Self {
        Self {
            grid,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InvariantKind {
    Chern,
    Delta,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Grid of the successful attempt.
    pub grid: Grid2,
    pub refinements: u32,
    /// `k₂` points inserted between grid nodes to resolve `det α`.
    pub inserted_points: usize,
    /// Largest phase increment of the lifted `det α` loop.
    pub max_winding_step: f64,
    pub matching_unitarity: f64,
    pub constraint_residual: Option<f64>,
    pub lambda_zero: Option<f64>,
    pub lambda_pi: Option<f64>,
    pub mu_pi: Option<f64>,
    /// Distance of `(2λ_π − μ(π))/2π` from the nearest integer.
    pub integrality_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub kind: InvariantKind,
    /// Chern number, or `±1` for the Z2 invariant.
    pub value: i64,
    pub diagnostics: Diagnostics,
}

/// Errors that a finer grid may cure.
pub(crate) fn wants_refinement(e: &Error) -> bool {
    matches!(
        e,
        Error::RefinementNeeded { .. }
            | Error::TooFar { .. }
            | Error::Unresolved(_)
            | Error::IntegralityViolation { .. }
    )
}

/// Runs `attempt` on `grid`, doubling the `k₂` resolution after under-resolved
/// failures. Matching matrices only see the `t = ±π` columns, whose accuracy is
/// governed by the transport step policy rather than by `N₁`.
pub(crate) fn with_refinement<T>(
    grid: Grid2,
    max_refinements: u32,
    what: &str,
    mut attempt: impl FnMut(Grid2, u32) -> Result<T>,
) -> Result<T> {
    let mut grid = grid;
    let mut last = None;
    for depth in 0..=max_refinements {
        match attempt(grid, depth) {
            Ok(v) => return Ok(v),
            Err(e) if wants_refinement(&e) => last = Some(e),
            Err(e) => return Err(e),
        }
        grid = Grid2::new(grid.n1(), 2 * grid.n2())?;
    }
    Err(Error::Unresolved(format!(
        "{what} still under-resolved after {max_refinements} refinements: {}",
        last.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// Largest `det α` phase increment accepted without inserting a midpoint.
const MAX_LIFT_STEP: f64 = PI / 4.0;
/// Midpoint insertions allowed per grid interval.
const MAX_BISECTIONS: u32 = 12;

/// Continuous phase increment of `det α` from `a` to `b`, bisecting until each
/// step is at most [`MAX_LIFT_STEP`].
struct Lift<'a> {
    det: &'a (dyn Fn(f64) -> Result<Complex64> + Sync),
    inserted: usize,
    max_step: f64,
}

impl Lift<'_> {
    fn increment(
        &mut self,
        a: f64,
        b: f64,
        za: Complex64,
        zb: Complex64,
        depth: u32,
    ) -> Result<f64> {
        let d = (zb * za.conj()).arg();
        if d.abs() <= MAX_LIFT_STEP {
            self.max_step = self.max_step.max(d.abs());
            return Ok(d);
        }
        if depth >= MAX_BISECTIONS {
            return Err(Error::RefinementNeeded {
                index: 0,
                increment: d.abs(),
            });
        }
        let mid = 0.5 * (a + b);
        let zm = (self.det)(mid)?;
        self.inserted += 1;
        Ok(self.increment(a, mid, za, zm, depth + 1)?
            + self.increment(mid, b, zm, zb, depth + 1)?)
    }

    /// Lifted phases along `points` (with their determinants), starting at `start`.
    fn unwrap(&mut self, points: &[(f64, Complex64)], start: f64) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(points.len());
        let mut phase = start + (points[0].1.arg() - start + PI).rem_euclid(2.0 * PI) - PI;
        out.push(phase);
        for w in points.windows(2) {
            phase += self.increment(w[0].0, w[1].0, w[0].1, w[1].1, 0)?;
            out.push(phase);
        }
        Ok(out)
    }
}

fn unit(z: Complex64) -> Result<Complex64> {
    let r = z.norm();
    if !(r > 1e-12) {
        return Err(Error::Unresolved(format!(
            "matching determinant vanishes (|det| = {r:e})"
        )));
    }
    Ok(z / r)
}

/// Normalized `det(V* U(−π,k₂)⁻¹ U(π,k₂) V)` at any `k₂`.
fn seam_det(tr: &Transporter, basis: &CMatrix, k2: f64) -> Result<Complex64> {
    let (minus, plus) = tr.seam(k2)?;
    unit((basis.adjoint() * minus.adjoint() * plus * basis).determinant())
}

fn trivial_diagnostics(grid: Grid2, symmetric: bool) -> Diagnostics {
    let zero = symmetric.then_some(0.0);
    Diagnostics {
        grid,
        refinements: 0,
        inserted_points: 0,
        max_winding_step: 0.0,
        matching_unitarity: 0.0,
        constraint_residual: zero,
        lambda_zero: zero,
        lambda_pi: zero,
        mu_pi: zero,
        integrality_residual: zero,
    }
}

/// Chern number as the winding of `det α` along `k₂`.
pub fn chern(field: &ProjectionField) -> Result<InvariantReport> {
    chern_with(field, &InvariantOptions::default())
}

pub fn chern_with(field: &ProjectionField, opts: &InvariantOptions) -> Result<InvariantReport> {
    if field.rank() == 0 || field.rank() == field.dim() {
        return Ok(InvariantReport {
            kind: InvariantKind::Chern,
            value: 0,
            diagnostics: trivial_diagnostics(opts.grid, false),
        });
    }
    with_refinement(
        opts.grid,
        opts.max_refinements,
        "Chern number",
        |grid, depth| {
            let tr = Transporter::new(field, false, grid, &opts.transport)?;
            let sheet = tr.sheet();
            let basis = range_basis(sheet.base(), field.rank());
            let family = matching_family(&sheet, &basis)?;
            let mut points = (0..grid.n2())
                .map(|j| Ok((grid.k2(j), unit(family.samples()[j].determinant())?)))
                .collect::<Result<Vec<_>>>()?;
            points.push((PI, points[0].1));
            let det = |k: f64| seam_det(&tr, &basis, k);
            let mut lift = Lift {
                det: &det,
                inserted: 0,
                max_step: 0.0,
            };
            let phases = lift.unwrap(&points, 0.0)?;
            let total = phases[phases.len() - 1] - phases[0];
            let value = (total / (2.0 * PI)).round();
            Ok(InvariantReport {
                kind: InvariantKind::Chern,
                value: value as i64,
                diagnostics: Diagnostics {
                    grid,
                    refinements: depth,
                    inserted_points: lift.inserted,
                    max_winding_step: lift.max_step,
                    matching_unitarity: family.max_unitarity_residual(),
                    ..trivial_diagnostics(grid, false)
                },
            })
        },
    )
}

/// Symmetric transport with a quaternionic basis of the base range.
pub(crate) fn symmetric_matching(
    field: &ProjectionField,
    grid: Grid2,
    opts: &InvariantOptions,
) -> Result<(Transporter, CMatrix, MatchingFamily)> {
    let trs = field.trs().ok_or_else(|| {
        Error::InvalidInput("the Z2 invariant needs a time-reversal symmetric field".into())
    })?;
    let tr = Transporter::new(field, true, grid, &opts.transport)?;
    let sheet = tr.sheet();
    let basis = quaternionic_basis(
        &range_basis(sheet.base(), field.rank()),
        trs,
        opts.basis_seed,
    )?;
    let family = matching_family(&sheet, &basis)?;
    if !family.symmetric() {
        return Err(Error::SymmetryBroken {
            what: "quaternionic basis".into(),
            residual: f64::NAN,
        });
    }
    Ok((tr, basis, family))
}

/// The Z2 invariant `δ(P) ∈ {+1, −1}` of a time-reversal symmetric field.
///
/// `δ = −1` is the non-trivial class; the Kane–Mele quantum spin Hall phase has `δ = −1`.
pub fn delta(field: &ProjectionField) -> Result<InvariantReport> {
    delta_with(field, &InvariantOptions::default())
}

pub fn delta_with(field: &ProjectionField, opts: &InvariantOptions) -> Result<InvariantReport> {
    if field.trs().is_none() {
        return Err(Error::InvalidInput(
            "the Z2 invariant needs a time-reversal symmetric field".into(),
        ));
    }
    if field.rank() % 2 != 0 {
        return Err(Error::OddQuaternionicDimension(field.rank()));
    }
    if field.rank() == 0 {
        return Ok(InvariantReport {
            kind: InvariantKind::Delta,
            value: 1,
            diagnostics: trivial_diagnostics(opts.grid, true),
        });
    }
    with_refinement(
        opts.grid,
        opts.max_refinements,
        "Z2 invariant",
        |grid, depth| {
            let (tr, basis, family) = symmetric_matching(field, grid, opts)?;
            let jq = canonical_j(field.rank() / 2);
            let log_opts = LogOptions::with_constraint(&jq);
            let lambda_zero = unitary_log(family.at_zero(), &log_opts)?.trace().re / 2.0;
            let lambda_pi = unitary_log(family.at_pi(), &log_opts)?.trace().re / 2.0;

            // det α on k₂ ∈ [0, π]
            let n = family.len();
            let points = (n / 2..=n)
                .map(|j| {
                    let k = if j == n { PI } else { grid.k2(j) };
                    Ok((k, unit(family.samples()[j % n].determinant())?))
                })
                .collect::<Result<Vec<_>>>()?;
            let det = |k: f64| seam_det(&tr, &basis, k);
            let mut lift = Lift {
                det: &det,
                inserted: 0,
                max_step: 0.0,
            };
            let mu = lift.unwrap(&points, 2.0 * lambda_zero)?;
            let mu_pi = *mu.last().expect("non-empty");
            let x = (2.0 * lambda_pi - mu_pi) / (2.0 * PI);
            let residual = (x - x.round()).abs();
            if residual > INTEGRALITY_TOL {
                return Err(Error::IntegralityViolation { residual });
            }
            let value = if (x.round() as i64).rem_euclid(2) == 0 {
                1
            } else {
                -1
            };
            Ok(InvariantReport {
                kind: InvariantKind::Delta,
                value,
                diagnostics: Diagnostics {
                    grid,
                    refinements: depth,
                    inserted_points: lift.inserted,
                    max_winding_step: lift.max_step,
                    matching_unitarity: family.max_unitarity_residual(),
                    constraint_residual: family.constraint_residual(),
                    lambda_zero: Some(lambda_zero),
                    lambda_pi: Some(lambda_pi),
                    mu_pi: Some(mu_pi),
                    integrality_residual: Some(residual),
                },
            })
        },
    )
}
