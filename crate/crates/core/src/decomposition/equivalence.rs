use rayon::prelude::*;

use super::{symmetric_frame_with, DecompositionOptions, FrameField};
use crate::error::{Error, Result};
use crate::field::{Grid2, ProjectionField};
use crate::invariants::delta_with;
use crate::numerics::{op_dist, unitarity_residual, CMatrix};

/// Unitary family `V(t,k₂)` on grid nodes with `V P₀ V⁻¹ = P₁` and `T V(k) T⁻¹ = V(−k)`.
#[derive(Debug, Clone)]
pub struct SymmetricEquivalence {
    pub grid: Grid2,
    /// Common Z2 invariant of both fields.
    pub delta: i8,
    samples: Vec<CMatrix>,
    /// `max ‖V(π,k₂) − V(−π,k₂)‖`.
    pub periodicity_residual: f64,
    /// `max ‖T V(k) T⁻¹ − V(−k)‖`.
    pub trs_residual: f64,
    /// `max ‖V P₀ V⁻¹ − P₁‖`.
    pub intertwining_residual: f64,
    pub unitarity_residual: f64,
}

impl SymmetricEquivalence {
    /// `V(t_i, k₂_j)` for `i = 0..=N₁`.
    pub fn at(&self, i: usize, j: usize) -> &CMatrix {
        &self.samples[i * self.grid.n2() + j]
    }

    pub fn max_residual(&self) -> f64 {
        self.periodicity_residual
            .max(self.trs_residual)
            .max(self.intertwining_residual)
    }
}

pub fn symmetric_equivalence(
    p0: &ProjectionField,
    p1: &ProjectionField,
) -> Result<SymmetricEquivalence> {
    symmetric_equivalence_with(p0, p1, &DecompositionOptions::default())
}

/// Symmetric unitary equivalence between two time-reversal symmetric fields
/// of the same dimension and rank; it exists exactly when `δ(P₀) = δ(P₁)`.
///
/// `V = F₁ F₀* + K₁ K₀*` for symmetric frames `F` of the fields and `K` of
/// their complements; frames with equal invariants carry equal phase laws,
/// which cancel in `V`. A mismatch returns [`Error::ParityObstruction`] with
/// `δ(P₀)` and the Chern parity `h` that `P₁` would require.
pub fn symmetric_equivalence_with(
    p0: &ProjectionField,
    p1: &ProjectionField,
    opts: &DecompositionOptions,
) -> Result<SymmetricEquivalence> {
    let (Some(t0), Some(t1)) = (p0.trs(), p1.trs()) else {
        return Err(Error::InvalidInput(
            "symmetric equivalence needs two time-reversal symmetric fields".into(),
        ));
    };
    if p0.dim() != p1.dim() || p0.rank() != p1.rank() {
        return Err(Error::InvalidInput(format!(
            "fields differ in shape: dimension {} vs {}, rank {} vs {}",
            p0.dim(),
            p1.dim(),
            p0.rank(),
            p1.rank()
        )));
    }
    let j_mismatch = op_dist(t0.j(), t1.j());
    if j_mismatch > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "fields carry different time reversals (residual {j_mismatch:e})"
        )));
    }
    let inv = opts.invariants();
    let d0 = delta_with(p0, &inv)?.value as i8;
    let d1 = delta_with(p1, &inv)?.value as i8;
    if d0 != d1 {
        return Err(Error::ParityObstruction {
            delta: d0,
            h: if d1 == 1 { 0 } else { 1 },
        });
    }

    let fields = [p0.clone(), p1.clone(), p0.complement(), p1.complement()];
    let mut grid = opts.grid;
    let mut frames: Vec<Option<FrameField>> = Vec::new();
    for _ in 0..4 {
        let o = DecompositionOptions { grid, ..*opts };
        frames = fields
            .iter()
            .map(|f| {
                if f.rank() == 0 {
                    Ok(None)
                } else {
                    symmetric_frame_with(f, &o).map(Some)
                }
            })
            .collect::<Result<_>>()?;
        let grids: Vec<Grid2> = frames.iter().flatten().map(FrameField::grid).collect();
        let finest = grids.iter().fold(grid, |g, f| {
            Grid2::new(g.n1().max(f.n1()), g.n2().max(f.n2())).expect("even grid")
        });
        if grids.iter().all(|g| *g == finest) {
            grid = finest;
            break;
        }
        grid = finest;
    }
    if frames.iter().flatten().any(|f| f.grid() != grid) {
        return Err(Error::Unresolved(
            "symmetric frames do not settle on a common grid".into(),
        ));
    }

    let (nt, nk) = (grid.n1() + 1, grid.n2());
    let dim = p0.dim();
    let samples: Vec<CMatrix> = (0..nt * nk)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / nk, idx % nk);
            let mut v = CMatrix::zeros(dim, dim);
            for pair in [(&frames[0], &frames[1]), (&frames[2], &frames[3])] {
                if let (Some(a), Some(b)) = pair {
                    v += b.at(i, j) * a.at(i, j).adjoint();
                }
            }
            v
        })
        .collect();

    let t_node = |i: usize| crate::field::axis_node(i, grid.n1());
    let periodicity_residual = (0..nk)
        .map(|j| op_dist(&samples[(nt - 1) * nk + j], &samples[j]))
        .fold(0.0, f64::max);
    let (trs_residual, intertwining_residual) = (0..nt * nk)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / nk, idx % nk);
            let v = &samples[idx];
            let mirrored = &samples[(nt - 1 - i) * nk + Grid2::mirror_index(j, nk)];
            let (t, k) = (t_node(i), grid.k2(j));
            let moved = v * p0.at(t, k) * v.adjoint();
            (
                op_dist(&t0.conjugate(v), mirrored),
                op_dist(&moved, &p1.at(t, k)),
            )
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let unitarity = samples
        .par_iter()
        .map(unitarity_residual)
        .reduce(|| 0.0, f64::max);
    Ok(SymmetricEquivalence {
        grid,
        delta: d0,
        samples,
        periodicity_residual,
        trs_residual,
        intertwining_residual,
        unitarity_residual: unitarity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{kane_mele, spectral_projector, KaneMele};

    fn km(p: &KaneMele) -> ProjectionField {
        spectral_projector(&kane_mele(p).unwrap(), 2, 1e-3)
            .unwrap()
            .0
    }

    #[test]
    fn self_equivalence() {
        let p = km(&KaneMele::default());
        let v = symmetric_equivalence(&p, &p).unwrap();
        assert!(
            v.intertwining_residual <= 1e-9,
            "{}",
            v.intertwining_residual
        );
        assert!(v.max_residual() <= 1e-7);
        assert!(v.unitarity_residual <= 1e-9);
    }

    #[test]
    fn kane_mele_phases_are_inequivalent() {
        let e = symmetric_equivalence(&km(&KaneMele::default()), &km(&KaneMele::trivial()))
            .unwrap_err();
        assert_eq!(e, Error::ParityObstruction { delta: -1, h: 0 });
    }
}
