//! Projection-valued maps on the torus and the grids they are sampled on.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    block_diag, eigh_unchecked, identity, op_dist, projector_from_columns, CMatrix,
};
use crate::transport::kato_nagy;
use crate::trs::TrsStructure;

/// Uniform `N₁ × N₂` grid with nodes `−π + 2πi/N` on each axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid2 {
    n1: usize,
    n2: usize,
}

impl Grid2 {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 || n1 % 2 != 0 || n2 % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "grid sizes must be even and positive, got {n1}x{n2}"
            )));
        }
        Ok(Self { n1, n2 })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn k1(&self, i: usize) -> f64 {
        axis_node(i, self.n1)
    }

    pub fn k2(&self, j: usize) -> f64 {
        axis_node(j, self.n2)
    }

    /// Index of the node at `−k` on an axis of `n` nodes.
    pub fn mirror_index(i: usize, n: usize) -> usize {
        (n - i) % n
    }

    /// Row-major `(k₁, k₂)` nodes.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.n1).flat_map(move |i| (0..self.n2).map(move |j| (self.k1(i), self.k2(j))))
    }

    pub fn refined(&self) -> Self {
        Self {
            n1: 2 * self.n1,
            n2: 2 * self.n2,
        }
    }
}

impl fmt::Display for Grid2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n1, self.n2)
    }
}

#[inline]
pub fn axis_node(i: usize, n: usize) -> f64 {
    -PI + 2.0 * PI * i as f64 / n as f64
}

/// Wraps an angle into `[−π, π)`.
#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

type Evaluator = Arc<dyn Fn(f64, f64) -> CMatrix + Send + Sync>;

/// Rank-`r` orthogonal projectors on `C^D` parameterized by the torus.
#[derive(Clone)]
pub struct ProjectionField {
    dim: usize,
    rank: usize,
    eval: Evaluator,
    trs: Option<TrsStructure>,
    provenance: String,
}

impl fmt::Debug for ProjectionField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProjectionField")
            .field("dim", &self.dim)
            .field("rank", &self.rank)
            .field("trs", &self.trs.is_some())
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl ProjectionField {
    pub fn new(
        dim: usize,
        rank: usize,
        provenance: impl Into<String>,
        eval: impl Fn(f64, f64) -> CMatrix + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            rank,
            eval: Arc::new(eval),
            trs: None,
            provenance: provenance.into(),
        }
    }

    pub fn constant(p: CMatrix, rank: usize, provenance: impl Into<String>) -> Self {
        let dim = p.nrows();
        Self::new(dim, rank, provenance, move |_, _| p.clone())
    }

    pub fn with_trs(mut self, trs: TrsStructure) -> Self {
        self.trs = Some(trs);
        self
    }

    pub fn with_trs_opt(mut self, trs: Option<TrsStructure>) -> Self {
        self.trs = trs;
        self
    }

    pub fn without_trs(mut self) -> Self {
        self.trs = None;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn trs(&self) -> Option<&TrsStructure> {
        self.trs.as_ref()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn at(&self, k1: f64, k2: f64) -> CMatrix {
        (self.eval)(k1, k2)
    }

    /// `P ⊕ Q` on `C^{D_P + D_Q}`; time reversal is kept when both carry it.
    pub fn direct_sum(&self, other: &ProjectionField) -> ProjectionField {
        let (a, b) = (self.clone(), other.clone());
        let trs = match (self.trs(), other.trs()) {
            (Some(s), Some(t)) => Some(s.direct_sum(t)),
            _ => None,
        };
        ProjectionField::new(
            self.dim + other.dim,
            self.rank + other.rank,
            format!("{} (+) {}", self.provenance, other.provenance),
            move |k1, k2| block_diag(&a.at(k1, k2), &b.at(k1, k2)),
        )
        .with_trs_opt(trs)
    }

    /// `Id − P`.
    pub fn complement(&self) -> ProjectionField {
        let inner = self.clone();
        let dim = self.dim;
        ProjectionField::new(
            dim,
            dim - self.rank,
            format!("complement({})", self.provenance),
            move |k1, k2| identity(dim) - inner.at(k1, k2),
        )
        .with_trs_opt(self.trs.clone())
    }

    /// Field interpolated from projectors on the nodes of `grid` (row-major, `k₁` slow).
    ///
    /// Between nodes the four neighbouring projectors are blended bilinearly and
    /// the result is projected back onto its top `rank` eigenvectors. This
    /// reproduces the nodes exactly and keeps a time-reversal symmetry of the
    /// node data, since the grid is closed under negation.
    pub fn from_samples(
        grid: Grid2,
        samples: Vec<CMatrix>,
        rank: usize,
        provenance: impl Into<String>,
    ) -> Result<ProjectionField> {
        if samples.len() != grid.n1() * grid.n2() {
            return Err(Error::InvalidInput(format!(
                "expected {} node samples for grid {grid}, got {}",
                grid.n1() * grid.n2(),
                samples.len()
            )));
        }
        let dim = samples[0].nrows();
        let jump = max_neighbor_distance(grid, &samples);
        if jump >= MAX_SAMPLE_JUMP {
            return Err(Error::Unresolved(format!(
                "sampled projectors jump by {jump:.3} between neighbouring nodes of grid {grid}"
            )));
        }
        let samples = Arc::new(samples);
        Ok(ProjectionField::new(
            dim,
            rank,
            provenance,
            move |k1, k2| interpolate(&grid, &samples, rank, k1, k2),
        ))
    }

    /// Field of rank-`rank` subprojectors of `self`, interpolated from node samples `Q ≤ P`.
    ///
    /// Between nodes each corner sample is carried into `P(k)` by the Kato–Nagy
    /// intertwiner of the parent, the carried samples are blended bilinearly and
    /// the top `rank` eigenvectors of the blend span the result. The complement
    /// samples `P − Q` blend to `P − blend`, so complementary node data give
    /// complementary fields, and carrying commutes with time reversal. The grid
    /// only has to keep the blend gapped, not resolve how fast `P` itself moves.
    pub fn subfield_from_samples(
        &self,
        grid: Grid2,
        samples: Vec<CMatrix>,
        rank: usize,
        provenance: impl Into<String>,
    ) -> Result<ProjectionField> {
        if samples.len() != grid.n1() * grid.n2() {
            return Err(Error::InvalidInput(format!(
                "expected {} node samples for grid {grid}, got {}",
                grid.n1() * grid.n2(),
                samples.len()
            )));
        }
        if rank == 0 || rank > self.rank {
            return Err(Error::InvalidInput(format!(
                "subfield rank {rank} outside 1..={}",
                self.rank
            )));
        }
        let n2 = grid.n2();
        let parents: Vec<CMatrix> = (0..samples.len())
            .into_par_iter()
            .map(|idx| self.at(grid.k1(idx / n2), grid.k2(idx % n2)))
            .collect();
        let blender = Arc::new(Blender {
            grid,
            parent: self.clone(),
            parents,
            samples,
        });
        let gap = match blender.min_gap(rank) {
            Ok(g) => g,
            Err(Error::TooFar { distance }) => {
                return Err(Error::Unresolved(format!(
                    "parent projectors {distance:.3} apart within a cell of grid {grid}"
                )))
            }
            Err(e) => return Err(e),
        };
        if gap < MIN_BLEND_GAP {
            return Err(Error::Unresolved(format!(
                "blended subprojectors keep a gap of only {gap:.3} inside the parent on grid {grid}"
            )));
        }
        Ok(ProjectionField::new(
            self.dim,
            rank,
            provenance,
            move |k1, k2| match locate(&grid, k1, k2) {
                Ok(idx) => blender.samples[idx].clone(),
                // every cell was checked at its edge midpoints and centre
                Err(corners) => top_projector(
                    &blender
                        .blend(k1, k2, &corners)
                        .unwrap_or_else(|_| blender.nearest(&corners)),
                    rank,
                ),
            },
        ))
    }
}

/// Node samples of a subfield together with the parent they live in.
struct Blender {
    grid: Grid2,
    parent: ProjectionField,
    parents: Vec<CMatrix>,
    samples: Vec<CMatrix>,
}

impl Blender {
    fn blend(&self, k1: f64, k2: f64, corners: &[(usize, f64); 4]) -> Result<CMatrix> {
        let p = self.parent.at(k1, k2);
        let mut blend = CMatrix::zeros(p.nrows(), p.ncols());
        for &(idx, w) in corners {
            if w > 0.0 {
                blend += carry(&self.parents[idx], &p, &self.samples[idx])?
                    * num_complex::Complex64::new(w, 0.0);
            }
        }
        Ok(blend)
    }

    fn nearest(&self, corners: &[(usize, f64); 4]) -> CMatrix {
        let (idx, _) =
            corners.iter().fold(
                (corners[0].0, -1.0),
                |best, &(i, w)| if w > best.1 { (i, w) } else { best },
            );
        self.samples[idx].clone()
    }

    /// Smallest gap between the top `rank` eigenvalues of the blend and the
    /// rest, over edge midpoints and cell centres.
    fn min_gap(&self, rank: usize) -> Result<f64> {
        let (n1, n2) = (self.grid.n1(), self.grid.n2());
        let (h1, h2) = (PI / n1 as f64, PI / n2 as f64);
        let gaps = (0..n1 * n2)
            .into_par_iter()
            .map(|idx| -> Result<f64> {
                let (k1, k2) = (self.grid.k1(idx / n2), self.grid.k2(idx % n2));
                let mut worst = f64::INFINITY;
                for (d1, d2) in [(h1, 0.0), (0.0, h2), (h1, h2)] {
                    let corners = locate(&self.grid, k1 + d1, k2 + d2).expect_err("off-node point");
                    let (values, _) = eigh_unchecked(&self.blend(k1 + d1, k2 + d2, &corners)?);
                    let d = values.len();
                    let below = if rank < d { values[d - rank - 1] } else { 0.0 };
                    worst = worst.min(values[d - rank] - below);
                }
                Ok(worst)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(gaps.into_iter().fold(f64::INFINITY, f64::min))
    }
}

/// Blended subprojectors need at least this gap; neighbouring samples closer
/// than [`MAX_SAMPLE_JUMP`] always provide it.
pub const MIN_BLEND_GAP: f64 = 0.1;

/// Interpolated fields need neighbouring node projectors closer than this.
pub const MAX_SAMPLE_JUMP: f64 = 0.45;

pub fn max_neighbor_distance(grid: Grid2, samples: &[CMatrix]) -> f64 {
    let (n1, n2) = (grid.n1(), grid.n2());
    let mut worst = 0.0_f64;
    for i in 0..n1 {
        for j in 0..n2 {
            let here = &samples[i * n2 + j];
            worst = worst.max(op_dist(here, &samples[((i + 1) % n1) * n2 + j]));
            worst = worst.max(op_dist(here, &samples[i * n2 + (j + 1) % n2]));
        }
    }
    worst
}

/// Node index when `(k1, k2)` is a grid node, otherwise the four cell corners and their bilinear weights.
fn locate(grid: &Grid2, k1: f64, k2: f64) -> std::result::Result<usize, [(usize, f64); 4]> {
    let (n1, n2) = (grid.n1(), grid.n2());
    // snap to nodes so grid points reproduce their samples exactly
    let snap = |t: f64| {
        if (t - t.round()).abs() < 1e-9 {
            t.round()
        } else {
            t
        }
    };
    let x = snap((wrap_angle(k1) + PI) / (2.0 * PI) * n1 as f64);
    let y = snap((wrap_angle(k2) + PI) / (2.0 * PI) * n2 as f64);
    let (i0, j0) = (x.floor() as usize % n1, y.floor() as usize % n2);
    let (fx, fy) = (x - x.floor(), y - y.floor());
    if fx == 0.0 && fy == 0.0 {
        return Ok(i0 * n2 + j0);
    }
    let (i1, j1) = ((i0 + 1) % n1, (j0 + 1) % n2);
    Err([
        (i0 * n2 + j0, (1.0 - fx) * (1.0 - fy)),
        (i1 * n2 + j0, fx * (1.0 - fy)),
        (i0 * n2 + j1, (1.0 - fx) * fy),
        (i1 * n2 + j1, fx * fy),
    ])
}

fn top_projector(blend: &CMatrix, rank: usize) -> CMatrix {
    let (_, v) = eigh_unchecked(blend);
    let d = blend.nrows();
    projector_from_columns(&v.columns(d - rank, rank).into_owned())
}

fn interpolate(grid: &Grid2, samples: &[CMatrix], rank: usize, k1: f64, k2: f64) -> CMatrix {
    match locate(grid, k1, k2) {
        Ok(idx) => samples[idx].clone(),
        Err(corners) => {
            let blend = corners.iter().fold(
                CMatrix::zeros(samples[0].nrows(), samples[0].ncols()),
                |acc, &(idx, w)| acc + &samples[idx] * num_complex::Complex64::new(w, 0.0),
            );
            top_projector(&blend, rank)
        }
    }
}

/// `Q` carried from a node with parent projector `from` into the parent projector `to`.
fn carry(from: &CMatrix, to: &CMatrix, q: &CMatrix) -> Result<CMatrix> {
    let u = kato_nagy(from, to)?;
    Ok(&u * q * u.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c64;
    use crate::trs::validate_field;

    #[test]
    fn grid_is_negation_closed() {
        let g = Grid2::new(8, 6).unwrap();
        for i in 0..8 {
            let m = Grid2::mirror_index(i, 8);
            assert!((wrap_angle(-g.k1(i)) - g.k1(m)).abs() < 1e-14);
        }
        assert!(Grid2::new(7, 8).is_err());
        assert_eq!(g.nodes().count(), 48);
        // contains 0 and π (as −π)
        assert_eq!(g.k1(4), 0.0);
        assert_eq!(g.k1(0), -PI);
    }

    #[test]
    fn constant_field_validates() {
        let mut p = CMatrix::zeros(3, 3);
        p[(0, 0)] = c64(1., 0.);
        let f = ProjectionField::constant(p, 1, "const");
        let r = validate_field(&f, &Grid2::new(4, 4).unwrap());
        assert!(r.passed());
        assert_eq!(r.idempotency.value, 0.0);
    }

    #[test]
    fn sampled_field_reproduces_nodes() {
        let f = ProjectionField::new(2, 1, "rotating", |k1, k2| {
            let (c, s) = ((k1 / 2.0).cos(), (k1 / 2.0).sin());
            let v =
                CMatrix::from_column_slice(2, 1, &[c64(c, 0.), c64(s * k2.cos(), s * k2.sin())]);
            let p = projector_from_columns(&v);
            p
        });
        let g = Grid2::new(16, 16).unwrap();
        let samples: Vec<_> = g.nodes().map(|(a, b)| f.at(a, b)).collect();
        let s = ProjectionField::from_samples(g, samples, 1, "sampled").unwrap();
        for (a, b) in g.nodes() {
            assert!(op_dist(&s.at(a, b), &f.at(a, b)) < 1e-15);
        }
        let mid = s.at(0.1, 0.2);
        assert!(op_dist(&(&mid * &mid), &mid) < 1e-12);
        assert!(op_dist(&mid, &f.at(0.1, 0.2)) < 0.05);
    }

    #[test]
    fn coarse_samples_rejected() {
        let g = Grid2::new(2, 2).unwrap();
        let e = |i: usize| {
            let mut p = CMatrix::zeros(2, 2);
            p[(i, i)] = c64(1., 0.);
            p
        };
        let r = ProjectionField::from_samples(g, vec![e(0), e(1), e(1), e(0)], 1, "coarse");
        assert!(matches!(r, Err(Error::Unresolved(_))));
    }
}
