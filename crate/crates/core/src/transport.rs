//! Kato–Nagy intertwiners and continuous parallel transport of projector families.
//!
//! Transport along a path chains intertwiners between nearby projectors. On a
//! loop the holonomy commutes with the base projector, and a Hermitian
//! logarithm of it bends the transport into a periodic family. On the torus a
//! periodic line at `t = 0` is transported column by column in `t`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{axis_node, wrap_angle, Grid2, ProjectionField};
use crate::numerics::{
    c64, eigh_unchecked, exp_i_hermitian, hermitian_part, identity, op_dist, op_norm,
    polar_unitary, unitarity_residual, unitary_log, CMatrix, LogOptions,
};
use crate::trs::TrsStructure;

const PROJECTOR_TOL: f64 = 1e-10;
const TOO_FAR_MARGIN: f64 = 1e-9;

/// Step policy for chained transport.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportOptions {
    /// Largest allowed `‖P(s_{i+1}) − P(s_i)‖` between chained projectors.
    pub max_step: f64,
    /// Substeps between grid nodes are doubled at most this many times.
    pub max_depth: u32,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self {
            max_step: 0.3,
            max_depth: 8,
        }
    }
}

impl TransportOptions {
    pub fn with_max_step(max_step: f64) -> Self {
        Self {
            max_step,
            ..Self::default()
        }
    }
}

fn projector_defect(p: &CMatrix) -> f64 {
    op_norm(&(p * p - p)).max(op_norm(&(p - p.adjoint())))
}

/// Unitary `U` with `Q = U P U⁻¹`, namely
/// `[QP + (Id−Q)(Id−P)]·[Id − (P−Q)²]^{−1/2}`.
pub fn kato_nagy(p: &CMatrix, q: &CMatrix) -> Result<CMatrix> {
    if p.shape() != q.shape() || !p.is_square() {
        return Err(Error::InvalidInput(format!(
            "projector shapes differ: {:?} vs {:?}",
            p.shape(),
            q.shape()
        )));
    }
    let defect = projector_defect(p).max(projector_defect(q));
    if defect > PROJECTOR_TOL {
        return Err(Error::InvalidInput(format!(
            "kato_nagy input is not an orthogonal projector (defect {defect:e})"
        )));
    }
    let distance = op_dist(p, q);
    if distance >= 1.0 - TOO_FAR_MARGIN {
        return Err(Error::TooFar { distance });
    }
    Ok(kato_nagy_step(p, q)?.0)
}

/// Intertwiner from `P` to `Q` together with `‖P − Q‖`, read off the spectrum
/// of `Id − (P−Q)²`.
fn kato_nagy_step(p: &CMatrix, q: &CMatrix) -> Result<(CMatrix, f64)> {
    let n = p.nrows();
    let id = identity(n);
    let d = p - q;
    let gram = hermitian_part(&(&id - &d * &d));
    let (values, v) = eigh_unchecked(&gram);
    let min = values.first().copied().unwrap_or(1.0);
    let distance = (1.0 - min).max(0.0).sqrt();
    if min < 1e-14 {
        return Err(Error::TooFar { distance });
    }
    let mut scaled = v.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let f = 1.0 / lambda.sqrt();
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= f);
    }
    Ok((
        (q * p + (&id - q) * (&id - p)) * scaled * v.adjoint(),
        distance,
    ))
}

/// Fine projectors and cumulative transports along a sampled path.
struct Chain {
    projectors: Vec<CMatrix>,
    unitaries: Vec<CMatrix>,
}

/// Chains intertwiners along `f` at `steps + 1` equally spaced points of
/// `[0, end]`. Returns `None` as soon as a step exceeds `limit`.
fn chain_path(
    f: &dyn Fn(f64) -> CMatrix,
    end: f64,
    steps: usize,
    start: CMatrix,
    limit: f64,
) -> Result<Option<Chain>> {
    let mut projectors = Vec::with_capacity(steps + 1);
    let mut unitaries = Vec::with_capacity(steps + 1);
    projectors.push(f(0.0));
    unitaries.push(start);
    for i in 1..=steps {
        let p = f(end * i as f64 / steps as f64);
        let (step, distance) = match kato_nagy_step(&projectors[i - 1], &p) {
            Ok(s) => s,
            Err(Error::TooFar { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        if distance > limit {
            return Ok(None);
        }
        unitaries.push(step * &unitaries[i - 1]);
        projectors.push(p);
    }
    Ok(Some(Chain {
        projectors,
        unitaries,
    }))
}

/// Smallest power-of-two refinement `m` of `intervals` steps that keeps every
/// step within `opts.max_step`.
fn resolve_chain(
    f: &dyn Fn(f64) -> CMatrix,
    end: f64,
    intervals: usize,
    start: &CMatrix,
    opts: &TransportOptions,
) -> Result<(usize, Chain)> {
    let mut m = 1usize;
    for _ in 0..=opts.max_depth {
        if let Some(chain) = chain_path(f, end, intervals * m, start.clone(), opts.max_step)? {
            return Ok((m, chain));
        }
        m *= 2;
    }
    Err(Error::RefinementNeeded {
        index: 0,
        increment: opts.max_step,
    })
}

/// Periodic transport along a closed loop `k ↦ P(k)`, `k ∈ [−π, π]`, based at `k = 0`.
#[derive(Debug, Clone)]
pub struct LoopTransport {
    /// `Ũ(k_j)` at the nodes `k_j = −π + 2πj/N`.
    pub samples: Vec<CMatrix>,
    /// Hermitian `L` commuting with `P(0)` with `exp(iL)` the holonomy.
    pub holonomy_log: CMatrix,
    /// `‖Ũ(π) − Ũ(−π)‖` before the seam is identified.
    pub periodicity_residual: f64,
    pub substeps: usize,
    forward: (Vec<CMatrix>, Vec<CMatrix>),
    backward: (Vec<CMatrix>, Vec<CMatrix>),
    fine_step: f64,
    trs: Option<TrsStructure>,
}

impl LoopTransport {
    fn twist(&self, k: f64) -> CMatrix {
        exp_i_hermitian(&(&self.holonomy_log * c64(-k / (2.0 * PI), 0.0)))
    }

    /// `U(k)` on `[0, π]` from the fine chain on side `side`, one extra step off-grid.
    fn untwisted(
        &self,
        side: &(Vec<CMatrix>, Vec<CMatrix>),
        p_at: &dyn Fn() -> CMatrix,
        x: f64,
    ) -> Result<CMatrix> {
        let pos = x / self.fine_step;
        let last = side.1.len() - 1;
        let r = pos.round();
        if (pos - r).abs() < 1e-9 {
            return Ok(side.1[(r as usize).min(last)].clone());
        }
        let i = (pos.floor() as usize).min(last.saturating_sub(1));
        let (step, _) = kato_nagy_step(&side.0[i], &p_at())?;
        Ok(step * &side.1[i])
    }

    /// `Ũ(k)` at any `k`, continuous in `k` and equal to [`Self::samples`] on the nodes.
    pub fn eval(&self, loop_field: &dyn Fn(f64) -> CMatrix, k: f64) -> Result<CMatrix> {
        let k = wrap_angle(k);
        if k < 0.0 {
            if let Some(t) = &self.trs {
                let x = -k;
                let u = self.untwisted(&self.forward, &|| loop_field(x), x)? * self.twist(x);
                return Ok(t.conjugate(&u));
            }
            let u = self.untwisted(&self.backward, &|| loop_field(k), -k)?;
            return Ok(u * self.twist(k));
        }
        Ok(self.untwisted(&self.forward, &|| loop_field(k), k)? * self.twist(k))
    }
}

/// Transport `Ũ(k)` along the loop with `Ũ(0) = Id`, `P(k) = Ũ(k) P(0) Ũ(k)⁻¹`
/// and `Ũ(π) = Ũ(−π)`.
///
/// With `trs` the loop must satisfy `T P(k) T⁻¹ = P(−k)`; the negative half is
/// then the mirror image of the positive half and `T Ũ(k) T⁻¹ = Ũ(−k)`.
pub fn transport_1d(
    loop_field: &dyn Fn(f64) -> CMatrix,
    nodes: usize,
    trs: Option<&TrsStructure>,
    opts: &TransportOptions,
) -> Result<LoopTransport> {
    if nodes < 2 || nodes % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "loop transport needs an even node count, got {nodes}"
        )));
    }
    let half = nodes / 2;
    let dim = loop_field(0.0).nrows();
    let (m, fwd) = resolve_chain(loop_field, PI, half, &identity(dim), opts)?;
    let (substeps, bwd) = match trs {
        Some(_) => (m, None),
        None => {
            // same fine spacing on both halves so that `eval` can share it
            let (mb, _) = resolve_chain(&|k| loop_field(-k), PI, half, &identity(dim), opts)?;
            let mm = m.max(mb);
            let f = chain_path(
                &|k| loop_field(-k),
                PI,
                half * mm,
                identity(dim),
                1.0 - TOO_FAR_MARGIN,
            )?
            .ok_or(Error::RefinementNeeded {
                index: 0,
                increment: opts.max_step,
            })?;
            (mm, Some(f))
        }
    };
    let fwd = if substeps == m {
        fwd
    } else {
        chain_path(
            loop_field,
            PI,
            half * substeps,
            identity(dim),
            1.0 - TOO_FAR_MARGIN,
        )?
        .ok_or(Error::RefinementNeeded {
            index: 0,
            increment: opts.max_step,
        })?
    };
    let base = fwd.projectors[0].clone();
    let u_plus = fwd.unitaries.last().expect("non-empty").clone();
    let u_minus = match (&bwd, trs) {
        (Some(b), _) => b.unitaries.last().expect("non-empty").clone(),
        (None, Some(t)) => t.conjugate(&u_plus),
        (None, None) => unreachable!("backward chain exists without time reversal"),
    };
    let holonomy = u_minus.adjoint() * &u_plus;
    let log = holonomy_log(&holonomy, &base, trs)?;
    let mut out = LoopTransport {
        samples: Vec::new(),
        holonomy_log: log,
        periodicity_residual: 0.0,
        substeps,
        forward: (fwd.projectors, fwd.unitaries),
        backward: bwd.map(|b| (b.projectors, b.unitaries)).unwrap_or_default(),
        fine_step: PI / (half * substeps) as f64,
        trs: trs.cloned(),
    };
    let samples = (0..nodes)
        .map(|j| out.eval(loop_field, axis_node(j, nodes)))
        .collect::<Result<Vec<_>>>()?;
    let seam_plus = &u_plus * out.twist(PI);
    out.periodicity_residual = op_dist(&seam_plus, &samples[0]);
    out.samples = samples;
    Ok(out)
}

/// Hermitian logarithm of a holonomy commuting with `base`, split into the
/// blocks of `base` and its complement; with `trs` it also commutes with `T`.
fn holonomy_log(holonomy: &CMatrix, base: &CMatrix, trs: Option<&TrsStructure>) -> Result<CMatrix> {
    let opts = match trs {
        Some(t) => LogOptions::with_constraint(t.j()),
        None => LogOptions::default(),
    };
    // a product of many steps drifts off the unitary group by rounding
    let l = unitary_log(&polar_unitary(holonomy)?, &opts)?;
    let q = identity(base.nrows()) - base;
    let mut blocked = hermitian_part(&(base * &l * base + &q * &l * &q));
    if let Some(t) = trs {
        blocked = hermitian_part(&((&blocked + t.conjugate(&blocked)) * c64(0.5, 0.0)));
    }
    let back = op_dist(&exp_i_hermitian(&blocked), holonomy);
    if back > 1e-9 {
        return Err(Error::SymmetryBroken {
            what: "holonomy logarithm".into(),
            residual: back,
        });
    }
    Ok(blocked)
}

/// Continuous transport `U(t, k₂)` of a field over the torus.
///
/// The `t = 0` line is transported periodically in `k₂`; each `k₂` column is
/// then chained in `t` from `0` towards `±π` on one partition shared by all
/// columns, which keeps `U` continuous in `k₂`. For symmetric transport the
/// `t < 0` half is `T U(−t,−k₂) T⁻¹`. Columns off the grid can be evaluated
/// after construction.
pub struct Transporter {
    field: ProjectionField,
    grid: Grid2,
    trs: Option<TrsStructure>,
    line: LoopTransport,
    /// Chain steps per `t` node interval, forward and backward.
    substeps: (usize, usize),
    /// `U` at the `t` nodes `0, π/h, …, π` (and `0, −π/h, …, −π`) per `k₂` node.
    forward: Vec<Vec<CMatrix>>,
    backward: Vec<Vec<CMatrix>>,
    opts: TransportOptions,
}

impl std::fmt::Debug for Transporter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transporter")
            .field("field", &self.field.provenance())
            .field("grid", &self.grid)
            .field("symmetric", &self.trs.is_some())
            .field("substeps", &self.substeps)
            .finish()
    }
}

impl Transporter {
    pub fn new(
        field: &ProjectionField,
        symmetric: bool,
        grid: Grid2,
        opts: &TransportOptions,
    ) -> Result<Self> {
        let trs = if symmetric {
            Some(field.trs().cloned().ok_or_else(|| {
                Error::InvalidInput(
                    "symmetric transport needs a time-reversal symmetric field".into(),
                )
            })?)
        } else {
            None
        };
        let line = {
            let f = field.clone();
            transport_1d(&move |k| f.at(0.0, k), grid.n2(), trs.as_ref(), opts)?
        };
        let mut tr = Self {
            field: field.clone(),
            grid,
            trs,
            line,
            substeps: (1, 1),
            forward: Vec::new(),
            backward: Vec::new(),
            opts: *opts,
        };
        let (m, forward) = tr.node_columns(1.0)?;
        tr.substeps.0 = m;
        tr.forward = forward;
        if !symmetric {
            let (m, backward) = tr.node_columns(-1.0)?;
            tr.substeps.1 = m;
            tr.backward = backward;
        }
        Ok(tr)
    }

    fn half(&self) -> usize {
        self.grid.n1() / 2
    }

    /// Node columns on one side, all on the finest partition any of them needs.
    fn node_columns(&self, sign: f64) -> Result<(usize, Vec<Vec<CMatrix>>)> {
        let half = self.half();
        let first: Vec<(usize, Vec<CMatrix>)> = (0..self.grid.n2())
            .into_par_iter()
            .map(|j| {
                let k2 = self.grid.k2(j);
                let f = |t: f64| self.field.at(sign * t, k2);
                let (m, chain) = resolve_chain(&f, PI, half, &self.line.samples[j], &self.opts)?;
                Ok((m, chain.unitaries.into_iter().step_by(m).collect()))
            })
            .collect::<Result<_>>()?;
        let m = first.iter().map(|c| c.0).max().unwrap_or(1);
        let columns = first
            .into_par_iter()
            .enumerate()
            .map(|(j, (mj, column))| {
                if mj == m {
                    Ok(column)
                } else {
                    self.column_at(self.grid.k2(j), sign, m, Some(j))
                }
            })
            .collect::<Result<_>>()?;
        Ok((m, columns))
    }

    /// `U(sign·t, k₂)` at the `t` nodes of one side on the fixed partition `m`.
    fn column_at(&self, k2: f64, sign: f64, m: usize, node: Option<usize>) -> Result<Vec<CMatrix>> {
        let start = match node {
            Some(j) => self.line.samples[j].clone(),
            None => {
                let f = &self.field;
                self.line.eval(&|k| f.at(0.0, k), k2)?
            }
        };
        let f = |t: f64| self.field.at(sign * t, k2);
        let chain = chain_path(&f, PI, self.half() * m, start, 1.0 - TOO_FAR_MARGIN)?.ok_or(
            Error::RefinementNeeded {
                index: 0,
                increment: 1.0,
            },
        )?;
        Ok(chain.unitaries.into_iter().step_by(m).collect())
    }

    fn node_index(&self, k2: f64) -> Option<usize> {
        let n = self.grid.n2() as f64;
        let pos = (wrap_angle(k2) + PI) / (2.0 * PI) * n;
        let r = pos.round();
        ((pos - r).abs() < 1e-9).then_some(r as usize % self.grid.n2())
    }

    fn forward_end(&self, k2: f64) -> Result<CMatrix> {
        match self.node_index(k2) {
            Some(j) => Ok(self.forward[j].last().expect("non-empty").clone()),
            None => Ok(self
                .column_at(k2, 1.0, self.substeps.0, None)?
                .pop()
                .expect("non-empty")),
        }
    }

    /// `(U(−π, k₂), U(π, k₂))`, at any `k₂`.
    pub fn seam(&self, k2: f64) -> Result<(CMatrix, CMatrix)> {
        let plus = self.forward_end(k2)?;
        let minus = match &self.trs {
            Some(t) => t.conjugate(&self.forward_end(-k2)?),
            None => match self.node_index(k2) {
                Some(j) => self.backward[j].last().expect("non-empty").clone(),
                None => self
                    .column_at(k2, -1.0, self.substeps.1, None)?
                    .pop()
                    .expect("non-empty"),
            },
        };
        Ok((minus, plus))
    }

    pub fn base(&self) -> CMatrix {
        self.field.at(0.0, 0.0)
    }

    pub fn grid(&self) -> Grid2 {
        self.grid
    }

    pub fn substeps(&self) -> (usize, usize) {
        self.substeps
    }

    pub fn line(&self) -> &LoopTransport {
        &self.line
    }

    /// All node columns as a sheet.
    pub fn sheet(&self) -> TransportSheet {
        let (n1, n2) = (self.grid.n1(), self.grid.n2());
        let half = self.half();
        let mut samples = vec![CMatrix::zeros(0, 0); (n1 + 1) * n2];
        for j in 0..n2 {
            for s in 0..=half {
                samples[(half + s) * n2 + j] = self.forward[j][s].clone();
                let below = match &self.trs {
                    Some(t) => t.conjugate(&self.forward[Grid2::mirror_index(j, n2)][s]),
                    None => self.backward[j][s].clone(),
                };
                if s > 0 {
                    samples[(half - s) * n2 + j] = below;
                }
            }
        }
        TransportSheet {
            grid: self.grid,
            samples,
            base: self.base(),
            rank: self.field.rank(),
            trs: self.trs.clone(),
            opts: self.opts,
            line_periodicity: self.line.periodicity_residual,
        }
    }
}

/// Transport of a field over the torus: `U(t, k₂)` on `t ∈ [−π, π]` (both ends
/// stored) times the periodic `k₂` nodes of the grid.
#[derive(Debug, Clone)]
pub struct TransportSheet {
    grid: Grid2,
    samples: Vec<CMatrix>,
    base: CMatrix,
    rank: usize,
    trs: Option<TrsStructure>,
    opts: TransportOptions,
    line_periodicity: f64,
}

impl TransportSheet {
    pub fn grid(&self) -> Grid2 {
        self.grid
    }

    /// Number of stored `t` nodes, `N₁ + 1`.
    pub fn t_len(&self) -> usize {
        self.grid.n1() + 1
    }

    pub fn k_len(&self) -> usize {
        self.grid.n2()
    }

    pub fn t(&self, i: usize) -> f64 {
        axis_node(i, self.grid.n1())
    }

    pub fn k2(&self, j: usize) -> f64 {
        self.grid.k2(j)
    }

    pub fn at(&self, i: usize, j: usize) -> &CMatrix {
        &self.samples[i * self.grid.n2() + j]
    }

    /// Index of the `t = 0` row.
    pub fn t_zero(&self) -> usize {
        self.grid.n1() / 2
    }

    pub fn base(&self) -> &CMatrix {
        &self.base
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.base.nrows()
    }

    pub fn symmetric(&self) -> bool {
        self.trs.is_some()
    }

    pub fn trs(&self) -> Option<&TrsStructure> {
        self.trs.as_ref()
    }

    pub fn options(&self) -> &TransportOptions {
        &self.opts
    }

    /// Seam mismatch of the `t = 0` line before identification.
    pub fn line_periodicity_residual(&self) -> f64 {
        self.line_periodicity
    }

    /// `max ‖P(t,k₂) − U P₀ U⁻¹‖` over all nodes.
    pub fn intertwining_residual(&self, field: &ProjectionField) -> f64 {
        (0..self.t_len() * self.k_len())
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / self.k_len(), idx % self.k_len());
                let u = self.at(i, j);
                op_dist(
                    &field.at(self.t(i), self.k2(j)),
                    &(u * &self.base * u.adjoint()),
                )
            })
            .reduce(|| 0.0, f64::max)
    }

    pub fn max_unitarity_residual(&self) -> f64 {
        self.samples
            .iter()
            .map(unitarity_residual)
            .fold(0.0, f64::max)
    }

    /// `max ‖T U(t,k₂) T⁻¹ − U(−t,−k₂)‖`, or `None` for non-symmetric sheets.
    pub fn symmetry_residual(&self) -> Option<f64> {
        let t = self.trs.as_ref()?;
        let (nt, nk) = (self.t_len(), self.k_len());
        let mut worst = 0.0_f64;
        for i in 0..nt {
            for j in 0..nk {
                let mirrored = self.at(nt - 1 - i, Grid2::mirror_index(j, nk));
                worst = worst.max(op_dist(&t.conjugate(self.at(i, j)), mirrored));
            }
        }
        Some(worst)
    }
}

/// Continuous transport of `field` over the torus on the nodes of `grid`.
pub fn transport_2d(
    field: &ProjectionField,
    symmetric: bool,
    grid: Grid2,
    opts: &TransportOptions,
) -> Result<TransportSheet> {
    Ok(Transporter::new(field, symmetric, grid, opts)?.sheet())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{haldane, kane_mele, spectral_projector, KaneMele};
    use crate::numerics::{haar_unitary, projector_from_columns, random_projector};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rank_one(v: &[Complex64]) -> CMatrix {
        projector_from_columns(&CMatrix::from_column_slice(v.len(), 1, v))
    }

    #[test]
    fn equal_projectors_give_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_projector(5, 2, &mut rng);
        assert!(op_dist(&kato_nagy(&p, &p).unwrap(), &identity(5)) < 1e-14);
    }

    #[test]
    fn planar_rotation_oracle() {
        let theta: f64 = 0.3;
        let p = rank_one(&[c64(1.0, 0.0), c64(0.0, 0.0)]);
        let q = rank_one(&[c64(theta.cos(), 0.0), c64(theta.sin(), 0.0)]);
        let u = kato_nagy(&p, &q).unwrap();
        let rot = CMatrix::from_row_slice(
            2,
            2,
            &[
                c64(theta.cos(), 0.0),
                c64(-theta.sin(), 0.0),
                c64(theta.sin(), 0.0),
                c64(theta.cos(), 0.0),
            ],
        );
        assert!(op_dist(&u, &rot) < 1e-14);
    }

    #[test]
    fn orthogonal_lines_are_too_far() {
        let p = rank_one(&[c64(1.0, 0.0), c64(0.0, 0.0)]);
        let q = rank_one(&[c64(0.0, 0.0), c64(1.0, 0.0)]);
        assert!(matches!(kato_nagy(&p, &q), Err(Error::TooFar { .. })));
    }

    #[test]
    fn continuity_in_the_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let p = random_projector(4, 2, &mut rng);
            let small =
                exp_i_hermitian(&(crate::numerics::random_hermitian(4, &mut rng) * c64(0.2, 0.0)));
            let q = &small * &p * small.adjoint();
            let nudge =
                exp_i_hermitian(&(crate::numerics::random_hermitian(4, &mut rng) * c64(1e-6, 0.0)));
            let q2 = hermitian_part(&(&nudge * &q * nudge.adjoint()));
            let (u1, u2) = (kato_nagy(&p, &q).unwrap(), kato_nagy(&p, &q2).unwrap());
            assert!(op_dist(&u1, &u2) <= 1e-4);
        }
    }

    #[test]
    fn rotating_frame_loop_is_periodic() {
        let f = |k: f64| rank_one(&[c64(k.cos(), 0.0), c64(k.sin(), 0.0)]);
        let lt = transport_1d(&f, 32, None, &TransportOptions::default()).unwrap();
        assert!(lt.periodicity_residual < 1e-12);
        let base = f(0.0);
        for (j, u) in lt.samples.iter().enumerate() {
            let k = axis_node(j, 32);
            assert!(op_dist(&(u * &base * u.adjoint()), &f(k)) < 1e-9);
        }
        assert!(op_dist(&lt.samples[16], &identity(2)) < 1e-14);
    }

    #[test]
    fn constant_field_gives_identity_sheet() {
        let p = rank_one(&[c64(1.0, 0.0), c64(0.0, 0.0)]);
        let field = ProjectionField::constant(p, 1, "const");
        let sheet = transport_2d(
            &field,
            false,
            Grid2::new(8, 8).unwrap(),
            &TransportOptions::default(),
        )
        .unwrap();
        for i in 0..sheet.t_len() {
            for j in 0..sheet.k_len() {
                assert!(op_dist(sheet.at(i, j), &identity(2)) < 1e-14);
            }
        }
    }

    #[test]
    fn haldane_sheet_intertwines() {
        let (p, _) = spectral_projector(&haldane(1.0, 0.2, PI / 2.0, 0.1), 1, 1e-3).unwrap();
        let sheet = transport_2d(
            &p,
            false,
            Grid2::new(32, 32).unwrap(),
            &TransportOptions::default(),
        )
        .unwrap();
        assert!(sheet.intertwining_residual(&p) < 1e-8);
        assert!(sheet.line_periodicity_residual() < 1e-10);
        assert!(op_dist(sheet.at(sheet.t_zero(), 16), &identity(2)) < 1e-14);
    }

    #[test]
    fn kane_mele_sheet_is_symmetric() {
        let (p, _) =
            spectral_projector(&kane_mele(&KaneMele::default()).unwrap(), 2, 1e-3).unwrap();
        let sheet = transport_2d(
            &p,
            true,
            Grid2::new(16, 16).unwrap(),
            &TransportOptions::default(),
        )
        .unwrap();
        assert!(sheet.symmetry_residual().unwrap() < 1e-8);
        assert!(sheet.intertwining_residual(&p) < 1e-8);
        assert!(sheet.line_periodicity_residual() < 1e-10);

        let f = p.clone();
        let line = transport_1d(
            &move |k| f.at(0.0, k),
            16,
            p.trs(),
            &TransportOptions::default(),
        )
        .unwrap();
        for (j, u) in line.samples.iter().enumerate() {
            assert!(op_dist(u, sheet.at(sheet.t_zero(), j)) < 1e-9);
        }
        let t = p.trs().unwrap();
        for j in 0..16 {
            let mirrored = &line.samples[Grid2::mirror_index(j, 16)];
            assert!(op_dist(&t.conjugate(&line.samples[j]), mirrored) < 1e-8);
        }
    }

    #[test]
    fn constant_gauge_covariance() {
        let (p, _) = spectral_projector(&haldane(1.0, 0.2, PI / 2.0, 0.1), 1, 1e-3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = haar_unitary(2, &mut rng);
        let (inner, wc) = (p.clone(), w.clone());
        let q = ProjectionField::new(2, 1, "rotated", move |a, b| {
            hermitian_part(&(&wc * inner.at(a, b) * wc.adjoint()))
        });
        let sheet = transport_2d(
            &q,
            false,
            Grid2::new(16, 16).unwrap(),
            &TransportOptions::default(),
        )
        .unwrap();
        assert!(sheet.intertwining_residual(&q) < 1e-8);
    }
}
