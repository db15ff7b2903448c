//! Constructive null-homotopies of loops in the unitary group.
//!
//! A loop with zero determinant winding is contracted in stages:
//!
//! 1. the determinant phase is peeled into the first diagonal entry and
//!    undone linearly, leaving a loop in `SU(m)`;
//! 2. while `m ≥ 3` the last column, a loop on the unit sphere of `C^m`, is
//!    slid along great circles onto a fixed unit vector `w` and every other
//!    column is dragged along by an explicit special unitary rotation;
//!    a constant rotation then sends `w` to `e_m` and the problem drops to
//!    `SU(m−1)`;
//! 3. a loop in `SU(2)`, viewed as the 3-sphere, is slid along great circles
//!    onto a point antipodal to one it never visits.
//!
//! Each stage is a closed-form function of its parameter, so the homotopy is
//! evaluated at any `s` rather than stored. Stage lengths in `s` are
//! proportional to the largest angle moved within the stage.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    c64, embed_top_left, gaussian_vector, identity, inner, polar_unitary, unitary_log,
    unwrap_phases, CMatrix, LogOptions, UnitaryLoop,
};
use crate::error::{Error, Result};
use crate::numerics::{exp_i_hermitian, op_dist, op_norm};

const RANDOM_TRIES: usize = 20;
const MIN_AVOIDANCE: f64 = 1e-6;
const MIN_STAGE_WEIGHT: f64 = 1e-3;

/// Sampled homotopy: `S + 1` loops on a common grid.
#[derive(Debug, Clone)]
pub struct LoopHomotopy {
    snapshots: Vec<UnitaryLoop>,
}

impl LoopHomotopy {
    pub fn new(snapshots: Vec<UnitaryLoop>) -> Result<Self> {
        let Some(first) = snapshots.first() else {
            return Err(Error::InvalidInput(
                "homotopy needs at least one snapshot".into(),
            ));
        };
        let (len, dim) = (first.len(), first.dim());
        if snapshots.iter().any(|l| l.len() != len || l.dim() != dim) {
            return Err(Error::InvalidInput(
                "homotopy snapshots differ in grid size or dimension".into(),
            ));
        }
        Ok(Self { snapshots })
    }

    pub fn snapshots(&self) -> &[UnitaryLoop] {
        &self.snapshots
    }

    pub fn first(&self) -> &UnitaryLoop {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &UnitaryLoop {
        self.snapshots.last().expect("non-empty")
    }

    /// Largest sample-wise distance between consecutive snapshots.
    pub fn max_snapshot_step(&self) -> f64 {
        self.snapshots
            .windows(2)
            .map(|w| w[0].distance(&w[1]))
            .fold(0.0, f64::max)
    }

    pub fn max_unitarity_residual(&self) -> f64 {
        self.snapshots
            .iter()
            .map(UnitaryLoop::max_unitarity_residual)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
enum Stage {
    /// `diag(e^{−iσφ(k)}, 1, …) γ(k)`.
    PhasePeel {
        loop_start: Vec<CMatrix>,
        phases: Vec<f64>,
    },
    /// `prefix · embed(R(c(k), slerp(c(k), w, σ)) g(k))`.
    Column {
        prefix: CMatrix,
        blocks: Vec<CMatrix>,
        target: Vec<Complex64>,
    },
    /// `prefix · embed(slerp(g(k), q, σ))` on `SU(2)`.
    Sphere {
        prefix: CMatrix,
        blocks: Vec<CMatrix>,
        target: CMatrix,
    },
}

/// Parametric null-homotopy of a loop, from [`contract_loop`].
#[derive(Debug, Clone)]
pub struct ContractionPath {
    dim: usize,
    start: UnitaryLoop,
    stages: Vec<Stage>,
    /// `breaks[i]..breaks[i+1]` is the parameter interval of stage `i`.
    breaks: Vec<f64>,
    endpoint: CMatrix,
    motion: f64,
}

impl ContractionPath {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.start.is_empty()
    }

    /// The constant value reached at `s = 1`.
    pub fn endpoint(&self) -> &CMatrix {
        &self.endpoint
    }

    /// Sum over stages of the largest angle moved; a proxy for path length.
    pub fn total_motion(&self) -> f64 {
        self.motion
    }

    pub fn eval(&self, s: f64) -> UnitaryLoop {
        if s <= 0.0 {
            return self.start.clone();
        }
        if s >= 1.0 {
            return UnitaryLoop::new_unchecked(vec![self.endpoint.clone(); self.len()])
                .expect("valid shape");
        }
        if self.stages.is_empty() {
            return self.start.clone();
        }
        let i = self
            .breaks
            .windows(2)
            .position(|w| s <= w[1])
            .unwrap_or(self.stages.len() - 1);
        let sigma = ((s - self.breaks[i]) / (self.breaks[i + 1] - self.breaks[i])).clamp(0.0, 1.0);
        let samples = eval_stage(&self.stages[i], sigma, self.dim);
        UnitaryLoop::new_unchecked(samples).expect("valid shape")
    }

    /// `S + 1` snapshots at `s = i/S`.
    pub fn sample(&self, intervals: usize) -> LoopHomotopy {
        let intervals = intervals.max(1);
        LoopHomotopy {
            snapshots: (0..=intervals)
                .map(|i| self.eval(i as f64 / intervals as f64))
                .collect(),
        }
    }
}

fn eval_stage(stage: &Stage, sigma: f64, dim: usize) -> Vec<CMatrix> {
    match stage {
        Stage::PhasePeel { loop_start, phases } => loop_start
            .iter()
            .zip(phases)
            .map(|(g, &phi)| {
                let mut out = g.clone();
                let f = Complex64::from_polar(1.0, -sigma * phi);
                out.row_mut(0).iter_mut().for_each(|z| *z *= f);
                out
            })
            .collect(),
        Stage::Column {
            prefix,
            blocks,
            target,
        } => blocks
            .iter()
            .map(|g| {
                let m = g.nrows();
                let c: Vec<Complex64> = g.column(m - 1).iter().copied().collect();
                let rotated = carry_rotation(&c, target, sigma) * g;
                prefix * embed_top_left(&rotated, dim)
            })
            .collect(),
        Stage::Sphere {
            prefix,
            blocks,
            target,
        } => blocks
            .iter()
            .map(|g| prefix * embed_top_left(&sphere_slerp(g, target, sigma), dim))
            .collect(),
    }
}

#[cfg(test)]
/// Great-circle interpolation on the unit sphere of `C^m` seen as `R^{2m}`.
fn slerp(x: &[Complex64], y: &[Complex64], sigma: f64) -> Vec<Complex64> {
    let cos = inner(x, y).re.clamp(-1.0, 1.0);
    let theta = cos.acos();
    if theta < 1e-12 {
        return x.to_vec();
    }
    let (a, b) = (
        ((1.0 - sigma) * theta).sin() / theta.sin(),
        (sigma * theta).sin() / theta.sin(),
    );
    x.iter().zip(y).map(|(p, q)| p * a + q * b).collect()
}

/// Special unitary sending `x` to `slerp(x, w, σ)`, acting only on `span{x, w}`.
///
/// With `a = ⟨x, y⟩`, `r = y − a x`, `b = ‖r‖`, `z = r/b`:
/// `R = I + (a−1)xx* + (ā−1)zz* + b(zx* − xz*)`. The direction `z` does not
/// depend on `σ`, so `R` is continuous in `(σ, x)` whenever `w ∉ C·x`.
fn carry_rotation(x: &[Complex64], w: &[Complex64], sigma: f64) -> CMatrix {
    let m = x.len();
    let mut rot = identity(m);
    let xw = inner(x, w);
    let theta = xw.re.clamp(-1.0, 1.0).acos();
    let u: Vec<Complex64> = w.iter().zip(x).map(|(wi, xi)| wi - xw * xi).collect();
    let nu = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if theta < 1e-12 || nu < 1e-300 {
        return rot;
    }
    let (ca, cb) = (
        ((1.0 - sigma) * theta).sin() / theta.sin(),
        (sigma * theta).sin() / theta.sin(),
    );
    let a = ca + cb * xw;
    let b = cb * nu;
    let z: Vec<Complex64> = u.iter().map(|v| v / nu).collect();
    for i in 0..m {
        for j in 0..m {
            rot[(i, j)] += (a - 1.0) * x[i] * x[j].conj()
                + (a.conj() - 1.0) * z[i] * z[j].conj()
                + b * (z[i] * x[j].conj() - x[i] * z[j].conj());
        }
    }
    rot
}

/// Real inner product of two `SU(2)` elements viewed as points of `S³`.
fn sphere_cos(g: &CMatrix, q: &CMatrix) -> f64 {
    ((g.adjoint() * q).trace().re / 2.0).clamp(-1.0, 1.0)
}

fn sphere_slerp(g: &CMatrix, q: &CMatrix, sigma: f64) -> CMatrix {
    let theta = sphere_cos(g, q).acos();
    if theta < 1e-12 {
        return g.clone();
    }
    let (a, b) = (
        ((1.0 - sigma) * theta).sin() / theta.sin(),
        (sigma * theta).sin() / theta.sin(),
    );
    let out = g * c64(a, 0.0) + q * c64(b, 0.0);
    let norm = out.determinant().re.max(1e-300).sqrt();
    out / c64(norm, 0.0)
}

/// Special unitary with last column exactly `w`.
fn completion_with_last_column(w: &[Complex64]) -> CMatrix {
    let m = w.len();
    let skip = (0..m)
        .min_by(|&a, &b| w[a].norm().total_cmp(&w[b].norm()))
        .unwrap_or(0);
    let mut x = CMatrix::zeros(m, m);
    for (i, wi) in w.iter().enumerate() {
        x[(i, 0)] = *wi;
    }
    let mut col = 1;
    for e in (0..m).filter(|&e| e != skip) {
        if col < m {
            x[(e, col)] = c64(1.0, 0.0);
            col += 1;
        }
    }
    let q0 = x.qr().q();
    let mut q = CMatrix::zeros(m, m);
    for j in 1..m {
        q.set_column(j - 1, &q0.column(j));
    }
    for (i, wi) in w.iter().enumerate() {
        q[(i, m - 1)] = *wi;
    }
    let det = q.determinant();
    let fix = (det / det.norm()).conj();
    q.column_mut(0).iter_mut().for_each(|z| *z *= fix);
    q
}

fn random_unit_vector(m: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let v = gaussian_vector(m, rng);
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

fn random_su2(rng: &mut ChaCha8Rng) -> CMatrix {
    let v = random_unit_vector(2, rng);
    let (a, b) = (v[0], v[1]);
    CMatrix::from_row_slice(2, 2, &[a, -b.conj(), b, a.conj()])
}

/// Null-homotopy of a loop with zero determinant winding.
///
/// `seed` drives the random targets used to avoid antipodal collisions.
pub fn contract_loop(gamma: &UnitaryLoop, seed: u64) -> Result<ContractionPath> {
    let winding = gamma.det_winding()?;
    if winding != 0 {
        return Err(Error::ObstructedLoop { winding });
    }
    let dim = gamma.dim();
    let first = &gamma.samples()[0];
    if gamma.samples().iter().all(|g| op_dist(g, first) <= 1e-14) {
        return Ok(ContractionPath {
            dim,
            start: gamma.clone(),
            stages: Vec::new(),
            breaks: vec![0.0, 1.0],
            endpoint: first.clone(),
            motion: 0.0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stages = Vec::new();
    let mut weights = Vec::new();

    // determinant peel
    let dets: Vec<Complex64> = gamma.samples().iter().map(|g| g.determinant()).collect();
    let phases = unwrap_phases(&dets, dets[0].arg());
    weights.push(phases.iter().map(|p| p.abs()).fold(0.0, f64::max));
    stages.push(Stage::PhasePeel {
        loop_start: gamma.samples().to_vec(),
        phases: phases.clone(),
    });

    let mut blocks: Vec<CMatrix> = gamma
        .samples()
        .iter()
        .zip(&phases)
        .map(|(g, &phi)| {
            let mut out = g.clone();
            let f = Complex64::from_polar(1.0, -phi);
            out.row_mut(0).iter_mut().for_each(|z| *z *= f);
            out
        })
        .collect();
    let mut prefix = identity(dim);

    let mut m = dim;
    while m >= 3 {
        let columns: Vec<Vec<Complex64>> = blocks
            .iter()
            .map(|g| g.column(m - 1).iter().copied().collect())
            .collect();
        let mut best: Option<(f64, Vec<Complex64>)> = None;
        for _ in 0..RANDOM_TRIES {
            let w = random_unit_vector(m, &mut rng);
            let avoid = columns
                .iter()
                .map(|c| 1.0 - inner(&w, c).norm())
                .fold(f64::INFINITY, f64::min);
            if best.as_ref().is_none_or(|(b, _)| avoid > *b) {
                best = Some((avoid, w));
            }
        }
        let (avoid, target) = best.expect("at least one try");
        if avoid < MIN_AVOIDANCE {
            return Err(Error::ContractionFailure(format!(
                "no target vector avoids the column loop in dimension {m} (best margin {avoid:e})"
            )));
        }
        weights.push(
            columns
                .iter()
                .map(|c| inner(c, &target).re.clamp(-1.0, 1.0).acos())
                .fold(0.0, f64::max),
        );

        let q = completion_with_last_column(&target);
        let next_blocks: Vec<CMatrix> = blocks
            .iter()
            .zip(&columns)
            .map(|(g, c)| {
                let moved = q.adjoint() * carry_rotation(c, &target, 1.0) * g;
                moved.view((0, 0), (m - 1, m - 1)).into_owned()
            })
            .collect();
        stages.push(Stage::Column {
            prefix: prefix.clone(),
            blocks,
            target,
        });
        prefix = &prefix * embed_top_left(&q, dim);
        blocks = next_blocks;
        m -= 1;
    }

    let endpoint = if m == 2 {
        let mut best: Option<(f64, CMatrix)> = None;
        for _ in 0..RANDOM_TRIES {
            let p = random_su2(&mut rng);
            // slerp toward −p breaks down only where the loop meets p
            let avoid = blocks
                .iter()
                .map(|g| std::f64::consts::PI - sphere_cos(g, &p).acos())
                .fold(f64::INFINITY, f64::min);
            if best.as_ref().is_none_or(|(b, _)| avoid > *b) {
                best = Some((avoid, p));
            }
        }
        let (avoid, p) = best.expect("at least one try");
        if avoid < MIN_AVOIDANCE {
            return Err(Error::ContractionFailure(format!(
                "SU(2) loop fills the sphere (best margin {avoid:e})"
            )));
        }
        let target = -p;
        weights.push(
            blocks
                .iter()
                .map(|g| sphere_cos(g, &target).acos())
                .fold(0.0, f64::max),
        );
        let endpoint = &prefix * embed_top_left(&target, dim);
        stages.push(Stage::Sphere {
            prefix: prefix.clone(),
            blocks,
            target,
        });
        endpoint
    } else {
        prefix.clone()
    };

    let motion: f64 = weights.iter().sum();
    let padded: Vec<f64> = weights.iter().map(|w| w.max(MIN_STAGE_WEIGHT)).collect();
    let total: f64 = padded.iter().sum();
    let mut breaks = vec![0.0];
    let mut acc = 0.0;
    for w in &padded {
        acc += w / total;
        breaks.push(acc);
    }
    *breaks.last_mut().expect("non-empty") = 1.0;

    Ok(ContractionPath {
        dim,
        start: gamma.clone(),
        stages,
        breaks,
        endpoint,
        motion,
    })
}

/// Homotopy from `γ₀` to `γ₁`, evaluated as `B(s) γ₀`.
///
/// `B` first follows the one-parameter group `exp(i·σ·log C)` from `Id` to the
/// constant `C` that ends a contraction of `γ₁ γ₀⁻¹`, then runs that
/// contraction backwards.
#[derive(Debug, Clone)]
pub struct ConnectionPath {
    start: UnitaryLoop,
    end: UnitaryLoop,
    base_log: CMatrix,
    contraction: ContractionPath,
    split: f64,
}

impl ConnectionPath {
    pub fn start(&self) -> &UnitaryLoop {
        &self.start
    }

    pub fn end(&self) -> &UnitaryLoop {
        &self.end
    }

    pub fn total_motion(&self) -> f64 {
        op_norm(&self.base_log) + self.contraction.total_motion()
    }

    pub fn eval(&self, s: f64) -> UnitaryLoop {
        if s <= 0.0 {
            return self.start.clone();
        }
        if s >= 1.0 {
            return self.end.clone();
        }
        let left: Vec<CMatrix> = if s <= self.split {
            let b = exp_i_hermitian(&(&self.base_log * c64(s / self.split, 0.0)));
            vec![b; self.start.len()]
        } else {
            let back = 1.0 - (s - self.split) / (1.0 - self.split);
            self.contraction.eval(back).into_samples()
        };
        let samples = left
            .iter()
            .zip(self.start.samples())
            .map(|(b, g)| b * g)
            .collect();
        UnitaryLoop::new_unchecked(samples).expect("valid shape")
    }

    pub fn sample(&self, intervals: usize) -> LoopHomotopy {
        let intervals = intervals.max(1);
        LoopHomotopy {
            snapshots: (0..=intervals)
                .map(|i| self.eval(i as f64 / intervals as f64))
                .collect(),
        }
    }
}

pub fn connect_loops(
    gamma0: &UnitaryLoop,
    gamma1: &UnitaryLoop,
    seed: u64,
) -> Result<ConnectionPath> {
    if gamma0.len() != gamma1.len() || gamma0.dim() != gamma1.dim() {
        return Err(Error::InvalidInput(
            "connect_loops needs loops on the same grid and dimension".into(),
        ));
    }
    let w0 = gamma0.det_winding()?;
    let w1 = gamma1.det_winding()?;
    if w0 != w1 {
        return Err(Error::ObstructedLoop { winding: w1 - w0 });
    }
    let mismatch = gamma1.pointwise(gamma0, |a, b| a * b.adjoint())?;
    let contraction = contract_loop(&mismatch, seed)?;
    // the endpoint is a long product of samples; undo its rounding drift
    let base = polar_unitary(contraction.endpoint())?;
    let base_log = unitary_log(&base, &LogOptions::default())?;
    let base_weight = op_norm(&base_log).max(MIN_STAGE_WEIGHT);
    let rest = contraction.total_motion().max(MIN_STAGE_WEIGHT);
    let split = base_weight / (base_weight + rest);
    Ok(ConnectionPath {
        start: gamma0.clone(),
        end: gamma1.clone(),
        base_log,
        contraction,
        split,
    })
}
