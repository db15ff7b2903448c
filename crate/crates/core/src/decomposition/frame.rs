use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{axis_node, Grid2, ProjectionField};
use crate::models::format_real;
use crate::numerics::{c64, cmatrix_from_row_major, identity, op_dist, row_major, CMatrix};
use crate::trs::TrsStructure;

const MAGIC: &str = "z2frames-frame";
const FORMAT_VERSION: u32 = 1;

/// Orthonormal frame `v₁, …, v_r` sampled on the nodes `(t_i, k₂_j)` with
/// `i = 0..=N₁` (both `t = ±π` stored) and `j = 0..N₂`.
///
/// Every vector is periodic in `t` except `v₁(π,k₂) = e^{ihk₂} v₁(−π,k₂)`. A
/// symmetric frame of rank `2n` also has `v_{n+1}(π,k₂) = e^{−ihk₂} v_{n+1}(−π,k₂)`
/// and Kramers pairs `v_{n+j}(t,k₂) = −T v_j(−t,−k₂)`.
///
/// # Text format
///
/// ```text
/// z2frames-frame 1
/// dim <D>
/// rank <r>
/// grid <N1> <N2>
/// boundary_phase <h>
/// symmetric <0|1>
/// trs_J <D·D pairs "re im", row-major>        (symmetric frames only)
/// node <i> <j> <D·r pairs "re im", row-major>  (one line per node)
/// ```
///
/// Nodes are listed with `i` slow; `t_i = −π + 2πi/N1` and `k₂_j = −π + 2πj/N2`.
/// Column `a` of a node matrix is the vector `v_{a+1}`. Reals use 17
/// significant digits.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameField {
    grid: Grid2,
    dim: usize,
    rank: usize,
    boundary_phase: i64,
    trs: Option<TrsStructure>,
    samples: Vec<CMatrix>,
}

impl FrameField {
    pub(crate) fn new(
        grid: Grid2,
        samples: Vec<CMatrix>,
        boundary_phase: i64,
        trs: Option<TrsStructure>,
    ) -> Result<Self> {
        let expected = (grid.n1() + 1) * grid.n2();
        if samples.len() != expected {
            return Err(Error::InvalidInput(format!(
                "frame needs {expected} node samples, got {}",
                samples.len()
            )));
        }
        let (dim, rank) = samples[0].shape();
        if samples.iter().any(|m| m.shape() != (dim, rank)) {
            return Err(Error::InvalidInput("frame samples differ in shape".into()));
        }
        if let Some(t) = &trs {
            if rank % 2 != 0 {
                return Err(Error::OddQuaternionicDimension(rank));
            }
            if t.dim() != dim {
                return Err(Error::InvalidInput(format!(
                    "frame dimension {dim} but T acts on C^{}",
                    t.dim()
                )));
            }
        }
        Ok(Self {
            grid,
            dim,
            rank,
            boundary_phase,
            trs,
            samples,
        })
    }

    pub fn grid(&self) -> Grid2 {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// The integer `h` of the phase law on `v₁`.
    pub fn boundary_phase(&self) -> i64 {
        self.boundary_phase
    }

    pub fn symmetric(&self) -> bool {
        self.trs.is_some()
    }

    pub fn trs(&self) -> Option<&TrsStructure> {
        self.trs.as_ref()
    }

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

    /// The `D × r` matrix of frame vectors at node `(t_i, k₂_j)`.
    pub fn at(&self, i: usize, j: usize) -> &CMatrix {
        &self.samples[i * self.grid.n2() + j]
    }

    /// Phase-law integer of column `a`.
    pub fn column_law(&self, a: usize) -> i64 {
        let n = self.rank / 2;
        if a == 0 {
            self.boundary_phase
        } else if self.symmetric() && a == n {
            -self.boundary_phase
        } else {
            0
        }
    }

    /// `Λ(k₂)` with `v(π,k₂) = v(−π,k₂) Λ(k₂)`.
    pub fn phase_law(&self, k2: f64) -> CMatrix {
        let mut law = identity(self.rank);
        for a in 0..self.rank {
            law[(a, a)] = Complex64::from_polar(1.0, self.column_law(a) as f64 * k2);
        }
        law
    }

    /// `max ‖v* v − Id‖` over all nodes.
    pub fn gram_residual(&self) -> f64 {
        let id = identity(self.rank);
        self.samples
            .par_iter()
            .map(|v| op_dist(&(v.adjoint() * v), &id))
            .reduce(|| 0.0, f64::max)
    }

    /// `max ‖v v* − P(t,k₂)‖` over all nodes.
    pub fn reconstruction_residual(&self, field: &ProjectionField) -> f64 {
        (0..self.samples.len())
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / self.k_len(), idx % self.k_len());
                let v = &self.samples[idx];
                op_dist(&(v * v.adjoint()), &field.at(self.t(i), self.k2(j)))
            })
            .reduce(|| 0.0, f64::max)
    }

    /// `max ‖v(π,k₂) − v(−π,k₂) Λ(k₂)‖` over the `k₂` nodes.
    pub fn boundary_residual(&self) -> f64 {
        let last = self.t_len() - 1;
        (0..self.k_len())
            .map(|j| {
                op_dist(
                    self.at(last, j),
                    &(self.at(0, j) * self.phase_law(self.k2(j))),
                )
            })
            .fold(0.0, f64::max)
    }

    /// `max ‖v_{n+j}(t,k₂) + T v_j(−t,−k₂)‖`, for symmetric frames.
    pub fn kramers_residual(&self) -> Option<f64> {
        let t = self.trs.as_ref()?;
        let n = self.rank / 2;
        let (nt, nk) = (self.t_len(), self.k_len());
        let mut worst = 0.0_f64;
        for i in 0..nt {
            for j in 0..nk {
                let v = self.at(i, j);
                let partner = t.apply(
                    &self
                        .at(nt - 1 - i, Grid2::mirror_index(j, nk))
                        .columns(0, n)
                        .into_owned(),
                );
                worst = worst.max(op_dist(&v.columns(n, n).into_owned(), &(-partner)));
            }
        }
        Some(worst)
    }

    /// Columns that are not periodic in `t` at some `k₂` node, beyond `tol`.
    pub fn pseudo_periodic_columns(&self, tol: f64) -> Vec<usize> {
        let last = self.t_len() - 1;
        (0..self.rank)
            .filter(|&a| {
                (0..self.k_len())
                    .any(|j| (self.at(last, j).column(a) - self.at(0, j).column(a)).norm() > tol)
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let pairs = |out: &mut String, m: &CMatrix| {
            for z in row_major(m) {
                let _ = write!(out, " {} {}", format_real(z.re), format_real(z.im));
            }
        };
        let _ = writeln!(out, "{MAGIC} {FORMAT_VERSION}");
        let _ = writeln!(out, "dim {}", self.dim);
        let _ = writeln!(out, "rank {}", self.rank);
        let _ = writeln!(out, "grid {} {}", self.grid.n1(), self.grid.n2());
        let _ = writeln!(out, "boundary_phase {}", self.boundary_phase);
        let _ = writeln!(out, "symmetric {}", u8::from(self.symmetric()));
        if let Some(t) = &self.trs {
            out.push_str("trs_J");
            pairs(&mut out, t.j());
            out.push('\n');
        }
        for i in 0..self.t_len() {
            for j in 0..self.k_len() {
                let _ = write!(out, "node {i} {j}");
                pairs(&mut out, self.at(i, j));
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let mut next = |key: &str| -> Result<(usize, Vec<&str>)> {
            let (n, line) = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("frame file ends before `{key}`")))?;
            let mut tokens = line.split_whitespace();
            match tokens.next() {
                Some(k) if k == key => Ok((n + 1, tokens.collect())),
                other => Err(Error::Parse(format!(
                    "line {}: expected `{key}`, found `{}`",
                    n + 1,
                    other.unwrap_or("")
                ))),
            }
        };
        fn ints<T: std::str::FromStr>(
            line: usize,
            tokens: &[&str],
            count: usize,
        ) -> Result<Vec<T>> {
            if tokens.len() != count {
                return Err(Error::Parse(format!(
                    "line {line}: expected {count} values, found {}",
                    tokens.len()
                )));
            }
            tokens
                .iter()
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::Parse(format!("line {line}: bad integer `{t}`")))
                })
                .collect()
        }
        fn complexes(line: usize, tokens: &[&str], count: usize) -> Result<Vec<Complex64>> {
            if tokens.len() != 2 * count {
                return Err(Error::Parse(format!(
                    "line {line}: expected {} reals, found {}",
                    2 * count,
                    tokens.len()
                )));
            }
            let reals = tokens
                .iter()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("line {line}: bad real `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(reals.chunks(2).map(|p| c64(p[0], p[1])).collect())
        }

        let (n, tokens) = next(MAGIC)?;
        let version: Vec<u32> = ints(n, &tokens, 1)?;
        if version[0] != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "line {n}: unsupported frame format version {}",
                version[0]
            )));
        }
        let (n, tokens) = next("dim")?;
        let dim = ints::<usize>(n, &tokens, 1)?[0];
        let (n, tokens) = next("rank")?;
        let rank = ints::<usize>(n, &tokens, 1)?[0];
        let (n, tokens) = next("grid")?;
        let g = ints::<usize>(n, &tokens, 2)?;
        let grid = Grid2::new(g[0], g[1]).map_err(|e| Error::Parse(format!("line {n}: {e}")))?;
        let (n, tokens) = next("boundary_phase")?;
        let boundary_phase = ints::<i64>(n, &tokens, 1)?[0];
        let (n, tokens) = next("symmetric")?;
        let symmetric = match ints::<u8>(n, &tokens, 1)?[0] {
            0 => false,
            1 => true,
            other => {
                return Err(Error::Parse(format!(
                    "line {n}: symmetric flag must be 0 or 1, found {other}"
                )))
            }
        };
        let trs = if symmetric {
            let (n, tokens) = next("trs_J")?;
            let j = cmatrix_from_row_major(dim, dim, &complexes(n, &tokens, dim * dim)?)?;
            Some(TrsStructure::new(j).map_err(|e| Error::Parse(format!("line {n}: {e}")))?)
        } else {
            None
        };
        let mut samples = Vec::with_capacity((grid.n1() + 1) * grid.n2());
        for i in 0..=grid.n1() {
            for j in 0..grid.n2() {
                let (n, tokens) = next("node")?;
                if tokens.len() < 2 {
                    return Err(Error::Parse(format!(
                        "line {n}: node line lacks its indices"
                    )));
                }
                let idx = ints::<usize>(n, &tokens[..2], 2)?;
                if idx != [i, j] {
                    return Err(Error::Parse(format!(
                        "line {n}: expected node {i} {j}, found {} {}",
                        idx[0], idx[1]
                    )));
                }
                samples.push(cmatrix_from_row_major(
                    dim,
                    rank,
                    &complexes(n, &tokens[2..], dim * rank)?,
                )?);
            }
        }
        if let Some((n, _)) = lines.next() {
            return Err(Error::Parse(format!(
                "line {}: unexpected content after the last node",
                n + 1
            )));
        }
        Self::new(grid, samples, boundary_phase, trs)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_text(&text)
    }
}
