//! Dense complex linear algebra and the loop-space primitives built on it.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. All norms named `*_norm` are
//! operator 2-norms unless the name says Frobenius.

mod homotopy;
mod log;
mod winding;

pub use homotopy::{connect_loops, contract_loop, ConnectionPath, ContractionPath, LoopHomotopy};
pub use log::{unitary_eig, unitary_log, LogOptions, UnitaryEig};
pub use winding::{unwrap_phases, winding, PhaseLoop, UnitaryLoop};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Builds a matrix from row-major entries, rejecting NaN and infinities.
pub fn cmatrix_from_row_major(rows: usize, cols: usize, data: &[Complex64]) -> Result<CMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidInput(
            "matrix dimensions must be positive".into(),
        ));
    }
    if data.len() != rows * cols {
        return Err(Error::InvalidInput(format!(
            "expected {} entries for a {rows}x{cols} matrix, got {}",
            rows * cols,
            data.len()
        )));
    }
    if let Some(pos) = data
        .iter()
        .position(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::InvalidInput(format!(
            "non-finite entry at row-major index {pos}"
        )));
    }
    Ok(CMatrix::from_row_slice(rows, cols, data))
}

pub fn row_major(m: &CMatrix) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Operator 2-norm, from the largest eigenvalue of `A* A`.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let fro = frobenius_norm(m);
    if fro == 0.0 {
        return 0.0;
    }
    let gram = m.adjoint() * m;
    let ev = hermitian_part(&gram).symmetric_eigenvalues();
    ev.iter()
        .cloned()
        .fold(0.0_f64, f64::max)
        .max(0.0)
        .sqrt()
        .min(fro)
}

/// Operator norm of `a - b`.
pub fn op_dist(a: &CMatrix, b: &CMatrix) -> f64 {
    op_norm(&(a - b))
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    op_norm(&(m - m.adjoint()))
}

/// `‖U* U − Id‖`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    op_norm(&(u.adjoint() * u - identity(u.nrows())))
}

/// Eigen-decomposition of a Hermitian matrix with ascending eigenvalues.
pub fn eigh(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !h.is_square() {
        return Err(Error::InvalidInput(format!(
            "eigh needs a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let skew = hermiticity_residual(h);
    let scale = op_norm(h).max(1.0);
    if skew > 1e-10 * scale {
        return Err(Error::InvalidInput(format!(
            "matrix is not Hermitian (residual {skew:e})"
        )));
    }
    Ok(eigh_unchecked(h))
}

/// Same as [`eigh`] without the Hermiticity check; the input is symmetrized.
pub fn eigh_unchecked(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    let eig = hermitian_part(h).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// `V diag(f(λ)) V*` for Hermitian input.
pub fn hermitian_function(h: &CMatrix, f: impl Fn(f64) -> Complex64) -> CMatrix {
    let (values, v) = eigh_unchecked(h);
    let mut scaled = v.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let fj = f(lambda);
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= fj);
    }
    scaled * v.adjoint()
}

/// Inverse square root of a positive definite Hermitian matrix.
pub fn inv_sqrt_psd(a: &CMatrix, eps: f64) -> Result<CMatrix> {
    let (values, v) = eigh(a)?;
    let min = values.first().copied().unwrap_or(1.0);
    if min < eps {
        return Err(Error::SingularFactor {
            min_eigenvalue: min,
        });
    }
    let mut scaled = v.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let f = 1.0 / lambda.sqrt();
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= f);
    }
    Ok(scaled * v.adjoint())
}

pub const DEFAULT_PSD_EPS: f64 = 1e-12;

/// `exp(i L)` for Hermitian `L`.
pub fn exp_i_hermitian(l: &CMatrix) -> CMatrix {
    hermitian_function(l, |x| Complex64::from_polar(1.0, x))
}

/// Unit-modulus determinant, used wherever only the phase matters.
pub fn det_phase(u: &CMatrix) -> Complex64 {
    let d = u.determinant();
    let r = d.norm();
    if r == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        d / r
    }
}

/// Orthonormal columns spanning the range of a projector, from its top eigenvectors.
pub fn range_basis(p: &CMatrix, rank: usize) -> CMatrix {
    let (_, v) = eigh_unchecked(p);
    let n = p.nrows();
    v.columns(n - rank, rank).into_owned()
}

/// Orthogonal projector onto the span of orthonormal columns.
pub fn projector_from_columns(v: &CMatrix) -> CMatrix {
    v * v.adjoint()
}

/// Polar factor `A (A* A)^{-1/2}`; the closest unitary to a nonsingular `A`.
pub fn polar_unitary(a: &CMatrix) -> Result<CMatrix> {
    let gram = hermitian_part(&(a.adjoint() * a));
    Ok(a * inv_sqrt_psd(&gram, DEFAULT_PSD_EPS)?)
}

/// Vector of independent standard complex Gaussians (unit variance per entry).
pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect()
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_vec(rows, cols, gaussian_vector(rows * cols, rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    hermitian_part(&gaussian_matrix(n, n, rng))
}

/// Haar-distributed unitary from the QR factorization of a Gaussian matrix.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let qr = gaussian_matrix(n, n, rng).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c64(1.0, 0.0)
        };
        q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    q
}

/// Random rank-`r` orthogonal projector on `C^n`.
pub fn random_projector<R: Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> CMatrix {
    let u = haar_unitary(n, rng);
    projector_from_columns(&u.columns(0, r).into_owned())
}

/// Block diagonal `diag(a, b)`.
pub fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMatrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

/// Embeds `a` into the top-left block of an `n×n` identity.
pub fn embed_top_left(a: &CMatrix, n: usize) -> CMatrix {
    let mut out = identity(n);
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out
}

/// Column-major inner product `⟨x, y⟩ = x* y`.
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}
