//! Eigen-decomposition and logarithm of unitary matrices.
//!
//! A unitary `U` is rotated so that a chosen cut direction `e^{iθ}` lands on
//! `−1`, then diagonalized through its Cayley transform, which is Hermitian
//! whenever `−1` is not an eigenvalue. Among `candidates` equally spaced cut
//! directions the one farthest from the spectrum wins; the principal cut at
//! `θ = π` is tried first so it wins ties.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{
    eigh_unchecked, exp_i_hermitian, hermitian_part, identity, op_dist, unitarity_residual, CMatrix,
};
use crate::error::{Error, Result};

/// Options for [`unitary_log`] and [`unitary_eig`].
#[derive(Debug, Clone, Copy)]
pub struct LogOptions<'a> {
    /// Quaternionic structure `J`; when set the logarithm satisfies `J Lᵗ J⁻¹ = L`.
    pub constraint: Option<&'a CMatrix>,
    pub candidates: usize,
    pub min_margin: f64,
}

impl Default for LogOptions<'_> {
    fn default() -> Self {
        Self {
            constraint: None,
            candidates: 16,
            min_margin: 1e-6,
        }
    }
}

impl<'a> LogOptions<'a> {
    pub fn with_constraint(j: &'a CMatrix) -> Self {
        Self {
            constraint: Some(j),
            ..Self::default()
        }
    }
}

/// Spectral decomposition `U = V diag(e^{iψ}) V*` with all `ψ` in `(cut − 2π, cut)`.
#[derive(Debug, Clone)]
pub struct UnitaryEig {
    pub phases: Vec<f64>,
    pub vectors: CMatrix,
    pub cut: f64,
    /// Smallest angular distance from the cut to the spectrum.
    pub margin: f64,
}

fn cut_margin(u: &CMatrix, theta: f64) -> f64 {
    let n = u.nrows();
    let w = u * Complex64::from_polar(-1.0, -theta);
    let s = identity(n) * Complex64::new(2.0, 0.0) + &w + w.adjoint();
    let min = hermitian_part(&s)
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    // |1 + e^{ia}|² = 4 sin²(δ/2) with δ the angular distance of e^{ia} from −1
    2.0 * (min.max(0.0).sqrt() / 2.0).min(1.0).asin()
}

pub fn unitary_eig(u: &CMatrix, opts: &LogOptions<'_>) -> Result<UnitaryEig> {
    if !u.is_square() || u.nrows() == 0 {
        return Err(Error::InvalidInput(
            "unitary_eig needs a non-empty square matrix".into(),
        ));
    }
    let n = u.nrows();
    let candidates = opts.candidates.max(1);
    let mut best = (f64::NEG_INFINITY, PI);
    for c in 0..candidates {
        let theta = PI + 2.0 * PI * c as f64 / candidates as f64;
        let margin = cut_margin(u, theta);
        if margin > best.0 + 1e-12 {
            best = (margin, theta);
        }
    }
    let (margin, cut) = best;
    if margin < opts.min_margin {
        return Err(Error::BranchCutFailure {
            required: opts.min_margin,
            best: margin,
        });
    }

    let w = u * Complex64::from_polar(-1.0, -cut);
    let id = identity(n);
    let denom = (&id + &w).try_inverse().ok_or(Error::BranchCutFailure {
        required: opts.min_margin,
        best: 0.0,
    })?;
    let cayley = (&id - &w) * denom * Complex64::new(0.0, 1.0);
    let (_, vectors) = eigh_unchecked(&cayley);

    let phases = (0..n)
        .map(|j| {
            let v = vectors.column(j);
            let rayleigh = (v.adjoint() * &w * v)[(0, 0)];
            rayleigh.arg() + cut - PI
        })
        .collect();
    Ok(UnitaryEig {
        phases,
        vectors,
        cut,
        margin,
    })
}

/// Hermitian `L` with `exp(iL) = U`.
///
/// With a constraint `J` the input must satisfy `J Uᵗ J⁻¹ = U`; the result is
/// averaged with `J Lᵗ J⁻¹` and checked again against `U`.
pub fn unitary_log(u: &CMatrix, opts: &LogOptions<'_>) -> Result<CMatrix> {
    let unit = unitarity_residual(u);
    if unit > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "unitary_log input is not unitary (residual {unit:e})"
        )));
    }
    if let Some(j) = opts.constraint {
        if j.shape() != u.shape() {
            return Err(Error::InvalidInput(
                "constraint J has the wrong dimension".into(),
            ));
        }
        let sym = op_dist(&(j * u.transpose() * j.adjoint()), u);
        if sym > 1e-8 {
            return Err(Error::InvalidInput(format!(
                "U violates J Uᵗ J⁻¹ = U (residual {sym:e})"
            )));
        }
    }

    let eig = unitary_eig(u, opts)?;
    let mut scaled = eig.vectors.clone();
    for (j, &psi) in eig.phases.iter().enumerate() {
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= psi);
    }
    let mut log = hermitian_part(&(scaled * eig.vectors.adjoint()));

    if let Some(j) = opts.constraint {
        let mirrored = j * log.transpose() * j.adjoint();
        log = hermitian_part(&((&log + mirrored) * Complex64::new(0.5, 0.0)));
    }
    let back = op_dist(&exp_i_hermitian(&log), u);
    if back > 1e-9 {
        return Err(Error::SymmetryBroken {
            what: "unitary logarithm round trip".into(),
            residual: back,
        });
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c64, haar_unitary, random_hermitian};
    use nalgebra::DVector;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(values: &[Complex64]) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_column_slice(values))
    }

    fn quaternionic_j(n: usize) -> CMatrix {
        let mut j = CMatrix::zeros(2 * n, 2 * n);
        for a in 0..n {
            j[(a, n + a)] = c64(-1.0, 0.0);
            j[(n + a, a)] = c64(1.0, 0.0);
        }
        j
    }

    #[test]
    fn log_of_identity_is_zero() {
        let l = unitary_log(&identity(3), &LogOptions::default()).unwrap();
        assert!(l.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn log_of_diag_i_minus_i() {
        let u = diag(&[c64(0., 1.), c64(0., -1.)]);
        let l = unitary_log(&u, &LogOptions::default()).unwrap();
        assert!((l[(0, 0)].re - PI / 2.0).abs() < 1e-14);
        assert!((l[(1, 1)].re + PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn cut_moves_away_from_minus_one() {
        let u = diag(&[c64(-1., 0.), c64(1., 0.)]);
        let eig = unitary_eig(&u, &LogOptions::default()).unwrap();
        assert!(eig.margin > 1.0);
        let l = unitary_log(&u, &LogOptions::default()).unwrap();
        assert!(op_dist(&exp_i_hermitian(&l), &u) < 1e-12);
    }

    #[test]
    fn no_cut_available() {
        // sixteen eigenvalues sitting exactly on the sixteen candidate cuts
        let phases: Vec<Complex64> = (0..16)
            .map(|c| Complex64::from_polar(1.0, PI + 2.0 * PI * c as f64 / 16.0))
            .collect();
        let r = unitary_eig(&diag(&phases), &LogOptions::default());
        assert!(matches!(r, Err(Error::BranchCutFailure { .. })));
    }

    #[test]
    fn constrained_log_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..4 {
            let j = quaternionic_j(n);
            let h = random_hermitian(2 * n, &mut rng);
            let sym = hermitian_part(&((&h + &j * h.transpose() * j.adjoint()) * c64(0.5, 0.)));
            let u = exp_i_hermitian(&(sym * c64(2.0, 0.)));
            let l = unitary_log(&u, &LogOptions::with_constraint(&j)).unwrap();
            assert!(op_dist(&exp_i_hermitian(&l), &u) <= 1e-9);
            assert!(op_dist(&(&j * l.transpose() * j.adjoint()), &l) <= 1e-8);
        }
    }

    #[test]
    fn constraint_precondition_is_checked() {
        let j = quaternionic_j(1);
        let u = diag(&[c64(0., 1.), c64(1., 0.)]);
        assert!(matches!(
            unitary_log(&u, &LogOptions::with_constraint(&j)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn symplectic_unitaries_have_unit_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for sample in 0..100 {
            let n = 1 + sample % 3;
            let j = quaternionic_j(n);
            // (J L)ᵗ = J L with L Hermitian means J Lᵗ J⁻¹ = −L after using Jᵗ = −J
            let h = random_hermitian(2 * n, &mut rng);
            let l = hermitian_part(&((&h - &j * h.transpose() * j.adjoint()) * c64(0.5, 0.)));
            let jl = &j * &l;
            assert!(op_dist(&jl.transpose(), &jl) < 1e-12);
            let s = exp_i_hermitian(&l);
            assert!((s.determinant() - c64(1., 0.)).norm() <= 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn log_round_trip(seed in any::<u64>(), n in 1usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = haar_unitary(n, &mut rng);
            let l = unitary_log(&u, &LogOptions::default()).unwrap();
            prop_assert!(op_dist(&exp_i_hermitian(&l), &u) <= 1e-9);
            let eig = unitary_eig(&u, &LogOptions::default()).unwrap();
            prop_assert!(eig.phases.iter().all(|&p| p < eig.cut && p > eig.cut - 2.0 * PI));
        }
    }
}
