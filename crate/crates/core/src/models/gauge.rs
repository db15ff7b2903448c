use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{Grid2, ProjectionField};
use crate::numerics::{
    c64, exp_i_hermitian, gaussian_matrix, hermitian_part, op_dist, unitarity_residual, CMatrix,
};
use crate::trs::TrsStructure;

/// Unitary-valued map on the torus.
pub type UnitaryField = Arc<dyn Fn(f64, f64) -> CMatrix + Send + Sync>;

const CHECK_GRID: usize = 16;

/// `W(k) = exp(i G(k))` with `G` a random Hermitian trigonometric polynomial of order `max_order`.
///
/// With a time-reversal structure the coefficients satisfy
/// `J conj(G_m) J⁻¹ = −G_m`, which gives `T W(k) T⁻¹ = W(−k)`.
pub fn random_gauge(
    dim: usize,
    max_order: i32,
    seed: u64,
    trs: Option<&TrsStructure>,
) -> UnitaryField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs: Vec<((i32, i32), CMatrix)> = Vec::new();
    for m1 in -max_order..=max_order {
        for m2 in -max_order..=max_order {
            if (m1, m2) < (0, 0) {
                continue;
            }
            let scale = 1.0 / (1.0 + (m1 * m1 + m2 * m2) as f64);
            let mut g = gaussian_matrix(dim, dim, &mut rng) * c64(scale, 0.0);
            if (m1, m2) == (0, 0) {
                g = hermitian_part(&g);
            }
            if let Some(t) = trs {
                g = (&g - t.conjugate(&g)) * c64(0.5, 0.0);
            }
            if (m1, m2) != (0, 0) {
                coeffs.push(((-m1, -m2), g.adjoint()));
            }
            coeffs.push(((m1, m2), g));
        }
    }
    Arc::new(move |k1, k2| {
        let mut g = CMatrix::zeros(dim, dim);
        for (m, a) in &coeffs {
            g += a * Complex64::from_polar(1.0, m.0 as f64 * k1 + m.1 as f64 * k2);
        }
        exp_i_hermitian(&hermitian_part(&g))
    })
}

/// The field `k ↦ W(k) P(k) W(k)⁻¹`.
///
/// `W` is checked for unitarity and periodicity on a 16×16 grid, and for
/// `T W(k) T⁻¹ = W(−k)` when `symmetric`. The result keeps the time-reversal
/// structure of `P` only when `symmetric` is set.
pub fn gauge_transform(
    field: &ProjectionField,
    w: UnitaryField,
    symmetric: bool,
) -> Result<ProjectionField> {
    let grid = Grid2::new(CHECK_GRID, CHECK_GRID)?;
    for (k1, k2) in grid.nodes() {
        let wk = w(k1, k2);
        if wk.shape() != (field.dim(), field.dim()) {
            return Err(Error::InvalidInput(format!(
                "gauge has shape {:?}, field dimension {}",
                wk.shape(),
                field.dim()
            )));
        }
        let unit = unitarity_residual(&wk);
        if unit > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "gauge is not unitary at ({k1:.4}, {k2:.4}) (residual {unit:e})"
            )));
        }
        if symmetric {
            let t = field.trs().ok_or_else(|| {
                Error::InvalidInput(
                    "symmetric gauge transform needs a time-reversal symmetric field".into(),
                )
            })?;
            let res = op_dist(&t.conjugate(&wk), &w(-k1, -k2));
            if res > 1e-8 {
                return Err(Error::InvalidInput(format!(
                    "gauge breaks time reversal (residual {res:e})"
                )));
            }
        }
    }
    for i in 0..CHECK_GRID {
        let k = grid.k1(i);
        let res = op_dist(&w(-PI, k), &w(PI, k)).max(op_dist(&w(k, -PI), &w(k, PI)));
        if res > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "gauge is not periodic (residual {res:e})"
            )));
        }
    }
    let inner = field.clone();
    let trs = if symmetric {
        field.trs().cloned()
    } else {
        None
    };
    Ok(ProjectionField::new(
        field.dim(),
        field.rank(),
        format!("gauge({})", field.provenance()),
        move |k1, k2| {
            let wk = w(k1, k2);
            hermitian_part(&(&wk * inner.at(k1, k2) * wk.adjoint()))
        },
    )
    .with_trs_opt(trs))
}
