use crate::error::{Error, Result};
use crate::numerics::{identity, op_dist, polar_unitary, unitarity_residual, CMatrix};
use crate::transport::TransportSheet;
use crate::trs::canonical_j;

const BASIS_TOL: f64 = 1e-10;
const CONSTRAINT_TOL: f64 = 1e-6;

/// Loop of matching matrices `α(k₂)` relating the transported frame at
/// `t = π` to the one at `t = −π`: `U(π,k₂) v = U(−π,k₂) v α(k₂)`.
#[derive(Debug, Clone)]
pub struct MatchingFamily {
    samples: Vec<CMatrix>,
    symmetric: bool,
    constraint_residual: Option<f64>,
    unitarity_residual: f64,
}

impl MatchingFamily {
    /// `α(k₂_j)` on the `k₂` nodes of the sheet.
    pub fn samples(&self) -> &[CMatrix] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    /// `max ‖J − conj(α(k₂)) J α(−k₂)‖` for symmetric families.
    pub fn constraint_residual(&self) -> Option<f64> {
        self.constraint_residual
    }

    /// Largest unitarity defect of the transported products, before they
    /// were projected onto the nearest unitaries.
    pub fn max_unitarity_residual(&self) -> f64 {
        self.unitarity_residual
    }

    /// `α` at `k₂ = 0`.
    pub fn at_zero(&self) -> &CMatrix {
        &self.samples[self.samples.len() / 2]
    }

    /// `α` at `k₂ = ±π`.
    pub fn at_pi(&self) -> &CMatrix {
        &self.samples[0]
    }
}

/// True when `T basis = basis · J` for the canonical `J`.
fn is_quaternionic(sheet: &TransportSheet, basis: &CMatrix) -> bool {
    match sheet.trs() {
        Some(t) if basis.ncols() % 2 == 0 => {
            op_dist(&t.apply(basis), &(basis * canonical_j(basis.ncols() / 2))) <= BASIS_TOL
        }
        _ => false,
    }
}

/// Matching matrices `α_ab(k₂) = ⟨v_a, U(−π,k₂)⁻¹ U(π,k₂) v_b⟩` for an
/// orthonormal basis `v` of the range of the sheet's base projector.
///
/// The family is marked symmetric when the sheet is symmetric and the basis
/// has the form `[u, T u]`; the constraint `conj(α(k₂)) J α(−k₂) = J` is then
/// checked.
pub fn matching_family(sheet: &TransportSheet, basis: &CMatrix) -> Result<MatchingFamily> {
    let r = basis.ncols();
    if basis.nrows() != sheet.dim() || r != sheet.rank() {
        return Err(Error::InvalidInput(format!(
            "basis is {}x{}, sheet has dimension {} and rank {}",
            basis.nrows(),
            r,
            sheet.dim(),
            sheet.rank()
        )));
    }
    let gram = op_dist(&(basis.adjoint() * basis), &identity(r));
    if gram > BASIS_TOL {
        return Err(Error::InvalidInput(format!(
            "basis is not orthonormal (residual {gram:e})"
        )));
    }
    let in_range = op_dist(&(sheet.base() * basis), basis);
    if in_range > 1e-8 {
        return Err(Error::InvalidInput(format!(
            "basis leaves the range of P(0,0) (residual {in_range:e})"
        )));
    }
    let last = sheet.t_len() - 1;
    let raw: Vec<CMatrix> = (0..sheet.k_len())
        .map(|j| basis.adjoint() * sheet.at(0, j).adjoint() * sheet.at(last, j) * basis)
        .collect();
    let unitarity_residual = raw.iter().map(unitarity_residual).fold(0.0, f64::max);
    // long transport paths drift off the unitary group by rounding
    let samples = raw.iter().map(polar_unitary).collect::<Result<Vec<_>>>()?;
    let symmetric = sheet.symmetric() && is_quaternionic(sheet, basis);
    let constraint_residual = if symmetric {
        let jq = canonical_j(r / 2);
        let n = samples.len();
        let worst = (0..n)
            .map(|j| {
                op_dist(
                    &(samples[j].map(|z| z.conj()) * &jq * &samples[(n - j) % n]),
                    &jq,
                )
            })
            .fold(0.0, f64::max);
        if worst > CONSTRAINT_TOL {
            return Err(Error::SymmetryBroken {
                what: "matching matrix constraint".into(),
                residual: worst,
            });
        }
        Some(worst)
    } else {
        None
    };
    Ok(MatchingFamily {
        samples,
        symmetric,
        constraint_residual,
        unitarity_residual,
    })
}
