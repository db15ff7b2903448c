//! Fermionic time reversal `T v = J·conj(v)` with `J·conj(J) = −Id`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Grid2, ProjectionField};
use crate::numerics::{
    c64, frobenius_norm, haar_unitary, identity, op_dist, op_norm, projector_from_columns,
    unitarity_residual, CMatrix,
};

#[derive(Debug, Clone, PartialEq)]
pub struct TrsStructure {
    j: CMatrix,
}

impl TrsStructure {
    pub fn new(j: CMatrix) -> Result<Self> {
        if !j.is_square() || j.nrows() % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "J must be square of even size, got {}x{}",
                j.nrows(),
                j.ncols()
            )));
        }
        let unit = unitarity_residual(&j);
        if unit > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "J is not unitary (residual {unit:e})"
            )));
        }
        let square = op_norm(&(&j * j.map(|z| z.conj()) + identity(j.nrows())));
        if square > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "J·conj(J) ≠ −Id (residual {square:e})"
            )));
        }
        Ok(Self { j })
    }

    /// `[[0, −Id_n], [Id_n, 0]]`, the form `T` takes on a quaternionic basis.
    pub fn canonical(n: usize) -> Self {
        Self { j: canonical_j(n) }
    }

    /// `Id₂ ⊗ [[0, −1], [1, 0]]` in sublattice ⊗ spin order.
    pub fn spin_half(sites: usize) -> Self {
        let mut j = CMatrix::zeros(2 * sites, 2 * sites);
        for s in 0..sites {
            j[(2 * s, 2 * s + 1)] = c64(-1.0, 0.0);
            j[(2 * s + 1, 2 * s)] = c64(1.0, 0.0);
        }
        Self { j }
    }

    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    pub fn j(&self) -> &CMatrix {
        &self.j
    }

    /// `T v = J conj(v)`, applied column-wise.
    pub fn apply(&self, v: &CMatrix) -> CMatrix {
        &self.j * v.map(|z| z.conj())
    }

    /// `T A T⁻¹ = J conj(A) J⁻¹`.
    pub fn conjugate(&self, a: &CMatrix) -> CMatrix {
        &self.j * a.map(|z| z.conj()) * self.j.adjoint()
    }

    pub fn direct_sum(&self, other: &TrsStructure) -> TrsStructure {
        TrsStructure {
            j: crate::numerics::block_diag(&self.j, &other.j),
        }
    }
}

pub fn canonical_j(n: usize) -> CMatrix {
    let mut j = CMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        j[(a, n + a)] = c64(-1.0, 0.0);
        j[(n + a, a)] = c64(1.0, 0.0);
    }
    j
}

/// Orthonormal `[u₁ … u_n, T u₁ … T u_n]` spanning the same space as the columns of `v`.
///
/// Vectors are picked greedily by largest residual after removing the pairs
/// already chosen. With a seed, the candidate set is first mixed by a random
/// unitary, which yields a different but equally valid basis.
pub fn quaternionic_basis(v: &CMatrix, trs: &TrsStructure, seed: Option<u64>) -> Result<CMatrix> {
    let dim = v.ncols();
    if v.nrows() != trs.dim() {
        return Err(Error::InvalidInput(format!(
            "subspace lives in C^{}, T acts on C^{}",
            v.nrows(),
            trs.dim()
        )));
    }
    if dim % 2 != 0 {
        return Err(Error::OddQuaternionicDimension(dim));
    }
    let gram = op_dist(&(v.adjoint() * v), &identity(dim));
    if gram > 1e-8 {
        return Err(Error::InvalidInput(format!(
            "subspace columns are not orthonormal (residual {gram:e})"
        )));
    }
    let p = projector_from_columns(v);
    let residual = op_dist(&trs.conjugate(&p), &p);
    if residual > 1e-8 {
        return Err(Error::NotInvariant { residual });
    }
    let n = dim / 2;
    if n == 0 {
        return Ok(CMatrix::zeros(v.nrows(), 0));
    }

    let candidates = match seed {
        Some(s) => v * haar_unitary(dim, &mut ChaCha8Rng::seed_from_u64(s)),
        None => v.clone(),
    };
    let mut first = Vec::with_capacity(n);
    let mut chosen: Vec<CMatrix> = Vec::with_capacity(dim);
    for _ in 0..n {
        let mut best: Option<(f64, CMatrix)> = None;
        for c in candidates.column_iter() {
            let mut r = CMatrix::from_iterator(c.nrows(), 1, c.iter().copied());
            for b in &chosen {
                let coeff = (b.adjoint() * &r)[(0, 0)];
                r -= b * coeff;
            }
            let norm = frobenius_norm(&r);
            if best.as_ref().is_none_or(|(bn, _)| norm > *bn) {
                best = Some((norm, r));
            }
        }
        let (norm, r) = best.expect("non-empty candidate set");
        if norm < 1e-8 {
            return Err(Error::NotInvariant { residual: norm });
        }
        let u = r / c64(norm, 0.0);
        let mut tu = &p * trs.apply(&u);
        for b in &chosen {
            let coeff = (b.adjoint() * &tu)[(0, 0)];
            tu -= b * coeff;
        }
        let tn = frobenius_norm(&tu);
        tu /= c64(tn, 0.0);
        chosen.push(u.clone());
        chosen.push(tu);
        first.push(u);
    }

    // reassemble as [u, T u] with the partners recomputed exactly from u
    let mut out = CMatrix::zeros(v.nrows(), dim);
    for (j, u) in first.iter().enumerate() {
        out.set_column(j, &u.column(0));
        out.set_column(n + j, &trs.apply(u).column(0));
    }
    let gram = op_dist(&(out.adjoint() * &out), &identity(dim));
    if gram > 1e-10 {
        return Err(Error::NotInvariant { residual: gram });
    }
    Ok(out)
}

/// Worst residual and where it occurred.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Worst {
    pub value: f64,
    pub k1: f64,
    pub k2: f64,
}

impl Worst {
    fn new() -> Self {
        Self {
            value: 0.0,
            k1: 0.0,
            k2: 0.0,
        }
    }

    fn update(&mut self, value: f64, k1: f64, k2: f64) {
        if value > self.value || value.is_nan() {
            *self = Self { value, k1, k2 };
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub idempotency: Worst,
    pub hermiticity: Worst,
    pub rank: Worst,
    pub periodicity: Worst,
    pub trs: Option<Worst>,
    pub rank_even: bool,
}

impl ValidationReport {
    pub const IDEMPOTENCY_TOL: f64 = 1e-10;
    pub const HERMITICITY_TOL: f64 = 1e-10;
    pub const RANK_TOL: f64 = 1e-8;
    pub const PERIODICITY_TOL: f64 = 1e-10;
    pub const TRS_TOL: f64 = 1e-8;

    pub fn idempotency_ok(&self) -> bool {
        self.idempotency.value <= Self::IDEMPOTENCY_TOL
    }

    pub fn hermiticity_ok(&self) -> bool {
        self.hermiticity.value <= Self::HERMITICITY_TOL
    }

    pub fn rank_ok(&self) -> bool {
        self.rank.value <= Self::RANK_TOL
    }

    pub fn periodicity_ok(&self) -> bool {
        self.periodicity.value <= Self::PERIODICITY_TOL
    }

    pub fn trs_ok(&self) -> bool {
        self.trs
            .is_none_or(|w| w.value <= Self::TRS_TOL && self.rank_even)
    }

    pub fn passed(&self) -> bool {
        self.idempotency_ok()
            && self.hermiticity_ok()
            && self.rank_ok()
            && self.periodicity_ok()
            && self.trs_ok()
    }
}

/// Checks projector axioms, constant rank, periodicity and (if present) time-reversal symmetry on every grid node.
pub fn validate_field(field: &ProjectionField, grid: &Grid2) -> ValidationReport {
    let mut idempotency = Worst::new();
    let mut hermiticity = Worst::new();
    let mut rank = Worst::new();
    let mut periodicity = Worst::new();
    let mut trs = field.trs().map(|_| Worst::new());
    let r = field.rank() as f64;
    for (k1, k2) in grid.nodes() {
        let p = field.at(k1, k2);
        idempotency.update(op_dist(&(&p * &p), &p), k1, k2);
        hermiticity.update(op_dist(&p.adjoint(), &p), k1, k2);
        rank.update((p.trace() - Complex64::new(r, 0.0)).norm(), k1, k2);
        if let (Some(t), Some(w)) = (field.trs(), trs.as_mut()) {
            w.update(op_dist(&t.conjugate(&p), &field.at(-k1, -k2)), k1, k2);
        }
    }
    let pi = std::f64::consts::PI;
    for i in 0..grid.n1() {
        let k1 = grid.k1(i);
        periodicity.update(op_dist(&field.at(k1, -pi), &field.at(k1, pi)), k1, pi);
    }
    for j in 0..grid.n2() {
        let k2 = grid.k2(j);
        periodicity.update(op_dist(&field.at(-pi, k2), &field.at(pi, k2)), pi, k2);
    }
    ValidationReport {
        idempotency,
        hermiticity,
        rank,
        periodicity,
        trs,
        rank_even: field.rank() % 2 == 0,
    }
}

/// The field `k ↦ T P(−k) T⁻¹`.
pub fn trs_conjugate_field(field: &ProjectionField, trs: &TrsStructure) -> Result<ProjectionField> {
    if field.dim() != trs.dim() {
        return Err(Error::InvalidInput(format!(
            "field dimension {} but T acts on C^{}",
            field.dim(),
            trs.dim()
        )));
    }
    let inner = field.clone();
    let t = trs.clone();
    let provenance = format!("trs_conjugate({})", field.provenance());
    Ok(
        ProjectionField::new(field.dim(), field.rank(), provenance, move |k1, k2| {
            t.conjugate(&inner.at(-k1, -k2))
        })
        .with_trs_opt(field.trs().cloned()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gaussian_matrix, range_basis};

    /// T-invariant subspace spanned by `x` and `T x` for random `x`.
    fn random_invariant_subspace(trs: &TrsStructure, pairs: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = gaussian_matrix(trs.dim(), pairs, &mut rng);
        let mut span = CMatrix::zeros(trs.dim(), 2 * pairs);
        span.view_mut((0, 0), (trs.dim(), pairs)).copy_from(&x);
        span.view_mut((0, pairs), (trs.dim(), pairs))
            .copy_from(&trs.apply(&x));
        let p = {
            let q = span.clone().qr().q();
            projector_from_columns(&q)
        };
        range_basis(&p, 2 * pairs)
    }

    #[test]
    fn structure_checks() {
        assert!(TrsStructure::new(canonical_j(2)).is_ok());
        assert!(TrsStructure::new(TrsStructure::spin_half(2).j().clone()).is_ok());
        assert!(TrsStructure::new(identity(2)).is_err());
    }

    #[test]
    fn canonical_two_dimensional_case() {
        let trs = TrsStructure::new(CMatrix::from_row_slice(
            2,
            2,
            &[c64(0., 0.), c64(1., 0.), c64(-1., 0.), c64(0., 0.)],
        ))
        .unwrap();
        let b = quaternionic_basis(&identity(2), &trs, None).unwrap();
        assert!(op_dist(&(b.adjoint() * &b), &identity(2)) < 1e-14);
        // T u₁ is −e₂ up to the phase of u₁
        assert!((b[(1, 1)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn odd_dimension_rejected() {
        let trs = TrsStructure::canonical(2);
        let v = identity(4).columns(0, 3).into_owned();
        assert!(matches!(
            quaternionic_basis(&v, &trs, None),
            Err(Error::OddQuaternionicDimension(3))
        ));
    }

    #[test]
    fn non_invariant_rejected() {
        let trs = TrsStructure::canonical(2);
        let v = identity(4).columns(0, 2).into_owned();
        assert!(matches!(
            quaternionic_basis(&v, &trs, None),
            Err(Error::NotInvariant { .. })
        ));
    }

    #[test]
    fn random_invariant_subspace_of_c8() {
        let trs = TrsStructure::spin_half(4);
        for seed in 0..5 {
            let v = random_invariant_subspace(&trs, 2, seed);
            for basis_seed in [None, Some(seed + 100)] {
                let b = quaternionic_basis(&v, &trs, basis_seed).unwrap();
                assert!(op_dist(&(b.adjoint() * &b), &identity(4)) <= 1e-10);
                // ⟨u_a, T u_b⟩ = 0 for a, b in the first half
                let u = b.columns(0, 2).into_owned();
                assert!(op_norm(&(u.adjoint() * trs.apply(&u))) <= 1e-10);
                assert!(op_dist(&projector_from_columns(&b), &projector_from_columns(&v)) <= 1e-10);
                // T acts as the canonical J on coordinates
                let coords = b.adjoint() * trs.apply(&b);
                assert!(op_dist(&coords, &canonical_j(2)) <= 1e-10);
            }
        }
    }

    #[test]
    fn conjugate_field_twice_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = gaussian_matrix(4, 4, &mut rng);
        let b = gaussian_matrix(4, 4, &mut rng);
        let field = ProjectionField::new(4, 2, "test", move |k1, k2| {
            let h =
                crate::numerics::hermitian_part(&(&a * c64(k1.cos(), 0.) + &b * c64(k2.sin(), 0.)));
            projector_from_columns(&range_basis(&h, 2))
        });
        let trs = TrsStructure::spin_half(2);
        let twice = trs_conjugate_field(&trs_conjugate_field(&field, &trs).unwrap(), &trs).unwrap();
        for (k1, k2) in Grid2::new(8, 8).unwrap().nodes() {
            assert!(op_dist(&twice.at(k1, k2), &field.at(k1, k2)) <= 1e-12);
        }
    }

    #[test]
    fn injected_trs_defect_is_reported() {
        let trs = TrsStructure::spin_half(2);
        let field = ProjectionField::new(4, 2, "broken", |k1, _| {
            let mut p = CMatrix::zeros(4, 4);
            let (c, s) = (k1.cos(), k1.sin());
            // span{e1, e2 cos + e3 sin}: not T-symmetric unless k1 = 0
            p[(0, 0)] = c64(1., 0.);
            p[(1, 1)] = c64(c * c, 0.);
            p[(1, 2)] = c64(c * s, 0.);
            p[(2, 1)] = c64(c * s, 0.);
            p[(2, 2)] = c64(s * s, 0.);
            p
        })
        .with_trs(trs);
        let report = validate_field(&field, &Grid2::new(8, 8).unwrap());
        assert!(!report.trs_ok());
        assert!(report.idempotency_ok());
        assert!(report.trs.unwrap().value > 0.1);
    }
}
