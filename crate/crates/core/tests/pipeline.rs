use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use z2frames::decomposition::split;
use z2frames::field::{Grid2, ProjectionField};
use z2frames::invariants::{chern, delta};
use z2frames::models::{
    kane_mele, parse_harmonics, random_hamiltonian, random_trs_hamiltonian, read_harmonics,
    spectral_projector, write_harmonics, KaneMele,
};
use z2frames::numerics::{
    c64, exp_i_hermitian, op_dist, op_norm, random_hermitian, random_projector, unitarity_residual,
};
use z2frames::transport::kato_nagy;
use z2frames::trs::validate_field;
use z2frames::Error;

fn km(lambda_v: f64) -> ProjectionField {
    let p = KaneMele {
        lambda_v,
        ..KaneMele::default()
    };
    spectral_projector(&kane_mele(&p).unwrap(), 2, 1e-3)
        .unwrap()
        .0
}

const OFF_GRID: [(f64, f64); 4] = [(0.123, -2.71), (1.9, 0.37), (-3.0, 3.05), (2.1, -2.09)];

/// Checks the factors between nodes, where they are interpolated.
fn audit_split(field: &ProjectionField, h: i64) {
    let cert = split(field, h).unwrap();
    assert_eq!((cert.chern_lower, cert.chern_upper), (h, -h));
    let trs = field.trs().unwrap();
    for (k1, k2) in OFF_GRID {
        let (lo, up) = (cert.lower.at(k1, k2), cert.upper.at(k1, k2));
        assert!(op_dist(&(&lo + &up), &field.at(k1, k2)) < 1e-9);
        assert!(op_norm(&(&lo * &up)) < 1e-9);
        assert!(op_dist(&trs.conjugate(&up), &cert.lower.at(-k1, -k2)) < 1e-9);
    }
}

#[test]
fn topological_kane_mele_splits_with_odd_chern() {
    let field = km(0.1);
    assert_eq!(delta(&field).unwrap().value, -1);
    assert_eq!(chern(&field).unwrap().value, 0);
    audit_split(&field, 1);
    assert!(matches!(
        split(&field, 2),
        Err(Error::ParityObstruction { delta: -1, h: 2 })
    ));
}

#[test]
fn near_critical_kane_mele_splits_on_stretched_coordinates() {
    let field = km(0.3);
    assert_eq!(delta(&field).unwrap().value, 1);
    let cert = split(&field, 0).unwrap();
    assert!(cert.coordinates.is_some());
    let frame_field = cert.frame_field(&field);
    assert!(cert.frame.reconstruction_residual(&frame_field) < 1e-8);
    audit_split(&field, 0);
}

#[test]
fn random_symmetric_field_splits() {
    let m = random_trs_hamiltonian(8, 4, 2, 3, 0.1).unwrap();
    let h = if delta(&m.field).unwrap().value == 1 {
        0
    } else {
        1
    };
    audit_split(&m.field, h);
}

#[test]
fn harmonics_survive_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.json");
    let m = random_hamiltonian(4, 2, 1, 11, 0.1).unwrap();
    write_harmonics(&m.hamiltonian, &path).unwrap();
    let back = read_harmonics(&path).unwrap();
    assert_eq!(back.harmonics(), m.hamiltonian.harmonics());
    let e = parse_harmonics("{\"dim\": 2,", "broken").unwrap_err();
    assert!(matches!(e, Error::Parse(_)), "{e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kato_nagy_intertwines_nearby_projectors(seed in any::<u64>(), n in 2usize..7, scale in 0.05f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = 1 + (seed as usize) % (n - 1);
        let p = random_projector(n, r, &mut rng);
        let h = random_hermitian(n, &mut rng);
        let w = exp_i_hermitian(&(&h * c64(scale / op_norm(&h), 0.0)));
        let q = &w * &p * w.adjoint();
        prop_assume!(op_dist(&p, &q) <= 0.9);
        let u = kato_nagy(&p, &q).unwrap();
        prop_assert!(unitarity_residual(&u) <= 1e-12);
        prop_assert!(op_dist(&(&u * &p * u.adjoint()), &q) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn generated_symmetric_fields_validate(seed in 0u64..1000) {
        let m = random_trs_hamiltonian(4, 2, 1, seed, 0.1).unwrap();
        let report = validate_field(&m.field, &Grid2::new(16, 16).unwrap());
        prop_assert!(report.passed());
        prop_assert_eq!(chern(&m.field).unwrap().value, 0);
    }
}
