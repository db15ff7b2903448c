//! Property suite behind the `check` command.

use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use z2frames::decomposition::{split, symmetric_equivalence, symmetric_frame, verify_homotopy};
use z2frames::field::{Grid2, ProjectionField};
use z2frames::invariants::{chern, delta, fhs_chern, wilson_z2, InvariantOptions, WILSON_GRID};
use z2frames::models::{
    gauge_transform, haldane, kane_mele, random_gauge, random_hamiltonian, random_trs_hamiltonian,
    spectral_projector, KaneMele,
};
use z2frames::numerics::{
    c64, exp_i_hermitian, op_dist, op_norm, random_hermitian, random_projector, unitarity_residual,
    CMatrix,
};
use z2frames::transport::kato_nagy;
use z2frames::Error;

use crate::config::Command;
use crate::record::{Outcome, ResultRecord};

type CheckResult = Result<String, String>;

fn ensure(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn text(e: Error) -> String {
    e.to_string()
}

fn haldane_field(mass: f64) -> Result<ProjectionField, String> {
    Ok(
        spectral_projector(&haldane(1.0, 0.1, FRAC_PI_2, mass), 1, 1e-3)
            .map_err(text)?
            .0,
    )
}

fn km_field(p: &KaneMele) -> Result<ProjectionField, String> {
    Ok(spectral_projector(&kane_mele(p).map_err(text)?, 2, 1e-3)
        .map_err(text)?
        .0)
}

fn kato_nagy_intertwining(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p = random_projector(6, 2, &mut rng);
        let h = random_hermitian(6, &mut rng);
        let mut eps = 1.0 / op_norm(&h);
        let q = loop {
            let w = exp_i_hermitian(&(&h * c64(eps, 0.0)));
            let q = &w * &p * w.adjoint();
            if op_dist(&p, &q) <= 0.9 {
                break q;
            }
            eps *= 0.5;
        };
        let u = kato_nagy(&p, &q).map_err(text)?;
        worst = worst
            .max(op_dist(&(&u * &p * u.adjoint()), &q))
            .max(unitarity_residual(&u));
    }
    ensure(worst <= 1e-12, || {
        format!("intertwining residual {worst:e}")
    })?;
    let mut p = CMatrix::zeros(2, 2);
    let mut q = CMatrix::zeros(2, 2);
    p[(0, 0)] = c64(1.0, 0.0);
    q[(1, 1)] = c64(1.0, 0.0);
    ensure(
        matches!(kato_nagy(&p, &q), Err(Error::TooFar { .. })),
        || "orthogonal pair accepted".into(),
    )?;
    Ok(format!(
        "20 pairs, worst residual {worst:e}; orthogonal pair refused"
    ))
}

fn symmetric_chern_vanishes(seed: u64) -> CheckResult {
    for s in seed..seed + 2 {
        let m = random_trs_hamiltonian(8, 4, 2, s, 0.1).map_err(text)?;
        let c = chern(&m.field).map_err(text)?.value;
        ensure(c == 0, || format!("seed {s}: Chern {c}"))?;
    }
    Ok("2 random symmetric fields have Chern 0".into())
}

fn chern_matches_lattice(seed: u64) -> CheckResult {
    let grid = Grid2::new(64, 64).map_err(text)?;
    let mut fields = Vec::new();
    for mass in [0.0, 0.3, 0.8] {
        fields.push(haldane_field(mass)?);
    }
    for s in seed..seed + 2 {
        fields.push(random_hamiltonian(4, 2, 1, s, 0.1).map_err(text)?.field);
    }
    let mut values = Vec::new();
    for f in &fields {
        let (a, b) = (
            chern(f).map_err(text)?.value,
            fhs_chern(f, grid).map_err(text)?,
        );
        ensure(a == b, || {
            format!("{}: transport {a}, lattice {b}", f.provenance())
        })?;
        values.push(a);
    }
    ensure(
        values[..3] == [-1, -1, 0] || values[..3] == [1, 1, 0],
        || format!("Haldane values {:?}", &values[..3]),
    )?;
    Ok(format!(
        "Chern numbers {values:?} agree with the lattice method"
    ))
}

fn delta_matches_wilson(seed: u64) -> CheckResult {
    let grid = Grid2::new(WILSON_GRID.0, WILSON_GRID.1).map_err(text)?;
    let mut fields = vec![
        km_field(&KaneMele::default())?,
        km_field(&KaneMele::trivial())?,
    ];
    for s in seed..seed + 2 {
        fields.push(random_trs_hamiltonian(8, 4, 2, s, 0.1).map_err(text)?.field);
    }
    let mut values = Vec::new();
    for f in &fields {
        let (a, b) = (
            delta(f).map_err(text)?.value,
            wilson_z2(f, grid).map_err(text)?,
        );
        ensure(a == b as i64, || {
            format!("{}: delta {a}, Wilson loop {b}", f.provenance())
        })?;
        values.push(a);
    }
    ensure(values[..2] == [-1, 1], || {
        format!("Kane-Mele values {:?}", &values[..2])
    })?;
    Ok(format!(
        "delta values {values:?} agree with the Wilson loop"
    ))
}

fn split_round_trip(_: u64) -> CheckResult {
    let field = km_field(&KaneMele::default())?;
    let cert = split(&field, 1).map_err(text)?;
    ensure((cert.chern_lower, cert.chern_upper) == (1, -1), || {
        format!("factor Cherns ({}, {})", cert.chern_lower, cert.chern_upper)
    })?;
    let worst = cert
        .residuals
        .max()
        .max(cert.gluing.seam_residual())
        .max(cert.gluing.symmetry_residual());
    ensure(worst <= 1e-7, || format!("certificate residual {worst:e}"))?;
    ensure(
        matches!(split(&field, 0), Err(Error::ParityObstruction { .. })),
        || "h = 0 was not obstructed".into(),
    )?;
    Ok(format!(
        "h = 1 split with residual {worst:e}; h = 0 obstructed"
    ))
}

fn symmetric_frames(_: u64) -> CheckResult {
    for (p, expected) in [
        (KaneMele::default(), vec![0, 1]),
        (KaneMele::trivial(), vec![]),
    ] {
        let field = km_field(&p)?;
        let frame = symmetric_frame(&field).map_err(text)?;
        let cols = frame.pseudo_periodic_columns(1e-8);
        let laws: Vec<i64> = cols.iter().map(|&a| frame.column_law(a)).collect();
        let expected_laws: Vec<i64> = if expected.is_empty() {
            vec![]
        } else {
            vec![1, -1]
        };
        ensure(cols == expected && laws == expected_laws, || {
            format!("columns {cols:?} with laws {laws:?}")
        })?;
        let (g, r, b) = (
            frame.gram_residual(),
            frame.reconstruction_residual(&field),
            frame.boundary_residual(),
        );
        ensure(g <= 1e-10 && r <= 1e-8 && b <= 1e-8, || {
            format!("residuals gram {g:e}, reconstruction {r:e}, law {b:e}")
        })?;
    }
    Ok("topological frame has one pseudo-periodic Kramers pair, trivial frame none".into())
}

fn equivalence(_: u64) -> CheckResult {
    let a = km_field(&KaneMele::default())?;
    let b = km_field(&KaneMele {
        lambda_v: 0.0,
        ..KaneMele::default()
    })?;
    let eq = symmetric_equivalence(&a, &b).map_err(text)?;
    ensure(eq.max_residual() <= 1e-7, || {
        format!("residual {:e}", eq.max_residual())
    })?;
    let trivial = km_field(&KaneMele::trivial())?;
    ensure(
        matches!(
            symmetric_equivalence(&a, &trivial),
            Err(Error::ParityObstruction { .. })
        ),
        || "mixed pair was not obstructed".into(),
    )?;
    Ok(format!(
        "same-delta pair equivalent with residual {:e}; mixed pair obstructed",
        eq.max_residual()
    ))
}

fn gauge_invariance(seed: u64) -> CheckResult {
    let h = haldane_field(0.0)?;
    let c0 = chern(&h).map_err(text)?.value;
    let km = km_field(&KaneMele::default())?;
    let trs = km.trs().cloned();
    let d0 = delta(&km).map_err(text)?.value;
    for s in seed..seed + 2 {
        let g = gauge_transform(&h, random_gauge(2, 1, s, None), false).map_err(text)?;
        let c = chern(&g).map_err(text)?.value;
        ensure(c == c0, || format!("gauge {s}: Chern {c} vs {c0}"))?;
        let g = gauge_transform(&km, random_gauge(4, 1, s, trs.as_ref()), true).map_err(text)?;
        let d = delta(&g).map_err(text)?.value;
        ensure(d == d0, || format!("gauge {s}: delta {d} vs {d0}"))?;
    }
    Ok(format!(
        "Chern {c0} and delta {d0} unchanged under 2 gauges each"
    ))
}

fn additivity(_: u64) -> CheckResult {
    let (a, b) = (haldane_field(0.0)?, haldane_field(0.8)?);
    let sum = chern(&a.direct_sum(&a)).map_err(text)?.value;
    let parts = chern(&a).map_err(text)?.value;
    let mixed = chern(&a.direct_sum(&b)).map_err(text)?.value;
    ensure(sum == 2 * parts && mixed == parts, || {
        format!("Chern {sum}, {mixed} from parts {parts}")
    })?;
    let (t, s) = (
        km_field(&KaneMele::default())?,
        km_field(&KaneMele::trivial())?,
    );
    let d = delta(&t.direct_sum(&s)).map_err(text)?.value;
    let dd = delta(&t.direct_sum(&t)).map_err(text)?.value;
    ensure(d == -1 && dd == 1, || format!("delta of sums {d}, {dd}"))?;
    Ok("Chern adds and delta multiplies over direct sums".into())
}

fn homotopy(_: u64) -> CheckResult {
    let path: Vec<ProjectionField> = (0..5)
        .map(|i| {
            km_field(&KaneMele {
                lambda_v: 0.05 * i as f64,
                ..KaneMele::default()
            })
        })
        .collect::<Result<_, _>>()?;
    let report = verify_homotopy(
        &path,
        Grid2::new(32, 32).map_err(text)?,
        &InvariantOptions::default(),
    );
    ensure(report.passed, || format!("failures {:?}", report.failures))?;
    Ok("delta constant along a 5-snapshot gapped path".into())
}

fn determinism(seed: u64) -> CheckResult {
    let m = random_trs_hamiltonian(8, 4, 2, seed, 0.1).map_err(text)?;
    let a = delta(&m.field).map_err(text)?;
    let b = delta(&m.field).map_err(text)?;
    ensure(a == b, || "repeated delta computations differ".into())?;
    Ok("repeated computations are identical".into())
}

const CHECKS: [(&str, fn(u64) -> CheckResult); 11] = [
    ("kato_nagy_intertwining", kato_nagy_intertwining),
    ("symmetric_chern_vanishes", symmetric_chern_vanishes),
    ("chern_matches_lattice", chern_matches_lattice),
    ("delta_matches_wilson", delta_matches_wilson),
    ("split_round_trip", split_round_trip),
    ("symmetric_frames", symmetric_frames),
    ("equivalence", equivalence),
    ("gauge_invariance", gauge_invariance),
    ("additivity", additivity),
    ("homotopy", homotopy),
    ("determinism", determinism),
];

/// Runs every self-check; a failed check becomes an `error` record.
pub fn run_suite(seed: u64) -> Vec<ResultRecord> {
    CHECKS
        .iter()
        .enumerate()
        .map(|(index, (name, check))| {
            let mut record = ResultRecord::new(index, Command::Check);
            record.params.insert("check".into(), Value::from(*name));
            match check(seed) {
                Ok(summary) => record.message = Some(summary),
                Err(failure) => {
                    record.outcome = Outcome::Error;
                    record.message = Some(failure);
                }
            }
            record
        })
        .collect()
}
