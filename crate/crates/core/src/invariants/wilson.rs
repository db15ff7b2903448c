//! Z2 invariant from the flow of Wilson-loop eigenphases between `k₂ = 0` and `k₂ = π`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Grid2, ProjectionField};
use crate::numerics::{polar_unitary, range_basis, unitary_eig, CMatrix, LogOptions};

/// Default `N₁ × N₂` resolution for Wilson-loop audits.
pub const WILSON_GRID: (usize, usize) = (64, 256);

/// Largest eigenphase motion between neighbouring `k₂` lines that is still tracked.
const MAX_TRACK_STEP: f64 = PI / 4.0;

fn wrap_2pi(x: f64) -> f64 {
    x.rem_euclid(2.0 * PI)
}

/// Signed principal difference `b − a` in `(−π, π]`.
fn circ_diff(a: f64, b: f64) -> f64 {
    let d = wrap_2pi(b - a);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}

/// Eigenphases in `[0, 2π)` of the `k₁` Wilson loop at fixed `k₂`, sorted.
fn wilson_phases(field: &ProjectionField, n1: usize, k2: f64) -> Result<Vec<f64>> {
    let rank = field.rank();
    let bases: Vec<CMatrix> = (0..n1)
        .map(|i| range_basis(&field.at(crate::field::axis_node(i, n1), k2), rank))
        .collect();
    let mut w = CMatrix::identity(rank, rank);
    for i in 0..n1 {
        let overlap = bases[i].adjoint() * &bases[(i + 1) % n1];
        w *= polar_unitary(&overlap)?;
    }
    let eig = unitary_eig(&w, &LogOptions::default())?;
    let mut phases: Vec<f64> = eig.phases.iter().map(|&p| wrap_2pi(p)).collect();
    phases.sort_by(|a, b| a.total_cmp(b));
    Ok(phases)
}

/// Pairing of two sorted phase sets by the cyclic shift with the smallest
/// worst-case motion; returns the per-phase signed motions.
fn track(prev: &[f64], next: &[f64]) -> Vec<(f64, f64)> {
    let n = prev.len();
    let mut best: Option<(f64, usize)> = None;
    for shift in 0..n {
        let worst = (0..n)
            .map(|a| circ_diff(prev[a], next[(a + shift) % n]).abs())
            .fold(0.0, f64::max);
        if best.is_none_or(|(w, _)| worst < w) {
            best = Some((worst, shift));
        }
    }
    let shift = best.map(|b| b.1).unwrap_or(0);
    (0..n)
        .map(|a| (prev[a], circ_diff(prev[a], next[(a + shift) % n])))
        .collect()
}

fn crossings(field: &ProjectionField, grid: Grid2) -> Result<u64> {
    let (n1, n2) = (grid.n1(), grid.n2());
    let half = n2 / 2;
    let lines: Vec<Vec<f64>> = (0..=half)
        .into_par_iter()
        .map(|j| wilson_phases(field, n1, PI * j as f64 / half as f64))
        .collect::<Result<_>>()?;

    // reference line in the widest gap of the endpoint spectra
    let mut ends: Vec<f64> = lines[0].iter().chain(lines[half].iter()).copied().collect();
    ends.sort_by(|a, b| a.total_cmp(b));
    let mut reference = 0.0;
    let mut widest = -1.0;
    for (i, &a) in ends.iter().enumerate() {
        let b = if i + 1 < ends.len() {
            ends[i + 1]
        } else {
            ends[0] + 2.0 * PI
        };
        if b - a > widest {
            widest = b - a;
            reference = wrap_2pi(a + (b - a) / 2.0);
        }
    }

    let mut count = 0u64;
    for (j, pair) in lines.windows(2).enumerate() {
        for (start, motion) in track(&pair[0], &pair[1]) {
            if motion.abs() > MAX_TRACK_STEP {
                return Err(Error::Unresolved(format!(
                    "Wilson-loop phase moves by {motion:.3} at k2 step {j} on grid {grid}"
                )));
            }
            let offset = circ_diff(start, reference);
            let crossed = if motion >= 0.0 {
                offset > 0.0 && offset <= motion
            } else {
                offset < 0.0 && offset >= motion
            };
            if crossed {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// `±1` from the parity of Wilson-loop eigenphase crossings of a reference line
/// while `k₂` runs from `0` to `π`; `−1` for an odd count.
///
/// The count is repeated on the doubled grid and must agree.
pub fn wilson_z2(field: &ProjectionField, grid: Grid2) -> Result<i8> {
    if field.rank() % 2 != 0 {
        return Err(Error::OddQuaternionicDimension(field.rank()));
    }
    if field.rank() == 0 {
        return Ok(1);
    }
    let mut grid = grid;
    let mut last = String::new();
    for _ in 0..3 {
        match (crossings(field, grid), crossings(field, grid.refined())) {
            (Ok(a), Ok(b)) if a % 2 == b % 2 => return Ok(if a % 2 == 0 { 1 } else { -1 }),
            (Ok(a), Ok(b)) => last = format!("crossing parity differs between grids ({a} vs {b})"),
            (Err(e), _) | (_, Err(e)) => last = e.to_string(),
        }
        grid = grid.refined();
    }
    Err(Error::Unresolved(format!("Wilson-loop Z2: {last}")))
}
