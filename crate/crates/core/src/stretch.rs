//! Odd, degree-one reparametrizations of the torus that crowd grid nodes
//! around sharp features of a projector field.
//!
//! A near gap closing makes `P` turn by almost a full circle within a small
//! disc. Uniform grids fine enough to follow that are far too large, but a
//! field pulled back along a stretch that is steep at the feature is smooth
//! on the new coordinates, and every topological quantity is unchanged since
//! the stretch has degree one. Stretches are odd in each coordinate, so a
//! time-reversal symmetric field stays symmetric.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::field::{axis_node, ProjectionField};
use crate::numerics::{op_dist, CMatrix};

/// Point where a field turns fastest, with the length scale of the turn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub k1: f64,
    pub k2: f64,
    pub width: f64,
}

/// Features wider than this are left to uniform grid refinement.
pub const MAX_PEAK_WIDTH: f64 = 0.05;

/// Nodes per axis of the scan that looks for candidate peaks.
const SCAN: usize = 128;
/// Neighbouring scan samples this far apart mark a candidate.
const CANDIDATE_JUMP: f64 = 0.25;
const MAX_PEAKS: usize = 8;
/// Combined bump weight per axis; a share `w / (1 + w)` of the nodes lands on the bumps.
const BUMP_WEIGHT: f64 = 2.0;
const DIFF_STEP: f64 = 1e-6;

/// `max_a ‖∂_a P(k)‖` by central differences.
pub fn turning_speed(field: &ProjectionField, k1: f64, k2: f64) -> f64 {
    let h = DIFF_STEP;
    let d1 = op_dist(&field.at(k1 + h, k2), &field.at(k1 - h, k2));
    let d2 = op_dist(&field.at(k1, k2 + h), &field.at(k1, k2 - h));
    d1.max(d2) / (2.0 * h)
}

fn periodic_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Climbs `turning_speed` from `(k1, k2)` with a shrinking compass search.
fn climb(field: &ProjectionField, mut k1: f64, mut k2: f64, mut step: f64) -> Peak {
    let mut best = turning_speed(field, k1, k2);
    while step > 1e-5 {
        let moves = [
            (1.0, 0.0),
            (-1.0, 0.0),
            (0.0, 1.0),
            (0.0, -1.0),
            (1.0, 1.0),
            (1.0, -1.0),
            (-1.0, 1.0),
            (-1.0, -1.0),
        ];
        let trial = moves
            .iter()
            .map(|&(a, b)| (k1 + a * step, k2 + b * step))
            .map(|(a, b)| (turning_speed(field, a, b), a, b))
            .fold(None::<(f64, f64, f64)>, |acc, t| match acc {
                Some(a) if a.0 >= t.0 => Some(a),
                _ => Some(t),
            })
            .expect("eight moves");
        if trial.0 > best {
            (best, k1, k2) = trial;
        } else {
            step *= 0.5;
        }
    }
    Peak {
        k1,
        k2,
        width: 1.0 / best.max(f64::MIN_POSITIVE),
    }
}

/// Sharp features of `field`: points where it turns on a scale below [`MAX_PEAK_WIDTH`].
pub fn find_peaks(field: &ProjectionField) -> Vec<Peak> {
    let spacing = 2.0 * PI / SCAN as f64;
    let samples: Vec<CMatrix> = (0..SCAN * SCAN)
        .into_par_iter()
        .map(|idx| field.at(axis_node(idx / SCAN, SCAN), axis_node(idx % SCAN, SCAN)))
        .collect();
    let mut candidates: Vec<(f64, usize)> = (0..SCAN * SCAN)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / SCAN, idx % SCAN);
            let right = &samples[((i + 1) % SCAN) * SCAN + j];
            let up = &samples[i * SCAN + (j + 1) % SCAN];
            (
                op_dist(&samples[idx], right).max(op_dist(&samples[idx], up)),
                idx,
            )
        })
        .filter(|&(jump, _)| jump >= CANDIDATE_JUMP)
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut starts: Vec<(f64, f64)> = Vec::new();
    for &(_, idx) in &candidates {
        let (k1, k2) = (
            axis_node(idx / SCAN, SCAN) + spacing / 2.0,
            axis_node(idx % SCAN, SCAN) + spacing / 2.0,
        );
        if starts
            .iter()
            .all(|&(a, b)| periodic_gap(a, k1).max(periodic_gap(b, k2)) > 4.0 * spacing)
        {
            starts.push((k1, k2));
        }
    }
    let climbed: Vec<Peak> = starts
        .par_iter()
        .map(|&(k1, k2)| climb(field, k1, k2, spacing / 2.0))
        .collect();
    let mut peaks: Vec<Peak> = Vec::new();
    for p in climbed.into_iter().filter(|p| p.width < MAX_PEAK_WIDTH) {
        let near = |q: &Peak| {
            periodic_gap(p.k1, q.k1).max(periodic_gap(p.k2, q.k2)) < 2.0 * p.width.max(q.width)
        };
        if !peaks.iter().any(near) {
            peaks.push(p);
        }
    }
    peaks.sort_by(|a, b| a.width.total_cmp(&b.width));
    peaks.truncate(MAX_PEAKS);
    peaks
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct Bump {
    centre: f64,
    /// `(1 + r) / (1 − r)` for the Poisson kernel of radius `r = 1 − width`.
    sharpness: f64,
    weight: f64,
}

impl Bump {
    /// Primitive of the Poisson kernel centred here, increasing by `2π` per turn.
    fn primitive(&self, k: f64) -> f64 {
        let x = k - self.centre;
        let turns = ((x + PI) / (2.0 * PI)).floor();
        let y = x - 2.0 * PI * turns;
        2.0 * PI * turns + 2.0 * (self.sharpness * (y / 2.0).sin()).atan2((y / 2.0).cos())
    }

    fn kernel(&self, k: f64) -> f64 {
        let half = (k - self.centre) / 2.0;
        let q = self.sharpness;
        q / (half.cos().powi(2) + q * q * half.sin().powi(2))
    }
}

/// Monotone odd map `s(k)` of the circle with `s(k + 2π) = s(k) + 2π`,
/// whose slope is `1 + Σ wᵢ Pᵢ(k − cᵢ)` up to normalisation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisStretch {
    bumps: Vec<Bump>,
    scale: f64,
    offset: f64,
}

impl AxisStretch {
    pub fn identity() -> Self {
        Self {
            bumps: Vec::new(),
            scale: 1.0,
            offset: 0.0,
        }
    }

    /// Stretch steep at each `(centre, width)` and at its mirror image.
    pub fn around(features: &[(f64, f64)]) -> Self {
        // fold onto [0, π], merge, then mirror, so that every bump keeps its partner
        let mut folded: Vec<(f64, f64)> = features
            .iter()
            .map(|&(c, w)| {
                (
                    ((c + PI).rem_euclid(2.0 * PI) - PI).abs(),
                    w.min(MAX_PEAK_WIDTH),
                )
            })
            .collect();
        folded.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (c, w) in folded {
            if merged.iter().all(|&(d, v)| (c - d).abs() >= w.min(v)) {
                merged.push((c, w));
            }
        }
        let kept: Vec<(f64, f64)> = merged
            .iter()
            .flat_map(|&(c, w)| {
                if c == 0.0 || c == PI {
                    vec![(c, w)]
                } else {
                    vec![(c, w), (-c, w)]
                }
            })
            .collect();
        if kept.is_empty() {
            return Self::identity();
        }
        let weight = BUMP_WEIGHT / kept.len() as f64;
        let bumps: Vec<Bump> = kept
            .iter()
            .map(|&(centre, width)| Bump {
                centre,
                sharpness: (2.0 - width) / width,
                weight,
            })
            .collect();
        let mut out = Self {
            bumps,
            scale: 1.0 + BUMP_WEIGHT,
            offset: 0.0,
        };
        out.offset = out.primitive(0.0);
        out
    }

    pub fn is_identity(&self) -> bool {
        self.bumps.is_empty()
    }

    fn primitive(&self, k: f64) -> f64 {
        k + self
            .bumps
            .iter()
            .map(|b| b.weight * b.primitive(k))
            .sum::<f64>()
    }

    /// `ds/dk`.
    pub fn slope(&self, k: f64) -> f64 {
        (1.0 + self
            .bumps
            .iter()
            .map(|b| b.weight * b.kernel(k))
            .sum::<f64>())
            / self.scale
    }

    fn forward_half(&self, k: f64) -> f64 {
        (self.primitive(k) - self.offset) / self.scale
    }

    /// Stretched coordinate of `k`.
    pub fn forward(&self, k: f64) -> f64 {
        if self.is_identity() {
            return k;
        }
        odd_periodic(k, |y| self.forward_half(y))
    }

    /// `k` with `forward(k) = s`.
    pub fn inverse(&self, s: f64) -> f64 {
        if self.is_identity() {
            return s;
        }
        odd_periodic(s, |y| {
            // safeguarded Newton on [0, π]
            let (mut lo, mut hi) = (0.0, PI);
            let mut k = y;
            for _ in 0..200 {
                let f = self.forward_half(k) - y;
                if f == 0.0 {
                    return k;
                }
                if f < 0.0 {
                    lo = k;
                } else {
                    hi = k;
                }
                if hi - lo <= 4.0 * f64::EPSILON * hi.max(1.0) {
                    break;
                }
                let next = k - f / self.slope(k);
                k = if next > lo && next < hi {
                    next
                } else {
                    0.5 * (lo + hi)
                };
            }
            k
        })
    }
}

/// Extends a map of `[0, π]` to the line, odd and commuting with `2π` shifts.
fn odd_periodic(x: f64, half: impl Fn(f64) -> f64) -> f64 {
    let turns = ((x + PI) / (2.0 * PI)).floor();
    let y = x - 2.0 * PI * turns;
    let inner = if y < 0.0 { -half(-y) } else { half(y) };
    inner + 2.0 * PI * turns
}

/// Product of two axis stretches.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stretch {
    pub axis1: AxisStretch,
    pub axis2: AxisStretch,
}

impl Stretch {
    pub fn around(peaks: &[Peak]) -> Self {
        let first: Vec<(f64, f64)> = peaks.iter().map(|p| (p.k1, p.width)).collect();
        let second: Vec<(f64, f64)> = peaks.iter().map(|p| (p.k2, p.width)).collect();
        Self {
            axis1: AxisStretch::around(&first),
            axis2: AxisStretch::around(&second),
        }
    }

    /// Stretch around the sharp features of `field`, if it has any.
    pub fn for_field(field: &ProjectionField) -> Option<Self> {
        let peaks = find_peaks(field);
        (!peaks.is_empty()).then(|| Self::around(&peaks))
    }

    /// Point of the torus at stretched coordinates `(s1, s2)`.
    pub fn point(&self, s1: f64, s2: f64) -> (f64, f64) {
        (self.axis1.inverse(s1), self.axis2.inverse(s2))
    }

    /// Stretched coordinates of `(k1, k2)`.
    pub fn coordinates(&self, k1: f64, k2: f64) -> (f64, f64) {
        (self.axis1.forward(k1), self.axis2.forward(k2))
    }

    /// `s ↦ P(point(s))`.
    pub fn pullback(&self, field: &ProjectionField) -> ProjectionField {
        let (map, inner) = (self.clone(), field.clone());
        ProjectionField::new(
            field.dim(),
            field.rank(),
            format!("stretched({})", field.provenance()),
            move |s1, s2| {
                let (k1, k2) = map.point(s1, s2);
                inner.at(k1, k2)
            },
        )
        .with_trs_opt(field.trs().cloned())
    }

    /// `k ↦ Q(coordinates(k))`, undoing [`Stretch::pullback`].
    pub fn pushforward(&self, field: &ProjectionField) -> ProjectionField {
        let (map, inner) = (self.clone(), field.clone());
        ProjectionField::new(
            field.dim(),
            field.rank(),
            field.provenance().to_string(),
            move |k1, k2| {
                let (s1, s2) = map.coordinates(k1, k2);
                inner.at(s1, s2)
            },
        )
        .with_trs_opt(field.trs().cloned())
    }
}
