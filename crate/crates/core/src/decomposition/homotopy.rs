use serde::Serialize;

use crate::field::{Grid2, ProjectionField};
use crate::invariants::{delta_with, InvariantOptions};
use crate::numerics::op_dist;
use crate::trs::{validate_field, ValidationReport};

/// Largest node-wise distance allowed between consecutive snapshots.
pub const MAX_SNAPSHOT_STEP: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotCheck {
    pub index: usize,
    pub provenance: String,
    pub validation: ValidationReport,
    /// Valid, time-reversal symmetric and of even rank.
    pub valid: bool,
    pub delta: Option<i8>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepCheck {
    /// Step from snapshot `from` to `from + 1`.
    pub from: usize,
    /// `max ‖P_{s+1}(k) − P_s(k)‖` over the grid, `None` when the shapes differ.
    pub distance: Option<f64>,
    pub worst_node: (f64, f64),
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomotopyReport {
    pub grid: Grid2,
    pub snapshots: Vec<SnapshotCheck>,
    pub steps: Vec<StepCheck>,
    pub delta_constant: bool,
    pub passed: bool,
    /// One line per failed check.
    pub failures: Vec<String>,
}

/// Audits a sampled symmetric homotopy `P_0, …, P_S`: every snapshot must be a
/// valid time-reversal symmetric field, consecutive snapshots must stay within
/// [`MAX_SNAPSHOT_STEP`] on every node of `grid`, and `δ` must not change.
///
/// Failures are reported, never raised.
pub fn verify_homotopy(
    path: &[ProjectionField],
    grid: Grid2,
    opts: &InvariantOptions,
) -> HomotopyReport {
    let mut failures = Vec::new();
    let snapshots: Vec<SnapshotCheck> = path
        .iter()
        .enumerate()
        .map(|(index, field)| {
            let validation = validate_field(field, &grid);
            let symmetric = field.trs().is_some();
            let valid = validation.passed() && symmetric;
            let (delta, error) = if valid {
                match delta_with(field, opts) {
                    Ok(r) => (Some(r.value as i8), None),
                    Err(e) => (None, Some(e.to_string())),
                }
            } else if !symmetric {
                (None, Some("snapshot carries no time reversal".into()))
            } else {
                (None, Some("snapshot fails validation".into()))
            };
            if let Some(e) = &error {
                failures.push(format!("snapshot {index}: {e}"));
            }
            SnapshotCheck {
                index,
                provenance: field.provenance().to_string(),
                validation,
                valid,
                delta,
                error,
            }
        })
        .collect();

    let steps: Vec<StepCheck> = path
        .windows(2)
        .enumerate()
        .map(|(from, w)| {
            if w[0].dim() != w[1].dim() || w[0].rank() != w[1].rank() {
                failures.push(format!(
                    "step {from}: shape changes from {}x rank {} to {}x rank {}",
                    w[0].dim(),
                    w[0].rank(),
                    w[1].dim(),
                    w[1].rank()
                ));
                return StepCheck {
                    from,
                    distance: None,
                    worst_node: (0.0, 0.0),
                    passed: false,
                };
            }
            let mut worst = (0.0_f64, (0.0, 0.0));
            for (k1, k2) in grid.nodes() {
                let d = op_dist(&w[0].at(k1, k2), &w[1].at(k1, k2));
                if d > worst.0 {
                    worst = (d, (k1, k2));
                }
            }
            let passed = worst.0 <= MAX_SNAPSHOT_STEP;
            if !passed {
                failures.push(format!(
                    "step {from}: snapshots differ by {:.6} at k = ({:.6}, {:.6})",
                    worst.0, worst.1 .0, worst.1 .1
                ));
            }
            StepCheck {
                from,
                distance: Some(worst.0),
                worst_node: worst.1,
                passed,
            }
        })
        .collect();

    let deltas: Vec<i8> = snapshots.iter().filter_map(|s| s.delta).collect();
    let delta_constant = deltas.len() == snapshots.len() && deltas.windows(2).all(|w| w[0] == w[1]);
    if deltas.windows(2).any(|w| w[0] != w[1]) {
        failures.push(format!("delta changes along the path: {deltas:?}"));
    }
    let passed = failures.is_empty() && delta_constant;
    HomotopyReport {
        grid,
        snapshots,
        steps,
        delta_constant,
        passed,
        failures,
    }
}
