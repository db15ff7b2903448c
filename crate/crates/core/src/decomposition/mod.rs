//! Splittings, pseudo-periodic frames, symmetric equivalence and homotopy checks.
//!
//! Every construction starts from a transported frame `F(t,k₂) = U(t,k₂) V`
//! on the nodes of a grid. Its matching family `α` says how `F(π,·)` and
//! `F(−π,·)` differ; a unitary correction `G(t,k₂)` that absorbs `α` up to a
//! diagonal phase law turns `F G` into a frame that is periodic except for
//! that law.

mod equivalence;
mod frame;
mod frames;
mod homotopy;
mod split;

use serde::Serialize;

pub use equivalence::{symmetric_equivalence, symmetric_equivalence_with, SymmetricEquivalence};
pub use frame::FrameField;
pub use frames::{
    pseudo_periodic_frame, pseudo_periodic_frame_with, symmetric_frame, symmetric_frame_with,
};
pub use homotopy::{verify_homotopy, HomotopyReport, SnapshotCheck, StepCheck, MAX_SNAPSHOT_STEP};
pub use split::{split, split_with, GluingMatrixPath, SplitCertificate, SplitResiduals};

use crate::error::{Error, Result};
use crate::field::Grid2;
use crate::invariants::{InvariantOptions, DEFAULT_GRID};
use crate::transport::TransportOptions;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionOptions {
    /// Starting grid for the transported frame.
    pub grid: Grid2,
    /// Grid doublings allowed after an under-resolved attempt.
    pub max_refinements: u32,
    pub transport: TransportOptions,
    pub basis_seed: Option<u64>,
    /// Seed for the random targets of loop contractions.
    pub contraction_seed: u64,
}

impl Default for DecompositionOptions {
    fn default() -> Self {
        Self {
            grid: Grid2::new(DEFAULT_GRID, DEFAULT_GRID).expect("even grid"),
            max_refinements: 4,
            transport: TransportOptions::default(),
            basis_seed: None,
            contraction_seed: 0,
        }
    }
}

impl DecompositionOptions {
    pub fn with_grid(grid: Grid2) -> Self {
        Self {
            grid,
            ..Self::default()
        }
    }

    /// Options for the invariant computations a construction relies on.
    pub fn invariants(&self) -> InvariantOptions {
        InvariantOptions {
            transport: self.transport,
            basis_seed: self.basis_seed,
            ..InvariantOptions::default()
        }
    }

    fn invariants_on(&self, grid: Grid2) -> InvariantOptions {
        InvariantOptions {
            grid,
            max_refinements: 0,
            ..self.invariants()
        }
    }
}

/// Largest grid a construction may refine to, in nodes.
const MAX_NODES: usize = 1 << 17;

/// A failed attempt and the axes a retry should refine.
pub(crate) struct Retry {
    error: Error,
    t: bool,
    k: bool,
}

/// A phase loop that moves too fast needs more `k₂` nodes; other
/// under-resolved failures refine both axes; anything else is final.
impl From<Error> for Retry {
    fn from(error: Error) -> Self {
        let (t, k) = match &error {
            Error::RefinementNeeded { .. } => (false, true),
            e if crate::invariants::wants_refinement(e) => (true, true),
            _ => (false, false),
        };
        Self { error, t, k }
    }
}

/// Runs `attempt` on `grid`, refining the requested axes after under-resolved failures.
pub(crate) fn ladder<T>(
    grid: Grid2,
    max_refinements: u32,
    what: &str,
    mut attempt: impl FnMut(Grid2) -> Result<T, Retry>,
) -> Result<T> {
    let mut grid = grid;
    let mut last = None;
    for _ in 0..=max_refinements {
        match attempt(grid) {
            Ok(v) => return Ok(v),
            Err(Retry {
                error,
                t: false,
                k: false,
            }) => return Err(error),
            Err(Retry { error, t, k }) => {
                let next = Grid2::new(grid.n1() << u8::from(t), grid.n2() << u8::from(k))?;
                last = Some(error);
                if next.n1() * next.n2() > MAX_NODES {
                    break;
                }
                grid = next;
            }
        }
    }
    Err(Error::Unresolved(format!(
        "{what} still under-resolved on grid {grid}: {}",
        last.map(|e| e.to_string()).unwrap_or_default()
    )))
}
