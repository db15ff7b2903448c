//! Plain-text harmonic-coefficient files.
//!
//! ```text
//! {
//!   "dimension": 2,
//!   "trs_J": [[re, im], ...],            // optional, row-major D×D
//!   "harmonics": [
//!     {"m": [m1, m2], "A": [[re, im], ...]},   // row-major D×D
//!     ...
//!   ]
//! }
//! ```
//!
//! Every harmonic `m` present must have its partner `−m` with `A_{−m} = A_m*`.
//! Reals are written with 17 significant digits so files round-trip exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::BlochHamiltonian;
use crate::error::{Error, Result};
use crate::numerics::{c64, cmatrix_from_row_major, row_major, CMatrix};
use crate::trs::TrsStructure;

/// Scientific notation with 17 significant digits, e.g. `-1.2500000000000000e-1`.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        // normalize −0 so output is stable
        return format!("{:.16e}", 0.0);
    }
    format!("{x:.16e}")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HarmonicFile {
    dimension: usize,
    #[serde(rename = "trs_J", default)]
    trs_j: Option<Vec<[f64; 2]>>,
    harmonics: Vec<HarmonicEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HarmonicEntry {
    m: [i32; 2],
    #[serde(rename = "A")]
    a: Vec<[f64; 2]>,
}

fn matrix_from_pairs(dim: usize, pairs: &[[f64; 2]], what: &str) -> Result<CMatrix> {
    let data: Vec<_> = pairs.iter().map(|p| c64(p[0], p[1])).collect();
    cmatrix_from_row_major(dim, dim, &data).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

pub fn parse_harmonics(text: &str, provenance: &str) -> Result<BlochHamiltonian> {
    let file: HarmonicFile = serde_json::from_str(text).map_err(|e| {
        Error::Parse(format!(
            "{provenance}: line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    let dim = file.dimension;
    if dim == 0 {
        return Err(Error::Parse(format!(
            "{provenance}: dimension must be positive"
        )));
    }
    let trs = match &file.trs_j {
        Some(pairs) => Some(TrsStructure::new(matrix_from_pairs(dim, pairs, "trs_J")?)?),
        None => None,
    };
    let mut harmonics = BTreeMap::new();
    for (idx, entry) in file.harmonics.iter().enumerate() {
        let m = (entry.m[0], entry.m[1]);
        let a = matrix_from_pairs(dim, &entry.a, &format!("harmonics[{idx}].A"))?;
        if harmonics.insert(m, a).is_some() {
            return Err(Error::Parse(format!(
                "{provenance}: harmonic m = {m:?} listed twice (harmonics[{idx}])"
            )));
        }
    }
    BlochHamiltonian::new(dim, harmonics, trs, provenance)
}

pub fn read_harmonics(path: &Path) -> Result<BlochHamiltonian> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_harmonics(&text, &path.display().to_string())
}

fn pairs(m: &CMatrix) -> String {
    row_major(m)
        .iter()
        .map(|z| format!("[{}, {}]", format_real(z.re), format_real(z.im)))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn harmonics_to_string(h: &BlochHamiltonian) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{{");
    let _ = writeln!(out, "  \"dimension\": {},", h.dim());
    if let Some(t) = h.trs() {
        let _ = writeln!(out, "  \"trs_J\": [{}],", pairs(t.j()));
    }
    let _ = writeln!(out, "  \"harmonics\": [");
    let n = h.harmonics().len();
    for (i, ((m1, m2), a)) in h.harmonics().iter().enumerate() {
        let comma = if i + 1 < n { "," } else { "" };
        let _ = writeln!(
            out,
            "    {{\"m\": [{m1}, {m2}], \"A\": [{}]}}{comma}",
            pairs(a)
        );
    }
    let _ = writeln!(out, "  ]");
    let _ = writeln!(out, "}}");
    out
}

pub fn write_harmonics(h: &BlochHamiltonian, path: &Path) -> Result<()> {
    std::fs::write(path, harmonics_to_string(h)).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
