use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use z2frames::models::format_real;

use crate::config::{Command, RunConfig, SweepSpec};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Ok,
    Obstruction,
    Unresolved,
    Error,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Ok => "ok",
            Outcome::Obstruction => "obstruction",
            Outcome::Unresolved => "unresolved",
            Outcome::Error => "error",
        }
    }

    pub fn of(e: &z2frames::Error) -> Self {
        if e.is_obstruction() {
            Outcome::Obstruction
        } else if e.is_unresolved() {
            Outcome::Unresolved
        } else {
            Outcome::Error
        }
    }
}

/// One computation: a single model, a sweep point or a self-check.
///
/// Wall time is reported on stderr only, so that records stay reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub index: usize,
    pub command: Command,
    /// Swept parameter values, or the name of a self-check.
    pub params: Map<String, Value>,
    pub model: Option<String>,
    pub outcome: Outcome,
    pub message: Option<String>,
    pub chern: Option<i64>,
    pub delta: Option<i64>,
    pub min_gap: Option<f64>,
    pub max_residual: Option<f64>,
    pub grid: Option<String>,
    /// Grid doublings the computation needed.
    pub refinements: Option<u32>,
    pub details: Value,
}

impl ResultRecord {
    pub fn new(index: usize, command: Command) -> Self {
        Self {
            index,
            command,
            params: Map::new(),
            model: None,
            outcome: Outcome::Ok,
            message: None,
            chern: None,
            delta: None,
            min_gap: None,
            max_residual: None,
            grid: None,
            refinements: None,
            details: Value::Null,
        }
    }

    pub fn fail(&mut self, e: &z2frames::Error) {
        self.outcome = Outcome::of(e);
        self.message = Some(e.to_string());
    }

    pub fn residual(&mut self, r: f64) {
        self.max_residual = Some(self.max_residual.map_or(r, |m| m.max(r)));
    }
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_OBSTRUCTION: u8 = 2;
pub const EXIT_UNRESOLVED: u8 = 3;
pub const EXIT_CONFIG: u8 = 4;
pub const EXIT_INTERNAL: u8 = 5;

/// Exit code of a finished run; the most severe outcome wins.
pub fn exit_code(records: &[ResultRecord]) -> u8 {
    match records.iter().map(|r| r.outcome).max() {
        None | Some(Outcome::Ok) => EXIT_OK,
        Some(Outcome::Obstruction) => EXIT_OBSTRUCTION,
        Some(Outcome::Unresolved) => EXIT_UNRESOLVED,
        Some(Outcome::Error) => EXIT_INTERNAL,
    }
}

/// Pretty JSON with a fixed key order, reals in 17 significant digits and LF line endings.
pub fn to_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, value: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            out.push_str(&format_real(x));
        }
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            let _ = write!(out, "{}]", pad(indent));
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (key, item)) in map.iter().enumerate() {
                let _ = write!(out, "{}{}: ", pad(indent + 1), Value::String(key.clone()));
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            let _ = write!(out, "{}}}", pad(indent));
        }
        other => out.push_str(&other.to_string()),
    }
}

fn cell(value: Option<&Value>) -> String {
    match value {
        None | Some(Value::Null) => String::new(),
        Some(Value::Number(n)) if n.is_f64() => format_real(n.as_f64().expect("f64 number")),
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}

/// Phase-diagram table: swept parameters, then chern, delta, min_gap, max_residual, outcome.
pub fn to_csv(params: &[String], records: &[ResultRecord]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header: Vec<&str> = params.iter().map(String::as_str).collect();
    header.extend(["chern", "delta", "min_gap", "max_residual", "outcome"]);
    let csv_err = |e: csv::Error| CliError::Io {
        path: "<csv>".into(),
        message: e.to_string(),
    };
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row: Vec<String> = params.iter().map(|p| cell(r.params.get(p))).collect();
        row.push(r.chern.map(|c| c.to_string()).unwrap_or_default());
        row.push(r.delta.map(|d| d.to_string()).unwrap_or_default());
        row.push(r.min_gap.map(format_real).unwrap_or_default());
        row.push(r.max_residual.map(format_real).unwrap_or_default());
        row.push(r.outcome.name().to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io {
        path: "<csv>".into(),
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Document written for every run: the config echo and the records in index order.
pub fn report(config: &RunConfig, records: &[ResultRecord]) -> Value {
    let mut doc = Map::new();
    doc.insert("schema".into(), Value::from(crate::config::SCHEMA_VERSION));
    doc.insert(
        "config".into(),
        serde_json::to_value(config).expect("config serializes"),
    );
    doc.insert(
        "records".into(),
        serde_json::to_value(records).expect("records serialize"),
    );
    Value::Object(doc)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes `<command>.json`, plus `sweep.csv` for sweeps; returns the paths written.
pub fn emit(
    dir: &Path,
    config: &RunConfig,
    records: &[ResultRecord],
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    let json = dir.join(format!("{}.json", config.command.name()));
    write_file(&json, &to_json(&report(config, records)))?;
    written.push(json);
    if let Some(sweep) = config
        .sweep
        .as_ref()
        .filter(|_| config.command == Command::Sweep)
    {
        let csv = dir.join("sweep.csv");
        write_file(&csv, &emit_phase_diagram(sweep, records)?)?;
        written.push(csv);
    }
    Ok(written)
}

pub fn emit_phase_diagram(sweep: &SweepSpec, records: &[ResultRecord]) -> Result<String, CliError> {
    let params: Vec<String> = sweep.axes.iter().map(|a| a.param.clone()).collect();
    to_csv(&params, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResultRecord {
        let mut r = ResultRecord::new(3, Command::Sweep);
        r.params.insert("lambda_v".into(), Value::from(0.1));
        r.params.insert("seed".into(), Value::from(4u64));
        r.chern = Some(0);
        r.delta = Some(-1);
        r.min_gap = Some(0.123_456_789_012_345_67);
        r.residual(1e-13);
        r.grid = Some("32x32".into());
        r.details = serde_json::json!({"x": [1.0 / 3.0, -0.0], "ok": true});
        r
    }

    #[test]
    fn records_round_trip_through_the_fixed_format() {
        let records = vec![sample(), ResultRecord::new(4, Command::Sweep)];
        let text = to_json(&serde_json::to_value(&records).unwrap());
        let back: Vec<ResultRecord> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, records);
        assert!(text.contains("1.2345678901234566e-1"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn empty_sweep_gives_header_only() {
        let csv = to_csv(&["mass".into()], &[]).unwrap();
        assert_eq!(csv, "mass,chern,delta,min_gap,max_residual,outcome\n");
    }

    #[test]
    fn csv_rows_follow_the_header() {
        let csv = to_csv(&["lambda_v".into(), "seed".into()], &[sample()]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[1],
            "1.0000000000000001e-1,4,0,-1,1.2345678901234566e-1,1.0000000000000000e-13,ok"
        );
    }

    #[test]
    fn exit_code_takes_the_worst_outcome() {
        let mut a = ResultRecord::new(0, Command::Split);
        let mut b = a.clone();
        assert_eq!(exit_code(&[a.clone()]), EXIT_OK);
        b.outcome = Outcome::Obstruction;
        assert_eq!(exit_code(&[a.clone(), b.clone()]), EXIT_OBSTRUCTION);
        a.outcome = Outcome::Unresolved;
        assert_eq!(exit_code(&[a, b]), EXIT_UNRESOLVED);
        assert_eq!(exit_code(&[]), EXIT_OK);
    }
}
