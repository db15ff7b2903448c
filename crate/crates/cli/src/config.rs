//! Run configuration files.
//!
//! ```text
//! {
//!   "schema": 1,
//!   "command": "sweep",
//!   "model": {"kind": "kane_mele", "lambda_so": 0.06, "lambda_r": 0.05},
//!   "grid": "32x32",
//!   "tolerances": {"min_gap": 0.001, "max_step": 0.3, "max_refinements": 5},
//!   "seed": 7,
//!   "sweep": {"axes": [{"param": "lambda_v", "min": 0.0, "max": 0.6, "steps": 13}]}
//! }
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use z2frames::field::Grid2;
use z2frames::models::KaneMele;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Chern,
    Delta,
    Split,
    Frame,
    Equivalence,
    Sweep,
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Chern => "chern",
            Command::Delta => "delta",
            Command::Split => "split",
            Command::Frame => "frame",
            Command::Equivalence => "equivalence",
            Command::Sweep => "sweep",
            Command::Check => "check",
        }
    }
}

/// Grid written as `N1xN2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec(pub Grid2);

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("grid `{s}` is not of the form N1xN2"))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("grid `{s}` has a non-integer size"))
        };
        let grid = Grid2::new(parse(a)?, parse(b)?).map_err(|e| format!("grid `{s}`: {e}"))?;
        Ok(GridSpec(grid))
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for GridSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GridSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

fn default_t1() -> f64 {
    1.0
}
fn default_t2() -> f64 {
    0.1
}
fn default_phi() -> f64 {
    std::f64::consts::FRAC_PI_2
}
fn km() -> KaneMele {
    KaneMele::default()
}
fn default_t() -> f64 {
    km().t
}
fn default_lambda_so() -> f64 {
    km().lambda_so
}
fn default_lambda_r() -> f64 {
    km().lambda_r
}
fn default_lambda_v() -> f64 {
    km().lambda_v
}
fn default_dim() -> usize {
    8
}
fn default_trs_occupied() -> usize {
    4
}
fn default_occupied() -> usize {
    2
}
fn default_order() -> i32 {
    2
}
fn default_random_gap() -> f64 {
    0.1
}

/// Built-in model with its parameters, or a harmonic-coefficient file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Lower band of the Haldane model.
    Haldane {
        #[serde(default = "default_t1")]
        t1: f64,
        #[serde(default = "default_t2")]
        t2: f64,
        #[serde(default = "default_phi")]
        phi: f64,
        #[serde(default)]
        mass: f64,
    },
    /// Lower two bands of the Kane–Mele model.
    KaneMele {
        #[serde(default = "default_t")]
        t: f64,
        #[serde(default = "default_lambda_so")]
        lambda_so: f64,
        #[serde(default = "default_lambda_r")]
        lambda_r: f64,
        #[serde(default = "default_lambda_v")]
        lambda_v: f64,
    },
    /// Seeded random time-reversal symmetric model; the run seed is used when `seed` is absent.
    RandomTrs {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "default_trs_occupied")]
        occupied: usize,
        #[serde(default = "default_order")]
        max_order: i32,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "default_random_gap")]
        g_min: f64,
    },
    /// Seeded random model without time-reversal symmetry.
    Random {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "default_occupied")]
        occupied: usize,
        #[serde(default = "default_order")]
        max_order: i32,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "default_random_gap")]
        g_min: f64,
    },
    /// Harmonic-coefficient file, relative paths resolved against the config file.
    File { path: PathBuf, occupied: usize },
}

impl ModelSpec {
    fn resolve_paths(&mut self, base: &Path) {
        if let ModelSpec::File { path, .. } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Smallest accepted spectral gap for the built-in and file models.
    #[serde(default = "Tolerances::default_min_gap")]
    pub min_gap: f64,
    /// Largest projector step in parallel transport.
    #[serde(default = "Tolerances::default_max_step")]
    pub max_step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_refinements: Option<u32>,
}

impl Tolerances {
    fn default_min_gap() -> f64 {
        z2frames::models::DEFAULT_MIN_GAP
    }

    fn default_max_step() -> f64 {
        z2frames::transport::TransportOptions::default().max_step
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            min_gap: Self::default_min_gap(),
            max_step: Self::default_max_step(),
            max_refinements: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Numeric model parameter, e.g. `lambda_v` or `mass`.
    pub param: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl SweepAxis {
    pub fn value(&self, i: usize) -> f64 {
        self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Cartesian product of the axes, first axis slowest.
    pub axes: Vec<SweepAxis>,
}

impl SweepSpec {
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.steps).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Axis values of sweep point `index`.
    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for (slot, axis) in self.axes.iter().enumerate().rev() {
            out[slot] = axis.value(index % axis.steps);
            index /= axis.steps;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    /// Second field of an `equivalence` run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other: Option<ModelSpec>,
    /// Chern number of the lower factor of a `split`; defaults to the smallest compatible one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl RunConfig {
    /// A config with only the command set.
    pub fn new(command: Command) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            command,
            model: None,
            other: None,
            h: None,
            grid: None,
            tolerances: Tolerances::default(),
            seed: None,
            output: None,
            sweep: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        // serde_json reports the line and column of the offending field
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads and validates `path`; relative model files are resolved against its directory.
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            e => e,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for spec in [config.model.as_mut(), config.other.as_mut()]
            .into_iter()
            .flatten()
        {
            spec.resolve_paths(base);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |m: String| Err(CliError::Config(m));
        if self.schema != SCHEMA_VERSION {
            return fail(format!(
                "schema: unsupported version {}, expected {SCHEMA_VERSION}",
                self.schema
            ));
        }
        let t = &self.tolerances;
        if !(t.min_gap > 0.0 && t.min_gap.is_finite()) {
            return fail(format!(
                "tolerances.min_gap: must be positive, got {}",
                t.min_gap
            ));
        }
        if !(t.max_step > 0.0 && t.max_step < 1.0) {
            return fail(format!(
                "tolerances.max_step: must lie in (0, 1), got {}",
                t.max_step
            ));
        }
        if self.command != Command::Check && self.model.is_none() {
            return fail(format!(
                "model: required by the `{}` command",
                self.command.name()
            ));
        }
        if let Some(model) = &self.model {
            validate_model(model, "model")?;
        }
        match self.command {
            Command::Equivalence if self.other.is_none() => {
                return fail("other: the `equivalence` command needs a second model".into());
            }
            Command::Sweep if self.sweep.is_none() => {
                return fail("sweep: the `sweep` command needs sweep axes".into());
            }
            _ => {}
        }
        if let Some(other) = &self.other {
            validate_model(other, "other")?;
        }
        if let Some(sweep) = &self.sweep {
            if sweep.axes.is_empty() {
                return fail("sweep.axes: at least one axis is required".into());
            }
            for (i, axis) in sweep.axes.iter().enumerate() {
                if axis.steps < 2 {
                    return fail(format!(
                        "sweep.axes[{i}].steps: must be at least 2, got {}",
                        axis.steps
                    ));
                }
                if !(axis.min.is_finite() && axis.max.is_finite()) {
                    return fail(format!("sweep.axes[{i}]: bounds must be finite"));
                }
                let model = self.model.as_ref().expect("checked above");
                with_param(model, &axis.param, axis.min)
                    .map_err(|e| CliError::Config(format!("sweep.axes[{i}].param: {e}")))?;
            }
        }
        Ok(())
    }
}

fn validate_model(model: &ModelSpec, field: &str) -> Result<(), CliError> {
    let fail = |m: String| Err(CliError::Config(format!("{field}: {m}")));
    match model {
        ModelSpec::RandomTrs { g_min, .. } | ModelSpec::Random { g_min, .. } if !(*g_min > 0.0) => {
            fail(format!("g_min must be positive, got {g_min}"))
        }
        ModelSpec::File { occupied: 0, .. } => fail("occupied must be positive".into()),
        _ => Ok(()),
    }
}

/// `model` with the numeric parameter `param` set to `value`.
///
/// Integer parameters such as `seed` accept only integral values.
pub fn with_param(model: &ModelSpec, param: &str, value: f64) -> Result<ModelSpec, String> {
    let mut v = serde_json::to_value(model).map_err(|e| e.to_string())?;
    let map = v.as_object_mut().expect("models serialize to objects");
    let slot = match map.get_mut(param) {
        Some(slot) if param != "kind" && param != "path" => slot,
        _ => {
            return Err(format!(
                "`{param}` is not a numeric parameter of this model"
            ))
        }
    };
    let integral = slot.is_null() || slot.is_u64() || slot.is_i64();
    *slot = if integral {
        if value.fract() != 0.0 || value < 0.0 {
            return Err(format!(
                "`{param}` takes non-negative integers, got {value}"
            ));
        }
        Value::from(value as u64)
    } else if slot.is_f64() {
        Value::from(value)
    } else {
        return Err(format!("`{param}` is not numeric"));
    };
    serde_json::from_value(v).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::parse(
            r#"{"schema": 1, "command": "delta", "model": {"kind": "kane_mele"}}"#,
        )
        .unwrap();
        assert_eq!(
            c.model,
            Some(ModelSpec::KaneMele {
                t: 1.0,
                lambda_so: 0.06,
                lambda_r: 0.05,
                lambda_v: 0.1
            })
        );
        assert_eq!(c.tolerances, Tolerances::default());
    }

    #[test]
    fn grid_strings() {
        assert_eq!(
            "32x64".parse::<GridSpec>().unwrap().0,
            Grid2::new(32, 64).unwrap()
        );
        assert!("31x32".parse::<GridSpec>().is_err());
        assert!("32".parse::<GridSpec>().is_err());
    }

    #[test]
    fn errors_name_the_line_and_field() {
        let text = "{\n  \"schema\": 1,\n  \"command\": \"chern\",\n  \"modle\": {}\n}";
        let err = RunConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("line 4") && err.contains("modle"), "{err}");
        let err = RunConfig::parse(r#"{"schema": 2, "command": "check"}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("schema"), "{err}");
        let text = r#"{"schema": 1, "command": "sweep", "model": {"kind": "haldane"},
            "sweep": {"axes": [{"param": "mass", "min": 0, "max": 1, "steps": 1}]}}"#;
        assert!(RunConfig::parse(text)
            .unwrap_err()
            .to_string()
            .contains("steps"));
        let text = r#"{"schema": 1, "command": "sweep", "model": {"kind": "haldane"},
            "sweep": {"axes": [{"param": "lambda_v", "min": 0, "max": 1, "steps": 3}]}}"#;
        assert!(RunConfig::parse(text)
            .unwrap_err()
            .to_string()
            .contains("lambda_v"));
        let text = r#"{"schema": 1, "command": "chern", "model": {"kind": "haldane"}, "tolerances": {"max_step": 0}}"#;
        assert!(RunConfig::parse(text)
            .unwrap_err()
            .to_string()
            .contains("max_step"));
    }

    #[test]
    fn sweep_points_are_row_major() {
        let sweep = SweepSpec {
            axes: vec![
                SweepAxis {
                    param: "a".into(),
                    min: 0.0,
                    max: 1.0,
                    steps: 2,
                },
                SweepAxis {
                    param: "b".into(),
                    min: 0.0,
                    max: 2.0,
                    steps: 3,
                },
            ],
        };
        assert_eq!(sweep.len(), 6);
        assert_eq!(sweep.point(0), vec![0.0, 0.0]);
        assert_eq!(sweep.point(2), vec![0.0, 2.0]);
        assert_eq!(sweep.point(4), vec![1.0, 1.0]);
    }

    #[test]
    fn params_keep_their_types() {
        let random = ModelSpec::RandomTrs {
            dim: 8,
            occupied: 4,
            max_order: 2,
            seed: None,
            g_min: 0.1,
        };
        assert!(matches!(
            with_param(&random, "seed", 3.0),
            Ok(ModelSpec::RandomTrs { seed: Some(3), .. })
        ));
        assert!(with_param(&random, "seed", 0.5).is_err());
        let km = ModelSpec::KaneMele {
            t: 1.0,
            lambda_so: 0.06,
            lambda_r: 0.05,
            lambda_v: 0.1,
        };
        assert!(
            matches!(with_param(&km, "lambda_v", 0.3), Ok(ModelSpec::KaneMele { lambda_v, .. }) if lambda_v == 0.3)
        );
        assert!(with_param(&km, "kind", 1.0).is_err());
    }
}
