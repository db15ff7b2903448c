use rayon::prelude::*;
use serde_json::{json, Map, Value};
use z2frames::decomposition::{
    pseudo_periodic_frame_with, split_with, symmetric_equivalence_with, symmetric_frame_with,
    DecompositionOptions, FrameField,
};
use z2frames::field::ProjectionField;
use z2frames::invariants::{chern_with, delta_with, InvariantOptions, InvariantReport};
use z2frames::models::{
    haldane, kane_mele, random_hamiltonian, random_trs_hamiltonian, read_harmonics,
    spectral_projector, KaneMele,
};
use z2frames::transport::TransportOptions;

use crate::config::{with_param, Command, ModelSpec, RunConfig};
use crate::error::CliError;
use crate::record::ResultRecord;

/// Projector field of a model together with its certified gap.
pub struct Built {
    pub field: ProjectionField,
    pub min_gap: f64,
}

pub fn build_model(spec: &ModelSpec, seed: u64, min_gap: f64) -> z2frames::Result<Built> {
    let (field, gap) = match spec {
        ModelSpec::Haldane { t1, t2, phi, mass } => {
            let (field, gap) = spectral_projector(&haldane(*t1, *t2, *phi, *mass), 1, min_gap)?;
            (field, gap.min_gap)
        }
        ModelSpec::KaneMele {
            t,
            lambda_so,
            lambda_r,
            lambda_v,
        } => {
            let p = KaneMele {
                t: *t,
                lambda_so: *lambda_so,
                lambda_r: *lambda_r,
                lambda_v: *lambda_v,
            };
            let (field, gap) = spectral_projector(&kane_mele(&p)?, 2, min_gap)?;
            (field, gap.min_gap)
        }
        ModelSpec::RandomTrs {
            dim,
            occupied,
            max_order,
            seed: own,
            g_min,
        } => {
            let m =
                random_trs_hamiltonian(*dim, *occupied, *max_order, own.unwrap_or(seed), *g_min)?;
            (m.field, m.gap.min_gap)
        }
        ModelSpec::Random {
            dim,
            occupied,
            max_order,
            seed: own,
            g_min,
        } => {
            let m = random_hamiltonian(*dim, *occupied, *max_order, own.unwrap_or(seed), *g_min)?;
            (m.field, m.gap.min_gap)
        }
        ModelSpec::File { path, occupied } => {
            let (field, gap) = spectral_projector(&read_harmonics(path)?, *occupied, min_gap)?;
            (field, gap.min_gap)
        }
    };
    Ok(Built {
        field,
        min_gap: gap,
    })
}

/// Resolved settings shared by every computation of a run.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    pub invariants: InvariantOptions,
    pub decomposition: DecompositionOptions,
}

impl Settings {
    pub fn new(config: &RunConfig, seed: u64) -> Self {
        let transport = TransportOptions::with_max_step(config.tolerances.max_step);
        let mut invariants = InvariantOptions {
            transport,
            ..InvariantOptions::default()
        };
        let mut decomposition = DecompositionOptions {
            transport,
            contraction_seed: seed,
            ..DecompositionOptions::default()
        };
        if let Some(grid) = config.grid {
            invariants.grid = grid.0;
            decomposition.grid = grid.0;
        }
        if let Some(n) = config.tolerances.max_refinements {
            invariants.max_refinements = n;
            decomposition.max_refinements = n;
        }
        Self {
            seed,
            invariants,
            decomposition,
        }
    }
}

fn note_invariant(record: &mut ResultRecord, report: &InvariantReport) {
    let d = &report.diagnostics;
    record.grid = Some(d.grid.to_string());
    record.refinements = Some(record.refinements.unwrap_or(0).max(d.refinements));
    record.residual(d.matching_unitarity);
    if let Some(c) = d.constraint_residual {
        record.residual(c);
    }
}

fn frame_details(frame: &FrameField, field: &ProjectionField) -> Value {
    let columns = frame.pseudo_periodic_columns(1e-8);
    let laws: Vec<i64> = columns.iter().map(|&a| frame.column_law(a)).collect();
    json!({
        "frame_grid": frame.grid().to_string(),
        "boundary_phase": frame.boundary_phase(),
        "pseudo_periodic_columns": columns,
        "column_laws": laws,
        "gram_residual": frame.gram_residual(),
        "reconstruction_residual": frame.reconstruction_residual(field),
        "boundary_residual": frame.boundary_residual(),
        "kramers_residual": frame.kramers_residual(),
    })
}

fn frame_residual(frame: &FrameField, field: &ProjectionField) -> f64 {
    frame
        .gram_residual()
        .max(frame.reconstruction_residual(field))
        .max(frame.boundary_residual())
        .max(frame.kramers_residual().unwrap_or(0.0))
}

/// Output of a single computation besides its record.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub frames: Vec<(String, FrameField)>,
}

fn compute(
    command: Command,
    config: &RunConfig,
    model: &ModelSpec,
    settings: &Settings,
    record: &mut ResultRecord,
    artifacts: &mut Artifacts,
) -> z2frames::Result<()> {
    let built = build_model(model, settings.seed, config.tolerances.min_gap)?;
    let field = &built.field;
    record.model = Some(field.provenance().to_string());
    record.min_gap = Some(built.min_gap);
    match command {
        Command::Chern => {
            let report = chern_with(field, &settings.invariants)?;
            record.chern = Some(report.value);
            note_invariant(record, &report);
            record.details = json!({ "diagnostics": report.diagnostics });
        }
        Command::Delta => {
            let report = delta_with(field, &settings.invariants)?;
            record.delta = Some(report.value);
            note_invariant(record, &report);
            record.details = json!({ "diagnostics": report.diagnostics });
        }
        Command::Sweep => {
            let chern = chern_with(field, &settings.invariants)?;
            record.chern = Some(chern.value);
            note_invariant(record, &chern);
            let mut details = Map::new();
            details.insert("chern".into(), json!(chern.diagnostics));
            if field.trs().is_some() {
                let delta = delta_with(field, &settings.invariants)?;
                record.delta = Some(delta.value);
                note_invariant(record, &delta);
                details.insert("delta".into(), json!(delta.diagnostics));
            }
            record.details = Value::Object(details);
        }
        Command::Split => {
            let h = match config.h {
                Some(h) => h,
                None => (delta_with(field, &settings.invariants)?.value == -1) as i64,
            };
            record.params.insert("h".into(), Value::from(h));
            let cert = split_with(field, h, &settings.decomposition)?;
            record.delta = Some(cert.delta as i64);
            record.chern = Some(cert.chern_lower);
            record.grid = Some(cert.grid.to_string());
            record.residual(cert.residuals.max());
            record.residual(cert.gluing.seam_residual());
            record.residual(cert.gluing.symmetry_residual());
            record.details = json!({
                "chern_lower": cert.chern_lower,
                "chern_upper": cert.chern_upper,
                "residuals": cert.residuals,
                "seam_residual": cert.gluing.seam_residual(),
                "gluing_symmetry_residual": cert.gluing.symmetry_residual(),
                "frame": frame_details(&cert.frame, &cert.frame_field(field)),
                "coordinates": cert.coordinates,
            });
            artifacts
                .frames
                .push(("split_frame.txt".into(), cert.frame));
        }
        Command::Frame => {
            let frame = if field.trs().is_some() {
                symmetric_frame_with(field, &settings.decomposition)?
            } else {
                pseudo_periodic_frame_with(field, &settings.decomposition)?
            };
            record.grid = Some(frame.grid().to_string());
            record.residual(frame_residual(&frame, field));
            record.details = frame_details(&frame, field);
            artifacts.frames.push(("frame.txt".into(), frame));
        }
        Command::Equivalence => {
            let other_spec = config.other.as_ref().expect("validated config");
            let other = build_model(other_spec, settings.seed, config.tolerances.min_gap)?;
            record.min_gap = Some(built.min_gap.min(other.min_gap));
            let eq = symmetric_equivalence_with(field, &other.field, &settings.decomposition)?;
            record.delta = Some(eq.delta as i64);
            record.grid = Some(eq.grid.to_string());
            record.residual(eq.max_residual());
            record.details = json!({
                "other": other.field.provenance(),
                "periodicity_residual": eq.periodicity_residual,
                "trs_residual": eq.trs_residual,
                "intertwining_residual": eq.intertwining_residual,
                "unitarity_residual": eq.unitarity_residual,
            });
        }
        Command::Check => unreachable!("self-checks run separately"),
    }
    Ok(())
}

fn record_for(
    index: usize,
    config: &RunConfig,
    model: &ModelSpec,
    params: Map<String, Value>,
    settings: &Settings,
) -> (ResultRecord, Artifacts) {
    let mut record = ResultRecord::new(index, config.command);
    record.params = params;
    let mut artifacts = Artifacts::default();
    if let Err(e) = compute(
        config.command,
        config,
        model,
        settings,
        &mut record,
        &mut artifacts,
    ) {
        record.fail(&e);
    }
    (record, artifacts)
}

/// Runs every computation of `config` on the current thread pool, in index order.
pub fn run(
    config: &RunConfig,
    settings: &Settings,
) -> Result<(Vec<ResultRecord>, Artifacts), CliError> {
    config.validate()?;
    match config.command {
        Command::Check => Ok((crate::check::run_suite(settings.seed), Artifacts::default())),
        Command::Sweep => {
            let sweep = config.sweep.as_ref().expect("validated config");
            let model = config.model.as_ref().expect("validated config");
            let records: Vec<ResultRecord> = (0..sweep.len())
                .into_par_iter()
                .map(|index| {
                    let mut params = Map::new();
                    let mut spec = model.clone();
                    for (axis, x) in sweep.axes.iter().zip(sweep.point(index)) {
                        spec = with_param(&spec, &axis.param, x).map_err(CliError::Config)?;
                        let v = serde_json::to_value(&spec).expect("model serializes");
                        params.insert(axis.param.clone(), v[&axis.param].clone());
                    }
                    Ok(record_for(index, config, &spec, params, settings).0)
                })
                .collect::<Result<_, CliError>>()?;
            Ok((records, Artifacts::default()))
        }
        _ => {
            let model = config.model.as_ref().expect("validated config");
            let (record, artifacts) = record_for(0, config, model, Map::new(), settings);
            Ok((vec![record], artifacts))
        }
    }
}
