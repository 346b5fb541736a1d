use std::path::Path;

use cns_core::carleman::{
    global_enstrophy_ledger, local_enstrophy_ledger, EnstrophyLedger, LedgerWindow, MovingCutoff,
};
use cns_core::solver::{curl_compatibility, duhamel_split, energy_inequality, residual_check, run_recorded, TrajectoryRecord};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{ArtifactWriter, Manifest};
use crate::config::{ReportKind, RunConfig};
use crate::error::{CliError, Result};
use crate::export::{checked_diagnostics_csv, ledger_table};
use crate::pipeline::{pipeline_main_estimate, PipelineParams, PipelineReport, SeedSpec, StageStatus};

/// A config plus where its artifacts go and, for the pipeline, an optional
/// fixed seed event.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub config: RunConfig,
    pub out_dir: std::path::PathBuf,
    pub seed_event: Option<SeedSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaltRecord {
    pub message: String,
    pub last_time: f64,
    pub snapshots: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportStatus {
    pub report: String,
    pub ok: bool,
    pub files: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub manifest: Manifest,
    pub statuses: Vec<ReportStatus>,
    /// Set when the solver halted; the artifacts then cover the run up to
    /// the last finite snapshot.
    pub halt: Option<cns_core::Error>,
}

/// A computed report waiting to be written.
pub enum Rendered {
    Json(String, serde_json::Value),
    Csv(String, String),
}

fn json<T: Serialize>(name: &str, v: &T) -> Result<Rendered> {
    // the audit runs on the typed value so non-finite floats are named
    if let Some(field) = crate::audit::find_non_finite(v) {
        return Err(CliError::NonFinite {
            context: name.into(),
            field,
        });
    }
    let value = serde_json::to_value(v).map_err(|source| CliError::Json {
        path: name.into(),
        source,
    })?;
    Ok(Rendered::Json(name.into(), value))
}

fn ledger_files(stem: &str, l: &EnstrophyLedger) -> Result<Vec<Rendered>> {
    let csv_name = format!("reports/{stem}.csv");
    let csv = ledger_table(l).to_csv(&csv_name)?;
    Ok(vec![json(&format!("reports/{stem}.json"), l)?, Rendered::Csv(csv_name, csv)])
}

pub fn ledger_window(traj: &TrajectoryRecord) -> LedgerWindow {
    LedgerWindow {
        t_lo: traj.first_time(),
        t_hi: traj.last_time(),
    }
}

pub fn local_cutoff(c: &RunConfig) -> cns_core::Result<MovingCutoff> {
    let m = 0.5 * c.length;
    MovingCutoff::new([m, m, m], c.cutoff_r_minus, c.cutoff_r_plus, c.cutoff_plateau, c.cutoff_c0)
}

/// Compute one report on a finished trajectory.
pub fn render_report(kind: ReportKind, traj: &TrajectoryRecord, config: &RunConfig, seed: Option<SeedSpec>) -> Result<Vec<Rendered>> {
    match kind {
        ReportKind::Residual => Ok(vec![json("reports/residual.json", &residual_check(traj)?)?]),
        ReportKind::Energy => Ok(vec![json("reports/energy.json", &energy_inequality(traj))?]),
        ReportKind::Curl => Ok(vec![json("reports/curl.json", &curl_compatibility(traj)?)?]),
        ReportKind::LedgerGlobal => {
            let split = duhamel_split(traj, traj.first_time())?;
            ledger_files("ledger_global", &global_enstrophy_ledger(&split, &ledger_window(traj))?)
        }
        ReportKind::LedgerLocal => {
            let split = duhamel_split(traj, traj.first_time())?;
            let l = local_enstrophy_ledger(&split, &local_cutoff(config)?, &ledger_window(traj))?;
            ledger_files("ledger_local", &l)
        }
        ReportKind::Pipeline => {
            let r = pipeline_main_estimate(traj, &PipelineParams::from_config(config, seed));
            Ok(vec![json("reports/pipeline.json", &r)?])
        }
    }
}

/// Compute the selected reports concurrently, then write them in a fixed
/// order through `writer`.
pub fn write_reports(
    writer: &mut ArtifactWriter,
    traj: &TrajectoryRecord,
    config: &RunConfig,
    seed: Option<SeedSpec>,
) -> Result<Vec<ReportStatus>> {
    let computed: Vec<(ReportKind, Result<Vec<Rendered>>)> = config
        .reports
        .par_iter()
        .map(|&k| (k, render_report(k, traj, config, seed)))
        .collect();
    let mut statuses = Vec::new();
    for (kind, res) in computed {
        let status = match res {
            Ok(files) => {
                let mut names = Vec::new();
                for f in files {
                    match f {
                        Rendered::Json(name, v) => {
                            writer.write_json(&name, &v)?;
                            names.push(name);
                        }
                        Rendered::Csv(name, text) => {
                            writer.write_text(&name, &text)?;
                            names.push(name);
                        }
                    }
                }
                ReportStatus {
                    report: kind.name().into(),
                    ok: true,
                    files: names,
                    error: None,
                }
            }
            Err(e) => ReportStatus {
                report: kind.name().into(),
                ok: false,
                files: Vec::new(),
                error: Some(e.to_string()),
            },
        };
        statuses.push(status);
    }
    writer.write_json("reports/index.json", &statuses)?;
    Ok(statuses)
}

/// Write the trajectory under `trajectory/` with a checked diagnostics CSV.
pub fn write_trajectory(writer: &mut ArtifactWriter, traj: &TrajectoryRecord) -> Result<()> {
    checked_diagnostics_csv(&traj.diagnostics, "trajectory/diagnostics.csv")?;
    let paths = traj.save(&writer.root().join("trajectory"))?;
    writer.adopt(&paths)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let c = &spec.config;
    let solver = c.solver()?;
    let u0 = c.initial_field()?;
    let mut writer = ArtifactWriter::create(&spec.out_dir)?;
    writer.write_text("config.cfg", &c.to_text())?;
    let outcome = run_recorded(&solver, &u0)?;
    write_trajectory(&mut writer, &outcome.record)?;
    let statuses = if let Some(h) = &outcome.halt {
        writer.write_json(
            "halt.json",
            &HaltRecord {
                message: h.to_string(),
                last_time: outcome.record.last_time(),
                snapshots: outcome.record.len(),
            },
        )?;
        Vec::new()
    } else {
        write_reports(&mut writer, &outcome.record, c, spec.seed_event)?
    };
    let manifest = writer.finish()?;
    Ok(ExperimentOutcome {
        manifest,
        statuses,
        halt: outcome.halt,
    })
}

/// Pipeline on a stored trajectory, written as `pipeline.json` plus manifest.
pub fn run_pipeline_on(traj_dir: &Path, out_dir: &Path, params: &PipelineParams) -> Result<(PipelineReport, Manifest)> {
    let traj = TrajectoryRecord::load(traj_dir)?;
    let report = pipeline_main_estimate(&traj, params);
    let mut writer = ArtifactWriter::create(out_dir)?;
    writer.write_json("pipeline.json", &report)?;
    let summary: String = report
        .stages()
        .iter()
        .map(|(name, status, reason)| match status {
            StageStatus::Completed => format!("{name}: completed\n"),
            StageStatus::Skipped => format!("{name}: skipped ({})\n", reason.unwrap_or("")),
        })
        .collect();
    writer.write_text("stages.txt", &summary)?;
    let manifest = writer.finish()?;
    Ok((report, manifest))
}
