use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cns_cli::artifacts::{export_json, ArtifactWriter};
use cns_cli::config::RunConfig;
use cns_cli::error::{CliError, Result};
use cns_cli::export::{checked_diagnostics_csv, export_ledger_csv};
use cns_cli::pipeline::{PipelineParams, SeedSpec};
use cns_cli::runner::{
    ledger_window, local_cutoff, run_experiment, run_pipeline_on, write_reports, ExperimentSpec,
};
use cns_cli::verify::{run_suite, Suite};
use cns_core::carleman::{global_enstrophy_ledger, local_enstrophy_ledger};
use cns_core::solver::{duhamel_split, TrajectoryRecord};

#[derive(Parser)]
#[command(name = "cns", version, about = "Navier-Stokes runs, diagnostics and report pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver and the reports selected by `reports`.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute reports on a stored trajectory.
    Analyze {
        #[arg(long)]
        traj: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the staged main-estimate pipeline on a stored trajectory (or on
    /// a fresh run of `--config` when `--traj` is absent).
    Pipeline {
        #[arg(long)]
        traj: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "seed-time")]
        seed_time: Option<f64>,
        /// Seed point as "x,y,z".
        #[arg(long = "seed-x")]
        seed_x: Option<String>,
        #[arg(long = "seed-N")]
        seed_n: Option<f64>,
    },
    /// Property checks on synthetic data.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long = "rng-seed", default_value_t = 0)]
        rng_seed: u64,
    },
    /// Write one table of a stored trajectory as CSV.
    Export {
        #[arg(long)]
        traj: PathBuf,
        /// diagnostics, ledger_global or ledger_local
        #[arg(long)]
        what: String,
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write the ledger as JSON next to the CSV.
        #[arg(long)]
        json: bool,
    },
}

/// Config file plus one flag per config key; flags win.
#[derive(Args, Default)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long = "L")]
    length: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long = "t_end", alias = "t-end")]
    t_end: Option<String>,
    #[arg(long = "dealias_fraction", alias = "dealias-fraction")]
    dealias_fraction: Option<String>,
    #[arg(long)]
    stride: Option<String>,
    #[arg(long = "initial_data", alias = "initial-data")]
    initial_data: Option<String>,
    #[arg(long)]
    amplitude: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long = "k_max", alias = "k-max")]
    k_max: Option<String>,
    #[arg(long)]
    width: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    reports: Option<String>,
    #[arg(long = "cutoff_r_minus", alias = "cutoff-r-minus")]
    cutoff_r_minus: Option<String>,
    #[arg(long = "cutoff_r_plus", alias = "cutoff-r-plus")]
    cutoff_r_plus: Option<String>,
    #[arg(long = "cutoff_plateau", alias = "cutoff-plateau")]
    cutoff_plateau: Option<String>,
    #[arg(long = "cutoff_c0", alias = "cutoff-c0")]
    cutoff_c0: Option<String>,
    #[arg(long = "chain_a", alias = "chain-a")]
    chain_a: Option<String>,
    #[arg(long = "chain_c0", alias = "chain-c0")]
    chain_c0: Option<String>,
    #[arg(long = "max_links", alias = "max-links")]
    max_links: Option<String>,
    #[arg(long = "epoch_span", alias = "epoch-span")]
    epoch_span: Option<String>,
    #[arg(long = "epoch_subdivisions", alias = "epoch-subdivisions")]
    epoch_subdivisions: Option<String>,
    #[arg(long = "annulus_r0", alias = "annulus-r0")]
    annulus_r0: Option<String>,
    #[arg(long = "annulus_kappa", alias = "annulus-kappa")]
    annulus_kappa: Option<String>,
    #[arg(long = "annulus_scales", alias = "annulus-scales")]
    annulus_scales: Option<String>,
    #[arg(long = "carleman_c0", alias = "carleman-c0")]
    carleman_c0: Option<String>,
    #[arg(long = "exponent_coefficient", alias = "exponent-coefficient")]
    exponent_coefficient: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let flags: [(&str, &Option<String>); 27] = [
            ("n", &self.n),
            ("L", &self.length),
            ("dt", &self.dt),
            ("t_end", &self.t_end),
            ("dealias_fraction", &self.dealias_fraction),
            ("stride", &self.stride),
            ("initial_data", &self.initial_data),
            ("amplitude", &self.amplitude),
            ("mode", &self.mode),
            ("k_max", &self.k_max),
            ("width", &self.width),
            ("seed", &self.seed),
            ("reports", &self.reports),
            ("cutoff_r_minus", &self.cutoff_r_minus),
            ("cutoff_r_plus", &self.cutoff_r_plus),
            ("cutoff_plateau", &self.cutoff_plateau),
            ("cutoff_c0", &self.cutoff_c0),
            ("chain_a", &self.chain_a),
            ("chain_c0", &self.chain_c0),
            ("max_links", &self.max_links),
            ("epoch_span", &self.epoch_span),
            ("epoch_subdivisions", &self.epoch_subdivisions),
            ("annulus_r0", &self.annulus_r0),
            ("annulus_kappa", &self.annulus_kappa),
            ("annulus_scales", &self.annulus_scales),
            ("carleman_c0", &self.carleman_c0),
            ("exponent_coefficient", &self.exponent_coefficient),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                c.set(k, v).map_err(|e| CliError::Validation(format!("--{k}: {e}")))?;
            }
        }
        Ok(c)
    }
}

fn seed_spec(t: Option<f64>, x: Option<&str>, n: Option<f64>) -> Result<Option<SeedSpec>> {
    match (t, x, n) {
        (None, None, None) => Ok(None),
        (Some(t), Some(x), Some(n)) => {
            let parts: Vec<f64> = x
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| CliError::Validation(format!("--seed-x: {e}")))?;
            let x: [f64; 3] = parts
                .try_into()
                .map_err(|_| CliError::Validation("--seed-x needs three comma-separated numbers".into()))?;
            Ok(Some(SeedSpec { t, x, n }))
        }
        _ => Err(CliError::Validation(
            "--seed-time, --seed-x and --seed-N go together".into(),
        )),
    }
}

fn print_manifest(root: &Path, files: usize) {
    println!("wrote {} files, manifest {}", files, root.join("manifest.json").display());
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate { cfg, out } => {
            let spec = ExperimentSpec {
                config: cfg.resolve()?,
                out_dir: out.clone(),
                seed_event: None,
            };
            let outcome = run_experiment(&spec)?;
            for s in &outcome.statuses {
                match &s.error {
                    None => println!("report {}: ok", s.report),
                    Some(e) => println!("report {}: failed ({e})", s.report),
                }
            }
            print_manifest(&out, outcome.manifest.files.len());
            if let Some(h) = outcome.halt {
                return Err(CliError::Core(h));
            }
            Ok(())
        }
        Command::Analyze { traj, cfg, out } => {
            let config = cfg.resolve()?;
            let record = TrajectoryRecord::load(&traj)?;
            let mut writer = ArtifactWriter::create(&out)?;
            writer.write_text("config.cfg", &config.to_text())?;
            for s in write_reports(&mut writer, &record, &config, None)? {
                match &s.error {
                    None => println!("report {}: ok", s.report),
                    Some(e) => println!("report {}: failed ({e})", s.report),
                }
            }
            let m = writer.finish()?;
            print_manifest(&out, m.files.len());
            Ok(())
        }
        Command::Pipeline {
            traj,
            cfg,
            out,
            seed_time,
            seed_x,
            seed_n,
        } => {
            let config = cfg.resolve()?;
            let seed = seed_spec(seed_time, seed_x.as_deref(), seed_n)?;
            let traj_dir = match traj {
                Some(t) => t,
                None => {
                    let mut c = config.clone();
                    c.reports.clear();
                    let run_dir = out.join("run");
                    let o = run_experiment(&ExperimentSpec {
                        config: c,
                        out_dir: run_dir.clone(),
                        seed_event: None,
                    })?;
                    if let Some(h) = o.halt {
                        return Err(CliError::Core(h));
                    }
                    run_dir.join("trajectory")
                }
            };
            let params = PipelineParams::from_config(&config, seed);
            let (report, manifest) = run_pipeline_on(&traj_dir, &out, &params)?;
            for (name, status, reason) in report.stages() {
                match reason {
                    None => println!("{name}: {status:?}"),
                    Some(r) => println!("{name}: {status:?} ({r})"),
                }
            }
            print_manifest(&out, manifest.files.len());
            Ok(())
        }
        Command::Verify { suite, rng_seed } => {
            let mut failed = 0;
            for s in Suite::parse(&suite)? {
                for c in run_suite(s, rng_seed)? {
                    println!("{}", c.line());
                    failed += usize::from(!c.passed);
                }
            }
            if failed > 0 {
                return Err(CliError::Validation(format!("{failed} check(s) failed")));
            }
            Ok(())
        }
        Command::Export {
            traj,
            what,
            cfg,
            out,
            json,
        } => {
            let config = cfg.resolve()?;
            let record = TrajectoryRecord::load(&traj)?;
            let ledger = match what.as_str() {
                "diagnostics" => {
                    let text = checked_diagnostics_csv(&record.diagnostics, &out.display().to_string())?;
                    return std::fs::write(&out, text).map_err(CliError::io(&out));
                }
                "ledger_global" => {
                    let split = duhamel_split(&record, record.first_time())?;
                    global_enstrophy_ledger(&split, &ledger_window(&record))?
                }
                "ledger_local" => {
                    let split = duhamel_split(&record, record.first_time())?;
                    local_enstrophy_ledger(&split, &local_cutoff(&config)?, &ledger_window(&record))?
                }
                other => {
                    return Err(CliError::Validation(format!(
                        "unknown table `{other}` (diagnostics, ledger_global, ledger_local)"
                    )))
                }
            };
            export_ledger_csv(&ledger, &out)?;
            if json {
                export_json(&ledger, &out.with_extension("json"))?;
            }
            Ok(())
        }
    }
}

fn thread_pool() -> Result<()> {
    let Ok(v) = std::env::var("CNS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("CNS_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match thread_pool().and_then(|_| execute(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
