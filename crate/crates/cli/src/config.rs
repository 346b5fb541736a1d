use std::f64::consts::PI;
use std::path::Path;

use cns_core::solver::{random_enveloped, shear_flow, taylor_green, RandomFieldSpec, SolverConfig};
use cns_core::spectral::{Grid3, SpectralField};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    TaylorGreen,
    Shear,
    Random,
    Zero,
}

impl InitialData {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "taylor_green" => Some(InitialData::TaylorGreen),
            "shear" => Some(InitialData::Shear),
            "random" => Some(InitialData::Random),
            "zero" => Some(InitialData::Zero),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitialData::TaylorGreen => "taylor_green",
            InitialData::Shear => "shear",
            InitialData::Random => "random",
            InitialData::Zero => "zero",
        }
    }
}

/// Reports a run can produce besides the trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Residual,
    Energy,
    Curl,
    LedgerGlobal,
    LedgerLocal,
    Pipeline,
}

impl ReportKind {
    pub const ALL: [ReportKind; 6] = [
        ReportKind::Residual,
        ReportKind::Energy,
        ReportKind::Curl,
        ReportKind::LedgerGlobal,
        ReportKind::LedgerLocal,
        ReportKind::Pipeline,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ReportKind::Residual => "residual",
            ReportKind::Energy => "energy",
            ReportKind::Curl => "curl",
            ReportKind::LedgerGlobal => "ledger_global",
            ReportKind::LedgerLocal => "ledger_local",
            ReportKind::Pipeline => "pipeline",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Every setting of a run. Keys match the config file and the `--key`
/// flags one to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub dt: f64,
    pub t_end: f64,
    pub dealias_fraction: f64,
    pub stride: usize,
    pub initial_data: InitialData,
    pub amplitude: f64,
    pub mode: u32,
    pub k_max: f64,
    pub width: f64,
    pub seed: u64,
    pub reports: Vec<ReportKind>,

    /// Local ledger cutoff: centre defaults to the box centre.
    pub cutoff_r_minus: f64,
    pub cutoff_r_plus: f64,
    pub cutoff_plateau: f64,
    pub cutoff_c0: f64,

    pub chain_a: f64,
    pub chain_c0: f64,
    pub max_links: usize,
    pub epoch_span: f64,
    pub epoch_subdivisions: usize,
    pub annulus_r0: f64,
    pub annulus_kappa: f64,
    pub annulus_scales: usize,
    pub carleman_c0: f64,
    pub exponent_coefficient: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 32,
            length: 2.0 * PI,
            dt: 0.01,
            t_end: 0.1,
            dealias_fraction: 2.0 / 3.0,
            stride: 1,
            initial_data: InitialData::TaylorGreen,
            amplitude: 1.0,
            mode: 1,
            k_max: 4.0,
            width: 1.0,
            seed: 0,
            reports: vec![ReportKind::Residual, ReportKind::Energy],
            cutoff_r_minus: 0.5,
            cutoff_r_plus: 2.8,
            cutoff_plateau: 0.5,
            cutoff_c0: 1.0,
            chain_a: 2.0,
            chain_c0: 2.0,
            max_links: 8,
            epoch_span: 1.0,
            epoch_subdivisions: 3,
            annulus_r0: 0.15,
            annulus_kappa: 20.0,
            annulus_scales: 1,
            carleman_c0: 1.0,
            exponent_coefficient: cns_core::carleman::DEFAULT_EXPONENT_COEFFICIENT,
        }
    }
}

/// Reals may be written with a `pi` factor: `2pi`, `pi/2`, `0.5*pi`.
fn parse_real(v: &str) -> Option<f64> {
    let v = v.trim();
    if let Ok(x) = v.parse::<f64>() {
        return Some(x);
    }
    let (num, den) = match v.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim().parse::<f64>().ok()?),
        None => (v, 1.0),
    };
    let coef = num.strip_suffix("pi")?.trim().trim_end_matches('*').trim();
    let c = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().ok()? };
    Some(c * PI / den)
}

fn parse_as<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
    v.trim()
        .parse::<T>()
        .map_err(|_| format!("`{key}` expects {}, got `{v}`", std::any::type_name::<T>()))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let real = |v: &str| parse_real(v).ok_or_else(|| format!("`{key}` expects a number, got `{v}`"));
        match key {
            "n" => self.n = parse_as(key, value)?,
            "L" => self.length = real(value)?,
            "dt" => self.dt = real(value)?,
            "t_end" => self.t_end = real(value)?,
            "dealias_fraction" | "dealias" => self.dealias_fraction = real(value)?,
            "stride" => self.stride = parse_as(key, value)?,
            "initial_data" => {
                self.initial_data = InitialData::parse(value.trim())
                    .ok_or_else(|| format!("unknown initial_data `{value}`"))?
            }
            "amplitude" => self.amplitude = real(value)?,
            "mode" => self.mode = parse_as(key, value)?,
            "k_max" => self.k_max = real(value)?,
            "width" => self.width = real(value)?,
            "seed" => self.seed = parse_as(key, value)?,
            "reports" => {
                let mut r = Vec::new();
                for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    if item == "none" {
                        continue;
                    }
                    r.push(ReportKind::parse(item).ok_or_else(|| format!("unknown report `{item}`"))?);
                }
                r.sort();
                r.dedup();
                self.reports = r;
            }
            "cutoff_r_minus" => self.cutoff_r_minus = real(value)?,
            "cutoff_r_plus" => self.cutoff_r_plus = real(value)?,
            "cutoff_plateau" => self.cutoff_plateau = real(value)?,
            "cutoff_c0" => self.cutoff_c0 = real(value)?,
            "chain_a" => self.chain_a = real(value)?,
            "chain_c0" => self.chain_c0 = real(value)?,
            "max_links" => self.max_links = parse_as(key, value)?,
            "epoch_span" => self.epoch_span = real(value)?,
            "epoch_subdivisions" => self.epoch_subdivisions = parse_as(key, value)?,
            "annulus_r0" => self.annulus_r0 = real(value)?,
            "annulus_kappa" => self.annulus_kappa = real(value)?,
            "annulus_scales" => self.annulus_scales = parse_as(key, value)?,
            "carleman_c0" => self.carleman_c0 = real(value)?,
            "exponent_coefficient" => self.exponent_coefficient = real(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Apply `key = value` lines on top of `self`. `#` starts a comment.
    pub fn merge_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| CliError::Config {
                path: path.to_path_buf(),
                line: i + 1,
                reason,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            self.set(k.trim(), v.trim()).map_err(err)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let mut c = RunConfig::default();
        c.merge_text(&text, path)?;
        Ok(c)
    }

    /// The config as `key = value` text that `merge_text` reads back.
    pub fn to_text(&self) -> String {
        let reports: Vec<&str> = self.reports.iter().map(|r| r.name()).collect();
        let reports = if reports.is_empty() { "none".to_string() } else { reports.join(",") };
        let rows: Vec<(&str, String)> = vec![
            ("n", self.n.to_string()),
            ("L", format!("{:.17e}", self.length)),
            ("dt", format!("{:.17e}", self.dt)),
            ("t_end", format!("{:.17e}", self.t_end)),
            ("dealias_fraction", format!("{:.17e}", self.dealias_fraction)),
            ("stride", self.stride.to_string()),
            ("initial_data", self.initial_data.name().to_string()),
            ("amplitude", format!("{:.17e}", self.amplitude)),
            ("mode", self.mode.to_string()),
            ("k_max", format!("{:.17e}", self.k_max)),
            ("width", format!("{:.17e}", self.width)),
            ("seed", self.seed.to_string()),
            ("reports", reports),
            ("cutoff_r_minus", format!("{:.17e}", self.cutoff_r_minus)),
            ("cutoff_r_plus", format!("{:.17e}", self.cutoff_r_plus)),
            ("cutoff_plateau", format!("{:.17e}", self.cutoff_plateau)),
            ("cutoff_c0", format!("{:.17e}", self.cutoff_c0)),
            ("chain_a", format!("{:.17e}", self.chain_a)),
            ("chain_c0", format!("{:.17e}", self.chain_c0)),
            ("max_links", self.max_links.to_string()),
            ("epoch_span", format!("{:.17e}", self.epoch_span)),
            ("epoch_subdivisions", self.epoch_subdivisions.to_string()),
            ("annulus_r0", format!("{:.17e}", self.annulus_r0)),
            ("annulus_kappa", format!("{:.17e}", self.annulus_kappa)),
            ("annulus_scales", self.annulus_scales.to_string()),
            ("carleman_c0", format!("{:.17e}", self.carleman_c0)),
            ("exponent_coefficient", format!("{:.17e}", self.exponent_coefficient)),
        ];
        rows.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn grid(&self) -> Result<Grid3> {
        Ok(Grid3::new(self.n, self.length)?)
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        let c = SolverConfig::new(self.grid()?, self.dt, self.t_end)
            .with_stride(self.stride)
            .with_dealias(self.dealias_fraction);
        c.validate()?;
        Ok(c)
    }

    pub fn initial_field(&self) -> Result<SpectralField> {
        let g = self.grid()?;
        Ok(match self.initial_data {
            InitialData::TaylorGreen => taylor_green(g, self.amplitude),
            InitialData::Shear => shear_flow(g, self.amplitude, self.mode),
            InitialData::Zero => SpectralField::zeros(g, 3),
            InitialData::Random => {
                let c = 0.5 * self.length;
                let spec = RandomFieldSpec {
                    k_max: self.k_max,
                    center: [c, c, c],
                    width: self.width,
                    amplitude: self.amplitude,
                    seed: self.seed,
                };
                random_enveloped(g, spec, self.dealias_fraction)?
            }
        })
    }
}
