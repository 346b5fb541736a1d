use std::fs;
use std::path::Path;

use cns_core::carleman::EnstrophyLedger;
use cns_core::solver::{diagnostics_csv, Diagnostics};

use crate::error::{CliError, Result};

/// Rows of a ledger CSV: `time, E, Y1..Yk, fd_dEdt, defect`.
#[derive(Clone, Debug, PartialEq)]
pub struct LedgerTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn ledger_header(ledger: &EnstrophyLedger) -> Vec<String> {
    let mut h = vec!["time".to_string(), "E".to_string()];
    h.extend(ledger.term_names.iter().cloned());
    h.push("fd_dEdt".into());
    h.push("defect".into());
    h
}

pub fn ledger_table(ledger: &EnstrophyLedger) -> LedgerTable {
    let rows = (0..ledger.times.len())
        .map(|k| {
            let mut r = vec![ledger.times[k], ledger.energy[k]];
            r.extend(ledger.terms[k].iter().copied());
            r.push(ledger.fd_dedt[k]);
            r.push(ledger.defect[k]);
            r
        })
        .collect();
    LedgerTable {
        header: ledger_header(ledger),
        rows,
    }
}

impl LedgerTable {
    /// CSV with every float at 17 significant digits; a non-finite cell is
    /// refused and named by column and row.
    pub fn to_csv(&self, context: &str) -> Result<String> {
        let mut s = self.header.join(",");
        s.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.header.len() {
                return Err(CliError::Validation(format!(
                    "{context}: row {i} has {} cells, header has {}",
                    row.len(),
                    self.header.len()
                )));
            }
            if let Some(c) = row.iter().position(|v| !v.is_finite()) {
                return Err(CliError::NonFinite {
                    context: context.to_string(),
                    field: format!("{}[{i}]", self.header[c]),
                });
            }
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        Ok(s)
    }

    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| CliError::Validation(format!("{context}: empty file")))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let row: std::result::Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
            let row = row.map_err(|e| CliError::Validation(format!("{context}: line {}: {e}", i + 2)))?;
            if row.len() != header.len() {
                return Err(CliError::Validation(format!("{context}: line {} has {} cells", i + 2, row.len())));
            }
            rows.push(row);
        }
        Ok(LedgerTable { header, rows })
    }
}

pub fn export_ledger_csv(ledger: &EnstrophyLedger, path: &Path) -> Result<()> {
    let text = ledger_table(ledger).to_csv(&path.display().to_string())?;
    fs::write(path, text).map_err(CliError::io(path))
}

/// The core diagnostics CSV, refused if any cell is non-finite.
pub fn checked_diagnostics_csv(rows: &[Diagnostics], context: &str) -> Result<String> {
    for (i, d) in rows.iter().enumerate() {
        let cells = [
            ("time", d.time),
            ("energy", d.energy),
            ("enstrophy", d.enstrophy),
            ("l3_norm", d.l3_norm),
            ("linf_norm", d.linf_norm),
            ("total_speed_accum", d.total_speed_accum),
            ("dissipation_accum", d.dissipation_accum),
        ];
        if let Some((name, _)) = cells.iter().find(|(_, v)| !v.is_finite()) {
            return Err(CliError::NonFinite {
                context: context.to_string(),
                field: format!("{name}[{i}]"),
            });
        }
    }
    Ok(diagnostics_csv(rows))
}
