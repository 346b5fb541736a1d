use cns_cli::artifacts::{export_json, import_json, json_text};
use cns_cli::export::{checked_diagnostics_csv, ledger_table, LedgerTable};
use cns_cli::CliError;
use cns_core::carleman::{EnstrophyLedger, LedgerVariant};
use cns_core::solver::Diagnostics;
use proptest::prelude::*;

fn ledger(rows: usize) -> EnstrophyLedger {
    let names: Vec<String> = (1..=6).map(|i| format!("Y{i}")).collect();
    EnstrophyLedger {
        variant: LedgerVariant::Global,
        t_ref: 0.0,
        term_names: names,
        signs: vec![-1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
        sample_times: (0..rows).map(|k| k as f64).collect(),
        sample_energy: vec![1.0; rows],
        times: (0..rows).map(|k| 0.1 * k as f64).collect(),
        energy: (0..rows).map(|k| 1.0 + k as f64).collect(),
        terms: (0..rows).map(|k| (0..6).map(|i| (k * 6 + i) as f64 / 7.0).collect()).collect(),
        fd_dedt: vec![0.25; rows],
        defect: vec![-1e-9; rows],
        dealias_remainder: None,
        cutoff: None,
    }
}

#[test]
fn empty_ledger_is_header_only() {
    let csv = ledger_table(&ledger(0)).to_csv("empty").unwrap();
    assert_eq!(csv, "time,E,Y1,Y2,Y3,Y4,Y5,Y6,fd_dEdt,defect\n");
    let back = LedgerTable::parse(&csv, "empty").unwrap();
    assert!(back.rows.is_empty());
}

#[test]
fn one_row_parses_back_equal() {
    let t = ledger_table(&ledger(1));
    assert_eq!(LedgerTable::parse(&t.to_csv("one").unwrap(), "one").unwrap(), t);
}

#[test]
fn nan_is_named_by_field() {
    let mut l = ledger(3);
    l.terms[2][3] = f64::NAN;
    match ledger_table(&l).to_csv("ledger.csv") {
        Err(CliError::NonFinite { field, .. }) => assert_eq!(field, "Y4[2]"),
        other => panic!("{other:?}"),
    }
    let mut d = Diagnostics::default();
    d.l3_norm = f64::INFINITY;
    match checked_diagnostics_csv(&[Diagnostics::default(), d], "diag") {
        Err(CliError::NonFinite { field, .. }) => assert_eq!(field, "l3_norm[1]"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn json_refuses_non_finite_and_roundtrips() {
    let l = ledger(4);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("l.json");
    export_json(&l, &p).unwrap();
    let back: EnstrophyLedger = import_json(&p).unwrap();
    assert_eq!(back, l);
    let mut bad = l;
    bad.fd_dedt[1] = f64::NAN;
    match json_text(&bad, "bad") {
        Err(CliError::NonFinite { field, .. }) => assert_eq!(field, "fd_dedt[1]"),
        other => panic!("{other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn csv_is_bit_exact(cells in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 10..60)) {
        let rows: Vec<Vec<f64>> = cells.chunks_exact(10).map(|c| c.to_vec()).collect();
        let t = LedgerTable { header: ledger_table(&ledger(0)).header, rows };
        let back = LedgerTable::parse(&t.to_csv("p").unwrap(), "p").unwrap();
        prop_assert_eq!(back.rows.len(), t.rows.len());
        for (a, b) in back.rows.iter().flatten().zip(t.rows.iter().flatten()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
