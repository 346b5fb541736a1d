use std::f64::consts::PI;
use std::path::Path;

use cns_cli::config::{InitialData, ReportKind, RunConfig};
use cns_cli::CliError;
use proptest::prelude::*;

#[test]
fn pi_forms_and_reports_list() {
    let mut c = RunConfig::default();
    c.set("L", "2pi").unwrap();
    assert_eq!(c.length, 2.0 * PI);
    c.set("L", "pi/2").unwrap();
    assert_eq!(c.length, PI / 2.0);
    c.set("width", "0.5*pi").unwrap();
    assert_eq!(c.width, 0.5 * PI);
    c.set("reports", "energy, residual,energy,pipeline").unwrap();
    assert_eq!(c.reports, vec![ReportKind::Residual, ReportKind::Energy, ReportKind::Pipeline]);
    c.set("reports", "none").unwrap();
    assert!(c.reports.is_empty());
    c.set("dealias", "0.5").unwrap();
    assert_eq!(c.dealias_fraction, 0.5);
    assert!(c.set("bogus", "1").unwrap_err().contains("unknown key"));
    assert!(c.set("n", "3.5").is_err());
    assert!(c.set("initial_data", "vortex").is_err());
}

#[test]
fn file_errors_carry_line_numbers() {
    let mut c = RunConfig::default();
    let text = "# header\nn = 16\n\ndt = 0.02 # trailing\ninitial_data = shear\n";
    c.merge_text(text, Path::new("a.cfg")).unwrap();
    assert_eq!((c.n, c.dt, c.initial_data), (16, 0.02, InitialData::Shear));
    match c.merge_text("n = 8\njunk line\n", Path::new("b.cfg")) {
        Err(CliError::Config { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    match c.merge_text("\n\n\ndt = fast\n", Path::new("c.cfg")) {
        Err(CliError::Config { line, reason, .. }) => {
            assert_eq!(line, 4);
            assert!(reason.contains("dt"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn invalid_solver_settings_are_validation_errors() {
    let mut c = RunConfig::default();
    c.dt = -1.0;
    assert!(c.solver().is_err());
    let mut c = RunConfig::default();
    c.n = 3;
    assert!(c.grid().is_err());
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    (
        (4usize..64, 0.1f64..20.0, 1e-5f64..0.5, 0.0f64..3.0, 0.1f64..1.0),
        (1usize..8, 0usize..4, 0.0f64..10.0, 1u32..4, any::<u64>()),
        (prop::collection::vec(0usize..6, 0..6), 0.01f64..1.0, 1.0f64..5.0, 0usize..20),
    )
        .prop_map(|((n, l, dt, t_end, dealias), (stride, init, amp, mode, seed), (reports, r0, kappa, links))| {
            let mut c = RunConfig::default();
            c.n = n;
            c.length = l;
            c.dt = dt;
            c.t_end = t_end;
            c.dealias_fraction = dealias;
            c.stride = stride;
            c.initial_data = [InitialData::TaylorGreen, InitialData::Shear, InitialData::Random, InitialData::Zero][init];
            c.amplitude = amp;
            c.mode = mode;
            c.seed = seed;
            let mut r: Vec<ReportKind> = reports.into_iter().map(|i| ReportKind::ALL[i]).collect();
            r.sort();
            r.dedup();
            c.reports = r;
            c.annulus_r0 = r0;
            c.annulus_kappa = kappa;
            c.max_links = links;
            c
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_roundtrip_is_exact(c in arb_config()) {
        let mut back = RunConfig::default();
        back.merge_text(&c.to_text(), Path::new("rt.cfg")).unwrap();
        prop_assert_eq!(back, c);
    }
}
