use ntklab::harness::{run, ExperimentKind, SweepConfig};

fn small(kind: ExperimentKind) -> SweepConfig {
    let base = SweepConfig::default_for(kind);
    SweepConfig {
        sigma_w_sq: base.sigma_w_sq.into_iter().take(2).collect(),
        depths: vec![3, 5],
        width: 12,
        samples: 20,
        bootstrap: 50,
        epochs: 30,
        ..base
    }
}

#[test]
fn output_independent_of_worker_count() {
    for kind in [ExperimentKind::Dispersion, ExperimentKind::Nondiag, ExperimentKind::GdStep, ExperimentKind::Structure]
    {
        let cfg = small(kind);
        let one = run(&cfg, 1).unwrap().to_csv_string();
        let three = run(&cfg, 3).unwrap().to_csv_string();
        assert_eq!(one, three, "{kind:?}");
    }
}

#[test]
fn rerun_is_byte_identical_and_seed_matters() {
    let cfg = small(ExperimentKind::Dispersion);
    let a = run(&cfg, 2).unwrap().to_csv_string();
    assert_eq!(a, run(&cfg, 2).unwrap().to_csv_string());
    let other = SweepConfig { seed: 1, ..cfg };
    assert_ne!(a, run(&other, 2).unwrap().to_csv_string());
}

#[test]
fn config_round_trips_through_toml() {
    for kind in [
        ExperimentKind::Dispersion,
        ExperimentKind::Nondiag,
        ExperimentKind::GdStep,
        ExperimentKind::Structure,
        ExperimentKind::TheoryOnly,
    ] {
        let cfg = SweepConfig::default_for(kind);
        assert_eq!(SweepConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    }
}

#[test]
fn header_echoes_config() {
    let cfg = small(ExperimentKind::Dispersion);
    let csv = run(&cfg, 1).unwrap().to_csv_string();
    let header: Vec<&str> = csv.lines().take_while(|l| l.starts_with('#')).collect();
    assert!(header.iter().any(|l| l.contains("master_seed: 0")));
    assert!(header.iter().any(|l| l.contains("width = 12")));
    let body: Vec<&str> = csv.lines().skip(header.len()).collect();
    assert_eq!(body.len(), 1 + cfg.sigma_w_sq.len() * cfg.depths.len());
}

#[test]
fn theory_table_covers_schedules() {
    let cfg = SweepConfig::default_for(ExperimentKind::TheoryOnly);
    let t = run(&cfg, 1).unwrap();
    assert_eq!(t.rows.len(), cfg.schedules.len() * cfg.sigma_w_sq.len() * cfg.depths.len() * cfg.cosines.len());
}
