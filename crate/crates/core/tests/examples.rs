// Every example is compiled into this test binary and run at a reduced size.

macro_rules! example {
    ($name:ident) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));
        }
    };
}

example!(simulate_campaign);
example!(som_basics);
example!(itm_resampling);
example!(phase_discovery);
example!(anomaly_monitoring);
example!(umatrix_export);
example!(model_persistence);

#[test]
fn simulate_campaign_writes_all_files() {
    let dir = tempfile::tempdir().unwrap();
    let c = simulate_campaign::run_example(dir.path(), 3, 2).unwrap();
    assert_eq!(c.train.batches().len(), 2);
    assert_eq!(c.validate.batches().len(), 5);
    for f in ["train.csv", "validate.csv", "train_truth.csv", "validate_truth.csv"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
}

#[test]
fn som_basics_improves_on_its_start() {
    let r = som_basics::run_example(6, 20).unwrap();
    assert!(r.final_qe < r.initial_qe);
    assert!((0.0..=1.0).contains(&r.final_te));
}

#[test]
fn itm_resampling_rebalances_the_stream() {
    let r = itm_resampling::run_example().unwrap();
    assert!(r.raw_ratio > 10.0 * r.node_ratio, "{} vs {}", r.raw_ratio, r.node_ratio);
    assert!(r.sweep.windows(2).all(|w| w[1].1 >= w[0].1));
}

#[test]
fn phase_discovery_runs_small() {
    let r = phase_discovery::run_example(10, 20, 2).unwrap();
    assert!(r.huls_clusters >= 1 && r.plain_clusters >= 1);
    assert!((0.0..=1.0).contains(&r.huls_purity));
}

#[test]
fn anomaly_monitoring_flags_fault_batches() {
    let s = anomaly_monitoring::run_example(12, 30, 2).unwrap();
    assert_eq!(s.len(), 6);
    let rate = |id: &str| s.iter().find(|b| b.batch == id).unwrap().alarm_rate();
    assert!(rate("E3") > rate("N1"));
}

#[test]
fn umatrix_export_writes_grids() {
    let dir = tempfile::tempdir().unwrap();
    let clusters = umatrix_export::run_example(dir.path(), 8).unwrap();
    assert_eq!(clusters.labels.len(), 64);
    let pgm = std::fs::read(dir.path().join("umatrix.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n8 8\n255\n"));
}

#[test]
fn model_persistence_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let report = model_persistence::run_example(dir.path(), 6, 10).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert!(dir.path().join("huls.json").is_file());
}
