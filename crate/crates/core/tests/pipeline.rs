use huls::batchsim::{generate_campaign, ProcessConfig};
use huls::pipeline::{train_som, ModelDocument};
use huls::umatrix::watershed;
use huls::{
    compare_models, Dataset, Error, HulsModel, ItmGraph, Mode, NormalizationMethod,
    NormalizationParams, PipelineConfig, SomConfig, UMatrix,
};

fn small_config(seed: u64) -> PipelineConfig {
    PipelineConfig {
        som: SomConfig {
            rows: 8,
            cols: 8,
            epochs: 20,
            ..SomConfig::reference(seed)
        },
        beta: 0.05,
        ..PipelineConfig::reference(seed)
    }
}

fn campaign(seed: u64) -> huls::batchsim::Campaign {
    generate_campaign(2, 1, &[], &ProcessConfig::new(seed)).unwrap()
}

#[test]
fn composition_matches_manual_stages() {
    let camp = campaign(11);
    let cfg = small_config(11);
    let model = HulsModel::fit(&camp.train, &cfg, Mode::Huls).unwrap();

    let params = NormalizationParams::fit(&camp.train, NormalizationMethod::MinMax).unwrap();
    let data = params.apply(&camp.train).unwrap();
    let itm = ItmGraph::train(&data, cfg.beta).unwrap();
    let resampled = itm.resampled_set(data.feature_names()).unwrap();
    let (som, _) = train_som(&resampled, &cfg.som).unwrap();
    let u = UMatrix::compute(&som);
    let clusters = watershed(&u, &som, cfg.phi).unwrap();

    assert_eq!(model.itm.as_ref(), Some(&itm));
    assert_eq!(model.som, som);
    assert_eq!(model.umatrix, u);
    assert_eq!(model.clusters, clusters);
    assert_eq!(model.normalization, params);
}

#[test]
fn huls_trains_the_map_on_graph_nodes_only() {
    let camp = campaign(12);
    let model = HulsModel::fit(&camp.train, &small_config(12), Mode::Huls).unwrap();
    let itm = model.itm.as_ref().unwrap();
    assert_eq!(model.som_training_samples, itm.node_count());
    assert!(model.som_training_samples < camp.train.len());

    let plain = HulsModel::fit(&camp.train, &small_config(12), Mode::PlainSom).unwrap();
    assert!(plain.itm.is_none());
    assert_eq!(plain.som_training_samples, camp.train.len());
}

#[test]
fn huge_beta_keeps_only_the_initial_pair() {
    let camp = campaign(13);
    let cfg = PipelineConfig {
        beta: 10.0,
        ..small_config(13)
    };
    let model = HulsModel::fit(&camp.train, &cfg, Mode::Huls).unwrap();
    let itm = model.itm.unwrap();
    assert_eq!((itm.node_count(), itm.edge_count()), (2, 1));
    assert_eq!(model.som_training_samples, 2);
}

/// When the graph keeps every sample, resampling is the identity and both
/// modes train the same map on the same sequence.
#[test]
fn lossless_resampling_gives_identical_maps() {
    // points along a line, spaced well above beta, each beyond its predecessor
    let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i * i) as f64 * 0.01]).collect();
    let raw = Dataset::single_batch(vec!["a".into(), "b".into()], rows.concat(), "B").unwrap();
    let cfg = PipelineConfig {
        beta: 0.001,
        ..small_config(4)
    };
    let h = HulsModel::fit(&raw, &cfg, Mode::Huls).unwrap();
    assert_eq!(h.itm.as_ref().unwrap().node_count(), raw.len());
    let p = HulsModel::fit(&raw, &cfg, Mode::PlainSom).unwrap();
    assert_eq!(h.som, p.som);
    assert_eq!(h.clusters, p.clusters);
    assert_eq!(h.num_clusters(), p.num_clusters());
}

#[test]
fn saved_models_reload_bit_for_bit() {
    let camp = campaign(14);
    let model = HulsModel::fit(&camp.train, &small_config(14), Mode::Huls).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    model
        .save(&path, Some(serde_json::json!({"note": "fixture"})))
        .unwrap();
    let doc = ModelDocument::load(&path).unwrap();
    assert_eq!(doc.model, model);
    assert_eq!(doc.provenance.unwrap()["note"], "fixture");

    let again = dir.path().join("again.json");
    doc.model
        .save(&again, Some(serde_json::json!({"note": "fixture"})))
        .unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn foreign_documents_are_rejected() {
    let err = ModelDocument::from_json(r#"{"format":"other","version":1,"model":{}}"#).unwrap_err();
    assert!(matches!(err, Error::UnsupportedDocument { .. }), "{err}");
}

#[test]
fn comparison_rows_follow_their_models() {
    let camp = campaign(15);
    let cfg = small_config(15);
    let h = HulsModel::fit(&camp.train, &cfg, Mode::Huls).unwrap();
    let p = HulsModel::fit(&camp.train, &cfg, Mode::PlainSom).unwrap();
    let report = compare_models(&[("huls", &h), ("plain", &p)], &camp.validate).unwrap();
    assert_eq!(report.rows.len(), 2);
    for (row, m) in report.rows.iter().zip([&h, &p]) {
        assert_eq!(row.quantization_error, m.quantization_error(&camp.validate).unwrap());
        assert_eq!(row.topographic_error, m.topographic_error(&camp.validate).unwrap());
        assert_eq!(row.num_clusters, m.num_clusters());
    }
    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next(), Some("model,E_Q,E_T,num_clusters"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn scoring_data_with_other_columns_names_them() {
    let camp = campaign(16);
    let model = HulsModel::fit(&camp.train, &small_config(16), Mode::Huls).unwrap();
    let mut names = camp.validate.feature_names().to_vec();
    names.swap(0, 1);
    let renamed = Dataset::from_flat(names, camp.validate.values().to_vec(), camp.validate.batch_ids()).unwrap();
    let err = model.normalize(&renamed).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, Error::FeatureMismatch { .. }));
    assert!(msg.contains('P') && msg.contains('F'), "{msg}");
}

#[test]
fn validation_data_reuses_training_scaling() {
    let camp = campaign(17);
    let model = HulsModel::fit(&camp.train, &small_config(17), Mode::Huls).unwrap();
    let own = NormalizationParams::fit(&camp.train, NormalizationMethod::MinMax).unwrap();
    assert_eq!(model.normalization, own);
    let direct = own.apply(&camp.validate).unwrap();
    assert_eq!(model.normalize(&camp.validate).unwrap(), direct);
}

#[test]
fn raw_training_data_never_reaches_the_hybrid_map() {
    let camp = campaign(18);
    let cfg = small_config(18);
    let model = HulsModel::fit(&camp.train, &cfg, Mode::Huls).unwrap();
    let data = model.normalize(&camp.train).unwrap();
    // a map trained on the graph nodes equals the stored one; one trained on the raw set does not
    let nodes = model.itm.as_ref().unwrap().resampled_set(data.feature_names()).unwrap();
    assert_eq!(train_som(&nodes, &cfg.som).unwrap().0, model.som);
    assert_ne!(train_som(&data, &cfg.som).unwrap().0, model.som);
}
