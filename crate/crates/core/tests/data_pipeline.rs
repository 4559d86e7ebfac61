use multidomain::dag::{DagScorer, ScoreParams};
use multidomain::data_io::{
    crossval_split, load_dataset, load_network, save_dataset, save_network, SplitMode,
    SIGNALING_TARGETS,
};
use multidomain::experiments::{cross_validate, learning_config, signaling_dataset};
use multidomain::{chain_rng, SamplerConfig};

#[test]
fn simulated_files_round_trip_with_identical_scores() {
    let dir = tempfile::tempdir().unwrap();
    let (bn, data) = signaling_dataset(3, 30, 1.0).unwrap();
    let csv = dir.path().join("d.csv");
    let net = dir.path().join("n.txt");
    save_dataset(&csv, &data).unwrap();
    save_network(&net, &bn.dag, &bn.arities).unwrap();
    let back = load_dataset(&csv).unwrap();
    let graph = load_network(&net).unwrap();
    assert_eq!(back.rows(), 270);
    assert_eq!(back.conditions(), data.conditions());
    assert_eq!(graph.dag, bn.dag);
    let p = ScoreParams::default();
    let a = DagScorer::new(data, p).score(&bn.dag);
    let b = DagScorer::new(back, p).score(&graph.dag);
    assert_eq!(a, b);
}

#[test]
fn each_condition_clamps_its_own_node() {
    let (_, data) = signaling_dataset(4, 20, 1.0).unwrap();
    let labels = data.conditions().unwrap();
    for r in 0..data.rows() {
        let target = SIGNALING_TARGETS[labels[r] as usize - 1];
        let mask = data.row_mask(r);
        assert!(mask[target]);
        assert_eq!(mask.iter().filter(|&&f| f).count(), 1);
    }
    let mut rng = chain_rng(0, 0);
    let folds = crossval_split(&data, 9, SplitMode::ByCondition, &mut rng).unwrap();
    assert!(folds.iter().all(|f| f.len() == 20));
}

#[test]
fn condition_crossval_produces_nine_records() {
    let (bn, data) = signaling_dataset(5, 30, 1.0).unwrap();
    let cfg = SamplerConfig {
        total_iters: 5_000,
        burn_in: 500,
        ..learning_config()
    };
    let mut rng = chain_rng(1, 0);
    let folds = cross_validate(
        &data,
        ScoreParams::default(),
        &cfg,
        9,
        SplitMode::ByCondition,
        0.5,
        Some(&bn.dag),
        &mut rng,
    )
    .unwrap();
    assert_eq!(folds.len(), 9);
    for f in &folds {
        assert_eq!(f.test_rows, 30);
        assert!(f.log_pred_mean.is_finite() && f.log_pred_dr.is_finite());
        assert!(f.tp.unwrap() + f.fp.unwrap() <= 110);
    }
}
