use multidomain::dag::{Dag, DagScorer, ScoreParams};
use multidomain::data_io::{chain_network, GroundTruthBn};
use multidomain::experiments::{compare_with_oracle, run_bn, variant_config, BnStudySpec, StudyNetwork};
use multidomain::oracle::ExactLandscape;
use multidomain::{chain_rng, SamplerConfig, Variant};

fn four_node_scorer(seed: u64) -> DagScorer {
    let mut rng = chain_rng(seed, 0);
    let bn = GroundTruthBn::random_tables(chain_network(4), vec![2; 4], 1.0, &mut rng).unwrap();
    DagScorer::new(bn.simulate(200, 0.1, &mut rng).unwrap(), ScoreParams::default())
}

fn config(total: u64) -> SamplerConfig {
    SamplerConfig {
        levels: 10,
        delta_h: 5.0,
        total_iters: total,
        burn_in: total / 10,
        seed: 3,
        ..SamplerConfig::default()
    }
}

#[test]
fn four_node_estimates_agree_with_enumeration() {
    let scorer = four_node_scorer(1);
    let land = ExactLandscape::build(&scorer).unwrap();
    assert_eq!(land.len(), 543);
    for variant in [Variant::Md, Variant::Md0, Variant::Wl] {
        let run = run_bn(&scorer, &variant_config(&config(300_000), variant), 0).unwrap();
        let cmp = compare_with_oracle(&run, &land, 1e-3);
        assert_eq!(cmp.missed, 0, "{variant}");
        assert_eq!(cmp.spurious, 0, "{variant}");
        assert!(cmp.log_lambda_mse < 0.05, "{variant}: {}", cmp.log_lambda_mse);
        assert!(cmp.a_mse < 1e-3, "{variant}: {}", cmp.a_mse);
        assert!((run.dr.lambda_sum() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn best_found_graph_is_the_global_maximum() {
    let scorer = four_node_scorer(2);
    let land = ExactLandscape::build(&scorer).unwrap();
    let run = run_bn(&scorer, &config(50_000), 0).unwrap();
    assert_eq!(run.best, land.modes[0].dag);
    assert!((run.best_score - land.modes[0].log_score).abs() < 1e-9);
}

#[test]
fn local_networks_carry_all_mass() {
    let scorer = four_node_scorer(3);
    let run = run_bn(&scorer, &config(50_000), 0).unwrap();
    let locals = run.local_networks(0.5);
    let total: f64 = locals.iter().map(|(l, _)| l).sum();
    assert!((total - 1.0).abs() < 1e-12);
    for (_, g) in &locals {
        assert_eq!(g.nodes(), 4);
    }
    assert!(run.mean_network(1.5).edges().is_empty());
}

#[test]
fn study_datasets_are_reproducible() {
    let spec = BnStudySpec::new(StudyNetwork::Chain, 9);
    let (a, da) = spec.dataset(2).unwrap();
    let (b, db) = spec.dataset(2).unwrap();
    assert_eq!(a.dag, b.dag);
    assert_eq!(da.rows(), 500);
    assert_eq!(da.column(0), db.column(0));
    let fixed = (0..da.rows()).filter(|&r| da.row_mask(r).iter().any(|&f| f)).count();
    assert_eq!(fixed, 100);
    let (_, other) = spec.dataset(3).unwrap();
    assert_ne!(da.column(0), other.column(0));
}

#[test]
fn chain_runs_start_from_the_empty_graph() {
    let scorer = four_node_scorer(4);
    let run = run_bn(&scorer, &config(2_000), 0).unwrap();
    assert!(run.modes.contains(&multidomain::dag::sna_mode(&scorer, &Dag::empty(4))));
}
