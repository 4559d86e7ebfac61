//! Average number of local modes of the exact landscape over many simulated
//! six-node datasets. Slow (enumeration of 3.6M graphs per dataset); run with
//! `cargo test --release -- --ignored`.

use multidomain::dag::{DagScorer, ScoreParams};
use multidomain::experiments::{BnStudySpec, StudyNetwork};
use multidomain::oracle::ExactLandscape;

fn average_modes(network: StudyNetwork, datasets: u64) -> f64 {
    let spec = BnStudySpec::new(network, 50);
    let total: usize = (0..datasets)
        .map(|d| {
            let (_, data) = spec.dataset(d).unwrap();
            ExactLandscape::build(&DagScorer::new(data, ScoreParams::default()))
                .unwrap()
                .modes
                .len()
        })
        .sum();
    total as f64 / datasets as f64
}

#[test]
#[ignore]
fn chain_landscapes_have_few_modes() {
    let avg = average_modes(StudyNetwork::Chain, 50);
    assert!((avg - 3.57).abs() <= 1.0, "average {avg}");
}

#[test]
#[ignore]
fn example_landscapes_have_several_modes() {
    let avg = average_modes(StudyNetwork::Example, 50);
    assert!((avg - 7.06).abs() <= 1.0, "average {avg}");
}
