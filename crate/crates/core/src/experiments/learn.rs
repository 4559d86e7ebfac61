//! Structure learning on a dataset: variant comparison and held-out
//! predictive evaluation.

use rand::Rng;
use serde::Serialize;

use super::bn::{run_bn, BnRun};
use crate::dag::{Dag, DagScorer, DiscreteDataset, ScoreParams};
use crate::data_io::{
    complement, crossval_split, dr_log_probability, score_vs_reference, signaling_network,
    GroundTruthBn, PredictiveModel, SplitMode, SIGNALING_TARGETS,
};
use crate::error::Result;
use crate::rng::chain_rng;
use crate::sampler::{SamplerConfig, Variant};

/// Sampler settings for learning on data sets of moderate size.
pub fn learning_config() -> SamplerConfig {
    SamplerConfig {
        levels: 20,
        delta_h: 10.0,
        p_mx: 0.1,
        max_modes: 10,
        ..Default::default()
    }
}

/// Ternary data on the eleven-node signalling network: nine conditions of
/// `rows_per_condition` rows, each clamping a different node. Table columns
/// are Dirichlet with the given concentration.
pub fn signaling_dataset(
    seed: u64,
    rows_per_condition: usize,
    concentration: f64,
) -> Result<(GroundTruthBn, DiscreteDataset)> {
    let mut rng = chain_rng(seed, 1 << 33);
    let bn = GroundTruthBn::random_tables(signaling_network(), vec![3; 11], concentration, &mut rng)?;
    let data = bn.simulate_conditions(&SIGNALING_TARGETS, rows_per_condition, &mut rng)?;
    Ok((bn, data))
}

/// `cfg` adjusted to a variant: mixed jumps only for the full sampler.
pub fn variant_config(base: &SamplerConfig, variant: Variant) -> SamplerConfig {
    let mut cfg = base.clone();
    cfg.variant = variant;
    if variant != Variant::Md {
        cfg.p_mx = 0.0;
    }
    cfg
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantRun {
    pub variant: Variant,
    pub rep: u64,
    pub best_score: f64,
    pub best: Dag,
    pub modes: usize,
}

/// Best-found log posterior of each variant over `reps` chains.
pub fn compare_variants(
    scorer: &DagScorer,
    base: &SamplerConfig,
    variants: &[Variant],
    reps: u64,
) -> Result<Vec<VariantRun>> {
    let mut out = Vec::new();
    for &variant in variants {
        let cfg = variant_config(base, variant);
        for rep in 0..reps {
            let run = run_bn(scorer, &cfg, rep)?;
            out.push(VariantRun {
                variant,
                rep,
                best_score: run.best_score,
                modes: run.modes.len(),
                best: run.best,
            });
        }
    }
    Ok(out)
}

/// Held-out evaluation of one fold.
#[derive(Debug, Clone, Serialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub test_rows: usize,
    pub threshold: f64,
    pub tp: Option<usize>,
    pub fp: Option<usize>,
    pub log_pred_mean: f64,
    pub log_pred_dr: f64,
    pub best_score: f64,
}

/// Predictive log probabilities of `test` under the mean network and under
/// the domain mixture of local networks, both thresholded at `c`.
pub fn predictive_scores(run: &BnRun, train: &DiscreteDataset, test: &DiscreteDataset, c: f64, alpha: f64) -> (f64, f64) {
    let mean = PredictiveModel::new(&run.mean_network(c), train, alpha);
    let locals: Vec<(f64, PredictiveModel)> = run
        .local_networks(c)
        .into_iter()
        .map(|(l, g)| (l, PredictiveModel::new(&g, train, alpha)))
        .collect();
    let comps: Vec<(f64, &PredictiveModel)> = locals.iter().map(|(l, p)| (*l, p)).collect();
    (mean.log_probability(test), dr_log_probability(test, &comps))
}

/// Train on all folds but one, evaluate on the held-out fold, for every
/// fold.
#[allow(clippy::too_many_arguments)]
pub fn cross_validate<R: Rng + ?Sized>(
    data: &DiscreteDataset,
    params: ScoreParams,
    cfg: &SamplerConfig,
    folds: usize,
    mode: SplitMode,
    c: f64,
    reference: Option<&Dag>,
    rng: &mut R,
) -> Result<Vec<FoldRecord>> {
    let split = crossval_split(data, folds, mode, rng)?;
    let mut out = Vec::with_capacity(split.len());
    for (f, held) in split.iter().enumerate() {
        let train = data.subset(&complement(data.rows(), held));
        let test = data.subset(held);
        let scorer = DagScorer::new(train.clone(), params);
        let run = run_bn(&scorer, cfg, f as u64)?;
        let (log_pred_mean, log_pred_dr) = predictive_scores(&run, &train, &test, c, params.alpha);
        let counts = reference.map(|r| score_vs_reference(&run.mean_network(c), r));
        out.push(FoldRecord {
            fold: f,
            test_rows: held.len(),
            threshold: c,
            tp: counts.map(|e| e.tp),
            fp: counts.map(|e| e.fp),
            log_pred_mean,
            log_pred_dr,
            best_score: run.best_score,
        });
    }
    Ok(out)
}
