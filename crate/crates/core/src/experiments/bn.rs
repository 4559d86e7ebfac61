//! Network-structure studies: simulated data against the exact oracle, and
//! learning summaries for a given dataset.

use serde::Serialize;

use crate::dag::{Dag, DagModel, DagScorer, DiscreteDataset};
use crate::data_io::{chain_network, example_network, threshold_network, GroundTruthBn};
use crate::diagnostics::DiagnosticsThresholds;
use crate::error::{Error, Result};
use crate::estimation::{DomainRepresentation, DrAccumulator, Payload};
use crate::oracle::ExactLandscape;
use crate::rng::chain_rng;
use crate::sampler::{MdSampler, SamplerConfig, SamplerReport};

/// Stream offset separating data simulation from sampler chains.
const DATA_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyNetwork {
    Chain,
    Example,
}

impl std::str::FromStr for StudyNetwork {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Self::Chain),
            "graph" | "example" => Ok(Self::Example),
            other => Err(Error::InvalidConfig(format!("unknown network {other:?}"))),
        }
    }
}

impl StudyNetwork {
    pub fn dag(self) -> Dag {
        match self {
            Self::Chain => chain_network(6),
            Self::Example => example_network(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BnStudySpec {
    pub network: StudyNetwork,
    pub rows: usize,
    pub intervention_fraction: f64,
    /// Dirichlet concentration of every table column.
    pub concentration: f64,
    pub seed: u64,
}

impl BnStudySpec {
    pub fn new(network: StudyNetwork, seed: u64) -> Self {
        Self {
            network,
            rows: 500,
            intervention_fraction: 0.2,
            concentration: 0.5,
            seed,
        }
    }

    /// Dataset `index`: fresh tables and rows from the study network.
    pub fn dataset(&self, index: u64) -> Result<(GroundTruthBn, DiscreteDataset)> {
        let mut rng = chain_rng(self.seed, DATA_STREAM + index);
        let dag = self.network.dag();
        let arities = vec![2; dag.nodes()];
        let bn = GroundTruthBn::random_tables(dag, arities, self.concentration, &mut rng)?;
        let data = bn.simulate(self.rows, self.intervention_fraction, &mut rng)?;
        Ok((bn, data))
    }
}

/// Output of one sampler run on a DAG space.
#[derive(Debug, Clone, Serialize)]
pub struct BnRun {
    /// Recorded modes; entry `k - 1` is domain `k`.
    pub modes: Vec<Dag>,
    pub mode_scores: Vec<f64>,
    pub dr: DomainRepresentation,
    pub best: Dag,
    pub best_score: f64,
    pub report: SamplerReport,
}

impl BnRun {
    pub fn nodes(&self) -> usize {
        self.best.nodes()
    }

    /// Estimated overall edge probabilities.
    pub fn adjacency(&self) -> &[f64] {
        self.dr.overall.as_slice()
    }

    /// `Â` thresholded at `c`.
    pub fn mean_network(&self, c: f64) -> Dag {
        threshold_network(self.adjacency(), self.nodes(), c)
    }

    /// `(λ̂_k, Â_k thresholded at c)` for every domain with samples; the
    /// residual domain falls back to the mean network.
    pub fn local_networks(&self, c: f64) -> Vec<(f64, Dag)> {
        let m = self.nodes();
        self.dr
            .entries
            .iter()
            .filter(|e| e.lambda > 0.0)
            .map(|e| {
                let g = match (&e.mu, e.k) {
                    (Some(mu), k) if k > 0 => threshold_network(mu.as_slice(), m, c),
                    _ => self.mean_network(c),
                };
                (e.lambda, g)
            })
            .collect()
    }
}

/// Run the sampler from the empty graph.
pub fn run_bn(scorer: &DagScorer, cfg: &SamplerConfig, rep: u64) -> Result<BnRun> {
    let model = DagModel::new(scorer, cfg.prior_count);
    let m = scorer.nodes();
    let rng = chain_rng(cfg.seed, rep);
    let mut sampler = MdSampler::new(&model, cfg.clone(), Dag::empty(m), rng)?;
    let mut acc = DrAccumulator::new();
    sampler.run(&mut acc, |g: &Dag| Payload::matrix(m, m, g.adjacency()))?;
    let dr = acc.finalize()?;
    let report = sampler.report(&dr, &DiagnosticsThresholds::default())?;
    let entries = sampler.registry().entries();
    let (best, best_score) = sampler.best_found();
    Ok(BnRun {
        modes: entries.iter().map(|e| e.state.clone()).collect(),
        mode_scores: entries.iter().map(|e| e.log_density).collect(),
        best: best.clone(),
        best_score,
        dr,
        report,
    })
}

/// Accuracy of a run against the exact landscape over the oracle domains
/// whose mass exceeds the threshold.
#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    pub threshold: f64,
    pub significant: usize,
    pub missed: usize,
    /// Registered modes that the oracle does not list as modes.
    pub spurious: usize,
    pub log_lambda_mse: f64,
    /// Mean over significant found domains of the entrywise MSE of `Â_k`.
    pub a_k_mse: f64,
    /// Entrywise MSE of `Â`.
    pub a_mse: f64,
    pub lambda_residual: f64,
    pub oracle_modes: usize,
}

pub fn compare_with_oracle(run: &BnRun, land: &ExactLandscape, threshold: f64) -> OracleComparison {
    let mut slot = vec![None; land.modes.len()];
    let mut spurious = 0;
    for (n, g) in run.modes.iter().enumerate() {
        match land.mode_index(g) {
            Some(i) => slot[i] = Some(n + 1),
            None => spurious += 1,
        }
    }
    let mut significant = 0;
    let mut missed = 0;
    let (mut ll, mut ak, mut found) = (0.0, 0.0, 0usize);
    for (i, e) in land.significant_modes(threshold) {
        significant += 1;
        let Some(k) = slot[i] else {
            missed += 1;
            continue;
        };
        let est = &run.dr.entries[k];
        found += 1;
        ll += (est.log_lambda - e.log_lambda).powi(2);
        ak += match &est.mu {
            Some(mu) => mse(mu.as_slice(), &e.adjacency),
            None => f64::INFINITY,
        };
    }
    let div = |s: f64| if found > 0 { s / found as f64 } else { 0.0 };
    OracleComparison {
        threshold,
        significant,
        missed,
        spurious,
        log_lambda_mse: div(ll),
        a_k_mse: div(ak),
        a_mse: mse(run.adjacency(), &land.adjacency),
        lambda_residual: run.dr.lambda(0),
        oracle_modes: land.modes.len(),
    }
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64
}
