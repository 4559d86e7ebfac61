//! Rastrigin benchmark: sampler run plus comparison with the exact oracle.

use rand::Rng;
use serde::Serialize;

use crate::continuous::{EuclideanModel, ProductOracle, Rastrigin};
use crate::diagnostics::DiagnosticsThresholds;
use crate::error::Result;
use crate::estimation::{DrAccumulator, Payload};
use crate::rng::chain_rng;
use crate::sampler::{MdSampler, SamplerConfig, SamplerReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RastriginSpec {
    pub m: usize,
    pub a: f64,
}

impl Default for RastriginSpec {
    fn default() -> Self {
        Self { m: 4, a: 2.0 }
    }
}

/// Estimate of one oracle domain.
#[derive(Debug, Clone, Serialize)]
pub struct DomainComparison {
    pub domain: Vec<usize>,
    pub layer: usize,
    pub registered: bool,
    pub log_lambda_true: f64,
    pub log_lambda_est: f64,
    pub mean_true: Vec<f64>,
    pub mean_est: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerError {
    pub layer: usize,
    pub domains: usize,
    pub log_lambda_mse: f64,
    pub mean_mse: f64,
    /// Standard deviation of the estimated log masses within the layer.
    pub log_lambda_spread: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RastriginRun {
    pub seed: u64,
    pub rep: u64,
    pub modes_registered: usize,
    pub missed_modes: usize,
    pub log_lambda_mse: f64,
    pub mean_mse: f64,
    pub layers: Vec<LayerError>,
    pub domains: Vec<DomainComparison>,
    pub report: SamplerReport,
}

pub fn rastrigin_oracle(spec: &RastriginSpec) -> Result<ProductOracle> {
    ProductOracle::build(&Rastrigin::new(spec.a, spec.m), 1e-12)
}

/// One independent chain; stream `rep` of `cfg.seed`.
pub fn run_rastrigin(
    spec: &RastriginSpec,
    cfg: &SamplerConfig,
    oracle: &ProductOracle,
    rep: u64,
) -> Result<RastriginRun> {
    let model = EuclideanModel::new(Rastrigin::new(spec.a, spec.m), cfg.sigma, cfg.mode_tol);
    let mut rng = chain_rng(cfg.seed, rep);
    let x1: Vec<f64> = (0..spec.m).map(|_| rng.random_range(-2.5..2.5)).collect();
    let mut sampler = MdSampler::new(&model, cfg.clone(), x1, rng)?;
    let mut acc = DrAccumulator::new();
    sampler.run(&mut acc, |x| Payload::vector(x.clone()))?;
    let dr = acc.finalize()?;
    let report = sampler.report(&dr, &DiagnosticsThresholds::default())?;

    let registry = sampler.registry();
    let mut domains = Vec::new();
    for d in oracle.domains() {
        let k = (1..=registry.len()).find(|&k| oracle.classify(&registry.domain(k).state) == d);
        let est = k.and_then(|k| dr.entries.get(k));
        domains.push(DomainComparison {
            layer: oracle.layer(&d),
            registered: k.is_some(),
            log_lambda_true: oracle.log_lambda(&d),
            log_lambda_est: est.map_or(f64::NEG_INFINITY, |e| e.log_lambda),
            mean_true: oracle.mean(&d),
            mean_est: est.and_then(|e| e.mu.as_ref().map(|p| p.as_slice().to_vec())),
            domain: d,
        });
    }
    let (log_lambda_mse, mean_mse) = errors(domains.iter());
    let max_layer = domains.iter().map(|d| d.layer).max().unwrap_or(0);
    let layers = (1..=max_layer)
        .map(|l| {
            let sel: Vec<_> = domains.iter().filter(|d| d.layer == l).collect();
            let (ll, mm) = errors(sel.iter().copied());
            LayerError {
                layer: l,
                domains: sel.len(),
                log_lambda_mse: ll,
                mean_mse: mm,
                log_lambda_spread: std_dev(sel.iter().map(|d| d.log_lambda_est)),
            }
        })
        .collect();
    Ok(RastriginRun {
        seed: cfg.seed,
        rep,
        modes_registered: registry.len(),
        missed_modes: domains.iter().filter(|d| !d.registered).count(),
        log_lambda_mse,
        mean_mse,
        layers,
        domains,
        report,
    })
}

fn std_dev(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Mean squared error of log masses and of coordinate means (averaged over
/// coordinates) across the given domains.
fn errors<'a>(ds: impl Iterator<Item = &'a DomainComparison>) -> (f64, f64) {
    let mut n = 0usize;
    let (mut ll, mut mm) = (0.0, 0.0);
    for d in ds {
        n += 1;
        ll += (d.log_lambda_est - d.log_lambda_true).powi(2);
        mm += match &d.mean_est {
            Some(est) => {
                est.iter()
                    .zip(&d.mean_true)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    / est.len() as f64
            }
            None => f64::INFINITY,
        };
    }
    if n == 0 {
        (0.0, 0.0)
    } else {
        (ll / n as f64, mm / n as f64)
    }
}
