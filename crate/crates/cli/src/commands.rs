use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use multidomain::dag::{Dag, DagScorer, DiscreteDataset, ScoreParams};
use multidomain::data_io::{
    format_matrix_tsv, load_dataset, load_network, save_dataset, save_network,
    score_vs_reference, EdgeCounts, SplitMode,
};
use multidomain::experiments::{
    compare_with_oracle, cross_validate, learning_config, rastrigin_oracle, run_bn,
    run_rastrigin, signaling_dataset, variant_config, BnRun, BnStudySpec, FoldRecord,
    OracleComparison, RastriginRun, RastriginSpec, StudyNetwork,
};
use multidomain::oracle::{ExactLandscape, ExactMode, MAX_ENUM_NODES};
use multidomain::sampler::SamplerReport;
use multidomain::{chain_rng, Error, Result, SamplerConfig, Variant};

use crate::config::{require_file, Overrides};
use crate::output::OutputSet;
use crate::{
    BnEnumerateArgs, BnLearnArgs, BnSimArgs, CliResult, CrossvalArgs, Failure, RastriginArgs,
    SimulateArgs,
};

/// Stream reserved for fold assignment.
const SPLIT_STREAM: u64 = 1 << 34;

/// Fields shared by every report.
#[derive(Serialize)]
struct Header<'a> {
    command: &'a str,
    settings: &'a BTreeMap<String, String>,
    config: &'a SamplerConfig,
}

fn collect<T: Send>(items: Vec<Result<T>>) -> Result<Vec<T>> {
    items.into_iter().collect()
}

/// Outputs are already written; a statistic that left its range still makes
/// the run count as a numerical failure.
fn check_reports<'a>(reports: impl IntoIterator<Item = &'a SamplerReport>) -> CliResult<()> {
    let bad = reports.into_iter().filter(|r| r.diagnostics.flag_c).count();
    if bad > 0 {
        return Err(Failure::Diagnostics(format!(
            "{bad} run(s) ended with an adaptive statistic out of range"
        )));
    }
    Ok(())
}

fn announce(paths: &[std::path::PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

#[derive(Serialize)]
struct LayerRow {
    layer: usize,
    domains: usize,
    log_lambda_mse: f64,
    mean_mse: f64,
    log_lambda_spread: f64,
}

#[derive(Serialize)]
struct RastriginReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    spec: RastriginSpec,
    reps: u64,
    missed_modes_total: usize,
    log_lambda_mse: f64,
    mean_mse: f64,
    table: Vec<LayerRow>,
    runs: &'a [RastriginRun],
}

pub fn rastrigin(a: RastriginArgs) -> CliResult<()> {
    let mut o = Overrides::from_common(&a.common)?;
    o.set("m", a.m);
    o.set("A", a.a);
    o.set("sigma", a.sigma);
    let spec = RastriginSpec {
        m: o.or("m", 4)?,
        a: o.or("A", 2.0)?,
    };
    if spec.m == 0 || !(spec.a > 0.0) {
        return Err(Failure::Flag("--m must be positive and --A positive".into()));
    }
    let cfg = o.sampler(SamplerConfig::default())?;
    let reps = o.reps(1)?;

    let oracle = rastrigin_oracle(&spec)?;
    let runs = collect(
        (0..reps)
            .into_par_iter()
            .map(|r| run_rastrigin(&spec, &cfg, &oracle, r))
            .collect(),
    )?;
    let n = runs.len() as f64;
    let mean = |f: &dyn Fn(&RastriginRun) -> f64| runs.iter().map(f).sum::<f64>() / n;
    let table = runs[0]
        .layers
        .iter()
        .enumerate()
        .map(|(i, l)| LayerRow {
            layer: l.layer,
            domains: l.domains,
            log_lambda_mse: mean(&|r| r.layers[i].log_lambda_mse),
            mean_mse: mean(&|r| r.layers[i].mean_mse),
            log_lambda_spread: mean(&|r| r.layers[i].log_lambda_spread),
        })
        .collect();
    let report = RastriginReport {
        header: Header {
            command: "rastrigin",
            settings: o.as_map(),
            config: &cfg,
        },
        spec,
        reps,
        missed_modes_total: runs.iter().map(|r| r.missed_modes).sum(),
        log_lambda_mse: mean(&|r| r.log_lambda_mse),
        mean_mse: mean(&|r| r.mean_mse),
        table,
        runs: &runs,
    };
    let mut out = OutputSet::new();
    out.json("rastrigin.json", &report)?;
    announce(&out.commit(&a.common.out)?);
    check_reports(runs.iter().map(|r| &r.report))
}

#[derive(Serialize)]
struct RunSummary {
    modes: usize,
    best_score: f64,
    gamma_n: f64,
    t_c: Option<u64>,
    local_acceptance: f64,
    mixed_acceptance: f64,
    residual_lambda: f64,
    recommendations: Vec<String>,
}

impl RunSummary {
    fn of(run: &BnRun) -> Self {
        let r = &run.report;
        Self {
            modes: run.modes.len(),
            best_score: run.best_score,
            gamma_n: r.gamma_n,
            t_c: r.t_c,
            local_acceptance: r.local_acceptance,
            mixed_acceptance: r.mixed_acceptance,
            residual_lambda: run.dr.lambda(0),
            recommendations: r.diagnostics.recommendations.clone(),
        }
    }
}

#[derive(Serialize)]
struct SimRecord {
    dataset: u64,
    variant: Variant,
    rep: u64,
    comparison: OracleComparison,
    run: RunSummary,
}

#[derive(Serialize)]
struct VariantRow {
    variant: Variant,
    runs: usize,
    missed_modes: f64,
    spurious_modes: f64,
    log_lambda_mse: f64,
    a_k_mse: f64,
    a_mse: f64,
    best_score: f64,
}

#[derive(Serialize)]
struct DatasetSummary {
    dataset: u64,
    rows: usize,
    truth_score: f64,
    oracle_modes: usize,
    significant_modes: usize,
    top_modes: Vec<ExactMode>,
}

#[derive(Serialize)]
struct BnSimReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    study: BnStudySpec,
    score: ScoreParams,
    datasets: Vec<DatasetSummary>,
    table: Vec<VariantRow>,
    records: Vec<SimRecord>,
}

pub fn bn_sim(a: BnSimArgs) -> CliResult<()> {
    let mut o = Overrides::from_common(&a.common)?;
    o.add_score_args(&a.score);
    o.set("network", a.network.clone());
    o.set("datasets", a.datasets);
    o.set("rows", a.rows);
    o.set("fraction", a.fraction);
    o.set("concentration", a.concentration);
    o.set("variants", a.variants.clone());
    let network: StudyNetwork = o.get("network").unwrap_or("chain").parse()?;
    let base = o.sampler(SamplerConfig {
        levels: 15,
        delta_h: 10.0,
        max_modes: 100,
        total_iters: 1_000_000,
        ..SamplerConfig::default()
    })?;
    let mut study = BnStudySpec::new(network, base.seed);
    study.rows = o.or("rows", study.rows)?;
    study.intervention_fraction = o.or("fraction", study.intervention_fraction)?;
    study.concentration = o.or("concentration", study.concentration)?;
    if study.rows == 0
        || !(0.0..=1.0).contains(&study.intervention_fraction)
        || !(study.concentration > 0.0)
    {
        return Err(Failure::Flag(
            "--rows must be positive, --fraction in [0, 1], --concentration positive".into(),
        ));
    }
    let datasets = o.or("datasets", 5u64)?;
    let reps = o.reps(1)?;
    let variants: Vec<Variant> = o.list("variants", vec![Variant::Md, Variant::Md0, Variant::Wl])?;
    let threshold = o.thresholds(vec![1e-4])?[0];
    let params = o.score_params()?;

    let mut summaries = Vec::new();
    let mut records = Vec::new();
    for d in 0..datasets {
        let (bn, data) = study.dataset(d)?;
        let scorer = DagScorer::new(data, params);
        let land = match &a.cache {
            Some(dir) => ExactLandscape::cached(&scorer, dir)?,
            None => ExactLandscape::build(&scorer)?,
        };
        let jobs: Vec<(Variant, u64)> = variants
            .iter()
            .flat_map(|&v| (0..reps).map(move |r| (v, r)))
            .collect();
        let runs = collect(
            jobs.par_iter()
                .map(|&(v, r)| run_bn(&scorer, &variant_config(&base, v), d * reps + r))
                .collect(),
        )?;
        for (&(variant, rep), run) in jobs.iter().zip(&runs) {
            records.push(SimRecord {
                dataset: d,
                variant,
                rep,
                comparison: compare_with_oracle(run, &land, threshold),
                run: RunSummary::of(run),
            });
        }
        check_reports(runs.iter().map(|r| &r.report))?;
        summaries.push(DatasetSummary {
            dataset: d,
            rows: scorer.data().rows(),
            truth_score: scorer.score(&bn.dag),
            oracle_modes: land.modes.len(),
            significant_modes: land.significant_modes(threshold).count(),
            top_modes: land.modes.iter().take(10).cloned().collect(),
        });
    }
    let table = variants
        .iter()
        .map(|&v| {
            let sel: Vec<&SimRecord> = records.iter().filter(|r| r.variant == v).collect();
            let n = sel.len() as f64;
            let mean = |f: &dyn Fn(&SimRecord) -> f64| sel.iter().map(|r| f(r)).sum::<f64>() / n;
            VariantRow {
                variant: v,
                runs: sel.len(),
                missed_modes: mean(&|r| r.comparison.missed as f64),
                spurious_modes: mean(&|r| r.comparison.spurious as f64),
                log_lambda_mse: mean(&|r| r.comparison.log_lambda_mse),
                a_k_mse: mean(&|r| r.comparison.a_k_mse),
                a_mse: mean(&|r| r.comparison.a_mse),
                best_score: mean(&|r| r.run.best_score),
            }
        })
        .collect();
    let report = BnSimReport {
        header: Header {
            command: "bn-sim",
            settings: o.as_map(),
            config: &base,
        },
        study,
        score: params,
        datasets: summaries,
        table,
        records,
    };
    let mut out = OutputSet::new();
    out.json("bn-sim.json", &report)?;
    announce(&out.commit(&a.common.out)?);
    Ok(())
}

#[derive(Serialize)]
struct ParentSet {
    node: usize,
    parents: Vec<usize>,
}

#[derive(Serialize)]
struct LocalNetwork {
    k: usize,
    lambda: f64,
    log_lambda: f64,
    /// Recorded mode of the domain; absent for the residual domain.
    mode: Option<Dag>,
    mode_score: Option<f64>,
    network: Dag,
    /// Nodes whose parent set differs from the mean network.
    distinct_parents: Vec<ParentSet>,
}

#[derive(Serialize)]
struct ThresholdedNetwork {
    threshold: f64,
    network: Dag,
    counts: Option<EdgeCounts>,
}

#[derive(Serialize)]
struct LearnRun {
    rep: u64,
    summary: RunSummary,
    best: Dag,
    mean_networks: Vec<ThresholdedNetwork>,
    local_networks: Vec<LocalNetwork>,
    adjacency: Vec<f64>,
}

#[derive(Serialize)]
struct LearnReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    data: String,
    nodes: usize,
    rows: usize,
    score: ScoreParams,
    reference_score: Option<f64>,
    runs: Vec<LearnRun>,
}

fn load_reference(path: Option<&Path>, data: &DiscreteDataset) -> CliResult<Option<Dag>> {
    let Some(path) = path else { return Ok(None) };
    require_file(path)?;
    let net = load_network(path)?;
    if net.dag.nodes() != data.nodes() {
        return Err(Failure::Run(Error::Data(format!(
            "reference has {} nodes, data has {}",
            net.dag.nodes(),
            data.nodes()
        ))));
    }
    Ok(Some(net.dag))
}

fn load_data(path: &Path) -> CliResult<DiscreteDataset> {
    require_file(path)?;
    Ok(load_dataset(path)?)
}

fn local_networks(run: &BnRun, c: f64) -> Vec<LocalNetwork> {
    let mean = run.mean_network(c);
    run.dr
        .entries
        .iter()
        .filter(|e| e.lambda > 0.0)
        .zip(run.local_networks(c))
        .map(|(e, (lambda, network))| {
            let distinct_parents = (0..network.nodes())
                .filter(|&i| network.parent_mask(i) != mean.parent_mask(i))
                .map(|i| ParentSet {
                    node: i,
                    parents: network.parents_of(i),
                })
                .collect();
            LocalNetwork {
                k: e.k,
                lambda,
                log_lambda: e.log_lambda,
                mode: (e.k > 0).then(|| run.modes[e.k - 1].clone()),
                mode_score: (e.k > 0).then(|| run.mode_scores[e.k - 1]),
                network,
                distinct_parents,
            }
        })
        .collect()
}

pub fn bn_learn(a: BnLearnArgs) -> CliResult<()> {
    let mut o = Overrides::from_common(&a.common)?;
    o.add_score_args(&a.score);
    let cfg = o.sampler(learning_config())?;
    let reps = o.reps(1)?;
    let thresholds = o.thresholds(vec![0.5, 0.7, 0.9])?;
    let params = o.score_params()?;
    let data = load_data(&a.data)?;
    let reference = load_reference(a.reference.as_deref(), &data)?;
    if let Some(r) = &reference {
        r.validate(params.cap)?;
    }

    let m = data.nodes();
    let rows = data.rows();
    let scorer = DagScorer::new(data, params);
    let runs = collect(
        (0..reps)
            .into_par_iter()
            .map(|r| run_bn(&scorer, &cfg, r))
            .collect(),
    )?;
    let learned: Vec<LearnRun> = runs
        .iter()
        .enumerate()
        .map(|(r, run)| LearnRun {
            rep: r as u64,
            summary: RunSummary::of(run),
            best: run.best.clone(),
            mean_networks: thresholds
                .iter()
                .map(|&c| {
                    let network = run.mean_network(c);
                    ThresholdedNetwork {
                        threshold: c,
                        counts: reference.as_ref().map(|g| score_vs_reference(&network, g)),
                        network,
                    }
                })
                .collect(),
            local_networks: local_networks(run, thresholds[0]),
            adjacency: run.adjacency().to_vec(),
        })
        .collect();
    let report = LearnReport {
        header: Header {
            command: "bn-learn",
            settings: o.as_map(),
            config: &cfg,
        },
        data: a.data.display().to_string(),
        nodes: m,
        rows,
        score: params,
        reference_score: reference.as_ref().map(|g| scorer.score(g)),
        runs: learned,
    };
    let mut out = OutputSet::new();
    out.json("bn-learn.json", &report)?;
    for (r, run) in runs.iter().enumerate() {
        let name = if reps == 1 {
            "adjacency.tsv".to_string()
        } else {
            format!("adjacency_rep{r}.tsv")
        };
        out.text(&name, format_matrix_tsv(run.adjacency(), m));
    }
    announce(&out.commit(&a.common.out)?);
    check_reports(runs.iter().map(|r| &r.report))
}

#[derive(Serialize)]
struct EnumerateReport {
    command: &'static str,
    data: String,
    nodes: usize,
    rows: usize,
    score: ScoreParams,
    graphs: usize,
    log_normalizer: f64,
    lambda_sum: f64,
    modes: Vec<ExactMode>,
    adjacency: Vec<f64>,
}

pub fn bn_enumerate(a: BnEnumerateArgs) -> CliResult<()> {
    let mut o = Overrides::from_common(&a.common)?;
    o.add_score_args(&a.score);
    let params = o.score_params()?;
    let data = load_data(&a.data)?;
    if data.nodes() > MAX_ENUM_NODES {
        return Err(Failure::Run(Error::TooManyNodes(data.nodes())));
    }
    let rows = data.rows();
    let scorer = DagScorer::new(data, params);
    let land = ExactLandscape::build(&scorer)?;
    let report = EnumerateReport {
        command: "bn-enumerate",
        data: a.data.display().to_string(),
        nodes: land.nodes,
        rows,
        score: params,
        graphs: land.len(),
        log_normalizer: land.log_normalizer,
        lambda_sum: land.modes.iter().map(|m| m.lambda).sum(),
        modes: land.modes.clone(),
        adjacency: land.adjacency.clone(),
    };
    let mut out = OutputSet::new();
    out.json("bn-enumerate.json", &report)?;
    if a.save_cache {
        for (name, bytes) in capture(|dir| {
            land.save(&dir.join("landscape.bin"), &dir.join("landscape-summary.json"))
        })? {
            out.bytes(&name, bytes);
        }
    }
    announce(&out.commit(&a.common.out)?);
    Ok(())
}

#[derive(Serialize)]
struct CrossvalReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    data: String,
    split: &'static str,
    folds: Vec<FoldRecord>,
    mean_log_pred_mean: f64,
    mean_log_pred_dr: f64,
    mean_tp: Option<f64>,
    mean_fp: Option<f64>,
}

pub fn crossval(a: CrossvalArgs) -> CliResult<()> {
    let mut o = Overrides::from_common(&a.common)?;
    o.add_score_args(&a.score);
    let cfg = o.sampler(learning_config())?;
    let params = o.score_params()?;
    let c = o.thresholds(vec![0.5])?[0];
    let by_condition = o.flag("by-condition")?;
    let data = load_data(&a.data)?;
    let reference = load_reference(a.reference.as_deref(), &data)?;
    let (mode, folds) = if by_condition {
        let labels = data.conditions().ok_or_else(|| {
            Failure::Run(Error::Data("--by-condition needs a cond column".into()))
        })?;
        let distinct = labels.iter().collect::<BTreeSet<_>>().len();
        (SplitMode::ByCondition, o.or("folds", distinct)?)
    } else {
        (SplitMode::ByRow, o.or("folds", 10usize)?)
    };
    if folds < 2 || folds > data.rows() {
        return Err(Failure::Flag(format!(
            "--folds must lie in [2, {}]",
            data.rows()
        )));
    }
    let mut rng = chain_rng(cfg.seed, SPLIT_STREAM);
    let records = cross_validate(&data, params, &cfg, folds, mode, c, reference.as_ref(), &mut rng)?;
    let n = records.len() as f64;
    let avg = |f: &dyn Fn(&FoldRecord) -> Option<f64>| -> Option<f64> {
        records.iter().map(f).sum::<Option<f64>>().map(|s| s / n)
    };
    let report = CrossvalReport {
        header: Header {
            command: "crossval",
            settings: o.as_map(),
            config: &cfg,
        },
        data: a.data.display().to_string(),
        split: if by_condition { "by-condition" } else { "by-row" },
        mean_log_pred_mean: avg(&|r| Some(r.log_pred_mean)).unwrap_or(f64::NAN),
        mean_log_pred_dr: avg(&|r| Some(r.log_pred_dr)).unwrap_or(f64::NAN),
        mean_tp: avg(&|r| r.tp.map(|x| x as f64)),
        mean_fp: avg(&|r| r.fp.map(|x| x as f64)),
        folds: records,
    };
    let mut out = OutputSet::new();
    out.json("crossval.json", &report)?;
    announce(&out.commit(&a.common.out)?);
    Ok(())
}

pub fn simulate(a: SimulateArgs) -> CliResult<()> {
    let mut o = Overrides::from_common(&a.common)?;
    o.set("network", a.network.clone());
    o.set("rows", a.rows);
    o.set("fraction", a.fraction);
    o.set("concentration", a.concentration);
    let seed = o.or("seed", 1u64)?;
    let network = o.get("network").unwrap_or("chain").to_string();
    let (bn, data) = if network == "signaling" {
        let conc = o.or("concentration", 1.0)?;
        signaling_dataset(seed, o.or("rows", 600)?, conc)?
    } else {
        let mut spec = BnStudySpec::new(network.parse()?, seed);
        spec.rows = o.or("rows", spec.rows)?;
        spec.intervention_fraction = o.or("fraction", spec.intervention_fraction)?;
        spec.concentration = o.or("concentration", spec.concentration)?;
        spec.dataset(a.index)?
    };
    let files = capture(|dir| {
        save_dataset(&dir.join("data.csv"), &data)?;
        save_network(&dir.join("network.txt"), &bn.dag, &bn.arities)
    })?;
    let mut out = OutputSet::new();
    for (name, bytes) in files {
        out.bytes(&name, bytes);
    }
    announce(&out.commit(&a.common.out)?);
    Ok(())
}

/// Run a writer against a scratch directory and return what it produced.
fn capture(write: impl FnOnce(&Path) -> Result<()>) -> Result<Vec<(String, Vec<u8>)>> {
    let dir = std::env::temp_dir().join(format!(
        "mdsample-{}-{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos())
    ));
    std::fs::create_dir_all(&dir)?;
    let result = write(&dir).and_then(|()| {
        let mut files = Vec::new();
        for entry in std::fs::read_dir(&dir)? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            files.push((name, std::fs::read(entry.path())?));
        }
        files.sort();
        Ok(files)
    });
    let _ = std::fs::remove_dir_all(&dir);
    result
}
