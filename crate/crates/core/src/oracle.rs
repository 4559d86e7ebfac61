//! Exact posterior landscape of small DAG spaces by exhaustive enumeration.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dag::{sna_step, Dag, DagScorer, ScoreParams};
use crate::error::{Error, Result};
use crate::sampler::log_sum_exp;

/// Largest node count the enumerator accepts.
pub const MAX_ENUM_NODES: usize = 6;

const INVALID: u32 = u32::MAX;

/// Pair list `(i, j)`, `i < j`, in lexicographic order.
fn pairs(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect()
}

/// Base-3 code of a graph: digit `p` is 0, 1 or 2 for pair `p` being open,
/// `i -> j` or `j -> i`.
pub fn encode(g: &Dag) -> u32 {
    let mut code = 0u32;
    let mut place = 1u32;
    for (i, j) in pairs(g.nodes()) {
        code += place
            * match g.edge_var(i, j) {
                0 => 0,
                1 => 1,
                _ => 2,
            };
        place *= 3;
    }
    code
}

pub fn decode(m: usize, mut code: u32) -> Dag {
    let mut g = Dag::empty(m);
    for (i, j) in pairs(m) {
        g.set_edge_var(i, j, [0, 1, -1][(code % 3) as usize]);
        code /= 3;
    }
    g
}

fn check_nodes(m: usize) -> Result<()> {
    if m > MAX_ENUM_NODES || m == 0 {
        return Err(Error::TooManyNodes(m));
    }
    Ok(())
}

/// Codes of every DAG on `m` nodes with indegrees at most `cap`, ascending.
pub fn enumerate_codes(m: usize, cap: usize) -> Result<Vec<u32>> {
    check_nodes(m)?;
    let ps = pairs(m);
    let total = 3u32.pow(ps.len() as u32);
    let mut out = Vec::new();
    let mut digits = vec![0u8; ps.len()];
    for code in 0..total {
        if code > 0 {
            // Odometer increment.
            for d in digits.iter_mut() {
                *d += 1;
                if *d < 3 {
                    break;
                }
                *d = 0;
            }
        }
        let mut parents = [0u64; MAX_ENUM_NODES];
        for (&(i, j), &d) in ps.iter().zip(&digits) {
            match d {
                1 => parents[j] |= 1 << i,
                2 => parents[i] |= 1 << j,
                _ => {}
            }
        }
        if parents[..m].iter().any(|p| p.count_ones() as usize > cap) {
            continue;
        }
        if acyclic(&parents[..m]) {
            out.push(code);
        }
    }
    Ok(out)
}

fn acyclic(parents: &[u64]) -> bool {
    let mut placed = 0u64;
    let mut n = 0;
    loop {
        let before = n;
        for (v, &p) in parents.iter().enumerate() {
            if placed & (1 << v) == 0 && p & !placed == 0 {
                placed |= 1 << v;
                n += 1;
            }
        }
        if n == parents.len() {
            return true;
        }
        if n == before {
            return false;
        }
    }
}

/// Every DAG on `m` nodes with indegrees at most `cap`, each exactly once.
pub fn enumerate_dags(m: usize, cap: usize) -> Result<impl Iterator<Item = Dag>> {
    Ok(enumerate_codes(m, cap)?.into_iter().map(move |c| decode(m, c)))
}

/// Number of labeled DAGs on `n` nodes by the alternating sum over sets of
/// source nodes.
pub fn count_labeled_dags(n: usize) -> u128 {
    let mut a = vec![1u128; n + 1];
    for k in 1..=n {
        let mut s: i128 = 0;
        for j in 1..=k {
            let term = binom(k, j) as i128 * (1i128 << (j * (k - j))) * a[k - j] as i128;
            s += if j % 2 == 1 { term } else { -term };
        }
        a[k] = s as u128;
    }
    a[n]
}

fn binom(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// One basin of the exact landscape.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExactMode {
    pub dag: Dag,
    pub log_score: f64,
    pub lambda: f64,
    pub log_lambda: f64,
    /// Posterior edge probabilities within the basin, row-major.
    pub adjacency: Vec<f64>,
    /// Number of graphs in the basin.
    pub size: usize,
}

/// Exact posterior, basin partition and domain summaries.
#[derive(Debug, Clone)]
pub struct ExactLandscape {
    pub nodes: usize,
    pub params: ScoreParams,
    /// Graph codes, ascending.
    pub codes: Vec<u32>,
    pub log_scores: Vec<f64>,
    /// Log normalizing constant of `exp(score)` over the space.
    pub log_normalizer: f64,
    /// Basin of each graph, indexing `modes`.
    pub basin: Vec<u32>,
    /// Modes sorted by descending score.
    pub modes: Vec<ExactMode>,
    /// Overall posterior edge probabilities.
    pub adjacency: Vec<f64>,
    index: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct Summary {
    nodes: usize,
    params: ScoreParams,
    graphs: usize,
    log_normalizer: f64,
    modes: Vec<ExactMode>,
    adjacency: Vec<f64>,
}

impl ExactLandscape {
    pub fn build(scorer: &DagScorer) -> Result<Self> {
        let m = scorer.nodes();
        let cap = scorer.cap();
        let codes = enumerate_codes(m, cap)?;
        let index = dense_index(m, &codes);
        let log_scores: Vec<f64> = codes
            .par_iter()
            .map(|&c| scorer.score(&decode(m, c)))
            .collect();
        let step: Vec<u32> = codes
            .par_iter()
            .enumerate()
            .map(|(n, &c)| match sna_step(scorer, &decode(m, c)) {
                Some(h) => index[encode(&h) as usize],
                None => n as u32,
            })
            .collect();
        let root = chase(&step);
        Self::assemble(m, *scorer.params(), codes, log_scores, &root, index)
    }

    fn assemble(
        m: usize,
        params: ScoreParams,
        codes: Vec<u32>,
        log_scores: Vec<f64>,
        root: &[u32],
        index: Vec<u32>,
    ) -> Result<Self> {
        let log_normalizer = log_sum_exp(log_scores.iter().copied());
        let mut roots: Vec<u32> = (0..codes.len() as u32)
            .filter(|&n| root[n as usize] == n)
            .collect();
        roots.sort_by(|&a, &b| {
            log_scores[b as usize]
                .total_cmp(&log_scores[a as usize])
                .then(a.cmp(&b))
        });
        let mut slot = vec![INVALID; codes.len()];
        for (k, &r) in roots.iter().enumerate() {
            slot[r as usize] = k as u32;
        }
        let basin: Vec<u32> = root.iter().map(|&r| slot[r as usize]).collect();

        let mm = m * m;
        let mut lambda = vec![0.0; roots.len()];
        let mut adj = vec![vec![0.0; mm]; roots.len()];
        let mut size = vec![0usize; roots.len()];
        let mut overall = vec![0.0; mm];
        for (n, &c) in codes.iter().enumerate() {
            let p = (log_scores[n] - log_normalizer).exp();
            let k = basin[n] as usize;
            lambda[k] += p;
            size[k] += 1;
            let g = decode(m, c);
            for (i, j) in g.edges() {
                adj[k][i * m + j] += p;
                overall[i * m + j] += p;
            }
        }
        let modes = roots
            .iter()
            .enumerate()
            .map(|(k, &r)| {
                let mut a = std::mem::take(&mut adj[k]);
                if lambda[k] > 0.0 {
                    a.iter_mut().for_each(|v| *v /= lambda[k]);
                }
                // Sum in log space for basins whose mass underflows.
                let log_lambda = log_sum_exp(
                    (0..codes.len())
                        .filter(|&n| basin[n] as usize == k)
                        .map(|n| log_scores[n]),
                ) - log_normalizer;
                ExactMode {
                    dag: decode(m, codes[r as usize]),
                    log_score: log_scores[r as usize],
                    lambda: lambda[k],
                    log_lambda,
                    adjacency: a,
                    size: size[k],
                }
            })
            .collect();
        Ok(Self {
            nodes: m,
            params,
            codes,
            log_scores,
            log_normalizer,
            basin,
            modes,
            adjacency: overall,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Position of `g` in the enumeration, if it is in the space.
    pub fn position(&self, g: &Dag) -> Option<usize> {
        let n = *self.index.get(encode(g) as usize)?;
        (n != INVALID).then_some(n as usize)
    }

    /// Basin index (into `modes`) of `g`.
    pub fn basin_of(&self, g: &Dag) -> Option<usize> {
        self.position(g).map(|n| self.basin[n] as usize)
    }

    /// Index into `modes` of a mode graph.
    pub fn mode_index(&self, g: &Dag) -> Option<usize> {
        let k = self.basin_of(g)?;
        (self.modes[k].dag == *g).then_some(k)
    }

    pub fn posterior(&self, n: usize) -> f64 {
        (self.log_scores[n] - self.log_normalizer).exp()
    }

    pub fn dag(&self, n: usize) -> Dag {
        decode(self.nodes, self.codes[n])
    }

    /// Modes whose basin mass exceeds `threshold`.
    pub fn significant_modes(&self, threshold: f64) -> impl Iterator<Item = (usize, &ExactMode)> {
        self.modes
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.lambda > threshold)
    }

    /// Hex digest identifying a dataset and score settings.
    pub fn digest(scorer: &DagScorer) -> Result<String> {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(scorer.data())?);
        h.update(serde_json::to_vec(scorer.params())?);
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }

    /// Load from `dir` if a cache for this scorer exists, else build and
    /// store it there.
    pub fn cached(scorer: &DagScorer, dir: &Path) -> Result<Self> {
        let key = Self::digest(scorer)?;
        let bin = dir.join(format!("{key}.bin"));
        if bin.exists() {
            return Self::load(&bin, scorer.nodes(), *scorer.params());
        }
        let land = Self::build(scorer)?;
        fs::create_dir_all(dir)?;
        land.save(&bin, &dir.join(format!("{key}.json")))?;
        Ok(land)
    }

    /// Binary layout: graph count, then per graph its code, score and root
    /// position, all little-endian.
    pub fn save(&self, bin: &Path, summary: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(8 + self.len() * 16);
        buf.extend_from_slice(&(self.len() as u64).to_le_bytes());
        let roots: Vec<u32> = self
            .modes
            .iter()
            .map(|e| self.position(&e.dag).expect("mode in space") as u32)
            .collect();
        for n in 0..self.len() {
            buf.extend_from_slice(&self.codes[n].to_le_bytes());
            buf.extend_from_slice(&self.log_scores[n].to_le_bytes());
            buf.extend_from_slice(&roots[self.basin[n] as usize].to_le_bytes());
        }
        fs::File::create(bin)?.write_all(&buf)?;
        let s = Summary {
            nodes: self.nodes,
            params: self.params,
            graphs: self.len(),
            log_normalizer: self.log_normalizer,
            modes: self.modes.clone(),
            adjacency: self.adjacency.clone(),
        };
        fs::write(summary, crate::json::to_string(&s)?)?;
        Ok(())
    }

    pub fn load(bin: &Path, nodes: usize, params: ScoreParams) -> Result<Self> {
        let mut buf = Vec::new();
        fs::File::open(bin)?.read_to_end(&mut buf)?;
        let bad = || Error::Data(format!("{}: truncated landscape cache", bin.display()));
        let n = u64::from_le_bytes(buf.get(..8).ok_or_else(bad)?.try_into().unwrap()) as usize;
        if buf.len() != 8 + n * 16 {
            return Err(bad());
        }
        let mut codes = Vec::with_capacity(n);
        let mut log_scores = Vec::with_capacity(n);
        let mut root = Vec::with_capacity(n);
        for rec in buf[8..].chunks_exact(16) {
            codes.push(u32::from_le_bytes(rec[..4].try_into().unwrap()));
            log_scores.push(f64::from_le_bytes(rec[4..12].try_into().unwrap()));
            root.push(u32::from_le_bytes(rec[12..].try_into().unwrap()));
        }
        let index = dense_index(nodes, &codes);
        Self::assemble(nodes, params, codes, log_scores, &root, index)
    }
}

fn dense_index(m: usize, codes: &[u32]) -> Vec<u32> {
    let total = 3usize.pow((m * (m - 1) / 2) as u32);
    let mut index = vec![INVALID; total];
    for (n, &c) in codes.iter().enumerate() {
        index[c as usize] = n as u32;
    }
    index
}

/// Follow one-step pointers to their fixed points.
fn chase(step: &[u32]) -> Vec<u32> {
    let mut root = vec![INVALID; step.len()];
    let mut path = Vec::new();
    for start in 0..step.len() {
        let mut n = start;
        while root[n] == INVALID && step[n] as usize != n {
            path.push(n);
            n = step[n] as usize;
        }
        let r = if root[n] == INVALID { n as u32 } else { root[n] };
        root[n] = r;
        for p in path.drain(..) {
            root[p] = r;
        }
    }
    root
}
