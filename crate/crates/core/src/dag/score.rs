use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::data::{DiscreteDataset, FamilyCounts};
use super::graph::Dag;
use crate::error::{Error, Result};

/// Largest node count served by the dense family table.
const DENSE_NODES: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreParams {
    /// Dirichlet equivalent sample size.
    pub alpha: f64,
    /// Per-edge prior factor.
    pub beta: f64,
    /// Indegree cap.
    pub cap: usize,
}

impl Default for ScoreParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.1,
            cap: 4,
        }
    }
}

enum FamilyCache {
    Dense(Vec<OnceLock<f64>>),
    Sparse(RwLock<HashMap<(usize, u64), f64>>),
}

/// Decomposable log posterior of a DAG under interventional data, with
/// per-family terms memoized.
pub struct DagScorer {
    data: DiscreteDataset,
    params: ScoreParams,
    cache: FamilyCache,
}

impl std::fmt::Debug for DagScorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DagScorer")
            .field("nodes", &self.data.nodes())
            .field("rows", &self.data.rows())
            .field("params", &self.params)
            .finish()
    }
}

impl DagScorer {
    pub fn new(data: DiscreteDataset, params: ScoreParams) -> Self {
        let m = data.nodes();
        let cache = if m <= DENSE_NODES {
            FamilyCache::Dense((0..m << m).map(|_| OnceLock::new()).collect())
        } else {
            FamilyCache::Sparse(RwLock::new(HashMap::new()))
        };
        Self {
            data,
            params,
            cache,
        }
    }

    pub fn data(&self) -> &DiscreteDataset {
        &self.data
    }

    pub fn params(&self) -> &ScoreParams {
        &self.params
    }

    pub fn nodes(&self) -> usize {
        self.data.nodes()
    }

    pub fn cap(&self) -> usize {
        self.params.cap
    }

    pub fn counts(&self, node: usize, parents: u64) -> FamilyCounts {
        self.data.family_counts(node, parents)
    }

    /// Log score contribution of `node` with the given parent set.
    pub fn family(&self, node: usize, parents: u64) -> f64 {
        match &self.cache {
            FamilyCache::Dense(table) => {
                *table[(node << self.nodes()) | parents as usize]
                    .get_or_init(|| self.compute_family(node, parents))
            }
            FamilyCache::Sparse(map) => {
                if let Some(&v) = map.read().expect("score cache poisoned").get(&(node, parents)) {
                    return v;
                }
                let v = self.compute_family(node, parents);
                map.write()
                    .expect("score cache poisoned")
                    .insert((node, parents), v);
                v
            }
        }
    }

    fn compute_family(&self, node: usize, parents: u64) -> f64 {
        let c = self.counts(node, parents);
        family_log_score(&c, parents.count_ones() as usize, self.params.alpha, self.params.beta)
    }

    /// Log posterior up to a constant, summed over nodes in index order.
    pub fn score(&self, g: &Dag) -> f64 {
        (0..g.nodes()).map(|i| self.family(i, g.parent_mask(i))).sum()
    }

    /// Like [`score`](Self::score) but rejecting parent sets above the cap.
    pub fn checked_score(&self, g: &Dag) -> Result<f64> {
        for i in 0..g.nodes() {
            let size = g.indegree(i);
            if size > self.params.cap {
                return Err(Error::IndegreeExceeded {
                    node: i,
                    size,
                    cap: self.params.cap,
                });
            }
        }
        Ok(self.score(g))
    }

    /// Score of the graph whose parent masks are `parents`.
    pub fn score_masks(&self, parents: &[u64]) -> f64 {
        parents
            .iter()
            .enumerate()
            .map(|(i, &p)| self.family(i, p))
            .sum()
    }
}

/// Marginal-likelihood term of one family plus its edge prior.
pub fn family_log_score(c: &FamilyCounts, n_parents: usize, alpha: f64, beta: f64) -> f64 {
    let a_jk = alpha / (c.r * c.q) as f64;
    let a_k = alpha / c.q as f64;
    let lg_a_jk = ln_gamma(a_jk);
    let lg_a_k = ln_gamma(a_k);
    let mut s = n_parents as f64 * beta.ln();
    for k in 0..c.q {
        let row = &c.counts[k * c.r..(k + 1) * c.r];
        let n_k: u32 = row.iter().sum();
        if n_k == 0 {
            continue;
        }
        s += lg_a_k - ln_gamma(a_k + n_k as f64);
        for &n in row {
            if n > 0 {
                s += ln_gamma(a_jk + n as f64) - lg_a_jk;
            }
        }
    }
    s
}
