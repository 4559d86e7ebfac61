use std::collections::HashMap;
use std::sync::Mutex;

use rand::Rng;
use serde::Serialize;

use super::graph::{Dag, EditCounts, Move};
use super::score::DagScorer;
use crate::error::{Error, Result};
use crate::sampler::{log_sum_exp, AdaptiveStatistic, ModeEntry, StateSpaceModel};

/// Expected edit counts `(v_a, v_d, v_r)` of a basin relative to its mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EditStats {
    pub add: f64,
    pub delete: f64,
    pub reverse: f64,
}

impl EditStats {
    pub fn new(add: f64, delete: f64, reverse: f64) -> Self {
        Self {
            add,
            delete,
            reverse,
        }
    }
}

impl From<EditCounts> for EditStats {
    fn from(c: EditCounts) -> Self {
        Self::new(c.add as f64, c.delete as f64, c.reverse as f64)
    }
}

impl AdaptiveStatistic for EditStats {
    fn relax_toward(&mut self, target: &Self, step: f64) {
        self.add += step * (target.add - self.add);
        self.delete += step * (target.delete - self.delete);
        self.reverse += step * (target.reverse - self.reverse);
    }

    fn components(&self) -> Vec<f64> {
        vec![self.add, self.delete, self.reverse]
    }
}

/// Beyond this many memoized ascents the memo is cleared.
const MEMO_LIMIT: usize = 1 << 20;

/// Sample space of DAGs scored by a [`DagScorer`].
pub struct DagModel<'s> {
    scorer: &'s DagScorer,
    /// Prior count added to every mixed-jump category.
    prior_count: f64,
    memo: Mutex<HashMap<Dag, Dag>>,
}

impl<'s> DagModel<'s> {
    pub fn new(scorer: &'s DagScorer, prior_count: f64) -> Self {
        Self {
            scorer,
            prior_count,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn scorer(&self) -> &DagScorer {
        self.scorer
    }

    pub fn cap(&self) -> usize {
        self.scorer.cap()
    }

    pub fn prior_count(&self) -> f64 {
        self.prior_count
    }

    /// Number of unordered node pairs `T`.
    pub fn pairs(&self) -> usize {
        let m = self.scorer.nodes();
        m * (m - 1) / 2
    }

    /// Per-pair option weights of the sequential jump from `mode`: for a pair
    /// joined in `mode` the options are (reverse, delete, retain), otherwise
    /// (absent, `i -> j`, `j -> i`).
    fn category_weights(&self, mode_edges: usize, stat: &EditStats, joined: bool) -> [f64; 3] {
        let b = self.prior_count;
        let e = mode_edges as f64;
        let t = self.pairs() as f64;
        let raw = if joined {
            [stat.reverse, stat.delete, e - stat.reverse - stat.delete]
        } else {
            [t - e - stat.add, stat.add / 2.0, stat.add / 2.0]
        };
        raw.map(|w| w.max(0.0) + b)
    }

    /// Pair value each option installs, matching [`category_weights`].
    fn option_values(mode_value: i8) -> [i8; 3] {
        if mode_value != 0 {
            [-mode_value, 0, mode_value]
        } else {
            [0, 1, -1]
        }
    }

    /// Walk the pairs of `mode` in lexicographic order. At each pair `choose`
    /// receives the valid-option weights and returns an option index, or
    /// `None` to abort.
    fn sequential_jump(
        &self,
        mode: &Dag,
        stat: &EditStats,
        mut choose: impl FnMut(usize, usize, &[i8; 3], &[f64; 3]) -> Option<usize>,
    ) -> Option<Dag> {
        let m = mode.nodes();
        let cap = self.cap();
        let e = mode.edge_count();
        let mut g = mode.clone();
        for i in 0..m {
            for j in i + 1..m {
                let v0 = mode.edge_var(i, j);
                let values = Self::option_values(v0);
                let mut w = self.category_weights(e, stat, v0 != 0);
                let current = g.edge_var(i, j);
                g.set_edge_var(i, j, 0);
                for (wo, &v) in w.iter_mut().zip(&values) {
                    if !installable(&g, i, j, v, cap) {
                        *wo = 0.0;
                    }
                }
                g.set_edge_var(i, j, current);
                let pick = choose(i, j, &values, &w)?;
                g.set_edge_var(i, j, values[pick]);
            }
        }
        Some(g)
    }

    /// Log probability that the jump centred on `mode` produces `target`.
    pub fn component_log_density(&self, mode: &Dag, stat: &EditStats, target: &Dag) -> f64 {
        let mut log_q = 0.0;
        let out = self.sequential_jump(mode, stat, |i, j, values, w| {
            let want = target.edge_var(i, j);
            let pick = values.iter().position(|&v| v == want)?;
            if w[pick] <= 0.0 {
                return None;
            }
            log_q += (w[pick] / w.iter().sum::<f64>()).ln();
            Some(pick)
        });
        match out {
            Some(_) => log_q,
            None => f64::NEG_INFINITY,
        }
    }

    /// Steepest-neighbour ascent, memoized.
    pub fn sna(&self, g: &Dag) -> Dag {
        if let Some(mode) = self.memo.lock().expect("memo poisoned").get(g) {
            return mode.clone();
        }
        let mut path = Vec::new();
        let mut cur = g.clone();
        loop {
            if let Some(mode) = self.memo.lock().expect("memo poisoned").get(&cur).cloned() {
                cur = mode;
                break;
            }
            match sna_step(self.scorer, &cur) {
                Some(next) => {
                    path.push(std::mem::replace(&mut cur, next));
                }
                None => break,
            }
        }
        let mut memo = self.memo.lock().expect("memo poisoned");
        if memo.len() + path.len() + 1 > MEMO_LIMIT {
            memo.clear();
        }
        for p in path {
            memo.insert(p, cur.clone());
        }
        memo.insert(cur.clone(), cur.clone());
        cur
    }
}

/// Whether the pair `(i, j)` (currently unset in `g`) can take value `v`.
fn installable(g: &Dag, i: usize, j: usize, v: i8, cap: usize) -> bool {
    match v {
        0 => true,
        1 => g.indegree(j) < cap && !g.reaches(j, i),
        _ => g.indegree(i) < cap && !g.reaches(i, j),
    }
}

/// One ascent step: the best neighbour among those scoring strictly above
/// `g` (the first in move order on ties), or `None` when `g` is a local
/// maximum. Scores are full sums in node order so every caller ranks graphs
/// identically.
pub fn sna_step(scorer: &DagScorer, g: &Dag) -> Option<Dag> {
    let mut best = scorer.score(g);
    let mut arg = None;
    let mut masks = g.parent_masks().to_vec();
    for mv in g.moves(scorer.cap()) {
        let (a, b) = match mv {
            Move::Add(i, j) | Move::Delete(i, j) | Move::Reverse(i, j) => (i, j),
        };
        let (pa, pb) = (masks[a], masks[b]);
        match mv {
            Move::Add(..) => masks[b] |= 1 << a,
            Move::Delete(..) => masks[b] &= !(1 << a),
            Move::Reverse(..) => {
                masks[b] &= !(1 << a);
                masks[a] |= 1 << b;
            }
        }
        let s = scorer.score_masks(&masks);
        if s > best {
            best = s;
            arg = Some(mv);
        }
        masks[a] = pa;
        masks[b] = pb;
    }
    arg.map(|mv| g.apply(mv))
}

/// Unmemoized steepest-neighbour ascent.
pub fn sna_mode(scorer: &DagScorer, g: &Dag) -> Dag {
    let mut cur = g.clone();
    while let Some(next) = sna_step(scorer, &cur) {
        cur = next;
    }
    cur
}

impl StateSpaceModel for DagModel<'_> {
    type State = Dag;
    type Stat = EditStats;

    fn log_density(&self, x: &Dag) -> f64 {
        self.scorer.score(x)
    }

    fn descend_to_mode(&self, x: &Dag) -> Result<Dag> {
        Ok(self.sna(x))
    }

    fn states_equal(&self, a: &Dag, b: &Dag) -> bool {
        a == b
    }

    fn propose_local<R: Rng + ?Sized>(
        &self,
        x: &Dag,
        _adapt: Option<&EditStats>,
        rng: &mut R,
    ) -> Result<Dag> {
        let moves = x.moves(self.cap());
        if moves.is_empty() {
            return Err(Error::NoNeighbors);
        }
        Ok(x.apply(moves[rng.random_range(0..moves.len())]))
    }

    fn local_log_density(&self, from: &Dag, _to: &Dag, _adapt: Option<&EditStats>) -> f64 {
        -(from.move_count(self.cap()) as f64).ln()
    }

    fn mixed_jump_sample<R: Rng + ?Sized>(&self, mode: &Dag, stat: &EditStats, rng: &mut R) -> Dag {
        self.sequential_jump(mode, stat, |_, _, _, w| {
            let total: f64 = w.iter().sum();
            let mut u = rng.random::<f64>() * total;
            for (k, &wk) in w.iter().enumerate() {
                if wk > 0.0 {
                    if u < wk {
                        return Some(k);
                    }
                    u -= wk;
                }
            }
            // Rounding fell past the end: take the last valid option.
            w.iter().rposition(|&wk| wk > 0.0)
        })
        .expect("retain option is always valid")
    }

    fn mixed_jump_log_density(&self, modes: &[ModeEntry<Dag, EditStats>], y: &Dag) -> f64 {
        if modes.is_empty() {
            return f64::NEG_INFINITY;
        }
        log_sum_exp(
            modes
                .iter()
                .map(|e| self.component_log_density(&e.state, &e.stat, y)),
        ) - (modes.len() as f64).ln()
    }

    fn adapt_statistic(&self, x: &Dag, mode: &Dag) -> EditStats {
        x.edit_counts(mode).into()
    }

    fn initial_adapt_statistic(&self) -> EditStats {
        EditStats::new(1.0, 1.0, 1.0)
    }

    fn statistic_in_range(&self, stat: &EditStats) -> bool {
        stat.components().iter().all(|v| v.is_finite() && *v >= 0.0)
    }
}
