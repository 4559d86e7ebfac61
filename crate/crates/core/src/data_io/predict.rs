use serde::Serialize;

use crate::dag::{Dag, DiscreteDataset, FamilyCounts};
use crate::sampler::log_sum_exp;

/// Dirichlet-posterior predictive distribution of a fixed graph given
/// training data.
#[derive(Debug, Clone)]
pub struct PredictiveModel {
    parents: Vec<u64>,
    tables: Vec<FamilyCounts>,
    alpha: f64,
}

impl PredictiveModel {
    /// `graph` may be any parent assignment, including a cyclic edge set
    /// obtained by thresholding; only the local conditionals are used.
    pub fn new(graph: &Dag, train: &DiscreteDataset, alpha: f64) -> Self {
        let parents = graph.parent_masks().to_vec();
        let tables = parents
            .iter()
            .enumerate()
            .map(|(i, &p)| train.family_counts(i, p))
            .collect();
        Self {
            parents,
            tables,
            alpha,
        }
    }

    /// `sum_i log[(a_ijk + N_ijk) / (a_i.k + N_i.k)]` over the nodes of `row`
    /// that were not intervened on.
    pub fn row_log_probability(&self, data: &DiscreteDataset, row: usize) -> f64 {
        let mut s = 0.0;
        for (i, t) in self.tables.iter().enumerate() {
            if data.is_fixed(row, i) {
                continue;
            }
            let k = data.parent_config(row, self.parents[i]);
            let j = data.value(row, i) as usize;
            let a_jk = self.alpha / (t.r * t.q) as f64;
            let a_k = self.alpha / t.q as f64;
            s += ((a_jk + t.get(j, k) as f64) / (a_k + t.row_total(k) as f64)).ln();
        }
        s
    }

    /// Sum of row log probabilities.
    pub fn log_probability(&self, data: &DiscreteDataset) -> f64 {
        (0..data.rows()).map(|r| self.row_log_probability(data, r)).sum()
    }
}

/// Predictive log probability of one row under `graph`.
pub fn predictive_log_probability(
    data: &DiscreteDataset,
    row: usize,
    graph: &Dag,
    train: &DiscreteDataset,
    alpha: f64,
) -> f64 {
    PredictiveModel::new(graph, train, alpha).row_log_probability(data, row)
}

/// `log sum_k lambda_k exp(log p_k(row))`, max-shifted.
pub fn dr_row_log_probability(
    data: &DiscreteDataset,
    row: usize,
    components: &[(f64, &PredictiveModel)],
) -> f64 {
    log_sum_exp(
        components
            .iter()
            .filter(|(l, _)| *l > 0.0)
            .map(|(l, m)| l.ln() + m.row_log_probability(data, row)),
    )
}

/// Sum over rows of [`dr_row_log_probability`].
pub fn dr_log_probability(data: &DiscreteDataset, components: &[(f64, &PredictiveModel)]) -> f64 {
    (0..data.rows())
        .map(|r| dr_row_log_probability(data, r, components))
        .sum()
}

/// Edges `i -> j` with `a[i][j] >= c`. The result may contain cycles.
pub fn threshold_network(adjacency: &[f64], m: usize, c: f64) -> Dag {
    let mut parents = vec![0u64; m];
    for i in 0..m {
        for j in 0..m {
            if i != j && adjacency[i * m + j] >= c {
                parents[j] |= 1 << i;
            }
        }
    }
    Dag::from_parent_masks(parents)
}

/// Directed-edge agreement with a reference network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct EdgeCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

pub fn score_vs_reference(predicted: &Dag, reference: &Dag) -> EdgeCounts {
    let mut c = EdgeCounts::default();
    let m = reference.nodes();
    for j in 0..m {
        let p = predicted.parent_mask(j);
        let r = reference.parent_mask(j);
        c.tp += (p & r).count_ones() as usize;
        c.fp += (p & !r).count_ones() as usize;
        c.fn_ += (r & !p).count_ones() as usize;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::{DagScorer, ScoreParams};
    use crate::data_io::example_network;

    fn small() -> DiscreteDataset {
        let rows = vec![vec![0, 1], vec![1, 1], vec![1, 0]];
        let masks = vec![vec![false, false], vec![false, true], vec![false, false]];
        DiscreteDataset::from_rows(vec![2, 2], &rows, &masks).unwrap()
    }

    #[test]
    fn symmetric_prior_without_data() {
        let empty = DiscreteDataset::empty(vec![2]);
        let test = DiscreteDataset::from_rows(vec![2], &[vec![1]], &[vec![false]]).unwrap();
        let p = predictive_log_probability(&test, 0, &Dag::empty(1), &empty, 1.0);
        assert!((p - 0.5f64.ln()).abs() < 1e-15);
        let fixed = DiscreteDataset::from_rows(vec![2], &[vec![1]], &[vec![true]]).unwrap();
        assert_eq!(predictive_log_probability(&fixed, 0, &Dag::empty(1), &empty, 1.0), 0.0);
    }

    #[test]
    fn sequential_predictive_equals_marginal_likelihood_ratio() {
        // Predicting rows one at a time from the growing prefix reproduces
        // the marginal likelihood of the whole set.
        let d = small();
        let g = Dag::from_edges(2, &[(0, 1)], 4).unwrap();
        let params = ScoreParams {
            beta: 1.0,
            ..Default::default()
        };
        let mut total = 0.0;
        for r in 0..d.rows() {
            let prefix = d.subset(&(0..r).collect::<Vec<_>>());
            total += predictive_log_probability(&d, r, &g, &prefix, 1.0);
        }
        let full = DagScorer::new(d.clone(), params).score(&g);
        let none = DagScorer::new(d.subset(&[]), params).score(&g);
        assert!((total - (full - none)).abs() < 1e-12);
    }

    #[test]
    fn dr_mixture_cases() {
        let d = small();
        let g1 = Dag::empty(2);
        let g2 = Dag::from_edges(2, &[(0, 1)], 4).unwrap();
        let p1 = PredictiveModel::new(&g1, &d, 1.0);
        let p2 = PredictiveModel::new(&g2, &d, 1.0);
        assert_eq!(dr_row_log_probability(&d, 0, &[(1.0, &p1)]), p1.row_log_probability(&d, 0));
        let same = dr_row_log_probability(&d, 0, &[(0.3, &p1), (0.7, &p1)]);
        assert!((same - p1.row_log_probability(&d, 0)).abs() < 1e-14);
        let a = p1.row_log_probability(&d, 2).exp();
        let b = p2.row_log_probability(&d, 2).exp();
        let mix = dr_row_log_probability(&d, 2, &[(0.25, &p1), (0.75, &p2)]);
        assert!((mix - (0.25 * a + 0.75 * b).ln()).abs() < 1e-14);
    }

    #[test]
    fn thresholding_and_counts() {
        let reference = example_network();
        let a = reference.adjacency();
        let exact = threshold_network(&a, 6, 0.5);
        assert_eq!(exact, reference);
        assert_eq!(
            score_vs_reference(&exact, &reference),
            EdgeCounts { tp: 7, fp: 0, fn_: 0 }
        );
        let none = threshold_network(&a, 6, 1.0 + 1e-9);
        assert_eq!(score_vs_reference(&none, &reference), EdgeCounts { tp: 0, fp: 0, fn_: 7 });
        let mut soft = vec![0.0; 36];
        soft[1] = 0.95; // 1 -> 2
        soft[6] = 0.89; // 2 -> 1
        soft[2 * 6 + 3] = 0.9; // 3 -> 4
        let g = threshold_network(&soft, 6, 0.9);
        assert_eq!(g.edges(), vec![(0, 1), (2, 3)]);
        assert_eq!(score_vs_reference(&g, &reference), EdgeCounts { tp: 2, fp: 0, fn_: 5 });
    }
}
