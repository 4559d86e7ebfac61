use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discrete observations with a per-entry intervention mask.
///
/// States are stored zero-based (`0..r_i`) column by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDataset {
    arities: Vec<usize>,
    columns: Vec<Vec<u8>>,
    fixed: Vec<Vec<bool>>,
    conditions: Option<Vec<u32>>,
}

impl DiscreteDataset {
    /// Build from zero-based rows and masks, validating ranges and shapes.
    pub fn from_rows(arities: Vec<usize>, rows: &[Vec<u8>], masks: &[Vec<bool>]) -> Result<Self> {
        let m = arities.len();
        if rows.len() != masks.len() {
            return Err(Error::Data(format!(
                "{} value rows but {} mask rows",
                rows.len(),
                masks.len()
            )));
        }
        if let Some(&r) = arities.iter().find(|&&r| r < 1 || r > u8::MAX as usize) {
            return Err(Error::Data(format!("unsupported arity {r}")));
        }
        let mut columns = vec![Vec::with_capacity(rows.len()); m];
        let mut fixed = vec![Vec::with_capacity(rows.len()); m];
        for (row, (vals, mask)) in rows.iter().zip(masks).enumerate() {
            if vals.len() != m || mask.len() != m {
                return Err(Error::Data(format!("row {row} does not have {m} entries")));
            }
            for i in 0..m {
                if vals[i] as usize >= arities[i] {
                    return Err(Error::Data(format!(
                        "row {row}, node {i}: state {} outside 1..={}",
                        vals[i] as usize + 1,
                        arities[i]
                    )));
                }
                columns[i].push(vals[i]);
                fixed[i].push(mask[i]);
            }
        }
        Ok(Self {
            arities,
            columns,
            fixed,
            conditions: None,
        })
    }

    pub fn empty(arities: Vec<usize>) -> Self {
        let m = arities.len();
        Self {
            arities,
            columns: vec![Vec::new(); m],
            fixed: vec![Vec::new(); m],
            conditions: None,
        }
    }

    pub fn with_conditions(mut self, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != self.rows() {
            return Err(Error::Data(format!(
                "{} condition labels for {} rows",
                labels.len(),
                self.rows()
            )));
        }
        self.conditions = Some(labels);
        Ok(self)
    }

    pub fn nodes(&self) -> usize {
        self.arities.len()
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    pub fn arity(&self, i: usize) -> usize {
        self.arities[i]
    }

    /// Zero-based state of `node` in `row`.
    pub fn value(&self, row: usize, node: usize) -> u8 {
        self.columns[node][row]
    }

    pub fn is_fixed(&self, row: usize, node: usize) -> bool {
        self.fixed[node][row]
    }

    pub fn column(&self, node: usize) -> &[u8] {
        &self.columns[node]
    }

    pub fn mask_column(&self, node: usize) -> &[bool] {
        &self.fixed[node]
    }

    pub fn row_values(&self, row: usize) -> Vec<u8> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    pub fn row_mask(&self, row: usize) -> Vec<bool> {
        self.fixed.iter().map(|c| c[row]).collect()
    }

    pub fn conditions(&self) -> Option<&[u32]> {
        self.conditions.as_deref()
    }

    /// Rows at the given indices, in that order, with their labels.
    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            arities: self.arities.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
            fixed: self
                .fixed
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
            conditions: self
                .conditions
                .as_ref()
                .map(|l| rows.iter().map(|&r| l[r]).collect()),
        }
    }

    /// Child-by-parent-configuration counts for `node`, skipping rows where
    /// `node` was set by intervention. Entry `k * r + j` counts child state
    /// `j` under parent configuration `k`, with the lowest-indexed parent
    /// varying fastest.
    pub fn family_counts(&self, node: usize, parents: u64) -> FamilyCounts {
        let r = self.arities[node];
        let mut strides = Vec::new();
        let mut cols = Vec::new();
        let mut q = 1usize;
        let mut p = parents;
        while p != 0 {
            let u = p.trailing_zeros() as usize;
            p &= p - 1;
            strides.push(q);
            cols.push(&self.columns[u]);
            q *= self.arities[u];
        }
        let mut counts = vec![0u32; q * r];
        let child = &self.columns[node];
        let fixed = &self.fixed[node];
        for row in 0..self.rows() {
            if fixed[row] {
                continue;
            }
            let mut k = 0;
            for (c, s) in cols.iter().zip(&strides) {
                k += c[row] as usize * s;
            }
            counts[k * r + child[row] as usize] += 1;
        }
        FamilyCounts { r, q, counts }
    }

    /// Parent configuration index of `row` for the given parent set.
    pub fn parent_config(&self, row: usize, parents: u64) -> usize {
        let mut k = 0;
        let mut q = 1;
        let mut p = parents;
        while p != 0 {
            let u = p.trailing_zeros() as usize;
            p &= p - 1;
            k += self.columns[u][row] as usize * q;
            q *= self.arities[u];
        }
        k
    }
}

/// Sufficient statistics `N_ijk` of one node and parent set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyCounts {
    /// Child arity.
    pub r: usize,
    /// Number of parent configurations.
    pub q: usize,
    pub counts: Vec<u32>,
}

impl FamilyCounts {
    pub fn get(&self, j: usize, k: usize) -> u32 {
        self.counts[k * self.r + j]
    }

    /// `N_{i.k}`.
    pub fn row_total(&self, k: usize) -> u32 {
        self.counts[k * self.r..(k + 1) * self.r].iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand() -> DiscreteDataset {
        // Node 0 binary parent, node 1 binary child.
        let rows = vec![vec![0, 0], vec![0, 1], vec![1, 1], vec![1, 1]];
        let masks = vec![
            vec![false, false],
            vec![false, false],
            vec![false, true],
            vec![true, false],
        ];
        DiscreteDataset::from_rows(vec![2, 2], &rows, &masks).unwrap()
    }

    #[test]
    fn intervened_rows_are_excluded_for_their_node_only() {
        let d = hand();
        let c = d.family_counts(1, 0b01);
        // Row 2 has node 1 clamped; row 3 clamps node 0 but still counts as
        // parent evidence for node 1.
        assert_eq!(c.counts, vec![1, 1, 0, 1]);
        assert_eq!(c.row_total(0), 2);
        assert_eq!(c.row_total(1), 1);
        let c0 = d.family_counts(0, 0);
        assert_eq!(c0.counts, vec![2, 1]);
    }

    #[test]
    fn no_interventions_gives_contingency_table() {
        let rows = vec![vec![0, 2], vec![1, 0], vec![1, 2], vec![0, 2]];
        let masks = vec![vec![false; 2]; 4];
        let d = DiscreteDataset::from_rows(vec![2, 3], &rows, &masks).unwrap();
        let c = d.family_counts(1, 0b01);
        assert_eq!((c.r, c.q), (3, 2));
        assert_eq!(c.get(2, 0), 2);
        assert_eq!(c.get(0, 1), 1);
        assert_eq!(c.get(2, 1), 1);
        assert_eq!(c.counts.iter().sum::<u32>(), 4);
    }

    #[test]
    fn fully_intervened_node_has_no_counts() {
        let rows = vec![vec![0, 1]; 3];
        let masks = vec![vec![true, false]; 3];
        let d = DiscreteDataset::from_rows(vec![2, 2], &rows, &masks).unwrap();
        assert!(d.family_counts(0, 0b10).counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn out_of_range_state_is_rejected() {
        let err = DiscreteDataset::from_rows(vec![3], &[vec![3]], &[vec![false]]).unwrap_err();
        assert!(err.to_string().contains("row 0"));
    }
}
