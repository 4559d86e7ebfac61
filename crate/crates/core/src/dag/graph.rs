use serde::de::{self, Deserialize, Deserializer};
use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::error::{Error, Result};

/// Largest supported node count (parent sets are 64-bit masks).
pub const MAX_NODES: usize = 64;

/// Labeled directed acyclic graph stored as one parent bitmask per node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dag {
    parents: Vec<u64>,
}

/// Single-edge edit. `Add(i, j)` creates `i -> j`; `Delete(i, j)` removes
/// `i -> j`; `Reverse(i, j)` turns `i -> j` into `j -> i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Move {
    Add(usize, usize),
    Delete(usize, usize),
    Reverse(usize, usize),
}

/// Number of additions, deletions and reversals taking a reference graph to
/// another graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct EditCounts {
    pub add: usize,
    pub delete: usize,
    pub reverse: usize,
}

#[inline]
fn bit(i: usize) -> u64 {
    1u64 << i
}

impl Dag {
    pub fn empty(m: usize) -> Self {
        assert!(m <= MAX_NODES, "at most {MAX_NODES} nodes");
        Self { parents: vec![0; m] }
    }

    /// Build from directed edges, checking acyclicity and the indegree cap.
    pub fn from_edges(m: usize, edges: &[(usize, usize)], cap: usize) -> Result<Self> {
        let mut g = Dag::empty(m);
        for &(i, j) in edges {
            if i >= m || j >= m || i == j {
                return Err(Error::Data(format!("invalid edge {i} -> {j} for {m} nodes")));
            }
            g.parents[j] |= bit(i);
        }
        g.validate(cap)?;
        Ok(g)
    }

    /// From parent masks without validation.
    pub fn from_parent_masks(parents: Vec<u64>) -> Self {
        Self { parents }
    }

    pub fn validate(&self, cap: usize) -> Result<()> {
        for (j, p) in self.parents.iter().enumerate() {
            if p.count_ones() as usize > cap {
                return Err(Error::IndegreeExceeded {
                    node: j,
                    size: p.count_ones() as usize,
                    cap,
                });
            }
        }
        if !self.is_acyclic() {
            return Err(Error::Data("graph contains a cycle".into()));
        }
        Ok(())
    }

    pub fn nodes(&self) -> usize {
        self.parents.len()
    }

    pub fn parent_mask(&self, j: usize) -> u64 {
        self.parents[j]
    }

    pub fn parent_masks(&self) -> &[u64] {
        &self.parents
    }

    pub fn parents_of(&self, j: usize) -> Vec<usize> {
        (0..self.nodes()).filter(|&i| self.has_edge(i, j)).collect()
    }

    pub fn indegree(&self, j: usize) -> usize {
        self.parents[j].count_ones() as usize
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.parents[j] & bit(i) != 0
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(|p| p.count_ones() as usize).sum()
    }

    /// Directed edges in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let m = self.nodes();
        let mut out = Vec::new();
        for i in 0..m {
            for j in 0..m {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Edge variable of pair `i < j`: 1 for `i -> j`, -1 for `j -> i`, else 0.
    pub fn edge_var(&self, i: usize, j: usize) -> i8 {
        debug_assert!(i < j);
        if self.has_edge(i, j) {
            1
        } else if self.has_edge(j, i) {
            -1
        } else {
            0
        }
    }

    /// Set the edge variable of pair `i < j`.
    pub fn set_edge_var(&mut self, i: usize, j: usize, v: i8) {
        self.parents[j] &= !bit(i);
        self.parents[i] &= !bit(j);
        match v {
            1 => self.parents[j] |= bit(i),
            -1 => self.parents[i] |= bit(j),
            _ => {}
        }
    }

    /// Ancestor mask of every node (excluding the node itself).
    pub fn ancestors(&self) -> Vec<u64> {
        let m = self.nodes();
        let order = self.topological_order().expect("acyclic");
        let mut anc = vec![0u64; m];
        for &v in &order {
            let mut a = self.parents[v];
            let mut p = self.parents[v];
            while p != 0 {
                let u = p.trailing_zeros() as usize;
                p &= p - 1;
                a |= anc[u];
            }
            anc[v] = a;
        }
        anc
    }

    /// Whether `to` can be reached from `from` along directed edges.
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        // Walk backwards from `to` through parents.
        let mut seen = bit(to);
        let mut frontier = bit(to);
        while frontier != 0 {
            let mut next = 0u64;
            let mut f = frontier;
            while f != 0 {
                let v = f.trailing_zeros() as usize;
                f &= f - 1;
                next |= self.parents[v];
            }
            if next & bit(from) != 0 {
                return true;
            }
            frontier = next & !seen;
            seen |= next;
        }
        false
    }

    /// Kahn order, or `None` when cyclic.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let m = self.nodes();
        let mut remaining = self.parents.clone();
        let mut placed = 0u64;
        let mut order = Vec::with_capacity(m);
        while order.len() < m {
            let before = order.len();
            for v in 0..m {
                if placed & bit(v) == 0 && remaining[v] & !placed == 0 {
                    order.push(v);
                    placed |= bit(v);
                }
            }
            if order.len() == before {
                return None;
            }
        }
        remaining.clear();
        Some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Every valid single-edge edit in canonical order: additions, then
    /// deletions, then reversals, each lexicographic in `(i, j)`.
    pub fn moves(&self, cap: usize) -> Vec<Move> {
        let m = self.nodes();
        let anc = self.ancestors();
        let mut adds = Vec::new();
        let mut dels = Vec::new();
        let mut revs = Vec::new();
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                if self.has_edge(i, j) {
                    dels.push(Move::Delete(i, j));
                    if self.reversible(i, j, cap, &anc) {
                        revs.push(Move::Reverse(i, j));
                    }
                } else if !self.has_edge(j, i)
                    && self.indegree(j) < cap
                    && anc[i] & bit(j) == 0
                {
                    adds.push(Move::Add(i, j));
                }
            }
        }
        adds.extend(dels);
        adds.extend(revs);
        adds
    }

    /// Number of valid moves, without materializing them.
    pub fn move_count(&self, cap: usize) -> usize {
        let m = self.nodes();
        let anc = self.ancestors();
        let mut n = 0;
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                if self.has_edge(i, j) {
                    n += 1 + self.reversible(i, j, cap, &anc) as usize;
                } else if !self.has_edge(j, i)
                    && self.indegree(j) < cap
                    && anc[i] & bit(j) == 0
                {
                    n += 1;
                }
            }
        }
        n
    }

    /// `i -> j` can become `j -> i`: `i` has room for a parent and no other
    /// path leads from `i` to `j`.
    fn reversible(&self, i: usize, j: usize, cap: usize, anc: &[u64]) -> bool {
        if self.indegree(i) >= cap {
            return false;
        }
        let mut others = self.parents[j] & !bit(i);
        while others != 0 {
            let p = others.trailing_zeros() as usize;
            others &= others - 1;
            if anc[p] & bit(i) != 0 {
                return false;
            }
        }
        true
    }

    pub fn apply(&self, mv: Move) -> Dag {
        let mut g = self.clone();
        match mv {
            Move::Add(i, j) => g.parents[j] |= bit(i),
            Move::Delete(i, j) => g.parents[j] &= !bit(i),
            Move::Reverse(i, j) => {
                g.parents[j] &= !bit(i);
                g.parents[i] |= bit(j);
            }
        }
        g
    }

    /// All valid neighbors in canonical move order.
    pub fn neighbors(&self, cap: usize) -> Vec<(Move, Dag)> {
        self.moves(cap)
            .into_iter()
            .map(|mv| (mv, self.apply(mv)))
            .collect()
    }

    /// Whether `other` differs from `self` in exactly one node pair.
    pub fn is_single_edit(&self, other: &Dag) -> bool {
        let m = self.nodes();
        let mut diff = 0;
        for i in 0..m {
            for j in i + 1..m {
                if self.edge_var(i, j) != other.edge_var(i, j) {
                    diff += 1;
                    if diff > 1 {
                        return false;
                    }
                }
            }
        }
        diff == 1
    }

    /// Edits needed to turn `reference` into `self`.
    pub fn edit_counts(&self, reference: &Dag) -> EditCounts {
        let m = self.nodes();
        let mut c = EditCounts::default();
        for i in 0..m {
            for j in i + 1..m {
                let g = self.edge_var(i, j);
                let v = reference.edge_var(i, j);
                if g != 0 && v == 0 {
                    c.add += 1;
                } else if g == 0 && v != 0 {
                    c.delete += 1;
                } else if g * v == -1 {
                    c.reverse += 1;
                }
            }
        }
        c
    }

    /// Row-major 0/1 adjacency, `a[i][j] = 1` for `i -> j`.
    pub fn adjacency(&self) -> Vec<f64> {
        let m = self.nodes();
        let mut a = vec![0.0; m * m];
        for j in 0..m {
            for i in 0..m {
                if self.has_edge(i, j) {
                    a[i * m + j] = 1.0;
                }
            }
        }
        a
    }
}

impl Serialize for Dag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Dag", 2)?;
        st.serialize_field("nodes", &self.nodes())?;
        st.serialize_field("edges", &self.edges())?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Dag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        struct Raw {
            nodes: usize,
            edges: Vec<(usize, usize)>,
        }
        let raw = Raw::deserialize(d)?;
        Dag::from_edges(raw.nodes, &raw.edges, usize::MAX).map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Every assignment of pair values that is acyclic and within the cap.
    fn brute_force_dags(m: usize, cap: usize) -> Vec<Dag> {
        let pairs: Vec<(usize, usize)> =
            (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
        let mut out = Vec::new();
        for code in 0..3usize.pow(pairs.len() as u32) {
            let mut g = Dag::empty(m);
            let mut c = code;
            for &(i, j) in &pairs {
                g.set_edge_var(i, j, [0, 1, -1][c % 3]);
                c /= 3;
            }
            if g.validate(cap).is_ok() {
                out.push(g);
            }
        }
        out
    }

    #[test]
    fn two_node_space() {
        let g = Dag::empty(2);
        let n: Vec<Move> = g.moves(4);
        assert_eq!(n, vec![Move::Add(0, 1), Move::Add(1, 0)]);
        assert_eq!(brute_force_dags(2, 4).len(), 3);
    }

    #[test]
    fn three_node_space_has_25_dags() {
        assert_eq!(brute_force_dags(3, 4).len(), 25);
    }

    #[test]
    fn chain_neighbors_match_brute_force() {
        let chain = Dag::from_edges(3, &[(0, 1), (1, 2)], 4).unwrap();
        let mut expected: Vec<Dag> = brute_force_dags(3, 4)
            .into_iter()
            .filter(|g| chain.is_single_edit(g))
            .collect();
        let mut got: Vec<Dag> = chain.neighbors(4).into_iter().map(|(_, g)| g).collect();
        expected.sort();
        got.sort();
        assert_eq!(got, expected);
        // 0 -> 2 would be added; 0 <- 2 closes a cycle; each edge can be
        // deleted and reversed.
        assert_eq!(chain.move_count(4), 5);
    }

    #[test]
    fn full_indegree_blocks_additions() {
        let g = Dag::from_edges(3, &[(0, 2), (1, 2)], 2).unwrap();
        assert!(g
            .moves(2)
            .iter()
            .all(|mv| !matches!(mv, Move::Add(_, 2))));
        let g = Dag::from_edges(3, &[(0, 1), (0, 2), (1, 2)], 4).unwrap();
        assert!(g.moves(4).iter().all(|mv| !matches!(mv, Move::Add(..))));
    }

    #[test]
    fn moves_are_canonically_ordered() {
        let g = Dag::from_edges(4, &[(0, 1), (2, 3)], 4).unwrap();
        let mv = g.moves(4);
        let rank = |m: &Move| match m {
            Move::Add(..) => 0,
            Move::Delete(..) => 1,
            Move::Reverse(..) => 2,
        };
        for w in mv.windows(2) {
            assert!((rank(&w[0]), w[0]) < (rank(&w[1]), w[1]));
        }
    }

    #[test]
    fn edit_count_cases() {
        let nu = Dag::from_edges(2, &[(0, 1)], 4).unwrap();
        let g = Dag::from_edges(2, &[(1, 0)], 4).unwrap();
        assert_eq!(nu.edit_counts(&nu), EditCounts::default());
        assert_eq!(
            g.edit_counts(&nu),
            EditCounts {
                add: 0,
                delete: 0,
                reverse: 1
            }
        );
    }

    #[test]
    fn serde_round_trip() {
        let g = Dag::from_edges(4, &[(0, 1), (2, 1), (1, 3)], 4).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: Dag = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }

    fn arb_dag(m: usize, cap: usize) -> impl Strategy<Value = Dag> {
        // Random pair values applied in order, skipping those that break
        // acyclicity or the cap.
        prop::collection::vec(0u8..3, m * (m - 1) / 2).prop_map(move |vals| {
            let mut g = Dag::empty(m);
            let mut k = 0;
            for i in 0..m {
                for j in i + 1..m {
                    let mut h = g.clone();
                    h.set_edge_var(i, j, [0, 1, -1][vals[k] as usize]);
                    k += 1;
                    if h.validate(cap).is_ok() {
                        g = h;
                    }
                }
            }
            g
        })
    }

    proptest! {
        #[test]
        fn every_neighbor_is_valid(g in arb_dag(6, 2)) {
            for (_, h) in g.neighbors(2) {
                prop_assert!(h.validate(2).is_ok());
                prop_assert!(g.is_single_edit(&h));
            }
            prop_assert_eq!(g.moves(2).len(), g.move_count(2));
        }

        #[test]
        fn edit_counts_match_pairwise_disagreement(g in arb_dag(5, 4), nu in arb_dag(5, 4)) {
            let c = g.edit_counts(&nu);
            let mut disagree = 0;
            for i in 0..5 {
                for j in i + 1..5 {
                    if g.edge_var(i, j) != nu.edge_var(i, j) {
                        disagree += 1;
                    }
                }
            }
            prop_assert_eq!(c.add + c.delete + c.reverse, disagree);
            prop_assert!(c.add <= 10 - nu.edge_count());
            prop_assert!(c.delete + c.reverse <= nu.edge_count());
        }

        #[test]
        fn reachability_agrees_with_ancestors(g in arb_dag(7, 4)) {
            let anc = g.ancestors();
            for a in 0..7 {
                for b in 0..7 {
                    if a != b {
                        prop_assert_eq!(g.reaches(a, b), anc[b] & (1 << a) != 0);
                    }
                }
            }
        }
    }
}
