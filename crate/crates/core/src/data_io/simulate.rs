use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::dag::{Dag, DiscreteDataset};
use crate::error::{Error, Result};

/// Discrete Bayesian network with known conditional probability tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBn {
    pub dag: Dag,
    pub arities: Vec<usize>,
    /// `cpts[i][k * r_i + j] = P(Z_i = j | parent configuration k)`, parent
    /// configurations indexed with the lowest-numbered parent varying
    /// fastest.
    pub cpts: Vec<Vec<f64>>,
}

impl GroundTruthBn {
    pub fn new(dag: Dag, arities: Vec<usize>, cpts: Vec<Vec<f64>>) -> Result<Self> {
        let m = dag.nodes();
        if arities.len() != m || cpts.len() != m {
            return Err(Error::Data("network dimensions disagree".into()));
        }
        for i in 0..m {
            let r = arities[i];
            let q = parent_configs(&dag, &arities, i);
            if cpts[i].len() != r * q {
                return Err(Error::Data(format!(
                    "node {i}: table has {} entries, expected {}",
                    cpts[i].len(),
                    r * q
                )));
            }
            for col in cpts[i].chunks(r) {
                let s: f64 = col.iter().sum();
                if (s - 1.0).abs() > 1e-9 || col.iter().any(|&p| !(p >= 0.0)) {
                    return Err(Error::Data(format!("node {i}: table column is not a distribution")));
                }
            }
        }
        Ok(Self { dag, arities, cpts })
    }

    /// Tables with every column drawn from a symmetric Dirichlet.
    pub fn random_tables<R: Rng + ?Sized>(
        dag: Dag,
        arities: Vec<usize>,
        concentration: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let gamma = Gamma::new(concentration, 1.0)
            .map_err(|e| Error::InvalidConfig(format!("concentration: {e}")))?;
        let cpts = (0..dag.nodes())
            .map(|i| {
                let r = arities[i];
                let q = parent_configs(&dag, &arities, i);
                let mut t = Vec::with_capacity(r * q);
                for _ in 0..q {
                    let mut col: Vec<f64> = (0..r).map(|_| gamma.sample(rng)).collect();
                    let s: f64 = col.iter().sum();
                    if s > 0.0 {
                        col.iter_mut().for_each(|p| *p /= s);
                    } else {
                        col = vec![1.0 / r as f64; r];
                    }
                    t.extend(col);
                }
                t
            })
            .collect();
        Self::new(dag, arities, cpts)
    }

    pub fn nodes(&self) -> usize {
        self.dag.nodes()
    }

    /// One row by ancestral sampling; entries with `clamp[i] = Some(s)` are
    /// held at `s`.
    pub fn sample_row<R: Rng + ?Sized>(&self, clamp: &[Option<u8>], rng: &mut R) -> Vec<u8> {
        let order = self.dag.topological_order().expect("acyclic");
        let mut row = vec![0u8; self.nodes()];
        for &i in &order {
            if let Some(s) = clamp[i] {
                row[i] = s;
                continue;
            }
            let r = self.arities[i];
            let k = self.config_of(&row, i);
            let col = &self.cpts[i][k * r..(k + 1) * r];
            let mut u: f64 = rng.random();
            let mut s = r - 1;
            for (j, &p) in col.iter().enumerate() {
                if u < p {
                    s = j;
                    break;
                }
                u -= p;
            }
            row[i] = s as u8;
        }
        row
    }

    fn config_of(&self, row: &[u8], i: usize) -> usize {
        let mut k = 0;
        let mut q = 1;
        for p in self.dag.parents_of(i) {
            k += row[p] as usize * q;
            q *= self.arities[p];
        }
        k
    }

    /// `n` rows of which the first `ceil(fraction * n)` are interventional:
    /// one uniformly chosen node per such row is clamped to a uniform state.
    pub fn simulate<R: Rng + ?Sized>(
        &self,
        n: usize,
        intervention_fraction: f64,
        rng: &mut R,
    ) -> Result<DiscreteDataset> {
        if !(0.0..=1.0).contains(&intervention_fraction) {
            return Err(Error::InvalidConfig(
                "intervention fraction must lie in [0, 1]".into(),
            ));
        }
        let m = self.nodes();
        let n_int = (intervention_fraction * n as f64).ceil() as usize;
        let mut rows = Vec::with_capacity(n);
        let mut masks = Vec::with_capacity(n);
        for t in 0..n {
            let mut clamp = vec![None; m];
            let mut mask = vec![false; m];
            if t < n_int {
                let i = rng.random_range(0..m);
                clamp[i] = Some(rng.random_range(0..self.arities[i]) as u8);
                mask[i] = true;
            }
            rows.push(self.sample_row(&clamp, rng));
            masks.push(mask);
        }
        DiscreteDataset::from_rows(self.arities.clone(), &rows, &masks)
    }

    /// Rows grouped into conditions; condition `c` clamps node
    /// `targets[c]` in every row to a uniformly drawn state.
    pub fn simulate_conditions<R: Rng + ?Sized>(
        &self,
        targets: &[usize],
        rows_per_condition: usize,
        rng: &mut R,
    ) -> Result<DiscreteDataset> {
        let m = self.nodes();
        let mut rows = Vec::new();
        let mut masks = Vec::new();
        let mut labels = Vec::new();
        for (c, &i) in targets.iter().enumerate() {
            if i >= m {
                return Err(Error::Data(format!("condition target {i} out of range")));
            }
            for _ in 0..rows_per_condition {
                let mut clamp = vec![None; m];
                let mut mask = vec![false; m];
                clamp[i] = Some(rng.random_range(0..self.arities[i]) as u8);
                mask[i] = true;
                rows.push(self.sample_row(&clamp, rng));
                masks.push(mask);
                labels.push(c as u32 + 1);
            }
        }
        DiscreteDataset::from_rows(self.arities.clone(), &rows, &masks)?.with_conditions(labels)
    }
}

fn parent_configs(dag: &Dag, arities: &[usize], i: usize) -> usize {
    dag.parents_of(i).iter().map(|&p| arities[p]).product()
}

/// `Z_1 -> Z_2 -> ... -> Z_m`.
pub fn chain_network(m: usize) -> Dag {
    let edges: Vec<(usize, usize)> = (1..m).map(|i| (i - 1, i)).collect();
    Dag::from_edges(m, &edges, usize::MAX).expect("chain is acyclic")
}

/// Six-node example network: `Z4` has parents `{Z1, Z3}` and feeds `Z5`
/// and `Z6`.
pub fn example_network() -> Dag {
    let edges = [(0, 1), (0, 3), (2, 3), (1, 4), (3, 4), (3, 5), (2, 5)];
    Dag::from_edges(6, &edges, 4).expect("example network is valid")
}

/// Node names of the eleven-node signalling network.
pub const SIGNALING_NODES: [&str; 11] = [
    "Raf", "Mek", "PLC", "PIP2", "PIP3", "Erk", "Akt", "PKA", "PKC", "p38", "JNK",
];

/// Twenty-edge signalling network over [`SIGNALING_NODES`].
pub fn signaling_network() -> Dag {
    const RAF: usize = 0;
    const MEK: usize = 1;
    const PLC: usize = 2;
    const PIP2: usize = 3;
    const PIP3: usize = 4;
    const ERK: usize = 5;
    const AKT: usize = 6;
    const PKA: usize = 7;
    const PKC: usize = 8;
    const P38: usize = 9;
    const JNK: usize = 10;
    let edges = [
        (RAF, MEK),
        (MEK, ERK),
        (PLC, PIP2),
        (PLC, PKC),
        (PIP3, PIP2),
        (PIP3, PLC),
        (PIP3, AKT),
        (PIP2, PKC),
        (PKA, RAF),
        (PKA, MEK),
        (PKA, ERK),
        (PKA, AKT),
        (PKA, P38),
        (PKA, JNK),
        (PKC, RAF),
        (PKC, MEK),
        (PKC, P38),
        (PKC, JNK),
        (PKC, PKA),
        (ERK, AKT),
    ];
    Dag::from_edges(11, &edges, 4).expect("signalling network is valid")
}

/// Intervened node of each pseudo-condition of the signalling study.
pub const SIGNALING_TARGETS: [usize; 9] = [8, 7, 1, 3, 6, 4, 2, 0, 5];

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixed_networks_are_valid() {
        assert_eq!(chain_network(6).edge_count(), 5);
        let g = example_network();
        assert_eq!(g.parents_of(3), vec![0, 2]);
        let s = signaling_network();
        assert_eq!(s.edge_count(), 20);
        assert!(s.validate(4).is_ok());
        let mut t = SIGNALING_TARGETS.to_vec();
        t.sort();
        t.dedup();
        assert_eq!(t.len(), 9);
    }

    #[test]
    fn no_interventions_without_fraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bn = GroundTruthBn::random_tables(chain_network(4), vec![2; 4], 0.5, &mut rng).unwrap();
        let d = bn.simulate(200, 0.0, &mut rng).unwrap();
        assert!((0..200).all(|r| d.row_mask(r).iter().all(|&b| !b)));
        let d = bn.simulate(10, 0.2, &mut rng).unwrap();
        assert!(d.row_mask(0).iter().any(|&b| b) && d.row_mask(1).iter().any(|&b| b));
        assert!(d.row_mask(2).iter().all(|&b| !b));
    }

    #[test]
    fn single_node_full_intervention_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bn = GroundTruthBn::new(Dag::empty(1), vec![3], vec![vec![1.0, 0.0, 0.0]]).unwrap();
        let d = bn.simulate(30_000, 1.0, &mut rng).unwrap();
        let mut c = [0usize; 3];
        for r in 0..d.rows() {
            assert!(d.is_fixed(r, 0));
            c[d.value(r, 0) as usize] += 1;
        }
        for x in c {
            assert!((x as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.015);
        }
    }

    #[test]
    fn empirical_conditionals_match_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dag = Dag::from_edges(2, &[(0, 1)], 4).unwrap();
        let bn = GroundTruthBn::new(dag, vec![2, 2], vec![vec![0.3, 0.7], vec![0.9, 0.1, 0.25, 0.75]])
            .unwrap();
        let d = bn.simulate(100_000, 0.0, &mut rng).unwrap();
        let c = d.family_counts(1, 0b01);
        for k in 0..2 {
            let p = c.get(0, k) as f64 / c.row_total(k) as f64;
            assert!((p - bn.cpts[1][k * 2]).abs() < 0.01);
        }
        let c0 = d.family_counts(0, 0);
        assert!((c0.get(0, 0) as f64 / 1e5 - 0.3).abs() < 0.01);
    }

    #[test]
    fn conditions_clamp_their_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let bn = GroundTruthBn::random_tables(signaling_network(), vec![3; 11], 0.5, &mut rng).unwrap();
        let d = bn.simulate_conditions(&SIGNALING_TARGETS, 20, &mut rng).unwrap();
        assert_eq!(d.rows(), 180);
        let labels = d.conditions().unwrap();
        for r in 0..d.rows() {
            let target = SIGNALING_TARGETS[labels[r] as usize - 1];
            let mask = d.row_mask(r);
            assert!(mask[target]);
            assert_eq!(mask.iter().filter(|&&b| b).count(), 1);
        }
    }

    #[test]
    fn bad_tables_are_rejected() {
        assert!(GroundTruthBn::new(Dag::empty(1), vec![2], vec![vec![0.5, 0.6]]).is_err());
        assert!(GroundTruthBn::new(Dag::empty(1), vec![2], vec![vec![1.0]]).is_err());
    }
}
