use rand::seq::SliceRandom;
use rand::Rng;

use crate::dag::DiscreteDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Random partition into near-equal folds.
    ByRow,
    /// One fold per condition label.
    ByCondition,
}

/// Held-out row indices of each fold, ascending within a fold.
pub fn crossval_split<R: Rng + ?Sized>(
    data: &DiscreteDataset,
    folds: usize,
    mode: SplitMode,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidConfig("at least two folds are required".into()));
    }
    match mode {
        SplitMode::ByRow => {
            let n = data.rows();
            if folds > n {
                return Err(Error::InvalidConfig(format!("{folds} folds for {n} rows")));
            }
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(rng);
            let mut out: Vec<Vec<usize>> = (0..folds)
                .map(|f| idx[f * n / folds..(f + 1) * n / folds].to_vec())
                .collect();
            out.iter_mut().for_each(|f| f.sort_unstable());
            Ok(out)
        }
        SplitMode::ByCondition => {
            let labels = data
                .conditions()
                .ok_or_else(|| Error::Data("dataset has no condition labels".into()))?;
            let mut distinct: Vec<u32> = labels.to_vec();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() != folds {
                return Err(Error::InvalidConfig(format!(
                    "{folds} folds requested but the data has {} conditions",
                    distinct.len()
                )));
            }
            Ok(distinct
                .iter()
                .map(|&c| (0..labels.len()).filter(|&r| labels[r] == c).collect())
                .collect())
        }
    }
}

/// Rows not in `held_out`.
pub fn complement(n: usize, held_out: &[usize]) -> Vec<usize> {
    let mut keep = vec![true; n];
    for &r in held_out {
        keep[r] = false;
    }
    (0..n).filter(|&r| keep[r]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn data(n: usize) -> DiscreteDataset {
        let rows = vec![vec![0u8]; n];
        let masks = vec![vec![false]; n];
        DiscreteDataset::from_rows(vec![2], &rows, &masks).unwrap()
    }

    #[test]
    fn by_row_partitions_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let folds = crossval_split(&data(23), 5, SplitMode::ByRow, &mut rng).unwrap();
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        let loo = crossval_split(&data(4), 4, SplitMode::ByRow, &mut rng).unwrap();
        assert!(loo.iter().all(|f| f.len() == 1));
    }

    #[test]
    fn by_condition_gives_one_fold_per_label() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let labels: Vec<u32> = (0..5400).map(|r| r as u32 / 600 + 1).collect();
        let d = data(5400).with_conditions(labels).unwrap();
        let folds = crossval_split(&d, 9, SplitMode::ByCondition, &mut rng).unwrap();
        assert_eq!(folds.len(), 9);
        assert!(folds.iter().all(|f| f.len() == 600));
        assert!(crossval_split(&data(10), 2, SplitMode::ByCondition, &mut rng).is_err());
    }

    #[test]
    fn complement_excludes_held_out() {
        assert_eq!(complement(5, &[1, 3]), vec![0, 2, 4]);
    }
}
