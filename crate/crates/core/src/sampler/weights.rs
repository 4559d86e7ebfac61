use serde::Serialize;

use super::config::Variant;

/// Position in the double partition: basin `k` (0 = outside every recorded
/// basin) crossed with density level `j` (0 = top).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Cell {
    pub k: usize,
    pub j: usize,
}

impl Cell {
    pub fn new(k: usize, j: usize) -> Self {
        Self { k, j }
    }
}

/// Log-weights `w_kj`, visit counters since the last gamma decrease, and
/// first-occupancy flags over the `(M + 1) x L` grid.
#[derive(Debug, Clone, Serialize)]
pub struct WeightMatrix {
    levels: usize,
    rows: usize,
    w: Vec<f64>,
    counts: Vec<u64>,
    occupied: Vec<bool>,
}

impl WeightMatrix {
    /// All-zero matrix with `rows = M + 1` rows.
    pub fn zeros(rows: usize, levels: usize) -> Self {
        Self {
            levels,
            rows,
            w: vec![0.0; rows * levels],
            counts: vec![0; rows * levels],
            occupied: vec![false; rows * levels],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    #[inline]
    fn idx(&self, cell: Cell) -> usize {
        debug_assert!(cell.k < self.rows && cell.j < self.levels);
        cell.k * self.levels + cell.j
    }

    #[inline]
    pub fn get(&self, cell: Cell) -> f64 {
        self.w[self.idx(cell)]
    }

    pub fn set(&mut self, cell: Cell, value: f64) {
        let i = self.idx(cell);
        self.w[i] = value;
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.w[k * self.levels..(k + 1) * self.levels]
    }

    pub fn count(&self, cell: Cell) -> u64 {
        self.counts[self.idx(cell)]
    }

    pub fn is_occupied(&self, cell: Cell) -> bool {
        self.occupied[self.idx(cell)]
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.rows).flat_map(move |k| (0..self.levels).map(move |j| Cell::new(k, j)))
    }

    /// Add a zero row for a newly recorded mode, returning its index.
    pub fn push_row(&mut self) -> usize {
        self.w.extend(std::iter::repeat_n(0.0, self.levels));
        self.counts.extend(std::iter::repeat_n(0, self.levels));
        self.occupied.extend(std::iter::repeat_n(false, self.levels));
        self.rows += 1;
        self.rows - 1
    }

    /// Overwrite row `dst` with a copy of row `src` (weights only).
    pub(crate) fn copy_row(&mut self, src: usize, dst: usize) {
        let l = self.levels;
        let row: Vec<f64> = self.row(src).to_vec();
        self.w[dst * l..(dst + 1) * l].copy_from_slice(&row);
    }

    /// Fold row `s` into row 0 (count semantics) and clear row `s`.
    pub(crate) fn fold_into_residual(&mut self, s: usize) {
        self.fold_row(s, true);
    }

    /// Move row `s`'s counters into row 0 and reset its weights to row 0's,
    /// keeping all rows identical.
    pub(crate) fn fold_counts_keep_rows_identical(&mut self, s: usize) {
        self.fold_row(s, false);
        self.copy_row(0, s);
    }

    fn fold_row(&mut self, s: usize, fold_weights: bool) {
        assert!(s > 0 && s < self.rows);
        let l = self.levels;
        for j in 0..l {
            if fold_weights {
                self.w[j] += self.w[s * l + j];
            }
            self.counts[j] += self.counts[s * l + j];
            self.occupied[j] |= self.occupied[s * l + j];
            self.w[s * l + j] = 0.0;
            self.counts[s * l + j] = 0;
            self.occupied[s * l + j] = false;
        }
    }

    /// Cascade every row down one level after the ladder moves up: the two
    /// lowest levels merge, the rest shift down, the top level restarts at 0.
    pub(crate) fn cascade_down(&mut self) {
        let l = self.levels;
        for k in 0..self.rows {
            let base = k * l;
            self.w[base + l - 1] += self.w[base + l - 2];
            self.counts[base + l - 1] += self.counts[base + l - 2];
            self.occupied[base + l - 1] |= self.occupied[base + l - 2];
            for j in (1..l - 1).rev() {
                self.w[base + j] = self.w[base + j - 1];
                self.counts[base + j] = self.counts[base + j - 1];
                self.occupied[base + j] = self.occupied[base + j - 1];
            }
            self.w[base] = 0.0;
            self.counts[base] = 0;
            self.occupied[base] = false;
        }
    }

    /// Record a visit: raise the weight(s) by `gamma` and bump the visited
    /// cell's counter and occupancy.
    pub fn visit(&mut self, cell: Cell, gamma: f64, variant: Variant) {
        match variant {
            Variant::Md | Variant::Md0 => {
                let i = self.idx(cell);
                self.w[i] += gamma;
            }
            Variant::Wl => {
                for k in 0..self.rows {
                    let i = k * self.levels + cell.j;
                    self.w[i] += gamma;
                }
            }
        }
        let i = self.idx(cell);
        self.counts[i] += 1;
        self.occupied[i] = true;
    }

    pub fn reset_counts(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
    }

    /// Occupied cells' counters; for the WL variant the counters are pooled
    /// per density level.
    pub fn checked_counts(&self, variant: Variant) -> Vec<u64> {
        match variant {
            Variant::Md | Variant::Md0 => self
                .counts
                .iter()
                .zip(&self.occupied)
                .filter(|(_, &o)| o)
                .map(|(&c, _)| c)
                .collect(),
            Variant::Wl => (0..self.levels)
                .filter_map(|j| {
                    let mut any = false;
                    let mut total = 0;
                    for k in 0..self.rows {
                        let i = k * self.levels + j;
                        any |= self.occupied[i];
                        total += self.counts[i];
                    }
                    any.then_some(total)
                })
                .collect(),
        }
    }

    /// `log sum exp(w)` over all cells, max-shifted.
    pub fn log_total(&self) -> f64 {
        log_sum_exp(self.w.iter().copied())
    }

    /// Log-weights normalized so that `sum exp = 1` over occupied cells.
    pub fn normalized_occupied(&self) -> Vec<(Cell, f64)> {
        let occ: Vec<Cell> = self.cells().filter(|&c| self.is_occupied(c)).collect();
        let z = log_sum_exp(occ.iter().map(|&c| self.get(c)));
        occ.into_iter().map(|c| (c, self.get(c) - z)).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.w.iter().all(|w| w.is_finite())
    }
}

/// Max-shifted `log sum exp`. Returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn md_visit_touches_one_cell() {
        let mut w = WeightMatrix::zeros(4, 5);
        w.visit(Cell::new(2, 3), 1.0, Variant::Md);
        for c in w.cells() {
            let expect = if c == Cell::new(2, 3) { 1.0 } else { 0.0 };
            assert_eq!(w.get(c), expect);
        }
        assert_eq!(w.count(Cell::new(2, 3)), 1);
        assert!(w.is_occupied(Cell::new(2, 3)));
    }

    #[test]
    fn wl_visit_raises_whole_level() {
        let mut w = WeightMatrix::zeros(3, 5);
        w.visit(Cell::new(1, 3), 0.25, Variant::Wl);
        for k in 0..3 {
            assert_eq!(w.get(Cell::new(k, 3)), 0.25);
        }
        assert_eq!(w.count(Cell::new(1, 3)), 1);
        assert_eq!(w.count(Cell::new(0, 3)), 0);
    }

    #[test]
    fn cascade_conserves_row_totals() {
        let mut w = WeightMatrix::zeros(2, 4);
        for (j, v) in [3.0, 5.0, 7.0, 11.0].into_iter().enumerate() {
            w.set(Cell::new(1, j), v);
        }
        w.cascade_down();
        assert_eq!(w.row(1), &[0.0, 3.0, 5.0, 18.0]);
    }

    #[test]
    fn fold_moves_mass_to_residual() {
        let mut w = WeightMatrix::zeros(3, 2);
        w.set(Cell::new(0, 0), 1.0);
        w.set(Cell::new(2, 0), 4.0);
        w.set(Cell::new(2, 1), 2.0);
        w.fold_into_residual(2);
        assert_eq!(w.row(0), &[5.0, 2.0]);
        assert_eq!(w.row(2), &[0.0, 0.0]);
    }

    #[test]
    fn log_sum_exp_handles_large_values() {
        let v = log_sum_exp([1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(std::iter::empty()), f64::NEG_INFINITY);
    }
}
