use serde::Serialize;

/// Log-density cut points `H_1 > H_2 > ... > H_{L-1}` with even spacing.
///
/// Levels are indexed from 0 (the top interval `[H_1, +inf)`) to `L - 1`
/// (the bottom interval `(-inf, H_{L-1})`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityLadder {
    top: f64,
    spacing: f64,
    levels: usize,
}

impl DensityLadder {
    pub fn new(top: f64, spacing: f64, levels: usize) -> Self {
        assert!(levels >= 2, "a ladder needs at least two levels");
        assert!(spacing > 0.0 && spacing.is_finite());
        assert!(top.is_finite());
        Self {
            top,
            spacing,
            levels,
        }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `H_1`.
    pub fn top(&self) -> f64 {
        self.top
    }

    /// Cut `H_{i+1}` for `i` in `0..L-1`.
    pub fn cut(&self, i: usize) -> f64 {
        debug_assert!(i + 1 < self.levels);
        self.top - i as f64 * self.spacing
    }

    pub fn cuts(&self) -> Vec<f64> {
        (0..self.levels - 1).map(|i| self.cut(i)).collect()
    }

    /// Lowest cut `H_{L-1}`.
    pub fn bottom_cut(&self) -> f64 {
        self.cut(self.levels - 2)
    }

    /// Level index of a log density: the unique `i` with
    /// `log_p` in `[H_{i+1}, H_i)` under `H_0 = +inf`, `H_L = -inf`.
    pub fn level_of(&self, log_p: f64) -> usize {
        (0..self.levels - 1)
            .find(|&i| log_p >= self.cut(i))
            .unwrap_or(self.levels - 1)
    }

    /// Move every cut up by one spacing.
    pub(crate) fn raise(&mut self) {
        self.top += self.spacing;
    }
}
