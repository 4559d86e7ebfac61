use serde::Serialize;

use super::config::Variant;
use super::weights::WeightMatrix;
use super::StateSpaceModel;

/// One recorded local mode with its adaptive statistic.
#[derive(Debug, Clone, Serialize)]
pub struct ModeEntry<S, V> {
    pub state: S,
    pub log_density: f64,
    pub stat: V,
}

/// Result of offering a newly found mode to the registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegistryUpdate {
    /// Appended as domain `k`.
    Added(usize),
    /// Took over domain `k`, evicting its previous (lowest) mode.
    Replaced(usize),
    /// Already registered as domain `k`, or rejected (`None`).
    Unchanged(Option<usize>),
}

/// The recorded modes `nu_1..nu_M`, at most `K*` of them. Domain `k >= 1`
/// refers to `entries[k - 1]`.
#[derive(Debug, Clone, Serialize)]
pub struct ModeRegistry<S, V> {
    entries: Vec<ModeEntry<S, V>>,
    cap: usize,
}

impl<S, V> ModeRegistry<S, V> {
    pub fn new(cap: usize) -> Self {
        assert!(cap >= 1);
        Self {
            entries: Vec::new(),
            cap,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn entries(&self) -> &[ModeEntry<S, V>] {
        &self.entries
    }

    /// Entry for domain `k >= 1`.
    pub fn domain(&self, k: usize) -> &ModeEntry<S, V> {
        &self.entries[k - 1]
    }

    pub fn domain_mut(&mut self, k: usize) -> &mut ModeEntry<S, V> {
        &mut self.entries[k - 1]
    }

    pub fn max_log_density(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.log_density)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Domain index of the lowest recorded mode (first on ties).
    pub fn lowest(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in self.entries.iter().enumerate() {
            if best.is_none_or(|(_, d)| e.log_density < d) {
                best = Some((i, e.log_density));
            }
        }
        best.map(|(i, _)| i + 1)
    }
}

impl<S: Clone, V: Clone> ModeRegistry<S, V> {
    /// Domain index whose mode equals `mode`, or 0.
    pub fn find<M>(&self, model: &M, mode: &S) -> usize
    where
        M: StateSpaceModel<State = S, Stat = V> + ?Sized,
    {
        self.entries
            .iter()
            .position(|e| model.states_equal(&e.state, mode))
            .map_or(0, |i| i + 1)
    }

    /// Offer a mode found by descent. New modes are appended while there is
    /// room; once full, a mode higher than the lowest recorded one replaces
    /// it and the evicted row's weights are folded into the residual row 0.
    ///
    /// For the WL variant rows stay identical: a new row copies row 0 and no
    /// fold is needed.
    pub fn offer<M>(
        &mut self,
        model: &M,
        mode: &S,
        log_density: f64,
        weights: &mut WeightMatrix,
        variant: Variant,
    ) -> RegistryUpdate
    where
        M: StateSpaceModel<State = S, Stat = V> + ?Sized,
    {
        let k = self.find(model, mode);
        if k > 0 {
            return RegistryUpdate::Unchanged(Some(k));
        }
        let entry = ModeEntry {
            state: mode.clone(),
            log_density,
            stat: model.initial_adapt_statistic(),
        };
        if self.entries.len() < self.cap {
            self.entries.push(entry);
            let row = weights.push_row();
            debug_assert_eq!(row, self.entries.len());
            if variant == Variant::Wl {
                weights.copy_row(0, row);
            }
            return RegistryUpdate::Added(row);
        }
        let s = self.lowest().expect("registry is full so non-empty");
        if log_density > self.domain(s).log_density {
            *self.domain_mut(s) = entry;
            if variant == Variant::Wl {
                weights.fold_counts_keep_rows_identical(s);
            } else {
                weights.fold_into_residual(s);
            }
            return RegistryUpdate::Replaced(s);
        }
        RegistryUpdate::Unchanged(None)
    }

    /// Initial registry holding only `mode`.
    pub fn seeded(cap: usize, mode: S, log_density: f64, stat: V) -> Self {
        let mut r = Self::new(cap);
        r.entries.push(ModeEntry {
            state: mode,
            log_density,
            stat,
        });
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::toy::{Ring, Scalar};
    use crate::sampler::weights::Cell;

    #[test]
    fn new_modes_append_rows_and_duplicates_resolve() {
        let model = Ring::bimodal();
        let mut w = WeightMatrix::zeros(1, 3);
        let mut r = ModeRegistry::new(5);
        assert_eq!(r.offer(&model, &0, 0.0, &mut w, Variant::Md), RegistryUpdate::Added(1));
        assert_eq!(r.offer(&model, &8, -0.5, &mut w, Variant::Md), RegistryUpdate::Added(2));
        assert_eq!(
            r.offer(&model, &8, -0.5, &mut w, Variant::Md),
            RegistryUpdate::Unchanged(Some(2))
        );
        assert_eq!(w.rows(), 3);
        assert_eq!(r.find(&model, &8), 2);
        assert_eq!(r.find(&model, &3), 0);
        assert_eq!(r.domain(1).stat, Scalar(1.0));
        assert_eq!(r.max_log_density(), 0.0);
        assert_eq!(r.lowest(), Some(2));
    }

    #[test]
    fn full_registry_evicts_its_lowest_mode() {
        let model = Ring::bimodal();
        let mut w = WeightMatrix::zeros(1, 2);
        let mut r = ModeRegistry::new(1);
        r.offer(&model, &8, -0.5, &mut w, Variant::Md);
        w.set(Cell::new(1, 0), 2.0);
        w.set(Cell::new(0, 0), 0.5);
        assert_eq!(
            r.offer(&model, &5, -6.0, &mut w, Variant::Md),
            RegistryUpdate::Unchanged(None)
        );
        assert_eq!(r.offer(&model, &0, 0.0, &mut w, Variant::Md), RegistryUpdate::Replaced(1));
        assert_eq!(r.domain(1).state, 0);
        assert_eq!(w.row(1), &[0.0, 0.0]);
        assert_eq!(w.get(Cell::new(0, 0)), 2.5);
    }

    #[test]
    fn wl_rows_are_copied_on_insert_and_eviction() {
        let model = Ring::bimodal();
        let mut w = WeightMatrix::zeros(1, 2);
        w.set(Cell::new(0, 1), 1.5);
        let mut r = ModeRegistry::new(1);
        r.offer(&model, &8, -0.5, &mut w, Variant::Wl);
        assert_eq!(w.row(1), w.row(0));
        r.offer(&model, &0, 0.0, &mut w, Variant::Wl);
        assert_eq!(w.row(1), w.row(0));
        assert_eq!(w.row(0), &[0.0, 1.5]);
    }
}
