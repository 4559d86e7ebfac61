//! Generic multi-domain sampling engine.
//!
//! The sample space is split into cells: the basin of attraction of a
//! recorded mode (or the residual basin 0) crossed with a density level.
//! Cell weights are adapted Wang-Landau style so that every occupied cell is
//! visited at a similar rate, which lets the chain cross low-density barriers
//! and yields per-basin mass estimates.

mod config;
mod engine;
mod gamma;
mod ladder;
mod registry;
mod report;
#[cfg(test)]
pub(crate) mod toy;
mod weights;

use std::fmt::Debug;

use rand::Rng;
use serde::Serialize;

use crate::error::Result;

pub use config::{SamplerConfig, Variant};
pub use engine::{
    partition_index, shift_ladder, working_log_density, BurnInState, MdSampler, MoveKind,
    MoveStats, StepOutcome,
};
pub use gamma::{is_flat, GammaEvent, GammaSchedule, Phase};
pub use ladder::DensityLadder;
pub use registry::{ModeEntry, ModeRegistry, RegistryUpdate};
pub use report::{CellRecord, ModeRecord, SamplerReport};
pub use weights::{log_sum_exp, Cell, WeightMatrix};

/// Per-basin statistic adapted by stochastic approximation.
pub trait AdaptiveStatistic: Clone + Debug + Send + Sync + Serialize {
    /// `self += step * (target - self)`.
    fn relax_toward(&mut self, target: &Self, step: f64);

    /// Flattened components, used for diagnostics.
    fn components(&self) -> Vec<f64>;
}

/// What the engine needs from a sample space.
pub trait StateSpaceModel: Sync {
    type State: Clone + Debug + Send + Sync + Serialize;
    type Stat: AdaptiveStatistic;

    /// Unnormalized `log p(x)`.
    fn log_density(&self, x: &Self::State) -> f64;

    /// Deterministic ascent to the local mode of `x`'s basin.
    fn descend_to_mode(&self, x: &Self::State) -> Result<Self::State>;

    /// Mode identity test.
    fn states_equal(&self, a: &Self::State, b: &Self::State) -> bool;

    /// Draw from the local proposal `q(x, .)`, optionally shaped by the
    /// statistic of `x`'s basin.
    fn propose_local<R: Rng + ?Sized>(
        &self,
        x: &Self::State,
        adapt: Option<&Self::Stat>,
        rng: &mut R,
    ) -> Result<Self::State>;

    /// `log q(from, to)` with `adapt` being the statistic of `from`'s basin.
    fn local_log_density(
        &self,
        from: &Self::State,
        to: &Self::State,
        adapt: Option<&Self::Stat>,
    ) -> f64;

    /// Draw from the mixed-jump component centred on one mode.
    fn mixed_jump_sample<R: Rng + ?Sized>(
        &self,
        mode: &Self::State,
        stat: &Self::Stat,
        rng: &mut R,
    ) -> Self::State;

    /// Log density of the equal-weight mixture over `modes`; `-inf` where it
    /// vanishes.
    fn mixed_jump_log_density(
        &self,
        modes: &[ModeEntry<Self::State, Self::Stat>],
        y: &Self::State,
    ) -> f64;

    /// The map `g_k(x)` whose basin-conditional mean the statistic tracks.
    fn adapt_statistic(&self, x: &Self::State, mode: &Self::State) -> Self::Stat;

    /// Statistic for a newly registered mode.
    fn initial_adapt_statistic(&self) -> Self::Stat;

    /// Whether a statistic is still in a sane range.
    fn statistic_in_range(&self, _stat: &Self::Stat) -> bool {
        true
    }

    /// Smallest and largest eigenvalue across matrix-valued statistics.
    fn statistic_eigen_range(
        &self,
        _entries: &[ModeEntry<Self::State, Self::Stat>],
    ) -> Option<(f64, f64)> {
        None
    }

    /// The effective sample space is `{x : log p(x) >= H_{L-1} - cutoff}`;
    /// proposals outside it are rejected without descent.
    fn tail_cutoff(&self) -> Option<f64> {
        None
    }
}
