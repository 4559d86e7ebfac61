use rand::Rng;
use serde::Serialize;

use super::config::SamplerConfig;
use super::gamma::{GammaEvent, GammaSchedule};
use super::ladder::DensityLadder;
use super::registry::{ModeRegistry, RegistryUpdate};
use super::weights::{Cell, WeightMatrix};
use super::{AdaptiveStatistic, StateSpaceModel};
use crate::error::{Error, Result};
use crate::estimation::{DrAccumulator, Payload};

/// `log p(x) - w_kj`, the unnormalized working log density.
#[inline]
pub fn working_log_density(log_p: f64, weights: &WeightMatrix, cell: Cell) -> f64 {
    log_p - weights.get(cell)
}

/// Cell of `x` together with the mode its basin descends to.
pub fn partition_index<M: StateSpaceModel + ?Sized>(
    model: &M,
    x: &M::State,
    registry: &ModeRegistry<M::State, M::Stat>,
    ladder: &DensityLadder,
) -> Result<(Cell, M::State)> {
    let log_p = model.log_density(x);
    let mode = model.descend_to_mode(x)?;
    let k = registry.find(model, &mode);
    Ok((Cell::new(k, ladder.level_of(log_p)), mode))
}

/// Raise the ladder by one spacing when the highest recorded mode sits more
/// than one spacing above `H_1`, cascading every weight row down one level.
pub fn shift_ladder<S, V>(
    registry: &ModeRegistry<S, V>,
    ladder: &mut DensityLadder,
    weights: &mut WeightMatrix,
) -> bool {
    let u = registry.max_log_density();
    if u > ladder.top() + ladder.spacing() {
        ladder.raise();
        weights.cascade_down();
        true
    } else {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MoveKind {
    Local,
    MixedJump,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct MoveStats {
    pub local_proposed: u64,
    pub local_accepted: u64,
    pub mixed_proposed: u64,
    pub mixed_accepted: u64,
    /// Proposals rejected outright (non-finite or far-tail density).
    pub invalid: u64,
}

impl MoveStats {
    fn record(&mut self, kind: MoveKind, accepted: bool) {
        match kind {
            MoveKind::Local => {
                self.local_proposed += 1;
                self.local_accepted += accepted as u64;
            }
            MoveKind::MixedJump => {
                self.mixed_proposed += 1;
                self.mixed_accepted += accepted as u64;
            }
        }
    }

    pub fn local_rate(&self) -> f64 {
        ratio(self.local_accepted, self.local_proposed)
    }

    pub fn mixed_rate(&self) -> f64 {
        ratio(self.mixed_accepted, self.mixed_proposed)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub cell: Cell,
    pub accepted: bool,
    pub kind: MoveKind,
}

/// One iteration of the step-size trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaTraceEntry {
    pub t: u64,
    pub cell: Cell,
    pub gamma_before: f64,
    pub gamma_after: f64,
    pub inv_before: f64,
    pub inv_after: f64,
    pub event: GammaEvent,
}

/// Current chain position with its basin bookkeeping.
#[derive(Debug, Clone)]
struct Located<S> {
    x: S,
    log_p: f64,
    mode: S,
    cell: Cell,
}

/// Registry, ladder and weights at the end of burn-in.
#[derive(Debug, Clone)]
pub struct BurnInState<S, V> {
    pub registry: ModeRegistry<S, V>,
    pub ladder: DensityLadder,
    pub weights: WeightMatrix,
    pub state: S,
}

#[derive(Debug, Clone)]
pub(crate) struct Snapshot {
    pub(crate) weights: Vec<(Cell, f64)>,
    pub(crate) stats: Vec<Vec<f64>>,
}

/// A single multi-domain chain.
pub struct MdSampler<'m, M: StateSpaceModel, R> {
    model: &'m M,
    cfg: SamplerConfig,
    registry: ModeRegistry<M::State, M::Stat>,
    ladder: DensityLadder,
    weights: WeightMatrix,
    gamma: GammaSchedule,
    current: Located<M::State>,
    rng: R,
    /// Iterations completed (burn-in and main).
    t: u64,
    /// Main-phase iterations completed.
    t_main: u64,
    burn_stats: MoveStats,
    main_stats: MoveStats,
    best: (M::State, f64),
    main_visits: Vec<u64>,
    pub(crate) snapshot: Option<Snapshot>,
    trace: Option<Vec<GammaTraceEntry>>,
}

impl<'m, M: StateSpaceModel, R: Rng> MdSampler<'m, M, R> {
    /// Start a chain at `x1`: its mode seeds the registry and anchors `H_1`.
    pub fn new(model: &'m M, cfg: SamplerConfig, x1: M::State, rng: R) -> Result<Self> {
        cfg.validate()?;
        let log_p = model.log_density(&x1);
        if !log_p.is_finite() {
            return Err(Error::InvalidConfig(
                "initial state has non-finite log density".into(),
            ));
        }
        let mode = model.descend_to_mode(&x1)?;
        let mode_lp = model.log_density(&mode);
        let registry = ModeRegistry::seeded(
            cfg.max_modes,
            mode.clone(),
            mode_lp,
            model.initial_adapt_statistic(),
        );
        let ladder = DensityLadder::new(mode_lp, cfg.delta_h, cfg.levels);
        let weights = WeightMatrix::zeros(2, cfg.levels);
        let cell = Cell::new(1, ladder.level_of(log_p));
        let gamma = GammaSchedule::from_config(&cfg);
        Ok(Self {
            model,
            registry,
            ladder,
            weights,
            gamma,
            current: Located {
                x: x1,
                log_p,
                mode: mode.clone(),
                cell,
            },
            rng,
            t: 0,
            t_main: 0,
            burn_stats: MoveStats::default(),
            main_stats: MoveStats::default(),
            best: (mode, mode_lp),
            main_visits: Vec::new(),
            snapshot: None,
            trace: None,
            cfg,
        })
    }

    /// Assemble a chain from explicit parts, e.g. to run the main kernel
    /// with a hand-built registry and weights.
    pub fn from_parts(
        model: &'m M,
        cfg: SamplerConfig,
        parts: BurnInState<M::State, M::Stat>,
        rng: R,
    ) -> Result<Self> {
        cfg.validate()?;
        let BurnInState {
            registry,
            ladder,
            weights,
            state,
        } = parts;
        if registry.is_empty() {
            return Err(Error::InvalidConfig("registry must be non-empty".into()));
        }
        if weights.rows() != registry.len() + 1 || weights.levels() != ladder.levels() {
            return Err(Error::InvalidConfig(
                "weight matrix does not match registry and ladder".into(),
            ));
        }
        let log_p = model.log_density(&state);
        let mode = model.descend_to_mode(&state)?;
        let k = registry.find(model, &mode);
        let cell = Cell::new(k, ladder.level_of(log_p));
        let best_lp = model.log_density(&mode);
        let gamma = GammaSchedule::from_config(&cfg);
        Ok(Self {
            model,
            registry,
            ladder,
            weights,
            gamma,
            current: Located {
                x: state,
                log_p,
                mode: mode.clone(),
                cell,
            },
            rng,
            t: 0,
            t_main: 0,
            burn_stats: MoveStats::default(),
            main_stats: MoveStats::default(),
            best: (mode, best_lp),
            main_visits: Vec::new(),
            snapshot: None,
            trace: None,
            cfg,
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    pub fn model(&self) -> &M {
        self.model
    }

    pub fn registry(&self) -> &ModeRegistry<M::State, M::Stat> {
        &self.registry
    }

    pub fn ladder(&self) -> &DensityLadder {
        &self.ladder
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn gamma(&self) -> &GammaSchedule {
        &self.gamma
    }

    pub fn state(&self) -> &M::State {
        &self.current.x
    }

    pub fn cell(&self) -> Cell {
        self.current.cell
    }

    pub fn iterations(&self) -> u64 {
        self.t
    }

    pub fn burn_in_stats(&self) -> MoveStats {
        self.burn_stats
    }

    pub fn main_stats(&self) -> MoveStats {
        self.main_stats
    }

    /// Highest mode reached by any descent so far.
    pub fn best_found(&self) -> (&M::State, f64) {
        (&self.best.0, self.best.1)
    }

    /// Post-burn-in visit totals, indexed like the weight matrix.
    pub fn main_visits(&self) -> &[u64] {
        &self.main_visits
    }

    /// Record every main-phase gamma update.
    pub fn enable_gamma_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn gamma_trace(&self) -> Option<&[GammaTraceEntry]> {
        self.trace.as_deref()
    }

    pub fn into_burn_in_state(self) -> BurnInState<M::State, M::Stat> {
        BurnInState {
            registry: self.registry,
            ladder: self.ladder,
            weights: self.weights,
            state: self.current.x,
        }
    }

    /// Proposals outside the effective sample space are rejected outright.
    fn admissible(&self, log_p: f64) -> bool {
        log_p.is_finite()
            && !self
                .model
                .tail_cutoff()
                .is_some_and(|c| log_p < self.ladder.bottom_cut() - c)
    }

    fn descend(&mut self, y: &M::State) -> Result<(M::State, f64)> {
        let mode = self
            .model
            .descend_to_mode(y)
            .map_err(|e| e.at_iteration(self.t as usize))?;
        let mode_lp = self.model.log_density(&mode);
        self.note_mode(&mode, mode_lp);
        Ok((mode, mode_lp))
    }

    fn note_mode(&mut self, mode: &M::State, log_p: f64) {
        if log_p > self.best.1 {
            self.best = (mode.clone(), log_p);
        }
    }

    fn stat_of(&self, k: usize) -> Option<&M::Stat> {
        (k > 0).then(|| &self.registry.domain(k).stat)
    }

    fn adapt_stat(&mut self, gamma: f64) {
        let k = self.current.cell.k;
        if k > 0 {
            let entry = self.registry.domain(k);
            let g = self.model.adapt_statistic(&self.current.x, &entry.state);
            self.registry
                .domain_mut(k)
                .stat
                .relax_toward(&g, gamma / 2.0);
        }
    }

    /// One burn-in iteration: local proposal, descent, registry and ladder
    /// updates, accept/reject against the current working density, then a
    /// unit-step weight update.
    pub fn step_burn_in(&mut self) -> Result<StepOutcome> {
        self.t += 1;
        let variant = self.cfg.variant;
        let y = self
            .model
            .propose_local(&self.current.x, None, &mut self.rng)?;
        let log_p_y = self.model.log_density(&y);

        let mut registry_changed = false;
        let mut candidate = None;
        if self.admissible(log_p_y) {
            let (mode, mode_lp) = self.descend(&y)?;
            let k_y = match self
                .registry
                .offer(self.model, &mode, mode_lp, &mut self.weights, variant)
            {
                RegistryUpdate::Added(k) | RegistryUpdate::Replaced(k) => {
                    registry_changed = true;
                    k
                }
                RegistryUpdate::Unchanged(k) => k.unwrap_or(0),
            };
            candidate = Some((y, log_p_y, mode, k_y));
        }
        let shifted = shift_ladder(&self.registry, &mut self.ladder, &mut self.weights);
        if registry_changed {
            self.current.cell.k = self.registry.find(self.model, &self.current.mode);
        }
        if shifted {
            self.current.cell.j = self.ladder.level_of(self.current.log_p);
        }

        let mut accepted = false;
        match candidate {
            Some((y, log_p_y, mode, k_y)) => {
                let cell_y = Cell::new(k_y, self.ladder.level_of(log_p_y));
                let log_ratio = working_log_density(log_p_y, &self.weights, cell_y)
                    - working_log_density(self.current.log_p, &self.weights, self.current.cell)
                    + self.model.local_log_density(&y, &self.current.x, None)
                    - self.model.local_log_density(&self.current.x, &y, None);
                if accept(log_ratio, &mut self.rng) {
                    self.current = Located {
                        x: y,
                        log_p: log_p_y,
                        mode,
                        cell: cell_y,
                    };
                    accepted = true;
                }
            }
            None => self.burn_stats.invalid += 1,
        }
        self.burn_stats.record(MoveKind::Local, accepted);
        self.weights.visit(self.current.cell, 1.0, variant);
        self.adapt_stat(1.0);
        Ok(StepOutcome {
            cell: self.current.cell,
            accepted,
            kind: MoveKind::Local,
        })
    }

    /// Run the remaining burn-in iterations.
    pub fn run_burn_in(&mut self) -> Result<()> {
        while self.t < self.cfg.burn_in {
            self.step_burn_in()?;
        }
        Ok(())
    }

    /// One Metropolis-Hastings step against the frozen working density: a
    /// local move with probability `1 - p_mx`, otherwise an independence
    /// move from the mode mixture. Weights and statistics are not touched.
    pub fn mh_step(&mut self) -> Result<StepOutcome> {
        self.t += 1;
        let p_mx = self.cfg.effective_p_mx();
        let kind = if p_mx > 0.0 && self.rng.random::<f64>() < p_mx {
            MoveKind::MixedJump
        } else {
            MoveKind::Local
        };
        let y = match kind {
            MoveKind::Local => {
                let k = self.current.cell.k;
                let adapt = (self.cfg.adaptive_local && k > 0)
                    .then(|| &self.registry.domain(k).stat);
                self.model
                    .propose_local(&self.current.x, adapt, &mut self.rng)?
            }
            MoveKind::MixedJump => {
                let k = self.rng.random_range(1..=self.registry.len());
                let entry = self.registry.domain(k);
                self.model
                    .mixed_jump_sample(&entry.state, &entry.stat, &mut self.rng)
            }
        };
        let log_p_y = self.model.log_density(&y);
        let mut accepted = false;
        if !self.admissible(log_p_y) {
            self.main_stats.invalid += 1;
        } else {
            let (mode, _) = self.descend(&y)?;
            let cell_y = Cell::new(
                self.registry.find(self.model, &mode),
                self.ladder.level_of(log_p_y),
            );
            let target_diff = working_log_density(log_p_y, &self.weights, cell_y)
                - working_log_density(self.current.log_p, &self.weights, self.current.cell);
            let log_ratio = match kind {
                MoveKind::Local => {
                    let (adapt_x, adapt_y) = if self.cfg.adaptive_local {
                        (self.stat_of(self.current.cell.k), self.stat_of(cell_y.k))
                    } else {
                        (None, None)
                    };
                    target_diff + self.model.local_log_density(&y, &self.current.x, adapt_y)
                        - self
                            .model
                            .local_log_density(&self.current.x, &y, adapt_x)
                }
                MoveKind::MixedJump => {
                    let entries = self.registry.entries();
                    let r_x = self.model.mixed_jump_log_density(entries, &self.current.x);
                    let r_y = self.model.mixed_jump_log_density(entries, &y);
                    if r_x == f64::NEG_INFINITY || !r_y.is_finite() {
                        f64::NEG_INFINITY
                    } else {
                        target_diff + r_x - r_y
                    }
                }
            };
            if accept(log_ratio, &mut self.rng) {
                self.current = Located {
                    x: y,
                    log_p: log_p_y,
                    mode,
                    cell: cell_y,
                };
                accepted = true;
            }
        }
        self.main_stats.record(kind, accepted);
        Ok(StepOutcome {
            cell: self.current.cell,
            accepted,
            kind,
        })
    }

    /// Weight, statistic and step-size updates after a main-phase move.
    pub fn adapt(&mut self) -> GammaEvent {
        self.t_main += 1;
        let gamma = self.gamma.gamma();
        let inv_before = self.gamma.inverse_gamma();
        let cell = self.current.cell;
        self.weights.visit(cell, gamma, self.cfg.variant);
        self.adapt_stat(gamma);
        let event = self
            .gamma
            .update(&mut self.weights, self.t_main, self.cfg.variant);
        if let Some(trace) = self.trace.as_mut() {
            trace.push(GammaTraceEntry {
                t: self.t_main,
                cell,
                gamma_before: gamma,
                gamma_after: self.gamma.gamma(),
                inv_before,
                inv_after: self.gamma.inverse_gamma(),
                event,
            });
        }
        event
    }

    fn begin_main(&mut self) {
        if self.main_visits.is_empty() {
            self.weights.reset_counts();
            self.main_visits = vec![0; self.weights.rows() * self.weights.levels()];
        }
    }

    /// Full main-phase iteration without estimation.
    pub fn step_main(&mut self) -> Result<StepOutcome> {
        self.begin_main();
        let out = self.mh_step()?;
        self.record_visit(out.cell);
        self.adapt();
        Ok(out)
    }

    fn record_visit(&mut self, cell: Cell) {
        let i = cell.k * self.weights.levels() + cell.j;
        self.main_visits[i] += 1;
    }

    /// Run the main phase to `total_iters`, feeding every sample with its
    /// pre-update cell weight into `acc`.
    pub fn run_main<H>(&mut self, acc: &mut DrAccumulator, h: H) -> Result<()>
    where
        H: Fn(&M::State) -> Payload,
    {
        self.begin_main();
        let main_len = self.cfg.total_iters - self.cfg.burn_in;
        let snapshot_at = self.cfg.burn_in + main_len - main_len.div_ceil(10);
        while self.t < self.cfg.total_iters {
            if self.t == snapshot_at && main_len > 0 {
                self.take_snapshot();
            }
            let out = self.mh_step()?;
            let w = self.weights.get(out.cell);
            acc.accumulate(&h(&self.current.x), out.cell.k, w, self.t as usize)?;
            self.record_visit(out.cell);
            self.adapt();
        }
        Ok(())
    }

    fn take_snapshot(&mut self) {
        self.snapshot = Some(Snapshot {
            weights: self.weights.normalized_occupied(),
            stats: self
                .registry
                .entries()
                .iter()
                .map(|e| e.stat.components())
                .collect(),
        });
    }

    /// Burn-in followed by the main phase.
    pub fn run<H>(&mut self, acc: &mut DrAccumulator, h: H) -> Result<()>
    where
        H: Fn(&M::State) -> Payload,
    {
        self.run_burn_in()?;
        acc.ensure_domains(self.registry.len() + 1);
        self.run_main(acc, h)
    }
}

fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    if log_ratio.is_nan() || log_ratio == f64::NEG_INFINITY {
        return false;
    }
    rng.random::<f64>().ln() < log_ratio
}
