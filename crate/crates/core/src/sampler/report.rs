use rand::Rng;
use serde::Serialize;
use serde_json::Value;

use super::config::SamplerConfig;
use super::engine::{MdSampler, MoveStats};
use super::weights::Cell;
use super::{AdaptiveStatistic, StateSpaceModel};
use crate::diagnostics::{diagnose, DiagnosticsInput, DiagnosticsReport, DiagnosticsThresholds};
use crate::error::Result;
use crate::estimation::{DomainRepresentation, Payload};

#[derive(Debug, Clone, Serialize)]
pub struct ModeRecord {
    pub k: usize,
    /// `null` for the residual domain.
    pub state: Value,
    pub log_density: Option<f64>,
    pub lambda: f64,
    pub log_lambda: f64,
    pub mu: Option<Payload>,
    pub stat: Value,
    pub visits: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellRecord {
    pub k: usize,
    pub j: usize,
    pub visits: u64,
    pub log_weight: f64,
    pub occupied: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplerReport {
    pub config: SamplerConfig,
    pub ladder: Vec<f64>,
    pub modes: Vec<ModeRecord>,
    pub overall_mu: Payload,
    pub gamma_n: f64,
    pub t_c: Option<u64>,
    pub local_acceptance: f64,
    pub mixed_acceptance: f64,
    pub burn_in_moves: MoveStats,
    pub main_moves: MoveStats,
    pub best_log_density: f64,
    pub cells: Vec<CellRecord>,
    pub diagnostics: DiagnosticsReport,
}

impl<M: StateSpaceModel, R: Rng> MdSampler<'_, M, R> {
    /// Inputs to the convergence checks from the chain's current state.
    pub fn diagnostics_input(&self) -> DiagnosticsInput {
        let w = self.weights();
        let visits = self.main_visits();
        let occupied: Vec<Cell> = w.cells().filter(|&c| w.is_occupied(c)).collect();
        let cell_visits = occupied
            .iter()
            .map(|c| visits.get(c.k * w.levels() + c.j).copied().unwrap_or(0))
            .collect();
        let final_w = w.normalized_occupied();
        let (w_snapshot, w_final, v_snapshot, v_final) = match &self.snapshot {
            Some(snap) => {
                let mut a = Vec::new();
                let mut b = Vec::new();
                for (cell, p) in &final_w {
                    if let Some((_, q)) = snap.weights.iter().find(|(c, _)| c == cell) {
                        a.push(*q);
                        b.push(*p);
                    }
                }
                let vs: Vec<f64> = snap.stats.iter().flatten().copied().collect();
                let vf: Vec<f64> = self
                    .registry()
                    .entries()
                    .iter()
                    .flat_map(|e| e.stat.components())
                    .collect();
                (a, b, vs, vf)
            }
            None => (Vec::new(), Vec::new(), Vec::new(), Vec::new()),
        };
        let model = self.model();
        let stats_finite = self
            .registry()
            .entries()
            .iter()
            .all(|e| model.statistic_in_range(&e.stat));
        DiagnosticsInput {
            gamma_n: self.gamma().gamma(),
            visits: cell_visits,
            w_snapshot,
            w_final,
            v_snapshot,
            v_final,
            eigen_range: model.statistic_eigen_range(self.registry().entries()),
            stats_finite,
        }
    }

    pub fn report(
        &self,
        dr: &DomainRepresentation,
        thresholds: &DiagnosticsThresholds,
    ) -> Result<SamplerReport> {
        let mut modes = Vec::with_capacity(self.registry().len() + 1);
        for k in 0..=self.registry().len() {
            let est = dr.entries.get(k);
            let (state, log_density, stat) = if k == 0 {
                (Value::Null, None, Value::Null)
            } else {
                let e = self.registry().domain(k);
                (
                    serde_json::to_value(&e.state)?,
                    Some(e.log_density),
                    serde_json::to_value(&e.stat)?,
                )
            };
            modes.push(ModeRecord {
                k,
                state,
                log_density,
                lambda: est.map_or(0.0, |e| e.lambda),
                log_lambda: est.map_or(f64::NEG_INFINITY, |e| e.log_lambda),
                mu: est.and_then(|e| e.mu.clone()),
                stat,
                visits: est.map_or(0, |e| e.visits),
            });
        }
        let w = self.weights();
        let visits = self.main_visits();
        let cells = w
            .cells()
            .map(|c| CellRecord {
                k: c.k,
                j: c.j,
                visits: visits.get(c.k * w.levels() + c.j).copied().unwrap_or(0),
                log_weight: w.get(c),
                occupied: w.is_occupied(c),
            })
            .collect();
        let main = self.main_stats();
        Ok(SamplerReport {
            config: self.config().clone(),
            ladder: self.ladder().cuts(),
            modes,
            overall_mu: dr.overall.clone(),
            gamma_n: self.gamma().gamma(),
            t_c: self.gamma().t_c(),
            local_acceptance: main.local_rate(),
            mixed_acceptance: main.mixed_rate(),
            burn_in_moves: self.burn_in_stats(),
            main_moves: main,
            best_log_density: self.best_found().1,
            cells,
            diagnostics: diagnose(&self.diagnostics_input(), thresholds),
        })
    }
}
