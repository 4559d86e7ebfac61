use serde::Serialize;

use super::config::{SamplerConfig, Variant};
use super::weights::WeightMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    Adaptive,
    Deterministic,
}

/// Outcome of one schedule update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaEvent {
    /// Visits were not flat; gamma kept.
    Held,
    /// Visits were flat; gamma multiplied by rho and counters reset.
    Decreased,
    /// Deterministic `1 / (t + xi)` decay.
    Harmonic,
}

/// Modified Wang-Landau step-size schedule.
///
/// In the deterministic phase the reciprocal `1 / gamma` is stored and
/// advanced by exactly one per iteration.
#[derive(Debug, Clone, Serialize)]
pub struct GammaSchedule {
    gamma: f64,
    inv_gamma: f64,
    rho: f64,
    eta: f64,
    eps: f64,
    phase: Phase,
    t_c: Option<u64>,
    xi: Option<f64>,
}

impl GammaSchedule {
    pub fn new(gamma_1: f64, rho: f64, eta: f64, eps: f64) -> Self {
        Self {
            gamma: gamma_1,
            inv_gamma: 1.0 / gamma_1,
            rho,
            eta,
            eps,
            phase: Phase::Adaptive,
            t_c: None,
            xi: None,
        }
    }

    pub fn from_config(cfg: &SamplerConfig) -> Self {
        Self::new(cfg.gamma_1, cfg.rho, cfg.eta, cfg.eps_gamma)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `1 / gamma`; exact in the deterministic phase.
    pub fn inverse_gamma(&self) -> f64 {
        self.inv_gamma
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn t_c(&self) -> Option<u64> {
        self.t_c
    }

    pub fn xi(&self) -> Option<f64> {
        self.xi
    }

    /// Advance from `gamma_t` to `gamma_{t+1}` after the visit of iteration
    /// `t` has been recorded in `weights`.
    pub fn update(&mut self, weights: &mut WeightMatrix, t: u64, variant: Variant) -> GammaEvent {
        if self.gamma < self.eps {
            if self.phase == Phase::Adaptive {
                self.phase = Phase::Deterministic;
                self.t_c = Some(t);
                self.inv_gamma = 1.0 / self.gamma;
                self.xi = Some(self.inv_gamma - t as f64);
            }
            self.inv_gamma += 1.0;
            self.gamma = 1.0 / self.inv_gamma;
            return GammaEvent::Harmonic;
        }
        if is_flat(&weights.checked_counts(variant), self.eta) {
            self.gamma *= self.rho;
            self.inv_gamma = 1.0 / self.gamma;
            weights.reset_counts();
            GammaEvent::Decreased
        } else {
            GammaEvent::Held
        }
    }
}

/// `max |c - mean| < eta * mean`; an empty or all-zero histogram is not flat.
pub fn is_flat(counts: &[u64], eta: f64) -> bool {
    if counts.is_empty() {
        return false;
    }
    let mean = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
    if mean <= 0.0 {
        return false;
    }
    let dev = counts
        .iter()
        .map(|&c| (c as f64 - mean).abs())
        .fold(0.0, f64::max);
    dev < eta * mean
}
