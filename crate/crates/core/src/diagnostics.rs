//! Runtime convergence checks for a finished chain.

use serde::{Deserialize, Serialize};

pub const EXTEND_RUN: &str = "extend run";
pub const REINITIALIZE: &str = "reinitialize with smaller gamma_1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsThresholds {
    /// Largest acceptable final step size.
    pub gamma: f64,
    /// Largest acceptable `max |c - c̄| / c̄` over occupied cells.
    pub visit_deviation: f64,
    /// Largest acceptable relative change of W or V over the final tenth.
    pub relative_change: f64,
    pub eigen_min: f64,
    pub eigen_max: f64,
}

impl Default for DiagnosticsThresholds {
    fn default() -> Self {
        Self {
            gamma: 1e-3,
            visit_deviation: 1.0,
            relative_change: 0.05,
            eigen_min: 1e-8,
            eigen_max: 1e8,
        }
    }
}

/// Raw material for the checks.
#[derive(Debug, Clone, Default)]
pub struct DiagnosticsInput {
    pub gamma_n: f64,
    /// Post-burn-in visits of every cell that has ever been occupied.
    pub visits: Vec<u64>,
    /// Normalized cell masses at the snapshot and at the end, aligned.
    pub w_snapshot: Vec<f64>,
    pub w_final: Vec<f64>,
    /// Flattened statistics at the snapshot and at the end, aligned.
    pub v_snapshot: Vec<f64>,
    pub v_final: Vec<f64>,
    /// Smallest and largest eigenvalue over all covariance statistics.
    pub eigen_range: Option<(f64, f64)>,
    /// False if any statistic left its admissible set.
    pub stats_finite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    /// Step size not small yet or visits far from uniform.
    pub flag_a: bool,
    pub max_visit_deviation: f64,
    /// W or V still moving near the end of the run.
    pub flag_b: bool,
    pub w_relative_change: Option<f64>,
    pub v_relative_change: Option<f64>,
    /// Adaptive statistic out of range.
    pub flag_c: bool,
    pub eigen_range: Option<(f64, f64)>,
    pub recommendations: Vec<String>,
}

impl DiagnosticsReport {
    pub fn all_clear(&self) -> bool {
        !(self.flag_a || self.flag_b || self.flag_c)
    }
}

/// `max |c - c̄| / c̄`; infinite when nothing was visited.
pub fn max_relative_deviation(visits: &[u64]) -> f64 {
    if visits.is_empty() {
        return f64::INFINITY;
    }
    let mean = visits.iter().sum::<u64>() as f64 / visits.len() as f64;
    if mean == 0.0 {
        return f64::INFINITY;
    }
    visits
        .iter()
        .map(|&c| (c as f64 - mean).abs())
        .fold(0.0, f64::max)
        / mean
}

/// `‖b - a‖ / ‖a‖` in the Euclidean norm, `None` if lengths differ or `a` is empty.
pub fn relative_change(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.is_empty() || a.len() != b.len() {
        return None;
    }
    let num: f64 = a.iter().zip(b).map(|(x, y)| (y - x).powi(2)).sum();
    let den: f64 = a.iter().map(|x| x * x).sum();
    if den == 0.0 {
        return Some(if num == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Some((num / den).sqrt())
}

pub fn diagnose(input: &DiagnosticsInput, th: &DiagnosticsThresholds) -> DiagnosticsReport {
    let dev = max_relative_deviation(&input.visits);
    let flag_a = !(input.gamma_n < th.gamma && dev < th.visit_deviation);

    let w_change = relative_change(&input.w_snapshot, &input.w_final);
    let v_change = relative_change(&input.v_snapshot, &input.v_final);
    let moving = |c: Option<f64>| c.is_none_or(|c| !(c < th.relative_change));
    let flag_b = moving(w_change) || (!input.v_snapshot.is_empty() && moving(v_change));

    let eigen_bad = input
        .eigen_range
        .is_some_and(|(lo, hi)| !(lo >= th.eigen_min && hi <= th.eigen_max));
    let flag_c = eigen_bad || !input.stats_finite;

    let mut recommendations = Vec::new();
    if flag_a || flag_b {
        recommendations.push(EXTEND_RUN.to_string());
    }
    if flag_c {
        recommendations.push(REINITIALIZE.to_string());
    }
    DiagnosticsReport {
        flag_a,
        max_visit_deviation: dev,
        flag_b,
        w_relative_change: w_change,
        v_relative_change: v_change,
        flag_c,
        eigen_range: input.eigen_range,
        recommendations,
    }
}
