//! Euclidean state spaces: gradient-ascent basins, Gaussian proposals and
//! covariance adaptation.

mod oracle;
mod rastrigin;

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::ser::{Serialize, SerializeSeq, Serializer};

use crate::error::{Error, Result};
use crate::sampler::{log_sum_exp, AdaptiveStatistic, ModeEntry, StateSpaceModel};

pub use oracle::{BasinInterval, ProductOracle};
pub use rastrigin::Rastrigin;

/// Point in `R^m`.
pub type EuclideanState = Vec<f64>;

/// A smooth log density with an analytic gradient.
pub trait SmoothTarget: Sync {
    fn dim(&self) -> usize;
    fn log_density(&self, x: &[f64]) -> f64;
    /// Gradient of the log density, written into `out`.
    fn gradient(&self, x: &[f64], out: &mut [f64]);
}

/// Symmetric matrix statistic with a cached Cholesky factor.
#[derive(Clone, Debug)]
pub struct CovarianceStat {
    v: DMatrix<f64>,
    chol: Option<Cholesky<f64, Dyn>>,
}

impl CovarianceStat {
    pub fn new(v: DMatrix<f64>) -> Self {
        let chol = Cholesky::new(v.clone());
        Self { v, chol }
    }

    /// Matrix used only as an update target; no factorization.
    fn target(v: DMatrix<f64>) -> Self {
        Self { v, chol: None }
    }

    pub fn scaled_identity(m: usize, s: f64) -> Self {
        Self::new(DMatrix::identity(m, m) * s)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn is_positive_definite(&self) -> bool {
        self.chol.is_some()
    }

    fn factor(&self) -> Result<&Cholesky<f64, Dyn>> {
        self.chol.as_ref().ok_or(Error::NotPositiveDefinite)
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.v.clone().symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// `log N(y; mean, scale^2 V)`; `-inf` if V is not positive definite.
    pub fn gaussian_log_density(&self, mean: &[f64], y: &[f64], scale: f64) -> f64 {
        let Some(chol) = &self.chol else {
            return f64::NEG_INFINITY;
        };
        let m = mean.len();
        let d = DVector::from_iterator(m, y.iter().zip(mean).map(|(a, b)| (a - b) / scale));
        let z = chol.l_dirty().solve_lower_triangular(&d).unwrap_or(d);
        let l = chol.l_dirty();
        let log_det_l: f64 = (0..m).map(|i| l[(i, i)].ln()).sum();
        -0.5 * z.norm_squared() - log_det_l - m as f64 * scale.ln() - 0.5 * m as f64 * (2.0 * PI).ln()
    }

    /// `mean + scale * L z` with `z` standard normal.
    pub fn sample<R: Rng + ?Sized>(&self, mean: &[f64], scale: f64, rng: &mut R) -> Result<Vec<f64>> {
        let chol = self.factor()?;
        let m = mean.len();
        let z = DVector::from_iterator(m, (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let lz = chol.l() * z;
        Ok(mean.iter().zip(lz.iter()).map(|(a, b)| a + scale * b).collect())
    }
}

impl PartialEq for CovarianceStat {
    fn eq(&self, other: &Self) -> bool {
        self.v == other.v
    }
}

impl Serialize for CovarianceStat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.v.nrows()))?;
        for i in 0..self.v.nrows() {
            let row: Vec<f64> = self.v.row(i).iter().copied().collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

impl AdaptiveStatistic for CovarianceStat {
    fn relax_toward(&mut self, target: &Self, step: f64) {
        self.v += (&target.v - &self.v) * step;
        // Keep exact symmetry against rounding drift.
        self.v = (&self.v + self.v.transpose()) * 0.5;
        self.chol = Cholesky::new(self.v.clone());
    }

    fn components(&self) -> Vec<f64> {
        self.v.transpose().iter().copied().collect()
    }
}

/// Settings for gradient ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentSettings {
    pub grad_tol: f64,
    pub budget: usize,
    /// Largest Euclidean displacement of a single step.
    pub max_step: f64,
    pub armijo: f64,
}

impl Default for DescentSettings {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            budget: 10_000,
            max_step: 0.1,
            armijo: 1e-4,
        }
    }
}

/// Gradient ascent on `log p` with Armijo backtracking from a unit step.
///
/// Each step is additionally capped in length so the path cannot leap over
/// a basin boundary, keeping the endpoint faithful to the continuous flow.
pub fn gradient_ascent<T: SmoothTarget + ?Sized>(
    target: &T,
    x0: &[f64],
    s: &DescentSettings,
) -> Result<Vec<f64>> {
    let m = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; m];
    let mut gy = vec![0.0; m];
    let mut y = vec![0.0; m];
    let mut f = target.log_density(&x);
    target.gradient(&x, &mut g);
    for _ in 0..s.budget {
        let gn2 = g.iter().map(|v| v * v).sum::<f64>();
        let gn = gn2.sqrt();
        if gn < s.grad_tol {
            return Ok(x);
        }
        let mut step = 1.0f64.min(s.max_step / gn);
        loop {
            for i in 0..m {
                y[i] = x[i] + step * g[i];
            }
            let fy = target.log_density(&y);
            target.gradient(&y, &mut gy);
            // Once the predicted gain drops below the rounding noise of f,
            // Armijo is decided by noise; require a smaller gradient instead.
            let accept = if step * gn2 > 64.0 * f64::EPSILON * f.abs().max(1.0) {
                fy >= f + s.armijo * step * gn2
            } else {
                gy.iter().map(|v| v * v).sum::<f64>() < gn2
            };
            if accept {
                std::mem::swap(&mut x, &mut y);
                std::mem::swap(&mut g, &mut gy);
                f = fy;
                break;
            }
            step *= 0.5;
            if step * gn < 1e-300 {
                // No representable progress: x is a stationary point.
                return Ok(x);
            }
        }
    }
    Err(Error::DescentFailed {
        budget: s.budget,
        iteration: None,
    })
}

/// Euclidean instance of the sampler's state-space contract.
#[derive(Debug, Clone)]
pub struct EuclideanModel<T> {
    pub target: T,
    /// Local proposal scale.
    pub sigma: f64,
    /// Euclidean distance below which two modes are the same.
    pub mode_tol: f64,
    pub descent: DescentSettings,
    /// Initial statistic is `init_scale * I`.
    pub init_scale: f64,
    pub tail_margin: Option<f64>,
}

impl<T: SmoothTarget> EuclideanModel<T> {
    pub fn new(target: T, sigma: f64, mode_tol: f64) -> Self {
        Self {
            target,
            sigma,
            mode_tol,
            descent: DescentSettings::default(),
            init_scale: 0.01,
            tail_margin: Some(50.0),
        }
    }

    fn identity(&self) -> CovarianceStat {
        CovarianceStat::scaled_identity(self.target.dim(), 1.0)
    }
}

impl<T: SmoothTarget> StateSpaceModel for EuclideanModel<T> {
    type State = EuclideanState;
    type Stat = CovarianceStat;

    fn log_density(&self, x: &Self::State) -> f64 {
        self.target.log_density(x)
    }

    fn descend_to_mode(&self, x: &Self::State) -> Result<Self::State> {
        gradient_ascent(&self.target, x, &self.descent)
    }

    fn states_equal(&self, a: &Self::State, b: &Self::State) -> bool {
        a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>() < self.mode_tol * self.mode_tol
    }

    fn propose_local<R: Rng + ?Sized>(
        &self,
        x: &Self::State,
        adapt: Option<&Self::Stat>,
        rng: &mut R,
    ) -> Result<Self::State> {
        match adapt {
            Some(v) => v.sample(x, self.sigma, rng),
            None => Ok(x
                .iter()
                .map(|xi| xi + self.sigma * rng.sample::<f64, _>(StandardNormal))
                .collect()),
        }
    }

    fn local_log_density(
        &self,
        from: &Self::State,
        to: &Self::State,
        adapt: Option<&Self::Stat>,
    ) -> f64 {
        match adapt {
            Some(v) => v.gaussian_log_density(from, to, self.sigma),
            None => {
                let m = from.len() as f64;
                let q: f64 = from.iter().zip(to).map(|(a, b)| (a - b).powi(2)).sum();
                -0.5 * q / (self.sigma * self.sigma)
                    - m * self.sigma.ln()
                    - 0.5 * m * (2.0 * PI).ln()
            }
        }
    }

    fn mixed_jump_sample<R: Rng + ?Sized>(
        &self,
        mode: &Self::State,
        stat: &Self::Stat,
        rng: &mut R,
    ) -> Self::State {
        stat.sample(mode, 1.0, rng)
            .unwrap_or_else(|_| self.identity().sample(mode, 1.0, rng).expect("identity is SPD"))
    }

    fn mixed_jump_log_density(
        &self,
        modes: &[ModeEntry<Self::State, Self::Stat>],
        y: &Self::State,
    ) -> f64 {
        if modes.is_empty() {
            return f64::NEG_INFINITY;
        }
        log_sum_exp(modes.iter().map(|e| e.stat.gaussian_log_density(&e.state, y, 1.0)))
            - (modes.len() as f64).ln()
    }

    fn adapt_statistic(&self, x: &Self::State, mode: &Self::State) -> Self::Stat {
        let d = DVector::from_iterator(x.len(), x.iter().zip(mode).map(|(a, b)| a - b));
        CovarianceStat::target(&d * d.transpose())
    }

    fn initial_adapt_statistic(&self) -> Self::Stat {
        CovarianceStat::scaled_identity(self.target.dim(), self.init_scale)
    }

    fn statistic_in_range(&self, stat: &Self::Stat) -> bool {
        stat.is_positive_definite() && stat.v.iter().all(|v| v.is_finite())
    }

    fn statistic_eigen_range(
        &self,
        entries: &[ModeEntry<Self::State, Self::Stat>],
    ) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for e in entries {
            let ev = e.stat.eigenvalues();
            lo = lo.min(ev[0]);
            hi = hi.max(ev[ev.len() - 1]);
        }
        (!entries.is_empty()).then_some((lo, hi))
    }

    fn tail_cutoff(&self) -> Option<f64> {
        self.tail_margin
    }
}
