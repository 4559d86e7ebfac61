//! Small ring-shaped state space used by the sampler tests.

use rand::Rng;
use serde::Serialize;

use super::{AdaptiveStatistic, ModeEntry, StateSpaceModel};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scalar(pub f64);

impl AdaptiveStatistic for Scalar {
    fn relax_toward(&mut self, target: &Self, step: f64) {
        self.0 += step * (target.0 - self.0);
    }

    fn components(&self) -> Vec<f64> {
        vec![self.0]
    }
}

/// States `0..n` on a ring with arbitrary log densities; local moves go to
/// either neighbour, mixed jumps are uniform over the ring.
pub struct Ring {
    pub log_p: Vec<f64>,
}

impl Ring {
    pub fn new(log_p: Vec<f64>) -> Self {
        Self { log_p }
    }

    /// Two peaks of unequal height separated by a deep valley.
    pub fn bimodal() -> Self {
        let log_p = [0.0, -1.0, -3.0, -6.0, -9.0, -6.0, -3.5, -1.5, -0.5, -1.0, -1.2, -0.6]
            .to_vec();
        Self::new(log_p)
    }

    fn n(&self) -> usize {
        self.log_p.len()
    }

    fn step(&self, i: usize, up: bool) -> usize {
        if up {
            (i + 1) % self.n()
        } else {
            (i + self.n() - 1) % self.n()
        }
    }

    /// Basin mode of every state.
    pub fn modes(&self) -> Vec<usize> {
        (0..self.n()).map(|i| self.descend_to_mode(&i).unwrap()).collect()
    }
}

impl StateSpaceModel for Ring {
    type State = usize;
    type Stat = Scalar;

    fn log_density(&self, x: &usize) -> f64 {
        self.log_p[*x]
    }

    fn descend_to_mode(&self, x: &usize) -> Result<usize> {
        let mut i = *x;
        loop {
            let (a, b) = (self.step(i, false), self.step(i, true));
            let best = if self.log_p[b] > self.log_p[a] { b } else { a };
            if self.log_p[best] > self.log_p[i] {
                i = best;
            } else {
                return Ok(i);
            }
        }
    }

    fn states_equal(&self, a: &usize, b: &usize) -> bool {
        a == b
    }

    fn propose_local<R: Rng + ?Sized>(
        &self,
        x: &usize,
        _adapt: Option<&Scalar>,
        rng: &mut R,
    ) -> Result<usize> {
        Ok(self.step(*x, rng.random::<bool>()))
    }

    fn local_log_density(&self, from: &usize, to: &usize, _adapt: Option<&Scalar>) -> f64 {
        if self.step(*from, true) == *to || self.step(*from, false) == *to {
            0.5f64.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn mixed_jump_sample<R: Rng + ?Sized>(&self, _mode: &usize, _stat: &Scalar, rng: &mut R) -> usize {
        rng.random_range(0..self.n())
    }

    fn mixed_jump_log_density(&self, _modes: &[ModeEntry<usize, Scalar>], _y: &usize) -> f64 {
        -(self.n() as f64).ln()
    }

    fn adapt_statistic(&self, x: &usize, mode: &usize) -> Scalar {
        Scalar(x.abs_diff(*mode) as f64)
    }

    fn initial_adapt_statistic(&self) -> Scalar {
        Scalar(1.0)
    }
}
