use std::f64::consts::PI;

use super::oracle::SeparableTarget;
use super::SmoothTarget;

/// `p(x) ∝ exp(-R(x))` with `R(x) = Σ x_i² + A (m - Σ cos(π x_i))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rastrigin {
    pub a: f64,
    pub m: usize,
}

impl Rastrigin {
    pub fn new(a: f64, m: usize) -> Self {
        Self { a, m }
    }

    /// `R(x)`.
    pub fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|&v| self.r1(v)).sum()
    }

    fn r1(&self, v: f64) -> f64 {
        v * v + self.a * (1.0 - (PI * v).cos())
    }

    fn dr1(&self, v: f64) -> f64 {
        2.0 * v + self.a * PI * (PI * v).sin()
    }
}

impl SmoothTarget for Rastrigin {
    fn dim(&self) -> usize {
        self.m
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        -self.value(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = -self.dr1(v);
        }
    }
}

impl SeparableTarget for Rastrigin {
    fn dim(&self) -> usize {
        self.m
    }

    fn log_density_1d(&self, v: f64) -> f64 {
        -self.r1(v)
    }

    fn derivative_1d(&self, v: f64) -> f64 {
        -self.dr1(v)
    }

    fn support_radius(&self) -> f64 {
        // exp(-x²) is below 1e-300 beyond this.
        27.0
    }
}
