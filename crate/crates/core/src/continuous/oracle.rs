//! Exact domain masses and means for targets that factor over coordinates.
//!
//! Each coordinate's line is cut at the local minima of its 1-D density
//! (found by bisection on the derivative); the basins of the product target
//! are products of these intervals, so every m-dimensional quantity is a
//! product or quotient of 1-D integrals.

use quadrature::double_exponential;
use serde::Serialize;

use crate::error::{Error, Result};

/// Target whose log density is a sum of identical 1-D terms.
pub trait SeparableTarget {
    fn dim(&self) -> usize;
    fn log_density_1d(&self, v: f64) -> f64;
    fn derivative_1d(&self, v: f64) -> f64;
    /// Half-width outside of which the 1-D density is negligible.
    fn support_radius(&self) -> f64;
}

/// One 1-D basin: its mode and the interval it attracts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasinInterval {
    pub mode: f64,
    pub lo: f64,
    pub hi: f64,
    /// `∫ exp(f)` over the interval, relative to the peak of `f`.
    pub mass: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProductOracle {
    pub dim: usize,
    pub basins: Vec<BasinInterval>,
    /// Interior cut points, ascending.
    pub boundaries: Vec<f64>,
    #[serde(skip)]
    shift: f64,
    #[serde(skip)]
    tol: f64,
}

const GRID: f64 = 1e-3;
const PIECE: f64 = 0.25;

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl ProductOracle {
    /// Locate 1-D modes and boundaries and integrate every basin to absolute
    /// tolerance `tol`.
    pub fn build<T: SeparableTarget + ?Sized>(target: &T, tol: f64) -> Result<Self> {
        let span = target.support_radius();
        let d = |v: f64| target.derivative_1d(v);
        let mut modes = Vec::new();
        let mut boundaries = Vec::new();
        let n = (2.0 * span / GRID).ceil() as usize;
        let mut prev_x = -span;
        let mut prev = d(prev_x);
        for i in 1..=n {
            let x = -span + i as f64 * GRID;
            let cur = d(x);
            if prev > 0.0 && cur <= 0.0 {
                modes.push(bisect(d, prev_x, x));
            } else if prev < 0.0 && cur >= 0.0 {
                boundaries.push(bisect(d, prev_x, x));
            }
            prev_x = x;
            prev = cur;
        }
        if modes.is_empty() || boundaries.len() + 1 != modes.len() {
            return Err(Error::InvalidConfig(
                "1-D density does not alternate between modes and boundaries".into(),
            ));
        }
        let shift = modes
            .iter()
            .map(|&m| target.log_density_1d(m))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut oracle = ProductOracle {
            dim: target.dim(),
            basins: Vec::with_capacity(modes.len()),
            boundaries: boundaries.clone(),
            shift,
            tol,
        };
        for (b, &mode) in modes.iter().enumerate() {
            let lo = if b == 0 { -span } else { boundaries[b - 1] };
            let hi = if b + 1 == modes.len() { span } else { boundaries[b] };
            let mass = oracle.integrate(target, lo, hi, |_| 1.0)?;
            let first = oracle.integrate(target, lo, hi, |v| v)?;
            oracle.basins.push(BasinInterval {
                mode,
                lo,
                hi,
                mass,
                mean: first / mass,
            });
        }
        Ok(oracle)
    }

    /// `∫_lo^hi g(v) exp(f(v) - shift) dv`.
    pub fn integrate<T, G>(&self, target: &T, lo: f64, hi: f64, g: G) -> Result<f64>
    where
        T: SeparableTarget + ?Sized,
        G: Fn(f64) -> f64,
    {
        let pieces = ((hi - lo) / PIECE).ceil().max(1.0) as usize;
        let width = (hi - lo) / pieces as f64;
        let mut total = 0.0;
        for p in 0..pieces {
            let a = lo + p as f64 * width;
            let b = if p + 1 == pieces { hi } else { a + width };
            let out = double_exponential::integrate(
                |v| g(v) * (target.log_density_1d(v) - self.shift).exp(),
                a,
                b,
                self.tol / pieces as f64,
            );
            if !out.integral.is_finite() || out.error_estimate > self.tol {
                return Err(Error::Quadrature { lo: a, hi: b });
            }
            total += out.integral;
        }
        Ok(total)
    }

    /// 1-D expectation of `g` conditional on basin `b`.
    pub fn basin_expectation<T, G>(&self, target: &T, b: usize, g: G) -> Result<f64>
    where
        T: SeparableTarget + ?Sized,
        G: Fn(f64) -> f64,
    {
        let basin = &self.basins[b];
        Ok(self.integrate(target, basin.lo, basin.hi, g)? / basin.mass)
    }

    pub fn basins_per_axis(&self) -> usize {
        self.basins.len()
    }

    fn total_mass(&self) -> f64 {
        self.basins.iter().map(|b| b.mass).sum()
    }

    /// Every m-dimensional domain as a tuple of 1-D basin indices, in
    /// lexicographic order.
    pub fn domains(&self) -> Vec<Vec<usize>> {
        let nb = self.basins.len();
        let count = nb.pow(self.dim as u32);
        (0..count)
            .map(|mut c| {
                let mut idx = vec![0; self.dim];
                for slot in idx.iter_mut().rev() {
                    *slot = c % nb;
                    c /= nb;
                }
                idx
            })
            .collect()
    }

    /// 1-D basin of each coordinate of `x`.
    pub fn classify(&self, x: &[f64]) -> Vec<usize> {
        x.iter()
            .map(|&v| self.boundaries.iter().filter(|&&b| v > b).count())
            .collect()
    }

    pub fn mode(&self, domain: &[usize]) -> Vec<f64> {
        domain.iter().map(|&b| self.basins[b].mode).collect()
    }

    pub fn log_lambda(&self, domain: &[usize]) -> f64 {
        let z = self.total_mass().ln();
        domain.iter().map(|&b| self.basins[b].mass.ln() - z).sum()
    }

    pub fn lambda(&self, domain: &[usize]) -> f64 {
        self.log_lambda(domain).exp()
    }

    /// Conditional coordinate means on a domain.
    pub fn mean(&self, domain: &[usize]) -> Vec<f64> {
        domain.iter().map(|&b| self.basins[b].mean).collect()
    }

    /// Index of the 1-D basin holding the highest mode.
    pub fn top_basin(&self) -> usize {
        let mut best = 0;
        for (i, b) in self.basins.iter().enumerate() {
            if b.mass > 0.0 && b.mode.abs() < self.basins[best].mode.abs() {
                best = i;
            }
        }
        best
    }

    /// 1 plus the number of coordinates away from the central basin.
    pub fn layer(&self, domain: &[usize]) -> usize {
        let top = self.top_basin();
        1 + domain.iter().filter(|&&b| b != top).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuous::{gradient_ascent, DescentSettings, Rastrigin};
    use crate::rng::chain_rng;
    use rand::Rng;

    fn oracle(m: usize) -> (Rastrigin, ProductOracle) {
        let r = Rastrigin::new(2.0, m);
        let o = ProductOracle::build(&r, 1e-12).unwrap();
        (r, o)
    }

    #[test]
    fn three_symmetric_basins_per_axis() {
        let (_, o) = oracle(1);
        assert_eq!(o.basins.len(), 3);
        assert!((o.basins[0].mode + 1.805).abs() < 5e-4);
        assert!(o.basins[1].mode.abs() < 1e-12);
        assert!((o.basins[0].mass - o.basins[2].mass).abs() < 1e-12);
        assert!((o.boundaries[0] + o.boundaries[1]).abs() < 1e-12);
    }

    #[test]
    fn domain_masses_partition_unity() {
        let (_, o) = oracle(4);
        let total: f64 = o.domains().iter().map(|d| o.lambda(d)).sum();
        assert!((total - 1.0).abs() < 1e-10);
        assert_eq!(o.domains().len(), 81);
    }

    #[test]
    fn layers_share_masses() {
        let (_, o) = oracle(4);
        let mut by_layer: Vec<Vec<f64>> = vec![Vec::new(); 6];
        for d in o.domains() {
            by_layer[o.layer(&d)].push(o.log_lambda(&d));
        }
        let sizes: Vec<usize> = by_layer.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![0, 1, 8, 24, 32, 16]);
        for layer in &by_layer[1..] {
            for v in layer {
                assert!((v - layer[0]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tolerances_agree() {
        let r = Rastrigin::new(2.0, 1);
        let a = ProductOracle::build(&r, 1e-12).unwrap();
        let b = ProductOracle::build(&r, 1e-10).unwrap();
        for (x, y) in a.basins.iter().zip(&b.basins) {
            assert!((x.mass - y.mass).abs() < 1e-9);
            assert!((x.mean - y.mean).abs() < 1e-9);
        }
    }

    #[test]
    fn descent_agrees_with_boundary_classification() {
        let (r, o) = oracle(3);
        let s = DescentSettings::default();
        let mut rng = chain_rng(5, 0);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-4.0..4.0)).collect();
            let mode = gradient_ascent(&r, &x, &s).unwrap();
            let expected = o.mode(&o.classify(&x));
            for (a, b) in mode.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-3, "start {x:?}: {mode:?} vs {expected:?}");
            }
        }
    }
}
