//! Weighted estimation of domain-based representations.
//!
//! Sample `X^{t+1}` enters its domain's sums with weight `exp(w^t)` taken from
//! the cell it landed in, using the weights as they stood before that
//! iteration's update. Sums are kept relative to a running offset so the
//! exponentials stay representable as the weights grow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest exponent accepted before the accumulator rescales.
const RESCALE_AT: f64 = 500.0;

/// Function value carried by a sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Payload {
    Scalar { value: f64 },
    Vector { values: Vec<f64> },
    /// Row-major.
    Matrix {
        rows: usize,
        cols: usize,
        values: Vec<f64>,
    },
}

impl Payload {
    pub fn scalar(value: f64) -> Self {
        Payload::Scalar { value }
    }

    pub fn vector(values: Vec<f64>) -> Self {
        Payload::Vector { values }
    }

    pub fn matrix(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(rows * cols, values.len(), "matrix payload shape mismatch");
        Payload::Matrix { rows, cols, values }
    }

    pub fn as_slice(&self) -> &[f64] {
        match self {
            Payload::Scalar { value } => std::slice::from_ref(value),
            Payload::Vector { values } | Payload::Matrix { values, .. } => values,
        }
    }

    fn shape(&self) -> Shape {
        match self {
            Payload::Scalar { .. } => Shape::Scalar,
            Payload::Vector { values } => Shape::Vector(values.len()),
            Payload::Matrix { rows, cols, .. } => Shape::Matrix(*rows, *cols),
        }
    }

    fn with_values(shape: Shape, values: Vec<f64>) -> Self {
        match shape {
            Shape::Scalar => Payload::Scalar { value: values[0] },
            Shape::Vector(_) => Payload::Vector { values },
            Shape::Matrix(rows, cols) => Payload::Matrix { rows, cols, values },
        }
    }

    /// Element `(i, j)` of a matrix payload.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        match self {
            Payload::Matrix { cols, values, .. } => values[i * cols + j],
            _ => panic!("not a matrix payload"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum Shape {
    Scalar,
    Vector(usize),
    Matrix(usize, usize),
}

impl Shape {
    fn len(self) -> usize {
        match self {
            Shape::Scalar => 1,
            Shape::Vector(n) => n,
            Shape::Matrix(r, c) => r * c,
        }
    }
}

/// Running weighted sums per domain.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DrAccumulator {
    shape: Option<Shape>,
    offset: Option<f64>,
    sum_h: Vec<Vec<f64>>,
    mass: Vec<f64>,
    visits: Vec<u64>,
}

impl DrAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Accumulator pre-sized for domains `0..n`.
    pub fn with_domains(n: usize) -> Self {
        let mut acc = Self::new();
        acc.ensure_domains(n);
        acc
    }

    pub fn ensure_domains(&mut self, n: usize) {
        let len = self.shape.map_or(0, Shape::len);
        while self.mass.len() < n {
            self.mass.push(0.0);
            self.visits.push(0);
            self.sum_h.push(vec![0.0; len]);
        }
    }

    pub fn domains(&self) -> usize {
        self.mass.len()
    }

    pub fn samples(&self) -> u64 {
        self.visits.iter().sum()
    }

    pub fn visits(&self) -> &[u64] {
        &self.visits
    }

    pub fn offset(&self) -> Option<f64> {
        self.offset
    }

    fn set_shape(&mut self, shape: Shape) -> Result<()> {
        match self.shape {
            Some(s) if s != shape => Err(Error::Data(format!(
                "payload shape changed from {s:?} to {shape:?}"
            ))),
            Some(_) => Ok(()),
            None => {
                self.shape = Some(shape);
                for row in &mut self.sum_h {
                    *row = vec![0.0; shape.len()];
                }
                Ok(())
            }
        }
    }

    fn rescale_to(&mut self, new_offset: f64) {
        if let Some(old) = self.offset {
            let f = (old - new_offset).exp();
            for m in &mut self.mass {
                *m *= f;
            }
            for row in &mut self.sum_h {
                for v in row {
                    *v *= f;
                }
            }
        }
        self.offset = Some(new_offset);
    }

    /// Add sample `h` from domain `k` with log-weight `log_w`.
    pub fn accumulate(&mut self, h: &Payload, k: usize, log_w: f64, iteration: usize) -> Result<()> {
        let values = h.as_slice();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinitePayload { iteration });
        }
        if !log_w.is_finite() {
            return Err(Error::Data(format!(
                "non-finite sample weight at iteration {iteration}"
            )));
        }
        self.set_shape(h.shape())?;
        self.ensure_domains(k + 1);
        match self.offset {
            None => self.offset = Some(log_w),
            Some(o) if log_w - o > RESCALE_AT => self.rescale_to(log_w),
            Some(_) => {}
        }
        let a = (log_w - self.offset.unwrap_or(0.0)).exp();
        self.mass[k] += a;
        self.visits[k] += 1;
        for (s, v) in self.sum_h[k].iter_mut().zip(values) {
            *s += a * v;
        }
        Ok(())
    }

    /// Fold another accumulator into this one. Associative and commutative
    /// up to floating-point rounding.
    pub fn merge(&mut self, other: &DrAccumulator) -> Result<()> {
        let Some(other_shape) = other.shape else {
            self.ensure_domains(other.domains());
            return Ok(());
        };
        self.set_shape(other_shape)?;
        self.ensure_domains(other.domains());
        let other_offset = other.offset.unwrap_or(0.0);
        let target = match self.offset {
            Some(o) => o.max(other_offset),
            None => other_offset,
        };
        if self.offset != Some(target) {
            self.rescale_to(target);
        }
        let f = (other_offset - target).exp();
        for k in 0..other.domains() {
            self.mass[k] += f * other.mass[k];
            self.visits[k] += other.visits[k];
            for (s, v) in self.sum_h[k].iter_mut().zip(&other.sum_h[k]) {
                *s += f * v;
            }
        }
        Ok(())
    }

    /// Relabel domains through `map`; several sources may share a target.
    pub fn relabel(&self, map: &[usize]) -> DrAccumulator {
        let n = map.iter().copied().max().map_or(0, |m| m + 1);
        let len = self.shape.map_or(0, Shape::len);
        let mut out = DrAccumulator {
            shape: self.shape,
            offset: self.offset,
            sum_h: vec![vec![0.0; len]; n],
            mass: vec![0.0; n],
            visits: vec![0; n],
        };
        for (k, &dst) in map.iter().enumerate().take(self.domains()) {
            out.mass[dst] += self.mass[k];
            out.visits[dst] += self.visits[k];
            for (s, v) in out.sum_h[dst].iter_mut().zip(&self.sum_h[k]) {
                *s += v;
            }
        }
        out
    }

    pub fn finalize(&self) -> Result<DomainRepresentation> {
        let shape = self.shape.ok_or(Error::EmptyAccumulator)?;
        let total: f64 = self.mass.iter().sum();
        if self.samples() == 0 || total <= 0.0 {
            return Err(Error::EmptyAccumulator);
        }
        let mut entries = Vec::with_capacity(self.domains());
        let mut overall = vec![0.0; shape.len()];
        for k in 0..self.domains() {
            let lambda = self.mass[k] / total;
            let mu = (self.visits[k] > 0 && self.mass[k] > 0.0).then(|| {
                let vals: Vec<f64> = self.sum_h[k].iter().map(|s| s / self.mass[k]).collect();
                for (o, v) in overall.iter_mut().zip(&vals) {
                    *o += lambda * v;
                }
                Payload::with_values(shape, vals)
            });
            entries.push(DomainEstimate {
                k,
                lambda,
                log_lambda: lambda.ln(),
                mu,
                visits: self.visits[k],
            });
        }
        Ok(DomainRepresentation {
            entries,
            overall: Payload::with_values(shape, overall),
        })
    }
}

/// Estimated mass and conditional expectation of one domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainEstimate {
    pub k: usize,
    pub lambda: f64,
    pub log_lambda: f64,
    /// `None` when the domain was never visited.
    pub mu: Option<Payload>,
    pub visits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainRepresentation {
    pub entries: Vec<DomainEstimate>,
    pub overall: Payload,
}

impl DomainRepresentation {
    pub fn lambda(&self, k: usize) -> f64 {
        self.entries.get(k).map_or(0.0, |e| e.lambda)
    }

    pub fn lambda_sum(&self) -> f64 {
        self.entries.iter().map(|e| e.lambda).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_weights_give_plain_averages() {
        let mut acc = DrAccumulator::new();
        for (i, (k, v)) in [(1, 2.0), (1, 4.0), (0, 10.0), (2, 1.0)].iter().enumerate() {
            acc.accumulate(&Payload::scalar(*v), *k, 0.0, i).unwrap();
        }
        let dr = acc.finalize().unwrap();
        assert_eq!(dr.lambda(0), 0.25);
        assert_eq!(dr.lambda(1), 0.5);
        assert_eq!(dr.entries[1].mu, Some(Payload::scalar(3.0)));
    }

    #[test]
    fn hand_trace_of_three_samples() {
        // Weights e^0, e^1, e^2 in domains 1, 2, 1.
        let mut acc = DrAccumulator::new();
        acc.accumulate(&Payload::scalar(1.0), 1, 0.0, 1).unwrap();
        acc.accumulate(&Payload::scalar(5.0), 2, 1.0, 2).unwrap();
        acc.accumulate(&Payload::scalar(3.0), 1, 2.0, 3).unwrap();
        let dr = acc.finalize().unwrap();
        let e = std::f64::consts::E;
        let total = 1.0 + e + e * e;
        assert_relative_eq!(dr.lambda(1), (1.0 + e * e) / total, epsilon = 1e-15);
        assert_relative_eq!(dr.lambda(2), e / total, epsilon = 1e-15);
        assert_eq!(dr.lambda(0), 0.0);
        assert!(dr.entries[0].mu.is_none());
        let mu1 = (1.0 + 3.0 * e * e) / (1.0 + e * e);
        assert_relative_eq!(dr.entries[1].mu.as_ref().unwrap().as_slice()[0], mu1, epsilon = 1e-14);
    }

    #[test]
    fn single_domain_has_unit_mass() {
        let mut acc = DrAccumulator::with_domains(4);
        acc.accumulate(&Payload::vector(vec![1.0, 2.0]), 3, 7.0, 0).unwrap();
        acc.accumulate(&Payload::vector(vec![3.0, 2.0]), 3, 9.0, 1).unwrap();
        let dr = acc.finalize().unwrap();
        assert_eq!(dr.lambda(3), 1.0);
    }

    #[test]
    fn empty_accumulator_is_an_error() {
        assert!(matches!(
            DrAccumulator::new().finalize(),
            Err(Error::EmptyAccumulator)
        ));
    }

    #[test]
    fn non_finite_payload_reports_iteration() {
        let mut acc = DrAccumulator::new();
        let err = acc
            .accumulate(&Payload::scalar(f64::NAN), 0, 0.0, 42)
            .unwrap_err();
        assert!(matches!(err, Error::NonFinitePayload { iteration: 42 }));
    }

    #[test]
    fn huge_weights_rescale_without_overflow() {
        let mut acc = DrAccumulator::new();
        acc.accumulate(&Payload::scalar(1.0), 0, 0.0, 0).unwrap();
        acc.accumulate(&Payload::scalar(2.0), 1, 5000.0, 1).unwrap();
        acc.accumulate(&Payload::scalar(4.0), 1, 5000.0, 2).unwrap();
        let dr = acc.finalize().unwrap();
        assert_eq!(dr.lambda(0), 0.0);
        assert_eq!(dr.lambda(1), 1.0);
        assert_relative_eq!(dr.entries[1].mu.as_ref().unwrap().as_slice()[0], 3.0);
    }

    fn trace() -> impl Strategy<Value = Vec<(usize, f64, f64)>> {
        prop::collection::vec((0usize..5, -50.0f64..800.0, -10.0f64..10.0), 1..60)
    }

    fn build(samples: &[(usize, f64, f64)], shift: f64) -> DrAccumulator {
        let mut acc = DrAccumulator::new();
        for (i, &(k, w, h)) in samples.iter().enumerate() {
            acc.accumulate(&Payload::vector(vec![h, h * h]), k, w + shift, i)
                .unwrap();
        }
        acc
    }

    proptest! {
        #[test]
        fn masses_sum_to_one_and_overall_is_mixture(samples in trace()) {
            let dr = build(&samples, 0.0).finalize().unwrap();
            prop_assert!((dr.lambda_sum() - 1.0).abs() < 1e-12);
            for i in 0..2 {
                let mix: f64 = dr.entries.iter()
                    .filter_map(|e| e.mu.as_ref().map(|m| e.lambda * m.as_slice()[i]))
                    .sum();
                prop_assert!((mix - dr.overall.as_slice()[i]).abs() <= 1e-12 * (1.0 + mix.abs()));
            }
        }

        #[test]
        fn common_weight_shift_is_invisible(samples in trace(), shift in -300.0f64..300.0) {
            let a = build(&samples, 0.0).finalize().unwrap();
            let b = build(&samples, shift).finalize().unwrap();
            for (x, y) in a.entries.iter().zip(&b.entries) {
                prop_assert!((x.lambda - y.lambda).abs() < 1e-9);
            }
        }

        #[test]
        fn merging_domains_adds_masses(samples in trace()) {
            let acc = build(&samples, 0.0);
            let dr = acc.finalize().unwrap();
            // Fold domains 2, 3, 4 into domain 0.
            let map = [0, 1, 0, 0, 0];
            let merged = acc.relabel(&map[..acc.domains()]).finalize().unwrap();
            let folded: f64 = [0, 2, 3, 4].iter().map(|&k| dr.lambda(k)).sum();
            prop_assert!((merged.lambda(0) - folded).abs() < 1e-12);
        }

        #[test]
        fn split_and_merge_matches_single_pass(samples in trace(), cut in 0usize..60) {
            let cut = cut.min(samples.len());
            let whole = build(&samples, 0.0).finalize().unwrap();
            let mut left = build(&samples[..cut], 0.0);
            let right = build(&samples[cut..], 0.0);
            left.merge(&right).unwrap();
            let merged = left.finalize().unwrap();
            for (x, y) in whole.entries.iter().zip(&merged.entries) {
                prop_assert!((x.lambda - y.lambda).abs() < 1e-9);
            }
        }
    }
}
