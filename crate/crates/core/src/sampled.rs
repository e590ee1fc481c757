//! Uniform-grid sampled functions on an interval.
//!
//! Values live on the nodes of a uniform grid; between nodes the evaluation
//! rule is piecewise linear. Quadrature is composite trapezoid and
//! differentiation is by centered finite differences, both O(h^2), so that
//! construction and verification errors elsewhere in the crate match order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("interval requires a < b, got [{0}, {1}]")]
    EmptyInterval(f64, f64),
    #[error("grid too coarse: {needed} nodes needed, {have} available")]
    GridTooCoarse { needed: usize, have: usize },
    #[error("sampled functions live on different grids")]
    GridMismatch,
}

/// Open interval (a, b) used as the domain of all 1D objects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self, GridError> {
        if a < b {
            Ok(Interval { a, b })
        } else {
            Err(GridError::EmptyInterval(a, b))
        }
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// Uniform nodes a = t_0 < ... < t_{n-1} = b.
    pub fn nodes(&self, n: usize) -> Vec<f64> {
        let h = self.length() / (n - 1) as f64;
        (0..n).map(|i| self.a + i as f64 * h).collect()
    }
}

/// Function given by its values on a uniform grid over an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub interval: Interval,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(interval: Interval, values: Vec<f64>) -> Self {
        assert!(values.len() >= 2, "need at least two samples");
        SampledFunction { interval, values }
    }

    pub fn from_fn(interval: Interval, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let values = interval.nodes(n).into_iter().map(f).collect();
        SampledFunction { interval, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.interval.length() / (self.len() - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.interval.nodes(self.len())
    }

    /// Piecewise-linear evaluation; clamps to the end values outside [a, b].
    pub fn eval(&self, t: f64) -> f64 {
        let h = self.spacing();
        let s = (t - self.interval.a) / h;
        if s <= 0.0 {
            return self.values[0];
        }
        let last = self.len() - 1;
        if s >= last as f64 {
            return self.values[last];
        }
        let i = s.floor() as usize;
        let w = s - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Cumulative integral from the left endpoint by composite trapezoid.
    pub fn cumtrapz(&self) -> SampledFunction {
        let h = self.spacing();
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.len());
        out.push(0.0);
        for w in self.values.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            out.push(acc);
        }
        SampledFunction::new(self.interval, out)
    }

    pub fn zip_map(&self, other: &SampledFunction, f: impl Fn(f64, f64) -> f64) -> SampledFunction {
        assert_eq!(self.len(), other.len(), "grid mismatch");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| f(x, y))
            .collect();
        SampledFunction::new(self.interval, values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> SampledFunction {
        SampledFunction::new(self.interval, self.values.iter().map(|&x| f(x)).collect())
    }
}

/// Centered O(h^2) stencil for the d-th derivative, as (halfwidth, weights).
///
/// Built by convolving the basic first- and second-difference stencils, so
/// the stencil for order d has width 2*ceil(d/2) + 1.
pub fn central_stencil(d: usize) -> (usize, Vec<f64>) {
    let mut w = vec![1.0];
    for _ in 0..d / 2 {
        w = convolve(&w, &[1.0, -2.0, 1.0]);
    }
    if d % 2 == 1 {
        w = convolve(&w, &[-0.5, 0.0, 0.5]);
    }
    ((w.len() - 1) / 2, w)
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// d-th derivative at the interior nodes where the centered stencil fits.
///
/// Returns the values at nodes `halfwidth .. n - halfwidth` together with the
/// index of the first covered node.
pub fn central_derivative(f: &SampledFunction, d: usize) -> Result<(usize, Vec<f64>), GridError> {
    let (hw, w) = central_stencil(d);
    let n = f.len();
    if n < 2 * hw + 1 {
        return Err(GridError::GridTooCoarse {
            needed: 2 * hw + 1,
            have: n,
        });
    }
    let scale = f.spacing().powi(-(d as i32));
    let mut out = Vec::with_capacity(n - 2 * hw);
    for i in hw..n - hw {
        let mut acc = 0.0;
        for (k, &c) in w.iter().enumerate() {
            acc += c * f.values[i - hw + k];
        }
        out.push(acc * scale);
    }
    Ok((hw, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn interval_rejects_empty() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
    }

    #[test]
    fn cumtrapz_exact_on_linear() {
        // trapezoid integrates linear functions exactly
        let iv = Interval::new(0.0, 1.0).unwrap();
        let f = SampledFunction::from_fn(iv, 65, |t| 2.0 * t);
        let g = f.cumtrapz();
        for (t, v) in g.nodes().into_iter().zip(&g.values) {
            assert_abs_diff_eq!(*v, t * t, epsilon = 1e-14);
        }
    }

    #[test]
    fn cumtrapz_second_order_on_smooth() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let exact = |t: f64| -> f64 { -(std::f64::consts::PI * t).cos() / std::f64::consts::PI };
        let err = |n: usize| -> f64 {
            let f = SampledFunction::from_fn(iv, n, |t| (std::f64::consts::PI * t).sin());
            let g = f.cumtrapz();
            g.nodes()
                .into_iter()
                .zip(&g.values)
                .map(|(t, v)| (v - (exact(t) - exact(0.0))).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(129), err(257));
        let order = (e1 / e2).log2();
        assert!(order > 1.9, "observed order {order}");
    }

    #[test]
    fn stencils_match_tables() {
        assert_eq!(central_stencil(1), (1, vec![-0.5, 0.0, 0.5]));
        assert_eq!(central_stencil(2), (1, vec![1.0, -2.0, 1.0]));
        assert_eq!(central_stencil(3), (2, vec![-0.5, 1.0, 0.0, -1.0, 0.5]));
        assert_eq!(central_stencil(4), (2, vec![1.0, -4.0, 6.0, -4.0, 1.0]));
    }

    #[test]
    fn derivative_exact_on_low_degree() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let f = SampledFunction::from_fn(iv, 33, |t| t * t);
        let (hw, d2) = central_derivative(&f, 2).unwrap();
        assert_eq!(hw, 1);
        for v in d2 {
            assert_abs_diff_eq!(v, 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn derivative_too_coarse_errors() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let f = SampledFunction::from_fn(iv, 4, |t| t);
        assert!(matches!(
            central_derivative(&f, 4),
            Err(GridError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn linear_interpolation_between_nodes() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let f = SampledFunction::from_fn(iv, 5, |t| t);
        assert_abs_diff_eq!(f.eval(0.3), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(f.eval(-1.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.eval(2.0), 1.0, epsilon = 1e-15);
    }
}
