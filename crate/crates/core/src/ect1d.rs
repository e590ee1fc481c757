//! One-dimensional ECT (Extended Complete Chebyshev) systems.
//!
//! Builds bases by nested cumulative quadrature from positive weights,
//! verifies them through numerically differentiated Wronskians, recovers the
//! weights from Wronskian ratios, applies the annihilating operator `L_N`,
//! and partitions exact polynomial bases into piecewise-ECT segments by
//! Sturm-sequence sign analysis of their Wronskians.
//!
//! Construction and verification are deliberately separate routes: built
//! bases carry Wronskians from the product of weights, while
//! [`wronskian_numeric`] recomputes them from centered finite differences.

use crate::ratpoly::{
    isolate_real_roots, poly_wronskian, rat_from_f64, Rat, RatPoly, RationalFunction, RootLoc,
};
use crate::report::{fmt_float, parse_float, write_csv, IoFailure};
use crate::rng::CounterRng;
use crate::sampled::{central_derivative, central_stencil, GridError, Interval, SampledFunction};
use nalgebra::DMatrix;
use num::{One, Signed, Zero};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EctError {
    #[error("weight rho_{index} is not strictly positive at node {node} (value {value})")]
    NonPositiveWeight {
        index: usize,
        node: usize,
        value: f64,
    },
    #[error("need at least one weight and n_quad >= 16, got N={n_weights}, n_quad={n_quad}")]
    InvalidSystem { n_weights: usize, n_quad: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("Wronskian W_{order} vanishes at evaluation node {node}")]
    ZeroWronskian { order: usize, node: usize },
    #[error("basis is linearly dependent: W_{order} is the zero polynomial")]
    DependentBasis { order: usize },
    #[error(transparent)]
    Io(#[from] IoFailure),
}

/// Positive weights rho_1..rho_N sampled on a shared uniform grid.
#[derive(Debug, Clone)]
pub struct WeightSystem {
    pub interval: Interval,
    pub weights: Vec<SampledFunction>,
    pub n_quad: usize,
}

impl WeightSystem {
    /// Validates positivity at every sample node and the size invariants.
    pub fn new(interval: Interval, weights: Vec<SampledFunction>) -> Result<Self, EctError> {
        let n_quad = weights.first().map_or(0, SampledFunction::len);
        if weights.is_empty() || n_quad < 16 {
            return Err(EctError::InvalidSystem {
                n_weights: weights.len(),
                n_quad,
            });
        }
        for w in &weights {
            if w.len() != n_quad || w.interval != interval {
                return Err(EctError::Grid(GridError::GridMismatch));
            }
        }
        for (index, w) in weights.iter().enumerate() {
            for (node, &value) in w.values.iter().enumerate() {
                if value <= 0.0 {
                    return Err(EctError::NonPositiveWeight {
                        index: index + 1,
                        node,
                        value,
                    });
                }
            }
        }
        Ok(WeightSystem {
            interval,
            weights,
            n_quad,
        })
    }

    /// Skips the positivity check; used for recovered weights, which may be
    /// negative on non-ECT segments (see the perturbed Heaviside example).
    pub fn from_samples_unchecked(interval: Interval, weights: Vec<SampledFunction>) -> Self {
        let n_quad = weights.first().map_or(0, SampledFunction::len);
        WeightSystem {
            interval,
            weights,
            n_quad,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// ECT basis with its Wronskian sequence.
#[derive(Debug, Clone)]
pub struct EctBasis {
    pub weights: WeightSystem,
    pub basis: Vec<SampledFunction>,
    /// W_k from the product formula rho_1^k rho_2^{k-1} ... rho_k.
    pub wronskians: Vec<SampledFunction>,
}

/// Builds v_1..v_N by nested cumulative trapezoid quadrature from the left
/// endpoint, and the Wronskians W_k from the weight-product formula.
pub fn build_ect(weights: &WeightSystem) -> Result<EctBasis, EctError> {
    let n = weights.len();
    let mut basis = Vec::with_capacity(n);
    for k in 0..n {
        let mut u = weights.weights[k].clone();
        for j in (0..k).rev() {
            u = weights.weights[j].zip_map(&u.cumtrapz(), |w, s| w * s);
        }
        basis.push(u);
    }
    let mut wronskians = Vec::with_capacity(n);
    for k in 1..=n {
        let mut w = weights.weights[0].map(|_| 1.0);
        for (j, rho) in weights.weights.iter().take(k).enumerate() {
            let power = (k - j) as i32;
            w = w.zip_map(rho, |acc, r| acc * r.powi(power));
        }
        wronskians.push(w);
    }
    Ok(EctBasis {
        weights: weights.clone(),
        basis,
        wronskians,
    })
}

/// k-th Wronskian of sampled functions by centered differencing.
///
/// Returns `(first_node, values)`: the determinant of the k x k matrix of
/// derivatives of orders 0..k-1 at each interior node where all stencils fit.
pub fn wronskian_numeric(
    basis: &[SampledFunction],
    k: usize,
) -> Result<(usize, Vec<f64>), EctError> {
    assert!(k >= 1 && k <= basis.len(), "order out of range");
    let n = basis[0].len();
    if n < 2 * k + 1 {
        return Err(EctError::Grid(GridError::GridTooCoarse {
            needed: 2 * k + 1,
            have: n,
        }));
    }
    let (hw_max, _) = central_stencil(k.saturating_sub(1));
    // derivatives[d][j] = (offset_d, values of d-th derivative of basis[j])
    let mut derivatives: Vec<Vec<(usize, Vec<f64>)>> = Vec::with_capacity(k);
    for d in 0..k {
        let mut per_fn = Vec::with_capacity(k);
        for f in basis.iter().take(k) {
            per_fn.push(central_derivative(f, d)?);
        }
        derivatives.push(per_fn);
    }
    let count = n - 2 * hw_max;
    let mut out = Vec::with_capacity(count);
    let mut mat = DMatrix::zeros(k, k);
    for i in 0..count {
        let node = hw_max + i;
        for (d, row) in derivatives.iter().enumerate() {
            for (j, (off, vals)) in row.iter().enumerate() {
                mat[(d, j)] = vals[node - off];
            }
        }
        out.push(mat.clone().determinant());
    }
    Ok((hw_max, out))
}

/// Recovers the weights from the basis Wronskians:
/// rho_1 = W_1, rho_2 = W_2/W_1^2, rho_k = W_k W_{k-2} / W_{k-1}^2.
///
/// The result is packaged without the positivity check (recovered weights of
/// non-ECT systems may change sign).
pub fn recover_weights(basis: &EctBasis) -> Result<WeightSystem, EctError> {
    let ws = &basis.wronskians;
    let values: Vec<Vec<f64>> = ws.iter().map(|w| w.values.clone()).collect();
    let recovered = recover_from_wronskian_values(&values)?;
    let interval = basis.weights.interval;
    Ok(WeightSystem::from_samples_unchecked(
        interval,
        recovered
            .into_iter()
            .map(|v| SampledFunction::new(interval, v))
            .collect(),
    ))
}

/// The Wronskian-ratio recovery on raw value tables (shared by the product
/// and differentiation routes).
pub fn recover_from_wronskian_values(w: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, EctError> {
    let n = w.len();
    let nodes = w[0].len();
    for (k, wk) in w.iter().enumerate() {
        for (node, &v) in wk.iter().enumerate() {
            if v == 0.0 {
                return Err(EctError::ZeroWronskian {
                    order: k + 1,
                    node,
                });
            }
        }
    }
    let mut out = Vec::with_capacity(n);
    out.push(w[0].clone());
    if n >= 2 {
        out.push((0..nodes).map(|i| w[1][i] / (w[0][i] * w[0][i])).collect());
    }
    for k in 2..n {
        out.push(
            (0..nodes)
                .map(|i| w[k][i] * w[k - 2][i] / (w[k - 1][i] * w[k - 1][i]))
                .collect(),
        );
    }
    Ok(out)
}

/// Weight recovery through the independent differentiation route: numeric
/// Wronskians on the common interior window, then the ratio formulas.
pub fn recover_weights_numeric(
    basis: &[SampledFunction],
) -> Result<(usize, Vec<Vec<f64>>), EctError> {
    let n = basis.len();
    let (hw_max, _) = central_stencil(n.saturating_sub(1));
    let mut tables = Vec::with_capacity(n);
    for k in 1..=n {
        let (off, vals) = wronskian_numeric(basis, k)?;
        let skip = hw_max - off;
        tables.push(vals[skip..vals.len() - skip].to_vec());
    }
    Ok((hw_max, recover_from_wronskian_values(&tables)?))
}

/// Applies L_N = (d/dt)(1/rho_N) ... (d/dt)(1/rho_1) by alternating pointwise
/// division and centered differencing; returns `(first_node, values)` on the
/// interior window (one node trimmed per side per derivative).
pub fn apply_ln(weights: &WeightSystem, u: &SampledFunction) -> Result<(usize, Vec<f64>), EctError> {
    let n_ops = weights.len();
    let n = u.len();
    if n != weights.n_quad {
        return Err(EctError::Grid(GridError::GridMismatch));
    }
    if n < 2 * n_ops + 1 {
        return Err(EctError::Grid(GridError::GridTooCoarse {
            needed: 2 * n_ops + 1,
            have: n,
        }));
    }
    let h = u.spacing();
    let mut vals = u.values.clone();
    let mut offset = 0usize;
    for rho in &weights.weights {
        for (i, v) in vals.iter_mut().enumerate() {
            *v /= rho.values[offset + i];
        }
        let next: Vec<f64> = (1..vals.len() - 1)
            .map(|i| (vals[i + 1] - vals[i - 1]) / (2.0 * h))
            .collect();
        vals = next;
        offset += 1;
    }
    Ok((offset, vals))
}

/// One breakpoint of a piecewise-ECT partition.
#[derive(Debug, Clone)]
pub struct Breakpoint {
    /// Exact location when the root is rational.
    pub exact: Option<Rat>,
    pub value: f64,
}

/// Partition of an interval by the Wronskian roots of a polynomial basis.
#[derive(Debug, Clone)]
pub struct EctPartition {
    pub breakpoints: Vec<Breakpoint>,
    /// Per segment, the sign (+1/-1) of (W_1, ..., W_N) inside the segment.
    pub segment_signs: Vec<Vec<i8>>,
    /// Segments on which every W_k > 0.
    pub ect_segments: Vec<bool>,
    /// Exact rational points used for the per-segment sign evaluation.
    pub sample_points: Vec<Rat>,
    /// The exact Wronskian polynomials W_1..W_N.
    pub wronskians: Vec<RatPoly>,
}

/// Exact piecewise-ECT partition of a polynomial basis over (a, b).
///
/// Wronskians are computed in rational arithmetic, their real roots isolated
/// by Sturm sequences, and per-segment signs evaluated exactly at rational
/// sample points strictly inside each segment.
pub fn piecewise_partition(
    basis: &[RatPoly],
    interval: Interval,
) -> Result<EctPartition, EctError> {
    assert!(!basis.is_empty());
    let n = basis.len();
    let a = rat_from_f64(interval.a);
    let b = rat_from_f64(interval.b);
    let mut wronskians = Vec::with_capacity(n);
    for k in 1..=n {
        let w = poly_wronskian(basis, k);
        if w.is_zero() {
            return Err(EctError::DependentBasis { order: k });
        }
        wronskians.push(w);
    }
    // roots of the squarefree product are the union of all W_k roots,
    // isolated in disjoint brackets
    let mut product = RatPoly::constant(Rat::one());
    for w in &wronskians {
        product = product.mul(w);
    }
    let roots = isolate_real_roots(&product, &a, &b);
    // segment boundaries as (lower, upper) rational enclosures
    let mut bounds: Vec<(Rat, Rat)> = vec![(a.clone(), a.clone())];
    for r in &roots {
        match r {
            RootLoc::Exact(v) => bounds.push((v.clone(), v.clone())),
            RootLoc::Bracket(l, u) => bounds.push((l.clone(), u.clone())),
        }
    }
    bounds.push((b.clone(), b.clone()));

    let two = Rat::one() + Rat::one();
    let mut segment_signs = Vec::new();
    let mut ect_segments = Vec::new();
    let mut sample_points = Vec::new();
    for win in bounds.windows(2) {
        let sample = (&win[0].1 + &win[1].0) / &two;
        let signs: Vec<i8> = wronskians
            .iter()
            .map(|w| {
                let v = w.eval(&sample);
                debug_assert!(!v.is_zero(), "sample point hit a Wronskian root");
                if v.is_positive() {
                    1
                } else {
                    -1
                }
            })
            .collect();
        ect_segments.push(signs.iter().all(|&s| s == 1));
        segment_signs.push(signs);
        sample_points.push(sample);
    }
    let breakpoints = roots
        .into_iter()
        .map(|r| Breakpoint {
            value: r.approx_f64(),
            exact: match r {
                RootLoc::Exact(v) => Some(v),
                RootLoc::Bracket(_, _) => None,
            },
        })
        .collect();
    Ok(EctPartition {
        breakpoints,
        segment_signs,
        ect_segments,
        sample_points,
        wronskians,
    })
}

/// Exact weight recovery for a polynomial basis: the rho_k as rational
/// functions W_k W_{k-2} / W_{k-1}^2 (with W_0 = 1, W_{-1} absent).
pub fn exact_recover_weights(basis: &[RatPoly]) -> Result<Vec<RationalFunction>, EctError> {
    let n = basis.len();
    let mut w = Vec::with_capacity(n);
    for k in 1..=n {
        let wk = poly_wronskian(basis, k);
        if wk.is_zero() {
            return Err(EctError::DependentBasis { order: k });
        }
        w.push(wk);
    }
    let one = RatPoly::constant(Rat::one());
    let mut out = Vec::with_capacity(n);
    out.push(RationalFunction::new(w[0].clone(), one.clone()));
    if n >= 2 {
        out.push(RationalFunction::new(w[1].clone(), w[0].mul(&w[0])));
    }
    for k in 2..n {
        out.push(RationalFunction::new(
            w[k].mul(&w[k - 2]),
            w[k - 1].mul(&w[k - 1]),
        ));
    }
    Ok(out)
}

/// The perturbed Heaviside example: the pair {chi(t) t^2 + eps, t^2} on
/// (-1, 1), represented per branch by exact polynomials.
#[derive(Debug, Clone)]
pub struct HeavisideExample {
    pub epsilon: Rat,
    /// Pair on t <= 0: {eps, t^2}.
    pub left_pair: Vec<RatPoly>,
    /// Pair on t >= 0 (also the global polynomial surrogate): {t^2 + eps, t^2}.
    pub right_pair: Vec<RatPoly>,
    /// Partition of the surrogate pair over (-1, 1).
    pub partition: EctPartition,
    /// Recovered rho_2 on each branch, as exact rational functions.
    pub rho2_left: RationalFunction,
    pub rho2_right: RationalFunction,
}

/// Builds the Appendix example for a given rational `epsilon > 0`.
pub fn heaviside_example(epsilon: Rat) -> Result<HeavisideExample, EctError> {
    assert!(epsilon.is_positive());
    let t2 = RatPoly::monomial(Rat::one(), 2);
    let left_pair = vec![RatPoly::constant(epsilon.clone()), t2.clone()];
    let right_pair = vec![
        RatPoly::new(vec![epsilon.clone(), Rat::zero(), Rat::one()]),
        t2,
    ];
    let interval = Interval::new(-1.0, 1.0).expect("valid");
    let partition = piecewise_partition(&right_pair, interval)?;
    let rho2_left = exact_recover_weights(&left_pair)?.remove(1);
    let rho2_right = exact_recover_weights(&right_pair)?.remove(1);
    Ok(HeavisideExample {
        epsilon,
        left_pair,
        right_pair,
        partition,
        rho2_left,
        rho2_right,
    })
}

/// Smooth strictly positive weight system drawn from a seeded stream
/// (bounded trigonometric perturbations of a constant, min value 0.2).
pub fn seeded_smooth_weights(
    interval: Interval,
    n_weights: usize,
    n_quad: usize,
    rng: &mut CounterRng,
) -> WeightSystem {
    let mut weights = Vec::with_capacity(n_weights);
    for _ in 0..n_weights {
        let a = 0.25 * rng.next_symmetric();
        let b = 0.25 * rng.next_symmetric();
        let phase = rng.next_f64();
        let len = interval.length();
        let f = SampledFunction::from_fn(interval, n_quad, |t| {
            let s = (t - interval.a) / len;
            0.7 + a * (std::f64::consts::TAU * (s + phase)).sin()
                + b * (2.0 * std::f64::consts::TAU * s).cos()
        });
        weights.push(f);
    }
    WeightSystem::new(interval, weights).expect("construction keeps weights positive")
}

/// CSV export `t,rho_1,...,rho_N` (nodes ascending, 17 significant digits).
pub fn export_weights_csv(path: &Path, ws: &WeightSystem) -> Result<(), EctError> {
    export_family_csv(path, "rho", &ws.weights)
}

/// CSV export `t,v_1,...,v_N`.
pub fn export_basis_csv(path: &Path, basis: &EctBasis) -> Result<(), EctError> {
    export_family_csv(path, "v", &basis.basis)
}

fn export_family_csv(
    path: &Path,
    prefix: &str,
    fns: &[SampledFunction],
) -> Result<(), EctError> {
    let names: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=fns.len()).map(|k| format!("{prefix}_{k}")))
        .collect();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    let nodes = fns[0].nodes();
    let rows: Vec<Vec<String>> = nodes
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            std::iter::once(fmt_float(t))
                .chain(fns.iter().map(|f| fmt_float(f.values[i])))
                .collect()
        })
        .collect();
    write_csv(path, &header, &rows)?;
    Ok(())
}

/// Loads a weight system from the `t,rho_1,...,rho_N` CSV format.
pub fn load_weights_csv(path: &Path) -> Result<WeightSystem, EctError> {
    let (header, rows) = crate::report::read_csv(path)?;
    let n_weights = header.len() - 1;
    let n = rows.len();
    let bad = |line: usize| {
        EctError::Io(IoFailure::Malformed {
            path: path.display().to_string(),
            line,
        })
    };
    if n < 2 || n_weights == 0 {
        return Err(bad(0));
    }
    let t0 = parse_float(&rows[0][0]).ok_or_else(|| bad(1))?;
    let t1 = parse_float(&rows[n - 1][0]).ok_or_else(|| bad(n))?;
    let interval = Interval::new(t0, t1).map_err(EctError::Grid)?;
    let mut weights = Vec::with_capacity(n_weights);
    for j in 0..n_weights {
        let mut values = Vec::with_capacity(n);
        for (i, row) in rows.iter().enumerate() {
            values.push(parse_float(&row[j + 1]).ok_or_else(|| bad(i + 1))?);
        }
        weights.push(SampledFunction::new(interval, values));
    }
    WeightSystem::new(interval, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratpoly::rat_i64;
    use approx::assert_abs_diff_eq;

    fn unit_interval() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    fn constant_system(values: &[f64], n: usize) -> WeightSystem {
        let iv = unit_interval();
        WeightSystem::new(
            iv,
            values
                .iter()
                .map(|&c| SampledFunction::from_fn(iv, n, |_| c))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn unit_weights_yield_monomials() {
        let ws = constant_system(&[1.0, 1.0], 257);
        let ect = build_ect(&ws).unwrap();
        let nodes = ect.basis[0].nodes();
        for (i, &t) in nodes.iter().enumerate() {
            assert_abs_diff_eq!(ect.basis[0].values[i], 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(ect.basis[1].values[i], t, epsilon = 1e-14);
        }
    }

    #[test]
    fn constant_weights_closed_form() {
        // rho = [2,3,5]: v_3 = 2 * int 3 * int 5 = 15 t^2, W_3 = 2^3 3^2 5 = 360
        let ws = constant_system(&[2.0, 3.0, 5.0], 513);
        let ect = build_ect(&ws).unwrap();
        for (i, &t) in ect.basis[2].nodes().iter().enumerate() {
            assert_abs_diff_eq!(ect.basis[2].values[i], 15.0 * t * t, epsilon = 1e-12);
            assert_abs_diff_eq!(ect.wronskians[2].values[i], 360.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn variable_weight_antiderivative() {
        // rho = [1, 2t] on (0.5, 1): v_2 = int_{1/2}^t 2s ds = t^2 - 1/4
        let iv = Interval::new(0.5, 1.0).unwrap();
        let ws = WeightSystem::new(
            iv,
            vec![
                SampledFunction::from_fn(iv, 1025, |_| 1.0),
                SampledFunction::from_fn(iv, 1025, |t| 2.0 * t),
            ],
        )
        .unwrap();
        let ect = build_ect(&ws).unwrap();
        for (i, &t) in ect.basis[1].nodes().iter().enumerate() {
            assert_abs_diff_eq!(ect.basis[1].values[i], t * t - 0.25, epsilon = 1e-7);
        }
    }

    #[test]
    fn rejects_nonpositive_weight() {
        let iv = unit_interval();
        let err = WeightSystem::new(
            iv,
            vec![SampledFunction::from_fn(iv, 64, |t| t - 0.5)],
        )
        .unwrap_err();
        assert!(matches!(err, EctError::NonPositiveWeight { index: 1, .. }));
    }

    #[test]
    fn positivity_of_built_wronskians_is_exact() {
        let mut rng = CounterRng::new(11);
        let ws = seeded_smooth_weights(unit_interval(), 4, 128, &mut rng);
        let ect = build_ect(&ws).unwrap();
        for w in &ect.wronskians {
            assert!(w.values.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn numeric_wronskian_of_monomials_is_constant() {
        let iv = Interval::new(-1.0, 1.0).unwrap();
        let basis = vec![
            SampledFunction::from_fn(iv, 129, |_| 1.0),
            SampledFunction::from_fn(iv, 129, |t| t),
            SampledFunction::from_fn(iv, 129, |t| t * t),
        ];
        let (_, w3) = wronskian_numeric(&basis, 3).unwrap();
        for v in w3 {
            assert_abs_diff_eq!(v, 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn numeric_route_matches_product_formula() {
        let ws = constant_system(&[2.0, 3.0, 5.0], 513);
        let ect = build_ect(&ws).unwrap();
        let (_, w3) = wronskian_numeric(&ect.basis, 3).unwrap();
        for v in w3 {
            assert_abs_diff_eq!(v, 360.0, epsilon = 360.0 * 1e-4);
        }
    }

    #[test]
    fn product_identity_for_seeded_systems() {
        // differentiated Wronskian vs rho_1^k rho_2^{k-1}...rho_k, O(h^2)
        let mut rng = CounterRng::new(3);
        for trial in 0..5 {
            let ws = seeded_smooth_weights(unit_interval(), 3, 2049, &mut rng);
            let ect = build_ect(&ws).unwrap();
            for k in 1..=3usize {
                let (off, wk) = wronskian_numeric(&ect.basis, k).unwrap();
                let mut worst: f64 = 0.0;
                for (i, &v) in wk.iter().enumerate() {
                    let reference = ect.wronskians[k - 1].values[off + i];
                    worst = worst.max(((v - reference) / reference).abs());
                }
                assert!(worst < 5e-5, "trial {trial} k {k}: rel dev {worst}");
            }
        }
    }

    #[test]
    fn perturbed_heaviside_numeric_wronskian() {
        // {chi(t) t^2 + eps, t^2}: W_2 = 2 t eps away from the kink at 0
        let eps = 0.1;
        let iv = Interval::new(-1.0, 1.0).unwrap();
        let n = 257;
        let basis = vec![
            SampledFunction::from_fn(iv, n, |t| if t >= 0.0 { t * t + eps } else { eps }),
            SampledFunction::from_fn(iv, n, |t| t * t),
        ];
        let (off, w2) = wronskian_numeric(&basis, 2).unwrap();
        let nodes = basis[0].nodes();
        let h = basis[0].spacing();
        for (i, &v) in w2.iter().enumerate() {
            let t = nodes[off + i];
            if t.abs() <= 1.5 * h {
                continue; // stencil straddles the kink
            }
            assert_abs_diff_eq!(v, 2.0 * t * eps, epsilon = 1e-10);
        }
    }

    #[test]
    fn round_trip_constants() {
        let ws = constant_system(&[2.0, 3.0, 5.0], 256);
        let ect = build_ect(&ws).unwrap();
        let rec = recover_weights(&ect).unwrap();
        for (orig, back) in ws.weights.iter().zip(&rec.weights) {
            for (a, b) in orig.values.iter().zip(&back.values) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn round_trip_monomial_pair() {
        // basis {1, t} has W_1 = 1, W_2 = 1 -> rho = [1, 1]
        let iv = unit_interval();
        let basis = vec![
            SampledFunction::from_fn(iv, 65, |_| 1.0),
            SampledFunction::from_fn(iv, 65, |t| t),
        ];
        let (_, rec) = recover_weights_numeric(&basis).unwrap();
        for rho in &rec {
            for &v in rho {
                assert_abs_diff_eq!(v, 1.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn round_trip_seeded_smooth_systems() {
        let mut rng = CounterRng::new(17);
        for _ in 0..5 {
            let ws = seeded_smooth_weights(unit_interval(), 4, 2048, &mut rng);
            let ect = build_ect(&ws).unwrap();
            let rec = recover_weights(&ect).unwrap();
            for (orig, back) in ws.weights.iter().zip(&rec.weights) {
                for (a, b) in orig.values.iter().zip(&back.values) {
                    assert!(((a - b) / a).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn recovered_heaviside_branch_matches_formula() {
        // numeric route on the t <= 0 branch: rho_2 = 2t/eps
        let eps = 0.1;
        let iv = Interval::new(-1.0, -0.0625).unwrap();
        let n = 129;
        let basis = vec![
            SampledFunction::from_fn(iv, n, |_| eps),
            SampledFunction::from_fn(iv, n, |t| t * t),
        ];
        let (off, rec) = recover_weights_numeric(&basis).unwrap();
        let nodes = basis[0].nodes();
        for (i, &v) in rec[1].iter().enumerate() {
            let t = nodes[off + i];
            assert_abs_diff_eq!(v, 2.0 * t / eps, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_wronskian_detected() {
        let err = recover_from_wronskian_values(&[vec![1.0, 0.0, 1.0]]).unwrap_err();
        assert!(matches!(err, EctError::ZeroWronskian { order: 1, node: 1 }));
    }

    #[test]
    fn ln_annihilates_basis_monomials() {
        // weights [1,1]: L_2 t = 0 and L_2 t^2 = 2, exactly at interior nodes
        let ws = constant_system(&[1.0, 1.0], 65);
        let u = SampledFunction::from_fn(unit_interval(), 65, |t| t);
        let (_, vals) = apply_ln(&ws, &u).unwrap();
        for v in vals {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        }
        let u2 = SampledFunction::from_fn(unit_interval(), 65, |t| t * t);
        let (_, vals) = apply_ln(&ws, &u2).unwrap();
        for v in vals {
            assert_abs_diff_eq!(v, 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn ln_residual_refines_at_second_order() {
        let residual = |n: usize| -> f64 {
            let ws = constant_system(&[2.0, 3.0, 5.0], n);
            let ect = build_ect(&ws).unwrap();
            let (_, vals) = apply_ln(&ws, &ect.basis[2]).unwrap();
            vals.into_iter().map(f64::abs).fold(0.0, f64::max)
        };
        let (r1, r2) = (residual(257), residual(513));
        // rounding keeps these from being exactly 0; still expect clear decay
        if r1 > 1e-12 {
            assert!(r2 < r1 / 2.5, "r(257)={r1}, r(513)={r2}");
        }
    }

    #[test]
    fn ln_annihilates_all_built_elements() {
        // O(h^2) annihilation: the residual drops ~4x per grid doubling
        let residuals = |n: usize| -> Vec<f64> {
            let mut rng = CounterRng::new(23);
            let ws = seeded_smooth_weights(unit_interval(), 3, n, &mut rng);
            let ect = build_ect(&ws).unwrap();
            ect.basis
                .iter()
                .map(|v| {
                    let (_, vals) = apply_ln(&ws, v).unwrap();
                    vals.into_iter().map(f64::abs).fold(0.0, f64::max)
                })
                .collect()
        };
        let coarse = residuals(513);
        let fine = residuals(1025);
        for (k, (c, f)) in coarse.iter().zip(&fine).enumerate() {
            assert!(*f < 5e-2, "v_{}: residual {f}", k + 1);
            if *c > 1e-12 {
                assert!(f < &(c / 2.5), "v_{}: {c} -> {f}", k + 1);
            }
        }
    }

    #[test]
    fn partition_of_monomials_is_single_ect_segment() {
        let basis = vec![
            RatPoly::from_i64(&[1]),
            RatPoly::from_i64(&[0, 1]),
            RatPoly::from_i64(&[0, 0, 1]),
        ];
        let part =
            piecewise_partition(&basis, Interval::new(-1.0, 1.0).unwrap()).unwrap();
        assert!(part.breakpoints.is_empty());
        assert_eq!(part.segment_signs, vec![vec![1, 1, 1]]);
        assert_eq!(part.ect_segments, vec![true]);
    }

    #[test]
    fn partition_of_t_t_squared() {
        // {t, t^2}: W_1 = t flips sign at 0, W_2 = t^2 stays positive
        let basis = vec![RatPoly::from_i64(&[0, 1]), RatPoly::from_i64(&[0, 0, 1])];
        let part =
            piecewise_partition(&basis, Interval::new(-1.0, 1.0).unwrap()).unwrap();
        assert_eq!(part.breakpoints.len(), 1);
        assert_eq!(part.breakpoints[0].exact, Some(Rat::zero()));
        assert_eq!(part.segment_signs, vec![vec![-1, 1], vec![1, 1]]);
        assert_eq!(part.ect_segments, vec![false, true]);
    }

    #[test]
    fn partition_of_perturbed_pair_breaks_exactly_at_zero() {
        // {t^2 + 1/10, t^2}: W_2 = -2 eps t changes sign exactly at t = 0
        let eps = rat_i64(1, 10);
        let basis = vec![
            RatPoly::new(vec![eps, Rat::zero(), Rat::one()]),
            RatPoly::monomial(Rat::one(), 2),
        ];
        let part =
            piecewise_partition(&basis, Interval::new(-1.0, 1.0).unwrap()).unwrap();
        assert_eq!(part.breakpoints.len(), 1);
        assert_eq!(part.breakpoints[0].exact, Some(Rat::zero()));
        assert_eq!(part.segment_signs.len(), 2);
        // W_1 = t^2 + eps > 0 on both sides; W_2 = 2 t eps flips
        assert_eq!(part.segment_signs[0][0], 1);
        assert_eq!(part.segment_signs[1][0], 1);
        assert_ne!(part.segment_signs[0][1], part.segment_signs[1][1]);
    }

    #[test]
    fn partition_rejects_dependent_basis() {
        let basis = vec![RatPoly::from_i64(&[0, 1]), RatPoly::from_i64(&[0, 2])];
        let err =
            piecewise_partition(&basis, Interval::new(-1.0, 1.0).unwrap()).unwrap_err();
        assert!(matches!(err, EctError::DependentBasis { order: 2 }));
    }

    #[test]
    fn partition_signs_constant_within_segments() {
        // soundness: exact signs at several interior points of each segment
        let basis = vec![
            RatPoly::from_i64(&[0, 1]),
            RatPoly::from_i64(&[0, 0, 1]),
            RatPoly::from_i64(&[-1, 0, 0, 6]),
        ];
        let iv = Interval::new(-1.0, 1.0).unwrap();
        let part = piecewise_partition(&basis, iv).unwrap();
        let mut edges: Vec<f64> = vec![iv.a];
        edges.extend(part.breakpoints.iter().map(|b| b.value));
        edges.push(iv.b);
        for (seg, signs) in part.segment_signs.iter().enumerate() {
            for frac in [0.25, 0.5, 0.75] {
                let t = edges[seg] + frac * (edges[seg + 1] - edges[seg]);
                // stay a hair away from the ends to dodge bracket slop
                let t = rat_from_f64(t);
                for (k, w) in part.wronskians.iter().enumerate() {
                    let v = w.eval(&t);
                    if v.is_zero() {
                        continue;
                    }
                    let s = if v.is_positive() { 1 } else { -1 };
                    assert_eq!(s, signs[k], "segment {seg}, W_{}", k + 1);
                }
            }
        }
    }

    #[test]
    fn heaviside_example_formulas() {
        // rho_2 = 2t/eps on the left branch, 2 t eps/(t^2+eps)^2 on the right
        let eps = rat_i64(1, 10);
        let ex = heaviside_example(eps.clone()).unwrap();
        let expected_left = RationalFunction::new(
            RatPoly::new(vec![Rat::zero(), rat_i64(2, 1)]),
            RatPoly::constant(eps.clone()),
        );
        assert!(ex.rho2_left.equivalent(&expected_left));
        let denom = RatPoly::new(vec![eps.clone(), Rat::zero(), Rat::one()]);
        let expected_right = RationalFunction::new(
            RatPoly::new(vec![Rat::zero(), rat_i64(2, 1) * &eps]),
            denom.mul(&denom),
        );
        assert!(ex.rho2_right.equivalent(&expected_right));
        assert_eq!(ex.partition.breakpoints.len(), 1);
        assert_eq!(ex.partition.breakpoints[0].exact, Some(Rat::zero()));
    }

    #[test]
    fn csv_round_trip_weights() {
        let dir = std::env::temp_dir().join("chebwidths_ect_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("weights.csv");
        let mut rng = CounterRng::new(5);
        let ws = seeded_smooth_weights(unit_interval(), 3, 64, &mut rng);
        export_weights_csv(&path, &ws).unwrap();
        let back = load_weights_csv(&path).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in ws.weights.iter().zip(&back.weights) {
            assert_eq!(a.values, b.values);
        }
    }
}
