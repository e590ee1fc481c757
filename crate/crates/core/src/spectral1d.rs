//! Kolmogorov's eigenvalue problem on the unit interval, discretized.
//!
//! The operator `(-1)^p d^{2p}/dt^{2p}` with natural boundary conditions
//! `u^{(p+j)}(0) = u^{(p+j)}(1) = 0` is discretized weakly as the Gram form
//! `A = B^T W B`, where `B` is the p-th divided-difference map and `W` the
//! cell quadrature weights. The weak form makes `A` symmetric positive
//! semidefinite with kernel dimension exactly `p` (discrete polynomials of
//! degree < p), mirroring the zero eigenvalue of multiplicity `p`.
//!
//! Eigenvalue indexing counts the zero block first, so the Kolmogorov width
//! is `1/sqrt(lambda_{N+1})` for `N >= p` and `+infinity` for `N < p`.

use crate::banded::{
    lowest_gram_eigenpairs, BandedCholesky, EigOptions, GramOperator, LinalgError, ShiftedSolver,
    SymBanded,
};
use crate::report::{fmt_float, write_csv, ExtReal, IoFailure};
use crate::sampled::{Interval, SampledFunction};
use nalgebra::{DMatrix, DVector};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("grid too coarse for half-order {p}: need n >= {needed}, got {n}")]
    GridTooCoarse { p: usize, needed: usize, n: usize },
    #[error("eigensolver failed: {0}")]
    EigenFailure(#[from] LinalgError),
    #[error("spectrum holds {have} eigenvalues, {needed} required")]
    InsufficientSpectrum { have: usize, needed: usize },
    #[error(transparent)]
    Io(#[from] IoFailure),
}

/// Scaled p-th divided difference: maps n grid values to n-p cell values.
#[derive(Debug, Clone)]
pub struct DerivativeMap {
    pub p: usize,
    pub n: usize,
    pub h: f64,
    /// Stencil (+-binomial coefficients) scaled by h^{-p}.
    pub stencil: Vec<f64>,
}

impl DerivativeMap {
    pub fn new(p: usize, n: usize) -> Self {
        assert!(p >= 1 && n > p);
        let h = 1.0 / (n - 1) as f64;
        let scale = h.powi(-(p as i32));
        let mut stencil = vec![0.0; p + 1];
        let mut binom = 1.0f64;
        for (k, slot) in stencil.iter_mut().enumerate() {
            let sign = if (p - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            *slot = sign * binom * scale;
            binom = binom * (p - k) as f64 / (k + 1) as f64;
        }
        DerivativeMap { p, n, h, stencil }
    }

    pub fn rows(&self) -> usize {
        self.n - self.p
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.rows(), |r, _| {
            self.stencil
                .iter()
                .enumerate()
                .map(|(k, &c)| c * x[r + k])
                .sum()
        })
    }

    pub fn apply_transpose(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.n);
        for r in 0..self.rows() {
            for (k, &c) in self.stencil.iter().enumerate() {
                x[r + k] += c * y[r];
            }
        }
        x
    }
}

/// Trapezoid quadrature mass: h/2 at the endpoints, h inside.
pub fn trapezoid_mass(n: usize) -> Vec<f64> {
    let h = 1.0 / (n - 1) as f64;
    (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
        .collect()
}

/// The weak-form operator A = B^T (h I) B and the trapezoid mass diagonal.
///
/// Assembly only needs room for the difference stencil (n >= 2p + 2, so the
/// rank deficiency is exactly p); the stricter floor n >= 4p + 4 applies to
/// spectrum solves.
pub fn assemble_gram(p: usize, n: usize) -> Result<(SymBanded, Vec<f64>), SpectralError> {
    let needed = 2 * p + 2;
    if n < needed {
        return Err(SpectralError::GridTooCoarse { p, needed, n });
    }
    let b = DerivativeMap::new(p, n);
    let h = b.h;
    let mut a = SymBanded::zeros(n, p);
    for r in 0..b.rows() {
        for i in 0..=p {
            for j in i..=p {
                a.add(r + j, r + i, h * b.stencil[i] * b.stencil[j]);
            }
        }
    }
    Ok((a, trapezoid_mass(n)))
}

/// Spectrum of the discrete problem: the p-fold zero block first, then the
/// ascending positive eigenvalues; eigenvectors orthonormal in the discrete
/// (trapezoid-weighted) inner product.
#[derive(Debug, Clone)]
pub struct Spectrum1D {
    pub p: usize,
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors on the n-node grid.
    pub eigenvectors: DMatrix<f64>,
    pub mass: Vec<f64>,
}

impl Spectrum1D {
    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Discrete L2 inner product with the trapezoid weights.
    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .map(|(i, &m)| m * u[i] * v[i])
            .sum()
    }

    pub fn eigenvector(&self, j: usize) -> DVector<f64> {
        self.eigenvectors.column(j).into_owned()
    }

    pub fn as_sampled(&self, j: usize) -> SampledFunction {
        let iv = Interval::new(0.0, 1.0).expect("unit interval");
        SampledFunction::new(iv, self.eigenvector(j).iter().copied().collect())
    }
}

/// Lowest `count` eigenpairs of the generalized problem `A psi = lambda M psi`.
pub fn solve_spectrum(p: usize, n: usize, count: usize) -> Result<Spectrum1D, SpectralError> {
    assert!(count >= 1 && count <= n);
    let needed = 4 * p + 4;
    if n < needed {
        return Err(SpectralError::GridTooCoarse { p, needed, n });
    }
    let (a, mass) = assemble_gram(p, n)?;
    let dinv: Vec<f64> = mass.iter().map(|&m| 1.0 / m.sqrt()).collect();
    let a_std = a.scale_sym(&dinv);
    let norm_est = a_std.norm_inf();
    let b = DerivativeMap::new(p, n);
    let sqrt_h = b.h.sqrt();
    let apply_h = |x: &DVector<f64>| {
        let scaled = DVector::from_fn(n, |i, _| x[i] * dinv[i]);
        b.apply(&scaled) * sqrt_h
    };
    let apply_ht = |y: &DVector<f64>| {
        let back = b.apply_transpose(y);
        DVector::from_fn(n, |i, _| back[i] * dinv[i] * sqrt_h)
    };
    let make_solver =
        |s: f64| -> Result<BandedCholesky, LinalgError> { BandedCholesky::factor(&a_std.shifted(s)) };
    let op = GramOperator {
        n,
        apply_h: &apply_h,
        apply_ht: &apply_ht,
        solver: ShiftedSolver::Factory(&make_solver),
    };
    let opts = EigOptions::new(count, norm_est);
    let (vals, vecs) = lowest_gram_eigenpairs(&op, &opts)?;
    // map standardized coordinates back: psi = M^{-1/2} z
    let mut eigenvectors = DMatrix::zeros(n, count);
    for c in 0..count {
        for i in 0..n {
            eigenvectors[(i, c)] = vecs[(i, c)] * dinv[i];
        }
    }
    Ok(Spectrum1D {
        p,
        n,
        eigenvalues: vals,
        eigenvectors,
        mass,
    })
}

/// Kolmogorov width of the discrete ellipsoid for an N-dimensional subspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthValue {
    pub value: ExtReal,
    pub n_subspace: usize,
    pub p: usize,
}

/// `d_N = +infinity` for `N < p`, else `1/sqrt(lambda_{N+1})` in the
/// all-eigenvalue indexing that counts the zero block.
pub fn kolmogorov_width(spectrum: &Spectrum1D, n_subspace: usize) -> Result<WidthValue, SpectralError> {
    let p = spectrum.p;
    if n_subspace < p {
        return Ok(WidthValue {
            value: ExtReal::Infinity,
            n_subspace,
            p,
        });
    }
    if n_subspace + 1 > spectrum.count() {
        return Err(SpectralError::InsufficientSpectrum {
            have: spectrum.count(),
            needed: n_subspace + 1,
        });
    }
    let lambda = spectrum.eigenvalues[n_subspace];
    Ok(WidthValue {
        value: ExtReal::Finite(1.0 / lambda.sqrt()),
        n_subspace,
        p,
    })
}

/// Slack accepted on the ellipsoid membership sum.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Discrete K_p membership: `(|f^(p)|_L2, member)` through the divided
/// difference map and cell quadrature; the 1D counterpart of the 2D
/// ellipsoid's `membership`.
pub fn ellipsoid_membership(p: usize, f: &DVector<f64>) -> (f64, bool) {
    let b = DerivativeMap::new(p, f.len());
    let norm = b.h.sqrt() * b.apply(f).norm();
    (norm, norm <= 1.0 + 1e-12)
}

#[derive(Debug, Clone, Copy)]
pub struct JacksonReport {
    /// L2 norm of the expansion tail beyond the first N coefficients.
    pub residual: f64,
    /// The a-priori bound 1/sqrt(lambda_{N+1}).
    pub bound: f64,
    /// Whether sum_j lambda_j f_j^2 <= 1 + tol over the computed modes.
    pub member: bool,
}

/// Expands `f` in the discrete eigenbasis and reports the Jackson data.
///
/// The tail is the explicit deficit vector `f - sum_{j<=N} f_j psi_j` (its
/// norm is free of the cancellation the closed-form complement suffers when
/// the tail vanishes), so components outside the computed modes are
/// included. Membership is decided from the computed modes (a lower bound on
/// the full ellipsoid sum when `f` has excess components).
pub fn jackson_residual(spectrum: &Spectrum1D, f: &DVector<f64>, n_subspace: usize) -> JacksonReport {
    assert!(n_subspace >= spectrum.p, "requires N >= p");
    assert!(
        n_subspace < spectrum.count(),
        "bound needs lambda_{{N+1}}: N+1 <= computed count"
    );
    let mut deficit = f.clone();
    let mut ellipsoid = 0.0;
    for j in 0..spectrum.count() {
        let psi = spectrum.eigenvector(j);
        let fj = spectrum.inner(f, &psi);
        if j < n_subspace {
            deficit -= psi * fj;
        }
        ellipsoid += spectrum.eigenvalues[j] * fj * fj;
    }
    let residual = spectrum.inner(&deficit, &deficit).max(0.0).sqrt();
    let bound = 1.0 / spectrum.eigenvalues[n_subspace].sqrt();
    JacksonReport {
        residual,
        bound,
        member: ellipsoid <= 1.0 + MEMBERSHIP_TOL,
    }
}

/// CSV export `j,lambda` (j ascending from 1).
pub fn export_spectrum_csv(path: &Path, spectrum: &Spectrum1D) -> Result<(), SpectralError> {
    let rows: Vec<Vec<String>> = spectrum
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(j, &l)| vec![(j + 1).to_string(), fmt_float(l)])
        .collect();
    write_csv(path, &["j", "lambda"], &rows)?;
    Ok(())
}

/// Optional eigenvector export `t,psi_1,...,psi_k`.
pub fn export_eigenvectors_csv(path: &Path, spectrum: &Spectrum1D) -> Result<(), SpectralError> {
    let names: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=spectrum.count()).map(|k| format!("psi_{k}")))
        .collect();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    let h = 1.0 / (spectrum.n - 1) as f64;
    let rows: Vec<Vec<String>> = (0..spectrum.n)
        .map(|i| {
            std::iter::once(fmt_float(i as f64 * h))
                .chain((0..spectrum.count()).map(|j| fmt_float(spectrum.eigenvectors[(i, j)])))
                .collect()
        })
        .collect();
    write_csv(path, &header, &rows)?;
    Ok(())
}

/// Smallest positive root of `cos(k) cosh(k) = 1` by bisection; `k_1^4` is
/// the first positive eigenvalue of the free-free fourth-order problem.
pub fn free_beam_k1(tol: f64) -> f64 {
    let f = |k: f64| k.cos() * k.cosh() - 1.0;
    let (mut lo, mut hi) = (4.0f64, 5.0f64);
    debug_assert!(f(lo) < 0.0 && f(hi) > 0.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn grid_samples(n: usize, f: impl Fn(f64) -> f64) -> DVector<f64> {
        let h = 1.0 / (n - 1) as f64;
        DVector::from_fn(n, |i, _| f(i as f64 * h))
    }

    #[test]
    fn stiffness_matrix_p1_n5() {
        // h = 1/4: the standard Neumann-closed second-difference form
        let (a, mass) = assemble_gram(1, 5).unwrap();
        assert_abs_diff_eq!(a.get(0, 0), 4.0, epsilon = 1e-13);
        assert_abs_diff_eq!(a.get(0, 1), -4.0, epsilon = 1e-13);
        assert_abs_diff_eq!(a.get(1, 1), 8.0, epsilon = 1e-13);
        assert_abs_diff_eq!(a.get(2, 1), -4.0, epsilon = 1e-13);
        assert_eq!(mass, vec![0.125, 0.25, 0.25, 0.25, 0.125]);
    }

    #[test]
    fn constants_annihilated_exactly() {
        let (a, _) = assemble_gram(1, 5).unwrap();
        let ones = DVector::from_element(5, 3.5);
        assert_eq!(a.matvec(&ones).norm(), 0.0);
    }

    #[test]
    fn linears_annihilated_exactly_p2() {
        // dyadic grid: the second difference of samples of t is exactly zero
        let (a, _) = assemble_gram(2, 17).unwrap();
        let t = grid_samples(17, |t| t);
        assert_eq!(a.matvec(&t).norm(), 0.0);
    }

    #[test]
    fn grid_too_coarse_rejected() {
        assert!(matches!(
            assemble_gram(2, 5),
            Err(SpectralError::GridTooCoarse { .. })
        ));
        assert!(matches!(
            solve_spectrum(2, 10, 2),
            Err(SpectralError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn kernel_dimension_by_pivoted_rank() {
        // rank deficiency is exactly p for p = 1..4
        for p in 1..=4usize {
            let n = 4 * p + 8;
            let (a, _) = assemble_gram(p, n).unwrap();
            let dense = a.to_dense();
            let threshold = 1e-10 * dense.norm();
            let qr = dense.col_piv_qr();
            let r = qr.r();
            let rank = (0..n).filter(|&i| r[(i, i)].abs() > threshold).count();
            assert_eq!(n - rank, p, "p = {p}");
        }
    }

    #[test]
    fn smallest_positive_rayleigh_near_pi_squared() {
        let spec = solve_spectrum(1, 1025, 3).unwrap();
        assert!(spec.eigenvalues[0].abs() < 1e-10);
        let rel = (spec.eigenvalues[1] - PI * PI).abs() / (PI * PI);
        assert!(rel < 1e-3, "relative error {rel}");
    }

    #[test]
    fn neumann_cosine_spectrum_p1() {
        let n = 2049;
        let spec = solve_spectrum(1, n, 9).unwrap();
        for j in 1..=8usize {
            let exact = PI * PI * (j * j) as f64;
            let rel = (spec.eigenvalues[j] - exact).abs() / exact;
            assert!(rel < 1e-3, "j={j}: rel {rel}");
            // eigenvector sqrt(2) cos(j pi t) up to sign
            let psi = spec.eigenvector(j);
            let reference = grid_samples(n, |t| (2.0f64).sqrt() * (j as f64 * PI * t).cos());
            let sign = if psi[0] >= 0.0 { 1.0 } else { -1.0 };
            let dev = (0..n)
                .map(|i| (sign * psi[i] - reference[i]).abs())
                .fold(0.0, f64::max);
            assert!(dev < 2e-3, "j={j}: eigenvector deviation {dev}");
        }
    }

    #[test]
    fn free_beam_eigenvalue_p2() {
        let k1 = free_beam_k1(1e-12);
        assert_abs_diff_eq!(k1, 4.730040744862704, epsilon = 1e-9);
        let spec = solve_spectrum(2, 2049, 3).unwrap();
        assert!(spec.eigenvalues[0].abs() < 1e-10);
        assert!(spec.eigenvalues[1].abs() < 1e-10);
        let exact = k1.powi(4);
        let rel = (spec.eigenvalues[2] - exact).abs() / exact;
        assert!(rel < 5e-3, "lambda_3 relative error {rel}");
    }

    #[test]
    fn kernel_vectors_span_low_degree_polynomials() {
        let n = 257;
        let spec = solve_spectrum(2, n, 4).unwrap();
        // project samples of 1 and t onto the kernel block; residual ~ 0
        for f in [grid_samples(n, |_| 1.0), grid_samples(n, |t| t)] {
            let norm2 = spec.inner(&f, &f);
            let mut captured = 0.0;
            for j in 0..2 {
                let c = spec.inner(&f, &spec.eigenvector(j));
                captured += c * c;
            }
            assert!((norm2 - captured).abs() / norm2 < 1e-9);
        }
    }

    #[test]
    fn eigenvector_gram_is_identity() {
        let spec = solve_spectrum(2, 513, 6).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let g = spec.inner(&spec.eigenvector(i), &spec.eigenvector(j));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(g, expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn asymptotic_ratio_convergence() {
        // lambda_{p+j} ~ pi^{2p} j^{2p} (1 + O(1/j)) in all-eigenvalue indexing
        for p in [1usize, 2] {
            let spec = solve_spectrum(p, 2049, p + 8).unwrap();
            for j in 1..=8usize {
                // zero-based index p+j-1 holds lambda_{p+j}
                let model = (PI).powi(2 * p as i32) * (j as f64).powi(2 * p as i32);
                let ratio = spec.eigenvalues[p + j - 1] / model;
                assert!(
                    (ratio - 1.0).abs() <= 7.0 / j as f64 + 0.05,
                    "p={p}, j={j}, ratio {ratio}"
                );
            }
        }
    }

    #[test]
    fn width_formula_and_infinity() {
        let spec = solve_spectrum(1, 1025, 6).unwrap();
        let w0 = kolmogorov_width(&spec, 0).unwrap();
        assert!(w0.value.is_infinite());
        let w2 = kolmogorov_width(&spec, 2).unwrap();
        let expected = 1.0 / (2.0 * PI);
        let got = w2.value.finite().unwrap();
        assert!((got - expected).abs() / expected < 1e-3);

        let spec2 = solve_spectrum(2, 1025, 4).unwrap();
        let w = kolmogorov_width(&spec2, 2).unwrap().value.finite().unwrap();
        let k1 = free_beam_k1(1e-12);
        let expected = 1.0 / (k1 * k1);
        assert!((w - expected).abs() / expected < 5e-3, "got {w}");

        assert!(matches!(
            kolmogorov_width(&spec, 6),
            Err(SpectralError::InsufficientSpectrum { .. })
        ));
    }

    #[test]
    fn width_nonincreasing_in_subspace_dimension() {
        let spec = solve_spectrum(1, 513, 8).unwrap();
        let mut prev = f64::INFINITY;
        for n_sub in 1..8 {
            let w = kolmogorov_width(&spec, n_sub)
                .unwrap()
                .value
                .finite()
                .unwrap();
            assert!(w <= prev + 1e-15);
            prev = w;
        }
    }

    #[test]
    fn ellipsoid_membership_scale_covariance() {
        let spec = solve_spectrum(1, 513, 4).unwrap();
        // kernel element: inside with norm ~ 0
        let (n0, m0) = ellipsoid_membership(1, &spec.eigenvector(0));
        assert!(n0 < 1e-8 && m0);
        // extremal axis sits on the boundary; doubling leaves the set
        let f = spec.eigenvector(2) / spec.eigenvalues[2].sqrt();
        let (n1, m1) = ellipsoid_membership(1, &f);
        assert_abs_diff_eq!(n1, 1.0, epsilon = 1e-7);
        assert!(m1);
        let (n2, m2) = ellipsoid_membership(1, &(f * 2.0));
        assert_abs_diff_eq!(n2, 2.0, epsilon = 1e-7);
        assert!(!m2);
    }

    #[test]
    fn jackson_extremal_axis_saturates() {
        let spec = solve_spectrum(1, 513, 6).unwrap();
        let n_sub = 3;
        let lambda = spec.eigenvalues[n_sub];
        let f = spec.eigenvector(n_sub) / lambda.sqrt();
        let rep = jackson_residual(&spec, &f, n_sub);
        assert!(rep.member);
        assert_abs_diff_eq!(rep.residual, rep.bound, epsilon = 1e-12);
    }

    #[test]
    fn jackson_kernel_elements_reproduced() {
        let spec = solve_spectrum(1, 513, 6).unwrap();
        let f = DVector::from_element(513, 0.7);
        let rep = jackson_residual(&spec, &f, 2);
        assert!(rep.member);
        // zero up to the solved eigenvector direction accuracy
        assert!(rep.residual < 1e-10, "residual {}", rep.residual);
    }

    #[test]
    fn jackson_random_members_dominated() {
        use crate::rng::CounterRng;
        let spec = solve_spectrum(1, 257, 10).unwrap();
        let mut rng = CounterRng::new(2024);
        for _ in 0..100 {
            // member built in the eigenbasis with sum lambda f^2 = 0.99
            let mut f = DVector::zeros(257);
            let mut budget = 0.0;
            let mut coeffs = Vec::new();
            for j in 1..10 {
                let c = rng.next_symmetric();
                budget += spec.eigenvalues[j] * c * c;
                coeffs.push(c);
            }
            let scale = (0.99 / budget).sqrt();
            f += spec.eigenvector(0) * rng.next_symmetric();
            for (j, c) in coeffs.into_iter().enumerate() {
                f += spec.eigenvector(j + 1) * (c * scale);
            }
            for n_sub in 1..=8 {
                let rep = jackson_residual(&spec, &f, n_sub);
                assert!(rep.member);
                assert!(rep.residual <= rep.bound + 1e-12);
            }
        }
    }

    #[test]
    fn jackson_residual_scales_linearly() {
        // f has a genuine tail (third cosine mode) beyond N = 2
        let spec = solve_spectrum(1, 257, 6).unwrap();
        let f = grid_samples(257, |t| {
            (PI * t).cos() * 0.4 + (3.0 * PI * t).cos() * 0.2 + 0.1
        });
        let base = jackson_residual(&spec, &f, 2).residual;
        assert!(base > 0.1);
        for t in [2.0, 10.0] {
            let scaled = jackson_residual(&spec, &(f.clone() * t), 2).residual;
            assert_abs_diff_eq!(scaled, t * base, epsilon = 1e-10 * t * base);
        }
    }
}
