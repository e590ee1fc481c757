//! Discrete operator algebra for constant-coefficient elliptic operators
//! `L_2p` on the unit square.
//!
//! The operator for an even-powers homogeneous symbol is built by composing
//! one-dimensional second-difference stencils axis by axis, so the discrete
//! biharmonic is bit-identical to two applications of the 5-point Laplacian.
//! `L` maps the full `m x m` grid to the interior nodes where the full
//! stencil fits; its transpose is the discrete adjoint (the quadrature
//! weight `h^2` is uniform), which makes the discrete Green identity exact.
//!
//! The two-stage eigenfunction construction runs the auxiliary clamped
//! problem on `G = L L^T`, solves `G phi_hat = phi`, and lifts
//! `psi = L^T phi_hat`. Solves with `G` go through a QR factorization of
//! `L^T` (never through the explicitly formed Gram matrix), which keeps the
//! small eigenvalues accurate to roughly `eps * kappa(L)` instead of
//! `eps * kappa(L)^2`.

use crate::banded::{
    lowest_gram_eigenpairs, orthonormal_complement, orthonormalize_thin, sym_eig_ascending,
    BandedCholesky, EigOptions, GramOperator, LinalgError, ShiftedSolver, SymBanded,
};
use crate::ratpoly::rat_to_f64;
use crate::report::{fmt_float, write_csv, IoFailure};
use crate::symbols::{is_strongly_elliptic, Polynomial2, SymbolError};
use nalgebra::{DMatrix, DVector};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EllipticError {
    #[error("symbol is not strongly elliptic (or not homogeneous of degree 2p)")]
    NotElliptic,
    #[error("symbol has odd powers; only even-order principal parts are supported")]
    OddSymbol,
    #[error("grid m={m} too small for half-order p={p} (need m >= 2p+3)")]
    GridTooSmall { m: usize, p: usize },
    #[error("discrete system is singular: {0}")]
    SingularSystem(String),
    #[error("eigensolver failed: {0}")]
    EigenFailure(#[from] LinalgError),
    #[error("lifted eigenpair {index} residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    ResidualTooLarge {
        index: usize,
        residual: f64,
        tol: f64,
    },
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Io(#[from] IoFailure),
}

/// Uniform m x m lattice on the unit square, row-major with x fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectGrid {
    pub m: usize,
    pub h: f64,
}

impl RectGrid {
    pub fn new(m: usize) -> Self {
        assert!(m >= 3);
        RectGrid {
            m,
            h: 1.0 / (m - 1) as f64,
        }
    }

    pub fn total(&self) -> usize {
        self.m * self.m
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.m + ix
    }

    pub fn node(&self, idx: usize) -> (f64, f64) {
        let ix = idx % self.m;
        let iy = idx / self.m;
        (ix as f64 * self.h, iy as f64 * self.h)
    }

    /// Width of the interior sub-lattice at offset p from each edge.
    pub fn interior_width(&self, p: usize) -> usize {
        self.m - 2 * p
    }

    pub fn interior_count(&self, p: usize) -> usize {
        let w = self.interior_width(p);
        w * w
    }

    /// Samples a function of (x, y) on the full grid.
    pub fn field(&self, f: impl Fn(f64, f64) -> f64) -> DVector<f64> {
        DVector::from_fn(self.total(), |idx, _| {
            let (x, y) = self.node(idx);
            f(x, y)
        })
    }

    /// Discrete L2 inner product (uniform weight h^2).
    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.h * self.h * u.dot(v)
    }

    pub fn norm(&self, u: &DVector<f64>) -> f64 {
        self.h * u.norm()
    }
}

/// Square stencil with halfwidth `s`; weights stored row-major in dy.
#[derive(Debug, Clone)]
pub struct Stencil2 {
    pub s: usize,
    pub w: Vec<f64>,
}

impl Stencil2 {
    #[inline]
    pub fn weight(&self, dx: isize, dy: isize) -> f64 {
        let side = 2 * self.s + 1;
        let x = (dx + self.s as isize) as usize;
        let y = (dy + self.s as isize) as usize;
        self.w[y * side + x]
    }

    pub fn abs_sum(&self) -> f64 {
        self.w.iter().map(|v| v.abs()).sum()
    }
}

fn int_conv_power(base: &[i64], times: usize) -> Vec<i64> {
    let mut out = vec![1i64];
    for _ in 0..times {
        let mut next = vec![0i64; out.len() + base.len() - 1];
        for (i, &a) in out.iter().enumerate() {
            for (j, &b) in base.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        out = next;
    }
    out
}

/// Builds the (2p+1)^2 stencil of the symbol by composing per-axis second
/// differences: each term `c xi^{2i} eta^{2j}` contributes
/// `c * Dxx^i * Dyy^j`. Weights exclude the `h^{-2p}` scale.
fn stencil_from_symbol(symbol: &Polynomial2, p: usize) -> Result<Stencil2, EllipticError> {
    if !symbol.even_powers_only() {
        return Err(EllipticError::OddSymbol);
    }
    if !symbol.is_homogeneous() || symbol.degree() != Some(2 * p as u32) {
        return Err(EllipticError::NotElliptic);
    }
    let rep = is_strongly_elliptic(symbol, 64)?;
    if !rep.ok {
        return Err(EllipticError::NotElliptic);
    }
    let side = 2 * p + 1;
    let mut w = vec![0.0f64; side * side];
    for (mono, coeff) in symbol.terms() {
        let i = (mono.a / 2) as usize;
        let j = (mono.b / 2) as usize;
        let dx = int_conv_power(&[1, -2, 1], i);
        let dy = int_conv_power(&[1, -2, 1], j);
        let c = rat_to_f64(coeff);
        for (v, &cv) in dy.iter().enumerate() {
            for (u, &cu) in dx.iter().enumerate() {
                let x = p - i + u;
                let y = p - j + v;
                w[y * side + x] += c * (cu * cv) as f64;
            }
        }
    }
    Ok(Stencil2 { s: p, w })
}

/// Discrete elliptic operator: full grid -> interior(p) nodes.
#[derive(Debug, Clone)]
pub struct EllipticOperator2D {
    pub p: usize,
    pub grid: RectGrid,
    pub symbol: Polynomial2,
    pub stencil: Stencil2,
    /// h^{-2p}; stencil weights are stored unscaled.
    pub h_scale: f64,
    /// Optional single-entry perturbation (row, col, delta) for fault
    /// injection in the Green-identity check.
    pub perturbation: Option<(usize, usize, f64)>,
}

/// Composes the operator from its symbol on the given grid.
pub fn assemble(
    symbol: &Polynomial2,
    p: usize,
    grid: RectGrid,
) -> Result<EllipticOperator2D, EllipticError> {
    if grid.m < 2 * p + 3 {
        return Err(EllipticError::GridTooSmall { m: grid.m, p });
    }
    let stencil = stencil_from_symbol(symbol, p)?;
    Ok(EllipticOperator2D {
        p,
        grid,
        symbol: symbol.clone(),
        stencil,
        h_scale: grid.h.powi(-2 * p as i32),
        perturbation: None,
    })
}

impl EllipticOperator2D {
    pub fn rows(&self) -> usize {
        self.grid.interior_count(self.p)
    }

    pub fn cols(&self) -> usize {
        self.grid.total()
    }

    #[inline]
    fn interior_to_global(&self, r: usize) -> (usize, usize) {
        let w = self.grid.interior_width(self.p);
        (r % w + self.p, r / w + self.p)
    }

    /// `L u` at the interior nodes.
    pub fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        let s = self.stencil.s as isize;
        let m = self.grid.m;
        let mut out = DVector::zeros(self.rows());
        for r in 0..self.rows() {
            let (gx, gy) = self.interior_to_global(r);
            let mut acc = 0.0;
            for dy in -s..=s {
                for dx in -s..=s {
                    let wgt = self.stencil.weight(dx, dy);
                    if wgt != 0.0 {
                        let idx = (gy as isize + dy) as usize * m + (gx as isize + dx) as usize;
                        acc += wgt * u[idx];
                    }
                }
            }
            out[r] = acc * self.h_scale;
        }
        if let Some((row, col, delta)) = self.perturbation {
            out[row] += delta * u[col];
        }
        out
    }

    /// `L^T y` on the full grid.
    pub fn apply_transpose(&self, y: &DVector<f64>) -> DVector<f64> {
        let s = self.stencil.s as isize;
        let m = self.grid.m;
        let mut out = DVector::zeros(self.cols());
        for r in 0..self.rows() {
            let (gx, gy) = self.interior_to_global(r);
            let w = y[r] * self.h_scale;
            if w != 0.0 {
                for dy in -s..=s {
                    for dx in -s..=s {
                        let wgt = self.stencil.weight(dx, dy);
                        if wgt != 0.0 {
                            let idx =
                                (gy as isize + dy) as usize * m + (gx as isize + dx) as usize;
                            out[idx] += wgt * w;
                        }
                    }
                }
            }
        }
        if let Some((row, col, delta)) = self.perturbation {
            out[col] += delta * y[row];
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.rows(), self.cols());
        let s = self.stencil.s as isize;
        let m = self.grid.m;
        for r in 0..self.rows() {
            let (gx, gy) = self.interior_to_global(r);
            for dy in -s..=s {
                for dx in -s..=s {
                    let wgt = self.stencil.weight(dx, dy);
                    if wgt != 0.0 {
                        let idx = (gy as isize + dy) as usize * m + (gx as isize + dx) as usize;
                        l[(r, idx)] += wgt * self.h_scale;
                    }
                }
            }
        }
        if let Some((row, col, delta)) = self.perturbation {
            l[(row, col)] += delta;
        }
        l
    }

    /// Upper bound on the operator norm of `L L^T`.
    pub fn gram_norm_est(&self) -> f64 {
        let row = self.stencil.abs_sum() * self.h_scale;
        row * row
    }

    pub fn with_perturbed_entry(&self, row: usize, col: usize, delta: f64) -> Self {
        let mut out = self.clone();
        out.perturbation = Some((row, col, delta));
        out
    }
}

/// Dirichlet data: prescribed values on the p-node-wide boundary band.
///
/// The band is the discrete carrier of the order-2p Dirichlet system: its p
/// rings pin the trace and the first p-1 normal differences at once.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub field: DVector<f64>,
}

impl BoundaryData {
    pub fn zero(grid: &RectGrid) -> Self {
        BoundaryData {
            field: DVector::zeros(grid.total()),
        }
    }

    pub fn from_fn(grid: &RectGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        BoundaryData {
            field: grid.field(f),
        }
    }
}

/// Solves `L u = rhs` at interior nodes with `u` pinned to the boundary data
/// on the band; this is the primitive `I_j(f, h)` behind direct solutions.
pub fn solve_dirichlet(
    op: &EllipticOperator2D,
    rhs: &DVector<f64>,
    boundary: &BoundaryData,
) -> Result<DVector<f64>, EllipticError> {
    let p = op.p;
    let grid = &op.grid;
    let m = grid.m;
    let w = grid.interior_width(p);
    let ni = op.rows();
    assert_eq!(rhs.len(), ni, "rhs lives on interior nodes");
    let s = op.stencil.s as isize;

    let is_interior = |gx: usize, gy: usize| gx >= p && gx < m - p && gy >= p && gy < m - p;
    let hb = (s as usize) * w + s as usize;
    let mut a = SymBanded::zeros(ni, hb);
    let mut b = DVector::zeros(ni);
    for r in 0..ni {
        let (gx, gy) = op.interior_to_global(r);
        b[r] = rhs[r];
        for dy in -s..=s {
            for dx in -s..=s {
                let wgt = op.stencil.weight(dx, dy) * op.h_scale;
                if wgt == 0.0 {
                    continue;
                }
                let nx = (gx as isize + dx) as usize;
                let ny = (gy as isize + dy) as usize;
                if is_interior(nx, ny) {
                    let c = (ny - p) * w + (nx - p);
                    if c <= r {
                        a.add(r, c, wgt);
                    }
                } else {
                    b[r] -= wgt * boundary.field[ny * m + nx];
                }
            }
        }
    }
    // the interior block of an even-order composed stencil is definite; its
    // sign matches the center weight
    let center = op.stencil.weight(0, 0) * op.h_scale;
    let sign = if center >= 0.0 { 1.0 } else { -1.0 };
    if sign < 0.0 {
        let mut neg = SymBanded::zeros(ni, hb);
        for r in 0..ni {
            for c in r.saturating_sub(hb)..=r {
                let v = a.get(r, c);
                if v != 0.0 {
                    neg.set(r, c, -v);
                }
            }
        }
        a = neg;
        b = -b;
    }
    let chol = BandedCholesky::factor(&a)
        .map_err(|e| EllipticError::SingularSystem(e.to_string()))?;
    let x = chol.solve_vec(&b);

    let mut u = boundary.field.clone();
    for r in 0..ni {
        let (gx, gy) = op.interior_to_global(r);
        u[gy * m + gx] = x[r];
    }
    // solver contract: interior residual at round-off scale
    let scale = op.gram_norm_est().sqrt() * u.norm() + rhs.norm() + 1e-300;
    let res = (op.apply(&u) - rhs).norm();
    if res > 1e-10 * scale {
        return Err(EllipticError::SingularSystem(format!(
            "interior residual {res:.3e} above 1e-10 * {scale:.3e}"
        )));
    }
    Ok(u)
}

/// Factorization used for solves with `G = L L^T`.
///
/// The QR backend factors `L^T` (so `G = R^T R`) and is the accurate route;
/// the banded backend Cholesky-factors the explicitly formed `G` and is used
/// for large grids where QR is too expensive (convergence studies only).
pub enum ClampedFactor {
    Qr { r: DMatrix<f64>, rt: DMatrix<f64> },
    Banded(BandedCholesky),
}

impl ClampedFactor {
    pub fn qr(op: &EllipticOperator2D) -> Result<Self, EllipticError> {
        let lt = op.to_dense().transpose();
        let qr = lt.qr();
        let r = qr.r();
        let ni = op.rows();
        let tiny = 1e-14 * r[(0, 0)].abs().max(1e-300);
        for i in 0..ni {
            if r[(i, i)].abs() <= tiny {
                return Err(EllipticError::SingularSystem(format!(
                    "rank deficiency at column {i}: L does not have full interior rank"
                )));
            }
        }
        let rt = r.transpose();
        Ok(ClampedFactor::Qr { r, rt })
    }

    pub fn banded(op: &EllipticOperator2D) -> Result<Self, EllipticError> {
        // G = L L^T is 2-level Toeplitz: entries are the stencil
        // autocorrelation, with no boundary truncation because stencil rows
        // always fit inside the full grid.
        let p = op.p;
        let w = op.grid.interior_width(p);
        let ni = op.rows();
        let s = op.stencil.s as isize;
        let hb = (2 * s as usize) * w + 2 * s as usize;
        let scale2 = op.h_scale * op.h_scale;
        let mut auto = vec![0.0f64; (4 * s as usize + 1) * (4 * s as usize + 1)];
        let side = 4 * s as usize + 1;
        for dy in -2 * s..=2 * s {
            for dx in -2 * s..=2 * s {
                let mut acc = 0.0;
                for uy in -s..=s {
                    for ux in -s..=s {
                        let vx = ux + dx;
                        let vy = uy + dy;
                        if vx.abs() <= s && vy.abs() <= s {
                            acc += op.stencil.weight(ux, uy) * op.stencil.weight(vx, vy);
                        }
                    }
                }
                auto[(dy + 2 * s) as usize * side + (dx + 2 * s) as usize] = acc * scale2;
            }
        }
        let mut g = SymBanded::zeros(ni, hb);
        for r in 0..ni {
            let (rx, ry) = (r % w, r / w);
            for dy in -2 * s..=2 * s {
                for dx in -2 * s..=2 * s {
                    let cx = rx as isize + dx;
                    let cy = ry as isize + dy;
                    if cx < 0 || cy < 0 || cx >= w as isize || cy >= w as isize {
                        continue;
                    }
                    let c = cy as usize * w + cx as usize;
                    if c <= r {
                        let v = auto[(dy + 2 * s) as usize * side + (dx + 2 * s) as usize];
                        if v != 0.0 {
                            g.set(r, c, v);
                        }
                    }
                }
            }
        }
        let chol = BandedCholesky::factor(&g)
            .map_err(|e| EllipticError::SingularSystem(e.to_string()))?;
        Ok(ClampedFactor::Banded(chol))
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> Result<DVector<f64>, EllipticError> {
        match self {
            ClampedFactor::Qr { r, rt } => {
                let y = rt
                    .solve_lower_triangular(b)
                    .ok_or_else(|| EllipticError::SingularSystem("R^T solve".into()))?;
                r.solve_upper_triangular(&y)
                    .ok_or_else(|| EllipticError::SingularSystem("R solve".into()))
            }
            ClampedFactor::Banded(chol) => Ok(chol.solve_vec(b)),
        }
    }

    pub fn solve_block(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>, EllipticError> {
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for c in 0..b.ncols() {
            let col = self.solve_vec(&b.column(c).into_owned())?;
            out.set_column(c, &col);
        }
        Ok(out)
    }
}

/// Lowest `count` eigenpairs of the clamped auxiliary problem `G phi = mu phi`
/// with `G = L L^T`; eigenvectors are orthonormal in the discrete L2 inner
/// product on interior nodes.
pub fn clamped_spectrum(
    op: &EllipticOperator2D,
    count: usize,
) -> Result<Vec<(f64, DVector<f64>)>, EllipticError> {
    let ni = op.rows();
    assert!(count >= 1 && count <= ni, "count <= interior size");
    let h = op.grid.h;
    let pairs: Vec<(f64, DVector<f64>)> = if count * 2 >= ni || ni <= 144 {
        // small problems: dense symmetric tridiagonalization + implicit QL
        let l = op.to_dense();
        let g = &l * l.transpose();
        let (vals, vecs) = sym_eig_ascending(&g);
        (0..count)
            .map(|k| (vals[k], vecs.column(k).into_owned() / h))
            .collect()
    } else {
        // G is positive definite: pure inverse iteration, shift 0
        let factor = if op.grid.m <= 48 {
            ClampedFactor::qr(op)?
        } else {
            ClampedFactor::banded(op)?
        };
        let apply_h = |x: &DVector<f64>| op.apply_transpose(x);
        let apply_ht = |y: &DVector<f64>| op.apply(y);
        let solve = |b: &DMatrix<f64>| factor.solve_block(b).expect("factor is nonsingular");
        let opg = GramOperator {
            n: ni,
            apply_h: &apply_h,
            apply_ht: &apply_ht,
            solver: ShiftedSolver::Fixed(&solve),
        };
        let opts = EigOptions::new(count, op.gram_norm_est());
        let (vals, vecs) = lowest_gram_eigenpairs(&opg, &opts)?;
        (0..count)
            .map(|k| (vals[k], vecs.column(k).into_owned() / h))
            .collect()
    };
    if pairs.iter().any(|(mu, _)| *mu <= 0.0) {
        return Err(EllipticError::SingularSystem(
            "clamped spectrum contains a non-positive eigenvalue".into(),
        ));
    }
    Ok(pairs)
}

/// Spectrum of `L^T L`: the discrete-harmonic kernel plus lifted positive
/// modes; the complete orthonormal family of the expansion theorem.
#[derive(Debug, Clone)]
pub struct Spectrum2D {
    pub p: usize,
    pub grid: RectGrid,
    /// Columns span kernel(L), orthonormal in the discrete L2 inner product.
    pub kernel_basis: DMatrix<f64>,
    /// Ascending positive eigenvalues lambda_j.
    pub eigenvalues: Vec<f64>,
    /// Columns psi_j on the full grid, orthonormal in the discrete L2 inner
    /// product and orthogonal to the kernel.
    pub psi: DMatrix<f64>,
    /// Lifted companions phi_j = L psi_j on interior nodes.
    pub lifted: DMatrix<f64>,
}

impl Spectrum2D {
    pub fn kernel_dim(&self) -> usize {
        self.kernel_basis.ncols()
    }

    pub fn positive_count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn psi_j(&self, j: usize) -> DVector<f64> {
        self.psi.column(j).into_owned()
    }

    pub fn kernel_j(&self, j: usize) -> DVector<f64> {
        self.kernel_basis.column(j).into_owned()
    }
}

/// Runs the lift stage: solves `G phi_hat_k = phi_k`, sets
/// `psi_k = L^T phi_hat_k`, normalizes, verifies the eigen-residual, and
/// extracts the orthonormal kernel basis of `L`.
pub fn lift_eigenfunctions(
    op: &EllipticOperator2D,
    clamped: &[(f64, DVector<f64>)],
) -> Result<Spectrum2D, EllipticError> {
    let grid = op.grid;
    let h = grid.h;
    let n = grid.total();
    let factor = ClampedFactor::qr(op)?;
    let count = clamped.len();
    let mut psi = DMatrix::zeros(n, count);
    let mut lifted = DMatrix::zeros(op.rows(), count);
    let mut eigenvalues = Vec::with_capacity(count);
    let norm_est = op.gram_norm_est();
    for (k, (mu, phi)) in clamped.iter().enumerate() {
        let phi_hat = factor.solve_vec(phi)?;
        let psi_raw = op.apply_transpose(&phi_hat);
        let scale = 1.0 / (h * psi_raw.norm());
        let psi_k = psi_raw * scale;
        // cancellation-free Rayleigh quotient |L psi|^2 / |psi|^2
        let l_psi = op.apply(&psi_k);
        let lambda = l_psi.norm_squared() / psi_k.norm_squared();
        let residual = (op.apply_transpose(&l_psi) - &psi_k * lambda).norm();
        let tol = 1e-8 * norm_est * psi_k.norm();
        if residual > tol || (lambda - mu).abs() > 1e-8 * mu {
            return Err(EllipticError::ResidualTooLarge {
                index: k,
                residual: residual.max((lambda - mu).abs() / mu),
                tol,
            });
        }
        psi.set_column(k, &psi_k);
        lifted.set_column(k, &l_psi);
        eigenvalues.push(lambda);
    }
    // kernel(L) = orthogonal complement of range(L^T)
    let lt = op.to_dense().transpose();
    let q1 = orthonormalize_thin(lt);
    let kernel_dot = orthonormal_complement(&q1, 0xA11CE);
    let expected = n - op.rows();
    if kernel_dot.ncols() != expected {
        return Err(EllipticError::SingularSystem(format!(
            "kernel completion found {} directions, expected {expected}",
            kernel_dot.ncols()
        )));
    }
    let kernel_basis = kernel_dot / h;
    Ok(Spectrum2D {
        p: op.p,
        grid,
        kernel_basis,
        eigenvalues,
        psi,
        lifted,
    })
}

/// Discrete Green-identity check (the adjointness mechanism of the
/// expansion proof): for random kernel elements v and random modes k,
/// evaluates `|<L^T L psi_k, v> - lambda_k <psi_k, v>|` and `|<psi_k, v>|`,
/// both scaled, and returns the maximum deviation.
pub fn green_orthogonality_check(
    op: &EllipticOperator2D,
    spectrum: &Spectrum2D,
    trials: usize,
    seed: u64,
) -> f64 {
    let grid = &spectrum.grid;
    let mut rng = crate::rng::CounterRng::substream(seed, 0x67726565);
    let kdim = spectrum.kernel_dim();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let mut v = DVector::zeros(grid.total());
        for j in 0..kdim {
            v += spectrum.kernel_j(j) * rng.next_symmetric();
        }
        let vn = grid.norm(&v);
        if vn == 0.0 {
            continue;
        }
        let v = v / vn;
        let k = (rng.next_u64() as usize) % spectrum.positive_count();
        let psi = spectrum.psi_j(k);
        let lambda = spectrum.eigenvalues[k];
        let ltl_psi = op.apply_transpose(&op.apply(&psi));
        let green = (grid.inner(&ltl_psi, &v) - lambda * grid.inner(&psi, &v)).abs() / lambda;
        let ortho = grid.inner(&psi, &v).abs();
        worst = worst.max(green).max(ortho);
    }
    worst
}

/// Field export `x,y,value` in row-major node order.
pub fn export_field_csv(
    path: &Path,
    grid: &RectGrid,
    field: &DVector<f64>,
) -> Result<(), EllipticError> {
    let rows: Vec<Vec<String>> = (0..grid.total())
        .map(|idx| {
            let (x, y) = grid.node(idx);
            vec![fmt_float(x), fmt_float(y), fmt_float(field[idx])]
        })
        .collect();
    write_csv(path, &["x", "y", "value"], &rows)?;
    Ok(())
}

/// Spectrum export `j,lambda` over the positive modes.
pub fn export_spectrum2d_csv(path: &Path, spectrum: &Spectrum2D) -> Result<(), EllipticError> {
    let rows: Vec<Vec<String>> = spectrum
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(j, &l)| vec![(j + 1).to_string(), fmt_float(l)])
        .collect();
    write_csv(path, &["j", "lambda"], &rows)?;
    Ok(())
}

/// Squared positive singular values of `L` (ascending), the independent
/// route to the shared positive spectrum of `L^T L` and `L L^T`.
pub fn squared_singular_values(op: &EllipticOperator2D, count: usize) -> Vec<f64> {
    let svd = op.to_dense().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().map(|s| s * s).collect();
    sv.sort_by(f64::total_cmp);
    sv.into_iter().take(count.min(op.rows())).collect()
}
