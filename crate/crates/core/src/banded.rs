//! Symmetric banded matrices and iterative eigensolvers for Gram operators.
//!
//! Every large eigenproblem in the crate is of Gram form `A = H^T H` (or
//! `G = L L^T = (L^T)^T (L^T)`). The engine here exploits that twice:
//!
//! - Rayleigh quotients and projected blocks are evaluated through the half
//!   factor as sums of squares, `x^T A x = |H x|^2`, so tiny eigenvalues are
//!   not polluted by cancellation against the matrix norm;
//! - shifted solves use a Cholesky factorization of the banded matrix, or a
//!   caller-supplied solver (e.g. a QR factorization of `H`).

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::rng::CounterRng;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("eigensolver did not converge to residual {tol} within {iterations} iterations")]
    EigenFailure { tol: f64, iterations: usize },
    #[error("singular triangular factor at index {0}")]
    SingularFactor(usize),
}

/// Symmetric banded matrix in lower band-column storage:
/// `data[j * (hb + 1) + d]` holds `A[j + d, j]` for `0 <= d <= hb`.
#[derive(Debug, Clone)]
pub struct SymBanded {
    pub n: usize,
    pub hb: usize,
    data: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, hb: usize) -> Self {
        SymBanded {
            n,
            hb,
            data: vec![0.0; n * (hb + 1)],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i >= j { (j, i) } else { (i, j) };
        if hi - lo > self.hb {
            0.0
        } else {
            self.data[lo * (self.hb + 1) + (hi - lo)]
        }
    }

    /// Adds `v` to the (i, j) entry (and by symmetry (j, i)).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (lo, hi) = if i >= j { (j, i) } else { (i, j) };
        debug_assert!(hi - lo <= self.hb, "entry outside band");
        self.data[lo * (self.hb + 1) + (hi - lo)] += v;
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (lo, hi) = if i >= j { (j, i) } else { (i, j) };
        debug_assert!(hi - lo <= self.hb, "entry outside band");
        self.data[lo * (self.hb + 1) + (hi - lo)] = v;
    }

    pub fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        for j in 0..self.n {
            let diag = self.data[j * (self.hb + 1)];
            y[j] += diag * x[j];
            let top = (j + self.hb).min(self.n - 1);
            for i in j + 1..=top {
                let v = self.data[j * (self.hb + 1) + (i - j)];
                y[i] += v * x[j];
                y[j] += v * x[i];
            }
        }
        y
    }

    /// Symmetric diagonal scaling `D A D` with `D = diag(scale)`.
    pub fn scale_sym(&self, scale: &[f64]) -> SymBanded {
        assert_eq!(scale.len(), self.n);
        let mut out = self.clone();
        for j in 0..self.n {
            let top = (j + self.hb).min(self.n - 1);
            for i in j..=top {
                out.data[j * (self.hb + 1) + (i - j)] *= scale[i] * scale[j];
            }
        }
        out
    }

    pub fn shifted(&self, s: f64) -> SymBanded {
        let mut out = self.clone();
        for j in 0..self.n {
            out.data[j * (self.hb + 1)] += s;
        }
        out
    }

    /// Infinity norm (max absolute row sum), used as a residual scale.
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0f64; self.n];
        for j in 0..self.n {
            let top = (j + self.hb).min(self.n - 1);
            for i in j..=top {
                let v = self.data[j * (self.hb + 1) + (i - j)].abs();
                rows[i] += v;
                if i != j {
                    rows[j] += v;
                }
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            let top = (j + self.hb).min(self.n - 1);
            for i in j..=top {
                let v = self.data[j * (self.hb + 1) + (i - j)];
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}

/// Cholesky factor of an SPD banded matrix, same band structure.
pub struct BandedCholesky {
    l: SymBanded,
}

impl BandedCholesky {
    pub fn factor(a: &SymBanded) -> Result<Self, LinalgError> {
        let n = a.n;
        let hb = a.hb;
        let mut l = a.clone();
        for j in 0..n {
            // column j: subtract contributions of columns k in [j-hb, j)
            let kmin = j.saturating_sub(hb);
            let mut diag = l.data[j * (hb + 1)];
            for k in kmin..j {
                let ljk = l.data[k * (hb + 1) + (j - k)];
                diag -= ljk * ljk;
            }
            if diag <= 0.0 || !diag.is_finite() {
                return Err(LinalgError::NotPositiveDefinite {
                    index: j,
                    pivot: diag,
                });
            }
            let dsq = diag.sqrt();
            l.data[j * (hb + 1)] = dsq;
            let top = (j + hb).min(n - 1);
            for i in j + 1..=top {
                let mut v = l.data[j * (hb + 1) + (i - j)];
                let kmin_i = i.saturating_sub(hb);
                for k in kmin_i.max(kmin)..j {
                    v -= l.data[k * (hb + 1) + (i - k)] * l.data[k * (hb + 1) + (j - k)];
                }
                l.data[j * (hb + 1) + (i - j)] = v / dsq;
            }
        }
        Ok(BandedCholesky { l })
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.l.n;
        let hb = self.l.hb;
        let mut x = b.clone();
        // forward: L y = b
        for j in 0..n {
            x[j] /= self.l.data[j * (hb + 1)];
            let top = (j + hb).min(n - 1);
            for i in j + 1..=top {
                x[i] -= self.l.data[j * (hb + 1) + (i - j)] * x[j];
            }
        }
        // backward: L^T x = y
        for j in (0..n).rev() {
            let top = (j + hb).min(n - 1);
            let mut v = x[j];
            for i in j + 1..=top {
                v -= self.l.data[j * (hb + 1) + (i - j)] * x[i];
            }
            x[j] = v / self.l.data[j * (hb + 1)];
        }
        x
    }

    pub fn solve_block(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for c in 0..b.ncols() {
            let col = self.solve_vec(&b.column(c).into_owned());
            out.set_column(c, &col);
        }
        out
    }
}

/// Thin orthonormal basis of the column space via Householder QR.
pub fn orthonormalize_thin(m: DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.qr();
    qr.q()
}

/// Eigenvalues (ascending) and eigenvectors of a small dense symmetric matrix.
pub fn sym_eig_ascending(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let sym = nalgebra::SymmetricEigen::new(m.clone());
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| sym.eigenvalues[a].total_cmp(&sym.eigenvalues[b]));
    let vals: Vec<f64> = idx.iter().map(|&i| sym.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (c, &i) in idx.iter().enumerate() {
        vecs.set_column(c, &sym.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Orthonormal basis of the orthogonal complement of the span of `q1`.
///
/// `q1` must have orthonormal columns. The complement has dimension
/// `n - rank`, built from a seeded random block projected off `span(q1)`
/// twice and orthonormalized.
pub fn orthonormal_complement(q1: &DMatrix<f64>, seed: u64) -> DMatrix<f64> {
    let n = q1.nrows();
    let r = q1.ncols();
    let k = n - r;
    if k == 0 {
        return DMatrix::zeros(n, 0);
    }
    let mut rng = CounterRng::substream(seed, 0x636f6d70);
    let mut g = DMatrix::from_fn(n, k, |_, _| rng.next_symmetric());
    for _ in 0..2 {
        let coeff = q1.transpose() * &g;
        g -= q1 * coeff;
    }
    let q = orthonormalize_thin(g);
    // one more projection pass to push residual coupling to round-off
    let coeff = q1.transpose() * &q;
    let q = q - q1 * coeff;
    orthonormalize_thin(q)
}

pub struct EigOptions {
    /// Number of eigenpairs to return.
    pub count: usize,
    /// Iteration block size; at least `count + 2` is enforced.
    pub block: usize,
    /// Residual tolerance relative to `norm_est`.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Estimate of the operator norm, used to scale residual tests.
    pub norm_est: f64,
}

impl EigOptions {
    pub fn new(count: usize, norm_est: f64) -> Self {
        EigOptions {
            count,
            block: count + (count / 2).max(4),
            tol: 1e-10,
            max_iter: 600,
            seed: 0x5eed,
            norm_est,
        }
    }
}

/// How the engine solves the shifted system `(A + s I) y = x`.
pub enum ShiftedSolver<'a> {
    /// Banded Cholesky factory; the engine re-factors as its shift adapts.
    Factory(&'a dyn Fn(f64) -> Result<BandedCholesky, LinalgError>),
    /// One pre-built solve for a definite operator; shift stays 0.
    Fixed(&'a dyn Fn(&DMatrix<f64>) -> DMatrix<f64>),
}

/// Callbacks describing the Gram operator `A = H^T H` of size `n`.
pub struct GramOperator<'a> {
    pub n: usize,
    /// `x -> H x`.
    pub apply_h: &'a dyn Fn(&DVector<f64>) -> DVector<f64>,
    /// `y -> H^T y`.
    pub apply_ht: &'a dyn Fn(&DVector<f64>) -> DVector<f64>,
    pub solver: ShiftedSolver<'a>,
}

/// Lowest `count` eigenpairs of a symmetric PSD Gram operator by
/// shift-inverted subspace iteration with Rayleigh–Ritz extraction.
///
/// Eigenvalues are Ritz values of the projected block `(HX)^T (HX)`, which is
/// a sum of squares: exact zeros of `H` survive as eigenvalues at round-off
/// scale rather than at `eps * |A|`.
pub fn lowest_gram_eigenpairs(
    op: &GramOperator,
    opts: &EigOptions,
) -> Result<(Vec<f64>, DMatrix<f64>), LinalgError> {
    let n = op.n;
    let q = opts.block.max(opts.count + 2).min(n);
    assert!(opts.count <= q);
    let mut rng = CounterRng::substream(opts.seed, 0x6569675f);
    let x0 = DMatrix::from_fn(n, q, |_, _| rng.next_symmetric());
    let mut x = orthonormalize_thin(x0);

    let mut shift = opts.norm_est * 1e-8 + 1e-30;
    let mut chol = match op.solver {
        ShiftedSolver::Factory(make) => Some(make(shift)?),
        ShiftedSolver::Fixed(_) => None,
    };

    let mut prev: Option<Vec<f64>> = None;
    let mut theta: Vec<f64>;
    // once Ritz values stagnate, keep iterating until the residuals reach
    // their round-off floor (eigenvector directions keep improving after
    // the values stop moving)
    let floor = 64.0 * f64::EPSILON * opts.norm_est;
    let mut best_res = f64::INFINITY;
    let mut stalled = 0usize;
    for iter in 0..opts.max_iter {
        let y = match (&op.solver, &chol) {
            (ShiftedSolver::Factory(_), Some(c)) => c.solve_block(&x),
            (ShiftedSolver::Fixed(f), _) => f(&x),
            _ => unreachable!(),
        };
        x = orthonormalize_thin(y);
        // Rayleigh-Ritz through the half factor
        let mut hx = DMatrix::zeros((op.apply_h)(&x.column(0).into_owned()).nrows(), q);
        for c in 0..q {
            hx.set_column(c, &(op.apply_h)(&x.column(c).into_owned()));
        }
        let p = hx.transpose() * &hx;
        let (vals, s_small) = sym_eig_ascending(&p);
        x = &x * &s_small;
        theta = vals;

        let scale = theta[opts.count - 1].abs().max(opts.norm_est * 1e-14);
        let stagnant = prev.as_ref().is_some_and(|pv| {
            theta
                .iter()
                .zip(pv)
                .take(opts.count)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * scale)
        });
        if stagnant {
            let mut res_max = 0.0f64;
            for (i, &th) in theta.iter().enumerate().take(opts.count) {
                let xi = x.column(i).into_owned();
                let ax = (op.apply_ht)(&(op.apply_h)(&xi));
                res_max = res_max.max((&ax - th * &xi).norm());
            }
            let stopped_improving = res_max >= 0.7 * best_res;
            best_res = best_res.min(res_max);
            if res_max <= floor
                || (stopped_improving && {
                    stalled += 1;
                    stalled >= 3 && res_max <= opts.tol * opts.norm_est
                })
            {
                let vals = theta[..opts.count].to_vec();
                let vecs = x.columns(0, opts.count).into_owned();
                return Ok((vals, vecs));
            }
            if !stopped_improving {
                stalled = 0;
            }
        }
        prev = Some(theta.clone());

        // adapt the shift to the current spectral window
        if let ShiftedSolver::Factory(make) = op.solver {
            if iter % 8 == 7 {
                let target = theta[q - 1].max(opts.norm_est * 1e-14);
                if target > 4.0 * shift || target < shift / 4.0 {
                    shift = target;
                    chol = Some(make(shift)?);
                }
            }
        }
    }
    Err(LinalgError::EigenFailure {
        tol: opts.tol,
        iterations: opts.max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tridiag(n: usize, a: f64, b: f64) -> SymBanded {
        let mut m = SymBanded::zeros(n, 1);
        for i in 0..n {
            m.set(i, i, a);
            if i + 1 < n {
                m.set(i + 1, i, b);
            }
        }
        m
    }

    #[test]
    fn banded_cholesky_solves() {
        let a = tridiag(50, 4.0, -1.0);
        let chol = BandedCholesky::factor(&a).unwrap();
        let b = DVector::from_fn(50, |i, _| (i as f64).sin());
        let x = chol.solve_vec(&b);
        let r = (a.matvec(&x) - &b).norm();
        assert!(r < 1e-12, "residual {r}");
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = tridiag(10, 1.0, -1.0); // eigenvalues 1 - 2cos(k pi/11) < 0 for some k
        assert!(BandedCholesky::factor(&a).is_err());
    }

    #[test]
    fn matvec_matches_dense() {
        let a = tridiag(20, 2.0, -1.0);
        let d = a.to_dense();
        let x = DVector::from_fn(20, |i, _| 1.0 / (i as f64 + 1.0));
        let err = (a.matvec(&x) - d * &x).norm();
        assert!(err < 1e-14);
    }

    #[test]
    fn complement_is_orthonormal_and_orthogonal() {
        let m = DMatrix::from_fn(12, 4, |i, j| ((i * 7 + j * 3) as f64).sin());
        let q1 = orthonormalize_thin(m);
        let q2 = orthonormal_complement(&q1, 9);
        assert_eq!(q2.ncols(), 8);
        let g = q2.transpose() * &q2;
        assert!((g - DMatrix::identity(8, 8)).norm() < 1e-12);
        assert!((q1.transpose() * &q2).norm() < 1e-12);
    }

    #[test]
    fn gram_engine_finds_laplacian_modes() {
        // A = H^T H with H the forward difference on 64 nodes: the free
        // (Neumann) discrete Laplacian, eigenvalues 4 sin^2(k pi / (2n)).
        let n = 64usize;
        let apply_h = |x: &DVector<f64>| {
            DVector::from_fn(n - 1, |i, _| x[i + 1] - x[i])
        };
        let apply_ht = |y: &DVector<f64>| {
            DVector::from_fn(n, |i, _| {
                let mut v = 0.0;
                if i < n - 1 {
                    v -= y[i];
                }
                if i > 0 {
                    v += y[i - 1];
                }
                v
            })
        };
        let mut a = SymBanded::zeros(n, 1);
        for i in 0..n - 1 {
            a.add(i, i, 1.0);
            a.add(i + 1, i + 1, 1.0);
            a.add(i + 1, i, -1.0);
        }
        let make_solver = move |s: f64| BandedCholesky::factor(&a.shifted(s));
        let op = GramOperator {
            n,
            apply_h: &apply_h,
            apply_ht: &apply_ht,
            solver: ShiftedSolver::Factory(&make_solver),
        };
        let opts = EigOptions::new(5, 4.0);
        let (vals, vecs) = lowest_gram_eigenpairs(&op, &opts).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let exact = 4.0 * (k as f64 * std::f64::consts::PI / (2 * n) as f64).sin().powi(2);
            assert_abs_diff_eq!(*v, exact, epsilon = 1e-10);
        }
        // vectors orthonormal
        let g = vecs.transpose() * &vecs;
        assert!((g - DMatrix::identity(5, 5)).norm() < 1e-9);
    }
}
