//! Univariate polynomials with exact rational coefficients.
//!
//! Supports the exact Wronskian computations behind the piecewise-ECT
//! partition: arithmetic, derivatives, determinants, Sturm sequences, and
//! real-root isolation over an interval. Rational roots are extracted first
//! (rational-root theorem), so the Sturm stage only ever sees polynomials
//! that cannot vanish at a rational point and plain sign bisection is exact.

use num::bigint::BigInt;
use num::rational::Ratio;
use num::{One, Signed, Zero};
use std::fmt;

pub type Rat = Ratio<BigInt>;

pub fn rat_i64(n: i64, d: i64) -> Rat {
    Ratio::new(BigInt::from(n), BigInt::from(d))
}

/// Exact rational value of an f64 (every finite f64 is a dyadic rational).
pub fn rat_from_f64(x: f64) -> Rat {
    Rat::from_float(x).expect("finite float")
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    let num = r.numer();
    let den = r.denom();
    // exact for desk-scale magnitudes; falls back to string parsing otherwise
    let nf = num.to_string().parse::<f64>().unwrap_or(f64::NAN);
    let df = den.to_string().parse::<f64>().unwrap_or(f64::NAN);
    nf / df
}

/// Polynomial with ascending coefficients; the zero polynomial stores none.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatPoly {
    coeffs: Vec<Rat>,
}

impl RatPoly {
    pub fn new(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        RatPoly { coeffs }
    }

    pub fn zero() -> Self {
        RatPoly { coeffs: vec![] }
    }

    pub fn constant(c: Rat) -> Self {
        RatPoly::new(vec![c])
    }

    /// The monomial c * t^k.
    pub fn monomial(c: Rat, k: usize) -> Self {
        let mut coeffs = vec![Rat::zero(); k + 1];
        coeffs[k] = c;
        RatPoly::new(coeffs)
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        RatPoly::new(coeffs.iter().map(|&c| rat_i64(c, 1)).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.is_zero() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeff(&self, k: usize) -> Rat {
        self.coeffs.get(k).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn leading(&self) -> Rat {
        self.coeffs.last().cloned().unwrap_or_else(Rat::zero)
    }

    pub fn eval(&self, t: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    pub fn eval_f64(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * t + rat_to_f64(c);
        }
        acc
    }

    pub fn derivative(&self) -> RatPoly {
        if self.coeffs.len() <= 1 {
            return RatPoly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * Rat::from_integer(BigInt::from(k)))
            .collect();
        RatPoly::new(coeffs)
    }

    pub fn add(&self, other: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) + other.coeff(k)).collect();
        RatPoly::new(coeffs)
    }

    pub fn sub(&self, other: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) - other.coeff(k)).collect();
        RatPoly::new(coeffs)
    }

    pub fn neg(&self) -> RatPoly {
        RatPoly::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }

    pub fn mul(&self, other: &RatPoly) -> RatPoly {
        if self.is_zero() || other.is_zero() {
            return RatPoly::zero();
        }
        let mut coeffs = vec![Rat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        RatPoly::new(coeffs)
    }

    pub fn scale(&self, s: &Rat) -> RatPoly {
        RatPoly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Euclidean division: returns (quotient, remainder).
    pub fn divrem(&self, den: &RatPoly) -> (RatPoly, RatPoly) {
        assert!(!den.is_zero(), "division by zero polynomial");
        let dd = den.degree().unwrap();
        let lead = den.leading();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (RatPoly::zero(), self.clone());
        }
        let qlen = rem.len() - dd;
        let mut quo = vec![Rat::zero(); qlen];
        for qi in (0..qlen).rev() {
            let c = rem[qi + dd].clone() / lead.clone();
            if !c.is_zero() {
                for (k, dc) in den.coeffs.iter().enumerate() {
                    let v = dc * &c;
                    rem[qi + k] -= v;
                }
            }
            quo[qi] = c;
        }
        (RatPoly::new(quo), RatPoly::new(rem))
    }

    /// Monic normalization (leading coefficient 1); zero stays zero.
    pub fn monic(&self) -> RatPoly {
        if self.is_zero() {
            return RatPoly::zero();
        }
        let l = self.leading();
        RatPoly::new(self.coeffs.iter().map(|c| c / &l).collect())
    }

    /// Scales so |leading| = 1, preserving the sign (Sturm sequences need
    /// sign-faithful normalization).
    pub fn normalize_keep_sign(&self) -> RatPoly {
        if self.is_zero() {
            return RatPoly::zero();
        }
        let l = self.leading().abs();
        RatPoly::new(self.coeffs.iter().map(|c| c / &l).collect())
    }

    pub fn gcd(&self, other: &RatPoly) -> RatPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r.monic(); // keep coefficient growth in check
        }
        a.monic()
    }

    /// Squarefree part p / gcd(p, p').
    pub fn squarefree(&self) -> RatPoly {
        if self.degree().unwrap_or(0) == 0 {
            return self.monic();
        }
        let g = self.gcd(&self.derivative());
        if g.degree() == Some(0) {
            return self.monic();
        }
        let (q, r) = self.divrem(&g);
        debug_assert!(r.is_zero());
        q.monic()
    }
}

impl fmt::Display for RatPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " {} ", if c.is_negative() { "-" } else { "+" })?;
            } else if c.is_negative() {
                write!(f, "-")?;
            }
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                _ => {
                    if !a.is_one() {
                        write!(f, "{a}*")?;
                    }
                    if k == 1 {
                        write!(f, "t")?;
                    } else {
                        write!(f, "t^{k}")?;
                    }
                }
            }
            first = false;
        }
        Ok(())
    }
}

/// Quotient of two polynomials; equality is exact via cross-multiplication.
#[derive(Debug, Clone)]
pub struct RationalFunction {
    pub num: RatPoly,
    pub den: RatPoly,
}

impl RationalFunction {
    pub fn new(num: RatPoly, den: RatPoly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        RationalFunction { num, den }
    }

    pub fn eval(&self, t: &Rat) -> Option<Rat> {
        let d = self.den.eval(t);
        if d.is_zero() {
            None
        } else {
            Some(self.num.eval(t) / d)
        }
    }

    /// a/b == c/d  iff  a*d == c*b (exact).
    pub fn equivalent(&self, other: &RationalFunction) -> bool {
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }
}

/// Determinant of a square matrix of polynomials by cofactor expansion.
pub fn poly_det(m: &[Vec<RatPoly>]) -> RatPoly {
    let n = m.len();
    if n == 0 {
        return RatPoly::constant(Rat::one());
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut det = RatPoly::zero();
    for (j, top) in m[0].iter().enumerate() {
        if top.is_zero() {
            continue;
        }
        let minor: Vec<Vec<RatPoly>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != j)
                    .map(|(_, p)| p.clone())
                    .collect()
            })
            .collect();
        let cof = top.mul(&poly_det(&minor));
        det = if j % 2 == 0 { det.add(&cof) } else { det.sub(&cof) };
    }
    det
}

/// Wronskian W(p_1, ..., p_k): determinant of derivatives of orders 0..k-1.
pub fn poly_wronskian(basis: &[RatPoly], k: usize) -> RatPoly {
    assert!(k >= 1 && k <= basis.len());
    let mut rows: Vec<Vec<RatPoly>> = Vec::with_capacity(k);
    let mut current: Vec<RatPoly> = basis[..k].to_vec();
    for _ in 0..k {
        rows.push(current.clone());
        current = current.iter().map(|p| p.derivative()).collect();
    }
    poly_det(&rows)
}

fn sign(r: &Rat) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

/// Sturm sequence of a squarefree polynomial.
fn sturm_sequence(p: &RatPoly) -> Vec<RatPoly> {
    let mut seq = vec![p.clone(), p.derivative()];
    loop {
        let k = seq.len();
        if seq[k - 1].is_zero() {
            seq.pop();
            return seq;
        }
        if seq[k - 1].degree() == Some(0) {
            return seq;
        }
        let (_, r) = seq[k - 2].divrem(&seq[k - 1]);
        if r.is_zero() {
            return seq;
        }
        seq.push(r.neg().normalize_keep_sign());
    }
}

fn sign_variations(seq: &[RatPoly], t: &Rat) -> usize {
    let mut vars = 0;
    let mut last = 0i8;
    for p in seq {
        let s = sign(&p.eval(t));
        if s != 0 {
            if last != 0 && s != last {
                vars += 1;
            }
            last = s;
        }
    }
    vars
}

/// Rational roots of `p` (with multiplicity collapsed), found by the
/// rational-root theorem on the integer-cleared polynomial. Returns `None`
/// when the leading/trailing coefficients are too large to factor at desk
/// scale (callers then fall back to bracket-only isolation).
pub fn rational_roots(p: &RatPoly) -> Option<Vec<Rat>> {
    if p.is_zero() {
        return Some(vec![]);
    }
    // clear denominators -> integer coefficients
    let mut den_lcm = BigInt::one();
    for c in &p.coeffs {
        let d = c.denom();
        den_lcm = num::integer::lcm(den_lcm, d.clone());
    }
    let ints: Vec<BigInt> = p
        .coeffs
        .iter()
        .map(|c| (c * Rat::from_integer(den_lcm.clone())).to_integer())
        .collect();
    let mut roots = Vec::new();
    // strip t^k factor (roots at zero)
    let first_nonzero = ints.iter().position(|c| !c.is_zero()).unwrap();
    if first_nonzero > 0 {
        roots.push(Rat::zero());
    }
    let ints = &ints[first_nonzero..];
    if ints.len() <= 1 {
        return Some(roots);
    }
    let a0: i128 = ints[0].abs().try_into().ok()?;
    let ad: i128 = ints[ints.len() - 1].abs().try_into().ok()?;
    let mut work = RatPoly::new(ints.iter().map(|c| Rat::from_integer(c.clone())).collect());
    for num_d in divisors(a0) {
        for den_d in divisors(ad) {
            for s in [1i128, -1] {
                let cand = rat_i64_128(s * num_d, den_d);
                while work.eval(&cand).is_zero() {
                    if !roots.contains(&cand) {
                        roots.push(cand.clone());
                    }
                    let lin = RatPoly::new(vec![-cand.clone(), Rat::one()]);
                    let (q, r) = work.divrem(&lin);
                    debug_assert!(r.is_zero());
                    work = q;
                }
            }
        }
    }
    Some(roots)
}

fn rat_i64_128(n: i128, d: i128) -> Rat {
    Ratio::new(BigInt::from(n), BigInt::from(d))
}

fn divisors(n: i128) -> Vec<i128> {
    if n == 0 {
        return vec![1];
    }
    let n = n.abs();
    let mut out = Vec::new();
    let mut d = 1i128;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
        if out.len() > 4096 {
            break; // desk-scale guard
        }
    }
    out.sort_unstable();
    out
}

/// Location of one real root: known exactly, or bracketed with sign change.
#[derive(Debug, Clone, PartialEq)]
pub enum RootLoc {
    Exact(Rat),
    Bracket(Rat, Rat),
}

impl RootLoc {
    pub fn approx_f64(&self) -> f64 {
        match self {
            RootLoc::Exact(r) => rat_to_f64(r),
            RootLoc::Bracket(l, u) => 0.5 * (rat_to_f64(l) + rat_to_f64(u)),
        }
    }

    pub fn midpoint(&self) -> Rat {
        match self {
            RootLoc::Exact(r) => r.clone(),
            RootLoc::Bracket(l, u) => (l + u) / rat_i64(2, 1),
        }
    }
}

/// All distinct real roots of `p` strictly inside (a, b), sorted ascending.
///
/// Rational roots are returned exactly; irrational ones as sign-change
/// brackets refined to relative width ~2^-55.
pub fn isolate_real_roots(p: &RatPoly, a: &Rat, b: &Rat) -> Vec<RootLoc> {
    assert!(a < b);
    let sf = p.squarefree();
    if sf.degree().unwrap_or(0) == 0 {
        return vec![];
    }
    let mut exact: Vec<Rat> = Vec::new();
    let mut work = sf.clone();
    if let Some(rs) = rational_roots(&sf) {
        for r in rs {
            if &r > a && &r < b {
                exact.push(r.clone());
            }
            let lin = RatPoly::new(vec![-r.clone(), Rat::one()]);
            let (q, rem) = work.divrem(&lin);
            debug_assert!(rem.is_zero());
            work = q;
        }
    }
    let mut out: Vec<RootLoc> = exact.into_iter().map(RootLoc::Exact).collect();
    if work.degree().unwrap_or(0) >= 1 {
        // `work` has no rational roots: rational evaluations are never zero
        let seq = sturm_sequence(&work);
        let mut stack = vec![(a.clone(), b.clone())];
        let min_width = (b - a) * rat_i64(1, 1i64 << 55);
        while let Some((lo, hi)) = stack.pop() {
            let count = sign_variations(&seq, &lo) as i64 - sign_variations(&seq, &hi) as i64;
            if count <= 0 {
                continue;
            }
            let width = &hi - &lo;
            if count == 1 {
                let (mut l, mut u) = (lo.clone(), hi.clone());
                let mut sl = sign(&work.eval(&l));
                let mut hit_exact = false;
                while &u - &l > min_width {
                    let mid = (&l + &u) / rat_i64(2, 1);
                    let sm = sign(&work.eval(&mid));
                    if sm == 0 {
                        // only reachable when the rational-root search bailed
                        // on oversized coefficients; the midpoint is the root
                        out.push(RootLoc::Exact(mid));
                        hit_exact = true;
                        break;
                    }
                    if sm == sl {
                        l = mid;
                    } else {
                        u = mid;
                    }
                    sl = sign(&work.eval(&l));
                }
                if !hit_exact {
                    out.push(RootLoc::Bracket(l, u));
                }
                continue;
            }
            if width <= min_width {
                // cluster below resolution; report the bracket once
                out.push(RootLoc::Bracket(lo, hi));
                continue;
            }
            let mid = (&lo + &hi) / rat_i64(2, 1);
            stack.push((lo, mid.clone()));
            stack.push((mid, hi));
        }
    }
    out.sort_by_key(|x| x.midpoint());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t() -> RatPoly {
        RatPoly::monomial(Rat::one(), 1)
    }

    #[test]
    fn divrem_identity() {
        // (t^2+1)(t-3) + 7 divided by (t^2+1)
        let den = RatPoly::from_i64(&[1, 0, 1]);
        let q = RatPoly::from_i64(&[-3, 1]);
        let num = den.mul(&q).add(&RatPoly::from_i64(&[7]));
        let (q2, r2) = num.divrem(&den);
        assert_eq!(q2, q);
        assert_eq!(r2, RatPoly::from_i64(&[7]));
    }

    #[test]
    fn wronskian_of_monomials() {
        // W(1, t, t^2) = det [[1,t,t^2],[0,1,2t],[0,0,2]] = 2
        let basis = vec![
            RatPoly::from_i64(&[1]),
            t(),
            RatPoly::monomial(Rat::one(), 2),
        ];
        assert_eq!(poly_wronskian(&basis, 3), RatPoly::from_i64(&[2]));
        assert_eq!(poly_wronskian(&basis, 2), RatPoly::from_i64(&[1]));
    }

    #[test]
    fn wronskian_perturbed_heaviside_pair() {
        // W(t^2 + eps, t^2) = (t^2+eps) 2t - t^2 2t = 2 eps t, eps = 1/10
        let eps = rat_i64(1, 10);
        let u1 = RatPoly::new(vec![eps.clone(), Rat::zero(), Rat::one()]);
        let u2 = RatPoly::monomial(Rat::one(), 2);
        let w2 = poly_wronskian(&[u1, u2], 2);
        assert_eq!(w2, RatPoly::new(vec![Rat::zero(), eps * rat_i64(2, 1)]));
    }

    #[test]
    fn rational_roots_found_exactly() {
        // (t)(t - 1/2)(t + 3)
        let p = RatPoly::monomial(Rat::one(), 1)
            .mul(&RatPoly::new(vec![rat_i64(-1, 2), Rat::one()]))
            .mul(&RatPoly::from_i64(&[3, 1]));
        let mut roots = rational_roots(&p).unwrap();
        roots.sort();
        assert_eq!(roots, vec![rat_i64(-3, 1), rat_i64(0, 1), rat_i64(1, 2)]);
    }

    #[test]
    fn isolates_irrational_roots() {
        // t^2 - 2 has roots +-sqrt(2); only +sqrt(2) is in (0, 2)
        let p = RatPoly::from_i64(&[-2, 0, 1]);
        let roots = isolate_real_roots(&p, &rat_i64(0, 1), &rat_i64(2, 1));
        assert_eq!(roots.len(), 1);
        let approx = roots[0].approx_f64();
        assert!((approx - 2f64.sqrt()).abs() < 1e-12);
        assert!(matches!(roots[0], RootLoc::Bracket(_, _)));
    }

    #[test]
    fn exact_zero_root_reported_exactly() {
        // 2 eps t: root exactly at 0
        let p = RatPoly::new(vec![Rat::zero(), rat_i64(1, 5)]);
        let roots = isolate_real_roots(&p, &rat_i64(-1, 1), &rat_i64(1, 1));
        assert_eq!(roots, vec![RootLoc::Exact(Rat::zero())]);
    }

    #[test]
    fn squarefree_collapses_multiplicity() {
        // t^2 (t-1): squarefree part t(t-1)
        let p = RatPoly::monomial(Rat::one(), 2).mul(&RatPoly::from_i64(&[-1, 1]));
        let sf = p.squarefree();
        assert_eq!(sf.degree(), Some(2));
        let roots = isolate_real_roots(&p, &rat_i64(-2, 1), &rat_i64(2, 1));
        assert_eq!(roots.len(), 2);
    }

    #[test]
    fn rational_function_equivalence() {
        // 2t/eps == 2 eps t / eps^2
        let eps = rat_i64(1, 10);
        let a = RationalFunction::new(
            RatPoly::new(vec![Rat::zero(), rat_i64(2, 1)]),
            RatPoly::constant(eps.clone()),
        );
        let b = RationalFunction::new(
            RatPoly::new(vec![Rat::zero(), rat_i64(2, 1) * &eps]),
            RatPoly::constant(&eps * &eps),
        );
        assert!(a.equivalent(&b));
    }
}
