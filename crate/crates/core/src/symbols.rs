//! Exact bivariate polynomial symbols of differential operators.
//!
//! A symbol is a polynomial in (xi, eta) with exact rational coefficients.
//! Division is multivariate long division in graded-lexicographic order with
//! xi > eta, so quotient/remainder pairs are deterministic. The strong
//! ellipticity check samples the homogeneous symbol on rational directions
//! and evaluates `p(d) / |d|^{2m}` exactly.
//!
//! Text format (bit-exact): whitespace-separated terms `a,b:c` where `a`, `b`
//! are the exponents of xi and eta and `c` is an integer or rational `p/q`;
//! e.g. `(xi^2+eta^2)^2` is `4,0:1 2,2:2 0,4:1`.

use num::bigint::BigInt;
use num::rational::Ratio;
use num::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub type Rat = Ratio<BigInt>;

#[derive(Debug, Error, PartialEq)]
pub enum SymbolError {
    #[error("polynomial is not homogeneous of even degree")]
    NotHomogeneous,
    #[error("division by the zero polynomial")]
    DivisionByZeroPolynomial,
    #[error("cannot parse symbol term `{0}`")]
    ParseError(String),
}

/// Exponent pair (a, b) for xi^a eta^b, ordered graded-lex with xi > eta.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Monomial {
    pub a: u32,
    pub b: u32,
}

impl Monomial {
    fn degree(&self) -> u32 {
        self.a + self.b
    }

    fn divides(&self, other: &Monomial) -> bool {
        self.a <= other.a && self.b <= other.b
    }

    fn div(&self, other: &Monomial) -> Monomial {
        Monomial {
            a: self.a - other.a,
            b: self.b - other.b,
        }
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            a: self.a + other.a,
            b: self.b + other.b,
        }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // graded lexicographic with xi > eta
        self.degree()
            .cmp(&other.degree())
            .then(self.a.cmp(&other.a))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Bivariate polynomial; no zero coefficients are stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Polynomial2 {
    terms: BTreeMap<Monomial, Rat>,
}

impl Polynomial2 {
    pub fn zero() -> Self {
        Polynomial2::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (u32, u32, Rat)>) -> Self {
        let mut p = Polynomial2::zero();
        for (a, b, c) in terms {
            p.add_term(Monomial { a, b }, c);
        }
        p
    }

    pub fn from_i64_terms(terms: &[(u32, u32, i64)]) -> Self {
        Polynomial2::from_terms(
            terms
                .iter()
                .map(|&(a, b, c)| (a, b, Rat::from_integer(BigInt::from(c)))),
        )
    }

    fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    pub fn coeff(&self, a: u32, b: u32) -> Rat {
        self.terms
            .get(&Monomial { a, b })
            .cloned()
            .unwrap_or_else(Rat::zero)
    }

    /// Leading term in graded-lex order.
    fn leading(&self) -> Option<(Monomial, Rat)> {
        self.terms.iter().next_back().map(|(m, c)| (*m, c.clone()))
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(|m| m.degree());
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    /// True when every stored exponent pair is even in both variables.
    pub fn even_powers_only(&self) -> bool {
        self.terms.keys().all(|m| m.a % 2 == 0 && m.b % 2 == 0)
    }

    pub fn add(&self, other: &Polynomial2) -> Polynomial2 {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Polynomial2) -> Polynomial2 {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, -c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Polynomial2) -> Polynomial2 {
        let mut out = Polynomial2::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn eval(&self, xi: &Rat, eta: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for _ in 0..m.a {
                v *= xi;
            }
            for _ in 0..m.b {
                v *= eta;
            }
            acc += v;
        }
        acc
    }

    /// Parses the whitespace-separated `a,b:c` term format.
    pub fn parse(text: &str) -> Result<Polynomial2, SymbolError> {
        let mut p = Polynomial2::zero();
        for tok in text.split_whitespace() {
            let (mono, coeff) = tok
                .split_once(':')
                .ok_or_else(|| SymbolError::ParseError(tok.to_string()))?;
            let (a, b) = mono
                .split_once(',')
                .ok_or_else(|| SymbolError::ParseError(tok.to_string()))?;
            let a: u32 = a
                .parse()
                .map_err(|_| SymbolError::ParseError(tok.to_string()))?;
            let b: u32 = b
                .parse()
                .map_err(|_| SymbolError::ParseError(tok.to_string()))?;
            let c = parse_rat(coeff).ok_or_else(|| SymbolError::ParseError(tok.to_string()))?;
            p.add_term(Monomial { a, b }, c);
        }
        Ok(p)
    }

    /// Canonical text form: terms in descending graded-lex order.
    pub fn to_text(&self) -> String {
        if self.is_zero() {
            return "0,0:0".to_string();
        }
        self.terms
            .iter()
            .rev()
            .map(|(m, c)| format!("{},{}:{}", m.a, m.b, c))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn parse_rat(s: &str) -> Option<Rat> {
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.parse().ok()?;
        let d: BigInt = d.parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(Ratio::new(n, d))
    } else {
        let n: BigInt = s.parse().ok()?;
        Some(Rat::from_integer(n))
    }
}

impl fmt::Display for Polynomial2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

/// Result of the sampled strong-ellipticity check.
#[derive(Debug, Clone)]
pub struct EllipticityReport {
    pub ok: bool,
    /// Smallest |p(d)|/|d|^{2m} over the sampled directions (exact).
    pub c0: Rat,
    /// Largest such value (exact).
    pub c1: Rat,
}

/// Samples `|p| / |.|^{2m}` on rational directions of the unit circle.
///
/// Directions come from the tan-half-angle parametrization s -> (1-s^2, 2s)
/// plus the axis and diagonal directions; the homogeneous ratio is evaluated
/// exactly, so the reported bounds are certified at the sampled points (they
/// are not global certificates). `ok` requires a constant nonzero sign.
pub fn is_strongly_elliptic(
    p: &Polynomial2,
    samples: usize,
) -> Result<EllipticityReport, SymbolError> {
    let deg = p.degree().ok_or(SymbolError::NotHomogeneous)?;
    if !p.is_homogeneous() || deg % 2 != 0 || deg == 0 {
        return Err(SymbolError::NotHomogeneous);
    }
    let m = deg / 2;
    let mut dirs: Vec<(Rat, Rat)> = vec![
        (rat(1), rat(0)),
        (rat(0), rat(1)),
        (rat(1), rat(1)),
        (rat(1), rat(-1)),
    ];
    let n = samples.max(4);
    for j in 0..=n {
        // s in (-1, 1] gives the right half circle; signs of eta cover the rest
        let s = Ratio::new(BigInt::from(2 * j as i64 - n as i64), BigInt::from(n as i64));
        let xi = rat(1) - &s * &s;
        let eta = rat(2) * &s;
        if xi.is_zero() && eta.is_zero() {
            continue;
        }
        dirs.push((xi, eta));
    }
    let mut min: Option<Rat> = None;
    let mut max: Option<Rat> = None;
    let mut sign_seen = 0i8;
    let mut ok = true;
    for (xi, eta) in dirs {
        let norm2 = &xi * &xi + &eta * &eta;
        let mut denom = Rat::one();
        for _ in 0..m {
            denom *= &norm2;
        }
        let val = p.eval(&xi, &eta) / denom;
        if val.is_zero() {
            ok = false;
        }
        let s = if val.is_positive() { 1 } else { -1 };
        if sign_seen == 0 {
            sign_seen = s;
        } else if s != sign_seen && !val.is_zero() {
            ok = false;
        }
        let a = val.abs();
        min = Some(match min {
            None => a.clone(),
            Some(old) => old.min(a.clone()),
        });
        max = Some(match max {
            None => a,
            Some(old) => old.max(a),
        });
    }
    Ok(EllipticityReport {
        ok,
        c0: min.unwrap(),
        c1: max.unwrap(),
    })
}

fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Multivariate long division `num = quotient * den + remainder` in graded
/// lex order; no remainder term is divisible by the leading term of `den`.
pub fn divide(
    num: &Polynomial2,
    den: &Polynomial2,
) -> Result<(Polynomial2, Polynomial2), SymbolError> {
    let (lt_m, lt_c) = den.leading().ok_or(SymbolError::DivisionByZeroPolynomial)?;
    let mut quotient = Polynomial2::zero();
    let mut remainder = Polynomial2::zero();
    let mut work = num.clone();
    while let Some((m, c)) = work.leading() {
        if lt_m.divides(&m) {
            let qm = m.div(&lt_m);
            let qc = c / &lt_c;
            let mut t = Polynomial2::zero();
            t.add_term(qm, qc);
            work = work.sub(&t.mul(den));
            quotient = quotient.add(&t);
        } else {
            // move the leading term to the remainder and continue
            let mut t = Polynomial2::zero();
            t.add_term(m, c.clone());
            remainder = remainder.add(&t);
            work = work.sub(&t);
        }
    }
    Ok((quotient, remainder))
}

/// Certificate for the canonical factorization `P = P' * L`.
#[derive(Debug, Clone)]
pub struct FactorizationCertificate {
    pub divides: bool,
    /// Set when `divides` holds: whether the quotient is strongly elliptic.
    pub quotient_elliptic: Option<bool>,
    pub quotient: Option<Polynomial2>,
    pub remainder: Polynomial2,
}

/// Tests whether `l` divides `p` exactly and, when it does, whether the
/// quotient symbol is strongly elliptic (sampled check with 64 directions).
pub fn factorization_certificate(
    p: &Polynomial2,
    l: &Polynomial2,
) -> Result<FactorizationCertificate, SymbolError> {
    let (q, r) = divide(p, l)?;
    if r.is_zero() {
        let rep = is_strongly_elliptic(&q, 64)?;
        Ok(FactorizationCertificate {
            divides: true,
            quotient_elliptic: Some(rep.ok),
            quotient: Some(q),
            remainder: r,
        })
    } else {
        Ok(FactorizationCertificate {
            divides: false,
            quotient_elliptic: None,
            quotient: None,
            remainder: r,
        })
    }
}

/// The isotropic symbol (xi^2 + eta^2)^p.
pub fn laplacian_symbol(p: u32) -> Polynomial2 {
    let base = Polynomial2::from_i64_terms(&[(2, 0, 1), (0, 2, 1)]);
    let mut out = Polynomial2::from_i64_terms(&[(0, 0, 1)]);
    for _ in 0..p {
        out = out.mul(&base);
    }
    out
}
