//! Polynomials in `z` and `conj(z)` over complex coefficients.
//!
//! The two symbols commute and are treated as independent variables;
//! conjugating a polynomial swaps them and conjugates coefficients, so
//! that `p.conjugate().evaluate(z) == conj(p.evaluate(z))` pointwise.
//!
//! Monomials are ordered degree-lexicographically: first by total
//! degree, then with the pure `z` power leading each degree block
//! (`1, Z, Z̄, Z², ZZ̄, Z̄², …`). This is the row and column order of
//! every moment matrix in the crate, so the index formula in
//! [`Monomial::degree_lex_index`] is load-bearing.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::tol::COEFF_DROP;
use crate::C64;

/// The monomial `conj(z)^i · z^j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Monomial {
    /// Exponent of `conj(z)`.
    pub i: u32,
    /// Exponent of `z`.
    pub j: u32,
}

impl Monomial {
    pub fn new(i: u32, j: u32) -> Self {
        Monomial { i, j }
    }

    pub fn degree(&self) -> u32 {
        self.i + self.j
    }

    /// Position in the degree-lex basis: all `d(d+1)/2` monomials of
    /// degree below `d = i + j` come first, then the degree-`d` block
    /// ordered by increasing `i`.
    pub fn degree_lex_index(&self) -> usize {
        let d = (self.i + self.j) as usize;
        d * (d + 1) / 2 + self.i as usize
    }

    /// Inverse of [`degree_lex_index`](Self::degree_lex_index).
    pub fn from_degree_lex_index(index: usize) -> Self {
        let mut d = 0usize;
        while (d + 1) * (d + 2) / 2 <= index {
            d += 1;
        }
        let i = index - d * (d + 1) / 2;
        Monomial::new(i as u32, (d - i) as u32)
    }

    pub fn conjugate(&self) -> Self {
        Monomial::new(self.j, self.i)
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.degree(), self.i).cmp(&(other.degree(), other.i))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.i, self.j) {
            (0, 0) => write!(f, "1"),
            _ => {
                if self.i == 1 {
                    write!(f, "z̄")?;
                } else if self.i > 1 {
                    write!(f, "z̄^{}", self.i)?;
                }
                if self.i > 0 && self.j > 0 {
                    write!(f, " ")?;
                }
                if self.j == 1 {
                    write!(f, "z")?;
                } else if self.j > 1 {
                    write!(f, "z^{}", self.j)?;
                }
                Ok(())
            }
        }
    }
}

/// Sparse polynomial in `z` and `conj(z)`.
///
/// Kept canonical: no stored coefficient `c` with
/// `|c| < COEFF_DROP * max(largest |coefficient|, 1)`. Terms iterate in
/// degree-lex order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BivarPoly {
    terms: BTreeMap<Monomial, C64>,
}

impl BivarPoly {
    pub fn zero() -> Self {
        BivarPoly::default()
    }

    pub fn one() -> Self {
        BivarPoly::constant(C64::new(1.0, 0.0))
    }

    pub fn constant(c: C64) -> Self {
        BivarPoly::from_terms([(Monomial::new(0, 0), c)])
    }

    /// The variable `z`.
    pub fn var_z() -> Self {
        BivarPoly::term(0, 1, C64::new(1.0, 0.0))
    }

    /// The variable `conj(z)`.
    pub fn var_conj() -> Self {
        BivarPoly::term(1, 0, C64::new(1.0, 0.0))
    }

    /// The single term `c · conj(z)^i z^j`.
    pub fn term(i: u32, j: u32, c: C64) -> Self {
        BivarPoly::from_terms([(Monomial::new(i, j), c)])
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, C64)>>(iter: I) -> Self {
        let mut terms: BTreeMap<Monomial, C64> = BTreeMap::new();
        for (m, c) in iter {
            *terms.entry(m).or_insert_with(|| C64::new(0.0, 0.0)) += c;
        }
        let mut p = BivarPoly { terms };
        p.normalize();
        p
    }

    fn normalize(&mut self) {
        let max = self
            .terms
            .values()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
        let thr = COEFF_DROP * max.max(1.0);
        self.terms.retain(|_, c| c.norm() >= thr);
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in degree-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (Monomial, C64)> + '_ {
        self.terms.iter().map(|(m, c)| (*m, *c))
    }

    pub fn coeff(&self, i: u32, j: u32) -> C64 {
        self.terms
            .get(&Monomial::new(i, j))
            .copied()
            .unwrap_or_else(|| C64::new(0.0, 0.0))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    /// Largest exponent of `z`.
    pub fn deg_z(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.j).max()
    }

    /// Largest exponent of `conj(z)`.
    pub fn deg_conj(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.i).max()
    }

    /// Terms of maximal total degree (the "top block").
    pub fn top_terms(&self) -> Vec<(Monomial, C64)> {
        match self.degree() {
            None => Vec::new(),
            Some(d) => self.terms().filter(|(m, _)| m.degree() == d).collect(),
        }
    }

    /// Largest coefficient magnitude.
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Swap `z` and `conj(z)` and conjugate coefficients, so that
    /// evaluation commutes with complex conjugation.
    pub fn conjugate(&self) -> Self {
        BivarPoly::from_terms(self.terms().map(|(m, c)| (m.conjugate(), c.conj())))
    }

    pub fn scale(&self, s: C64) -> Self {
        BivarPoly::from_terms(self.terms().map(|(m, c)| (m, c * s)))
    }

    /// Multiply by the single monomial `c · conj(z)^i z^j`.
    pub fn mul_term(&self, i: u32, j: u32, c: C64) -> Self {
        BivarPoly::from_terms(
            self.terms()
                .map(|(m, cm)| (Monomial::new(m.i + i, m.j + j), cm * c)),
        )
    }

    pub fn evaluate(&self, z: C64) -> C64 {
        let zc = z.conj();
        self.terms()
            .map(|(m, c)| c * zc.powu(m.i) * z.powu(m.j))
            .sum()
    }

    /// Magnitude scale of an evaluation at `z`: `Σ |c| |z|^(i+j)`.
    /// Residuals of near-zero evaluations are judged against this.
    pub fn eval_scale(&self, z: C64) -> f64 {
        let r = z.norm();
        self.terms().map(|(m, c)| c.norm() * r.powi(m.degree() as i32)).sum()
    }
}

impl std::ops::Add for &BivarPoly {
    type Output = BivarPoly;
    fn add(self, rhs: &BivarPoly) -> BivarPoly {
        BivarPoly::from_terms(self.terms().chain(rhs.terms()))
    }
}

impl std::ops::Sub for &BivarPoly {
    type Output = BivarPoly;
    fn sub(self, rhs: &BivarPoly) -> BivarPoly {
        BivarPoly::from_terms(
            self.terms()
                .chain(rhs.terms().map(|(m, c)| (m, -c))),
        )
    }
}

impl std::ops::Mul for &BivarPoly {
    type Output = BivarPoly;
    fn mul(self, rhs: &BivarPoly) -> BivarPoly {
        let mut acc: Vec<(Monomial, C64)> = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for (ma, ca) in self.terms() {
            for (mb, cb) in rhs.terms() {
                acc.push((Monomial::new(ma.i + mb.i, ma.j + mb.j), ca * cb));
            }
        }
        BivarPoly::from_terms(acc)
    }
}

impl std::ops::Neg for &BivarPoly {
    type Output = BivarPoly;
    fn neg(self) -> BivarPoly {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl fmt::Display for BivarPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms().collect::<Vec<_>>().into_iter().rev() {
            let (mag, neg) = if c.im == 0.0 && c.re < 0.0 {
                (-c, true)
            } else {
                (c, false)
            };
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let unit_mono = m.degree() > 0;
            let coeff_is_one = mag.im == 0.0 && mag.re == 1.0;
            if coeff_is_one && unit_mono {
                write!(f, "{m}")?;
            } else {
                if mag.im == 0.0 {
                    write!(f, "{}", mag.re)?;
                } else if mag.re == 0.0 {
                    write!(f, "{}i", mag.im)?;
                } else {
                    write!(f, "({}{:+}i)", mag.re, mag.im)?;
                }
                if unit_mono {
                    write!(f, "·{m}")?;
                }
            }
        }
        Ok(())
    }
}

/// Univariate polynomial in `z` alone, coefficients in ascending order.
///
/// Used for analytic characteristic polynomials, whose roots come from
/// a companion matrix, and for Lagrange numerators.
#[derive(Debug, Clone, PartialEq)]
pub struct UniPoly {
    coeffs: Vec<C64>,
}

impl UniPoly {
    /// Build from ascending coefficients, trimming a (near-)zero tail
    /// with the same relative threshold as [`BivarPoly`].
    pub fn new(coeffs: Vec<C64>) -> Self {
        let mut p = UniPoly { coeffs };
        p.trim();
        p
    }

    fn trim(&mut self) {
        let max = self.coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        let thr = COEFF_DROP * max.max(1.0);
        while let Some(c) = self.coeffs.last() {
            if c.norm() < thr {
                self.coeffs.pop();
            } else {
                break;
            }
        }
        for c in &mut self.coeffs {
            if c.norm() < thr {
                *c = C64::new(0.0, 0.0);
            }
        }
    }

    pub fn zero() -> Self {
        UniPoly { coeffs: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or_else(|| C64::new(0.0, 0.0))
    }

    pub fn evaluate(&self, z: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// `Σ |c_k| |z|^k`, the magnitude scale of an evaluation.
    pub fn eval_scale(&self, z: C64) -> f64 {
        let r = z.norm();
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * r + c.norm();
        }
        acc
    }

    pub fn derivative(&self) -> UniPoly {
        if self.coeffs.len() <= 1 {
            return UniPoly::zero();
        }
        UniPoly::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(k, c)| c * C64::new((k + 1) as f64, 0.0))
                .collect(),
        )
    }

    pub fn monic(&self) -> Result<UniPoly> {
        let lead = *self.coeffs.last().ok_or(Error::ZeroPolynomial)?;
        Ok(UniPoly::new(self.coeffs.iter().map(|c| c / lead).collect()))
    }

    pub fn scale(&self, s: C64) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Monic product `Π (z - λ_k)`.
    pub fn from_roots(roots: &[C64]) -> UniPoly {
        let mut coeffs = vec![C64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![C64::new(0.0, 0.0); coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            coeffs = next;
        }
        UniPoly { coeffs }
    }

    pub fn to_bivar(&self) -> BivarPoly {
        BivarPoly::from_terms(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| (Monomial::new(0, k as u32), c)),
        )
    }

    /// Extract an analytic polynomial; errors if any `conj(z)` monomial
    /// is present.
    pub fn from_bivar(p: &BivarPoly) -> Result<UniPoly> {
        let mut coeffs = Vec::new();
        for (m, c) in p.terms() {
            if m.i != 0 {
                return Err(Error::NotAnalytic(m.to_string()));
            }
            if coeffs.len() <= m.j as usize {
                coeffs.resize(m.j as usize + 1, C64::new(0.0, 0.0));
            }
            coeffs[m.j as usize] = c;
        }
        Ok(UniPoly::new(coeffs))
    }
}

impl std::ops::Mul for &UniPoly {
    type Output = UniPoly;
    fn mul(self, rhs: &UniPoly) -> UniPoly {
        if self.is_zero() || rhs.is_zero() {
            return UniPoly::zero();
        }
        let mut coeffs = vec![C64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (a, &ca) in self.coeffs.iter().enumerate() {
            for (b, &cb) in rhs.coeffs.iter().enumerate() {
                coeffs[a + b] += ca * cb;
            }
        }
        UniPoly::new(coeffs)
    }
}

impl fmt::Display for UniPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_bivar())
    }
}

/// Result of dividing by the pair `(P, conj(P))`: the identity
/// `p = remainder + f1·P + f2·conj(P)` holds, with both partial degrees
/// of `remainder` strictly below the leading degree of `P`.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub remainder: BivarPoly,
    pub f1: BivarPoly,
    pub f2: BivarPoly,
}

/// Validate that `charpoly = z^d - tail` with `tail` of total degree at
/// most `d - 1`, returning `(d, tail)`.
pub(crate) fn charpoly_parts(charpoly: &BivarPoly) -> Result<(u32, BivarPoly)> {
    let d = charpoly
        .degree()
        .ok_or_else(|| Error::MalformedCharPoly("zero polynomial".into()))?;
    if d == 0 {
        return Err(Error::MalformedCharPoly("constant polynomial".into()));
    }
    let top = charpoly.top_terms();
    if top.len() != 1 || top[0].0 != Monomial::new(0, d) {
        return Err(Error::MalformedCharPoly(format!(
            "leading block must be the single monomial z^{d}"
        )));
    }
    let lead = top[0].1;
    if (lead - C64::new(1.0, 0.0)).norm() > 1e-12 {
        return Err(Error::MalformedCharPoly(format!(
            "leading coefficient {lead} is not 1"
        )));
    }
    let tail = &BivarPoly::term(0, d, lead) - charpoly;
    Ok((d, tail))
}

/// Rewrite `p` modulo the pair `(P, conj(P))` until both the `z` degree
/// and the `conj(z)` degree fall below `d`, the leading degree of `P`.
///
/// Each step replaces the degree-lex largest monomial still carrying
/// `z^d` or `conj(z)^d`, using `z^d → tail` (a `P`-multiple subtraction)
/// or its conjugate. The replacement monomials all have strictly lower
/// total degree, so the largest offender strictly decreases and the
/// loop terminates. The leading monomials `z^d` and `conj(z)^d` of the
/// pair are coprime, so the pair is a Gröbner basis for the ideal it
/// generates and the remainder does not depend on the rewrite order.
pub fn reduce_degrees(p: &BivarPoly, charpoly: &BivarPoly) -> Result<Reduction> {
    let (d, tail) = charpoly_parts(charpoly)?;
    let tail_conj = tail.conjugate();
    let p_monic = charpoly.clone();
    let p_conj = charpoly.conjugate();

    let mut work = p.clone();
    let mut f1 = BivarPoly::zero();
    let mut f2 = BivarPoly::zero();

    loop {
        let offender = work
            .terms
            .iter()
            .rev()
            .find(|(m, _)| m.j >= d || m.i >= d)
            .map(|(m, c)| (*m, *c));
        let Some((m, c)) = offender else { break };
        if m.j >= d {
            let q = BivarPoly::term(m.i, m.j - d, c);
            work = &work - &(&q * &p_monic);
            f1 = &f1 + &q;
        } else {
            let q = BivarPoly::term(m.i - d, m.j, c);
            work = &work - &(&q * &p_conj);
            f2 = &f2 + &q;
        }
        // guard against a rewrite that failed to remove its target
        debug_assert!(work.coeff(m.i, m.j).norm() < 1e-6 * c.norm().max(1.0));
        let _ = (&tail, &tail_conj);
    }

    Ok(Reduction {
        remainder: work,
        f1,
        f2,
    })
}
