//! Moment matrices and their positivity reports.
//!
//! The matrix `M(n)` of a sequence `γ` is indexed by the degree-lex
//! monomial basis of degree at most `n` and satisfies
//! `⟨M p, q⟩ = Λ(p · conj(q))`, which forces the entry rule
//!
//! ```text
//! M[row conj(z)^k z^l, col conj(z)^i z^j] = γ_{i+l, j+k}.
//! ```
//!
//! Only the upper triangle is read from the source; the mirror is
//! written as an exact conjugate so the stored matrix is Hermitian to
//! the bit.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::poly::{BivarPoly, Monomial};
use crate::rdis::Rdis;
use crate::tol::Tolerances;
use crate::C64;

/// Number of monomials of total degree at most `n`.
pub fn basis_dim(n: u32) -> usize {
    let n = n as usize;
    (n + 1) * (n + 2) / 2
}

/// Anything that can answer "what is `γ_ij`": a recursive sequence
/// (every index), a truncated table (indices up to its degree), or an
/// atomic measure.
pub trait MomentSource {
    fn moment(&self, i: u32, j: u32) -> Option<C64>;
}

impl MomentSource for Rdis {
    fn moment(&self, i: u32, j: u32) -> Option<C64> {
        Some(self.gamma(i, j))
    }
}

/// Adapter for closures, mostly used by tests and oracles.
pub struct FnSource<F: Fn(u32, u32) -> Option<C64>>(pub F);

impl<F: Fn(u32, u32) -> Option<C64>> MomentSource for FnSource<F> {
    fn moment(&self, i: u32, j: u32) -> Option<C64> {
        (self.0)(i, j)
    }
}

/// A finite Hermitian table `{γ_ij : i + j ≤ degree}` stored as its
/// upper triangle (`i ≤ j`); the rest is completed by conjugation.
#[derive(Debug, Clone)]
pub struct MomentTable {
    degree: u32,
    upper: HashMap<(u32, u32), C64>,
}

impl MomentTable {
    /// Build from entries with `i ≤ j`, `i + j ≤ degree`. The full
    /// upper triangle must be present; redundant `i > j` entries are
    /// accepted when they conjugate-match. `γ_00` must be real and
    /// strictly positive.
    pub fn new(degree: u32, entries: &HashMap<(u32, u32), C64>) -> Result<Self> {
        let mut upper = HashMap::new();
        for (&(i, j), &v) in entries {
            if i + j > degree {
                return Err(Error::InvalidInitialBlock(format!(
                    "entry ({i},{j}) beyond table degree {degree}"
                )));
            }
            let (key, val) = if i <= j { ((i, j), v) } else { ((j, i), v.conj()) };
            if let Some(prev) = upper.insert(key, val) {
                let prev: C64 = prev;
                if (prev - val).norm() > 1e-12 * (1.0 + prev.norm()) {
                    return Err(Error::InvalidInitialBlock(format!(
                        "entries for γ_{{{},{}}} disagree",
                        key.0, key.1
                    )));
                }
            }
        }
        for i in 0..=degree {
            for j in i..=(degree - i) {
                if !upper.contains_key(&(i, j)) {
                    return Err(Error::MissingMoment { i, j });
                }
            }
        }
        let g00 = upper[&(0, 0)];
        if g00.im.abs() > 1e-12 * g00.re.abs().max(1.0) || g00.re <= 0.0 {
            return Err(Error::InvalidInitialBlock(format!(
                "γ_00 = {g00} must be real and positive"
            )));
        }
        Ok(MomentTable { degree, upper })
    }

    pub fn from_source<S: MomentSource>(src: &S, degree: u32) -> Result<Self> {
        let mut entries = HashMap::new();
        for i in 0..=degree {
            for j in i..=(degree - i) {
                let v = src.moment(i, j).ok_or(Error::MissingMoment { i, j })?;
                entries.insert((i, j), v);
            }
        }
        MomentTable::new(degree, &entries)
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn get(&self, i: u32, j: u32) -> Option<C64> {
        if i <= j {
            self.upper.get(&(i, j)).copied()
        } else {
            self.upper.get(&(j, i)).map(|v| v.conj())
        }
    }

    /// Largest entry magnitude, the scale for relative residuals.
    pub fn max_abs(&self) -> f64 {
        self.upper.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Upper-triangle view in deterministic (degree-lex) order.
    pub fn upper_entries(&self) -> Vec<((u32, u32), C64)> {
        let mut v: Vec<_> = self.upper.iter().map(|(&k, &c)| (k, c)).collect();
        v.sort_by_key(|&((i, j), _)| Monomial::new(i, j).degree_lex_index());
        v
    }

    /// Mutate one upper-triangle entry (testing and perturbation
    /// studies); `i ≤ j` required.
    pub fn set(&mut self, i: u32, j: u32, v: C64) {
        assert!(i <= j && i + j <= self.degree);
        self.upper.insert((i, j), v);
    }
}

impl MomentSource for MomentTable {
    fn moment(&self, i: u32, j: u32) -> Option<C64> {
        self.get(i, j)
    }
}

/// Positivity report for one Hermitian moment matrix.
#[derive(Debug, Clone, Copy)]
pub struct PsdReport {
    pub level: u32,
    /// `λ_min >= -tol` where `tol = psd_ratio * max(1, |λ|_max)`.
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Number of eigenvalues strictly above `tol`.
    pub rank: usize,
    /// The absolute threshold that was applied.
    pub tol: f64,
}

/// Moment matrix of level `n`, rows and columns in degree-lex order.
#[derive(Debug, Clone)]
pub struct MomentMatrix {
    level: u32,
    mat: DMatrix<C64>,
}

impl MomentMatrix {
    /// Assemble `M(level)`; every `γ_ij` with `i + j ≤ 2·level` must be
    /// available from the source.
    pub fn build<S: MomentSource + ?Sized>(src: &S, level: u32) -> Result<Self> {
        let dim = basis_dim(level);
        let mut mat = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
        for p in 0..dim {
            let row = Monomial::from_degree_lex_index(p);
            for q in p..dim {
                let col = Monomial::from_degree_lex_index(q);
                let (gi, gj) = (col.i + row.j, col.j + row.i);
                let v = src.moment(gi, gj).ok_or(Error::MissingMoment { i: gi, j: gj })?;
                mat[(p, q)] = v;
                mat[(q, p)] = v.conj();
            }
        }
        // diagonal entries are Λ(|m|²); force the stored imaginary
        // part of an (already conjugate-symmetric) diagonal to zero
        for p in 0..dim {
            mat[(p, p)].im = 0.0;
        }
        Ok(MomentMatrix { level, mat })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        basis_dim(self.level)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn entry(&self, row: Monomial, col: Monomial) -> C64 {
        self.mat[(row.degree_lex_index(), col.degree_lex_index())]
    }

    /// Degree-lex coefficient vector of `p`, padded to this level.
    pub fn coeff_vector(&self, p: &BivarPoly) -> Result<DVector<C64>> {
        let deg = p.degree().unwrap_or(0);
        if deg > self.level {
            return Err(Error::DegreeTooHigh {
                degree: deg as usize,
                level: self.level as usize,
            });
        }
        let mut v = DVector::from_element(self.dim(), C64::new(0.0, 0.0));
        for (m, c) in p.terms() {
            v[m.degree_lex_index()] = c;
        }
        Ok(v)
    }

    /// `M · vec(p)`.
    pub fn apply(&self, p: &BivarPoly) -> Result<DVector<C64>> {
        Ok(&self.mat * self.coeff_vector(p)?)
    }

    /// `⟨M p, q⟩ = Λ(p · conj(q))`.
    pub fn bilinear(&self, p: &BivarPoly, q: &BivarPoly) -> Result<C64> {
        let vp = self.coeff_vector(p)?;
        let vq = self.coeff_vector(q)?;
        Ok((vq.adjoint() * &self.mat * vp)[(0, 0)])
    }

    /// Hermitian eigendecomposition. PSD and rank thresholds are both
    /// `psd_ratio * max(1, largest eigenvalue magnitude)`.
    pub fn psd_check(&self, tols: &Tolerances) -> PsdReport {
        let eig = self.mat.clone().symmetric_eigen();
        let mut min_ev = f64::INFINITY;
        let mut max_abs = 0.0f64;
        for &ev in eig.eigenvalues.iter() {
            min_ev = min_ev.min(ev);
            max_abs = max_abs.max(ev.abs());
        }
        if !min_ev.is_finite() {
            min_ev = 0.0; // 0-dimensional never happens: dim >= 1
        }
        let tol = tols.psd * max_abs.max(1.0);
        let rank = eig.eigenvalues.iter().filter(|&&ev| ev > tol).count();
        PsdReport {
            level: self.level,
            is_psd: min_ev >= -tol,
            min_eigenvalue: min_ev,
            max_eigenvalue: max_abs,
            rank,
            tol,
        }
    }
}

/// Rank-preserving extension test: `M(n+1)` is PSD and adds no rank
/// beyond `M(n)`. For a sequence with an analytic characteristic
/// polynomial of degree `r`, this holds from level `2r - 2` upward.
pub fn flat_extension_check(
    mn: &MomentMatrix,
    mn1: &MomentMatrix,
    tols: &Tolerances,
) -> Result<bool> {
    if mn1.level != mn.level + 1 {
        return Err(Error::LevelMismatch {
            lo: mn.level as usize,
            hi: mn1.level as usize,
        });
    }
    let lo = mn.psd_check(tols);
    let hi = mn1.psd_check(tols);
    Ok(hi.is_psd && lo.rank == hi.rank)
}

/// Kernel-collapse implication for PSD matrices: when `M` is PSD and
/// `M · vec(p^n) ≈ 0`, then `M · vec(p) ≈ 0` must follow. Returns true
/// when the implication held (vacuously when the premise fails).
/// Residuals are judged against `‖M‖ · ‖vec(·)‖`.
pub fn psd_power_collapse_test(
    m: &MomentMatrix,
    p: &BivarPoly,
    n_pow: u32,
    tols: &Tolerances,
) -> Result<bool> {
    if n_pow == 0 {
        return Err(Error::Internal("power must be at least 1".into()));
    }
    let mut pn = p.clone();
    for _ in 1..n_pow {
        pn = &pn * p;
    }
    let mnorm = m.mat.norm();
    let resid = |q: &BivarPoly| -> Result<f64> {
        let v = m.coeff_vector(q)?;
        let scale = (mnorm * v.norm()).max(1e-300);
        Ok((&m.mat * &v).norm() / scale)
    };
    let premise = resid(&pn)? <= tols.membership;
    if !premise {
        return Ok(true);
    }
    Ok(resid(p)? <= tols.indeterminate)
}
