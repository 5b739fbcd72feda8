//! Zero sets and truncation levels of characteristic polynomials.
//!
//! Harmonic cubics `z³ + a·z + b·conj(z)` admit a closed-form zero
//! enumeration with at most 7 points; analytic polynomials go through
//! the companion matrix. The module also computes the level ξ at
//! which positivity of `M(ξ)` certifies positivity of every `M(n)`,
//! the minimal analytic polynomial annihilated by a sequence, and
//! Lagrange interpolation data used to read off atom weights.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::moment::MomentMatrix;
use crate::par;
use crate::poly::{BivarPoly, Monomial, UniPoly};
use crate::rdis::Rdis;
use crate::tol::Tolerances;
use crate::C64;

/// Parameters of a harmonic cubic.
///
/// The direct form is the polynomial `z³ + a·z + b·conj(z)` (column
/// relation `Z³ = −aZ − bZ̄`). The rotated form is
/// `z³ − i·t·z − u·conj(z)` (relation `Z³ = itZ + uZ̄`); substituting
/// `z = e^{iπ/4} w` carries it onto the direct form with
/// `(a, b) = (t, u)`, so its zeros are the direct zeros multiplied by
/// `e^{−iπ/4}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicParams {
    a: f64,
    b: f64,
    rotated: bool,
}

impl CubicParams {
    pub fn direct(a: f64, b: f64) -> Self {
        CubicParams { a, b, rotated: false }
    }

    pub fn rotated(t: f64, u: f64) -> Self {
        CubicParams { a: t, b: u, rotated: true }
    }

    /// Coefficient of `z` in the direct frame (equals `t` when rotated).
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Coefficient of `conj(z)` in the direct frame (equals `u` when rotated).
    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn is_rotated(&self) -> bool {
        self.rotated
    }

    pub fn charpoly(&self) -> BivarPoly {
        let (cz, czb) = if self.rotated {
            (C64::new(0.0, -self.a), C64::new(-self.b, 0.0))
        } else {
            (C64::new(self.a, 0.0), C64::new(self.b, 0.0))
        };
        BivarPoly::from_terms([
            (Monomial::new(0, 3), C64::new(1.0, 0.0)),
            (Monomial::new(0, 1), cz),
            (Monomial::new(1, 0), czb),
        ])
    }

    /// Recognize a characteristic polynomial as a harmonic cubic.
    /// Accepts a monic `z³` plus terms in `z` and `conj(z)` only, with
    /// the `z`-coefficient real (direct) or purely imaginary (rotated)
    /// and the `conj(z)`-coefficient real in either case.
    pub fn from_charpoly(p: &BivarPoly) -> Option<CubicParams> {
        if p.degree() != Some(3) {
            return None;
        }
        let mut cz = C64::new(0.0, 0.0);
        let mut czb = C64::new(0.0, 0.0);
        for (m, c) in p.terms() {
            match (m.i, m.j) {
                (0, 3) => {
                    if (c - C64::new(1.0, 0.0)).norm() > 1e-12 {
                        return None;
                    }
                }
                (0, 1) => cz = c,
                (1, 0) => czb = c,
                _ => return None,
            }
        }
        let scale = cz.norm().max(czb.norm()).max(1.0);
        if czb.im.abs() > 1e-12 * scale {
            return None;
        }
        if cz.im.abs() <= 1e-12 * scale {
            Some(CubicParams::direct(cz.re, czb.re))
        } else if cz.re.abs() <= 1e-12 * scale {
            // z³ − itz − uz̄: coefficient of z is −it, of conj(z) is −u
            Some(CubicParams::rotated(-cz.im, -czb.re))
        } else {
            None
        }
    }
}

/// The structural regions of the (a, b) parameter plane. Names refer
/// to where the nonzero zeros of the direct form live; the rotated
/// form turns every picture by −π/4 but keeps the same region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CubicRegion {
    /// a = b = 0: the only zero is 0.
    Origin,
    /// b > 0, a ≥ 2b, or b ≤ 0, a ≥ −b: zeros {0, ±i√(a−b)}.
    AxisImaginary,
    /// b > 0, a ≤ −2b, or b ≤ 0, a ≤ b: zeros {0, ±√(−a−b)}.
    AxisReal,
    /// b < 0, |a| < −b: five zeros on the two axes.
    BothAxes,
    /// b > 0, |a| ≤ b: five zeros, four of them on the circle |z|² = b.
    CircleOnly,
    /// b < a < 2b: seven zeros, imaginary pair plus circle quadruple.
    ImaginaryAndCircle,
    /// b < −a < 2b: seven zeros, real pair plus circle quadruple.
    RealAndCircle,
}

impl CubicRegion {
    pub fn zero_count(self) -> usize {
        match self {
            CubicRegion::Origin => 1,
            CubicRegion::AxisImaginary | CubicRegion::AxisReal => 3,
            CubicRegion::BothAxes | CubicRegion::CircleOnly => 5,
            CubicRegion::ImaginaryAndCircle | CubicRegion::RealAndCircle => 7,
        }
    }
}

impl fmt::Display for CubicRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CubicRegion::Origin => "origin only (1 zero)",
            CubicRegion::AxisImaginary => "imaginary-axis zeros (3)",
            CubicRegion::AxisReal => "real-axis zeros (3)",
            CubicRegion::BothAxes => "zeros on both axes (5)",
            CubicRegion::CircleOnly => "circle zeros (5)",
            CubicRegion::ImaginaryAndCircle => "imaginary axis and circle (7)",
            CubicRegion::RealAndCircle => "real axis and circle (7)",
        };
        f.write_str(s)
    }
}

pub fn classify_cubic(p: &CubicParams) -> CubicRegion {
    let (a, b) = (p.a, p.b);
    if a == 0.0 && b == 0.0 {
        CubicRegion::Origin
    } else if b > 0.0 {
        if a >= 2.0 * b {
            CubicRegion::AxisImaginary
        } else if a <= -2.0 * b {
            CubicRegion::AxisReal
        } else if a > b {
            CubicRegion::ImaginaryAndCircle
        } else if a < -b {
            CubicRegion::RealAndCircle
        } else {
            CubicRegion::CircleOnly
        }
    } else if a >= -b {
        CubicRegion::AxisImaginary
    } else if a <= b {
        CubicRegion::AxisReal
    } else {
        CubicRegion::BothAxes
    }
}

/// A deduplicated list of zeros in a deterministic order, with the
/// multiplicity that was observed for each point.
#[derive(Debug, Clone)]
pub struct ZeroSet {
    points: Vec<C64>,
    multiplicities: Vec<u32>,
}

impl ZeroSet {
    /// Cluster raw points: two points merge when their distance is at
    /// most `dedup_rel · (1 + max magnitude)`; each cluster is
    /// represented by its running mean and its size becomes the
    /// multiplicity. Points are sorted by (re, im).
    pub fn from_points(raw: Vec<C64>, dedup_rel: f64) -> ZeroSet {
        let max_abs = raw.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let tol = dedup_rel * (1.0 + max_abs);
        let mut clusters: Vec<(C64, u32)> = Vec::new();
        let mut sorted = raw;
        sorted.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        for p in sorted {
            match clusters.iter_mut().find(|(m, _)| (*m - p).norm() <= tol) {
                Some((m, k)) => {
                    *m = (*m * C64::new(*k as f64, 0.0) + p) / C64::new(*k as f64 + 1.0, 0.0);
                    *k += 1;
                }
                None => clusters.push((p, 1)),
            }
        }
        clusters.sort_by(|x, y| x.0.re.total_cmp(&y.0.re).then(x.0.im.total_cmp(&y.0.im)));
        ZeroSet {
            points: clusters.iter().map(|&(m, _)| m).collect(),
            multiplicities: clusters.iter().map(|&(_, k)| k).collect(),
        }
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    pub fn count(&self) -> usize {
        self.points.len()
    }

    pub fn is_simple(&self) -> bool {
        self.multiplicities.iter().all(|&m| m == 1)
    }

    pub fn max_abs(&self) -> f64 {
        self.points.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Symmetric Hausdorff distance between the two point sets.
    pub fn hausdorff(&self, other: &ZeroSet) -> f64 {
        let one_sided = |xs: &[C64], ys: &[C64]| {
            xs.iter()
                .map(|x| {
                    ys.iter()
                        .map(|y| (x - y).norm())
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        if self.points.is_empty() && other.points.is_empty() {
            return 0.0;
        }
        if self.points.is_empty() || other.points.is_empty() {
            return f64::INFINITY;
        }
        one_sided(&self.points, &other.points).max(one_sided(&other.points, &self.points))
    }
}

/// Closed-form zero enumeration of a harmonic cubic. Writing
/// z = x + iy, the system splits into three branches:
/// the real branch x² = −a−b (y = 0), the imaginary branch y² = a−b
/// (x = 0), and the xy ≠ 0 branch x² = (2b−a)/4, y² = (2b+a)/4 whose
/// four points lie on the circle |z|² = b. A branch contributes
/// exactly when its squared quantities are strictly positive; 0 is
/// always a zero. Rotated parameters return the zeros of the rotated
/// polynomial, i.e. everything times e^{−iπ/4}.
pub fn harmonic_cubic_zeros(params: &CubicParams) -> ZeroSet {
    let (a, b) = (params.a, params.b);
    let mut pts = vec![C64::new(0.0, 0.0)];
    if -a - b > 0.0 {
        let x = (-a - b).sqrt();
        pts.push(C64::new(x, 0.0));
        pts.push(C64::new(-x, 0.0));
    }
    if a - b > 0.0 {
        let y = (a - b).sqrt();
        pts.push(C64::new(0.0, y));
        pts.push(C64::new(0.0, -y));
    }
    let x2 = (2.0 * b - a) / 4.0;
    let y2 = (2.0 * b + a) / 4.0;
    if x2 > 0.0 && y2 > 0.0 {
        let (x, y) = (x2.sqrt(), y2.sqrt());
        for (sx, sy) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            pts.push(C64::new(sx * x, sy * y));
        }
    }
    if params.rotated {
        let rot = C64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
        for p in &mut pts {
            *p *= rot;
        }
    }
    ZeroSet::from_points(pts, Tolerances::default().root_dedup)
}

/// Roots of an analytic polynomial via its companion matrix, Newton
/// polished and clustered into a `ZeroSet` with multiplicities. Each
/// returned root satisfies `|q(λ)| ≤ membership · scale(λ)`.
///
/// The Schur iteration on the companion matrix occasionally stalls on
/// symmetric spectra, so it runs with a bounded iteration count and a
/// Durand-Kerner pass takes over when it gives up.
pub fn analytic_roots(q: &UniPoly, tols: &Tolerances) -> Result<ZeroSet> {
    let deg = q.degree().ok_or(Error::ZeroPolynomial)?;
    if deg == 0 {
        return Err(Error::ConstantPolynomial);
    }
    let monic = q.monic()?;
    let finish = |raw: Vec<C64>| -> Result<ZeroSet> {
        let dq = monic.derivative();
        let polished: Vec<C64> = raw
            .into_iter()
            .map(|z0| polish_root(&monic, &dq, z0))
            .collect();
        let zeros = ZeroSet::from_points(polished, tols.root_dedup);
        for &z in zeros.points() {
            let scale = monic.eval_scale(z).max(1.0);
            let res = monic.evaluate(z).norm();
            if res > tols.membership * scale {
                return Err(Error::Internal(format!(
                    "root refinement left residual {res:.3e} at {z} (scale {scale:.3e})"
                )));
            }
        }
        Ok(zeros)
    };
    if deg == 1 {
        return finish(vec![-monic.coeff(0)]);
    }
    if let Some(eigs) = companion_eigenvalues(&monic, deg) {
        if let Ok(zeros) = finish(eigs) {
            return Ok(zeros);
        }
    }
    finish(durand_kerner(&monic, deg))
}

fn companion_eigenvalues(monic: &UniPoly, deg: usize) -> Option<Vec<C64>> {
    let mut m = DMatrix::from_element(deg, deg, C64::new(0.0, 0.0));
    for k in 1..deg {
        m[(k, k - 1)] = C64::new(1.0, 0.0);
    }
    for k in 0..deg {
        m[(k, deg - 1)] = -monic.coeff(k);
    }
    let t = m.try_schur(1e-14, 200)?.unpack().1;
    Some((0..deg).map(|k| t[(k, k)]).collect())
}

/// Weierstrass simultaneous iteration; linear but unconditionally
/// convergent in practice for the degrees handled here (≤ 10ish).
fn durand_kerner(monic: &UniPoly, deg: usize) -> Vec<C64> {
    let bound = 1.0
        + monic.coeffs()[..deg]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
    let mut zs: Vec<C64> = (0..deg)
        .map(|k| C64::from_polar(bound, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / deg as f64))
        .collect();
    for _ in 0..600 {
        let mut step_max = 0.0f64;
        for k in 0..deg {
            let mut denom = C64::new(1.0, 0.0);
            for j in 0..deg {
                if j != k {
                    denom *= zs[k] - zs[j];
                }
            }
            if denom.norm() < 1e-300 {
                denom = C64::new(1e-300, 0.0);
            }
            let step = monic.evaluate(zs[k]) / denom;
            zs[k] -= step;
            step_max = step_max.max(step.norm());
        }
        if step_max < 1e-15 * (1.0 + bound) {
            break;
        }
    }
    zs
}

fn polish_root(q: &UniPoly, dq: &UniPoly, z0: C64) -> C64 {
    let rel = |z: C64| q.evaluate(z).norm() / q.eval_scale(z).max(1e-300);
    let mut best = z0;
    let mut best_res = rel(z0);
    let mut z = z0;
    for _ in 0..40 {
        if best_res < 1e-16 {
            break;
        }
        let d = dq.evaluate(z);
        if d.norm() < 1e-300 {
            break;
        }
        let step = q.evaluate(z) / d;
        z -= step;
        let res = rel(z);
        if res < best_res {
            best_res = res;
            best = z;
        } else if step.norm() < 1e-16 * (1.0 + z.norm()) {
            break;
        }
    }
    best
}

/// Monic polynomial with exactly the given zeros (respecting
/// multiplicities). The empty set yields the constant 1.
pub fn product_from_roots(zeros: &ZeroSet) -> UniPoly {
    let mut expanded = Vec::new();
    for (idx, &z) in zeros.points().iter().enumerate() {
        for _ in 0..zeros.multiplicities()[idx] {
            expanded.push(z);
        }
    }
    UniPoly::from_roots(&expanded)
}

/// Degree data of a reduction remainder h and the truncation level ξ
/// it certifies.
///
/// `A_h` is the set of monomials of h of maximal total degree `d_h`;
/// since they share the total degree, their z-powers are pairwise
/// distinct and so are their conj(z)-powers. `c₁` is the largest
/// z-power in `A_h` and `c₂` the largest among the remaining monomials
/// (absent for a singleton); `c′₁`, `c′₂` mirror this for conj(z).
/// With r the degree of the characteristic polynomial,
/// `α = min(r − c₁, c₁ − c₂)` on whichever side carries
/// `c = max(c₁, c′₁)`, and `ξ = 2r − 2 − α`.
#[derive(Debug, Clone)]
pub struct XiData {
    pub d_h: u32,
    /// Monomials of h of total degree d_h.
    pub top_monomials: Vec<Monomial>,
    pub c1: u32,
    pub c1_conj: u32,
    /// None encodes −∞ (singleton top block).
    pub c2: Option<u32>,
    pub c2_conj: Option<u32>,
    pub c: u32,
    pub alpha: u32,
    pub xi: u32,
}

impl fmt::Display for XiData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<u32>| v.map_or("-inf".to_string(), |x| x.to_string());
        write!(
            f,
            "d_h={}, c1={}, c1'={}, c2={}, c2'={}, c={}, alpha={}, xi={}",
            self.d_h,
            self.c1,
            self.c1_conj,
            opt(self.c2),
            opt(self.c2_conj),
            self.c,
            self.alpha,
            self.xi
        )
    }
}

/// Compute ξ for a nonzero remainder h against a characteristic
/// polynomial of degree r. Requires deg_z(h) < r and deg_conj(h) < r,
/// which any remainder of `reduce_degrees` satisfies.
pub fn compute_xi(h: &BivarPoly, r: u32) -> Result<XiData> {
    if h.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let dz = h.deg_z().unwrap_or(0);
    let dzb = h.deg_conj().unwrap_or(0);
    if dz >= r || dzb >= r {
        return Err(Error::Internal(format!(
            "remainder has z-degree {dz}, conj-degree {dzb}; both must stay below r = {r}"
        )));
    }
    let top: Vec<Monomial> = h.top_terms().into_iter().map(|(m, _)| m).collect();
    let d_h = top[0].degree();
    let c1 = top.iter().map(|m| m.j).max().unwrap();
    let c1_conj = top.iter().map(|m| m.i).max().unwrap();
    let c2 = top.iter().map(|m| m.j).filter(|&j| j != c1).max();
    let c2_conj = top.iter().map(|m| m.i).filter(|&i| i != c1_conj).max();
    let side_alpha = |cmax: u32, csecond: Option<u32>| {
        let gap = csecond.map_or(u32::MAX, |s| cmax - s);
        (r - cmax).min(gap)
    };
    let alpha = if c1 >= c1_conj {
        side_alpha(c1, c2)
    } else {
        side_alpha(c1_conj, c2_conj)
    };
    let xi = (2 * r as i64 - 2 - alpha as i64).max(0) as u32;
    Ok(XiData {
        d_h,
        top_monomials: top,
        c1,
        c1_conj,
        c2,
        c2_conj,
        c: c1.max(c1_conj),
        alpha,
        xi,
    })
}

/// ξ for a reduction remainder that may be zero: a vanishing remainder
/// certifies at level 2r − 2 directly.
pub fn xi_for_remainder(h: &BivarPoly, r: u32) -> Result<u32> {
    if h.is_zero() {
        Ok(2 * r - 2)
    } else {
        Ok(compute_xi(h, r)?.xi)
    }
}

/// The minimal-degree monic analytic polynomial annihilated by the
/// sequence, found among the divisors of its characteristic
/// polynomial. Divisors are enumerated as sub-multisets of the root
/// multiset, ascending by degree with coefficient-lex tie-breaking,
/// and tested with `is_characteristic` at the given level. When
/// `M(level)` is PSD the result must have distinct roots.
pub fn minimal_analytic_charpoly(s: &Rdis, level: u32, tols: &Tolerances) -> Result<UniPoly> {
    let p_uni = UniPoly::from_bivar(s.charpoly())?;
    let full = s.is_characteristic(s.charpoly(), level, tols);
    if !full.passes {
        return Err(Error::NotCharacteristic {
            residual: full.max_residual,
        });
    }
    let roots = analytic_roots(&p_uni, tols)?;
    let mults = roots.multiplicities();

    // all exponent vectors e with 0 ≤ e_i ≤ m_i, skipping the empty one
    let mut candidates: Vec<(UniPoly, Vec<u32>)> = Vec::new();
    let mut e = vec![0u32; roots.count()];
    loop {
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == e.len() {
                break;
            }
            if e[pos] < mults[pos] {
                e[pos] += 1;
                break;
            }
            e[pos] = 0;
            pos += 1;
        }
        if pos == e.len() {
            break;
        }
        let mut expanded = Vec::new();
        for (idx, &cnt) in e.iter().enumerate() {
            for _ in 0..cnt {
                expanded.push(roots.points()[idx]);
            }
        }
        candidates.push((UniPoly::from_roots(&expanded), e.clone()));
    }
    candidates.sort_by(|x, y| {
        let (dx, dy) = (x.0.degree().unwrap_or(0), y.0.degree().unwrap_or(0));
        dx.cmp(&dy).then_with(|| {
            for k in 0..=dx {
                let (cx, cy) = (x.0.coeff(k), y.0.coeff(k));
                let ord = cx.re.total_cmp(&cy.re).then(cx.im.total_cmp(&cy.im));
                if ord != std::cmp::Ordering::Equal {
                    return ord;
                }
            }
            std::cmp::Ordering::Equal
        })
    });

    for (cand, e) in candidates {
        if s.is_characteristic(&cand.to_bivar(), level, tols).passes {
            let psd = MomentMatrix::build(s, level)?.psd_check(tols);
            if psd.is_psd && e.iter().any(|&cnt| cnt > 1) {
                return Err(Error::Internal(
                    "minimal characteristic divisor has a repeated root although the \
                     moment matrix is PSD"
                        .into(),
                ));
            }
            return Ok(cand);
        }
    }
    Err(Error::Internal(
        "no divisor passed membership although the full polynomial did".into(),
    ))
}

/// Lagrange basis at distinct nodes: `L_j(λ_k) = δ_jk`. Returned as
/// analytic bivariate polynomials ready for moment-matrix pairing.
pub fn lagrange_basis(zeros: &ZeroSet) -> Result<Vec<BivarPoly>> {
    let pts = zeros.points();
    if pts.is_empty() {
        return Err(Error::EmptyZeroSet);
    }
    let tol = Tolerances::default().root_dedup * (1.0 + zeros.max_abs());
    if !zeros.is_simple() {
        return Err(Error::DuplicateRoots { dist: 0.0 });
    }
    for (idx, &x) in pts.iter().enumerate() {
        for &y in &pts[idx + 1..] {
            let dist = (x - y).norm();
            if dist <= tol {
                return Err(Error::DuplicateRoots { dist });
            }
        }
    }
    let mut basis = Vec::with_capacity(pts.len());
    for (j, &node) in pts.iter().enumerate() {
        let others: Vec<C64> = pts
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, &z)| z)
            .collect();
        let mut numer = UniPoly::from_roots(&others);
        let denom = numer.evaluate(node);
        numer = numer.scale(C64::new(1.0, 0.0) / denom);
        basis.push(numer.to_bivar());
    }
    // Kronecker sanity: interpolation data this small must be exact
    // to rounding, otherwise the nodes were too close to use.
    for (j, lj) in basis.iter().enumerate() {
        for (k, &node) in pts.iter().enumerate() {
            let want = if j == k { 1.0 } else { 0.0 };
            if (lj.evaluate(node) - C64::new(want, 0.0)).norm() > 1e-9 {
                return Err(Error::DuplicateRoots {
                    dist: (pts[j] - node).norm(),
                });
            }
        }
    }
    Ok(basis)
}

/// Zero counts of the direct cubic over an n×n grid (row-major,
/// endpoints included). Cells are independent, so this runs through
/// the data-parallel map.
pub fn zero_count_grid(
    a_range: (f64, f64),
    b_range: (f64, f64),
    n: usize,
) -> Vec<(f64, f64, usize)> {
    par::map(grid_cells(a_range, b_range, n), count_cell)
}

/// Sequential twin of `zero_count_grid` for benchmarking the parallel
/// dispatch against a plain loop.
pub fn zero_count_grid_seq(
    a_range: (f64, f64),
    b_range: (f64, f64),
    n: usize,
) -> Vec<(f64, f64, usize)> {
    par::map_seq(grid_cells(a_range, b_range, n), count_cell)
}

fn grid_cells(a_range: (f64, f64), b_range: (f64, f64), n: usize) -> Vec<(f64, f64)> {
    let coord = |lo: f64, hi: f64, k: usize| {
        if n <= 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    };
    let mut cells = Vec::with_capacity(n * n);
    for bi in 0..n {
        for ai in 0..n {
            cells.push((
                coord(a_range.0, a_range.1, ai),
                coord(b_range.0, b_range.1, bi),
            ));
        }
    }
    cells
}

fn count_cell((a, b): (f64, f64)) -> (f64, f64, usize) {
    (a, b, harmonic_cubic_zeros(&CubicParams::direct(a, b)).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdis::test_support::{c, charpoly_cubic, moment_of, seq_quadratic};
    use crate::rdis::InitialBlock;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        v
    }

    fn assert_points_eq(got: &ZeroSet, want: Vec<C64>, tol: f64) {
        assert_eq!(got.count(), want.len(), "{:?}", got.points());
        let want = sorted(want);
        for (g, w) in got.points().iter().zip(&want) {
            assert!((g - w).norm() <= tol, "{g} vs {w}");
        }
    }

    #[test]
    fn regions_and_counts() {
        use CubicRegion::*;
        let cases = [
            (0.0, 0.0, Origin),
            (3.0, 1.0, AxisImaginary),
            (2.0, 1.0, AxisImaginary),
            (-3.0, 1.0, AxisReal),
            (1.5, 1.0, ImaginaryAndCircle),
            (-1.5, 1.0, RealAndCircle),
            (0.5, 1.0, CircleOnly),
            (1.0, 1.0, CircleOnly),
            (-1.0, 1.0, CircleOnly),
            (0.5, -1.0, BothAxes),
            (2.0, -1.0, AxisImaginary),
            (1.0, -1.0, AxisImaginary),
            (-2.0, -1.0, AxisReal),
            (1.0, 0.0, AxisImaginary),
            (-1.0, 0.0, AxisReal),
        ];
        for (a, b, want) in cases {
            let p = CubicParams::direct(a, b);
            let region = classify_cubic(&p);
            assert_eq!(region, want, "({a},{b})");
            assert_eq!(
                harmonic_cubic_zeros(&p).count(),
                region.zero_count(),
                "({a},{b})"
            );
        }
    }

    #[test]
    fn zeros_satisfy_the_polynomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let a = rng.random_range(-4.0..4.0);
            let b = rng.random_range(-4.0..4.0);
            for params in [CubicParams::direct(a, b), CubicParams::rotated(a, b)] {
                let p = params.charpoly();
                for &z in harmonic_cubic_zeros(&params).points() {
                    let res = p.evaluate(z).norm();
                    assert!(
                        res <= 1e-9 * (1.0 + z.norm().powi(3)),
                        "({a},{b}) rotated={}: residual {res:.2e} at {z}",
                        params.is_rotated()
                    );
                }
            }
        }
    }

    #[test]
    fn seven_zero_example_in_closed_form() {
        // (a,b) = (-3,2): real pair ±1, circle quadruple ±√7/2 ± i/2
        let zs = harmonic_cubic_zeros(&CubicParams::direct(-3.0, 2.0));
        let r7 = 7.0f64.sqrt() / 2.0;
        assert_points_eq(
            &zs,
            vec![
                c(0.0, 0.0),
                c(1.0, 0.0),
                c(-1.0, 0.0),
                c(r7, 0.5),
                c(r7, -0.5),
                c(-r7, 0.5),
                c(-r7, -0.5),
            ],
            1e-12,
        );
    }

    #[test]
    fn rotated_example_with_three_zeros() {
        // z³ = 2iz - (5/4)z̄ admits exactly {0, ±(√13/2)e^{iπ/4}}
        let zs = harmonic_cubic_zeros(&CubicParams::rotated(2.0, -1.25));
        let m = 13.0f64.sqrt() / 2.0;
        let e = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        assert_points_eq(&zs, vec![c(0.0, 0.0), e * m, -e * m], 1e-12);
    }

    #[test]
    fn rotated_example_with_seven_zeros() {
        // z³ = -2iz + (5/4)z̄ has the full seven-point picture
        let zs = harmonic_cubic_zeros(&CubicParams::rotated(-2.0, 1.25));
        let rot = C64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
        let s3 = 3.0f64.sqrt() / 2.0;
        let (x, y) = (3.0 * 2.0f64.sqrt() / 4.0, 2.0f64.sqrt() / 4.0);
        let want: Vec<C64> = [
            c(0.0, 0.0),
            c(s3, 0.0),
            c(-s3, 0.0),
            c(x, y),
            c(x, -y),
            c(-x, y),
            c(-x, -y),
        ]
        .iter()
        .map(|&z| rot * z)
        .collect();
        assert_points_eq(&zs, want, 1e-12);
    }

    #[test]
    fn charpoly_recognition_round_trips() {
        let direct = CubicParams::direct(-3.0, 2.0);
        assert_eq!(CubicParams::from_charpoly(&direct.charpoly()), Some(direct));
        let rot = CubicParams::rotated(2.0, -1.25);
        assert_eq!(CubicParams::from_charpoly(&rot.charpoly()), Some(rot));
        // not harmonic cubics
        assert_eq!(CubicParams::from_charpoly(&charpoly_cubic()), None);
        let mixed = BivarPoly::from_terms([
            (Monomial::new(0, 3), c(1.0, 0.0)),
            (Monomial::new(0, 1), c(1.0, 1.0)),
        ]);
        assert_eq!(CubicParams::from_charpoly(&mixed), None);
        let quartic = BivarPoly::term(0, 4, c(1.0, 0.0));
        assert_eq!(CubicParams::from_charpoly(&quartic), None);
    }

    #[test]
    fn analytic_roots_examples() {
        let tols = Tolerances::default();
        let p = UniPoly::new(vec![c(5.0, 0.0), c(3.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]);
        let zs = analytic_roots(&p, &tols).unwrap();
        assert_points_eq(&zs, vec![c(-1.0, 0.0), c(1.0, 2.0), c(1.0, -2.0)], 1e-9);

        let linear = UniPoly::new(vec![c(-1.0, 0.0), c(1.0, 0.0)]);
        assert_points_eq(&analytic_roots(&linear, &tols).unwrap(), vec![c(1.0, 0.0)], 1e-12);

        assert!(matches!(
            analytic_roots(&UniPoly::zero(), &tols),
            Err(Error::ZeroPolynomial)
        ));
        assert!(matches!(
            analytic_roots(&UniPoly::new(vec![c(2.0, 0.0)]), &tols),
            Err(Error::ConstantPolynomial)
        ));
    }

    #[test]
    fn analytic_roots_of_degree_seven_product() {
        // z⁷ - 4z⁵ + 7z³ - 4z carries the seven zeros of (a,b)=(-3,2)
        let tols = Tolerances::default();
        let q = UniPoly::new(vec![
            c(0.0, 0.0),
            c(-4.0, 0.0),
            c(0.0, 0.0),
            c(7.0, 0.0),
            c(0.0, 0.0),
            c(-4.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
        ]);
        let got = analytic_roots(&q, &tols).unwrap();
        let want = harmonic_cubic_zeros(&CubicParams::direct(-3.0, 2.0));
        assert!(got.is_simple());
        assert!(got.hausdorff(&want) <= 1e-8);
    }

    #[test]
    fn analytic_roots_records_multiplicity() {
        let tols = Tolerances::default();
        // (z-1)²(z+2)
        let mut q = UniPoly::from_roots(&[c(1.0, 0.0), c(1.0, 0.0), c(-2.0, 0.0)]);
        let zs = analytic_roots(&q, &tols).unwrap();
        assert_eq!(zs.count(), 2);
        assert_eq!(zs.multiplicities(), &[1, 2]);

        q = UniPoly::from_roots(&[c(0.0, 0.0), c(0.0, 0.0)]);
        let zs = analytic_roots(&q, &tols).unwrap();
        assert_eq!(zs.count(), 1);
        assert_eq!(zs.multiplicities(), &[2]);
    }

    #[test]
    fn roots_product_round_trip_on_square_free_polys() {
        let tols = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..30 {
            let n = rng.random_range(1..=8usize);
            let mut roots: Vec<C64> = Vec::new();
            while roots.len() < n {
                let z = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                if roots.iter().all(|r| (r - z).norm() > 1e-2) {
                    roots.push(z);
                }
            }
            let q = UniPoly::from_roots(&roots);
            let back = product_from_roots(&analytic_roots(&q, &tols).unwrap());
            let scale = q.coeffs().iter().map(|v| v.norm()).fold(1.0, f64::max);
            for k in 0..q.coeffs().len() {
                assert!(
                    (q.coeff(k) - back.coeff(k)).norm() <= 1e-7 * scale,
                    "coefficient {k}"
                );
            }
        }
    }

    #[test]
    fn product_over_seven_zeros_matches_coefficient_formula() {
        // region b < -a < 2b: Q = z⁷ + (2a+b)z⁵ + (a²+b²+ab)z³ + (b³+ab²)z
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let b = rng.random_range(0.3..3.0);
            let a = -rng.random_range(b * 1.01..b * 1.99);
            let zs = harmonic_cubic_zeros(&CubicParams::direct(a, b));
            assert_eq!(zs.count(), 7, "({a},{b})");
            let q = product_from_roots(&zs);
            let want = [
                (7, 1.0),
                (5, 2.0 * a + b),
                (3, a * a + b * b + a * b),
                (1, b * b * b + a * b * b),
            ];
            let scale = want.iter().map(|&(_, v)| v.abs()).fold(1.0, f64::max);
            for k in 0..=7usize {
                let wanted = want
                    .iter()
                    .find(|&&(p, _)| p == k)
                    .map_or(0.0, |&(_, v)| v);
                assert!(
                    (q.coeff(k) - c(wanted, 0.0)).norm() <= 1e-7 * scale,
                    "({a},{b}) coefficient {k}: {} vs {wanted}",
                    q.coeff(k)
                );
            }
        }
    }

    #[test]
    fn xi_of_the_seven_zero_remainder() {
        // h = z̄z² - z̄²z - bz + bz̄ with r = 3
        let b = 2.0;
        let h = BivarPoly::from_terms([
            (Monomial::new(1, 2), c(1.0, 0.0)),
            (Monomial::new(2, 1), c(-1.0, 0.0)),
            (Monomial::new(0, 1), c(-b, 0.0)),
            (Monomial::new(1, 0), c(b, 0.0)),
        ]);
        let xi = compute_xi(&h, 3).unwrap();
        assert_eq!(
            (xi.d_h, xi.c1, xi.c1_conj, xi.c2, xi.c2_conj),
            (3, 2, 2, Some(1), Some(1))
        );
        assert_eq!((xi.c, xi.alpha, xi.xi), (2, 1, 3));
    }

    #[test]
    fn xi_of_singleton_and_linear_remainders() {
        let single = BivarPoly::term(1, 2, c(1.0, 0.0));
        let xi = compute_xi(&single, 3).unwrap();
        assert_eq!((xi.c1, xi.c2, xi.alpha, xi.xi), (2, None, 1, 3));

        let lin = &BivarPoly::var_z() + &BivarPoly::var_conj();
        let xi = compute_xi(&lin, 3).unwrap();
        assert_eq!((xi.d_h, xi.c1, xi.c1_conj, xi.c2), (1, 1, 1, Some(0)));
        assert_eq!((xi.alpha, xi.xi), (1, 3));
    }

    #[test]
    fn xi_for_zero_remainder_and_guards() {
        assert_eq!(xi_for_remainder(&BivarPoly::zero(), 3).unwrap(), 4);
        assert_eq!(xi_for_remainder(&BivarPoly::zero(), 7).unwrap(), 12);
        assert!(matches!(
            compute_xi(&BivarPoly::zero(), 3),
            Err(Error::ZeroPolynomial)
        ));
        // degree must stay below r
        let h = BivarPoly::term(0, 3, c(1.0, 0.0));
        assert!(compute_xi(&h, 3).is_err());
    }

    #[test]
    fn xi_is_symmetric_under_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..50 {
            let r = rng.random_range(3..7u32);
            let h = BivarPoly::from_terms((0..5).map(|_| {
                let i = rng.random_range(0..r);
                let j = rng.random_range(0..r);
                (
                    Monomial::new(i, j),
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                )
            }));
            if h.is_zero() {
                continue;
            }
            let a = compute_xi(&h, r).unwrap();
            let b = compute_xi(&h.conjugate(), r).unwrap();
            assert_eq!((a.c1, a.c2), (b.c1_conj, b.c2_conj));
            assert_eq!((a.c1_conj, a.c2_conj), (b.c1, b.c2));
            assert_eq!(a.xi, b.xi);
        }
    }

    #[test]
    fn minimal_charpoly_of_three_atom_sequence_is_the_cubic() {
        let tols = Tolerances::default();
        let block = InitialBlock::from_fn(2, |i, j| seq_quadratic().gamma(i, j)).unwrap();
        let s = Rdis::new(block, charpoly_cubic()).unwrap();
        let min = minimal_analytic_charpoly(&s, 6, &tols).unwrap();
        let want = [c(5.0, 0.0), c(3.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)];
        assert_eq!(min.degree(), Some(3));
        for (k, w) in want.iter().enumerate() {
            assert!((min.coeff(k) - w).norm() <= 1e-9);
        }
        // oracle: every proper divisor fails membership
        let roots = [c(-1.0, 0.0), c(1.0, 2.0), c(1.0, -2.0)];
        for keep in 1..(1 << 3) - 1u32 {
            let subset: Vec<C64> = (0..3)
                .filter(|k| keep & (1 << k) != 0)
                .map(|k| roots[k])
                .collect();
            let d = UniPoly::from_roots(&subset).to_bivar();
            assert!(
                !s.is_characteristic(&d, 6, &tols).passes,
                "divisor mask {keep} unexpectedly annihilates"
            );
        }
    }

    #[test]
    fn minimal_charpoly_drops_massless_roots() {
        let tols = Tolerances::default();
        // measure δ₋₁, characteristic polynomial (z+1)(z-2) = z² - z - 2
        let mu = vec![(c(-1.0, 0.0), 1.0)];
        let block = InitialBlock::from_fn(1, |i, j| moment_of(&mu, i, j)).unwrap();
        let p = BivarPoly::from_terms([
            (Monomial::new(0, 2), c(1.0, 0.0)),
            (Monomial::new(0, 1), c(-1.0, 0.0)),
            (Monomial::new(0, 0), c(-2.0, 0.0)),
        ]);
        let s = Rdis::new(block, p).unwrap();
        let min = minimal_analytic_charpoly(&s, 4, &tols).unwrap();
        assert_eq!(min.degree(), Some(1));
        assert!((min.coeff(0) - c(1.0, 0.0)).norm() <= 1e-12);

        // measure δ₀ with characteristic polynomial z²
        let block = InitialBlock::from_fn(1, |i, j| moment_of(&[(c(0.0, 0.0), 1.0)], i, j)).unwrap();
        let s = Rdis::new(block, BivarPoly::term(0, 2, c(1.0, 0.0))).unwrap();
        let min = minimal_analytic_charpoly(&s, 4, &tols).unwrap();
        assert_eq!(min.degree(), Some(1));
        assert!(min.coeff(0).norm() <= 1e-12);
    }

    #[test]
    fn lagrange_basis_properties() {
        let single = ZeroSet::from_points(vec![c(0.0, 0.0)], 1e-7);
        let basis = lagrange_basis(&single).unwrap();
        assert_eq!(basis.len(), 1);
        assert!((basis[0].evaluate(c(3.0, 1.0)) - c(1.0, 0.0)).norm() < 1e-12);

        let nodes = ZeroSet::from_points(vec![c(-1.0, 0.0), c(1.0, 2.0), c(1.0, -2.0)], 1e-7);
        let basis = lagrange_basis(&nodes).unwrap();
        for (j, lj) in basis.iter().enumerate() {
            for (k, &node) in nodes.points().iter().enumerate() {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((lj.evaluate(node) - c(want, 0.0)).norm() <= 1e-9);
            }
        }

        // partition of unity at random points
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let z = c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let total: C64 = basis.iter().map(|l| l.evaluate(z)).sum();
            assert!((total - c(1.0, 0.0)).norm() <= 1e-8, "at {z}");
        }
    }

    #[test]
    fn lagrange_basis_at_three_real_nodes() {
        let nodes = ZeroSet::from_points(vec![c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)], 1e-7);
        let basis = lagrange_basis(&nodes).unwrap();
        // nodes sort as -1, 0, 1 → z(z-1)/2, 1-z², z(z+1)/2
        let z = BivarPoly::var_z();
        let z2 = &z * &z;
        let want = [
            (&z2 - &z).scale(c(0.5, 0.0)),
            &BivarPoly::one() - &z2,
            (&z2 + &z).scale(c(0.5, 0.0)),
        ];
        for (got, want) in basis.iter().zip(&want) {
            let diff = got - want;
            assert!(diff.max_coeff() <= 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn lagrange_rejects_near_duplicate_nodes() {
        let raw = vec![c(0.0, 0.0), c(1.0, 0.0)];
        let mut zs = ZeroSet::from_points(raw, 1e-7);
        zs.points[1] = c(1e-12, 0.0); // defeat dedup deliberately
        assert!(matches!(
            lagrange_basis(&zs),
            Err(Error::DuplicateRoots { .. })
        ));
    }

    #[test]
    fn zero_set_clustering_and_hausdorff() {
        let zs = ZeroSet::from_points(
            vec![c(1.0, 0.0), c(1.0 + 1e-9, 0.0), c(-1.0, 0.0)],
            1e-7,
        );
        assert_eq!(zs.count(), 2);
        assert_eq!(zs.multiplicities(), &[1, 2]);
        let other = ZeroSet::from_points(vec![c(1.0, 0.0), c(-1.0, 0.1)], 1e-7);
        assert!((zs.hausdorff(&other) - 0.1).abs() < 1e-9);
    }

    #[test]
    fn grid_sweep_parallel_matches_sequential() {
        let par = zero_count_grid((-4.0, 4.0), (-4.0, 4.0), 13);
        let seq = zero_count_grid_seq((-4.0, 4.0), (-4.0, 4.0), 13);
        assert_eq!(par.len(), 169);
        assert_eq!(par, seq);
        // spot checks at two cells
        let cell = par
            .iter()
            .find(|&&(a, b, _)| (a + 4.0).abs() < 1e-12 && (b - 8.0 / 3.0).abs() < 1e-9)
            .unwrap();
        assert_eq!(cell.2, 7); // (-4, 8/3) lies in b < -a < 2b
        let origin = par
            .iter()
            .find(|&&(a, b, _)| a.abs() < 1e-12 && b.abs() < 1e-12)
            .unwrap();
        assert_eq!(origin.2, 1);
    }
}
