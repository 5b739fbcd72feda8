//! Solvers for truncated moment problems carrying a column relation.
//!
//! Three entry points, one per input shape:
//!
//! - [`solve_rsft`] takes a recursively generated sequence whose
//!   characteristic polynomial is analytic and either constructs the
//!   unique minimal representing measure or certifies infeasibility.
//! - [`solve_rdis`] takes a recursively generated sequence together
//!   with a finite candidate support and reduces to the analytic case
//!   through a product polynomial over that support.
//! - [`solve_truncated`] takes a finite moment table of degree
//!   `2k + 2` plus a column relation expressing `Z^{k+1}` in columns
//!   of degree at most `k`, validates the data, and runs the full
//!   decision pipeline.
//!
//! Every solve that reports [`SolveStatus::Solved`] carries a measure
//! that has been re-integrated against the input moments; failures
//! carry a [`FailedTest`] naming the violated certificate.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::analysis::{
    analytic_roots, classify_cubic, compute_xi, harmonic_cubic_zeros, lagrange_basis,
    minimal_analytic_charpoly, product_from_roots, xi_for_remainder, CubicParams, CubicRegion,
    XiData, ZeroSet,
};
use crate::error::{Error, Result};
use crate::moment::{basis_dim, MomentMatrix, MomentSource, MomentTable, PsdReport};
use crate::par;
use crate::poly::{reduce_degrees, BivarPoly, Monomial, UniPoly};
use crate::rdis::{InitialBlock, Rdis};
use crate::tol::Tolerances;
use crate::C64;

/// A finitely atomic measure `Σ c_i δ_{λ_i}` with strictly positive
/// weights and pairwise distinct atoms, sorted by position.
#[derive(Debug, Clone)]
pub struct AtomicMeasure {
    atoms: Vec<(C64, f64)>,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<(C64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("a measure needs at least one atom".into()));
        }
        for &(z, w) in &atoms {
            if !z.re.is_finite() || !z.im.is_finite() || !w.is_finite() {
                return Err(Error::InvalidMeasure("non-finite atom or weight".into()));
            }
            if w <= 0.0 {
                return Err(Error::InvalidMeasure(format!("weight {w:.3e} is not positive")));
            }
        }
        let mut sorted = atoms;
        sorted.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
        let scale = 1.0 + sorted.iter().map(|(z, _)| z.norm()).fold(0.0, f64::max);
        let tol = Tolerances::default().root_dedup * scale;
        for (idx, &(z, _)) in sorted.iter().enumerate() {
            for &(other, _) in &sorted[idx + 1..] {
                if (z - other).norm() <= tol {
                    return Err(Error::InvalidMeasure(format!(
                        "atoms {z} and {other} coincide within tolerance"
                    )));
                }
            }
        }
        Ok(AtomicMeasure { atoms: sorted })
    }

    pub fn atoms(&self) -> &[(C64, f64)] {
        &self.atoms
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    /// The moment `γ_ij = Σ c conj(λ)^i λ^j`.
    pub fn moment(&self, i: u32, j: u32) -> C64 {
        self.atoms
            .iter()
            .map(|&(z, w)| z.conj().powu(i) * z.powu(j) * w)
            .sum()
    }

    pub fn support(&self) -> ZeroSet {
        let points = self.atoms.iter().map(|&(z, _)| z).collect();
        ZeroSet::from_points(points, Tolerances::default().root_dedup)
    }
}

impl MomentSource for AtomicMeasure {
    fn moment(&self, i: u32, j: u32) -> Option<C64> {
        Some(AtomicMeasure::moment(self, i, j))
    }
}

impl fmt::Display for AtomicMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (idx, (z, w)) in self.atoms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{:.6}·δ({:.6}{:+.6}i)", w, z.re, z.im)?;
        }
        Ok(())
    }
}

/// Outcome of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// A representing measure was constructed and verified.
    Solved,
    /// A certificate rules out every representing measure.
    Infeasible,
    /// The residuals fall in the band where neither acceptance nor a
    /// certificate is numerically trustworthy.
    Indeterminate,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Solved => "solved",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Indeterminate => "indeterminate",
        };
        f.write_str(s)
    }
}

/// The named test whose failure decided (or clouded) the outcome.
#[derive(Debug, Clone)]
pub enum FailedTest {
    /// A moment matrix has a negative eigenvalue beyond tolerance.
    NotPsd { level: u32, min_eigenvalue: f64 },
    /// The candidate support polynomial is not annihilated by the
    /// moment functional.
    MembershipFailed { residual: f64 },
    /// A closed-form equality attached to the cubic relation fails.
    ConditionViolated {
        region: CubicRegion,
        condition: String,
        residual: f64,
    },
    /// The moment matrix rank exceeds the number of points any
    /// representing measure could charge.
    RankExceedsVariety {
        level: u32,
        rank: usize,
        variety: usize,
    },
    /// The constructed measure does not reintegrate the input moments.
    VerificationFailed { residual: f64 },
}

impl fmt::Display for FailedTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailedTest::NotPsd { level, min_eigenvalue } => write!(
                f,
                "M({level}) is not positive semidefinite: λ_min = {min_eigenvalue:.6e}"
            ),
            FailedTest::MembershipFailed { residual } => write!(
                f,
                "support polynomial is not annihilated by the sequence: residual {residual:.6e}"
            ),
            FailedTest::ConditionViolated { region, condition, residual } => {
                write!(f, "{region}: condition \"{condition}\" fails with residual {residual:.6e}")
            }
            FailedTest::RankExceedsVariety { level, rank, variety } => write!(
                f,
                "rank M({level}) = {rank} exceeds the {variety} available support points"
            ),
            FailedTest::VerificationFailed { residual } => {
                write!(f, "reintegration residual {residual:.6e} exceeds tolerance")
            }
        }
    }
}

/// Numeric evidence gathered along the way, kept regardless of outcome.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    /// Degree bookkeeping for the reduction remainder, when one exists.
    pub xi: Option<XiData>,
    /// The matrix level the membership certificate was required at.
    pub xi_level: Option<u32>,
    /// Candidate support (or constructed support after a solve).
    pub zero_set: Option<ZeroSet>,
    /// PSD reports for every level examined, ascending.
    pub psd_reports: Vec<PsdReport>,
    /// Largest scaled Riesz residual of the support polynomial.
    pub membership_residual: Option<f64>,
    /// Largest scaled reintegration residual of the final measure.
    pub verify_residual: Option<f64>,
    /// Closed-form equality checks, present for cubic relations.
    pub condition_report: Option<ConditionReport>,
}

/// Result of a solve: status, measure when solved, certificate when
/// not, and the diagnostics either way.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub measure: Option<AtomicMeasure>,
    pub failed_test: Option<FailedTest>,
    pub diagnostics: Diagnostics,
}

impl SolveReport {
    fn solved(measure: AtomicMeasure, diagnostics: Diagnostics) -> Self {
        SolveReport {
            status: SolveStatus::Solved,
            measure: Some(measure),
            failed_test: None,
            diagnostics,
        }
    }

    fn infeasible(test: FailedTest, diagnostics: Diagnostics) -> Self {
        SolveReport {
            status: SolveStatus::Infeasible,
            measure: None,
            failed_test: Some(test),
            diagnostics,
        }
    }

    fn indeterminate(test: Option<FailedTest>, diagnostics: Diagnostics) -> Self {
        SolveReport {
            status: SolveStatus::Indeterminate,
            measure: None,
            failed_test: test,
            diagnostics,
        }
    }
}

/// A column relation `Z^{k+1} = Σ a_nm conj(Z)^n Z^m` over monomials
/// with `n + m <= k`.
#[derive(Debug, Clone)]
pub struct ColumnRelation {
    k: u32,
    coefficients: Vec<(Monomial, C64)>,
}

impl ColumnRelation {
    pub fn new(k: u32, coefficients: Vec<(Monomial, C64)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for (m, _) in &coefficients {
            if m.degree() > k {
                return Err(Error::MalformedCharPoly(format!(
                    "relation coefficient at z̄^{} z^{} has degree above k = {k}",
                    m.i, m.j
                )));
            }
            if !seen.insert((m.i, m.j)) {
                return Err(Error::MalformedCharPoly(format!(
                    "duplicate relation coefficient at z̄^{} z^{}",
                    m.i, m.j
                )));
            }
        }
        let mut coefficients = coefficients;
        coefficients.sort_by_key(|(m, _)| m.degree_lex_index());
        Ok(ColumnRelation { k, coefficients })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn coefficients(&self) -> &[(Monomial, C64)] {
        &self.coefficients
    }

    /// The characteristic polynomial `z^{k+1} - Σ a_nm z̄^n z^m`.
    pub fn charpoly(&self) -> BivarPoly {
        let mut terms = vec![(Monomial::new(0, self.k + 1), C64::new(1.0, 0.0))];
        terms.extend(self.coefficients.iter().map(|&(m, c)| (m, -c)));
        BivarPoly::from_terms(terms)
    }
}

/// Largest scaled disagreement `|μ_ij − γ_ij| / (1 + |γ_ij|)` between
/// the measure's moments and the reference over all `i + j <= degree`.
pub fn verify_measure<S: MomentSource + ?Sized>(
    mu: &AtomicMeasure,
    reference: &S,
    degree: u32,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for total in 0..=degree {
        for i in 0..=total / 2 {
            let j = total - i;
            let g = reference.moment(i, j).ok_or(Error::MissingMoment { i, j })?;
            let m = AtomicMeasure::moment(mu, i, j);
            worst = worst.max((m - g).norm() / (1.0 + g.norm()));
        }
    }
    Ok(worst)
}

/// PSD reports for `M(0), ..., M(max_level)`, stopping at the first
/// failure so the witness names the lowest offending level.
struct PsdScan {
    reports: Vec<PsdReport>,
    failure: Option<PsdReport>,
    top: Option<MomentMatrix>,
}

fn psd_scan<S: MomentSource + ?Sized>(src: &S, max_level: u32, tols: &Tolerances) -> Result<PsdScan> {
    let mut reports = Vec::new();
    let mut top = None;
    for level in 0..=max_level {
        let m = MomentMatrix::build(src, level)?;
        let rep = m.psd_check(tols);
        reports.push(rep);
        if !rep.is_psd {
            return Ok(PsdScan { reports, failure: Some(rep), top: None });
        }
        top = Some(m);
    }
    Ok(PsdScan { reports, failure: None, top })
}

fn merge_reports(base: Vec<PsdReport>, extra: Vec<PsdReport>) -> Vec<PsdReport> {
    let mut out = base;
    for rep in extra {
        if !out.iter().any(|r| r.level == rep.level) {
            out.push(rep);
        }
    }
    out.sort_by_key(|r| r.level);
    out
}

/// Solve a recursively generated sequence whose characteristic
/// polynomial is analytic.
///
/// Finds the minimal analytic polynomial the sequence annihilates,
/// gates on positive semidefiniteness of `M(2r' - 2)` where `r'` is
/// its degree, and places one atom at each of its roots with weight
/// `<M L_i, L_i>` over the Lagrange basis. Weights at or below
/// `weight_floor · γ_00` break the minimality guarantee and surface
/// as [`Error::WeightBelowFloor`] rather than being dropped.
/// Gauss-Newton polish of an atomic measure against the moments of
/// `s` up to `degree`. Unknowns are the atom coordinates and weights;
/// every complex moment equation contributes a real and an imaginary
/// row, each divided by `1 + |γ|` so the step minimizes the same
/// relative residual the verification stage reports. Returns the best
/// iterate, or `None` when no step improves on the input.
fn refine_measure(atoms: &[(C64, f64)], s: &Rdis, degree: u32) -> Option<Vec<(C64, f64)>> {
    let n = atoms.len();
    let window: Vec<(u32, u32, C64, f64)> = (0..=degree)
        .flat_map(|total| (0..=total / 2).map(move |i| (i, total - i)))
        .map(|(i, j)| {
            let g = s.gamma(i, j);
            (i, j, g, 1.0 / (1.0 + g.norm()))
        })
        .collect();
    let rows = window.len();

    let max_rel = |current: &[(C64, f64)]| -> f64 {
        window
            .iter()
            .map(|&(i, j, g, scale)| {
                let total: C64 = current
                    .iter()
                    .map(|&(z, w)| z.conj().powu(i) * z.powu(j) * w)
                    .sum();
                (total - g).norm() * scale
            })
            .fold(0.0, f64::max)
    };

    let mut current: Vec<(C64, f64)> = atoms.to_vec();
    let mut best = current.clone();
    let mut best_resid = max_rel(&current);
    for _ in 0..4 {
        if best_resid < 1e-15 {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(2 * rows, 3 * n);
        let mut rhs = DVector::<f64>::zeros(2 * rows);
        for (r, &(i, j, g, scale)) in window.iter().enumerate() {
            let mut value = -g;
            for (m, &(z, w)) in current.iter().enumerate() {
                let zi = z.conj().powu(i);
                let zj = z.powu(j);
                value += zi * zj * w;
                let di = if i > 0 {
                    z.conj().powu(i - 1) * zj * i as f64
                } else {
                    C64::new(0.0, 0.0)
                };
                let dj = if j > 0 {
                    zi * z.powu(j - 1) * j as f64
                } else {
                    C64::new(0.0, 0.0)
                };
                let dx = (di + dj) * w;
                let dy = (dj - di) * C64::new(0.0, w);
                for (c, v) in [(3 * m, dx), (3 * m + 1, dy), (3 * m + 2, zi * zj)] {
                    jac[(2 * r, c)] = v.re * scale;
                    jac[(2 * r + 1, c)] = v.im * scale;
                }
            }
            rhs[2 * r] = -value.re * scale;
            rhs[2 * r + 1] = -value.im * scale;
        }
        let svd = jac.svd(true, true);
        let s_max = svd.singular_values.iter().fold(0.0f64, |m, &v| m.max(v));
        let step = svd.solve(&rhs, 1e-14 * s_max.max(1.0)).ok()?;
        for (m, slot) in current.iter_mut().enumerate() {
            slot.0 += C64::new(step[3 * m], step[3 * m + 1]);
            slot.1 += step[3 * m + 2];
        }
        if current.iter().any(|&(z, w)| !z.re.is_finite() || !z.im.is_finite() || !w.is_finite()) {
            break;
        }
        let resid = max_rel(&current);
        if resid < best_resid {
            best_resid = resid;
            best = current.clone();
        } else {
            break;
        }
    }
    if best_resid < max_rel(atoms) {
        Some(best)
    } else {
        None
    }
}

pub fn solve_rsft(s: &Rdis, tols: &Tolerances) -> Result<SolveReport> {
    let p_min = minimal_analytic_charpoly(s, 2 * s.char_degree(), tols)?;
    let r_min = p_min.degree().expect("minimal polynomial is nonconstant") as u32;
    let mut diags = Diagnostics::default();

    let scan = psd_scan(s, 2 * r_min - 2, tols)?;
    diags.psd_reports = scan.reports;
    if let Some(fail) = scan.failure {
        let test = FailedTest::NotPsd {
            level: fail.level,
            min_eigenvalue: fail.min_eigenvalue,
        };
        return Ok(SolveReport::infeasible(test, diags));
    }
    let m = scan.top.expect("scan visits at least level 0");

    let zeros = analytic_roots(&p_min, tols)?;
    let basis = lagrange_basis(&zeros)?;
    let floor = tols.weight_floor * s.gamma(0, 0).re;
    let mut atoms = Vec::with_capacity(basis.len());
    for (l, &point) in basis.iter().zip(zeros.points()) {
        let w = m.bilinear(l, l)?;
        if w.im.abs() > 1e-7 * (1.0 + w.re.abs()) {
            return Err(Error::Internal(format!(
                "Hermitian form returned the complex weight {w}"
            )));
        }
        if w.re <= floor {
            return Err(Error::WeightBelowFloor { weight: w.re, floor });
        }
        atoms.push((point, w.re));
    }
    // Root extraction and the Hermitian-form weights both degrade
    // with the conditioning of the node set; a Gauss-Newton pass
    // against the sequence itself tightens them. Kept only when every
    // polished weight clears the same floor the first pass did.
    let mut zeros = zeros;
    if let Some(refined) = refine_measure(&atoms, s, 2 * s.char_degree()) {
        if refined.iter().all(|&(_, w)| w > floor) {
            zeros = ZeroSet::from_points(
                refined.iter().map(|&(z, _)| z).collect(),
                tols.root_dedup,
            );
            atoms = refined;
        }
    }
    let measure = AtomicMeasure::new(atoms)?;
    let resid = verify_measure(&measure, s, 2 * s.char_degree())?;
    diags.zero_set = Some(zeros);
    diags.verify_residual = Some(resid);
    if resid > tols.verify {
        let test = FailedTest::VerificationFailed { residual: resid };
        return Ok(SolveReport::indeterminate(Some(test), diags));
    }
    Ok(SolveReport::solved(measure, diags))
}

/// Solve a recursively generated sequence given a finite candidate
/// support.
///
/// Forms the analytic product `Q = Π (z - λ_i)` over the candidate
/// points, reduces it against the characteristic polynomial to get
/// the matrix level `ξ` the membership certificate is valid at, and
/// tests both membership (at `max(ξ, 2 deg Q)` for slack) and
/// positive semidefiniteness of `M(ξ)`. Residuals above the
/// indeterminate band are infeasibility certificates; residuals
/// inside the band return [`SolveStatus::Indeterminate`]. On success
/// the problem re-enters [`solve_rsft`] with `Q` as the
/// characteristic polynomial.
pub fn solve_rdis(s: &Rdis, zeros: &ZeroSet, tols: &Tolerances) -> Result<SolveReport> {
    if zeros.count() == 0 {
        return Err(Error::EmptyZeroSet);
    }
    let q_uni = product_from_roots(zeros);
    let q_deg = q_uni.degree().expect("product over a nonempty set") as u32;
    let q = q_uni.to_bivar();
    let d = s.char_degree();

    let mut diags = Diagnostics::default();
    let red = reduce_degrees(&q, s.charpoly())?;
    let xi = xi_for_remainder(&red.remainder, d)?;
    if !red.remainder.is_zero() {
        diags.xi = Some(compute_xi(&red.remainder, d)?);
    }
    diags.xi_level = Some(xi);
    diags.zero_set = Some(zeros.clone());

    let memb_level = xi.max(2 * q_deg);
    let test = s.is_characteristic(&q, memb_level, tols);
    diags.membership_residual = Some(test.max_residual);

    let scan = psd_scan(s, xi, tols)?;
    diags.psd_reports = scan.reports;

    if test.max_residual > tols.indeterminate {
        let ft = FailedTest::MembershipFailed { residual: test.max_residual };
        return Ok(SolveReport::infeasible(ft, diags));
    }
    if let Some(fail) = scan.failure {
        let ft = FailedTest::NotPsd {
            level: fail.level,
            min_eigenvalue: fail.min_eigenvalue,
        };
        return Ok(SolveReport::infeasible(ft, diags));
    }
    if !test.passes {
        let ft = FailedTest::MembershipFailed { residual: test.max_residual };
        return Ok(SolveReport::indeterminate(Some(ft), diags));
    }

    let block = InitialBlock::from_fn(q_deg - 1, |i, j| s.gamma(i, j))?;
    let s_q = Rdis::new(block, q)?;
    let mut rep = solve_rsft(&s_q, tols)?;
    rep.diagnostics.xi = diags.xi;
    rep.diagnostics.xi_level = diags.xi_level;
    rep.diagnostics.membership_residual = diags.membership_residual;
    rep.diagnostics.psd_reports = merge_reports(
        diags.psd_reports,
        std::mem::take(&mut rep.diagnostics.psd_reports),
    );
    if rep.status == SolveStatus::Solved {
        let measure = rep.measure.as_ref().expect("solved reports carry a measure");
        let resid = verify_measure(measure, s, 2 * d.max(q_deg))?;
        rep.diagnostics.verify_residual = Some(resid);
        if resid > tols.verify {
            rep.status = SolveStatus::Indeterminate;
            rep.failed_test = Some(FailedTest::VerificationFailed { residual: resid });
            rep.measure = None;
        }
    }
    Ok(rep)
}

/// The result of [`check_cubic_conditions`]: the same solvability
/// conditions evaluated two ways, as Riesz functionals of multiples
/// of the region polynomial `h` and as closed-form moment equalities.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub region: CubicRegion,
    /// The polynomial every representing measure must annihilate
    /// together with the characteristic polynomial.
    pub h: BivarPoly,
    pub riesz: Vec<ConditionCheck>,
    pub entrywise: Vec<ConditionCheck>,
}

#[derive(Debug, Clone)]
pub struct ConditionCheck {
    pub name: String,
    pub residual: f64,
}

impl ConditionReport {
    pub fn max_riesz_residual(&self) -> f64 {
        self.riesz.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn max_entrywise_residual(&self) -> f64 {
        self.entrywise.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_riesz_residual() <= tol && self.max_entrywise_residual() <= tol
    }

    /// The single worst check across both formulations.
    pub fn worst(&self) -> Option<&ConditionCheck> {
        self.riesz
            .iter()
            .chain(self.entrywise.iter())
            .max_by(|a, b| a.residual.total_cmp(&b.residual))
    }
}

/// The region polynomial `h` and the monomial multipliers whose Riesz
/// functionals must vanish for the given cubic parameters.
fn cubic_region_data(params: &CubicParams) -> (CubicRegion, BivarPoly, Vec<Monomial>) {
    let region = classify_cubic(params);
    let one = C64::new(1.0, 0.0);
    let im = C64::new(0.0, 1.0);
    let re = C64::from;
    let a = params.a();
    let b = params.b();
    let h = if params.is_rotated() {
        // Parameters (t, u) of z³ = i t z + u z̄ live in the fields
        // (a, b); the support lines are the axis bisectors.
        let (t, u) = (a, b);
        match region {
            CubicRegion::Origin => BivarPoly::var_z(),
            CubicRegion::AxisImaginary => {
                BivarPoly::from_terms([(Monomial::new(0, 1), one), (Monomial::new(1, 0), -im)])
            }
            CubicRegion::AxisReal => {
                BivarPoly::from_terms([(Monomial::new(0, 1), one), (Monomial::new(1, 0), im)])
            }
            CubicRegion::BothAxes => BivarPoly::from_terms([
                (Monomial::new(1, 2), one),
                (Monomial::new(1, 0), -im * re(t)),
                (Monomial::new(0, 1), re(u)),
            ]),
            CubicRegion::CircleOnly => BivarPoly::from_terms([
                (Monomial::new(1, 2), one),
                (Monomial::new(0, 1), re(-u)),
            ]),
            CubicRegion::ImaginaryAndCircle => BivarPoly::from_terms([
                (Monomial::new(1, 2), im),
                (Monomial::new(2, 1), one),
                (Monomial::new(0, 1), -im * re(u)),
                (Monomial::new(1, 0), re(-u)),
            ]),
            CubicRegion::RealAndCircle => BivarPoly::from_terms([
                (Monomial::new(1, 2), im),
                (Monomial::new(2, 1), -one),
                (Monomial::new(0, 1), -im * re(u)),
                (Monomial::new(1, 0), re(u)),
            ]),
        }
    } else {
        match region {
            CubicRegion::Origin => BivarPoly::var_z(),
            CubicRegion::AxisImaginary => {
                BivarPoly::from_terms([(Monomial::new(0, 1), one), (Monomial::new(1, 0), one)])
            }
            CubicRegion::AxisReal => {
                BivarPoly::from_terms([(Monomial::new(0, 1), one), (Monomial::new(1, 0), -one)])
            }
            CubicRegion::BothAxes => BivarPoly::from_terms([
                (Monomial::new(1, 2), one),
                (Monomial::new(1, 0), re(a)),
                (Monomial::new(0, 1), re(b)),
            ]),
            CubicRegion::CircleOnly => BivarPoly::from_terms([
                (Monomial::new(1, 2), one),
                (Monomial::new(0, 1), re(-b)),
            ]),
            CubicRegion::ImaginaryAndCircle => BivarPoly::from_terms([
                (Monomial::new(1, 2), one),
                (Monomial::new(2, 1), one),
                (Monomial::new(0, 1), re(-b)),
                (Monomial::new(1, 0), re(-b)),
            ]),
            CubicRegion::RealAndCircle => BivarPoly::from_terms([
                (Monomial::new(1, 2), one),
                (Monomial::new(2, 1), -one),
                (Monomial::new(0, 1), re(-b)),
                (Monomial::new(1, 0), re(b)),
            ]),
        }
    };
    let multipliers = match region.zero_count() {
        1 | 5 => vec![Monomial::new(0, 0), Monomial::new(0, 1), Monomial::new(1, 0)],
        3 => vec![Monomial::new(0, 0), Monomial::new(0, 1), Monomial::new(0, 2)],
        _ => vec![Monomial::new(0, 0), Monomial::new(0, 1)],
    };
    (region, h, multipliers)
}

fn riesz_over_table(table: &MomentTable, p: &BivarPoly) -> Result<(C64, f64)> {
    let mut val = C64::new(0.0, 0.0);
    let mut scale = 1.0;
    for (m, c) in p.terms() {
        let g = table.get(m.i, m.j).ok_or(Error::MissingMoment { i: m.i, j: m.j })?;
        let t = c * g;
        val += t;
        scale += t.norm();
    }
    Ok((val, scale))
}

fn multiplier_name(m: Monomial) -> String {
    match (m.i, m.j) {
        (0, 0) => "Λ(h)".into(),
        (0, 1) => "Λ(z·h)".into(),
        (1, 0) => "Λ(z̄·h)".into(),
        (0, 2) => "Λ(z²·h)".into(),
        (i, j) => format!("Λ(z̄^{i} z^{j}·h)"),
    }
}

/// Evaluate the closed-form solvability conditions attached to a
/// harmonic cubic relation on a moment table of degree at least 4.
///
/// Each condition is reported twice: as the Riesz functional of a
/// monomial multiple of the region polynomial `h` and as the
/// equivalent moment equality written out entrywise. On tables that
/// satisfy the column relation the two formulations agree; the
/// residuals are scaled by `1 + Σ |term|` so they are comparable
/// across magnitudes.
pub fn check_cubic_conditions(table: &MomentTable, params: &CubicParams) -> Result<ConditionReport> {
    let (region, h, multipliers) = cubic_region_data(params);

    let mut riesz = Vec::new();
    for &m in &multipliers {
        let shifted = &BivarPoly::term(m.i, m.j, C64::new(1.0, 0.0)) * &h;
        let (val, scale) = riesz_over_table(table, &shifted)?;
        riesz.push(ConditionCheck {
            name: multiplier_name(m),
            residual: val.norm() / scale,
        });
    }

    let g = |i: u32, j: u32| -> Result<C64> {
        table.get(i, j).ok_or(Error::MissingMoment { i, j })
    };
    let g01 = g(0, 1)?;
    let g10 = g(1, 0)?;
    let g02 = g(0, 2)?;
    let g20 = g(2, 0)?;
    let g11 = g(1, 1)?;
    let g12 = g(1, 2)?;
    let g22 = g(2, 2)?;
    let one = C64::new(1.0, 0.0);
    let im = C64::new(0.0, 1.0);
    let re = C64::from;

    let cx = |name: &str, terms: &[(C64, C64)]| {
        let mut val = C64::new(0.0, 0.0);
        let mut scale = 1.0;
        for &(c, v) in terms {
            let t = c * v;
            val += t;
            scale += t.norm();
        }
        ConditionCheck { name: name.into(), residual: val.norm() / scale }
    };
    let rl = |name: &str, terms: &[(f64, f64)]| {
        let mut val = 0.0;
        let mut scale = 1.0;
        for &(c, v) in terms {
            let t = c * v;
            val += t;
            scale += t.abs();
        }
        ConditionCheck { name: name.into(), residual: val.abs() / scale }
    };

    let (a, b) = (params.a(), params.b());
    let entrywise = if params.is_rotated() {
        let (t, u) = (a, b);
        match region {
            CubicRegion::Origin => vec![
                cx("γ01 = 0", &[(one, g01)]),
                cx("γ02 = 0", &[(one, g02)]),
                rl("γ11 = 0", &[(1.0, g11.re)]),
            ],
            CubicRegion::AxisImaginary => vec![
                rl("Re γ01 = Im γ01", &[(1.0, g01.re), (-1.0, g01.im)]),
                cx("γ02 = i·γ11", &[(one, g02), (-im, g11)]),
                cx("γ12 = t·γ01 − i·u·γ10", &[(one, g12), (re(-t), g01), (im * re(u), g10)]),
            ],
            CubicRegion::AxisReal => vec![
                rl("Re γ01 + Im γ01 = 0", &[(1.0, g01.re), (1.0, g01.im)]),
                cx("γ02 = −i·γ11", &[(one, g02), (im, g11)]),
                cx("γ12 = −t·γ01 + i·u·γ10", &[(one, g12), (re(t), g01), (-im * re(u), g10)]),
            ],
            CubicRegion::BothAxes => vec![
                cx("γ12 = i·t·γ10 − u·γ01", &[(one, g12), (-im * re(t), g10), (re(u), g01)]),
                rl("Re γ02 = 0", &[(1.0, g02.re)]),
                cx("γ22 = i·t·γ20 − u·γ11", &[(one, g22), (-im * re(t), g20), (re(u), g11)]),
            ],
            CubicRegion::CircleOnly => vec![
                cx("γ12 = u·γ01", &[(one, g12), (re(-u), g01)]),
                rl("t·γ11 = 2u·Im γ02", &[(t, g11.re), (-2.0 * u, g02.im)]),
                cx("γ22 = u·γ11", &[(one, g22), (re(-u), g11)]),
            ],
            CubicRegion::ImaginaryAndCircle => vec![
                rl(
                    "Re γ12 − Im γ12 = u·(Re γ01 − Im γ01)",
                    &[(1.0, g12.re), (-1.0, g12.im), (-u, g01.re), (u, g01.im)],
                ),
                rl(
                    "γ22 = (t+u)·γ11 − 2u·Im γ02",
                    &[(1.0, g22.re), (-(t + u), g11.re), (2.0 * u, g02.im)],
                ),
            ],
            CubicRegion::RealAndCircle => vec![
                rl(
                    "Re γ12 + Im γ12 = u·(Re γ01 + Im γ01)",
                    &[(1.0, g12.re), (1.0, g12.im), (-u, g01.re), (-u, g01.im)],
                ),
                rl(
                    "γ22 = (u−t)·γ11 + 2u·Im γ02",
                    &[(1.0, g22.re), (-(u - t), g11.re), (-2.0 * u, g02.im)],
                ),
            ],
        }
    } else {
        match region {
            CubicRegion::Origin => vec![
                cx("γ01 = 0", &[(one, g01)]),
                cx("γ02 = 0", &[(one, g02)]),
                rl("γ11 = 0", &[(1.0, g11.re)]),
            ],
            CubicRegion::AxisImaginary => vec![
                rl("Re γ01 = 0", &[(1.0, g01.re)]),
                cx("γ11 + γ02 = 0", &[(one, g11), (one, g02)]),
                cx("γ12 = a·γ01 + b·γ10", &[(one, g12), (re(-a), g01), (re(-b), g10)]),
            ],
            CubicRegion::AxisReal => vec![
                rl("Im γ01 = 0", &[(1.0, g01.im)]),
                cx("γ02 = γ11", &[(one, g02), (-one, g11)]),
                cx("γ12 = −a·γ01 − b·γ10", &[(one, g12), (re(a), g01), (re(b), g10)]),
            ],
            CubicRegion::BothAxes => vec![
                cx("γ12 = −a·γ10 − b·γ01", &[(one, g12), (re(a), g10), (re(b), g01)]),
                rl("Im γ02 = 0", &[(1.0, g02.im)]),
                cx("γ22 = −a·γ20 − b·γ11", &[(one, g22), (re(a), g20), (re(b), g11)]),
            ],
            CubicRegion::CircleOnly => vec![
                cx("γ12 = b·γ01", &[(one, g12), (re(-b), g01)]),
                rl("a·γ11 + 2b·Re γ02 = 0", &[(a, g11.re), (2.0 * b, g02.re)]),
                cx("γ22 = b·γ11", &[(one, g22), (re(-b), g11)]),
            ],
            CubicRegion::ImaginaryAndCircle => vec![
                rl("Re γ12 = b·Re γ01", &[(1.0, g12.re), (-b, g01.re)]),
                rl(
                    "γ22 = 2b·Re γ20 + (a+b)·γ11",
                    &[(1.0, g22.re), (-2.0 * b, g20.re), (-(a + b), g11.re)],
                ),
            ],
            CubicRegion::RealAndCircle => vec![
                rl("Im γ12 = b·Im γ01", &[(1.0, g12.im), (-b, g01.im)]),
                rl(
                    "γ22 = −2b·Re γ20 − (a−b)·γ11",
                    &[(1.0, g22.re), (2.0 * b, g20.re), (a - b, g11.re)],
                ),
            ],
        }
    };

    Ok(ConditionReport { region, h, riesz, entrywise })
}

/// Least-squares search for a column relation in a level `k + 1`
/// moment matrix: expresses the `Z^{k+1}` column in the columns of
/// degree at most `k` and accepts when the relative residual stays
/// within the relation tolerance.
pub fn extract_column_relation(
    m: &MomentMatrix,
    tols: &Tolerances,
) -> Result<Option<ColumnRelation>> {
    let level = m.level();
    if level == 0 {
        return Err(Error::Internal(
            "relation extraction needs a matrix of level at least 1".into(),
        ));
    }
    let k = level - 1;
    let ncols = basis_dim(k);
    let target = Monomial::new(0, k + 1).degree_lex_index();
    let a = m.matrix().columns(0, ncols).into_owned();
    let b: DVector<C64> = m.matrix().column(target).into_owned();
    let b_norm = b.norm();
    if b_norm <= f64::EPSILON * m.matrix().norm().max(1.0) {
        // The Z^{k+1} column vanishes outright.
        return Ok(Some(ColumnRelation::new(k, Vec::new())?));
    }
    let svd = a.clone().svd(true, true);
    let s_max = svd.singular_values.iter().copied().fold(0.0f64, f64::max);
    let x = svd
        .solve(&b, 1e-12 * s_max.max(1.0))
        .map_err(|e| Error::Internal(format!("least squares failed: {e}")))?;
    let residual = (&a * &x - &b).norm() / b_norm;
    if residual > tols.relation {
        return Ok(None);
    }
    let x_max = x.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let drop = crate::tol::COEFF_DROP * (1.0 + x_max);
    let coefficients = x
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > drop)
        .map(|(idx, &c)| (Monomial::from_degree_lex_index(idx), c))
        .collect();
    Ok(Some(ColumnRelation::new(k, coefficients)?))
}

/// Ascending-degree least-squares search for a monic analytic
/// polynomial annihilated by the sequence, used when the
/// characteristic polynomial is neither analytic nor a harmonic
/// cubic. Each candidate is confirmed with the full membership test
/// before being accepted.
fn find_analytic_member(s: &Rdis, cap: u32, tols: &Tolerances) -> Result<UniPoly> {
    for d in 1..=cap {
        let rows = basis_dim(2 * d);
        let cols = d as usize;
        let mut a = DMatrix::<C64>::zeros(rows, cols);
        let mut b = DVector::<C64>::zeros(rows);
        for ri in 0..rows {
            let m = Monomial::from_degree_lex_index(ri);
            for (ci, col) in (0..d).enumerate() {
                a[(ri, ci)] = s.gamma(m.i, m.j + col);
            }
            b[ri] = -s.gamma(m.i, m.j + d);
        }
        // Moment magnitudes grow like R^{i+j}, so unnormalized rows
        // would let the top degrees drown out the rest of the system.
        for ri in 0..rows {
            let norm = (a.row(ri).norm_squared() + b[ri].norm_sqr()).sqrt();
            if norm > 0.0 {
                let inv = C64::new(1.0 / norm, 0.0);
                for ci in 0..cols {
                    a[(ri, ci)] *= inv;
                }
                b[ri] *= inv;
            }
        }
        let svd = a.svd(true, true);
        let s_max = svd.singular_values.iter().copied().fold(0.0f64, f64::max);
        let Ok(x) = svd.solve(&b, 1e-12 * s_max.max(1.0)) else {
            continue;
        };
        let mut coeffs: Vec<C64> = x.iter().copied().collect();
        coeffs.push(C64::new(1.0, 0.0));
        let q = UniPoly::new(coeffs);
        if q.degree() != Some(d as usize) {
            continue;
        }
        if s.is_characteristic(&q.to_bivar(), 2 * d, tols).passes {
            return Ok(q);
        }
    }
    Err(Error::ZeroSetUnavailable(format!(
        "no analytic polynomial of degree up to {cap} is annihilated by the sequence"
    )))
}

/// Check the relation rows of `M(k+1)` and name the worst row on
/// failure.
fn check_relation_rows(
    mk1: &MomentMatrix,
    p: &BivarPoly,
    scale: f64,
    tols: &Tolerances,
) -> Result<()> {
    let v = mk1.apply(p)?;
    let (mut worst_idx, mut worst_abs) = (0usize, 0.0f64);
    for (idx, val) in v.iter().enumerate() {
        if val.norm() > worst_abs {
            worst_abs = val.norm();
            worst_idx = idx;
        }
    }
    let residual = worst_abs / scale;
    if residual > tols.relation {
        let m = Monomial::from_degree_lex_index(worst_idx);
        return Err(Error::RelationViolated { i: m.i, j: m.j, residual });
    }
    Ok(())
}

/// Decide a truncated moment problem given as a degree `2k + 2` table
/// with a column relation for `Z^{k+1}`.
///
/// Pipeline: validate the relation rows inside `M(k+1)`, rebuild the
/// table by recursive extension of its degree `k` block and demand
/// consistency, determine the candidate support from the
/// characteristic polynomial (closed form for harmonic cubics, root
/// finding for analytic relations, an analytic-member search
/// otherwise), apply the closed-form cubic equality certificates and
/// the rank bound, gate on `M(2k)` positive semidefiniteness, then
/// construct through [`solve_rdis`] and verify against the input.
pub fn solve_truncated(
    table: &MomentTable,
    relation: &ColumnRelation,
    tols: &Tolerances,
) -> Result<SolveReport> {
    let k = relation.k();
    let need = 2 * k + 2;
    if table.degree() < need {
        return Err(Error::InsufficientDegree {
            have: table.degree() as usize,
            need: need as usize,
        });
    }
    let p = relation.charpoly();

    let mk1 = MomentMatrix::build(table, k + 1)?;
    let p_norm: f64 = p.terms().map(|(_, c)| c.norm()).sum();
    let scale = (1.0 + table.max_abs()) * p_norm.max(1.0);
    check_relation_rows(&mk1, &p, scale, tols)?;

    let block = InitialBlock::from_fn(k, |i, j| {
        table.get(i, j).expect("block entries lie inside the table")
    })?;
    let s = Rdis::new(block, p.clone())?;
    for ((i, j), w) in table.upper_entries() {
        let residual = (s.gamma(i, j) - w).norm() / (1.0 + w.norm());
        if residual > tols.relation {
            return Err(Error::InconsistentExtension { i, j, residual });
        }
    }

    let mut diags = Diagnostics::default();
    let cubic = CubicParams::from_charpoly(&p);
    let zeros: Option<ZeroSet> = if let Some(params) = &cubic {
        Some(harmonic_cubic_zeros(params))
    } else if let Ok(q) = UniPoly::from_bivar(&p) {
        Some(analytic_roots(&q, tols)?)
    } else {
        match find_analytic_member(&s, (k + 2) * (k + 2), tols) {
            Ok(q) => Some(analytic_roots(&q, tols)?),
            Err(Error::ZeroSetUnavailable(_)) => None,
            Err(e) => return Err(e),
        }
    };
    diags.zero_set = zeros.clone();

    // Closed-form equalities are necessary for solvability, so a
    // clear violation is the most interpretable certificate. Residuals
    // inside the indeterminate band are left to the matrix tests.
    if let Some(params) = &cubic {
        let report = check_cubic_conditions(table, params)?;
        let worst = report.worst().cloned();
        let worst_resid = report.max_riesz_residual().max(report.max_entrywise_residual());
        diags.condition_report = Some(report.clone());
        if worst_resid > tols.indeterminate {
            let check = worst.expect("cubic reports are never empty");
            let ft = FailedTest::ConditionViolated {
                region: report.region,
                condition: check.name,
                residual: check.residual,
            };
            return Ok(SolveReport::infeasible(ft, diags));
        }
    }

    // No measure supported in the zero set can generate a moment
    // matrix of higher rank than the number of available points.
    if let Some(zs) = &zeros {
        let rep = mk1.psd_check(tols);
        diags.psd_reports.push(rep);
        if rep.rank > zs.count() {
            let ft = FailedTest::RankExceedsVariety {
                level: k + 1,
                rank: rep.rank,
                variety: zs.count(),
            };
            return Ok(SolveReport::infeasible(ft, diags));
        }
    }

    let scan = psd_scan(&s, 2 * k, tols)?;
    diags.psd_reports = merge_reports(scan.reports, std::mem::take(&mut diags.psd_reports));
    if let Some(fail) = scan.failure {
        let ft = FailedTest::NotPsd {
            level: fail.level,
            min_eigenvalue: fail.min_eigenvalue,
        };
        return Ok(SolveReport::infeasible(ft, diags));
    }

    let Some(zs) = zeros else {
        return Err(Error::ZeroSetUnavailable(
            "the characteristic polynomial is neither analytic nor a harmonic cubic and no \
             analytic member was found; supply a zero set through solve_rdis"
                .into(),
        ));
    };
    let mut rep = solve_rdis(&s, &zs, tols)?;
    rep.diagnostics.condition_report = diags.condition_report.take();
    rep.diagnostics.psd_reports = merge_reports(
        diags.psd_reports,
        std::mem::take(&mut rep.diagnostics.psd_reports),
    );
    if rep.status == SolveStatus::Solved {
        let measure = rep.measure.as_ref().expect("solved reports carry a measure");
        let residual = verify_measure(measure, table, table.degree())?;
        rep.diagnostics.verify_residual = Some(residual);
        if residual > tols.verify {
            rep.status = SolveStatus::Indeterminate;
            rep.failed_test = Some(FailedTest::VerificationFailed { residual });
            rep.measure = None;
        }
    }
    Ok(rep)
}

/// Batch solve, dispatching through the data-parallel map.
pub fn solve_truncated_batch(
    jobs: Vec<(MomentTable, ColumnRelation)>,
    tols: &Tolerances,
) -> Vec<Result<SolveReport>> {
    let tols = *tols;
    par::map(jobs, move |(table, relation)| {
        solve_truncated(&table, &relation, &tols)
    })
}

/// Sequential twin of [`solve_truncated_batch`] for benchmarking.
pub fn solve_truncated_batch_seq(
    jobs: Vec<(MomentTable, ColumnRelation)>,
    tols: &Tolerances,
) -> Vec<Result<SolveReport>> {
    let tols = *tols;
    par::map_seq(jobs, move |(table, relation)| {
        solve_truncated(&table, &relation, &tols)
    })
}
