//! Centralized numeric tolerances.
//!
//! Every comparison in the crate is relative to a problem-dependent
//! scale (largest coefficient, largest eigenvalue, largest moment), so
//! the constants here are dimensionless ratios. They are grouped in one
//! struct so the command line can override the decision thresholds
//! uniformly while tests pin the defaults.

/// Decision thresholds used by the solvers and checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// A polynomial coefficient `c` is dropped when
    /// `|c| < coeff_drop * max(largest coefficient, 1)`.
    pub coeff_drop: f64,
    /// Characteristic membership: a Riesz residual passes when it is at
    /// most `membership * (1 + largest moment magnitude touched)`.
    pub membership: f64,
    /// Upper edge of the indeterminate band: membership residuals in
    /// `(membership, indeterminate]` are neither accepted nor used as
    /// infeasibility certificates.
    pub indeterminate: f64,
    /// An eigenvalue `λ` counts as nonnegative when
    /// `λ >= -psd * max(1, largest eigenvalue magnitude)`; the same
    /// threshold separates rank from kernel.
    pub psd: f64,
    /// Two roots closer than `dedup * (1 + largest root magnitude)`
    /// are merged.
    pub root_dedup: f64,
    /// Column relation and extension consistency residuals, relative to
    /// `1 + largest moment magnitude` in the table.
    pub relation: f64,
    /// A reconstructed measure is accepted when the largest
    /// reintegration residual `|Σ c conj(λ)^i λ^j - γ_ij| / (1 + |γ_ij|)`
    /// is at most this.
    pub verify: f64,
    /// Weights below `weight_floor * total mass` break the strict
    /// positivity the representation theorem guarantees.
    pub weight_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            coeff_drop: 1e-13,
            membership: 1e-8,
            indeterminate: 1e-5,
            psd: 1e-9,
            root_dedup: 1e-7,
            relation: 1e-8,
            verify: 1e-7,
            weight_floor: 1e-10,
        }
    }
}

impl Tolerances {
    /// Uniform override used by the command line: sets the decision
    /// thresholds (membership, PSD, relation, verification) to `t` and
    /// keeps the indeterminate band three decades above membership.
    pub fn with_base(t: f64) -> Self {
        Tolerances {
            membership: t,
            indeterminate: t * 1e3,
            psd: t,
            relation: t,
            verify: t,
            ..Tolerances::default()
        }
    }
}

/// Coefficient drop ratio, also used by constructors that have no
/// `Tolerances` in scope.
pub const COEFF_DROP: f64 = 1e-13;
