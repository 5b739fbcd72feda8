use thiserror::Error;

/// Errors shared across the crate. Solver *outcomes* (infeasible,
/// indeterminate) are not errors; they are reported through
/// [`crate::solver::SolveStatus`]. An `Error` means the inputs were
/// malformed or an internal contract was broken.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A characteristic polynomial must be monic in `z^d` with every
    /// other monomial of total degree at most `d - 1`.
    #[error("malformed characteristic polynomial: {0}")]
    MalformedCharPoly(String),

    /// The initial block of a recursive sequence was incomplete or not
    /// Hermitian (`γ_ji = conj(γ_ij)`), or `γ_00` was not real positive.
    #[error("invalid initial block: {0}")]
    InvalidInitialBlock(String),

    /// A moment needed to assemble a matrix or residual is absent from
    /// the truncated table.
    #[error("missing moment γ_{{{i},{j}}}")]
    MissingMoment { i: u32, j: u32 },

    /// A polynomial argument exceeds the degree a moment matrix of this
    /// level can pair against.
    #[error("polynomial degree {degree} exceeds matrix level {level}")]
    DegreeTooHigh { degree: usize, level: usize },

    /// Flat-extension tests compare levels `n` and `n + 1` only.
    #[error("expected moment matrices of consecutive levels, got {lo} and {hi}")]
    LevelMismatch { lo: usize, hi: usize },

    /// The zero polynomial has no degree, no roots, and no top block.
    #[error("operation undefined for the zero polynomial")]
    ZeroPolynomial,

    /// Root finding was asked for a constant (degree zero) polynomial.
    #[error("polynomial has no roots: degree is zero")]
    ConstantPolynomial,

    /// A polynomial expected to be analytic (no conj(z) monomials) was not.
    #[error("polynomial is not analytic: contains conj(z) monomial {0}")]
    NotAnalytic(String),

    /// Lagrange interpolation needs pairwise distinct nodes.
    #[error("duplicate interpolation nodes at distance {dist:.3e}")]
    DuplicateRoots { dist: f64 },

    /// A zero set was required but empty.
    #[error("empty zero set")]
    EmptyZeroSet,

    /// The candidate polynomial failed the characteristic-membership
    /// test that its caller requires unconditionally.
    #[error("polynomial is not characteristic: relative residual {residual:.3e}")]
    NotCharacteristic { residual: f64 },

    /// The declared column relation does not hold in the moment matrix
    /// assembled from the table.
    #[error("column relation violated at row ({i},{j}): residual {residual:.3e}")]
    RelationViolated { i: u32, j: u32, residual: f64 },

    /// The table disagrees with the sequence its own relation generates.
    #[error("table inconsistent with recursive extension at γ_{{{i},{j}}}: residual {residual:.3e}")]
    InconsistentExtension { i: u32, j: u32, residual: f64 },

    /// The table does not reach the degree the requested operation needs.
    #[error("table of degree {have} is insufficient: need degree {need}")]
    InsufficientDegree { have: usize, need: usize },

    /// A constructed weight fell below the positivity floor, which the
    /// underlying theorem rules out; the data is numerically degenerate.
    #[error("atom weight {weight:.3e} below floor {floor:.3e}")]
    WeightBelowFloor { weight: f64, floor: f64 },

    /// An atomic measure must have strictly positive weights and
    /// pairwise distinct atoms.
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// Zero set required for this relation shape but not derivable.
    #[error("zero set unavailable: {0}")]
    ZeroSetUnavailable(String),

    /// Internal invariant broken; indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
