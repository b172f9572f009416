use thiserror::Error;

/// Errors raised by the library.
///
/// The variants split into input-domain problems (bad masses, orderings,
/// parameters) and numerical failures (quadrature, eigensolver, projection
/// rank). Front ends map the two groups onto different exit codes through
/// [`Error::is_numerical`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mass {value} at position {index}: masses must be positive and finite")]
    InvalidMass { index: usize, value: f64 },

    #[error("expected {expected} masses, got {got}")]
    MassCount { expected: usize, got: usize },

    #[error("invalid ordering {0:?}: expected a permutation of 1..=4")]
    InvalidOrdering(Vec<usize>),

    #[error("unknown Coxeter group `{0}`")]
    UnknownGroup(String),

    #[error("{0}")]
    Unsupported(String),

    #[error(
        "mass ratio r = m2/m1 = {ratio} is infeasible for {group}: denominator {denominator:.3e} \
         at step {step}; feasible ratios lie in (0, {upper})"
    )]
    InfeasibleParameter {
        group: String,
        ratio: f64,
        step: usize,
        denominator: f64,
        upper: f64,
    },

    #[error("no feasible ratio in the requested grid for {group}; feasible ratios lie in (0, {upper})")]
    EmptyFamily { group: String, upper: f64 },

    #[error("degenerate spherical triangle: {0}")]
    DegenerateGeometry(String),

    #[error("simple roots do not generate a finite Coxeter group: {0}")]
    NonCoxeterRoots(String),

    #[error("character sum for lambda = {lambda} is not an integer: {value}")]
    CharacterInconsistency { lambda: u32, value: f64 },

    #[error("found {found} independent anti-invariant states at lambda = {lambda}, expected {expected}")]
    RankDeficiency { lambda: u32, found: usize, expected: usize },

    #[error("sector vertex leaves the projection hemisphere (cos(theta) = {cos_theta:.3e})")]
    ProjectionDomain { cos_theta: f64 },

    #[error("point ({s}, {t}) lies outside the reference triangle")]
    OutsideTriangle { s: f64, t: f64 },

    #[error("overlap matrix is not positive definite at quadrature order {order}; increase the quadrature order")]
    QuadratureResolution { order: usize },

    #[error("eigensolver failed to converge (overlap condition estimate {condition:.3e})")]
    EigenSolver { condition: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    /// True for failures of the numerical machinery as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::CharacterInconsistency { .. }
                | Error::RankDeficiency { .. }
                | Error::QuadratureResolution { .. }
                | Error::EigenSolver { .. }
                | Error::DegenerateGeometry(_)
                | Error::NonCoxeterRoots(_)
                | Error::ProjectionDomain { .. }
                | Error::InsufficientData(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
