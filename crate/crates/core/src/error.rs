//! Crate-wide error type.

/// Errors produced by instance validation, stability search, and the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("instance document is missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("cost {index} must be positive (got {value})")]
    NonPositiveCost { index: usize, value: f64 },
    #[error("alpha must lie in [-1, 1] (got {0})")]
    AlphaOutOfRange(f64),
    #[error("sigma_sq must be positive (got {0})")]
    NonPositiveSigma(f64),
    #[error("instance must contain at least one player")]
    NoPlayers,
    #[error("at least two players are required for this operation (got {0})")]
    TooFewPlayers(usize),
    #[error("no estimator for empty coalition")]
    EmptyCoalition,
    #[error("coalitions of size 1 are invalid; a non-trivial coalition has at least two members")]
    SingletonCoalition,
    #[error("player {player} is outside this instance (n = {n})")]
    PlayerOutOfRange { player: usize, n: usize },
    #[error("privacy profile does not match the coalition at player {0}")]
    ProfileMismatch(usize),
    #[error("privacy level for player {player} must be positive (got {value})")]
    NonPositiveEpsilon { player: usize, value: f64 },
    #[error("laplace scale must be positive (got {0})")]
    NonPositiveScale(f64),
    #[error("uniform draw must lie in (-0.5, 0.5) (got {0})")]
    UniformDrawOutOfRange(f64),
    #[error("coalition size {k} exceeds player count {n}")]
    SizeExceedsPlayers { k: usize, n: usize },
    #[error("coalition size must be at least 2 (got {0})")]
    SizeTooSmall(usize),
    #[error(
        "exhaustive enumeration is capped at {max_n} players (instance has {n}); \
         use the downward-closed scan for larger instances"
    )]
    EnumerationTooLarge { n: usize, max_n: usize },
    #[error("completeness guarantee requires well-separated costs (c_i >= 2 c_(i-1))")]
    WellSeparationRequired,
    #[error("cannot enforce well-separated costs within the requested cost range")]
    WellSeparationInfeasible,
    #[error("start coalition is not robust-stable at any variance level")]
    NotRobustAtAnySigma,
    #[error("bound applies only for alpha > 1/2 (got {0})")]
    BoundRequiresHighAlpha(f64),
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error("instance too large for exact stable-set computation (n = {n}) and no structural fast path applies")]
    NoFastPath { n: usize },
    #[error("invalid instance document: {0}")]
    Document(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
