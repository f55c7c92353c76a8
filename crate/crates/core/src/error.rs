use thiserror::Error;

use crate::combinatorics::Label;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CombinatoricsError {
    #[error("player count must be at least 1")]
    ZeroPlayers,
    #[error("coalition size {zeta} outside [1, {n}]")]
    CoalitionSize { zeta: usize, n: usize },
    #[error("deviator counts alpha={alpha}, beta={beta} exceed coalition size {zeta}")]
    DeviatorCounts {
        alpha: usize,
        beta: usize,
        zeta: usize,
    },
    #[error("label {label} uses more than {n} players")]
    LabelTooLarge { label: Label, n: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("solver certificate check failed: {0}")]
    Certificate(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("invalid rational {input:?}: {reason}")]
    Rational { input: String, reason: String },
    #[error("invalid welfare specification: {0}")]
    Welfare(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CurveError {
    #[error("curve must have at least two entries (n >= 1), got {0}")]
    TooShort(usize),
    #[error("curve value at 0 must be 0, got {0}")]
    NonZeroOrigin(String),
    #[error("welfare value w({index}) = {value} must be positive")]
    NonPositive { index: usize, value: String },
    #[error("utility value u({index}) = {value} must be non-negative")]
    Negative { index: usize, value: String },
    #[error("curve has {got} entries, expected {expected} for {players} players")]
    Length {
        got: usize,
        expected: usize,
        players: usize,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundsError {
    #[error("coalition size k={k} outside [1, {n}]")]
    CoalitionSize { k: usize, n: usize },
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Combinatorics(#[from] CombinatoricsError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("linear program is unbounded: invalid welfare curve")]
    Unbounded,
    #[error("linear program is infeasible")]
    Infeasible,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("joint action has {got} entries for {players} players")]
    ActionLength { got: usize, players: usize },
    #[error("player {player} has no action {action} (only {available})")]
    ActionIndex {
        player: usize,
        action: usize,
        available: usize,
    },
    #[error("coalition must be a non-empty set of distinct players below {players}")]
    Coalition { players: usize },
    #[error("coalition size k={k} outside [1, {n}]")]
    CoalitionSize { k: usize, n: usize },
    #[error("instance too large for brute force: {required} {what} exceeds cap {cap}")]
    TooLarge {
        what: &'static str,
        required: u128,
        cap: u128,
    },
    #[error("malformed game file: {0}")]
    Format(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorstCaseError {
    #[error(
        "ring construction for n={n} needs {resources} resources; only n <= {max_players} is supported"
    )]
    SizeGuard {
        n: usize,
        resources: u128,
        max_players: usize,
    },
    #[error("theta is not feasible for the primal program: {0}")]
    InfeasibleTheta(String),
    #[error("tightness check failed: {0}")]
    CheckFailed(String),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    SizeGuard,
    Internal,
}

impl BoundsError {
    pub fn class(&self) -> ErrorClass {
        match self {
            BoundsError::CoalitionSize { .. }
            | BoundsError::Curve(_)
            | BoundsError::Combinatorics(_) => ErrorClass::Config,
            BoundsError::Unbounded | BoundsError::Infeasible => ErrorClass::Config,
            BoundsError::Lp(_) => ErrorClass::Internal,
        }
    }
}

impl GameError {
    pub fn class(&self) -> ErrorClass {
        match self {
            GameError::TooLarge { .. } => ErrorClass::SizeGuard,
            _ => ErrorClass::Config,
        }
    }
}

impl WorstCaseError {
    pub fn class(&self) -> ErrorClass {
        match self {
            WorstCaseError::SizeGuard { .. } => ErrorClass::SizeGuard,
            WorstCaseError::InfeasibleTheta(_) => ErrorClass::Config,
            WorstCaseError::CheckFailed(_) => ErrorClass::Internal,
            WorstCaseError::Bounds(e) => e.class(),
            WorstCaseError::Game(e) => e.class(),
        }
    }
}
