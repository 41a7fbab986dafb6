use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid ballot: {0}")]
    InvalidBallot(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("score assignment is not a ballot: {0}")]
    NotABallot(String),

    #[error("profile is missing manipulator ballots")]
    MissingManipulators,

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("{z} candidates exceeds the enumeration limit of {limit}")]
    EnumerationLimit { z: usize, limit: usize },

    #[error("invalid 2NMTS instance: {0}")]
    InvalidInstance(String),

    #[error("RN3DM side condition violated: {0}")]
    SideCondition(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("construction failed at check `{check}`: {detail}")]
    Construction { check: String, detail: String },

    #[error("N2 vote has duplicate score {score} at {first} and {second}")]
    N2Collision { score: i64, first: String, second: String },

    #[error("virtual scores do not dominate the available scores: {0}")]
    Domination(String),

    #[error("invalid solution: {0}")]
    InvalidSolution(String),

    #[error("manipulator layout mismatch: {0}")]
    Layout(String),

    #[error("no p up to {cap} passes validation")]
    PCapReached { cap: u64 },

    #[error("no reduction for this weight and instance: {0}")]
    Regime(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
