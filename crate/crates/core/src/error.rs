use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group data: {0}")]
    InvalidGroup(String),
    #[error("elements belong to different groups")]
    MismatchedOwner,
    #[error("unknown element label `{0}`")]
    UnknownLabel(String),
    #[error("malformed rational `{0}`")]
    BadRational(String),
    #[error("closure exceeds size bound {0}")]
    SizeBound(usize),
    #[error("subgroup is not representable: {0}")]
    NotRepresentable(String),
    #[error("normalizer tower did not stabilize within {0} steps")]
    TowerUnstable(usize),
    #[error("not a subgroup: {0}")]
    NotSubgroup(String),
    #[error("word is not in the domain: {0}")]
    NotInDomain(String),
    #[error("invalid locality data: {0}")]
    InvalidLocality(String),
    #[error("invalid transporter data: {0}")]
    InvalidTransporter(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("search budget of {0} exhausted")]
    Budget(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
