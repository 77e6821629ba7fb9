use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("line {line}: expected 3 tab-separated fields, found {found}")]
    MalformedLine { line: usize, found: usize },
    #[error("no triples in input")]
    EmptyInput,
    #[error("store is already augmented with reverse relations")]
    AlreadyAugmented,
    #[error("reverse relation name {0:?} collides with an existing relation")]
    ReverseNameCollision(String),
    #[error("{kind} id {id} out of range (size {size})")]
    IdOutOfRange {
        kind: &'static str,
        id: usize,
        size: usize,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("requested {requested} candidates but only {available} are available")]
    NotEnoughCandidates { requested: usize, available: usize },
    #[error("candidate list is empty")]
    EmptyCandidates,
    #[error("non-finite loss {loss} at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize, loss: f64 },
}

impl Error {
    pub(crate) fn entity(id: usize, size: usize) -> Self {
        Error::IdOutOfRange {
            kind: "entity",
            id,
            size,
        }
    }

    pub(crate) fn relation(id: usize, size: usize) -> Self {
        Error::IdOutOfRange {
            kind: "relation",
            id,
            size,
        }
    }
}
