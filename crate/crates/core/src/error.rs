use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("bad rational literal {0:?}")]
    BadRational(String),
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("unknown node id {0:?}")]
    UnknownNode(String),
    #[error("self-loop on node {0:?}")]
    SelfLoop(String),
    #[error("parallel arc {0:?} -> {1:?}")]
    ParallelArc(String, String),
    #[error("cycle through node {0:?}")]
    Cycle(String),
    #[error("node {0:?} is a source and must have no incoming arcs")]
    SourceHasInflow(String),
    #[error("node {0:?} is a sink and must have no outgoing arcs")]
    SinkHasOutflow(String),
    #[error("node {0:?} needs at least one incoming and one outgoing arc")]
    Dangling(String),
    #[error("{0}")]
    BadParameter(String),
    #[error("demand {demand} at sink {sink:?} must exceed cost {cost} at source {origin:?}")]
    DemandNotAboveCost {
        sink: String,
        demand: String,
        origin: String,
        cost: String,
    },
    #[error("operation needs a single source and a single sink")]
    NotSingleTerminal,
    #[error("network is not series-parallel (reduction stuck at {0:?})")]
    NotSeriesParallel(Vec<String>),
    #[error("infeasible or degenerate input: {0}")]
    Infeasible(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

/// Coarse error classes, used by the command line to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    InvalidNetwork,
    NotSeriesParallel,
    Infeasible,
    Invariant,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::NotSeriesParallel(_) => ErrorClass::NotSeriesParallel,
            Error::Infeasible(_)
            | Error::NotSingleTerminal
            | Error::BadParameter(_)
            | Error::DemandNotAboveCost { .. } => ErrorClass::Infeasible,
            Error::Invariant(_) => ErrorClass::Invariant,
            _ => ErrorClass::InvalidNetwork,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
