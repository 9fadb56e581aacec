use thiserror::Error;

use crate::model::{Violation, WorldId};
use crate::syntax::{Agent, PropFormula};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown world `{0}`")]
    UnknownWorld(WorldId),

    #[error("unknown atom `{0}`")]
    UnknownAtom(String),

    #[error("`{0}` is not a derived formula of the explanation")]
    NodeNotDerived(PropFormula),

    #[error("invalid explanation: {0}")]
    InvalidExplanation(String),

    #[error("malformed feedback at node {path:?}: {reason}")]
    MalformedFeedback { path: Vec<usize>, reason: String },

    #[error("update by an empty set of worlds")]
    EmptyUpdate,

    #[error("untruthful feedback on `{formula}`: actual world {actual} would be removed")]
    UntruthfulFeedback { formula: PropFormula, actual: WorldId },

    #[error("agent {0} cannot hear this kind of update")]
    UnsupportedUpdate(Agent),

    #[error("model is not well-formed: {}", list(.0))]
    InvalidModel(Vec<Violation>),

    #[error("update produced an ill-formed model: {}", list(.0))]
    BrokenInvariant(Vec<Violation>),

    #[error("transcript does not match the model: {0}")]
    TraceMismatch(String),

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("{0}")]
    Document(String),

    #[error("driver failure: {0}")]
    Driver(String),
}

fn list(vs: &[Violation]) -> String {
    vs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
