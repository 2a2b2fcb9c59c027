use thiserror::Error;

use crate::oml::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero ray")]
    ZeroRay,

    #[error("ray has {found} entries, expected {expected}")]
    RayLength { expected: usize, found: usize },

    #[error("incomplete context: maximal orthogonal set {clique:?} has {size} rays in dimension {dim}")]
    IncompleteContext {
        clique: Vec<String>,
        size: usize,
        dim: usize,
    },

    #[error("no maximal orthogonal set of size {0} exists")]
    NoContext(usize),

    #[error("illegal pasting: blocks {first} and {second} share {shared} atoms")]
    IllegalPasting {
        first: usize,
        second: usize,
        shared: usize,
    },

    #[error("block {0} must list at least two distinct atoms")]
    DegenerateBlock(usize),

    #[error("structure is not a valid orthomodular poset: {}", summarize(.0))]
    InvalidOml(Vec<Violation>),

    #[error("instance too large: {what} reached {reached} (budget {budget})")]
    TooLarge {
        what: &'static str,
        reached: usize,
        budget: usize,
    },

    #[error("daseinisation undefined for element {element} in context {context}")]
    DaseinisationUndefined { element: String, context: String },

    #[error("Klein presheaf undefined here: {0}")]
    KleinUndefined(String),

    #[error("Z2 states defined only for 3-atom blocks (block {block} has {arity} atoms)")]
    Z2Arity { block: usize, arity: usize },

    #[error("not a measure: witness {0} and {1}")]
    NotAMeasure(String, String),

    #[error("not induced by a state: {0}")]
    NotInducedByState(String),

    #[error("operators equal")]
    OperatorsEqual,

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("operation requires matrix mode")]
    NeedsMatrixMode,

    #[error("not a subobject: {0}")]
    NotASubobject(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn summarize(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.invariant.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}
