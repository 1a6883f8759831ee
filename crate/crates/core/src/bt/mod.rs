//! Behavior-tree nodes and their tick semantics.
//!
//! Sequence hands control to the next child only when the current one
//! succeeds; Fallback moves on only when the current one fails. Both are
//! reactive: every tick restarts from the leftmost child, and a running
//! subtree that loses control is halted before the tick returns.

mod action;
mod engine;
mod fts;
mod node;
mod trace;

use thiserror::Error;

use crate::worldmodel::WorldError;

pub use action::{ActionCatalog, ActionImpl, ActionRegistry, AssignAction, Step};
pub use engine::{halt, tick, Executor, LookupResolver, RemoteTicker, TickContext};
pub use fts::{check_fts, FtsReport, FtsViolation, MAX_FTS_STATES};
pub use node::{NodeKind, Params, Status, TreeNode};
pub use trace::{TickRecord, TickTrace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BtError {
    #[error("no action implementation bound to `{0}`")]
    UnboundAction(String),
    #[error("remote leaf `{0}` ticked without a runtime")]
    UnboundRemote(String),
    #[error("missing parameter `{0}`")]
    MissingParam(String),
    #[error("condition in node `{node}`: {source}")]
    Condition { node: String, source: WorldError },
    #[error("world update from node `{node}`: {source}")]
    Update { node: String, source: WorldError },
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("remote execution: {0}")]
    Remote(String),
    #[error("bound must be at least 1")]
    InvalidBound,
    #[error("state space of {0} states exceeds the limit")]
    StateSpaceTooLarge(usize),
}
