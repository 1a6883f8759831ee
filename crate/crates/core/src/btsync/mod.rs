//! Tick-synchronization protocol between a parent node and a remote child
//! subtree, modelled as a pair of IO-automata, plus the consistency
//! checkers for external (pairwise) and internal (coordinator) composition.

mod check;
pub(crate) mod graph;
mod internal;
mod monitor;
mod product;
mod role;

use thiserror::Error;

pub use check::{check_consistency, replay, ConsistencyReport, Finding, FindingKind};
pub use internal::{check_internal_composition, check_internal_composition_with, InternalOptions};
pub use monitor::ConformanceMonitor;
pub use product::{compose, describe_pair, Move, Overflow, PairState, ProtocolAutomaton};
pub use role::{
    builtin_roles, parse_role_pair, parse_roles, Io, RoleAutomaton, RoleKind, RoleState, StatusSym, Symbol,
    Transition, BUILTIN_ROLES,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("malformed role: {0}")]
    Malformed(String),
    #[error("role `{role}` has two transitions on {symbol} from state `{state}`")]
    NonDeterministic { role: String, state: String, symbol: String },
    #[error("role `{0}` is used more than once")]
    RoleReuse(String),
    #[error("coordinator refers to unknown role `{0}`")]
    UnknownRole(String),
    #[error("coordinator node `{0}` is not a sequence, fallback, sequence_mem or remote leaf")]
    UnsupportedNode(String),
    #[error("exploration exceeded {0} states")]
    StateSpaceTooLarge(usize),
    #[error("link {link}, step {step}: {message}")]
    Conformance { link: String, step: usize, message: String },
}

/// Protocol mutants shipped for regression testing of the checker, as
/// `(name, role text)`.
pub const MUTANTS: &[(&str, &str)] = &[
    ("double_tick", include_str!("../../protocols/mutant_double_tick.roles")),
    ("silent_child", include_str!("../../protocols/mutant_silent_child.roles")),
    ("deaf_child", include_str!("../../protocols/mutant_deaf_child.roles")),
    ("wrong_ack", include_str!("../../protocols/mutant_wrong_ack.roles")),
    ("eager_halt", include_str!("../../protocols/mutant_eager_halt.roles")),
    ("endless_poll", include_str!("../../protocols/mutant_endless_poll.roles")),
];
