//! Typed world state (the blackboard) and the condition language
//! evaluated against it.

mod condition;
mod parse;
mod state;

use thiserror::Error;

pub use condition::{CmpOp, Condition, Literal, Operand, REAL_EPS};
pub use parse::parse_condition;
pub use state::{fmt_real, Value, ValueType, WorldState};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum WorldError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("type mismatch on `{variable}`: expected {expected}, got {actual}")]
    TypeMismatch {
        variable: String,
        expected: ValueType,
        actual: ValueType,
    },
    #[error("operator {op} not defined for {ty} variable `{variable}`")]
    UnsupportedOperator {
        variable: String,
        op: &'static str,
        ty: ValueType,
    },
    #[error("syntax error at offset {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },
}
