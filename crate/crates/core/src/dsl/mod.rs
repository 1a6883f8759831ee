//! The `.btw` text format: action stubs, skills, trees, goals and
//! deployments.
//!
//! ```text
//! document   := item*
//! item       := action | skill | tree | goal | deployment
//! action     := "action" IDENT "(" [IDENT ":" type ("," IDENT ":" type)*] ")"
//! skill      := "skill" IDENT "{" field* "}"
//! field      := ("pre" | "inv" | "post") ":" STRING
//!             | "action" ":" IDENT | "priority" ":" INT
//!             | "runs_on" ":" IDENT "." IDENT
//!             | "param" IDENT ":" type ("in" | "out") ["->" IDENT]
//! tree       := "tree" IDENT "{" node "}"
//! node       := form ["@" STRING] ["{" node* "}"]
//! form       := "sequence" | "fallback" | "sequence_mem"
//!             | "cond" STRING
//!             | "action" IDENT [args] ["map" "(" IDENT "->" IDENT ("," ...)* ")"]
//!             | "skill" IDENT [args] ["refine" "(" ("pre" | "inv") ("," ...)* ")"]
//!             | "lookup" "post" "=" STRING
//!             | "remote" IDENT "." IDENT
//! args       := "(" [IDENT "=" lit ("," IDENT "=" lit)*] ")"
//! goal       := "goal" IDENT "{" (STRING [","])* "}"
//! deployment := "deployment" IDENT "{" (host | link)* "}"
//! host       := "host" IDENT "{" hostfield* "}"
//! hostfield  := "tree" ":" IDENT | "clock" NUM NUM
//!             | "world" "{" (IDENT ":" type "=" lit ["[" (IDENT | STRING) "]"])* "}"
//!             | "port" IDENT ":" type ("in" | "out") "at" STRING "var" IDENT
//!             | "inject" "at" INT "{" (IDENT "=" lit [","])* "}"
//! link       := "link" IDENT "." IDENT "->" IDENT "." IDENT
//! type       := "bool" | "int" | "real" | "string" | "enum"
//! lit        := "true" | "false" | NUM | STRING | IDENT
//! ```
//!
//! Conditions are quoted strings in the condition grammar; `#` starts a
//! comment. Nodes without `@"id"` get `parent/index` ids (the tree name at
//! the root, the skill name for skill nodes).

pub mod ast;
mod lexer;
mod lower;
mod parser;
mod printer;

use std::fmt;

use thiserror::Error;

pub use ast::{Document, Item, Pos};
pub use lower::{Program, SkillResolver};
pub use printer::{default_id, print_document, tree_decl};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub pos: Pos,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum DslError {
    #[error("{line}:{col}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
        found: String,
    },
    #[error("{}", join(.0))]
    Resolution(Vec<Diagnostic>),
}

fn join(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

/// Parses `text` and checks that every reference resolves.
pub fn parse_document(text: &str) -> Result<Document, DslError> {
    let doc = parser::parse(text)?;
    lower::lower(&doc)?;
    Ok(doc)
}

/// Parses without resolving references.
pub fn parse_syntax(text: &str) -> Result<Document, DslError> {
    parser::parse(text)
}

/// Resolves a parsed document into runnable structures.
pub fn lower(doc: &Document) -> Result<Program, DslError> {
    lower::lower(doc)
}

/// Parses and resolves in one step.
pub fn load(text: &str) -> Result<(Document, Program), DslError> {
    let doc = parser::parse(text)?;
    let program = lower::lower(&doc)?;
    Ok((doc, program))
}
