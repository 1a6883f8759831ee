use std::fmt;

use crate::worldmodel::fmt_real;

use super::node::Status;

#[derive(Clone, Debug, PartialEq)]
pub struct TickRecord {
    pub k: u64,
    /// Host that ticked the node, for merged distributed traces.
    pub host: Option<String>,
    pub node: String,
    pub status: Status,
    pub t: f64,
}

impl TickRecord {
    /// `host/node` when the record carries a host.
    pub fn qualified_node(&self) -> String {
        match &self.host {
            Some(h) => format!("{h}/{}", self.node),
            None => self.node.clone(),
        }
    }
}

impl fmt::Display for TickRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "k={} node={} status={} t={}",
            self.k,
            self.qualified_node(),
            self.status,
            fmt_real(self.t)
        )
    }
}

/// Ordered tick records. Within a tick, nodes are recorded when they
/// return, so the root's record closes each tick.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TickTrace {
    pub records: Vec<TickRecord>,
}

impl TickTrace {
    pub fn new() -> Self {
        TickTrace::default()
    }

    pub fn push(&mut self, record: TickRecord) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn for_node<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a TickRecord> + 'a {
        self.records.iter().filter(move |r| r.node == node)
    }

    /// Number of ticks the node received.
    pub fn ticks_of(&self, node: &str) -> usize {
        self.for_node(node).count()
    }

    /// Index of the first record for `node`, if any.
    pub fn first_index(&self, node: &str) -> Option<usize> {
        self.records.iter().position(|r| r.node == node)
    }

    pub fn last(&self) -> Option<&TickRecord> {
        self.records.last()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}

/// One record per line.
impl fmt::Display for TickTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.records {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}
