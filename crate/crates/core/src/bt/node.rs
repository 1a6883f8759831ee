use std::collections::{BTreeMap, HashSet};
use std::fmt;

use crate::worldmodel::{Condition, Value};

use super::BtError;

/// Feedback of a tick.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Running,
    Success,
    Failure,
}

impl Status {
    pub fn letter(self) -> char {
        match self {
            Status::Running => 'R',
            Status::Success => 'S',
            Status::Failure => 'F',
        }
    }

    pub fn from_letter(c: char) -> Option<Status> {
        match c {
            'R' => Some(Status::Running),
            'S' => Some(Status::Success),
            'F' => Some(Status::Failure),
            _ => None,
        }
    }

    pub const ALL: [Status; 3] = [Status::Running, Status::Success, Status::Failure];
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

pub type Params = BTreeMap<String, Value>;

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Sequence,
    Fallback,
    /// Sequence that skips children already succeeded in this activation.
    SequenceMem,
    Condition(Condition),
    Action {
        action: String,
        params: Params,
        /// Param name to world variable; bound values are copied in
        /// before the first step of each activation.
        mapping: BTreeMap<String, String>,
    },
    /// Binds an achiever of `wanted` as its child, at plan time or on the
    /// first tick through a [`LookupResolver`](super::LookupResolver).
    Lookup { wanted: Condition },
    /// Leaf standing in for the root of `tree` running on `host`.
    Remote { host: String, tree: String },
}

impl NodeKind {
    pub fn is_composite(&self) -> bool {
        matches!(self, NodeKind::Sequence | NodeKind::Fallback | NodeKind::SequenceMem)
    }

    pub fn label(&self) -> &'static str {
        match self {
            NodeKind::Sequence => "sequence",
            NodeKind::Fallback => "fallback",
            NodeKind::SequenceMem => "sequence_mem",
            NodeKind::Condition(_) => "cond",
            NodeKind::Action { .. } => "action",
            NodeKind::Lookup { .. } => "lookup",
            NodeKind::Remote { .. } => "remote",
        }
    }
}

/// Per-activation execution state; not part of a node's identity.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct NodeState {
    pub running: bool,
    pub mem: usize,
}

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub id: String,
    pub kind: NodeKind,
    pub children: Vec<TreeNode>,
    pub(crate) state: NodeState,
}

impl PartialEq for TreeNode {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.kind == other.kind && self.children == other.children
    }
}

impl TreeNode {
    pub fn new(id: impl Into<String>, kind: NodeKind, children: Vec<TreeNode>) -> Self {
        TreeNode {
            id: id.into(),
            kind,
            children,
            state: NodeState::default(),
        }
    }

    pub fn sequence(id: impl Into<String>, children: Vec<TreeNode>) -> Self {
        TreeNode::new(id, NodeKind::Sequence, children)
    }

    pub fn fallback(id: impl Into<String>, children: Vec<TreeNode>) -> Self {
        TreeNode::new(id, NodeKind::Fallback, children)
    }

    pub fn sequence_mem(id: impl Into<String>, children: Vec<TreeNode>) -> Self {
        TreeNode::new(id, NodeKind::SequenceMem, children)
    }

    pub fn condition(id: impl Into<String>, cond: Condition) -> Self {
        TreeNode::new(id, NodeKind::Condition(cond), vec![])
    }

    pub fn action(id: impl Into<String>, action: impl Into<String>) -> Self {
        TreeNode::new(
            id,
            NodeKind::Action {
                action: action.into(),
                params: Params::new(),
                mapping: BTreeMap::new(),
            },
            vec![],
        )
    }

    pub fn action_with(
        id: impl Into<String>,
        action: impl Into<String>,
        params: Params,
        mapping: BTreeMap<String, String>,
    ) -> Self {
        TreeNode::new(
            id,
            NodeKind::Action {
                action: action.into(),
                params,
                mapping,
            },
            vec![],
        )
    }

    pub fn lookup(id: impl Into<String>, wanted: Condition, child: Option<TreeNode>) -> Self {
        TreeNode::new(id, NodeKind::Lookup { wanted }, child.into_iter().collect())
    }

    pub fn remote(id: impl Into<String>, host: impl Into<String>, tree: impl Into<String>) -> Self {
        TreeNode::new(
            id,
            NodeKind::Remote {
                host: host.into(),
                tree: tree.into(),
            },
            vec![],
        )
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty() && !self.kind.is_composite()
    }

    pub fn is_running(&self) -> bool {
        self.state.running
    }

    /// Depth-first, pre-order walk.
    pub fn walk(&self) -> Vec<&TreeNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(n.children.iter().rev());
        }
        out
    }

    pub fn find(&self, id: &str) -> Option<&TreeNode> {
        self.walk().into_iter().find(|n| n.id == id)
    }

    pub fn find_mut(&mut self, id: &str) -> Option<&mut TreeNode> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter_mut().find_map(|c| c.find_mut(id))
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(TreeNode::node_count).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(TreeNode::depth).max().unwrap_or(0)
    }

    /// Clears all execution state, as if freshly built.
    pub fn reset(&mut self) {
        self.state = NodeState::default();
        for c in &mut self.children {
            c.reset();
        }
    }

    /// Checks leaf arity and node-id uniqueness.
    pub fn validate(&self) -> Result<(), BtError> {
        let mut seen = HashSet::new();
        for n in self.walk() {
            if !seen.insert(n.id.as_str()) {
                return Err(BtError::InvalidTree(format!("duplicate node id `{}`", n.id)));
            }
            let arity_ok = match &n.kind {
                NodeKind::Condition(_) | NodeKind::Action { .. } | NodeKind::Remote { .. } => {
                    n.children.is_empty()
                }
                NodeKind::Lookup { .. } => n.children.len() <= 1,
                _ => true,
            };
            if !arity_ok {
                return Err(BtError::InvalidTree(format!(
                    "{} node `{}` has too many children",
                    n.kind.label(),
                    n.id
                )));
            }
        }
        Ok(())
    }
}
