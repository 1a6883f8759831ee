use std::collections::{HashMap, VecDeque};
use std::fmt;

use super::role::{Io, RoleAutomaton, RoleKind, Symbol};
use super::ProtocolError;

/// Global state: both role states plus the two 1-slot channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PairState {
    pub parent: usize,
    pub child: usize,
    /// Parent-to-child channel.
    pub down: Option<Symbol>,
    /// Child-to-parent channel.
    pub up: Option<Symbol>,
}

/// One move of the product: which role acted and how.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Move {
    pub actor: RoleKind,
    pub io: Io,
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.actor, self.io)
    }
}

/// A role tried to emit into a full channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Overflow {
    pub state: usize,
    pub attempted: Move,
}

/// Outcome of applying one move to a pair state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoveResult {
    Next(PairState),
    /// The move is an emit into an occupied channel.
    Overflow,
    /// The move is not enabled.
    Disabled,
}

/// Applies `mv` to `s`, reading transitions straight off the two roles.
pub fn apply_move(parent: &RoleAutomaton, child: &RoleAutomaton, s: PairState, mv: Move) -> MoveResult {
    let (role, local, inbox, outbox) = match mv.actor {
        RoleKind::Parent => (parent, s.parent, s.up, s.down),
        RoleKind::Child => (child, s.child, s.down, s.up),
    };
    let (next_local, next_in, next_out) = match mv.io {
        Io::On(sym) => {
            if inbox != Some(sym) {
                return MoveResult::Disabled;
            }
            match role.on(local, sym) {
                Some(to) => (to, None, outbox),
                None => return MoveResult::Disabled,
            }
        }
        Io::Emit(sym) => {
            let Some(to) = role.emits(local).find(|(e, _)| *e == sym).map(|(_, to)| to) else {
                return MoveResult::Disabled;
            };
            if outbox.is_some() {
                return MoveResult::Overflow;
            }
            (to, inbox, Some(sym))
        }
    };
    MoveResult::Next(match mv.actor {
        RoleKind::Parent => PairState {
            parent: next_local,
            child: s.child,
            down: next_out,
            up: next_in,
        },
        RoleKind::Child => PairState {
            parent: s.parent,
            child: next_local,
            down: next_in,
            up: next_out,
        },
    })
}

/// All moves a role could attempt in its current local state.
pub fn candidate_moves(role: &RoleAutomaton, kind: RoleKind, local: usize) -> Vec<Move> {
    role.transitions
        .iter()
        .filter(|t| t.from == local)
        .map(|t| Move { actor: kind, io: t.io })
        .collect()
}

/// Exhaustive product of a parent and a child role over 1-bounded channels.
#[derive(Clone, Debug)]
pub struct ProtocolAutomaton {
    pub parent: RoleAutomaton,
    pub child: RoleAutomaton,
    /// Reachable states; index 0 is initial.
    pub states: Vec<PairState>,
    pub edges: Vec<Vec<(Move, usize)>>,
    pub overflows: Vec<Overflow>,
    index: HashMap<PairState, usize>,
}

impl ProtocolAutomaton {
    pub fn initial(&self) -> usize {
        0
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn transition_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn index_of(&self, s: &PairState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn is_accepting(&self, i: usize) -> bool {
        let s = &self.states[i];
        self.parent.is_accepting(s.parent) && self.child.is_accepting(s.child) && s.down.is_none() && s.up.is_none()
    }

    pub fn describe(&self, i: usize) -> String {
        describe_pair(&self.parent, &self.child, &self.states[i])
    }
}

pub fn describe_pair(parent: &RoleAutomaton, child: &RoleAutomaton, s: &PairState) -> String {
    let chan = |c: &Option<Symbol>| c.map(|s| s.to_string()).unwrap_or_else(|| "-".into());
    format!(
        "({}, {}, down={}, up={})",
        parent.state_name(s.parent),
        child.state_name(s.child),
        chan(&s.down),
        chan(&s.up)
    )
}

/// Builds the reachable product of `parent` and `child`.
///
/// Emits into a full channel are recorded as [`Overflow`] findings rather
/// than explored.
pub fn compose(parent: &RoleAutomaton, child: &RoleAutomaton) -> Result<ProtocolAutomaton, ProtocolError> {
    if parent.kind != RoleKind::Parent || child.kind != RoleKind::Child {
        return Err(ProtocolError::AlphabetMismatch("expected a parent role and a child role".into()));
    }
    let dangling_down: Vec<_> = parent.outputs().difference(&child.inputs()).map(|s| s.to_string()).collect();
    let dangling_up: Vec<_> = child.outputs().difference(&parent.inputs()).map(|s| s.to_string()).collect();
    if !dangling_down.is_empty() || !dangling_up.is_empty() {
        return Err(ProtocolError::AlphabetMismatch(format!(
            "parent outputs never consumed: [{}]; child outputs never consumed: [{}]",
            dangling_down.join(", "),
            dangling_up.join(", ")
        )));
    }

    let init = PairState {
        parent: parent.initial,
        child: child.initial,
        down: None,
        up: None,
    };
    let mut p = ProtocolAutomaton {
        parent: parent.clone(),
        child: child.clone(),
        states: vec![init],
        edges: vec![Vec::new()],
        overflows: Vec::new(),
        index: HashMap::from([(init, 0)]),
    };
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let s = p.states[i];
        let moves = candidate_moves(parent, RoleKind::Parent, s.parent)
            .into_iter()
            .chain(candidate_moves(child, RoleKind::Child, s.child));
        for mv in moves {
            match apply_move(parent, child, s, mv) {
                MoveResult::Disabled => {}
                MoveResult::Overflow => p.overflows.push(Overflow { state: i, attempted: mv }),
                MoveResult::Next(next) => {
                    let j = match p.index.get(&next) {
                        Some(&j) => j,
                        None => {
                            let j = p.states.len();
                            p.states.push(next);
                            p.edges.push(Vec::new());
                            p.index.insert(next, j);
                            queue.push_back(j);
                            j
                        }
                    };
                    p.edges[i].push((mv, j));
                }
            }
        }
    }
    Ok(p)
}
