use super::product::{apply_move, describe_pair, Move, MoveResult, PairState};
use super::role::{builtin_roles, Io, RoleAutomaton, RoleKind, Symbol};
use super::ProtocolError;

/// Replays the messages observed on one control link against a role pair
/// and rejects the first step the protocol does not allow.
#[derive(Clone, Debug)]
pub struct ConformanceMonitor {
    link: String,
    parent: RoleAutomaton,
    child: RoleAutomaton,
    state: PairState,
    steps: usize,
}

impl ConformanceMonitor {
    pub fn new(link: impl Into<String>, parent: RoleAutomaton, child: RoleAutomaton) -> Self {
        let state = PairState {
            parent: parent.initial,
            child: child.initial,
            down: None,
            up: None,
        };
        ConformanceMonitor {
            link: link.into(),
            parent,
            child,
            state,
            steps: 0,
        }
    }

    pub fn builtin(link: impl Into<String>) -> Self {
        let (p, c) = builtin_roles();
        Self::new(link, p, c)
    }

    fn step(&mut self, actor: RoleKind, io: Io) -> Result<(), ProtocolError> {
        let mv = Move { actor, io };
        match apply_move(&self.parent, &self.child, self.state, mv) {
            MoveResult::Next(next) => {
                self.state = next;
                self.steps += 1;
                Ok(())
            }
            other => Err(ProtocolError::Conformance {
                link: self.link.clone(),
                step: self.steps,
                message: format!(
                    "{mv} {} in {}",
                    if other == MoveResult::Overflow { "overflows" } else { "not allowed" },
                    describe_pair(&self.parent, &self.child, &self.state)
                ),
            }),
        }
    }

    pub fn parent_sent(&mut self, sym: Symbol) -> Result<(), ProtocolError> {
        self.step(RoleKind::Parent, Io::Emit(sym))
    }

    pub fn child_received(&mut self, sym: Symbol) -> Result<(), ProtocolError> {
        self.step(RoleKind::Child, Io::On(sym))
    }

    pub fn child_sent(&mut self, sym: Symbol) -> Result<(), ProtocolError> {
        self.step(RoleKind::Child, Io::Emit(sym))
    }

    pub fn parent_received(&mut self, sym: Symbol) -> Result<(), ProtocolError> {
        self.step(RoleKind::Parent, Io::On(sym))
    }

    /// Both roles accepting and nothing in flight.
    pub fn is_quiescent(&self) -> bool {
        self.parent.is_accepting(self.state.parent)
            && self.child.is_accepting(self.state.child)
            && self.state.down.is_none()
            && self.state.up.is_none()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn state(&self) -> PairState {
        self.state
    }
}
