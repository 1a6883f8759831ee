use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::bt::Status;

use super::ProtocolError;

/// Message symbol of the tick-sync alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Tick,
    Halt,
    Status(StatusSym),
    Data,
}

/// [`Status`] with an ordering, for use inside symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StatusSym {
    R,
    S,
    F,
}

impl From<Status> for StatusSym {
    fn from(s: Status) -> Self {
        match s {
            Status::Running => StatusSym::R,
            Status::Success => StatusSym::S,
            Status::Failure => StatusSym::F,
        }
    }
}

impl From<StatusSym> for Status {
    fn from(s: StatusSym) -> Self {
        match s {
            StatusSym::R => Status::Running,
            StatusSym::S => Status::Success,
            StatusSym::F => Status::Failure,
        }
    }
}

impl Symbol {
    pub fn status(s: Status) -> Symbol {
        Symbol::Status(s.into())
    }

    pub fn parse(text: &str) -> Option<Symbol> {
        Some(match text {
            "TICK" => Symbol::Tick,
            "HALT" => Symbol::Halt,
            "DATA" => Symbol::Data,
            "STATUS(R)" => Symbol::Status(StatusSym::R),
            "STATUS(S)" => Symbol::Status(StatusSym::S),
            "STATUS(F)" => Symbol::Status(StatusSym::F),
            _ => return None,
        })
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Tick => f.write_str("TICK"),
            Symbol::Halt => f.write_str("HALT"),
            Symbol::Data => f.write_str("DATA"),
            Symbol::Status(s) => write!(f, "STATUS({})", Status::from(*s).letter()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RoleKind {
    Parent,
    Child,
}

impl fmt::Display for RoleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoleKind::Parent => "parent",
            RoleKind::Child => "child",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Io {
    /// Consume a message from the incoming channel.
    On(Symbol),
    /// Put a message on the outgoing channel.
    Emit(Symbol),
}

impl fmt::Display for Io {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Io::On(s) => write!(f, "on {s}"),
            Io::Emit(s) => write!(f, "emit {s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoleState {
    pub name: String,
    pub accept: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub io: Io,
    pub to: usize,
}

/// One side of the protocol as an IO-automaton, deterministic on inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct RoleAutomaton {
    pub name: String,
    pub kind: RoleKind,
    pub states: Vec<RoleState>,
    pub initial: usize,
    pub transitions: Vec<Transition>,
}

impl RoleAutomaton {
    pub fn new(
        name: impl Into<String>,
        kind: RoleKind,
        states: Vec<RoleState>,
        initial: usize,
        transitions: Vec<Transition>,
    ) -> Result<Self, ProtocolError> {
        let role = RoleAutomaton {
            name: name.into(),
            kind,
            states,
            initial,
            transitions,
        };
        role.check()?;
        Ok(role)
    }

    fn check(&self) -> Result<(), ProtocolError> {
        let n = self.states.len();
        if self.initial >= n {
            return Err(ProtocolError::Malformed(format!("role `{}` has no initial state", self.name)));
        }
        let mut seen = BTreeSet::new();
        for t in &self.transitions {
            if t.from >= n || t.to >= n {
                return Err(ProtocolError::Malformed(format!("role `{}`: transition out of range", self.name)));
            }
            if let Io::On(sym) = t.io {
                if !seen.insert((t.from, sym)) {
                    return Err(ProtocolError::NonDeterministic {
                        role: self.name.clone(),
                        state: self.states[t.from].name.clone(),
                        symbol: sym.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.states[s].name
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s.name == name)
    }

    pub fn is_accepting(&self, s: usize) -> bool {
        self.states[s].accept
    }

    /// Successor on consuming `sym` in state `s`.
    pub fn on(&self, s: usize, sym: Symbol) -> Option<usize> {
        self.transitions
            .iter()
            .find(|t| t.from == s && t.io == Io::On(sym))
            .map(|t| t.to)
    }

    /// Outputs enabled in state `s`.
    pub fn emits(&self, s: usize) -> impl Iterator<Item = (Symbol, usize)> + '_ {
        self.transitions.iter().filter_map(move |t| match t.io {
            Io::Emit(sym) if t.from == s => Some((sym, t.to)),
            _ => None,
        })
    }

    pub fn inputs(&self) -> BTreeSet<Symbol> {
        self.transitions
            .iter()
            .filter_map(|t| match t.io {
                Io::On(s) => Some(s),
                _ => None,
            })
            .collect()
    }

    pub fn outputs(&self) -> BTreeSet<Symbol> {
        self.transitions
            .iter()
            .filter_map(|t| match t.io {
                Io::Emit(s) => Some(s),
                _ => None,
            })
            .collect()
    }

    /// Renders the role in the text format accepted by [`parse_roles`].
    pub fn to_text(&self) -> String {
        let mut out = format!("role {} {}\n", self.name, self.kind);
        for (i, st) in self.states.iter().enumerate() {
            out.push_str("state ");
            out.push_str(&st.name);
            if st.accept {
                out.push_str(" accept");
            }
            if i == self.initial {
                out.push_str(" initial");
            }
            out.push('\n');
            for t in self.transitions.iter().filter(|t| t.from == i) {
                out.push_str(&format!("  {} -> {}\n", t.io, self.states[t.to].name));
            }
        }
        out
    }
}

/// Parses one or more roles:
///
/// ```text
/// role <name> parent|child
/// state <name> [accept] [initial]
///   on <msg> -> <state>
///   emit <msg> -> <state>
/// ```
///
/// Transitions belong to the most recent `state`. `#` starts a comment.
pub fn parse_roles(text: &str) -> Result<Vec<RoleAutomaton>, ProtocolError> {
    struct Draft {
        name: String,
        kind: RoleKind,
        states: Vec<RoleState>,
        initial: Option<usize>,
        // (line, from, io, target-name)
        edges: Vec<(usize, usize, Io, String)>,
    }
    let err = |line: usize, message: String| ProtocolError::Parse { line, message };
    let mut drafts: Vec<Draft> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        match words[0] {
            "role" => {
                let (Some(name), Some(kind)) = (words.get(1), words.get(2)) else {
                    return Err(err(line_no, "expected `role <name> parent|child`".into()));
                };
                let kind = match *kind {
                    "parent" => RoleKind::Parent,
                    "child" => RoleKind::Child,
                    other => return Err(err(line_no, format!("unknown role kind `{other}`"))),
                };
                drafts.push(Draft {
                    name: name.to_string(),
                    kind,
                    states: Vec::new(),
                    initial: None,
                    edges: Vec::new(),
                });
            }
            "state" => {
                let d = drafts
                    .last_mut()
                    .ok_or_else(|| err(line_no, "`state` before any `role`".into()))?;
                let name = words
                    .get(1)
                    .ok_or_else(|| err(line_no, "expected state name".into()))?;
                if d.states.iter().any(|s| s.name == *name) {
                    return Err(err(line_no, format!("state `{name}` declared twice")));
                }
                let mut accept = false;
                for flag in &words[2..] {
                    match *flag {
                        "accept" => accept = true,
                        "initial" => {
                            if d.initial.is_some() {
                                return Err(err(line_no, "second initial state".into()));
                            }
                            d.initial = Some(d.states.len());
                        }
                        other => return Err(err(line_no, format!("unknown flag `{other}`"))),
                    }
                }
                d.states.push(RoleState {
                    name: name.to_string(),
                    accept,
                });
            }
            kw @ ("on" | "emit") => {
                let d = drafts
                    .last_mut()
                    .ok_or_else(|| err(line_no, "transition before any `role`".into()))?;
                if d.states.is_empty() {
                    return Err(err(line_no, "transition before any `state`".into()));
                }
                if words.len() != 4 || words[2] != "->" {
                    return Err(err(line_no, format!("expected `{kw} <msg> -> <state>`")));
                }
                let sym = Symbol::parse(words[1])
                    .ok_or_else(|| err(line_no, format!("unknown message `{}`", words[1])))?;
                let io = if kw == "on" { Io::On(sym) } else { Io::Emit(sym) };
                d.edges.push((line_no, d.states.len() - 1, io, words[3].to_string()));
            }
            other => return Err(err(line_no, format!("unexpected `{other}`"))),
        }
    }

    let mut roles = Vec::new();
    for d in drafts {
        let index: HashMap<&str, usize> = d
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.name.as_str(), i))
            .collect();
        let mut transitions = Vec::new();
        for (line, from, io, target) in &d.edges {
            let to = *index
                .get(target.as_str())
                .ok_or_else(|| err(*line, format!("unknown state `{target}`")))?;
            transitions.push(Transition { from: *from, io: *io, to });
        }
        let initial = d
            .initial
            .ok_or_else(|| ProtocolError::Malformed(format!("role `{}` has no initial state", d.name)))?;
        roles.push(RoleAutomaton::new(d.name, d.kind, d.states, initial, transitions)?);
    }
    Ok(roles)
}

/// Parses a file holding exactly one parent role and one child role.
pub fn parse_role_pair(text: &str) -> Result<(RoleAutomaton, RoleAutomaton), ProtocolError> {
    let roles = parse_roles(text)?;
    let mut parent = None;
    let mut child = None;
    for r in roles {
        let slot = match r.kind {
            RoleKind::Parent => &mut parent,
            RoleKind::Child => &mut child,
        };
        if slot.is_some() {
            return Err(ProtocolError::Malformed(format!("more than one {} role", r.kind)));
        }
        *slot = Some(r);
    }
    match (parent, child) {
        (Some(p), Some(c)) => Ok((p, c)),
        _ => Err(ProtocolError::Malformed("expected one parent and one child role".into())),
    }
}

pub const BUILTIN_ROLES: &str = include_str!("../../protocols/builtin.roles");

/// The shipped tick-sync protocol: `(parent, child)`.
pub fn builtin_roles() -> (RoleAutomaton, RoleAutomaton) {
    parse_role_pair(BUILTIN_ROLES).expect("builtin roles are well-formed")
}
