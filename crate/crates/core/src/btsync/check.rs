use std::fmt;

use super::graph::{backward_reach, bfs_tree, path_to, sccs};
use super::product::{apply_move, Move, MoveResult, PairState, ProtocolAutomaton};
use super::role::RoleAutomaton;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FindingKind {
    /// Reachable non-accepting state with no continuation.
    Deadlock,
    /// Reachable cycle from which no accepting state is reachable.
    Livelock,
    /// A role emitted into a full channel.
    ChannelOverflow,
    /// Internal composition: a reachable global state that can no longer
    /// reach a state where every link is accepting.
    AcceptanceUnreachable,
    /// Internal composition: the coordinator drove a role with a message
    /// the role does not allow in its current state.
    ProtocolViolation,
}

impl fmt::Display for FindingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FindingKind::Deadlock => "deadlock",
            FindingKind::Livelock => "livelock",
            FindingKind::ChannelOverflow => "channel overflow",
            FindingKind::AcceptanceUnreachable => "acceptance unreachable",
            FindingKind::ProtocolViolation => "protocol violation",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Finding {
    pub kind: FindingKind,
    /// Description of the offending state.
    pub state: String,
    /// Shortest sequence of steps from the initial state to `state`.
    pub witness: Vec<String>,
    /// For livelocks, the steps of a cycle through `state`.
    pub cycle: Vec<String>,
    pub detail: String,
    /// Raw pairwise witness for replay, when the finding comes from a
    /// single parent/child product.
    pub moves: Vec<Move>,
    pub cycle_moves: Vec<Move>,
    pub attempted: Option<Move>,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.kind, self.state)?;
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        writeln!(f)?;
        if self.witness.is_empty() {
            writeln!(f, "  witness: <initial state>")?;
        } else {
            writeln!(f, "  witness: {}", self.witness.join("; "))?;
        }
        if !self.cycle.is_empty() {
            writeln!(f, "  cycle: {}", self.cycle.join("; "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConsistencyReport {
    pub states: usize,
    pub transitions: usize,
    pub deadlocks: Vec<Finding>,
    pub livelocks: Vec<Finding>,
    pub overflows: Vec<Finding>,
    /// Findings specific to internal composition.
    pub other: Vec<Finding>,
    /// Internal composition only: whether the coordinator was certified
    /// finite-time successful against cooperative children.
    pub coordinator_fts: Option<bool>,
    pub bounded: bool,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.findings().next().is_none() && self.coordinator_fts != Some(false)
    }

    pub fn findings(&self) -> impl Iterator<Item = &Finding> {
        self.deadlocks
            .iter()
            .chain(&self.livelocks)
            .chain(&self.overflows)
            .chain(&self.other)
    }
}

impl fmt::Display for ConsistencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_consistent() {
            writeln!(f, "consistent ({} states, {} transitions)", self.states, self.transitions)?;
        } else {
            writeln!(
                f,
                "inconsistent ({} states, {} transitions): {} deadlock(s), {} livelock(s), {} overflow(s), {} other",
                self.states,
                self.transitions,
                self.deadlocks.len(),
                self.livelocks.len(),
                self.overflows.len(),
                self.other.len()
            )?;
            if self.coordinator_fts == Some(false) {
                writeln!(f, "coordinator is not finite-time successful")?;
            }
            for finding in self.findings() {
                write!(f, "{finding}")?;
            }
        }
        if self.bounded {
            writeln!(f, "note: bounded exploration of the composite, not a proof")?;
        }
        Ok(())
    }
}

fn render(moves: &[Move]) -> Vec<String> {
    moves.iter().map(Move::to_string).collect()
}

/// Deadlocks, livelocks and channel overflows of a composed protocol, each
/// with a shortest witness from the initial state.
pub fn check_consistency(p: &ProtocolAutomaton) -> ConsistencyReport {
    let n = p.state_count();
    let pred = bfs_tree(n, p.initial(), |u| p.edges[u].clone());
    let witness = |s: usize| path_to(&pred, s).unwrap_or_default();
    let plain: Vec<Vec<usize>> = p.edges.iter().map(|es| es.iter().map(|&(_, v)| v).collect()).collect();
    let can_accept = backward_reach(n, &plain, (0..n).filter(|&s| p.is_accepting(s)));

    let finding = |kind, s: usize, detail: String| {
        let moves = witness(s);
        Finding {
            kind,
            state: p.describe(s),
            witness: render(&moves),
            cycle: Vec::new(),
            detail,
            moves,
            cycle_moves: Vec::new(),
            attempted: None,
        }
    };

    let mut report = ConsistencyReport {
        states: n,
        transitions: p.transition_count(),
        ..Default::default()
    };

    for s in 0..n {
        if p.edges[s].is_empty() && !p.is_accepting(s) {
            report.deadlocks.push(finding(FindingKind::Deadlock, s, String::new()));
        }
    }

    for comp in sccs(n, &plain) {
        let cyclic = comp.len() > 1 || plain[comp[0]].contains(&comp[0]);
        if !cyclic || comp.iter().any(|&s| can_accept[s]) {
            continue;
        }
        // Enter at the member closest to the initial state.
        let entry = *comp
            .iter()
            .min_by_key(|&&s| (witness(s).len(), s))
            .expect("non-empty component");
        let inside = |u: usize| -> Vec<(Move, usize)> {
            p.edges[u].iter().copied().filter(|(_, v)| comp.contains(v)).collect()
        };
        let cycle_moves = shortest_cycle(n, entry, inside);
        let mut f = finding(
            FindingKind::Livelock,
            entry,
            format!("{} state(s) cycle without reaching acceptance", comp.len()),
        );
        f.cycle = render(&cycle_moves);
        f.cycle_moves = cycle_moves;
        report.livelocks.push(f);
    }

    for o in &p.overflows {
        let mut f = finding(
            FindingKind::ChannelOverflow,
            o.state,
            format!("{} into a full channel", o.attempted),
        );
        f.attempted = Some(o.attempted);
        report.overflows.push(f);
    }
    report
}

fn shortest_cycle(n: usize, entry: usize, succ: impl Fn(usize) -> Vec<(Move, usize)>) -> Vec<Move> {
    let first: Vec<(Move, usize)> = succ(entry);
    let mut best: Option<Vec<Move>> = None;
    for (mv, v) in first {
        let path = if v == entry {
            Some(vec![])
        } else {
            let pred = bfs_tree(n, v, &succ);
            path_to(&pred, entry)
        };
        if let Some(rest) = path {
            let mut cycle = vec![mv];
            cycle.extend(rest);
            if best.as_ref().is_none_or(|b| cycle.len() < b.len()) {
                best = Some(cycle);
            }
        }
    }
    best.unwrap_or_default()
}

/// Replays `moves` on the role automata from the initial pair state.
pub fn replay(parent: &RoleAutomaton, child: &RoleAutomaton, moves: &[Move]) -> Result<PairState, String> {
    let mut s = PairState {
        parent: parent.initial,
        child: child.initial,
        down: None,
        up: None,
    };
    for (i, mv) in moves.iter().enumerate() {
        s = match apply_move(parent, child, s, *mv) {
            MoveResult::Next(next) => next,
            MoveResult::Overflow => return Err(format!("step {i} ({mv}) overflows a channel")),
            MoveResult::Disabled => return Err(format!("step {i} ({mv}) is not enabled")),
        };
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::btsync::{builtin_roles, compose, parse_role_pair, MUTANTS};

    #[test]
    fn builtin_is_consistent() {
        let (p, c) = builtin_roles();
        let report = check_consistency(&compose(&p, &c).unwrap());
        assert!(report.is_consistent(), "{report}");
        assert!(report.overflows.is_empty());
    }

    #[test]
    fn every_mutant_has_a_replayable_finding() {
        for (name, text) in MUTANTS {
            let (p, c) = parse_role_pair(text).unwrap();
            let report = check_consistency(&compose(&p, &c).unwrap());
            assert!(!report.is_consistent(), "{name} passed");
            for f in report.findings() {
                let end = replay(&p, &c, &f.moves).unwrap_or_else(|e| panic!("{name}: {e}"));
                assert_eq!(describe_pair_of(&p, &c, &end), f.state, "{name}");
                if !f.cycle_moves.is_empty() {
                    let mut full = f.moves.clone();
                    full.extend(&f.cycle_moves);
                    assert_eq!(replay(&p, &c, &full).unwrap(), end, "{name} cycle does not close");
                }
            }
        }
    }

    fn describe_pair_of(p: &RoleAutomaton, c: &RoleAutomaton, s: &PairState) -> String {
        crate::btsync::describe_pair(p, c, s)
    }

    #[test]
    fn silent_child_deadlocks_waiting_for_status() {
        let text = MUTANTS.iter().find(|(n, _)| *n == "silent_child").unwrap().1;
        let (p, c) = parse_role_pair(text).unwrap();
        let report = check_consistency(&compose(&p, &c).unwrap());
        let d = &report.deadlocks[0];
        assert!(d.state.starts_with("(AwaitStatus, Stuck"), "{}", d.state);
    }

    #[test]
    fn endless_poll_is_a_livelock() {
        let text = MUTANTS.iter().find(|(n, _)| *n == "endless_poll").unwrap().1;
        let (p, c) = parse_role_pair(text).unwrap();
        let report = check_consistency(&compose(&p, &c).unwrap());
        assert!(!report.livelocks.is_empty());
        assert!(report.deadlocks.is_empty());
    }

    #[test]
    fn double_tick_overflows() {
        let text = MUTANTS.iter().find(|(n, _)| *n == "double_tick").unwrap().1;
        let (p, c) = parse_role_pair(text).unwrap();
        let report = check_consistency(&compose(&p, &c).unwrap());
        assert!(!report.overflows.is_empty());
    }
}
