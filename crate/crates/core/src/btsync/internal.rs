use std::collections::{HashMap, HashSet, VecDeque};

use crate::bt::{check_fts, ActionImpl, ActionRegistry, NodeKind, Params, Status, Step, TreeNode};
use crate::worldmodel::WorldState;

use super::check::{check_consistency, ConsistencyReport, Finding, FindingKind};
use super::graph::{backward_reach, bfs_tree, path_to};
use super::product::{apply_move, candidate_moves, compose, describe_pair, Move, MoveResult, PairState};
use super::role::{builtin_roles, Io, RoleAutomaton, RoleKind, StatusSym, Symbol};
use super::ProtocolError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InternalOptions {
    /// Halt running remote leaves that lose control. Turning this off
    /// models a coordinator that forgets the halt path.
    pub halt_preempted: bool,
    pub max_states: usize,
}

impl Default for InternalOptions {
    fn default() -> Self {
        InternalOptions {
            halt_preempted: true,
            max_states: 100_000,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum CKind {
    Sequence,
    Fallback,
    SequenceMem,
    Leaf(usize),
}

#[derive(Clone, Debug)]
struct CNode {
    kind: CKind,
    children: Vec<usize>,
}

/// Global state: per-node (running, memory index), one pair state per
/// link, and the root's final status once the run has ended.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Global {
    mem: Vec<(bool, usize)>,
    pairs: Vec<PairState>,
    done: Option<Status>,
}

type Events = Vec<String>;

struct LocalFinding {
    kind: FindingKind,
    detail: String,
    events: Events,
}

struct Model {
    nodes: Vec<CNode>,
    root: usize,
    parent: RoleAutomaton,
    children: Vec<RoleAutomaton>,
    opts: InternalOptions,
}

/// [`check_internal_composition_with`] using default options.
pub fn check_internal_composition(
    node_roles: &[RoleAutomaton],
    coordinator: &TreeNode,
) -> Result<ConsistencyReport, ProtocolError> {
    check_internal_composition_with(node_roles, coordinator, InternalOptions::default())
}

/// Model-checks a coordinator tree whose remote leaves drive the given
/// child roles, each over its own link with the builtin parent role.
///
/// Remote leaves name their role through the `host` field. Every reachable
/// global state must still be able to reach a state where all links are
/// accepting; in addition the coordinator must be finite-time successful
/// against children that run once and then succeed.
pub fn check_internal_composition_with(
    node_roles: &[RoleAutomaton],
    coordinator: &TreeNode,
    opts: InternalOptions,
) -> Result<ConsistencyReport, ProtocolError> {
    let mut by_name = HashMap::new();
    for (i, r) in node_roles.iter().enumerate() {
        if r.kind != RoleKind::Child {
            return Err(ProtocolError::Malformed(format!("role `{}` is not a child role", r.name)));
        }
        if by_name.insert(r.name.clone(), i).is_some() {
            return Err(ProtocolError::RoleReuse(r.name.clone()));
        }
    }
    let mut nodes = Vec::new();
    let mut used = vec![false; node_roles.len()];
    let mut link_names = vec![String::new(); node_roles.len()];
    let root = lower(coordinator, &by_name, &mut used, &mut link_names, &mut nodes)?;
    if let Some(i) = used.iter().position(|u| !u) {
        return Err(ProtocolError::Malformed(format!(
            "role `{}` is not referenced by the coordinator",
            node_roles[i].name
        )));
    }

    let (parent, _) = builtin_roles();
    let mut report = ConsistencyReport {
        bounded: true,
        ..Default::default()
    };

    // Each link on its own first.
    for (role, link) in node_roles.iter().zip(&link_names) {
        let pair = check_consistency(&compose(&parent, role)?);
        let tag = |mut f: Finding| {
            f.detail = if f.detail.is_empty() {
                format!("link {link}")
            } else {
                format!("link {link}: {}", f.detail)
            };
            f
        };
        report.deadlocks.extend(pair.deadlocks.into_iter().map(tag));
        report.livelocks.extend(pair.livelocks.into_iter().map(tag));
        report.overflows.extend(pair.overflows.into_iter().map(tag));
    }

    let model = Model {
        nodes,
        root,
        parent,
        children: node_roles.to_vec(),
        opts,
    };
    model.explore(&mut report)?;
    report.coordinator_fts = Some(coordinator_is_fts(coordinator));
    Ok(report)
}

fn lower(
    node: &TreeNode,
    by_name: &HashMap<String, usize>,
    used: &mut [bool],
    link_names: &mut [String],
    out: &mut Vec<CNode>,
) -> Result<usize, ProtocolError> {
    let kind = match &node.kind {
        NodeKind::Sequence => CKind::Sequence,
        NodeKind::Fallback => CKind::Fallback,
        NodeKind::SequenceMem => CKind::SequenceMem,
        NodeKind::Remote { host, .. } => {
            let &i = by_name.get(host).ok_or_else(|| ProtocolError::UnknownRole(host.clone()))?;
            if std::mem::replace(&mut used[i], true) {
                return Err(ProtocolError::RoleReuse(host.clone()));
            }
            link_names[i] = host.clone();
            CKind::Leaf(i)
        }
        _ => return Err(ProtocolError::UnsupportedNode(node.id.clone())),
    };
    let idx = out.len();
    out.push(CNode {
        kind,
        children: Vec::new(),
    });
    let mut children = Vec::with_capacity(node.children.len());
    for c in &node.children {
        children.push(lower(c, by_name, used, link_names, out)?);
    }
    out[idx].children = children;
    Ok(idx)
}

type Outcome = (Status, Global, Events);

impl Model {
    fn pair_accepting(&self, p: usize, s: &PairState) -> bool {
        self.parent.is_accepting(s.parent)
            && self.children[p].is_accepting(s.child)
            && s.down.is_none()
            && s.up.is_none()
    }

    fn accepting(&self, g: &Global) -> bool {
        g.pairs.iter().enumerate().all(|(p, s)| self.pair_accepting(p, s))
    }

    fn describe(&self, g: &Global) -> String {
        let mut parts: Vec<String> = g
            .pairs
            .iter()
            .enumerate()
            .map(|(p, s)| format!("{}={}", self.children[p].name, describe_pair(&self.parent, &self.children[p], s)))
            .collect();
        if let Some(s) = g.done {
            parts.push(format!("root returned {s}"));
        }
        parts.join(" ")
    }

    fn tick(&self, n: usize, g: Global, ev: Events, f: &mut Vec<LocalFinding>) -> Vec<Outcome> {
        match self.nodes[n].kind {
            CKind::Leaf(p) => self
                .exchange(p, Symbol::Tick, g, ev, f)
                .into_iter()
                .map(|(s, mut g, ev)| {
                    g.mem[n].0 = s == StatusSym::R;
                    (s.into(), g, ev)
                })
                .collect(),
            CKind::SequenceMem => {
                let start = g.mem[n].1;
                self.tick_from(n, start, g, ev, f)
            }
            _ => self.tick_from(n, 0, g, ev, f),
        }
    }

    fn tick_from(&self, n: usize, i: usize, g: Global, ev: Events, f: &mut Vec<LocalFinding>) -> Vec<Outcome> {
        let node = &self.nodes[n];
        let Some(&c) = node.children.get(i) else {
            let mut g = g;
            g.mem[n] = (false, 0);
            let s = match node.kind {
                CKind::Fallback => Status::Failure,
                _ => Status::Success,
            };
            return vec![(s, g, ev)];
        };
        let mut out = Vec::new();
        for (s, mut g, ev) in self.tick(c, g, ev, f) {
            let pass = match node.kind {
                CKind::Fallback => Status::Failure,
                _ => Status::Success,
            };
            if s == pass {
                if let CKind::SequenceMem = node.kind {
                    g.mem[n].1 = i + 1;
                }
                out.extend(self.tick_from(n, i + 1, g, ev, f));
                continue;
            }
            for (mut g, ev) in self.halt_children(n, i + 1, g, ev, f) {
                let mem = match (node.kind, s) {
                    (CKind::SequenceMem, Status::Running) => i,
                    _ => 0,
                };
                g.mem[n] = (s == Status::Running, mem);
                out.push((s, g, ev));
            }
        }
        out
    }

    fn halt_children(
        &self,
        n: usize,
        from: usize,
        g: Global,
        ev: Events,
        f: &mut Vec<LocalFinding>,
    ) -> Vec<(Global, Events)> {
        let mut branches = vec![(g, ev)];
        for &c in &self.nodes[n].children[from.min(self.nodes[n].children.len())..] {
            branches = branches
                .into_iter()
                .flat_map(|(g, ev)| self.halt(c, g, ev, f))
                .collect();
        }
        branches
    }

    fn halt(&self, n: usize, g: Global, ev: Events, f: &mut Vec<LocalFinding>) -> Vec<(Global, Events)> {
        if !g.mem[n].0 {
            return vec![(g, ev)];
        }
        match self.nodes[n].kind {
            CKind::Leaf(p) => {
                if !self.opts.halt_preempted {
                    let mut g = g;
                    let mut ev = ev;
                    g.mem[n].0 = false;
                    ev.push(format!("{}: preempted without HALT", self.children[p].name));
                    return vec![(g, ev)];
                }
                self.exchange(p, Symbol::Halt, g, ev, f)
                    .into_iter()
                    .map(|(_, mut g, ev)| {
                        g.mem[n].0 = false;
                        (g, ev)
                    })
                    .collect()
            }
            _ => self
                .halt_children(n, 0, g, ev, f)
                .into_iter()
                .map(|(mut g, ev)| {
                    g.mem[n] = (false, 0);
                    (g, ev)
                })
                .collect(),
        }
    }

    /// Parent sends `send` on link `p`, then the link runs until the
    /// parent has consumed a status. Every way that can happen is returned.
    fn exchange(
        &self,
        p: usize,
        send: Symbol,
        g: Global,
        mut ev: Events,
        f: &mut Vec<LocalFinding>,
    ) -> Vec<(StatusSym, Global, Events)> {
        let child = &self.children[p];
        let name = &child.name;
        let first = Move {
            actor: RoleKind::Parent,
            io: Io::Emit(send),
        };
        let start = g.pairs[p];
        let s1 = match apply_move(&self.parent, child, start, first) {
            MoveResult::Next(s) => s,
            res => {
                let (kind, what) = match res {
                    MoveResult::Overflow => (FindingKind::ChannelOverflow, "into a full channel"),
                    _ => (FindingKind::ProtocolViolation, "not allowed"),
                };
                f.push(LocalFinding {
                    kind,
                    detail: format!(
                        "link {name}: {first} {what} in {}",
                        describe_pair(&self.parent, child, &start)
                    ),
                    events: ev,
                });
                return Vec::new();
            }
        };
        ev.push(format!("{name}: {first}"));

        let mut out = Vec::new();
        let mut seen = HashSet::from([s1]);
        let mut queue = VecDeque::from([(s1, ev)]);
        let mut stuck = false;
        while let Some((s, ev)) = queue.pop_front() {
            let mut moved = false;
            if let Some(Symbol::Status(x)) = s.up {
                let recv = Move {
                    actor: RoleKind::Parent,
                    io: Io::On(Symbol::Status(x)),
                };
                if let MoveResult::Next(s2) = apply_move(&self.parent, child, s, recv) {
                    let mut ev = ev.clone();
                    ev.push(format!("{name}: {recv}"));
                    let mut g2 = g.clone();
                    g2.pairs[p] = s2;
                    out.push((x, g2, ev));
                    continue;
                }
            }
            for mv in candidate_moves(child, RoleKind::Child, s.child) {
                match apply_move(&self.parent, child, s, mv) {
                    MoveResult::Next(s2) => {
                        moved = true;
                        if seen.insert(s2) {
                            let mut ev = ev.clone();
                            ev.push(format!("{name}: {mv}"));
                            queue.push_back((s2, ev));
                        }
                    }
                    MoveResult::Overflow => f.push(LocalFinding {
                        kind: FindingKind::ChannelOverflow,
                        detail: format!("link {name}: {mv} into a full channel"),
                        events: ev.clone(),
                    }),
                    MoveResult::Disabled => {}
                }
            }
            if !moved && !stuck {
                stuck = true;
                f.push(LocalFinding {
                    kind: FindingKind::Deadlock,
                    detail: format!(
                        "link {name} stuck at {} after {send}",
                        describe_pair(&self.parent, child, &s)
                    ),
                    events: ev,
                });
            }
        }
        if out.is_empty() && !stuck {
            f.push(LocalFinding {
                kind: FindingKind::Livelock,
                detail: format!("link {name} never answers {send}"),
                events: Vec::new(),
            });
        }
        out
    }

    fn explore(&self, report: &mut ConsistencyReport) -> Result<(), ProtocolError> {
        let init = Global {
            mem: vec![(false, 0); self.nodes.len()],
            pairs: self
                .children
                .iter()
                .map(|c| PairState {
                    parent: self.parent.initial,
                    child: c.initial,
                    down: None,
                    up: None,
                })
                .collect(),
            done: None,
        };
        let mut states = vec![init.clone()];
        let mut index = HashMap::from([(init, 0usize)]);
        let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
        let mut labels: Vec<String> = Vec::new();
        let mut local: Vec<(usize, LocalFinding)> = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            if states[i].done.is_some() {
                continue;
            }
            let mut f = Vec::new();
            let outcomes = self.tick(self.root, states[i].clone(), Vec::new(), &mut f);
            local.extend(f.into_iter().map(|lf| (i, lf)));
            for (s, mut g, ev) in outcomes {
                if s != Status::Running {
                    g.done = Some(s);
                }
                let j = match index.get(&g) {
                    Some(&j) => j,
                    None => {
                        let j = states.len();
                        if j >= self.opts.max_states {
                            return Err(ProtocolError::StateSpaceTooLarge(j));
                        }
                        states.push(g.clone());
                        edges.push(Vec::new());
                        index.insert(g, j);
                        queue.push_back(j);
                        j
                    }
                };
                let label = labels.len();
                labels.push(format!("tick [{}] -> {s}", ev.join(", ")));
                edges[i].push((label, j));
            }
        }

        let n = states.len();
        report.states = n;
        report.transitions = labels.len();
        let pred = bfs_tree(n, 0, |u| edges[u].clone());
        let witness = |s: usize| -> Vec<String> {
            path_to(&pred, s)
                .unwrap_or_default()
                .into_iter()
                .map(|l| labels[l].clone())
                .collect()
        };

        let mut reported = HashSet::new();
        for (i, lf) in local {
            if !reported.insert((lf.kind, lf.detail.clone())) {
                continue;
            }
            let mut w = witness(i);
            if !lf.events.is_empty() {
                w.push(format!("tick [{}] ...", lf.events.join(", ")));
            }
            let finding = Finding {
                kind: lf.kind,
                state: self.describe(&states[i]),
                witness: w,
                cycle: Vec::new(),
                detail: lf.detail,
                moves: Vec::new(),
                cycle_moves: Vec::new(),
                attempted: None,
            };
            match lf.kind {
                FindingKind::Deadlock => report.deadlocks.push(finding),
                FindingKind::Livelock => report.livelocks.push(finding),
                FindingKind::ChannelOverflow => report.overflows.push(finding),
                _ => report.other.push(finding),
            }
        }

        let plain: Vec<Vec<usize>> = edges.iter().map(|es| es.iter().map(|&(_, v)| v).collect()).collect();
        let can = backward_reach(n, &plain, (0..n).filter(|&s| self.accepting(&states[s])));
        let bad: Vec<usize> = (0..n).filter(|&s| !can[s]).collect();
        if let Some(&first) = bad.first() {
            report.other.push(Finding {
                kind: FindingKind::AcceptanceUnreachable,
                state: self.describe(&states[first]),
                witness: witness(first),
                cycle: Vec::new(),
                detail: format!("{} reachable state(s) cannot reach acceptance on every link", bad.len()),
                moves: Vec::new(),
                cycle_moves: Vec::new(),
                attempted: None,
            });
        }
        Ok(())
    }
}

/// Stand-in for a well-behaved child: Running once, then Success on every
/// later tick, like a skill whose postcondition now holds.
#[derive(Default)]
struct Cooperative {
    ticks: u8,
}

impl ActionImpl for Cooperative {
    fn step(&mut self, _world: &WorldState, _params: &Params) -> Step {
        self.ticks = self.ticks.saturating_add(1);
        if self.ticks == 1 {
            Step::running()
        } else {
            Step::success()
        }
    }

    fn on_halt(&mut self) {
        self.ticks = 0;
    }
}

fn coordinator_is_fts(coordinator: &TreeNode) -> bool {
    fn swap(node: &TreeNode, leaves: &mut Vec<String>) -> TreeNode {
        match &node.kind {
            NodeKind::Remote { .. } => {
                let name = format!("cooperative:{}", node.id);
                leaves.push(name.clone());
                TreeNode::action(node.id.clone(), name)
            }
            kind => TreeNode::new(
                node.id.clone(),
                kind.clone(),
                node.children.iter().map(|c| swap(c, leaves)).collect(),
            ),
        }
    }
    let mut leaves = Vec::new();
    let tree = swap(coordinator, &mut leaves);
    let bound = 2 * leaves.len() as u64 + 2;
    let registry = || {
        let mut r = ActionRegistry::new();
        for name in &leaves {
            r.register(name.clone(), Cooperative::default());
        }
        r
    };
    check_fts(&tree, &[WorldState::new()], bound, registry).is_ok_and(|r| r.holds())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn child(name: &str) -> RoleAutomaton {
        let (_, mut c) = builtin_roles();
        c.name = name.into();
        c
    }

    fn remotes(n: usize) -> (Vec<RoleAutomaton>, Vec<TreeNode>) {
        let names: Vec<String> = (1..=n).map(|i| format!("c{i}")).collect();
        let roles = names.iter().map(|s| child(s)).collect();
        let leaves = names.iter().map(|s| TreeNode::remote(s.clone(), s.clone(), "main")).collect();
        (roles, leaves)
    }

    #[test]
    fn sequence_over_two_children_is_consistent() {
        let (roles, leaves) = remotes(2);
        let report = check_internal_composition(&roles, &TreeNode::sequence("root", leaves)).unwrap();
        assert!(report.is_consistent(), "{report}");
        assert!(report.states <= 1000);
    }

    #[test]
    fn forgotten_halt_is_found() {
        let (roles, leaves) = remotes(2);
        let opts = InternalOptions {
            halt_preempted: false,
            ..Default::default()
        };
        let report = check_internal_composition_with(&roles, &TreeNode::fallback("root", leaves), opts).unwrap();
        assert!(!report.is_consistent());
        assert!(report.other.iter().any(|f| f.kind == FindingKind::AcceptanceUnreachable));
    }

    #[test]
    fn same_role_twice() {
        let (roles, _) = remotes(1);
        let tree = TreeNode::sequence(
            "root",
            vec![TreeNode::remote("a", "c1", "main"), TreeNode::remote("b", "c1", "main")],
        );
        assert_eq!(
            check_internal_composition(&roles, &tree).unwrap_err(),
            ProtocolError::RoleReuse("c1".into())
        );
        let doubled = vec![child("c1"), child("c1")];
        assert!(matches!(
            check_internal_composition(&doubled, &TreeNode::remote("a", "c1", "main")),
            Err(ProtocolError::RoleReuse(_))
        ));
    }

    #[test]
    fn unknown_role_and_unsupported_node() {
        let (roles, _) = remotes(1);
        assert!(matches!(
            check_internal_composition(&roles, &TreeNode::remote("a", "zz", "main")),
            Err(ProtocolError::UnknownRole(_))
        ));
        let tree = TreeNode::sequence("root", vec![TreeNode::remote("a", "c1", "main"), TreeNode::action("x", "noop")]);
        assert!(matches!(
            check_internal_composition(&roles, &tree),
            Err(ProtocolError::UnsupportedNode(_))
        ));
    }
}
