use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::bt::{NodeKind, TreeNode};
use crate::btsync::graph::sccs;
use crate::worldmodel::{Value, ValueType, WorldState};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PortDirection {
    In,
    Out,
}

impl fmt::Display for PortDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PortDirection::In => "in",
            PortDirection::Out => "out",
        })
    }
}

/// A typed data port attached to a tree node and backed by a world
/// variable: out-ports publish the variable, in-ports overwrite it.
#[derive(Clone, Debug, PartialEq)]
pub struct PortSpec {
    pub name: String,
    pub ty: ValueType,
    pub dir: PortDirection,
    /// Id of the tree node the port belongs to; must be a leaf.
    pub node: String,
    pub var: String,
}

/// World writes applied to a host just before global tick `at`.
#[derive(Clone, Debug, PartialEq)]
pub struct Injection {
    pub at: u64,
    pub writes: Vec<(String, Value)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HostSpec {
    pub id: String,
    /// Name remote leaves use to address this host's tree.
    pub tree_name: String,
    pub tree: TreeNode,
    pub world: WorldState,
    pub ports: Vec<PortSpec>,
    pub injections: Vec<Injection>,
}

impl HostSpec {
    pub fn new(id: impl Into<String>, tree_name: impl Into<String>, tree: TreeNode, world: WorldState) -> Self {
        HostSpec {
            id: id.into(),
            tree_name: tree_name.into(),
            tree,
            world,
            ports: Vec::new(),
            injections: Vec::new(),
        }
    }

    pub fn port(&self, name: &str) -> Option<&PortSpec> {
        self.ports.iter().find(|p| p.name == name)
    }
}

/// A control link, derived from a remote leaf: `parent` runs a leaf
/// `node` that drives the tree of host `child`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ControlLink {
    pub parent: String,
    pub node: String,
    pub child: String,
    pub tree: String,
}

impl fmt::Display for ControlLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} -> {}", self.parent, self.node, self.child)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PortRef {
    pub host: String,
    pub port: String,
}

impl PortRef {
    pub fn new(host: impl Into<String>, port: impl Into<String>) -> Self {
        PortRef {
            host: host.into(),
            port: port.into(),
        }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.host, self.port)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataLink {
    pub from: PortRef,
    pub to: PortRef,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Deployment {
    pub name: String,
    pub hosts: Vec<HostSpec>,
    pub data_links: Vec<DataLink>,
}

impl Deployment {
    pub fn host(&self, id: &str) -> Option<&HostSpec> {
        self.hosts.iter().find(|h| h.id == id)
    }

    pub fn host_mut(&mut self, id: &str) -> Option<&mut HostSpec> {
        self.hosts.iter_mut().find(|h| h.id == id)
    }

    /// One link per remote leaf, in host order.
    pub fn control_links(&self) -> Vec<ControlLink> {
        let mut out = Vec::new();
        for h in &self.hosts {
            for n in h.tree.walk() {
                if let NodeKind::Remote { host, tree } = &n.kind {
                    out.push(ControlLink {
                        parent: h.id.clone(),
                        node: n.id.clone(),
                        child: host.clone(),
                        tree: tree.clone(),
                    });
                }
            }
        }
        out
    }

    /// The host no control link points to, if there is exactly one.
    pub fn root(&self) -> Option<&str> {
        let children: BTreeSet<String> = self.control_links().into_iter().map(|l| l.child).collect();
        let mut roots = self.hosts.iter().filter(|h| !children.contains(&h.id));
        match (roots.next(), roots.next()) {
            (Some(r), None) => Some(&r.id),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    DuplicateHost(String),
    UnknownHost { link: ControlLink },
    UnknownTree { link: ControlLink, expected: String },
    NoRoot,
    MultipleRoots(Vec<String>),
    /// Hosts along a control cycle, first host repeated at the end.
    ControlCycle(Vec<String>),
    Unreachable(String),
    MultipleParents { host: String, parents: Vec<String> },
    UnknownPort(PortRef),
    PortNodeMissing { port: PortRef, node: String },
    InnerNodePort { port: PortRef, node: String },
    DataTypeMismatch { from: PortRef, to: PortRef, from_ty: ValueType, to_ty: ValueType },
    DataDirection { from: PortRef, to: PortRef },
    SameHostDataLink { from: PortRef, to: PortRef },
    PortLinkedTwice(PortRef),
    PortVariableMissing { port: PortRef, var: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateHost(h) => write!(f, "host `{h}` declared twice"),
            Violation::UnknownHost { link } => write!(f, "control link {link}: unknown host"),
            Violation::UnknownTree { link, expected } => {
                write!(f, "control link {link}: host runs tree `{expected}`, not `{}`", link.tree)
            }
            Violation::NoRoot => write!(f, "no root host: every host has a parent"),
            Violation::MultipleRoots(r) => write!(f, "more than one root host: {}", r.join(", ")),
            Violation::ControlCycle(c) => write!(f, "control cycle: {}", c.join(" -> ")),
            Violation::Unreachable(h) => write!(f, "host `{h}` is not reachable from the root"),
            Violation::MultipleParents { host, parents } => {
                write!(f, "host `{host}` has several parents: {}", parents.join(", "))
            }
            Violation::UnknownPort(p) => write!(f, "unknown port {p}"),
            Violation::PortNodeMissing { port, node } => write!(f, "port {port} is attached to missing node `{node}`"),
            Violation::InnerNodePort { port, node } => {
                write!(f, "port {port} is attached to inner node `{node}`; data links connect leaves only")
            }
            Violation::DataTypeMismatch { from, to, from_ty, to_ty } => {
                write!(f, "data link {from} -> {to}: {from_ty} into {to_ty}")
            }
            Violation::DataDirection { from, to } => write!(f, "data link {from} -> {to} must go from out to in"),
            Violation::SameHostDataLink { from, to } => write!(f, "data link {from} -> {to} stays on one host"),
            Violation::PortLinkedTwice(p) => write!(f, "port {p} is linked more than once"),
            Violation::PortVariableMissing { port, var } => {
                write!(f, "port {port} is backed by undeclared variable `{var}`")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_cycle(&self) -> bool {
        self.violations.iter().any(|v| matches!(v, Violation::ControlCycle(_)))
    }

    pub fn has_inner_node_port(&self) -> bool {
        self.violations.iter().any(|v| matches!(v, Violation::InnerNodePort { .. }))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return writeln!(f, "valid");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks the snowflake shape: control links form a tree rooted at a
/// single host, and data links join typed leaf ports on different hosts.
pub fn validate_topology(d: &Deployment) -> ValidationReport {
    let mut v = Vec::new();
    let mut index = BTreeMap::new();
    for (i, h) in d.hosts.iter().enumerate() {
        if index.insert(h.id.as_str(), i).is_some() {
            v.push(Violation::DuplicateHost(h.id.clone()));
        }
    }

    let n = d.hosts.len();
    let mut edges = vec![Vec::new(); n];
    let mut parents: Vec<Vec<String>> = vec![Vec::new(); n];
    for link in d.control_links() {
        let Some(&c) = index.get(link.child.as_str()) else {
            v.push(Violation::UnknownHost { link });
            continue;
        };
        if d.hosts[c].tree_name != link.tree {
            v.push(Violation::UnknownTree {
                expected: d.hosts[c].tree_name.clone(),
                link: link.clone(),
            });
        }
        let p = index[link.parent.as_str()];
        edges[p].push(c);
        parents[c].push(link.parent.clone());
    }

    for comp in sccs(n, &edges) {
        let cyclic = comp.len() > 1 || edges[comp[0]].contains(&comp[0]);
        if cyclic {
            v.push(Violation::ControlCycle(cycle_through(&comp, &edges, d)));
        }
    }
    for (i, ps) in parents.iter().enumerate() {
        if ps.len() > 1 {
            v.push(Violation::MultipleParents {
                host: d.hosts[i].id.clone(),
                parents: ps.clone(),
            });
        }
    }
    let roots: Vec<usize> = (0..n).filter(|&i| parents[i].is_empty()).collect();
    match roots.as_slice() {
        [] if n > 0 => v.push(Violation::NoRoot),
        [] => {}
        [r] => {
            let mut seen = vec![false; n];
            let mut stack = vec![*r];
            seen[*r] = true;
            while let Some(u) = stack.pop() {
                for &w in &edges[u] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            for (i, s) in seen.iter().enumerate() {
                if !s {
                    v.push(Violation::Unreachable(d.hosts[i].id.clone()));
                }
            }
        }
        many => v.push(Violation::MultipleRoots(many.iter().map(|&i| d.hosts[i].id.clone()).collect())),
    }

    let mut linked = BTreeSet::new();
    for link in &d.data_links {
        let from = check_port(d, &link.from, &mut v);
        let to = check_port(d, &link.to, &mut v);
        for end in [&link.from, &link.to] {
            if !linked.insert(end.clone()) {
                v.push(Violation::PortLinkedTwice(end.clone()));
            }
        }
        if link.from.host == link.to.host {
            v.push(Violation::SameHostDataLink {
                from: link.from.clone(),
                to: link.to.clone(),
            });
        }
        if let (Some(a), Some(b)) = (from, to) {
            if a.dir != PortDirection::Out || b.dir != PortDirection::In {
                v.push(Violation::DataDirection {
                    from: link.from.clone(),
                    to: link.to.clone(),
                });
            }
            if a.ty != b.ty {
                v.push(Violation::DataTypeMismatch {
                    from: link.from.clone(),
                    to: link.to.clone(),
                    from_ty: a.ty,
                    to_ty: b.ty,
                });
            }
        }
    }
    ValidationReport { violations: v }
}

fn check_port<'a>(d: &'a Deployment, r: &PortRef, v: &mut Vec<Violation>) -> Option<&'a PortSpec> {
    let Some(port) = d.host(&r.host).and_then(|h| h.port(&r.port)) else {
        v.push(Violation::UnknownPort(r.clone()));
        return None;
    };
    let host = d.host(&r.host)?;
    match host.tree.find(&port.node) {
        None => v.push(Violation::PortNodeMissing {
            port: r.clone(),
            node: port.node.clone(),
        }),
        Some(node) if !node.is_leaf() => v.push(Violation::InnerNodePort {
            port: r.clone(),
            node: port.node.clone(),
        }),
        Some(_) => {}
    }
    if host.world.type_of(&port.var).is_none() {
        v.push(Violation::PortVariableMissing {
            port: r.clone(),
            var: port.var.clone(),
        });
    }
    Some(port)
}

/// A simple cycle inside a strongly connected component, as host ids.
fn cycle_through(comp: &[usize], edges: &[Vec<usize>], d: &Deployment) -> Vec<String> {
    let start = *comp.iter().min().expect("non-empty component");
    let inside: BTreeSet<usize> = comp.iter().copied().collect();
    // Depth-first walk inside the component until we return to `start`.
    let mut path = vec![start];
    let mut on_path = BTreeSet::from([start]);
    let mut next_edge = vec![0usize];
    while let Some(&u) = path.last() {
        let i = *next_edge.last().unwrap();
        let Some(&w) = edges[u].get(i) else {
            path.pop();
            next_edge.pop();
            on_path.remove(&u);
            continue;
        };
        *next_edge.last_mut().unwrap() += 1;
        if w == start {
            path.push(start);
            break;
        }
        if inside.contains(&w) && on_path.insert(w) {
            path.push(w);
            next_edge.push(0);
        }
    }
    path.into_iter().map(|i| d.hosts[i].id.clone()).collect()
}
