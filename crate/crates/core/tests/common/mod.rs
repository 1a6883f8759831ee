//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use btweave::bt::{ActionImpl, ActionRegistry, Params, Status, Step, TreeNode};
use btweave::runtime::{
    Body, DataLink, Deployment, HostSpec, Message, PortDirection, PortRef, PortSpec,
};
use btweave::skills::{Skill, SkillInterface, SkillRegistry};
use btweave::worldmodel::{CmpOp, Condition, Literal, Value, ValueType, WorldState};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const NVARS: usize = 5;

pub fn var(i: usize) -> String {
    format!("x{i}")
}

pub fn bool_world(bits: &[bool]) -> WorldState {
    let mut w = WorldState::new();
    for (i, b) in bits.iter().enumerate() {
        w.declare(var(i), Value::Bool(*b)).unwrap();
    }
    w
}

pub fn world_bits(w: &WorldState, n: usize) -> Vec<bool> {
    (0..n).map(|i| w.get(&var(i)).and_then(Value::as_bool).unwrap()).collect()
}

// ---------------------------------------------------------------------------
// Random trees and a direct recursive reference evaluator.

/// A scripted action: Running for `ticks - 1` ticks, then its outcome.
/// Success may write one variable.
#[derive(Clone, Debug, PartialEq)]
pub struct ActSpec {
    pub name: String,
    pub ticks: u32,
    pub succeed: bool,
    pub write: Option<(usize, bool)>,
}

#[derive(Clone, Debug)]
pub enum RNode {
    Seq(Vec<RNode>),
    Fb(Vec<RNode>),
    SeqMem(Vec<RNode>),
    Cond { var: usize, want: bool },
    Act(ActSpec),
}

pub struct TreeGen {
    pub max_depth: usize,
    pub writes: bool,
    next_action: usize,
}

impl TreeGen {
    pub fn new(max_depth: usize, writes: bool) -> Self {
        TreeGen {
            max_depth,
            writes,
            next_action: 0,
        }
    }

    pub fn gen(&mut self, r: &mut ChaCha8Rng) -> RNode {
        self.next_action = 0;
        self.node(r, 0)
    }

    fn node(&mut self, r: &mut ChaCha8Rng, depth: usize) -> RNode {
        let leaf = depth >= self.max_depth || (depth > 0 && r.gen_bool(0.35));
        if leaf {
            if r.gen_bool(0.5) {
                RNode::Cond {
                    var: r.gen_range(0..NVARS),
                    want: r.gen(),
                }
            } else {
                let name = format!("a{}", self.next_action);
                self.next_action += 1;
                let write = (self.writes && r.gen_bool(0.5)).then(|| (r.gen_range(0..NVARS), r.gen()));
                RNode::Act(ActSpec {
                    name,
                    ticks: r.gen_range(1..=3),
                    succeed: r.gen_bool(0.75),
                    write,
                })
            }
        } else {
            let n = r.gen_range(1..=4);
            let kids = (0..n).map(|_| self.node(r, depth + 1)).collect();
            match r.gen_range(0..3) {
                0 => RNode::Seq(kids),
                1 => RNode::Fb(kids),
                _ => RNode::SeqMem(kids),
            }
        }
    }
}

impl RNode {
    pub fn actions(&self) -> Vec<&ActSpec> {
        match self {
            RNode::Act(a) => vec![a],
            RNode::Cond { .. } => vec![],
            RNode::Seq(k) | RNode::Fb(k) | RNode::SeqMem(k) => k.iter().flat_map(|c| c.actions()).collect(),
        }
    }

    /// Engine tree; node ids are paths from `id`.
    pub fn to_tree(&self, id: &str) -> TreeNode {
        let kids = |k: &[RNode]| -> Vec<TreeNode> {
            k.iter().enumerate().map(|(i, c)| c.to_tree(&format!("{id}/{i}"))).collect()
        };
        match self {
            RNode::Seq(k) => TreeNode::sequence(id, kids(k)),
            RNode::Fb(k) => TreeNode::fallback(id, kids(k)),
            RNode::SeqMem(k) => TreeNode::sequence_mem(id, kids(k)),
            RNode::Cond { var: v, want } => TreeNode::condition(
                id,
                Condition::new(vec![Literal::new(var(*v), CmpOp::Eq, Value::Bool(*want))]),
            ),
            RNode::Act(a) => TreeNode::action(id, a.name.clone()),
        }
    }
}

pub struct ScriptedAction {
    spec: ActSpec,
    count: u32,
}

impl ActionImpl for ScriptedAction {
    fn step(&mut self, _: &WorldState, _: &Params) -> Step {
        self.count += 1;
        if self.count < self.spec.ticks {
            return Step::running();
        }
        self.count = 0;
        if !self.spec.succeed {
            return Step::failure();
        }
        let mut s = Step::success();
        if let Some((v, b)) = self.spec.write {
            s = s.write(var(v), Value::Bool(b));
        }
        s
    }

    fn on_halt(&mut self) {
        self.count = 0;
    }
}

pub fn registry_for(tree: &RNode) -> ActionRegistry {
    let mut r = ActionRegistry::new();
    for a in tree.actions() {
        r.register(
            a.name.clone(),
            ScriptedAction {
                spec: a.clone(),
                count: 0,
            },
        );
    }
    r
}

/// Reference evaluator: the tick rules applied by direct recursion over
/// its own node state, sharing no code with the engine.
pub struct RefNode {
    kind: RKind,
    children: Vec<RefNode>,
    running: bool,
    mem: usize,
    count: u32,
}

enum RKind {
    Seq,
    Fb,
    SeqMem,
    Cond(usize, bool),
    Act(ActSpec),
}

impl RefNode {
    pub fn new(n: &RNode) -> Self {
        let (kind, kids): (RKind, &[RNode]) = match n {
            RNode::Seq(k) => (RKind::Seq, k),
            RNode::Fb(k) => (RKind::Fb, k),
            RNode::SeqMem(k) => (RKind::SeqMem, k),
            RNode::Cond { var, want } => (RKind::Cond(*var, *want), &[]),
            RNode::Act(a) => (RKind::Act(a.clone()), &[]),
        };
        RefNode {
            kind,
            children: kids.iter().map(RefNode::new).collect(),
            running: false,
            mem: 0,
            count: 0,
        }
    }

    pub fn tick(&mut self, w: &mut [bool]) -> Status {
        let s = match &self.kind {
            RKind::Cond(v, want) => {
                if w[*v] == *want {
                    Status::Success
                } else {
                    Status::Failure
                }
            }
            RKind::Act(a) => {
                self.count += 1;
                if self.count < a.ticks {
                    Status::Running
                } else {
                    self.count = 0;
                    if a.succeed {
                        if let Some((v, b)) = a.write {
                            w[v] = b;
                        }
                        Status::Success
                    } else {
                        Status::Failure
                    }
                }
            }
            RKind::Seq | RKind::SeqMem => {
                let memory = matches!(self.kind, RKind::SeqMem);
                let start = if memory { self.mem } else { 0 };
                let mut result = Status::Success;
                for i in start..self.children.len() {
                    let c = self.children[i].tick(w);
                    if c == Status::Success {
                        if memory {
                            self.mem = i + 1;
                        }
                        continue;
                    }
                    for later in &mut self.children[i + 1..] {
                        later.halt();
                    }
                    if c == Status::Failure {
                        self.mem = 0;
                    }
                    result = c;
                    break;
                }
                if result == Status::Success {
                    self.mem = 0;
                }
                result
            }
            RKind::Fb => {
                let mut result = Status::Failure;
                for i in 0..self.children.len() {
                    let c = self.children[i].tick(w);
                    if c != Status::Failure {
                        for later in &mut self.children[i + 1..] {
                            later.halt();
                        }
                        result = c;
                        break;
                    }
                }
                result
            }
        };
        self.running = s == Status::Running;
        s
    }

    fn halt(&mut self) {
        if !self.running {
            return;
        }
        for c in &mut self.children {
            c.halt();
        }
        self.running = false;
        self.mem = 0;
        self.count = 0;
    }
}

/// Ids of every non-root node of `tree`, as paths under `id`.
pub fn non_root_paths(n: &RNode, id: &str) -> Vec<(String, RNode)> {
    let mut out = Vec::new();
    if let RNode::Seq(k) | RNode::Fb(k) | RNode::SeqMem(k) = n {
        for (i, c) in k.iter().enumerate() {
            let cid = format!("{id}/{i}");
            out.push((cid.clone(), c.clone()));
            out.extend(non_root_paths(c, &cid));
        }
    }
    out
}

/// Replaces the node at `path` by a remote leaf into `host.tree`.
pub fn cut(tree: &TreeNode, path: &str, host: &str, tree_name: &str) -> TreeNode {
    if tree.id == path {
        return TreeNode::remote(path, host, tree_name);
    }
    let mut t = tree.clone();
    t.children = tree.children.iter().map(|c| cut(c, path, host, tree_name)).collect();
    t
}

// ---------------------------------------------------------------------------
// Random skills over boolean worlds.

pub fn lit(v: usize, b: bool) -> Literal {
    Literal::new(var(v), CmpOp::Eq, Value::Bool(b))
}

/// A conjunction of 1..=2 literals over distinct variables from `vars`.
pub fn random_conj(r: &mut ChaCha8Rng, vars: &[usize]) -> Vec<(usize, bool)> {
    let n = r.gen_range(1..=2.min(vars.len()));
    let mut pool = vars.to_vec();
    let mut out = Vec::new();
    for _ in 0..n {
        let v = pool.remove(r.gen_range(0..pool.len()));
        out.push((v, r.gen()));
    }
    out
}

pub fn conj(lits: &[(usize, bool)]) -> Condition {
    Condition::new(lits.iter().map(|&(v, b)| lit(v, b)).collect())
}

pub fn holds(lits: &[(usize, bool)], w: &[bool]) -> bool {
    lits.iter().all(|&(v, b)| w[v] == b)
}

/// Counts its steps; Running for `ticks - 1` steps, then Success and the
/// given writes.
pub struct CountingAction {
    pub ticks: u32,
    pub writes: Vec<(String, Value)>,
    pub steps: std::sync::Arc<std::sync::atomic::AtomicU32>,
    count: u32,
}

impl CountingAction {
    pub fn new(ticks: u32, writes: Vec<(String, Value)>) -> (Self, std::sync::Arc<std::sync::atomic::AtomicU32>) {
        let steps = std::sync::Arc::new(std::sync::atomic::AtomicU32::new(0));
        (
            CountingAction {
                ticks,
                writes,
                steps: steps.clone(),
                count: 0,
            },
            steps,
        )
    }
}

impl ActionImpl for CountingAction {
    fn step(&mut self, _: &WorldState, _: &Params) -> Step {
        self.steps.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        self.count += 1;
        if self.count < self.ticks {
            return Step::running();
        }
        self.count = 0;
        let mut s = Step::success();
        for (v, x) in &self.writes {
            s = s.write(v.clone(), x.clone());
        }
        s
    }

    fn on_halt(&mut self) {
        self.count = 0;
    }
}

// ---------------------------------------------------------------------------
// Delete-free STRIPS domains and a breadth-first plan oracle.

#[derive(Clone, Debug)]
pub struct StripsSkill {
    pub pre: Vec<usize>,
    pub add: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Domain {
    pub nvars: usize,
    pub skills: Vec<StripsSkill>,
    pub init: Vec<bool>,
    pub goal: Vec<usize>,
}

pub fn random_domain(r: &mut ChaCha8Rng) -> Domain {
    let nvars = r.gen_range(2..=6);
    let all: Vec<usize> = (0..nvars).collect();
    let nskills = r.gen_range(1..=8);
    let skills = (0..nskills)
        .map(|_| {
            let npre = r.gen_range(0..=2.min(nvars));
            let mut pool = all.clone();
            let pre: Vec<usize> = (0..npre).map(|_| pool.remove(r.gen_range(0..pool.len()))).collect();
            let mut pool = all.clone();
            let nadd = r.gen_range(1..=2.min(nvars));
            let add: Vec<usize> = (0..nadd).map(|_| pool.remove(r.gen_range(0..pool.len()))).collect();
            StripsSkill { pre, add }
        })
        .collect();
    let init = (0..nvars).map(|_| r.gen_bool(0.3)).collect();
    let mut pool = all;
    let ngoal = r.gen_range(1..=2.min(nvars));
    let goal = (0..ngoal).map(|_| pool.remove(r.gen_range(0..pool.len()))).collect();
    Domain {
        nvars,
        skills,
        init,
        goal,
    }
}

impl Domain {
    /// Length of the shortest plan, by breadth-first search over states.
    pub fn shortest_plan(&self) -> Option<usize> {
        let start: u32 = self.init.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| 1 << i).sum();
        let goal: u32 = self.goal.iter().map(|i| 1 << i).sum();
        let mut dist = HashMap::from([(start, 0usize)]);
        let mut q = VecDeque::from([start]);
        while let Some(s) = q.pop_front() {
            if s & goal == goal {
                return Some(dist[&s]);
            }
            for sk in &self.skills {
                let pre: u32 = sk.pre.iter().map(|i| 1 << i).sum();
                if s & pre != pre {
                    continue;
                }
                let next = s | sk.add.iter().map(|i| 1u32 << i).sum::<u32>();
                if !dist.contains_key(&next) {
                    dist.insert(next, dist[&s] + 1);
                    q.push_back(next);
                }
            }
        }
        None
    }

    fn true_conj(vars: &[usize]) -> Condition {
        if vars.is_empty() {
            Condition::always()
        } else {
            Condition::new(vars.iter().map(|&v| lit(v, true)).collect())
        }
    }

    pub fn registry(&self) -> SkillRegistry {
        let mut reg = SkillRegistry::new();
        for (i, s) in self.skills.iter().enumerate() {
            let skill = Skill::new(
                format!("s{i}"),
                Self::true_conj(&s.pre),
                Condition::always(),
                Self::true_conj(&s.add),
                format!("do{i}"),
            );
            reg.register_skill(skill, SkillInterface::new()).unwrap();
        }
        reg
    }

    pub fn actions(&self) -> ActionRegistry {
        let mut r = ActionRegistry::new();
        for (i, s) in self.skills.iter().enumerate() {
            let writes: Vec<(String, Value)> = s.add.iter().map(|&v| (var(v), Value::Bool(true))).collect();
            r.register_fn(format!("do{i}"), move |_, _| {
                let mut st = Step::success();
                for (v, x) in &writes {
                    st = st.write(v.clone(), x.clone());
                }
                st
            });
        }
        r
    }

    pub fn goal_conditions(&self) -> Vec<Condition> {
        self.goal.iter().map(|&v| conj(&[(v, true)])).collect()
    }

    pub fn world(&self) -> WorldState {
        bool_world(&self.init)
    }
}

// ---------------------------------------------------------------------------
// Snowflake deployment corpus.

/// A valid snowflake: a random host tree whose inner hosts run remote
/// leaves to their children, with typed data links between leaf nodes of
/// leaf hosts.
pub fn random_snowflake(r: &mut ChaCha8Rng, idx: usize) -> Deployment {
    let n = r.gen_range(2..=7);
    let parent: Vec<Option<usize>> = (0..n).map(|i| (i > 0).then(|| r.gen_range(0..i))).collect();
    let name = |i: usize| format!("H{i}");
    let mut hosts = Vec::new();
    for i in 0..n {
        let kids: Vec<usize> = (0..n).filter(|&j| parent[j] == Some(i)).collect();
        let mut leaves: Vec<TreeNode> = kids
            .iter()
            .map(|&j| TreeNode::remote(format!("to{j}"), name(j), format!("t{j}")))
            .collect();
        leaves.push(TreeNode::condition("ok", Condition::always()));
        leaves.push(TreeNode::action("work", "noop"));
        let tree = TreeNode::sequence("root", leaves);
        let world = WorldState::new().with("v", Value::Int(0));
        hosts.push(HostSpec::new(name(i), format!("t{i}"), tree, world));
    }
    let leaf_hosts: Vec<usize> = (0..n).filter(|&i| !parent.contains(&Some(i))).collect();
    let mut data_links = Vec::new();
    if leaf_hosts.len() >= 2 {
        let a = leaf_hosts[0];
        let b = leaf_hosts[1 + r.gen_range(0..leaf_hosts.len() - 1)];
        hosts[a].ports.push(PortSpec {
            name: "out".into(),
            ty: ValueType::Int,
            dir: PortDirection::Out,
            node: "work".into(),
            var: "v".into(),
        });
        hosts[b].ports.push(PortSpec {
            name: "in".into(),
            ty: ValueType::Int,
            dir: PortDirection::In,
            node: "ok".into(),
            var: "v".into(),
        });
        data_links.push(DataLink {
            from: PortRef::new(name(a), "out"),
            to: PortRef::new(name(b), "in"),
        });
    }
    Deployment {
        name: format!("d{idx}"),
        hosts,
        data_links,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    ControlCycle,
    InnerNodeData,
}

/// Adds a control link back to the root from the deepest host, or
/// attaches a data port to an inner tree node.
pub fn mutate(d: &mut Deployment, m: Mutation, r: &mut ChaCha8Rng) {
    match m {
        Mutation::ControlCycle => {
            let root_tree = d.hosts[0].tree_name.clone();
            let root_id = d.hosts[0].id.clone();
            let last = d.hosts.len() - 1;
            let victim = r.gen_range(1..=last);
            d.hosts[victim]
                .tree
                .children
                .insert(0, TreeNode::remote("back", root_id, root_tree));
        }
        Mutation::InnerNodeData => {
            let n = d.hosts.len();
            let a = r.gen_range(0..n);
            let b = (a + 1 + r.gen_range(0..n - 1)) % n;
            d.hosts[a].ports.push(PortSpec {
                name: "inner_out".into(),
                ty: ValueType::Int,
                dir: PortDirection::Out,
                node: "root".into(),
                var: "v".into(),
            });
            d.hosts[b].ports.push(PortSpec {
                name: "inner_in".into(),
                ty: ValueType::Int,
                dir: PortDirection::In,
                node: "ok".into(),
                var: "v".into(),
            });
            let (ha, hb) = (d.hosts[a].id.clone(), d.hosts[b].id.clone());
            d.data_links.push(DataLink {
                from: PortRef::new(ha, "inner_out"),
                to: PortRef::new(hb, "inner_in"),
            });
        }
    }
}

pub fn noop_env() -> ActionRegistry {
    let mut r = ActionRegistry::new();
    r.register_fn("noop", |_, _| Step::success());
    r
}

// ---------------------------------------------------------------------------
// Random wire messages.

const NODE_CHARS: &[char] = &['a', 'z', 'Q', '0', '/', '_', '-', ' ', '"', '\\', '=', 'é', '\t', '.', '@'];

pub fn random_text(r: &mut ChaCha8Rng, max: usize) -> String {
    let n = r.gen_range(0..=max);
    (0..n).map(|_| NODE_CHARS[r.gen_range(0..NODE_CHARS.len())]).collect()
}

pub fn random_real(r: &mut ChaCha8Rng) -> f64 {
    match r.gen_range(0..6) {
        0 => f64::from_bits(r.gen()),
        1 => [0.0, -0.0, f64::INFINITY, f64::NEG_INFINITY, f64::MIN_POSITIVE, f64::MAX][r.gen_range(0..6)],
        2 => f64::from_bits(0x7ff0_0000_0000_0001 | (r.gen::<u64>() & 0x000f_ffff_ffff_ffff)),
        3 => r.gen_range(-1e6..1e6),
        4 => f64::from_bits(r.gen_range(1..1000)),
        _ => r.gen::<f64>(),
    }
}

pub fn random_value(r: &mut ChaCha8Rng) -> Value {
    match r.gen_range(0..5) {
        0 => Value::Bool(r.gen()),
        1 => Value::Int(r.gen()),
        2 => Value::Real(random_real(r)),
        3 => Value::Str(random_text(r, 12)),
        _ => {
            let first = ['a', 'B', '_'][r.gen_range(0..3)];
            let rest: String = (0..r.gen_range(0..6)).map(|_| ['x', '1', '_'][r.gen_range(0..3)]).collect();
            Value::Enum(format!("{first}{rest}"))
        }
    }
}

pub fn random_message(r: &mut ChaCha8Rng) -> Message {
    let body = match r.gen_range(0..4) {
        0 => Body::Tick,
        1 => Body::Halt,
        2 => Body::Status([Status::Running, Status::Success, Status::Failure][r.gen_range(0..3)]),
        _ => Body::Data(random_value(r)),
    };
    let mut node = random_text(r, 16);
    if node.is_empty() && r.gen_bool(0.5) {
        node.push('n');
    }
    Message::new(r.gen(), node, body)
}
