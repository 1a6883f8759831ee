use crate::worldmodel::{Condition, Value, WorldState};

use super::action::ActionRegistry;
use super::node::{NodeKind, Status, TreeNode};
use super::trace::{TickRecord, TickTrace};
use super::BtError;

/// Delivers ticks and halts to subtrees running elsewhere.
pub trait RemoteTicker {
    fn tick_remote(&mut self, node_id: &str, host: &str, tree: &str) -> Result<Status, BtError>;
    fn halt_remote(&mut self, node_id: &str, host: &str, tree: &str) -> Result<(), BtError>;

    /// Variable writes that arrived for the ticking host while a remote
    /// call was in progress, applied right after the call returns.
    fn take_updates(&mut self) -> Vec<(String, Value)> {
        Vec::new()
    }

    /// Trace records produced remotely during the last call, placed in
    /// the local trace before the remote leaf's own record.
    fn take_records(&mut self) -> Vec<TickRecord> {
        Vec::new()
    }
}

/// Tick-time fallback for lookup decorators that were not bound at plan time.
pub trait LookupResolver {
    fn resolve(&self, wanted: &Condition, node_id: &str) -> Option<TreeNode>;
}

/// Everything a tick needs besides the tree and the world.
pub struct TickContext<'a> {
    pub actions: &'a mut ActionRegistry,
    pub remote: Option<&'a mut dyn RemoteTicker>,
    pub resolver: Option<&'a dyn LookupResolver>,
    pub trace: Option<&'a mut TickTrace>,
    /// Tags trace records, for merged distributed traces.
    pub host: Option<String>,
    /// Overrides the `(k, t)` stamp; defaults to the world's own clock.
    pub stamp: Option<(u64, f64)>,
}

impl<'a> TickContext<'a> {
    pub fn new(actions: &'a mut ActionRegistry) -> Self {
        TickContext {
            actions,
            remote: None,
            resolver: None,
            trace: None,
            host: None,
            stamp: None,
        }
    }

    pub fn with_trace(mut self, trace: &'a mut TickTrace) -> Self {
        self.trace = Some(trace);
        self
    }

    pub fn with_remote(mut self, remote: &'a mut dyn RemoteTicker) -> Self {
        self.remote = Some(remote);
        self
    }

    pub fn with_resolver(mut self, resolver: &'a dyn LookupResolver) -> Self {
        self.resolver = Some(resolver);
        self
    }
}

/// Ticks `root` once against `world` and advances the clock by one period.
pub fn tick(
    root: &mut TreeNode,
    world: &mut WorldState,
    ctx: &mut TickContext<'_>,
) -> Result<Status, BtError> {
    let stamp = ctx.stamp.unwrap_or((world.ticks(), world.clock()));
    let status = tick_node(root, world, ctx, stamp)?;
    world.advance();
    Ok(status)
}

/// Preempts every running node below `root`. Running actions get their
/// halt hook, remote leaves forward the halt, and all memory is cleared.
pub fn halt(root: &mut TreeNode, ctx: &mut TickContext<'_>) -> Result<(), BtError> {
    halt_node(root, ctx)
}

fn tick_node(
    node: &mut TreeNode,
    world: &mut WorldState,
    ctx: &mut TickContext<'_>,
    stamp: (u64, f64),
) -> Result<Status, BtError> {
    let status = match &node.kind {
        NodeKind::Condition(c) => match c.eval(world) {
            Ok(true) => Status::Success,
            Ok(false) => Status::Failure,
            Err(source) => {
                return Err(BtError::Condition {
                    node: node.id.clone(),
                    source,
                })
            }
        },
        NodeKind::Action {
            action,
            params,
            mapping,
        } => {
            if !node.state.running {
                for (param, var) in mapping {
                    let value = params
                        .get(param)
                        .ok_or_else(|| BtError::MissingParam(param.clone()))?;
                    world.set(var, value.clone()).map_err(|source| BtError::Update {
                        node: node.id.clone(),
                        source,
                    })?;
                }
            }
            let imp = ctx
                .actions
                .get_mut(action)
                .ok_or_else(|| BtError::UnboundAction(action.clone()))?;
            let step = imp.step(world, params);
            for (var, value) in step.updates {
                world.set(&var, value).map_err(|source| BtError::Update {
                    node: node.id.clone(),
                    source,
                })?;
            }
            step.status
        }
        NodeKind::Remote { host, tree } => {
            let remote = ctx
                .remote
                .as_deref_mut()
                .ok_or_else(|| BtError::UnboundRemote(format!("{host}.{tree}")))?;
            let status = remote.tick_remote(&node.id, host, tree)?;
            let records = remote.take_records();
            if let Some(trace) = ctx.trace.as_deref_mut() {
                for r in records {
                    trace.push(r);
                }
            }
            let remote = ctx.remote.as_deref_mut().expect("checked above");
            for (var, value) in remote.take_updates() {
                world.set(&var, value).map_err(|source| BtError::Update {
                    node: node.id.clone(),
                    source,
                })?;
            }
            status
        }
        NodeKind::Lookup { wanted } => {
            if node.children.is_empty() {
                if let Some(found) = ctx.resolver.and_then(|r| r.resolve(wanted, &node.id)) {
                    node.children.push(found);
                }
            }
            match node.children.first_mut() {
                Some(child) => tick_node(child, world, ctx, stamp)?,
                None => Status::Failure,
            }
        }
        NodeKind::Sequence => tick_sequence(node, world, ctx, stamp, 0)?,
        NodeKind::SequenceMem => {
            let from = node.state.mem;
            tick_sequence(node, world, ctx, stamp, from)?
        }
        NodeKind::Fallback => {
            let mut result = Status::Failure;
            for i in 0..node.children.len() {
                let s = tick_node(&mut node.children[i], world, ctx, stamp)?;
                if s != Status::Failure {
                    halt_after(node, i, ctx)?;
                    result = s;
                    break;
                }
            }
            result
        }
    };
    node.state.running = status == Status::Running;
    if let Some(trace) = ctx.trace.as_deref_mut() {
        trace.push(TickRecord {
            k: stamp.0,
            host: ctx.host.clone(),
            node: node.id.clone(),
            status,
            t: stamp.1,
        });
    }
    Ok(status)
}

/// Shared by the reactive and memory sequences; `from` is the first child
/// to tick. Memory only advances for `SequenceMem`.
fn tick_sequence(
    node: &mut TreeNode,
    world: &mut WorldState,
    ctx: &mut TickContext<'_>,
    stamp: (u64, f64),
    from: usize,
) -> Result<Status, BtError> {
    let remember = matches!(node.kind, NodeKind::SequenceMem);
    for i in from..node.children.len() {
        let s = tick_node(&mut node.children[i], world, ctx, stamp)?;
        match s {
            Status::Success => {
                if remember {
                    node.state.mem = i + 1;
                }
            }
            Status::Running | Status::Failure => {
                halt_after(node, i, ctx)?;
                if s == Status::Failure {
                    node.state.mem = 0;
                }
                return Ok(s);
            }
        }
    }
    node.state.mem = 0;
    Ok(Status::Success)
}

fn halt_after(node: &mut TreeNode, i: usize, ctx: &mut TickContext<'_>) -> Result<(), BtError> {
    for child in node.children.iter_mut().skip(i + 1) {
        if child.state.running {
            halt_node(child, ctx)?;
        }
    }
    Ok(())
}

fn halt_node(node: &mut TreeNode, ctx: &mut TickContext<'_>) -> Result<(), BtError> {
    if node.state.running {
        match &node.kind {
            NodeKind::Action { action, .. } => {
                if let Some(imp) = ctx.actions.get_mut(action) {
                    imp.on_halt();
                }
            }
            NodeKind::Remote { host, tree } => {
                if let Some(remote) = ctx.remote.as_deref_mut() {
                    remote.halt_remote(&node.id, host, tree)?;
                }
            }
            _ => {}
        }
    }
    for child in &mut node.children {
        halt_node(child, ctx)?;
    }
    node.state = Default::default();
    Ok(())
}

/// Owns a tree with its world and actions; the single-host executor.
pub struct Executor {
    pub tree: TreeNode,
    pub world: WorldState,
    pub actions: ActionRegistry,
    pub trace: TickTrace,
    pub resolver: Option<Box<dyn LookupResolver>>,
    pub record: bool,
}

impl Executor {
    pub fn new(tree: TreeNode, world: WorldState, actions: ActionRegistry) -> Self {
        Executor {
            tree,
            world,
            actions,
            trace: TickTrace::new(),
            resolver: None,
            record: true,
        }
    }

    pub fn tick(&mut self) -> Result<Status, BtError> {
        let mut ctx = TickContext::new(&mut self.actions);
        ctx.resolver = self.resolver.as_deref();
        if self.record {
            ctx.trace = Some(&mut self.trace);
        }
        tick(&mut self.tree, &mut self.world, &mut ctx)
    }

    pub fn halt(&mut self) -> Result<(), BtError> {
        let mut ctx = TickContext::new(&mut self.actions);
        halt(&mut self.tree, &mut ctx)
    }

    /// Ticks until the root stops returning Running or `max_ticks` is hit;
    /// returns the root status of every tick.
    pub fn run(&mut self, max_ticks: usize) -> Result<Vec<Status>, BtError> {
        let mut out = Vec::new();
        for _ in 0..max_ticks {
            let s = self.tick()?;
            out.push(s);
            if s != Status::Running {
                break;
            }
        }
        Ok(out)
    }
}
