//! Deterministic in-process execution: every TICK is delivered, processed
//! and answered before the sending tick continues.

use std::collections::{BTreeMap, BTreeSet};

use crate::bt::{halt, tick, BtError, RemoteTicker, Status, TickContext, TickRecord, TickTrace, TreeNode};
use crate::btsync::{ConformanceMonitor, Symbol};
use crate::worldmodel::{Value, WorldState};

use super::ports::PortTable;
use super::topology::{Deployment, Injection};
use super::wire::{Body, Message};
use super::{HostEnv, LoggedMessage, RunResult, RuntimeError};

pub(crate) struct HostState {
    pub tree: TreeNode,
    pub world: WorldState,
    pub env: HostEnv,
    pub injections: Vec<Injection>,
}

pub(crate) fn host_states(d: &Deployment, mut envs: BTreeMap<String, HostEnv>) -> BTreeMap<String, HostState> {
    d.hosts
        .iter()
        .map(|h| {
            let mut tree = h.tree.clone();
            tree.reset();
            let state = HostState {
                tree,
                world: h.world.clone(),
                env: envs.remove(&h.id).unwrap_or_default(),
                injections: h.injections.clone(),
            };
            (h.id.clone(), state)
        })
        .collect()
}

pub(crate) fn apply_injections(id: &str, h: &mut HostState, k: u64) -> Result<(), RuntimeError> {
    for inj in h.injections.iter().filter(|i| i.at == k) {
        for (var, value) in &inj.writes {
            h.world
                .set(var, value.clone())
                .map_err(|e| RuntimeError::Injection(format!("{id}.{var}: {e}")))?;
        }
    }
    Ok(())
}

struct Net {
    /// A host is absent from the map while its tree is being ticked.
    hosts: BTreeMap<String, HostState>,
    ports: PortTable,
    monitors: BTreeMap<(String, String), ConformanceMonitor>,
    seq: BTreeMap<(String, String), u64>,
    /// (sender, receiver) pairs with a TICK awaiting its STATUS.
    outstanding: BTreeSet<(String, String)>,
    /// Data for hosts that were busy when it arrived.
    inbox: BTreeMap<String, Vec<(String, Value)>>,
    log: Vec<LoggedMessage>,
    stamp: (u64, f64),
}

impl Net {
    fn send(&mut self, from: &str, to: &str, node: &str, body: Body) {
        let seq = self.seq.entry((from.to_string(), to.to_string())).or_insert(0);
        *seq += 1;
        self.log.push(LoggedMessage {
            k: self.stamp.0,
            from: from.to_string(),
            to: to.to_string(),
            message: Message::new(*seq, node, body),
        });
    }

    fn monitor(&mut self, parent: &str, node: &str, child: &str) -> &mut ConformanceMonitor {
        self.monitors
            .entry((parent.to_string(), node.to_string()))
            .or_insert_with(|| ConformanceMonitor::builtin(format!("{parent}/{node} -> {child}")))
    }

    /// Publishes changed out-port values of `host`. Values for `local`
    /// (the host whose tick is in progress) are returned for the engine to
    /// apply.
    fn flush_ports(&mut self, host: &str, world: &WorldState, local: Option<&str>) -> Result<Vec<(String, Value)>, BtError> {
        let mut back = Vec::new();
        for (port, var) in self.ports.out_ports(host) {
            let Some(value) = world.get(&var).cloned() else { continue };
            let delivery = self.ports.publish(&port, value).map_err(|e| BtError::Remote(e.to_string()))?;
            let Some(d) = delivery else { continue };
            self.send(host, &d.to.host, &d.to.port, Body::Data(d.value.clone()));
            if Some(d.to.host.as_str()) == local {
                back.push((d.var, d.value));
            } else if let Some(h) = self.hosts.get_mut(&d.to.host) {
                h.world.set(&d.var, d.value).map_err(|e| BtError::Remote(e.to_string()))?;
            } else {
                self.inbox.entry(d.to.host.clone()).or_default().push((d.var, d.value));
            }
        }
        Ok(back)
    }

    fn drain_inbox(&mut self, host: &str, world: &mut WorldState) -> Result<(), BtError> {
        for (var, value) in self.inbox.remove(host).unwrap_or_default() {
            world.set(&var, value).map_err(|e| BtError::Remote(e.to_string()))?;
        }
        Ok(())
    }
}

struct Ticker<'n> {
    net: &'n mut Net,
    host: String,
    records: Vec<TickRecord>,
    updates: Vec<(String, Value)>,
}

fn protocol(e: impl std::fmt::Display) -> BtError {
    BtError::Remote(e.to_string())
}

impl Ticker<'_> {
    fn take_child(&mut self, child: &str) -> Result<HostState, BtError> {
        if self.net.outstanding.contains(&(child.to_string(), self.host.clone())) {
            return Err(BtError::Remote(format!(
                "control cycle: {} received TICK while its own TICK to {child} is outstanding",
                self.host
            )));
        }
        self.net.hosts.remove(child).ok_or_else(|| {
            BtError::Remote(format!("control cycle: host `{child}` is already ticking"))
        })
    }

    fn run_child(
        &mut self,
        child: &str,
        state: &mut HostState,
        f: impl FnOnce(&mut TreeNode, &mut WorldState, &mut TickContext<'_>) -> Result<Option<Status>, BtError>,
    ) -> Result<Option<Status>, BtError> {
        self.net.drain_inbox(child, &mut state.world)?;
        let mut trace = TickTrace::new();
        let stamp = self.net.stamp;
        let mut nested = Ticker {
            net: &mut *self.net,
            host: child.to_string(),
            records: Vec::new(),
            updates: Vec::new(),
        };
        let result = {
            let mut ctx = TickContext::new(&mut state.env.actions);
            ctx.resolver = state.env.resolver.as_deref();
            ctx.remote = Some(&mut nested);
            ctx.trace = Some(&mut trace);
            ctx.host = Some(child.to_string());
            ctx.stamp = Some(stamp);
            f(&mut state.tree, &mut state.world, &mut ctx)
        };
        self.records.extend(trace.records);
        let back = self.net.flush_ports(child, &state.world, Some(&self.host))?;
        self.updates.extend(back);
        result
    }
}

impl RemoteTicker for Ticker<'_> {
    fn tick_remote(&mut self, node_id: &str, child: &str, _tree: &str) -> Result<Status, BtError> {
        let mut state = self.take_child(child)?;
        let parent = self.host.clone();
        self.net.send(&parent, child, node_id, Body::Tick);
        let m = self.net.monitor(&parent, node_id, child);
        m.parent_sent(Symbol::Tick).map_err(protocol)?;
        m.child_received(Symbol::Tick).map_err(protocol)?;
        self.net.outstanding.insert((parent.clone(), child.to_string()));

        let result = self.run_child(child, &mut state, |tree, world, ctx| tick(tree, world, ctx).map(Some));
        self.net.hosts.insert(child.to_string(), state);
        self.net.outstanding.remove(&(parent.clone(), child.to_string()));
        let status = result?.expect("tick yields a status");

        self.net.send(child, &parent, node_id, Body::Status(status));
        let m = self.net.monitor(&parent, node_id, child);
        m.child_sent(Symbol::status(status)).map_err(protocol)?;
        m.parent_received(Symbol::status(status)).map_err(protocol)?;
        Ok(status)
    }

    fn halt_remote(&mut self, node_id: &str, child: &str, _tree: &str) -> Result<(), BtError> {
        let mut state = self.take_child(child)?;
        let parent = self.host.clone();
        self.net.send(&parent, child, node_id, Body::Halt);
        let m = self.net.monitor(&parent, node_id, child);
        m.parent_sent(Symbol::Halt).map_err(protocol)?;
        m.child_received(Symbol::Halt).map_err(protocol)?;

        let result = self.run_child(child, &mut state, |tree, _world, ctx| halt(tree, ctx).map(|_| None));
        self.net.hosts.insert(child.to_string(), state);
        result?;

        self.net.send(child, &parent, node_id, Body::Status(Status::Failure));
        let m = self.net.monitor(&parent, node_id, child);
        m.child_sent(Symbol::status(Status::Failure)).map_err(protocol)?;
        m.parent_received(Symbol::status(Status::Failure)).map_err(protocol)?;
        Ok(())
    }

    fn take_updates(&mut self) -> Vec<(String, Value)> {
        let mut out = std::mem::take(&mut self.updates);
        out.extend(self.net.inbox.remove(&self.host).unwrap_or_default());
        out
    }

    fn take_records(&mut self) -> Vec<TickRecord> {
        std::mem::take(&mut self.records)
    }
}

pub(crate) fn run_lockstep(
    d: &Deployment,
    root: &str,
    envs: BTreeMap<String, HostEnv>,
    max_ticks: u64,
    stop_at_completion: bool,
) -> Result<RunResult, RuntimeError> {
    let mut net = Net {
        hosts: host_states(d, envs),
        ports: PortTable::new(d),
        monitors: BTreeMap::new(),
        seq: BTreeMap::new(),
        outstanding: BTreeSet::new(),
        inbox: BTreeMap::new(),
        log: Vec::new(),
        stamp: (0, 0.0),
    };
    let mut trace = TickTrace::new();
    let mut statuses = Vec::new();

    for k in 0..max_ticks {
        for (id, h) in net.hosts.iter_mut() {
            apply_injections(id, h, k)?;
        }
        let mut state = net.hosts.remove(root).ok_or_else(|| RuntimeError::UnknownHost(root.to_string()))?;
        net.stamp = (k, state.world.clock());
        net.drain_inbox(root, &mut state.world)?;
        let mut ticker = Ticker {
            net: &mut net,
            host: root.to_string(),
            records: Vec::new(),
            updates: Vec::new(),
        };
        let status = {
            let mut ctx = TickContext::new(&mut state.env.actions);
            ctx.resolver = state.env.resolver.as_deref();
            ctx.remote = Some(&mut ticker);
            ctx.trace = Some(&mut trace);
            ctx.host = Some(root.to_string());
            ctx.stamp = Some((k, state.world.clock()));
            tick(&mut state.tree, &mut state.world, &mut ctx)
        };
        let status = match status {
            Ok(s) => s,
            Err(e) => {
                net.hosts.insert(root.to_string(), state);
                return Err(e.into());
            }
        };
        net.flush_ports(root, &state.world, None)?;
        net.hosts.insert(root.to_string(), state);
        let pending: Vec<String> = net.inbox.keys().cloned().collect();
        for id in pending {
            if let Some(h) = net.hosts.get_mut(&id) {
                let mut world = std::mem::take(&mut h.world);
                net.drain_inbox(&id, &mut world)?;
                net.hosts.get_mut(&id).expect("present").world = world;
            }
        }
        statuses.push(status);
        if stop_at_completion && status != Status::Running {
            break;
        }
    }

    Ok(RunResult {
        statuses,
        trace,
        messages: net.log,
        worlds: net.hosts.into_iter().map(|(id, h)| (id, h.world)).collect(),
        failures: Vec::new(),
    })
}
