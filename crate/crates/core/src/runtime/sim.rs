//! Asynchronous execution over a simulated network: every message takes
//! `delay` steps, hosts only tick when a TICK reaches them (the root ticks
//! every step), and hosts can be crashed at a given step.

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bt::{halt, tick, BtError, RemoteTicker, Status, TickContext, TickTrace};
use crate::btsync::{ConformanceMonitor, Symbol};

use super::lockstep::{apply_injections, host_states};
use super::ports::PortTable;
use super::proxy::AsyncProxy;
use super::topology::Deployment;
use super::wire::{Body, Message};
use super::{HostEnv, LoggedMessage, RunResult, RuntimeError};

#[derive(Clone, Debug, PartialEq)]
pub struct AsyncConfig {
    /// Steps a message spends in flight; at least 1.
    pub delay: u64,
    /// Steps a proxy waits for a reply before failing its link.
    pub timeout: u64,
    /// Per-link timeouts keyed by the remote leaf id.
    pub link_timeouts: BTreeMap<String, u64>,
    /// Host id to the step from which it is dead.
    pub crashes: BTreeMap<String, u64>,
    /// Extra delay drawn uniformly from `0..=jitter` per message; each
    /// link still delivers in send order.
    pub jitter: u64,
    pub seed: u64,
}

impl Default for AsyncConfig {
    fn default() -> Self {
        AsyncConfig {
            delay: 1,
            timeout: 10,
            link_timeouts: BTreeMap::new(),
            crashes: BTreeMap::new(),
            jitter: 0,
            seed: 0,
        }
    }
}

struct Envelope {
    at: u64,
    from: String,
    to: String,
    message: Message,
}

/// Collects what a host's proxies want to send during one tick.
struct AsyncTicker<'a> {
    host: &'a str,
    now: u64,
    cfg: &'a AsyncConfig,
    proxies: &'a mut BTreeMap<String, AsyncProxy>,
    out: Vec<(String, String, Body)>,
    failed: Vec<String>,
}

impl AsyncTicker<'_> {
    fn proxy(&mut self, node: &str) -> &mut AsyncProxy {
        let timeout = self.cfg.link_timeouts.get(node).copied().unwrap_or(self.cfg.timeout);
        self.proxies.entry(node.to_string()).or_insert_with(|| AsyncProxy::new(timeout))
    }
}

impl RemoteTicker for AsyncTicker<'_> {
    fn tick_remote(&mut self, node_id: &str, child: &str, _tree: &str) -> Result<Status, BtError> {
        let now = self.now;
        let p = self.proxy(node_id);
        let was_failed = p.has_failed();
        let (status, sends) = p.on_tick(now);
        if !was_failed && p.has_failed() {
            self.failed.push(format!("{}/{node_id} -> {child}", self.host));
        }
        for b in sends {
            self.out.push((child.to_string(), node_id.to_string(), b));
        }
        Ok(status)
    }

    fn halt_remote(&mut self, node_id: &str, child: &str, _tree: &str) -> Result<(), BtError> {
        let now = self.now;
        for b in self.proxy(node_id).on_halt(now) {
            self.out.push((child.to_string(), node_id.to_string(), b));
        }
        Ok(())
    }
}

struct Sim<'d> {
    d: &'d Deployment,
    cfg: AsyncConfig,
    queue: Vec<Envelope>,
    seq: BTreeMap<(String, String), u64>,
    monitors: BTreeMap<(String, String), ConformanceMonitor>,
    log: Vec<LoggedMessage>,
    failures: Vec<String>,
    rng: ChaCha8Rng,
    /// Latest delivery step per (from, to), to keep links FIFO.
    last_at: BTreeMap<(String, String), u64>,
}

impl Sim<'_> {
    fn send(&mut self, now: u64, from: &str, to: &str, node: &str, body: Body) {
        let key = (from.to_string(), to.to_string());
        let seq = self.seq.entry(key.clone()).or_insert(0);
        *seq += 1;
        let message = Message::new(*seq, node, body);
        let extra = if self.cfg.jitter > 0 { self.rng.gen_range(0..=self.cfg.jitter) } else { 0 };
        let last = self.last_at.entry(key).or_insert(0);
        let at = (now + self.cfg.delay + extra).max(*last);
        *last = at;
        self.log.push(LoggedMessage {
            k: now,
            from: from.to_string(),
            to: to.to_string(),
            message: message.clone(),
        });
        self.queue.push(Envelope {
            at,
            from: from.to_string(),
            to: to.to_string(),
            message,
        });
    }

    fn monitor(&mut self, parent: &str, node: &str) -> &mut ConformanceMonitor {
        let link = format!("{parent}/{node}");
        self.monitors
            .entry((parent.to_string(), node.to_string()))
            .or_insert_with(|| ConformanceMonitor::builtin(link))
    }

    fn crashed(&self, host: &str, now: u64) -> bool {
        self.cfg.crashes.get(host).is_some_and(|&at| now >= at)
    }

    /// Sends what a host's proxies produced, as the parent of each link.
    fn emit(&mut self, now: u64, host: &str, out: Vec<(String, String, Body)>) -> Result<(), RuntimeError> {
        for (child, node, body) in out {
            let sym = match body {
                Body::Tick => Symbol::Tick,
                _ => Symbol::Halt,
            };
            self.monitor(host, &node).parent_sent(sym)?;
            self.send(now, host, &child, &node, body);
        }
        Ok(())
    }
}

pub(crate) fn run_async(
    d: &Deployment,
    root: &str,
    envs: BTreeMap<String, HostEnv>,
    max_ticks: u64,
    stop_at_completion: bool,
    cfg: &AsyncConfig,
) -> Result<RunResult, RuntimeError> {
    let mut cfg = cfg.clone();
    cfg.delay = cfg.delay.max(1);
    let mut hosts = host_states(d, envs);
    let mut ports = PortTable::new(d);
    let mut proxies: BTreeMap<String, BTreeMap<String, AsyncProxy>> = BTreeMap::new();
    let mut inboxes: BTreeMap<String, VecDeque<(String, Message)>> = BTreeMap::new();
    let seed = cfg.seed;
    let mut sim = Sim {
        d,
        cfg,
        queue: Vec::new(),
        seq: BTreeMap::new(),
        monitors: BTreeMap::new(),
        log: Vec::new(),
        failures: Vec::new(),
        rng: ChaCha8Rng::seed_from_u64(seed),
        last_at: BTreeMap::new(),
    };
    let order = host_order(d, root);
    let mut trace = TickTrace::new();
    let mut statuses = Vec::new();

    for k in 0..max_ticks {
        // Deliver everything due.
        let (due, later): (Vec<_>, Vec<_>) = std::mem::take(&mut sim.queue).into_iter().partition(|e| e.at <= k);
        sim.queue = later;
        for e in due {
            if sim.crashed(&e.to, k) {
                continue;
            }
            match &e.message.body {
                Body::Status(s) => {
                    sim.monitor(&e.to, &e.message.node).parent_received(Symbol::status(*s))?;
                    let p = proxies
                        .entry(e.to.clone())
                        .or_default()
                        .entry(e.message.node.clone())
                        .or_insert_with(|| AsyncProxy::new(sim.cfg.timeout));
                    let sends = p.on_status(*s, k);
                    let child = e.from.clone();
                    let out = sends.into_iter().map(|b| (child.clone(), e.message.node.clone(), b)).collect();
                    sim.emit(k, &e.to, out)?;
                }
                Body::Data(v) => {
                    let spec = sim.d.host(&e.to).and_then(|h| h.port(&e.message.node));
                    if let (Some(spec), Some(h)) = (spec, hosts.get_mut(&e.to)) {
                        h.world
                            .set(&spec.var, v.clone())
                            .map_err(|err| RuntimeError::Injection(format!("{}.{}: {err}", e.to, spec.var)))?;
                    }
                }
                Body::Tick | Body::Halt => {
                    inboxes.entry(e.to.clone()).or_default().push_back((e.from.clone(), e.message.clone()));
                }
            }
        }
        for (id, h) in hosts.iter_mut() {
            apply_injections(id, h, k)?;
        }

        let mut root_status = None;
        for host in &order {
            if sim.crashed(host, k) {
                inboxes.remove(host);
                continue;
            }
            let work: Vec<(String, Option<Message>)> = if host == root {
                vec![(String::new(), None)]
            } else {
                inboxes
                    .remove(host)
                    .unwrap_or_default()
                    .into_iter()
                    .map(|(from, m)| (from, Some(m)))
                    .collect()
            };
            for (from, msg) in work {
                let h = hosts.get_mut(host).expect("host state");
                let host_proxies = proxies.entry(host.clone()).or_default();
                let mut ticker = AsyncTicker {
                    host,
                    now: k,
                    cfg: &sim.cfg,
                    proxies: host_proxies,
                    out: Vec::new(),
                    failed: Vec::new(),
                };
                let stamp = (k, hosts_clock(&h.world, k));
                let result = {
                    let mut ctx = TickContext::new(&mut h.env.actions);
                    ctx.resolver = h.env.resolver.as_deref();
                    ctx.remote = Some(&mut ticker);
                    ctx.trace = Some(&mut trace);
                    ctx.host = Some(host.clone());
                    ctx.stamp = Some(stamp);
                    match msg.as_ref().map(|m| &m.body) {
                        None | Some(Body::Tick) => tick(&mut h.tree, &mut h.world, &mut ctx).map(Some),
                        Some(_) => halt(&mut h.tree, &mut ctx).map(|_| None),
                    }
                };
                let out = std::mem::take(&mut ticker.out);
                sim.failures.append(&mut ticker.failed);
                let status = result?;
                sim.emit(k, host, out)?;
                for (port, var) in ports.out_ports(host) {
                    let Some(value) = h.world.get(&var).cloned() else { continue };
                    if let Some(dl) = ports.publish(&port, value)? {
                        sim.send(k, host, &dl.to.host, &dl.to.port, Body::Data(dl.value));
                    }
                }
                match msg {
                    None => root_status = status,
                    Some(m) => {
                        let sym = if m.body == Body::Tick { Symbol::Tick } else { Symbol::Halt };
                        let reply = status.unwrap_or(Status::Failure);
                        let mon = sim.monitor(&from, &m.node);
                        mon.child_received(sym)?;
                        mon.child_sent(Symbol::status(reply))?;
                        sim.send(k, host, &from, &m.node, Body::Status(reply));
                    }
                }
            }
        }
        let Some(status) = root_status else {
            // Root crashed: nothing drives the deployment any more.
            break;
        };
        statuses.push(status);
        if stop_at_completion && status != Status::Running {
            break;
        }
    }
    Ok(RunResult {
        statuses,
        trace,
        messages: sim.log,
        worlds: hosts.into_iter().map(|(id, h)| (id, h.world)).collect(),
        failures: sim.failures,
    })
}

/// Logical time of global step `k` on a host: its own clock origin and
/// period, independent of how often it actually ticked.
fn hosts_clock(world: &crate::worldmodel::WorldState, k: u64) -> f64 {
    world.t0() + k as f64 * world.dt()
}

/// Hosts in breadth-first order from the root, then any others.
fn host_order(d: &Deployment, root: &str) -> Vec<String> {
    let links = d.control_links();
    let mut order = vec![root.to_string()];
    let mut i = 0;
    while i < order.len() {
        let parent = order[i].clone();
        for l in links.iter().filter(|l| l.parent == parent) {
            if !order.contains(&l.child) {
                order.push(l.child.clone());
            }
        }
        i += 1;
    }
    for h in &d.hosts {
        if !order.contains(&h.id) {
            order.push(h.id.clone());
        }
    }
    order
}
