//! Distributed execution of behavior trees over a snowflake of hosts:
//! control links derived from remote leaves, typed data ports between
//! leaves, and lockstep or asynchronous message passing.

mod lockstep;
pub mod ports;
pub mod proxy;
mod sim;
pub mod tcp;
pub mod topology;
pub mod wire;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bt::{ActionRegistry, BtError, LookupResolver, Status, TickTrace};
use crate::btsync::ProtocolError;
use crate::worldmodel::WorldState;

pub use ports::{Delivery, PortError, PortTable};
pub use proxy::AsyncProxy;
pub use sim::AsyncConfig;
pub use topology::{
    validate_topology, ControlLink, DataLink, Deployment, HostSpec, Injection, PortDirection, PortRef, PortSpec,
    ValidationReport, Violation,
};
pub use wire::{decode, encode, Body, DecodeError, Message};

/// Host-local bindings that are not part of the deployment description.
#[derive(Default)]
pub struct HostEnv {
    pub actions: ActionRegistry,
    pub resolver: Option<Box<dyn LookupResolver>>,
}

/// One message as it crossed a link; `k` is the global step it was sent.
#[derive(Clone, Debug, PartialEq)]
pub struct LoggedMessage {
    pub k: u64,
    pub from: String,
    pub to: String,
    pub message: Message,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    /// Root status after each global step.
    pub statuses: Vec<Status>,
    pub trace: TickTrace,
    pub messages: Vec<LoggedMessage>,
    pub worlds: BTreeMap<String, WorldState>,
    /// Links whose proxy timed out, as `host/node -> child`.
    pub failures: Vec<String>,
}

impl RunResult {
    pub fn final_status(&self) -> Option<Status> {
        self.statuses.last().copied()
    }
}

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("invalid deployment:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Bt(#[from] BtError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Port(#[from] PortError),
    #[error("injection failed: {0}")]
    Injection(String),
    #[error("unknown host `{0}`")]
    UnknownHost(String),
    #[error("deployment has no unique root host")]
    NoRoot,
    #[error("transport: {0}")]
    Io(String),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

impl From<std::io::Error> for RuntimeError {
    fn from(e: std::io::Error) -> Self {
        RuntimeError::Io(e.to_string())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub enum Mode {
    #[default]
    Lockstep,
    Async(AsyncConfig),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub mode: Mode,
    pub max_ticks: u64,
    /// Refuse deployments that fail topology validation.
    pub validate: bool,
    /// End the run once the root returns Success or Failure; otherwise
    /// keep ticking it until `max_ticks`.
    pub stop_at_completion: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            mode: Mode::Lockstep,
            max_ticks: 1000,
            validate: true,
            stop_at_completion: true,
        }
    }
}

/// Runs the deployment from its root host until the root stops running
/// (see [`RunOptions::stop_at_completion`]) or `max_ticks` global steps
/// have passed. Hosts missing from `envs` get an
/// empty environment.
pub fn run_deployment(
    d: &Deployment,
    envs: BTreeMap<String, HostEnv>,
    opts: &RunOptions,
) -> Result<RunResult, RuntimeError> {
    if opts.validate {
        let report = validate_topology(d);
        if !report.is_valid() {
            return Err(RuntimeError::Invalid(report));
        }
    }
    let root = d.root().ok_or(RuntimeError::NoRoot)?.to_string();
    match &opts.mode {
        Mode::Lockstep => lockstep::run_lockstep(d, &root, envs, opts.max_ticks, opts.stop_at_completion),
        Mode::Async(cfg) => sim::run_async(d, &root, envs, opts.max_ticks, opts.stop_at_completion, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt::{Step, TreeNode};
    use crate::worldmodel::{Value, ValueType};

    fn counter_env() -> HostEnv {
        let mut env = HostEnv::default();
        env.actions.register_fn("count", |w, _| match w.get("n") {
            Some(Value::Int(n)) if *n < 2 => Step::running().write("n", Value::Int(n + 1)),
            _ => Step::success(),
        });
        env
    }

    fn two_hosts() -> Deployment {
        let a = TreeNode::sequence("seq", vec![TreeNode::remote("go", "B", "work")]);
        let b = TreeNode::action("act", "count");
        let mut bw = WorldState::new();
        bw.declare("n", Value::Int(0)).unwrap();
        let mut aw = WorldState::new();
        aw.declare("n_seen", Value::Int(-1)).unwrap();
        let mut hb = HostSpec::new("B", "work", b, bw);
        hb.ports.push(PortSpec {
            name: "n_out".into(),
            ty: ValueType::Int,
            dir: PortDirection::Out,
            node: "act".into(),
            var: "n".into(),
        });
        let mut ha = HostSpec::new("A", "main", a, aw);
        ha.ports.push(PortSpec {
            name: "n_in".into(),
            ty: ValueType::Int,
            dir: PortDirection::In,
            node: "go".into(),
            var: "n_seen".into(),
        });
        Deployment {
            name: "pair".into(),
            hosts: vec![ha, hb],
            data_links: vec![DataLink {
                from: PortRef::new("B", "n_out"),
                to: PortRef::new("A", "n_in"),
            }],
        }
    }

    fn envs() -> BTreeMap<String, HostEnv> {
        BTreeMap::from([("B".to_string(), counter_env())])
    }

    #[test]
    fn lockstep_runs_remote_to_success() {
        let d = two_hosts();
        assert!(validate_topology(&d).is_valid(), "{}", validate_topology(&d));
        let r = run_deployment(&d, envs(), &RunOptions::default()).unwrap();
        assert_eq!(r.statuses, vec![Status::Running, Status::Running, Status::Success]);
        assert_eq!(r.worlds["A"].get("n_seen"), Some(&Value::Int(2)));
        let ticks = r.messages.iter().filter(|m| m.message.body == Body::Tick).count();
        assert_eq!(ticks, 3);
    }

    #[test]
    fn async_is_slower_but_agrees() {
        let d = two_hosts();
        let opts = RunOptions {
            mode: Mode::Async(AsyncConfig::default()),
            ..RunOptions::default()
        };
        let r = run_deployment(&d, envs(), &opts).unwrap();
        assert_eq!(r.final_status(), Some(Status::Success));
        assert!(r.statuses.len() > 3);
        assert_eq!(r.worlds["B"].get("n"), Some(&Value::Int(2)));
        assert!(r.failures.is_empty());
    }

    #[test]
    fn crashed_child_times_out() {
        let d = two_hosts();
        let cfg = AsyncConfig {
            timeout: 5,
            crashes: BTreeMap::from([("B".to_string(), 0)]),
            ..AsyncConfig::default()
        };
        let opts = RunOptions {
            mode: Mode::Async(cfg),
            ..RunOptions::default()
        };
        let r = run_deployment(&d, envs(), &opts).unwrap();
        assert_eq!(r.final_status(), Some(Status::Failure));
        assert_eq!(r.statuses.len(), 6);
        assert_eq!(r.failures, vec!["A/go -> B".to_string()]);
    }

    #[test]
    fn invalid_deployment_is_refused() {
        let mut d = two_hosts();
        d.hosts[1].tree = TreeNode::remote("back", "A", "main");
        assert!(matches!(
            run_deployment(&d, envs(), &RunOptions::default()),
            Err(RuntimeError::Invalid(_))
        ));
    }
}
