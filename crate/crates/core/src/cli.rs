//! The `btweave` command line.
//!
//! Traces go to stdout, diagnostics to stderr. Exit codes: 0 on success or
//! a consistent result, 1 when the command ran but found a problem, 2 on
//! usage and parse errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use crate::backchain::{backchain, Goal, DEFAULT_MAX_DEPTH};
use crate::bt::{check_fts, NodeKind, Status, TreeNode};
use crate::btsync::{builtin_roles, check_consistency, check_internal_composition, compose, parse_role_pair};
use crate::dsl::{self, print_document, tree_decl, Document, DslError, Item, Program};
use crate::plant::{self, OperatorInput};
use crate::runtime::{
    self, run_deployment, tcp, validate_topology, AsyncConfig, Deployment, Injection, Mode, RunOptions,
};
use crate::worldmodel::{Condition, Value, ValueType, WorldState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "btweave", version, about = "Behavior-tree skills, planning and distributed execution")]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Lockstep,
    Async,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// One tick record per line.
    Trace,
    /// Trace followed by final status, worlds and failed links.
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a document and check every deployment's topology and protocols.
    Validate { file: PathBuf },
    /// Backchain a goal into a tree and print it with its provenance.
    Plan {
        file: PathBuf,
        /// Comma separated conditions; defaults to the document's single goal.
        #[arg(long)]
        goal: Option<String>,
        #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
        max_depth: usize,
    },
    /// Execute a deployment and print its trace.
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "lockstep")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1000)]
        max_ticks: u64,
        /// Seeds the message jitter of the async simulator.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "trace")]
        format: Format,
        #[arg(long)]
        deployment: Option<String>,
        /// Operator answers, one per line; stdin when absent.
        #[arg(long)]
        answers: Option<PathBuf>,
        /// Override an initial variable: HOST.var=value
        #[arg(long = "set", value_name = "HOST.VAR=VALUE")]
        sets: Vec<String>,
        /// Write variables before a step: HOST@K:var=value[,var=value]
        #[arg(long = "inject", value_name = "HOST@K:VAR=VALUE")]
        injects: Vec<String>,
        /// Kill a host from step K on (async mode): HOST@K
        #[arg(long = "crash", value_name = "HOST@K")]
        crashes: Vec<String>,
        #[arg(long, default_value_t = 1)]
        delay: u64,
        #[arg(long, default_value_t = 0)]
        jitter: u64,
        #[arg(long, default_value_t = 10)]
        timeout: u64,
        /// Run even if the topology check fails.
        #[arg(long)]
        no_validate: bool,
    },
    /// Check a parent/child role pair for deadlocks and livelocks.
    CheckProtocol {
        /// Role file; the builtin roles when absent.
        file: Option<PathBuf>,
    },
    /// Check that a tree reaches Success from a grid of initial states.
    Fts {
        file: PathBuf,
        #[arg(long)]
        tree: String,
        #[arg(long, default_value_t = plant::FTS_BOUND)]
        bound: u64,
        /// Vary a variable: `var=lo..hi` (integer steps) or `var` (both booleans).
        #[arg(long = "vary", value_name = "VAR[=LO..HI]")]
        varies: Vec<String>,
        /// Fix a variable: var=value
        #[arg(long = "set", value_name = "VAR=VALUE")]
        sets: Vec<String>,
    },
    /// Serve one host's tree as a remote child over TCP (address from BTWEAVE_LISTEN).
    Serve {
        file: PathBuf,
        #[arg(long)]
        host: String,
        #[arg(long)]
        deployment: Option<String>,
        #[arg(long, default_value_t = 60)]
        idle_secs: u64,
    },
}

/// Outcome of a subcommand: exit code plus what to print.
struct Outcome {
    code: i32,
    out: String,
    err: String,
}

impl Outcome {
    fn usage(msg: impl Into<String>) -> Self {
        Outcome {
            code: EXIT_USAGE,
            out: String::new(),
            err: msg.into(),
        }
    }
}

/// Runs the command line and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match CliConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let informational = !e.use_stderr();
            let _ = if informational {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return if informational { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let o = dispatch(cfg.command);
    let _ = out.write_all(o.out.as_bytes());
    if !o.err.is_empty() {
        let _ = err.write_all(o.err.as_bytes());
        if !o.err.ends_with('\n') {
            let _ = writeln!(err);
        }
    }
    let _ = out.flush();
    o.code
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Validate { file } => validate(&file),
        Command::Plan { file, goal, max_depth } => plan(&file, goal.as_deref(), max_depth),
        Command::Run {
            file,
            mode,
            max_ticks,
            seed,
            format,
            deployment,
            answers,
            sets,
            injects,
            crashes,
            delay,
            jitter,
            timeout,
            no_validate,
        } => {
            let mode = match mode {
                ModeArg::Lockstep => Mode::Lockstep,
                ModeArg::Async => {
                    let mut cfg = AsyncConfig {
                        delay,
                        timeout,
                        jitter,
                        seed,
                        ..AsyncConfig::default()
                    };
                    for c in &crashes {
                        match parse_at(c) {
                            Some((h, k)) => {
                                cfg.crashes.insert(h, k);
                            }
                            None => return Outcome::usage(format!("bad --crash `{c}`, expected HOST@K")),
                        }
                    }
                    Mode::Async(cfg)
                }
            };
            if mode == Mode::Lockstep && !crashes.is_empty() {
                return Outcome::usage("--crash needs --mode async");
            }
            let opts = RunOptions {
                mode,
                max_ticks,
                validate: !no_validate,
                ..RunOptions::default()
            };
            let req = RunRequest {
                deployment,
                answers,
                sets,
                injects,
                format,
            };
            run_cmd(&file, &req, &opts)
        }
        Command::CheckProtocol { file } => check_protocol(file.as_deref()),
        Command::Fts {
            file,
            tree,
            bound,
            varies,
            sets,
        } => fts(&file, &tree, bound, &varies, &sets),
        Command::Serve {
            file,
            host,
            deployment,
            idle_secs,
        } => serve(&file, &host, deployment.as_deref(), idle_secs),
    }
}

fn load(file: &Path) -> Result<(Document, Program), Outcome> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| Outcome::usage(format!("{}: {e}", file.display())))?;
    dsl::load(&text).map_err(|e| {
        let msg = match e {
            DslError::Syntax { .. } => format!("{}:{e}", file.display()),
            DslError::Resolution(ds) => ds
                .iter()
                .map(|d| format!("{}:{d}\n", file.display()))
                .collect(),
        };
        Outcome::usage(msg)
    })
}

fn pick_deployment(program: &Program, name: Option<&str>) -> Result<Deployment, Outcome> {
    match name {
        Some(n) => program
            .deployments
            .get(n)
            .cloned()
            .ok_or_else(|| Outcome::usage(format!("no deployment `{n}`"))),
        None => {
            let mut it = program.deployments.values();
            match (it.next(), it.next()) {
                (Some(d), None) => Ok(d.clone()),
                (None, _) => Err(Outcome::usage("document declares no deployment")),
                _ => Err(Outcome::usage("several deployments; pick one with --deployment")),
            }
        }
    }
}

fn validate(file: &Path) -> Outcome {
    let (_, program) = match load(file) {
        Ok(p) => p,
        Err(o) => return o,
    };
    let mut out = String::new();
    let mut ok = true;
    let (parent, child) = builtin_roles();
    let pair = compose(&parent, &child).map(|p| check_consistency(&p));
    for (name, d) in &program.deployments {
        let report = validate_topology(d);
        if report.is_valid() {
            let _ = writeln!(out, "deployment {name}: topology ok ({} hosts)", d.hosts.len());
        } else {
            ok = false;
            let _ = write!(out, "deployment {name}: topology invalid\n{report}");
        }
        for link in d.control_links() {
            match &pair {
                Ok(r) if r.is_consistent() => {
                    let _ = writeln!(out, "  link {}/{} -> {}: protocol consistent", link.parent, link.node, link.child);
                }
                Ok(r) => {
                    ok = false;
                    let _ = write!(out, "  link {}/{} -> {}: {r}", link.parent, link.node, link.child);
                }
                Err(e) => {
                    ok = false;
                    let _ = writeln!(out, "  link {}/{} -> {}: {e}", link.parent, link.node, link.child);
                }
            }
        }
        if report.is_valid() {
            for h in &d.hosts {
                let remotes = remote_hosts(&h.tree);
                if remotes.is_empty() {
                    continue;
                }
                let roles: Vec<_> = remotes
                    .iter()
                    .map(|r| {
                        let mut role = child.clone();
                        role.name = r.clone();
                        role
                    })
                    .collect();
                let Some(skeleton) = remote_skeleton(&h.tree) else { continue };
                match check_internal_composition(&roles, &skeleton) {
                    Ok(r) if r.is_consistent() => {
                        let _ = writeln!(out, "  host {}: coordination {r}", h.id);
                    }
                    Ok(r) => {
                        ok = false;
                        let _ = write!(out, "  host {}: coordination {r}", h.id);
                    }
                    Err(e) => {
                        ok = false;
                        let _ = writeln!(out, "  host {}: {e}", h.id);
                    }
                }
            }
        }
    }
    if program.deployments.is_empty() {
        let _ = writeln!(out, "no deployments");
    }
    Outcome {
        code: if ok { EXIT_OK } else { EXIT_FINDINGS },
        out,
        err: String::new(),
    }
}

/// The part of `tree` that leads to remote leaves. Local leaves are
/// dropped, which treats them as neutral: skipped by sequences and passed
/// over by fallbacks. Bound lookups stand for their child.
fn remote_skeleton(tree: &TreeNode) -> Option<TreeNode> {
    match &tree.kind {
        NodeKind::Remote { .. } => Some(tree.clone()),
        NodeKind::Lookup { .. } => tree.children.first().and_then(remote_skeleton),
        k if k.is_composite() => {
            let children: Vec<TreeNode> = tree.children.iter().filter_map(remote_skeleton).collect();
            (!children.is_empty()).then(|| TreeNode::new(tree.id.clone(), k.clone(), children))
        }
        _ => None,
    }
}

fn remote_hosts(tree: &TreeNode) -> Vec<String> {
    let mut hosts: Vec<String> = tree
        .walk()
        .iter()
        .filter_map(|n| match &n.kind {
            NodeKind::Remote { host, .. } => Some(host.clone()),
            _ => None,
        })
        .collect();
    hosts.sort();
    hosts.dedup();
    hosts
}

fn plan(file: &Path, goal: Option<&str>, max_depth: usize) -> Outcome {
    let (doc, program) = match load(file) {
        Ok(p) => p,
        Err(o) => return o,
    };
    let goal = match goal {
        Some(text) => {
            let mut conds = Vec::new();
            for part in text.split(',') {
                match Condition::parse(part.trim()) {
                    Ok(c) => conds.push(c),
                    Err(e) => return Outcome::usage(format!("bad goal `{}`: {e}", part.trim())),
                }
            }
            match Goal::new(conds) {
                Ok(g) => g,
                Err(e) => return Outcome::usage(e.to_string()),
            }
        }
        None => {
            let mut it = program.goals.values();
            match (it.next(), it.next()) {
                (Some(g), None) => g.clone(),
                (None, _) => return Outcome::usage("no --goal given and the document declares no goal"),
                _ => return Outcome::usage("several goals declared; give one with --goal"),
            }
        }
    };
    let tree = match backchain(&goal, &program.skills, max_depth) {
        Ok(t) => t,
        Err(e) => {
            return Outcome {
                code: EXIT_FINDINGS,
                out: String::new(),
                err: e.to_string(),
            }
        }
    };
    let mut out = String::new();
    for line in tree.report().lines() {
        let _ = writeln!(out, "# {line}");
    }
    let mut items: Vec<Item> = doc
        .items
        .into_iter()
        .filter(|i| matches!(i, Item::Action(_) | Item::Skill(_)))
        .collect();
    items.push(Item::Tree(tree_decl("plan", &tree.root)));
    out.push_str(&print_document(&Document { items }));
    if tree.unrefined.is_empty() {
        Outcome {
            code: EXIT_OK,
            out,
            err: String::new(),
        }
    } else {
        let err = tree
            .unrefined
            .iter()
            .map(|(id, c)| format!("unrefined goal `{c}` at {id}\n"))
            .collect();
        Outcome {
            code: EXIT_FINDINGS,
            out,
            err,
        }
    }
}

struct RunRequest {
    deployment: Option<String>,
    answers: Option<PathBuf>,
    sets: Vec<String>,
    injects: Vec<String>,
    format: Format,
}

fn run_cmd(file: &Path, req: &RunRequest, opts: &RunOptions) -> Outcome {
    let (_, program) = match load(file) {
        Ok(p) => p,
        Err(o) => return o,
    };
    let mut d = match pick_deployment(&program, req.deployment.as_deref()) {
        Ok(d) => d,
        Err(o) => return o,
    };
    for s in &req.sets {
        if let Err(msg) = apply_set(&mut d, s) {
            return Outcome::usage(msg);
        }
    }
    for s in &req.injects {
        if let Err(msg) = add_injection(&mut d, s) {
            return Outcome::usage(msg);
        }
    }
    let operator = match &req.answers {
        Some(path) => match OperatorInput::from_file(path) {
            Ok(o) => o,
            Err(e) => return Outcome::usage(format!("{}: {e}", path.display())),
        },
        None => OperatorInput::stdin(),
    };
    let envs = plant::envs(&program, &d, operator);
    let result = match run_deployment(&d, envs, opts) {
        Ok(r) => r,
        Err(e) => {
            return Outcome {
                code: EXIT_FINDINGS,
                out: String::new(),
                err: e.to_string(),
            }
        }
    };
    let mut out = result.trace.to_string();
    let status = result.final_status();
    let summary = match status {
        Some(s) => format!("root {s} after {} steps", result.statuses.len()),
        None => "root never ticked".to_string(),
    };
    if req.format == Format::Text {
        let _ = writeln!(out, "{summary}");
        for (host, w) in &result.worlds {
            let vars: Vec<String> = w.vars().map(|(n, v)| format!("{n}={v}")).collect();
            let _ = writeln!(out, "{host}: {}", vars.join(" "));
        }
        for f in &result.failures {
            let _ = writeln!(out, "failed link {f}");
        }
    }
    let mut err = summary;
    for f in &result.failures {
        let _ = write!(err, "\nfailed link {f}");
    }
    Outcome {
        code: if status == Some(Status::Success) { EXIT_OK } else { EXIT_FINDINGS },
        out,
        err,
    }
}

/// Splits `HOST@K`.
fn parse_at(s: &str) -> Option<(String, u64)> {
    let (h, k) = s.split_once('@')?;
    Some((h.to_string(), k.trim().parse().ok()?))
}

fn typed(world: &WorldState, var: &str, text: &str) -> Result<Value, String> {
    let ty = world.type_of(var).ok_or_else(|| format!("unknown variable `{var}`"))?;
    Value::parse_as(ty, text.trim()).ok_or_else(|| format!("`{text}` is not a {ty} value for `{var}`"))
}

fn apply_set(d: &mut Deployment, s: &str) -> Result<(), String> {
    let bad = || format!("bad --set `{s}`, expected HOST.var=value");
    let (lhs, value) = s.split_once('=').ok_or_else(bad)?;
    let (host, var) = lhs.trim().split_once('.').ok_or_else(bad)?;
    let h = d.host_mut(host).ok_or_else(|| format!("unknown host `{host}`"))?;
    let v = typed(&h.world, var, value)?;
    h.world.set(var, v).map_err(|e| e.to_string())
}

fn add_injection(d: &mut Deployment, s: &str) -> Result<(), String> {
    let bad = || format!("bad --inject `{s}`, expected HOST@K:var=value[,var=value]");
    let (at, writes) = s.split_once(':').ok_or_else(bad)?;
    let (host, k) = parse_at(at).ok_or_else(bad)?;
    let h = d.host_mut(&host).ok_or_else(|| format!("unknown host `{host}`"))?;
    let mut parsed = Vec::new();
    for w in writes.split(',') {
        let (var, value) = w.split_once('=').ok_or_else(bad)?;
        let var = var.trim();
        parsed.push((var.to_string(), typed(&h.world, var, value)?));
    }
    h.injections.push(Injection { at: k, writes: parsed });
    h.injections.sort_by_key(|i| i.at);
    Ok(())
}

fn check_protocol(file: Option<&Path>) -> Outcome {
    let (parent, child) = match file {
        None => builtin_roles(),
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => return Outcome::usage(format!("{}: {e}", path.display())),
            };
            match parse_role_pair(&text) {
                Ok(p) => p,
                Err(e) => return Outcome::usage(format!("{}: {e}", path.display())),
            }
        }
    };
    match compose(&parent, &child) {
        Ok(p) => {
            let report = check_consistency(&p);
            Outcome {
                code: if report.is_consistent() { EXIT_OK } else { EXIT_FINDINGS },
                out: report.to_string(),
                err: String::new(),
            }
        }
        Err(e) => Outcome::usage(e.to_string()),
    }
}

/// Values a `--vary` spec ranges over, typed against `ty`.
fn vary_values(spec: &str, ty: Option<ValueType>) -> Result<(String, Vec<Value>), String> {
    let Some((var, range)) = spec.split_once('=') else {
        return Ok((spec.trim().to_string(), vec![Value::Bool(false), Value::Bool(true)]));
    };
    let (lo, hi) = range
        .split_once("..")
        .ok_or_else(|| format!("bad --vary `{spec}`, expected var=lo..hi"))?;
    let lo: i64 = lo.trim().parse().map_err(|_| format!("bad lower bound in `{spec}`"))?;
    let hi: i64 = hi.trim().parse().map_err(|_| format!("bad upper bound in `{spec}`"))?;
    if lo > hi {
        return Err(format!("empty range in `{spec}`"));
    }
    let values = (lo..=hi)
        .map(|i| match ty {
            Some(ValueType::Int) => Value::Int(i),
            _ => Value::Real(i as f64),
        })
        .collect();
    Ok((var.trim().to_string(), values))
}

/// A literal without a declared type: booleans, integers, reals, else an
/// enumeration member.
fn guess_value(text: &str) -> Value {
    let t = text.trim();
    if let Some(v) = Value::parse_as(ValueType::Bool, t) {
        v
    } else if let Ok(i) = t.parse::<i64>() {
        Value::Int(i)
    } else if let Ok(r) = t.parse::<f64>() {
        Value::Real(r)
    } else {
        Value::Enum(t.to_string())
    }
}

fn fts(file: &Path, tree_name: &str, bound: u64, varies: &[String], sets: &[String]) -> Outcome {
    let (_, program) = match load(file) {
        Ok(p) => p,
        Err(o) => return o,
    };
    let Some(tree) = program.trees.get(tree_name) else {
        return Outcome::usage(format!("no tree `{tree_name}`"));
    };
    // Start from the world of the first host running this tree, if any.
    let mut base = program
        .deployments
        .values()
        .flat_map(|d| d.hosts.iter())
        .find(|h| h.tree_name == tree_name)
        .map(|h| h.world.clone())
        .unwrap_or_default();
    for s in sets {
        let Some((var, value)) = s.split_once('=') else {
            return Outcome::usage(format!("bad --set `{s}`, expected var=value"));
        };
        let var = var.trim();
        let v = match base.type_of(var) {
            Some(_) => match typed(&base, var, value) {
                Ok(v) => v,
                Err(e) => return Outcome::usage(e),
            },
            None => guess_value(value),
        };
        let r = if base.get(var).is_some() { base.set(var, v) } else { base.declare(var, v) };
        if let Err(e) = r {
            return Outcome::usage(e.to_string());
        }
    }
    let mut states = vec![base];
    for spec in varies {
        let var = spec.split_once('=').map_or(spec.as_str(), |(v, _)| v).trim();
        let ty = states[0].type_of(var);
        let (var, values) = match vary_values(spec, ty) {
            Ok(v) => v,
            Err(e) => return Outcome::usage(e),
        };
        let mut next = Vec::with_capacity(states.len() * values.len());
        for s in &states {
            for v in &values {
                let mut w = s.clone();
                let r = if w.get(&var).is_some() { w.set(&var, v.clone()) } else { w.declare(&var, v.clone()) };
                if let Err(e) = r {
                    return Outcome::usage(e.to_string());
                }
                next.push(w);
            }
        }
        states = next;
    }
    let report = match check_fts(tree, &states, bound, plant::library) {
        Ok(r) => r,
        Err(e) => return Outcome::usage(e.to_string()),
    };
    let mut out = String::new();
    if report.holds() {
        let _ = writeln!(
            out,
            "finite-time successful: {} states within {} ticks (slowest {})",
            report.checked, report.bound, report.max_ticks_to_success
        );
    } else {
        let _ = writeln!(
            out,
            "not finite-time successful: {} of {} states miss Success within {} ticks",
            report.violations.len(),
            report.checked,
            report.bound
        );
        for v in &report.violations {
            let vars: Vec<String> = v.state.vars().map(|(n, x)| format!("{n}={x}")).collect();
            let last = v.last.map_or("-".to_string(), |s| s.to_string());
            let _ = write!(out, "  [{}] {} last={last}", v.index, vars.join(" "));
            if let Some(e) = &v.error {
                let _ = write!(out, " error: {e}");
            }
            out.push('\n');
        }
    }
    Outcome {
        code: if report.holds() { EXIT_OK } else { EXIT_FINDINGS },
        out,
        err: String::new(),
    }
}

fn serve(file: &Path, host: &str, deployment: Option<&str>, idle_secs: u64) -> Outcome {
    let (_, program) = match load(file) {
        Ok(p) => p,
        Err(o) => return o,
    };
    let d = match pick_deployment(&program, deployment) {
        Ok(d) => d,
        Err(o) => return o,
    };
    let Some(h) = d.host(host) else {
        return Outcome::usage(format!("no host `{host}`"));
    };
    let addr = tcp::listen_addr();
    let listener = match TcpListener::bind(&addr) {
        Ok(l) => l,
        Err(e) => return Outcome::usage(format!("cannot listen on {addr}: {e}")),
    };
    if let Ok(a) = listener.local_addr() {
        eprintln!("{host} listening on {a}");
    }
    let mut envs: BTreeMap<String, runtime::HostEnv> = plant::envs(&program, &d, OperatorInput::stdin());
    let actions = envs.remove(host).map(|e| e.actions).unwrap_or_default();
    match tcp::serve_child(&listener, h.tree.clone(), h.world.clone(), actions, Duration::from_secs(idle_secs)) {
        Ok((_, world)) => {
            let vars: Vec<String> = world.vars().map(|(n, v)| format!("{n}={v}")).collect();
            Outcome {
                code: EXIT_OK,
                out: format!("{host}: {}\n", vars.join(" ")),
                err: String::new(),
            }
        }
        Err(e) => Outcome {
            code: EXIT_FINDINGS,
            out: String::new(),
            err: e.to_string(),
        },
    }
}
