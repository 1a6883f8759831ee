//! Simulated axis/robot plant: the action implementations behind the demo
//! cell and an operator prompt that reads scripted answers or the terminal.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::{self, BufRead};
use std::path::Path;
use std::sync::mpsc::{self, Receiver};

use crate::backchain::{refine_condition, DEFAULT_MAX_DEPTH};
use crate::bt::{check_fts, ActionImpl, ActionRegistry, BtError, FtsReport, NodeKind, Params, Status, Step, TreeNode};
use crate::dsl::{self, DslError, Program};
use crate::runtime::{Deployment, HostEnv};
use crate::skills::{expand_skill_as, SkillNodeIds, SkillRegistry};
use crate::worldmodel::{Value, WorldState};

/// The demo cell: BASE, AXIS, ROBOT and HMI hosts.
pub const DEMO_BTW: &str = include_str!("../examples/demo_axis.btw");

/// Distance at which a move counts as arrived, in mm.
pub const POSITION_EPS: f64 = 1e-6;

pub fn demo_program() -> Result<Program, DslError> {
    dsl::load(DEMO_BTW).map(|(_, p)| p)
}

fn real(w: &WorldState, var: &str) -> Option<f64> {
    w.get(var).and_then(Value::as_f64)
}

fn flag(w: &WorldState, var: &str) -> Option<bool> {
    w.get(var).and_then(Value::as_bool)
}

/// Moves `pos` toward `target` by at most `speed` per tick. Fails while
/// the drive is unpowered or in error.
#[derive(Clone, Debug, Default)]
pub struct MoveAbsolute;

impl ActionImpl for MoveAbsolute {
    fn step(&mut self, w: &WorldState, _: &Params) -> Step {
        let (Some(pos), Some(target), Some(speed)) = (real(w, "pos"), real(w, "target"), real(w, "speed")) else {
            return Step::failure();
        };
        if flag(w, "power") != Some(true) || flag(w, "error") != Some(false) || speed.is_nan() || speed <= 0.0 {
            return Step::failure();
        }
        let next = pos + (target - pos).clamp(-speed, speed);
        if (target - next).abs() <= POSITION_EPS {
            Step::success().write("pos", Value::Real(target))
        } else {
            Step::running().write("pos", Value::Real(next))
        }
    }
}

/// Clears the error flag; the drive stays unpowered.
#[derive(Clone, Debug, Default)]
pub struct Reset;

impl ActionImpl for Reset {
    fn step(&mut self, _: &WorldState, _: &Params) -> Step {
        Step::success().write("error", Value::Bool(false))
    }
}

/// Powers the drive; refused while it is in error.
#[derive(Clone, Debug, Default)]
pub struct PowerOn;

impl ActionImpl for PowerOn {
    fn step(&mut self, w: &WorldState, _: &Params) -> Step {
        if flag(w, "error") == Some(true) {
            return Step::failure();
        }
        Step::success().write("power", Value::Bool(true))
    }
}

/// Keeps running until preempted.
#[derive(Clone, Debug, Default)]
pub struct Hold;

impl ActionImpl for Hold {
    fn step(&mut self, _: &WorldState, _: &Params) -> Step {
        Step::running()
    }
}

/// Writes each parameter to the world variable of the same name.
#[derive(Clone, Debug, Default)]
pub struct Assign;

impl ActionImpl for Assign {
    fn step(&mut self, _: &WorldState, params: &Params) -> Step {
        let mut s = Step::success();
        for (k, v) in params {
            s = s.write(k, v.clone());
        }
        s
    }
}

/// Where operator answers come from.
pub enum OperatorInput {
    /// Answers consumed in order; none left means no answer ever arrives.
    Scripted(VecDeque<String>),
    /// Lines from a reader thread, normally the terminal.
    Lines(Receiver<String>),
}

impl OperatorInput {
    pub fn scripted<I, S>(answers: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        OperatorInput::Scripted(answers.into_iter().map(Into::into).collect())
    }

    /// One answer per non-empty line of `path`.
    pub fn from_file(path: &Path) -> io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(OperatorInput::scripted(
            text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from),
        ))
    }

    /// Reads standard input on a background thread so the tick loop never
    /// blocks on the operator.
    pub fn stdin() -> Self {
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in io::stdin().lock().lines() {
                let Ok(line) = line else { break };
                if tx.send(line.trim().to_string()).is_err() {
                    break;
                }
            }
        });
        OperatorInput::Lines(rx)
    }

    fn poll(&mut self) -> Option<String> {
        match self {
            OperatorInput::Scripted(q) => q.pop_front(),
            OperatorInput::Lines(rx) => rx.try_recv().ok(),
        }
    }

    fn interactive(&self) -> bool {
        matches!(self, OperatorInput::Lines(_))
    }
}

/// Asks for the axis target; Running until a number arrives, then writes
/// `target` and sets `target_set`.
pub struct AskOperator {
    input: OperatorInput,
    prompted: bool,
}

impl AskOperator {
    pub fn new(input: OperatorInput) -> Self {
        AskOperator { input, prompted: false }
    }
}

impl ActionImpl for AskOperator {
    fn step(&mut self, _: &WorldState, _: &Params) -> Step {
        if !self.prompted && self.input.interactive() {
            eprint!("axis target position [mm]: ");
        }
        self.prompted = true;
        while let Some(answer) = self.input.poll() {
            match answer.parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    self.prompted = false;
                    return Step::success()
                        .write("target", Value::Real(v))
                        .write("target_set", Value::Bool(true));
                }
                _ => eprintln!("not a position: `{answer}`"),
            }
        }
        Step::running()
    }

    fn on_halt(&mut self) {
        self.prompted = false;
    }
}

/// Every plant action except the operator prompt.
pub fn library() -> ActionRegistry {
    let mut r = ActionRegistry::new();
    r.register("move_absolute", MoveAbsolute);
    r.register("reset", Reset);
    r.register("power_on", PowerOn);
    r.register("hold", Hold);
    r.register("assign", Assign);
    r
}

fn uses_action(tree: &TreeNode, name: &str) -> bool {
    tree.walk()
        .iter()
        .any(|n| matches!(&n.kind, NodeKind::Action { action, .. } if action == name))
}

/// Host environments for a deployment: the plant library everywhere, the
/// operator prompt on the first host that asks, and lookups resolved
/// against the program's skills.
pub fn envs(program: &Program, d: &Deployment, operator: OperatorInput) -> BTreeMap<String, HostEnv> {
    let mut operator = Some(operator);
    d.hosts
        .iter()
        .map(|h| {
            let mut actions = library();
            if uses_action(&h.tree, "ask_operator") {
                if let Some(input) = operator.take() {
                    actions.register("ask_operator", AskOperator::new(input));
                }
            }
            let env = HostEnv {
                actions,
                resolver: Some(Box::new(program.resolver())),
            };
            (h.id.clone(), env)
        })
        .collect()
}

/// Initial states for the certification run: `pos` on the grid 0..=20 mm,
/// every power/error combination, target 10 mm, speed 1 mm per tick.
pub fn fts_states() -> Vec<WorldState> {
    let mut out = Vec::new();
    for pos in 0..=20 {
        for power in [false, true] {
            for error in [false, true] {
                out.push(
                    WorldState::new()
                        .with("pos", Value::Real(pos as f64))
                        .with("target", Value::Real(10.0))
                        .with("target_set", Value::Bool(true))
                        .with("speed", Value::Real(1.0))
                        .with("power", Value::Bool(power))
                        .with("error", Value::Bool(error)),
                );
            }
        }
    }
    out
}

pub const FTS_BOUND: u64 = 60;

/// The axis move skill with its invariant backchained over `skills`.
pub fn axis_skill_tree(program: &Program, skills: &SkillRegistry) -> Result<TreeNode, String> {
    let name = "move_axis_to_pos";
    let skill = program.skills.get(name).ok_or("demo has no axis skill")?;
    let iface = program.skills.interface(name).ok_or("demo has no axis skill")?;
    let catalog: BTreeSet<String> = program.actions.keys().cloned().collect();
    let tree = expand_skill_as(name, skill, iface, &Params::new(), &catalog).map_err(|e| e.to_string())?;
    let inv = SkillNodeIds::new(name).inv;
    refine_condition(&tree, &inv, skills, DEFAULT_MAX_DEPTH)
        .map(|p| p.root)
        .map_err(|e| e.to_string())
}

/// Certifies the axis skill tree over [`fts_states`]. With
/// `without_power_on` the power-on skill is withheld from backchaining,
/// which leaves every unpowered state stuck.
pub fn certify_axis(program: &Program, without_power_on: bool) -> Result<FtsReport, String> {
    let mut skills = SkillRegistry::new();
    for s in program.skills.skills() {
        if without_power_on && s.name == "power_on_axis" {
            continue;
        }
        let iface = program.skills.interface(&s.name).cloned().unwrap_or_default();
        skills.register_skill(s.clone(), iface).map_err(|e| e.to_string())?;
    }
    let tree = axis_skill_tree(program, &skills)?;
    check_fts(&tree, &fts_states(), FTS_BOUND, library).map_err(|e: BtError| e.to_string())
}

/// Status a fresh move reaches after `n` ticks from `pos` toward `target`
/// at `speed`, by the closed form: Success exactly at tick
/// `max(1, ceil(|target - pos| / speed))`.
pub fn ticks_to_arrive(pos: f64, target: f64, speed: f64) -> u64 {
    (((target - pos).abs() / speed).ceil() as u64).max(1)
}

/// Drives one action to completion, for plant tests.
pub fn run_action(action: &mut dyn ActionImpl, world: &mut WorldState, max: u64) -> (Status, u64) {
    for n in 1..=max {
        let step = action.step(world, &Params::new());
        for (var, value) in step.updates {
            world.set(&var, value).expect("plant variable");
        }
        if step.status != Status::Running {
            return (step.status, n);
        }
    }
    (Status::Running, max)
}


#[cfg(test)]
mod scenario {
    use super::*;
    use crate::runtime::{run_deployment, Injection, RunOptions};

    fn run(d: &Deployment, p: &Program) -> crate::runtime::RunResult {
        let envs = envs(p, d, OperatorInput::scripted(["100"]));
        run_deployment(d, envs, &RunOptions::default()).unwrap()
    }

    #[test]
    fn nominal_cell() {
        let p = demo_program().unwrap();
        let d = p.deployments["cell"].clone();
        let r = run(&d, &p);
        assert_eq!(r.final_status(), Some(Status::Success));
        assert_eq!(r.statuses.len() as u64, ticks_to_arrive(0.0, 100.0, 10.0) + ticks_to_arrive(0.0, 50.0, 10.0) - 1);
    }

    #[test]
    fn injected_error_recovers() {
        let p = demo_program().unwrap();
        let mut d = p.deployments["cell"].clone();
        d.host_mut("AXIS").unwrap().injections.push(Injection {
            at: 3,
            writes: vec![("error".into(), Value::Bool(true)), ("power".into(), Value::Bool(false))],
        });
        let r = run(&d, &p);
        assert_eq!(r.final_status(), Some(Status::Success));
        let at = |node: &str| r.trace.records.iter().position(|x| x.k == 3 && x.node == node);
        let reset = at("move_axis_to_pos/inv/split/0/reset_axis/action").unwrap();
        let power = at("move_axis_to_pos/inv/split/1/power_on_axis/action").unwrap();
        let moved = at("move_axis_to_pos/action").unwrap();
        assert!(reset < power && power < moved);
    }

    #[test]
    fn certify() {
        let p = demo_program().unwrap();
        let ok = certify_axis(&p, false).unwrap();
        assert!(ok.holds(), "{:?}", ok.violations.first());
        let blocked = certify_axis(&p, true).unwrap();
        assert!(!blocked.holds());
    }
}
