mod common;

use btweave::bt::{halt, tick, ActionRegistry, Executor, Status, Step, TickContext, TickTrace, TreeNode};
use btweave::worldmodel::{Condition, Value, WorldState};
use common::*;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Engine and reference evaluator agree, and after a terminal root
    /// status no node is left running.
    #[test]
    fn engine_matches_reference(seed in any::<u64>()) {
        let mut r = rng(seed);
        let spec = TreeGen::new(3, true).gen(&mut r);
        let mut tree = spec.to_tree("root");
        let mut reference = RefNode::new(&spec);
        let mut actions = registry_for(&spec);
        let mut bits: Vec<bool> = (0..NVARS).map(|_| r.gen()).collect();
        let mut world = bool_world(&bits);
        for _ in 0..30 {
            let got = tick(&mut tree, &mut world, &mut TickContext::new(&mut actions)).unwrap();
            prop_assert_eq!(got, reference.tick(&mut bits));
            if got != Status::Running {
                prop_assert!(tree.walk().iter().all(|n| !n.is_running()));
            }
        }
    }

    /// Every tick records each ticked node once, children before parents,
    /// ending with the root.
    #[test]
    fn trace_is_post_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let spec = TreeGen::new(3, false).gen(&mut r);
        let mut tree = spec.to_tree("root");
        let mut actions = registry_for(&spec);
        let mut world = bool_world(&[r.gen(), r.gen(), r.gen(), r.gen(), r.gen()]);
        let mut trace = TickTrace::new();
        for _ in 0..10 {
            tick(&mut tree, &mut world, &mut TickContext::new(&mut actions).with_trace(&mut trace)).unwrap();
        }
        for k in 0..10u64 {
            let recs: Vec<_> = trace.records.iter().filter(|x| x.k == k).collect();
            prop_assert_eq!(recs.last().map(|x| x.node.as_str()), Some("root"));
            let mut seen = std::collections::BTreeSet::new();
            for (i, x) in recs.iter().enumerate() {
                prop_assert!(seen.insert(x.node.clone()), "{} twice", x.node);
                // A parent id is a prefix of its children's ids here.
                let prefix = format!("{}/", x.node);
                prop_assert!(recs[i + 1..].iter().all(|y| !y.node.starts_with(&prefix)), "{} before a child", x.node);
            }
        }
    }
}

fn counter(name: &str, ticks: u32) -> (ActionRegistry, std::sync::Arc<std::sync::atomic::AtomicU32>) {
    let (act, steps) = CountingAction::new(ticks, vec![]);
    let mut reg = ActionRegistry::new();
    reg.register(name, act);
    (reg, steps)
}

#[test]
fn reactive_sequence_halts_running_child_when_guard_fails() {
    let tree = TreeNode::sequence(
        "s",
        vec![
            TreeNode::condition("guard", Condition::parse("ok == true").unwrap()),
            TreeNode::action("work", "work"),
        ],
    );
    let halted = std::sync::Arc::new(std::sync::atomic::AtomicBool::new(false));
    struct Work(std::sync::Arc<std::sync::atomic::AtomicBool>);
    impl btweave::bt::ActionImpl for Work {
        fn step(&mut self, _: &WorldState, _: &btweave::bt::Params) -> Step {
            Step::running()
        }
        fn on_halt(&mut self) {
            self.0.store(true, std::sync::atomic::Ordering::SeqCst);
        }
    }
    let mut reg = ActionRegistry::new();
    reg.register("work", Work(halted.clone()));
    let mut ex = Executor::new(tree, WorldState::new().with("ok", Value::Bool(true)), reg);
    assert_eq!(ex.tick().unwrap(), Status::Running);
    ex.world.set("ok", Value::Bool(false)).unwrap();
    assert_eq!(ex.tick().unwrap(), Status::Failure);
    assert!(halted.load(std::sync::atomic::Ordering::SeqCst));
}

#[test]
fn sequence_with_memory_skips_finished_children() {
    let tree = TreeNode::sequence_mem(
        "m",
        vec![
            TreeNode::condition("once", Condition::parse("ok == true").unwrap()),
            TreeNode::action("work", "work"),
        ],
    );
    let (reg, steps) = counter("work", 3);
    let mut ex = Executor::new(tree, WorldState::new().with("ok", Value::Bool(true)), reg);
    assert_eq!(ex.tick().unwrap(), Status::Running);
    ex.world.set("ok", Value::Bool(false)).unwrap();
    assert_eq!(ex.tick().unwrap(), Status::Running);
    assert_eq!(ex.tick().unwrap(), Status::Success);
    assert_eq!(steps.load(std::sync::atomic::Ordering::SeqCst), 3);
    // A new activation evaluates the condition again.
    assert_eq!(ex.tick().unwrap(), Status::Failure);
}

#[test]
fn explicit_halt_clears_running_state() {
    let tree = TreeNode::fallback("f", vec![TreeNode::action("a", "work")]);
    let (mut reg, _) = counter("work", 5);
    let mut tree = tree;
    let mut world = WorldState::new();
    assert_eq!(tick(&mut tree, &mut world, &mut TickContext::new(&mut reg)).unwrap(), Status::Running);
    assert!(tree.is_running());
    halt(&mut tree, &mut TickContext::new(&mut reg)).unwrap();
    assert!(tree.walk().iter().all(|n| !n.is_running()));
}

#[test]
fn unbound_action_is_an_error_not_a_status() {
    let mut tree = TreeNode::action("a", "missing");
    let mut reg = ActionRegistry::new();
    assert!(tick(&mut tree, &mut WorldState::new(), &mut TickContext::new(&mut reg)).is_err());
}

#[test]
fn trace_lines_have_fixed_format() {
    let mut tree = TreeNode::sequence("root", vec![TreeNode::condition("c", Condition::always())]);
    let mut reg = ActionRegistry::new();
    let mut trace = TickTrace::new();
    let mut world = WorldState::with_clock(0.0, 0.5);
    for _ in 0..2 {
        tick(&mut tree, &mut world, &mut TickContext::new(&mut reg).with_trace(&mut trace)).unwrap();
    }
    assert_eq!(
        trace.to_string(),
        "k=0 node=c status=S t=0.0\nk=0 node=root status=S t=0.0\nk=1 node=c status=S t=0.5\nk=1 node=root status=S t=0.5\n"
    );
}
