mod common;

use std::collections::BTreeSet;

use btweave::bt::{NodeKind, Params, TreeNode};
use btweave::skills::{expand_skill, ParamDirection, Skill, SkillError, SkillInterface, SkillRegistry};
use btweave::worldmodel::{Condition, Value, ValueType};
use common::*;
use proptest::prelude::*;

fn catalog() -> BTreeSet<String> {
    ["act".to_string()].into()
}

fn kinds(t: &TreeNode) -> Vec<(String, &'static str)> {
    t.walk().iter().map(|n| (n.id.clone(), n.kind.label())).collect()
}

proptest! {
    #[test]
    fn expansion_has_the_canonical_shape(seed in any::<u64>(), name in "[a-z]{1,6}") {
        let mut r = rng(seed);
        let vars: Vec<usize> = (0..NVARS).collect();
        let (pre, inv, post) = (random_conj(&mut r, &vars), random_conj(&mut r, &vars), random_conj(&mut r, &vars));
        let skill = Skill::new(name.clone(), conj(&pre), conj(&inv), conj(&post), "act");
        let t = expand_skill(&skill, &SkillInterface::new(), &Params::new(), &catalog()).unwrap();
        prop_assert_eq!(t.id.as_str(), name.as_str());
        prop_assert!(matches!(t.kind, NodeKind::Fallback));
        let post_leaf = &t.children[0];
        let run = &t.children[1];
        prop_assert_eq!(&post_leaf.kind, &NodeKind::Condition(conj(&post)));
        prop_assert!(matches!(run.kind, NodeKind::SequenceMem));
        prop_assert_eq!(&run.children[0].kind, &NodeKind::Condition(conj(&pre)));
        let exec = &run.children[1];
        prop_assert!(matches!(exec.kind, NodeKind::Sequence));
        prop_assert_eq!(&exec.children[0].kind, &NodeKind::Condition(conj(&inv)));
        let is_act = matches!(&exec.children[1].kind, NodeKind::Action { action, .. } if action == "act");
        prop_assert!(is_act);
        let ids: Vec<String> = t.walk().iter().map(|n| n.id.clone()).collect();
        let want: BTreeSet<String> = ["", "/post", "/run", "/pre", "/exec", "/inv", "/action"]
            .iter()
            .map(|s| format!("{name}{s}"))
            .collect();
        prop_assert_eq!(ids.iter().cloned().collect::<BTreeSet<_>>(), want);
        prop_assert_eq!(t.node_count(), 7);
    }
}

#[test]
fn expansion_ids_in_tree_order() {
    let skill = Skill::parse("grip", "open == true", "power == true", "held == true", "act");
    let t = expand_skill(&skill, &SkillInterface::new(), &Params::new(), &catalog()).unwrap();
    let got: Vec<_> = kinds(&t).into_iter().map(|(id, k)| format!("{id}:{k}")).collect();
    assert_eq!(
        got,
        [
            "grip:fallback",
            "grip/post:cond",
            "grip/run:sequence_mem",
            "grip/pre:cond",
            "grip/exec:sequence",
            "grip/inv:cond",
            "grip/action:action"
        ]
    );
}

#[test]
fn achievers_by_priority_then_registration() {
    let mut reg = SkillRegistry::new();
    let add = |reg: &mut SkillRegistry, name: &str, post: &str, prio: i64| {
        reg.register_skill(Skill::parse(name, "true", "true", post, "act").with_priority(prio), SkillInterface::new())
            .unwrap()
    };
    add(&mut reg, "low", "x >= 5", 0);
    add(&mut reg, "exact", "x == 7", 2);
    add(&mut reg, "wrong", "x <= 2", 9);
    add(&mut reg, "tie", "x > 6", 2);
    add(&mut reg, "wide", "x >= 1", 5);
    let goal = Condition::parse("x >= 3").unwrap();
    let names: Vec<_> = reg.find_achievers(&goal).iter().map(|s| s.name.as_str()).collect();
    // `wide` does not imply the goal; `wrong` contradicts it.
    assert_eq!(names, ["exact", "tie", "low"]);
    assert!(reg.find_achievers(&Condition::parse("y == true").unwrap()).is_empty());
}

#[test]
fn registration_and_expansion_errors() {
    let mut reg = SkillRegistry::new();
    reg.register_skill(Skill::parse("a", "true", "true", "x == 1", "act"), SkillInterface::new()).unwrap();
    assert_eq!(
        reg.register_skill(Skill::parse("a", "true", "true", "x == 2", "act"), SkillInterface::new()),
        Err(SkillError::DuplicateSkill("a".into()))
    );
    assert_eq!(
        reg.register_skill(Skill::parse("b", "true", "true", "x > 2 AND x < 1", "act"), SkillInterface::new()),
        Err(SkillError::UnsatisfiablePost("b".into()))
    );
    let twice = SkillInterface::new()
        .param("p", ValueType::Int, ParamDirection::In, None)
        .param("p", ValueType::Int, ParamDirection::In, None);
    assert!(matches!(
        reg.register_skill(Skill::parse("c", "true", "true", "x == 3", "act"), twice),
        Err(SkillError::InvalidInterface { .. })
    ));

    let skill = Skill::parse("d", "true", "true", "x == 4", "missing");
    assert_eq!(
        expand_skill(&skill, &SkillInterface::new(), &Params::new(), &catalog()),
        Err(SkillError::UnboundAction("missing".into()))
    );
    let iface = SkillInterface::new().param("target", ValueType::Real, ParamDirection::In, Some("goal"));
    let skill = Skill::parse("e", "true", "true", "x == 5", "act");
    assert_eq!(
        expand_skill(&skill, &iface, &Params::new(), &catalog()),
        Err(SkillError::MissingParam("target".into()))
    );
    let bound: Params = [("target".to_string(), Value::Real(2.5))].into();
    let t = expand_skill(&skill, &iface, &bound, &catalog()).unwrap();
    match &t.find("e/action").unwrap().kind {
        NodeKind::Action { params, mapping, .. } => {
            assert_eq!(params.get("target"), Some(&Value::Real(2.5)));
            assert_eq!(mapping.get("target").map(String::as_str), Some("goal"));
        }
        other => panic!("{other:?}"),
    }
}
