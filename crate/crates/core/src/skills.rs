//! Skills: a precondition, invariant, postcondition and bound action,
//! expanded into the canonical behavior tree
//! `Fallback(post, SequenceMem(pre, Sequence(inv, action)))`.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::bt::{ActionCatalog, LookupResolver, Params, TreeNode};
use crate::btsync::{builtin_roles, RoleAutomaton};
use crate::worldmodel::{Condition, ValueType, WorldError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkillError {
    #[error("skill `{0}` already registered")]
    DuplicateSkill(String),
    #[error("postcondition of skill `{0}` is unsatisfiable")]
    UnsatisfiablePost(String),
    #[error("unknown skill `{0}`")]
    UnknownSkill(String),
    #[error("no action implementation bound to `{0}`")]
    UnboundAction(String),
    #[error("missing parameter `{0}`")]
    MissingParam(String),
    #[error("invalid interface for skill `{skill}`: {reason}")]
    InvalidInterface { skill: String, reason: String },
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Skill {
    pub name: String,
    pub pre: Condition,
    pub inv: Condition,
    pub post: Condition,
    pub action: String,
    /// Higher wins when several skills achieve the same condition.
    pub priority: i64,
}

impl Skill {
    pub fn new(name: impl Into<String>, pre: Condition, inv: Condition, post: Condition, action: impl Into<String>) -> Self {
        Skill {
            name: name.into(),
            pre,
            inv,
            post,
            action: action.into(),
            priority: 0,
        }
    }

    /// Parses the three conditions from text; panics on bad input.
    pub fn parse(name: &str, pre: &str, inv: &str, post: &str, action: &str) -> Self {
        let c = |t: &str| Condition::parse(t).expect("invalid condition");
        Skill::new(name, c(pre), c(inv), c(post), action)
    }

    pub fn with_priority(mut self, priority: i64) -> Self {
        self.priority = priority;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamDirection {
    In,
    Out,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: ValueType,
    pub dir: ParamDirection,
}

/// Parameters and their mapping onto world variables. The interface
/// automaton is always the child role of the tick-sync protocol.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SkillInterface {
    pub params: Vec<Param>,
    pub mapping: BTreeMap<String, String>,
}

impl SkillInterface {
    pub fn new() -> Self {
        SkillInterface::default()
    }

    pub fn param(mut self, name: &str, ty: ValueType, dir: ParamDirection, var: Option<&str>) -> Self {
        self.params.push(Param {
            name: name.to_string(),
            ty,
            dir,
        });
        if let Some(var) = var {
            self.mapping.insert(name.to_string(), var.to_string());
        }
        self
    }

    pub fn role(&self) -> RoleAutomaton {
        builtin_roles().1
    }

    pub fn inputs(&self) -> impl Iterator<Item = &Param> {
        self.params.iter().filter(|p| p.dir == ParamDirection::In)
    }

    fn validate(&self, skill: &str) -> Result<(), SkillError> {
        let invalid = |reason: String| SkillError::InvalidInterface {
            skill: skill.to_string(),
            reason,
        };
        let mut names = BTreeSet::new();
        for p in &self.params {
            if !names.insert(p.name.as_str()) {
                return Err(invalid(format!("parameter `{}` declared twice", p.name)));
            }
        }
        let mut targets = BTreeSet::new();
        for (param, var) in &self.mapping {
            if !names.contains(param.as_str()) {
                return Err(invalid(format!("mapping for undeclared parameter `{param}`")));
            }
            if !targets.insert(var.as_str()) {
                return Err(invalid(format!("variable `{var}` mapped twice")));
            }
        }
        Ok(())
    }
}

/// Node ids of an expanded skill, derived from a prefix.
pub struct SkillNodeIds {
    pub root: String,
    pub post: String,
    pub run: String,
    pub pre: String,
    pub exec: String,
    pub inv: String,
    pub action: String,
}

impl SkillNodeIds {
    pub fn new(prefix: &str) -> Self {
        SkillNodeIds {
            root: prefix.to_string(),
            post: format!("{prefix}/post"),
            run: format!("{prefix}/run"),
            pre: format!("{prefix}/pre"),
            exec: format!("{prefix}/exec"),
            inv: format!("{prefix}/inv"),
            action: format!("{prefix}/action"),
        }
    }
}

/// Expands a skill into its canonical tree, with node ids rooted at the
/// skill name.
pub fn expand_skill(
    skill: &Skill,
    iface: &SkillInterface,
    bindings: &Params,
    catalog: &dyn ActionCatalog,
) -> Result<TreeNode, SkillError> {
    expand_skill_as(&skill.name, skill, iface, bindings, catalog)
}

/// As [`expand_skill`], with node ids rooted at `prefix`.
pub fn expand_skill_as(
    prefix: &str,
    skill: &Skill,
    iface: &SkillInterface,
    bindings: &Params,
    catalog: &dyn ActionCatalog,
) -> Result<TreeNode, SkillError> {
    if !catalog.has_action(&skill.action) {
        return Err(SkillError::UnboundAction(skill.action.clone()));
    }
    for p in iface.inputs() {
        if !bindings.contains_key(&p.name) {
            return Err(SkillError::MissingParam(p.name.clone()));
        }
    }
    let mapping = iface
        .mapping
        .iter()
        .filter(|(p, _)| bindings.contains_key(*p))
        .map(|(p, v)| (p.clone(), v.clone()))
        .collect();
    let ids = SkillNodeIds::new(prefix);
    Ok(TreeNode::fallback(
        ids.root,
        vec![
            TreeNode::condition(ids.post, skill.post.clone()),
            TreeNode::sequence_mem(
                ids.run,
                vec![
                    TreeNode::condition(ids.pre, skill.pre.clone()),
                    TreeNode::sequence(
                        ids.exec,
                        vec![
                            TreeNode::condition(ids.inv, skill.inv.clone()),
                            TreeNode::action_with(ids.action, skill.action.clone(), bindings.clone(), mapping),
                        ],
                    ),
                ],
            ),
        ],
    ))
}

/// Registered skills in registration order, indexed by name and by
/// postcondition.
#[derive(Clone, Debug, Default)]
pub struct SkillRegistry {
    entries: Vec<(Skill, SkillInterface)>,
    by_name: BTreeMap<String, usize>,
    by_post: BTreeMap<String, Vec<usize>>,
}

impl SkillRegistry {
    pub fn new() -> Self {
        SkillRegistry::default()
    }

    pub fn register_skill(&mut self, skill: Skill, iface: SkillInterface) -> Result<(), SkillError> {
        if self.by_name.contains_key(&skill.name) {
            return Err(SkillError::DuplicateSkill(skill.name));
        }
        if !skill.post.satisfiable()? {
            return Err(SkillError::UnsatisfiablePost(skill.name));
        }
        iface.validate(&skill.name)?;
        let idx = self.entries.len();
        self.by_name.insert(skill.name.clone(), idx);
        self.by_post.entry(skill.post.to_string()).or_default().push(idx);
        self.entries.push((skill, iface));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Skill> {
        self.by_name.get(name).map(|&i| &self.entries[i].0)
    }

    pub fn interface(&self, name: &str) -> Option<&SkillInterface> {
        self.by_name.get(name).map(|&i| &self.entries[i].1)
    }

    pub fn skills(&self) -> impl Iterator<Item = &Skill> {
        self.entries.iter().map(|(s, _)| s)
    }

    /// Skills whose postcondition is textually identical to `post`.
    pub fn with_post(&self, post: &Condition) -> Vec<&Skill> {
        self.by_post
            .get(&post.to_string())
            .map(|ids| ids.iter().map(|&i| &self.entries[i].0).collect())
            .unwrap_or_default()
    }

    /// All skills whose postcondition implies `goal`, highest priority
    /// first, ties in registration order.
    pub fn find_achievers(&self, goal: &Condition) -> Vec<&Skill> {
        let mut found: Vec<&Skill> = self
            .skills()
            .filter(|s| s.post.implies(goal).unwrap_or(false))
            .collect();
        found.sort_by_key(|s| std::cmp::Reverse(s.priority));
        found
    }
}

impl LookupResolver for SkillRegistry {
    fn resolve(&self, wanted: &Condition, node_id: &str) -> Option<TreeNode> {
        self.find_achievers(wanted).into_iter().find_map(|s| {
            let iface = self.interface(&s.name)?;
            let catalog: BTreeSet<String> = [s.action.clone()].into();
            expand_skill_as(&format!("{node_id}/{}", s.name), s, iface, &Params::new(), &catalog).ok()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt::{ActionRegistry, Executor, NodeKind, Status, Step};
    use crate::worldmodel::{Value, WorldState};

    fn catalog(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn move_skill() -> Skill {
        Skill::parse("move", "power == true", "error == false", "pos == 10", "move_abs")
    }

    #[test]
    fn expansion_shape() {
        let t = expand_skill(&move_skill(), &SkillInterface::new(), &Params::new(), &catalog(&["move_abs"])).unwrap();
        assert_eq!(t.kind, NodeKind::Fallback);
        assert_eq!(t.id, "move");
        assert_eq!(t.children[1].kind, NodeKind::SequenceMem);
        assert_eq!(t.children[1].children[1].kind, NodeKind::Sequence);
        assert_eq!(t.children[1].children[1].children[1].id, "move/action");
        assert_eq!(t.walk().iter().filter(|n| n.is_leaf()).count(), 4);
    }

    #[test]
    fn expansion_errors() {
        let iface = SkillInterface::new().param("target", ValueType::Real, ParamDirection::In, Some("target"));
        assert_eq!(
            expand_skill(&move_skill(), &iface, &Params::new(), &catalog(&[])),
            Err(SkillError::UnboundAction("move_abs".into()))
        );
        assert_eq!(
            expand_skill(&move_skill(), &iface, &Params::new(), &catalog(&["move_abs"])),
            Err(SkillError::MissingParam("target".into()))
        );
    }

    fn run_skill(world: WorldState, step: impl FnMut(&WorldState, &Params) -> Step + Send + 'static) -> Executor {
        let tree = expand_skill(&move_skill(), &SkillInterface::new(), &Params::new(), &catalog(&["move_abs"])).unwrap();
        let mut actions = ActionRegistry::new();
        actions.register_fn("move_abs", step);
        Executor::new(tree, world, actions)
    }

    fn world(pos: i64, power: bool, error: bool) -> WorldState {
        WorldState::new()
            .with("pos", Value::Int(pos))
            .with("power", Value::Bool(power))
            .with("error", Value::Bool(error))
    }

    #[test]
    fn satisfied_post_never_ticks_action() {
        let mut ex = run_skill(world(10, true, false), |_, _| Step::running());
        assert_eq!(ex.tick().unwrap(), Status::Success);
        assert_eq!(ex.trace.ticks_of("move/action"), 0);
    }

    #[test]
    fn false_pre_and_post_fails() {
        let mut ex = run_skill(world(0, false, false), |_, _| Step::running());
        assert_eq!(ex.tick().unwrap(), Status::Failure);
    }

    #[test]
    fn invariant_violation_fails_on_that_tick() {
        let mut ex = run_skill(world(0, true, false), |_, _| Step::running());
        assert_eq!(ex.tick().unwrap(), Status::Running);
        assert_eq!(ex.tick().unwrap(), Status::Running);
        ex.world.set("error", Value::Bool(true)).unwrap();
        assert_eq!(ex.tick().unwrap(), Status::Failure);
        assert_eq!(ex.trace.ticks_of("move/action"), 2);
    }

    #[test]
    fn registry_rules() {
        let mut reg = SkillRegistry::new();
        reg.register_skill(move_skill(), SkillInterface::new()).unwrap();
        assert_eq!(reg.len(), 1);
        assert_eq!(
            reg.register_skill(move_skill(), SkillInterface::new()),
            Err(SkillError::DuplicateSkill("move".into()))
        );
        let bad = Skill::parse("bad", "true", "true", "x > 5 AND x < 3", "a");
        assert_eq!(
            reg.register_skill(bad, SkillInterface::new()),
            Err(SkillError::UnsatisfiablePost("bad".into()))
        );
        let iface = SkillInterface::new()
            .param("a", ValueType::Int, ParamDirection::In, Some("v"))
            .param("b", ValueType::Int, ParamDirection::In, Some("v"));
        let s = Skill::parse("twice", "true", "true", "v == 1", "a");
        assert!(matches!(reg.register_skill(s, iface), Err(SkillError::InvalidInterface { .. })));
    }

    #[test]
    fn achievers_ordered_by_priority() {
        let mut reg = SkillRegistry::new();
        let goal = Condition::parse("pos == 10").unwrap();
        reg.register_skill(Skill::parse("slow", "true", "true", "pos == 10", "a").with_priority(1), SkillInterface::new())
            .unwrap();
        reg.register_skill(Skill::parse("fast", "true", "true", "pos == 10", "b").with_priority(5), SkillInterface::new())
            .unwrap();
        reg.register_skill(Skill::parse("other", "true", "true", "pos == 3", "c").with_priority(9), SkillInterface::new())
            .unwrap();
        let names: Vec<_> = reg.find_achievers(&goal).iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["fast", "slow"]);
        assert!(reg.find_achievers(&Condition::parse("pos == 99").unwrap()).is_empty());
        assert_eq!(reg.with_post(&goal).len(), 2);
    }
}
