//! Goal-driven composition: unmet conditions are replaced by fallbacks over
//! the skills that achieve them, recursively through their preconditions.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::bt::{ActionCatalog, LookupResolver, NodeKind, Params, TreeNode};
use crate::skills::{expand_skill_as, Skill, SkillNodeIds, SkillRegistry};
use crate::worldmodel::Condition;

pub const DEFAULT_MAX_DEPTH: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackchainError {
    #[error("goal has no conditions")]
    EmptyGoal,
    #[error("max_depth must be at least 1")]
    InvalidDepth,
    #[error("`{0}` is not an expanded skill tree")]
    NotASkillTree(String),
    #[error("no condition leaf `{0}`")]
    NoSuchCondition(String),
}

/// Conditions to establish, highest priority first.
#[derive(Clone, Debug, PartialEq)]
pub struct Goal {
    conditions: Vec<Condition>,
}

impl Goal {
    pub fn new(conditions: Vec<Condition>) -> Result<Self, BackchainError> {
        if conditions.is_empty() {
            return Err(BackchainError::EmptyGoal);
        }
        Ok(Goal { conditions })
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }
}

/// Why a subtree is in the plan: the condition it replaced and the skill
/// that achieves it.
#[derive(Clone, Debug, PartialEq)]
pub struct Replacement {
    pub condition: Condition,
    pub skill: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanTree {
    pub root: TreeNode,
    /// Achiever subtree id to what it replaced.
    pub provenance: BTreeMap<String, Replacement>,
    /// Condition leaves left as they are, with their node ids.
    pub unrefined: Vec<(String, Condition)>,
    /// Deepest nesting of achievers used.
    pub depth: usize,
}

impl PlanTree {
    /// Human-readable provenance report.
    pub fn report(&self) -> String {
        let mut out = String::new();
        for (id, r) in &self.provenance {
            out.push_str(&format!("{id}: `{}` achieved by {}\n", r.condition, r.skill));
        }
        for (id, c) in &self.unrefined {
            out.push_str(&format!("{id}: `{c}` unrefined\n"));
        }
        out.push_str(&format!("depth {}\n", self.depth));
        out
    }
}

impl fmt::Display for PlanTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.report())
    }
}

struct AnyAction;

impl ActionCatalog for AnyAction {
    fn has_action(&self, _name: &str) -> bool {
        true
    }
}

struct Planner<'a> {
    reg: &'a SkillRegistry,
    max_depth: usize,
    provenance: BTreeMap<String, Replacement>,
    unrefined: Vec<(String, Condition)>,
    depth: usize,
    /// (condition, skill) pairs on the current branch.
    branch: Vec<(String, String)>,
    /// Conditions being refined on the current branch, outermost first.
    pursued: Vec<Condition>,
}

impl Planner<'_> {
    fn achievers(&self, cond: &Condition) -> Vec<&Skill> {
        let key = cond.to_string();
        self.reg
            .find_achievers(cond)
            .into_iter()
            .filter(|s| !self.branch.iter().any(|(c, k)| *c == key && *k == s.name))
            .collect()
    }

    fn bare(&mut self, id: &str, cond: &Condition) -> TreeNode {
        self.unrefined.push((id.to_string(), cond.clone()));
        TreeNode::condition(id, cond.clone())
    }

    /// Replacement for the condition leaf `id`, at nesting `depth`.
    fn refine(&mut self, id: &str, cond: &Condition, depth: usize) -> TreeNode {
        if cond.is_always() {
            return TreeNode::condition(id, cond.clone());
        }
        if depth >= self.max_depth {
            return self.bare(id, cond);
        }
        // Needing `cond` on the way to a goal it already implies is
        // circular: its achievers are alternatives of that goal already.
        if self.pursued.iter().any(|g| cond.implies(g).unwrap_or(false)) {
            return TreeNode::condition(id, cond.clone());
        }
        self.pursued.push(cond.clone());
        let node = self.alternatives(id, cond, depth);
        self.pursued.pop();
        node
    }

    fn alternatives(&mut self, id: &str, cond: &Condition, depth: usize) -> TreeNode {
        let mut alternatives = vec![TreeNode::condition(format!("{id}/cond"), cond.clone())];
        let key = cond.to_string();
        let skills: Vec<Skill> = self.achievers(cond).into_iter().cloned().collect();
        for skill in skills {
            let prefix = format!("{id}/{}", skill.name);
            let Some(iface) = self.reg.interface(&skill.name) else { continue };
            let Ok(mut tree) = expand_skill_as(&prefix, &skill, iface, &Params::new(), &AnyAction) else {
                continue;
            };
            self.branch.push((key.clone(), skill.name.clone()));
            self.depth = self.depth.max(depth + 1);
            let pre_id = SkillNodeIds::new(&prefix).pre;
            let refined = self.refine(&pre_id, &skill.pre, depth + 1);
            self.branch.pop();
            replace_node(&mut tree, &pre_id, refined);
            self.provenance.insert(
                prefix,
                Replacement {
                    condition: cond.clone(),
                    skill: skill.name.clone(),
                },
            );
            alternatives.push(tree);
        }
        // A conjunction no single skill achieves may still be reached one
        // literal at a time.
        if cond.len() > 1 {
            let parts = cond.split();
            if parts.iter().any(|p| !self.achievers(p).is_empty()) {
                let split_id = format!("{id}/split");
                let children = parts
                    .iter()
                    .enumerate()
                    .map(|(j, p)| self.refine(&format!("{split_id}/{j}"), p, depth))
                    .collect();
                alternatives.push(TreeNode::sequence(split_id, children));
            }
        }
        if alternatives.len() == 1 {
            return self.bare(id, cond);
        }
        TreeNode::fallback(id, alternatives)
    }
}

fn replace_node(tree: &mut TreeNode, id: &str, with: TreeNode) -> bool {
    match tree.find_mut(id) {
        Some(node) => {
            *node = with;
            true
        }
        None => false,
    }
}

/// Builds `Sequence(C1, C2, ...)` for the goal and replaces each condition
/// that has achievers with `Fallback(C, achiever trees...)`, recursing into
/// every achiever's precondition up to `max_depth` levels.
///
/// A skill is never used again for the same condition below itself.
/// Conditions nothing achieves stay as plain condition leaves and are
/// listed in [`PlanTree::unrefined`].
pub fn backchain(goal: &Goal, reg: &SkillRegistry, max_depth: usize) -> Result<PlanTree, BackchainError> {
    if max_depth == 0 {
        return Err(BackchainError::InvalidDepth);
    }
    let mut planner = Planner {
        reg,
        max_depth,
        provenance: BTreeMap::new(),
        unrefined: Vec::new(),
        depth: 0,
        branch: Vec::new(),
        pursued: Vec::new(),
    };
    let children = goal
        .conditions()
        .iter()
        .enumerate()
        .map(|(i, c)| planner.refine(&format!("goal/{i}"), c, 0))
        .collect();
    Ok(PlanTree {
        root: TreeNode::sequence("goal", children),
        provenance: planner.provenance,
        unrefined: planner.unrefined,
        depth: planner.depth,
    })
}

/// Replaces a condition leaf anywhere in `tree` by its backchained
/// refinement, keeping the leaf's id for the new subtree.
pub fn refine_condition(
    tree: &TreeNode,
    leaf_id: &str,
    reg: &SkillRegistry,
    max_depth: usize,
) -> Result<PlanTree, BackchainError> {
    if max_depth == 0 {
        return Err(BackchainError::InvalidDepth);
    }
    let Some(NodeKind::Condition(cond)) = tree.find(leaf_id).map(|n| &n.kind) else {
        return Err(BackchainError::NoSuchCondition(leaf_id.to_string()));
    };
    let mut planner = Planner {
        reg,
        max_depth,
        provenance: BTreeMap::new(),
        unrefined: Vec::new(),
        depth: 0,
        branch: Vec::new(),
        pursued: Vec::new(),
    };
    let refined = planner.refine(leaf_id, &cond.clone(), 0);
    let mut root = tree.clone();
    replace_node(&mut root, leaf_id, refined);
    Ok(PlanTree {
        root,
        provenance: planner.provenance,
        unrefined: planner.unrefined,
        depth: planner.depth,
    })
}

/// Replaces the precondition leaf of an expanded skill with
/// `Fallback(pre, Lookup(pre))`.
///
/// The lookup is bound right away to whatever `resolver` offers, if
/// there is one; otherwise it is left empty and resolves when first ticked.
pub fn refine_precondition(skill_tree: &TreeNode, resolver: &dyn LookupResolver) -> Result<TreeNode, BackchainError> {
    let ids = SkillNodeIds::new(&skill_tree.id);
    let Some(NodeKind::Condition(pre)) = skill_tree.find(&ids.pre).map(|n| n.kind.clone()) else {
        return Err(BackchainError::NotASkillTree(skill_tree.id.clone()));
    };
    let lookup_id = format!("{}/lookup", ids.pre);
    let bound = resolver.resolve(&pre, &lookup_id);
    let refinement = TreeNode::fallback(
        ids.pre.clone(),
        vec![
            TreeNode::condition(format!("{}/cond", ids.pre), pre.clone()),
            TreeNode::lookup(lookup_id, pre, bound),
        ],
    );
    let mut tree = skill_tree.clone();
    replace_node(&mut tree, &ids.pre, refinement);
    Ok(tree)
}
