use std::collections::{BTreeMap, BTreeSet};

use crate::backchain::{refine_condition, refine_precondition, Goal, DEFAULT_MAX_DEPTH};
use crate::bt::{LookupResolver, Params, TreeNode};
use crate::runtime::{DataLink, Deployment, HostSpec, Injection, PortRef, PortSpec};
use crate::skills::{expand_skill_as, Param, Skill, SkillInterface, SkillNodeIds, SkillRegistry};
use crate::worldmodel::{Condition, ValueType, WorldState};

use super::ast::*;
use super::printer::default_id;
use super::{Diagnostic, DslError};

/// A resolved document: everything it declares, ready to run.
#[derive(Clone, Debug, Default)]
pub struct Program {
    /// Action name to its parameter signature.
    pub actions: BTreeMap<String, Vec<(String, ValueType)>>,
    pub skills: SkillRegistry,
    /// Skills that run on another host, as `(host, tree)`.
    pub placements: BTreeMap<String, (String, String)>,
    pub trees: BTreeMap<String, TreeNode>,
    pub goals: BTreeMap<String, Goal>,
    pub deployments: BTreeMap<String, Deployment>,
}

impl Program {
    /// Lookup resolver over the declared skills, binding placed skills as
    /// remote leaves.
    pub fn resolver(&self) -> SkillResolver {
        SkillResolver {
            skills: self.skills.clone(),
            placements: self.placements.clone(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SkillResolver {
    pub skills: SkillRegistry,
    pub placements: BTreeMap<String, (String, String)>,
}

impl LookupResolver for SkillResolver {
    fn resolve(&self, wanted: &Condition, node_id: &str) -> Option<TreeNode> {
        let first = self.skills.find_achievers(wanted).into_iter().next()?;
        match self.placements.get(&first.name) {
            Some((host, tree)) => Some(TreeNode::remote(format!("{node_id}/{}", first.name), host, tree)),
            None => self.skills.resolve(wanted, node_id),
        }
    }
}

struct Lowerer {
    diags: Vec<Diagnostic>,
    program: Program,
    tree_names: BTreeSet<String>,
}

impl Lowerer {
    fn diag(&mut self, pos: Pos, message: impl Into<String>) {
        self.diags.push(Diagnostic {
            pos,
            message: message.into(),
        });
    }
}

pub(crate) fn lower(doc: &Document) -> Result<Program, DslError> {
    let mut lw = Lowerer {
        diags: Vec::new(),
        program: Program::default(),
        tree_names: BTreeSet::new(),
    };
    let mut seen: BTreeMap<(&str, &str), Pos> = BTreeMap::new();
    for item in &doc.items {
        let (kind, name, pos) = match item {
            Item::Action(a) => ("action", &a.name, a.pos),
            Item::Skill(s) => ("skill", &s.name, s.pos),
            Item::Tree(t) => ("tree", &t.name, t.pos),
            Item::Goal(g) => ("goal", &g.name, g.pos),
            Item::Deployment(d) => ("deployment", &d.name, d.pos),
        };
        if let Some(first) = seen.insert((kind, name), pos) {
            lw.diag(pos, format!("{kind} `{name}` already declared at {first}"));
        }
        match item {
            Item::Action(a) => {
                lw.program.actions.insert(a.name.clone(), a.params.clone());
            }
            Item::Tree(t) => {
                lw.tree_names.insert(t.name.clone());
            }
            _ => {}
        }
    }
    for item in &doc.items {
        if let Item::Skill(s) = item {
            lw.skill(s);
        }
    }
    for item in &doc.items {
        if let Item::Tree(t) = item {
            let mut ids = BTreeMap::new();
            if let Some(root) = lw.node(&t.root, None, 0, &t.name, &mut ids) {
                // Skill expansion adds ids the source never spelled out.
                let mut all = BTreeSet::new();
                for n in root.walk() {
                    if !all.insert(n.id.as_str()) {
                        lw.diag(t.pos, format!("tree `{}` has two nodes with id `{}`", t.name, n.id));
                    }
                }
                lw.program.trees.insert(t.name.clone(), root);
            }
        }
    }
    for item in &doc.items {
        match item {
            Item::Goal(g) => match Goal::new(g.conditions.clone()) {
                Ok(goal) => {
                    lw.program.goals.insert(g.name.clone(), goal);
                }
                Err(e) => lw.diag(g.pos, format!("goal `{}`: {e}", g.name)),
            },
            Item::Deployment(d) => {
                if let Some(dep) = lw.deployment(d) {
                    lw.program.deployments.insert(d.name.clone(), dep);
                }
            }
            _ => {}
        }
    }
    if lw.diags.is_empty() {
        Ok(lw.program)
    } else {
        Err(DslError::Resolution(lw.diags))
    }
}

impl Lowerer {
    fn skill(&mut self, s: &SkillDecl) {
        if !self.program.actions.contains_key(&s.action) {
            self.diag(s.action_pos, format!("skill `{}` uses undeclared action `{}`", s.name, s.action));
        }
        if let Some((_, tree)) = &s.runs_on {
            if !self.tree_names.contains(tree) {
                self.diag(s.pos, format!("skill `{}` runs on undeclared tree `{tree}`", s.name));
            }
        }
        let mut iface = SkillInterface::new();
        for p in &s.params {
            iface.params.push(Param {
                name: p.name.clone(),
                ty: p.ty,
                dir: p.dir,
            });
            if let Some(v) = &p.var {
                iface.mapping.insert(p.name.clone(), v.clone());
            }
        }
        let skill = Skill::new(&s.name, s.pre.clone(), s.inv.clone(), s.post.clone(), &s.action).with_priority(s.priority);
        match self.program.skills.register_skill(skill, iface) {
            Ok(()) => {
                if let Some(place) = &s.runs_on {
                    self.program.placements.insert(s.name.clone(), place.clone());
                }
            }
            Err(e) => self.diag(s.pos, e.to_string()),
        }
    }

    /// Typed values for `args` against a parameter signature.
    fn bind(&mut self, pos: Pos, what: &str, sig: &[(String, ValueType)], args: &[(String, Lit)]) -> Params {
        let mut out = Params::new();
        for (name, lit) in args {
            let Some((_, ty)) = sig.iter().find(|(n, _)| n == name) else {
                self.diag(pos, format!("{what} has no parameter `{name}`"));
                continue;
            };
            match lit.to_value(*ty) {
                Some(v) => {
                    out.insert(name.clone(), v);
                }
                None => self.diag(pos, format!("{what}: `{lit}` is not a {} for `{name}`", ty.name())),
            }
        }
        out
    }

    fn node(
        &mut self,
        n: &NodeAst,
        parent: Option<&str>,
        index: usize,
        tree: &str,
        ids: &mut BTreeMap<String, Pos>,
    ) -> Option<TreeNode> {
        let id = n.id.clone().unwrap_or_else(|| default_id(parent, index, &n.form, tree));
        if let Some(first) = ids.insert(id.clone(), n.pos) {
            self.diag(n.pos, format!("node id `{id}` already used at {first}; give one an explicit @\"id\""));
        }
        let mut children = Vec::new();
        for (i, c) in n.children.iter().enumerate() {
            children.push(self.node(c, Some(&id), i, tree, ids));
        }
        let children: Option<Vec<TreeNode>> = children.into_iter().collect();
        let children = children?;
        let node = match &n.form {
            NodeForm::Sequence => TreeNode::sequence(id, children),
            NodeForm::Fallback => TreeNode::fallback(id, children),
            NodeForm::SequenceMem => TreeNode::sequence_mem(id, children),
            NodeForm::Cond(c) => TreeNode::condition(id, c.clone()),
            NodeForm::Lookup { post } => TreeNode::lookup(id, post.clone(), children.into_iter().next()),
            NodeForm::Remote { host, tree: t } => {
                if !self.tree_names.contains(t) {
                    self.diag(n.pos, format!("remote `{host}.{t}` names undeclared tree `{t}`"));
                    return None;
                }
                TreeNode::remote(id, host, t)
            }
            NodeForm::Action { name, args, map } => {
                let Some(sig) = self.program.actions.get(name).cloned() else {
                    self.diag(n.pos, format!("undeclared action `{name}`"));
                    return None;
                };
                let params = self.bind(n.pos, &format!("action `{name}`"), &sig, args);
                for (p, _) in map {
                    if !params.contains_key(p) {
                        self.diag(n.pos, format!("action `{name}` maps unbound parameter `{p}`"));
                    }
                }
                TreeNode::action_with(id, name, params, map.iter().cloned().collect())
            }
            NodeForm::Skill { name, args, refine } => return self.skill_node(n, id, name, args, refine),
        };
        Some(node)
    }

    fn skill_node(&mut self, n: &NodeAst, id: String, name: &str, args: &[(String, Lit)], refine: &[Refine]) -> Option<TreeNode> {
        let (Some(skill), Some(iface)) = (self.program.skills.get(name).cloned(), self.program.skills.interface(name).cloned())
        else {
            self.diag(n.pos, format!("undeclared skill `{name}`"));
            return None;
        };
        let sig: Vec<(String, ValueType)> = iface.params.iter().map(|p| (p.name.clone(), p.ty)).collect();
        let bindings = self.bind(n.pos, &format!("skill `{name}`"), &sig, args);
        let catalog: BTreeSet<String> = self.program.actions.keys().cloned().collect();
        let mut tree = match expand_skill_as(&id, &skill, &iface, &bindings, &catalog) {
            Ok(t) => t,
            Err(e) => {
                self.diag(n.pos, format!("skill `{name}`: {e}"));
                return None;
            }
        };
        let ids = SkillNodeIds::new(&id);
        for r in refine {
            let result = match r {
                Refine::Inv => refine_condition(&tree, &ids.inv, &self.program.skills, DEFAULT_MAX_DEPTH).map(|p| p.root),
                Refine::Pre => refine_precondition(&tree, &self.program.resolver()),
            };
            match result {
                Ok(t) => tree = t,
                Err(e) => self.diag(n.pos, format!("skill `{name}`: {e}")),
            }
        }
        Some(tree)
    }

    fn deployment(&mut self, d: &DeploymentDecl) -> Option<Deployment> {
        let before = self.diags.len();
        let mut dep = Deployment {
            name: d.name.clone(),
            ..Deployment::default()
        };
        for h in &d.hosts {
            let Some(tree) = self.program.trees.get(&h.tree).cloned() else {
                if !self.tree_names.contains(&h.tree) {
                    self.diag(h.tree_pos, format!("host `{}` runs undeclared tree `{}`", h.id, h.tree));
                }
                continue;
            };
            let mut world = match h.clock {
                Some((t0, dt)) => WorldState::with_clock(t0, dt),
                None => WorldState::new(),
            };
            for v in &h.vars {
                let Some(value) = v.value.to_value(v.ty) else {
                    self.diag(v.pos, format!("`{}` is not a {} for `{}`", v.value, v.ty.name(), v.name));
                    continue;
                };
                let result = match &v.unit {
                    Some(u) => world.declare_with_unit(&v.name, value, u),
                    None => world.declare(&v.name, value),
                };
                if let Err(e) = result {
                    self.diag(v.pos, e.to_string());
                }
            }
            let mut spec = HostSpec::new(&h.id, &h.tree, tree, world);
            for p in &h.ports {
                spec.ports.push(PortSpec {
                    name: p.name.clone(),
                    ty: p.ty,
                    dir: p.dir,
                    node: p.node.clone(),
                    var: p.var.clone(),
                });
            }
            for inj in &h.injects {
                let mut writes = Vec::new();
                for (var, lit) in &inj.writes {
                    let value = match spec.world.type_of(var) {
                        Some(ty) => lit.to_value(ty),
                        None => {
                            self.diag(inj.pos, format!("injection into undeclared variable `{var}` of host `{}`", h.id));
                            continue;
                        }
                    };
                    match value {
                        Some(v) => writes.push((var.clone(), v)),
                        None => self.diag(inj.pos, format!("`{lit}` does not fit variable `{var}`")),
                    }
                }
                spec.injections.push(Injection { at: inj.at, writes });
            }
            dep.hosts.push(spec);
        }
        for l in &d.links {
            for (host, port) in [&l.from, &l.to] {
                match d.hosts.iter().find(|h| h.id == *host) {
                    None => self.diag(l.pos, format!("link names undeclared host `{host}`")),
                    Some(h) if !h.ports.iter().any(|p| p.name == *port) => {
                        self.diag(l.pos, format!("host `{host}` has no port `{port}`"))
                    }
                    _ => {}
                }
            }
            dep.data_links.push(DataLink {
                from: PortRef::new(&l.from.0, &l.from.1),
                to: PortRef::new(&l.to.0, &l.to.1),
            });
        }
        (self.diags.len() == before).then_some(dep)
    }
}
