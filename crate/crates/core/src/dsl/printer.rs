use std::fmt::Write;

use crate::bt::{NodeKind, TreeNode};
use crate::skills::ParamDirection;
use crate::worldmodel::fmt_real;

use super::ast::*;

/// Canonical text of `doc`: two-space indentation, one declaration per
/// block, blank lines between top-level items.
pub fn print_document(doc: &Document) -> String {
    let mut out = String::new();
    for (i, item) in doc.items.iter().enumerate() {
        // Runs of action stubs stay together.
        let stub_run = matches!((doc.items.get(i.wrapping_sub(1)), item), (Some(Item::Action(_)), Item::Action(_)));
        if i > 0 && !stub_run {
            out.push('\n');
        }
        match item {
            Item::Action(a) => print_action(&mut out, a),
            Item::Skill(s) => print_skill(&mut out, s),
            Item::Tree(t) => {
                let _ = writeln!(out, "tree {} {{", t.name);
                print_node(&mut out, &t.root, 1);
                out.push_str("}\n");
            }
            Item::Goal(g) => {
                let _ = writeln!(out, "goal {} {{", g.name);
                for c in &g.conditions {
                    let _ = writeln!(out, "  {}", quote(&c.to_string()));
                }
                out.push_str("}\n");
            }
            Item::Deployment(d) => print_deployment(&mut out, d),
        }
    }
    out
}

fn print_action(out: &mut String, a: &ActionDecl) {
    let params: Vec<String> = a.params.iter().map(|(n, t)| format!("{n}: {}", t.name())).collect();
    let _ = writeln!(out, "action {}({})", a.name, params.join(", "));
}

fn print_skill(out: &mut String, s: &SkillDecl) {
    let _ = writeln!(out, "skill {} {{", s.name);
    let _ = writeln!(out, "  pre: {}", quote(&s.pre.to_string()));
    let _ = writeln!(out, "  inv: {}", quote(&s.inv.to_string()));
    let _ = writeln!(out, "  post: {}", quote(&s.post.to_string()));
    let _ = writeln!(out, "  action: {}", s.action);
    if s.priority != 0 {
        let _ = writeln!(out, "  priority: {}", s.priority);
    }
    if let Some((h, t)) = &s.runs_on {
        let _ = writeln!(out, "  runs_on: {h}.{t}");
    }
    for p in &s.params {
        let dir = match p.dir {
            ParamDirection::In => "in",
            ParamDirection::Out => "out",
        };
        let _ = write!(out, "  param {}: {} {dir}", p.name, p.ty.name());
        if let Some(v) = &p.var {
            let _ = write!(out, " -> {v}");
        }
        out.push('\n');
    }
    out.push_str("}\n");
}

fn args_text(args: &[(String, Lit)]) -> String {
    let parts: Vec<String> = args.iter().map(|(n, v)| format!("{n} = {v}")).collect();
    format!("({})", parts.join(", "))
}

fn print_node(out: &mut String, n: &NodeAst, depth: usize) {
    let pad = "  ".repeat(depth);
    out.push_str(&pad);
    out.push_str(n.form.keyword());
    match &n.form {
        NodeForm::Sequence | NodeForm::Fallback | NodeForm::SequenceMem => {}
        NodeForm::Cond(c) => {
            let _ = write!(out, " {}", quote(&c.to_string()));
        }
        NodeForm::Action { name, args, map } => {
            let _ = write!(out, " {name}");
            if !args.is_empty() {
                out.push_str(&args_text(args));
            }
            if !map.is_empty() {
                let parts: Vec<String> = map.iter().map(|(p, v)| format!("{p} -> {v}")).collect();
                let _ = write!(out, " map({})", parts.join(", "));
            }
        }
        NodeForm::Skill { name, args, refine } => {
            let _ = write!(out, " {name}");
            if !args.is_empty() {
                out.push_str(&args_text(args));
            }
            if !refine.is_empty() {
                let parts: Vec<&str> = refine
                    .iter()
                    .map(|r| match r {
                        Refine::Pre => "pre",
                        Refine::Inv => "inv",
                    })
                    .collect();
                let _ = write!(out, " refine({})", parts.join(", "));
            }
        }
        NodeForm::Lookup { post } => {
            let _ = write!(out, " post={}", quote(&post.to_string()));
        }
        NodeForm::Remote { host, tree } => {
            let _ = write!(out, " {host}.{tree}");
        }
    }
    if let Some(id) = &n.id {
        let _ = write!(out, " @{}", quote(id));
    }
    let composite = matches!(n.form, NodeForm::Sequence | NodeForm::Fallback | NodeForm::SequenceMem);
    if composite && n.children.is_empty() {
        out.push_str(" { }\n");
    } else if composite || !n.children.is_empty() {
        out.push_str(" {\n");
        for c in &n.children {
            print_node(out, c, depth + 1);
        }
        let _ = writeln!(out, "{pad}}}");
    } else {
        out.push('\n');
    }
}

fn unit_text(u: &str) -> String {
    let bare = u.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
        && u.chars().all(|c| c.is_alphanumeric() || c == '_');
    if bare {
        u.to_string()
    } else {
        quote(u)
    }
}

fn print_deployment(out: &mut String, d: &DeploymentDecl) {
    let _ = writeln!(out, "deployment {} {{", d.name);
    for h in &d.hosts {
        let _ = writeln!(out, "  host {} {{", h.id);
        let _ = writeln!(out, "    tree: {}", h.tree);
        if let Some((t0, dt)) = h.clock {
            let _ = writeln!(out, "    clock {} {}", fmt_real(t0), fmt_real(dt));
        }
        if !h.vars.is_empty() {
            out.push_str("    world {\n");
            for v in &h.vars {
                let _ = write!(out, "      {}: {} = {}", v.name, v.ty.name(), v.value);
                if let Some(u) = &v.unit {
                    let _ = write!(out, " [{}]", unit_text(u));
                }
                out.push('\n');
            }
            out.push_str("    }\n");
        }
        for p in &h.ports {
            let _ = writeln!(
                out,
                "    port {}: {} {} at {} var {}",
                p.name,
                p.ty.name(),
                p.dir,
                quote(&p.node),
                p.var
            );
        }
        for inj in &h.injects {
            let parts: Vec<String> = inj.writes.iter().map(|(v, l)| format!("{v} = {l}")).collect();
            let _ = writeln!(out, "    inject at {} {{ {} }}", inj.at, parts.join(", "));
        }
        out.push_str("  }\n");
    }
    for l in &d.links {
        let _ = writeln!(out, "  link {}.{} -> {}.{}", l.from.0, l.from.1, l.to.0, l.to.1);
    }
    out.push_str("}\n");
}

/// Id a node gets when it carries no `@"id"`: the tree name for the root,
/// the skill name for skill nodes, otherwise `parent/index`.
pub fn default_id(parent: Option<&str>, index: usize, form: &NodeForm, tree: &str) -> String {
    match (parent, form) {
        (_, NodeForm::Skill { name, .. }) => name.clone(),
        (None, _) => tree.to_string(),
        (Some(p), _) => format!("{p}/{index}"),
    }
}

/// The declaration of an already built tree, such as a backchaining
/// result. Ids are written out only where they differ from the defaults.
pub fn tree_decl(name: &str, root: &TreeNode) -> TreeDecl {
    TreeDecl {
        name: name.to_string(),
        root: node_ast(root, None, 0, name),
        pos: Pos::default(),
    }
}

fn node_ast(n: &TreeNode, parent: Option<&str>, index: usize, tree: &str) -> NodeAst {
    let form = match &n.kind {
        NodeKind::Sequence => NodeForm::Sequence,
        NodeKind::Fallback => NodeForm::Fallback,
        NodeKind::SequenceMem => NodeForm::SequenceMem,
        NodeKind::Condition(c) => NodeForm::Cond(c.clone()),
        NodeKind::Action { action, params, mapping } => NodeForm::Action {
            name: action.clone(),
            args: params.iter().map(|(k, v)| (k.clone(), Lit::from_value(v))).collect(),
            map: mapping.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        },
        NodeKind::Lookup { wanted } => NodeForm::Lookup { post: wanted.clone() },
        NodeKind::Remote { host, tree } => NodeForm::Remote {
            host: host.clone(),
            tree: tree.clone(),
        },
    };
    let id = (default_id(parent, index, &form, tree) != n.id).then(|| n.id.clone());
    let children = n
        .children
        .iter()
        .enumerate()
        .map(|(i, c)| node_ast(c, Some(&n.id), i, tree))
        .collect();
    NodeAst {
        id,
        form,
        children,
        pos: Pos::default(),
    }
}
