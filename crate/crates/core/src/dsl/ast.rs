use std::fmt;

use crate::runtime::PortDirection;
use crate::skills::ParamDirection;
use crate::worldmodel::{fmt_real, Condition, Value, ValueType};

/// 1-based source position. Always compares equal, so documents compare
/// structurally.
#[derive(Clone, Copy, Debug, Default, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Pos) -> bool {
        true
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A literal value as written. Bare identifiers are enumeration members.
#[derive(Clone, Debug, PartialEq)]
pub enum Lit {
    Bool(bool),
    Int(i64),
    Real(f64),
    Str(String),
    Ident(String),
}

impl Lit {
    pub fn from_value(v: &Value) -> Lit {
        match v {
            Value::Bool(b) => Lit::Bool(*b),
            Value::Int(i) => Lit::Int(*i),
            Value::Real(r) => Lit::Real(*r),
            Value::Str(s) => Lit::Str(s.clone()),
            Value::Enum(s) => Lit::Ident(s.clone()),
        }
    }

    /// The value this literal denotes as type `ty`, if it can.
    pub fn to_value(&self, ty: ValueType) -> Option<Value> {
        match (self, ty) {
            (Lit::Bool(b), ValueType::Bool) => Some(Value::Bool(*b)),
            (Lit::Int(i), ValueType::Int) => Some(Value::Int(*i)),
            (Lit::Int(i), ValueType::Real) => Some(Value::Real(*i as f64)),
            (Lit::Real(r), ValueType::Real) => Some(Value::Real(*r)),
            (Lit::Str(s), ValueType::Str) => Some(Value::Str(s.clone())),
            (Lit::Ident(s), ValueType::Enum) => Some(Value::Enum(s.clone())),
            _ => None,
        }
    }

    /// The value this literal denotes without a declared type.
    pub fn value(&self) -> Value {
        match self {
            Lit::Bool(b) => Value::Bool(*b),
            Lit::Int(i) => Value::Int(*i),
            Lit::Real(r) => Value::Real(*r),
            Lit::Str(s) => Value::Str(s.clone()),
            Lit::Ident(s) => Value::Enum(s.clone()),
        }
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lit::Bool(b) => write!(f, "{b}"),
            Lit::Int(i) => write!(f, "{i}"),
            Lit::Real(r) => f.write_str(&fmt_real(*r)),
            Lit::Str(s) => f.write_str(&quote(s)),
            Lit::Ident(s) => f.write_str(s),
        }
    }
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Document {
    pub items: Vec<Item>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Action(ActionDecl),
    Skill(SkillDecl),
    Tree(TreeDecl),
    Goal(GoalDecl),
    Deployment(DeploymentDecl),
}

/// `action name(param: type, ...)`: an action implementation the host
/// must provide.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionDecl {
    pub name: String,
    pub params: Vec<(String, ValueType)>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamDecl {
    pub name: String,
    pub ty: ValueType,
    pub dir: ParamDirection,
    pub var: Option<String>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkillDecl {
    pub name: String,
    pub pre: Condition,
    pub inv: Condition,
    pub post: Condition,
    pub action: String,
    pub action_pos: Pos,
    pub priority: i64,
    /// `runs_on: HOST.tree`: the skill executes on another host, and
    /// lookups bind it as a remote leaf.
    pub runs_on: Option<(String, String)>,
    pub params: Vec<ParamDecl>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeDecl {
    pub name: String,
    pub root: NodeAst,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeAst {
    /// Explicit `@"id"`; otherwise derived from the position in the tree.
    pub id: Option<String>,
    pub form: NodeForm,
    pub children: Vec<NodeAst>,
    pub pos: Pos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Refine {
    Pre,
    Inv,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeForm {
    Sequence,
    Fallback,
    SequenceMem,
    Cond(Condition),
    /// `action name(p = v, ...) map(p -> var, ...)`
    Action {
        name: String,
        args: Vec<(String, Lit)>,
        map: Vec<(String, String)>,
    },
    /// `skill name(p = v, ...) refine(pre, inv)`
    Skill {
        name: String,
        args: Vec<(String, Lit)>,
        refine: Vec<Refine>,
    },
    /// `lookup post="..."`, optionally with an already bound child.
    Lookup { post: Condition },
    Remote { host: String, tree: String },
}

impl NodeForm {
    pub fn keyword(&self) -> &'static str {
        match self {
            NodeForm::Sequence => "sequence",
            NodeForm::Fallback => "fallback",
            NodeForm::SequenceMem => "sequence_mem",
            NodeForm::Cond(_) => "cond",
            NodeForm::Action { .. } => "action",
            NodeForm::Skill { .. } => "skill",
            NodeForm::Lookup { .. } => "lookup",
            NodeForm::Remote { .. } => "remote",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoalDecl {
    pub name: String,
    pub conditions: Vec<Condition>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeploymentDecl {
    pub name: String,
    pub hosts: Vec<HostDecl>,
    pub links: Vec<LinkDecl>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HostDecl {
    pub id: String,
    pub tree: String,
    pub tree_pos: Pos,
    /// `clock t0 dt`
    pub clock: Option<(f64, f64)>,
    pub vars: Vec<VarDecl>,
    pub ports: Vec<PortDecl>,
    pub injects: Vec<InjectDecl>,
    pub pos: Pos,
}

/// `name: type = value [unit]`
#[derive(Clone, Debug, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub ty: ValueType,
    pub value: Lit,
    pub unit: Option<String>,
    pub pos: Pos,
}

/// `port name: type in|out at "node" var name`
#[derive(Clone, Debug, PartialEq)]
pub struct PortDecl {
    pub name: String,
    pub ty: ValueType,
    pub dir: PortDirection,
    pub node: String,
    pub var: String,
    pub pos: Pos,
}

/// `inject at K { var = value ... }`
#[derive(Clone, Debug, PartialEq)]
pub struct InjectDecl {
    pub at: u64,
    pub writes: Vec<(String, Lit)>,
    pub pos: Pos,
}

/// `link HOST.port -> HOST.port`
#[derive(Clone, Debug, PartialEq)]
pub struct LinkDecl {
    pub from: (String, String),
    pub to: (String, String),
    pub pos: Pos,
}
