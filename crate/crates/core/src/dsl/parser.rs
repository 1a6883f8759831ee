use crate::runtime::PortDirection;
use crate::skills::ParamDirection;
use crate::worldmodel::{Condition, ValueType, WorldError};

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::DslError;

pub(crate) fn parse(src: &str) -> Result<Document, DslError> {
    let mut p = Parser {
        toks: lex(src)?,
        i: 0,
    };
    let mut doc = Document::default();
    while p.peek() != &Tok::Eof {
        doc.items.push(p.item()?);
    }
    Ok(doc)
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if t.tok != Tok::Eof {
            self.i += 1;
        }
        t
    }

    fn err(&self, expected: &str) -> DslError {
        let t = &self.toks[self.i];
        DslError::Syntax {
            line: t.pos.line,
            col: t.pos.col,
            expected: expected.to_string(),
            found: t.tok.describe(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), DslError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.err(&tok.describe()))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), DslError> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, DslError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.err(what)),
        }
    }

    fn string(&mut self, what: &str) -> Result<(String, Pos), DslError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                let pos = self.pos();
                self.bump();
                Ok((s, pos))
            }
            _ => Err(self.err(what)),
        }
    }

    fn condition(&mut self) -> Result<Condition, DslError> {
        let (text, pos) = self.string("condition string")?;
        Condition::parse(&text).map_err(|e| match e {
            WorldError::Syntax { offset, expected } => DslError::Syntax {
                line: pos.line,
                col: pos.col + offset,
                expected,
                found: "condition text".into(),
            },
            other => DslError::Syntax {
                line: pos.line,
                col: pos.col,
                expected: other.to_string(),
                found: "condition text".into(),
            },
        })
    }

    fn value_type(&mut self) -> Result<ValueType, DslError> {
        let what = "type (bool, int, real, string, enum)";
        match self.peek() {
            Tok::Ident(s) => match ValueType::from_name(s) {
                Some(t) => {
                    self.bump();
                    Ok(t)
                }
                None => Err(self.err(what)),
            },
            _ => Err(self.err(what)),
        }
    }

    fn int(&mut self, what: &str) -> Result<i64, DslError> {
        match self.peek().clone() {
            Tok::Num { text, real: false } => {
                let v = text.parse().map_err(|_| self.err(what))?;
                self.bump();
                Ok(v)
            }
            _ => Err(self.err(what)),
        }
    }

    fn real(&mut self, what: &str) -> Result<f64, DslError> {
        match self.peek().clone() {
            Tok::Num { text, .. } => {
                let v = text.parse().map_err(|_| self.err(what))?;
                self.bump();
                Ok(v)
            }
            _ => Err(self.err(what)),
        }
    }

    fn lit(&mut self) -> Result<Lit, DslError> {
        let lit = match self.peek().clone() {
            Tok::Ident(s) if s == "true" => Lit::Bool(true),
            Tok::Ident(s) if s == "false" => Lit::Bool(false),
            Tok::Ident(s) => Lit::Ident(s),
            Tok::Str(s) => Lit::Str(s),
            Tok::Num { text, real: false } => Lit::Int(text.parse().map_err(|_| self.err("integer in range"))?),
            Tok::Num { text, real: true } => Lit::Real(text.parse().map_err(|_| self.err("number"))?),
            _ => return Err(self.err("value")),
        };
        self.bump();
        Ok(lit)
    }

    /// `HOST.name`
    fn dotted(&mut self, what: &str) -> Result<(String, String), DslError> {
        let a = self.ident(what)?;
        self.expect(Tok::Dot)?;
        let b = self.ident(what)?;
        Ok((a, b))
    }

    /// Comma-separated list inside parentheses.
    fn list<T>(&mut self, mut one: impl FnMut(&mut Self) -> Result<T, DslError>) -> Result<Vec<T>, DslError> {
        self.expect(Tok::LParen)?;
        let mut out = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(out);
        }
        loop {
            out.push(one(self)?);
            if self.eat(&Tok::RParen) {
                return Ok(out);
            }
            if !self.eat(&Tok::Comma) {
                return Err(self.err("`,` or `)`"));
            }
        }
    }

    fn args(&mut self) -> Result<Vec<(String, Lit)>, DslError> {
        self.list(|p| {
            let name = p.ident("parameter name")?;
            p.expect(Tok::Eq)?;
            Ok((name, p.lit()?))
        })
    }

    fn item(&mut self) -> Result<Item, DslError> {
        let pos = self.pos();
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.err("`action`, `skill`, `tree`, `goal` or `deployment`")),
        };
        match kw.as_str() {
            "action" => {
                self.bump();
                let name = self.ident("action name")?;
                let params = self.list(|p| {
                    let n = p.ident("parameter name")?;
                    p.expect(Tok::Colon)?;
                    Ok((n, p.value_type()?))
                })?;
                Ok(Item::Action(ActionDecl { name, params, pos }))
            }
            "skill" => {
                self.bump();
                self.skill(pos).map(Item::Skill)
            }
            "tree" => {
                self.bump();
                let name = self.ident("tree name")?;
                self.expect(Tok::LBrace)?;
                let root = self.node()?;
                self.expect(Tok::RBrace)?;
                Ok(Item::Tree(TreeDecl { name, root, pos }))
            }
            "goal" => {
                self.bump();
                let name = self.ident("goal name")?;
                self.expect(Tok::LBrace)?;
                let mut conditions = Vec::new();
                while !self.eat(&Tok::RBrace) {
                    conditions.push(self.condition()?);
                    self.eat(&Tok::Comma);
                }
                Ok(Item::Goal(GoalDecl { name, conditions, pos }))
            }
            "deployment" => {
                self.bump();
                self.deployment(pos).map(Item::Deployment)
            }
            _ => Err(self.err("`action`, `skill`, `tree`, `goal` or `deployment`")),
        }
    }

    fn skill(&mut self, pos: Pos) -> Result<SkillDecl, DslError> {
        let name = self.ident("skill name")?;
        self.expect(Tok::LBrace)?;
        let (mut pre, mut inv, mut post, mut action) = (None, None, None, None);
        let mut decl = SkillDecl {
            name,
            pre: Condition::always(),
            inv: Condition::always(),
            post: Condition::always(),
            action: String::new(),
            action_pos: pos,
            priority: 0,
            runs_on: None,
            params: Vec::new(),
            pos,
        };
        while !self.eat(&Tok::RBrace) {
            let field_pos = self.pos();
            let field = self.ident("skill field (pre, inv, post, action, priority, runs_on, param)")?;
            if field == "param" {
                let name = self.ident("parameter name")?;
                self.expect(Tok::Colon)?;
                let ty = self.value_type()?;
                let dir = match self.ident("`in` or `out`")?.as_str() {
                    "in" => ParamDirection::In,
                    "out" => ParamDirection::Out,
                    _ => {
                        self.i -= 1;
                        return Err(self.err("`in` or `out`"));
                    }
                };
                let var = if self.eat(&Tok::Arrow) {
                    Some(self.ident("world variable")?)
                } else {
                    None
                };
                decl.params.push(ParamDecl {
                    name,
                    ty,
                    dir,
                    var,
                    pos: field_pos,
                });
                continue;
            }
            self.expect(Tok::Colon)?;
            match field.as_str() {
                "pre" => pre = Some(self.condition()?),
                "inv" => inv = Some(self.condition()?),
                "post" => post = Some(self.condition()?),
                "action" => {
                    decl.action_pos = self.pos();
                    action = Some(self.ident("action name")?);
                }
                "priority" => decl.priority = self.int("integer priority")?,
                "runs_on" => decl.runs_on = Some(self.dotted("host and tree")?),
                _ => {
                    return Err(DslError::Syntax {
                        line: field_pos.line,
                        col: field_pos.col,
                        expected: "skill field (pre, inv, post, action, priority, runs_on, param)".into(),
                        found: format!("`{field}`"),
                    })
                }
            }
        }
        let missing = |what: &str| DslError::Syntax {
            line: pos.line,
            col: pos.col,
            expected: format!("`{what}` field in skill `{}`", decl.name),
            found: "none".into(),
        };
        decl.pre = pre.ok_or_else(|| missing("pre"))?;
        decl.inv = inv.ok_or_else(|| missing("inv"))?;
        decl.post = post.ok_or_else(|| missing("post"))?;
        decl.action = action.ok_or_else(|| missing("action"))?;
        Ok(decl)
    }

    fn node(&mut self) -> Result<NodeAst, DslError> {
        let pos = self.pos();
        let what = "node (sequence, fallback, sequence_mem, cond, action, skill, lookup, remote)";
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.err(what)),
        };
        self.bump();
        let form = match kw.as_str() {
            "sequence" => NodeForm::Sequence,
            "fallback" => NodeForm::Fallback,
            "sequence_mem" => NodeForm::SequenceMem,
            "cond" => NodeForm::Cond(self.condition()?),
            "action" => {
                let name = self.ident("action name")?;
                let args = if *self.peek() == Tok::LParen { self.args()? } else { Vec::new() };
                let map = if self.is_kw("map") {
                    self.bump();
                    self.list(|p| {
                        let a = p.ident("parameter name")?;
                        p.expect(Tok::Arrow)?;
                        Ok((a, p.ident("world variable")?))
                    })?
                } else {
                    Vec::new()
                };
                NodeForm::Action { name, args, map }
            }
            "skill" => {
                let name = self.ident("skill name")?;
                let args = if *self.peek() == Tok::LParen { self.args()? } else { Vec::new() };
                let refine = if self.is_kw("refine") {
                    self.bump();
                    self.list(|p| match p.ident("`pre` or `inv`")?.as_str() {
                        "pre" => Ok(Refine::Pre),
                        "inv" => Ok(Refine::Inv),
                        _ => {
                            p.i -= 1;
                            Err(p.err("`pre` or `inv`"))
                        }
                    })?
                } else {
                    Vec::new()
                };
                NodeForm::Skill { name, args, refine }
            }
            "lookup" => {
                self.keyword("post")?;
                self.expect(Tok::Eq)?;
                NodeForm::Lookup { post: self.condition()? }
            }
            "remote" => {
                let (host, tree) = self.dotted("host and tree")?;
                NodeForm::Remote { host, tree }
            }
            _ => {
                self.i -= 1;
                return Err(self.err(what));
            }
        };
        let id = if self.eat(&Tok::At) {
            Some(self.string("node id string")?.0)
        } else {
            None
        };
        let mut children = Vec::new();
        let composite = matches!(form, NodeForm::Sequence | NodeForm::Fallback | NodeForm::SequenceMem);
        if composite || matches!(form, NodeForm::Lookup { .. }) && *self.peek() == Tok::LBrace {
            self.expect(Tok::LBrace)?;
            while !self.eat(&Tok::RBrace) {
                children.push(self.node()?);
            }
            if !composite && children.len() > 1 {
                return Err(DslError::Syntax {
                    line: children[1].pos.line,
                    col: children[1].pos.col,
                    expected: "`}` (a lookup binds at most one child)".into(),
                    found: children[1].form.keyword().to_string(),
                });
            }
        }
        Ok(NodeAst {
            id,
            form,
            children,
            pos,
        })
    }

    fn deployment(&mut self, pos: Pos) -> Result<DeploymentDecl, DslError> {
        let name = self.ident("deployment name")?;
        self.expect(Tok::LBrace)?;
        let mut d = DeploymentDecl {
            name,
            hosts: Vec::new(),
            links: Vec::new(),
            pos,
        };
        while !self.eat(&Tok::RBrace) {
            let item_pos = self.pos();
            if self.is_kw("host") {
                self.bump();
                d.hosts.push(self.host(item_pos)?);
            } else if self.is_kw("link") {
                self.bump();
                let from = self.dotted("host and port")?;
                self.expect(Tok::Arrow)?;
                let to = self.dotted("host and port")?;
                d.links.push(LinkDecl { from, to, pos: item_pos });
            } else {
                return Err(self.err("`host`, `link` or `}`"));
            }
        }
        Ok(d)
    }

    fn host(&mut self, pos: Pos) -> Result<HostDecl, DslError> {
        let id = self.ident("host id")?;
        self.expect(Tok::LBrace)?;
        let mut h = HostDecl {
            id,
            tree: String::new(),
            tree_pos: pos,
            clock: None,
            vars: Vec::new(),
            ports: Vec::new(),
            injects: Vec::new(),
            pos,
        };
        let mut has_tree = false;
        let what = "host field (tree, clock, world, port, inject)";
        while !self.eat(&Tok::RBrace) {
            let field_pos = self.pos();
            match self.ident(what)?.as_str() {
                "tree" => {
                    self.expect(Tok::Colon)?;
                    h.tree_pos = self.pos();
                    h.tree = self.ident("tree name")?;
                    has_tree = true;
                }
                "clock" => {
                    let t0 = self.real("clock origin")?;
                    let dt = self.real("tick period")?;
                    if !(t0 >= 0.0 && dt > 0.0) {
                        return Err(DslError::Syntax {
                            line: field_pos.line,
                            col: field_pos.col,
                            expected: "clock with t0 >= 0 and dt > 0".into(),
                            found: format!("clock {t0} {dt}"),
                        });
                    }
                    h.clock = Some((t0, dt));
                }
                "world" => {
                    self.expect(Tok::LBrace)?;
                    while !self.eat(&Tok::RBrace) {
                        let vpos = self.pos();
                        let name = self.ident("variable name")?;
                        self.expect(Tok::Colon)?;
                        let ty = self.value_type()?;
                        self.expect(Tok::Eq)?;
                        let value = self.lit()?;
                        let unit = if self.eat(&Tok::LBracket) {
                            let u = match self.peek().clone() {
                                Tok::Ident(s) | Tok::Str(s) => s,
                                _ => return Err(self.err("unit")),
                            };
                            self.bump();
                            self.expect(Tok::RBracket)?;
                            Some(u)
                        } else {
                            None
                        };
                        h.vars.push(VarDecl {
                            name,
                            ty,
                            value,
                            unit,
                            pos: vpos,
                        });
                    }
                }
                "port" => {
                    let name = self.ident("port name")?;
                    self.expect(Tok::Colon)?;
                    let ty = self.value_type()?;
                    let dir = match self.ident("`in` or `out`")?.as_str() {
                        "in" => PortDirection::In,
                        "out" => PortDirection::Out,
                        _ => {
                            self.i -= 1;
                            return Err(self.err("`in` or `out`"));
                        }
                    };
                    self.keyword("at")?;
                    let node = self.string("node id string")?.0;
                    self.keyword("var")?;
                    let var = self.ident("world variable")?;
                    h.ports.push(PortDecl {
                        name,
                        ty,
                        dir,
                        node,
                        var,
                        pos: field_pos,
                    });
                }
                "inject" => {
                    self.keyword("at")?;
                    let at = self.int("tick index")?;
                    let at = u64::try_from(at).map_err(|_| DslError::Syntax {
                        line: field_pos.line,
                        col: field_pos.col,
                        expected: "non-negative tick index".into(),
                        found: at.to_string(),
                    })?;
                    self.expect(Tok::LBrace)?;
                    let mut writes = Vec::new();
                    while !self.eat(&Tok::RBrace) {
                        let var = self.ident("variable name")?;
                        self.expect(Tok::Eq)?;
                        writes.push((var, self.lit()?));
                        self.eat(&Tok::Comma);
                    }
                    h.injects.push(InjectDecl {
                        at,
                        writes,
                        pos: field_pos,
                    });
                }
                _ => {
                    return Err(DslError::Syntax {
                        line: field_pos.line,
                        col: field_pos.col,
                        expected: what.into(),
                        found: self.toks[self.i - 1].tok.describe(),
                    })
                }
            }
        }
        if !has_tree {
            return Err(DslError::Syntax {
                line: pos.line,
                col: pos.col,
                expected: format!("`tree` field in host `{}`", h.id),
                found: "none".into(),
            });
        }
        Ok(h)
    }
}
