use std::collections::BTreeMap;
use std::fmt;

use super::state::{fmt_real, Value, ValueType, WorldState};
use super::WorldError;

/// Absolute tolerance for `==` / `!=` whenever a real is involved.
pub const REAL_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    /// The operator with its operands swapped (`a < b` is `b > a`).
    pub fn mirrored(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Eq,
            CmpOp::Ne => CmpOp::Ne,
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
        }
    }

    pub const ALL: [CmpOp; 6] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Right-hand side of a comparison.
#[derive(Clone, Debug, PartialEq)]
pub enum Operand {
    Const(Value),
    /// Another world variable, e.g. `pos == target`.
    Var(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Literal {
    pub var: String,
    pub op: CmpOp,
    pub rhs: Operand,
}

impl Literal {
    pub fn new(var: impl Into<String>, op: CmpOp, value: Value) -> Self {
        Literal {
            var: var.into(),
            op,
            rhs: Operand::Const(value),
        }
    }

    pub fn against_var(var: impl Into<String>, op: CmpOp, other: impl Into<String>) -> Self {
        Literal {
            var: var.into(),
            op,
            rhs: Operand::Var(other.into()),
        }
    }

    pub fn eval(&self, w: &WorldState) -> Result<bool, WorldError> {
        let lhs = w.lookup(&self.var)?;
        let rhs = match &self.rhs {
            Operand::Const(v) => v,
            Operand::Var(name) => w.lookup(name)?,
        };
        compare(&self.var, lhs, self.op, rhs)
    }

    fn mirror(&self) -> Option<Literal> {
        match &self.rhs {
            Operand::Var(other) => Some(Literal::against_var(other.clone(), self.op.mirrored(), self.var.clone())),
            Operand::Const(_) => None,
        }
    }
}

fn compare(var: &str, lhs: &Value, op: CmpOp, rhs: &Value) -> Result<bool, WorldError> {
    use std::cmp::Ordering;
    let ord = match (lhs, rhs) {
        (Value::Int(a), Value::Int(b)) => a.cmp(b),
        (a, b) if a.ty().is_numeric() && b.ty().is_numeric() => {
            let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            return Ok(match op {
                CmpOp::Eq => (a - b).abs() <= REAL_EPS,
                CmpOp::Ne => (a - b).abs() > REAL_EPS,
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Gt => a > b,
                CmpOp::Ge => a >= b,
            });
        }
        (Value::Bool(a), Value::Bool(b)) => {
            return match op {
                CmpOp::Eq => Ok(a == b),
                CmpOp::Ne => Ok(a != b),
                _ => Err(unsupported(var, op, ValueType::Bool)),
            }
        }
        (Value::Str(a) | Value::Enum(a), Value::Str(b) | Value::Enum(b)) => {
            return match op {
                CmpOp::Eq => Ok(a == b),
                CmpOp::Ne => Ok(a != b),
                _ => Err(unsupported(var, op, lhs.ty())),
            }
        }
        _ => {
            return Err(WorldError::TypeMismatch {
                variable: var.to_string(),
                expected: lhs.ty(),
                actual: rhs.ty(),
            })
        }
    };
    Ok(match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Ne => ord != Ordering::Equal,
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
    })
}

fn unsupported(var: &str, op: CmpOp, ty: ValueType) -> WorldError {
    WorldError::UnsupportedOperator {
        variable: var.to_string(),
        op: op.symbol(),
        ty,
    }
}

/// A conjunction of literals. The empty conjunction is always true and is
/// written `true`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Condition {
    pub literals: Vec<Literal>,
}

impl Condition {
    pub fn always() -> Self {
        Condition::default()
    }

    pub fn new(literals: Vec<Literal>) -> Self {
        Condition { literals }
    }

    pub fn parse(text: &str) -> Result<Condition, WorldError> {
        super::parse::parse_condition(text)
    }

    pub fn is_always(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    /// Conjunction of `self` and `other`, literal order preserved.
    pub fn and(&self, other: &Condition) -> Condition {
        let mut literals = self.literals.clone();
        literals.extend(other.literals.iter().cloned());
        Condition { literals }
    }

    /// Splits into one single-literal condition per literal.
    pub fn split(&self) -> Vec<Condition> {
        self.literals
            .iter()
            .map(|l| Condition::new(vec![l.clone()]))
            .collect()
    }

    /// Variables referenced anywhere in the condition, in first-use order.
    pub fn variables(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for l in &self.literals {
            let rhs = match &l.rhs {
                Operand::Var(v) => Some(v.as_str()),
                Operand::Const(_) => None,
            };
            for v in std::iter::once(l.var.as_str()).chain(rhs) {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    /// Evaluates the conjunction against `w`. Every literal is checked so
    /// that a missing variable is reported even after a false conjunct.
    pub fn eval(&self, w: &WorldState) -> Result<bool, WorldError> {
        let mut all = true;
        for l in &self.literals {
            all &= l.eval(w)?;
        }
        Ok(all)
    }

    /// Literal subsumption: true only if every valuation satisfying `self`
    /// satisfies `other`. Decided per variable over a dense numeric domain,
    /// which keeps the answer sound for integer-typed variables too.
    pub fn implies(&self, other: &Condition) -> Result<bool, WorldError> {
        let doms = domains(self)?;
        if doms.values().any(Domain::is_empty) {
            return Ok(true);
        }
        for lit in &other.literals {
            let ok = match &lit.rhs {
                Operand::Var(_) => {
                    let mirror = lit.mirror();
                    self.literals
                        .iter()
                        .any(|l| l == lit || Some(l) == mirror.as_ref())
                }
                Operand::Const(c) => match doms.get(lit.var.as_str()) {
                    None => false,
                    Some(d) => d.entails(&lit.var, lit.op, c)?,
                },
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Whether some valuation could satisfy the constant literals.
    /// Variable-to-variable literals are not constrained here.
    pub fn satisfiable(&self) -> Result<bool, WorldError> {
        Ok(!domains(self)?.values().any(Domain::is_empty))
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.literals.is_empty() {
            return f.write_str("true");
        }
        for (i, l) in self.literals.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} ", self.var, self.op)?;
        match &self.rhs {
            Operand::Var(v) => f.write_str(v),
            Operand::Const(v) => f.write_str(&const_text(v)),
        }
    }
}

fn const_text(v: &Value) -> String {
    match v {
        Value::Real(r) => fmt_real(*r),
        Value::Str(s) | Value::Enum(s) => {
            let mut out = String::with_capacity(s.len() + 2);
            out.push('\'');
            for ch in s.chars() {
                if ch == '\'' || ch == '\\' {
                    out.push('\\');
                }
                out.push(ch);
            }
            out.push('\'');
            out
        }
        other => other.to_string(),
    }
}

fn domains(c: &Condition) -> Result<BTreeMap<&str, Domain>, WorldError> {
    let mut doms: BTreeMap<&str, Domain> = BTreeMap::new();
    for l in &c.literals {
        let Operand::Const(value) = &l.rhs else {
            continue;
        };
        let dom = match doms.get_mut(l.var.as_str()) {
            Some(d) => d,
            None => doms
                .entry(l.var.as_str())
                .or_insert(Domain::of_type(value.ty())),
        };
        dom.restrict(&l.var, l.op, value)?;
    }
    for d in doms.values_mut() {
        d.normalize();
    }
    Ok(doms)
}

type Bound = Option<(f64, bool)>;

/// Set of values a single variable may take under a conjunction.
#[derive(Clone, Debug)]
enum Domain {
    Num { lo: Bound, hi: Bound, holes: Vec<f64> },
    Bool { allow_true: bool, allow_false: bool },
    Text { eq: Option<String>, neq: Vec<String>, clash: bool },
}

impl Domain {
    fn of_type(ty: ValueType) -> Domain {
        match ty {
            ValueType::Int | ValueType::Real => Domain::Num {
                lo: None,
                hi: None,
                holes: Vec::new(),
            },
            ValueType::Bool => Domain::Bool {
                allow_true: true,
                allow_false: true,
            },
            ValueType::Str | ValueType::Enum => Domain::Text {
                eq: None,
                neq: Vec::new(),
                clash: false,
            },
        }
    }

    fn type_name(&self) -> ValueType {
        match self {
            Domain::Num { .. } => ValueType::Real,
            Domain::Bool { .. } => ValueType::Bool,
            Domain::Text { .. } => ValueType::Str,
        }
    }

    fn mismatch(&self, var: &str, value: &Value) -> WorldError {
        WorldError::TypeMismatch {
            variable: var.to_string(),
            expected: self.type_name(),
            actual: value.ty(),
        }
    }

    fn restrict(&mut self, var: &str, op: CmpOp, value: &Value) -> Result<(), WorldError> {
        let err = self.mismatch(var, value);
        match self {
            Domain::Num { lo, hi, holes } => {
                let c = value.as_f64().ok_or(err)?;
                match op {
                    CmpOp::Eq => {
                        tighten_lo(lo, c, true);
                        tighten_hi(hi, c, true);
                    }
                    CmpOp::Ne => holes.push(c),
                    CmpOp::Lt => tighten_hi(hi, c, false),
                    CmpOp::Le => tighten_hi(hi, c, true),
                    CmpOp::Gt => tighten_lo(lo, c, false),
                    CmpOp::Ge => tighten_lo(lo, c, true),
                }
            }
            Domain::Bool {
                allow_true,
                allow_false,
            } => {
                let b = value.as_bool().ok_or(err)?;
                match op {
                    CmpOp::Eq => {
                        if b {
                            *allow_false = false
                        } else {
                            *allow_true = false
                        }
                    }
                    CmpOp::Ne => {
                        if b {
                            *allow_true = false
                        } else {
                            *allow_false = false
                        }
                    }
                    _ => return Err(unsupported(var, op, ValueType::Bool)),
                }
            }
            Domain::Text { eq, neq, clash } => {
                let (Value::Str(s) | Value::Enum(s)) = value else {
                    return Err(err);
                };
                match op {
                    CmpOp::Eq => match eq {
                        Some(prev) if prev != s => *clash = true,
                        _ => *eq = Some(s.clone()),
                    },
                    CmpOp::Ne => neq.push(s.clone()),
                    _ => return Err(unsupported(var, op, value.ty())),
                }
            }
        }
        Ok(())
    }

    /// Folds holes sitting on an inclusive bound into an exclusive bound.
    fn normalize(&mut self) {
        if let Domain::Num { lo, hi, holes } = self {
            loop {
                let mut changed = false;
                if let Some((l, true)) = *lo {
                    if holes.contains(&l) {
                        *lo = Some((l, false));
                        changed = true;
                    }
                }
                if let Some((h, true)) = *hi {
                    if holes.contains(&h) {
                        *hi = Some((h, false));
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            Domain::Num { lo, hi, .. } => match (lo, hi) {
                (Some((l, li)), Some((h, hi_incl))) => l > h || (l == h && !(*li && *hi_incl)),
                _ => false,
            },
            Domain::Bool {
                allow_true,
                allow_false,
            } => !allow_true && !allow_false,
            Domain::Text { eq, neq, clash } => {
                *clash || eq.as_ref().is_some_and(|e| neq.contains(e))
            }
        }
    }

    /// Whether every member of this (non-empty) domain satisfies `var op value`.
    fn entails(&self, var: &str, op: CmpOp, value: &Value) -> Result<bool, WorldError> {
        let err = self.mismatch(var, value);
        Ok(match self {
            Domain::Num { lo, hi, holes } => {
                let c = value.as_f64().ok_or(err)?;
                match op {
                    CmpOp::Eq => *lo == Some((c, true)) && *hi == Some((c, true)),
                    CmpOp::Ne => {
                        holes.contains(&c)
                            || lo.is_some_and(|(l, incl)| c < l || (c == l && !incl))
                            || hi.is_some_and(|(h, incl)| c > h || (c == h && !incl))
                    }
                    CmpOp::Lt => hi.is_some_and(|(h, incl)| h < c || (h == c && !incl)),
                    CmpOp::Le => hi.is_some_and(|(h, _)| h <= c),
                    CmpOp::Gt => lo.is_some_and(|(l, incl)| l > c || (l == c && !incl)),
                    CmpOp::Ge => lo.is_some_and(|(l, _)| l >= c),
                }
            }
            Domain::Bool {
                allow_true,
                allow_false,
            } => {
                let b = value.as_bool().ok_or(err)?;
                let allows = |v: bool| if v { *allow_true } else { *allow_false };
                match op {
                    CmpOp::Eq => !allows(!b),
                    CmpOp::Ne => !allows(b),
                    _ => return Err(unsupported(var, op, ValueType::Bool)),
                }
            }
            Domain::Text { eq, neq, .. } => {
                let (Value::Str(s) | Value::Enum(s)) = value else {
                    return Err(err);
                };
                match op {
                    CmpOp::Eq => eq.as_deref() == Some(s.as_str()),
                    CmpOp::Ne => neq.contains(s) || eq.as_ref().is_some_and(|e| e != s),
                    _ => return Err(unsupported(var, op, value.ty())),
                }
            }
        })
    }
}

fn tighten_lo(lo: &mut Bound, c: f64, incl: bool) {
    *lo = match *lo {
        Some((l, li)) if l > c => Some((l, li)),
        Some((l, li)) if l == c => Some((l, li && incl)),
        _ => Some((c, incl)),
    };
}

fn tighten_hi(hi: &mut Bound, c: f64, incl: bool) {
    *hi = match *hi {
        Some((h, hi_incl)) if h < c => Some((h, hi_incl)),
        Some((h, hi_incl)) if h == c => Some((h, hi_incl && incl)),
        _ => Some((c, incl)),
    };
}
