use std::collections::BTreeMap;
use std::fmt;

use super::WorldError;

/// Declared type of a world variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueType {
    Bool,
    Int,
    Real,
    Str,
    Enum,
}

impl ValueType {
    pub fn name(self) -> &'static str {
        match self {
            ValueType::Bool => "bool",
            ValueType::Int => "int",
            ValueType::Real => "real",
            ValueType::Str => "string",
            ValueType::Enum => "enum",
        }
    }

    pub fn from_name(name: &str) -> Option<ValueType> {
        Some(match name {
            "bool" => ValueType::Bool,
            "int" => ValueType::Int,
            "real" => ValueType::Real,
            "string" => ValueType::Str,
            "enum" => ValueType::Enum,
            _ => return None,
        })
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, ValueType::Int | ValueType::Real)
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A typed value held by a world variable or carried over a data port.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
    Str(String),
    /// Symbolic enumeration member, compared by name.
    Enum(String),
}

impl Value {
    pub fn ty(&self) -> ValueType {
        match self {
            Value::Bool(_) => ValueType::Bool,
            Value::Int(_) => ValueType::Int,
            Value::Real(_) => ValueType::Real,
            Value::Str(_) => ValueType::Str,
            Value::Enum(_) => ValueType::Enum,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Bit-exact equality (reals compared by bit pattern).
    pub fn bit_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Real(a), Value::Real(b)) => a.to_bits() == b.to_bits(),
            _ => self == other,
        }
    }

    /// Parses `text` as a value of type `ty`, the textual form used by the
    /// wire format and the DSL world blocks.
    pub fn parse_as(ty: ValueType, text: &str) -> Option<Value> {
        match ty {
            ValueType::Bool => match text {
                "true" => Some(Value::Bool(true)),
                "false" => Some(Value::Bool(false)),
                _ => None,
            },
            ValueType::Int => text.parse().ok().map(Value::Int),
            ValueType::Real => text.parse().ok().map(Value::Real),
            ValueType::Str => Some(Value::Str(text.to_string())),
            ValueType::Enum => Some(Value::Enum(text.to_string())),
        }
    }
}

/// Formats a real so that it always reads back as a real (`10.0`, not `10`).
pub fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => f.write_str(&fmt_real(*r)),
            Value::Str(s) | Value::Enum(s) => f.write_str(s),
        }
    }
}

/// The blackboard: typed variables plus the logical clock.
///
/// The clock is derived from the tick count, so after `k` ticks it is
/// exactly `t0 + k * dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    vars: BTreeMap<String, Value>,
    units: BTreeMap<String, String>,
    t0: f64,
    dt: f64,
    ticks: u64,
}

impl Default for WorldState {
    fn default() -> Self {
        WorldState::new()
    }
}

impl WorldState {
    pub fn new() -> Self {
        WorldState::with_clock(0.0, 1.0)
    }

    pub fn with_clock(t0: f64, dt: f64) -> Self {
        assert!(t0 >= 0.0, "initial clock must be non-negative");
        assert!(dt > 0.0, "tick period must be positive");
        WorldState {
            vars: BTreeMap::new(),
            units: BTreeMap::new(),
            t0,
            dt,
            ticks: 0,
        }
    }

    /// Declares a variable, fixing its type to that of `value`.
    pub fn declare(&mut self, name: impl Into<String>, value: Value) -> Result<(), WorldError> {
        let name = name.into();
        if let Some(old) = self.vars.get(&name) {
            if old.ty() != value.ty() {
                return Err(WorldError::TypeMismatch {
                    variable: name,
                    expected: old.ty(),
                    actual: value.ty(),
                });
            }
        }
        self.vars.insert(name, value);
        Ok(())
    }

    pub fn declare_with_unit(
        &mut self,
        name: impl Into<String>,
        value: Value,
        unit: impl Into<String>,
    ) -> Result<(), WorldError> {
        let name = name.into();
        self.declare(name.clone(), value)?;
        self.units.insert(name, unit.into());
        Ok(())
    }

    /// Builder form of [`WorldState::declare`]; panics on a type clash.
    pub fn with(mut self, name: &str, value: Value) -> Self {
        self.declare(name, value).expect("conflicting declaration");
        self
    }

    /// Overwrites an existing variable. The new value must have the
    /// declared type; an int written to a real variable is widened.
    pub fn set(&mut self, name: &str, value: Value) -> Result<(), WorldError> {
        let slot = self
            .vars
            .get_mut(name)
            .ok_or_else(|| WorldError::UnknownVariable(name.to_string()))?;
        let value = match (slot.ty(), value) {
            (ValueType::Real, Value::Int(i)) => Value::Real(i as f64),
            (ValueType::Enum, Value::Str(s)) => Value::Enum(s),
            (_, v) => v,
        };
        if slot.ty() != value.ty() {
            return Err(WorldError::TypeMismatch {
                variable: name.to_string(),
                expected: slot.ty(),
                actual: value.ty(),
            });
        }
        *slot = value;
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.vars.get(name)
    }

    pub fn lookup(&self, name: &str) -> Result<&Value, WorldError> {
        self.vars
            .get(name)
            .ok_or_else(|| WorldError::UnknownVariable(name.to_string()))
    }

    pub fn type_of(&self, name: &str) -> Option<ValueType> {
        self.vars.get(name).map(Value::ty)
    }

    pub fn unit_of(&self, name: &str) -> Option<&str> {
        self.units.get(name).map(String::as_str)
    }

    pub fn vars(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.vars.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn clock(&self) -> f64 {
        self.t0 + self.ticks as f64 * self.dt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub(crate) fn advance(&mut self) {
        self.ticks += 1;
    }
}
