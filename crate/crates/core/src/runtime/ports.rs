use std::collections::BTreeMap;

use thiserror::Error;

use crate::worldmodel::{Value, ValueType};

use super::topology::{Deployment, PortDirection, PortRef, PortSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PortError {
    #[error("port {port} carries {expected}, got {actual}")]
    TypeMismatch { port: PortRef, expected: ValueType, actual: ValueType },
    #[error("port {0} is not linked")]
    UnlinkedPort(PortRef),
    #[error("unknown port {0}")]
    UnknownPort(PortRef),
    #[error("port {0} is not an out-port")]
    NotAnOutPort(PortRef),
}

/// A value that reached an in-port, to be written to its world variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Delivery {
    pub to: PortRef,
    pub var: String,
    pub value: Value,
}

/// Data ports of a deployment: typed specs, the links between them and a
/// last-value cache at every receiving port.
#[derive(Clone, Debug, Default)]
pub struct PortTable {
    specs: BTreeMap<PortRef, PortSpec>,
    links: BTreeMap<PortRef, PortRef>,
    cache: BTreeMap<PortRef, Value>,
    /// Last value published by each out-port, to send changes only.
    published: BTreeMap<PortRef, Value>,
}

impl PortTable {
    pub fn new(d: &Deployment) -> Self {
        let mut t = PortTable::default();
        for h in &d.hosts {
            for p in &h.ports {
                t.specs.insert(PortRef::new(&h.id, &p.name), p.clone());
            }
        }
        for l in &d.data_links {
            t.links.insert(l.from.clone(), l.to.clone());
        }
        t
    }

    /// Out-ports of `host`, with the variables backing them.
    pub fn out_ports(&self, host: &str) -> Vec<(PortRef, String)> {
        self.specs
            .iter()
            .filter(|(r, p)| r.host == host && p.dir == PortDirection::Out)
            .map(|(r, p)| (r.clone(), p.var.clone()))
            .collect()
    }

    /// Pushes `value` from an out-port to its peer's cache.
    pub fn transfer_data(&mut self, from: &PortRef, value: Value) -> Result<Delivery, PortError> {
        let spec = self.specs.get(from).ok_or_else(|| PortError::UnknownPort(from.clone()))?;
        if spec.dir != PortDirection::Out {
            return Err(PortError::NotAnOutPort(from.clone()));
        }
        let value = match (spec.ty, value) {
            (ValueType::Real, Value::Int(i)) => Value::Real(i as f64),
            (ty, v) if v.ty() == ty => v,
            (ty, v) => {
                return Err(PortError::TypeMismatch {
                    port: from.clone(),
                    expected: ty,
                    actual: v.ty(),
                })
            }
        };
        let to = self.links.get(from).ok_or_else(|| PortError::UnlinkedPort(from.clone()))?.clone();
        let var = self
            .specs
            .get(&to)
            .map(|p| p.var.clone())
            .ok_or_else(|| PortError::UnknownPort(to.clone()))?;
        self.cache.insert(to.clone(), value.clone());
        Ok(Delivery { to, var, value })
    }

    /// Publishes `value` only if it differs from what the port last sent.
    pub fn publish(&mut self, from: &PortRef, value: Value) -> Result<Option<Delivery>, PortError> {
        if !self.links.contains_key(from) {
            return Ok(None);
        }
        if self.published.get(from).is_some_and(|old| old.bit_eq(&value)) {
            return Ok(None);
        }
        let d = self.transfer_data(from, value.clone())?;
        self.published.insert(from.clone(), value);
        Ok(Some(d))
    }

    /// Last value received by an in-port.
    pub fn read(&self, port: &PortRef) -> Option<&Value> {
        self.cache.get(port)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt::TreeNode;
    use crate::runtime::topology::{DataLink, HostSpec};
    use crate::worldmodel::{Condition, WorldState};

    fn table() -> PortTable {
        let port = |name: &str, dir| PortSpec {
            name: name.into(),
            ty: ValueType::Real,
            dir,
            node: "leaf".into(),
            var: "x".into(),
        };
        let leaf = TreeNode::condition("leaf", Condition::always());
        let mut a = HostSpec::new("a", "main", leaf.clone(), WorldState::new());
        a.ports.push(port("out", PortDirection::Out));
        a.ports.push(port("loose", PortDirection::Out));
        let mut b = HostSpec::new("b", "main", leaf, WorldState::new());
        b.ports.push(port("in", PortDirection::In));
        PortTable::new(&Deployment {
            name: "d".into(),
            hosts: vec![a, b],
            data_links: vec![DataLink {
                from: PortRef::new("a", "out"),
                to: PortRef::new("b", "in"),
            }],
        })
    }

    #[test]
    fn push_and_read() {
        let mut t = table();
        let d = t.transfer_data(&PortRef::new("a", "out"), Value::Real(42.0)).unwrap();
        assert_eq!(d.var, "x");
        assert_eq!(t.read(&PortRef::new("b", "in")), Some(&Value::Real(42.0)));
        t.transfer_data(&PortRef::new("a", "out"), Value::Real(1.0)).unwrap();
        t.transfer_data(&PortRef::new("a", "out"), Value::Real(2.0)).unwrap();
        assert_eq!(t.read(&PortRef::new("b", "in")), Some(&Value::Real(2.0)));
    }

    #[test]
    fn errors() {
        let mut t = table();
        assert!(matches!(
            t.transfer_data(&PortRef::new("a", "out"), Value::Str("x".into())),
            Err(PortError::TypeMismatch { .. })
        ));
        assert!(matches!(
            t.transfer_data(&PortRef::new("a", "loose"), Value::Real(0.0)),
            Err(PortError::UnlinkedPort(_))
        ));
    }

    #[test]
    fn publish_sends_changes_only() {
        let mut t = table();
        let p = PortRef::new("a", "out");
        assert!(t.publish(&p, Value::Real(1.0)).unwrap().is_some());
        assert!(t.publish(&p, Value::Real(1.0)).unwrap().is_none());
        assert!(t.publish(&p, Value::Real(3.0)).unwrap().is_some());
    }
}
