use std::collections::{BTreeMap, BTreeSet};

use crate::worldmodel::{Value, WorldState};

use super::node::{Params, Status};

/// Outcome of one action step: its status and the world writes to apply.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub status: Status,
    pub updates: Vec<(String, Value)>,
}

impl Step {
    pub fn new(status: Status) -> Self {
        Step {
            status,
            updates: Vec::new(),
        }
    }

    pub fn running() -> Self {
        Step::new(Status::Running)
    }

    pub fn success() -> Self {
        Step::new(Status::Success)
    }

    pub fn failure() -> Self {
        Step::new(Status::Failure)
    }

    pub fn write(mut self, var: impl Into<String>, value: Value) -> Self {
        self.updates.push((var.into(), value));
        self
    }
}

/// The function an action node runs: one step per tick.
///
/// Implementations judge for themselves when they have failed.
pub trait ActionImpl: Send {
    fn step(&mut self, world: &WorldState, params: &Params) -> Step;

    /// Called when a running activation is preempted.
    fn on_halt(&mut self) {}
}

struct FnAction<F>(F);

impl<F> ActionImpl for FnAction<F>
where
    F: FnMut(&WorldState, &Params) -> Step + Send,
{
    fn step(&mut self, world: &WorldState, params: &Params) -> Step {
        (self.0)(world, params)
    }
}

/// Writes fixed values and succeeds in one tick.
#[derive(Clone, Debug, Default)]
pub struct AssignAction {
    pub writes: Vec<(String, Value)>,
}

impl AssignAction {
    pub fn new(writes: Vec<(String, Value)>) -> Self {
        AssignAction { writes }
    }
}

impl ActionImpl for AssignAction {
    fn step(&mut self, _world: &WorldState, _params: &Params) -> Step {
        Step {
            status: Status::Success,
            updates: self.writes.clone(),
        }
    }
}

/// Anything that can say whether an action name is bound.
pub trait ActionCatalog {
    fn has_action(&self, name: &str) -> bool;
}

impl ActionCatalog for BTreeSet<String> {
    fn has_action(&self, name: &str) -> bool {
        self.contains(name)
    }
}

/// One implementation per action name.
#[derive(Default)]
pub struct ActionRegistry {
    impls: BTreeMap<String, Box<dyn ActionImpl>>,
}

impl ActionRegistry {
    pub fn new() -> Self {
        ActionRegistry::default()
    }

    /// Registers `imp` under `name`, replacing any earlier binding.
    pub fn register(&mut self, name: impl Into<String>, imp: impl ActionImpl + 'static) {
        self.impls.insert(name.into(), Box::new(imp));
    }

    pub fn register_boxed(&mut self, name: impl Into<String>, imp: Box<dyn ActionImpl>) {
        self.impls.insert(name.into(), imp);
    }

    pub fn register_fn<F>(&mut self, name: impl Into<String>, f: F)
    where
        F: FnMut(&WorldState, &Params) -> Step + Send + 'static,
    {
        self.register(name, FnAction(f));
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut (dyn ActionImpl + 'static)> {
        self.impls.get_mut(name).map(|b| b.as_mut())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.impls.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.impls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.impls.is_empty()
    }
}

impl ActionCatalog for ActionRegistry {
    fn has_action(&self, name: &str) -> bool {
        self.impls.contains_key(name)
    }
}
