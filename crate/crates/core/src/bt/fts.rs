use crate::worldmodel::WorldState;

use super::action::ActionRegistry;
use super::engine::{tick, TickContext};
use super::node::{Status, TreeNode};
use super::BtError;

/// Largest initial-state set [`check_fts`] accepts.
pub const MAX_FTS_STATES: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct FtsViolation {
    /// Index into the checked state list.
    pub index: usize,
    pub state: WorldState,
    /// Root status on the last tick, if the run got that far.
    pub last: Option<Status>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FtsReport {
    pub bound: u64,
    pub checked: usize,
    /// Most ticks any passing state needed to reach Success.
    pub max_ticks_to_success: u64,
    pub violations: Vec<FtsViolation>,
}

impl FtsReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Empirical finite-time-success check: from every initial state, the
/// closed loop of ticks must reach root Success within `bound` ticks.
///
/// `actions` builds a fresh registry per run so action state never leaks
/// between initial states.
pub fn check_fts<F>(
    root: &TreeNode,
    states: &[WorldState],
    bound: u64,
    mut actions: F,
) -> Result<FtsReport, BtError>
where
    F: FnMut() -> ActionRegistry,
{
    if bound == 0 {
        return Err(BtError::InvalidBound);
    }
    if states.len() > MAX_FTS_STATES {
        return Err(BtError::StateSpaceTooLarge(states.len()));
    }
    let mut report = FtsReport {
        bound,
        checked: states.len(),
        max_ticks_to_success: 0,
        violations: Vec::new(),
    };
    for (index, initial) in states.iter().enumerate() {
        let mut tree = root.clone();
        tree.reset();
        let mut world = initial.clone();
        let mut registry = actions();
        let mut last = None;
        let mut error = None;
        let mut reached = None;
        for n in 1..=bound {
            let mut ctx = TickContext::new(&mut registry);
            match tick(&mut tree, &mut world, &mut ctx) {
                Ok(s) => {
                    last = Some(s);
                    if s == Status::Success {
                        reached = Some(n);
                        break;
                    }
                }
                Err(e) => {
                    error = Some(e.to_string());
                    break;
                }
            }
        }
        match reached {
            Some(n) => report.max_ticks_to_success = report.max_ticks_to_success.max(n),
            None => report.violations.push(FtsViolation {
                index,
                state: initial.clone(),
                last,
                error,
            }),
        }
    }
    Ok(report)
}
