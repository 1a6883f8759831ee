use crate::bt::Status;

use super::wire::Body;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Idle,
    AwaitStatus { since: u64 },
    AwaitAck { since: u64 },
}

/// Parent side of one control link when messages take time: the leaf
/// never blocks, it reports the last status it knows.
///
/// While a TICK is in flight the leaf repeats the last reply it got, or
/// Running before the first one; a fresh Running reply is passed on and
/// immediately followed by the next TICK. Halting forgets the last reply.
/// A reply that does not arrive within `timeout` steps fails the link for
/// good.
#[derive(Clone, Debug)]
pub struct AsyncProxy {
    phase: Phase,
    fresh: Option<Status>,
    last: Option<Status>,
    halt_after_reply: bool,
    failed: bool,
    timeout: u64,
}

impl AsyncProxy {
    pub fn new(timeout: u64) -> Self {
        AsyncProxy {
            phase: Phase::Idle,
            fresh: None,
            last: None,
            halt_after_reply: false,
            failed: false,
            timeout,
        }
    }

    pub fn has_failed(&self) -> bool {
        self.failed
    }

    fn timed_out(&self, since: u64, now: u64) -> bool {
        now.saturating_sub(since) >= self.timeout
    }

    /// The leaf is ticked at step `now`; returns its status and the
    /// messages to send.
    pub fn on_tick(&mut self, now: u64) -> (Status, Vec<Body>) {
        if self.failed {
            return (Status::Failure, Vec::new());
        }
        if let Some(s) = self.fresh.take() {
            self.last = Some(s);
            if s == Status::Running {
                self.phase = Phase::AwaitStatus { since: now };
                return (s, vec![Body::Tick]);
            }
            return (s, Vec::new());
        }
        match self.phase {
            Phase::Idle => {
                self.phase = Phase::AwaitStatus { since: now };
                (self.stale(), vec![Body::Tick])
            }
            Phase::AwaitStatus { since } | Phase::AwaitAck { since } => {
                if self.timed_out(since, now) {
                    self.failed = true;
                    (Status::Failure, Vec::new())
                } else {
                    (self.stale(), Vec::new())
                }
            }
        }
    }

    fn stale(&self) -> Status {
        self.last.unwrap_or(Status::Running)
    }

    /// The leaf is preempted.
    pub fn on_halt(&mut self, now: u64) -> Vec<Body> {
        if self.failed {
            return Vec::new();
        }
        self.last = None;
        match (self.fresh.take(), self.phase) {
            (Some(Status::Running), _) => {
                self.phase = Phase::AwaitAck { since: now };
                vec![Body::Halt]
            }
            (_, Phase::AwaitStatus { .. }) => {
                self.halt_after_reply = true;
                Vec::new()
            }
            _ => Vec::new(),
        }
    }

    /// A STATUS arrived at step `now`.
    pub fn on_status(&mut self, s: Status, now: u64) -> Vec<Body> {
        match self.phase {
            Phase::AwaitStatus { .. } => {
                self.phase = Phase::Idle;
                if std::mem::take(&mut self.halt_after_reply) {
                    if s == Status::Running {
                        self.phase = Phase::AwaitAck { since: now };
                        return vec![Body::Halt];
                    }
                } else {
                    self.fresh = Some(s);
                }
            }
            Phase::AwaitAck { .. } => self.phase = Phase::Idle,
            Phase::Idle => {}
        }
        Vec::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stale_until_reply() {
        let mut p = AsyncProxy::new(10);
        assert_eq!(p.on_tick(0), (Status::Running, vec![Body::Tick]));
        assert_eq!(p.on_tick(1), (Status::Running, vec![]));
        p.on_status(Status::Running, 2);
        assert_eq!(p.on_tick(2), (Status::Running, vec![Body::Tick]));
        p.on_status(Status::Success, 3);
        assert_eq!(p.on_tick(3), (Status::Success, vec![]));
    }

    #[test]
    fn timeout_fails_the_link() {
        let mut p = AsyncProxy::new(10);
        p.on_tick(0);
        assert_eq!(p.on_tick(9).0, Status::Running);
        assert_eq!(p.on_tick(10).0, Status::Failure);
        assert!(p.has_failed());
        p.on_status(Status::Success, 11);
        assert_eq!(p.on_tick(12).0, Status::Failure);
    }

    #[test]
    fn halt_waits_for_outstanding_reply() {
        let mut p = AsyncProxy::new(10);
        p.on_tick(0);
        assert!(p.on_halt(1).is_empty());
        assert_eq!(p.on_status(Status::Running, 2), vec![Body::Halt]);
        assert!(p.on_status(Status::Failure, 3).is_empty());
        assert_eq!(p.on_tick(4), (Status::Running, vec![Body::Tick]));
    }
}
