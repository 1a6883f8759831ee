use btweave::bt::{ActionImpl, Params, Status};
use btweave::plant::{self, demo_program, run_action, MoveAbsolute, OperatorInput};
use btweave::runtime::{run_deployment, Deployment, Injection, RunOptions, RunResult};
use btweave::worldmodel::{Value, WorldState};
use proptest::prelude::*;

fn cell() -> Deployment {
    demo_program().unwrap().deployments["cell"].clone()
}

fn inject(d: &mut Deployment, host: &str, at: u64, writes: &[(&str, Value)]) {
    d.host_mut(host).unwrap().injections.push(Injection {
        at,
        writes: writes.iter().map(|(v, x)| (v.to_string(), x.clone())).collect(),
    });
}

fn run(d: &Deployment, max_ticks: u64) -> RunResult {
    let program = demo_program().unwrap();
    let envs = plant::envs(&program, d, OperatorInput::scripted(["100"]));
    let opts = RunOptions {
        max_ticks,
        ..RunOptions::default()
    };
    run_deployment(d, envs, &opts).unwrap()
}

fn fault(kind: u8) -> Vec<(&'static str, Value)> {
    match kind {
        0 => vec![("error", Value::Bool(true)), ("power", Value::Bool(false))],
        1 => vec![("power", Value::Bool(false))],
        _ => vec![("error", Value::Bool(true))],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// While the emergency stop holds, no axis or robot node is ticked.
    #[test]
    fn estop_preempts_the_task(on in 0u64..20, len in 1u64..10) {
        let mut d = cell();
        inject(&mut d, "BASE", on, &[("estop", Value::Bool(true))]);
        inject(&mut d, "BASE", on + len, &[("estop", Value::Bool(false))]);
        let res = run(&d, 200);
        for r in &res.trace.records {
            if (on..on + len).contains(&r.k) {
                prop_assert_eq!(r.host.as_deref(), Some("BASE"), "k={} {}", r.k, r.qualified_node());
            }
        }
        prop_assert_eq!(res.final_status(), Some(Status::Success));
    }

    /// A single drive fault on either host before tick 50 is recovered.
    /// A fault after a drive has arrived may stay latched; the move's
    /// postcondition already holds.
    #[test]
    fn single_faults_are_recovered(host in prop::sample::select(vec!["AXIS", "ROBOT"]), at in 0u64..50, kind in 0u8..3) {
        let mut d = cell();
        inject(&mut d, host, at, &fault(kind));
        let res = run(&d, 200);
        prop_assert_eq!(res.final_status(), Some(Status::Success), "{} at {} kind {}", host, at, kind);
        for h in ["AXIS", "ROBOT"] {
            let w = &res.worlds[h];
            prop_assert_eq!(w.get("pos"), w.get("target"));
        }
    }

    /// An unpowered or faulted drive never moves.
    #[test]
    fn position_is_conserved_without_power(pos in -1e3f64..1e3, target in -1e3f64..1e3, speed in 0.1f64..50.0, error in any::<bool>()) {
        let mut w = WorldState::new()
            .with("pos", Value::Real(pos))
            .with("target", Value::Real(target))
            .with("speed", Value::Real(speed))
            .with("power", Value::Bool(false))
            .with("error", Value::Bool(error));
        let step = MoveAbsolute.step(&w, &Params::new());
        prop_assert_eq!(step.status, Status::Failure);
        prop_assert!(step.updates.iter().all(|(v, _)| v != "pos"));
        w.set("power", Value::Bool(true)).unwrap();
        w.set("error", Value::Bool(true)).unwrap();
        prop_assert_eq!(MoveAbsolute.step(&w, &Params::new()).status, Status::Failure);
    }

    /// A powered move arrives after ceil(distance / speed) ticks, never
    /// overshooting.
    #[test]
    fn move_takes_distance_over_speed(pos in -100i32..100, target in -100i32..100, speed in 1i32..20) {
        let mut w = WorldState::new()
            .with("pos", Value::Real(pos as f64))
            .with("target", Value::Real(target as f64))
            .with("speed", Value::Real(speed as f64))
            .with("power", Value::Bool(true))
            .with("error", Value::Bool(false));
        let dist = (target - pos).abs();
        let want = ((dist + speed - 1) / speed).max(1) as u64;
        let mut a = MoveAbsolute;
        let (status, n) = run_action(&mut a, &mut w, 500);
        prop_assert_eq!((status, n), (Status::Success, want));
        prop_assert_eq!(w.get("pos"), Some(&Value::Real(target as f64)));
    }
}

#[test]
fn nominal_run_moves_both_drives() {
    let res = run(&cell(), 200);
    assert_eq!(res.final_status(), Some(Status::Success));
    assert_eq!(res.statuses.len(), 14);
    assert_eq!(res.worlds["AXIS"].get("pos"), Some(&Value::Real(100.0)));
    assert_eq!(res.worlds["ROBOT"].get("pos"), Some(&Value::Real(50.0)));
    assert_eq!(res.worlds["HMI"].get("target"), Some(&Value::Real(100.0)));
}

#[test]
fn withheld_power_on_breaks_certification() {
    let program = demo_program().unwrap();
    assert!(plant::certify_axis(&program, false).unwrap().holds());
    let blocked = plant::certify_axis(&program, true).unwrap();
    assert!(!blocked.holds());
}
