//! Drive a flying-lead plug through insertion and extraction.

use deepsim::coupling::{self, CouplingConfig, CouplingLog, CouplingState};
use deepsim::scene::{Pose, Vec3};

fn main() -> deepsim::Result<()> {
    let cfg = CouplingConfig::default();
    let dt = 0.1;
    let mut state = CouplingState::default();
    let mut log = CouplingLog::default();

    for step in 0..200 {
        let t = step as f64 * dt;
        // Plug approaches along the receptacle axis and arrives at t = 3 s.
        let offset = (0.3 - 0.1 * t).max(0.0);
        let rel = Pose::from_rpy(Vec3::new(-offset, 0.002, 0.0), 0.0, 0.0, 0.01);
        // Receptacle reaction along plug +x: an insertion shove, later a pull-out.
        let push = match step {
            60 => Vec3::new(60.0, 0.0, 0.0),
            120 => Vec3::new(40.0, 0.0, 0.0),
            _ => Vec3::zeros(),
        };
        let outcome = coupling::step(&state, &rel, &push, dt, &cfg)?;
        if let Some(tr) = outcome.transition {
            println!("t {t:5.1} s: {tr}");
        }
        log.record(t, &outcome);
        state = outcome.state;
    }
    println!("final phase {}, {} transitions", state.phase, log.transitions().count());
    Ok(())
}
