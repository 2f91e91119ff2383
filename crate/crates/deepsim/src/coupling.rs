//! Plug-and-socket coupling for an electrical flying lead.
//!
//! A plug that stays aligned with its receptacle long enough is *joined* by a
//! temporary prismatic constraint along the socket x axis. Pushing hard enough
//! along plug x locks it (*fixed*); pulling hard enough releases it (*free*),
//! after which a cooldown blocks immediate re-joining.
//!
//! The only edges are Free → Joined → Fixed → Free. There is no Joined → Free
//! edge: a joined plug can only leave by being locked and then extracted.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{Pose, Vec3};

/// Slack on timer comparisons so `n·dt` sums hit their targets.
const TIMER_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CouplingConfig {
    /// Meters.
    pub linear_tol: f64,
    /// Radians, per axis.
    pub angular_tol: f64,
    pub align_duration: f64,
    /// Newtons along plug x.
    pub insertion_force: f64,
    /// Newtons along plug x.
    pub extraction_force: f64,
    pub cooldown: f64,
    /// Prismatic travel, meters.
    pub travel_max: f64,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self {
            linear_tol: 0.01,
            angular_tol: 0.05,
            align_duration: 2.0,
            insertion_force: 50.0,
            extraction_force: 30.0,
            cooldown: 2.0,
            travel_max: 0.1,
        }
    }
}

impl CouplingConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("linear_tol", self.linear_tol),
            ("angular_tol", self.angular_tol),
            ("align_duration", self.align_duration),
            ("insertion_force", self.insertion_force),
            ("extraction_force", self.extraction_force),
            ("cooldown", self.cooldown),
            ("travel_max", self.travel_max),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("coupling {name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Phase {
    #[default]
    Free,
    Joined,
    Fixed,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Free => "free",
            Phase::Joined => "joined",
            Phase::Fixed => "fixed",
        }
    }

    /// The single phase reachable from this one.
    pub fn next(&self) -> Phase {
        match self {
            Phase::Free => Phase::Joined,
            Phase::Joined => Phase::Fixed,
            Phase::Fixed => Phase::Free,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CouplingState {
    pub phase: Phase,
    pub align_timer: f64,
    pub cooldown_timer: f64,
    /// Meters along socket x, within `[0, travel_max]`.
    pub plug_travel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub from: Phase,
    pub to: Phase,
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: CouplingState,
    pub transition: Option<Transition>,
    /// Force published this step (plug frame), only while joined or fixed.
    pub force: Option<Vec3>,
}

/// Plug pose in the receptacle frame is close enough to mate: lateral offsets
/// (y, z) within `linear_tol`, axial offset within the prismatic travel plus
/// `linear_tol`, and roll, pitch and yaw each within `angular_tol`.
pub fn is_aligned(rel_pose: &Pose, cfg: &CouplingConfig) -> bool {
    let p = rel_pose.position;
    let (roll, pitch, yaw) = rel_pose.attitude.euler_angles();
    p.y.abs() <= cfg.linear_tol
        && p.z.abs() <= cfg.linear_tol
        && p.x >= -cfg.linear_tol
        && p.x <= cfg.travel_max + cfg.linear_tol
        && [roll, pitch, yaw].iter().all(|a| a.abs() <= cfg.angular_tol)
}

/// Advance the state machine by `dt`. Only `force.x` drives transitions; both
/// thresholds are inclusive.
pub fn step(s: &CouplingState, rel_pose: &Pose, force: &Vec3, dt: f64, cfg: &CouplingConfig) -> Result<StepOutcome> {
    if !(dt > 0.0) {
        return Err(Error::NonPositiveDt(dt));
    }
    let mut n = *s;
    let published = (s.phase != Phase::Free && *force != Vec3::zeros()).then_some(*force);
    match s.phase {
        Phase::Free => {
            // Alignment only counts once a whole step starts with the cooldown spent.
            let eligible = s.cooldown_timer == 0.0;
            n.cooldown_timer = (s.cooldown_timer - dt).max(0.0);
            if n.cooldown_timer <= TIMER_EPS {
                n.cooldown_timer = 0.0;
            }
            if eligible && is_aligned(rel_pose, cfg) {
                n.align_timer = s.align_timer + dt;
            } else {
                n.align_timer = 0.0;
            }
            if n.align_timer >= cfg.align_duration - TIMER_EPS {
                n.phase = Phase::Joined;
                n.align_timer = 0.0;
                n.plug_travel = rel_pose.position.x.clamp(0.0, cfg.travel_max);
            }
        }
        Phase::Joined => {
            n.plug_travel = rel_pose.position.x.clamp(0.0, cfg.travel_max);
            if force.x >= cfg.insertion_force {
                n.phase = Phase::Fixed;
                n.plug_travel = 0.0;
            }
        }
        Phase::Fixed => {
            n.plug_travel = 0.0;
            if force.x >= cfg.extraction_force {
                n.phase = Phase::Free;
                n.cooldown_timer = cfg.cooldown;
                n.align_timer = 0.0;
            }
        }
    }
    let transition = (n.phase != s.phase).then_some(Transition { from: s.phase, to: n.phase });
    Ok(StepOutcome {
        state: n,
        transition,
        force: published,
    })
}

/// Project a proposed plug pose onto the active constraint.
pub fn constrained_pose(s: &CouplingState, proposed: &Pose, cfg: &CouplingConfig) -> Result<Pose> {
    match s.phase {
        Phase::Free => Err(Error::PlugIsFree),
        Phase::Joined => Ok(Pose::level(Vec3::new(proposed.position.x.clamp(0.0, cfg.travel_max), 0.0, 0.0))),
        Phase::Fixed => Ok(Pose::level(Vec3::zeros())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub time: f64,
    pub phase: Phase,
    pub force: Option<Vec3>,
    pub transition: Option<Transition>,
}

/// Per-step coupling record; exported as `time,phase,fx,fy,fz,event`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CouplingLog {
    pub records: Vec<LogRecord>,
}

impl CouplingLog {
    pub fn record(&mut self, time: f64, outcome: &StepOutcome) {
        self.records.push(LogRecord {
            time,
            phase: outcome.state.phase,
            force: outcome.force,
            transition: outcome.transition,
        });
    }

    pub fn transitions(&self) -> impl Iterator<Item = Transition> + '_ {
        self.records.iter().filter_map(|r| r.transition)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,phase,fx,fy,fz,event\n");
        for r in &self.records {
            let _ = write!(s, "{},{},", r.time, r.phase);
            match r.force {
                Some(f) => {
                    let _ = write!(s, "{},{},{},", f.x, f.y, f.z);
                }
                None => s.push_str(",,,"),
            }
            if let Some(t) = r.transition {
                let _ = write!(s, "{t}");
            }
            s.push('\n');
        }
        s
    }
}
