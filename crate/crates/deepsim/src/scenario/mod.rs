//! Scenario files and the fixed-step runner.
//!
//! A scenario is a YAML document describing the terrain, currents, vehicles on
//! scripted trajectories with their sensors, teleport stations and plug
//! couplings. [`run`] steps it on a single clock and writes every log into one
//! directory together with a `manifest.json`. Identical configuration and seed
//! give byte-identical output.

mod config;
mod run;

pub use config::{
    CouplingSpec, CurrentsSpec, DvlSensorSpec, ForceSample, GeoPose, LidarSensorSpec, Mount, ScenarioConfig,
    SensorSpec, SonarSensorSpec, StationSpec, TeleportSpec, TideSpec, VehicleSpec, Waypoint, WorldSpec,
    SCHEMA_VERSION,
};
pub use run::{run, sha256_hex, OutputEntry, OutputSink, RunManifest, SimClock, Simulation, TeleportEvent, Trajectory};

/// Parse and check a scenario file; an empty list means it is runnable.
pub fn validate(cfg: &ScenarioConfig) -> Vec<String> {
    cfg.validate()
}
