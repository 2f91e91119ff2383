//! Deterministic, headless underwater simulation kernel.
//!
//! Terrain comes from a lat/lon heightmap projected to Web Mercator and served
//! as overlapping tiles around each vehicle. Sensors (DVL and ADCP, multibeam
//! sonar, lidar) query the world through [`scene::Scene`] raycasts. Currents
//! combine depth strata, tides and a Gauss-Markov perturbation. A scenario
//! runner steps scripted vehicles through all of it on a fixed clock.

pub mod bathymetry;
pub mod coupling;
pub mod currents;
pub mod dvl;
pub mod error;
pub mod geodesy;
pub mod lidar;
pub mod meshtools;
pub mod scenario;
pub mod scene;
pub mod sonar;

pub use error::{Error, Result};
pub use scene::{Pose, Ray, RayHit, Rotation, Scene, Vec3};
