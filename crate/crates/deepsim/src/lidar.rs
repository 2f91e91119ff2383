//! Underwater pulse lidar on a pan/tilt base.
//!
//! The sensor fires a fixed angular sector of rays. The native grid is
//! `rays_h × rays_v`; each axis is supersampled so the default 145 × 145 grid
//! becomes 1450 × 1450 directions.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{Pose, Rotation, Scene, Vec3};

pub const PAN_LIMIT_DEG: f64 = 175.0;
pub const TILT_LIMIT_DEG: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LidarConfig {
    pub rays_h: usize,
    pub rays_v: usize,
    /// Degrees.
    pub fov_h: f64,
    /// Degrees.
    pub fov_v: f64,
    pub max_range: f64,
    pub range_noise_sigma: f64,
    pub supersample: usize,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            rays_h: 145,
            rays_v: 145,
            fov_h: 30.0,
            fov_v: 30.0,
            max_range: 20.0,
            range_noise_sigma: 0.0,
            supersample: 10,
        }
    }
}

impl LidarConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.rays_h < 2 || self.rays_v < 2 {
            return bad("lidar needs at least 2 rays per axis");
        }
        if self.supersample == 0 {
            return bad("lidar supersample must be at least 1");
        }
        if !(self.fov_h > 0.0 && self.fov_v > 0.0) {
            return bad("lidar field of view must be positive");
        }
        if !(self.max_range > 0.0) {
            return bad("lidar max range must be positive");
        }
        if !(self.range_noise_sigma >= 0.0) {
            return bad("lidar range noise must be non-negative");
        }
        Ok(())
    }

    /// Supersampled grid size `(columns, rows)`.
    pub fn grid(&self) -> (usize, usize) {
        (self.rays_h * self.supersample, self.rays_v * self.supersample)
    }

    /// Azimuth and elevation of grid cell `(col, row)`, degrees; the grid spans
    /// the field of view edge to edge.
    pub fn angles(&self, col: usize, row: usize) -> (f64, f64) {
        let (nh, nv) = self.grid();
        let lin = |i: usize, n: usize, fov: f64| {
            if n == 1 {
                0.0
            } else {
                -fov / 2.0 + fov * i as f64 / (n - 1) as f64
            }
        };
        (lin(col, nh, self.fov_h), lin(row, nv, self.fov_v))
    }

    /// Unit ray direction in the sensor frame (x forward, y left, z up).
    pub fn direction(&self, col: usize, row: usize) -> Vec3 {
        let (az, el) = self.angles(col, row);
        let (az, el) = (az.to_radians(), el.to_radians());
        Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin())
    }
}

/// Mount orientation, degrees. Positive pan turns toward +y, positive tilt
/// raises the boresight.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PanTiltState {
    pub pan: f64,
    pub tilt: f64,
}

impl PanTiltState {
    pub fn rotation(&self) -> Rotation {
        Rotation::from_euler_angles(0.0, -self.tilt.to_radians(), self.pan.to_radians())
    }

    pub fn within_limits(&self) -> bool {
        self.pan.abs() <= PAN_LIMIT_DEG && self.tilt.abs() <= TILT_LIMIT_DEG
    }
}

/// Move the mount, clamping to `±175°` pan and `±30°` tilt. The flag reports
/// whether either axis was clamped. A NaN command leaves that axis where it was.
pub fn command_mount(state: PanTiltState, pan: f64, tilt: f64) -> (PanTiltState, bool) {
    let axis = |current: f64, cmd: f64, limit: f64| {
        if cmd.is_nan() {
            (current, true)
        } else {
            let v = cmd.clamp(-limit, limit);
            (v, v != cmd)
        }
    };
    let (pan, pc) = axis(state.pan, pan, PAN_LIMIT_DEG);
    let (tilt, tc) = axis(state.tilt, tilt, TILT_LIMIT_DEG);
    (PanTiltState { pan, tilt }, pc || tc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarPoint {
    /// World frame.
    pub position: Vec3,
    pub range: f64,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<LidarPoint>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_ply(&self) -> String {
        let mut s = format!(
            "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nproperty int row\nproperty int col\nend_header\n",
            self.points.len()
        );
        for p in &self.points {
            let _ = writeln!(s, "{} {} {} {} {}", p.position.x, p.position.y, p.position.z, p.row, p.col);
        }
        s
    }

    pub fn save_ply(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_ply()).map_err(|e| Error::io(path, e))
    }
}

/// Sensor pose after applying the mount: `pose ∘ mount`.
pub fn sensor_pose(pose: &Pose, mount: &PanTiltState) -> Pose {
    Pose::new(pose.position, pose.attitude * mount.rotation())
}

/// Cast the full supersampled grid. Hits within `max_range` become points; the
/// range is perturbed along the ray by `N(0, σ)` (drawn in row-major ray order)
/// and kept within `[0, max_range]`.
pub fn scan(pose: &Pose, mount: &PanTiltState, scene: &dyn Scene, cfg: &LidarConfig, rng: &mut impl Rng) -> Result<PointCloud> {
    cfg.validate()?;
    let sensor = sensor_pose(pose, mount);
    let (nh, nv) = cfg.grid();
    let hits: Vec<(usize, usize, f64, Vec3)> = (0..nh * nv)
        .into_par_iter()
        .filter_map(|i| {
            let (row, col) = (i / nh, i % nh);
            let ray = sensor.ray(&cfg.direction(col, row));
            scene
                .raycast(&ray, cfg.max_range)
                .filter(|h| h.range <= cfg.max_range)
                .map(|h| (row, col, h.range, ray.dir))
        })
        .collect();
    let noise = (cfg.range_noise_sigma > 0.0)
        .then(|| Normal::new(0.0, cfg.range_noise_sigma).expect("validated sigma"));
    let points = hits
        .into_iter()
        .map(|(row, col, range, dir)| {
            let range = match &noise {
                Some(n) => (range + n.sample(rng)).clamp(0.0, cfg.max_range),
                None => range,
            };
            LidarPoint {
                position: sensor.position + dir * range,
                range,
                row,
                col,
            }
        })
        .collect();
    Ok(PointCloud { points })
}
