//! Four-beam Doppler velocity log: bottom tracking, water-tracking fallback,
//! per-beam Gaussian noise and ADCP current profiling.
//!
//! Beam directions live in the sensor frame (x forward, y left, z up) and point
//! downward. A beam's scalar velocity is the projection of the sensor's velocity
//! (relative to the bottom, or to the water) onto the beam; the 3-D solution is
//! recovered by least squares over the usable beams.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{Pose, Scene, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    #[default]
    Combined,
    PerBeam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DvlConfig {
    pub beams: [Vec3; 4],
    pub min_range: f64,
    pub max_range: f64,
    /// Per-beam noise standard deviation, m/s.
    pub noise_sigma: f64,
    pub water_track_enabled: bool,
    pub bins: usize,
    pub bin_size: f64,
    pub profile_mode: ProfileMode,
}

impl Default for DvlConfig {
    fn default() -> Self {
        Self {
            beams: janus_beams(30f64.to_radians()),
            min_range: 0.5,
            max_range: 200.0,
            noise_sigma: 0.005,
            water_track_enabled: true,
            bins: 20,
            bin_size: 4.0,
            profile_mode: ProfileMode::Combined,
        }
    }
}

/// Four beams tilted `tilt` from the downward axis at azimuths 45°, 135°, 225°, 315°.
pub fn janus_beams(tilt: f64) -> [Vec3; 4] {
    [45.0f64, 135.0, 225.0, 315.0].map(|az| {
        let az = az.to_radians();
        Vec3::new(tilt.sin() * az.cos(), tilt.sin() * az.sin(), -tilt.cos())
    })
}

impl DvlConfig {
    pub fn validate(&self) -> Result<()> {
        for (i, b) in self.beams.iter().enumerate() {
            if (b.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!("DVL beam {i} is not a unit vector")));
            }
            if !(b.z < 0.0) {
                return Err(Error::InvalidConfig(format!("DVL beam {i} does not point down (-z)")));
            }
        }
        if !(self.min_range >= 0.0 && self.min_range < self.max_range) {
            return Err(Error::InvalidConfig(format!(
                "DVL ranges must satisfy 0 <= min ({}) < max ({})",
                self.min_range, self.max_range
            )));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidConfig("DVL noise sigma must be non-negative".into()));
        }
        if !(self.bin_size > 0.0) || self.bins as f64 * self.bin_size > self.max_range {
            return Err(Error::InvalidConfig(format!(
                "ADCP bins ({} x {} m) must fit inside max range {}",
                self.bins, self.bin_size, self.max_range
            )));
        }
        Ok(())
    }

    /// Center range of profile bin `k`; bin 0 starts at `min_range`.
    pub fn bin_center(&self, k: usize) -> f64 {
        self.min_range + (k as f64 + 0.5) * self.bin_size
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DvlMode {
    BottomTrack,
    WaterTrack,
    None,
}

impl DvlMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DvlMode::BottomTrack => "bottom_track",
            DvlMode::WaterTrack => "water_track",
            DvlMode::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DvlSolution {
    /// Sensor-frame velocity, present unless `mode` is `None`.
    pub velocity: Option<Vec3>,
    pub altitude: Option<f64>,
    pub mode: DvlMode,
    pub beam_ranges: [Option<f64>; 4],
    /// Scalar velocity per beam used in the solution.
    pub beam_velocities: [Option<f64>; 4],
    pub beams: [Vec3; 4],
    pub noisy: bool,
}

impl DvlSolution {
    pub fn csv_header() -> &'static str {
        "time,mode,vx,vy,vz,altitude,r1,r2,r3,r4,bv1,bv2,bv3,bv4"
    }

    pub fn csv_row(&self, time: f64) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |x| x.to_string());
        let mut s = format!("{time},{}", self.mode.as_str());
        let v = self.velocity;
        for k in 0..3 {
            let _ = write!(s, ",{}", opt(v.map(|v| v[k])));
        }
        let _ = write!(s, ",{}", opt(self.altitude));
        for r in self.beam_ranges {
            let _ = write!(s, ",{}", opt(r));
        }
        for b in self.beam_velocities {
            let _ = write!(s, ",{}", opt(b));
        }
        s
    }
}

/// Range along each beam to the first surface within `[min_range, max_range]`.
pub fn beam_ranges(pose: &Pose, scene: &dyn Scene, cfg: &DvlConfig) -> [Option<f64>; 4] {
    cfg.beams.map(|b| {
        scene
            .raycast(&pose.ray(&b), cfg.max_range)
            .map(|h| h.range)
            .filter(|&r| r >= cfg.min_range)
    })
}

/// Least-squares `v` with `beams[i]·v = scalars[i]`.
pub fn solve_velocity(beams: &[Vec3], scalars: &[f64]) -> Result<Vec3> {
    let n = beams.len().min(scalars.len());
    if n < 3 {
        return Err(Error::RankDeficient { valid: n });
    }
    let a = DMatrix::from_fn(n, 3, |r, c| beams[r][c]);
    let b = DVector::from_column_slice(&scalars[..n]);
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    if sv.min() <= 1e-9 * sv.max() {
        return Err(Error::RankDeficient { valid: n });
    }
    let x = svd
        .solve(&b, 0.0)
        .map_err(|_| Error::RankDeficient { valid: n })?;
    Ok(Vec3::new(x[0], x[1], x[2]))
}

fn solve_masked(beams: &[Vec3; 4], scalars: &[Option<f64>; 4]) -> Result<Vec3> {
    let (b, s): (Vec<Vec3>, Vec<f64>) = beams
        .iter()
        .zip(scalars)
        .filter_map(|(b, s)| s.map(|s| (*b, s)))
        .unzip();
    solve_velocity(&b, &s)
}

fn altitude(pose: &Pose, beams: &[Vec3; 4], ranges: &[Option<f64>; 4]) -> Option<f64> {
    let heights: Vec<f64> = beams
        .iter()
        .zip(ranges)
        .filter_map(|(b, r)| r.map(|r| r * -pose.to_world(b).z))
        .collect();
    (!heights.is_empty()).then(|| heights.iter().sum::<f64>() / heights.len() as f64)
}

/// Noise-free bottom-track solution over static terrain. Fewer than three
/// bottom hits gives mode `None`.
pub fn bottom_track(pose: &Pose, vel_world: &Vec3, scene: &dyn Scene, cfg: &DvlConfig) -> DvlSolution {
    let ranges = beam_ranges(pose, scene, cfg);
    bottom_track_from_ranges(pose, vel_world, ranges, cfg)
}

fn bottom_track_from_ranges(pose: &Pose, vel_world: &Vec3, ranges: [Option<f64>; 4], cfg: &DvlConfig) -> DvlSolution {
    let v_sensor = pose.to_body(vel_world);
    let scalars: [Option<f64>; 4] = std::array::from_fn(|i| ranges[i].map(|_| cfg.beams[i].dot(&v_sensor)));
    let hits = ranges.iter().flatten().count();
    let velocity = if hits >= 3 {
        solve_masked(&cfg.beams, &scalars).ok()
    } else {
        None
    };
    DvlSolution {
        velocity,
        altitude: altitude(pose, &cfg.beams, &ranges),
        mode: if velocity.is_some() { DvlMode::BottomTrack } else { DvlMode::None },
        beam_ranges: ranges,
        beam_velocities: if velocity.is_some() { scalars } else { [None; 4] },
        beams: cfg.beams,
        noisy: false,
    }
}

/// Noise-free water-track solution: velocity relative to the water at the
/// sensor's depth. `current(depth)` returns the world-frame (ENU) current.
pub fn water_track(pose: &Pose, vel_world: &Vec3, current: impl Fn(f64) -> Vec3, cfg: &DvlConfig) -> DvlSolution {
    let relative = pose.to_body(&(vel_world - current(pose.depth())));
    let scalars = cfg.beams.map(|b| Some(b.dot(&relative)));
    let velocity = solve_masked(&cfg.beams, &scalars).ok();
    DvlSolution {
        velocity,
        altitude: None,
        mode: if velocity.is_some() { DvlMode::WaterTrack } else { DvlMode::None },
        beam_ranges: [None; 4],
        beam_velocities: scalars,
        beams: cfg.beams,
        noisy: false,
    }
}

/// Add `N(0, σ²)` to every beam scalar in use and re-solve.
pub fn add_beam_noise(solution: &DvlSolution, noise_sigma: f64, rng: &mut impl Rng) -> DvlSolution {
    let mut out = solution.clone();
    out.noisy = true;
    if solution.mode == DvlMode::None || noise_sigma == 0.0 {
        return out;
    }
    let normal = Normal::new(0.0, noise_sigma).expect("noise sigma validated non-negative");
    for s in out.beam_velocities.iter_mut().flatten() {
        *s += normal.sample(rng);
    }
    out.velocity = solve_masked(&out.beams, &out.beam_velocities).ok();
    if out.velocity.is_none() {
        out.mode = DvlMode::None;
    }
    out
}

/// Full measurement: bottom track, water track when the bottom is out of reach
/// (if enabled), then beam noise.
pub fn measure(
    pose: &Pose,
    vel_world: &Vec3,
    scene: &dyn Scene,
    current: impl Fn(f64) -> Vec3,
    cfg: &DvlConfig,
    rng: &mut impl Rng,
) -> DvlSolution {
    let bottom = bottom_track(pose, vel_world, scene, cfg);
    let clean = if bottom.mode == DvlMode::BottomTrack || !cfg.water_track_enabled {
        bottom
    } else {
        let mut w = water_track(pose, vel_world, current, cfg);
        w.beam_ranges = bottom.beam_ranges;
        w.altitude = bottom.altitude;
        w
    };
    add_beam_noise(&clean, cfg.noise_sigma, rng)
}

#[derive(Debug, Clone, PartialEq)]
pub enum BinVelocity {
    Combined(Vec3),
    PerBeam([Vec3; 4]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdcpBin {
    pub center_range: f64,
    /// Depth of the bin center along each beam.
    pub depths: [f64; 4],
    pub velocity: BinVelocity,
}

fn profile_metadata(mode: ProfileMode, bin_size: f64, bin_count: usize, beams: &[Vec3; 4]) -> String {
    let beams: Vec<String> = beams.iter().map(|b| format!("{} {} {}", b.x, b.y, b.z)).collect();
    let mode = match mode {
        ProfileMode::Combined => "combined",
        ProfileMode::PerBeam => "per_beam",
    };
    format!("# mode={mode};bin_size={bin_size};bin_count={bin_count};beams={}", beams.join(";"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdcpProfile {
    pub mode: ProfileMode,
    pub bins: Vec<AdcpBin>,
    pub beams: [Vec3; 4],
    pub bin_size: f64,
    pub bin_count: usize,
}

/// Relative water velocity profile along the beams, sensor frame.
///
/// Each beam's bin `k` sits at range `min_range + (k + ½)·bin_size`; the current
/// is sampled at that point's depth. `Combined` solves one velocity per bin from
/// the four noisy scalars, `PerBeam` scales each beam's unit vector by its noisy
/// scalar.
pub fn current_profile(
    pose: &Pose,
    vel_world: &Vec3,
    current: impl Fn(f64) -> Vec3,
    cfg: &DvlConfig,
    rng: &mut impl Rng,
) -> Result<AdcpProfile> {
    if cfg.bins == 0 {
        return Err(Error::InvalidConfig("ADCP needs at least one bin".into()));
    }
    let normal = (cfg.noise_sigma > 0.0).then(|| Normal::new(0.0, cfg.noise_sigma).expect("finite sigma"));
    let down: [f64; 4] = cfg.beams.map(|b| -pose.to_world(&b).z);
    let mut bins = Vec::with_capacity(cfg.bins);
    for k in 0..cfg.bins {
        let r = cfg.bin_center(k);
        let depths: [f64; 4] = std::array::from_fn(|i| pose.depth() + r * down[i]);
        let scalars: [f64; 4] = std::array::from_fn(|i| {
            let rel = pose.to_body(&(vel_world - current(depths[i])));
            let noise = normal.as_ref().map_or(0.0, |n| n.sample(rng));
            cfg.beams[i].dot(&rel) + noise
        });
        let velocity = match cfg.profile_mode {
            ProfileMode::Combined => BinVelocity::Combined(solve_velocity(&cfg.beams, &scalars)?),
            ProfileMode::PerBeam => BinVelocity::PerBeam(std::array::from_fn(|i| cfg.beams[i] * scalars[i])),
        };
        bins.push(AdcpBin {
            center_range: r,
            depths,
            velocity,
        });
    }
    Ok(AdcpProfile {
        mode: cfg.profile_mode,
        bins,
        beams: cfg.beams,
        bin_size: cfg.bin_size,
        bin_count: cfg.bins,
    })
}

impl AdcpProfile {
    /// Metadata line (prefixed `#`) describing the profile parameters.
    pub fn csv_metadata(&self) -> String {
        profile_metadata(self.mode, self.bin_size, self.bin_count, &self.beams)
    }

    /// The metadata line profiles measured with `cfg` will carry.
    pub fn csv_metadata_for(cfg: &DvlConfig) -> String {
        profile_metadata(cfg.profile_mode, cfg.bin_size, cfg.bins, &cfg.beams)
    }

    pub fn csv_header() -> &'static str {
        "time,bin,beam,center_range,depth,vx,vy,vz"
    }

    /// One row per bin (`beam` = `all`) in combined mode, one per bin and beam otherwise.
    pub fn csv_rows(&self, time: f64) -> String {
        let mut s = String::new();
        for (k, bin) in self.bins.iter().enumerate() {
            match &bin.velocity {
                BinVelocity::Combined(v) => {
                    let depth = bin.depths.iter().sum::<f64>() / 4.0;
                    let _ = writeln!(s, "{time},{k},all,{},{depth},{},{},{}", bin.center_range, v.x, v.y, v.z);
                }
                BinVelocity::PerBeam(vs) => {
                    for (i, v) in vs.iter().enumerate() {
                        let _ = writeln!(
                            s,
                            "{time},{k},{},{},{},{},{},{}",
                            i + 1,
                            bin.center_range,
                            bin.depths[i],
                            v.x,
                            v.y,
                            v.z
                        );
                    }
                }
            }
        }
        s
    }
}
