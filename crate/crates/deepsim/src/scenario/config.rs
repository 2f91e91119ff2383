use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::bathymetry::{load_heightmap, TileLayout, DEFAULT_LOAD_RADIUS, DEFAULT_OVERLAP, DEFAULT_TILE_SIZE};
use crate::coupling::CouplingConfig;
use crate::currents::{
    load_tide_series, Constituent, CurrentField, GaussMarkovParams, StratifiedCurrentDB, Stratum, TidalModel,
};
use crate::dvl::DvlConfig;
use crate::error::{Error, Result};
use crate::geodesy::{geodetic_to_mercator, world_point, GeodeticCoord};
use crate::lidar::LidarConfig;
use crate::scene::{Pose, Rotation, Vec3};
use crate::sonar::SonarConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    pub duration: f64,
    pub dt: f64,
    /// UTC seconds at simulation time zero.
    #[serde(default)]
    pub epoch_utc: f64,
    #[serde(default)]
    pub world: Option<WorldSpec>,
    #[serde(default)]
    pub currents: CurrentsSpec,
    #[serde(default)]
    pub stations: Vec<StationSpec>,
    #[serde(default)]
    pub vehicles: Vec<VehicleSpec>,
    #[serde(default)]
    pub teleports: Vec<TeleportSpec>,
    #[serde(default)]
    pub couplings: Vec<CouplingSpec>,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
    /// Text the configuration was parsed from.
    #[serde(skip)]
    pub source: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    pub heightmap: PathBuf,
    #[serde(default = "default_tile_size")]
    pub tile_size: f64,
    #[serde(default = "default_overlap")]
    pub overlap: f64,
    #[serde(default = "default_load_radius")]
    pub load_radius: f64,
    /// Defaults to 1.5 × `load_radius`.
    #[serde(default)]
    pub unload_radius: Option<f64>,
}

fn default_tile_size() -> f64 {
    DEFAULT_TILE_SIZE
}
fn default_overlap() -> f64 {
    DEFAULT_OVERLAP
}
fn default_load_radius() -> f64 {
    DEFAULT_LOAD_RADIUS
}

impl WorldSpec {
    pub fn unload_radius(&self) -> f64 {
        self.unload_radius.unwrap_or(1.5 * self.load_radius)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurrentsSpec {
    /// NED velocities by depth; empty means still water.
    #[serde(default)]
    pub strata: Vec<Stratum>,
    #[serde(default)]
    pub tide: Option<TideSpec>,
    #[serde(default)]
    pub gauss_markov: GaussMarkovParams,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TideSpec {
    /// Flood direction, degrees clockwise from north.
    #[serde(default)]
    pub heading: f64,
    #[serde(default)]
    pub constituents: Vec<Constituent>,
    /// CSV of `epoch_time,speed` rows; replaces the constituents when set.
    #[serde(default)]
    pub series_csv: Option<PathBuf>,
}

/// Geographic pose. Angles in degrees: roll positive starboard-down, pitch
/// positive nose-up, heading clockwise from north.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoPose {
    pub lat: f64,
    pub lon: f64,
    pub depth: f64,
    #[serde(default)]
    pub roll: f64,
    #[serde(default)]
    pub pitch: f64,
    #[serde(default)]
    pub heading: f64,
}

impl GeoPose {
    pub fn to_pose(&self) -> Result<Pose> {
        let p = geodetic_to_mercator(GeodeticCoord::new(self.lat, self.lon))?;
        Ok(Pose::new(world_point(p, self.depth), attitude(self.roll, self.pitch, 90.0 - self.heading)))
    }
}

/// Body-frame rotation from degrees; pitch positive nose-up, yaw positive to port.
fn attitude(roll: f64, pitch: f64, yaw: f64) -> Rotation {
    Rotation::from_euler_angles(roll.to_radians(), -pitch.to_radians(), yaw.to_radians())
}

#[derive(Debug, Clone, Deserialize)]
pub struct StationSpec {
    pub name: String,
    #[serde(flatten)]
    pub pose: GeoPose,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Waypoint {
    pub t: f64,
    #[serde(flatten)]
    pub pose: GeoPose,
}

/// Sensor placement on the vehicle body (x forward, y left, z up), degrees.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mount {
    #[serde(default)]
    pub offset: [f64; 3],
    #[serde(default)]
    pub roll: f64,
    #[serde(default)]
    pub pitch: f64,
    #[serde(default)]
    pub yaw: f64,
}

impl Mount {
    pub fn to_pose(&self) -> Pose {
        Pose::new(Vec3::from(self.offset), attitude(self.roll, self.pitch, self.yaw))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub id: String,
    pub trajectory: Vec<Waypoint>,
    #[serde(default)]
    pub sensors: Vec<SensorSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SensorSpec {
    Dvl(DvlSensorSpec),
    Adcp(DvlSensorSpec),
    Sonar(SonarSensorSpec),
    Lidar(LidarSensorSpec),
}

#[derive(Debug, Clone, Deserialize)]
pub struct DvlSensorSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub period: f64,
    #[serde(default)]
    pub mount: Mount,
    #[serde(default)]
    pub config: DvlConfig,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SonarSensorSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub period: f64,
    #[serde(default)]
    pub mount: Mount,
    #[serde(default)]
    pub config: SonarConfig,
    #[serde(default = "default_dynamic_range")]
    pub dynamic_range_db: f64,
    /// Also write each ping as CSV next to its PGM.
    #[serde(default)]
    pub export_csv: bool,
}

fn default_dynamic_range() -> f64 {
    60.0
}

#[derive(Debug, Clone, Deserialize)]
pub struct LidarSensorSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub period: f64,
    #[serde(default)]
    pub mount: Mount,
    #[serde(default)]
    pub config: LidarConfig,
    /// Commanded pan/tilt, degrees; clamped to the mount limits.
    #[serde(default)]
    pub pan: f64,
    #[serde(default)]
    pub tilt: f64,
}

impl SensorSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            SensorSpec::Dvl(_) => "dvl",
            SensorSpec::Adcp(_) => "adcp",
            SensorSpec::Sonar(_) => "sonar",
            SensorSpec::Lidar(_) => "lidar",
        }
    }

    pub fn period(&self) -> f64 {
        match self {
            SensorSpec::Dvl(s) | SensorSpec::Adcp(s) => s.period,
            SensorSpec::Sonar(s) => s.period,
            SensorSpec::Lidar(s) => s.period,
        }
    }

    pub fn mount(&self) -> Mount {
        match self {
            SensorSpec::Dvl(s) | SensorSpec::Adcp(s) => s.mount,
            SensorSpec::Sonar(s) => s.mount,
            SensorSpec::Lidar(s) => s.mount,
        }
    }

    fn explicit_name(&self) -> Option<&str> {
        match self {
            SensorSpec::Dvl(s) | SensorSpec::Adcp(s) => s.name.as_deref(),
            SensorSpec::Sonar(s) => s.name.as_deref(),
            SensorSpec::Lidar(s) => s.name.as_deref(),
        }
    }

    /// Configured name, or `<type><index>` by position on the vehicle.
    pub fn name(&self, index: usize) -> String {
        self.explicit_name()
            .map_or_else(|| format!("{}{index}", self.kind()), str::to_string)
    }

    fn validate_config(&self) -> Result<()> {
        match self {
            SensorSpec::Dvl(s) | SensorSpec::Adcp(s) => s.config.validate(),
            SensorSpec::Sonar(s) => {
                if !(s.dynamic_range_db > 0.0) {
                    return Err(Error::InvalidConfig("dynamic range must be positive".into()));
                }
                s.config.validate()
            }
            SensorSpec::Lidar(s) => s.config.validate(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeleportSpec {
    pub t: f64,
    pub vehicle: String,
    pub station: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    pub name: String,
    /// Vehicle carrying the plug.
    pub plug: String,
    /// Plug placement on the carrying vehicle.
    #[serde(default)]
    pub plug_mount: Mount,
    pub receptacle: GeoPose,
    #[serde(default)]
    pub config: CouplingConfig,
    /// Piecewise-constant force on the plug (plug frame), zero before the first entry.
    #[serde(default)]
    pub forces: Vec<ForceSample>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceSample {
    pub t: f64,
    pub force: [f64; 3],
}

impl CouplingSpec {
    pub fn force_at(&self, t: f64) -> Vec3 {
        self.forces
            .iter()
            .rev()
            .find(|f| f.t <= t + TIME_EPS)
            .map_or_else(Vec3::zeros, |f| Vec3::from(f.force))
    }
}

/// Slack for comparing scheduled times against the step clock.
pub(crate) const TIME_EPS: f64 = 1e-9;

/// Steps of `dt` in `period`, if the period is a whole multiple.
pub(crate) fn stride(period: f64, dt: f64) -> Option<usize> {
    if !(period > 0.0 && dt > 0.0) {
        return None;
    }
    let k = (period / dt).round();
    (k >= 1.0 && (k * dt - period).abs() <= 1e-9 * period.max(1.0)).then_some(k as usize)
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl ScenarioConfig {
    pub fn from_yaml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: ScenarioConfig = serde_yaml::from_str(text)?;
        cfg.base_dir = base_dir.into();
        cfg.source = text.to_string();
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_yaml_str(&text, base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Number of steps after t = 0; the run covers `0, dt, …, steps·dt`.
    pub fn steps(&self) -> u64 {
        ((self.duration / self.dt) + 1e-9).floor() as u64
    }

    pub fn current_field(&self) -> Result<CurrentField> {
        let db = if self.currents.strata.is_empty() {
            StratifiedCurrentDB::uniform([0.0; 3])
        } else {
            StratifiedCurrentDB::new(self.currents.strata.clone())?
        };
        let tide = match &self.currents.tide {
            None => TidalModel::none(),
            Some(t) => {
                let heading = t.heading.to_radians();
                match &t.series_csv {
                    Some(p) => TidalModel::series(load_tide_series(self.resolve(p))?, heading)?,
                    None => TidalModel::constituents(t.constituents.clone(), heading)?,
                }
            }
        };
        let mut field = CurrentField::new(db, tide, self.currents.gauss_markov);
        field.epoch_utc = self.epoch_utc;
        Ok(field)
    }

    /// Every problem that would stop the scenario from running; empty means runnable.
    pub fn validate(&self) -> Vec<String> {
        let mut d = Vec::new();
        if self.version != SCHEMA_VERSION {
            d.push(format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.version));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            d.push("dt must be positive".to_string());
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            d.push("duration must be non-negative".to_string());
        }
        if !self.epoch_utc.is_finite() {
            d.push("epoch_utc must be finite".to_string());
        }
        self.validate_world(&mut d);
        self.validate_currents(&mut d);

        let mut stations = BTreeSet::new();
        for s in &self.stations {
            if !stations.insert(s.name.as_str()) {
                d.push(format!("duplicate station '{}'", s.name));
            }
            if let Err(e) = s.pose.to_pose() {
                d.push(format!("station '{}': {e}", s.name));
            }
        }

        let mut vehicles = BTreeSet::new();
        for v in &self.vehicles {
            if !valid_name(&v.id) {
                d.push(format!("vehicle id '{}' must be non-empty and use only letters, digits, '_' or '-'", v.id));
            }
            if !vehicles.insert(v.id.as_str()) {
                d.push(format!("duplicate vehicle '{}'", v.id));
            }
            self.validate_vehicle(v, &mut d);
        }

        for t in &self.teleports {
            if !vehicles.contains(t.vehicle.as_str()) {
                d.push(format!("teleport at t={}: unknown vehicle '{}'", t.t, t.vehicle));
            }
            if !stations.contains(t.station.as_str()) {
                d.push(format!("teleport at t={}: unknown station '{}'", t.t, t.station));
            }
            if !(t.t >= 0.0) {
                d.push(format!("teleport time {} must be non-negative", t.t));
            }
        }

        let mut couplings = BTreeSet::new();
        for c in &self.couplings {
            if !valid_name(&c.name) {
                d.push(format!("coupling name '{}' must use only letters, digits, '_' or '-'", c.name));
            }
            if !couplings.insert(c.name.as_str()) {
                d.push(format!("duplicate coupling '{}'", c.name));
            }
            if !vehicles.contains(c.plug.as_str()) {
                d.push(format!("coupling '{}': unknown plug vehicle '{}'", c.name, c.plug));
            }
            if let Err(e) = c.config.validate() {
                d.push(format!("coupling '{}': {e}", c.name));
            }
            if let Err(e) = c.receptacle.to_pose() {
                d.push(format!("coupling '{}' receptacle: {e}", c.name));
            }
            if c.forces.windows(2).any(|w| !(w[1].t >= w[0].t)) {
                d.push(format!("coupling '{}': force times must be non-decreasing", c.name));
            }
        }
        d
    }

    fn validate_world(&self, d: &mut Vec<String>) {
        let Some(w) = &self.world else { return };
        if !(w.tile_size > 0.0) {
            d.push("world tile_size must be positive".to_string());
        }
        if !(w.overlap >= 0.0) {
            d.push("world overlap must be non-negative".to_string());
        }
        if !(w.load_radius >= 0.0) {
            d.push("world load_radius must be non-negative".to_string());
        }
        if !(w.unload_radius() > w.load_radius) {
            d.push("world unload_radius must exceed load_radius".to_string());
        }
        let path = self.resolve(&w.heightmap);
        if !path.is_file() {
            d.push(format!("heightmap file not found: {}", path.display()));
            return;
        }
        match load_heightmap(&path) {
            Err(e) => d.push(format!("heightmap {}: {e}", path.display())),
            Ok(h) => {
                if w.tile_size > 0.0 && w.overlap >= 0.0 {
                    if let Err(e) = TileLayout::for_heightmap(&h, w.tile_size, w.overlap) {
                        d.push(format!("world tiling: {e}"));
                    }
                }
            }
        }
    }

    fn validate_currents(&self, d: &mut Vec<String>) {
        if let Some(t) = &self.currents.tide {
            if let Some(p) = &t.series_csv {
                let path = self.resolve(p);
                if !path.is_file() {
                    d.push(format!("tide series file not found: {}", path.display()));
                    return;
                }
            }
        }
        let gm = self.currents.gauss_markov;
        if !(gm.mu >= 0.0 && gm.sigma >= 0.0 && gm.bound >= 0.0) {
            d.push("gauss_markov mu, sigma and bound must be non-negative".to_string());
        }
        match self.current_field() {
            Err(e) => d.push(format!("currents: {e}")),
            Ok(f) => {
                if let Some((start, end)) = f.tide.span() {
                    let (t0, t1) = (self.epoch_utc, self.epoch_utc + self.duration);
                    if t0 < start || t1 > end {
                        d.push(format!("tide series [{start}, {end}] does not cover the run [{t0}, {t1}]"));
                    }
                }
            }
        }
    }

    fn validate_vehicle(&self, v: &VehicleSpec, d: &mut Vec<String>) {
        if v.trajectory.is_empty() {
            d.push(format!("vehicle '{}': trajectory needs at least one waypoint", v.id));
        }
        if v.trajectory.windows(2).any(|w| !(w[1].t > w[0].t)) {
            d.push(format!("vehicle '{}': trajectory times must be strictly increasing", v.id));
        }
        for w in &v.trajectory {
            if let Err(e) = w.pose.to_pose() {
                d.push(format!("vehicle '{}' waypoint t={}: {e}", v.id, w.t));
            }
        }
        let mut names = BTreeSet::new();
        for (i, s) in v.sensors.iter().enumerate() {
            let name = s.name(i);
            if !valid_name(&name) {
                d.push(format!("vehicle '{}': sensor name '{name}' must use only letters, digits, '_' or '-'", v.id));
            }
            if !names.insert(name.clone()) {
                d.push(format!("vehicle '{}': duplicate sensor name '{name}'", v.id));
            }
            if self.dt > 0.0 && stride(s.period(), self.dt).is_none() {
                d.push(format!(
                    "vehicle '{}' sensor '{name}': period {} must be a positive multiple of dt {}",
                    v.id,
                    s.period(),
                    self.dt
                ));
            }
            if let Err(e) = s.validate_config() {
                d.push(format!("vehicle '{}' sensor '{name}': {e}", v.id));
            }
        }
    }
}
