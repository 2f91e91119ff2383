use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{CouplingSpec, ScenarioConfig, SensorSpec, Waypoint, SCHEMA_VERSION, TIME_EPS};
use crate::bathymetry::{load_heightmap, Heightmap, LoadedTerrain, TileEvent, TileLayout, TileManager};
use crate::coupling::{self, CouplingLog, CouplingState};
use crate::currents::{ned_to_world, tidal_speed, CurrentField, CurrentSampler};
use crate::dvl::{self, AdcpProfile, DvlSolution};
use crate::error::{Error, Result};
use crate::geodesy::ProjectedCoord;
use crate::lidar::{self, PanTiltState};
use crate::scene::{EmptyScene, Pose, Scene, Vec3};
use crate::sonar;

/// Fixed-step simulation clock; time is always `step · dt`, never accumulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    pub step: u64,
    pub dt: f64,
    /// UTC seconds at `t = 0`.
    pub epoch_utc: f64,
}

impl SimClock {
    pub fn new(dt: f64, epoch_utc: f64) -> Self {
        Self { step: 0, dt, epoch_utc }
    }

    /// Seconds since the scenario epoch.
    pub fn t(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn utc(&self) -> f64 {
        self.epoch_utc + self.t()
    }

    pub fn advance(&mut self) {
        self.step += 1;
    }
}

/// Timed waypoints with linear interpolation of position and spherical
/// interpolation of attitude. Before the first and after the last waypoint the
/// vehicle holds still.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    poses: Vec<Pose>,
}

impl Trajectory {
    pub fn new(waypoints: &[Waypoint]) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(Error::InvalidScenario(vec!["trajectory needs at least one waypoint".into()]));
        }
        Ok(Self {
            times: waypoints.iter().map(|w| w.t).collect(),
            poses: waypoints.iter().map(|w| w.pose.to_pose()).collect::<Result<_>>()?,
        })
    }

    pub fn from_poses(times: Vec<f64>, poses: Vec<Pose>) -> Self {
        assert_eq!(times.len(), poses.len());
        assert!(!times.is_empty());
        Self { times, poses }
    }

    /// Pose and world-frame velocity at `t`.
    pub fn sample(&self, t: f64) -> (Pose, Vec3) {
        let n = self.times.len();
        if t <= self.times[0] || n == 1 {
            let v = if n > 1 && t == self.times[0] { self.segment_velocity(0) } else { Vec3::zeros() };
            return (self.poses[0], v);
        }
        if t >= self.times[n - 1] {
            return (self.poses[n - 1], Vec3::zeros());
        }
        let i = self.times.partition_point(|&x| x <= t) - 1;
        let (a, b) = (&self.poses[i], &self.poses[i + 1]);
        let u = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        let position = a.position.lerp(&b.position, u);
        let attitude = a
            .attitude
            .try_slerp(&b.attitude, u, 1e-12)
            .unwrap_or(if u < 0.5 { a.attitude } else { b.attitude });
        (Pose::new(position, attitude), self.segment_velocity(i))
    }

    fn segment_velocity(&self, i: usize) -> Vec3 {
        (self.poses[i + 1].position - self.poses[i].position) / (self.times[i + 1] - self.times[i])
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Clock time without product rounding noise (`0.30000000000000004` → `0.3`).
fn round_time(t: f64) -> f64 {
    let r = (t * 1e9).round() / 1e9;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn xy(p: &Pose) -> ProjectedCoord {
    ProjectedCoord::new(p.position.x, p.position.y)
}

struct SensorState {
    name: String,
    spec: SensorSpec,
    stride: u64,
    mount: Pose,
    pan_tilt: PanTiltState,
    rng: ChaCha8Rng,
}

struct VehicleState {
    id: String,
    trajectory: Trajectory,
    /// Pose held after a teleport.
    held: Option<Pose>,
    current: CurrentSampler,
    sensors: Vec<SensorState>,
}

impl VehicleState {
    fn kinematics(&self, t: f64) -> (Pose, Vec3) {
        match self.held {
            Some(p) => (p, Vec3::zeros()),
            None => self.trajectory.sample(t),
        }
    }
}

struct CouplingRuntime {
    spec: CouplingSpec,
    vehicle: usize,
    plug_mount: Pose,
    receptacle: Pose,
    state: CouplingState,
    log: CouplingLog,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeleportEvent {
    pub time: f64,
    pub vehicle: String,
    pub station: String,
    pub from: Pose,
    pub to: Pose,
    pub tile_events: Vec<TileEvent>,
}

/// CSV and image files under one output directory.
pub struct OutputSink {
    dir: PathBuf,
    streams: BTreeMap<String, BufWriter<File>>,
    written: BTreeSet<String>,
}

impl OutputSink {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir,
            streams: BTreeMap::new(),
            written: BTreeSet::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Start a log file with its header lines.
    pub fn create(&mut self, name: &str, header: &str) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
        writeln!(w, "{header}").map_err(|e| Error::io(&path, e))?;
        self.streams.insert(name.to_string(), w);
        self.written.insert(name.to_string());
        Ok(())
    }

    pub fn append(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        let w = self
            .streams
            .get_mut(name)
            .ok_or_else(|| Error::io(&path, std::io::Error::other("log stream not opened")))?;
        w.write_all(text.as_bytes()).map_err(|e| Error::io(&path, e))
    }

    pub fn write_file(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.written.insert(name.to_string());
        Ok(())
    }

    /// Flush every log; returns the names of all files written, sorted.
    pub fn finish(mut self) -> Result<Vec<String>> {
        for (name, w) in self.streams.iter_mut() {
            w.flush().map_err(|e| Error::io(self.dir.join(name), e))?;
        }
        Ok(self.written.into_iter().collect())
    }
}

/// Live scenario state.
pub struct Simulation {
    clock: SimClock,
    terrain: Option<(Heightmap, TileManager)>,
    field: CurrentField,
    stations: BTreeMap<String, Pose>,
    vehicles: Vec<VehicleState>,
    couplings: Vec<CouplingRuntime>,
    /// Scheduled teleports sorted by time, and how many have fired.
    schedule: Vec<(f64, String, String)>,
    fired: usize,
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let diagnostics = cfg.validate();
        if !diagnostics.is_empty() {
            return Err(Error::InvalidScenario(diagnostics));
        }
        let terrain = match &cfg.world {
            None => None,
            Some(w) => {
                let h = load_heightmap(cfg.resolve(&w.heightmap))?;
                let layout = TileLayout::for_heightmap(&h, w.tile_size, w.overlap)?;
                let manager = TileManager::new(layout, w.load_radius, w.unload_radius())?;
                Some((h, manager))
            }
        };
        let field = cfg.current_field()?;
        let stations = cfg
            .stations
            .iter()
            .map(|s| Ok((s.name.clone(), s.pose.to_pose()?)))
            .collect::<Result<_>>()?;

        // Random streams are numbered in configuration order.
        let mut stream = 0u64;
        let mut next_stream = || {
            stream += 1;
            stream
        };
        let mut vehicles = Vec::new();
        for v in &cfg.vehicles {
            let current = field.sampler(stream_rng(cfg.seed, next_stream()).random())?;
            let mut sensors = Vec::new();
            for (i, s) in v.sensors.iter().enumerate() {
                let pan_tilt = match s {
                    SensorSpec::Lidar(l) => lidar::command_mount(PanTiltState::default(), l.pan, l.tilt).0,
                    _ => PanTiltState::default(),
                };
                sensors.push(SensorState {
                    name: s.name(i),
                    spec: s.clone(),
                    stride: super::config::stride(s.period(), cfg.dt).expect("validated period") as u64,
                    mount: s.mount().to_pose(),
                    pan_tilt,
                    rng: stream_rng(cfg.seed, next_stream()),
                });
            }
            vehicles.push(VehicleState {
                id: v.id.clone(),
                trajectory: Trajectory::new(&v.trajectory)?,
                held: None,
                current,
                sensors,
            });
        }
        let couplings = cfg
            .couplings
            .iter()
            .map(|c| {
                Ok(CouplingRuntime {
                    vehicle: vehicles.iter().position(|v| v.id == c.plug).expect("validated plug"),
                    plug_mount: c.plug_mount.to_pose(),
                    receptacle: c.receptacle.to_pose()?,
                    spec: c.clone(),
                    state: CouplingState::default(),
                    log: CouplingLog::default(),
                })
            })
            .collect::<Result<_>>()?;
        let mut schedule: Vec<_> = cfg
            .teleports
            .iter()
            .map(|t| (t.t, t.vehicle.clone(), t.station.clone()))
            .collect();
        schedule.sort_by(|a, b| a.0.total_cmp(&b.0));

        Ok(Self {
            clock: SimClock::new(cfg.dt, cfg.epoch_utc),
            terrain,
            field,
            stations,
            vehicles,
            couplings,
            schedule,
            fired: 0,
        })
    }

    pub fn clock(&self) -> &SimClock {
        &self.clock
    }

    pub fn heightmap(&self) -> Option<&Heightmap> {
        self.terrain.as_ref().map(|(h, _)| h)
    }

    pub fn tile_manager(&self) -> Option<&TileManager> {
        self.terrain.as_ref().map(|(_, m)| m)
    }

    /// Pose and world velocity of a vehicle at the current step.
    pub fn vehicle_state(&self, id: &str) -> Result<(Pose, Vec3)> {
        let v = self
            .vehicles
            .iter()
            .find(|v| v.id == id)
            .ok_or_else(|| Error::UnknownVehicle(id.to_string()))?;
        Ok(v.kinematics(self.clock.t()))
    }

    fn positions(&self) -> Vec<ProjectedCoord> {
        let t = self.clock.t();
        self.vehicles.iter().map(|v| xy(&v.kinematics(t).0)).collect()
    }

    fn update_tiles(&mut self) -> Vec<TileEvent> {
        let positions = self.positions();
        match &mut self.terrain {
            Some((_, m)) => m.update(&positions),
            None => Vec::new(),
        }
    }

    /// Move a vehicle to a station at the current step. The vehicle then holds
    /// that pose at rest, and the tile manager is updated immediately. On error
    /// nothing changes.
    pub fn teleport(&mut self, vehicle: &str, station: &str) -> Result<TeleportEvent> {
        let idx = self
            .vehicles
            .iter()
            .position(|v| v.id == vehicle)
            .ok_or_else(|| Error::UnknownVehicle(vehicle.to_string()))?;
        let to = *self
            .stations
            .get(station)
            .ok_or_else(|| Error::UnknownStation(station.to_string()))?;
        let from = self.vehicles[idx].kinematics(self.clock.t()).0;
        self.vehicles[idx].held = Some(to);
        Ok(TeleportEvent {
            time: self.clock.t(),
            vehicle: vehicle.to_string(),
            station: station.to_string(),
            from,
            to,
            tile_events: self.update_tiles(),
        })
    }

    /// Open the log files this scenario will write.
    pub fn open_logs(&self, out: &mut OutputSink) -> Result<()> {
        if !self.schedule.is_empty() {
            out.create("teleports.csv", "time,vehicle,station,x,y,z")?;
        }
        if self.terrain.is_some() && !self.vehicles.is_empty() {
            out.create("tile_events.csv", "time,event,row,col")?;
        }
        for v in &self.vehicles {
            out.create(&format!("{}_pose.csv", v.id), "time,x,y,z,vx,vy,vz")?;
            for s in &v.sensors {
                let file = format!("{}_{}.csv", v.id, s.name);
                match &s.spec {
                    SensorSpec::Dvl(_) => out.create(&file, DvlSolution::csv_header())?,
                    SensorSpec::Adcp(a) => out.create(
                        &file,
                        &format!("{}\n{}", AdcpProfile::csv_metadata_for(&a.config), AdcpProfile::csv_header()),
                    )?,
                    SensorSpec::Sonar(_) => out.create(&file, "time,ping,scatterers,peak_intensity,image")?,
                    SensorSpec::Lidar(_) => out.create(&file, "time,scan,points,pan,tilt,cloud")?,
                }
            }
        }
        Ok(())
    }

    /// Run the current step, then advance the clock.
    pub fn step(&mut self, out: &mut OutputSink) -> Result<()> {
        let n = self.clock.step;
        let t = self.clock.t();
        let ts = round_time(t);

        while self.fired < self.schedule.len() && self.schedule[self.fired].0 <= t + TIME_EPS {
            let (_, vehicle, station) = self.schedule[self.fired].clone();
            self.fired += 1;
            let ev = self.teleport(&vehicle, &station)?;
            let p = ev.to.position;
            out.append("teleports.csv", &format!("{ts},{vehicle},{station},{},{},{}\n", p.x, p.y, p.z))?;
            log_tile_events(out, ts, &ev.tile_events)?;
        }
        let events = self.update_tiles();
        if self.terrain.is_some() {
            log_tile_events(out, ts, &events)?;
        }

        if n > 0 {
            for v in &mut self.vehicles {
                v.current.step(self.clock.dt)?;
            }
        }
        let tide = self.field.tide.direction() * tidal_speed(&self.field.tide, self.clock.utc())?;

        let Simulation {
            vehicles,
            terrain,
            field,
            ..
        } = self;
        let scene: Box<dyn Scene> = match terrain {
            Some((h, m)) => Box::new(LoadedTerrain::new(h, m)),
            None => Box::new(EmptyScene),
        };
        for v in vehicles.iter_mut() {
            let (pose, vel) = v.kinematics(t);
            let p = pose.position;
            out.append(
                &format!("{}_pose.csv", v.id),
                &format!("{ts},{},{},{},{},{},{}\n", p.x, p.y, p.z, vel.x, vel.y, vel.z),
            )?;
            let delta = v.current.state.delta_v;
            let current = |depth: f64| ned_to_world(field.db.interpolate(depth) + tide + delta);
            for s in v.sensors.iter_mut() {
                if n % s.stride != 0 {
                    continue;
                }
                let k = n / s.stride;
                let st = round_time(k as f64 * s.spec.period());
                let file = format!("{}_{}", v.id, s.name);
                let sensor_pose = pose.compose(&s.mount);
                match &s.spec {
                    SensorSpec::Dvl(d) => {
                        let sol = dvl::measure(&sensor_pose, &vel, scene.as_ref(), current, &d.config, &mut s.rng);
                        out.append(&format!("{file}.csv"), &format!("{}\n", sol.csv_row(st)))?;
                    }
                    SensorSpec::Adcp(d) => {
                        let prof = dvl::current_profile(&sensor_pose, &vel, current, &d.config, &mut s.rng)?;
                        out.append(&format!("{file}.csv"), &prof.csv_rows(st))?;
                    }
                    SensorSpec::Sonar(sp) => {
                        let scat = sonar::gather_scatterers(&sensor_pose, scene.as_ref(), &sp.config, &mut s.rng);
                        let aplot = sonar::aplot_from_scatterers(&scat, &sp.config);
                        let image = format!("{file}_{k:05}.pgm");
                        out.write_file(&image, &sonar::aplot_to_pgm(&aplot, sp.dynamic_range_db))?;
                        if sp.export_csv {
                            out.write_file(&format!("{file}_{k:05}.csv"), sonar::aplot_to_csv(&aplot).as_bytes())?;
                        }
                        out.append(
                            &format!("{file}.csv"),
                            &format!("{st},{k},{},{},{image}\n", scat.len(), aplot.max()),
                        )?;
                    }
                    SensorSpec::Lidar(l) => {
                        let cloud = lidar::scan(&sensor_pose, &s.pan_tilt, scene.as_ref(), &l.config, &mut s.rng)?;
                        let name = format!("{file}_{k:05}.ply");
                        out.write_file(&name, cloud.to_ply().as_bytes())?;
                        out.append(
                            &format!("{file}.csv"),
                            &format!("{st},{k},{},{},{},{name}\n", cloud.len(), s.pan_tilt.pan, s.pan_tilt.tilt),
                        )?;
                    }
                }
            }
        }
        drop(scene);

        for c in &mut self.couplings {
            let (pose, _) = self.vehicles[c.vehicle].kinematics(t);
            let rel = pose.compose(&c.plug_mount).relative_to(&c.receptacle);
            let outcome = coupling::step(&c.state, &rel, &c.spec.force_at(t), self.clock.dt, &c.spec.config)?;
            c.state = outcome.state;
            c.log.record(ts, &outcome);
        }

        self.clock.advance();
        Ok(())
    }

    /// Write coupling logs; call once after the last step.
    pub fn close_logs(&self, out: &mut OutputSink) -> Result<()> {
        for c in &self.couplings {
            out.write_file(&format!("coupling_{}.csv", c.spec.name), c.log.to_csv().as_bytes())?;
        }
        Ok(())
    }

    pub fn coupling_log(&self, name: &str) -> Option<&CouplingLog> {
        self.couplings.iter().find(|c| c.spec.name == name).map(|c| &c.log)
    }
}

fn log_tile_events(out: &mut OutputSink, ts: f64, events: &[TileEvent]) -> Result<()> {
    let mut s = String::new();
    for e in events {
        let (kind, idx) = match e {
            TileEvent::Load(i) => ("load", i),
            TileEvent::Unload(i) => ("unload", i),
        };
        let _ = writeln!(s, "{ts},{kind},{},{}", idx.row, idx.col);
    }
    if s.is_empty() {
        Ok(())
    } else {
        out.append("tile_events.csv", &s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub kernel: String,
    pub kernel_version: String,
    pub schema_version: u32,
    pub config_sha256: String,
    pub seed: u64,
    pub duration: f64,
    pub dt: f64,
    pub steps: u64,
    pub epoch_utc: f64,
    pub outputs: Vec<OutputEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Run a scenario to completion, writing every log, image and cloud plus
/// `manifest.json` into `out_dir`.
pub fn run(cfg: &ScenarioConfig, out_dir: impl AsRef<Path>) -> Result<RunManifest> {
    let mut sim = Simulation::new(cfg)?;
    let mut out = OutputSink::new(out_dir)?;
    sim.open_logs(&mut out)?;
    let steps = cfg.steps();
    for _ in 0..=steps {
        sim.step(&mut out)?;
    }
    sim.close_logs(&mut out)?;
    let dir = out.dir().to_path_buf();
    let outputs = out
        .finish()?
        .into_iter()
        .map(|file| {
            let path = dir.join(&file);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            Ok(OutputEntry {
                sha256: sha256_hex(&bytes),
                file,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        kernel: env!("CARGO_PKG_NAME").to_string(),
        kernel_version: env!("CARGO_PKG_VERSION").to_string(),
        schema_version: SCHEMA_VERSION,
        config_sha256: sha256_hex(cfg.source.as_bytes()),
        seed: cfg.seed,
        duration: cfg.duration,
        dt: cfg.dt,
        steps,
        epoch_utc: cfg.epoch_utc,
        outputs,
    };
    let path = dir.join("manifest.json");
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
