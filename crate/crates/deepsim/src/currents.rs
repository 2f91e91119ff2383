//! Depth-stratified ocean currents with tides and a first-order Gauss-Markov
//! perturbation.
//!
//! Velocities in this module are NED: `(north, east, down)` in m/s. Use
//! [`ned_to_world`] to get the kernel's east-north-up world frame.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesy::ProjectedCoord;
use crate::scene::Vec3;

/// NED vector to east-north-up.
pub fn ned_to_world(v: Vec3) -> Vec3 {
    Vec3::new(v.y, v.x, -v.z)
}

/// East-north-up vector to NED.
pub fn world_to_ned(v: Vec3) -> Vec3 {
    Vec3::new(v.y, v.x, -v.z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    /// Meters, positive down.
    pub depth: f64,
    /// NED, m/s.
    pub velocity: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Stratum>", into = "Vec<Stratum>")]
pub struct StratifiedCurrentDB {
    strata: Vec<Stratum>,
}

impl StratifiedCurrentDB {
    pub fn new(strata: Vec<Stratum>) -> Result<Self> {
        if strata.is_empty() {
            return Err(Error::InvalidCurrents("at least one stratum required".into()));
        }
        if strata.windows(2).any(|w| !(w[1].depth > w[0].depth)) {
            return Err(Error::InvalidCurrents("stratum depths must be strictly increasing".into()));
        }
        if strata.iter().any(|s| !s.depth.is_finite() || s.velocity.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidCurrents("non-finite stratum".into()));
        }
        Ok(Self { strata })
    }

    /// Single stratum: the same velocity at every depth.
    pub fn uniform(velocity: [f64; 3]) -> Self {
        Self {
            strata: vec![Stratum { depth: 0.0, velocity }],
        }
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    /// Piecewise-linear in depth, held constant beyond the first and last strata.
    pub fn interpolate(&self, depth: f64) -> Vec3 {
        let s = &self.strata;
        let first = &s[0];
        let last = &s[s.len() - 1];
        if depth <= first.depth {
            return Vec3::from(first.velocity);
        }
        if depth >= last.depth {
            return Vec3::from(last.velocity);
        }
        let k = s.partition_point(|st| st.depth <= depth);
        let (a, b) = (&s[k - 1], &s[k]);
        if depth == a.depth {
            return Vec3::from(a.velocity);
        }
        let w = (depth - a.depth) / (b.depth - a.depth);
        Vec3::from(a.velocity) * (1.0 - w) + Vec3::from(b.velocity) * w
    }
}

impl TryFrom<Vec<Stratum>> for StratifiedCurrentDB {
    type Error = Error;
    fn try_from(v: Vec<Stratum>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<StratifiedCurrentDB> for Vec<Stratum> {
    fn from(db: StratifiedCurrentDB) -> Self {
        db.strata
    }
}

pub fn interpolate_current(db: &StratifiedCurrentDB, depth: f64) -> Vec3 {
    db.interpolate(depth)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constituent {
    /// m/s
    pub amplitude: f64,
    /// seconds
    pub period: f64,
    /// radians
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TideSample {
    pub epoch_time: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TideSource {
    Constituents(Vec<Constituent>),
    TimeSeries(Vec<TideSample>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TidalModel {
    pub source: TideSource,
    /// Flood direction, radians clockwise from north.
    pub heading: f64,
}

impl TidalModel {
    pub fn none() -> Self {
        Self {
            source: TideSource::Constituents(Vec::new()),
            heading: 0.0,
        }
    }

    pub fn constituents(list: Vec<Constituent>, heading: f64) -> Result<Self> {
        let m = Self {
            source: TideSource::Constituents(list),
            heading,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn series(samples: Vec<TideSample>, heading: f64) -> Result<Self> {
        let m = Self {
            source: TideSource::TimeSeries(samples),
            heading,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.source {
            TideSource::Constituents(cs) => {
                if cs.iter().any(|c| !(c.period > 0.0)) {
                    return Err(Error::InvalidCurrents("tidal periods must be positive".into()));
                }
            }
            TideSource::TimeSeries(s) => {
                if s.is_empty() {
                    return Err(Error::InvalidCurrents("empty tidal series".into()));
                }
                if s.windows(2).any(|w| !(w[1].epoch_time > w[0].epoch_time)) {
                    return Err(Error::InvalidCurrents("tidal series times must be strictly increasing".into()));
                }
            }
        }
        Ok(())
    }

    /// `(start, end)` of a time series, `None` for constituents.
    pub fn span(&self) -> Option<(f64, f64)> {
        match &self.source {
            TideSource::TimeSeries(s) => Some((s[0].epoch_time, s[s.len() - 1].epoch_time)),
            TideSource::Constituents(_) => None,
        }
    }

    /// Horizontal unit vector of flood flow, NED.
    pub fn direction(&self) -> Vec3 {
        Vec3::new(self.heading.cos(), self.heading.sin(), 0.0)
    }
}

/// Signed tidal speed at UTC `time` (seconds); positive along the flood heading.
pub fn tidal_speed(model: &TidalModel, time: f64) -> Result<f64> {
    match &model.source {
        TideSource::Constituents(cs) => Ok(cs
            .iter()
            .map(|c| c.amplitude * (TAU * time / c.period + c.phase).cos())
            .sum()),
        TideSource::TimeSeries(s) => {
            let (start, end) = (s[0].epoch_time, s[s.len() - 1].epoch_time);
            if !(time >= start && time <= end) {
                return Err(Error::TideOutOfSpan { time, start, end });
            }
            let k = s.partition_point(|p| p.epoch_time <= time);
            if k == s.len() {
                return Ok(s[k - 1].speed);
            }
            let (a, b) = (&s[k - 1], &s[k]);
            let w = (time - a.epoch_time) / (b.epoch_time - a.epoch_time);
            Ok(a.speed + w * (b.speed - a.speed))
        }
    }
}

/// Read `epoch_seconds,speed_mps` rows; a non-numeric first line is a header.
pub fn load_tide_series(path: impl AsRef<Path>) -> Result<Vec<TideSample>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (Some(t), Some(v)) = (cols.next(), cols.next()) else {
            return Err(Error::parse(path, i + 1, "expected two columns"));
        };
        match (t.parse::<f64>(), v.parse::<f64>()) {
            (Ok(t), Ok(v)) => out.push(TideSample { epoch_time: t, speed: v }),
            _ if i == 0 => continue,
            _ => return Err(Error::parse(path, i + 1, format!("bad row '{line}'"))),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussMarkovParams {
    /// Inverse correlation time, 1/s. Zero gives a random walk.
    pub mu: f64,
    /// Noise intensity, m/s per √s.
    pub sigma: f64,
    /// Componentwise saturation, m/s.
    pub bound: f64,
}

impl Default for GaussMarkovParams {
    fn default() -> Self {
        Self {
            mu: 0.0,
            sigma: 0.0,
            bound: 1.0,
        }
    }
}

/// Perturbation `δv` obeying `dδv/dt + μ·δv = ω`, stepped with the exact
/// Ornstein-Uhlenbeck transition so any `dt` is stable.
#[derive(Debug, Clone)]
pub struct GaussMarkovState {
    pub delta_v: Vec3,
    pub params: GaussMarkovParams,
    rng: ChaCha8Rng,
}

impl GaussMarkovState {
    pub fn new(params: GaussMarkovParams, seed: u64) -> Result<Self> {
        if !(params.mu >= 0.0) || !(params.sigma >= 0.0) || !(params.bound >= 0.0) {
            return Err(Error::InvalidCurrents(format!(
                "Gauss-Markov parameters must be non-negative: {params:?}"
            )));
        }
        Ok(Self {
            delta_v: Vec3::zeros(),
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn with_delta(mut self, delta_v: Vec3) -> Self {
        self.delta_v = delta_v;
        self
    }

    pub fn step(&mut self, dt: f64) -> Result<Vec3> {
        if !(dt > 0.0) {
            return Err(Error::NonPositiveDt(dt));
        }
        let GaussMarkovParams { mu, sigma, bound } = self.params;
        let (decay, sd) = if mu > 0.0 {
            let decay = (-mu * dt).exp();
            // (1 - e^{-2μdt}) / 2μ, written with expm1 for small μ·dt.
            let var = -(-2.0 * mu * dt).exp_m1() / (2.0 * mu);
            (decay, sigma * var.sqrt())
        } else {
            (1.0, sigma * dt.sqrt())
        };
        for k in 0..3 {
            let noise = if sd > 0.0 {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                sd * z
            } else {
                0.0
            };
            self.delta_v[k] = (decay * self.delta_v[k] + noise).clamp(-bound, bound);
        }
        Ok(self.delta_v)
    }
}

pub fn gm_step(state: &mut GaussMarkovState, dt: f64) -> Result<Vec3> {
    state.step(dt)
}

/// Shared mean field: stratified database plus tide.
#[derive(Debug, Clone)]
pub struct CurrentField {
    pub db: StratifiedCurrentDB,
    pub tide: TidalModel,
    pub gauss_markov: GaussMarkovParams,
    /// UTC seconds at simulation time zero.
    pub epoch_utc: f64,
}

impl CurrentField {
    pub fn new(db: StratifiedCurrentDB, tide: TidalModel, gauss_markov: GaussMarkovParams) -> Self {
        Self {
            db,
            tide,
            gauss_markov,
            epoch_utc: 0.0,
        }
    }

    pub fn still() -> Self {
        Self::new(
            StratifiedCurrentDB::uniform([0.0; 3]),
            TidalModel::none(),
            GaussMarkovParams::default(),
        )
    }

    /// Mean current (no perturbation) at `depth` and simulation time `time`, NED.
    pub fn mean_at(&self, depth: f64, time: f64) -> Result<Vec3> {
        let tide = tidal_speed(&self.tide, self.epoch_utc + time)?;
        Ok(self.db.interpolate(depth) + self.tide.direction() * tide)
    }

    pub fn sampler(&self, seed: u64) -> Result<CurrentSampler> {
        Ok(CurrentSampler {
            state: GaussMarkovState::new(self.gauss_markov, seed)?,
        })
    }
}

/// Per-vehicle (or per-sensor) view of the field owning its own perturbation.
#[derive(Debug, Clone)]
pub struct CurrentSampler {
    pub state: GaussMarkovState,
}

impl CurrentSampler {
    pub fn step(&mut self, dt: f64) -> Result<Vec3> {
        self.state.step(dt)
    }

    /// Full current (mean + perturbation) at a position, NED.
    pub fn current_at(&self, field: &CurrentField, _position: ProjectedCoord, depth: f64, time: f64) -> Result<Vec3> {
        Ok(field.mean_at(depth, time)? + self.state.delta_v)
    }
}

pub fn current_at(
    field: &CurrentField,
    sampler: &CurrentSampler,
    position: ProjectedCoord,
    depth: f64,
    time: f64,
) -> Result<Vec3> {
    sampler.current_at(field, position, depth, time)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_strata() -> StratifiedCurrentDB {
        StratifiedCurrentDB::new(vec![
            Stratum { depth: 0.0, velocity: [1.0, 0.0, 0.0] },
            Stratum { depth: 100.0, velocity: [0.0, 0.0, 0.0] },
        ])
        .unwrap()
    }

    #[test]
    fn interpolation_midpoint_clamp_and_nodes() {
        let db = two_strata();
        assert_eq!(db.interpolate(50.0), Vec3::new(0.5, 0.0, 0.0));
        assert_eq!(db.interpolate(200.0), Vec3::zeros());
        assert_eq!(db.interpolate(-5.0), Vec3::new(1.0, 0.0, 0.0));
        let db = StratifiedCurrentDB::new(vec![
            Stratum { depth: 0.0, velocity: [0.1, 0.2, 0.3] },
            Stratum { depth: 7.3, velocity: [0.7, -0.1, 0.0] },
            Stratum { depth: 40.0, velocity: [0.0, 0.9, 0.01] },
        ])
        .unwrap();
        assert_eq!(db.interpolate(7.3), Vec3::new(0.7, -0.1, 0.0));
        assert_eq!(db.interpolate(40.0), Vec3::new(0.0, 0.9, 0.01));
    }

    #[test]
    fn db_validation() {
        assert!(StratifiedCurrentDB::new(vec![]).is_err());
        let dup = vec![
            Stratum { depth: 5.0, velocity: [0.0; 3] },
            Stratum { depth: 5.0, velocity: [0.0; 3] },
        ];
        assert!(StratifiedCurrentDB::new(dup).is_err());
    }

    #[test]
    fn gm_decay_without_noise() {
        let p = GaussMarkovParams { mu: 0.1, sigma: 0.0, bound: 10.0 };
        let mut s = GaussMarkovState::new(p, 0).unwrap().with_delta(Vec3::new(1.0, 0.0, 0.0));
        for k in 1..=50 {
            s.step(1.0).unwrap();
            let expected = (-0.1 * k as f64).exp();
            assert!((s.delta_v.x - expected).abs() < 1e-12);
            assert_eq!((s.delta_v.y, s.delta_v.z), (0.0, 0.0));
        }
    }

    #[test]
    fn gm_frozen_when_mu_and_sigma_zero() {
        let p = GaussMarkovParams { mu: 0.0, sigma: 0.0, bound: 1.0 };
        let mut s = GaussMarkovState::new(p, 3).unwrap().with_delta(Vec3::new(0.3, -0.2, 0.1));
        for _ in 0..1000 {
            s.step(0.5).unwrap();
        }
        assert_eq!(s.delta_v, Vec3::new(0.3, -0.2, 0.1));
    }

    #[test]
    fn gm_rejects_bad_dt_and_params() {
        let mut s = GaussMarkovState::new(GaussMarkovParams::default(), 0).unwrap();
        assert!(matches!(s.step(0.0), Err(Error::NonPositiveDt(_))));
        assert!(GaussMarkovState::new(GaussMarkovParams { mu: -1.0, sigma: 0.0, bound: 1.0 }, 0).is_err());
    }

    #[test]
    fn gm_saturates() {
        let p = GaussMarkovParams { mu: 0.0, sigma: 5.0, bound: 0.2 };
        let mut s = GaussMarkovState::new(p, 11).unwrap();
        for _ in 0..1000 {
            let v = s.step(1.0).unwrap();
            assert!(v.amax() <= 0.2);
        }
    }

    #[test]
    fn gm_same_seed_same_history() {
        let p = GaussMarkovParams { mu: 0.3, sigma: 0.1, bound: 1.0 };
        let mut a = GaussMarkovState::new(p, 5).unwrap();
        let mut b = GaussMarkovState::new(p, 5).unwrap();
        let mut c = GaussMarkovState::new(p, 6).unwrap();
        let mut differs = false;
        for _ in 0..100 {
            let (va, vb, vc) = (a.step(0.2).unwrap(), b.step(0.2).unwrap(), c.step(0.2).unwrap());
            assert_eq!(va, vb);
            differs |= va != vc;
        }
        assert!(differs);
    }

    #[test]
    fn tide_constituent_and_series() {
        let period = 12.42 * 3600.0;
        let m = TidalModel::constituents(vec![Constituent { amplitude: 1.0, period, phase: 0.0 }], 0.0).unwrap();
        assert_eq!(tidal_speed(&m, 0.0).unwrap(), 1.0);
        assert!((tidal_speed(&m, period / 2.0).unwrap() + 1.0).abs() < 1e-12);

        let s = TidalModel::series(
            vec![TideSample { epoch_time: 0.0, speed: 0.0 }, TideSample { epoch_time: 100.0, speed: 2.0 }],
            0.0,
        )
        .unwrap();
        assert_eq!(tidal_speed(&s, 25.0).unwrap(), 0.5);
        assert_eq!(tidal_speed(&s, 100.0).unwrap(), 2.0);
        assert!(matches!(tidal_speed(&s, 101.0), Err(Error::TideOutOfSpan { .. })));
        assert!(TidalModel::constituents(vec![Constituent { amplitude: 1.0, period: 0.0, phase: 0.0 }], 0.0).is_err());
    }

    #[test]
    fn tide_is_periodic_over_common_period() {
        // Periods 3 h and 4 h share a 12 h cycle.
        let m = TidalModel::constituents(
            vec![
                Constituent { amplitude: 0.7, period: 3.0 * 3600.0, phase: 0.4 },
                Constituent { amplitude: 0.2, period: 4.0 * 3600.0, phase: -1.1 },
            ],
            0.0,
        )
        .unwrap();
        for t in [0.0, 1234.5, 7777.0, 40_000.0] {
            let a = tidal_speed(&m, t).unwrap();
            let b = tidal_speed(&m, t + 12.0 * 3600.0).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn field_composition() {
        let zero = CurrentField::still();
        let s = zero.sampler(1).unwrap();
        for (d, t) in [(0.0, 0.0), (50.0, 100.0), (1e4, 1e6)] {
            assert_eq!(s.current_at(&zero, ProjectedCoord::new(0.0, 0.0), d, t).unwrap(), Vec3::zeros());
        }
        let tide = TidalModel::constituents(vec![Constituent { amplitude: 1.0, period: 44_712.0, phase: 0.0 }], 0.0).unwrap();
        let field = CurrentField::new(two_strata(), tide, GaussMarkovParams::default());
        let s = field.sampler(1).unwrap();
        let v = current_at(&field, &s, ProjectedCoord::new(0.0, 0.0), 50.0, 0.0).unwrap();
        assert!((v - Vec3::new(1.5, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn independent_samplers() {
        let field = CurrentField::new(
            two_strata(),
            TidalModel::none(),
            GaussMarkovParams { mu: 0.2, sigma: 0.05, bound: 1.0 },
        );
        let mut a = field.sampler(1).unwrap();
        let mut b = field.sampler(2).unwrap();
        a.step(1.0).unwrap();
        b.step(1.0).unwrap();
        assert_ne!(a.state.delta_v, b.state.delta_v);
        assert_eq!(field.mean_at(30.0, 5.0).unwrap(), field.mean_at(30.0, 5.0).unwrap());
    }

    #[test]
    fn frame_conversions() {
        let ned = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(ned_to_world(ned), Vec3::new(2.0, 1.0, -3.0));
        assert_eq!(world_to_ned(ned_to_world(ned)), ned);
    }

    #[test]
    fn tide_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tide.csv");
        fs::write(&p, "epoch_seconds,speed_mps\n0,0.1\n60,0.3\n").unwrap();
        let s = load_tide_series(&p).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].speed, 0.3);
        fs::write(&p, "0,0.1\n60,x\n").unwrap();
        assert!(matches!(load_tide_series(&p), Err(Error::Parse { line: 2, .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn interpolation_is_continuous(d in 0.0f64..100.0, eps in 1e-9f64..1e-6) {
                let db = two_strata();
                prop_assert!((db.interpolate(d + eps) - db.interpolate(d)).norm() < 1e-5);
            }

            #[test]
            fn noise_free_gm_contracts(mu in 0.01f64..2.0, dt in 0.01f64..5.0, x in -1.0f64..1.0, y in -1.0f64..1.0) {
                prop_assume!(x != 0.0 || y != 0.0);
                let p = GaussMarkovParams { mu, sigma: 0.0, bound: 1.0 };
                let mut s = GaussMarkovState::new(p, 0).unwrap().with_delta(Vec3::new(x, y, 0.0));
                let before = s.delta_v.norm();
                s.step(dt).unwrap();
                prop_assert!(s.delta_v.norm() < before);
            }
        }
    }
}
