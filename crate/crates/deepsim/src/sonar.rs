//! Multibeam forward-looking sonar built on a coherent point-scattering model.
//!
//! Every ray that hits the scene becomes a scatterer. Each beam's echo spectrum
//! is the sum over *all* scatterers, weighted by the beam pattern at the
//! scatterer's angular offset, so strong off-axis targets leak into neighbouring
//! beams through the sidelobes. An inverse DFT turns the spectrum into an
//! intensity-versus-range trace (the A-plot row for that beam).

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{Pose, Scene, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SonarConfig {
    pub n_beams: usize,
    /// Horizontal field of view, radians.
    pub fov_h: f64,
    pub rays_per_beam: usize,
    /// Vertical ray samples per azimuth.
    pub vertical_rays: usize,
    /// Vertical field of view, radians.
    pub fov_v: f64,
    /// Hz
    pub center_freq: f64,
    /// Hz
    pub bandwidth: f64,
    pub spectral_bins: usize,
    /// m/s
    pub sound_speed: f64,
    /// Linear source amplitude.
    pub source_level: f64,
    /// Angle of the beam pattern's first null, radians.
    pub beamwidth: f64,
    pub reflectivity: f64,
    /// Meters; must stay within the unambiguous range `c·M / (2·B)`.
    pub max_range: f64,
    pub speckle_enabled: bool,
    pub window: Window,
}

impl Default for SonarConfig {
    fn default() -> Self {
        let n_beams = 128;
        let fov_h = 90f64.to_radians();
        let (sound_speed, bandwidth, spectral_bins) = (1500.0, 60e3, 512);
        Self {
            n_beams,
            fov_h,
            rays_per_beam: 3,
            vertical_rays: 5,
            fov_v: 20f64.to_radians(),
            center_freq: 900e3,
            bandwidth,
            spectral_bins,
            sound_speed,
            source_level: 1.0,
            beamwidth: 2.0 * fov_h / n_beams as f64,
            reflectivity: 0.5,
            max_range: sound_speed * spectral_bins as f64 / (2.0 * bandwidth),
            speckle_enabled: true,
            window: Window::Rectangular,
        }
    }
}

impl SonarConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_beams == 0 || self.rays_per_beam == 0 || self.vertical_rays == 0 {
            return bad("sonar needs at least one beam, ray per beam and vertical ray".into());
        }
        if !(self.bandwidth > 0.0) || !(self.sound_speed > 0.0) || !(self.center_freq > 0.0) {
            return bad("sonar frequencies and sound speed must be positive".into());
        }
        if self.spectral_bins < 2 {
            return bad("sonar needs at least 2 spectral bins".into());
        }
        if !(self.beamwidth > 0.0) || !(self.fov_h > 0.0) || !(self.fov_v >= 0.0) {
            return bad("sonar beamwidth and fields of view must be positive".into());
        }
        if !(self.max_range > 0.0) || self.max_range > self.unambiguous_range() * (1.0 + 1e-12) {
            return bad(format!(
                "sonar max range {} exceeds unambiguous range {}",
                self.max_range,
                self.unambiguous_range()
            ));
        }
        if !(self.source_level >= 0.0 && self.reflectivity >= 0.0) {
            return bad("source level and reflectivity must be non-negative".into());
        }
        Ok(())
    }

    /// `c·M / (2·B)`
    pub fn unambiguous_range(&self) -> f64 {
        self.sound_speed * self.spectral_bins as f64 / (2.0 * self.bandwidth)
    }

    /// Range spacing of A-plot samples, `c / (2·B)`.
    pub fn range_resolution(&self) -> f64 {
        self.sound_speed / (2.0 * self.bandwidth)
    }

    /// Steering angle of beam `b`, radians, positive toward +y (port).
    pub fn beam_angle(&self, b: usize) -> f64 {
        -self.fov_h / 2.0 + (b as f64 + 0.5) * self.fov_h / self.n_beams as f64
    }

    pub fn beam_angles(&self) -> Vec<f64> {
        (0..self.n_beams).map(|b| self.beam_angle(b)).collect()
    }

    pub fn frequency(&self, m: usize) -> f64 {
        self.center_freq - self.bandwidth / 2.0 + m as f64 * self.bandwidth / self.spectral_bins as f64
    }

    /// Unit ray directions in the sonar frame, azimuth-major.
    pub fn ray_directions(&self) -> Vec<Vec3> {
        let n_az = self.n_beams * self.rays_per_beam;
        let mut out = Vec::with_capacity(n_az * self.vertical_rays);
        for a in 0..n_az {
            let az = -self.fov_h / 2.0 + (a as f64 + 0.5) * self.fov_h / n_az as f64;
            for v in 0..self.vertical_rays {
                let el = -self.fov_v / 2.0 + (v as f64 + 0.5) * self.fov_v / self.vertical_rays as f64;
                out.push(Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()));
            }
        }
        out
    }
}

/// One-way beam-pattern amplitude `|sinc(π·θ/θ_b)|`.
pub fn beam_pattern(theta: f64, beamwidth: f64) -> f64 {
    let x = PI * theta / beamwidth;
    if x.abs() < 1e-12 {
        1.0
    } else {
        (x.sin() / x).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub range: f64,
    /// Angle between the ray and the surface normal, radians.
    pub incidence: f64,
    /// Ray azimuth in the sonar frame, radians.
    pub azimuth: f64,
    pub amplitude: f64,
    pub micro_phase: f64,
}

/// Cast the full ray fan and turn every hit into a scatterer with amplitude
/// `SL·Γ·cos(incidence) / range²`. Micro-phases are uniform on `[0, 2π)` when
/// speckle is enabled and drawn in ray order, so results do not depend on how
/// the raycasts were scheduled.
pub fn gather_scatterers(pose: &Pose, scene: &dyn Scene, cfg: &SonarConfig, rng: &mut impl Rng) -> Vec<Scatterer> {
    let dirs = cfg.ray_directions();
    let hits: Vec<Option<(f64, f64, f64)>> = dirs
        .par_iter()
        .map(|d| {
            let ray = pose.ray(d);
            scene.raycast(&ray, cfg.max_range).map(|h| (h.range, h.incidence(&ray), d.y.atan2(d.x)))
        })
        .collect();
    hits.into_iter()
        .flatten()
        .map(|(range, incidence, azimuth)| Scatterer {
            range,
            incidence,
            azimuth,
            amplitude: cfg.source_level * cfg.reflectivity * incidence.cos().max(0.0) / (range * range),
            micro_phase: if cfg.speckle_enabled { rng.random_range(0.0..TAU) } else { 0.0 },
        })
        .collect()
}

/// Unit phasors `exp(−j2π·f_m·2r/c + jφ)` for `m = 0..M`, by rotation with
/// periodic re-anchoring to keep rounding drift bounded.
fn phasor_row(s: &Scatterer, cfg: &SonarConfig, row: &mut [Complex64]) {
    let f0 = cfg.frequency(0);
    let df = cfg.bandwidth / cfg.spectral_bins as f64;
    let delay = 2.0 * s.range / cfg.sound_speed;
    let step = Complex64::from_polar(1.0, -TAU * df * delay);
    let mut p = Complex64::new(0.0, 0.0);
    for (m, out) in row.iter_mut().enumerate() {
        if m % 64 == 0 {
            p = Complex64::from_polar(1.0, -TAU * (f0 + m as f64 * df) * delay + s.micro_phase);
        }
        *out = p;
        p *= step;
    }
}

fn beam_weight(s: &Scatterer, beam_angle: f64, cfg: &SonarConfig) -> f64 {
    s.amplitude * beam_pattern(s.azimuth - beam_angle, cfg.beamwidth)
}

/// `S(f_m) = Σ a·B(az − θ)·exp(−j2π·f_m·2r/c + jφ)` over every scatterer.
pub fn beam_spectrum(beam_angle: f64, scatterers: &[Scatterer], cfg: &SonarConfig) -> Vec<Complex64> {
    let mut spectrum = vec![Complex64::new(0.0, 0.0); cfg.spectral_bins];
    let mut row = spectrum.clone();
    for s in scatterers {
        phasor_row(s, cfg, &mut row);
        accumulate(&mut spectrum, beam_weight(s, beam_angle, cfg), &row);
    }
    spectrum
}

fn accumulate(spectrum: &mut [Complex64], w: f64, row: &[Complex64]) {
    for (acc, p) in spectrum.iter_mut().zip(row) {
        acc.re += w * p.re;
        acc.im += w * p.im;
    }
}

/// Spectra for all beams. Phasors are shared across beams a block of
/// scatterers at a time; every beam still sums scatterers in input order, so
/// the result equals [`beam_spectrum`] bit for bit.
pub fn beam_spectra(beam_angles: &[f64], scatterers: &[Scatterer], cfg: &SonarConfig) -> Vec<Vec<Complex64>> {
    const BLOCK: usize = 256;
    let m_bins = cfg.spectral_bins;
    let mut spectra = vec![vec![Complex64::new(0.0, 0.0); m_bins]; beam_angles.len()];
    let mut table = vec![Complex64::new(0.0, 0.0); BLOCK * m_bins];
    for block in scatterers.chunks(BLOCK) {
        table[..block.len() * m_bins]
            .par_chunks_mut(m_bins)
            .zip(block.par_iter())
            .for_each(|(row, s)| phasor_row(s, cfg, row));
        spectra.par_iter_mut().zip(beam_angles.par_iter()).for_each(|(spectrum, &angle)| {
            for (s, row) in block.iter().zip(table.chunks(m_bins)) {
                accumulate(spectrum, beam_weight(s, angle, cfg), row);
            }
        });
    }
    spectra
}

fn window_weights(window: Window, m: usize) -> Option<Vec<f64>> {
    match window {
        Window::Rectangular => None,
        Window::Hann => Some(
            (0..m)
                .map(|k| 0.5 - 0.5 * (TAU * k as f64 / (m - 1) as f64).cos())
                .collect(),
        ),
    }
}

fn intensity_with(plan: &Arc<dyn Fft<f64>>, weights: Option<&[f64]>, mut spectrum: Vec<Complex64>) -> Vec<f64> {
    if let Some(w) = weights {
        for (s, w) in spectrum.iter_mut().zip(w) {
            *s *= *w;
        }
    }
    plan.process(&mut spectrum);
    let scale = 1.0 / spectrum.len() as f64;
    spectrum.iter().map(|c| (c * scale).norm_sqr()).collect()
}

/// Inverse DFT (scaled by `1/M`) of the optionally windowed spectrum; sample `k`
/// is `|x_k|²` at range `c·k / (2·B)`.
pub fn beam_intensity(spectrum: &[Complex64], cfg: &SonarConfig) -> Vec<f64> {
    let plan = FftPlanner::new().plan_fft_inverse(spectrum.len());
    let weights = window_weights(cfg.window, spectrum.len());
    intensity_with(&plan, weights.as_deref(), spectrum.to_vec())
}

/// Beam-by-range intensity grid.
#[derive(Debug, Clone, PartialEq)]
pub struct APlot {
    n_beams: usize,
    n_ranges: usize,
    /// Row-major, one row per beam.
    intensities: Vec<f64>,
    pub range_axis: Vec<f64>,
    pub beam_axis: Vec<f64>,
}

impl APlot {
    pub fn new(range_axis: Vec<f64>, beam_axis: Vec<f64>, intensities: Vec<f64>) -> Result<Self> {
        let (n_beams, n_ranges) = (beam_axis.len(), range_axis.len());
        if intensities.len() != n_beams * n_ranges {
            return Err(Error::DimensionMismatch {
                expected: n_beams * n_ranges,
                found: intensities.len(),
            });
        }
        if intensities.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidConfig("A-plot intensities must be non-negative".into()));
        }
        Ok(Self {
            n_beams,
            n_ranges,
            intensities,
            range_axis,
            beam_axis,
        })
    }

    pub fn zeros(cfg: &SonarConfig) -> Self {
        Self {
            n_beams: cfg.n_beams,
            n_ranges: cfg.spectral_bins,
            intensities: vec![0.0; cfg.n_beams * cfg.spectral_bins],
            range_axis: range_axis(cfg),
            beam_axis: cfg.beam_angles(),
        }
    }

    pub fn n_beams(&self) -> usize {
        self.n_beams
    }

    pub fn n_ranges(&self) -> usize {
        self.n_ranges
    }

    pub fn beam(&self, b: usize) -> &[f64] {
        &self.intensities[b * self.n_ranges..(b + 1) * self.n_ranges]
    }

    pub fn get(&self, beam: usize, range_bin: usize) -> f64 {
        self.intensities[beam * self.n_ranges + range_bin]
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn max(&self) -> f64 {
        self.intensities.iter().copied().fold(0.0, f64::max)
    }

    /// Range bin of the strongest return in each beam (`None` for silent beams).
    pub fn peak_bins(&self) -> Vec<Option<usize>> {
        (0..self.n_beams)
            .map(|b| {
                let row = self.beam(b);
                let (k, v) = row
                    .iter()
                    .enumerate()
                    .fold((0, 0.0), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
                (v > 0.0).then_some(k)
            })
            .collect()
    }
}

fn range_axis(cfg: &SonarConfig) -> Vec<f64> {
    (0..cfg.spectral_bins).map(|k| k as f64 * cfg.range_resolution()).collect()
}

/// One ping: gather scatterers once, then compute every beam in parallel.
pub fn ping(pose: &Pose, scene: &dyn Scene, cfg: &SonarConfig, rng: &mut impl Rng) -> Result<APlot> {
    cfg.validate()?;
    let scatterers = gather_scatterers(pose, scene, cfg, rng);
    Ok(aplot_from_scatterers(&scatterers, cfg))
}

pub fn aplot_from_scatterers(scatterers: &[Scatterer], cfg: &SonarConfig) -> APlot {
    if scatterers.is_empty() {
        return APlot::zeros(cfg);
    }
    let plan = FftPlanner::new().plan_fft_inverse(cfg.spectral_bins);
    let weights = window_weights(cfg.window, cfg.spectral_bins);
    let beam_axis = cfg.beam_angles();
    let rows: Vec<Vec<f64>> = beam_spectra(&beam_axis, scatterers, cfg)
        .into_par_iter()
        .map(|spectrum| intensity_with(&plan, weights.as_deref(), spectrum))
        .collect();
    APlot {
        n_beams: cfg.n_beams,
        n_ranges: cfg.spectral_bins,
        intensities: rows.concat(),
        range_axis: range_axis(cfg),
        beam_axis,
    }
}

/// 8-bit log-scaled grayscale, one row per beam, `dynamic_range_db` below the
/// peak mapped to black.
pub fn aplot_to_pgm(a: &APlot, dynamic_range_db: f64) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", a.n_ranges, a.n_beams).into_bytes();
    let peak = a.max();
    out.extend(a.intensities.iter().map(|&v| {
        if peak <= 0.0 || v <= 0.0 {
            return 0u8;
        }
        let db = 10.0 * (v / peak).log10();
        let level = ((db + dynamic_range_db) / dynamic_range_db).clamp(0.0, 1.0);
        (level * 255.0).round() as u8
    }));
    out
}

pub fn aplot_to_csv(a: &APlot) -> String {
    let mut s = String::from("angle_rad\\range_m");
    for r in &a.range_axis {
        let _ = write!(s, ",{r}");
    }
    s.push('\n');
    for b in 0..a.n_beams {
        let _ = write!(s, "{}", a.beam_axis[b]);
        for v in a.beam(b) {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

pub fn read_aplot_csv(path: impl AsRef<Path>) -> Result<APlot> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let parse_row = |lineno: usize, line: &str| -> Result<(f64, Vec<f64>)> {
        let mut cells = line.split(',');
        let head = cells.next().unwrap_or_default();
        let vals = cells
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::parse(path, lineno + 1, "bad number"))?;
        Ok((head.parse().unwrap_or(f64::NAN), vals))
    };
    let (i, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    let (_, range_axis) = parse_row(i, header)?;
    let mut beam_axis = Vec::new();
    let mut intensities = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (angle, row) = parse_row(i, line)?;
        if row.len() != range_axis.len() {
            return Err(Error::parse(path, i + 1, "row length differs from range axis"));
        }
        beam_axis.push(angle);
        intensities.extend(row);
    }
    APlot::new(range_axis, beam_axis, intensities)
}

/// Write `<stem>.pgm` and `<stem>.csv`; returns both paths.
pub fn export_aplot(a: &APlot, stem: impl AsRef<Path>, dynamic_range_db: f64) -> Result<(PathBuf, PathBuf)> {
    let stem = stem.as_ref();
    let pgm = stem.with_extension("pgm");
    let csv = stem.with_extension("csv");
    fs::write(&pgm, aplot_to_pgm(a, dynamic_range_db)).map_err(|e| Error::io(&pgm, e))?;
    fs::write(&csv, aplot_to_csv(a)).map_err(|e| Error::io(&csv, e))?;
    Ok((pgm, csv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{EmptyScene, Plane};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg_small() -> SonarConfig {
        SonarConfig {
            n_beams: 16,
            spectral_bins: 128,
            bandwidth: 7.5e3,
            max_range: 1500.0 * 128.0 / 15e3,
            ..SonarConfig::default()
        }
    }

    fn scatterer(range: f64, azimuth: f64, amplitude: f64) -> Scatterer {
        Scatterer {
            range,
            incidence: 0.0,
            azimuth,
            amplitude,
            micro_phase: 0.0,
        }
    }

    /// Direct O(M²) inverse DFT.
    fn brute_idft_intensity(spectrum: &[Complex64]) -> Vec<f64> {
        let m = spectrum.len();
        (0..m)
            .map(|k| {
                let x: Complex64 = spectrum
                    .iter()
                    .enumerate()
                    .map(|(n, s)| s * Complex64::from_polar(1.0, TAU * (n * k) as f64 / m as f64))
                    .sum();
                (x / m as f64).norm_sqr()
            })
            .collect()
    }

    #[test]
    fn default_config_valid() {
        let c = SonarConfig::default();
        c.validate().unwrap();
        assert!((c.unambiguous_range() - 6.4).abs() < 1e-12);
        let bad = SonarConfig { max_range: 7.0, ..c.clone() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn beam_pattern_shape() {
        assert_eq!(beam_pattern(0.0, 0.1), 1.0);
        assert!(beam_pattern(0.1, 0.1) < 1e-15);
        assert!((beam_pattern(0.05, 0.1) - 2.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn open_water_gathers_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = cfg_small();
        assert!(gather_scatterers(&Pose::level(Vec3::zeros()), &EmptyScene, &cfg, &mut rng).is_empty());
        let a = ping(&Pose::level(Vec3::zeros()), &EmptyScene, &cfg, &mut rng).unwrap();
        assert_eq!(a.max(), 0.0);
    }

    #[test]
    fn plate_normal_to_axis() {
        let cfg = SonarConfig {
            speckle_enabled: false,
            ..cfg_small()
        };
        let plate = Plane::disc(Vec3::new(10.0, 0.0, 0.0), Vec3::x(), 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = gather_scatterers(&Pose::level(Vec3::zeros()), &plate, &cfg, &mut rng);
        assert!(!s.is_empty());
        for sc in &s {
            assert!((sc.range - 10.0).abs() < 0.01);
            assert!(sc.incidence < 0.03);
            assert!((sc.amplitude - cfg.source_level * cfg.reflectivity / 100.0).abs() < 1e-3 * sc.amplitude);
            assert_eq!(sc.micro_phase, 0.0);
        }
    }

    #[test]
    fn grazing_incidence_kills_amplitude() {
        let cfg = cfg_small();
        // Plane containing the ray direction tilted by a hair.
        let plane = Plane::new(Vec3::new(0.0, 0.0, -0.5), Vec3::new(0.0, 0.0, 1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pose = Pose::from_rpy(Vec3::zeros(), 0.0, 0.0, 0.0);
        let s = gather_scatterers(&pose, &plane, &SonarConfig { fov_v: 0.2, vertical_rays: 3, ..cfg }, &mut rng);
        let shallowest = s.iter().max_by(|a, b| a.incidence.total_cmp(&b.incidence)).unwrap();
        assert!(shallowest.incidence > 80f64.to_radians());
        assert!(shallowest.amplitude < 0.2 * shallowest.range.powi(-2));
    }

    #[test]
    fn spectrum_cases() {
        let cfg = cfg_small();
        assert!(beam_spectrum(0.0, &[], &cfg).iter().all(|c| c.norm() == 0.0));
        let single = beam_spectrum(0.0, &[scatterer(3.0, 0.0, 0.7)], &cfg);
        assert!(single.iter().all(|c| (c.norm() - 0.7).abs() < 1e-12));

        // Quarter wavelength two-way apart: phasors in anti-phase at f_c.
        let r = 3.0;
        let dr = cfg.sound_speed / (4.0 * cfg.center_freq);
        let pair = [scatterer(r, 0.0, 1.0), scatterer(r + dr, 0.0, 1.0)];
        let spectrum = beam_spectrum(0.0, &pair, &cfg);
        let mc = cfg.spectral_bins / 2;
        assert!((cfg.frequency(mc) - cfg.center_freq).abs() < 1e-6);
        assert!(spectrum[mc].norm() < 1e-9);
    }

    #[test]
    fn spectrum_matches_direct_evaluation() {
        let cfg = cfg_small();
        let s = [
            Scatterer { range: 1.7, incidence: 0.1, azimuth: 0.02, amplitude: 0.3, micro_phase: 1.0 },
            Scatterer { range: 2.9, incidence: 0.4, azimuth: -0.05, amplitude: 0.8, micro_phase: 4.0 },
        ];
        let spectrum = beam_spectrum(0.01, &s, &cfg);
        for (m, got) in spectrum.iter().enumerate() {
            let f = cfg.frequency(m);
            let direct: Complex64 = s
                .iter()
                .map(|sc| {
                    let w = sc.amplitude * beam_pattern(sc.azimuth - 0.01, cfg.beamwidth);
                    Complex64::from_polar(w, -TAU * f * 2.0 * sc.range / cfg.sound_speed + sc.micro_phase)
                })
                .sum();
            assert!((got - direct).norm() < 1e-9);
        }
    }

    #[test]
    fn batched_spectra_match_single_beam() {
        let cfg = cfg_small();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s: Vec<Scatterer> = (0..600)
            .map(|_| Scatterer {
                range: rng.random_range(0.5..12.0),
                incidence: 0.0,
                azimuth: rng.random_range(-0.8..0.8),
                amplitude: rng.random_range(0.0..1.0),
                micro_phase: rng.random_range(0.0..TAU),
            })
            .collect();
        let angles = cfg.beam_angles();
        let all = beam_spectra(&angles, &s, &cfg);
        for (b, angle) in angles.iter().enumerate() {
            assert_eq!(all[b], beam_spectrum(*angle, &s, &cfg));
        }
    }

    #[test]
    fn flat_spectrum_concentrates_at_zero() {
        let cfg = cfg_small();
        let spectrum = vec![Complex64::new(1.0, 0.0); cfg.spectral_bins];
        let i = beam_intensity(&spectrum, &cfg);
        assert!((i[0] - 1.0).abs() < 1e-12);
        assert!(i[1..].iter().all(|&v| v < 1e-20));
    }

    #[test]
    fn fft_matches_brute_force_dft() {
        let cfg = cfg_small();
        let spectrum = beam_spectrum(0.0, &[scatterer(2.3, 0.0, 1.0), scatterer(0.8, 0.03, 0.4)], &cfg);
        let fast = beam_intensity(&spectrum, &cfg);
        let slow = brute_idft_intensity(&spectrum);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn two_targets_resolved() {
        let cfg = SonarConfig { speckle_enabled: false, ..cfg_small() };
        let dr = cfg.range_resolution();
        let k1 = 40;
        let r1 = k1 as f64 * dr;
        let spectrum = beam_spectrum(0.0, &[scatterer(r1, 0.0, 1.0), scatterer(r1 + 2.0 * dr, 0.0, 1.0)], &cfg);
        let i = beam_intensity(&spectrum, &cfg);
        assert!(i[k1] > 10.0 * i[k1 + 1] && i[k1 + 2] > 10.0 * i[k1 + 1]);
    }

    #[test]
    fn hann_window_lowers_sidelobes() {
        let cfg = cfg_small();
        let r = 40.5 * cfg.range_resolution();
        let spectrum = beam_spectrum(0.0, &[scatterer(r, 0.0, 1.0)], &cfg);
        let rect = beam_intensity(&spectrum, &cfg);
        let hann = beam_intensity(&spectrum, &SonarConfig { window: Window::Hann, ..cfg.clone() });
        let far = |v: &[f64]| v[60] / v.iter().copied().fold(0.0, f64::max);
        assert!(far(&hann) < far(&rect));
    }

    #[test]
    fn linearity() {
        let cfg = cfg_small();
        let s = vec![scatterer(2.0, 0.01, 0.5), scatterer(3.3, -0.1, 0.2)];
        let doubled: Vec<Scatterer> = s.iter().map(|x| Scatterer { amplitude: 2.0 * x.amplitude, ..*x }).collect();
        let a = aplot_from_scatterers(&s, &cfg);
        let b = aplot_from_scatterers(&doubled, &cfg);
        for (x, y) in a.intensities().iter().zip(b.intensities()) {
            assert!((4.0 * x - y).abs() <= 1e-12 * y.max(1e-30));
        }
    }

    #[test]
    fn pgm_black_and_white() {
        let cfg = cfg_small();
        let mut a = APlot::zeros(&cfg);
        let pgm = aplot_to_pgm(&a, 60.0);
        let header = format!("P5\n{} {}\n255\n", cfg.spectral_bins, cfg.n_beams);
        assert!(pgm.starts_with(header.as_bytes()));
        assert!(pgm[header.len()..].iter().all(|&p| p == 0));
        a.intensities[5 * cfg.spectral_bins + 7] = 3.0;
        let pgm = aplot_to_pgm(&a, 60.0);
        let body = &pgm[header.len()..];
        assert_eq!(body.iter().filter(|&&p| p == 255).count(), 1);
        assert_eq!(body[5 * cfg.spectral_bins + 7], 255);
        assert_eq!(body.iter().filter(|&&p| p != 0).count(), 1);
    }

    #[test]
    fn csv_round_trip() {
        let cfg = cfg_small();
        let s = vec![scatterer(2.0, 0.01, 0.5), scatterer(3.3, -0.1, 0.2)];
        let a = aplot_from_scatterers(&s, &cfg);
        let dir = tempfile::tempdir().unwrap();
        let (pgm, csv) = export_aplot(&a, dir.path().join("ping"), 60.0).unwrap();
        assert!(pgm.exists());
        let back = read_aplot_csv(csv).unwrap();
        assert_eq!(back, a);
    }
}
