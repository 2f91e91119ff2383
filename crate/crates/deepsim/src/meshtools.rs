//! Triangle meshes and reproducible geometric distortion.
//!
//! Distortion is midpoint subdivision (shape-preserving) followed by bounded
//! uniform vertex jitter whose amplitude is `extent · scale`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scene::{Ray, RayHit, Scene, Vec3};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    /// Optional per-vertex RGB in [0, 1].
    pub colors: Option<Vec<[f64; 3]>>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Self {
        Self {
            vertices,
            triangles,
            colors: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let len = self.vertices.len();
        for tri in &self.triangles {
            if let Some(&index) = tri.iter().find(|&&i| i >= len) {
                return Err(Error::InvalidIndex { index, len });
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateTriangle(*tri));
            }
        }
        if let Some(c) = &self.colors {
            if c.len() != len {
                return Err(Error::InvalidConfig(format!(
                    "{} colors for {} vertices",
                    c.len(),
                    len
                )));
            }
        }
        Ok(())
    }

    pub fn surface_area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| self.vertices[i]);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .sum()
    }

    /// Length of the axis-aligned bounding box diagonal.
    pub fn bbox_diagonal(&self) -> f64 {
        let Some(first) = self.vertices.first() else {
            return 0.0;
        };
        let (lo, hi) = self
            .vertices
            .iter()
            .fold((*first, *first), |(lo, hi), v| (lo.inf(v), hi.sup(v)));
        (hi - lo).norm()
    }

    pub fn translated(mut self, offset: Vec3) -> Self {
        for v in &mut self.vertices {
            *v += offset;
        }
        self
    }

    /// Axis-aligned box centered at the origin.
    pub fn cuboid(half: Vec3) -> Self {
        let mut vertices = Vec::with_capacity(8);
        for i in 0..8 {
            let s = |bit: usize| if i & bit != 0 { 1.0 } else { -1.0 };
            vertices.push(Vec3::new(s(1) * half.x, s(2) * half.y, s(4) * half.z));
        }
        let quads = [
            [0, 2, 3, 1],
            [4, 5, 7, 6],
            [0, 1, 5, 4],
            [2, 6, 7, 3],
            [0, 4, 6, 2],
            [1, 3, 7, 5],
        ];
        let triangles = quads
            .iter()
            .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
            .collect();
        Self::new(vertices, triangles)
    }
}

/// Split every triangle into four through its edge midpoints. Shared edges
/// share their midpoint vertex, so a closed mesh stays closed.
pub fn subdivide(m: &TriMesh) -> Result<TriMesh> {
    m.validate()?;
    let mut vertices = m.vertices.clone();
    let mut colors = m.colors.clone();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut triangles = Vec::with_capacity(m.triangles.len() * 4);

    let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>, colors: &mut Option<Vec<[f64; 3]>>| {
        let key = (a.min(b), a.max(b));
        *midpoints.entry(key).or_insert_with(|| {
            vertices.push((vertices[a] + vertices[b]) * 0.5);
            if let Some(c) = colors.as_mut() {
                let (ca, cb) = (c[a], c[b]);
                c.push([0.5 * (ca[0] + cb[0]), 0.5 * (ca[1] + cb[1]), 0.5 * (ca[2] + cb[2])]);
            }
            vertices.len() - 1
        })
    };

    for &[a, b, c] in &m.triangles {
        let ab = midpoint(a, b, &mut vertices, &mut colors);
        let bc = midpoint(b, c, &mut vertices, &mut colors);
        let ca = midpoint(c, a, &mut vertices, &mut colors);
        triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
    }
    Ok(TriMesh {
        vertices,
        triangles,
        colors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionParams {
    /// Distortion strength in [0, 1].
    pub extent: f64,
    /// Displacement bound at extent 1; `None` means 2% of the bounding-box diagonal.
    pub scale: Option<f64>,
    pub seed: u64,
    pub subdivision_levels: u32,
}

impl DistortionParams {
    pub fn new(extent: f64, seed: u64) -> Self {
        Self {
            extent,
            scale: None,
            seed,
            subdivision_levels: 0,
        }
    }

    pub fn resolved_scale(&self, m: &TriMesh) -> f64 {
        self.scale.unwrap_or_else(|| 0.02 * m.bbox_diagonal())
    }
}

/// Displace every vertex by an independent uniform vector in
/// `[-extent·scale, extent·scale]³`.
pub fn jitter_vertices(m: &TriMesh, p: &DistortionParams) -> Result<TriMesh> {
    if !(0.0..=1.0).contains(&p.extent) {
        return Err(Error::ExtentOutOfRange(p.extent));
    }
    let scale = p.resolved_scale(m);
    if !(scale >= 0.0) {
        return Err(Error::InvalidConfig(format!("distortion scale {scale} must be non-negative")));
    }
    let bound = p.extent * scale;
    let mut out = m.clone();
    if bound == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    for v in &mut out.vertices {
        let d = Vec3::new(
            rng.random_range(-bound..=bound),
            rng.random_range(-bound..=bound),
            rng.random_range(-bound..=bound),
        );
        *v += d;
    }
    Ok(out)
}

/// `subdivision_levels` rounds of [`subdivide`], then [`jitter_vertices`].
/// The jitter scale default is taken from the input mesh.
pub fn distort(m: &TriMesh, p: &DistortionParams) -> Result<TriMesh> {
    let params = DistortionParams {
        scale: Some(p.resolved_scale(m)),
        ..*p
    };
    let mut mesh = m.clone();
    for _ in 0..p.subdivision_levels {
        mesh = subdivide(&mesh)?;
    }
    jitter_vertices(&mesh, &params)
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text, path)
}

pub fn parse_obj(text: &str, path: &Path) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut colors: Vec<[f64; 3]> = Vec::new();
    let mut any_color = false;
    let mut triangles = Vec::new();

    for (lineno, raw) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        let line = raw.split('#').next().unwrap_or_default().trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let nums = it
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::parse(path, lineno, "bad vertex coordinate"))?;
                match nums.len() {
                    3 | 4 => colors.push([1.0, 1.0, 1.0]),
                    6 | 7 => {
                        any_color = true;
                        colors.push([nums[3], nums[4], nums[5]]);
                    }
                    n => return Err(Error::parse(path, lineno, format!("vertex with {n} components"))),
                }
                vertices.push(Vec3::new(nums[0], nums[1], nums[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in it {
                    let first = tok.split('/').next().unwrap_or_default();
                    let i: i64 = first
                        .parse()
                        .map_err(|_| Error::parse(path, lineno, format!("bad face index '{tok}'")))?;
                    let n = vertices.len() as i64;
                    let resolved = if i > 0 { i - 1 } else { n + i };
                    if i == 0 || resolved < 0 || resolved >= n {
                        return Err(Error::parse(path, lineno, format!("face index {i} out of range")));
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() < 3 {
                    return Err(Error::parse(path, lineno, "face with fewer than 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok(TriMesh {
        vertices,
        triangles,
        colors: any_color.then_some(colors),
    })
}

pub fn to_obj_string(m: &TriMesh) -> String {
    let mut s = String::with_capacity(m.vertices.len() * 40 + m.triangles.len() * 20);
    for (i, v) in m.vertices.iter().enumerate() {
        match &m.colors {
            Some(c) => {
                let [r, g, b] = c[i];
                let _ = writeln!(s, "v {} {} {} {} {} {}", v.x, v.y, v.z, r, g, b);
            }
            None => {
                let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
            }
        }
    }
    for t in &m.triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

pub fn save_obj(m: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_obj_string(m)).map_err(|e| Error::io(path, e))
}

impl Scene for TriMesh {
    fn raycast(&self, ray: &Ray, max_range: f64) -> Option<RayHit> {
        let mut best: Option<RayHit> = None;
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| self.vertices[i]);
            let limit = best.map_or(max_range, |h| h.range);
            // Möller-Trumbore
            let e1 = b - a;
            let e2 = c - a;
            let pv = ray.dir.cross(&e2);
            let det = e1.dot(&pv);
            if det.abs() < 1e-15 {
                continue;
            }
            let inv = 1.0 / det;
            let tv = ray.origin - a;
            let u = tv.dot(&pv) * inv;
            if !(0.0..=1.0).contains(&u) {
                continue;
            }
            let qv = tv.cross(&e1);
            let v = ray.dir.dot(&qv) * inv;
            if v < 0.0 || u + v > 1.0 {
                continue;
            }
            let dist = e2.dot(&qv) * inv;
            if dist > 1e-12 && dist <= limit {
                let mut n = e1.cross(&e2).normalize();
                if n.dot(&ray.dir) > 0.0 {
                    n = -n;
                }
                best = Some(RayHit { range: dist, normal: n });
            }
        }
        best
    }
}
