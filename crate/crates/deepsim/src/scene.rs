//! Ray queries against the simulated world.
//!
//! Sensors only need "where does this ray first hit something", so the world is
//! anything implementing [`Scene`]. Terrain ([`crate::bathymetry::Heightmap`]),
//! triangle meshes ([`crate::meshtools::TriMesh`]) and a few analytic primitives
//! implement it; [`World`] combines several.

use nalgebra::{UnitQuaternion, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Rotation = UnitQuaternion<f64>;

/// Rigid pose of a body in the world frame (east, north, up).
///
/// `attitude` rotates body-frame vectors into the world frame. Body frames are
/// x forward, y left, z up, so the identity attitude faces east, level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub attitude: Rotation,
}

impl Pose {
    pub fn new(position: Vec3, attitude: Rotation) -> Self {
        Self { position, attitude }
    }

    pub fn level(position: Vec3) -> Self {
        Self::new(position, Rotation::identity())
    }

    /// Roll, pitch and yaw in radians (intrinsic z-y-x).
    pub fn from_rpy(position: Vec3, roll: f64, pitch: f64, yaw: f64) -> Self {
        Self::new(position, Rotation::from_euler_angles(roll, pitch, yaw))
    }

    /// Meters below the surface.
    pub fn depth(&self) -> f64 {
        -self.position.z
    }

    pub fn to_world(&self, v: &Vec3) -> Vec3 {
        self.attitude * v
    }

    pub fn to_body(&self, v: &Vec3) -> Vec3 {
        self.attitude.inverse_transform_vector(v)
    }

    pub fn ray(&self, body_dir: &Vec3) -> Ray {
        Ray::new(self.position, self.to_world(body_dir))
    }

    /// `self ∘ other`: `other` expressed in this pose's body frame.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(self.position + self.attitude * other.position, self.attitude * other.attitude)
    }

    /// This pose expressed in the body frame of `frame`.
    pub fn relative_to(&self, frame: &Pose) -> Pose {
        Pose::new(
            frame.attitude.inverse_transform_vector(&(self.position - frame.position)),
            frame.attitude.inverse() * self.attitude,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    /// Unit direction.
    pub dir: Vec3,
}

impl Ray {
    pub fn new(origin: Vec3, dir: Vec3) -> Self {
        Self {
            origin,
            dir: dir.normalize(),
        }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub range: f64,
    /// Unit surface normal, oriented against the incoming ray.
    pub normal: Vec3,
}

impl RayHit {
    /// Angle between the reversed ray and the surface normal.
    pub fn incidence(&self, ray: &Ray) -> f64 {
        (-ray.dir.dot(&self.normal)).clamp(-1.0, 1.0).abs().acos()
    }
}

pub trait Scene: Sync {
    /// First intersection with `t ∈ (0, max_range]`, or `None` on a miss.
    fn raycast(&self, ray: &Ray, max_range: f64) -> Option<RayHit>;
}

impl<S: Scene + ?Sized> Scene for &S {
    fn raycast(&self, ray: &Ray, max_range: f64) -> Option<RayHit> {
        (**self).raycast(ray, max_range)
    }
}

impl<S: Scene + ?Sized + Send> Scene for Box<S> {
    fn raycast(&self, ray: &Ray, max_range: f64) -> Option<RayHit> {
        (**self).raycast(ray, max_range)
    }
}

/// Open water.
#[derive(Debug, Clone, Copy, Default)]
pub struct EmptyScene;

impl Scene for EmptyScene {
    fn raycast(&self, _ray: &Ray, _max_range: f64) -> Option<RayHit> {
        None
    }
}

/// Plane through `point`, optionally limited to a disc of `radius` around it.
#[derive(Debug, Clone, Copy)]
pub struct Plane {
    pub point: Vec3,
    pub normal: Vec3,
    pub radius: Option<f64>,
}

impl Plane {
    pub fn new(point: Vec3, normal: Vec3) -> Self {
        Self {
            point,
            normal: normal.normalize(),
            radius: None,
        }
    }

    pub fn disc(point: Vec3, normal: Vec3, radius: f64) -> Self {
        Self {
            radius: Some(radius),
            ..Self::new(point, normal)
        }
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        (p - self.point).dot(&self.normal)
    }
}

impl Scene for Plane {
    fn raycast(&self, ray: &Ray, max_range: f64) -> Option<RayHit> {
        let denom = ray.dir.dot(&self.normal);
        if denom.abs() < 1e-15 {
            return None;
        }
        let t = (self.point - ray.origin).dot(&self.normal) / denom;
        if !(t > 0.0 && t <= max_range) {
            return None;
        }
        if let Some(r) = self.radius {
            if (ray.at(t) - self.point).norm() > r {
                return None;
            }
        }
        let normal = if denom < 0.0 { self.normal } else { -self.normal };
        Some(RayHit { range: t, normal })
    }
}

/// Sphere surface; rays from inside hit the far wall.
#[derive(Debug, Clone, Copy)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
}

impl Scene for Sphere {
    fn raycast(&self, ray: &Ray, max_range: f64) -> Option<RayHit> {
        let oc = ray.origin - self.center;
        let b = oc.dot(&ray.dir);
        let c = oc.norm_squared() - self.radius * self.radius;
        let disc = b * b - c;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        let t = [-b - sq, -b + sq].into_iter().find(|&t| t > 0.0)?;
        if t > max_range {
            return None;
        }
        let outward = (ray.at(t) - self.center) / self.radius;
        let normal = if outward.dot(&ray.dir) < 0.0 { outward } else { -outward };
        Some(RayHit { range: t, normal })
    }
}

/// Union of scenes; the nearest hit wins.
#[derive(Default)]
pub struct World<'a> {
    parts: Vec<Box<dyn Scene + Send + 'a>>,
}

impl<'a> World<'a> {
    pub fn new() -> Self {
        Self { parts: Vec::new() }
    }

    pub fn with(mut self, part: impl Scene + Send + 'a) -> Self {
        self.parts.push(Box::new(part));
        self
    }

    pub fn push(&mut self, part: impl Scene + Send + 'a) {
        self.parts.push(Box::new(part));
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

impl Scene for World<'_> {
    fn raycast(&self, ray: &Ray, max_range: f64) -> Option<RayHit> {
        let mut best: Option<RayHit> = None;
        for part in &self.parts {
            let limit = best.map_or(max_range, |h| h.range);
            if let Some(hit) = part.raycast(ray, limit) {
                if best.is_none_or(|b| hit.range < b.range) {
                    best = Some(hit);
                }
            }
        }
        best
    }
}
