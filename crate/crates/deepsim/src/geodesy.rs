//! WGS 84 geodetic coordinates and the spherical Pseudo-Mercator plane (EPSG 3857).
//!
//! Every Cartesian world position in the kernel is a [`ProjectedCoord`] plus a depth
//! (meters, positive down). Internally the world frame is `x` east, `y` north,
//! `z` up, so `z = -depth`; see [`world_point`].

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// WGS 84 semi-major axis, the sphere radius used by EPSG 3857.
pub const EARTH_RADIUS: f64 = 6_378_137.0;

/// Latitude beyond which projection is refused.
pub const MAX_LATITUDE: f64 = 85.06;

/// Half-width of the Mercator square, `π·R`.
pub const MERCATOR_HALF_EXTENT: f64 = PI * EARTH_RADIUS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodeticCoord {
    /// Degrees north.
    pub lat: f64,
    /// Degrees east.
    pub lon: f64,
}

impl GeodeticCoord {
    pub fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectedCoord {
    /// Meters east.
    pub x: f64,
    /// Meters north.
    pub y: f64,
}

impl ProjectedCoord {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &ProjectedCoord) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

pub fn geodetic_to_mercator(g: GeodeticCoord) -> Result<ProjectedCoord> {
    if !g.lat.is_finite() || g.lat.abs() >= MAX_LATITUDE {
        return Err(Error::LatitudeOutOfRange(g.lat));
    }
    if !g.lon.is_finite() || g.lon.abs() > 180.0 {
        return Err(Error::LongitudeOutOfRange(g.lon));
    }
    let lambda = g.lon.to_radians();
    let phi = g.lat.to_radians();
    Ok(ProjectedCoord {
        x: EARTH_RADIUS * lambda,
        y: EARTH_RADIUS * phi.sin().atanh(),
    })
}

pub fn mercator_to_geodetic(p: ProjectedCoord) -> Result<GeodeticCoord> {
    // Allow the boundary itself to absorb rounding from x = R·π.
    let limit = MERCATOR_HALF_EXTENT * (1.0 + 1e-12);
    if !(p.x.is_finite() && p.y.is_finite()) || p.x.abs() > limit || p.y.abs() > limit {
        return Err(Error::OutsideMercatorSquare { x: p.x, y: p.y });
    }
    let lon = (p.x / EARTH_RADIUS).to_degrees().clamp(-180.0, 180.0);
    let lat = (p.y / EARTH_RADIUS).sinh().atan().to_degrees();
    Ok(GeodeticCoord { lat, lon })
}

/// World-frame point (east, north, up) for a projected position at `depth` meters.
pub fn world_point(p: ProjectedCoord, depth: f64) -> Vector3<f64> {
    Vector3::new(p.x, p.y, -depth)
}

/// Projected position and depth of a world-frame point.
pub fn split_world_point(w: &Vector3<f64>) -> (ProjectedCoord, f64) {
    (ProjectedCoord::new(w.x, w.y), -w.z)
}
