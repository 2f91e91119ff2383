use std::collections::BTreeSet;

use serde::Serialize;

use super::heightmap::Heightmap;
use super::tiles::{Rect, TileIndex, TileLayout};
use crate::error::{Error, Result};
use crate::geodesy::ProjectedCoord;
use crate::scene::{Ray, RayHit, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum TileEvent {
    Load(TileIndex),
    Unload(TileIndex),
}

/// Keeps the tiles around tracked vehicles loaded.
///
/// A tile is loaded once its core comes within `load_radius` of a vehicle and
/// stays loaded until no vehicle is within `unload_radius`. The gap between the
/// two radii stops a vehicle loitering on a tile seam from thrashing.
#[derive(Debug, Clone)]
pub struct TileManager {
    layout: TileLayout,
    loaded: BTreeSet<TileIndex>,
    load_radius: f64,
    unload_radius: f64,
}

impl TileManager {
    pub fn new(layout: TileLayout, load_radius: f64, unload_radius: f64) -> Result<Self> {
        if !(load_radius >= 0.0) || !(unload_radius > load_radius) {
            return Err(Error::InvalidConfig(format!(
                "unload radius {unload_radius} must exceed load radius {load_radius}"
            )));
        }
        Ok(Self {
            layout,
            loaded: BTreeSet::new(),
            load_radius,
            unload_radius,
        })
    }

    pub fn layout(&self) -> &TileLayout {
        &self.layout
    }

    pub fn loaded(&self) -> &BTreeSet<TileIndex> {
        &self.loaded
    }

    pub fn load_radius(&self) -> f64 {
        self.load_radius
    }

    pub fn unload_radius(&self) -> f64 {
        self.unload_radius
    }

    /// Apply vehicle positions; returns the loads and unloads performed, unloads
    /// first, each group in index order.
    pub fn update(&mut self, vehicles: &[ProjectedCoord]) -> Vec<TileEvent> {
        let wanted: BTreeSet<TileIndex> = vehicles
            .iter()
            .flat_map(|v| self.layout.tiles_near(*v, self.load_radius))
            .collect();
        let stale: Vec<TileIndex> = self
            .loaded
            .iter()
            .copied()
            .filter(|idx| {
                let core = self.layout.core_bounds(*idx);
                !vehicles.iter().any(|v| core.intersects_disc(*v, self.unload_radius))
            })
            .collect();

        let mut events = Vec::new();
        for idx in stale {
            self.loaded.remove(&idx);
            events.push(TileEvent::Unload(idx));
        }
        for idx in wanted {
            if self.loaded.insert(idx) {
                events.push(TileEvent::Load(idx));
            }
        }
        events
    }

    /// Overlap-inclusive bounds of every loaded tile.
    pub fn loaded_bounds(&self) -> Vec<Rect> {
        self.loaded.iter().map(|i| self.layout.bounds(*i)).collect()
    }
}

/// Terrain restricted to the currently loaded tiles.
pub struct LoadedTerrain<'a> {
    heightmap: &'a Heightmap,
    regions: Vec<Rect>,
}

impl<'a> LoadedTerrain<'a> {
    pub fn new(heightmap: &'a Heightmap, manager: &TileManager) -> Self {
        Self {
            heightmap,
            regions: manager.loaded_bounds(),
        }
    }

    fn covers(&self, p: ProjectedCoord) -> bool {
        self.regions.iter().any(|r| r.contains(p))
    }
}

impl Scene for LoadedTerrain<'_> {
    fn raycast(&self, ray: &Ray, max_range: f64) -> Option<RayHit> {
        if self.regions.is_empty() {
            return None;
        }
        let mut travelled = 0.0;
        let mut current = *ray;
        // Skip through surface patches belonging to unloaded tiles.
        for _ in 0..64 {
            let hit = self.heightmap.raycast(&current, max_range - travelled)?;
            let p = current.at(hit.range);
            if self.covers(ProjectedCoord::new(p.x, p.y)) {
                return Some(RayHit {
                    range: travelled + hit.range,
                    normal: hit.normal,
                });
            }
            let advance = hit.range + 1e-6;
            travelled += advance;
            current = Ray {
                origin: current.at(advance),
                dir: current.dir,
            };
        }
        None
    }
}
