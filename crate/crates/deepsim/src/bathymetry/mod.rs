//! Georeferenced bathymetry: heightmap ingestion, terrain queries, mesh tiles and
//! the dynamic tile loader.

mod heightmap;
mod manager;
mod raycast;
mod tiles;

pub use heightmap::{load_heightmap, Heightmap, DEFAULT_NODATA};
pub use manager::{LoadedTerrain, TileEvent, TileManager};
pub use raycast::STEP_TOL;
pub use tiles::{generate_tiles, write_tiles, Rect, Tile, TileIndex, TileLayout};

/// Default tile edge length, meters.
pub const DEFAULT_TILE_SIZE: f64 = 1000.0;
/// Default overlap band on each side of a tile, meters.
pub const DEFAULT_OVERLAP: f64 = 50.0;
/// Default load radius around each vehicle, meters.
pub const DEFAULT_LOAD_RADIUS: f64 = 1500.0;
