use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::heightmap::Heightmap;
use crate::error::{Error, Result};
use crate::geodesy::ProjectedCoord;
use crate::meshtools::{save_obj, TriMesh};
use crate::scene::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TileIndex {
    pub row: usize,
    pub col: usize,
}

impl TileIndex {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// Axis-aligned rectangle in the projected plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: ProjectedCoord,
    pub max: ProjectedCoord,
}

impl Rect {
    pub fn new(min: ProjectedCoord, max: ProjectedCoord) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn expand(&self, margin: f64) -> Rect {
        Rect::new(
            ProjectedCoord::new(self.min.x - margin, self.min.y - margin),
            ProjectedCoord::new(self.max.x + margin, self.max.y + margin),
        )
    }

    pub fn contains(&self, p: ProjectedCoord) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn distance_to(&self, p: ProjectedCoord) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        dx.hypot(dy)
    }

    /// Closed-disc intersection test.
    pub fn intersects_disc(&self, center: ProjectedCoord, radius: f64) -> bool {
        self.distance_to(center) <= radius
    }
}

/// How the heightmap extent is cut into tiles; cheap to copy, carries no meshes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TileLayout {
    pub extent: Rect,
    pub tile_size: f64,
    pub overlap: f64,
    pub rows: usize,
    pub cols: usize,
}

impl TileLayout {
    pub fn new(extent: Rect, tile_size: f64, overlap: f64) -> Result<Self> {
        if !(tile_size > 0.0) || !(overlap >= 0.0) || !(tile_size > 2.0 * overlap) {
            return Err(Error::DegenerateExtent(format!(
                "tile size {tile_size} must exceed twice the overlap {overlap}"
            )));
        }
        if !(extent.width() > 0.0 && extent.height() > 0.0) {
            return Err(Error::DegenerateExtent(format!(
                "extent {} x {} m",
                extent.width(),
                extent.height()
            )));
        }
        // Swallow float noise so an exact multiple of tile_size is not split again.
        let count = |len: f64| ((len / tile_size) - 1e-9).ceil().max(1.0) as usize;
        Ok(Self {
            extent,
            tile_size,
            overlap,
            rows: count(extent.height()),
            cols: count(extent.width()),
        })
    }

    pub fn for_heightmap(h: &Heightmap, tile_size: f64, overlap: f64) -> Result<Self> {
        let (sw, ne) = h.extent();
        Self::new(Rect::new(sw, ne), tile_size, overlap)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn indices(&self) -> impl Iterator<Item = TileIndex> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| TileIndex::new(r, c)))
    }

    pub fn core_bounds(&self, idx: TileIndex) -> Rect {
        let e = &self.extent;
        let x0 = e.min.x + idx.col as f64 * self.tile_size;
        let y0 = e.min.y + idx.row as f64 * self.tile_size;
        let x1 = if idx.col + 1 == self.cols { e.max.x } else { x0 + self.tile_size };
        let y1 = if idx.row + 1 == self.rows { e.max.y } else { y0 + self.tile_size };
        Rect::new(ProjectedCoord::new(x0, y0), ProjectedCoord::new(x1, y1))
    }

    /// Core bounds grown by the overlap margin on every side.
    pub fn bounds(&self, idx: TileIndex) -> Rect {
        self.core_bounds(idx).expand(self.overlap)
    }

    /// Tile whose core contains `p`, if `p` is on the map.
    pub fn tile_at(&self, p: ProjectedCoord) -> Option<TileIndex> {
        if !self.extent.contains(p) {
            return None;
        }
        let col = (((p.x - self.extent.min.x) / self.tile_size) as usize).min(self.cols - 1);
        let row = (((p.y - self.extent.min.y) / self.tile_size) as usize).min(self.rows - 1);
        Some(TileIndex::new(row, col))
    }

    /// Tiles whose core rectangle intersects the disc.
    pub fn tiles_near(&self, center: ProjectedCoord, radius: f64) -> Vec<TileIndex> {
        let e = &self.extent;
        let span = |lo: f64, c: f64, n: usize| -> Option<(usize, usize)> {
            let a = ((c - radius - lo) / self.tile_size).floor();
            let b = ((c + radius - lo) / self.tile_size).floor();
            if b < 0.0 || a > (n - 1) as f64 {
                return None;
            }
            Some((a.max(0.0) as usize, (b as usize).min(n - 1)))
        };
        let (Some((c0, c1)), Some((r0, r1))) = (
            span(e.min.x, center.x, self.cols),
            span(e.min.y, center.y, self.rows),
        ) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for r in r0..=r1 {
            for c in c0..=c1 {
                let idx = TileIndex::new(r, c);
                if self.core_bounds(idx).intersects_disc(center, radius) {
                    out.push(idx);
                }
            }
        }
        out
    }
}

/// Inclusive node ranges of the heightmap sampled by a tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRange {
    pub row0: usize,
    pub row1: usize,
    pub col0: usize,
    pub col1: usize,
}

#[derive(Debug, Clone)]
pub struct Tile {
    pub index: TileIndex,
    pub core_bounds: Rect,
    pub overlap_margin: f64,
    /// Core bounds plus the overlap margin. The mesh covers this rectangle
    /// wherever the heightmap has data.
    pub bounds: Rect,
    pub mesh: TriMesh,
    pub source_region: CellRange,
}

/// Cut the heightmap into overlapping, depth-colorized mesh tiles.
///
/// Mesh vertices are heightmap nodes taken verbatim, so neighbouring tiles agree
/// bit-for-bit inside their shared overlap band. Colors map relative depth over
/// the whole map linearly from blue (shallow) to red (deep).
pub fn generate_tiles(h: &Heightmap, tile_size: f64, overlap: f64) -> Result<Vec<Tile>> {
    let layout = TileLayout::for_heightmap(h, tile_size, overlap)?;
    let (lo, hi) = h.depth_range();
    let span = hi - lo;
    let color = |d: f64| {
        let t = if span > 0.0 { ((d - lo) / span).clamp(0.0, 1.0) } else { 0.0 };
        [t, 0.0, 1.0 - t]
    };

    let xs = h.node_xs();
    let ys = h.node_ys();
    let mut tiles = Vec::with_capacity(layout.len());
    for index in layout.indices() {
        let core = layout.core_bounds(index);
        let bounds = core.expand(overlap);
        let (col0, col1) = node_span(xs, bounds.min.x, bounds.max.x);
        let (row0, row1) = node_span(ys, bounds.min.y, bounds.max.y);

        let ncols = col1 - col0 + 1;
        let mut slot = vec![usize::MAX; (row1 - row0 + 1) * ncols];
        let mut vertices = Vec::new();
        let mut colors = Vec::new();
        for r in row0..=row1 {
            for c in col0..=col1 {
                if h.is_nodata(r, c) {
                    continue;
                }
                let d = h.node(r, c);
                slot[(r - row0) * ncols + (c - col0)] = vertices.len();
                vertices.push(Vec3::new(xs[c], ys[r], -d));
                colors.push(color(d));
            }
        }
        let mut triangles = Vec::new();
        for r in row0..row1 {
            for c in col0..col1 {
                let at = |rr: usize, cc: usize| slot[(rr - row0) * ncols + (cc - col0)];
                let (sw, se, nw, ne) = (at(r, c), at(r, c + 1), at(r + 1, c), at(r + 1, c + 1));
                // Counter-clockwise seen from above.
                if sw != usize::MAX && se != usize::MAX && ne != usize::MAX {
                    triangles.push([sw, se, ne]);
                }
                if sw != usize::MAX && ne != usize::MAX && nw != usize::MAX {
                    triangles.push([sw, ne, nw]);
                }
            }
        }
        tiles.push(Tile {
            index,
            core_bounds: core,
            overlap_margin: overlap,
            bounds,
            mesh: TriMesh {
                vertices,
                triangles,
                colors: Some(colors),
            },
            source_region: CellRange { row0, row1, col0, col1 },
        });
    }
    Ok(tiles)
}

/// Node index range covering `[lo, hi]`, widened to the enclosing nodes and
/// clipped to the grid.
fn node_span(nodes: &[f64], lo: f64, hi: f64) -> (usize, usize) {
    let n = nodes.len();
    let first = nodes.partition_point(|&v| v <= lo).saturating_sub(1);
    let last = nodes.partition_point(|&v| v < hi).min(n - 1);
    (first.min(n - 2), last.max(first + 1).min(n - 1))
}

/// Write one OBJ per tile plus `manifest.csv`; returns the manifest path.
pub fn write_tiles(tiles: &[Tile], dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::from("row,col,min_x,min_y,max_x,max_y,overlap,path\n");
    for t in tiles {
        let name = format!("tile_{}_{}.obj", t.index.row, t.index.col);
        save_obj(&t.mesh, dir.join(&name))?;
        let b = &t.core_bounds;
        let _ = writeln!(
            manifest,
            "{},{},{},{},{},{},{},{}",
            t.index.row, t.index.col, b.min.x, b.min.y, b.max.x, b.max.y, t.overlap_margin, name
        );
    }
    let path = dir.join("manifest.csv");
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
