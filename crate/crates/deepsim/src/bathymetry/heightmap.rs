use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geodesy::{geodetic_to_mercator, mercator_to_geodetic, GeodeticCoord, ProjectedCoord, EARTH_RADIUS};

pub const DEFAULT_NODATA: f64 = -9999.0;

/// Regular lat/lon grid of depths (meters, positive down).
///
/// Rows are stored south to north. Node `(row, col)` sits at
/// `origin + (row·dlat, col·dlon)`; node positions are projected once so terrain
/// queries run in the Pseudo-Mercator plane, where the grid is rectilinear
/// (uniform in x, monotone in y).
#[derive(Debug, Clone)]
pub struct Heightmap {
    origin: GeodeticCoord,
    cell_size: (f64, f64),
    rows: usize,
    cols: usize,
    depth: Vec<f64>,
    nodata: f64,
    xs: Vec<f64>,
    ys: Vec<f64>,
    depth_range: (f64, f64),
}

impl Heightmap {
    /// `depth` is row-major with row 0 at the southern edge.
    pub fn new(
        origin: GeodeticCoord,
        cell_size: (f64, f64),
        rows: usize,
        cols: usize,
        depth: Vec<f64>,
        nodata: f64,
    ) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::InvalidHeightmap(format!(
                "grid must be at least 2x2, got {rows}x{cols}"
            )));
        }
        let (dlat, dlon) = cell_size;
        if !(dlat > 0.0 && dlon > 0.0) {
            return Err(Error::InvalidHeightmap(format!(
                "cell size must be positive, got {dlat}x{dlon}"
            )));
        }
        if depth.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: depth.len(),
            });
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &d in &depth {
            if d == nodata {
                continue;
            }
            if !d.is_finite() {
                return Err(Error::InvalidHeightmap("non-finite depth value".into()));
            }
            lo = lo.min(d);
            hi = hi.max(d);
        }
        if lo > hi {
            return Err(Error::InvalidHeightmap("every cell is nodata".into()));
        }
        let xs = (0..cols)
            .map(|c| geodetic_to_mercator(GeodeticCoord::new(origin.lat, origin.lon + c as f64 * dlon)).map(|p| p.x))
            .collect::<Result<Vec<_>>>()?;
        let ys = (0..rows)
            .map(|r| geodetic_to_mercator(GeodeticCoord::new(origin.lat + r as f64 * dlat, origin.lon)).map(|p| p.y))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            origin,
            cell_size,
            rows,
            cols,
            depth,
            nodata,
            xs,
            ys,
            depth_range: (lo, hi),
        })
    }

    /// Grid whose nodes are spaced roughly `spacing` meters apart in the projected
    /// plane, starting at projected corner `sw`. `f(row, col)` gives the depth.
    ///
    /// Column spacing is exact; row spacing follows Mercator stretching and is
    /// exact only at the equator.
    pub fn from_fn(
        sw: ProjectedCoord,
        spacing: f64,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let origin = mercator_to_geodetic(sw)?;
        let dlon = (spacing / EARTH_RADIUS).to_degrees();
        let dlat = dlon * origin.lat.to_radians().cos();
        let mut depth = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                depth.push(f(r, c));
            }
        }
        Self::new(origin, (dlat, dlon), rows, cols, depth, DEFAULT_NODATA)
    }

    pub fn origin(&self) -> GeodeticCoord {
        self.origin
    }

    /// (degrees latitude, degrees longitude) per cell.
    pub fn cell_size(&self) -> (f64, f64) {
        self.cell_size
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    /// Raw node value, which may be the nodata sentinel.
    pub fn node(&self, row: usize, col: usize) -> f64 {
        self.depth[row * self.cols + col]
    }

    pub fn is_nodata(&self, row: usize, col: usize) -> bool {
        self.node(row, col) == self.nodata
    }

    /// Projected position of node `(row, col)`.
    pub fn node_position(&self, row: usize, col: usize) -> ProjectedCoord {
        ProjectedCoord::new(self.xs[col], self.ys[row])
    }

    pub fn node_xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn node_ys(&self) -> &[f64] {
        &self.ys
    }

    /// Projected bounding box: (south-west, north-east).
    pub fn extent(&self) -> (ProjectedCoord, ProjectedCoord) {
        (
            ProjectedCoord::new(self.xs[0], self.ys[0]),
            ProjectedCoord::new(self.xs[self.cols - 1], self.ys[self.rows - 1]),
        )
    }

    /// Shallowest and deepest valid depth.
    pub fn depth_range(&self) -> (f64, f64) {
        self.depth_range
    }

    /// Smallest projected node spacing.
    pub fn min_spacing(&self) -> f64 {
        let dx = self.xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let dy = self.ys.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        dx.min(dy)
    }

    /// Bilinear depth at a projected position.
    pub fn depth_at(&self, p: ProjectedCoord) -> Result<f64> {
        let (Some((j, u)), Some((i, v))) = (locate(&self.xs, p.x), locate(&self.ys, p.y)) else {
            return Err(Error::OutOfExtent { x: p.x, y: p.y });
        };
        let [d00, d10, d01, d11] = self.cell_corners(i, j).ok_or(Error::NoData { x: p.x, y: p.y })?;
        Ok(bilinear(d00, d10, d01, d11, u, v))
    }

    /// Corner depths of cell `(row, col)` ordered (sw, se, nw, ne), or `None` if
    /// any corner is nodata.
    pub(crate) fn cell_corners(&self, row: usize, col: usize) -> Option<[f64; 4]> {
        let c = [
            self.node(row, col),
            self.node(row, col + 1),
            self.node(row + 1, col),
            self.node(row + 1, col + 1),
        ];
        c.iter().all(|&d| d != self.nodata).then_some(c)
    }

    /// Serialize as an ESRI ASCII grid (north row first).
    pub fn to_ascii_grid(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "ncols {}", self.cols);
        let _ = writeln!(s, "nrows {}", self.rows);
        let _ = writeln!(s, "xllcorner {}", self.origin.lon);
        let _ = writeln!(s, "yllcorner {}", self.origin.lat);
        if self.cell_size.0 == self.cell_size.1 {
            let _ = writeln!(s, "cellsize {}", self.cell_size.0);
        } else {
            let _ = writeln!(s, "dx {}", self.cell_size.1);
            let _ = writeln!(s, "dy {}", self.cell_size.0);
        }
        let _ = writeln!(s, "nodata_value {}", self.nodata);
        for r in (0..self.rows).rev() {
            let row: Vec<String> = (0..self.cols).map(|c| self.node(r, c).to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}

pub(crate) fn bilinear(d00: f64, d10: f64, d01: f64, d11: f64, u: f64, v: f64) -> f64 {
    d00 * (1.0 - u) * (1.0 - v) + d10 * u * (1.0 - v) + d01 * (1.0 - u) * v + d11 * u * v
}

/// Cell index and fractional offset of `x` within sorted node coordinates.
pub(crate) fn locate(nodes: &[f64], x: f64) -> Option<(usize, f64)> {
    let n = nodes.len();
    let (lo, hi) = (nodes[0], nodes[n - 1]);
    let tol = 1e-9 * (hi - lo);
    if !(x >= lo - tol && x <= hi + tol) {
        return None;
    }
    let x = x.clamp(lo, hi);
    let k = nodes.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
    let u = (x - nodes[k]) / (nodes[k + 1] - nodes[k]);
    Some((k, u))
}

/// Parse an ESRI ASCII grid. Coordinates in the header are EPSG 4326 degrees and
/// the values are depths in meters, positive down.
pub fn load_heightmap(path: impl AsRef<Path>) -> Result<Heightmap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ascii_grid(&text, path)
}

pub(crate) fn parse_ascii_grid(text: &str, path: &Path) -> Result<Heightmap> {
    let mut ncols = None;
    let mut nrows = None;
    let mut xll = None;
    let mut yll = None;
    let mut cellsize = None;
    let mut dx = None;
    let mut dy = None;
    let mut nodata = DEFAULT_NODATA;
    let mut values = Vec::new();
    let mut in_body = false;

    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() {
            continue;
        }
        let first = line.split_whitespace().next().unwrap_or_default();
        if !in_body && first.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
            let mut it = line.split_whitespace();
            let key = it.next().unwrap_or_default().to_ascii_lowercase();
            let val = it
                .next()
                .ok_or_else(|| Error::parse(path, lineno, format!("missing value for '{key}'")))?;
            let num: f64 = val
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad number '{val}' for '{key}'")))?;
            let as_count = |v: f64| {
                if v >= 0.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(Error::parse(path, lineno, format!("'{key}' must be a non-negative integer")))
                }
            };
            match key.as_str() {
                "ncols" => ncols = Some(as_count(num)?),
                "nrows" => nrows = Some(as_count(num)?),
                "xllcorner" | "xllcenter" => xll = Some(num),
                "yllcorner" | "yllcenter" => yll = Some(num),
                "cellsize" => cellsize = Some(num),
                "dx" => dx = Some(num),
                "dy" => dy = Some(num),
                "nodata_value" => nodata = num,
                _ => return Err(Error::parse(path, lineno, format!("unknown header key '{key}'"))),
            }
            continue;
        }
        in_body = true;
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad value '{tok}'")))?;
            values.push(v);
        }
    }

    let missing = |k: &str| Error::parse(path, 1, format!("missing header key '{k}'"));
    let ncols = ncols.ok_or_else(|| missing("ncols"))?;
    let nrows = nrows.ok_or_else(|| missing("nrows"))?;
    let lon0 = xll.ok_or_else(|| missing("xllcorner"))?;
    let lat0 = yll.ok_or_else(|| missing("yllcorner"))?;
    let (dlat, dlon) = match (cellsize, dx, dy) {
        (Some(c), _, _) => (c, c),
        (None, Some(x), Some(y)) => (y, x),
        _ => return Err(missing("cellsize")),
    };
    if values.len() != nrows * ncols {
        return Err(Error::DimensionMismatch {
            expected: nrows * ncols,
            found: values.len(),
        });
    }
    // File order is north row first.
    let mut depth = Vec::with_capacity(values.len());
    for r in (0..nrows).rev() {
        depth.extend_from_slice(&values[r * ncols..(r + 1) * ncols]);
    }
    Heightmap::new(GeodeticCoord::new(lat0, lon0), (dlat, dlon), nrows, ncols, depth, nodata)
}
