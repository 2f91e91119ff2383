//! Ray marching over the heightmap: grid traversal across projected cells, with an
//! analytic intersection against each cell's bilinear patch.

use super::heightmap::Heightmap;
use crate::scene::{Ray, RayHit, Scene, Vec3};

/// Range tolerance of terrain intersections, meters.
pub const STEP_TOL: f64 = 1e-4;

impl Heightmap {
    pub fn raycast(&self, ray: &Ray, max_range: f64) -> Option<RayHit> {
        if !(max_range > 0.0) {
            return None;
        }
        let (o, d) = (ray.origin, ray.dir);
        let xs = self.node_xs();
        let ys = self.node_ys();
        let (x_lo, x_hi) = (xs[0], xs[xs.len() - 1]);
        let (y_lo, y_hi) = (ys[0], ys[ys.len() - 1]);
        let (shallow, deep) = self.depth_range();

        // Only the part of the ray inside the terrain's bounding box can cross it.
        let mut t0 = 0.0f64;
        let mut t1 = max_range;
        for (orig, dir, lo, hi) in [
            (o.x, d.x, x_lo, x_hi),
            (o.y, d.y, y_lo, y_hi),
            (o.z, d.z, -deep, -shallow),
        ] {
            let pad = 1e-9 * (1.0 + hi.abs().max(lo.abs()));
            let (lo, hi) = (lo - pad, hi + pad);
            if dir == 0.0 {
                if orig < lo || orig > hi {
                    return None;
                }
            } else {
                let (a, b) = ((lo - orig) / dir, (hi - orig) / dir);
                t0 = t0.max(a.min(b));
                t1 = t1.min(a.max(b));
            }
        }
        if t0 > t1 {
            return None;
        }

        let start = ray.at(t0);
        let mut col = cell_of(xs, start.x);
        let mut row = cell_of(ys, start.y);
        let step_x: isize = if d.x > 0.0 { 1 } else { -1 };
        let step_y: isize = if d.y > 0.0 { 1 } else { -1 };
        let next_cross = |nodes: &[f64], k: usize, orig: f64, dir: f64| -> f64 {
            if dir > 0.0 {
                (nodes[k + 1] - orig) / dir
            } else if dir < 0.0 {
                (nodes[k] - orig) / dir
            } else {
                f64::INFINITY
            }
        };
        let mut tx = next_cross(xs, col, o.x, d.x);
        let mut ty = next_cross(ys, row, o.y, d.y);
        let mut t_enter = t0;

        loop {
            let t_exit = tx.min(ty).min(t1);
            if t_exit >= t_enter {
                if let Some(hit) = self.intersect_cell(ray, row, col, t_enter, t_exit) {
                    return Some(hit);
                }
            }
            if t_exit >= t1 {
                return None;
            }
            if tx <= t_exit {
                let next = col as isize + step_x;
                if next < 0 || next as usize >= xs.len() - 1 {
                    return None;
                }
                col = next as usize;
                tx = next_cross(xs, col, o.x, d.x);
            }
            if ty <= t_exit {
                let next = row as isize + step_y;
                if next < 0 || next as usize >= ys.len() - 1 {
                    return None;
                }
                row = next as usize;
                ty = next_cross(ys, row, o.y, d.y);
            }
            t_enter = t_exit;
        }
    }

    /// Earliest crossing of the ray with the patch of cell `(row, col)` for
    /// `t ∈ [t_enter, t_exit]`.
    fn intersect_cell(&self, ray: &Ray, row: usize, col: usize, t_enter: f64, t_exit: f64) -> Option<RayHit> {
        let [d00, d10, d01, d11] = self.cell_corners(row, col)?;
        let xs = self.node_xs();
        let ys = self.node_ys();
        let (wx, wy) = (xs[col + 1] - xs[col], ys[row + 1] - ys[row]);

        // Elevation e(u, v) = a + b·u + c·v + e·u·v (up positive).
        let a = -d00;
        let b = -(d10 - d00);
        let c = -(d01 - d00);
        let e = -(d11 - d10 - d01 + d00);

        let p = ray.at(t_enter);
        let u0 = (p.x - xs[col]) / wx;
        let v0 = (p.y - ys[row]) / wy;
        let du = ray.dir.x / wx;
        let dv = ray.dir.y / wy;

        // f(s) = z(s) - e(u(s), v(s)) for s = t - t_enter.
        let qa = -e * du * dv;
        let qb = ray.dir.z - (b * du + c * dv + e * (u0 * dv + v0 * du));
        let qc = p.z - (a + b * u0 + c * v0 + e * u0 * v0);
        let f = |s: f64| qc + s * (qb + s * qa);

        let len = t_exit - t_enter;
        let slack = 1e-12 * (1.0 + len);
        let mut s_hit = quadratic_roots(qa, qb, qc)
            .into_iter()
            .flatten()
            .filter(|&s| s >= -slack && s <= len + slack && t_enter + s > 1e-12)
            .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.min(s))))?;
        s_hit = s_hit.clamp(0.0, len);

        // Polish by bisection inside a STEP_TOL bracket when the root is well
        // separated from cancellation noise.
        let (mut lo, mut hi) = ((s_hit - STEP_TOL).max(0.0), (s_hit + STEP_TOL).min(len));
        let (flo, fhi) = (f(lo), f(hi));
        if flo.signum() != fhi.signum() && flo != 0.0 && fhi != 0.0 {
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if f(mid).signum() == flo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            s_hit = 0.5 * (lo + hi);
        }

        let u = (u0 + du * s_hit).clamp(0.0, 1.0);
        let v = (v0 + dv * s_hit).clamp(0.0, 1.0);
        let dedx = (b + e * v) / wx;
        let dedy = (c + e * u) / wy;
        let mut normal = Vec3::new(-dedx, -dedy, 1.0).normalize();
        if normal.dot(&ray.dir) > 0.0 {
            normal = -normal;
        }
        Some(RayHit {
            range: t_enter + s_hit,
            normal,
        })
    }
}

impl Scene for Heightmap {
    fn raycast(&self, ray: &Ray, max_range: f64) -> Option<RayHit> {
        Heightmap::raycast(self, ray, max_range)
    }
}

fn cell_of(nodes: &[f64], x: f64) -> usize {
    nodes.partition_point(|&v| v <= x).clamp(1, nodes.len() - 1) - 1
}

/// Real roots of `a·s² + b·s + c`, smallest first where both exist.
fn quadratic_roots(a: f64, b: f64, c: f64) -> [Option<f64>; 2] {
    let scale = b.abs().max(c.abs()).max(f64::MIN_POSITIVE);
    if a.abs() <= 1e-14 * scale {
        if b == 0.0 {
            return [(c == 0.0).then_some(0.0), None];
        }
        return [Some(-c / b), None];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return [None, None];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return [Some(0.0), None];
    }
    let (r1, r2) = (q / a, c / q);
    [Some(r1.min(r2)), Some(r1.max(r2))]
}
