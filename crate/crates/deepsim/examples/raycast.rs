//! Cast a fan of rays at procedural terrain.

use deepsim::bathymetry::Heightmap;
use deepsim::geodesy::ProjectedCoord;
use deepsim::scene::{Ray, Vec3};

fn main() -> deepsim::Result<()> {
    let h = Heightmap::from_fn(ProjectedCoord::new(0.0, 0.0), 2.0, 101, 101, |r, c| {
        40.0 + 3.0 * (r as f64 / 9.0).sin() + 2.0 * (c as f64 / 7.0).cos()
    })?;
    let origin = Vec3::new(100.0, 100.0, -25.0);
    for deg in (-80..=-10).step_by(10) {
        let el = (deg as f64).to_radians();
        let ray = Ray::new(origin, Vec3::new(el.cos(), 0.0, el.sin()));
        match h.raycast(&ray, 200.0) {
            Some(hit) => {
                let p = ray.at(hit.range);
                println!(
                    "elevation {deg:>4}°: range {:7.3} m at ({:.2}, {:.2}, {:.2}), incidence {:5.1}°",
                    hit.range,
                    p.x,
                    p.y,
                    p.z,
                    hit.incidence(&ray).to_degrees()
                );
            }
            None => println!("elevation {deg:>4}°: miss"),
        }
    }
    Ok(())
}
