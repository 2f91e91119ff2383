//! Project a few sites into Pseudo-Mercator and back.

use deepsim::geodesy::{geodetic_to_mercator, mercator_to_geodetic, world_point, GeodeticCoord};

fn main() -> deepsim::Result<()> {
    let sites = [
        ("null island", 0.0, 0.0),
        ("santorini caldera", 36.40, 25.40),
        ("antimeridian", 0.0, 180.0),
        ("svalbard", 78.22, 15.65),
    ];
    for (name, lat, lon) in sites {
        let p = geodetic_to_mercator(GeodeticCoord::new(lat, lon))?;
        let back = mercator_to_geodetic(p)?;
        println!(
            "{name:>18}: x {:>15.3} y {:>15.3}  ->  lat {:.9} lon {:.9}",
            p.x, p.y, back.lat, back.lon
        );
    }

    let p = geodetic_to_mercator(GeodeticCoord::new(36.41, 25.41))?;
    println!("world point at 300 m depth: {:?}", world_point(p, 300.0).as_slice());

    // Refused near the poles.
    println!("{}", geodetic_to_mercator(GeodeticCoord::new(89.0, 0.0)).unwrap_err());
    Ok(())
}
