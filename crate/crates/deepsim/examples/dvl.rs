//! Bottom and water tracking from a Janus DVL over sloping terrain.

use deepsim::bathymetry::Heightmap;
use deepsim::dvl::{self, DvlConfig};
use deepsim::geodesy::ProjectedCoord;
use deepsim::scene::{Pose, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> deepsim::Result<()> {
    let terrain = Heightmap::from_fn(ProjectedCoord::new(0.0, 0.0), 5.0, 81, 81, |_, c| 30.0 + 0.5 * c as f64)?;
    let cfg = DvlConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let current = |_depth: f64| Vec3::new(0.2, -0.1, 0.0);
    let vel = Vec3::new(1.5, 0.2, 0.0);

    println!("{}", dvl::DvlSolution::csv_header());
    for (i, altitude) in [10.0, 60.0, 150.0, 400.0].into_iter().enumerate() {
        let x = 200.0;
        let depth = 30.0 + 0.5 * x / 5.0 - altitude;
        let pose = Pose::from_rpy(Vec3::new(x, 200.0, -depth), 0.05, -0.03, 0.4);
        let sol = dvl::measure(&pose, &vel, &terrain, current, &cfg, &mut rng);
        println!("{}", sol.csv_row(i as f64));
    }
    Ok(())
}
