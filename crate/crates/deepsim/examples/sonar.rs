//! Forward-looking sonar ping at a seabed with two boulders; writes PGM and CSV.

use deepsim::scene::{Plane, Pose, Sphere, Vec3, World};
use deepsim::sonar::{self, SonarConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> deepsim::Result<()> {
    let cfg = SonarConfig { bandwidth: 15e3, max_range: 25.6, ..SonarConfig::default() };
    let world = World::new()
        .with(Plane::new(Vec3::new(0.0, 0.0, -6.0), Vec3::z()))
        .with(Sphere { center: Vec3::new(12.0, 3.0, -5.0), radius: 1.0 })
        .with(Sphere { center: Vec3::new(18.0, -4.0, -5.5), radius: 0.8 });
    let pose = Pose::from_rpy(Vec3::zeros(), 0.0, 20f64.to_radians(), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let aplot = sonar::ping(&pose, &world, &cfg, &mut rng)?;
    println!(
        "{} beams x {} range bins, resolution {:.3} m, peak intensity {:.3e}",
        aplot.n_beams(),
        aplot.n_ranges(),
        cfg.range_resolution(),
        aplot.max()
    );
    let stem = std::env::temp_dir().join("deepsim_sonar");
    let (pgm, csv) = sonar::export_aplot(&aplot, &stem, 60.0)?;
    println!("wrote {} and {}", pgm.display(), csv.display());
    Ok(())
}
