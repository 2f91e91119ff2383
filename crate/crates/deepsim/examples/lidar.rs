//! Pan/tilt lidar sweep across a rock wall; writes one PLY per pan angle.

use deepsim::lidar::{self, LidarConfig, PanTiltState};
use deepsim::scene::{Plane, Pose, Sphere, Vec3, World};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> deepsim::Result<()> {
    let cfg = LidarConfig { supersample: 2, range_noise_sigma: 0.005, ..LidarConfig::default() };
    let world = World::new()
        .with(Plane::new(Vec3::new(8.0, 0.0, 0.0), -Vec3::x()))
        .with(Sphere { center: Vec3::new(6.0, 2.0, -1.0), radius: 0.7 });
    let pose = Pose::level(Vec3::zeros());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mount = PanTiltState::default();

    let dir = std::env::temp_dir();
    for pan in [-40.0, 0.0, 40.0, 400.0] {
        let clamped;
        (mount, clamped) = lidar::command_mount(mount, pan, -10.0);
        let cloud = lidar::scan(&pose, &mount, &world, &cfg, &mut rng)?;
        let path = dir.join(format!("deepsim_lidar_pan{:+.0}.ply", mount.pan));
        cloud.save_ply(&path)?;
        println!(
            "pan {:+6.1} tilt {:+5.1}{}: {} points -> {}",
            mount.pan,
            mount.tilt,
            if clamped { " (clamped)" } else { "" },
            cloud.len(),
            path.display()
        );
    }
    Ok(())
}
