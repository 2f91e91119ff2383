//! Current profile through a sheared water column.

use deepsim::currents::{ned_to_world, StratifiedCurrentDB, Stratum};
use deepsim::dvl::{self, AdcpProfile, DvlConfig, ProfileMode};
use deepsim::scene::{Pose, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> deepsim::Result<()> {
    let db = StratifiedCurrentDB::new(vec![
        Stratum { depth: 0.0, velocity: [0.5, 0.0, 0.0] },
        Stratum { depth: 80.0, velocity: [0.0, 0.3, 0.0] },
    ])?;
    let cfg = DvlConfig { bins: 12, bin_size: 5.0, ..DvlConfig::default() };
    let pose = Pose::level(Vec3::new(0.0, 0.0, -10.0));
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    for mode in [ProfileMode::Combined, ProfileMode::PerBeam] {
        let cfg = DvlConfig { profile_mode: mode, ..cfg.clone() };
        let profile = dvl::current_profile(&pose, &Vec3::zeros(), |d| ned_to_world(db.interpolate(d)), &cfg, &mut rng)?;
        println!("{}", AdcpProfile::csv_metadata_for(&cfg));
        println!("{}", AdcpProfile::csv_header());
        print!("{}", profile.csv_rows(0.0));
    }
    Ok(())
}
