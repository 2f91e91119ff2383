//! Stratified mean current plus tide plus a Gauss-Markov perturbation.

use deepsim::currents::{
    Constituent, CurrentField, GaussMarkovParams, StratifiedCurrentDB, Stratum, TidalModel,
};
use deepsim::geodesy::ProjectedCoord;

fn main() -> deepsim::Result<()> {
    let db = StratifiedCurrentDB::new(vec![
        Stratum { depth: 0.0, velocity: [0.30, 0.10, 0.0] },
        Stratum { depth: 50.0, velocity: [0.15, 0.05, 0.0] },
        Stratum { depth: 200.0, velocity: [0.02, 0.0, 0.0] },
    ])?;
    for d in [0.0, 25.0, 50.0, 125.0, 400.0] {
        println!("depth {d:>5} m: {:?}", db.interpolate(d).as_slice());
    }

    let m2 = Constituent { amplitude: 0.4, period: 44_712.0, phase: 0.0 };
    let tide = TidalModel::constituents(vec![m2], 45f64.to_radians())?;
    let gm = GaussMarkovParams { mu: 0.05, sigma: 0.01, bound: 0.1 };
    let field = CurrentField::new(db, tide, gm);
    let mut sampler = field.sampler(7)?;

    let here = ProjectedCoord::new(0.0, 0.0);
    for minute in 0..=10 {
        for _ in 0..600 {
            sampler.step(0.1)?;
        }
        let t = minute as f64 * 60.0;
        let v = sampler.current_at(&field, here, 30.0, t)?;
        println!("t {t:>4} s: north {:+.4} east {:+.4} down {:+.4}", v.x, v.y, v.z);
    }
    Ok(())
}
