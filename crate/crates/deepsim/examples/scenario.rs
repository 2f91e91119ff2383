//! Run the bundled demo scenario for a few seconds and list its outputs.

use std::path::Path;

use deepsim::scenario::{self, ScenarioConfig};

fn main() -> deepsim::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/demo.yaml");
    let mut cfg = ScenarioConfig::load(&path)?;
    cfg.duration = 5.0;
    let out = std::env::temp_dir().join("deepsim_demo");
    let manifest = scenario::run(&cfg, &out)?;
    println!("{} steps, seed {}, outputs in {}", manifest.steps, manifest.seed, out.display());
    for entry in &manifest.outputs {
        println!("  {:<36} {}", entry.file, &entry.sha256[..16]);
    }
    Ok(())
}
