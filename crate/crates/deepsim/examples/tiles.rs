//! Cut the demo DEM into overlapping tiles and stream them around a transect.

use std::path::Path;

use deepsim::bathymetry::{generate_tiles, load_heightmap, write_tiles, TileEvent, TileLayout, TileManager};
use deepsim::geodesy::ProjectedCoord;

fn main() -> deepsim::Result<()> {
    let dem = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/demo_bathymetry.asc");
    let h = load_heightmap(&dem)?;
    let (sw, ne) = h.extent();
    println!(
        "{} x {} nodes, {:.0} m x {:.0} m, depths {:?}",
        h.rows(),
        h.cols(),
        ne.x - sw.x,
        ne.y - sw.y,
        h.depth_range()
    );

    let tiles = generate_tiles(&h, 500.0, 50.0)?;
    let out = std::env::temp_dir().join("deepsim_tiles");
    let index = write_tiles(&tiles, &out)?;
    println!("{} tiles written, index at {}", tiles.len(), index.display());

    let mut manager = TileManager::new(TileLayout::for_heightmap(&h, 500.0, 50.0)?, 200.0, 320.0)?;
    let y = 0.5 * (sw.y + ne.y);
    for i in 0..=20 {
        let x = sw.x + (ne.x - sw.x) * i as f64 / 20.0;
        let events = manager.update(&[ProjectedCoord::new(x, y)]);
        if !events.is_empty() {
            let text: Vec<String> = events
                .iter()
                .map(|e| match e {
                    TileEvent::Load(t) => format!("+{},{}", t.row, t.col),
                    TileEvent::Unload(t) => format!("-{},{}", t.row, t.col),
                })
                .collect();
            println!("x = {:>12.1}: {}", x, text.join(" "));
        }
    }
    Ok(())
}
