//! Subdivide and jitter a cuboid to make a family of rock-like variants.

use deepsim::meshtools::{distort, save_obj, DistortionParams, TriMesh};
use deepsim::scene::Vec3;

fn main() -> deepsim::Result<()> {
    let base = TriMesh::cuboid(Vec3::new(1.0, 0.6, 0.4));
    println!("base: {} vertices, {} faces", base.vertices.len(), base.triangles.len());
    for seed in 0..3 {
        let params = DistortionParams {
            subdivision_levels: 3,
            scale: Some(0.15),
            ..DistortionParams::new(0.8, seed)
        };
        let rock = distort(&base, &params)?;
        let path = std::env::temp_dir().join(format!("deepsim_rock_{seed}.obj"));
        save_obj(&rock, &path)?;
        println!(
            "seed {seed}: {} vertices, {} faces, area {:.3} m² -> {}",
            rock.vertices.len(),
            rock.triangles.len(),
            rock.surface_area(),
            path.display()
        );
    }
    Ok(())
}
