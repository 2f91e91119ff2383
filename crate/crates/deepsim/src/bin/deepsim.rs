use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use deepsim::bathymetry::{generate_tiles, load_heightmap, write_tiles};
use deepsim::meshtools::{distort, load_obj, save_obj, DistortionParams};
use deepsim::scenario::{self, ScenarioConfig};

#[derive(Parser)]
#[command(name = "deepsim", version, about = "Headless underwater simulation kernel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its logs into a directory.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Simulated seconds.
        #[arg(long)]
        duration: Option<f64>,
        /// Step length, seconds.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Cut an ESRI ASCII heightmap into overlapping OBJ tiles.
    Tiles {
        dem: PathBuf,
        #[arg(long)]
        tile_size: f64,
        #[arg(long)]
        overlap: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Subdivide and randomly jitter an OBJ mesh.
    Distort {
        input: PathBuf,
        #[arg(long)]
        extent: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        subdivide: u32,
        /// Displacement scale in meters; defaults to 2% of the bounding-box diagonal.
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a scenario file without running it.
    Validate { scenario: PathBuf },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            scenario: path,
            out,
            seed,
            duration,
            dt,
        } => {
            let mut cfg = ScenarioConfig::load(&path).with_context(|| format!("loading {}", path.display()))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(d) = duration {
                cfg.duration = d;
            }
            if let Some(d) = dt {
                cfg.dt = d;
            }
            let manifest = scenario::run(&cfg, &out)?;
            println!(
                "ran {} steps, wrote {} files to {}",
                manifest.steps + 1,
                manifest.outputs.len() + 1,
                out.display()
            );
        }
        Command::Tiles {
            dem,
            tile_size,
            overlap,
            out,
        } => {
            let h = load_heightmap(&dem)?;
            let tiles = generate_tiles(&h, tile_size, overlap)?;
            let manifest = write_tiles(&tiles, &out)?;
            println!("wrote {} tiles, manifest {}", tiles.len(), manifest.display());
        }
        Command::Distort {
            input,
            extent,
            seed,
            subdivide,
            scale,
            out,
        } => {
            let mesh = load_obj(&input)?;
            let params = DistortionParams {
                scale,
                subdivision_levels: subdivide,
                ..DistortionParams::new(extent, seed)
            };
            let result = distort(&mesh, &params)?;
            save_obj(&result, &out)?;
            println!(
                "{} vertices, {} triangles -> {}",
                result.vertices.len(),
                result.triangles.len(),
                out.display()
            );
        }
        Command::Validate { scenario: path } => {
            let cfg = ScenarioConfig::load(&path).with_context(|| format!("loading {}", path.display()))?;
            let diagnostics = scenario::validate(&cfg);
            if diagnostics.is_empty() {
                println!("{}: ok", path.display());
            } else {
                for d in &diagnostics {
                    println!("{}: {d}", path.display());
                }
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
