use crate::error::CliError;
use crate::manifest::{read_text, RunManifest};
use crate::CommonArgs;
use omnidepth::fusion::Rig;
use omnidepth::geometry::ErpGrid;
use omnidepth::io::{write_pfm, write_pgm_mask, write_png_raster, PfmImage};
use omnidepth::scene::{render_depth, render_shaded, Scene};
use std::path::PathBuf;

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// Scene JSON (box half-extents, spheres, albedos).
    #[arg(long)]
    scene: PathBuf,
    /// Rig JSON (cameras + poses).
    #[arg(long)]
    rig: PathBuf,
    #[arg(long, default_value_t = 640)]
    width: usize,
    #[arg(long, default_value_t = 320)]
    height: usize,
    #[command(flatten)]
    common: CommonArgs,
}

pub fn run(args: SimulateArgs) -> Result<(), CliError> {
    let scene = Scene::from_json(&read_text(&args.scene)?)?;
    let rig = Rig::from_json(&read_text(&args.rig)?)?;
    let grid = ErpGrid::new(args.width, args.height)?;

    RunManifest::new("simulate", &args.common)
        .with_configs([args.scene.clone(), args.rig.clone()])
        .write()?;

    let fields = render_depth(&scene, &rig, grid)?;
    let images = render_shaded(&scene, &rig, grid)?;
    for (s, (field, image)) in fields.iter().zip(&images).enumerate() {
        write_png_raster(&args.common.out.join(format!("view_{s}.png")), image)?;
        let depth: Vec<f32> = field.depth().iter().map(|&d| d as f32).collect();
        write_pfm(
            &args.common.out.join(format!("depth_{s}.pfm")),
            &PfmImage::new_gray(grid.width(), grid.height(), depth),
        )?;
        write_pgm_mask(
            &args.common.out.join(format!("mask_{s}.pgm")),
            grid.width(),
            grid.height(),
            field.mask(),
        )?;
    }
    println!(
        "rendered {} views of the scene at {}x{}",
        fields.len(),
        grid.width(),
        grid.height()
    );
    Ok(())
}
