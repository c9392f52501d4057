use crate::error::CliError;
use crate::manifest::{read_text, RunManifest};
use crate::CommonArgs;
use omnidepth::geometry::{warp_camera_to_erp, CameraModel, ErpGrid};
use omnidepth::io::{read_png_raster, write_png_raster, write_pgm_mask};
use std::path::PathBuf;

#[derive(Debug, clap::Args)]
pub struct WarpArgs {
    /// Source camera image (PNG).
    #[arg(long)]
    image: PathBuf,
    /// Camera model JSON.
    #[arg(long)]
    camera: PathBuf,
    /// ERP width (must be 2x the height).
    #[arg(long, default_value_t = 640)]
    width: usize,
    /// ERP height.
    #[arg(long, default_value_t = 320)]
    height: usize,
    #[command(flatten)]
    common: CommonArgs,
}

pub fn run(args: WarpArgs) -> Result<(), CliError> {
    let camera = CameraModel::from_json(&read_text(&args.camera)?)
        .map_err(|e| CliError::config(e.to_string()))?;
    let grid = ErpGrid::new(args.width, args.height)?;
    let image = read_png_raster(&args.image)?;

    RunManifest::new("warp", &args.common)
        .with_inputs([args.image.clone()])
        .with_configs([args.camera.clone()])
        .write()?;

    let (erp, mask) = warp_camera_to_erp(&image, &camera, grid)?;
    write_png_raster(&args.common.out.join("erp.png"), &erp)?;
    write_pgm_mask(
        &args.common.out.join("mask.pgm"),
        grid.width(),
        grid.height(),
        &mask,
    )?;
    let covered = mask.iter().filter(|&&m| m).count();
    println!(
        "warped {} -> {}x{} ERP, mask covers {}/{} pixels",
        args.image.display(),
        grid.width(),
        grid.height(),
        covered,
        grid.len()
    );
    Ok(())
}
