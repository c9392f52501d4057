pub mod bench;
pub mod complexity;
pub mod eval;
pub mod fuse;
pub mod net_forward;
pub mod simulate;
pub mod warp;

use crate::error::CliError;
use omnidepth::fusion::DepthField;
use omnidepth::geometry::ErpGrid;
use omnidepth::io::{read_pfm, read_pgm_mask, write_pfm, write_pgm_mask, PfmImage};
use std::path::Path;

/// Loads a single-channel depth PFM plus an optional PGM mask; without a
/// mask file, pixels with depth > 0 count as valid.
pub fn load_depth_field(
    depth_path: &Path,
    mask_path: Option<&Path>,
    conf_path: Option<&Path>,
) -> Result<DepthField, CliError> {
    let pfm = read_pfm(depth_path)?;
    if pfm.channels != 1 {
        return Err(CliError::shape(format!(
            "{}: depth PFM must be single-channel",
            depth_path.display()
        )));
    }
    let grid = ErpGrid::new(pfm.width, pfm.height).map_err(|e| {
        CliError::shape(format!("{}: {e}", depth_path.display()))
    })?;
    let mut mask: Vec<bool> = pfm.data.iter().map(|&d| d > 0.0).collect();
    if let Some(mp) = mask_path {
        let (w, h, m) = read_pgm_mask(mp)?;
        if w != pfm.width || h != pfm.height {
            return Err(CliError::shape(format!(
                "{}: mask is {w}x{h}, depth is {}x{}",
                mp.display(),
                pfm.width,
                pfm.height
            )));
        }
        for (dst, src) in mask.iter_mut().zip(m) {
            *dst = *dst && src;
        }
    }
    let depth: Vec<f64> = pfm
        .data
        .iter()
        .zip(&mask)
        .map(|(&d, &m)| if m { d as f64 } else { 0.0 })
        .collect();
    let confidence = match conf_path {
        Some(cp) => {
            let c = read_pfm(cp)?;
            if c.width != pfm.width || c.height != pfm.height || c.channels != 1 {
                return Err(CliError::shape(format!(
                    "{}: confidence shape mismatch",
                    cp.display()
                )));
            }
            Some(c.data.iter().map(|&v| v as f64).collect())
        }
        None => None,
    };
    DepthField::new(grid, depth, mask, confidence).map_err(CliError::from)
}

pub fn write_depth_field(
    dir: &Path,
    stem: &str,
    field: &DepthField,
) -> Result<(), CliError> {
    let grid = field.grid();
    let depth: Vec<f32> = field.depth().iter().map(|&d| d as f32).collect();
    write_pfm(
        &dir.join(format!("{stem}.pfm")),
        &PfmImage::new_gray(grid.width(), grid.height(), depth),
    )?;
    write_pgm_mask(
        &dir.join(format!("{stem}_mask.pgm")),
        grid.width(),
        grid.height(),
        field.mask(),
    )?;
    if let Some(conf) = field.confidence() {
        let conf: Vec<f32> = conf.iter().map(|&c| c as f32).collect();
        write_pfm(
            &dir.join(format!("{stem}_conf.pfm")),
            &PfmImage::new_gray(grid.width(), grid.height(), conf),
        )?;
    }
    Ok(())
}
