//! Raster and tensor file formats.
//!
//! - PFM (`Pf` grayscale / `PF` color), little-endian with negative scale
//!   header, bottom-up scanline order. Used for depth and confidence maps.
//! - PGM (`P5`, 8-bit) for validity masks: 255 = valid, 0 = invalid.
//! - PNG (8-bit RGB) for images, via the `image` crate.
//! - Raw tensor dumps: an ASCII shape line followed by little-endian f64.

mod pfm;
mod pgm;
mod png;
mod tensor_dump;

pub use pfm::{read_pfm, write_pfm, PfmImage};
pub use pgm::{read_pgm_mask, write_pgm_mask};
pub use png::{read_png_raster, write_png_raster};
pub use tensor_dump::{read_tensor_dump, write_tensor_dump};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad {format} data: {detail}")]
    Malformed {
        format: &'static str,
        detail: String,
    },
    #[error("image error: {0}")]
    Image(String),
}

impl FormatError {
    fn malformed(format: &'static str, detail: impl Into<String>) -> Self {
        Self::Malformed {
            format,
            detail: detail.into(),
        }
    }
}
