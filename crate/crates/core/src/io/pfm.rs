use super::FormatError;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Float raster with 1 (`Pf`) or 3 (`PF`) channels. `data` is stored
/// top-down row-major in memory; the on-disk scanline order is bottom-up per
/// the format convention.
#[derive(Debug, Clone, PartialEq)]
pub struct PfmImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl PfmImage {
    pub fn new_gray(width: usize, height: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            channels: 1,
            data,
        }
    }
}

pub fn write_pfm(path: &Path, img: &PfmImage) -> Result<(), FormatError> {
    assert!(img.channels == 1 || img.channels == 3, "PFM is 1 or 3 channel");
    let mut w = BufWriter::new(File::create(path)?);
    let magic = if img.channels == 1 { "Pf" } else { "PF" };
    // Negative scale marks little-endian payload.
    write!(w, "{magic}\n{} {}\n-1.0\n", img.width, img.height)?;
    let stride = img.width * img.channels;
    for row in (0..img.height).rev() {
        for v in &img.data[row * stride..(row + 1) * stride] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_pfm(path: &Path) -> Result<PfmImage, FormatError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = String::new();
    r.read_line(&mut header)?;
    let channels = match header.trim() {
        "Pf" => 1,
        "PF" => 3,
        other => {
            return Err(FormatError::malformed(
                "PFM",
                format!("unknown magic {other:?}"),
            ))
        }
    };
    let mut dims = String::new();
    r.read_line(&mut dims)?;
    let mut it = dims.split_whitespace();
    let width: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| FormatError::malformed("PFM", "bad width"))?;
    let height: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| FormatError::malformed("PFM", "bad height"))?;
    let mut scale_line = String::new();
    r.read_line(&mut scale_line)?;
    let scale: f32 = scale_line
        .trim()
        .parse()
        .map_err(|_| FormatError::malformed("PFM", "bad scale"))?;
    let little_endian = scale < 0.0;

    let stride = width * channels;
    let mut buf = vec![0u8; stride * height * 4];
    r.read_exact(&mut buf)?;
    let mut data = vec![0f32; stride * height];
    for (i, chunk) in buf.chunks_exact(4).enumerate() {
        let bytes = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little_endian {
            f32::from_le_bytes(bytes)
        } else {
            f32::from_be_bytes(bytes)
        };
        // flip bottom-up scanlines to top-down memory order
        let row = height - 1 - i / stride;
        let col = i % stride;
        data[row * stride + col] = v;
    }
    Ok(PfmImage {
        width,
        height,
        channels,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_is_little_endian_negative_scale() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pfm");
        write_pfm(&p, &PfmImage::new_gray(2, 2, vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert!(bytes.starts_with(b"Pf\n2 2\n-1.0\n"));
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.pfm");
        std::fs::write(&p, b"P6\n1 1\n255\n000").unwrap();
        assert!(read_pfm(&p).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_preserves_values(values in proptest::collection::vec(-1e6f32..1e6, 12)) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("rt.pfm");
            let img = PfmImage::new_gray(4, 3, values);
            write_pfm(&p, &img).unwrap();
            let back = read_pfm(&p).unwrap();
            prop_assert_eq!(img, back);
        }
    }
}
