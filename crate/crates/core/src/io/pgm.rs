use super::FormatError;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Writes a binary (P5) PGM mask: valid pixels as 255, invalid as 0.
pub fn write_pgm_mask(path: &Path, width: usize, height: usize, mask: &[bool]) -> Result<(), FormatError> {
    assert_eq!(mask.len(), width * height);
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{width} {height}\n255\n")?;
    let bytes: Vec<u8> = mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

/// Reads a P5 PGM as a mask: any nonzero byte counts as valid.
pub fn read_pgm_mask(path: &Path) -> Result<(usize, usize, Vec<bool>), FormatError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = String::new();
    r.read_line(&mut magic)?;
    if magic.trim() != "P5" {
        return Err(FormatError::malformed(
            "PGM",
            format!("unknown magic {:?}", magic.trim()),
        ));
    }
    // Header tokens may be spread over lines with comments.
    let mut tokens = Vec::new();
    while tokens.len() < 3 {
        let mut line = String::new();
        if r.read_line(&mut line)? == 0 {
            return Err(FormatError::malformed("PGM", "truncated header"));
        }
        let line = line.split('#').next().unwrap_or("");
        tokens.extend(line.split_whitespace().map(str::to_string));
    }
    let width: usize = tokens[0]
        .parse()
        .map_err(|_| FormatError::malformed("PGM", "bad width"))?;
    let height: usize = tokens[1]
        .parse()
        .map_err(|_| FormatError::malformed("PGM", "bad height"))?;
    let maxval: usize = tokens[2]
        .parse()
        .map_err(|_| FormatError::malformed("PGM", "bad maxval"))?;
    if maxval == 0 || maxval > 255 {
        return Err(FormatError::malformed("PGM", "unsupported maxval"));
    }
    let mut buf = vec![0u8; width * height];
    r.read_exact(&mut buf)?;
    Ok((width, height, buf.iter().map(|&b| b != 0).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.pgm");
        let mask = vec![true, false, false, true, true, false];
        write_pgm_mask(&p, 3, 2, &mask).unwrap();
        let (w, h, back) = read_pgm_mask(&p).unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(mask, back);
    }
}
