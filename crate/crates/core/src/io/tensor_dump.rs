use super::FormatError;
use crate::numeric::Tensor;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Writes a tensor as an ASCII shape line (space-separated extents) followed
/// by the row-major payload as little-endian f64.
pub fn write_tensor_dump(path: &Path, tensor: &Tensor) -> Result<(), FormatError> {
    let mut w = BufWriter::new(File::create(path)?);
    let shape: Vec<String> = tensor.shape().iter().map(|d| d.to_string()).collect();
    writeln!(w, "{}", shape.join(" "))?;
    for v in tensor.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tensor_dump(path: &Path) -> Result<Tensor, FormatError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = String::new();
    r.read_line(&mut header)?;
    let shape: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| FormatError::malformed("tensor dump", "bad shape header"))?;
    if shape.is_empty() {
        return Err(FormatError::malformed("tensor dump", "empty shape header"));
    }
    let n: usize = shape.iter().product();
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    let data = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Tensor::from_vec(&shape, data)
        .map_err(|e| FormatError::malformed("tensor dump", e.to_string()))
}
