//! Byte-level helpers shared by the binary file formats.
//!
//! All multi-byte integers and floats in the `FFC*` container formats are
//! little-endian; the IDX format keeps its conventional big-endian header.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub fn write_magic<W: Write>(w: &mut W, magic: &[u8; 8]) -> Result<()> {
    w.write_all(magic)?;
    Ok(())
}

pub fn expect_magic<R: Read>(r: &mut R, magic: &[u8; 8], format: &'static str) -> Result<()> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(|_| {
        Error::format(format, "file too short for magic header")
    })?;
    if &buf != magic {
        return Err(Error::format(
            format,
            format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&buf),
                String::from_utf8_lossy(magic)
            ),
        ));
    }
    Ok(())
}

pub fn write_u32_le<W: Write>(w: &mut W, value: u32) -> Result<()> {
    w.write_all(&value.to_le_bytes())?;
    Ok(())
}

pub fn read_u32_le<R: Read>(r: &mut R, format: &'static str) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| Error::format(format, "truncated u32 field"))?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_u32_be<R: Read>(r: &mut R, format: &'static str) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| Error::format(format, "truncated u32 field"))?;
    Ok(u32::from_be_bytes(buf))
}

pub fn write_u32_be<W: Write>(w: &mut W, value: u32) -> Result<()> {
    w.write_all(&value.to_be_bytes())?;
    Ok(())
}

pub fn write_f64_be<W: Write>(w: &mut W, value: f64) -> Result<()> {
    w.write_all(&value.to_be_bytes())?;
    Ok(())
}

pub fn read_f64_be<R: Read>(r: &mut R, format: &'static str) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::format(format, "truncated f64 field"))?;
    Ok(f64::from_be_bytes(buf))
}

/// Fails if the reader still has bytes left.
pub fn expect_eof<R: Read>(r: &mut R, format: &'static str) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => Ok(()),
        Ok(_) => Err(Error::format(format, "trailing bytes after payload")),
        Err(e) => Err(e.into()),
    }
}

pub fn write_f64_le<W: Write>(w: &mut W, value: f64) -> Result<()> {
    w.write_all(&value.to_le_bytes())?;
    Ok(())
}

pub fn read_f64_le<R: Read>(r: &mut R, format: &'static str) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::format(format, "truncated f64 field"))?;
    Ok(f64::from_le_bytes(buf))
}

pub fn write_f64_slice_le<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn read_f64_vec_le<R: Read>(r: &mut R, count: usize, format: &'static str) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::format(format, "truncated payload"))?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Multiply dimension sizes, rejecting overflow instead of wrapping.
pub fn checked_len(dims: &[usize], format: &'static str) -> Result<usize> {
    dims.iter().try_fold(1usize, |acc, &d| {
        acc.checked_mul(d)
            .ok_or_else(|| Error::format(format, format!("dimension product overflows: {dims:?}")))
    })
}

/// Write an 8-bit binary PGM (P5) image, min-max normalized to [0, 255].
///
/// Constant images map to all zeros. Intended for eyeballing spatial
/// renderings, not for round-tripping data.
pub fn write_pgm<W: Write>(w: &mut W, height: usize, width: usize, values: &[f64]) -> Result<()> {
    assert_eq!(values.len(), height * width);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    writeln!(w, "P5")?;
    writeln!(w, "{width} {height}")?;
    writeln!(w, "255")?;
    let bytes: Vec<u8> = values
        .iter()
        .map(|&v| {
            if span > 0.0 {
                (((v - lo) / span) * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        })
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}
