//! The `FFCSPEC1` container: interleaved little-endian real/imaginary pairs
//! behind an 8-byte magic and `height, width, channels` u32 header.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{MultiSpectrum, Spectrum, CONJ_SYMMETRY_TOL};
use crate::io;

pub const SPECTRUM_MAGIC: &[u8; 8] = b"FFCSPEC1";
const FORMAT: &'static str = "FFCSPEC1";

pub fn write_multispectrum<W: Write>(w: &mut W, spectra: &MultiSpectrum) -> Result<()> {
    io::write_magic(w, SPECTRUM_MAGIC)?;
    io::write_u32_le(w, spectra.height() as u32)?;
    io::write_u32_le(w, spectra.width() as u32)?;
    io::write_u32_le(w, spectra.channel_count() as u32)?;
    for channel in spectra.channels() {
        let mut interleaved = Vec::with_capacity(channel.values().len() * 2);
        for c in channel.values() {
            interleaved.push(c.re);
            interleaved.push(c.im);
        }
        io::write_f64_slice_le(w, &interleaved)?;
    }
    Ok(())
}

pub fn read_multispectrum<R: Read>(r: &mut R) -> Result<MultiSpectrum> {
    io::expect_magic(r, SPECTRUM_MAGIC, FORMAT)?;
    let height = io::read_u32_le(r, FORMAT)? as usize;
    let width = io::read_u32_le(r, FORMAT)? as usize;
    let channels = io::read_u32_le(r, FORMAT)? as usize;
    if height == 0 || width == 0 || channels == 0 {
        return Err(Error::format(
            FORMAT,
            format!("degenerate dimensions {channels}x{height}x{width}"),
        ));
    }
    let per_channel = io::checked_len(&[height, width, 2], FORMAT)?;
    let mut out = Vec::with_capacity(channels);
    for _ in 0..channels {
        let raw = io::read_f64_vec_le(r, per_channel, FORMAT)?;
        let values: Vec<Complex64> = raw
            .chunks_exact(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        // The flag is not stored; re-derive it from the data.
        let probe = Spectrum::new(height, width, values.clone(), false)?;
        let from_real = probe.symmetry_residual() <= CONJ_SYMMETRY_TOL;
        out.push(Spectrum::new(height, width, values, from_real)?);
    }
    MultiSpectrum::new(out)
}
