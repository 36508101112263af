//! Plain-text (P2) PGM emission for quick human inspection of spatial
//! tensors. Each channel is min–max normalized to 0..255 on its own.

use std::fmt::Write as _;
use std::path::Path;

use ffc_core::nn::Tensor;

use crate::error::{CliError, CliResult};

/// Render one channel of a (c, h, w) tensor as ASCII PGM text.
fn channel_pgm(values: &[f64], h: usize, w: usize) -> String {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut s = format!("P2\n{w} {h}\n255\n");
    for row in 0..h {
        let line: Vec<String> = (0..w)
            .map(|col| {
                let v = (values[row * w + col] - lo) / span;
                format!("{}", (v * 255.0).round().clamp(0.0, 255.0) as u8)
            })
            .collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

/// Write `<stem>.pgm` for single-channel tensors, `<stem>-c<k>.pgm` per
/// channel otherwise.
pub fn write_pgm(stem: &Path, tensor: &Tensor) -> CliResult<Vec<std::path::PathBuf>> {
    let shape = tensor.shape();
    if shape.len() != 3 {
        return Err(CliError::data(format!(
            "PGM rendering needs a (c, h, w) tensor, got shape {shape:?}"
        )));
    }
    let (c, h, w) = (shape[0], shape[1], shape[2]);
    let mut written = Vec::new();
    for k in 0..c {
        let path = if c == 1 {
            stem.with_extension("pgm")
        } else {
            stem.with_file_name(format!(
                "{}-c{k}.pgm",
                stem.file_name().unwrap_or_default().to_string_lossy()
            ))
        };
        let body = channel_pgm(&tensor.values()[k * h * w..(k + 1) * h * w], h, w);
        std::fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_is_ascii_and_normalized() {
        let dir = tempfile::tempdir().unwrap();
        let t = Tensor::new(vec![1, 2, 2], vec![0.0, 1.0, 2.0, 4.0]).unwrap();
        let files = write_pgm(&dir.path().join("img"), &t).unwrap();
        assert_eq!(files.len(), 1);
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert!(text.starts_with("P2\n2 2\n255\n"));
        assert!(text.contains("0 64"));
        assert!(text.contains("128 255"));
    }

    #[test]
    fn multichannel_gets_one_file_per_channel() {
        let dir = tempfile::tempdir().unwrap();
        let t = Tensor::new(vec![2, 1, 2], vec![0.0, 1.0, 5.0, 5.0]).unwrap();
        let files = write_pgm(&dir.path().join("img"), &t).unwrap();
        assert_eq!(files.len(), 2);
        // A constant channel normalizes to zero, not NaN.
        let text = std::fs::read_to_string(&files[1]).unwrap();
        assert!(text.contains("0 0"));
    }
}
