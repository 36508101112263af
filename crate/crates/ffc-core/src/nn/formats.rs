//! On-disk formats: IDX ingestion, the FFCTENS1 tensor container, FFCCKPT1
//! checkpoints, and a directory convention for dataset splits.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{
    checked_len, expect_eof, expect_magic, read_f64_be, read_f64_vec_le, read_u32_be, read_u32_le,
    write_f64_be, write_f64_slice_le, write_magic, write_u32_be, write_u32_le,
};
use crate::nn::dataset::LabeledDataset;
use crate::nn::model::{ArchSpec, Checkpoint, ModelSpec, TrainMeta};
use crate::nn::planted::PlantedInfo;
use crate::nn::tensor::Tensor;

pub const TENSOR_MAGIC: &[u8; 8] = b"FFCTENS1";
pub const CHECKPOINT_MAGIC: &[u8; 8] = b"FFCCKPT1";

const IDX: &str = "IDX";
const TENSOR: &str = "FFCTENS1";
const CHECKPOINT: &str = "FFCCKPT1";

const IDX_U8: u8 = 0x08;
const IDX_F64: u8 = 0x0e;

enum IdxPayload {
    U8(Vec<u8>),
    F64(Vec<f64>),
}

fn read_idx_raw<R: Read>(r: &mut R) -> Result<(Vec<usize>, IdxPayload)> {
    let mut head = [0u8; 4];
    r.read_exact(&mut head)
        .map_err(|_| Error::format(IDX, "truncated magic"))?;
    if head[0] != 0 || head[1] != 0 {
        return Err(Error::format(
            IDX,
            format!("bad magic {:02x}{:02x}{:02x}{:02x}", head[0], head[1], head[2], head[3]),
        ));
    }
    let rank = head[3] as usize;
    if rank == 0 {
        return Err(Error::format(IDX, "zero-rank payload"));
    }
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        dims.push(read_u32_be(r, IDX)? as usize);
    }
    let count = checked_len(&dims, IDX)?;
    let payload = match head[2] {
        IDX_U8 => {
            let mut bytes = vec![0u8; count];
            r.read_exact(&mut bytes)
                .map_err(|_| Error::format(IDX, "truncated payload"))?;
            IdxPayload::U8(bytes)
        }
        IDX_F64 => {
            let mut values = Vec::with_capacity(count);
            for _ in 0..count {
                values.push(read_f64_be(r, IDX)?);
            }
            IdxPayload::F64(values)
        }
        other => {
            return Err(Error::format(
                IDX,
                format!("unsupported element type 0x{other:02x}"),
            ))
        }
    };
    expect_eof(r, IDX)?;
    Ok((dims, payload))
}

/// Read an image file: rank 3 (N, H, W), element type u8 or f64. Byte
/// payloads are rescaled to [0,1]; float payloads are taken as stored.
/// Returns a [N,1,H,W] batch.
pub fn read_idx_images(path: &Path) -> Result<Tensor> {
    let mut r = BufReader::new(File::open(path)?);
    let (dims, payload) = read_idx_raw(&mut r)?;
    if dims.len() != 3 {
        return Err(Error::format(
            IDX,
            format!("image files must be rank 3 (N, H, W), got rank {}", dims.len()),
        ));
    }
    let values = match payload {
        IdxPayload::U8(bytes) => bytes.into_iter().map(|b| b as f64 / 255.0).collect(),
        IdxPayload::F64(values) => values,
    };
    Tensor::new(vec![dims[0], 1, dims[1], dims[2]], values)
}

/// Read a label file: rank 1, element type u8.
pub fn read_idx_labels(path: &Path) -> Result<Vec<usize>> {
    let mut r = BufReader::new(File::open(path)?);
    let (dims, payload) = read_idx_raw(&mut r)?;
    if dims.len() != 1 {
        return Err(Error::format(
            IDX,
            format!("label files must be rank 1, got rank {}", dims.len()),
        ));
    }
    match payload {
        IdxPayload::U8(bytes) => Ok(bytes.into_iter().map(|b| b as usize).collect()),
        IdxPayload::F64(_) => Err(Error::format(IDX, "labels must be 8-bit integers")),
    }
}

/// Write a single-channel [N,1,H,W] batch as a rank-3 f64 IDX file.
pub fn write_idx_images(path: &Path, batch: &Tensor) -> Result<()> {
    let shape = batch.shape();
    if shape.len() != 4 || shape[1] != 1 {
        return Err(Error::format(
            IDX,
            format!("only [N,1,H,W] batches can be written, got {shape:?}"),
        ));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&[0, 0, IDX_F64, 3])?;
    for &d in [shape[0], shape[2], shape[3]].iter() {
        write_u32_be(&mut w, fit_u32(d, IDX)?)?;
    }
    for &v in batch.values() {
        write_f64_be(&mut w, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_idx_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&[0, 0, IDX_U8, 1])?;
    write_u32_be(&mut w, fit_u32(labels.len(), IDX)?)?;
    for &l in labels {
        let byte = u8::try_from(l)
            .map_err(|_| Error::format(IDX, format!("label {l} exceeds the 8-bit range")))?;
        w.write_all(&[byte])?;
    }
    w.flush()?;
    Ok(())
}

/// Labels file that pairs with an image file: the first `images` in the file
/// name becomes `labels`; otherwise `-labels` is appended to the stem.
pub fn sibling_labels_path(images: &Path) -> PathBuf {
    let name = images
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or_default();
    let labels_name = if name.contains("images") {
        name.replacen("images", "labels", 1)
    } else {
        match name.rsplit_once('.') {
            Some((stem, ext)) => format!("{stem}-labels.{ext}"),
            None => format!("{name}-labels"),
        }
    };
    images.with_file_name(labels_name)
}

/// Load an image/label IDX pair as a dataset. `path` names the image file;
/// the label file is found by [`sibling_labels_path`]. The class count is
/// one past the largest label.
pub fn load_idx(path: &Path) -> Result<LabeledDataset> {
    let batch = read_idx_images(path)?;
    let labels = read_idx_labels(&sibling_labels_path(path))?;
    let samples = split_batch(&batch)?;
    if samples.len() != labels.len() {
        return Err(Error::format(
            IDX,
            format!("{} images but {} labels", samples.len(), labels.len()),
        ));
    }
    let classes = labels.iter().copied().max().unwrap_or(0) + 1;
    LabeledDataset::new(samples, labels, classes)
}

/// Split a [N,...] batch into per-sample tensors.
pub fn split_batch(batch: &Tensor) -> Result<Vec<Tensor>> {
    let shape = batch.shape();
    if shape.len() < 2 {
        return Err(Error::DimensionMismatch(format!(
            "cannot split a rank-{} tensor into samples",
            shape.len()
        )));
    }
    let sample_shape = shape[1..].to_vec();
    batch
        .rows()
        .map(|chunk| Tensor::new(sample_shape.clone(), chunk.to_vec()))
        .collect()
}

fn fit_u32(value: usize, format: &'static str) -> Result<u32> {
    u32::try_from(value)
        .map_err(|_| Error::format(format, format!("dimension {value} exceeds the u32 range")))
}

pub fn write_tensor_file(path: &Path, tensor: &Tensor) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_magic(&mut w, TENSOR_MAGIC)?;
    write_u32_le(&mut w, fit_u32(tensor.shape().len(), TENSOR)?)?;
    for &d in tensor.shape() {
        write_u32_le(&mut w, fit_u32(d, TENSOR)?)?;
    }
    write_f64_slice_le(&mut w, tensor.values())?;
    w.flush()?;
    Ok(())
}

pub fn load_tensor_file(path: &Path) -> Result<Tensor> {
    let mut r = BufReader::new(File::open(path)?);
    expect_magic(&mut r, TENSOR_MAGIC, TENSOR)?;
    let rank = read_u32_le(&mut r, TENSOR)? as usize;
    if rank == 0 || rank > 16 {
        return Err(Error::format(TENSOR, format!("implausible rank {rank}")));
    }
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        dims.push(read_u32_le(&mut r, TENSOR)? as usize);
    }
    let count = checked_len(&dims, TENSOR)?;
    let values = read_f64_vec_le(&mut r, count, TENSOR)?;
    expect_eof(&mut r, TENSOR)?;
    Tensor::new(dims, values)
}

fn checkpoint_text(ckpt: &Checkpoint) -> String {
    fn join(list: &[usize]) -> String {
        list.iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
    let spec = ckpt.spec();
    let meta = ckpt.meta();
    let mut s = String::new();
    match &spec.arch {
        ArchSpec::Mlp { hidden } => {
            s.push_str("arch=mlp\n");
            s.push_str(&format!("hidden={}\n", join(hidden)));
        }
        ArchSpec::ConvNet { channels, kernel } => {
            s.push_str("arch=convnet\n");
            s.push_str(&format!("channels={}\n", join(channels)));
            s.push_str(&format!("kernel={kernel}\n"));
        }
    }
    s.push_str(&format!(
        "input={}x{}x{}\n",
        spec.input.0, spec.input.1, spec.input.2
    ));
    s.push_str(&format!("classes={}\n", spec.classes));
    s.push_str(&format!("seed={}\n", meta.seed));
    s.push_str(&format!("epochs={}\n", meta.epochs));
    s.push_str(&format!("step_size={}\n", meta.step_size));
    s.push_str(&format!("batch_size={}\n", meta.batch_size));
    s.push_str(&format!("final_loss={}\n", meta.final_loss));
    s.push_str(&format!("final_accuracy={}\n", meta.final_accuracy));
    s.push_str(&format!("params={}\n", ckpt.params().len()));
    s
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let text = checkpoint_text(ckpt);
    let mut w = BufWriter::new(File::create(path)?);
    write_magic(&mut w, CHECKPOINT_MAGIC)?;
    write_u32_le(&mut w, fit_u32(text.len(), CHECKPOINT)?)?;
    w.write_all(text.as_bytes())?;
    write_f64_slice_le(&mut w, ckpt.params())?;
    w.flush()?;
    Ok(())
}

struct FieldReader<'a> {
    lines: std::str::Lines<'a>,
}

impl<'a> FieldReader<'a> {
    fn take(&mut self, key: &str) -> Result<&'a str> {
        let line = self
            .lines
            .next()
            .ok_or_else(|| Error::format(CHECKPOINT, format!("missing field `{key}`")))?;
        match line.split_once('=') {
            Some((k, v)) if k == key => Ok(v),
            _ => Err(Error::format(
                CHECKPOINT,
                format!("expected field `{key}`, found `{line}`"),
            )),
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let raw = self.take(key)?;
        raw.parse().map_err(|_| {
            Error::format(CHECKPOINT, format!("field `{key}` has invalid value `{raw}`"))
        })
    }
}

fn parse_usize_list(raw: &str, key: &str) -> Result<Vec<usize>> {
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|part| {
            part.parse().map_err(|_| {
                Error::format(
                    CHECKPOINT,
                    format!("field `{key}` has invalid entry `{part}`"),
                )
            })
        })
        .collect()
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut r = BufReader::new(File::open(path)?);
    expect_magic(&mut r, CHECKPOINT_MAGIC, CHECKPOINT)?;
    let text_len = read_u32_le(&mut r, CHECKPOINT)? as usize;
    let mut text_bytes = vec![0u8; text_len];
    r.read_exact(&mut text_bytes)
        .map_err(|_| Error::format(CHECKPOINT, "truncated spec block"))?;
    let text = String::from_utf8(text_bytes)
        .map_err(|_| Error::format(CHECKPOINT, "spec block is not UTF-8"))?;

    let mut fields = FieldReader { lines: text.lines() };
    let arch = match fields.take("arch")? {
        "mlp" => ArchSpec::Mlp {
            hidden: parse_usize_list(fields.take("hidden")?, "hidden")?,
        },
        "convnet" => ArchSpec::ConvNet {
            channels: parse_usize_list(fields.take("channels")?, "channels")?,
            kernel: fields.parse("kernel")?,
        },
        other => {
            return Err(Error::format(
                CHECKPOINT,
                format!("unknown architecture `{other}`"),
            ))
        }
    };
    let input_raw = fields.take("input")?;
    let parts: Vec<&str> = input_raw.split('x').collect();
    if parts.len() != 3 {
        return Err(Error::format(
            CHECKPOINT,
            format!("field `input` must be CxHxW, got `{input_raw}`"),
        ));
    }
    let mut dims = [0usize; 3];
    for (slot, part) in dims.iter_mut().zip(&parts) {
        *slot = part.parse().map_err(|_| {
            Error::format(CHECKPOINT, format!("field `input` has invalid entry `{part}`"))
        })?;
    }
    let spec = ModelSpec {
        arch,
        input: (dims[0], dims[1], dims[2]),
        classes: fields.parse("classes")?,
    };
    let meta = TrainMeta {
        seed: fields.parse("seed")?,
        epochs: fields.parse("epochs")?,
        step_size: fields.parse("step_size")?,
        batch_size: fields.parse("batch_size")?,
        final_loss: fields.parse("final_loss")?,
        final_accuracy: fields.parse("final_accuracy")?,
    };
    let count: usize = fields.parse("params")?;
    if let Some(extra) = fields.lines.next() {
        return Err(Error::format(
            CHECKPOINT,
            format!("unexpected trailing field `{extra}`"),
        ));
    }
    let params = read_f64_vec_le(&mut r, count, CHECKPOINT)?;
    expect_eof(&mut r, CHECKPOINT)?;
    Checkpoint::new(spec, params, meta)
}

#[derive(Serialize, Deserialize)]
struct SplitMeta {
    classes: usize,
    planted: Option<PlantedInfo>,
}

/// Write `{name}-images.ffct`, `{name}-labels.idx` and `{name}-meta.json`
/// under `dir`. Images use the exact f64 container so splits round-trip
/// bit-identically.
pub fn save_split(dir: &Path, name: &str, ds: &LabeledDataset) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let refs: Vec<&Tensor> = ds.samples().iter().collect();
    let batch = Tensor::batch_of(&refs)?;
    write_tensor_file(&dir.join(format!("{name}-images.ffct")), &batch)?;
    write_idx_labels(&dir.join(format!("{name}-labels.idx")), ds.labels())?;
    let meta = SplitMeta {
        classes: ds.classes(),
        planted: ds.planted().cloned(),
    };
    let json = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::format("JSON", e.to_string()))?;
    std::fs::write(dir.join(format!("{name}-meta.json")), json)?;
    Ok(())
}

pub fn load_split(dir: &Path, name: &str) -> Result<LabeledDataset> {
    let batch = load_tensor_file(&dir.join(format!("{name}-images.ffct")))?;
    let samples = split_batch(&batch)?;
    let labels = read_idx_labels(&dir.join(format!("{name}-labels.idx")))?;
    let raw = std::fs::read_to_string(dir.join(format!("{name}-meta.json")))?;
    let meta: SplitMeta =
        serde_json::from_str(&raw).map_err(|e| Error::format("JSON", e.to_string()))?;
    let ds = LabeledDataset::new(samples, labels, meta.classes)?;
    Ok(match meta.planted {
        Some(p) => ds.with_planted(p),
        None => ds,
    })
}
