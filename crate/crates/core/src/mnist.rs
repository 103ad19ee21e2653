//! MNIST in its IDX container: strict parsing, normalization to `[0, 1]`, and
//! shuffled mini-batches.
//!
//! Files must already be decompressed; `.gz` archives are not read.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg::{shuffle_indices, Matrix, Rng};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const SIDE: u32 = 28;
pub const PIXELS: usize = (SIDE * SIDE) as usize;
pub const DATA_DIR_ENV: &str = "FTS_DATA_DIR";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxHeader {
    pub magic: u32,
    pub dims: Vec<u32>,
}

impl IdxHeader {
    fn read(bytes: &[u8], expected_magic: u32, ndims: usize) -> Result<IdxHeader> {
        let magic = be_u32(bytes, 0)?;
        if magic != expected_magic {
            return Err(Error::BadMagic {
                expected: expected_magic,
                found: magic,
            });
        }
        let dims = (0..ndims)
            .map(|i| be_u32(bytes, 4 + 4 * i))
            .collect::<Result<Vec<_>>>()?;
        Ok(IdxHeader { magic, dims })
    }

    fn len(&self) -> usize {
        4 + 4 * self.dims.len()
    }

    fn payload_len(&self) -> usize {
        self.dims.iter().map(|&d| d as usize).product()
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.magic.to_be_bytes());
        for d in &self.dims {
            out.extend_from_slice(&d.to_be_bytes());
        }
    }
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        .ok_or(Error::Truncated {
            expected: at + 4,
            found: bytes.len(),
        })
}

fn check_payload(header: &IdxHeader, bytes: &[u8]) -> Result<()> {
    let expected = header.len() + header.payload_len();
    match bytes.len().cmp(&expected) {
        std::cmp::Ordering::Less => Err(Error::Truncated {
            expected,
            found: bytes.len(),
        }),
        std::cmp::Ordering::Greater => Err(Error::TrailingBytes {
            expected,
            found: bytes.len(),
        }),
        std::cmp::Ordering::Equal => Ok(()),
    }
}

/// Raw `n × 28 × 28` grayscale bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawImages {
    pub count: usize,
    pub pixels: Vec<u8>,
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<RawImages> {
    let header = IdxHeader::read(bytes, IMAGE_MAGIC, 3)?;
    let (rows, cols) = (header.dims[1], header.dims[2]);
    if rows != SIDE || cols != SIDE {
        return Err(Error::BadDimensions { rows, cols });
    }
    check_payload(&header, bytes)?;
    Ok(RawImages {
        count: header.dims[0] as usize,
        pixels: bytes[header.len()..].to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let header = IdxHeader::read(bytes, LABEL_MAGIC, 1)?;
    check_payload(&header, bytes)?;
    let labels = bytes[header.len()..].to_vec();
    if let Some((index, &value)) = labels.iter().enumerate().find(|(_, &l)| l > 9) {
        return Err(Error::LabelOutOfRange {
            index,
            value: value as u32,
        });
    }
    Ok(labels)
}

pub fn encode_idx_images(raw: &RawImages) -> Vec<u8> {
    let header = IdxHeader {
        magic: IMAGE_MAGIC,
        dims: vec![raw.count as u32, SIDE, SIDE],
    };
    let mut out = Vec::with_capacity(header.len() + raw.pixels.len());
    header.write(&mut out);
    out.extend_from_slice(&raw.pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let header = IdxHeader {
        magic: LABEL_MAGIC,
        dims: vec![labels.len() as u32],
    };
    let mut out = Vec::with_capacity(header.len() + labels.len());
    header.write(&mut out);
    out.extend_from_slice(labels);
    out
}

/// `pixel / 255`, one flattened 784-wide row per image.
pub fn normalize(raw: &RawImages) -> Matrix {
    let data = raw.pixels.iter().map(|&p| p as f64 / 255.0).collect();
    Matrix::from_vec(raw.count, PIXELS, data).expect("parser guarantees count * 784 pixels")
}

/// Normalized images with their labels. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub images: Matrix,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn new(images: Matrix, labels: Vec<u8>) -> Result<Self> {
        if images.rows() != labels.len() {
            return Err(Error::CountMismatch {
                images: images.rows(),
                labels: labels.len(),
            });
        }
        if let Some((index, &value)) = labels.iter().enumerate().find(|(_, &l)| l > 9) {
            return Err(Error::LabelOutOfRange {
                index,
                value: value as u32,
            });
        }
        if images.as_slice().iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument("pixel outside [0, 1]".into()));
        }
        Ok(Dataset { images, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// The first `n` samples (all of them if `n` exceeds the size).
    pub fn take(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            images: self.images.slice_rows(0, n),
            labels: self.labels[..n].to_vec(),
        }
    }

    pub fn class_histogram(&self) -> [usize; 10] {
        let mut h = [0; 10];
        for &l in &self.labels {
            h[l as usize] += 1;
        }
        h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn stems(self) -> (&'static str, &'static str) {
        match self {
            Split::Train => ("train-images", "train-labels"),
            Split::Test => ("t10k-images", "t10k-labels"),
        }
    }

    pub fn expected_len(self) -> usize {
        match self {
            Split::Train => 60_000,
            Split::Test => 10_000,
        }
    }
}

/// Locates a split's files, accepting both `-idx3-ubyte` and `.idx3-ubyte` spellings.
fn split_paths(dir: &Path, split: Split) -> (PathBuf, PathBuf) {
    let (img, lbl) = split.stems();
    let pick = |stem: &str, idx: &str| {
        let dashed = dir.join(format!("{stem}-{idx}-ubyte"));
        if dashed.exists() {
            dashed
        } else {
            let dotted = dir.join(format!("{stem}.{idx}-ubyte"));
            if dotted.exists() {
                dotted
            } else {
                dashed
            }
        }
    };
    (pick(img, "idx3"), pick(lbl, "idx1"))
}

pub fn load_split(dir: &Path, split: Split) -> Result<Dataset> {
    let (img_path, lbl_path) = split_paths(dir, split);
    let img_bytes = fs::read(&img_path).map_err(|e| Error::io(&img_path, e))?;
    let lbl_bytes = fs::read(&lbl_path).map_err(|e| Error::io(&lbl_path, e))?;
    let raw = parse_idx_images(&img_bytes)?;
    let labels = parse_idx_labels(&lbl_bytes)?;
    if raw.count != labels.len() {
        return Err(Error::CountMismatch {
            images: raw.count,
            labels: labels.len(),
        });
    }
    Ok(Dataset {
        images: normalize(&raw),
        labels,
    })
}

/// Train and test splits from one directory.
pub fn load_mnist(dir: &Path) -> Result<(Dataset, Dataset)> {
    Ok((
        load_split(dir, Split::Train)?,
        load_split(dir, Split::Test)?,
    ))
}

/// Explicit directory first, then `$FTS_DATA_DIR`.
pub fn resolve_data_dir(explicit: Option<&Path>) -> Result<PathBuf> {
    if let Some(dir) = explicit {
        return Ok(dir.to_path_buf());
    }
    std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "no data directory: pass --data-dir or set {DATA_DIR_ENV}"
            ))
        })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitSummary {
    pub split: Split,
    pub count: usize,
    pub histogram: [usize; 10],
}

impl SplitSummary {
    pub fn matches_official(&self) -> bool {
        self.count == self.split.expected_len() && self.histogram.iter().all(|&c| c > 0)
    }
}

/// Parses both splits fully and summarizes them.
pub fn verify_dir(dir: &Path) -> Result<[SplitSummary; 2]> {
    let summarize = |split| -> Result<SplitSummary> {
        let ds = load_split(dir, split)?;
        Ok(SplitSummary {
            split,
            count: ds.len(),
            histogram: ds.class_histogram(),
        })
    };
    Ok([summarize(Split::Train)?, summarize(Split::Test)?])
}

/// One epoch of mini-batches over a fresh shuffle drawn at construction.
pub struct Batches<'a> {
    data: &'a Dataset,
    order: Vec<usize>,
    batch_size: usize,
    pos: usize,
}

impl Batches<'_> {
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.order
            .chunks(self.batch_size)
            .map(<[usize]>::len)
            .collect()
    }
}

impl Iterator for Batches<'_> {
    type Item = (Matrix, Vec<u8>);

    fn next(&mut self) -> Option<Self::Item> {
        if self.pos >= self.order.len() {
            return None;
        }
        let end = (self.pos + self.batch_size).min(self.order.len());
        let idx = &self.order[self.pos..end];
        self.pos = end;
        let images = self.data.images.select_rows(idx);
        let labels = idx.iter().map(|&i| self.data.labels[i]).collect();
        Some((images, labels))
    }
}

/// Shuffled mini-batches; the last one keeps the remainder.
pub fn batches<'a>(data: &'a Dataset, batch_size: usize, rng: &mut Rng) -> Result<Batches<'a>> {
    if batch_size == 0 {
        return Err(Error::InvalidArgument(
            "batch size must be at least 1".into(),
        ));
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Batches {
        data,
        order: shuffle_indices(rng, data.len()),
        batch_size,
        pos: 0,
    })
}
