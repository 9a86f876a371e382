//! IDX binary ingestion (the MNIST container format): big-endian magic,
//! dimension sizes, then raw unsigned bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use auglag::data::DataError;
use auglag::Dataset;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, thiserror::Error)]
pub enum IdxError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad magic 0x{got:08x}, expected 0x{expected:08x}")]
    BadMagic {
        path: String,
        expected: u32,
        got: u32,
    },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("{path}: truncated, need {expected} bytes but only {got} remain")]
    TruncatedFile {
        path: String,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Data(#[from] DataError),
}

fn read_file(path: &Path) -> Result<Vec<u8>, IdxError> {
    fs::read(path).map_err(|source| IdxError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn take_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32, IdxError> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(IdxError::TruncatedFile {
            path: path.display().to_string(),
            expected: end,
            got: bytes.len(),
        });
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

/// Raw image tensor straight from an IDX file, before any scaling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImages {
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

pub fn read_idx_images(path: &Path) -> Result<RawImages, IdxError> {
    let bytes = read_file(path)?;
    let magic = take_u32(&bytes, 0, path)?;
    if magic != IMAGES_MAGIC {
        return Err(IdxError::BadMagic {
            path: path.display().to_string(),
            expected: IMAGES_MAGIC,
            got: magic,
        });
    }
    let n = take_u32(&bytes, 4, path)? as usize;
    let rows = take_u32(&bytes, 8, path)? as usize;
    let cols = take_u32(&bytes, 12, path)? as usize;
    let expected = 16 + n * rows * cols;
    if bytes.len() < expected {
        return Err(IdxError::TruncatedFile {
            path: path.display().to_string(),
            expected,
            got: bytes.len(),
        });
    }
    Ok(RawImages {
        n,
        rows,
        cols,
        pixels: bytes[16..expected].to_vec(),
    })
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>, IdxError> {
    let bytes = read_file(path)?;
    let magic = take_u32(&bytes, 0, path)?;
    if magic != LABELS_MAGIC {
        return Err(IdxError::BadMagic {
            path: path.display().to_string(),
            expected: LABELS_MAGIC,
            got: magic,
        });
    }
    let n = take_u32(&bytes, 4, path)? as usize;
    let expected = 8 + n;
    if bytes.len() < expected {
        return Err(IdxError::TruncatedFile {
            path: path.display().to_string(),
            expected,
            got: bytes.len(),
        });
    }
    Ok(bytes[8..expected].to_vec())
}

pub fn write_idx_images(
    path: &Path,
    n: usize,
    rows: usize,
    cols: usize,
    pixels: &[u8],
) -> std::io::Result<()> {
    assert_eq!(pixels.len(), n * rows * cols);
    let mut f = fs::File::create(path)?;
    f.write_all(&IMAGES_MAGIC.to_be_bytes())?;
    f.write_all(&(n as u32).to_be_bytes())?;
    f.write_all(&(rows as u32).to_be_bytes())?;
    f.write_all(&(cols as u32).to_be_bytes())?;
    f.write_all(pixels)
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&LABELS_MAGIC.to_be_bytes())?;
    f.write_all(&(labels.len() as u32).to_be_bytes())?;
    f.write_all(labels)
}

/// Loads an image/label pair into a [`Dataset`]: pixels scaled to [0, 1],
/// then standardized per feature. `limit` keeps only the first rows.
pub fn load_idx(
    images_path: &Path,
    labels_path: &Path,
    limit: Option<usize>,
) -> Result<Dataset, IdxError> {
    let images = read_idx_images(images_path)?;
    let labels = read_idx_labels(labels_path)?;
    if images.n != labels.len() {
        return Err(IdxError::CountMismatch {
            images: images.n,
            labels: labels.len(),
        });
    }
    let keep = limit.unwrap_or(images.n).min(images.n);
    let dim = images.rows * images.cols;
    let features: Vec<f64> = images.pixels[..keep * dim]
        .iter()
        .map(|&p| f64::from(p) / 255.0)
        .collect();
    let labels: Vec<usize> = labels[..keep].iter().map(|&l| l as usize).collect();
    let n_classes = labels.iter().copied().max().unwrap_or(0) + 1;
    let mut data = Dataset::new(features, dim, labels, n_classes)?;
    data.standardize();
    Ok(data)
}
