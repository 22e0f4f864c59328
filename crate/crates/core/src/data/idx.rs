//! Reader for the big-endian IDX format used by MNIST-style image sets.

use std::path::Path;

use super::DataError;

pub const IMAGES_MAGIC: [u8; 4] = [0, 0, 0x08, 0x03];
pub const LABELS_MAGIC: [u8; 4] = [0, 0, 0x08, 0x01];

/// Images as row-major `f64` pixels scaled to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<f64>,
}

impl IdxImages {
    pub fn image(&self, i: usize) -> &[f64] {
        let d = self.rows * self.cols;
        &self.pixels[i * d..(i + 1) * d]
    }
}

fn be_u32(bytes: &[u8], at: usize) -> Result<usize, DataError> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]) as usize)
        .ok_or(DataError::IdxTruncated {
            expected: at + 4,
            found: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], want: [u8; 4]) -> Result<(), DataError> {
    let found = bytes.get(..4).ok_or(DataError::IdxTruncated {
        expected: 4,
        found: bytes.len(),
    })?;
    if found != want {
        return Err(DataError::IdxFormat(format!(
            "bad magic {:02x?}, expected {:02x?}",
            found, want
        )));
    }
    Ok(())
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages, DataError> {
    check_magic(bytes, IMAGES_MAGIC)?;
    let count = be_u32(bytes, 4)?;
    let rows = be_u32(bytes, 8)?;
    let cols = be_u32(bytes, 12)?;
    let expected = 16 + count * rows * cols;
    if bytes.len() != expected {
        return Err(DataError::IdxTruncated {
            expected,
            found: bytes.len(),
        });
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: bytes[16..].iter().map(|&b| f64::from(b) / 255.0).collect(),
    })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>, DataError> {
    check_magic(bytes, LABELS_MAGIC)?;
    let count = be_u32(bytes, 4)?;
    if bytes.len() != 8 + count {
        return Err(DataError::IdxTruncated {
            expected: 8 + count,
            found: bytes.len(),
        });
    }
    Ok(bytes[8..].to_vec())
}

/// Loads an image file and its label file, checking they pair up.
pub fn load_idx_pair(images: &Path, labels: &Path) -> Result<(IdxImages, Vec<u8>), DataError> {
    let imgs = parse_images(&std::fs::read(images)?)?;
    let labs = parse_labels(&std::fs::read(labels)?)?;
    if imgs.count != labs.len() {
        return Err(DataError::IdxPairing {
            images: imgs.count,
            labels: labs.len(),
        });
    }
    Ok((imgs, labs))
}

/// Binary target: `+1` for digits above 4, `-1` otherwise.
pub fn digit_label(d: u8) -> f64 {
    if d > 4 {
        1.0
    } else {
        -1.0
    }
}
