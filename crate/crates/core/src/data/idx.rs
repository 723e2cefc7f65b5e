//! Big-endian IDX files as used by MNIST.

use std::fs;
use std::path::Path;

use super::csv_io::sha256_hex;
use super::{Dataset, Provenance, Task};
use crate::error::{Error, Result};
use crate::model::{Sample, Target};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize, what: &'static str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::Format {
            what,
            message: "truncated header".into(),
        })
}

/// Loads the first `limit` image/label pairs. Pixels are scaled to `[0, 1]`.
pub fn load_idx(images_path: &Path, labels_path: &Path, limit: usize) -> Result<Dataset> {
    if limit == 0 {
        return Err(Error::Precondition("limit must be positive (empty dataset)".into()));
    }
    let images = fs::read(images_path).map_err(|e| Error::io(images_path, e))?;
    let labels = fs::read(labels_path).map_err(|e| Error::io(labels_path, e))?;

    let magic = be_u32(&images, 0, "idx images")?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Format {
            what: "idx images",
            message: format!("magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"),
        });
    }
    let magic = be_u32(&labels, 0, "idx labels")?;
    if magic != LABELS_MAGIC {
        return Err(Error::Format {
            what: "idx labels",
            message: format!("magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"),
        });
    }
    let n_images = be_u32(&images, 4, "idx images")? as usize;
    let rows = be_u32(&images, 8, "idx images")? as usize;
    let cols = be_u32(&images, 12, "idx images")? as usize;
    let n_labels = be_u32(&labels, 4, "idx labels")? as usize;
    if n_images != n_labels {
        return Err(Error::Format {
            what: "idx",
            message: format!("{n_images} images but {n_labels} labels"),
        });
    }
    let pixels = rows * cols;
    if images.len() < 16 + n_images * pixels {
        return Err(Error::Format {
            what: "idx images",
            message: format!("truncated: {} bytes for {n_images} images", images.len()),
        });
    }
    if labels.len() < 8 + n_labels {
        return Err(Error::Format {
            what: "idx labels",
            message: format!("truncated: {} bytes for {n_labels} labels", labels.len()),
        });
    }
    let count = limit.min(n_images);
    if count == 0 {
        return Err(Error::Precondition("IDX files contain no records".into()));
    }
    let label_bytes = &labels[8..8 + count];
    let classes = label_bytes.iter().copied().max().unwrap_or(0) as usize + 1;
    let samples = (0..count)
        .map(|i| {
            let px = &images[16 + i * pixels..16 + (i + 1) * pixels];
            Sample::new(
                i,
                px.iter().map(|&p| p as f64 / 255.0).collect(),
                Target::Class(label_bytes[i] as usize),
            )
        })
        .collect();
    Dataset::new(
        samples,
        Task::Classification {
            classes: classes.max(2),
        },
        Provenance::File {
            path: images_path.display().to_string(),
            sha256: sha256_hex(&images),
        },
    )
}
