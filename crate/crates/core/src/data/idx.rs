use std::path::Path;

use super::{Dataset, LabeledSample};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn u32(&mut self, what: &'static str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Truncated {
                offset: self.pos as u64,
                what: what.into(),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let offset = self.pos as u64;
        let found = self.u32("magic number")?;
        if found != expected {
            return Err(Error::BadMagic { found, expected, offset });
        }
        Ok(())
    }
}

/// Parses an image file (magic 2051, `count×rows×cols` unsigned bytes) and
/// a label file (magic 2049). Pixels are scaled by `1/255`. The class count
/// is one more than the largest label, and at least 2.
pub fn read_idx<T: Scalar>(images: &[u8], labels: &[u8]) -> Result<Dataset<T>> {
    let mut img = Cursor { bytes: images, pos: 0 };
    img.magic(IMAGE_MAGIC)?;
    let count32 = img.u32("image count")?;
    let count = count32 as usize;
    let rows = img.u32("row count")? as usize;
    let cols = img.u32("column count")? as usize;

    let mut lab = Cursor { bytes: labels, pos: 0 };
    lab.magic(LABEL_MAGIC)?;
    let label_count_offset = lab.pos as u64;
    let label_count = lab.u32("label count")?;
    if label_count != count32 {
        return Err(Error::CountMismatch {
            images: count32,
            labels: label_count,
            offset: label_count_offset,
        });
    }

    let dim = rows * cols;
    let scale = T::of(1.0 / 255.0);
    let mut samples = Vec::with_capacity(count);
    let mut max_label = 0;
    for _ in 0..count {
        let px = img.take(dim, "pixel data")?;
        let label = lab.take(1, "label data")?[0] as usize;
        max_label = max_label.max(label);
        samples.push(LabeledSample {
            features: px.iter().map(|&b| T::of(b as f64) * scale).collect(),
            label,
        });
    }
    Dataset::new(samples, (max_label + 1).max(2))
}

/// Serializes a dataset whose features are multiples of `1/255`.
/// Returns `(image_bytes, label_bytes)`.
pub fn write_idx<T: Scalar>(ds: &Dataset<T>, rows: usize, cols: usize) -> Result<(Vec<u8>, Vec<u8>)> {
    if rows * cols != ds.feature_dim() {
        return Err(Error::DimensionMismatch {
            context: "write_idx",
            expected: ds.feature_dim().to_string(),
            found: format!("{rows}x{cols}"),
        });
    }
    let count = u32::try_from(ds.len()).map_err(|_| Error::InvalidArgument("too many samples for IDX".into()))?;
    let mut images = Vec::with_capacity(16 + ds.len() * rows * cols);
    images.extend(IMAGE_MAGIC.to_be_bytes());
    images.extend(count.to_be_bytes());
    images.extend((rows as u32).to_be_bytes());
    images.extend((cols as u32).to_be_bytes());
    let mut labels = Vec::with_capacity(8 + ds.len());
    labels.extend(LABEL_MAGIC.to_be_bytes());
    labels.extend(count.to_be_bytes());
    for s in ds.samples() {
        images.extend(s.features.iter().map(|v| (v.to_f64_lossy() * 255.0).round() as u8));
        let label = u8::try_from(s.label).map_err(|_| Error::InvalidArgument(format!("label {} exceeds a byte", s.label)))?;
        labels.push(label);
    }
    Ok((images, labels))
}

pub fn load_idx<T: Scalar>(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset<T>> {
    let images = std::fs::read(images_path)?;
    let labels = std::fs::read(labels_path)?;
    read_idx(&images, &labels)
}
