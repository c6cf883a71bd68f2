//! Reader for the IDX container used by MNIST-style datasets.
//!
//! Layout: two zero bytes, a type byte (`0x08` = unsigned byte), a dimension
//! count, then one big-endian `u32` per dimension and the raw data.

use std::fs;
use std::path::{Path, PathBuf};

use super::data::Dataset;
use crate::error::{Error, Result};

pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const IMAGE_MAGIC: u32 = 0x0000_0803;

/// Images scaled to `[0, 1]`, row-major `count x rows x cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<f64>,
}

impl IdxImages {
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.count, self.rows, self.cols)
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    if !path.exists() {
        return Err(Error::MissingDataset(path.to_path_buf()));
    }
    Ok(fs::read(path)?)
}

fn header(path: &Path, bytes: &[u8], magic: u32) -> Result<Vec<usize>> {
    let ndim = (magic & 0xff) as usize;
    let head = 4 + 4 * ndim;
    if bytes.len() < 4 {
        return Err(Error::Truncated { path: path.to_path_buf(), needed: 4, found: bytes.len() });
    }
    let found = u32::from_be_bytes(bytes[..4].try_into().unwrap());
    if found != magic {
        return Err(Error::BadMagic { path: path.to_path_buf(), magic: found });
    }
    if bytes.len() < head {
        return Err(Error::Truncated { path: path.to_path_buf(), needed: head, found: bytes.len() });
    }
    let dims: Vec<usize> =
        (0..ndim).map(|i| u32::from_be_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize).collect();
    let needed = head + dims.iter().product::<usize>();
    if bytes.len() < needed {
        return Err(Error::Truncated { path: path.to_path_buf(), needed, found: bytes.len() });
    }
    Ok(dims)
}

pub fn load_images(path: impl AsRef<Path>) -> Result<IdxImages> {
    let path = path.as_ref();
    let bytes = read(path)?;
    let dims = header(path, &bytes, IMAGE_MAGIC)?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    let body = &bytes[16..16 + count * rows * cols];
    Ok(IdxImages { count, rows, cols, pixels: body.iter().map(|&b| b as f64 / 255.0).collect() })
}

pub fn load_labels(path: impl AsRef<Path>, classes: usize) -> Result<Vec<u32>> {
    let path = path.as_ref();
    let bytes = read(path)?;
    let dims = header(path, &bytes, LABEL_MAGIC)?;
    let body = &bytes[8..8 + dims[0]];
    body.iter()
        .enumerate()
        .map(|(position, &label)| {
            if (label as usize) < classes {
                Ok(label as u32)
            } else {
                Err(Error::LabelOutOfRange { path: path.to_path_buf(), position, label, classes })
            }
        })
        .collect()
}

/// Image and label files as one dataset with flattened images.
pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>, classes: usize) -> Result<Dataset> {
    let img = load_images(&images)?;
    let lab = load_labels(&labels, classes)?;
    if img.count != lab.len() {
        return Err(Error::DimensionMismatch { expected: img.count, actual: lab.len() });
    }
    Dataset::new(img.rows * img.cols, classes, img.pixels, lab)
}

/// Standard MNIST file names under `dir`: `(train images, train labels,
/// test images, test labels)`.
pub fn mnist_paths(dir: impl AsRef<Path>) -> [PathBuf; 4] {
    let dir = dir.as_ref();
    [
        dir.join("train-images-idx3-ubyte"),
        dir.join("train-labels-idx1-ubyte"),
        dir.join("t10k-images-idx3-ubyte"),
        dir.join("t10k-labels-idx1-ubyte"),
    ]
}

/// Serializes images in IDX form. Used to build fixtures.
pub fn encode_images(count: usize, rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = IMAGE_MAGIC.to_be_bytes().to_vec();
    for n in [count, rows, cols] {
        out.extend_from_slice(&(n as u32).to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = LABEL_MAGIC.to_be_bytes().to_vec();
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, bytes: &[u8]) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, bytes).unwrap();
        p
    }

    #[test]
    fn four_image_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let pixels: Vec<u8> = (0..4 * 28 * 28).map(|i| (i % 256) as u8).collect();
        // magic, then big-endian 4, 28, 28
        let mut bytes = vec![0, 0, 8, 3, 0, 0, 0, 4, 0, 0, 0, 28, 0, 0, 0, 28];
        bytes.extend_from_slice(&pixels);
        assert_eq!(bytes, encode_images(4, 28, 28, &pixels));
        let img = load_images(write(dir.path(), "img", &bytes)).unwrap();
        assert_eq!(img.shape(), (4, 28, 28));
        assert_eq!(img.pixels[255], 1.0);
        assert_eq!(img.pixels[256], 0.0);

        let lab = write(dir.path(), "lab", &encode_labels(&[3, 1, 4, 1]));
        let data = load_idx(dir.path().join("img"), lab, 10).unwrap();
        assert_eq!(data.len(), 4);
        assert_eq!(data.features(), 784);
        assert_eq!(data.labels(), &[3, 1, 4, 1]);
    }

    #[test]
    fn truncated_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let bytes = encode_images(2, 2, 2, &[0; 8]);
        let p = write(dir.path(), "img", &bytes[..bytes.len() - 1]);
        assert!(matches!(load_images(p), Err(Error::Truncated { needed: 24, found: 23, .. })));
        let p = write(dir.path(), "short", &bytes[..10]);
        assert!(matches!(load_images(p), Err(Error::Truncated { .. })));
    }

    #[test]
    fn bad_magic_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "lab", &encode_labels(&[0, 1]));
        assert!(matches!(load_images(&p), Err(Error::BadMagic { magic: LABEL_MAGIC, .. })));
    }

    #[test]
    fn label_out_of_range_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "lab", &encode_labels(&[0, 9, 10]));
        assert!(matches!(load_labels(p, 10), Err(Error::LabelOutOfRange { position: 2, label: 10, classes: 10, .. })));
    }

    #[test]
    fn missing_file_is_reported() {
        assert!(matches!(load_labels("/nonexistent/labels", 10), Err(Error::MissingDataset(_))));
    }
}
