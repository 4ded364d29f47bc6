//! Sequential MNIST from IDX files: each image row is one time step.

use std::path::Path;

use super::{LossKind, TaskBatch, Targets};
use crate::error::{LabError, Result};
use crate::tensor::{DenseMatrix, Rng};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Clone, Debug)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn be_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| LabError::Format(format!("{what}: header truncated")))
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let magic = be_u32(bytes, 0, "images")?;
    if magic != IMAGES_MAGIC {
        return Err(LabError::Format(format!(
            "images: bad magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"
        )));
    }
    let count = be_u32(bytes, 4, "images")? as usize;
    let rows = be_u32(bytes, 8, "images")? as usize;
    let cols = be_u32(bytes, 12, "images")? as usize;
    let need = count * rows * cols;
    let payload = &bytes[16..];
    if payload.len() < need {
        return Err(LabError::Format(format!(
            "images: payload truncated ({} of {need} bytes)",
            payload.len()
        )));
    }
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels: payload[..need].to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0, "labels")?;
    if magic != LABELS_MAGIC {
        return Err(LabError::Format(format!(
            "labels: bad magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"
        )));
    }
    let count = be_u32(bytes, 4, "labels")? as usize;
    let payload = &bytes[8..];
    if payload.len() < count {
        return Err(LabError::Format(format!(
            "labels: payload truncated ({} of {count} bytes)",
            payload.len()
        )));
    }
    Ok(payload[..count].to_vec())
}

#[derive(Clone, Debug)]
pub struct MnistDataset {
    pub images: IdxImages,
    pub labels: Vec<u8>,
}

impl MnistDataset {
    pub fn from_parts(images: IdxImages, labels: Vec<u8>) -> Result<Self> {
        if images.count != labels.len() {
            return Err(LabError::Consistency(format!(
                "{} images but {} labels",
                images.count,
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 9) {
            return Err(LabError::Format(format!("label {bad} outside 0..=9")));
        }
        Ok(MnistDataset { images, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Rows become steps; pixels are divided by 255; only the last step is
    /// scored.
    pub fn batch(&self, idx: &[usize]) -> TaskBatch {
        let (rows, cols) = (self.images.rows, self.images.cols);
        let m = idx.len();
        let mut inputs = vec![DenseMatrix::zeros(m, cols); rows];
        for (r, &k) in idx.iter().enumerate() {
            let img = &self.images.pixels[k * rows * cols..(k + 1) * rows * cols];
            for (t, x) in inputs.iter_mut().enumerate() {
                for (dst, &p) in x.row_mut(r).iter_mut().zip(&img[t * cols..(t + 1) * cols]) {
                    *dst = f64::from(p) / 255.0;
                }
            }
        }
        let mut labels = vec![vec![0usize; m]; rows];
        labels[rows - 1] = idx.iter().map(|&k| usize::from(self.labels[k])).collect();
        let last_only: Vec<Vec<bool>> = (0..rows).map(|t| vec![t + 1 == rows; m]).collect();
        TaskBatch {
            inputs,
            targets: Targets::Labels(labels),
            loss_mask: last_only.clone(),
            decision_mask: last_only,
            loss_kind: LossKind::CrossEntropy,
            n_in: cols,
            n_out: 10,
        }
    }

    pub fn sample_batch(&self, rng: &mut Rng, m: usize) -> TaskBatch {
        let idx: Vec<usize> = (0..m).map(|_| rng.below(self.len())).collect();
        self.batch(&idx)
    }

    pub fn full_batch(&self) -> TaskBatch {
        self.batch(&(0..self.len()).collect::<Vec<_>>())
    }
}

pub fn load_smnist(images_path: &Path, labels_path: &Path) -> Result<MnistDataset> {
    let img = std::fs::read(images_path).map_err(|e| LabError::io(images_path, e))?;
    let lab = std::fs::read(labels_path).map_err(|e| LabError::io(labels_path, e))?;
    MnistDataset::from_parts(parse_idx_images(&img)?, parse_idx_labels(&lab)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx_images(count: u32, pixels: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        for v in [IMAGES_MAGIC, count, 28, 28] {
            out.extend_from_slice(&v.to_be_bytes());
        }
        out.extend_from_slice(pixels);
        out
    }

    fn idx_labels(labels: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
        out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        out.extend_from_slice(labels);
        out
    }

    #[test]
    fn standard_magics_are_accepted() {
        let imgs = parse_idx_images(&idx_images(2, &[0u8; 2 * 784])).unwrap();
        assert_eq!((imgs.count, imgs.rows, imgs.cols), (2, 28, 28));
        assert_eq!(parse_idx_labels(&idx_labels(&[3, 7])).unwrap(), vec![3, 7]);
    }

    #[test]
    fn bad_magic_and_truncation_are_format_errors() {
        let mut b = idx_images(1, &[0u8; 784]);
        b[3] = 0x01;
        assert!(matches!(parse_idx_images(&b), Err(LabError::Format(_))));
        let short = idx_images(2, &[0u8; 784]);
        assert!(matches!(parse_idx_images(&short), Err(LabError::Format(_))));
        let mut l = idx_labels(&[1, 2, 3]);
        l.pop();
        assert!(matches!(parse_idx_labels(&l), Err(LabError::Format(_))));
        assert!(matches!(parse_idx_labels(&[0, 0]), Err(LabError::Format(_))));
    }

    #[test]
    fn count_mismatch_is_consistency_error() {
        let imgs = parse_idx_images(&idx_images(2, &[0u8; 2 * 784])).unwrap();
        let err = MnistDataset::from_parts(imgs, vec![1]).unwrap_err();
        assert!(matches!(err, LabError::Consistency(_)));
    }

    #[test]
    fn batch_layout_and_scaling() {
        let mut px = vec![0u8; 2 * 784];
        px[784 + 28 * 3 + 5] = 255;
        px[784 + 28 * 27] = 51;
        let ds = MnistDataset::from_parts(parse_idx_images(&idx_images(2, &px)).unwrap(), vec![5, 9]).unwrap();
        let b = ds.full_batch();
        b.validate().unwrap();
        assert_eq!((b.steps(), b.n_in, b.n_out), (28, 28, 10));
        assert!(b.inputs.iter().all(|x| x.row(0).iter().all(|&v| v == 0.0)));
        assert_eq!(b.inputs[3][(1, 5)], 1.0);
        assert!((b.inputs[27][(1, 0)] - 0.2).abs() < 1e-15);
        assert_eq!(b.mask_count(), 2);
        assert_eq!(b.decision_labels().unwrap(), vec![5, 9]);
    }

    #[test]
    fn standard_training_set_first_label_is_five() {
        // Needs the real files; set RANKREGIME_MNIST_DIR to run.
        let Ok(dir) = std::env::var("RANKREGIME_MNIST_DIR") else {
            eprintln!("RANKREGIME_MNIST_DIR unset; skipping");
            return;
        };
        let dir = Path::new(&dir);
        let ds = load_smnist(
            &dir.join("train-images-idx3-ubyte"),
            &dir.join("train-labels-idx1-ubyte"),
        )
        .unwrap();
        assert_eq!(ds.labels[0], 5);
    }
}
