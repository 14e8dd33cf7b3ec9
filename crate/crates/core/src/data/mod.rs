//! Labeled datasets: IDX ingestion, one-hot targets, seeded splits and
//! synthetic clusters for quick experiments.

mod idx;

use crate::error::{Error, Result};
use crate::numeric::SeededRng;
use crate::scalar::Scalar;

pub use idx::{load_idx, read_idx, write_idx, IMAGE_MAGIC, LABEL_MAGIC};

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample<T> {
    pub features: Vec<T>,
    pub label: usize,
}

impl<T: Scalar> LabeledSample<T> {
    pub fn one_hot(&self, classes: usize) -> Vec<T> {
        one_hot(self.label, classes).expect("label validated by Dataset")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    samples: Vec<LabeledSample<T>>,
    classes: usize,
    feature_dim: usize,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(samples: Vec<LabeledSample<T>>, classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 classes, got {classes}")));
        }
        let feature_dim = samples.first().map_or(0, |s| s.features.len());
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != feature_dim {
                return Err(Error::DimensionMismatch {
                    context: "Dataset sample",
                    expected: feature_dim.to_string(),
                    found: format!("{} (sample {i})", s.features.len()),
                });
            }
            if s.label >= classes {
                return Err(Error::InvalidArgument(format!("sample {i} has label {} >= {classes}", s.label)));
            }
            if let Some(v) = s.features.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
                return Err(Error::InvalidArgument(format!("sample {i} has feature {v} outside [0, 1]")));
            }
        }
        Ok(Self {
            samples,
            classes,
            feature_dim,
        })
    }

    pub fn samples(&self) -> &[LabeledSample<T>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn class_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.classes];
        for s in &self.samples {
            h[s.label] += 1;
        }
        h
    }

    /// Subset in the given index order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            classes: self.classes,
            feature_dim: self.feature_dim,
        }
    }

    /// First `n` samples (or all, if fewer).
    pub fn take(&self, n: usize) -> Self {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.select(&idx)
    }
}

pub fn one_hot<T: Scalar>(label: usize, classes: usize) -> Result<Vec<T>> {
    if label >= classes {
        return Err(Error::InvalidArgument(format!("label {label} out of range for {classes} classes")));
    }
    let mut v = vec![T::zero(); classes];
    v[label] = T::one();
    Ok(v)
}

/// Seeded permutation followed by a prefix split. The train part holds
/// `round(fraction·len)` samples.
pub fn split_shuffle<T: Scalar>(ds: &Dataset<T>, train_fraction: f64, rng: &mut SeededRng) -> Result<(Dataset<T>, Dataset<T>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("train fraction must be in (0, 1), got {train_fraction}")));
    }
    let perm = rng.permutation(ds.len());
    let cut = (train_fraction * ds.len() as f64).round() as usize;
    Ok((ds.select(&perm[..cut]), ds.select(&perm[cut..])))
}

/// Gaussian clusters around random centres in `[0.5 ± separation/2]^dim`,
/// per-coordinate spread 0.05, clipped to `[0, 1]`. Classes alternate so
/// labels are exactly balanced.
pub fn synthetic_blobs<T: Scalar>(
    classes: usize,
    dim: usize,
    n_per_class: usize,
    separation: f64,
    rng: &mut SeededRng,
) -> Result<Dataset<T>> {
    if !(separation > 0.0) {
        return Err(Error::InvalidArgument(format!("separation must be positive, got {separation}")));
    }
    let centres = blob_centres(classes, dim, separation, rng);
    let mut samples = Vec::with_capacity(classes * n_per_class);
    for _ in 0..n_per_class {
        for (label, c) in centres.iter().enumerate() {
            let features = c
                .iter()
                .map(|&m| T::of((m + BLOB_SPREAD * rng.standard_normal()).clamp(0.0, 1.0)))
                .collect();
            samples.push(LabeledSample { features, label });
        }
    }
    Dataset::new(samples, classes)
}

pub const BLOB_SPREAD: f64 = 0.05;

fn blob_centres(classes: usize, dim: usize, separation: f64, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    (0..classes)
        .map(|_| {
            (0..dim)
                .map(|_| 0.5 + separation * (rng.uniform() - 0.5))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nearest_centroid_accuracy(train: &Dataset<f64>, test: &Dataset<f64>) -> f64 {
        let dim = train.feature_dim();
        let mut centroids = vec![vec![0.0; dim]; train.classes()];
        let counts = train.class_histogram();
        for s in train.samples() {
            for (c, v) in centroids[s.label].iter_mut().zip(&s.features) {
                *c += v / counts[s.label] as f64;
            }
        }
        let correct = test
            .samples()
            .iter()
            .filter(|s| {
                let d: Vec<f64> = centroids
                    .iter()
                    .map(|c| c.iter().zip(&s.features).map(|(a, b)| (a - b) * (a - b)).sum())
                    .collect();
                crate::metasurface::argmax(&d.iter().map(|v| -v).collect::<Vec<_>>()) == s.label
            })
            .count();
        correct as f64 / test.len() as f64
    }

    #[test]
    fn one_hot_basics() {
        assert_eq!(one_hot::<f64>(0, 2).unwrap(), vec![1.0, 0.0]);
        let e3 = one_hot::<f64>(3, 10).unwrap();
        assert_eq!(e3[3], 1.0);
        assert_eq!(e3.iter().sum::<f64>(), 1.0);
        assert!(one_hot::<f64>(10, 10).is_err());
    }

    #[test]
    fn split_is_disjoint_exhaustive_and_seeded() {
        let ds = synthetic_blobs::<f64>(2, 3, 50, 0.5, &mut SeededRng::new(0)).unwrap();
        let (a, b) = split_shuffle(&ds, 0.8, &mut SeededRng::new(4)).unwrap();
        assert_eq!((a.len(), b.len()), (80, 20));
        let (a2, _) = split_shuffle(&ds, 0.8, &mut SeededRng::new(4)).unwrap();
        assert_eq!(a, a2);
        let mut all: Vec<_> = a.samples().iter().chain(b.samples()).cloned().collect();
        let mut orig = ds.samples().to_vec();
        let key = |s: &LabeledSample<f64>| (s.label, s.features.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        all.sort_by_key(key);
        orig.sort_by_key(key);
        assert_eq!(all, orig);
        assert!(split_shuffle(&ds, 1.0, &mut SeededRng::new(0)).is_err());
    }

    #[test]
    fn blobs_are_balanced_and_separable() {
        let mut rng = SeededRng::new(7);
        let ds = synthetic_blobs::<f64>(2, 5, 50, 0.8, &mut rng).unwrap();
        assert_eq!(ds.len(), 100);
        assert_eq!(ds.class_histogram(), vec![50, 50]);
        let ds = synthetic_blobs::<f64>(4, 8, 100, 0.9, &mut rng).unwrap();
        let (tr, te) = split_shuffle(&ds, 0.5, &mut rng).unwrap();
        assert_eq!(nearest_centroid_accuracy(&tr, &te), 1.0);
        assert!(ds.samples().iter().flat_map(|s| &s.features).all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn dataset_validation() {
        let s = |f: Vec<f64>, label| LabeledSample { features: f, label };
        assert!(Dataset::new(vec![s(vec![0.5], 0)], 1).is_err());
        assert!(Dataset::new(vec![s(vec![0.5], 2)], 2).is_err());
        assert!(Dataset::new(vec![s(vec![1.5], 0)], 2).is_err());
        assert!(Dataset::new(vec![s(vec![0.5], 0), s(vec![0.5, 0.1], 1)], 2).is_err());
    }
}
