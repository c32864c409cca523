//! Labelled datasets, the synthetic generator, file loading and sharding.

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    features: usize,
    classes: usize,
}

impl Dataset {
    /// Checks every sample has the same width and a label below `classes`.
    pub fn new(samples: Vec<Sample>, classes: usize) -> Result<Self> {
        let features = samples.first().map_or(0, |s| s.features.len());
        if let Some((i, _)) = samples.iter().enumerate().find(|(_, s)| s.features.len() != features) {
            return Err(Error::invalid(format!("sample {i} has a different feature count")));
        }
        if let Some((i, s)) = samples.iter().enumerate().find(|(_, s)| s.label >= classes) {
            return Err(Error::invalid(format!("sample {i} has label {} but only {classes} classes", s.label)));
        }
        if samples.iter().any(|s| s.features.iter().any(|v| !v.is_finite())) {
            return Err(Error::invalid("features must be finite"));
        }
        Ok(Dataset {
            samples,
            features,
            classes,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn classes(&self) -> usize {
        self.classes
    }
}

/// Two Gaussian blobs in `R^d` centred at `±δ u` with `u = (1, …, 1)/√d` and
/// unit covariance. Labels alternate so both classes are equally represented.
pub fn synthetic_blobs<R: Rng + ?Sized>(count: usize, features: usize, separation: f64, rng: &mut R) -> Result<Dataset> {
    if features == 0 {
        return Err(Error::invalid("synthetic data needs at least one feature"));
    }
    let offset = separation / (features as f64).sqrt();
    let samples = (0..count)
        .map(|i| {
            let label = i % 2;
            let sign = if label == 0 { -1.0 } else { 1.0 };
            let features = (0..features)
                .map(|_| sign * offset + rng.sample::<f64, _>(StandardNormal))
                .collect();
            Sample { features, label }
        })
        .collect();
    Dataset::new(samples, 2)
}

/// Reads rows of numeric features followed by an integer class label.
/// Blank lines and lines starting with `#` are skipped.
pub fn load_delimited(path: &Path, delimiter: u8, has_header: bool) -> Result<Dataset> {
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(has_header)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io {
                path: path.to_path_buf(),
                source,
            },
            other => parse_err(format!("{other:?}")),
        })?;
    let mut samples = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(e.to_string()))?;
        if record.len() < 2 {
            return Err(parse_err(format!("row {}: need at least one feature and a label", row + 1)));
        }
        let (label_field, feature_fields) = (&record[record.len() - 1], record.iter().take(record.len() - 1));
        let features = feature_fields
            .map(|f| f.parse::<f64>().map_err(|e| parse_err(format!("row {}: {f:?}: {e}", row + 1))))
            .collect::<Result<Vec<_>>>()?;
        let label = label_field
            .parse::<usize>()
            .map_err(|e| parse_err(format!("row {}: label {label_field:?}: {e}", row + 1)))?;
        samples.push(Sample { features, label });
    }
    if samples.is_empty() {
        return Err(parse_err("no samples".into()));
    }
    let classes = samples.iter().map(|s| s.label).max().unwrap_or(0) + 1;
    Dataset::new(samples, classes).map_err(|e| parse_err(e.to_string()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// Shuffle, then deal out contiguous blocks.
    #[default]
    Iid,
    /// Sort by label, then deal out contiguous blocks (label skew).
    LabelSorted,
}

/// Splits into `k` shards of equal size `⌊len/k⌋`; leftover samples are dropped.
pub fn shard<R: Rng + ?Sized>(dataset: &Dataset, k: usize, mode: SplitMode, rng: &mut R) -> Result<Vec<Dataset>> {
    if k == 0 {
        return Err(Error::invalid("need at least one shard"));
    }
    let size = dataset.len() / k;
    if size == 0 {
        return Err(Error::invalid(format!("{} samples cannot fill {k} shards", dataset.len())));
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(rng);
    if mode == SplitMode::LabelSorted {
        order.sort_by_key(|&i| dataset.samples[i].label);
    }
    order
        .chunks_exact(size)
        .take(k)
        .map(|idx| {
            Dataset::new(
                idx.iter().map(|&i| dataset.samples[i].clone()).collect(),
                dataset.classes,
            )
        })
        .collect()
}
