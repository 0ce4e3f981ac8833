use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use super::loaders::{load_matrix_csv, load_pgm, load_wav_mono};
use super::stft::{resample_linear, stft_magnitude, StftConfig};
use crate::cluster::LabelVector;
use crate::error::{Error, Result};
use crate::matrix::NonNegMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleKind {
    Image,
    Audio,
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Source {
    pub path: PathBuf,
    #[serde(deserialize_with = "label_string")]
    pub label: String,
}

fn label_string<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        Int(i64),
    }
    Ok(match Raw::deserialize(d)? {
        Raw::Text(s) => s,
        Raw::Int(i) => i.to_string(),
    })
}

/// Dataset manifest: `{"kind": ..., "samples": [{"path", "label"}], "classes"?, "stft"?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub kind: SampleKind,
    pub samples: Vec<Source>,
    #[serde(default)]
    pub classes: Option<Vec<String>>,
    #[serde(default)]
    pub stft: StftConfig,
}

/// Reads a manifest; relative sample paths resolve against its directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    for s in &mut manifest.samples {
        if s.path.is_relative() {
            s.path = base.join(&s.path);
        }
    }
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Features × samples.
    pub y: NonNegMatrix,
    pub truth: LabelVector,
    pub sample_ids: Vec<String>,
    /// Class names indexed by label id.
    pub classes: Vec<String>,
}

impl Dataset {
    pub fn from_manifest(manifest: &Manifest) -> Result<Self> {
        assemble_dataset(
            &manifest.samples,
            manifest.kind,
            &manifest.stft,
            manifest.classes.as_deref(),
        )
    }

    pub fn len(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_ids.is_empty()
    }
}

fn features(source: &Source, kind: SampleKind, stft: &StftConfig) -> Result<Vec<f64>> {
    let m = match kind {
        SampleKind::Image => load_pgm(&source.path)?,
        SampleKind::Matrix => load_matrix_csv(&source.path)?,
        SampleKind::Audio => {
            let (samples, rate) = load_wav_mono(&source.path)?;
            let samples = resample_linear(&samples, rate, stft.sample_rate);
            stft_magnitude(&samples, stft)?
        }
    };
    Ok(m.as_slice().to_vec())
}

/// Loads and vectorises every source into one column of `Y` (row-major
/// flattening). Image datasets are min-max scaled to `[0, 1]` as a whole.
pub fn assemble_dataset(
    sources: &[Source],
    kind: SampleKind,
    stft: &StftConfig,
    classes: Option<&[String]>,
) -> Result<Dataset> {
    if sources.is_empty() {
        return Err(Error::EmptyInput("dataset has no samples".into()));
    }
    if kind == SampleKind::Audio {
        stft.validate()?;
    }
    let classes: Vec<String> = match classes {
        Some(c) => c.to_vec(),
        None => {
            let mut c: Vec<String> = sources.iter().map(|s| s.label.clone()).collect();
            c.sort();
            c.dedup();
            c
        }
    };
    let mut labels = Vec::with_capacity(sources.len());
    for s in sources {
        let id = classes
            .iter()
            .position(|c| *c == s.label)
            .ok_or_else(|| Error::UnknownLabel(s.label.clone()))?;
        labels.push(id);
    }

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(sources.len());
    for s in sources {
        let f = features(s, kind, stft)?;
        if let Some(first) = columns.first() {
            if first.len() != f.len() {
                return Err(Error::FeatureMismatch {
                    sample: s.path.display().to_string(),
                    expected: first.len(),
                    found: f.len(),
                });
            }
        }
        columns.push(f);
    }

    let rows = columns[0].len();
    let cols = columns.len();
    let mut data = vec![0.0; rows * cols];
    for (j, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            data[i * cols + j] = v;
        }
    }
    if kind == SampleKind::Image {
        let (lo, hi) = data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let span = hi - lo;
        for v in &mut data {
            *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
        }
    }
    Ok(Dataset {
        y: NonNegMatrix::new(rows, cols, data)?,
        truth: LabelVector::new(labels, classes.len())?,
        sample_ids: sources.iter().map(|s| s.path.display().to_string()).collect(),
        classes,
    })
}
