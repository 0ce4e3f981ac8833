//! k-means over matrix columns, and ACC / NMI scoring against ground truth.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::NonNegMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    labels: Vec<usize>,
    k: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::LabelOutOfRange { label: bad, k });
        }
        Ok(Self { labels, k })
    }

    /// Takes `k` as one past the largest label.
    pub fn from_labels(labels: Vec<usize>) -> Self {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        Self { labels, k }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            restarts: 10,
            max_iter: 300,
        }
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub labels: LabelVector,
    pub centroids: Vec<Vec<f64>>,
    pub wcss: f64,
    /// Objective after each centroid update of the winning restart.
    pub history: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(p, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn wcss(points: &[Vec<f64>], labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, &centroids[l]))
        .sum()
}

fn lloyd(points: &[Vec<f64>], k: usize, max_iter: usize, rng: &mut ChaCha8Rng) -> KMeansFit {
    let n = points.len();
    let dim = points[0].len();
    let mut centroids: Vec<Vec<f64>> = sample(rng, n, k)
        .into_iter()
        .map(|i| points[i].clone())
        .collect();
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    let mut history = Vec::new();
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                centroids[c] = sums[c].iter().map(|s| s * inv).collect();
            }
        }
        for c in (0..k).filter(|&c| counts[c] == 0) {
            let far = (0..n)
                .max_by(|&i, &j| {
                    let di = sq_dist(&points[i], &centroids[labels[i]]);
                    let dj = sq_dist(&points[j], &centroids[labels[j]]);
                    di.total_cmp(&dj).then(j.cmp(&i))
                })
                .unwrap_or(0);
            centroids[c] = points[far].clone();
        }
        history.push(wcss(points, &labels, &centroids));

        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        if next == labels {
            break;
        }
        labels = next;
    }

    let total = wcss(points, &labels, &centroids);
    KMeansFit {
        labels: LabelVector { labels, k },
        centroids,
        wcss: total,
        history,
        iterations,
    }
}

fn columns(points: &NonNegMatrix) -> Vec<Vec<f64>> {
    (0..points.cols()).map(|j| points.column(j)).collect()
}

/// Best-of-restarts Lloyd clustering of the columns of `points`.
pub fn kmeans_fit(points: &NonNegMatrix, cfg: &KMeansConfig) -> Result<KMeansFit> {
    let n = points.cols();
    if cfg.k == 0 || cfg.k > n {
        return Err(Error::InvalidK { k: cfg.k, n });
    }
    if cfg.restarts == 0 || cfg.max_iter == 0 {
        return Err(Error::Config("restarts and max_iter must be positive".into()));
    }
    let cols = columns(points);
    let mut best: Option<KMeansFit> = None;
    for r in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(r as u64);
        let fit = lloyd(&cols, cfg.k, cfg.max_iter, &mut rng);
        if best.as_ref().is_none_or(|b| fit.wcss < b.wcss) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

pub fn kmeans(
    points: &NonNegMatrix,
    k: usize,
    seed: u64,
    restarts: usize,
    max_iter: usize,
) -> Result<LabelVector> {
    let cfg = KMeansConfig {
        k,
        seed,
        restarts,
        max_iter,
    };
    kmeans_fit(points, &cfg).map(|f| f.labels)
}

fn check_lengths(pred: &LabelVector, truth: &LabelVector) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    Ok(())
}

/// Square `n×n` counts with `n = max(k_pred, k_truth)`; rows are predicted ids.
pub fn confusion_matrix(pred: &LabelVector, truth: &LabelVector) -> Result<Vec<Vec<usize>>> {
    check_lengths(pred, truth)?;
    let n = pred.k().max(truth.k()).max(1);
    let mut counts = vec![vec![0usize; n]; n];
    for (&p, &t) in pred.labels().iter().zip(truth.labels()) {
        counts[p][t] += 1;
    }
    Ok(counts)
}

/// Clustering accuracy under the best one-to-one mapping from predicted ids
/// to classes. `mapping[p]` is the class assigned to predicted id `p`.
pub fn accuracy(pred: &LabelVector, truth: &LabelVector) -> Result<(f64, Vec<usize>)> {
    let confusion = confusion_matrix(pred, truth)?;
    if pred.is_empty() {
        return Err(Error::EmptyInput("label vectors".into()));
    }
    let n = confusion.len();
    let weights = Matrix::from_rows(
        confusion
            .iter()
            .map(|row| row.iter().map(|&c| c as i64).collect::<Vec<_>>()),
    )
    .map_err(|e| Error::Config(e.to_string()))?;
    let (matched, mapping) = kuhn_munkres(&weights);
    debug_assert_eq!(mapping.len(), n);
    Ok((matched as f64 / pred.len() as f64, mapping))
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `I(U;V) / sqrt(H(U)·H(V))`, natural log.
pub fn nmi(pred: &LabelVector, truth: &LabelVector) -> Result<f64> {
    let confusion = confusion_matrix(pred, truth)?;
    if pred.is_empty() {
        return Err(Error::EmptyInput("label vectors".into()));
    }
    let n = pred.len() as f64;
    let size = confusion.len();
    let row_tot: Vec<usize> = confusion.iter().map(|r| r.iter().sum()).collect();
    let col_tot: Vec<usize> = (0..size).map(|j| confusion.iter().map(|r| r[j]).sum()).collect();
    let hu = entropy(row_tot.iter().copied(), n);
    let hv = entropy(col_tot.iter().copied(), n);
    if hu == 0.0 && hv == 0.0 {
        return Ok(1.0);
    }
    if hu == 0.0 || hv == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (i, row) in confusion.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let pij = c as f64 / n;
                mi += pij * (c as f64 * n / (row_tot[i] as f64 * col_tot[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (hu * hv).sqrt()).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub predicted: LabelVector,
    pub acc: f64,
    pub nmi: f64,
    pub mapping: Vec<usize>,
    pub confusion: Vec<Vec<usize>>,
}

impl ClusterReport {
    pub fn score(predicted: LabelVector, truth: &LabelVector) -> Result<Self> {
        let (acc, mapping) = accuracy(&predicted, truth)?;
        let nmi = nmi(&predicted, truth)?;
        let confusion = confusion_matrix(&predicted, truth)?;
        Ok(Self {
            predicted,
            acc,
            nmi,
            mapping,
            confusion,
        })
    }

    pub fn matched(&self) -> usize {
        self.mapping
            .iter()
            .enumerate()
            .map(|(p, &t)| self.confusion[p][t])
            .sum()
    }
}

/// k-means on the columns of `points` scored against `truth`.
pub fn cluster_and_score(
    points: &NonNegMatrix,
    truth: &LabelVector,
    cfg: &KMeansConfig,
) -> Result<ClusterReport> {
    if points.cols() != truth.len() {
        return Err(Error::LengthMismatch {
            left: points.cols(),
            right: truth.len(),
        });
    }
    let fit = kmeans_fit(points, cfg)?;
    ClusterReport::score(fit.labels, truth)
}
