//! Clustering quality: rand index, a k-means baseline and the normalized
//! score relative to that baseline.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tsdata::{znormalize, TimeSeriesDataset};

/// Cluster id standing in for "no neuron fired".
pub const UNASSIGNED: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub assignments: Vec<usize>,
}

impl Partition {
    pub fn new(assignments: Vec<usize>) -> Self {
        Partition { assignments }
    }

    /// Absent assignments all land in one extra cluster.
    pub fn from_optional(assignments: &[Option<usize>]) -> Self {
        Partition {
            assignments: assignments.iter().map(|a| a.unwrap_or(UNASSIGNED)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Number of item pairs on which the two partitions agree (both together or
/// both apart), computed from the contingency table.
pub fn agreeing_pairs(truth: &Partition, pred: &Partition) -> Result<u64> {
    if truth.len() != pred.len() {
        return Err(Error::shape(format!(
            "partitions have {} and {} items",
            truth.len(),
            pred.len()
        )));
    }
    let mut joint: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&a, &b) in truth.assignments.iter().zip(&pred.assignments) {
        *joint.entry((a, b)).or_default() += 1;
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
    }
    let together_both: u64 = joint.values().map(|&n| pairs(n)).sum();
    let together_truth: u64 = rows.values().map(|&n| pairs(n)).sum();
    let together_pred: u64 = cols.values().map(|&n| pairs(n)).sum();
    let total = pairs(truth.len() as u64);
    // apart in both = total - together_truth - together_pred + together_both
    Ok(total + 2 * together_both - together_truth - together_pred)
}

pub fn rand_index(truth: &Partition, pred: &Partition) -> Result<f64> {
    let agree = agreeing_pairs(truth, pred)?;
    if truth.len() < 2 {
        return Err(Error::TooFewItems(truth.len()));
    }
    Ok(agree as f64 / pairs(truth.len() as u64) as f64)
}

pub fn normalized_rand(method_ri: f64, baseline_ri: f64) -> Result<f64> {
    if baseline_ri.is_nan() || baseline_ri <= 0.0 {
        return Err(Error::DegenerateBaseline(baseline_ri));
    }
    Ok(method_ri / baseline_ri)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub partition: Partition,
    pub centroids: Vec<Vec<f64>>,
    /// Sum of squared distances after each assignment step.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    while centroids.len() < k {
        let d2: Vec<f64> = points.iter().map(|p| nearest(p, &centroids).1).collect();
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (idx, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = idx;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        centroids.push(points[pick].clone());
    }
    centroids
}

/// Lloyd's algorithm with k-means++ seeding on raw feature vectors. Stops at
/// an assignment fixpoint or after `max_iters` assignment steps. Empty
/// clusters keep their previous centroid.
pub fn kmeans_points(points: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Result<KMeansResult> {
    if k == 0 || k > points.len() {
        return Err(Error::config(format!("k={k} must be in 1..={}", points.len())));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::shape("points have differing dimensions"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut assignments: Vec<usize> = Vec::new();
    let mut objective = Vec::new();
    let mut iterations = 0;
    while iterations < max_iters.max(1) {
        iterations += 1;
        let (next, cost): (Vec<usize>, Vec<f64>) = points.iter().map(|p| nearest(p, &centroids)).unzip();
        objective.push(cost.iter().sum());
        let converged = next == assignments;
        assignments = next;
        if converged {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignments) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for (c, (sum, n)) in sums.into_iter().zip(counts).enumerate() {
            if n > 0 {
                centroids[c] = sum.into_iter().map(|s| s / n as f64).collect();
            }
        }
    }
    Ok(KMeansResult {
        partition: Partition::new(assignments),
        centroids,
        objective,
        iterations,
    })
}

pub fn kmeans_detailed(
    dataset: &TimeSeriesDataset,
    k: usize,
    seed: u64,
    max_iters: usize,
    znorm: bool,
) -> Result<KMeansResult> {
    let points = dataset
        .samples()
        .iter()
        .map(|s| {
            if znorm {
                znormalize(&s.values)
            } else {
                Ok(s.values.clone())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    kmeans_points(&points, k, seed, max_iters)
}

pub fn kmeans(dataset: &TimeSeriesDataset, k: usize, seed: u64, max_iters: usize, znorm: bool) -> Result<Partition> {
    Ok(kmeans_detailed(dataset, k, seed, max_iters, znorm)?.partition)
}

/// Rand index of a method next to its k-means baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub dataset: String,
    pub config: String,
    pub rand_index: f64,
    pub baseline_rand_index: f64,
    /// `rand_index / baseline_rand_index`, absent when the baseline is zero.
    pub normalized: Option<f64>,
}

impl ClusterReport {
    pub fn new(dataset: impl Into<String>, config: impl Into<String>, rand_index: f64, baseline: f64) -> Self {
        ClusterReport {
            dataset: dataset.into(),
            config: config.into(),
            rand_index,
            baseline_rand_index: baseline,
            normalized: normalized_rand(rand_index, baseline).ok(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}
