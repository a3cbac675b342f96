//! K-means on eigenvector rows and the cluster-quality metrics used to pick `K`.
//!
//! Volumes follow strength-sum semantics: `W(C,C)` counts each internal edge
//! twice, so `W(C,V) = W(C,C) + W(C,C̄)` and `Σ_k W(C_k,V) = s`.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::EigenPair;
use crate::graph::WeightedGraph;
use crate::laplacian::{trace_of_laplacian, LaplacianOperator};
use crate::linalg::{self, mix_seed};

pub const KMEANS_RESTARTS: usize = 10;
pub const KMEANS_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusteringError {
    #[error("cannot form {k} clusters from {n} rows")]
    KTooLarge { k: usize, n: usize },
    #[error("cluster {cluster} has zero volume")]
    ZeroVolumeCluster { cluster: usize },
    #[error("invalid labels: {0}")]
    InvalidLabels(String),
    #[error("eigenvector block is empty or ragged")]
    InvalidBlock,
}

/// Labels of `n` rows into `k` nonempty clusters, best of several seeded
/// k-means++ restarts. Labels are renumbered in order of first appearance.
pub fn kmeans(rows: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<usize>, ClusteringError> {
    let n = rows.len();
    if k == 0 || k > n {
        return Err(ClusteringError::KTooLarge { k, n });
    }
    let d = rows[0].len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(ClusteringError::InvalidBlock);
    }
    if k == 1 {
        return Ok(vec![0; n]);
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for r in 0..KMEANS_RESTARTS {
        let mut rng = linalg::rng_from_seed(mix_seed(seed, r as u64));
        let (cost, labels) = lloyd(rows, k, seed_centers(rows, k, &mut rng));
        if best.as_ref().map_or(true, |(c, _)| cost < *c) {
            best = Some((cost, labels));
        }
    }
    Ok(relabel(&best.unwrap().1))
}

/// K-means on the rows of the `n × K` block whose columns are `columns`.
pub fn kmeans_rows(columns: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<usize>, ClusteringError> {
    let n = columns.first().map_or(0, Vec::len);
    if columns.iter().any(|c| c.len() != n) {
        return Err(ClusteringError::InvalidBlock);
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
    kmeans(&rows, k, seed)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn seed_centers<R: Rng>(rows: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut centers = vec![rows[rng.gen_range(0..n)].clone()];
    let mut dist: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in dist.iter().enumerate() {
                if target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        } else {
            rng.gen_range(0..n)
        };
        let c = rows[pick].clone();
        for (d, r) in dist.iter_mut().zip(rows) {
            *d = d.min(sq_dist(r, &c));
        }
        centers.push(c);
    }
    centers
}

fn nearest(row: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(row, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn lloyd(rows: &[Vec<f64>], k: usize, mut centers: Vec<Vec<f64>>) -> (f64, Vec<usize>) {
    let n = rows.len();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITERATIONS {
        let mut next: Vec<usize> = rows.iter().map(|r| nearest(r, &centers).0).collect();
        repair_empty(rows, &centers, &mut next, k);
        if next == labels {
            break;
        }
        labels = next;
        centers = means(rows, &labels, k);
    }
    let cost = rows.iter().zip(&labels).map(|(r, &l)| sq_dist(r, &centers[l])).sum();
    (cost, labels)
}

/// Moves the point farthest from its center out of the largest cluster into
/// each empty one.
fn repair_empty(rows: &[Vec<f64>], centers: &[Vec<f64>], labels: &mut [usize], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let largest = (0..k).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).unwrap();
        let far = (0..rows.len())
            .filter(|&i| labels[i] == largest)
            .max_by(|&a, &b| {
                sq_dist(&rows[a], &centers[largest])
                    .total_cmp(&sq_dist(&rows[b], &centers[largest]))
                    .then(b.cmp(&a))
            })
            .unwrap();
        labels[far] = empty;
    }
}

fn means(rows: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let d = rows[0].len();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (r, &l) in rows.iter().zip(labels) {
        linalg::axpy(1.0, r, &mut sums[l]);
        counts[l] += 1;
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            linalg::scale(1.0 / c as f64, s);
        }
    }
    sums
}

fn relabel(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

fn check_labels(g: &WeightedGraph, labels: &[usize]) -> Result<usize, ClusteringError> {
    if labels.len() != g.n() {
        return Err(ClusteringError::InvalidLabels(format!(
            "{} labels for {} nodes",
            labels.len(),
            g.n()
        )));
    }
    Ok(labels.iter().max().map_or(0, |m| m + 1))
}

/// Per-cluster `(W(C,C), W(C,V))` with internal edges counted twice.
fn volumes(g: &WeightedGraph, labels: &[usize], k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut internal = vec![0.0; k];
    let mut volume = vec![0.0; k];
    for e in g.edges() {
        let (a, b) = (labels[e.i], labels[e.j]);
        volume[a] += e.w;
        volume[b] += e.w;
        if a == b {
            internal[a] += 2.0 * e.w;
        }
    }
    (internal, volume)
}

/// `Σ_k [W(C_k,C_k)/s − (W(C_k,V)/s)²]`.
pub fn modularity(g: &WeightedGraph, labels: &[usize]) -> Result<f64, ClusteringError> {
    let k = check_labels(g, labels)?;
    let (internal, volume) = volumes(g, labels, k);
    let s: f64 = volume.iter().sum();
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok(internal
        .iter()
        .zip(&volume)
        .map(|(i, v)| i / s - (v / s) * (v / s))
        .sum())
}

/// `(Σ_k W(C_k, C̄_k) / W(C_k, V)) / K` over clusters `0..k`.
pub fn scaled_normalized_cut(g: &WeightedGraph, labels: &[usize], k: usize) -> Result<f64, ClusteringError> {
    let used = check_labels(g, labels)?;
    if used > k {
        return Err(ClusteringError::InvalidLabels(format!("label {} outside 0..{k}", used - 1)));
    }
    let (internal, volume) = volumes(g, labels, k);
    let mut total = 0.0;
    for (c, (i, v)) in internal.iter().zip(&volume).enumerate() {
        if *v <= 0.0 {
            return Err(ClusteringError::ZeroVolumeCluster { cluster: c });
        }
        total += (v - i) / v;
    }
    Ok(total / k as f64)
}

/// Sizes of clusters `0..=max(label)`.
pub fn cluster_sizes(labels: &[usize]) -> Vec<usize> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0; k];
    for &l in labels {
        sizes[l] += 1;
    }
    sizes
}

/// `(lower median size / n, max size / n)`.
pub fn scaled_sizes(labels: &[usize], n: usize) -> (f64, f64) {
    let mut sizes = cluster_sizes(labels);
    if sizes.is_empty() || n == 0 {
        return (0.0, 0.0);
    }
    sizes.sort_unstable();
    let median = sizes[(sizes.len() - 1) / 2];
    let max = *sizes.last().unwrap();
    (median as f64 / n as f64, max as f64 / n as f64)
}

/// `Σ_{i≤K} λ_i / Σ_j L_jj`. Rounding-level negative eigenvalues count as 0,
/// which keeps the energy nondecreasing in `K`.
pub fn scaled_spectrum_energy(eigenvalues: &[f64], op: &LaplacianOperator) -> f64 {
    eigenvalues.iter().map(|v| v.max(0.0)).sum::<f64>() / trace_of_laplacian(op)
}

/// One row of the metrics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterMetrics {
    #[serde(rename = "K")]
    pub k: usize,
    pub modularity: f64,
    pub scaled_nc: f64,
    pub scaled_median: f64,
    pub scaled_max: f64,
    pub scaled_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    #[serde(rename = "K")]
    pub k: usize,
    pub labels: Vec<usize>,
    pub sizes: Vec<usize>,
    pub metrics: ClusterMetrics,
}

/// Clusters the rows of the first `k` eigenvectors and scores the labeling.
///
/// `metric_graph` supplies modularity and cut; `spectrum_op` supplies the
/// trace for the spectrum energy (the operator the eigenpairs came from).
pub fn cluster_report(
    metric_graph: &WeightedGraph,
    spectrum_op: &LaplacianOperator,
    pairs: &[EigenPair],
    k: usize,
    seed: u64,
) -> Result<ClusterReport, ClusteringError> {
    let n = metric_graph.n();
    if k == 0 || k > n || pairs.len() < k {
        return Err(ClusteringError::KTooLarge { k, n: n.min(pairs.len()) });
    }
    let columns: Vec<Vec<f64>> = pairs[..k].iter().map(|p| p.vector.clone()).collect();
    let labels = kmeans_rows(&columns, k, seed)?;
    let values: Vec<f64> = pairs[..k].iter().map(|p| p.value).collect();
    let (scaled_median, scaled_max) = scaled_sizes(&labels, n);
    let metrics = ClusterMetrics {
        k,
        modularity: modularity(metric_graph, &labels)?,
        scaled_nc: scaled_normalized_cut(metric_graph, &labels, k)?,
        scaled_median,
        scaled_max,
        scaled_energy: scaled_spectrum_energy(&values, spectrum_op),
    };
    Ok(ClusterReport {
        k,
        sizes: cluster_sizes(&labels),
        labels,
        metrics,
    })
}

/// Writes rows as `K,modularity,scaled_nc,scaled_median,scaled_max,scaled_energy`.
pub fn write_metrics_csv<W: Write>(out: W, rows: &[ClusterMetrics]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `node,label`.
pub fn write_labels_csv<W: Write>(out: W, labels: &[usize]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "label"])?;
    for (i, l) in labels.iter().enumerate() {
        w.write_record([i.to_string(), l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
