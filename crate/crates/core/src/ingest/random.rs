use rand::Rng;

use super::points::PointCloud;
use super::IngestError;
use crate::graph::{build_graph, WeightedGraph};
use crate::linalg::rng_from_seed;

/// `G(n, p)` with unit weights; every unordered pair is drawn independently.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<WeightedGraph, IngestError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(IngestError::InvalidProbability(p));
    }
    let mut rng = rng_from_seed(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    Ok(build_graph(n, edges)?)
}

pub fn path_graph(n: usize) -> Result<WeightedGraph, IngestError> {
    Ok(build_graph(n, (1..n).map(|i| (i - 1, i, 1.0)))?)
}

/// Needs `n ≥ 3`.
pub fn cycle_graph(n: usize) -> Result<WeightedGraph, IngestError> {
    Ok(build_graph(n, (0..n).map(|i| (i, (i + 1) % n, 1.0)))?)
}

pub fn complete_graph(n: usize) -> Result<WeightedGraph, IngestError> {
    Ok(build_graph(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, 1.0))))?)
}

/// Block-diagonal union; node indices of later parts are shifted past earlier ones.
pub fn disjoint_union(parts: &[WeightedGraph]) -> Result<WeightedGraph, IngestError> {
    let mut edges = Vec::new();
    let mut offset = 0;
    for g in parts {
        edges.extend(g.edges().iter().map(|e| (e.i + offset, e.j + offset, e.w)));
        offset += g.n();
    }
    Ok(build_graph(offset, edges)?)
}

/// Two interleaved half circles with isotropic Gaussian noise.
///
/// The first `n / 2` points form the upper moon, the rest the lower one.
pub fn two_moons(n: usize, noise: f64, seed: u64) -> (PointCloud, Vec<usize>) {
    let mut rng = rng_from_seed(seed);
    let upper = n / 2;
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (moon, idx, count) = if i < upper { (0, i, upper) } else { (1, i - upper, n - upper) };
        let t = std::f64::consts::PI * idx as f64 / (count.max(2) - 1) as f64;
        let (x, y) = if moon == 0 {
            (t.cos(), t.sin())
        } else {
            (1.0 - t.cos(), 0.5 - t.sin())
        };
        rows.push(vec![x + noise * gaussian(&mut rng), y + noise * gaussian(&mut rng)]);
        labels.push(moon);
    }
    (PointCloud::new(rows).expect("two moons needs n >= 2"), labels)
}

/// Standard normal draw (Box-Muller).
fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
