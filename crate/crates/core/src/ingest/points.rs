use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::graph::{build_graph, WeightedGraph};

/// `n` points in `d` dimensions, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, IngestError> {
        if rows.len() < 2 {
            return Err(IngestError::InvalidPoints(format!("need at least 2 points, got {}", rows.len())));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(IngestError::InvalidPoints("points have no coordinates".into()));
        }
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(IngestError::InvalidPoints(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    row.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(IngestError::InvalidPoints(format!("point {i} has a non-finite coordinate")));
            }
            coords.extend(row);
        }
        Ok(PointCloud { dim, coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn sq_dist(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// One point per CSV row; `#` lines are comments.
pub fn parse_points(text: &str) -> Result<PointCloud, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            IngestError::parse(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| IngestError::parse(line, format!("invalid coordinate `{f}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    PointCloud::new(rows)
}

/// Edge weighting for kNN graphs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Kernel {
    Unit,
    /// `exp(−‖x_i − x_j‖² / 2σ²)`
    Gaussian { sigma: f64 },
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Unit => f.write_str("unit"),
            Kernel::Gaussian { sigma } => write!(f, "gaussian(sigma={sigma})"),
        }
    }
}

impl FromStr for Kernel {
    type Err = String;

    /// Accepts `unit`, `gaussian` (σ = 1) or `gaussian:<sigma>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "unit" => Ok(Kernel::Unit),
            None if s == "gaussian" => Ok(Kernel::Gaussian { sigma: 1.0 }),
            Some(("gaussian", sigma)) => sigma
                .parse::<f64>()
                .ok()
                .filter(|s| *s > 0.0 && s.is_finite())
                .map(|sigma| Kernel::Gaussian { sigma })
                .ok_or_else(|| format!("invalid sigma `{sigma}`")),
            _ => Err(format!("unknown kernel `{s}` (expected unit or gaussian)")),
        }
    }
}

/// Exact k-nearest-neighbor graph, symmetrized by union.
///
/// Neighbors are ranked by squared Euclidean distance with ties broken by the
/// lower index, so duplicate points are handled deterministically.
pub fn knn_graph(pc: &PointCloud, k: usize, kernel: Kernel) -> Result<WeightedGraph, IngestError> {
    let n = pc.len();
    if k == 0 || k >= n {
        return Err(IngestError::KOutOfRange { k, n });
    }
    if let Kernel::Gaussian { sigma } = kernel {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(IngestError::InvalidPoints(format!("sigma must be positive, got {sigma}")));
        }
    }
    let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(n * k);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        cand.clear();
        cand.extend((0..n).filter(|&j| j != i).map(|j| (pc.sq_dist(i, j), j)));
        cand.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(d2, j) in &cand[..k] {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            pairs.push((a, b, d2));
        }
    }
    pairs.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    pairs.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);
    let mut edges = Vec::with_capacity(pairs.len());
    for (i, j, d2) in pairs {
        let w = match kernel {
            Kernel::Unit => 1.0,
            Kernel::Gaussian { sigma } => (-d2 / (2.0 * sigma * sigma)).exp(),
        };
        if w <= 0.0 {
            return Err(IngestError::KernelUnderflow { i, j });
        }
        edges.push((i, j, w));
    }
    Ok(build_graph(n, edges)?)
}
