//! Loading graphs from files and building them from point clouds or random models.

mod edgelist;
mod points;
mod random;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use edgelist::{load_edge_list, parse_edge_list, parse_matrix_market, write_edge_list};
pub use points::{knn_graph, parse_points, Kernel, PointCloud};
pub use random::{complete_graph, cycle_graph, disjoint_union, erdos_renyi, path_graph, two_moons};

use crate::graph::{GraphError, WeightedGraph};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("k = {k} is outside 1..{n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("invalid point cloud: {0}")]
    InvalidPoints(String),
    #[error("edge probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("gaussian weight between points {i} and {j} underflows to zero; increase sigma")]
    KernelUnderflow { i: usize, j: usize },
}

impl IngestError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        IngestError::Parse {
            line,
            message: message.into(),
        }
    }
}

/// Input file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    #[serde(rename = "edgelist")]
    EdgeList,
    #[serde(rename = "mtx")]
    MatrixMarket,
    #[serde(rename = "points")]
    Points,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edgelist" => Ok(Format::EdgeList),
            "mtx" => Ok(Format::MatrixMarket),
            "points" => Ok(Format::Points),
            other => Err(format!("unknown format `{other}` (expected edgelist, mtx or points)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::EdgeList => "edgelist",
            Format::MatrixMarket => "mtx",
            Format::Points => "points",
        })
    }
}

impl Format {
    /// Guesses the format from the file extension; defaults to an edge list.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("mtx") => Format::MatrixMarket,
            Some("csv") => Format::Points,
            _ => Format::EdgeList,
        }
    }
}

/// How to turn a point cloud into a graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnSpec {
    pub k: usize,
    pub kernel: Kernel,
}

/// Reads a graph in any supported format. Point clouds need a [`KnnSpec`].
pub fn load_graph(path: &Path, format: Format, knn: Option<KnnSpec>) -> Result<WeightedGraph, IngestError> {
    parse_graph(&std::fs::read_to_string(path)?, format, knn)
}

/// Parses graph text in any supported format.
pub fn parse_graph(text: &str, format: Format, knn: Option<KnnSpec>) -> Result<WeightedGraph, IngestError> {
    match format {
        Format::EdgeList => parse_edge_list(text),
        Format::MatrixMarket => parse_matrix_market(text),
        Format::Points => {
            let spec = knn.ok_or_else(|| IngestError::InvalidPoints("point clouds need --knn".into()))?;
            knn_graph(&parse_points(text)?, spec.k, spec.kernel)
        }
    }
}
