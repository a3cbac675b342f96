//! The user-guided clustering loop as a resumable session.
//!
//! Each [`Session::step`] makes sure the basis holds `K` eigenpairs, clusters
//! the rows of `V_K`, scores the labels and moves on to `K + 1`. The user stops
//! the loop with [`Session::accept`].

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{cluster_report, ClusterMetrics, ClusterReport, ClusteringError};
use crate::eigen::SolverConfig;
use crate::graph::{normalize_weights, GraphError, WeightedGraph};
use crate::incremental::{init_basis, next_eigenpair, BasisSnapshot, EigenBasis, IncrementalError};
use crate::laplacian::{LaplacianOperator, Variant};
use crate::linalg::mix_seed;

/// First `K` reported; `K = 1` is a single cluster and carries no information.
pub const FIRST_K: usize = 2;
const STATE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Solver(#[from] IncrementalError),
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
    #[error("graph has {components} connected components (δ = {components}); enable disconnected mode to cluster it")]
    Disconnected { components: usize },
    #[error("session is closed (accepted at K = {accepted})")]
    SessionClosed { accepted: usize },
    #[error("no report for K = {k}")]
    UnknownK { k: usize },
    #[error("cannot step past K = n = {n}")]
    BasisFull { n: usize },
    #[error("state file: {0}")]
    State(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub solver: SolverConfig,
    pub kmeans_seed: u64,
    /// Accept graphs with several components; their null-space block is
    /// inflated as a whole.
    pub allow_disconnected: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            kmeans_seed: 0,
            allow_disconnected: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum Status {
    Active,
    Accepted { k: usize },
}

/// Descriptive metadata: which graph feeds the eigenvectors and which the metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: String,
    pub variant: Variant,
    pub n: usize,
    pub edges: usize,
    pub components: usize,
    pub next_k: usize,
    pub status: Status,
    pub pipeline: String,
    pub metric_graph: String,
    pub graph_digest: String,
}

pub struct Session {
    id: String,
    config: SessionConfig,
    original: Arc<WeightedGraph>,
    basis: EigenBasis,
    next_k: usize,
    history: Vec<ClusterReport>,
    status: Status,
}

/// Builds the operator whose eigenvectors drive the clustering: the
/// unnormalized Laplacian of `S^{-1/2} W S^{-1/2}`, or the normalized
/// Laplacian of `W` itself.
pub fn pipeline_operator(graph: &WeightedGraph, variant: Variant) -> Result<LaplacianOperator, GraphError> {
    match variant {
        Variant::Unnormalized => LaplacianOperator::new(normalize_weights(graph)?, variant),
        Variant::Normalized => LaplacianOperator::new(graph.clone(), variant),
    }
}

fn pipeline_label(variant: Variant) -> &'static str {
    match variant {
        Variant::Unnormalized => "unnormalized Laplacian of S^-1/2 W S^-1/2",
        Variant::Normalized => "normalized Laplacian of W",
    }
}

fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

impl Session {
    pub fn create(graph: WeightedGraph, variant: Variant, config: SessionConfig) -> Result<Self, SessionError> {
        let op = pipeline_operator(&graph, variant)?;
        let components = op.components().count;
        if components > 1 && !config.allow_disconnected {
            return Err(SessionError::Disconnected { components });
        }
        Ok(Self {
            id: new_id(),
            config,
            basis: init_basis(&op),
            original: Arc::new(graph),
            next_k: FIRST_K,
            history: Vec::new(),
            status: Status::Active,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn status(&self) -> Status {
        self.status
    }

    /// `K` the next step will report.
    pub fn next_k(&self) -> usize {
        self.next_k
    }

    pub fn original_graph(&self) -> &WeightedGraph {
        &self.original
    }

    pub fn pipeline(&self) -> &LaplacianOperator {
        self.basis.operator()
    }

    pub fn basis(&self) -> &EigenBasis {
        &self.basis
    }

    pub fn info(&self) -> SessionInfo {
        SessionInfo {
            id: self.id.clone(),
            variant: self.basis.variant(),
            n: self.original.n(),
            edges: self.original.m(),
            components: self.basis.component_count(),
            next_k: self.next_k,
            status: self.status,
            pipeline: pipeline_label(self.basis.variant()).to_string(),
            metric_graph: "original W".to_string(),
            graph_digest: self.original.digest(),
        }
    }

    fn ensure_active(&self) -> Result<(), SessionError> {
        match self.status {
            Status::Active => Ok(()),
            Status::Accepted { k } => Err(SessionError::SessionClosed { accepted: k }),
        }
    }

    /// Computes, clusters and records the report for the next `K`.
    pub fn step(&mut self) -> Result<ClusterReport, SessionError> {
        self.ensure_active()?;
        let k = self.next_k;
        let n = self.original.n();
        if k > n {
            return Err(SessionError::BasisFull { n });
        }
        while self.basis.len() < k {
            next_eigenpair(&mut self.basis, &self.config.solver)?;
        }
        let pairs = self.basis.pairs();
        let report = cluster_report(
            &self.original,
            self.basis.operator(),
            &pairs[..k],
            k,
            mix_seed(self.config.kmeans_seed, k as u64),
        )?;
        self.history.push(report.clone());
        self.next_k += 1;
        Ok(report)
    }

    /// Stops the loop at `k` and returns its report.
    pub fn accept(&mut self, k: usize) -> Result<ClusterReport, SessionError> {
        self.ensure_active()?;
        let report = self.report(k).cloned().ok_or(SessionError::UnknownK { k })?;
        self.status = Status::Accepted { k };
        Ok(report)
    }

    pub fn report(&self, k: usize) -> Option<&ClusterReport> {
        self.history.iter().find(|r| r.k == k)
    }

    /// Reports in ascending `K`.
    pub fn history(&self) -> &[ClusterReport] {
        &self.history
    }

    pub fn metrics_history(&self) -> Vec<ClusterMetrics> {
        self.history.iter().map(|r| r.metrics).collect()
    }

    pub fn to_state(&self) -> SessionState {
        SessionState {
            version: STATE_VERSION,
            id: self.id.clone(),
            variant: self.basis.variant(),
            config: self.config,
            graph_digest: self.original.digest(),
            graph: (*self.original).clone(),
            basis: self.basis.snapshot(),
            next_k: self.next_k,
            history: self.history.clone(),
            status: self.status,
        }
    }

    pub fn from_state(state: SessionState) -> Result<Self, SessionError> {
        if state.version != STATE_VERSION {
            return Err(SessionError::State(format!("unsupported version {}", state.version)));
        }
        if state.graph.digest() != state.graph_digest {
            return Err(SessionError::State("graph digest mismatch".into()));
        }
        let expected_next = FIRST_K + state.history.len();
        let keys_ok = state.history.iter().enumerate().all(|(i, r)| r.k == FIRST_K + i);
        if !keys_ok || state.next_k != expected_next {
            return Err(SessionError::State("history keys are not 2..K".into()));
        }
        let op = pipeline_operator(&state.graph, state.variant)?;
        let basis = EigenBasis::restore(&op, state.basis)?;
        Ok(Self {
            id: state.id,
            config: state.config,
            original: Arc::new(state.graph),
            basis,
            next_k: state.next_k,
            history: state.history,
            status: state.status,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SessionError> {
        let text = serde_json::to_string(&self.to_state()).map_err(|e| SessionError::State(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SessionError> {
        let text = std::fs::read_to_string(path)?;
        let state: SessionState = serde_json::from_str(&text).map_err(|e| SessionError::State(e.to_string()))?;
        Self::from_state(state)
    }
}

/// Self-contained persisted form of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub version: u32,
    pub id: String,
    pub variant: Variant,
    pub config: SessionConfig,
    pub graph_digest: String,
    pub graph: WeightedGraph,
    pub basis: BasisSnapshot,
    pub next_k: usize,
    pub history: Vec<ClusterReport>,
    pub status: Status,
}
