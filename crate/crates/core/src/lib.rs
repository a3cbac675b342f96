//! Graph-Laplacian eigensolvers that grow the computed spectrum one pair at a
//! time, plus the clustering loop built on top of them.
//!
//! The `(K+1)`-th smallest Laplacian eigenpair is obtained as the leading
//! eigenpair of the Laplacian with its first `K` eigenvalues inflated to the
//! top of the spectrum (see [`incremental`]). Baselines that recompute from
//! scratch ([`eigen::batch_smallest`]) or keep every Lanczos vector
//! ([`lanczos_io`]) live alongside for comparison.

pub mod clustering;
pub mod eigen;
pub mod graph;
pub mod incremental;
pub mod ingest;
pub mod laplacian;
pub mod lanczos_io;
pub mod linalg;
pub mod operator;
pub mod session;

pub use eigen::{batch_smallest, dense_oracle, leading_eigenpair, EigenError, EigenPair, SolverConfig};
pub use graph::{build_graph, connected_components, normalize_weights, strengths, GraphError, WeightedGraph};
pub use laplacian::{trace_of_laplacian, LaplacianOperator, Variant};
pub use operator::SymmetricOperator;
pub use clustering::{cluster_report, kmeans_rows, modularity, scaled_normalized_cut, scaled_sizes, scaled_spectrum_energy, ClusterMetrics, ClusterReport, ClusteringError};
pub use incremental::{init_basis, next_eigenpair, sweep, EigenBasis, IncrementalError};
pub use lanczos_io::{lanczos_init, lanczos_io_next, LanczosConfig, LanczosError, LanczosIoSolver, LanczosState, RitzSet};
pub use session::{Session, SessionConfig, SessionError, SessionInfo, Status};
