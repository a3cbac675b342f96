//! Leading-eigenpair and batch smallest-K solvers for symmetric operators.

mod dense;
pub(crate) mod krylov;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dense::{dense_eigen, dense_oracle, dense_spectrum, DENSE_LIMIT};
use krylov::{thick_restart_lanczos, KrylovOptions, Which};

use crate::laplacian::LaplacianOperator;
use crate::linalg::{self, canonicalize_sign};
use crate::operator::{NegatedShift, SymmetricOperator};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error("no convergence after {iterations} matvecs (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("dimension {n} exceeds the dense oracle limit {limit}")]
    TooLargeForDense { n: usize, limit: usize },
    #[error("requested {k} eigenpairs from an operator of dimension {n}")]
    InvalidCount { k: usize, n: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

/// Eigenvalue with a unit-norm eigenvector whose largest-magnitude entry is nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

impl EigenPair {
    /// `‖A v − λ v‖₂`, recomputed with one matvec.
    pub fn residual<O: SymmetricOperator + ?Sized>(&self, op: &O) -> f64 {
        let mut r = op.apply_vec(&self.vector);
        linalg::axpy(-self.value, &self.vector, &mut r);
        linalg::norm(&r)
    }
}

/// Below this a one-pair solve restarts so often that it costs more matvecs.
const MIN_WORKSPACE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Relative residual target: `‖A v − λ v‖ ≤ tolerance · max(1, |λ|)`, floored at
    /// `32 ε ‖A‖` where the target drops below double-precision resolution.
    pub tolerance: f64,
    /// Matvec cap; `None` means `10 n + 1000`.
    pub max_iterations: Option<usize>,
    pub seed: u64,
    /// Krylov workspace size; `None` means `min(max(2k + 10, 20), n)` for `k` wanted pairs.
    pub subspace_dim: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-10,
            max_iterations: None,
            seed: 0,
            subspace_dim: None,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(seed: u64) -> Self {
        SolverConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), EigenError> {
        if !(self.tolerance > 0.0) {
            return Err(EigenError::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == Some(0) {
            return Err(EigenError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    pub fn max_matvecs(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or(10 * n + 1000)
    }

    pub fn workspace(&self, wanted: usize, n: usize) -> usize {
        self.subspace_dim.unwrap_or((2 * wanted + 10).max(MIN_WORKSPACE)).min(n)
    }
}

/// Work counters reported alongside solver output.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStats {
    pub matvecs: usize,
    /// Largest number of length-n vectors held at once.
    pub stored_vectors: usize,
}

pub(crate) struct LeadingRequest<'a> {
    pub start: Option<Vec<f64>>,
    pub residual_offset: f64,
    /// Orthonormal vectors every fresh Krylov direction is kept orthogonal to.
    pub deflate: Vec<&'a [f64]>,
}

pub(crate) struct LeadingOutcome {
    pub pair: EigenPair,
    pub stats: SolveStats,
    pub runner_up: Option<Vec<f64>>,
}

pub(crate) fn leading_with<O: SymmetricOperator + ?Sized>(
    op: &O,
    cfg: &SolverConfig,
    req: LeadingRequest<'_>,
) -> Result<LeadingOutcome, EigenError> {
    cfg.validate()?;
    let n = op.dim();
    if n == 0 {
        return Err(EigenError::InvalidCount { k: 1, n });
    }
    let mut rng = linalg::rng_from_seed(cfg.seed);
    let start = req
        .start
        .unwrap_or_else(|| linalg::random_unit_vector(n, &mut rng));
    let opts = KrylovOptions {
        nev: 1,
        subspace_dim: cfg.workspace(1, n),
        which: Which::LargestMagnitude,
        tolerance: cfg.tolerance,
        residual_offset: req.residual_offset,
        max_matvecs: cfg.max_matvecs(n),
        deflate: req.deflate,
    };
    let out = thick_restart_lanczos(op, start, &opts, &mut rng)?;
    let mut vector = out.vectors.into_iter().next().unwrap();
    canonicalize_sign(&mut vector);
    let stats = SolveStats {
        matvecs: out.matvecs,
        stored_vectors: opts.subspace_dim + 1,
    };
    Ok(LeadingOutcome {
        pair: EigenPair {
            value: out.values[0],
            vector,
        },
        stats,
        runner_up: out.runner_up,
    })
}

/// Eigenpair of largest `|λ|`, with the number of matvecs spent.
pub fn leading_eigenpair<O: SymmetricOperator + ?Sized>(
    op: &O,
    cfg: &SolverConfig,
) -> Result<(EigenPair, usize), EigenError> {
    let LeadingOutcome { pair, stats, .. } = leading_with(
        op,
        cfg,
        LeadingRequest {
            start: None,
            residual_offset: 0.0,
            deflate: Vec::new(),
        },
    )?;
    Ok((pair, stats.matvecs))
}

/// The `k` smallest eigenpairs of a Laplacian computed from scratch.
///
/// Runs the restarted Lanczos solver for the `k` largest eigenvalues of
/// `c I − L` (with `c` the spectral bound `s` or `2`) and maps them back.
/// Each returned value is the Rayleigh quotient of its vector on `L`.
pub fn batch_smallest(
    op: &LaplacianOperator,
    k: usize,
    cfg: &SolverConfig,
) -> Result<Vec<EigenPair>, EigenError> {
    batch_smallest_with_stats(op, k, cfg).map(|(pairs, _)| pairs)
}

pub fn batch_smallest_with_stats(
    op: &LaplacianOperator,
    k: usize,
    cfg: &SolverConfig,
) -> Result<(Vec<EigenPair>, SolveStats), EigenError> {
    cfg.validate()?;
    let n = op.dim();
    if k == 0 || k > n {
        return Err(EigenError::InvalidCount { k, n });
    }
    let shift = op.inflation_shift();
    let shifted = NegatedShift { inner: op, shift };
    let mut rng = linalg::rng_from_seed(cfg.seed);
    let start = linalg::random_unit_vector(n, &mut rng);
    let opts = KrylovOptions {
        nev: k,
        subspace_dim: cfg.workspace(k, n),
        which: Which::LargestAlgebraic,
        tolerance: cfg.tolerance,
        residual_offset: -shift,
        max_matvecs: cfg.max_matvecs(n),
        deflate: Vec::new(),
    };
    let out = thick_restart_lanczos(&shifted, start, &opts, &mut rng)?;
    let mut matvecs = out.matvecs;
    let mut pairs: Vec<EigenPair> = out
        .vectors
        .into_iter()
        .map(|mut vector| {
            canonicalize_sign(&mut vector);
            let lv = op.apply_vec(&vector);
            matvecs += 1;
            EigenPair {
                value: linalg::dot(&vector, &lv),
                vector,
            }
        })
        .collect();
    pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok((
        pairs,
        SolveStats {
            matvecs,
            stored_vectors: opts.subspace_dim + 1,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::laplacian::Variant;
    use crate::operator::{DenseOperator, DiagonalOperator};
    use nalgebra::DMatrix;

    fn lap(n: usize, edges: &[(usize, usize, f64)]) -> LaplacianOperator {
        LaplacianOperator::new(build_graph(n, edges.iter().copied()).unwrap(), Variant::Unnormalized).unwrap()
    }

    #[test]
    fn leading_of_diagonal() {
        let op = DiagonalOperator(vec![-3.0, 1.0, 0.5]);
        let (pair, its) = leading_eigenpair(&op, &SolverConfig::default()).unwrap();
        assert!((pair.value + 3.0).abs() < 1e-12);
        assert!((pair.vector[0] - 1.0).abs() < 1e-10);
        assert!(its >= 1);
    }

    #[test]
    fn leading_of_scaled_identity() {
        let op = DiagonalOperator(vec![2.5; 7]);
        let (pair, _) = leading_eigenpair(&op, &SolverConfig::default()).unwrap();
        assert!((pair.value - 2.5).abs() < 1e-12);
        assert!(pair.residual(&op) <= 1e-10 * 2.5);
    }

    #[test]
    fn leading_of_one_by_one() {
        let op = DiagonalOperator(vec![-4.0]);
        let (pair, _) = leading_eigenpair(&op, &SolverConfig::default()).unwrap();
        assert_eq!(pair.value, -4.0);
        assert_eq!(pair.vector, vec![1.0]);
    }

    #[test]
    fn leading_matches_dense_on_random_symmetric() {
        let mut rng = linalg::rng_from_seed(11);
        let a = DMatrix::from_fn(10, 10, |_, _| rand::Rng::gen_range(&mut rng, -1.0..1.0));
        let sym = (&a + a.transpose()) * 0.5;
        let oracle = dense_spectrum(sym.clone());
        let extreme = if oracle[0].abs() > oracle[9].abs() { oracle[0] } else { oracle[9] };
        let (pair, _) = leading_eigenpair(&DenseOperator(sym), &SolverConfig::with_seed(3)).unwrap();
        assert!((pair.value - extreme).abs() < 1e-8, "{} vs {}", pair.value, extreme);
    }

    #[test]
    fn deterministic_given_seed() {
        let op = lap(5, &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5), (3, 4, 1.0), (0, 4, 1.5)]);
        let cfg = SolverConfig::with_seed(99);
        let a = leading_eigenpair(&op, &cfg).unwrap();
        let b = leading_eigenpair(&op, &cfg).unwrap();
        assert_eq!(a.0.value.to_bits(), b.0.value.to_bits());
        assert_eq!(a.0.vector, b.0.vector);
    }

    #[test]
    fn no_convergence_is_reported() {
        let op = lap(30, &(0..29).map(|i| (i, i + 1, 1.0)).collect::<Vec<_>>());
        let cfg = SolverConfig {
            max_iterations: Some(3),
            subspace_dim: Some(3),
            ..Default::default()
        };
        assert!(matches!(
            leading_eigenpair(&op, &cfg),
            Err(EigenError::NoConvergence { .. })
        ));
    }

    #[test]
    fn invalid_config() {
        let op = DiagonalOperator(vec![1.0]);
        let cfg = SolverConfig {
            tolerance: 0.0,
            ..Default::default()
        };
        assert!(matches!(leading_eigenpair(&op, &cfg), Err(EigenError::InvalidConfig(_))));
    }

    #[test]
    fn batch_on_path() {
        let op = lap(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let pairs = batch_smallest(&op, 3, &SolverConfig::default()).unwrap();
        let values: Vec<f64> = pairs.iter().map(|p| p.value).collect();
        for (v, e) in values.iter().zip([0.0, 1.0, 3.0]) {
            assert!((v - e).abs() < 1e-10, "{values:?}");
        }
    }

    #[test]
    fn batch_on_two_components() {
        let op = lap(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
        let pairs = batch_smallest(&op, 2, &SolverConfig::default()).unwrap();
        assert!(pairs.iter().all(|p| p.value.abs() < 1e-10));
        assert!(linalg::dot(&pairs[0].vector, &pairs[1].vector).abs() < 1e-8);
    }

    #[test]
    fn batch_rejects_bad_k() {
        let op = lap(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        assert!(matches!(
            batch_smallest(&op, 4, &SolverConfig::default()),
            Err(EigenError::InvalidCount { k: 4, n: 3 })
        ));
        assert!(batch_smallest(&op, 0, &SolverConfig::default()).is_err());
    }

    #[test]
    fn dense_known_spectra() {
        let p3 = lap(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        let vals: Vec<f64> = dense_oracle(&p3).unwrap().iter().map(|p| p.value).collect();
        for (v, e) in vals.iter().zip([0.0, 1.0, 3.0]) {
            assert!((v - e).abs() < 1e-12);
        }
        for n in [3usize, 5] {
            let edges: Vec<_> = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j, 1.0)))
                .collect();
            let vals: Vec<f64> = dense_oracle(&lap(n, &edges)).unwrap().iter().map(|p| p.value).collect();
            assert!(vals[0].abs() < 1e-12);
            assert!(vals[1..].iter().all(|v| (v - n as f64).abs() < 1e-12));
        }
    }

    #[test]
    fn dense_guard() {
        let op = DiagonalOperator(vec![1.0; DENSE_LIMIT + 1]);
        assert!(matches!(dense_oracle(&op), Err(EigenError::TooLargeForDense { .. })));
    }
}
