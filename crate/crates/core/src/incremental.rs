//! Incremental computation of the smallest Laplacian eigenpairs.
//!
//! Given the `K` smallest eigenpairs `(λ_i, v_i)`, the `(K+1)`-th is the leading
//! eigenpair of the inflated operator
//!
//! ```text
//! L̃ = L + Σ_{computed} (c − λ_i) v_i v_iᵀ + c Σ_{trivial} t tᵀ − c I
//! ```
//!
//! where `c` is the spectral bound (`s` for `L`, `2` for `L_N`) and the trivial
//! block `t` spans the null space in canonical form: one column per connected
//! component, constant on that component (or proportional to `sqrt(s_i)` for
//! the normalized variant). Known eigenvalues move to `0` while every unknown
//! one becomes `λ_i − c ≤ 0`, so `λ_{K+1} − c` has the largest magnitude.
//!
//! This covers connected and disconnected graphs for both Laplacians with one
//! code path: for a connected graph the trivial block is the single vector
//! `1/√n` (or `S^{1/2} 1/√s`), giving the `(c/n) 1 1ᵀ` and
//! `(2/s) S^{1/2} 1 1ᵀ S^{1/2}` terms.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::{leading_with, EigenError, EigenPair, LeadingOutcome, LeadingRequest, SolverConfig};
use crate::graph::GraphError;
use crate::laplacian::{LaplacianOperator, Variant};
use crate::linalg::{self, axpy, dot, mix_seed};
use crate::operator::SymmetricOperator;

/// Weight of the random component mixed into a warm start vector.
const WARM_NOISE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IncrementalError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("basis already holds all {n} eigenpairs")]
    BasisFull { n: usize },
    #[error("vector has length {got}, operator dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("stored basis does not match the operator: {0}")]
    InvalidSnapshot(String),
}

/// Work spent on one increment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Index (1-based) of the eigenpair produced by this step.
    pub k: usize,
    pub matvecs: usize,
    pub seconds: f64,
}

/// The smallest eigenpairs known so far, in ascending order.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    op: LaplacianOperator,
    shift: f64,
    trivial: Vec<Vec<f64>>,
    computed: Vec<EigenPair>,
    steps: Vec<StepRecord>,
    /// Runner-up Ritz vector of the last solve; seeds the next start vector.
    warm_start: Option<Vec<f64>>,
}

/// Serializable content of an [`EigenBasis`], without the operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSnapshot {
    pub variant: Variant,
    pub component_count: usize,
    pub computed: Vec<EigenPair>,
    pub steps: Vec<StepRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warm_start: Option<Vec<f64>>,
}

/// Canonical null-space basis: one unit column per component, in component order.
pub(crate) fn trivial_block(op: &LaplacianOperator) -> Vec<Vec<f64>> {
    let comps = op.components();
    let weights = op.null_vector();
    (0..comps.count)
        .map(|k| {
            let mut col = vec![0.0; op.dim()];
            for v in comps.members(k) {
                col[v] = weights[v];
            }
            linalg::normalize(&mut col);
            col
        })
        .collect()
}

/// Starts a basis holding only the trivial zero-eigenvalue block.
pub fn init_basis(op: &LaplacianOperator) -> EigenBasis {
    EigenBasis {
        trivial: trivial_block(op),
        shift: op.inflation_shift(),
        op: op.clone(),
        computed: Vec::new(),
        steps: Vec::new(),
        warm_start: None,
    }
}

impl EigenBasis {
    pub fn operator(&self) -> &LaplacianOperator {
        &self.op
    }

    pub fn variant(&self) -> Variant {
        self.op.variant()
    }

    /// Number of connected components `δ`.
    pub fn component_count(&self) -> usize {
        self.trivial.len()
    }

    /// Inflation constant: `s` or `2`.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Canonical null-space columns.
    pub fn trivial_block(&self) -> &[Vec<f64>] {
        &self.trivial
    }

    /// Non-trivial pairs beyond the first `δ`, ascending.
    pub fn computed_pairs(&self) -> &[EigenPair] {
        &self.computed
    }

    /// `c − λ_i` for each computed pair.
    pub fn inflation_values(&self) -> Vec<f64> {
        self.computed.iter().map(|p| self.shift - p.value).collect()
    }

    /// Total number of known eigenpairs `K`.
    pub fn len(&self) -> usize {
        self.trivial.len() + self.computed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_full(&self) -> bool {
        self.len() >= self.op.dim()
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    /// All known eigenvalues, ascending.
    pub fn values(&self) -> Vec<f64> {
        std::iter::repeat(0.0)
            .take(self.trivial.len())
            .chain(self.computed.iter().map(|p| p.value))
            .collect()
    }

    /// All known eigenvectors, ascending by eigenvalue.
    pub fn vectors(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.trivial
            .iter()
            .map(Vec::as_slice)
            .chain(self.computed.iter().map(|p| p.vector.as_slice()))
    }

    /// All known pairs, trivial block first.
    pub fn pairs(&self) -> Vec<EigenPair> {
        self.trivial
            .iter()
            .map(|t| EigenPair {
                value: 0.0,
                vector: t.clone(),
            })
            .chain(self.computed.iter().cloned())
            .collect()
    }

    /// Matrix-free view of the inflated operator for the current basis.
    pub fn inflated(&self) -> InflatedOperator<'_> {
        InflatedOperator { basis: self }
    }

    pub fn snapshot(&self) -> BasisSnapshot {
        BasisSnapshot {
            variant: self.variant(),
            component_count: self.component_count(),
            computed: self.computed.clone(),
            steps: self.steps.clone(),
            warm_start: self.warm_start.clone(),
        }
    }

    /// Rebuilds a basis from a snapshot taken on the same operator.
    pub fn restore(op: &LaplacianOperator, snap: BasisSnapshot) -> Result<Self, IncrementalError> {
        let mut basis = init_basis(op);
        if snap.variant != op.variant() {
            return Err(IncrementalError::InvalidSnapshot(format!(
                "variant {} does not match operator variant {}",
                snap.variant,
                op.variant()
            )));
        }
        if snap.component_count != basis.component_count() {
            return Err(IncrementalError::InvalidSnapshot(format!(
                "{} components recorded, operator has {}",
                snap.component_count,
                basis.component_count()
            )));
        }
        if basis.len() + snap.computed.len() > op.dim() {
            return Err(IncrementalError::InvalidSnapshot("more pairs than nodes".into()));
        }
        if let Some(p) = snap.computed.iter().find(|p| p.vector.len() != op.dim()) {
            return Err(IncrementalError::DimensionMismatch {
                expected: op.dim(),
                got: p.vector.len(),
            });
        }
        if let Some(w) = snap.warm_start.as_ref().filter(|w| w.len() != op.dim()) {
            return Err(IncrementalError::DimensionMismatch {
                expected: op.dim(),
                got: w.len(),
            });
        }
        basis.computed = snap.computed;
        basis.steps = snap.steps;
        basis.warm_start = snap.warm_start;
        Ok(basis)
    }
}

/// `L̃ = L + V Λ Vᵀ + c T Tᵀ − c I`, applied term by term.
#[derive(Clone, Copy)]
pub struct InflatedOperator<'a> {
    basis: &'a EigenBasis,
}

impl SymmetricOperator for InflatedOperator<'_> {
    fn dim(&self) -> usize {
        self.basis.op.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let b = self.basis;
        let c = b.shift;
        b.op.apply(x, y);
        for p in &b.computed {
            axpy((c - p.value) * dot(&p.vector, x), &p.vector, y);
        }
        for t in &b.trivial {
            axpy(c * dot(t, x), t, y);
        }
        axpy(-c, x, y);
    }
}

/// `L̃ x` for the basis' current inflated operator.
pub fn inflated_apply(basis: &EigenBasis, x: &[f64]) -> Result<Vec<f64>, IncrementalError> {
    let n = basis.op.dim();
    if x.len() != n {
        return Err(IncrementalError::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    Ok(basis.inflated().apply_vec(x))
}

/// Projects `v` off the stored basis: one Gram-Schmidt pass, a second one if
/// more than 30% of the norm was removed.
fn reorthogonalize(basis: &EigenBasis, v: &mut [f64]) {
    let stored: Vec<&[f64]> = basis.vectors().collect();
    linalg::project_out(v, &stored);
}

/// Computes eigenpair `K + 1` and appends it to the basis.
///
/// The leading eigenpair of the inflated operator is found by the restarted
/// Lanczos solver, started from a seeded random vector already orthogonal to
/// the known eigenvectors. Its eigenvalue plus `c` is the new eigenvalue; the
/// vector is re-orthogonalized against the basis and the stored value is its
/// Rayleigh quotient on `L`, which equals `λ₁(L̃) + c` up to rounding in `c`.
pub fn next_eigenpair(basis: &mut EigenBasis, cfg: &SolverConfig) -> Result<EigenPair, IncrementalError> {
    let n = basis.op.dim();
    if basis.is_full() {
        return Err(IncrementalError::BasisFull { n });
    }
    let clock = Instant::now();
    let k = basis.len();
    let mut rng = linalg::rng_from_seed(mix_seed(cfg.seed, k as u64));
    let mut start = linalg::random_unit_vector(n, &mut rng);
    if let Some(warm) = basis.warm_start.take() {
        // The previous solve already resolved most of the next eigenvector;
        // the random part keeps every other direction represented.
        linalg::scale(WARM_NOISE, &mut start);
        axpy(1.0, &warm, &mut start);
    }
    reorthogonalize(basis, &mut start);
    reorthogonalize(basis, &mut start);

    let step_cfg = SolverConfig {
        seed: mix_seed(cfg.seed, (k as u64) << 32),
        ..*cfg
    };
    let LeadingOutcome {
        pair,
        stats,
        runner_up,
    } = leading_with(
        &basis.inflated(),
        &step_cfg,
        LeadingRequest {
            start: Some(start),
            residual_offset: basis.shift,
            // When every remaining eigenvalue equals `c` the inflated operator
            // vanishes on the complement; keeping restarts out of the stored
            // span still lands the solver on an eigenvector there.
            deflate: basis.vectors().collect(),
        },
    )?;

    let mut vector = pair.vector;
    reorthogonalize(basis, &mut vector);
    linalg::normalize(&mut vector);
    linalg::canonicalize_sign(&mut vector);
    let lv = basis.op.apply_vec(&vector);
    let value = dot(&vector, &lv);

    let new = EigenPair { value, vector };
    basis.computed.push(new.clone());
    basis.warm_start = runner_up.map(|mut w| {
        linalg::normalize(&mut w);
        w
    });
    basis.steps.push(StepRecord {
        k: k + 1,
        matvecs: stats.matvecs + 1,
        seconds: clock.elapsed().as_secs_f64(),
    });
    Ok(new)
}

/// Grows a fresh basis until it holds `k_target` eigenpairs (or the trivial block, if larger).
pub fn sweep(op: &LaplacianOperator, k_target: usize, cfg: &SolverConfig) -> Result<EigenBasis, IncrementalError> {
    let n = op.dim();
    if k_target > n {
        return Err(IncrementalError::BasisFull { n });
    }
    let mut basis = init_basis(op);
    while basis.len() < k_target {
        next_eigenpair(&mut basis, cfg)?;
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    const R2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn op(n: usize, edges: &[(usize, usize, f64)], v: Variant) -> LaplacianOperator {
        LaplacianOperator::new(build_graph(n, edges.iter().copied()).unwrap(), v).unwrap()
    }

    fn p3() -> LaplacianOperator {
        op(3, &[(0, 1, 1.0), (1, 2, 1.0)], Variant::Unnormalized)
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn trivial_blocks() {
        let b = init_basis(&p3());
        let c = 1.0 / 3f64.sqrt();
        assert!(close(&b.trivial_block()[0], &[c, c, c], 1e-15));
        assert!(b.computed_pairs().is_empty());

        let edges = [(0, 1, 1.0), (2, 3, 1.0)];
        for v in [Variant::Unnormalized, Variant::Normalized] {
            let b = init_basis(&op(4, &edges, v));
            assert_eq!(b.component_count(), 2);
            assert!(close(&b.trivial_block()[0], &[R2, R2, 0.0, 0.0], 1e-15));
            assert!(close(&b.trivial_block()[1], &[0.0, 0.0, R2, R2], 1e-15));
        }
    }

    #[test]
    fn normalized_trivial_block_uses_sqrt_strengths() {
        // strengths 1, 3, 4, 2 on a single component
        let b = init_basis(&op(4, &[(0, 1, 1.0), (1, 2, 2.0), (2, 3, 2.0)], Variant::Normalized));
        let s = 10.0f64;
        let expect: Vec<f64> = [1.0f64, 3.0, 4.0, 2.0].iter().map(|x| (x / s).sqrt()).collect();
        assert!(close(&b.trivial_block()[0], &expect, 1e-15));
    }

    #[test]
    fn inflated_apply_examples() {
        let b = init_basis(&p3());
        let c = 1.0 / 3f64.sqrt();
        let y = inflated_apply(&b, &[c, c, c]).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-14), "{y:?}");
        // λ₂ = 1, s = 4 → L̃ v₂ = (1 − 4) v₂
        let y = inflated_apply(&b, &[R2, 0.0, -R2]).unwrap();
        assert!(close(&y, &[-3.0 * R2, 0.0, 3.0 * R2], 1e-14), "{y:?}");

        let two = init_basis(&op(4, &[(0, 1, 1.0), (2, 3, 1.0)], Variant::Unnormalized));
        let y = inflated_apply(&two, &[R2, -R2, 0.0, 0.0]).unwrap();
        assert!(close(&y, &[-2.0 * R2, 2.0 * R2, 0.0, 0.0], 1e-14), "{y:?}");

        assert_eq!(
            inflated_apply(&b, &[1.0]).unwrap_err(),
            IncrementalError::DimensionMismatch { expected: 3, got: 1 }
        );
    }

    #[test]
    fn path_increments() {
        let mut b = init_basis(&p3());
        let cfg = SolverConfig::default();
        let p2 = next_eigenpair(&mut b, &cfg).unwrap();
        assert!((p2.value - 1.0).abs() < 1e-10);
        assert!(close(&p2.vector, &[R2, 0.0, -R2], 1e-9), "{:?}", p2.vector);
        let p3v = next_eigenpair(&mut b, &cfg).unwrap();
        assert!((p3v.value - 3.0).abs() < 1e-10);
        let r6 = 1.0 / 6f64.sqrt();
        assert!(close(&p3v.vector, &[-r6, 2.0 * r6, -r6], 1e-9), "{:?}", p3v.vector);
        assert_eq!(next_eigenpair(&mut b, &cfg).unwrap_err(), IncrementalError::BasisFull { n: 3 });
        assert_eq!(b.steps().iter().map(|s| s.k).collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn complete_graph_degenerate_step() {
        let mut b = init_basis(&op(3, &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)], Variant::Unnormalized));
        let p = next_eigenpair(&mut b, &SolverConfig::default()).unwrap();
        assert!((p.value - 3.0).abs() < 1e-10);
        assert!(p.residual(b.operator()) <= 1e-10 * 3.0);
    }

    #[test]
    fn single_edge_reaches_top_eigenvalue() {
        // λ₂ = s, so the inflated operator is identically zero on the complement.
        let mut b = init_basis(&op(2, &[(0, 1, 1.0)], Variant::Unnormalized));
        let p = next_eigenpair(&mut b, &SolverConfig::default()).unwrap();
        assert!((p.value - 2.0).abs() < 1e-12);
        assert!(close(&p.vector, &[R2, -R2], 1e-12));
    }

    #[test]
    fn sweep_on_path() {
        let b = sweep(&p3(), 3, &SolverConfig::default()).unwrap();
        assert!(close(&b.values(), &[0.0, 1.0, 3.0], 1e-10));
        assert!(matches!(sweep(&p3(), 4, &SolverConfig::default()), Err(IncrementalError::BasisFull { .. })));
    }

    #[test]
    fn inflation_values_track_eigenvalues() {
        let b = sweep(&p3(), 3, &SolverConfig::default()).unwrap();
        let iv = b.inflation_values();
        assert!(close(&iv, &[3.0, 1.0], 1e-10));
    }

    #[test]
    fn snapshot_round_trip() {
        let b = sweep(&p3(), 2, &SolverConfig::default()).unwrap();
        let snap = b.snapshot();
        let js = serde_json::to_string(&snap).unwrap();
        let back = EigenBasis::restore(&p3(), serde_json::from_str(&js).unwrap()).unwrap();
        assert_eq!(back.values(), b.values());
        assert_eq!(back.computed_pairs(), b.computed_pairs());
        let other = op(3, &[(0, 1, 1.0), (1, 2, 1.0)], Variant::Normalized);
        assert!(EigenBasis::restore(&other, snap).is_err());
    }

    #[test]
    fn remaining_spectrum_at_the_shift() {
        // One edge plus an isolated node: λ₃ = 2w = s, so L̃ vanishes on the complement.
        let g = build_graph(3, [(0, 1, 0.1)]).unwrap();
        let op = LaplacianOperator::new(g, Variant::Unnormalized).unwrap();
        let b = sweep(&op, 3, &SolverConfig::default()).unwrap();
        assert!((b.values()[2] - 0.2).abs() < 1e-12);
        assert!(b.computed_pairs()[0].residual(&op) < 1e-12);

        // Bipartite graph, normalized: λ_max = 2 = c.
        let g = build_graph(6, (1..6).map(|i| (i - 1, i, 1.0))).unwrap();
        let op = LaplacianOperator::new(g, Variant::Normalized).unwrap();
        let b = sweep(&op, 6, &SolverConfig::default()).unwrap();
        let oracle = crate::eigen::dense_oracle(&op).unwrap();
        for (v, o) in b.values().iter().zip(&oracle) {
            assert!((v - o.value).abs() < 1e-8);
        }
        assert!(b.computed_pairs().iter().all(|p| p.residual(&op) < 1e-8));
    }
}
