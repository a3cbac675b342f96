//! Lanczos-IO baseline: one Lanczos factorization kept alive across increasing
//! `K`. Every Lanczos vector is stored and the factorization is extended by
//! `Z_aug` vectors whenever the requested Ritz pairs have not converged.
//!
//! Extensions continue the three-term recurrence, so `T` stays a single
//! coupled tridiagonal. Full reorthogonalization keeps `Q` orthonormal.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::EigenPair;
use crate::incremental::trivial_block;
use crate::laplacian::LaplacianOperator;
use crate::linalg::{self, axpy, canonicalize_sign, dot, mix_seed, norm};
use crate::operator::SymmetricOperator;

const BREAKDOWN_RATIO: f64 = 1e-12;
const NORM_POWER_ITERATIONS: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LanczosError {
    #[error("Lanczos breakdown at step {step}: invariant subspace reached")]
    Breakdown { step: usize },
    #[error("no convergence with Z = {z} stored vectors (residual {residual:.3e})")]
    NoConvergence { z: usize, residual: f64 },
    #[error("requested {k} eigenpairs of an operator of dimension {n}")]
    InvalidCount { k: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LanczosConfig {
    pub z_ini: usize,
    pub z_aug: usize,
    /// Absolute Ritz residual target; `None` means `ε · ‖M‖`.
    pub tolerance: Option<f64>,
    pub seed: u64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            z_ini: 20,
            z_aug: 10,
            tolerance: None,
            seed: 0,
        }
    }
}

/// Ritz pairs ordered by decreasing `|t|`, with last-row residual estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct RitzSet {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

impl RitzSet {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

pub struct LanczosState<O> {
    op: O,
    q: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    /// `beta[i]` couples `q_i` and `q_{i+1}`; zero after a restart.
    beta: Vec<f64>,
    /// Unit vector `q_{Z+1}` and its coupling `β_Z`; `None` after a breakdown or at `Z = n`.
    pending: Option<(Vec<f64>, f64)>,
    /// Orthonormal vectors the start and restart directions avoid; `M` must
    /// leave their complement invariant.
    deflate: Vec<Vec<f64>>,
    rng: ChaCha8Rng,
    matvecs: usize,
}

impl<O: SymmetricOperator> LanczosState<O> {
    /// Empty factorization (`Z = 0`) with a seeded random start vector.
    pub fn new(op: O, seed: u64) -> Self {
        let mut rng = linalg::rng_from_seed(seed);
        let start = linalg::random_unit_vector(op.dim(), &mut rng);
        Self::from_parts(op, start, rng)
    }

    /// Empty factorization with an explicit start vector (normalized here).
    pub fn with_start(op: O, mut start: Vec<f64>, seed: u64) -> Self {
        assert_eq!(start.len(), op.dim(), "start vector dimension");
        let mut rng = linalg::rng_from_seed(seed);
        if linalg::normalize(&mut start) == 0.0 {
            start = linalg::random_unit_vector(op.dim(), &mut rng);
        }
        Self::from_parts(op, start, rng)
    }

    /// Empty factorization confined to the orthogonal complement of `deflate`.
    pub fn with_deflation(op: O, deflate: Vec<Vec<f64>>, seed: u64) -> Self {
        let mut state = Self::new(op, seed);
        state.deflate = deflate;
        state.pending = None;
        state.restart();
        state
    }

    fn from_parts(op: O, start: Vec<f64>, rng: ChaCha8Rng) -> Self {
        Self {
            op,
            q: Vec::new(),
            alpha: Vec::new(),
            beta: Vec::new(),
            pending: Some((start, 0.0)),
            deflate: Vec::new(),
            rng,
            matvecs: 0,
        }
    }

    /// Largest reachable `Z`: `n` minus the deflated dimensions.
    pub fn capacity(&self) -> usize {
        self.dim() - self.deflate.len()
    }

    pub fn operator(&self) -> &O {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Current number of Lanczos vectors `Z`.
    pub fn z(&self) -> usize {
        self.q.len()
    }

    /// Length-n vectors held by the factorization; equals `Z`.
    pub fn stored_vectors(&self) -> usize {
        self.q.len()
    }

    pub fn matvecs(&self) -> usize {
        self.matvecs
    }

    pub fn lanczos_vectors(&self) -> &[Vec<f64>] {
        &self.q
    }

    /// Dense copy of the tridiagonal `T`.
    pub fn tridiagonal(&self) -> DMatrix<f64> {
        let z = self.z();
        let mut t = DMatrix::zeros(z, z);
        for i in 0..z {
            t[(i, i)] = self.alpha[i];
            if i + 1 < z {
                t[(i, i + 1)] = self.beta[i];
                t[(i + 1, i)] = self.beta[i];
            }
        }
        t
    }

    /// `β_Z`, the coupling to the next (not yet stored) Lanczos vector.
    pub fn trailing_coupling(&self) -> f64 {
        self.pending.as_ref().map_or(0.0, |p| p.1)
    }

    pub fn is_broken_down(&self) -> bool {
        self.pending.is_none() && self.z() < self.capacity()
    }

    /// Appends up to `z_aug` vectors (clamped at `Z = n`, or the capacity).
    ///
    /// On breakdown the vectors computed so far are kept and the state stays
    /// a valid factorization; [`restart`](Self::restart) re-seeds it.
    pub fn extend(&mut self, z_aug: usize) -> Result<(), LanczosError> {
        let n = self.dim();
        let cap = self.capacity();
        let target = (self.z() + z_aug).min(cap);
        let mut w = vec![0.0; n];
        while self.z() < target {
            let Some((q, coupling)) = self.pending.take() else {
                return Err(LanczosError::Breakdown { step: self.z() });
            };
            if let Some(last) = self.beta.last_mut() {
                *last = coupling;
            }
            self.op.apply(&q, &mut w);
            self.matvecs += 1;
            let raw = norm(&w);
            let a = dot(&q, &w);
            self.q.push(q);
            self.alpha.push(a);
            self.beta.push(0.0);
            self.purge(&mut w);
            let b = norm(&w);
            if self.z() == cap {
                break;
            }
            if b <= BREAKDOWN_RATIO * raw {
                return Err(LanczosError::Breakdown { step: self.z() });
            }
            let mut next = w.clone();
            linalg::scale(1.0 / b, &mut next);
            self.pending = Some((next, b));
        }
        Ok(())
    }

    /// Continues after a breakdown from a random direction orthogonal to `Q`,
    /// with zero coupling. No-op unless broken down.
    pub fn restart(&mut self) {
        if !self.is_broken_down() {
            return;
        }
        let n = self.dim();
        loop {
            let mut v = linalg::random_unit_vector(n, &mut self.rng);
            self.purge(&mut v);
            if linalg::normalize(&mut v) > 1e-3 {
                self.pending = Some((v, 0.0));
                return;
            }
        }
    }

    /// Removes the components along the deflated vectors and `Q`, both in
    /// every pass; projecting them separately lets rounding leak back in.
    fn purge(&self, x: &mut [f64]) {
        for _ in 0..2 {
            for d in &self.deflate {
                axpy(-dot(d, x), d, x);
            }
            for q in &self.q {
                axpy(-dot(q, x), q, x);
            }
        }
    }

    fn ritz_decomposition(&self, k: usize) -> (SymmetricEigen<f64, nalgebra::Dyn>, Vec<usize>, Vec<f64>) {
        let z = self.z();
        let eig = SymmetricEigen::new(self.tridiagonal());
        let vals = eig.eigenvalues.as_slice();
        let mut order: Vec<usize> = (0..z).collect();
        order.sort_by(|&a, &b| vals[b].abs().total_cmp(&vals[a].abs()).then(vals[a].total_cmp(&vals[b])));
        order.truncate(k);
        let beta_z = self.trailing_coupling();
        let residuals = order
            .iter()
            .map(|&c| (beta_z * eig.eigenvectors[(z - 1, c)]).abs())
            .collect();
        (eig, order, residuals)
    }

    /// Top-`k` Ritz pairs of `T` by absolute value. Requires `1 ≤ k ≤ Z`.
    pub fn ritz_pairs(&self, k: usize) -> RitzSet {
        assert!(k >= 1 && k <= self.z(), "ritz_pairs needs 1 <= k <= Z");
        let (eig, order, residuals) = self.ritz_decomposition(k);
        let n = self.dim();
        let vectors = order
            .iter()
            .map(|&c| {
                let mut x = vec![0.0; n];
                for (j, q) in self.q.iter().enumerate() {
                    axpy(eig.eigenvectors[(j, c)], q, &mut x);
                }
                linalg::normalize(&mut x);
                canonicalize_sign(&mut x);
                x
            })
            .collect();
        RitzSet {
            values: order.iter().map(|&c| eig.eigenvalues[c]).collect(),
            vectors,
            residuals,
        }
    }
}

/// Starts a factorization with `z_ini` vectors. The state is returned even on
/// breakdown, holding the vectors computed up to that step.
pub fn lanczos_init<O: SymmetricOperator>(op: O, z_ini: usize, seed: u64) -> (LanczosState<O>, Result<(), LanczosError>) {
    let mut state = LanczosState::new(op, seed);
    let res = state.extend(z_ini);
    (state, res)
}

/// The `k` leading eigenpairs of `M`, extending the factorization by `z_aug`
/// until every requested Ritz residual is at most `tolerance`.
pub fn lanczos_io_next<O: SymmetricOperator>(
    state: &mut LanczosState<O>,
    k: usize,
    z_aug: usize,
    tolerance: f64,
) -> Result<RitzSet, LanczosError> {
    let n = state.capacity();
    if k == 0 || k > n {
        return Err(LanczosError::InvalidCount { k, n });
    }
    loop {
        if state.z() == n {
            return exact_fallback(state, k, tolerance);
        }
        if state.z() >= k {
            let (_, _, residuals) = state.ritz_decomposition(k);
            let worst = residuals.iter().cloned().fold(0.0, f64::max);
            if worst <= tolerance {
                return Ok(state.ritz_pairs(k));
            }
        }
        let step = z_aug.max(1).max(k.saturating_sub(state.z()));
        if let Err(LanczosError::Breakdown { .. }) = state.extend(step) {
            state.restart();
        }
    }
}

/// At full capacity the Ritz pairs are exact up to rounding; accept them when their
/// true residuals are at rounding level.
fn exact_fallback<O: SymmetricOperator>(state: &LanczosState<O>, k: usize, tolerance: f64) -> Result<RitzSet, LanczosError> {
    let mut set = state.ritz_pairs(k);
    let scale = set.values.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let limit = tolerance.max(f64::EPSILON.sqrt() * scale);
    let mut worst = 0.0_f64;
    for (t, v) in set.values.iter().zip(&set.vectors) {
        let mut r = state.op.apply_vec(v);
        axpy(-t, v, &mut r);
        worst = worst.max(norm(&r));
    }
    if worst > limit {
        return Err(LanczosError::NoConvergence { z: state.z(), residual: worst });
    }
    set.residuals = vec![0.0; k];
    Ok(set)
}

/// `‖M‖` estimated by power iteration from a seeded start.
pub fn estimate_norm<O: SymmetricOperator + ?Sized>(op: &O, iterations: usize, seed: u64) -> f64 {
    let n = op.dim();
    let mut rng = linalg::rng_from_seed(seed);
    let mut x = linalg::random_unit_vector(n, &mut rng);
    let mut est = 0.0;
    for _ in 0..iterations.max(1) {
        let mut y = op.apply_vec(&x);
        est = linalg::normalize(&mut y);
        if est == 0.0 {
            break;
        }
        x = y;
    }
    est
}

/// `M = L + c T Tᵀ − c I`: the Laplacian with its null space lifted to 0 and
/// everything else shifted into `[−c, 0]`, so the smallest nontrivial
/// eigenvalues of `L` become the leading ones of `M`.
#[derive(Debug, Clone)]
pub struct ShiftedLaplacian {
    op: LaplacianOperator,
    trivial: Vec<Vec<f64>>,
    shift: f64,
}

impl ShiftedLaplacian {
    pub fn new(op: &LaplacianOperator) -> Self {
        Self {
            trivial: trivial_block(op),
            shift: op.inflation_shift(),
            op: op.clone(),
        }
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn trivial_block(&self) -> &[Vec<f64>] {
        &self.trivial
    }

    pub fn laplacian(&self) -> &LaplacianOperator {
        &self.op
    }
}

impl SymmetricOperator for ShiftedLaplacian {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.op.apply(x, y);
        axpy(-self.shift, x, y);
        for t in &self.trivial {
            axpy(self.shift * dot(t, x), t, y);
        }
    }
}

/// Smallest Laplacian eigenpairs through a persistent Lanczos-IO factorization.
pub struct LanczosIoSolver {
    state: LanczosState<ShiftedLaplacian>,
    z_ini: usize,
    z_aug: usize,
    tolerance: f64,
}

impl LanczosIoSolver {
    pub fn new(op: &LaplacianOperator, cfg: &LanczosConfig) -> Self {
        let m = ShiftedLaplacian::new(op);
        let tolerance = cfg
            .tolerance
            .unwrap_or_else(|| f64::EPSILON * estimate_norm(&m, NORM_POWER_ITERATIONS, mix_seed(cfg.seed, 1)));
        let trivial = m.trivial.clone();
        Self {
            state: LanczosState::with_deflation(m, trivial, cfg.seed),
            z_ini: cfg.z_ini,
            z_aug: cfg.z_aug,
            tolerance,
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn state(&self) -> &LanczosState<ShiftedLaplacian> {
        &self.state
    }

    /// The `k` smallest eigenpairs of `L`, ascending. The first `δ` are the
    /// known null-space pairs; the rest come from the leading Ritz pairs `t`
    /// of `M`, mapped back to `t + c`.
    pub fn smallest(&mut self, k: usize) -> Result<Vec<EigenPair>, LanczosError> {
        let n = self.state.dim();
        if k == 0 || k > n {
            return Err(LanczosError::InvalidCount { k, n });
        }
        let shift = self.state.op.shift;
        let delta = self.state.op.trivial.len();
        let mut pairs: Vec<EigenPair> = self.state.op.trivial[..delta.min(k)]
            .iter()
            .map(|t| {
                let mut vector = t.clone();
                canonicalize_sign(&mut vector);
                EigenPair { value: 0.0, vector }
            })
            .collect();
        if k > delta {
            if self.state.z() == 0 {
                if let Err(LanczosError::Breakdown { .. }) = self.state.extend(self.z_ini) {
                    self.state.restart();
                }
            }
            let set = lanczos_io_next(&mut self.state, k - delta, self.z_aug, self.tolerance)?;
            pairs.extend(set.values.into_iter().zip(set.vectors).map(|(t, vector)| EigenPair {
                value: t + shift,
                vector,
            }));
        }
        pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
        Ok(pairs)
    }
}
