//! Thick-restart Lanczos (symmetric Krylov-Schur) with a bounded workspace.
//!
//! The workspace holds at most `m + 1` vectors. After each expansion the
//! projected matrix is diagonalized; the best `p` Ritz vectors plus the
//! residual direction become the new starting subspace, which keeps the
//! subspace a filtered Krylov space of the original start vector. Every new
//! direction is orthogonalized twice against the whole workspace.
//!
//! A breakdown (the residual direction vanishes) means the current subspace is
//! invariant. The expansion then continues from a fresh random direction with
//! zero coupling, so the rest of the space is still explored. Eigenvalue
//! multiplicities that never cause a breakdown are only resolved to the extent
//! rounding error exposes them, as with any single-vector Krylov method.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_chacha::ChaCha8Rng;

use super::EigenError;
use crate::linalg::{self, axpy, norm, orthogonalize};
use crate::operator::SymmetricOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Which {
    LargestMagnitude,
    LargestAlgebraic,
}

impl Which {
    fn order(self, values: &[f64]) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..values.len()).collect();
        match self {
            Which::LargestMagnitude => idx.sort_by(|&a, &b| {
                values[b]
                    .abs()
                    .total_cmp(&values[a].abs())
                    .then(values[a].total_cmp(&values[b]))
            }),
            Which::LargestAlgebraic => idx.sort_by(|&a, &b| values[b].total_cmp(&values[a])),
        }
        idx
    }
}

pub(crate) struct KrylovOptions<'a> {
    pub nev: usize,
    pub subspace_dim: usize,
    pub which: Which,
    pub tolerance: f64,
    /// Residual threshold for Ritz value `θ` is `tolerance * max(1, |θ + offset|)`.
    pub residual_offset: f64,
    pub max_matvecs: usize,
    /// Fresh directions are drawn orthogonal to these as well as to the workspace.
    pub deflate: Vec<&'a [f64]>,
}

pub(crate) struct KrylovOutput {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Ritz vector ranked just after the wanted ones, when the workspace has one.
    pub runner_up: Option<Vec<f64>>,
    pub matvecs: usize,
}

const BREAKDOWN_RATIO: f64 = 1e-12;
const NOISE_FLOOR: f64 = 32.0 * f64::EPSILON;

pub(crate) fn thick_restart_lanczos<O: SymmetricOperator + ?Sized>(
    op: &O,
    start: Vec<f64>,
    opts: &KrylovOptions<'_>,
    rng: &mut ChaCha8Rng,
) -> Result<KrylovOutput, EigenError> {
    let n = op.dim();
    let nev = opts.nev;
    assert!(nev >= 1 && nev <= n, "nev must lie in 1..=n");
    // The workspace lives in the complement of the deflated vectors.
    let available = n.saturating_sub(opts.deflate.len()).max(nev);
    let m = opts.subspace_dim.clamp(nev + 1, n.max(nev + 1)).min(available);
    // Below `NOISE_FLOOR · ‖A‖` residuals are not resolvable in double precision.
    let mut op_norm = 0.0_f64;
    let threshold = |theta: f64, op_norm: f64| {
        (opts.tolerance * 1f64.max((theta + opts.residual_offset).abs())).max(NOISE_FLOOR * op_norm)
    };

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut start = start;
    if linalg::normalize(&mut start) == 0.0 {
        start = fresh_direction(n, &[], &opts.deflate, rng);
    }
    basis.push(start);

    let mut h = DMatrix::<f64>::zeros(m, m);
    let mut kept = 0;
    let mut matvecs = 0;
    let mut w = vec![0.0; n];

    loop {
        // Expand the subspace from `kept` to `m` columns.
        let mut coupling = 0.0;
        let mut residual_dir: Option<Vec<f64>> = None;
        for j in kept..m {
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            let raw = norm(&w);
            let coeffs = orthogonalize(&mut w, &basis[..=j]);
            for (i, c) in coeffs.into_iter().enumerate() {
                h[(i, j)] = c;
                h[(j, i)] = c;
            }
            let beta = norm(&w);
            let broke = beta <= BREAKDOWN_RATIO * raw;
            if j + 1 == m {
                if !broke {
                    coupling = beta;
                    linalg::scale(1.0 / beta, &mut w);
                    residual_dir = Some(w.clone());
                }
                break;
            }
            if broke {
                let fresh = fresh_direction(n, &basis, &opts.deflate, rng);
                basis.push(fresh);
            } else {
                h[(j + 1, j)] = beta;
                h[(j, j + 1)] = beta;
                let mut next = w.clone();
                linalg::scale(1.0 / beta, &mut next);
                basis.push(next);
            }
        }

        let eig = SymmetricEigen::new(h.clone());
        op_norm = eig.eigenvalues.iter().fold(op_norm, |a, v| a.max(v.abs()));
        let order = opts.which.order(eig.eigenvalues.as_slice());
        let estimates: Vec<f64> = order
            .iter()
            .map(|&c| (coupling * eig.eigenvectors[(m - 1, c)]).abs())
            .collect();
        let converged = order[..nev]
            .iter()
            .zip(&estimates)
            .all(|(&c, &est)| est <= threshold(eig.eigenvalues[c], op_norm));

        if converged {
            let mut values = Vec::with_capacity(nev);
            let mut vectors = Vec::with_capacity(nev);
            let mut ok = true;
            for &c in &order[..nev] {
                let theta = eig.eigenvalues[c];
                let mut x = ritz_vector(&basis[..m], &eig.eigenvectors, c);
                linalg::normalize(&mut x);
                op.apply(&x, &mut w);
                matvecs += 1;
                axpy(-theta, &x, &mut w);
                ok &= norm(&w) <= threshold(theta, op_norm);
                values.push(theta);
                vectors.push(x);
            }
            if ok {
                let runner_up = order
                    .get(nev)
                    .map(|&c| ritz_vector(&basis[..m], &eig.eigenvectors, c));
                return Ok(KrylovOutput {
                    values,
                    vectors,
                    runner_up,
                    matvecs,
                });
            }
        }

        if matvecs >= opts.max_matvecs {
            let worst = estimates[..nev].iter().cloned().fold(0.0, f64::max);
            return Err(EigenError::NoConvergence {
                iterations: matvecs,
                residual: worst,
            });
        }

        // Thick restart: keep the `p` best Ritz vectors and the residual direction.
        let p = (nev + (m - nev) / 2).min(m - 1).max(1);
        let mut new_basis: Vec<Vec<f64>> = order[..p]
            .iter()
            .map(|&c| ritz_vector(&basis[..m], &eig.eigenvectors, c))
            .collect();
        h.fill(0.0);
        for (i, &c) in order[..p].iter().enumerate() {
            h[(i, i)] = eig.eigenvalues[c];
        }
        match residual_dir {
            Some(r) => {
                for (i, &c) in order[..p].iter().enumerate() {
                    let b = coupling * eig.eigenvectors[(m - 1, c)];
                    h[(i, p)] = b;
                    h[(p, i)] = b;
                }
                new_basis.push(r);
            }
            None => {
                let fresh = fresh_direction(n, &new_basis, &opts.deflate, rng);
                new_basis.push(fresh);
            }
        }
        basis = new_basis;
        kept = p;
    }
}

fn ritz_vector(basis: &[Vec<f64>], y: &DMatrix<f64>, col: usize) -> Vec<f64> {
    let mut x = vec![0.0; basis[0].len()];
    for (j, q) in basis.iter().enumerate() {
        axpy(y[(j, col)], q, &mut x);
    }
    x
}

/// Random unit vector orthogonal to `basis` and `deflate`.
/// Requires the two to span less than the whole space.
fn fresh_direction(n: usize, basis: &[Vec<f64>], deflate: &[&[f64]], rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut v = linalg::random_unit_vector(n, rng);
        linalg::project_out(&mut v, deflate);
        orthogonalize(&mut v, basis);
        if linalg::normalize(&mut v) > 1e-3 {
            return v;
        }
    }
}
