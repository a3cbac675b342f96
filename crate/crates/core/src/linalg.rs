//! Dense vector kernels shared by the solvers.
//!
//! All reductions run left to right so results are bitwise reproducible.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn scale(alpha: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Normalizes `x` in place and returns its previous norm. Zero vectors are left untouched.
pub fn normalize(x: &mut [f64]) -> f64 {
    let nrm = norm(x);
    if nrm > 0.0 {
        scale(1.0 / nrm, x);
    }
    nrm
}

/// Two passes of classical Gram-Schmidt against an orthonormal set.
///
/// Returns the accumulated projection coefficients.
pub fn orthogonalize(x: &mut [f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut coeffs = vec![0.0; basis.len()];
    for _ in 0..2 {
        let h: Vec<f64> = basis.iter().map(|q| dot(q, x)).collect();
        for (q, &c) in basis.iter().zip(&h) {
            axpy(-c, q, x);
        }
        for (acc, c) in coeffs.iter_mut().zip(h) {
            *acc += c;
        }
    }
    coeffs
}

/// Removes the components of `x` along the orthonormal vectors `set`.
///
/// A second pass runs only when the first removed a large share of `x`.
pub fn project_out(x: &mut [f64], set: &[&[f64]]) {
    let before = norm(x);
    for pass in 0..2 {
        for q in set {
            let c = dot(q, x);
            axpy(-c, q, x);
        }
        if pass == 0 && norm(x) >= 0.7 * before {
            break;
        }
    }
}

/// Seeded RNG used for every random start vector in the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform entries in [-1, 1], normalized to unit length.
pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        if normalize(&mut v) > 0.0 {
            return v;
        }
    }
}

/// Flips `v` so that its largest-magnitude entry is nonnegative.
///
/// Entries within a relative `1e-8` of the maximum magnitude count as ties and
/// the lowest such index decides, so symmetric vectors like `(1, 0, -1)/√2`
/// canonicalize stably despite rounding.
pub fn canonicalize_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let cutoff = max * (1.0 - 1e-8);
    if let Some(&pivot) = v.iter().find(|x| x.abs() >= cutoff) {
        if pivot < 0.0 {
            scale(-1.0, v);
        }
    }
}

/// Derives an independent stream seed from a base seed and a counter (splitmix64).
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonalize_removes_components() {
        let basis = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let mut x = vec![3.0, -2.0, 5.0];
        let c = orthogonalize(&mut x, &basis);
        assert_eq!(x, vec![0.0, 0.0, 5.0]);
        assert_eq!(c, vec![3.0, -2.0]);
    }

    #[test]
    fn sign_tie_uses_lowest_index() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = vec![-r, 0.0, r * (1.0 + 1e-15)];
        canonicalize_sign(&mut v);
        assert!(v[0] > 0.0);
        let mut w = vec![0.1, -0.9, 0.3];
        canonicalize_sign(&mut w);
        assert_eq!(w, vec![-0.1, 0.9, -0.3]);
    }

    #[test]
    fn random_vectors_are_reproducible() {
        let a = random_unit_vector(16, &mut rng_from_seed(7));
        let b = random_unit_vector(16, &mut rng_from_seed(7));
        assert_eq!(a, b);
        assert!((norm(&a) - 1.0).abs() < 1e-14);
    }
}
