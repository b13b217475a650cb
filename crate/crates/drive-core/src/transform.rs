//! Seed-shared random rotations.
//!
//! Two rotation families, both fully determined by a [`RotationSeed`]:
//!
//! - the randomized Hadamard transform (`O(D log D)`, production path):
//!   Rademacher sign flips followed by the orthonormal Walsh-Hadamard
//!   transform, with zero padding to the next power of two;
//! - a dense uniform (Haar) rotation built from a seeded Gaussian matrix via
//!   Gram-Schmidt (`O(d^3)`, capped at d = 256, used as a test oracle).
//!
//! Sign stream contract: the forward transform consumes exactly `D` words per
//! randomization round, one per padded coordinate in index order, taking the
//! low bit of each word (see [`crate::rng`]). The inverse regenerates the same
//! signs from the same seed, so the two sides agree everywhere.

use crate::error::{Error, Result};
use crate::rng::{stream_seed, CounterRng, DOMAIN_ROTATION};

/// Largest dimension accepted by the dense uniform-rotation oracle.
pub const UNIFORM_ORACLE_MAX_DIM: usize = 256;

/// Identifies one client's rotation stream for one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub struct RotationSeed {
    pub global_seed: u64,
    pub client_id: u32,
    pub round: u32,
}

impl RotationSeed {
    pub fn new(global_seed: u64, client_id: u32, round: u32) -> Self {
        Self { global_seed, client_id, round }
    }

    /// `H(global_seed, client_id, round)`: the derived stream seed.
    pub fn stream_seed(&self) -> u64 {
        stream_seed(
            self.global_seed,
            &[DOMAIN_ROTATION, u64::from(self.client_id), u64::from(self.round)],
        )
    }
}

/// A rotated vector of padded dimension `D = values.len()`.
///
/// `norm` is the Euclidean norm of the pre-rotation input; the rotation
/// preserves it, and the quantizer scales levels by `norm / sqrt(D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedVector {
    pub values: Vec<f64>,
    pub original_dim: usize,
    pub norm: f64,
}

impl RotatedVector {
    pub fn padded_dim(&self) -> usize {
        self.values.len()
    }
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// In-place unnormalized Walsh-Hadamard butterfly network.
///
/// Each stage maps pairs `(a, b)` at distance `half` to `(a + b, a - b)`.
/// Applying it twice multiplies by `len`, so the orthonormal transform is
/// this followed by a `1/sqrt(len)` scale.
pub(crate) fn fwht_in_place(values: &mut [f64]) {
    debug_assert!(values.len().is_power_of_two());
    let mut half = 1usize;
    while half < values.len() {
        let step = half * 2;
        for block in values.chunks_exact_mut(step) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half = step;
    }
}

/// Draws the `D` Rademacher signs of one randomization round.
///
/// Round `k` occupies the counter window `[k*D, (k+1)*D)` of the rotation
/// stream, one word per coordinate.
fn round_signs(seed: &RotationSeed, padded_dim: usize, round_index: usize) -> Vec<f64> {
    let mut rng = CounterRng::new(seed.stream_seed());
    rng.seek((round_index * padded_dim) as u64);
    (0..padded_dim).map(|_| rng.next_sign()).collect()
}

/// Sign flips + orthonormal WHT with explicit signs; shared by the seeded
/// transform and the dense brute-force oracle in tests.
pub fn hadamard_forward_with_signs(x: &[f64], signs: &[f64]) -> Result<RotatedVector> {
    check_finite(x)?;
    let padded = x.len().next_power_of_two();
    if signs.len() != padded {
        return Err(Error::DimensionMismatch { expected: padded, found: signs.len() });
    }
    let norm = l2_norm(x);
    let mut values = vec![0.0; padded];
    values[..x.len()].copy_from_slice(x);
    for (v, s) in values.iter_mut().zip(signs) {
        *v *= s;
    }
    fwht_in_place(&mut values);
    let scale = 1.0 / (padded as f64).sqrt();
    for v in values.iter_mut() {
        *v *= scale;
    }
    Ok(RotatedVector { values, original_dim: x.len(), norm })
}

/// Randomized Hadamard transform with `rounds` sign-flip + WHT passes.
pub fn hadamard_forward_rounds(
    x: &[f64],
    seed: &RotationSeed,
    rounds: usize,
) -> Result<RotatedVector> {
    check_finite(x)?;
    let padded = x.len().next_power_of_two();
    let norm = l2_norm(x);
    let mut values = vec![0.0; padded];
    values[..x.len()].copy_from_slice(x);
    let scale = 1.0 / (padded as f64).sqrt();
    for k in 0..rounds {
        let signs = round_signs(seed, padded, k);
        for (v, s) in values.iter_mut().zip(&signs) {
            *v *= s;
        }
        fwht_in_place(&mut values);
        for v in values.iter_mut() {
            *v *= scale;
        }
    }
    Ok(RotatedVector { values, original_dim: x.len(), norm })
}

/// Randomized Hadamard transform with the default single round.
pub fn hadamard_forward(x: &[f64], seed: &RotationSeed) -> Result<RotatedVector> {
    hadamard_forward_rounds(x, seed, 1)
}

/// Inverse of [`hadamard_forward_rounds`] on raw rotated values.
///
/// Exposed separately because the decoder reconstructs rotated values from a
/// wire payload rather than a [`RotatedVector`].
pub fn hadamard_inverse_values(
    rotated: &[f64],
    original_dim: usize,
    seed: &RotationSeed,
    rounds: usize,
) -> Result<Vec<f64>> {
    let padded = rotated.len();
    if !padded.is_power_of_two() {
        return Err(Error::NotPowerOfTwo { dim: padded });
    }
    if original_dim == 0 || original_dim > padded {
        return Err(Error::DimensionMismatch { expected: padded, found: original_dim });
    }
    let mut values = rotated.to_vec();
    let scale = 1.0 / (padded as f64).sqrt();
    for k in (0..rounds).rev() {
        // The orthonormal WHT is an involution, so the inverse pass applies
        // the same transform and then unflips that round's signs.
        fwht_in_place(&mut values);
        for v in values.iter_mut() {
            *v *= scale;
        }
        let signs = round_signs(seed, padded, k);
        for (v, s) in values.iter_mut().zip(&signs) {
            *v *= s;
        }
    }
    values.truncate(original_dim);
    Ok(values)
}

/// Inverse rotation, single round: recovers the original `d` coordinates.
pub fn hadamard_inverse(r: &RotatedVector, seed: &RotationSeed) -> Result<Vec<f64>> {
    hadamard_inverse_values(&r.values, r.original_dim, seed, 1)
}

// ---------------------------------------------------------------------------
// Dense uniform rotation (test oracle)
// ---------------------------------------------------------------------------

/// A Haar-distributed rotation matrix with its transpose available as the
/// exact inverse. Dense `O(d^2)` storage; sampling is `O(d^3)`.
#[derive(Debug, Clone)]
pub struct UniformRotation {
    // Row-major d x d orthonormal matrix.
    matrix: Vec<f64>,
    dim: usize,
}

impl UniformRotation {
    /// Samples a rotation from the seeded stream.
    ///
    /// A matrix of i.i.d. standard normals is orthonormalized column by
    /// column (Gram-Schmidt with one reorthogonalization pass). Normalizing
    /// against the residual makes the implicit triangular factor's diagonal
    /// positive, which is the convention that turns QR of a Gaussian matrix
    /// into a Haar sample.
    pub fn sample(dim: usize, seed: &RotationSeed) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyInput);
        }
        if dim > UNIFORM_ORACLE_MAX_DIM {
            return Err(Error::DimensionTooLarge { dim, max: UNIFORM_ORACLE_MAX_DIM });
        }
        let mut rng = CounterRng::new(seed.stream_seed());
        // Columns of the Gaussian matrix, filled in column-major draw order.
        let mut cols = vec![vec![0.0f64; dim]; dim];
        for col in cols.iter_mut() {
            for v in col.iter_mut() {
                *v = rng.next_gaussian();
            }
        }
        for j in 0..dim {
            let (done, rest) = cols.split_at_mut(j);
            let col = &mut rest[0];
            for _ in 0..2 {
                for q in done.iter() {
                    let dot: f64 = q.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                    for (c, &qv) in col.iter_mut().zip(q.iter()) {
                        *c -= dot * qv;
                    }
                }
            }
            let norm = l2_norm(col);
            // A zero residual has probability zero under the Gaussian draw.
            let inv = 1.0 / norm;
            for c in col.iter_mut() {
                *c *= inv;
            }
        }
        let mut matrix = vec![0.0; dim * dim];
        for (j, col) in cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                matrix[i * dim + j] = v;
            }
        }
        Ok(Self { matrix, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `R x`.
    pub fn apply(&self, x: &[f64]) -> Result<RotatedVector> {
        check_finite(x)?;
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let norm = l2_norm(x);
        let values = (0..self.dim)
            .map(|i| {
                let row = &self.matrix[i * self.dim..(i + 1) * self.dim];
                row.iter().zip(x).map(|(a, b)| a * b).sum()
            })
            .collect();
        Ok(RotatedVector { values, original_dim: self.dim, norm })
    }

    /// `R^T v = R^{-1} v`.
    pub fn apply_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: v.len() });
        }
        let mut out = vec![0.0; self.dim];
        for (i, &vi) in v.iter().enumerate() {
            let row = &self.matrix[i * self.dim..(i + 1) * self.dim];
            for (o, &m) in out.iter_mut().zip(row) {
                *o += m * vi;
            }
        }
        Ok(out)
    }
}

/// Rotates `x` by a fresh Haar sample and returns the inverse handle.
pub fn uniform_rotation_oracle(
    x: &[f64],
    seed: &RotationSeed,
) -> Result<(RotatedVector, UniformRotation)> {
    let rotation = UniformRotation::sample(x.len(), seed)?;
    let rotated = rotation.apply(x)?;
    Ok((rotated, rotation))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seed(s: u64) -> RotationSeed {
        RotationSeed::new(s, 0, 0)
    }

    /// Dense reference: D x D orthonormal Hadamard matrix applied to the
    /// sign-flipped padded input, entry H[i][j] = (-1)^popcount(i & j).
    fn dense_hadamard_oracle(x: &[f64], signs: &[f64]) -> Vec<f64> {
        let padded = x.len().next_power_of_two();
        let mut flipped = vec![0.0; padded];
        flipped[..x.len()].copy_from_slice(x);
        for (v, s) in flipped.iter_mut().zip(signs) {
            *v *= s;
        }
        let scale = 1.0 / (padded as f64).sqrt();
        (0..padded)
            .map(|i| {
                (0..padded)
                    .map(|j| {
                        let sign = if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                        sign * flipped[j]
                    })
                    .sum::<f64>()
                    * scale
            })
            .collect()
    }

    #[test]
    fn h2_with_identity_signs() {
        let r = hadamard_forward_with_signs(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        assert!((r.values[0] - inv_sqrt2).abs() < 1e-15);
        assert!((r.values[1] - inv_sqrt2).abs() < 1e-15);
    }

    #[test]
    fn dim_one_is_sign_flip() {
        let r = hadamard_forward(&[5.0], &seed(3)).unwrap();
        assert_eq!(r.values.len(), 1);
        assert!((r.values[0].abs() - 5.0).abs() < 1e-15);
        assert!((r.norm - 5.0).abs() < 1e-15);
    }

    #[test]
    fn padded_norm_preserved_and_matches_dense_oracle() {
        let x = [1.0, 2.0, 2.0];
        let s = seed(17);
        let r = hadamard_forward(&x, &s).unwrap();
        assert_eq!(r.values.len(), 4);
        let out_norm = r.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((out_norm - 3.0).abs() < 1e-9 * 3.0);

        let signs = round_signs(&s, 4, 0);
        let expected = dense_hadamard_oracle(&x, &signs);
        for (a, b) in r.values.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn inverse_of_h2_identity_signs() {
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        let r = RotatedVector { values: vec![inv_sqrt2, inv_sqrt2], original_dim: 2, norm: 1.0 };
        // Identity signs: find a seed whose first two sign words are +1.
        let mut s = 0u64;
        loop {
            if round_signs(&seed(s), 2, 0) == [1.0, 1.0] {
                break;
            }
            s += 1;
        }
        let x = hadamard_inverse(&r, &seed(s)).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!(x[1].abs() < 1e-12);
    }

    #[test]
    fn round_trip_lognormal_batch() {
        let mut rng = CounterRng::new(7);
        for trial in 0..1000u32 {
            let x = rng.lognormal_vec(77);
            let s = RotationSeed::new(11, trial, 0);
            let r = hadamard_forward(&x, &s).unwrap();
            let back = hadamard_inverse(&r, &s).unwrap();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let max_err = x
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(max_err < 1e-9 * norm, "trial {trial}: {max_err}");
        }
    }

    #[test]
    fn multi_round_round_trip() {
        let mut rng = CounterRng::new(5);
        let x = rng.lognormal_vec(19);
        let s = seed(23);
        let r = hadamard_forward_rounds(&x, &s, 3).unwrap();
        let back = hadamard_inverse_values(&r.values, x.len(), &s, 3).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn determinism_is_bit_exact() {
        let mut rng = CounterRng::new(1);
        let x = rng.lognormal_vec(100);
        let s = RotationSeed::new(42, 7, 3);
        let a = hadamard_forward(&x, &s).unwrap();
        let b = hadamard_forward(&x, &s).unwrap();
        assert_eq!(a.values, b.values);
        let (ra, _) = uniform_rotation_oracle(&x[..32], &s).unwrap();
        let (rb, _) = uniform_rotation_oracle(&x[..32], &s).unwrap();
        assert_eq!(ra.values, rb.values);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(hadamard_forward(&[], &seed(0)), Err(Error::EmptyInput));
        assert_eq!(hadamard_forward(&[f64::NAN], &seed(0)), Err(Error::NonFiniteInput));
        let r = RotatedVector { values: vec![0.0; 3], original_dim: 3, norm: 0.0 };
        assert_eq!(hadamard_inverse(&r, &seed(0)), Err(Error::NotPowerOfTwo { dim: 3 }));
        assert!(matches!(
            UniformRotation::sample(257, &seed(0)),
            Err(Error::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn uniform_rotation_is_orthonormal() {
        let s = seed(13);
        let mut rng = CounterRng::new(2);
        let x = rng.lognormal_vec(32);
        let (r, handle) = uniform_rotation_oracle(&x, &s).unwrap();
        let norm_in = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm_out = r.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm_in - norm_out).abs() < 1e-9 * norm_in);
        let back = handle.apply_inverse(&r.values).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_rotation_of_zero_is_zero() {
        let (r, _) = uniform_rotation_oracle(&[0.0; 8], &seed(1)).unwrap();
        assert!(r.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_rotation_coordinates_are_exchangeable() {
        // Marginal moments of the first and last coordinate agree within
        // Monte-Carlo error when rotating a fixed unit vector.
        let d = 16;
        let mut x = vec![0.0; d];
        x[0] = 1.0;
        let n = 4000;
        let (mut m_first, mut m_last, mut v_first, mut v_last) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            let s = RotationSeed::new(555, i, 0);
            let (r, _) = uniform_rotation_oracle(&x, &s).unwrap();
            m_first += r.values[0];
            m_last += r.values[d - 1];
            v_first += r.values[0] * r.values[0];
            v_last += r.values[d - 1] * r.values[d - 1];
        }
        let n = n as f64;
        // Var of each coordinate is 1/d; standard error of the variance
        // estimate is about sqrt(2/d^2/n) ~ 0.0014.
        assert!((m_first / n).abs() < 0.02);
        assert!((m_last / n).abs() < 0.02);
        assert!((v_first / n - 1.0 / d as f64).abs() < 0.01);
        assert!((v_last / n - 1.0 / d as f64).abs() < 0.01);
    }
}
