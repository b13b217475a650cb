//! Quantization level sets for the standard normal distribution.
//!
//! A [`LevelSet`] is a sorted, sign-symmetric set of reconstruction points
//! together with the statistics induced by N(0,1) over its Voronoi cells:
//! cell masses, Shannon entropy, and expected squared error. Constructors:
//!
//! - [`lloyd_max_levels`]: the z-level set minimizing expected squared error,
//!   via Lloyd iteration with closed-form Gaussian cell centroids;
//! - [`equal_interval_levels`]: a uniform lattice `{n * delta}` whose spacing
//!   is found by bisection so the induced entropy hits a target bit budget;
//! - [`LevelSet::two_point`] and [`LevelSet::zero`]: the `{-psi, +psi}` and
//!   `{0}` sets.
//!
//! All cell integrals use the truncated-normal moment identities, so no
//! numeric quadrature is involved anywhere.

use crate::error::{Error, Result};

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Standard normal CDF via the complementary error function.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile (used only to seed Lloyd iteration).
///
/// Peter Acklam's rational approximation refined by one Halley step on the
/// CDF, giving close to full double precision away from the extremes.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0,1), got {p}");
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_690e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // One Halley refinement.
    let e = normal_cdf(x) - p;
    let u = e * SQRT_2PI * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// How a level set was constructed.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum LevelSetKind {
    /// Optimal z-level quantizer for N(0,1).
    LloydMax { z: u32 },
    /// Truncated lattice `{n * delta : |n| <= n_max}`.
    EqualInterval { delta: f64, n_max: u32 },
    /// `{-psi, +psi}`.
    TwoPoint { psi: f64 },
    /// `{0}`: the untransmitted-coordinate set.
    Zero,
}

/// A sorted sign-symmetric level set with its N(0,1) statistics.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LevelSet {
    levels: Vec<f64>,
    probabilities: Vec<f64>,
    entropy_bits: f64,
    expected_sq_error: f64,
    kind: LevelSetKind,
}

impl LevelSet {
    fn from_levels(levels: Vec<f64>, kind: LevelSetKind) -> Result<Self> {
        let (probabilities, entropy_bits, expected_sq_error) = level_set_stats(&levels)?;
        debug_assert!(is_sign_symmetric(&levels));
        Ok(Self { levels, probabilities, entropy_bits, expected_sq_error, kind })
    }

    /// `{-psi, +psi}`.
    pub fn two_point(psi: f64) -> Result<Self> {
        if !(psi > 0.0 && psi.is_finite()) {
            return Err(Error::InvalidLevelCount);
        }
        Self::from_levels(vec![-psi, psi], LevelSetKind::TwoPoint { psi })
    }

    /// `{0}`: zero bits, everything reconstructs to 0.
    pub fn zero() -> Self {
        Self {
            levels: vec![0.0],
            probabilities: vec![1.0],
            entropy_bits: 0.0,
            expected_sq_error: 1.0,
            kind: LevelSetKind::Zero,
        }
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn entropy_bits(&self) -> f64 {
        self.entropy_bits
    }

    pub fn expected_sq_error(&self) -> f64 {
        self.expected_sq_error
    }

    pub fn kind(&self) -> &LevelSetKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Bits per coordinate under fixed-width encoding: `ceil(log2 len)`.
    pub fn fixed_width_bits(&self) -> u32 {
        let z = self.levels.len() as u32;
        if z <= 1 {
            0
        } else {
            32 - (z - 1).leading_zeros()
        }
    }

    /// Nearest-level index for a unit-scale value `t`.
    ///
    /// Ties at an exact cell midpoint go to the level of larger absolute
    /// value (at the symmetric midpoint 0, to the positive level), matching
    /// round-half-away-from-zero on the lattice fast path.
    pub fn nearest_index(&self, t: f64) -> u32 {
        if let LevelSetKind::EqualInterval { delta, n_max } = self.kind {
            // round() is round-half-away-from-zero, exactly the tie rule.
            let n = (t / delta).round().clamp(-f64::from(n_max), f64::from(n_max));
            return (n as i64 + i64::from(n_max)) as u32;
        }
        let levels = &self.levels;
        let z = levels.len();
        if z == 1 {
            return 0;
        }
        // Find the first cell boundary (midpoint) strictly above t.
        let mut lo = 0usize; // candidate index
        let mut hi = z - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            let boundary = 0.5 * (levels[mid] + levels[mid + 1]);
            if t < boundary {
                hi = mid;
            } else if t > boundary {
                lo = mid + 1;
            } else {
                // Exact midpoint: larger |level| wins; positive side on the
                // symmetric 0 boundary.
                return if levels[mid + 1].abs() >= levels[mid].abs() {
                    (mid + 1) as u32
                } else {
                    mid as u32
                };
            }
        }
        lo as u32
    }
}

fn is_sign_symmetric(levels: &[f64]) -> bool {
    let z = levels.len();
    (0..z).all(|i| levels[i] == -levels[z - 1 - i])
}

/// Voronoi-cell masses, entropy, and expected squared error of a strictly
/// increasing level list under N(0,1).
///
/// For a cell `(a, b]` with level `q`, using `m0 = Phi(b) - Phi(a)`,
/// `m1 = phi(a) - phi(b)`, `m2 = m0 + a*phi(a) - b*phi(b)`:
/// the squared-error integral is `m2 - 2 q m1 + q^2 m0`.
pub fn level_set_stats(levels: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    if levels.is_empty() {
        return Err(Error::InvalidLevelCount);
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) || levels.iter().any(|v| !v.is_finite()) {
        return Err(Error::LevelsNotSorted);
    }
    let z = levels.len();
    let mut probs = Vec::with_capacity(z);
    let mut entropy = 0.0;
    let mut v = 0.0;
    for (i, &q) in levels.iter().enumerate() {
        let a = if i == 0 { f64::NEG_INFINITY } else { 0.5 * (levels[i - 1] + q) };
        let b = if i == z - 1 { f64::INFINITY } else { 0.5 * (q + levels[i + 1]) };
        let (cdf_a, pdf_a, a_pdf_a) = if a.is_finite() {
            (normal_cdf(a), normal_pdf(a), a * normal_pdf(a))
        } else {
            (0.0, 0.0, 0.0)
        };
        let (cdf_b, pdf_b, b_pdf_b) = if b.is_finite() {
            (normal_cdf(b), normal_pdf(b), b * normal_pdf(b))
        } else {
            (1.0, 0.0, 0.0)
        };
        let m0 = (cdf_b - cdf_a).max(0.0);
        let m1 = pdf_a - pdf_b;
        let m2 = m0 + a_pdf_a - b_pdf_b;
        probs.push(m0);
        if m0 > 0.0 {
            entropy -= m0 * m0.log2();
        }
        v += m2 - 2.0 * q * m1 + q * q * m0;
    }
    Ok((probs, entropy, v))
}

/// Optimal z-level quantizer for N(0,1) by Lloyd iteration.
///
/// Levels start at the Gaussian quantiles `(i + 0.5) / z`; each pass moves
/// boundaries to level midpoints and levels to the closed-form conditional
/// means `(phi(a) - phi(b)) / (Phi(b) - Phi(a))`, until the largest level
/// movement drops below `tol`. The result is symmetrized exactly: floating
/// point breaks sign symmetry at the last ulp, and downstream unbiasedness
/// needs it exact.
pub fn lloyd_max_levels(z: u32, tol: f64) -> Result<LevelSet> {
    if z == 0 {
        return Err(Error::InvalidLevelCount);
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("Lloyd tolerance must be positive".into()));
    }
    if z == 1 {
        return Ok(LevelSet {
            levels: vec![0.0],
            probabilities: vec![1.0],
            entropy_bits: 0.0,
            expected_sq_error: 1.0,
            kind: LevelSetKind::LloydMax { z: 1 },
        });
    }
    let zf = f64::from(z);
    let mut levels: Vec<f64> =
        (0..z).map(|i| normal_quantile((f64::from(i) + 0.5) / zf)).collect();
    const MAX_ITERS: usize = 10_000;
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITERS {
        let mut moved = 0.0f64;
        let old = levels.clone();
        for i in 0..levels.len() {
            let a = if i == 0 { f64::NEG_INFINITY } else { 0.5 * (old[i - 1] + old[i]) };
            let b = if i == levels.len() - 1 {
                f64::INFINITY
            } else {
                0.5 * (old[i] + old[i + 1])
            };
            let mass = match (a.is_finite(), b.is_finite()) {
                (true, true) => normal_cdf(b) - normal_cdf(a),
                (true, false) => 1.0 - normal_cdf(a),
                (false, true) => normal_cdf(b),
                (false, false) => 1.0,
            };
            let flux = (if a.is_finite() { normal_pdf(a) } else { 0.0 })
                - (if b.is_finite() { normal_pdf(b) } else { 0.0 });
            if mass > 0.0 {
                levels[i] = flux / mass;
                moved = moved.max((levels[i] - old[i]).abs());
            }
        }
        residual = moved;
        if moved < tol {
            let sym: Vec<f64> = (0..levels.len())
                .map(|i| 0.5 * (levels[i] - levels[levels.len() - 1 - i]))
                .collect();
            return LevelSet::from_levels(sym, LevelSetKind::LloydMax { z });
        }
    }
    Err(Error::NonConvergence { residual })
}

/// Entropy of the truncated lattice with spacing `delta`.
fn lattice_entropy(delta: f64) -> f64 {
    let n_max = (10.0 / delta).ceil() as i64;
    let mut h = 0.0;
    for n in -n_max..=n_max {
        let a = if n == -n_max {
            f64::NEG_INFINITY
        } else {
            (n as f64 - 0.5) * delta
        };
        let b = if n == n_max { f64::INFINITY } else { (n as f64 + 0.5) * delta };
        let p = match (a.is_finite(), b.is_finite()) {
            (true, true) => normal_cdf(b) - normal_cdf(a),
            (true, false) => 1.0 - normal_cdf(a),
            (false, true) => normal_cdf(b),
            (false, false) => 1.0,
        };
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    h
}

/// Lattice level set whose N(0,1) entropy equals `bits - margin`.
///
/// Bisects the spacing over `[1e-4, 20]` (entropy is decreasing in the
/// spacing) until the entropy matches within `tol`. The lattice is truncated
/// at `n_max = ceil(10 / delta)`; the tail mass beyond +-10 is below 1e-23,
/// far under every tolerance in play. Out-of-range values clamp to the
/// extreme level during quantization.
pub fn equal_interval_levels_with_margin(bits: f64, margin: f64, tol: f64) -> Result<LevelSet> {
    let target = bits - margin;
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::InvalidBits { bits });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("bisection tolerance must be positive".into()));
    }
    let (mut lo, mut hi) = (1e-4f64, 20.0f64);
    if lattice_entropy(lo) < target || lattice_entropy(hi) > target {
        return Err(Error::EntropyOutOfRange { bits: target });
    }
    let mut delta = 0.5 * (lo + hi);
    for _ in 0..200 {
        delta = 0.5 * (lo + hi);
        let h = lattice_entropy(delta);
        if (h - target).abs() <= tol || (hi - lo) < f64::EPSILON * delta {
            break;
        }
        if h > target {
            lo = delta;
        } else {
            hi = delta;
        }
    }
    let n_max = (10.0 / delta).ceil() as u32;
    let levels: Vec<f64> =
        (-(i64::from(n_max))..=i64::from(n_max)).map(|n| n as f64 * delta).collect();
    LevelSet::from_levels(levels, LevelSetKind::EqualInterval { delta, n_max })
}

/// [`equal_interval_levels_with_margin`] with the default zero margin.
pub fn equal_interval_levels(bits: f64, tol: f64) -> Result<LevelSet> {
    equal_interval_levels_with_margin(bits, 0.0, tol)
}
