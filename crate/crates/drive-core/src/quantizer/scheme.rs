//! Per-coordinate level-set assignment and the quantize/scale operations.
//!
//! A [`Scheme`] maps every rotated coordinate to a level set, run-length
//! encoded. For a budget of `b` bits per coordinate it holds either
//!
//! - a single lattice set entropy-coded across all coordinates
//!   (`entropy_coded`, only when `b > 1`), or
//! - a fixed-width mix: the first `floor(frac(b) * D)` coordinates use the
//!   optimal set of `2^(floor(b)+1)` levels and the rest use `2^floor(b)`
//!   levels (`{0}` when `floor(b) = 0`, i.e. those coordinates are simply
//!   not transmitted).
//!
//! The coordinates given the larger set default to the leading ones; rotated
//! coordinates are identically distributed, so the choice carries no
//! statistical weight, but a shared-randomness selection is available for
//! deployments that want it.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::{stream_seed, CounterRng};
use crate::transform::RotatedVector;

use super::levels::{equal_interval_levels_with_margin, lloyd_max_levels, LevelSet};

/// Default Lloyd / bisection tolerance used by scheme construction.
pub const DESIGN_TOL: f64 = 1e-12;
/// Entropy-target bisection tolerance.
pub const ENTROPY_TOL: f64 = 1e-10;
/// Largest supported whole-bit budget (level counts stay manageable).
pub const MAX_BITS: f64 = 12.0;

/// How the decoded vector is rescaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ScaleMode {
    /// `S = |x|^2 / <r, q>`: unbiased under uniform rotations.
    Unbiased,
    /// `S = <r, q> / |q|^2`: minimizes the squared error for this vector.
    MinVnmse,
}

/// Which coordinates receive the larger set when the budget is fractional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum CoordSelection {
    /// The leading `floor(frac(b) * D)` coordinates (default).
    FirstK,
    /// A seeded shared-randomness draw of the same count.
    Shared { seed: u64 },
}

/// Per-coordinate level sets plus scale mode for one bit budget.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Scheme {
    sets: Vec<LevelSet>,
    /// `(set index, run length)` covering `[0, dim)`.
    runs: Vec<(usize, u32)>,
    nominal_bits: f64,
    scale_mode: ScaleMode,
    entropy_coded: bool,
    dim: usize,
}

impl Scheme {
    /// Builds the scheme for `bits` per coordinate over `dim` rotated
    /// coordinates. `bits = 0` yields the all-`{0}` scheme (nothing is
    /// transmitted; the estimate collapses to zero).
    pub fn build(bits: f64, dim: usize, scale_mode: ScaleMode, entropy_mode: bool) -> Result<Self> {
        Self::build_with(bits, dim, scale_mode, entropy_mode, CoordSelection::FirstK, 0.0)
    }

    /// [`Scheme::build`] with explicit coordinate selection and entropy
    /// margin (the target entropy becomes `bits - margin`).
    pub fn build_with(
        bits: f64,
        dim: usize,
        scale_mode: ScaleMode,
        entropy_mode: bool,
        selection: CoordSelection,
        entropy_margin: f64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyInput);
        }
        if !bits.is_finite() || bits < 0.0 || bits > MAX_BITS {
            return Err(Error::InvalidBits { bits });
        }
        if entropy_mode && bits > 1.0 {
            let set = equal_interval_levels_with_margin(bits, entropy_margin, ENTROPY_TOL)?;
            return Ok(Self {
                sets: vec![set],
                runs: vec![(0, dim as u32)],
                nominal_bits: bits,
                scale_mode,
                entropy_coded: true,
                dim,
            });
        }
        let whole = bits.floor();
        let frac = bits - whole;
        let k = (frac * dim as f64).floor() as usize; // coordinates on the larger set
        let small = if whole == 0.0 {
            LevelSet::zero()
        } else {
            lloyd_max_levels(1u32 << (whole as u32), DESIGN_TOL)?
        };
        if k == 0 {
            if small.len() < 2 {
                // All-zero scheme: legal only as the explicit b = 0 request.
                if bits != 0.0 {
                    return Err(Error::InvalidBits { bits });
                }
            }
            return Ok(Self {
                sets: vec![small],
                runs: vec![(0, dim as u32)],
                nominal_bits: bits,
                scale_mode,
                entropy_coded: false,
                dim,
            });
        }
        let large = lloyd_max_levels(1u32 << (whole as u32 + 1), DESIGN_TOL)?;
        let runs = match selection {
            CoordSelection::FirstK => {
                let mut runs = vec![(1usize, k as u32)];
                if k < dim {
                    runs.push((0usize, (dim - k) as u32));
                }
                runs
            }
            CoordSelection::Shared { seed } => {
                let picks = shared_selection(seed, dim, k);
                compress_runs(&picks)
            }
        };
        Ok(Self {
            sets: vec![small, large],
            runs,
            nominal_bits: bits,
            scale_mode,
            entropy_coded: false,
            dim,
        })
    }

    /// Reconstructs the scheme a wire id describes (see [`Scheme::wire_id`]).
    pub fn from_wire_id(id: u16, dim: usize, scale_mode: ScaleMode, entropy: bool) -> Result<Self> {
        Self::build(f64::from(id) / 256.0, dim, scale_mode, entropy)
    }

    /// 16-bit wire identifier: the bit budget in 8.8 fixed point.
    ///
    /// Callers that serialize messages must quantize their budget to 1/256
    /// granularity (see [`Scheme::quantize_bits`]) so both sides rebuild the
    /// identical scheme from the id alone.
    pub fn wire_id(&self) -> u16 {
        (self.nominal_bits * 256.0).round() as u16
    }

    /// Rounds a bit budget to the 1/256 granularity the wire id can carry.
    pub fn quantize_bits(bits: f64) -> f64 {
        (bits * 256.0).round() / 256.0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nominal_bits(&self) -> f64 {
        self.nominal_bits
    }

    pub fn scale_mode(&self) -> ScaleMode {
        self.scale_mode
    }

    pub fn entropy_coded(&self) -> bool {
        self.entropy_coded
    }

    /// `(level set, run length)` in coordinate order.
    pub fn runs(&self) -> impl Iterator<Item = (&LevelSet, u32)> {
        self.runs.iter().map(|&(set, len)| (&self.sets[set], len))
    }

    /// The level set of coordinate `i` (linear in run count; tests only).
    pub fn level_set_at(&self, mut i: usize) -> &LevelSet {
        for &(set, len) in &self.runs {
            if i < len as usize {
                return &self.sets[set];
            }
            i -= len as usize;
        }
        panic!("coordinate {i} beyond scheme dimension {}", self.dim);
    }

    /// The single set of a uniform scheme, if it is uniform.
    pub fn uniform_set(&self) -> Option<&LevelSet> {
        if self.runs.len() == 1 {
            Some(&self.sets[self.runs[0].0])
        } else {
            None
        }
    }

    /// Total fixed-width payload size: sum of per-coordinate index widths.
    pub fn total_payload_bits(&self) -> u64 {
        self.runs()
            .map(|(set, len)| u64::from(set.fixed_width_bits()) * u64::from(len))
            .sum()
    }

    /// True when every set size admits fixed-width packing (power of two
    /// or singleton).
    pub fn fixed_width_ok(&self) -> bool {
        self.sets.iter().all(|s| s.len() == 1 || s.len().is_power_of_two())
    }

    /// True when some coordinate can express a nonzero value.
    pub fn has_nonzero_level(&self) -> bool {
        self.sets.iter().any(|s| s.len() >= 2)
    }
}

fn shared_selection(seed: u64, dim: usize, k: usize) -> Vec<bool> {
    // Seeded partial Fisher-Yates: the first k slots of the shuffled index
    // list receive the larger set.
    let mut rng = CounterRng::new(stream_seed(seed, &[dim as u64, k as u64]));
    let mut idx: Vec<u32> = (0..dim as u32).collect();
    let mut picks = vec![false; dim];
    for i in 0..k {
        let j = i + (rng.next_u64() % (dim - i) as u64) as usize;
        idx.swap(i, j);
        picks[idx[i] as usize] = true;
    }
    picks
}

fn compress_runs(picks: &[bool]) -> Vec<(usize, u32)> {
    let mut runs: Vec<(usize, u32)> = Vec::new();
    for &p in picks {
        let set = usize::from(p);
        match runs.last_mut() {
            Some((s, len)) if *s == set => *len += 1,
            _ => runs.push((set, 1)),
        }
    }
    runs
}

// ---------------------------------------------------------------------------
// Quantization and scales
// ---------------------------------------------------------------------------

/// Level indices of a rotated vector under a scheme.
#[derive(Debug, Clone)]
pub struct QuantizedVector {
    indices: Vec<u32>,
    norm: f64,
    scheme: Arc<Scheme>,
}

impl QuantizedVector {
    pub fn from_parts(indices: Vec<u32>, norm: f64, scheme: Arc<Scheme>) -> Self {
        Self { indices, norm, scheme }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn scheme(&self) -> &Arc<Scheme> {
        &self.scheme
    }

    /// Scale applied to raw levels: `norm / sqrt(D)`.
    pub fn level_unit(&self) -> f64 {
        self.norm / (self.scheme.dim() as f64).sqrt()
    }

    /// Rotated-domain reconstruction: `levels[index] * level_unit`.
    pub fn dequantize(&self) -> Vec<f64> {
        let unit = self.level_unit();
        let mut out = Vec::with_capacity(self.indices.len());
        let mut pos = 0usize;
        for (set, len) in self.scheme.runs() {
            let levels = set.levels();
            for &idx in &self.indices[pos..pos + len as usize] {
                out.push(levels[idx as usize] * unit);
            }
            pos += len as usize;
        }
        out
    }
}

/// Maps each rotated coordinate to its nearest scaled level.
pub fn quantize(r: &RotatedVector, scheme: &Arc<Scheme>) -> Result<QuantizedVector> {
    if r.values.len() != scheme.dim() {
        return Err(Error::DimensionMismatch { expected: scheme.dim(), found: r.values.len() });
    }
    if !(r.norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let unit = r.norm / (scheme.dim() as f64).sqrt();
    let inv_unit = 1.0 / unit;
    let mut indices = Vec::with_capacity(r.values.len());
    let mut pos = 0usize;
    for (set, len) in scheme.runs() {
        for &v in &r.values[pos..pos + len as usize] {
            indices.push(set.nearest_index(v * inv_unit));
        }
        pos += len as usize;
    }
    Ok(QuantizedVector { indices, norm: r.norm, scheme: Arc::clone(scheme) })
}

fn inner_products(r: &RotatedVector, qv: &QuantizedVector) -> (f64, f64) {
    let q = qv.dequantize();
    let mut rq = 0.0;
    let mut qq = 0.0;
    for (&ri, &qi) in r.values.iter().zip(&q) {
        rq += ri * qi;
        qq += qi * qi;
    }
    (rq, qq)
}

/// Unbiased scale `S = |x|^2 / <r, q>`.
///
/// A vanishing inner product (possible only on measure-zero inputs or the
/// all-zero scheme) signals the degenerate path: the caller substitutes
/// `S = 0` and flags the message.
pub fn unbiased_scale(r: &RotatedVector, qv: &QuantizedVector) -> Result<f64> {
    let (rq, _) = inner_products(r, qv);
    if rq <= 1e-300 {
        return Err(Error::DegenerateScale);
    }
    Ok(r.norm * r.norm / rq)
}

/// Error-minimizing scale `S = <r, q> / |q|^2`.
pub fn min_vnmse_scale(r: &RotatedVector, qv: &QuantizedVector) -> Result<f64> {
    let (rq, qq) = inner_products(r, qv);
    if qq <= 1e-300 {
        return Err(Error::DegenerateScale);
    }
    Ok(rq / qq)
}

/// Computes the scale for a mode, mapping the degenerate case to `S = 0`.
///
/// Returns `(scale, degenerate)`.
pub fn scale_for_mode(mode: ScaleMode, r: &RotatedVector, qv: &QuantizedVector) -> (f64, bool) {
    let result = match mode {
        ScaleMode::Unbiased => unbiased_scale(r, qv),
        ScaleMode::MinVnmse => min_vnmse_scale(r, qv),
    };
    match result {
        Ok(s) => (s, false),
        Err(_) => (0.0, true),
    }
}

/// Sum of squared errors of the estimate without leaving the rotated domain:
/// `|x|^2 - 2 S <r, q> + S^2 |q|^2`.
pub fn sse_closed_form(x_norm_sq: f64, r: &RotatedVector, qv: &QuantizedVector, scale: f64) -> f64 {
    let (rq, qq) = inner_products(r, qv);
    x_norm_sq - 2.0 * scale * rq + scale * scale * qq
}
