//! Level-set design, scheme construction, quantization, and scales.

pub mod levels;
pub mod scheme;

pub use levels::{
    equal_interval_levels, equal_interval_levels_with_margin, level_set_stats, lloyd_max_levels,
    normal_cdf, normal_pdf, normal_quantile, LevelSet, LevelSetKind,
};
pub use scheme::{
    min_vnmse_scale, quantize, scale_for_mode, sse_closed_form, unbiased_scale, CoordSelection,
    QuantizedVector, ScaleMode, Scheme, DESIGN_TOL, ENTROPY_TOL, MAX_BITS,
};
