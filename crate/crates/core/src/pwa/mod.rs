//! Piecewise-affine switching model: regions, closed-form flows and the
//! event-driven engine.

mod affine;
mod engine;
mod region;

pub use affine::{solve_affine, solve_affine_driven, AffineFlow};
pub(crate) use affine::convolve_exp;
pub use engine::{
    advance_in, advance_to_event, extract_period_marker, extract_period_pwa, simulate_pwa, simulate_pwa_with,
    AffineSegment, HybridTrajectory, Marker, PwaOptions, DEFAULT_SEGMENT_CAP, EVENT_TOL,
};
pub use region::{classify_region, Face, PwaState, Region, CYCLE};
