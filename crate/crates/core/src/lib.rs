//! Sequestration-based circadian clock models.
//!
//! The crate covers the four-variable mass-action model, its dimensionless
//! reduction, a piecewise-affine (PWA) switching limit with an exact
//! event-driven solver, analytic oscillation conditions for the PWA system and
//! phase-response / entrainment tools shared with a Goodwin reference model.

pub mod conditions;
pub mod error;
pub mod models;
pub mod ode;
pub mod par;
pub mod period;
pub mod phase;
pub mod pwa;
pub mod smooth;
pub mod stimulus;

pub use error::{Error, Result};
