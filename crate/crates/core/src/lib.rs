//! Quadratic vector fields with a nilpotent saddle at infinity.
//!
//! Exact polynomial algebra, the localization at infinity, the weighted
//! blow-up of the unfolding and its rescaling chart, an adaptive Dormand–Prince
//! integrator with event location, and numerical transition maps.

pub mod blowup;
pub mod charts;
pub mod error;
pub mod field;
pub mod integrate;
pub mod maps;
pub mod parallel;
pub mod poly;
pub mod quad;
pub mod verify;

pub use error::{AtlasError, Result};
