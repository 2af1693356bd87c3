//! Scaled moment model of a gas mixture in the diffusive regime: collision
//! sources, the Gaussian moment closure, the algebraic small-`alpha` limit
//! and a 1-D finite-volume integrator.

pub mod closure;
pub mod collision;
pub mod limit;
pub mod model;
pub mod sim;

pub mod check;
pub mod config;
pub mod output;
pub mod presets;
