//! Shared numerical kernels.

pub mod bisection;
pub mod finite_diff;
pub mod nelder_mead;
pub mod projection;
pub mod quadrature;

pub use bisection::{bisect_monotone, BisectionResult, BisectionSpec};
pub use finite_diff::{finite_difference_gradient, finite_difference_gradient_real};
pub use nelder_mead::{nelder_mead_2d, NelderMeadResult};
pub use projection::{dykstra_project, IntersectionProjector};
pub use quadrature::{adaptive_simpson, polar_midpoint_integrate};
