//! Computable probabilistic metric spaces.
//!
//! Distances are left-continuous step distribution functions
//! ([`delta_plus::StepCdf`]), compared with the modified Levy distance and
//! combined through t-norm sup-convolutions. On top of that sit finite
//! spaces, 1-Lipschitz maps into distance distributions and a finite
//! compactness extraction for sequences of such maps.

pub mod arzela_ascoli;
pub mod cli;
pub mod delta_plus;
pub mod levy_metric;
pub mod prob_lipschitz;
pub mod prob_metric_space;
pub mod triangle_functions;

pub use delta_plus::StepCdf;
pub use levy_metric::{levy_distance, levy_to_h0, LevyConfig};
pub use prob_metric_space::ProbMetricSpace;
pub use triangle_functions::{Star, TNorm, TriangleFunction};
