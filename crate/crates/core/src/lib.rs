//! Averaging-class functionals on step functions over `[0, 1]`.
//!
//! For a convex even weight `Q`, the crate computes
//!
//! * `V_c(φ, J) = ⟨Q(φ - c)⟩_J`,
//! * `V(φ, J) = inf_c V_c(φ, J)` and its minimizer `𝒞(φ, J)`,
//! * `W(φ, J) = sup_{L ⊆ J} V(φ, L)`,
//!
//! together with decreasing rearrangement, truncation, concatenation, the
//! Bellman-function machinery used to show that rearrangement does not
//! increase `W`, BMO norms and A2 characteristics, and seeded campaigns that
//! check all of these inequalities numerically.

pub mod bellman;
pub mod classes;
pub mod error;
pub mod functionals;
pub mod harness;
mod search;
pub mod steps;
pub mod transforms;
pub mod weight;

pub use error::{Error, Result};
pub use functionals::{big_w, big_w_grid, minimize_c, v_c, FunctionalResult, OptimizerConfig, SupMethod, SupremumResult};
pub use steps::{Interval, Segment, StepFunction};
pub use weight::{ConvexWeight, FastPath, WeightKind};
