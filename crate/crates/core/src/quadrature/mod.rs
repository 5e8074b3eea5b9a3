//! Deterministic cubature on balls, rectangles and caps, plus a seeded
//! Monte Carlo fallback.

mod adaptive;
mod gauss;
mod mc;
mod region;
mod rule;
mod sum;

use serde::{Deserialize, Serialize};

pub use adaptive::{integrate, integrate_with, IntegrationOptions};
pub use gauss::gauss_legendre;
pub(crate) use mc::uniform;
pub use mc::{mc_integrate, MIN_SAMPLES};
pub use region::{unit_ball_volume, Ball, CapMode, Region};
pub use rule::{ball_rule, graded_ball_rule, CubatureRule, Grading, RuleMeta};
pub use sum::{compensated_sum, CompensatedSum};

/// Result of one integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub value: f64,
    pub abs_error_estimate: f64,
    /// Integrand evaluations (or samples) spent.
    pub node_count: usize,
    pub refinement_depth: u32,
    /// False when the tolerance was not reached within the budget.
    pub converged: bool,
}
