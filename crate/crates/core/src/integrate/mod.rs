//! Evaluation of both sides of the integral identity.
//!
//! The invariant side is `∫ f(g s g⁻¹) dg`, realized in Z coordinates with the
//! invariant density of [`crate::geometry`]. The flat side is `∫ f(M_t(b)) db`
//! with [`crate::kernels`] kernels over the unit ball (compact) or all of W
//! (non-compact). Both use Lebesgue measure on the independent real
//! coordinates and a density normalized to 1 at the origin, so the constant
//! relating them is 1 under these conventions.

use serde::{Deserialize, Serialize};

use crate::matrixkit::C64;

pub mod functions;
pub mod montecarlo;
pub mod quadrature;
pub mod spin;
pub mod verify;

pub use functions::{Factor, Monomial, TestFunction};
pub use montecarlo::{lhs_haar, rhs_mc, rhs_mc_grid, McConfig, McGrid, PairStat, Welford};
pub use quadrature::{lhs_quadrature, rhs_quadrature, Domain, DEFAULT_ORDERS};
pub use spin::{spin_probe, SpinFunction, SpinReport};
pub use verify::{
    radius_sweep, verify_theorem, CellReport, LhsMethod, RhsMethod, SweepReport, TolerancePolicy,
    Verdict, VerificationReport, VerifyOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Quadrature,
    McBall,
    McGaussian,
    Haar,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::McBall => "mc-ball",
            Method::McGaussian => "mc-gaussian",
            Method::Haar => "haar",
        }
    }
}

/// An integral estimate. For quadrature `stderr` is the gap between the two
/// highest orders and `n` the highest order; for sampling it is the standard
/// error and `n` the sample count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: C64,
    pub stderr: f64,
    pub n: u64,
    pub method: Method,
}
