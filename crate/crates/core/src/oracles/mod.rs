//! Independent reference computations used by tests and the verification
//! suite.

mod coupling;
mod crr;
mod exit;
mod fbm_exact;
mod reference;

pub use coupling::{
    coupled_driver_error, coupled_skeleton, coupled_skeleton_until, crossing_threshold, CouplingStudy,
    FinePath, OVERSHOOT,
};
pub use crr::{crr_american, crr_european, crr_exhaustive, put_payoff, CrrSpec, PriceFn};
pub use exit::{exit_mgf, legendre_i_star};
pub use fbm_exact::{fbm_covariance, fbm_exact, FbmExactPath, FbmSampler};
pub use reference::{adaptive_gk, driver_reference, kernel_reference, rho_integral};
