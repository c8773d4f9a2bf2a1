//! Reduction of the polymer to a pinning model on the two-replica
//! collision renewal: exact first-meeting kernel, constrained partition
//! functions under size-biased disorder, fractional moments, and the
//! contraction constant whose value below one certifies strong disorder.

mod kernel;
mod moments;

pub use kernel::{collision_prob, kernel_from_u, RenewalKernel};
pub use moments::{
    constrained_pinning_log_profile, constrained_pinning_z, estimate_a, rho_criterion,
    PinningMomentSeries, PinningParams, RhoEstimate,
};
