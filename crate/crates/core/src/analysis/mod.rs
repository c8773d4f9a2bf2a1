//! Estimators and certificates built on replica ensembles: free energy
//! with uncertainty, fractional-moment upper bounds, disorder-regime
//! probes, scaling-exponent fits, and derivative/monotonicity checks.

mod bounds;
mod derivative;
mod ensemble;
mod fits;
mod probes;

pub use bounds::{fm_bound_from_results, fm_upper_bound, FractionalMomentBound, FractionalMomentConfig};
pub use derivative::{derivative_check, monotonicity_check, DerivativeRecord, MonotonicityRecord};
pub use ensemble::{
    estimate_free_energy, free_energy_from_results, run_ensemble, EnsembleConfig,
    FreeEnergyEstimate,
};
pub use fits::{fit_alpha, reference_alpha, AlphaPoint, ExponentFit};
pub use probes::{
    marginal_probe, probe_from_results, weak_disorder_probe, Diagnosis, MarginalProbe,
    MarginalRow, ProbeRecord, ProbeThresholds,
};
