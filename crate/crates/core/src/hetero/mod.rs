//! Heterogeneous environments: periodic censoring, the linear instability
//! test, pulsating fronts and the barrier problem.

pub mod eigen;
pub mod gap;
pub mod persistence;
pub mod pulsating;

pub use crate::pde::{GapEnv, PeriodicEnv};
pub use eigen::{
    instability_check, predict, principal_eigenvalue, principal_eigenvalue_with, richardson_eigenvalue, EigenResult,
    InstabilityCheck, Linearization, Prediction,
};
pub use gap::{
    find_critical_gap, gap_experiment, gap_probe, gap_scan, gap_scan_csv, monotonicity_violations, CriticalGap,
    GapOutcome, GapSetup, GapVerdict,
};
pub use persistence::{long_run_outcome, LongRunReport, LongRunSetup, Outcome};
pub use pulsating::{dominant_period, pulsating_front_experiment, PulseVerdict, PulsatingReport, PulsatingSetup};
