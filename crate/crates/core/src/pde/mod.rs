//! Method-of-lines solver for the full system on a 1-D grid.

pub mod environment;
pub mod export;
pub mod grid;
pub mod kernel;
pub mod run;
pub mod solver;

pub use environment::{EnvironmentProfile, GapEnv, PeriodicEnv};
pub use export::{snapshot_stats, snapshots_csv, summary_json, SnapshotStats};
pub use grid::{laplacian, Boundary, Grid1D};
pub use kernel::{dense_from_profile, nonlocal_term, Kernel, KernelProfile, KernelSpec};
pub use run::{
    apply_shock, apply_shock_in_place, run, InitialProfile, InitialTension, RunConfig, Schedule, ShockEvent,
    Simulation, Snapshot, Trajectory,
};
pub use solver::{stable_dt, step, Dynamics, Fields, System, CFL_FACTOR};
