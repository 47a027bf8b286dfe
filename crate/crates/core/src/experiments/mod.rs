//! Desk-scale experiments: empirical A(R), sweeps, off-diagonal decay, induction checks and reports.

mod checks;
mod config;
mod estimate;
mod family;
mod induction;
mod offdiag;
mod pieces;
mod report;
mod runner;

pub use checks::{check_commutator, check_linf, check_lw, check_partition};
pub use config::{
    CommutatorSpec, DomainSpec, FamilySpec, FitSpec, GraphSpec, GridConfig, InductionSpec, InductionVariant, LwSpec, MeshChoice,
    OffdiagSpec, PartitionSpec, RegionKind, ScenarioConfig, SlabSpec, SurfaceSpec,
};
pub use estimate::{estimate_a, plancherel_ratio, product_ratio, sweep_mu, sweep_r, AEstimate, Scenario};
pub use family::{admit, density_family, frequency_grid, kind_value, DensityKind, DensityTuple};
pub use report::{emit_report, fit_loglog, Contract, Fit, Format, Metadata, Record, Report};
pub use induction::{cells_per_side, induction_step_check, induction_step_with, InductionOutcome};
pub use offdiag::{offdiagonal_decay, DecayRow};
pub use pieces::Packets;
pub use runner::Experiment;
