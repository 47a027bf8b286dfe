//! Extension operators on sampled densities and the fields they produce.

mod density;
mod field;
mod operator;

pub use density::{margin_of, FrequencyDensity, MarginReport, SUPPORT_THRESHOLD};
pub use field::{lp_quasinorm, read_field, write_field, Field, IndexBox, SpatialGrid};
pub use operator::{check_rules, commutator_check, extend, extend_unchecked, extend_with, linf_bound_ratio, CommutatorReport, MeshRule};
