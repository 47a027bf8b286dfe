//! Dispatch from an experiment name to its driver.

use std::fmt;
use std::str::FromStr;

use super::config::ScenarioConfig;
use super::report::Report;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    CheckLw,
    CheckPartition,
    CheckCommutator,
    CheckLinf,
    SweepAr,
    SweepMu,
    Offdiag,
    InductionCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::CheckLw,
        Experiment::CheckPartition,
        Experiment::CheckCommutator,
        Experiment::CheckLinf,
        Experiment::SweepAr,
        Experiment::SweepMu,
        Experiment::Offdiag,
        Experiment::InductionCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::CheckLw => "check-lw",
            Experiment::CheckPartition => "check-partition",
            Experiment::CheckCommutator => "check-commutator",
            Experiment::CheckLinf => "check-linf",
            Experiment::SweepAr => "sweep-ar",
            Experiment::SweepMu => "sweep-mu",
            Experiment::Offdiag => "offdiag",
            Experiment::InductionCheck => "induction-check",
        }
    }

    pub fn run(self, config: &ScenarioConfig) -> Result<Report> {
        match self {
            Experiment::CheckLw => super::check_lw(config),
            Experiment::CheckPartition => super::check_partition(config),
            Experiment::CheckCommutator => super::check_commutator(config),
            Experiment::CheckLinf => super::check_linf(config),
            Experiment::SweepAr => super::sweep_r(config),
            Experiment::SweepMu => super::sweep_mu(config),
            Experiment::Offdiag => super::offdiagonal_decay(config),
            Experiment::InductionCheck => super::induction_step_check(config),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!("sweep".parse::<Experiment>().is_err());
    }
}
