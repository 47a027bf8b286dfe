//! Property checks run from configs: partition of unity, commutator identity, the discrete
//! Loomis-Whitney family and the pointwise extension bound.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ScenarioConfig;
use super::estimate::Scenario;
use super::family::frequency_grid;
use super::report::{Contract, Record, Report};
use crate::error::{Error, Result};
use crate::extension::{commutator_check, extend_unchecked, linf_bound_ratio, FrequencyDensity, SpatialGrid};
use crate::frames::{Domain, Frame, SlabCondition};
use crate::lattice::{CellOwner, InducedLattice};
use crate::loomis_whitney::{
    companion_window_sum, discrete_lw_by_slices, discrete_lw_ratio, lw_constant_oracle, refined_lw_by_slices, refined_lw_ratio,
    sequence_holder_check, LatticeDensity, LwMode,
};
use crate::partition::{partition_sum, BumpProfile, GridFunction, GridSpec};

/// |sum_q chi_q(y) - 1| at random points of the hyperplane lattice of frame direction 1.
pub fn check_partition(config: &ScenarioConfig) -> Result<Report> {
    let spec = config.partition.clone().unwrap_or_default();
    let frame = config.frame()?;
    let lattice = InducedLattice::hyperplane(&frame, 0)?;
    let m = lattice.dim();
    let bump = BumpProfile::shared(m)?;
    let j = bump.truncation_for(spec.tolerance / 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut report = Report::new("check-partition", config);
    let mut worst: f64 = 0.0;
    for &r in &spec.scales {
        let mut err: f64 = 0.0;
        for _ in 0..spec.points {
            let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-8.0 * r..8.0 * r)).collect();
            err = err.max((partition_sum(&bump, &lattice, r, &y, j, spec.tolerance)? - 1.0).abs());
        }
        report.records.push(Record::new("partition_error", r, None, err));
        worst = worst.max(err);
    }
    report.summary.push(("truncation".into(), j as f64));
    report.summary.push(("nu".into(), frame.transversality_det()));
    report.contracts.push(Contract::at_most("partition_error", worst, spec.tolerance));
    Ok(report)
}

/// Commutator identity on surface 1 for a modulated Gaussian density.
pub fn check_commutator(config: &ScenarioConfig) -> Result<Report> {
    let spec = config.commutator.clone().unwrap_or_default();
    let scenario = Scenario::new(config)?;
    let surface = &scenario.surfaces[0];
    let n = surface.dim();
    if spec.axis >= n {
        return Err(Error::Config(format!("commutator axis {} outside 0..{n}", spec.axis)));
    }
    let a = surface.domain().half_widths().into_iter().fold(f64::INFINITY, f64::min);
    let sigma = a / 8.0;
    let grid = GridSpec::centered(vec![2.0 * a / spec.nodes as f64; n], vec![spec.nodes; n])?;
    let f = FrequencyDensity::from_fn(surface, grid, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        Complex64::from_polar((-r2 / (2.0 * sigma * sigma)).exp(), 0.3 * x[0])
    })?;
    let x0 = spec.x0.clone().unwrap_or_else(|| vec![0.0; n]);
    let rep = commutator_check(surface, &f, &x0, spec.power, spec.axis, &spec.x1)?;
    let mut report = Report::new("check-commutator", config);
    let mut trivial: f64 = 0.0;
    let mut others: f64 = 0.0;
    for &(x1, err) in &rep.slices {
        report.records.push(Record::new("discrepancy", x1, None, err));
        if x1 == 0.0 {
            trivial = trivial.max(err);
        } else {
            others = others.max(err);
        }
    }
    report.summary.push(("discrepancy".into(), rep.discrepancy));
    if rep.slices.iter().any(|s| s.0 == 0.0) {
        report.contracts.push(Contract::at_most("trivial_slice", trivial, spec.trivial_tolerance));
    }
    report.contracts.push(Contract::at_most("discrepancy", others, spec.tolerance));
    Ok(report)
}

fn random_window(owner: CellOwner, dim: usize, m: usize, rng: &mut ChaCha8Rng) -> Result<LatticeDensity> {
    LatticeDensity::window(owner, dim, m, |_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen::<f64>() })
}

fn standard_slab(n: usize, k: usize) -> Result<SlabCondition> {
    let complement = (k..=n).map(|c| (0..=n).map(|r| if r == c { 1.0 } else { 0.0 }).collect()).collect();
    SlabCondition::from_complement(vec![0.0; n + 1], complement, 0.5)
}

/// Constant search, product extremizer, slicing and refined cross-checks, the sequence Hölder
/// step and the companion window sums.
pub fn check_lw(config: &ScenarioConfig) -> Result<Report> {
    let spec = config.lw.clone().unwrap_or_default();
    let frame = config.frame()?;
    let n = config.n;
    let mut report = Report::new("check-lw", config);
    let mut oracle_min = f64::INFINITY;
    let mut oracle_max: f64 = 0.0;
    for &m in &spec.windows {
        let c = lw_constant_oracle(&frame, m, spec.trials, LwMode::Plain, config.seed)?;
        report.records.push(Record::new("oracle", m as f64, None, c));
        oracle_min = oracle_min.min(c);
        oracle_max = oracle_max.max(c);
    }
    let masses: Vec<LatticeDensity> = (0..=n).map(|i| LatticeDensity::point_mass(CellOwner::Hyperplane(i), &vec![0; n])).collect();
    let extremizer = discrete_lw_ratio(&frame, &masses, 1)?;
    report.records.push(Record::new("extremizer", 1.0, None, extremizer));
    if !spec.windows.is_empty() {
        report.contracts.push(Contract::at_least("oracle_min", oracle_min, 1.0 - 1e-12));
        report.contracts.push(Contract::at_most("oracle_max", oracle_max, 1.05));
    }
    report.contracts.push(Contract::at_most("extremizer_gap", (extremizer - 1.0).abs(), 1e-12));

    // direct vs slicing (n = 2) and refined direct vs per-slice (k = n = 2), standard frame
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5bd1_e995);
    let plane = Frame::standard(3);
    let slab = standard_slab(2, 2)?;
    let m = 2;
    let mut slice_gap: f64 = 0.0;
    let mut refined_gap: f64 = 0.0;
    for t in 0..spec.random_tuples {
        let tuple = (0..3).map(|i| random_window(CellOwner::Hyperplane(i), 2, m, &mut rng)).collect::<Result<Vec<_>>>()?;
        if tuple.iter().all(|d| d.l2_norm() > 0.0) {
            let gap = (discrete_lw_ratio(&plane, &tuple, m)? - discrete_lw_by_slices(&plane, &tuple, m)?).abs();
            slice_gap = slice_gap.max(gap);
            report.records.push(Record::new("slicing_gap", m as f64, Some(t), gap));
        }
        let g1 = random_window(CellOwner::Section, 1, m, &mut rng)?;
        let others = vec![random_window(CellOwner::Hyperplane(1), 2, m, &mut rng)?];
        if g1.l2_norm() > 0.0 && others[0].l2_norm() > 0.0 {
            let gap = (refined_lw_ratio(&plane, &slab, &g1, &others, m)? - refined_lw_by_slices(&plane, &slab, &g1, &others, m)?).abs();
            refined_gap = refined_gap.max(gap);
            report.records.push(Record::new("refined_gap", m as f64, Some(t), gap));
        }
    }
    report.contracts.push(Contract::at_most("slicing_gap", slice_gap, 1e-10));
    report.contracts.push(Contract::at_most("refined_gap", refined_gap, 1e-10));

    let mut holder_ok = true;
    let mut holder_worst: f64 = 0.0;
    for dim in 1..=3u32 {
        for _ in 0..spec.holder_pairs {
            let len = rng.gen_range(1..=40);
            let a: Vec<f64> = (0..len).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect();
            let b: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-3..3))).collect();
            let h = sequence_holder_check(&a, &b, dim)?;
            holder_ok &= h.passed;
            if h.rhs > 0.0 {
                holder_worst = holder_worst.max(h.lhs / h.rhs);
            }
        }
        let base = companion_window_sum(dim, 32)?;
        let doubled = companion_window_sum(dim, 64)?;
        let drift = (doubled - base).abs() / base;
        report.records.push(Record::new("companion", dim as f64, None, doubled));
        report.contracts.push(Contract::at_most(&format!("companion_drift_n{dim}"), drift, 0.02));
        report.contracts.push(Contract::holds(&format!("companion_finite_n{dim}"), doubled.is_finite()));
    }
    report.summary.push(("holder_worst_ratio".into(), holder_worst));
    report.contracts.push(Contract::holds("holder", holder_ok));
    Ok(report)
}

/// Odd midpoint grid around the origin, so that x = 0 is a node.
fn centered_cube(dim: usize, r: f64, h: f64) -> Result<SpatialGrid> {
    let half = (r / (2.0 * h)).ceil();
    SpatialGrid::cube(&vec![0.0; dim], h * (2.0 * half + 1.0), h)
}

/// Pointwise bound |E f|_inf <= |U|^{1/2} |f|_2 on random densities, and the mu^{(n+1-k)/2} law
/// for slab indicators.
pub fn check_linf(config: &ScenarioConfig) -> Result<Report> {
    let scenario = Scenario::new(config)?;
    let surface = &scenario.surfaces[0];
    let n = config.n;
    let r = config.radii.first().copied().unwrap_or(8.0);
    let grid = centered_cube(n + 1, r, config.grid.h_x)?;
    let fgrid = frequency_grid(surface, &config.grid, grid.max_radius())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut report = Report::new("check-linf", config);
    let mut worst: f64 = 0.0;
    let samples = 100;
    for t in 0..samples {
        let vals = (0..fgrid.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let f = FrequencyDensity::new(surface.index(), GridFunction::new(fgrid.clone(), vals)?);
        let ratio = linf_bound_ratio(surface, &f, &grid, None)?;
        report.records.push(Record::new("plain_ratio", r, Some(t), ratio));
        worst = worst.max(ratio);
    }
    report.contracts.push(Contract::at_most("plain_ratio", worst, 1.0 + 1e-3));
    if let Some(slab) = &config.slab {
        let k = config.k;
        let law = (n + 1 - k) as f64 / 2.0;
        let mut previous: Option<(f64, f64)> = None;
        let mut worst_law: f64 = 0.0;
        for &mu in &slab.mu {
            let condition = config.slab_condition(mu)?;
            let t = surface.tangent();
            let mut hw = surface.domain().half_widths();
            for (l, w) in hw.iter_mut().enumerate() {
                if (condition.complement().transpose() * t.column(l)).norm() > 0.5 {
                    *w = mu;
                }
            }
            let capped = surface.clone().with_domain(Domain::Box { half_widths: hw })?;
            let g = frequency_grid(&capped, &config.grid, grid.max_radius())?;
            let f = FrequencyDensity::from_fn(&capped, g, |_| Complex64::new(1.0, 0.0))?;
            let sup = extend_unchecked(&capped, &f, &grid).max_abs() / f.l2_norm();
            report.records.push(Record::new("slab_sup", mu, None, sup));
            report.records.push(Record::new("slab_ratio", mu, None, linf_bound_ratio(&capped, &f, &grid, Some((mu, k)))?));
            if let Some((mu0, sup0)) = previous {
                let expected = (mu0 / mu).powf(law);
                worst_law = worst_law.max(((sup0 / sup) / expected - 1.0).abs());
            }
            previous = Some((mu, sup));
        }
        report.contracts.push(Contract::at_most("slab_law", worst_law, 0.1));
    }
    Ok(report)
}
