//! Decay of the wave-packet pieces of f_1 whose cell lies far from the evaluation cell.

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::ScenarioConfig;
use super::estimate::Scenario;
use super::pieces::{cell_window, index_window, surface_lattice, Packets};
use super::report::{Contract, Record, Report};
use crate::error::{Error, Result};
use crate::extension::{check_rules, extend_unchecked, extend_with, lp_quasinorm, Field};
use crate::lattice::{cell_distance, Cell};
use crate::partition::BumpProfile;

/// One row of the decay table.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayRow {
    pub step: u32,
    pub distance: f64,
    pub value: f64,
    /// <d/R>^{-N}
    pub weight: f64,
}

fn japanese_power(t: f64, order: u32) -> f64 {
    (1.0 + t * t).powf(-(order as f64) / 2.0)
}

/// Decay table along the first induced axis from the cell under Q(R) at the origin, plus the
/// recomposition of the product from every piece with |j'| <= truncation.
pub fn offdiagonal_decay(config: &ScenarioConfig) -> Result<Report> {
    let spec = config.offdiag.clone().ok_or_else(|| Error::Config("offdiag needs an [offdiag] table".into()))?;
    let scenario = Scenario::new(config)?;
    let frame = scenario.frame.clone().ok_or_else(|| Error::Config("offdiag needs a transversal frame".into()))?;
    let r = spec.radius;
    let p = scenario.exponent();
    let grid = scenario.region_grid(r)?;
    let grids = scenario.frequency_grids(r)?;
    let family = scenario.family(r, &grids)?;
    // the centered bumps: f_1 concentrates in the cell at the origin
    let tuple = family.get(1).or(family.first()).ok_or_else(|| Error::Config("empty density family".into()))?;
    let surfaces = &scenario.surfaces;
    let rule = config.mesh_rule();

    let mut rest: Option<Field> = None;
    for (s, f) in surfaces.iter().zip(&tuple.densities).skip(1) {
        let e = extend_with(s, f, &grid, rule)?;
        rest = Some(match rest {
            None => e,
            Some(acc) => acc.product(&e)?,
        });
    }
    let rest = rest.ok_or_else(|| Error::Config("offdiag needs k >= 2".into()))?;
    let f1 = &tuple.densities[0];
    check_rules(&surfaces[0], f1, &grid, rule)?;
    let total = lp_quasinorm(&extend_unchecked(&surfaces[0], f1, &grid).product(&rest)?, p, None)?;

    let packets = Packets::new(f1, r)?;
    let lattice = surface_lattice(&frame, &surfaces[0])?;
    let bump = BumpProfile::shared(lattice.dim())?;
    let dim = lattice.dim();
    let base = Cell::new(vec![0; dim], r, lattice.owner());
    let window_reach = spec.truncation as u32;
    if spec.steps.iter().any(|&s| s > window_reach) {
        return Err(Error::Config(format!("offdiag steps exceed the enumerated window |j'| <= {window_reach}")));
    }

    let piece_field = |index: &[i64]| -> Result<Field> {
        let w = cell_window(&bump, &lattice, &packets, index, r)?;
        let piece = packets.piece(&w)?;
        Ok(extend_unchecked(&surfaces[0], &piece, &grid))
    };

    let rows = spec
        .steps
        .par_iter()
        .map(|&step| {
            let mut index = vec![0i64; dim];
            index[0] = step as i64;
            let q2 = Cell::new(index.clone(), r, lattice.owner());
            let distance = cell_distance(&base, &q2)?;
            let value = lp_quasinorm(&piece_field(&index)?.product(&rest)?, p, None)?;
            Ok(DecayRow { step, distance, value, weight: japanese_power(distance / r, spec.weight_order) })
        })
        .collect::<Result<Vec<_>>>()?;

    // recomposition over the whole window
    let indices = index_window(dim, spec.truncation);
    let parts = indices
        .par_iter()
        .map(|j| {
            let e = piece_field(j)?;
            let norm = lp_quasinorm(&e.product(&rest)?, p, None)?;
            Ok((e, norm))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut summed = Field::zeros(grid.clone());
    let mut budget = 0.0;
    for (e, norm) in &parts {
        summed = summed.add(e)?;
        budget += if p <= 1.0 { norm.powf(p) } else { *norm };
    }
    let full = extend_unchecked(&surfaces[0], f1, &grid);
    let diff = summed.add(&full.scaled(Complex64::new(-1.0, 0.0)))?;
    let recombination = diff.max_abs() / full.max_abs();
    let lhs = if p <= 1.0 { total.powf(p) } else { total };

    let mut report = Report::new("offdiag", config);
    for row in &rows {
        report.records.push(Record::new("piece", row.distance, None, row.value));
        report.records.push(Record::new("weight", row.distance, None, row.weight));
    }
    report.summary.push(("total".into(), total));
    report.summary.push(("recombination_error".into(), recombination));
    if let Some(center) = rows.iter().find(|row| row.distance == 0.0 && row.step == 0) {
        report.summary.push(("center_share".into(), center.value / total));
    }

    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.step.cmp(&b.step)));
    let monotone = sorted.windows(2).all(|w| w[1].value <= w[0].value * (1.0 + 1e-9));
    report.contracts.push(Contract::holds("monotone", monotone));
    let mut drops = Vec::new();
    for a in &sorted {
        if a.distance <= 2.0 * r {
            continue;
        }
        if let Some(b) = sorted.iter().find(|b| (b.distance - 2.0 * a.distance).abs() < 1e-9 * r) {
            drops.push(a.value / b.value);
        }
    }
    if drops.is_empty() {
        return Err(Error::Config("offdiag steps contain no doubling beyond 2R".into()));
    }
    let worst = drops.iter().cloned().fold(f64::INFINITY, f64::min);
    report.summary.push(("min_drop".into(), worst));
    report.contracts.push(Contract::at_least("drop_per_doubling", worst, spec.min_drop));
    report.contracts.push(Contract::at_most("recomposition", lhs / budget, 1.0 + 1e-9));
    Ok(report)
}
