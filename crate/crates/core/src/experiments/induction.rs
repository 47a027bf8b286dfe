//! One step of the induction on scales: the product norm over each cell q of size R inside
//! Q = C(K R), K = 1/delta, against A_emp(R) times the weighted wave-packet sums.

use nalgebra::DVector;
use rayon::prelude::*;

use super::config::{InductionSpec, InductionVariant, RegionKind, ScenarioConfig};
use super::estimate::{product_ratio, Scenario};
use super::family::admit;
use super::pieces::{index_window, surface_lattice, Packets};
use super::report::{Contract, Record, Report};
use crate::error::{Error, Result};
use crate::extension::{extend_with, lp_quasinorm, Field, FrequencyDensity, IndexBox};
use crate::frames::Hypersurface;
use crate::lattice::{cell_distance, strip_of, Cell, CellOwner, InducedLattice, Strip};
use crate::partition::{eval_window, BumpProfile, Window};

/// Samples of |g| below this fraction of the peak are dropped from the window norms.
const NEGLIGIBLE: f64 = 1e-14;
/// Frequency samples below this fraction of the peak of f_1 count as outside a support.
const SUPPORT_FLOOR: f64 = 1e-9;
/// Pieces smaller than this fraction of the peak of f_1 are not compared.
const SIGNIFICANT: f64 = 1e-6;
/// Strip pieces compared in the support check: |s'| <= this.
const SUPPORT_REACH: usize = 3;

/// Max over q and tuples of LHS/RHS at truncation J and 2J.
#[derive(Clone, Debug, PartialEq)]
pub struct InductionOutcome {
    pub a_emp: f64,
    pub ratio: f64,
    pub ratio_doubled: f64,
    /// (tuple, cell, LHS, RHS at J)
    pub cells: Vec<(usize, usize, f64, f64)>,
    /// Strip variant only: every strip piece keeps the xi''-support of f_1.
    pub support_preserved: Option<bool>,
}

/// K = 1/delta as an odd integer, so the cells of size R tile Q with one at the center.
pub fn cells_per_side(delta: f64) -> Result<usize> {
    let k = (1.0 / delta).round();
    if (k - 1.0 / delta).abs() > 1e-9 || k < 1.0 || k as usize % 2 == 0 {
        return Err(Error::Config(format!("induction needs 1/delta an odd integer, got {}", 1.0 / delta)));
    }
    Ok(k as usize)
}

// windowed packet norms |<(y - c)/R>^N chi g|^2 keyed by window index
struct WindowNorms {
    dim: usize,
    reach: usize,
    values: Vec<f64>,
}

impl WindowNorms {
    fn get(&self, j: &[i64]) -> f64 {
        let side = 2 * self.reach as i64 + 1;
        let mut flat = 0i64;
        for &v in j {
            flat = flat * side + v + self.reach as i64;
        }
        self.values[flat as usize]
    }
}

/// How surface i is decomposed: cells of L(H_i), or strips of the section for surface 0.
enum Decomposition {
    Cells(InducedLattice),
    Strips { section: InducedLattice, tangent: nalgebra::DMatrix<f64> },
}

impl Decomposition {
    fn dim(&self) -> usize {
        match self {
            Decomposition::Cells(l) => l.dim(),
            Decomposition::Strips { section, .. } => section.dim(),
        }
    }

    // window index of the piece under the cell q of L
    fn base(&self, j: &[i64], r: f64) -> Result<Vec<i64>> {
        match self {
            Decomposition::Cells(l) => Ok(l.project_index(j)),
            Decomposition::Strips { section, .. } => {
                let on_h1: Vec<i64> = (1..j.len()).map(|d| j[d]).collect();
                Ok(strip_of(section, &Cell::new(on_h1, r, CellOwner::Hyperplane(0)))?.base.index)
            }
        }
    }

    fn owner(&self) -> CellOwner {
        match self {
            Decomposition::Cells(l) => l.owner(),
            Decomposition::Strips { .. } => CellOwner::Section,
        }
    }

    // (window value, subspace coordinates) at a point y of the surface's tangent coordinates
    fn sample(&self, bump: &BumpProfile, index: &[i64], r: f64, y: &[f64]) -> Result<(f64, Vec<f64>, DVector<f64>)> {
        let cell = Cell::new(index.to_vec(), r, self.owner());
        match self {
            Decomposition::Cells(l) => {
                let w = eval_window(bump, l, Window::Cell(&cell), y)?;
                Ok((w, y.to_vec(), l.cell_center(&cell)))
            }
            Decomposition::Strips { section, tangent } => {
                let x = tangent * DVector::from_column_slice(y);
                let s = section.project(&x);
                let strip = Strip { base: cell };
                let w = eval_window(bump, section, Window::Strip(&strip), s.as_slice())?;
                Ok((w, s.iter().copied().collect(), section.cell_center(&strip.base)))
            }
        }
    }

    fn norms(&self, packets: &Packets, r: f64, order: u32, reach: usize) -> Result<WindowNorms> {
        let dim = self.dim();
        let bump = BumpProfile::shared(dim)?;
        let peak = packets.g.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let h = packets.g.grid.cell_volume();
        let live: Vec<(Vec<f64>, f64)> = packets
            .g
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > NEGLIGIBLE * peak)
            .map(|(i, v)| (packets.g.grid.point_at(i), v.norm_sqr()))
            .collect();
        let values = index_window(dim, reach)
            .par_iter()
            .map(|j| {
                let mut acc = 0.0;
                for (y, g2) in &live {
                    let (w, s, c) = self.sample(&bump, j, r, y)?;
                    let t: f64 = s.iter().zip(c.iter()).map(|(a, b)| ((a - b) / r).powi(2)).sum();
                    acc += (1.0 + t).powi(order as i32) * w * w * g2;
                }
                Ok(acc * h)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(WindowNorms { dim, reach, values })
    }
}

fn box_of(j: &[i64], k: usize, m: usize) -> IndexBox {
    let half = (k as i64 - 1) / 2;
    let lo: Vec<usize> = j.iter().map(|&v| (v + half) as usize * m).collect();
    let hi = lo.iter().map(|l| l + m).collect();
    IndexBox { lo, hi }
}

// (2 pi)^{n/2} (sum over |j' - base| <= J of <d/R>^{-w} |...|^2)^{1/2}
fn weighted_sum(norms: &WindowNorms, base: &[i64], owner: CellOwner, r: f64, truncation: usize, exponent: f64, n: usize) -> Result<f64> {
    let q = Cell::new(base.to_vec(), r, owner);
    let mut acc = 0.0;
    for offset in index_window(norms.dim, truncation) {
        let j: Vec<i64> = base.iter().zip(&offset).map(|(b, o)| b + o).collect();
        let d = cell_distance(&q, &Cell::new(j.clone(), r, owner))?;
        acc += (1.0 + (d / r).powi(2)).powf(-exponent / 2.0) * norms.get(&j);
    }
    Ok((2.0 * std::f64::consts::PI).powf(n as f64 / 2.0) * acc.sqrt())
}

fn decompositions(scenario: &Scenario, variant: InductionVariant) -> Result<Vec<Decomposition>> {
    let frame = scenario.frame.as_ref().ok_or_else(|| Error::Config("induction needs a transversal frame".into()))?;
    let config = &scenario.config;
    scenario
        .surfaces
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if i == 0 && variant == InductionVariant::Strip {
                let mu = config.slab.as_ref().and_then(|sl| sl.mu.first().copied()).unwrap_or(config.delta / 2.0);
                let slab = config.slab_condition(mu)?;
                let basis = s.tangent().columns(0, config.k - 1).into_owned();
                let section = InducedLattice::section_with_basis(frame, &slab, &basis)?;
                Ok(Decomposition::Strips { section, tangent: s.tangent().clone() })
            } else {
                Ok(Decomposition::Cells(surface_lattice(frame, s)?))
            }
        })
        .collect()
}

// does every significant strip piece keep the xi''-support of f_1?
fn strip_support_check(packets: &Packets, decomposition: &Decomposition, r: f64, split: usize) -> Result<bool> {
    let grid = &packets.frequencies;
    let f1 = crate::partition::fourier_forward_to(&packets.g, grid)?;
    let peak = f1.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let slices = |values: &[num_complex::Complex64]| -> Vec<f64> {
        let outer: usize = grid.counts[split..].iter().product();
        let mut best = vec![0.0f64; outer];
        for (flat, v) in values.iter().enumerate() {
            best[flat % outer] = best[flat % outer].max(v.norm());
        }
        best
    };
    let reference = slices(&f1.values);
    let bump = BumpProfile::shared(decomposition.dim())?;
    let mut covered = vec![false; reference.len()];
    for j in index_window(decomposition.dim(), SUPPORT_REACH) {
        let w = packets.points().map(|y| decomposition.sample(&bump, &j, r, &y).map(|s| s.0)).collect::<Result<Vec<f64>>>()?;
        let piece = packets.piece(&w)?;
        let profile = slices(piece.values());
        if profile.iter().cloned().fold(0.0, f64::max) <= SIGNIFICANT * peak {
            continue;
        }
        for (c, (p, f)) in covered.iter_mut().zip(profile.iter().zip(&reference)) {
            if *p > SUPPORT_FLOOR * peak {
                if *f <= SUPPORT_FLOOR * peak * 1e-3 {
                    return Ok(false);
                }
                *c = true;
            }
        }
    }
    Ok(reference.iter().zip(&covered).all(|(f, c)| *f <= SIGNIFICANT * peak || *c))
}

/// Runs the step on explicit density tuples; every density must pass the margin test at the
/// scale of Q (refined for f_1 in the strip variant) or the step is refused.
pub fn induction_step_with(scenario: &Scenario, spec: &InductionSpec, tuples: &[Vec<FrequencyDensity>]) -> Result<InductionOutcome> {
    let config = &scenario.config;
    if config.region != RegionKind::LatticeCell {
        return Err(Error::Config("induction runs on lattice cells".into()));
    }
    let k = cells_per_side(config.delta)?;
    let r = spec.radius;
    let m = (r / config.grid.h_x).round();
    if (m - r / config.grid.h_x).abs() > 1e-9 {
        return Err(Error::Config("R / h_x must be an integer so cells are grid boxes".into()));
    }
    let m = m as usize;
    let n = config.n;
    let big = k as f64 * r;
    let variant = spec.variant;
    if variant == InductionVariant::Strip && config.k > n {
        return Err(Error::Config("the strip variant needs k <= n".into()));
    }
    for densities in tuples {
        if densities.len() != scenario.surfaces.len() {
            return Err(Error::Dimension("one density per surface".into()));
        }
        for (i, f) in densities.iter().enumerate() {
            if variant == InductionVariant::Strip && i == 0 {
                admit(&f.clone().with_split(config.k - 1)?, config.delta, big, true)?;
            } else {
                admit(f, config.delta, big, false)?;
            }
        }
    }
    let exponent = spec.weight_exponent.unwrap_or(2.0 * spec.weight_order as f64 - (n * n) as f64);
    let p = scenario.exponent();
    let rule = config.mesh_rule();
    let q_grid = scenario.region_grid(big)?;
    let small = scenario.region_grid(r)?;
    let a_emp = tuples
        .iter()
        .map(|t| product_ratio(&scenario.surfaces, t, &small, p, rule))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let decomps = decompositions(scenario, variant)?;
    let half = (k - 1) / 2;
    let cells = index_window(n + 1, half);
    let reach = 2 * spec.truncation + half;

    let mut out = Vec::new();
    let mut ratio = 0.0f64;
    let mut ratio_doubled = 0.0f64;
    let mut support_preserved = None;
    for (t, densities) in tuples.iter().enumerate() {
        let product = product_field(&scenario.surfaces, densities, &q_grid, rule)?;
        let mut per_surface = Vec::with_capacity(densities.len());
        for (f, d) in densities.iter().zip(&decomps) {
            let packets = Packets::new(f, r)?;
            if let (Decomposition::Strips { .. }, None) = (d, support_preserved) {
                support_preserved = Some(strip_support_check(&packets, d, r, config.k - 1)?);
            }
            per_surface.push(d.norms(&packets, r, spec.weight_order, reach)?);
        }
        for (c, j) in cells.iter().enumerate() {
            let lhs = lp_quasinorm(&product, p, Some(&box_of(j, k, m)))?;
            let mut rhs = a_emp;
            let mut rhs2 = a_emp;
            for (norms, d) in per_surface.iter().zip(&decomps) {
                let base = d.base(j, r)?;
                rhs *= weighted_sum(norms, &base, d.owner(), r, spec.truncation, exponent, n)?;
                rhs2 *= weighted_sum(norms, &base, d.owner(), r, 2 * spec.truncation, exponent, n)?;
            }
            ratio = ratio.max(lhs / rhs);
            ratio_doubled = ratio_doubled.max(lhs / rhs2);
            out.push((t, c, lhs, rhs));
        }
    }
    Ok(InductionOutcome { a_emp, ratio, ratio_doubled, cells: out, support_preserved })
}

fn product_field(surfaces: &[Hypersurface], densities: &[FrequencyDensity], grid: &crate::extension::SpatialGrid, rule: crate::extension::MeshRule) -> Result<Field> {
    let mut acc: Option<Field> = None;
    for (s, f) in surfaces.iter().zip(densities) {
        let e = extend_with(s, f, grid, rule)?;
        acc = Some(match acc {
            None => e,
            Some(a) => a.product(&e)?,
        });
    }
    acc.ok_or_else(|| Error::Invalid("no surfaces".into()))
}

/// The induction step on the configured density family.
pub fn induction_step_check(config: &ScenarioConfig) -> Result<Report> {
    let spec = config.induction.clone().ok_or_else(|| Error::Config("induction-check needs an [induction] table".into()))?;
    let scenario = Scenario::new(config)?;
    let k = cells_per_side(config.delta)?;
    let big = k as f64 * spec.radius;
    let grids = scenario.frequency_grids(big)?;
    let tuples: Vec<Vec<FrequencyDensity>> = scenario.family(big, &grids)?.into_iter().map(|t| t.densities).collect();
    let outcome = induction_step_with(&scenario, &spec, &tuples)?;

    let mut report = Report::new("induction-check", config);
    for (t, c, lhs, rhs) in &outcome.cells {
        report.records.push(Record::new("ratio", *c as f64, Some(*t), lhs / rhs));
    }
    report.summary.push(("a_emp".into(), outcome.a_emp));
    report.summary.push(("max_ratio".into(), outcome.ratio));
    report.summary.push(("max_ratio_doubled".into(), outcome.ratio_doubled));
    let drift = (outcome.ratio_doubled - outcome.ratio).abs() / outcome.ratio;
    report.summary.push(("truncation_drift".into(), drift));
    report.contracts.push(Contract::holds("finite", outcome.ratio.is_finite() && outcome.ratio_doubled.is_finite()));
    report.contracts.push(Contract::at_most("truncation_stability", drift, spec.stability));
    if let Some(kept) = outcome.support_preserved {
        report.contracts.push(Contract::holds("xi2_support_preserved", kept));
    }
    Ok(report)
}
