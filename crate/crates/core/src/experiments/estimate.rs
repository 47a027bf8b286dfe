//! Empirical A(R), the scale and slab-width sweeps, and the Plancherel cross-check.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::config::{RegionKind, ScenarioConfig};
use super::family::{admit, density_family, frequency_grid, DensityTuple};
use super::report::{fit_loglog, Contract, Record, Report};
use crate::error::{Error, Result};
use crate::extension::{extend_with, lp_quasinorm, Field, FrequencyDensity, SpatialGrid};
use crate::frames::{verify_slab_condition, Domain, Frame, Hypersurface};
use crate::partition::GridSpec;
use crate::quadrature::Compensated;

/// A validated configuration with its surfaces built.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub frame: Option<Frame>,
    pub surfaces: Vec<Hypersurface>,
}

impl Scenario {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let surfaces = config.surfaces()?;
        Ok(Scenario { config: config.clone(), frame: config.frame().ok(), surfaces })
    }

    /// Exponent p = 2/(k-1) of the product norm (2/n when k = n+1).
    pub fn exponent(&self) -> f64 {
        2.0 / (self.surfaces.len() - 1) as f64
    }

    /// Sample grid on Q(r), the region of size r centered at the origin.
    pub fn region_grid(&self, r: f64) -> Result<SpatialGrid> {
        let d = self.config.n + 1;
        let h = self.config.grid.h_x;
        match (self.config.region, &self.frame) {
            (RegionKind::Cube, _) => SpatialGrid::cube(&vec![0.0; d], r, h),
            (RegionKind::LatticeCell, Some(frame)) => SpatialGrid::lattice_cell(frame, &vec![0.0; d], r, h),
            (RegionKind::LatticeCell, None) => Err(Error::Config("lattice-cell region needs a valid frame".into())),
        }
    }

    /// Frequency grids sized for the largest configured scale (or `r` when larger).
    pub fn frequency_grids(&self, r: f64) -> Result<Vec<GridSpec>> {
        let r_top = self.config.radii.iter().cloned().fold(r, f64::max);
        let r_max = self.region_grid(r_top)?.max_radius();
        self.surfaces.iter().map(|s| frequency_grid(s, &self.config.grid, r_max)).collect()
    }

    pub fn family(&self, r: f64, grids: &[GridSpec]) -> Result<Vec<DensityTuple>> {
        density_family(&self.surfaces, grids, &self.config.family, self.config.seed, self.config.delta, r)
    }
}

/// |prod_i E_i f_i|_{L^p(grid)} / prod_i |f_i|_2.
pub fn product_ratio(surfaces: &[Hypersurface], densities: &[FrequencyDensity], grid: &SpatialGrid, p: f64, rule: crate::extension::MeshRule) -> Result<f64> {
    let mut product: Option<Field> = None;
    let mut denom = 1.0;
    for (s, f) in surfaces.iter().zip(densities) {
        let norm = f.l2_norm();
        if norm == 0.0 {
            return Err(Error::ZeroNorm(format!("density on surface {}", s.index())));
        }
        denom *= norm;
        let e = extend_with(s, f, grid, rule)?;
        product = Some(match product {
            None => e,
            Some(acc) => acc.product(&e)?,
        });
    }
    let product = product.ok_or_else(|| Error::Invalid("no surfaces".into()))?;
    Ok(lp_quasinorm(&product, p, None)? / denom)
}

/// Per-tuple ratios at one scale and their maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct AEstimate {
    pub radius: f64,
    pub ratios: Vec<f64>,
    pub max: f64,
    pub argmax: usize,
}

/// A_emp(R): the family maximum of the product ratio over Q(R).
pub fn estimate_a(scenario: &Scenario, r: f64) -> Result<AEstimate> {
    let grids = scenario.frequency_grids(r)?;
    let family = scenario.family(r, &grids)?;
    estimate_on_family(scenario, r, &family)
}

fn estimate_on_family(scenario: &Scenario, r: f64, family: &[DensityTuple]) -> Result<AEstimate> {
    let grid = scenario.region_grid(r)?;
    let p = scenario.exponent();
    let rule = scenario.config.mesh_rule();
    let ratios = family
        .iter()
        .map(|t| product_ratio(&scenario.surfaces, &t.densities, &grid, p, rule))
        .collect::<Result<Vec<f64>>>()?;
    let (argmax, max) = ratios
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    Ok(AEstimate { radius: r, ratios, max, argmax })
}

/// Full-space bilinear ratio |E_1 f_1 E_2 f_2|_{L^2(R^2)} / (|f_1| |f_2|) for n = 1 by
/// Plancherel: (2 pi)^2 int int |f_1 f_2|^2 / |J| with J the Jacobian of the sum map.
pub fn plancherel_ratio(surfaces: &[Hypersurface], densities: &[FrequencyDensity]) -> Result<f64> {
    if surfaces.len() != 2 || densities.len() != 2 || surfaces.iter().any(|s| s.dim() != 1) {
        return Err(Error::Invalid("the Plancherel route covers k = 2, n = 1 only".into()));
    }
    let tangent_at = |s: &Hypersurface, xi: f64| -> [f64; 2] {
        let g = s.graph().gradient(&[xi])[0];
        let t = s.tangent();
        let nv = s.normal();
        [t[(0, 0)] + g * nv[0], t[(1, 0)] + g * nv[1]]
    };
    let side = |i: usize| -> Vec<(f64, f64, [f64; 2])> {
        let f = &densities[i];
        let w = f.grid().trapezoid_weights();
        (0..f.grid().len())
            .filter(|&j| f.values()[j].norm() > 0.0)
            .map(|j| {
                let xi = f.grid().point_at(j)[0];
                (w[j], f.values()[j].norm_sqr(), tangent_at(&surfaces[i], xi))
            })
            .collect()
    };
    let a = side(0);
    let b = side(1);
    let partials: Vec<f64> = a
        .par_iter()
        .map(|(wa, va, ta)| {
            let mut acc = Compensated::default();
            for (wb, vb, tb) in &b {
                let jac = (ta[0] * tb[1] - ta[1] * tb[0]).abs();
                acc.add(wa * wb * va * vb / jac);
            }
            acc.value()
        })
        .collect();
    let mut total = Compensated::default();
    for v in partials {
        total.add(v);
    }
    let denom = densities[0].l2_norm() * densities[1].l2_norm();
    if denom == 0.0 {
        return Err(Error::ZeroNorm("Plancherel densities".into()));
    }
    Ok(2.0 * PI * total.value().sqrt() / denom)
}

/// Runs estimate_A for every configured R and fits ln A against ln R.
pub fn sweep_r(config: &ScenarioConfig) -> Result<Report> {
    let scenario = Scenario::new(config)?;
    let radii = &config.radii;
    if radii.len() < 3 {
        return Err(Error::Config(format!("sweep_R needs at least 3 radii, got {}", radii.len())));
    }
    let mut report = Report::new("sweep-ar", config);
    let grids = scenario.frequency_grids(0.0)?;
    let plancherel = config.k == 2 && config.n == 1;
    let mut maxima = Vec::with_capacity(radii.len());
    let mut worst_gap: f64 = 0.0;
    for &r in radii {
        let family = scenario.family(r, &grids)?;
        let est = estimate_on_family(&scenario, r, &family)?;
        for (t, v) in est.ratios.iter().enumerate() {
            report.records.push(Record::new("ratio", r, Some(t), *v));
        }
        report.records.push(Record::new("max", r, None, est.max));
        if plancherel {
            let oracle = plancherel_ratio(&scenario.surfaces, &family[est.argmax].densities)?;
            let gap = (est.max - oracle).abs() / oracle;
            worst_gap = worst_gap.max(gap);
            report.records.push(Record::new("plancherel", r, Some(est.argmax), oracle));
            report.records.push(Record::new("plancherel_gap", r, None, gap));
        }
        maxima.push(est.max);
    }
    let fit = fit_loglog(radii, &maxima)?;
    report.summary.push(("epsilon".into(), fit.exponent));
    report.summary.push(("residual".into(), fit.residual));
    if plancherel {
        report.summary.push(("plancherel_gap".into(), worst_gap));
    }
    if let Some(t) = config.fit.max_exponent {
        report.contracts.push(Contract::at_most("epsilon_max", fit.exponent, t));
    }
    if let Some(t) = config.fit.min_exponent {
        report.contracts.push(Contract::at_least("epsilon_min", fit.exponent, t));
    }
    if let (true, Some(t)) = (plancherel, config.fit.plancherel_tolerance) {
        report.contracts.push(Contract::at_most("plancherel_gap", worst_gap, t));
    }
    report.fit = Some(fit);
    Ok(report)
}

/// Tangent axes of `surface` that point into the span of `complement` (columns).
fn slab_axes(surface: &Hypersurface, complement: &DMatrix<f64>) -> Vec<usize> {
    let t = surface.tangent();
    (0..surface.dim())
        .filter(|&l| (complement.transpose() * t.column(l)).norm() > 0.5)
        .collect()
}

/// For fixed R, the ratio with f_1 the indicator of a mu-slab cap and the other densities
/// constant, over the configured mu list; fits the slope of ln ratio against ln mu.
pub fn sweep_mu(config: &ScenarioConfig) -> Result<Report> {
    let slab = config.slab.as_ref().ok_or_else(|| Error::Config("sweep_mu needs a [slab] section".into()))?;
    if config.k >= config.n + 1 {
        return Err(Error::Config("sweep_mu needs k < n + 1; there is no gain at k = n + 1".into()));
    }
    if slab.mu.len() < 4 {
        return Err(Error::Config(format!("sweep_mu needs at least 4 values of mu, got {}", slab.mu.len())));
    }
    let r = slab.radius.or_else(|| config.radii.first().copied()).ok_or_else(|| Error::Config("sweep_mu needs slab.radius".into()))?;
    let scenario = Scenario::new(config)?;
    let grid = scenario.region_grid(r)?;
    let r_max = grid.max_radius();
    let p = scenario.exponent();
    let rule = config.mesh_rule();
    let base = &scenario.surfaces[0];
    let mut report = Report::new("sweep-mu", config);
    let mut widths = Vec::new();
    let mut ratios = Vec::new();
    let mut slab_ok = true;
    for &mu in &slab.mu {
        let condition = config.slab_condition(mu)?;
        let axes = slab_axes(base, condition.complement());
        if axes.len() != config.n + 1 - config.k {
            return Err(Error::Config("surface 1 tangent axes do not split along the slab complement".into()));
        }
        let mut hw = base.domain().half_widths();
        for &a in &axes {
            hw[a] = mu;
        }
        let capped = base.clone().with_domain(Domain::Box { half_widths: hw })?;
        slab_ok &= verify_slab_condition(&capped, &condition).0;
        let mut surfaces = scenario.surfaces.clone();
        surfaces[0] = capped;
        let densities = surfaces
            .iter()
            .map(|s| {
                let g = frequency_grid(s, &config.grid, r_max)?;
                let f = FrequencyDensity::from_fn(s, g, |_| num_complex::Complex64::new(1.0, 0.0))?;
                admit(&f, config.delta, r, false)?;
                Ok(f)
            })
            .collect::<Result<Vec<_>>>()?;
        let ratio = product_ratio(&surfaces, &densities, &grid, p, rule)?;
        report.records.push(Record::new("ratio", mu, Some(0), ratio));
        widths.push(mu);
        ratios.push(ratio);
    }
    let fit = fit_loglog(&widths, &ratios)?;
    let expected = (config.n + 1 - config.k) as f64 / 2.0;
    report.summary.push(("slope".into(), fit.exponent));
    report.summary.push(("expected".into(), expected));
    report.summary.push(("residual".into(), fit.residual));
    report.contracts.push(Contract::holds("slab_condition", slab_ok));
    report.contracts.push(Contract::at_most("slope_deviation", (fit.exponent - expected).abs(), slab.slope_tolerance));
    report.fit = Some(fit);
    Ok(report)
}
