//! The extension operator E_i f(x) = int e^{i x . Sigma_i(xi)} f(xi) d xi by trapezoid quadrature.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::density::FrequencyDensity;
use super::field::{Field, SpatialGrid};
use crate::error::{Error, Result};
use crate::frames::Hypersurface;
use crate::partition::{contract_axis, fourier_forward_to, fourier_inverse_to, GridFunction};
use crate::quadrature::unflatten;

const AXIS_TOL: f64 = 1e-12;

/// Rule tying the frequency mesh to the spatial extent of the field grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshRule {
    /// h_xi * R_max <= 1/4 with R_max = max |x| over the grid.
    Conservative,
    /// h_xi,d * max |x'_d| <= pi per frequency axis; exact for densities vanishing at the
    /// mesh boundary, whose dual-grid transforms are exact.
    Spectral,
}

/// Extension with the conservative mesh rule.
pub fn extend(surface: &Hypersurface, f: &FrequencyDensity, grid: &SpatialGrid) -> Result<Field> {
    extend_with(surface, f, grid, MeshRule::Conservative)
}

/// Extension with an explicit mesh rule.
pub fn extend_with(surface: &Hypersurface, f: &FrequencyDensity, grid: &SpatialGrid, rule: MeshRule) -> Result<Field> {
    check_rules(surface, f, grid, rule)?;
    Ok(extend_unchecked(surface, f, grid))
}

fn x_prime_extent(surface: &Hypersurface, grid: &SpatialGrid) -> Vec<f64> {
    let n = surface.dim();
    let corners = 1usize << grid.dim();
    let mut ext = vec![0.0f64; n];
    for c in 0..corners {
        let idx: Vec<usize> = (0..grid.dim()).map(|a| if c >> a & 1 == 1 { grid.counts[a] - 1 } else { 0 }).collect();
        let p = DVector::from_vec(grid.point(&idx));
        let xp = surface.tangent().transpose() * p;
        for l in 0..n {
            ext[l] = ext[l].max(xp[l].abs());
        }
    }
    ext
}

/// Checks the Nyquist rule on the spatial grid and the mesh rule on the frequency grid.
pub fn check_rules(surface: &Hypersurface, f: &FrequencyDensity, grid: &SpatialGrid, rule: MeshRule) -> Result<()> {
    if f.grid().dim() != surface.dim() {
        return Err(Error::Dimension("density and surface dimensions differ".into()));
    }
    if grid.ambient_dim() != surface.dim() + 1 {
        return Err(Error::Dimension("spatial grid lives in another ambient space".into()));
    }
    check_nyquist(surface, f, grid)?;
    check_mesh(surface, f, grid, rule)
}

fn check_nyquist(surface: &Hypersurface, f: &FrequencyDensity, grid: &SpatialGrid) -> Result<()> {
    let support = f.support();
    let band = support
        .iter()
        .map(|&i| surface.point(&f.grid().point_at(i)).norm())
        .fold(0.0, f64::max);
    let step = grid.max_step();
    let single = grid.counts.iter().all(|&c| c == 1);
    if band > 0.0 && !single && step > PI / (2.0 * band) * (1.0 + 1e-9) {
        return Err(Error::GridRule(format!(
            "spatial spacing {step:.4} exceeds pi/(2B) = {:.4} for band B = {band:.4}",
            PI / (2.0 * band)
        )));
    }
    Ok(())
}

fn check_mesh(surface: &Hypersurface, f: &FrequencyDensity, grid: &SpatialGrid, rule: MeshRule) -> Result<()> {
    match rule {
        MeshRule::Conservative => {
            let r = grid.max_radius();
            let h = f.grid().spacing.iter().cloned().fold(0.0, f64::max);
            if h * r > 0.25 * (1.0 + 1e-9) {
                return Err(Error::GridRule(format!(
                    "frequency spacing {h:.5} exceeds 1/(4 R_max) = {:.5}",
                    0.25 / r
                )));
            }
        }
        MeshRule::Spectral => {
            let ext = x_prime_extent(surface, grid);
            for (d, (h, e)) in f.grid().spacing.iter().zip(&ext).enumerate() {
                if h * e > PI * (1.0 + 1e-9) {
                    return Err(Error::GridRule(format!(
                        "frequency axis {d}: spacing {h:.5} times extent {e:.3} exceeds pi"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Field grid axes expressed as (functional, coefficient) when every axis moves exactly one of
/// x_i, x'_1, .., x'_n and every coordinate moves along at most one axis.
fn separable_layout(surface: &Hypersurface, grid: &SpatialGrid) -> Option<Vec<Option<usize>>> {
    let n = surface.dim();
    let mut functionals: Vec<DVector<f64>> = vec![surface.normal().clone()];
    for l in 0..n {
        functionals.push(surface.tangent().column(l).into_owned());
    }
    let mut axis_of: Vec<Option<usize>> = vec![None; n + 1];
    for (a, ax) in grid.axes.iter().enumerate() {
        let v = DVector::from_column_slice(ax);
        let scale = v.norm();
        let moved: Vec<usize> = (0..=n).filter(|&f| functionals[f].dot(&v).abs() > AXIS_TOL * scale).collect();
        if moved.len() != 1 || axis_of[moved[0]].is_some() {
            return None;
        }
        axis_of[moved[0]] = Some(a);
    }
    Some(axis_of)
}

/// Trapezoid evaluation without rule checks.
pub fn extend_unchecked(surface: &Hypersurface, f: &FrequencyDensity, grid: &SpatialGrid) -> Field {
    let weights = f.grid().trapezoid_weights();
    let coeffs: Vec<Complex64> = f.values().iter().zip(&weights).map(|(v, w)| v * *w).collect();
    if coeffs.iter().all(|c| c.norm() == 0.0) {
        return Field::zeros(grid.clone());
    }
    match separable_layout(surface, grid) {
        Some(layout) => extend_separable(surface, f, &coeffs, grid, &layout),
        None => extend_direct(surface, f, &coeffs, grid),
    }
}

fn extend_direct(surface: &Hypersurface, f: &FrequencyDensity, coeffs: &[Complex64], grid: &SpatialGrid) -> Field {
    let nodes: Vec<(Complex64, DVector<f64>)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(i, c)| (*c, surface.point(&f.grid().point_at(i))))
        .collect();
    let d = grid.ambient_dim();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let x = grid.point_at(flat);
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, s) in &nodes {
                let mut ph = 0.0;
                for k in 0..d {
                    ph += x[k] * s[k];
                }
                acc += c * Complex64::from_polar(1.0, ph);
            }
            acc
        })
        .collect();
    Field { grid: grid.clone(), values }
}

fn extend_separable(surface: &Hypersurface, f: &FrequencyDensity, coeffs: &[Complex64], grid: &SpatialGrid, layout: &[Option<usize>]) -> Field {
    let n = surface.dim();
    let fg = f.grid();
    let origin = DVector::from_column_slice(&grid.origin);
    let normal = surface.normal();
    let tangent = surface.tangent();
    // coordinate value of functional `fun` at index k along its axis
    let coord = |fun: usize, k: usize| -> f64 {
        let dir: DVector<f64> = if fun == 0 { normal.clone() } else { tangent.column(fun - 1).into_owned() };
        let base = dir.dot(&origin);
        match layout[fun] {
            Some(a) => base + k as f64 * dir.dot(&DVector::from_column_slice(&grid.axes[a])),
            None => base,
        }
    };
    let count_of = |fun: usize| layout[fun].map(|a| grid.counts[a]).unwrap_or(1);
    let phis: Vec<f64> = (0..fg.len()).map(|i| surface.graph().value(&fg.point_at(i))).collect();
    let flat_graph = surface.graph().is_flat();
    let slices = count_of(0);
    let out_counts: Vec<usize> = (1..=n).map(count_of).collect();
    let matrices: Vec<Vec<Complex64>> = (1..=n)
        .map(|fun| {
            let xi = fg.axis_coords(fun - 1);
            let mut m = Vec::with_capacity(count_of(fun) * xi.len());
            for k in 0..count_of(fun) {
                let x = coord(fun, k);
                for &z in &xi {
                    m.push(Complex64::from_polar(1.0, x * z));
                }
            }
            m
        })
        .collect();
    let contract = |g: Vec<Complex64>| -> Vec<Complex64> {
        let mut data = g;
        let mut shape = fg.counts.clone();
        for l in 0..n {
            data = contract_axis(&data, &shape, l, &matrices[l], out_counts[l]);
            shape[l] = out_counts[l];
        }
        data
    };
    let slab_len: usize = out_counts.iter().product();
    let per_slice: Vec<Vec<Complex64>> = if flat_graph {
        vec![contract(coeffs.to_vec())]
    } else {
        (0..slices)
            .into_par_iter()
            .map(|s| {
                let xi_n = coord(0, s);
                contract(coeffs.iter().zip(&phis).map(|(c, p)| c * Complex64::from_polar(1.0, xi_n * p)).collect())
            })
            .collect()
    };
    let base = surface.base_point();
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut gidx = vec![0usize; grid.dim()];
    let mut lidx = vec![0usize; n];
    for s in 0..slices {
        let block = if flat_graph { &per_slice[0] } else { &per_slice[s] };
        for (o, v) in block.iter().enumerate().take(slab_len) {
            unflatten(o, &out_counts, &mut lidx);
            if let Some(a) = layout[0] {
                gidx[a] = s;
            }
            for l in 0..n {
                if let Some(a) = layout[l + 1] {
                    gidx[a] = lidx[l];
                }
            }
            let mut flat = 0usize;
            for (a, &c) in grid.counts.iter().enumerate() {
                flat = flat * c + gidx[a];
            }
            values[flat] = *v;
        }
    }
    if base.norm() > 0.0 {
        values.par_iter_mut().enumerate().for_each(|(flat, v)| {
            let x = grid.point_at(flat);
            let ph: f64 = x.iter().zip(base.iter()).map(|(a, b)| a * b).sum();
            *v *= Complex64::from_polar(1.0, ph);
        });
    }
    Field { grid: grid.clone(), values }
}

/// Two-path check of (x' - x'_0 + x_1 grad phi(D))^N E f = E F((x' - x'_0)^N F^{-1} f) along one
/// tangent axis, on slices x_1 = const sampled on the dual grid of f.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    /// Largest relative L^inf discrepancy over the slices.
    pub discrepancy: f64,
    /// (x_1, relative discrepancy) per slice.
    pub slices: Vec<(f64, f64)>,
}

pub fn commutator_check(surface: &Hypersurface, f: &FrequencyDensity, x0: &[f64], power: u32, axis: usize, x1_values: &[f64]) -> Result<CommutatorReport> {
    let n = surface.dim();
    if !(1..=2).contains(&power) {
        return Err(Error::Invalid(format!("commutator power must be 1 or 2, got {power}")));
    }
    if axis >= n || x0.len() != n {
        return Err(Error::Dimension("commutator axis or offset has wrong dimension".into()));
    }
    let fgrid = f.grid().clone();
    let xgrid = fgrid.dual();
    let tangent = surface.tangent();
    let x_axis = xgrid.axis_coords(axis);
    let times_x = |g: &GridFunction| -> GridFunction {
        let mut out = g.clone();
        let mut idx = vec![0usize; n];
        for (flat, v) in out.values.iter_mut().enumerate() {
            unflatten(flat, &xgrid.counts, &mut idx);
            *v *= x_axis[idx[axis]] - x0[axis];
        }
        out
    };
    let mut moved = fourier_inverse_to(&f.samples, &xgrid)?;
    for _ in 0..power {
        moved = times_x(&moved);
    }
    let rhs_density = FrequencyDensity::new(f.surface, fourier_forward_to(&moved, &fgrid)?);
    let multiplier: Vec<f64> = (0..fgrid.len()).map(|i| surface.graph().gradient(&fgrid.point_at(i))[axis]).collect();
    let mut slices = Vec::with_capacity(x1_values.len());
    for &x1 in x1_values {
        let mut origin = surface.normal() * x1;
        let mut axes = Vec::with_capacity(n);
        for l in 0..n {
            origin += tangent.column(l) * xgrid.origin[l];
            axes.push((tangent.column(l) * xgrid.spacing[l]).iter().copied().collect());
        }
        let slice = SpatialGrid::new(origin.iter().copied().collect(), axes, xgrid.counts.clone())?;
        check_mesh(surface, f, &slice, MeshRule::Spectral)?;
        let rhs = extend_unchecked(surface, &rhs_density, &slice);
        let lhs0 = extend_unchecked(surface, f, &slice);
        let mut g = GridFunction::new(xgrid.clone(), lhs0.values)?;
        for _ in 0..power {
            let mut spec = fourier_forward_to(&g, &fgrid)?;
            for (v, m) in spec.values.iter_mut().zip(&multiplier) {
                *v *= m;
            }
            let back = fourier_inverse_to(&spec, &xgrid)?;
            let shifted = times_x(&g);
            g = GridFunction::new(
                xgrid.clone(),
                shifted.values.iter().zip(&back.values).map(|(a, b)| a + b * x1).collect(),
            )?;
        }
        let scale = rhs.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::ZeroNorm("commutator right-hand side vanishes".into()));
        }
        let err = g.values.iter().zip(&rhs.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        slices.push((x1, err / scale));
    }
    let discrepancy = slices.iter().map(|s| s.1).fold(0.0, f64::max);
    Ok(CommutatorReport { discrepancy, slices })
}

/// Pointwise bound ratio. Plain: |E f|_inf / (|U|^{1/2} |f|_2). With `slab = Some((mu, k))`:
/// |E f|_inf / (mu^{(n+1-k)/2} |f|_2).
pub fn linf_bound_ratio(surface: &Hypersurface, f: &FrequencyDensity, grid: &SpatialGrid, slab: Option<(f64, usize)>) -> Result<f64> {
    let norm = f.l2_norm();
    if norm == 0.0 {
        return Err(Error::ZeroNorm("linf_bound_ratio density".into()));
    }
    let field = extend_unchecked(surface, f, grid);
    let sup = field.max_abs();
    let denom = match slab {
        None => {
            let w = f.grid().trapezoid_weights();
            let area: f64 = (0..f.grid().len()).filter(|&i| surface.domain().contains(&f.grid().point_at(i))).map(|i| w[i]).sum();
            area.sqrt()
        }
        Some((mu, k)) => {
            let n = surface.dim();
            if k < 1 || k > n {
                return Err(Error::Invalid(format!("slab dimension {k} outside 1..=n")));
            }
            mu.powf((n + 1 - k) as f64 / 2.0)
        }
    };
    Ok(sup / (denom * norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{Domain, Frame, Graph};
    use crate::partition::GridSpec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    fn flat_line(a: f64) -> Hypersurface {
        Hypersurface::new(&Frame::standard(2), 0, Domain::cube(1, a), Graph::Flat).unwrap()
    }

    fn sinc(a: f64, x: f64) -> f64 {
        if x.abs() < 1e-12 {
            2.0 * a
        } else {
            2.0 * (a * x).sin() / x
        }
    }

    #[test]
    fn indicator_gives_sinc() {
        let a = 1.0;
        let s = flat_line(a);
        let f = FrequencyDensity::from_fn(&s, GridSpec::symmetric(&[a], &[1e-3]).unwrap(), |_| one()).unwrap();
        let grid = SpatialGrid::cube(&[0.0, 0.0], 10.0, 0.5).unwrap();
        let e = extend(&s, &f, &grid).unwrap();
        for (i, v) in e.values.iter().enumerate() {
            let x = grid.point_at(i);
            assert!((v - Complex64::new(sinc(a, x[1]), 0.0)).norm() < 1e-4, "at {x:?}");
        }
        // oblique axes force the direct path
        let tilted = SpatialGrid::new(vec![-2.0, -2.0], vec![vec![0.3, 0.2], vec![-0.1, 0.4]], vec![8, 8]).unwrap();
        let e = extend(&s, &f, &tilted).unwrap();
        for (i, v) in e.values.iter().enumerate() {
            let x = tilted.point_at(i);
            assert!((v - Complex64::new(sinc(a, x[1]), 0.0)).norm() < 1e-4);
        }
    }

    #[test]
    fn separable_path_matches_direct_sum() {
        let frame = Frame::sheared(3, 0.6).unwrap();
        let s = Hypersurface::new(&frame, 2, Domain::cube(2, 1.0), Graph::paraboloid(2, 0.7))
            .unwrap()
            .with_base_point(vec![0.1, -0.2, 0.3])
            .unwrap();
        let fg = GridSpec::symmetric(&[1.0, 1.0], &[0.1, 0.1]).unwrap();
        let f = FrequencyDensity::from_fn(&s, fg, |x| Complex64::new(x[0].cos(), x[0] * x[1])).unwrap();
        let n = s.normal().clone();
        let t = s.tangent().clone();
        let mut axes = vec![n.iter().map(|v| v * 0.4).collect::<Vec<_>>()];
        for l in 0..2 {
            axes.push(t.column(l).iter().map(|v| v * 0.3).collect());
        }
        let grid = SpatialGrid::new(vec![0.2, -0.5, 0.1], axes, vec![4, 5, 6]).unwrap();
        assert!(separable_layout(&s, &grid).is_some());
        let fast = extend_unchecked(&s, &f, &grid);
        let w = f.grid().trapezoid_weights();
        let coeffs: Vec<Complex64> = f.values().iter().zip(&w).map(|(v, w)| v * *w).collect();
        let slow = extend_direct(&s, &f, &coeffs, &grid);
        for (a, b) in fast.values.iter().zip(&slow.values) {
            assert!((a - b).norm() < 1e-10 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn mesh_rules_refuse_coarse_grids() {
        let s = flat_line(1.0);
        let f = FrequencyDensity::from_fn(&s, GridSpec::symmetric(&[1.0], &[0.1]).unwrap(), |_| one()).unwrap();
        let far = SpatialGrid::cube(&[0.0, 0.0], 20.0, 0.5).unwrap();
        assert!(matches!(extend(&s, &f, &far), Err(Error::GridRule(_))));
        let coarse = SpatialGrid::cube(&[0.0, 0.0], 4.0, 2.0).unwrap();
        let f = FrequencyDensity::from_fn(&s, GridSpec::symmetric(&[1.0], &[0.01]).unwrap(), |_| one()).unwrap();
        assert!(matches!(extend(&s, &f, &coarse), Err(Error::GridRule(_))));
        let wrong = SpatialGrid::cube(&[0.0, 0.0, 0.0], 2.0, 0.5).unwrap();
        assert!(matches!(extend(&s, &f, &wrong), Err(Error::Dimension(_))));
    }

    #[test]
    fn commutator_identity_holds() {
        let a = 2.0;
        let sigma = a / 8.0;
        for (dim, kappa) in [(1usize, 0.8), (2, 0.5)] {
            let s = Hypersurface::new(&Frame::standard(dim + 1), 0, Domain::cube(dim, a), Graph::paraboloid(dim, kappa)).unwrap();
            let fg = GridSpec::centered(vec![2.0 * a / 64.0; dim], vec![64; dim]).unwrap();
            let f = FrequencyDensity::from_fn(&s, fg, |x| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                Complex64::from_polar((-r2 / (2.0 * sigma * sigma)).exp(), 0.3 * x[0])
            })
            .unwrap();
            for power in [1, 2] {
                let rep = commutator_check(&s, &f, &vec![0.5; dim], power, 0, &[0.0, 1.0, -3.0, 8.0]).unwrap();
                assert!(rep.slices[0].1 < 1e-10, "trivial slice {}", rep.slices[0].1);
                assert!(rep.discrepancy < 1e-5, "dim {dim} power {power}: {}", rep.discrepancy);
            }
        }
    }

    #[test]
    fn constant_density_saturates_pointwise_bound() {
        let s = Hypersurface::new(&Frame::standard(3), 1, Domain::cube(2, 0.5), Graph::paraboloid(2, 1.0)).unwrap();
        let f = FrequencyDensity::from_fn(&s, GridSpec::symmetric(&[0.5, 0.5], &[0.05, 0.05]).unwrap(), |_| one()).unwrap();
        let grid = SpatialGrid::cube(&[0.0, 0.0, 0.0], 4.5, 0.5).unwrap();
        let ratio = linf_bound_ratio(&s, &f, &grid, None).unwrap();
        assert!((ratio - 1.0).abs() < 1e-12, "{ratio}");
        let slab = linf_bound_ratio(&s, &f, &grid, Some((1.0, 2))).unwrap();
        assert!((slab - 1.0).abs() < 1e-12);
        let zero = f.scaled(Complex64::new(0.0, 0.0));
        assert!(matches!(linf_bound_ratio(&s, &zero, &grid, None), Err(Error::ZeroNorm(_))));
    }

    fn random_density(s: &Hypersurface, seed: u64) -> FrequencyDensity {
        let grid = GridSpec::symmetric(&s.domain().half_widths(), &vec![0.1; s.dim()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<Complex64> = (0..grid.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let g = GridFunction::new(grid, vals).unwrap();
        FrequencyDensity::new(s.index(), g)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn extension_is_linear(seed in 0u64..1000, re in -2.0f64..2.0, im in -2.0f64..2.0) {
            let s = Hypersurface::new(&Frame::standard(3), 2, Domain::cube(2, 1.0), Graph::paraboloid(2, 0.5)).unwrap();
            let f = random_density(&s, seed);
            let g = random_density(&s, seed + 7919);
            let c = Complex64::new(re, im);
            let grid = SpatialGrid::cube(&[0.3, -0.2, 0.1], 2.0, 0.4).unwrap();
            let lhs = extend(&s, &f.combine(c, &g, one()).unwrap(), &grid).unwrap();
            let ef = extend(&s, &f, &grid).unwrap();
            let eg = extend(&s, &g, &grid).unwrap();
            let rhs = ef.scaled(c).add(&eg).unwrap();
            for (a, b) in lhs.values.iter().zip(&rhs.values) {
                prop_assert!((a - b).norm() < 1e-10 * (1.0 + b.norm()));
            }
        }

        #[test]
        fn modulus_bounded_by_l1(seed in 0u64..1000) {
            let s = Hypersurface::new(&Frame::sheared(3, 0.5).unwrap(), 0, Domain::cube(2, 1.0), Graph::paraboloid(2, -0.4)).unwrap();
            let f = random_density(&s, seed);
            let grid = SpatialGrid::cube(&[0.0, 0.5, 0.0], 2.0, 0.5).unwrap();
            let e = extend(&s, &f, &grid).unwrap();
            prop_assert!(e.max_abs() <= f.l1_norm() * (1.0 + 1e-12));
            let ratio = linf_bound_ratio(&s, &f, &grid, None).unwrap();
            prop_assert!(ratio <= 1.0 + 1e-12);
        }
    }
}
