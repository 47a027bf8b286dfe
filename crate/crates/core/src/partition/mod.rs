//! Fourier-compact windows, the Poisson partition of unity and weighted almost-orthogonality.

mod bump;
mod fourier;

pub use bump::{mollifier, sphere_area, BumpProfile, N_MAX, TABLE_RADIUS, TABLE_STEP};
pub use fourier::{fourier_forward, fourier_forward_to, fourier_inverse, fourier_inverse_to, GridFunction, GridSpec};
pub(crate) use fourier::contract_axis;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Cell, CellOwner, InducedLattice, Strip};
use crate::quadrature::{for_each_index, Compensated};

/// A cell window chi_q or a strip window chi_s.
#[derive(Clone, Copy, Debug)]
pub enum Window<'a> {
    Cell(&'a Cell),
    Strip(&'a Strip),
}

/// <y> = (1 + |y|^2)^{1/2}.
pub fn japanese(y: &[f64]) -> f64 {
    (1.0 + y.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Window value at a point given in the lattice's subspace coordinates.
///
/// Cell windows take the lattice of their owner; strip windows take the section lattice,
/// and `y` may be either section coordinates or any point whose section projection is `y`.
pub fn eval_window(bump: &BumpProfile, lattice: &InducedLattice, window: Window<'_>, y: &[f64]) -> Result<f64> {
    let cell = match window {
        Window::Cell(c) => c,
        Window::Strip(s) => &s.base,
    };
    let expected = match window {
        Window::Cell(_) => cell.owner,
        Window::Strip(_) => CellOwner::Section,
    };
    if lattice.owner() != expected || cell.owner != expected {
        return Err(Error::OwnerMismatch(format!("window of {:?} on lattice {:?}", cell.owner, lattice.owner())));
    }
    if bump.dim() != lattice.dim() || y.len() != lattice.dim() || cell.index.len() != lattice.dim() {
        return Err(Error::Dimension("window, bump and point dimensions disagree".into()));
    }
    Ok(window_value(bump, lattice, &cell.index, cell.scale, y))
}

/// Strip window at an ambient point: depends only on pi(x).
pub fn eval_strip_window(bump: &BumpProfile, section: &InducedLattice, strip: &Strip, x: &DVector<f64>) -> Result<f64> {
    let y = section.project(x);
    eval_window(bump, section, Window::Strip(strip), y.as_slice())
}

fn window_value(bump: &BumpProfile, lattice: &InducedLattice, j: &[i64], r: f64, y: &[f64]) -> f64 {
    let u = lattice.lattice_coords(y);
    let arg: Vec<f64> = u.iter().zip(j).map(|(v, &jj)| v / r - jj as f64).collect();
    bump.eval(&arg)
}

/// sum over |j - j0|_inf <= J of chi_{q(j)}(y), with j0 the cell containing y.
///
/// Fails if the modeled tail beyond J exceeds `tol`.
pub fn partition_sum(bump: &BumpProfile, lattice: &InducedLattice, r: f64, y: &[f64], j: usize, tol: f64) -> Result<f64> {
    if bump.dim() != lattice.dim() || y.len() != lattice.dim() {
        return Err(Error::Dimension("partition_sum dimensions disagree".into()));
    }
    if !(r > 0.0) {
        return Err(Error::Invalid("scale must be positive".into()));
    }
    let tail = bump.tail_bound(j);
    if tail > tol {
        return Err(Error::Truncation { j, tail, tol });
    }
    Ok(window_sum(bump, lattice, r, y, j))
}

fn window_sum(bump: &BumpProfile, lattice: &InducedLattice, r: f64, y: &[f64], j: usize) -> f64 {
    let u = lattice.lattice_coords(y);
    let base: Vec<f64> = u.iter().map(|v| v / r).collect();
    let center: Vec<i64> = base.iter().map(|v| (v + 0.5).floor() as i64).collect();
    let frac: Vec<f64> = base.iter().zip(&center).map(|(b, c)| b - *c as f64).collect();
    let m = frac.len();
    let side = 2 * j + 1;
    let mut acc = Compensated::default();
    let mut arg = vec![0.0; m];
    // sum from the far shells inwards keeps the compensated sum tight
    for_each_index(&vec![side; m], |idx| {
        for d in 0..m {
            arg[d] = frac[d] - (idx[d] as f64 - j as f64);
        }
        acc.add(bump.eval(&arg));
    });
    acc.value()
}

/// Summary of a weighted almost-orthogonality evaluation.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SnReport {
    /// sum_q |<(x - c(q))/r>^N chi_q g|^2 / |g|^2.
    pub ratio: f64,
    /// Largest value of the per-point weight function over the grid (an upper bound on the ratio).
    pub weight_max: f64,
    pub truncation: usize,
    /// Modeled bound on the omitted windows' contribution to the weight function.
    pub tail_bound: f64,
}

/// Per-point weight W(x) = sum_q <(x - c(q))/r>^{2N} chi_q(x)^2, which only depends on x
/// modulo the scaled lattice.
pub fn sn_weight(bump: &BumpProfile, lattice: &InducedLattice, r: f64, n: u32, j: usize, grid: &GridSpec) -> Result<Vec<f64>> {
    check_sn(bump, lattice, n, grid)?;
    let m = lattice.dim();
    let side = 2 * j + 1;
    let gens = lattice.generators().clone();
    Ok((0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let y = grid.point_at(flat);
            let u = lattice.lattice_coords(&y);
            let center: Vec<i64> = u.iter().map(|v| (v / r + 0.5).floor() as i64).collect();
            let mut acc = Compensated::default();
            let mut arg = vec![0.0; m];
            let mut jj = vec![0i64; m];
            for_each_index(&vec![side; m], |idx| {
                for d in 0..m {
                    jj[d] = center[d] + idx[d] as i64 - j as i64;
                    arg[d] = u[d] / r - jj[d] as f64;
                }
                // x - c(q) in subspace coordinates, divided by r
                let c = &gens * DVector::from_iterator(m, jj.iter().map(|&v| r * v as f64));
                let rel: Vec<f64> = (0..m).map(|d| (y[d] - c[d]) / r).collect();
                let w = japanese(&rel).powi(2 * n as i32);
                acc.add(w * bump.eval(&arg).powi(2));
            });
            acc.value()
        })
        .collect())
}

fn check_sn(bump: &BumpProfile, lattice: &InducedLattice, n: u32, grid: &GridSpec) -> Result<()> {
    if bump.dim() != lattice.dim() || grid.dim() != lattice.dim() {
        return Err(Error::Dimension("verify_SN dimensions disagree".into()));
    }
    let m = bump.dim() as i32;
    if n > N_MAX || 2 * bump.decay_exponent() - 2 * n as i32 <= m {
        return Err(Error::DivergentTail(format!(
            "weight order {n} needs decay beyond the order-{} model",
            bump.decay_exponent()
        )));
    }
    Ok(())
}

/// The weighted almost-orthogonality ratio for g on its grid (in the lattice's subspace coordinates).
pub fn verify_sn(bump: &BumpProfile, lattice: &InducedLattice, g: &GridFunction, r: f64, n: u32, j: usize) -> Result<SnReport> {
    let w = sn_weight(bump, lattice, r, n, j, &g.grid)?;
    sn_ratio_with_weight(bump, lattice, g, &w, n, j)
}

/// Same as [`verify_sn`] with a precomputed weight from [`sn_weight`] on g's grid.
pub fn sn_ratio_with_weight(bump: &BumpProfile, lattice: &InducedLattice, g: &GridFunction, w: &[f64], n: u32, j: usize) -> Result<SnReport> {
    if w.len() != g.values.len() {
        return Err(Error::Dimension("weight and function grids differ".into()));
    }
    let mut num = Compensated::default();
    let mut den = Compensated::default();
    for (v, wv) in g.values.iter().zip(w) {
        num.add(wv * v.norm_sqr());
        den.add(v.norm_sqr());
    }
    if den.value() == 0.0 {
        return Err(Error::ZeroNorm("verify_SN input".into()));
    }
    let stretch = lattice.generators().norm() * (lattice.dim() as f64).sqrt();
    Ok(SnReport {
        ratio: num.value() / den.value(),
        weight_max: w.iter().cloned().fold(0.0, f64::max),
        truncation: j,
        tail_bound: bump.weighted_tail_bound(j, 2.0, 2 * n as i32, stretch),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{Frame, SlabCondition};
    use crate::lattice::strip_containing;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn window_peak_at_center() {
        let f = Frame::sheared(3, 0.3).unwrap();
        let lat = InducedLattice::hyperplane(&f, 2).unwrap();
        let b = BumpProfile::shared(2).unwrap();
        let q = Cell::new(vec![3, -1], 4.0, CellOwner::Hyperplane(2));
        let c = lat.cell_center(&q);
        let v = eval_window(&b, &lat, Window::Cell(&q), c.as_slice()).unwrap();
        assert!((v - b.peak()).abs() < 1e-14);
        let wrong = Cell::new(vec![3, -1], 4.0, CellOwner::Hyperplane(1));
        assert!(eval_window(&b, &lat, Window::Cell(&wrong), c.as_slice()).is_err());
    }

    #[test]
    fn far_window_is_small_in_one_dimension() {
        let f = Frame::standard(2);
        let lat = InducedLattice::hyperplane(&f, 0).unwrap();
        let b = BumpProfile::shared(1).unwrap();
        let q = Cell::new(vec![0], 2.0, CellOwner::Hyperplane(0));
        let v = eval_window(&b, &lat, Window::Cell(&q), &[20.0]).unwrap();
        assert!(v <= 1e-4 * b.peak());
    }

    #[test]
    fn strip_window_ignores_normal_directions() {
        let f = Frame::from_directions(
            vec![vec![1.0, 0.0, 0.0], vec![0.2, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            0.5,
        )
        .unwrap();
        let slab = SlabCondition::from_complement(vec![0.0; 3], vec![vec![0.0, 0.0, 1.0]], 0.1).unwrap();
        let section = InducedLattice::section(&f, &slab).unwrap();
        let b = BumpProfile::shared(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = DVector::from_fn(3, |_, _| rng.gen_range(-10.0..10.0));
            let s = strip_containing(&section, &x, 2.0);
            let v = DVector::from_vec(vec![0.0, 0.0, rng.gen_range(-30.0..30.0)]);
            let a = eval_strip_window(&b, &section, &s, &x).unwrap();
            let c = eval_strip_window(&b, &section, &s, &(&x + v)).unwrap();
            assert!((a - c).abs() <= 1e-12);
        }
    }

    #[test]
    fn partition_is_one() {
        let f = Frame::sheared(2, 0.3).unwrap();
        let lat = InducedLattice::hyperplane(&f, 1).unwrap();
        let b = BumpProfile::shared(1).unwrap();
        let j = b.truncation_for(1e-7);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for r in [1.0, 4.0] {
            for _ in 0..50 {
                let y = [rng.gen_range(-40.0..40.0)];
                let s = partition_sum(&b, &lat, r, &y, j, 1e-6).unwrap();
                assert!((s - 1.0).abs() < 1e-6, "{s}");
            }
        }
        assert!(matches!(partition_sum(&b, &lat, 1.0, &[0.0], 2, 1e-6), Err(Error::Truncation { .. })));
        // doubling J moves the sum by less than the tail bound
        let s1 = partition_sum(&b, &lat, 1.0, &[0.3], j, 1e-6).unwrap();
        let s2 = partition_sum(&b, &lat, 1.0, &[0.3], 2 * j, 1e-6).unwrap();
        assert!((s1 - s2).abs() <= b.tail_bound(j) + 1e-12);
    }

    #[test]
    fn sn_ratio_properties() {
        let f = Frame::sheared(2, 0.5).unwrap();
        let lat = InducedLattice::hyperplane(&f, 0).unwrap();
        let b = BumpProfile::shared(1).unwrap();
        let r = 2.0;
        let period = lat.generators()[(0, 0)] * r;
        let h = period / 16.0;
        let grid = GridSpec::new(vec![-20.0], vec![h], vec![(40.0 / h) as usize]).unwrap();
        let make = |shift: f64| {
            GridFunction::from_fn(grid.clone(), move |x| {
                let t = x[0] - shift;
                Complex64::new((-t * t / 4.0).exp() * (1.0 + 0.5 * t.sin()), 0.0)
            })
        };
        let j = 40;
        let a = verify_sn(&b, &lat, &make(0.0), r, 2, j).unwrap();
        let c = verify_sn(&b, &lat, &make(period), r, 2, j).unwrap();
        assert!((a.ratio - c.ratio).abs() < 1e-6 * a.ratio);
        assert!(a.ratio > 0.0 && a.ratio <= a.weight_max);
        assert!(verify_sn(&b, &lat, &make(0.0), r, 9, j).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn windows_are_nonnegative(j in prop::collection::vec(-6i64..6, 2), y in prop::collection::vec(-40.0f64..40.0, 2), r in 0.5f64..8.0) {
            let f = Frame::sheared(3, 0.3).unwrap();
            let lat = InducedLattice::hyperplane(&f, 1).unwrap();
            let b = BumpProfile::shared(2).unwrap();
            let q = Cell::new(j, r, CellOwner::Hyperplane(1));
            prop_assert!(eval_window(&b, &lat, Window::Cell(&q), &y).unwrap() >= 0.0);
        }

        #[test]
        fn partition_sum_within_tail(y in -60.0f64..60.0, scale in 0usize..3) {
            let r = [1.0, 4.0, 16.0][scale];
            let f = Frame::sheared(2, 0.3).unwrap();
            let lat = InducedLattice::hyperplane(&f, 0).unwrap();
            let b = BumpProfile::shared(1).unwrap();
            let j = b.truncation_for(1e-7);
            let s = partition_sum(&b, &lat, r, &[y], j, 1e-6).unwrap();
            prop_assert!((s - 1.0).abs() <= b.tail_bound(j) + 1e-9, "{}", s);
        }
    }
}
