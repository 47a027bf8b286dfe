//! Uniform grids, sampled functions and direct Fourier transforms between dual grids.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::CellOwner;
use crate::quadrature::{unflatten, Compensated};

/// A uniform tensor grid: point(idx)_d = origin_d + idx_d * spacing_d.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub counts: Vec<usize>,
}

impl GridSpec {
    pub fn new(origin: Vec<f64>, spacing: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if origin.len() != spacing.len() || origin.len() != counts.len() || origin.is_empty() {
            return Err(Error::Dimension("grid origin, spacing and counts disagree".into()));
        }
        if spacing.iter().any(|h| !(*h > 0.0)) || counts.iter().any(|&c| c == 0) {
            return Err(Error::Invalid("grid spacing must be positive and counts nonzero".into()));
        }
        Ok(GridSpec { origin, spacing, counts })
    }

    /// Grid centered on the origin: index floor(N/2) sits at 0.
    pub fn centered(spacing: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let origin = spacing.iter().zip(&counts).map(|(h, &n)| -((n / 2) as f64) * h).collect();
        GridSpec::new(origin, spacing, counts)
    }

    /// Symmetric grid on prod [-a_d, a_d] including both endpoints, spacing at most `step`.
    pub fn symmetric(half_widths: &[f64], step: &[f64]) -> Result<Self> {
        if half_widths.len() != step.len() {
            return Err(Error::Dimension("half-widths and steps disagree".into()));
        }
        let mut counts = Vec::new();
        let mut spacing = Vec::new();
        for (&a, &h) in half_widths.iter().zip(step) {
            if !(a > 0.0 && h > 0.0) {
                return Err(Error::Invalid("symmetric grid needs positive extents".into()));
            }
            let intervals = ((2.0 * a / h) - 1e-9).ceil().max(1.0) as usize;
            counts.push(intervals + 1);
            spacing.push(2.0 * a / intervals as f64);
        }
        let origin = half_widths.iter().map(|a| -a).collect();
        GridSpec::new(origin, spacing, counts)
    }

    /// The dual grid: spacing 2 pi / (N h), same counts, centered.
    pub fn dual(&self) -> GridSpec {
        let spacing = self.spacing.iter().zip(&self.counts).map(|(h, &n)| 2.0 * PI / (n as f64 * h)).collect();
        GridSpec::centered(spacing, self.counts.clone()).expect("dual grid")
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.spacing[axis]
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.counts[axis]).map(|i| self.coord(axis, i)).collect()
    }

    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().enumerate().map(|(d, &i)| self.coord(d, i)).collect()
    }

    pub fn point_at(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0; self.dim()];
        unflatten(flat, &self.counts, &mut idx);
        self.point(&idx)
    }

    /// Trapezoid weights (half weight on each boundary layer), flattened row-major.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = (0..self.dim())
            .map(|d| {
                let n = self.counts[d];
                (0..n)
                    .map(|i| if n > 1 && (i == 0 || i == n - 1) { 0.5 * self.spacing[d] } else { self.spacing[d] })
                    .collect()
            })
            .collect();
        let mut idx = vec![0; self.dim()];
        (0..self.len())
            .map(|f| {
                unflatten(f, &self.counts, &mut idx);
                idx.iter().enumerate().map(|(d, &i)| per_axis[d][i]).product()
            })
            .collect()
    }

    /// Largest |x| over the grid corners.
    pub fn max_radius(&self) -> f64 {
        (0..self.dim())
            .map(|d| {
                let a = self.origin[d].abs();
                let b = self.coord(d, self.counts[d] - 1).abs();
                a.max(b).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Complex samples on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub owner: Option<CellOwner>,
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
    /// Declared band limit of the sampled function, if known.
    pub band_limit: Option<f64>,
}

impl GridFunction {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!("{} samples for a grid of {}", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Invalid("non-finite sample".into()));
        }
        Ok(GridFunction { owner: None, grid, values, band_limit: None })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.len();
        GridFunction { owner: None, grid, values: vec![Complex64::new(0.0, 0.0); n], band_limit: None }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Self {
        let values = (0..grid.len()).into_par_iter().map(|i| f(&grid.point_at(i))).collect();
        GridFunction { owner: None, grid, values, band_limit: None }
    }

    pub fn with_owner(mut self, owner: CellOwner) -> Self {
        self.owner = Some(owner);
        self
    }

    pub fn with_band_limit(mut self, band: f64) -> Self {
        self.band_limit = Some(band);
        self
    }

    /// L^2 norm with the uniform quadrature weight h^m.
    pub fn l2_norm(&self) -> f64 {
        let mut acc = Compensated::default();
        for v in &self.values {
            acc.add(v.norm_sqr());
        }
        (acc.value() * self.grid.cell_volume()).sqrt()
    }

    fn check_band(&self) -> Result<()> {
        if let Some(b) = self.band_limit {
            for (d, h) in self.grid.spacing.iter().enumerate() {
                if *h > PI / b {
                    return Err(Error::GridRule(format!(
                        "axis {d}: spacing {h} too coarse for band limit {b} (needs <= {})",
                        PI / b
                    )));
                }
            }
        }
        Ok(())
    }
}

/// out[p, k, q] = sum_j m[k, j] data[p, j, q] along `axis`.
pub(crate) fn contract_axis(data: &[Complex64], shape: &[usize], axis: usize, m: &[Complex64], out_len: usize) -> Vec<Complex64> {
    let pre: usize = shape[..axis].iter().product();
    let n_in = shape[axis];
    let post: usize = shape[axis + 1..].iter().product();
    let zero = Complex64::new(0.0, 0.0);
    let block = out_len * post;
    let mut out = vec![zero; pre * block];
    let work = |(p, chunk): (usize, &mut [Complex64])| {
        let src = &data[p * n_in * post..(p + 1) * n_in * post];
        for k in 0..out_len {
            let dst = &mut chunk[k * post..(k + 1) * post];
            let row = &m[k * n_in..(k + 1) * n_in];
            for (j, c) in row.iter().enumerate() {
                let s = &src[j * post..(j + 1) * post];
                for (d, v) in dst.iter_mut().zip(s) {
                    *d += c * v;
                }
            }
        }
    };
    if pre * block * n_in > 1 << 16 {
        out.par_chunks_mut(block).enumerate().for_each(work);
    } else {
        out.chunks_mut(block).enumerate().for_each(work);
    }
    out
}

fn transform(g: &GridFunction, target: &GridSpec, sign: f64, scale: f64) -> Result<GridFunction> {
    if g.grid.dim() != target.dim() {
        return Err(Error::Dimension("transform target has another dimension".into()));
    }
    g.check_band()?;
    let mut data = g.values.clone();
    let mut shape = g.grid.counts.clone();
    for axis in 0..g.grid.dim() {
        let xs = g.grid.axis_coords(axis);
        let ks = target.axis_coords(axis);
        let h = g.grid.spacing[axis];
        let mut m = Vec::with_capacity(ks.len() * xs.len());
        for &k in &ks {
            for &x in &xs {
                m.push(Complex64::from_polar(h * scale, sign * x * k));
            }
        }
        data = contract_axis(&data, &shape, axis, &m, ks.len());
        shape[axis] = ks.len();
    }
    Ok(GridFunction { owner: g.owner, grid: target.clone(), values: data, band_limit: None })
}

/// F g(xi) = sum_x g(x) e^{-i x xi} h^m evaluated on an arbitrary target grid.
pub fn fourier_forward_to(g: &GridFunction, target: &GridSpec) -> Result<GridFunction> {
    transform(g, target, -1.0, 1.0)
}

/// F^{-1} G(x) = (2 pi)^{-m} sum_xi G(xi) e^{i x xi} h_xi^m on an arbitrary target grid.
pub fn fourier_inverse_to(g: &GridFunction, target: &GridSpec) -> Result<GridFunction> {
    let scale = 1.0 / (2.0 * PI);
    transform(g, target, 1.0, scale)
}

/// Forward transform onto the centered dual grid.
pub fn fourier_forward(g: &GridFunction) -> Result<GridFunction> {
    fourier_forward_to(g, &g.grid.dual())
}

/// Inverse transform onto the centered dual grid.
pub fn fourier_inverse(g: &GridFunction) -> Result<GridFunction> {
    fourier_inverse_to(g, &g.grid.dual())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel_err(a: &GridFunction, b: &GridFunction) -> f64 {
        let num: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.values.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    fn random_band_limited(grid: &GridSpec, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms: Vec<(Vec<f64>, Vec<f64>, Complex64)> = (0..5)
            .map(|_| {
                let c: Vec<f64> = (0..grid.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let k: Vec<f64> = (0..grid.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                (c, k, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            })
            .collect();
        GridFunction::from_fn(grid.clone(), |x| {
            terms
                .iter()
                .map(|(c, k, a)| {
                    let r2: f64 = x.iter().zip(c).map(|(x, c)| (x - c).powi(2)).sum();
                    let ph: f64 = x.iter().zip(k).map(|(x, k)| x * k).sum();
                    a * Complex64::from_polar((-r2 / 2.0).exp(), ph)
                })
                .sum()
        })
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = GridFunction::zeros(GridSpec::centered(vec![0.5], vec![16]).unwrap());
        assert!(fourier_forward(&g).unwrap().values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn gaussian_transform() {
        let grid = GridSpec::centered(vec![0.25], vec![128]).unwrap();
        let g = GridFunction::from_fn(grid, |x| Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.0));
        let f = fourier_forward(&g).unwrap();
        for (i, v) in f.values.iter().enumerate() {
            let xi = f.grid.coord(0, i);
            if xi.abs() < 6.0 {
                let exact = (2.0 * PI).sqrt() * (-xi * xi / 2.0).exp();
                assert!((v.re - exact).abs() <= 1e-6 * exact.max(1e-3), "{xi}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        for dims in [vec![96usize], vec![40, 36]] {
            let grid = GridSpec::centered(vec![0.4; dims.len()], dims.clone()).unwrap();
            let g = random_band_limited(&grid, 7);
            let f = fourier_forward(&g).unwrap();
            let back = fourier_inverse_to(&f, &g.grid).unwrap();
            assert!(rel_err(&back, &g) < 1e-10);
            let m = dims.len() as i32;
            let ratio = f.l2_norm() / g.l2_norm();
            assert!((ratio / (2.0 * PI).powf(m as f64 / 2.0) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn band_limit_is_enforced() {
        let grid = GridSpec::centered(vec![1.0], vec![8]).unwrap();
        let g = GridFunction::zeros(grid).with_band_limit(4.0);
        assert!(matches!(fourier_forward(&g), Err(Error::GridRule(_))));
    }

    #[test]
    fn symmetric_grid_contains_endpoints() {
        let g = GridSpec::symmetric(&[1.5], &[0.4]).unwrap();
        assert_eq!(g.counts[0], 9);
        assert!((g.coord(0, 8) - 1.5).abs() < 1e-14);
        let w: f64 = g.trapezoid_weights().iter().sum();
        assert!((w - 3.0).abs() < 1e-14);
    }
}
