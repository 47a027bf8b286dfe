//! Sampled frequency densities on a surface domain and their margins.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::Hypersurface;
use crate::partition::{GridFunction, GridSpec};
use crate::quadrature::Compensated;

/// Modulus below which samples count as outside the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// A density f_i sampled on a grid in the tangent coordinates of surface i.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyDensity {
    pub surface: usize,
    pub samples: GridFunction,
    /// Number of leading coordinates forming xi' in the refined setting; the rest are xi''.
    pub split: Option<usize>,
}

impl FrequencyDensity {
    pub fn new(surface: usize, samples: GridFunction) -> Self {
        FrequencyDensity { surface, samples, split: None }
    }

    /// Samples f on the grid and zeroes everything outside the surface domain.
    pub fn from_fn(surface: &Hypersurface, grid: GridSpec, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Result<Self> {
        if grid.dim() != surface.dim() {
            return Err(Error::Dimension("density grid dimension differs from the surface".into()));
        }
        let domain = surface.domain();
        let samples = GridFunction::from_fn(grid, |xi| if domain.contains(xi) { f(xi) } else { Complex64::new(0.0, 0.0) });
        Ok(FrequencyDensity::new(surface.index(), samples))
    }

    pub fn with_split(mut self, split: usize) -> Result<Self> {
        if split == 0 || split > self.grid().dim() {
            return Err(Error::Invalid(format!("split {split} outside 1..={}", self.grid().dim())));
        }
        self.split = Some(split);
        Ok(self)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.samples.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.samples.values
    }

    /// L^2 norm with trapezoid weights (the weights used by the extension quadrature).
    pub fn l2_norm(&self) -> f64 {
        let w = self.grid().trapezoid_weights();
        let mut acc = Compensated::default();
        for (v, wi) in self.values().iter().zip(&w) {
            acc.add(wi * v.norm_sqr());
        }
        acc.value().sqrt()
    }

    /// L^1 norm with trapezoid weights.
    pub fn l1_norm(&self) -> f64 {
        let w = self.grid().trapezoid_weights();
        let mut acc = Compensated::default();
        for (v, wi) in self.values().iter().zip(&w) {
            acc.add(wi * v.norm());
        }
        acc.value()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.samples.values.par_iter_mut().for_each(|v| *v *= c);
        out
    }

    /// a f + b g on a shared grid.
    pub fn combine(&self, a: Complex64, other: &FrequencyDensity, b: Complex64) -> Result<Self> {
        if self.grid() != other.grid() {
            return Err(Error::Dimension("densities live on different grids".into()));
        }
        let mut out = self.clone();
        for (v, w) in out.samples.values.iter_mut().zip(other.values()) {
            *v = a * *v + b * w;
        }
        Ok(out)
    }

    /// Indices of samples above the support threshold.
    pub fn support(&self) -> Vec<usize> {
        self.values()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > SUPPORT_THRESHOLD)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Margin of a density relative to the ball of radius 2 delta.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub margin: f64,
    /// Set when the support was empty and the margin defaulted to 2 delta.
    pub empty_support: bool,
}

/// Plain: dist(supp f, B(0, 2 delta)^c). Refined: inf over xi'' slices of the same distance
/// measured in the xi' variables only.
pub fn margin_of(f: &FrequencyDensity, delta: f64, refined: bool) -> Result<MarginReport> {
    if !(delta > 0.0) {
        return Err(Error::Invalid("delta must be positive".into()));
    }
    let split = if refined {
        Some(f.split.ok_or_else(|| Error::Invalid("refined margin needs a xi'/xi'' split".into()))?)
    } else {
        None
    };
    let grid = f.grid();
    let support = f.support();
    if support.is_empty() {
        return Ok(MarginReport { margin: 2.0 * delta, empty_support: true });
    }
    let take = split.unwrap_or(grid.dim());
    let reach = support
        .iter()
        .map(|&i| {
            let p = grid.point_at(i);
            p[..take].iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max);
    Ok(MarginReport { margin: (2.0 * delta - reach).max(0.0), empty_support: false })
}
