//! Wave-packet pieces F(chi g) of a density, with g = F^{-1} f on a refined dual grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::extension::FrequencyDensity;
use crate::frames::{Frame, Hypersurface};
use crate::lattice::{Cell, InducedLattice};
use crate::partition::{eval_window, fourier_forward_to, fourier_inverse_to, BumpProfile, GridFunction, GridSpec, Window};

/// A density together with g = F^{-1} f sampled fine enough to resolve windows of scale r.
#[derive(Clone, Debug)]
pub struct Packets {
    pub surface: usize,
    /// Frequency grid of the pieces: the density grid padded with zeros.
    pub frequencies: GridSpec,
    /// g on the dual of `frequencies`.
    pub g: GridFunction,
}

impl Packets {
    /// Pads the density grid until the dual spacing is at most r/4.
    pub fn new(f: &FrequencyDensity, r: f64) -> Result<Self> {
        let grid = f.grid();
        let mut counts = Vec::with_capacity(grid.dim());
        let mut pads = Vec::with_capacity(grid.dim());
        for (&c, &h) in grid.counts.iter().zip(&grid.spacing) {
            let needed = (8.0 * std::f64::consts::PI / (r * h)).ceil() as usize;
            let pad = needed.saturating_sub(c).div_ceil(2);
            pads.push(pad);
            counts.push(c + 2 * pad);
        }
        let origin = grid.origin.iter().zip(&grid.spacing).zip(&pads).map(|((o, h), &p)| o - p as f64 * h).collect();
        let frequencies = GridSpec::new(origin, grid.spacing.clone(), counts.clone())?;
        let mut values = vec![Complex64::new(0.0, 0.0); frequencies.len()];
        let mut idx = vec![0usize; grid.dim()];
        for (flat, v) in f.values().iter().enumerate() {
            crate::quadrature::unflatten(flat, &grid.counts, &mut idx);
            let mut out = 0usize;
            for d in 0..idx.len() {
                out = out * counts[d] + idx[d] + pads[d];
            }
            values[out] = *v;
        }
        let padded = GridFunction::new(frequencies.clone(), values)?;
        let g = fourier_inverse_to(&padded, &frequencies.dual())?;
        Ok(Packets { surface: f.surface, frequencies, g })
    }

    /// The piece F(w g) for window values `w` on the dual grid.
    pub fn piece(&self, w: &[f64]) -> Result<FrequencyDensity> {
        if w.len() != self.g.values.len() {
            return Err(Error::Dimension("window samples do not match the dual grid".into()));
        }
        let mut wg = self.g.clone();
        for (v, c) in wg.values.iter_mut().zip(w) {
            *v *= c;
        }
        Ok(FrequencyDensity::new(self.surface, fourier_forward_to(&wg, &self.frequencies)?))
    }

    /// |m g|^2 with the uniform dual-grid weight, for a multiplier m.
    pub fn weighted_norm_sqr(&self, m: &[f64]) -> f64 {
        let h = self.g.grid.cell_volume();
        self.g.values.iter().zip(m).map(|(v, c)| (c * c) * v.norm_sqr()).sum::<f64>() * h
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.g.grid.len()).map(|i| self.g.grid.point_at(i))
    }
}

/// Induced lattice of H_i in the tangent coordinates of the surface.
pub fn surface_lattice(frame: &Frame, surface: &Hypersurface) -> Result<InducedLattice> {
    InducedLattice::hyperplane_with_basis(frame, surface.index(), surface.tangent())
}

/// Cell window chi_{q'} sampled at the dual-grid points.
pub fn cell_window(bump: &BumpProfile, lattice: &InducedLattice, packets: &Packets, index: &[i64], r: f64) -> Result<Vec<f64>> {
    let cell = Cell::new(index.to_vec(), r, lattice.owner());
    packets.points().map(|y| eval_window(bump, lattice, Window::Cell(&cell), &y)).collect()
}

/// Every index in [-m, m]^dim, lexicographic.
pub fn index_window(dim: usize, m: usize) -> Vec<Vec<i64>> {
    let side = 2 * m + 1;
    let total = side.pow(dim as u32);
    (0..total)
        .map(|mut c| {
            let mut j = vec![0i64; dim];
            for d in (0..dim).rev() {
                j[d] = (c % side) as i64 - m as i64;
                c /= side;
            }
            j
        })
        .collect()
}
