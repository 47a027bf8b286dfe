//! Spatial grids, sampled fields, quasi-norms and the binary field dump format.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::Frame;
use crate::quadrature::{unflatten, Compensated};

const MAGIC: &[u8; 4] = b"MRLF";
const VERSION: u32 = 1;
const CHUNK: usize = 4096;

/// Points origin + sum_a idx_a * axes[a] in R^{n+1}; the axes may be oblique and fewer
/// than the ambient dimension (slices).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub origin: Vec<f64>,
    pub axes: Vec<Vec<f64>>,
    pub counts: Vec<usize>,
}

impl SpatialGrid {
    pub fn new(origin: Vec<f64>, axes: Vec<Vec<f64>>, counts: Vec<usize>) -> Result<Self> {
        let d = origin.len();
        if axes.len() != counts.len() || axes.iter().any(|a| a.len() != d) || axes.is_empty() || axes.len() > d {
            return Err(Error::Dimension("spatial grid axes do not match the ambient dimension".into()));
        }
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::Invalid("spatial grid counts must be nonzero".into()));
        }
        let g = SpatialGrid { origin, axes, counts };
        if g.cell_volume() <= 0.0 {
            return Err(Error::Invalid("degenerate spatial grid axes".into()));
        }
        Ok(g)
    }

    /// Midpoint grid on the cube center + [-side/2, side/2]^{d} with spacing at most h.
    pub fn cube(center: &[f64], side: f64, h: f64) -> Result<Self> {
        let d = center.len();
        let count = (side / h - 1e-9).ceil().max(1.0) as usize;
        let step = side / count as f64;
        let origin = center.iter().map(|c| c - side / 2.0 + step / 2.0).collect();
        let axes = (0..d).map(|a| (0..d).map(|b| if a == b { step } else { 0.0 }).collect()).collect();
        SpatialGrid::new(origin, axes, vec![count; d])
    }

    /// Midpoint grid on the lattice cell B(center_u + [-side/2, side/2]^{d}), B the frame basis,
    /// with lattice-coordinate spacing at most h.
    pub fn lattice_cell(frame: &Frame, center_u: &[f64], side: f64, h: f64) -> Result<Self> {
        let d = frame.dim();
        if center_u.len() != d {
            return Err(Error::Dimension("cell center has wrong dimension".into()));
        }
        let count = (side / h - 1e-9).ceil().max(1.0) as usize;
        let step = side / count as f64;
        let u0 = DVector::from_iterator(d, center_u.iter().map(|c| c - side / 2.0 + step / 2.0));
        let origin = frame.basis() * u0;
        let axes = (0..d).map(|a| frame.normal(a).iter().map(|v| v * step).collect()).collect();
        SpatialGrid::new(origin.iter().copied().collect(), axes, vec![count; d])
    }

    pub fn ambient_dim(&self) -> usize {
        self.origin.len()
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

    /// Volume of one grid cell, sqrt(det Gram(axes)).
    pub fn cell_volume(&self) -> f64 {
        let k = self.axes.len();
        let gram = DMatrix::from_fn(k, k, |r, c| self.axes[r].iter().zip(&self.axes[c]).map(|(a, b)| a * b).sum::<f64>());
        gram.determinant().max(0.0).sqrt()
    }

    /// Largest axis step length.
    pub fn max_step(&self) -> f64 {
        self.axes.iter().map(|a| a.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }

    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        let mut p = self.origin.clone();
        for (a, &i) in idx.iter().enumerate() {
            for (pv, av) in p.iter_mut().zip(&self.axes[a]) {
                *pv += i as f64 * av;
            }
        }
        p
    }

    pub fn point_at(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0; self.dim()];
        unflatten(flat, &self.counts, &mut idx);
        self.point(&idx)
    }

    /// Largest |x| over the grid (attained at a corner).
    pub fn max_radius(&self) -> f64 {
        let corners = 1usize << self.dim();
        (0..corners)
            .map(|c| {
                let idx: Vec<usize> = (0..self.dim()).map(|a| if c >> a & 1 == 1 { self.counts[a] - 1 } else { 0 }).collect();
                self.point(&idx).iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Sampled complex field on a spatial grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub grid: SpatialGrid,
    pub values: Vec<Complex64>,
}

/// Index sub-box [lo, hi) of a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexBox {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
}

impl Field {
    pub fn new(grid: SpatialGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension("field sample count differs from its grid".into()));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        let n = grid.len();
        Field { grid, values: vec![Complex64::new(0.0, 0.0); n] }
    }

    /// Pointwise product on a shared grid.
    pub fn product(&self, other: &Field) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::Dimension("fields live on different grids".into()));
        }
        let values = self.values.par_iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(Field { grid: self.grid.clone(), values })
    }

    pub fn scaled(&self, c: Complex64) -> Field {
        Field { grid: self.grid.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::Dimension("fields live on different grids".into()));
        }
        Ok(Field { grid: self.grid.clone(), values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// (sum |F|^p h^{n+1})^{1/p} over the region (the whole grid by default); max for p = inf.
pub fn lp_quasinorm(field: &Field, p: f64, region: Option<&IndexBox>) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Invalid(format!("exponent must be positive, got {p}")));
    }
    let counts = &field.grid.counts;
    let region = match region {
        Some(b) => {
            if b.lo.len() != counts.len() || b.hi.len() != counts.len() || b.lo.iter().zip(&b.hi).zip(counts).any(|((l, h), c)| l >= h || h > c) {
                return Err(Error::Invalid("region exceeds the field grid".into()));
            }
            Some(b)
        }
        None => None,
    };
    let inside = |flat: usize| -> bool {
        match region {
            None => true,
            Some(b) => {
                let mut idx = vec![0; counts.len()];
                unflatten(flat, counts, &mut idx);
                idx.iter().zip(&b.lo).zip(&b.hi).all(|((i, l), h)| i >= l && i < h)
            }
        }
    };
    if p.is_infinite() {
        return Ok(field
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| inside(*i))
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max));
    }
    // fixed chunking keeps the reduction independent of the thread count
    let partials: Vec<f64> = field
        .values
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut acc = Compensated::default();
            for (k, v) in chunk.iter().enumerate() {
                if inside(c * CHUNK + k) {
                    acc.add(v.norm().powf(p));
                }
            }
            acc.value()
        })
        .collect();
    let mut acc = Compensated::default();
    for s in partials {
        acc.add(s);
    }
    Ok((acc.value() * field.grid.cell_volume()).powf(1.0 / p))
}

fn put_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_f64(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

/// Writes a field in the little-endian `MRLF` format described in `docs/field-format.md`.
pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    let mut buf: Vec<u8> = Vec::with_capacity(64 + 16 * field.values.len());
    let g = &field.grid;
    let io = |e| Error::io(path, e);
    buf.extend_from_slice(MAGIC);
    put_u32(&mut buf, VERSION).map_err(io)?;
    put_u32(&mut buf, g.dim() as u32).map_err(io)?;
    put_u32(&mut buf, g.ambient_dim() as u32).map_err(io)?;
    for &c in &g.counts {
        put_u64(&mut buf, c as u64).map_err(io)?;
    }
    for &o in &g.origin {
        put_f64(&mut buf, o).map_err(io)?;
    }
    for a in &g.axes {
        for &v in a {
            put_f64(&mut buf, v).map_err(io)?;
        }
    }
    for v in &field.values {
        put_f64(&mut buf, v.re).map_err(io)?;
        put_f64(&mut buf, v.im).map_err(io)?;
    }
    std::fs::write(path, buf).map_err(io)
}

/// Reads a field written by [`write_field`].
pub fn read_field(path: &Path) -> Result<Field> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let mut pos = 0usize;
    let bad = || Error::Invalid(format!("{} is not a valid field dump", path.display()));
    let mut take = |n: usize| -> Result<&[u8]> {
        if pos + n > bytes.len() {
            return Err(bad());
        }
        let s = &bytes[pos..pos + n];
        pos += n;
        Ok(s)
    };
    if take(4)? != MAGIC {
        return Err(bad());
    }
    let u32_of = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap());
    let version = u32_of(take(4)?);
    if version != VERSION {
        return Err(bad());
    }
    let dim = u32_of(take(4)?) as usize;
    let ambient = u32_of(take(4)?) as usize;
    let mut counts = Vec::with_capacity(dim);
    for _ in 0..dim {
        counts.push(u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize);
    }
    let mut f64s = |n: usize| -> Result<Vec<f64>> {
        (0..n).map(|_| Ok(f64::from_le_bytes(take(8)?.try_into().unwrap()))).collect()
    };
    let origin = f64s(ambient)?;
    let flat_axes = f64s(dim * ambient)?;
    let axes = flat_axes.chunks(ambient.max(1)).map(|c| c.to_vec()).collect();
    let grid = SpatialGrid::new(origin, axes, counts)?;
    let raw = f64s(2 * grid.len())?;
    let values = raw.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Field::new(grid, values)
}
