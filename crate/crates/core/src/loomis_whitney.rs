//! Discrete Loomis–Whitney inequalities in the lattice index picture.
//!
//! The ambient lattice is indexed by z in Z^{n+1}; pi_{N_i} deletes coordinate i and the section
//! projection pi keeps coordinates 1..k-1. The frame only fixes dimensions and validates the slab.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{Frame, SlabCondition};
use crate::lattice::{check_section, CellOwner};
use crate::quadrature::{unflatten, Compensated};

/// Ascent factors tried on one lattice value at a time.
const ASCENT_FACTORS: [f64; 3] = [0.0, 0.5, 2.0];

/// Nonnegative values on a finite box of lattice indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeDensity {
    pub owner: CellOwner,
    pub lo: Vec<i64>,
    pub counts: Vec<usize>,
    pub values: Vec<f64>,
}

impl LatticeDensity {
    pub fn new(owner: CellOwner, lo: Vec<i64>, counts: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if lo.len() != counts.len() {
            return Err(Error::Dimension("window corner and counts differ in length".into()));
        }
        if counts.iter().product::<usize>() != values.len() {
            return Err(Error::Dimension("value count does not match the window".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Invalid("lattice density values must be finite and nonnegative".into()));
        }
        Ok(LatticeDensity { owner, lo, counts, values })
    }

    /// The window [-m, m]^dim filled from f.
    pub fn window(owner: CellOwner, dim: usize, m: usize, mut f: impl FnMut(&[i64]) -> f64) -> Result<Self> {
        let side = 2 * m + 1;
        let counts = vec![side; dim];
        let lo = vec![-(m as i64); dim];
        let mut idx = vec![0usize; dim];
        let mut j = vec![0i64; dim];
        let values = (0..side.pow(dim as u32))
            .map(|flat| {
                unflatten(flat, &counts, &mut idx);
                for (a, &i) in idx.iter().enumerate() {
                    j[a] = lo[a] + i as i64;
                }
                f(&j)
            })
            .collect();
        LatticeDensity::new(owner, lo, counts, values)
    }

    /// Unit mass at one index.
    pub fn point_mass(owner: CellOwner, at: &[i64]) -> Self {
        LatticeDensity { owner, lo: at.to_vec(), counts: vec![1; at.len()], values: vec![1.0] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Value at index j, zero outside the box.
    pub fn get(&self, j: &[i64]) -> f64 {
        let mut flat = 0usize;
        for ((&ji, &lo), &c) in j.iter().zip(&self.lo).zip(&self.counts) {
            let off = ji - lo;
            if off < 0 || off as usize >= c {
                return 0.0;
            }
            flat = flat * c + off as usize;
        }
        self.values[flat]
    }

    pub fn l2_norm(&self) -> f64 {
        let mut acc = Compensated::default();
        for v in &self.values {
            acc.add(v * v);
        }
        acc.value().sqrt()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        LatticeDensity::new(self.owner, self.lo.clone(), self.counts.clone(), self.values.iter().map(|v| v * c).collect())
    }

    /// Largest |j|_inf over indices carrying positive mass.
    fn support_radius(&self) -> i64 {
        let mut idx = vec![0usize; self.dim()];
        let mut r = 0i64;
        for (flat, v) in self.values.iter().enumerate() {
            if *v > 0.0 {
                unflatten(flat, &self.counts, &mut idx);
                for (a, &i) in idx.iter().enumerate() {
                    r = r.max((self.lo[a] + i as i64).abs());
                }
            }
        }
        r
    }

    /// Dense copy on [-m, m]^dim.
    fn dense(&self, m: usize) -> Vec<f64> {
        let side = 2 * m + 1;
        let d = self.dim();
        let counts = vec![side; d];
        let mut idx = vec![0usize; d];
        let mut j = vec![0i64; d];
        (0..side.pow(d as u32))
            .map(|flat| {
                unflatten(flat, &counts, &mut idx);
                for (a, &i) in idx.iter().enumerate() {
                    j[a] = i as i64 - m as i64;
                }
                self.get(&j)
            })
            .collect()
    }
}

/// Which densities read which coordinates of z, and the outer exponent.
#[derive(Clone, Debug)]
struct Problem {
    dim: usize,
    side: usize,
    keeps: Vec<Vec<usize>>,
    p: f64,
}

impl Problem {
    fn plain(n: usize, m: usize) -> Self {
        let keeps = (0..=n).map(|i| (0..=n).filter(|&c| c != i).collect()).collect();
        Problem { dim: n + 1, side: 2 * m + 1, keeps, p: 2.0 / n as f64 }
    }

    fn refined(n: usize, k: usize, m: usize) -> Self {
        let mut keeps = vec![(1..k).collect::<Vec<usize>>()];
        for i in 1..k {
            keeps.push((0..=n).filter(|&c| c != i).collect());
        }
        Problem { dim: n + 1, side: 2 * m + 1, keeps, p: 2.0 / (k - 1) as f64 }
    }

    fn len(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    fn density_len(&self, i: usize) -> usize {
        self.side.pow(self.keeps[i].len() as u32)
    }

    /// Flat index of the projection of z (given as window offsets) for density i.
    fn project(&self, i: usize, z: &[usize]) -> usize {
        self.keeps[i].iter().fold(0, |acc, &c| acc * self.side + z[c])
    }

    /// P(z)^p for every z in the window.
    fn terms(&self, dens: &[Vec<f64>]) -> Vec<f64> {
        let counts = vec![self.side; self.dim];
        (0..self.len())
            .into_par_iter()
            .map_init(
                || vec![0usize; self.dim],
                |z, flat| {
                    unflatten(flat, &counts, z);
                    let mut prod = 1.0;
                    for (i, d) in dens.iter().enumerate() {
                        prod *= d[self.project(i, z)];
                        if prod == 0.0 {
                            return 0.0;
                        }
                    }
                    prod.powf(self.p)
                },
            )
            .collect()
    }

    fn lhs(&self, dens: &[Vec<f64>]) -> f64 {
        let mut acc = Compensated::default();
        for t in self.terms(dens) {
            acc.add(t);
        }
        acc.value().powf(1.0 / self.p)
    }

    fn ratio(&self, dens: &[Vec<f64>]) -> Result<f64> {
        let mut rhs = 1.0;
        for (i, d) in dens.iter().enumerate() {
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::ZeroNorm(format!("density {i}")));
            }
            rhs *= norm;
        }
        Ok(self.lhs(dens) / rhs)
    }

    /// Window offsets z whose projection for density i is the flat index y.
    fn fibre(&self, i: usize, y: usize) -> Vec<usize> {
        let kept = &self.keeps[i];
        let free: Vec<usize> = (0..self.dim).filter(|c| !kept.contains(c)).collect();
        let mut fixed = vec![0usize; kept.len()];
        unflatten(y, &vec![self.side; kept.len()], &mut fixed);
        let free_counts = vec![self.side; free.len()];
        let mut fv = vec![0usize; free.len()];
        let mut z = vec![0usize; self.dim];
        (0..self.side.pow(free.len() as u32))
            .map(|f| {
                unflatten(f, &free_counts, &mut fv);
                for (a, &c) in kept.iter().enumerate() {
                    z[c] = fixed[a];
                }
                for (a, &c) in free.iter().enumerate() {
                    z[c] = fv[a];
                }
                z.iter().fold(0, |acc, &v| acc * self.side + v)
            })
            .collect()
    }

    /// Coordinate ascent from a starting tuple; returns the final ratio.
    fn ascend(&self, dens: &mut [Vec<f64>]) -> f64 {
        let mut terms = self.terms(dens);
        let mut sum: f64 = terms.iter().sum();
        let mut norms2: Vec<f64> = dens.iter().map(|d| d.iter().map(|v| v * v).sum()).collect();
        let value = |sum: f64, norms2: &[f64]| -> f64 {
            let rhs: f64 = norms2.iter().map(|n| n.sqrt()).product();
            if rhs == 0.0 {
                0.0
            } else {
                sum.max(0.0).powf(1.0 / self.p) / rhs
            }
        };
        let fibres: Vec<Vec<Vec<usize>>> = (0..dens.len()).map(|i| (0..self.density_len(i)).map(|y| self.fibre(i, y)).collect()).collect();
        let mut best = value(sum, &norms2);
        loop {
            let mut improved = false;
            for i in 0..dens.len() {
                for y in 0..dens[i].len() {
                    let v = dens[i][y];
                    if v == 0.0 {
                        continue;
                    }
                    let line: f64 = fibres[i][y].iter().map(|&z| terms[z]).sum();
                    let mut choice = None;
                    for &t in &ASCENT_FACTORS {
                        let s = sum + (t.powf(self.p) - 1.0) * line;
                        let mut n2 = norms2.clone();
                        n2[i] += (t * t - 1.0) * v * v;
                        let cand = value(s, &n2);
                        if cand > best * (1.0 + 1e-12) {
                            best = cand;
                            choice = Some((t, s, n2));
                        }
                    }
                    if let Some((t, s, n2)) = choice {
                        dens[i][y] = v * t;
                        let tp = t.powf(self.p);
                        for &z in &fibres[i][y] {
                            terms[z] *= tp;
                        }
                        sum = s;
                        norms2 = n2;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
            // resynchronise against drift from incremental updates
            terms = self.terms(dens);
            sum = terms.iter().sum();
            norms2 = dens.iter().map(|d| d.iter().map(|v| v * v).sum()).collect();
            best = value(sum, &norms2);
        }
        best
    }
}

fn check_window(d: &LatticeDensity, m: usize, expected_dim: usize, label: &str) -> Result<()> {
    if d.dim() != expected_dim {
        return Err(Error::Dimension(format!("{label} has dimension {}, expected {expected_dim}", d.dim())));
    }
    if d.support_radius() > m as i64 {
        return Err(Error::Invalid(format!("{label} is supported outside the window |j| <= {m}")));
    }
    Ok(())
}

fn plain_inputs(frame: &Frame, densities: &[LatticeDensity], m: usize) -> Result<(Problem, Vec<Vec<f64>>)> {
    let d = frame.dim();
    if densities.len() != d {
        return Err(Error::Dimension(format!("expected {d} densities, got {}", densities.len())));
    }
    for (i, g) in densities.iter().enumerate() {
        if g.owner != CellOwner::Hyperplane(i) {
            return Err(Error::OwnerMismatch(format!("density {i} is owned by {:?}", g.owner)));
        }
        check_window(g, m, d - 1, &format!("density {i}"))?;
    }
    Ok((Problem::plain(d - 1, m), densities.iter().map(|g| g.dense(m)).collect()))
}

/// |prod_i g_i(pi_{N_i} z)|_{l^{2/n}} / prod_i |g_i|_{l^2} over the window |z|_inf <= m.
pub fn discrete_lw_ratio(frame: &Frame, densities: &[LatticeDensity], m: usize) -> Result<f64> {
    let (problem, dense) = plain_inputs(frame, densities, m)?;
    problem.ratio(&dense)
}

fn refined_inputs(frame: &Frame, slab: &SlabCondition, g1: &LatticeDensity, others: &[LatticeDensity], m: usize) -> Result<(Problem, Vec<Vec<f64>>)> {
    let k = check_section(frame, slab)?;
    let n = frame.dim() - 1;
    if k < 2 {
        return Err(Error::Invalid(format!("refined inequality needs k >= 2, got {k}")));
    }
    if others.len() != k - 1 {
        return Err(Error::Dimension(format!("expected {} transverse densities, got {}", k - 1, others.len())));
    }
    if g1.owner != CellOwner::Section {
        return Err(Error::OwnerMismatch(format!("g1 is owned by {:?}", g1.owner)));
    }
    check_window(g1, m, k - 1, "g1")?;
    for (a, g) in others.iter().enumerate() {
        if g.owner != CellOwner::Hyperplane(a + 1) {
            return Err(Error::OwnerMismatch(format!("density {} is owned by {:?}", a + 1, g.owner)));
        }
        check_window(g, m, n, &format!("density {}", a + 1))?;
    }
    let mut dense = vec![g1.dense(m)];
    dense.extend(others.iter().map(|g| g.dense(m)));
    Ok((Problem::refined(n, k, m), dense))
}

/// |g_1(pi z) prod_{i=2}^k g_i(pi_{N_i} z)|_{l^{2/(k-1)}} / (|g_1| prod |g_i|) over the window.
/// g_1 lives on the section lattice (coordinates 1..k-1), others[a] on the hyperplane a+1.
pub fn refined_lw_ratio(frame: &Frame, slab: &SlabCondition, g1: &LatticeDensity, others: &[LatticeDensity], m: usize) -> Result<f64> {
    let (problem, dense) = refined_inputs(frame, slab, g1, others, m)?;
    problem.ratio(&dense)
}

/// The refined ratio recomputed slice by slice: for each fixed z'' = (z_k, .., z_n) the slice is
/// a plain k-dimensional Loomis–Whitney sum, and the slices are combined in l^{2/(k-1)}.
pub fn refined_lw_by_slices(frame: &Frame, slab: &SlabCondition, g1: &LatticeDensity, others: &[LatticeDensity], m: usize) -> Result<f64> {
    let (full, dense) = refined_inputs(frame, slab, g1, others, m)?;
    let n = frame.dim() - 1;
    let k = slab.k();
    let side = full.side;
    let slice_problem = Problem::plain(k - 1, m);
    let outer = n + 1 - k;
    let mut acc = Compensated::default();
    let mut zpp = vec![0usize; outer];
    for s in 0..side.pow(outer as u32) {
        unflatten(s, &vec![side; outer], &mut zpp);
        let mut slice = vec![dense[0].clone()];
        for d in &dense[1..] {
            // d is indexed by (z_0..z_{k-1} without z_i, z_k..z_n); the trailing block is z''
            let inner = side.pow((k - 1) as u32);
            let offset = zpp.iter().fold(0, |acc, &v| acc * side + v);
            slice.push((0..inner).map(|y| d[y * side.pow(outer as u32) + offset]).collect());
        }
        acc.add(slice_problem.lhs(&slice).powf(full.p));
    }
    let rhs: f64 = dense.iter().map(|d| d.iter().map(|v| v * v).sum::<f64>().sqrt()).product();
    if rhs == 0.0 {
        return Err(Error::ZeroNorm("refined densities".into()));
    }
    Ok(acc.value().powf(1.0 / full.p) / rhs)
}

/// The plain ratio recomputed by slicing, for n <= 2. For n = 1 the product is a tensor product;
/// for n = 2 each slice z_2 = const is the bilinear form g_1(., z_2)^T G_2 g_0(., z_2).
pub fn discrete_lw_by_slices(frame: &Frame, densities: &[LatticeDensity], m: usize) -> Result<f64> {
    let (problem, dense) = plain_inputs(frame, densities, m)?;
    let side = problem.side;
    let norm = |d: &[f64]| d.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rhs: f64 = dense.iter().map(|d| norm(d)).product();
    if rhs == 0.0 {
        return Err(Error::ZeroNorm("plain densities".into()));
    }
    let lhs = match problem.dim - 1 {
        1 => norm(&dense[0]) * norm(&dense[1]),
        2 => {
            let mut acc = Compensated::default();
            for z2 in 0..side {
                for z0 in 0..side {
                    let a = dense[1][z0 * side + z2];
                    if a == 0.0 {
                        continue;
                    }
                    let row: f64 = (0..side).map(|z1| dense[2][z0 * side + z1] * dense[0][z1 * side + z2]).sum();
                    acc.add(a * row);
                }
            }
            acc.value()
        }
        n => return Err(Error::Invalid(format!("slicing recomputation implemented for n <= 2, got {n}"))),
    };
    Ok(lhs / rhs)
}

/// Upper bound for the plain left side obtained by the first Cauchy–Schwarz step of the slicing
/// proof, divided by the right side; lies between the ratio and 1.
pub fn lw_slicing_bound(frame: &Frame, densities: &[LatticeDensity], m: usize) -> Result<f64> {
    let (problem, dense) = plain_inputs(frame, densities, m)?;
    let side = problem.side;
    let norms: Vec<f64> = dense.iter().map(|d| d.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    if norms.iter().any(|v| *v == 0.0) {
        return Err(Error::ZeroNorm("plain densities".into()));
    }
    let rhs: f64 = norms.iter().product();
    match problem.dim - 1 {
        // |g_0 (x) g_1|_2 = |g_0||g_1|
        1 => Ok(1.0),
        // sum_{z2} sum_{z0,z1} g0(z1,z2) g1(z0,z2) g2(z0,z1) <= |g2| sum_{z2} |g0(.,z2)| |g1(.,z2)|
        2 => {
            let mut acc = Compensated::default();
            for z2 in 0..side {
                let a: f64 = (0..side).map(|z1| dense[0][z1 * side + z2].powi(2)).sum::<f64>().sqrt();
                let b: f64 = (0..side).map(|z0| dense[1][z0 * side + z2].powi(2)).sum::<f64>().sqrt();
                acc.add(a * b);
            }
            Ok(norms[2] * acc.value() / rhs)
        }
        n => Err(Error::Invalid(format!("slicing bound implemented for n <= 2, got {n}"))),
    }
}

/// Which inequality the constant search targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LwMode {
    Plain,
    /// Refined inequality with slab dimension k.
    Refined { k: usize },
}

/// Largest ratio found over random nonnegative tuples followed by coordinate ascent.
/// Trial t draws from the ChaCha8 stream t of `seed`; the reduction is an ordered max.
pub fn lw_constant_oracle(frame: &Frame, m: usize, trials: usize, mode: LwMode, seed: u64) -> Result<f64> {
    if m > 6 {
        return Err(Error::Invalid(format!("window m = {m} exceeds 6")));
    }
    let n = frame.dim() - 1;
    let problem = match mode {
        LwMode::Plain => Problem::plain(n, m),
        LwMode::Refined { k } => {
            if !(2..=n).contains(&k) {
                return Err(Error::Invalid(format!("refined mode needs 2 <= k <= n, got {k}")));
            }
            Problem::refined(n, k, m)
        }
    };
    let results: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let mut dens: Vec<Vec<f64>> = (0..problem.keeps.len())
                .map(|i| {
                    // skewed draws so that some trials start near sparse configurations
                    (0..problem.density_len(i)).map(|_| rng.gen::<f64>().powi(3) + 1e-3).collect()
                })
                .collect();
            problem.ascend(&mut dens)
        })
        .collect();
    Ok(results.into_iter().fold(0.0, f64::max))
}

/// Outcome of the sequence Hölder check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

fn lp(values: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p.is_infinite() {
        return values.fold(0.0, |a, v| a.max(v.abs()));
    }
    let mut acc = Compensated::default();
    for v in values {
        acc.add(v.abs().powf(p));
    }
    acc.value().powf(1.0 / p)
}

/// |a_i b_i|_{l^{2/n}} <= |a|_{l^2} |b|_{l^{2/(n-1)}} with constant 1.
pub fn sequence_holder_check(a: &[f64], b: &[f64], n: u32) -> Result<HolderCheck> {
    if n == 0 {
        return Err(Error::Invalid("n must be at least 1".into()));
    }
    if a.len() != b.len() {
        return Err(Error::Dimension("sequences differ in length".into()));
    }
    let p_b = if n == 1 { f64::INFINITY } else { 2.0 / (n - 1) as f64 };
    let lhs = lp(a.iter().zip(b).map(|(x, y)| x * y), 2.0 / n as f64);
    let rhs = lp(a.iter().copied(), 2.0) * lp(b.iter().copied(), p_b);
    Ok(HolderCheck { lhs, rhs, passed: lhs <= rhs * (1.0 + 1e-12) + 1e-300 })
}

/// |<d(q)/R>^{-n^2/2}|_{l^{2/(n-1)}} over cells |j|_inf <= m of an n-dimensional lattice, with
/// d(q)/R = max(0, |j|_inf - 1). Bounded uniformly in m.
pub fn companion_window_sum(n: u32, m: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Invalid("n must be at least 1".into()));
    }
    let weight = |t: usize| -> f64 {
        let d = t.saturating_sub(1) as f64;
        (1.0 + d * d).powf(-((n * n) as f64) / 4.0)
    };
    if n == 1 {
        return Ok(weight(0));
    }
    let p = 2.0 / (n - 1) as f64;
    let mut acc = Compensated::default();
    for t in 0..=m {
        // number of j in Z^n with |j|_inf = t
        let shell = if t == 0 { 1.0 } else { ((2 * t + 1) as f64).powi(n as i32) - ((2 * t - 1) as f64).powi(n as i32) };
        acc.add(shell * weight(t).powf(p));
    }
    Ok(acc.value().powf(1.0 / p))
}
