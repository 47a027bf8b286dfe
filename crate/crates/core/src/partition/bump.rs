//! The radial bump chi_0^m = c |psi-check|^2 with Fourier support in the unit ball.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{compensated_sum, composite_gauss};

/// Table resolution in the radial variable.
pub const TABLE_STEP: f64 = 1.0 / 128.0;
/// Radius covered by the table; beyond it the far-field model takes over.
pub const TABLE_RADIUS: f64 = 320.0;
/// Largest weight order the decay model is sized for.
pub const N_MAX: u32 = 4;

const PANELS: usize = 24;
const ORDER: usize = 20;

/// The mollifier exp(-1/(1 - |2 xi|^2)) on |xi| < 1/2.
pub fn mollifier(rho: f64) -> f64 {
    let s = 1.0 - 4.0 * rho * rho;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// Surface area of the unit sphere S^{d} in R^{d+1}.
pub fn sphere_area(d: usize) -> f64 {
    match d {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (d as f64 - 1.0) * sphere_area(d - 2),
    }
}

/// Tabulated radial profile of chi_0^m with a polynomial far-field model.
#[derive(Debug)]
pub struct BumpProfile {
    dim: usize,
    table: Vec<f64>,
    /// envelope[l] = sup of the table from index l on (including the far field).
    envelope: Vec<f64>,
    decay_exponent: i32,
    decay_constant: f64,
    normalization: f64,
}

impl BumpProfile {
    /// Builds the profile for dimension m >= 1.
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Invalid("bump dimension must be at least 1".into()));
        }
        let (us, uw) = composite_gauss(0.0, 0.5, PANELS, ORDER);
        // projection of psi onto one axis: P(u) = int_{R^{m-1}} psi(sqrt(u^2 + |v|^2)) dv
        let proj: Vec<f64> = us
            .iter()
            .map(|&u| {
                if m == 1 {
                    return mollifier(u);
                }
                let top = (0.25 - u * u).max(0.0).sqrt();
                let (ss, sw) = composite_gauss(0.0, top, 8, ORDER);
                let inner = compensated_sum(
                    ss.iter()
                        .zip(&sw)
                        .map(|(&s, &w)| w * mollifier((u * u + s * s).sqrt()) * s.powi(m as i32 - 2)),
                );
                sphere_area(m - 2) * inner
            })
            .collect();
        let (rs, rw) = composite_gauss(0.0, 0.5, PANELS, ORDER);
        let psi_sq = sphere_area(m - 1)
            * compensated_sum(rs.iter().zip(&rw).map(|(&r, &w)| w * mollifier(r).powi(2) * r.powi(m as i32 - 1)));
        let normalization = 1.0 / ((2.0 * PI).powi(m as i32) * psi_sq);
        let len = (TABLE_RADIUS / TABLE_STEP).round() as usize + 1;
        let table: Vec<f64> = (0..len)
            .into_par_iter()
            .map(|l| {
                let t = l as f64 * TABLE_STEP;
                let v = 2.0 * compensated_sum(us.iter().zip(&uw).zip(&proj).map(|((&u, &w), &p)| w * p * (t * u).cos()));
                normalization * v * v
            })
            .collect();
        let decay_exponent = 12.max(2 * N_MAX as i32 + m as i32 + 2);
        let half = len / 2;
        let decay_constant = (half..len)
            .map(|l| table[l] * (l as f64 * TABLE_STEP).powi(decay_exponent))
            .fold(0.0, f64::max);
        let tail_start = decay_constant * TABLE_RADIUS.powi(-decay_exponent);
        let mut envelope = vec![0.0; len];
        let mut run = tail_start;
        for l in (0..len).rev() {
            run = run.max(table[l]);
            envelope[l] = run;
        }
        Ok(BumpProfile { dim: m, table, envelope, decay_exponent, decay_constant, normalization })
    }

    /// Process-wide cached profile for dimension m.
    pub fn shared(m: usize) -> Result<Arc<BumpProfile>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<BumpProfile>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(b) = cache.lock().expect("bump cache").get(&m) {
            return Ok(b.clone());
        }
        let b = Arc::new(BumpProfile::new(m)?);
        cache.lock().expect("bump cache").entry(m).or_insert(b.clone());
        Ok(b)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The constant c = 1 / ((2 pi)^m |psi|^2).
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn decay_exponent(&self) -> i32 {
        self.decay_exponent
    }

    pub fn decay_constant(&self) -> f64 {
        self.decay_constant
    }

    pub fn peak(&self) -> f64 {
        self.table[0]
    }

    /// chi_0^m at radius rho >= 0.
    pub fn radial(&self, rho: f64) -> f64 {
        let rho = rho.abs();
        let t = rho / TABLE_STEP;
        let l = t.floor() as isize;
        let last = self.table.len() as isize - 1;
        if l + 2 > last {
            if rho >= TABLE_RADIUS {
                return self.decay_constant * rho.powi(-self.decay_exponent);
            }
            return self.table[last as usize].max(0.0);
        }
        let s = t - l as f64;
        let at = |k: isize| self.table[k.unsigned_abs()];
        let (a, b, c, d) = (at(l - 1), at(l), at(l + 1), at(l + 2));
        // four-point Lagrange interpolation on nodes -1, 0, 1, 2
        let v = -a * s * (s - 1.0) * (s - 2.0) / 6.0 + b * (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0
            - c * (s + 1.0) * s * (s - 2.0) / 2.0
            + d * (s + 1.0) * s * (s - 1.0) / 6.0;
        v.max(0.0)
    }

    /// chi_0^m at a point of R^m.
    pub fn eval(&self, y: &[f64]) -> f64 {
        self.radial(y.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// Monotone envelope sup_{rho' >= rho} chi_0^m(rho').
    pub fn envelope(&self, rho: f64) -> f64 {
        let rho = rho.max(0.0);
        if rho >= TABLE_RADIUS {
            return self.decay_constant * rho.powi(-self.decay_exponent);
        }
        self.envelope[(rho / TABLE_STEP).floor() as usize]
    }

    /// Bound on sum_{|j|_inf > J} sup chi_q at any point, for windows on Z^m.
    pub fn tail_bound(&self, j: usize) -> f64 {
        self.weighted_tail_bound(j, 1.0, 0, 1.0)
    }

    /// Bound on sum_{|j|_inf > J} chi^power * <stretch * (s + 1/2)>^{weight} over shells.
    pub(crate) fn weighted_tail_bound(&self, j: usize, power: f64, weight: i32, stretch: f64) -> f64 {
        let m = self.dim as i32;
        let shell = |s: f64| (2.0 * s + 1.0).powi(m) - (2.0 * s - 1.0).powi(m);
        let w = |s: f64| (1.0 + (stretch * (s + 0.5)).powi(2)).powf(weight as f64 / 2.0);
        let mut acc = 0.0;
        let cutoff = 200_000usize;
        for s in (j + 1)..cutoff {
            let sf = s as f64;
            acc += shell(sf) * self.envelope(sf - 0.5).powf(power) * w(sf);
        }
        // remaining shells through the far-field model, bounded by an integral
        let s0 = cutoff as f64 - 1.5;
        let q = power * self.decay_exponent as f64 - (m - 1) as f64 - weight.max(0) as f64;
        if q > 1.0 {
            let amp = self.decay_constant.powf(power) * 2.0 * m as f64 * 3f64.powi(m - 1) * (1.0 + stretch * stretch).powf(weight.max(0) as f64 / 2.0) * 2f64.powf(weight.max(0) as f64);
            acc += amp * s0.powf(1.0 - q) / (q - 1.0);
        } else {
            return f64::INFINITY;
        }
        acc
    }

    /// Smallest J whose tail bound is at most `tol`.
    pub fn truncation_for(&self, tol: f64) -> usize {
        let mut j = 1usize;
        while self.tail_bound(j) > tol {
            j = (j as f64 * 1.25).ceil() as usize;
            if j > 100_000 {
                break;
            }
        }
        let mut lo = (j as f64 / 1.25).floor() as usize;
        while lo < j && self.tail_bound(lo) > tol {
            lo += 1;
        }
        lo.min(j)
    }

    /// Integral of the profile over R^m (Simpson on the table plus the modeled tail).
    pub fn mass(&self) -> f64 {
        let m = self.dim as i32;
        let f = |l: usize| {
            let r = l as f64 * TABLE_STEP;
            self.table[l] * r.powi(m - 1)
        };
        let n = self.table.len() - 1;
        let n = n - n % 2;
        let mut acc = crate::quadrature::Compensated::default();
        acc.add(f(0));
        acc.add(f(n));
        for l in 1..n {
            acc.add(if l % 2 == 1 { 4.0 } else { 2.0 } * f(l));
        }
        let body = acc.value() * TABLE_STEP / 3.0;
        let rmax = n as f64 * TABLE_STEP;
        let p = self.decay_exponent - m;
        let tail = self.decay_constant * rmax.powi(-p) / p as f64;
        let sphere = if m == 1 { 1.0 } else { sphere_area(self.dim - 1) / 2.0 };
        2.0 * sphere * (body + tail)
    }

    /// Fourier transform (e^{-i x xi} convention) at a frequency of modulus `freq`.
    pub fn fourier_at(&self, freq: f64) -> f64 {
        let m = self.dim;
        let h = TABLE_STEP;
        let n = self.table.len() - 1;
        if m == 1 {
            let mut acc = crate::quadrature::Compensated::default();
            for l in 0..=n {
                let w = if l == 0 || l == n { 0.5 } else { 1.0 };
                acc.add(w * self.table[l] * (freq * l as f64 * h).cos());
            }
            return 2.0 * h * acc.value();
        }
        // Radon projection onto one axis, then a cosine transform
        let du = 0.125;
        let nu = (TABLE_RADIUS / du) as usize;
        let proj: Vec<f64> = (0..=nu)
            .into_par_iter()
            .map(|iu| {
                let u = iu as f64 * du;
                if m % 2 == 0 {
                    let ds = 0.125;
                    let ns = (TABLE_RADIUS / ds) as usize;
                    let mut acc = crate::quadrature::Compensated::default();
                    for is in 0..=ns {
                        let s: f64 = is as f64 * ds;
                        let w = if is == 0 { 0.5 } else { 1.0 };
                        acc.add(w * self.radial((u * u + s * s).sqrt()) * s.powi(m as i32 - 2));
                    }
                    sphere_area(m - 2) * acc.value() * ds
                } else {
                    // rho^2 = u^2 + s^2 turns the weight into rho (rho^2 - u^2)^{(m-3)/2}
                    let top = TABLE_RADIUS;
                    if u >= top {
                        return 0.0;
                    }
                    let steps = (((top - u) / h).ceil() as usize).max(2);
                    let steps = steps + steps % 2;
                    let dr = (top - u) / steps as f64;
                    let g = |r: f64| self.radial(r) * r * (r * r - u * u).max(0.0).powf((m as f64 - 3.0) / 2.0);
                    let mut acc = crate::quadrature::Compensated::default();
                    for i in 0..=steps {
                        let c = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                        acc.add(c * g(u + i as f64 * dr));
                    }
                    sphere_area(m - 2) * acc.value() * dr / 3.0
                }
            })
            .collect();
        let mut acc = crate::quadrature::Compensated::default();
        for (iu, p) in proj.iter().enumerate() {
            let w = if iu == 0 { 0.5 } else { 1.0 };
            acc.add(w * p * (freq * iu as f64 * du).cos());
        }
        2.0 * du * acc.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct quadrature of c |int psi(xi) e^{i x xi} d xi|^2 on a tensor grid.
    fn direct(m: usize, x: &[f64], c: f64) -> f64 {
        let n = 400usize;
        let h = 1.0 / n as f64;
        let nodes: Vec<f64> = (0..=n).map(|i| -0.5 + i as f64 * h).collect();
        let (mut re, mut im) = (0.0, 0.0);
        if m == 1 {
            for &a in &nodes {
                let w = mollifier(a.abs()) * h;
                re += w * (x[0] * a).cos();
                im += w * (x[0] * a).sin();
            }
        } else {
            for &a in &nodes {
                for &b in &nodes {
                    let w = mollifier((a * a + b * b).sqrt()) * h * h;
                    let ph = x[0] * a + x[1] * b;
                    re += w * ph.cos();
                    im += w * ph.sin();
                }
            }
        }
        c * (re * re + im * im)
    }

    #[test]
    fn profile_matches_direct_quadrature() {
        for m in [1usize, 2] {
            let b = BumpProfile::shared(m).unwrap();
            for &r in &[0.0, 0.37, 1.5, 3.3, 7.77, 12.25] {
                let mut x = vec![0.0; m];
                x[0] = r * 0.6;
                if m == 2 {
                    x[1] = r * 0.8;
                } else {
                    x[0] = r;
                }
                let d = direct(m, &x, b.normalization());
                assert!((b.eval(&x) - d).abs() < 1e-6 * b.peak().max(1.0), "m={m} r={r}: {} vs {d}", b.eval(&x));
            }
        }
    }

    #[test]
    fn mass_and_fourier_support() {
        for m in [1usize, 2] {
            let b = BumpProfile::shared(m).unwrap();
            assert!((b.mass() - 1.0).abs() < 1e-8, "m={m} mass {}", b.mass());
            assert!((b.fourier_at(0.0) - 1.0).abs() < 1e-8);
            assert!(b.fourier_at(1.1).abs() < 1e-8, "m={m} {}", b.fourier_at(1.1));
            assert!(b.fourier_at(0.5) > 1e-3);
        }
    }

    #[test]
    fn nonnegative_and_decaying() {
        let b = BumpProfile::shared(1).unwrap();
        assert!((0..4000).all(|i| b.radial(i as f64 * 0.1) >= 0.0));
        assert!(b.radial(10.0) <= 1e-4 * b.peak());
        assert!(b.radial(500.0) < 1e-14 * b.peak());
        assert!(b.envelope(30.0) >= b.radial(31.0));
        assert!(b.tail_bound(10) > b.tail_bound(100));
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
    }
}
