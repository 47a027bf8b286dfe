//! The density family used for the sup in A(R), and frequency grids for it.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{FamilySpec, GridConfig};
use crate::error::{Error, Result};
use crate::extension::{margin_of, FrequencyDensity};
use crate::frames::Hypersurface;
use crate::partition::{mollifier, GridSpec};

/// How one density of a tuple was drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DensityKind {
    Constant,
    Bump { center: Vec<f64>, radii: Vec<f64> },
    Signs { cells: usize, signs: Vec<i8> },
}

/// One member of the family: a density per surface.
#[derive(Clone, Debug)]
pub struct DensityTuple {
    pub index: usize,
    pub kinds: Vec<DensityKind>,
    pub densities: Vec<FrequencyDensity>,
}

/// Symmetric frequency grid over the surface domain with spacing
/// min(1/(4 r_max), 2a/(min_nodes - 1)) per axis, or the fixed h_xi.
pub fn frequency_grid(surface: &Hypersurface, grid: &GridConfig, r_max: f64) -> Result<GridSpec> {
    let hw = surface.domain().half_widths();
    let mesh = grid.h_xi.unwrap_or(0.25 / r_max);
    let steps: Vec<f64> = hw.iter().map(|a| mesh.min(2.0 * a / (grid.min_nodes - 1) as f64)).collect();
    GridSpec::symmetric(&hw, &steps)
}

/// Refuses densities whose margin is below delta - R^{-1/2}.
pub fn admit(f: &FrequencyDensity, delta: f64, r: f64, refined: bool) -> Result<()> {
    let need = delta - r.powf(-0.5);
    let m = margin_of(f, delta, refined)?;
    if m.margin < need - 1e-12 {
        return Err(Error::Margin(format!(
            "density on surface {} has margin {:.4} below delta - R^(-1/2) = {:.4}",
            f.surface, m.margin, need
        )));
    }
    Ok(())
}

fn draw_kind(index: usize, hw: &[f64], spec: &FamilySpec, rng: &mut ChaCha8Rng) -> DensityKind {
    match index {
        0 => DensityKind::Constant,
        1 => DensityKind::Bump { center: vec![0.0; hw.len()], radii: hw.iter().map(|a| spec.bump_scale * a).collect() },
        _ => {
            if rng.gen_bool(0.5) {
                let radii: Vec<f64> = hw.iter().map(|a| spec.bump_scale * a).collect();
                let center = hw.iter().zip(&radii).map(|(a, r)| rng.gen_range(-(a - r)..=(a - r))).collect();
                DensityKind::Bump { center, radii }
            } else {
                let cells = spec.coarse;
                let total = cells.pow(hw.len() as u32);
                DensityKind::Signs { cells, signs: (0..total).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect() }
            }
        }
    }
}

/// Value of a density kind at xi for a box with half-widths `hw`.
pub fn kind_value(kind: &DensityKind, hw: &[f64], xi: &[f64]) -> f64 {
    match kind {
        DensityKind::Constant => 1.0,
        DensityKind::Bump { center, radii } => {
            let rho = xi.iter().zip(center).zip(radii).map(|((x, c), r)| ((x - c) / r).powi(2)).sum::<f64>().sqrt();
            mollifier(0.5 * rho)
        }
        DensityKind::Signs { cells, signs } => smoothed_signs(*cells, signs, hw, xi),
    }
}

// mollifier-weighted average of the cell signs within one cell width
fn smoothed_signs(cells: usize, signs: &[i8], hw: &[f64], xi: &[f64]) -> f64 {
    let dim = hw.len();
    let width: Vec<f64> = hw.iter().map(|a| 2.0 * a / cells as f64).collect();
    let home: Vec<i64> = xi.iter().zip(hw).zip(&width).map(|((x, a), w)| ((x + a) / w).floor() as i64).collect();
    let mut num = 0.0;
    let mut den = 0.0;
    let reach = 3usize.pow(dim as u32);
    for code in 0..reach {
        let mut c = code;
        let mut flat = 0usize;
        let mut rho2 = 0.0;
        let mut inside = true;
        for d in 0..dim {
            let j = home[d] + (c % 3) as i64 - 1;
            c /= 3;
            if j < 0 || j >= cells as i64 {
                inside = false;
                break;
            }
            flat = flat * cells + j as usize;
            let center = -hw[d] + (j as f64 + 0.5) * width[d];
            rho2 += ((xi[d] - center) / width[d]).powi(2);
        }
        if !inside {
            continue;
        }
        let w = mollifier(0.5 * rho2.sqrt());
        num += w * signs[flat] as f64;
        den += w;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Draws `spec.tuples` density tuples from the seed; tuple 0 is all constants and tuple 1 all
/// centered bumps. Every density passes [`admit`] at scale `r`.
pub fn density_family(
    surfaces: &[Hypersurface],
    grids: &[GridSpec],
    spec: &FamilySpec,
    seed: u64,
    delta: f64,
    r: f64,
) -> Result<Vec<DensityTuple>> {
    if surfaces.len() != grids.len() {
        return Err(Error::Dimension("one frequency grid per surface".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(spec.tuples);
    for t in 0..spec.tuples {
        let mut kinds = Vec::with_capacity(surfaces.len());
        let mut densities = Vec::with_capacity(surfaces.len());
        for (s, g) in surfaces.iter().zip(grids) {
            let hw = s.domain().half_widths();
            let kind = draw_kind(t, &hw, spec, &mut rng);
            let f = FrequencyDensity::from_fn(s, g.clone(), |xi| Complex64::new(kind_value(&kind, &hw, xi), 0.0))?;
            admit(&f, delta, r, false)?;
            kinds.push(kind);
            densities.push(f);
        }
        out.push(DensityTuple { index: t, kinds, densities });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{Domain, Frame, Graph};

    fn line(hw: f64) -> Hypersurface {
        Hypersurface::new(&Frame::standard(2), 0, Domain::cube(1, hw), Graph::Flat).unwrap()
    }

    #[test]
    fn family_is_seeded_and_admitted() {
        let s = vec![line(1.0), line(1.0)];
        let g = vec![frequency_grid(&s[0], &GridConfig::default(), 8.0).unwrap(); 2];
        let spec = FamilySpec::default();
        let a = density_family(&s, &g, &spec, 5, 2.0, 16.0).unwrap();
        let b = density_family(&s, &g, &spec, 5, 2.0, 16.0).unwrap();
        assert_eq!(a.len(), 8);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.kinds, y.kinds);
            assert_eq!(x.densities, y.densities);
        }
        assert!(a[0].kinds.iter().all(|k| *k == DensityKind::Constant));
        assert!(a.iter().all(|t| t.densities.iter().all(|f| f.l2_norm() > 0.0)));
    }

    #[test]
    fn margin_violations_are_refused() {
        // delta = 0.5: margin of a density filling [-1, 1] is 0 < 0.5 - 1/4
        let s = line(1.0);
        let g = frequency_grid(&s, &GridConfig::default(), 4.0).unwrap();
        let f = FrequencyDensity::from_fn(&s, g.clone(), |_| Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(admit(&f, 0.5, 16.0, false), Err(Error::Margin(_))));
        assert!(admit(&f, 2.0, 16.0, false).is_ok());
        let r = density_family(&[s.clone(), s], &[g.clone(), g], &FamilySpec::default(), 1, 0.5, 16.0);
        assert!(matches!(r, Err(Error::Margin(_))));
    }

    #[test]
    fn smoothed_signs_stay_in_range() {
        let hw = [1.0, 2.0];
        let signs: Vec<i8> = (0..16).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
        for i in 0..40 {
            let xi = [-1.0 + i as f64 / 20.0, 2.0 - i as f64 / 10.0];
            let v = smoothed_signs(4, &signs, &hw, &xi);
            assert!((-1.0..=1.0).contains(&v));
        }
        assert_eq!(smoothed_signs(2, &[1, 1, 1, 1], &hw, &[0.1, -0.3]), 1.0);
    }
}
