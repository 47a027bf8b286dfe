//! Scenario configuration, parsed from TOML.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::extension::MeshRule;
use crate::frames::{Domain, Frame, Graph, Hypersurface, SlabCondition};

fn default_nu() -> f64 {
    0.1
}

fn default_h_x() -> f64 {
    0.5
}

fn default_min_nodes() -> usize {
    9
}

fn default_tuples() -> usize {
    8
}

fn default_coarse() -> usize {
    4
}

fn default_bump_scale() -> f64 {
    0.5
}

/// Spatial region Q on which field products are measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionKind {
    /// Cell of the frame lattice; needs a valid frame.
    #[default]
    LatticeCell,
    /// Axis-aligned cube; works for degenerate normals.
    Cube,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    Box { half_widths: Vec<f64> },
    Ball { radius: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GraphSpec {
    Flat,
    Paraboloid { kappa: f64 },
    Quadratic { matrix: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub domain: DomainSpec,
    #[serde(default = "flat")]
    pub graph: GraphSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<f64>>,
}

fn flat() -> GraphSpec {
    GraphSpec::Flat
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Spatial spacing.
    #[serde(default = "default_h_x")]
    pub h_x: f64,
    /// Frequency spacing; derived from the mesh rule when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_xi: Option<f64>,
    /// Minimum number of frequency nodes per axis.
    #[serde(default = "default_min_nodes")]
    pub min_nodes: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { h_x: default_h_x(), h_xi: None, min_nodes: default_min_nodes() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    #[serde(default = "default_tuples")]
    pub tuples: usize,
    /// Coarse cells per axis for smoothed random signs.
    #[serde(default = "default_coarse")]
    pub coarse: usize,
    /// Bump radius as a fraction of the domain half-width.
    #[serde(default = "default_bump_scale")]
    pub bump_scale: f64,
}

impl Default for FamilySpec {
    fn default() -> Self {
        FamilySpec { tuples: default_tuples(), coarse: default_coarse(), bump_scale: default_bump_scale() }
    }
}

/// Contract thresholds for the scale sweep.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_exponent: Option<f64>,
    /// Relative agreement with the Plancherel route (k = 2, n = 1 only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plancherel_tolerance: Option<f64>,
}

fn default_slope_tolerance() -> f64 {
    0.15
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlabSpec {
    /// Orthonormal basis of H^perp; frame normals k.. must match it.
    pub complement: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mu: Vec<f64>,
    /// Scale R of the mu sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default = "default_slope_tolerance")]
    pub slope_tolerance: f64,
}

fn default_steps() -> Vec<u32> {
    vec![0, 2, 3, 5, 9, 17]
}

fn default_weight_order() -> u32 {
    2
}

fn default_truncation() -> usize {
    40
}

fn default_drop() -> f64 {
    3.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffdiagSpec {
    pub radius: f64,
    /// Index offsets along the first induced axis; d = R max(0, step - 1).
    #[serde(default = "default_steps")]
    pub steps: Vec<u32>,
    #[serde(default = "default_weight_order")]
    pub weight_order: u32,
    /// Window |j'| <= truncation used for the recomposition.
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default = "default_drop")]
    pub min_drop: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InductionVariant {
    #[default]
    Plain,
    Strip,
}

fn default_stability() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InductionSpec {
    pub radius: f64,
    #[serde(default)]
    pub variant: InductionVariant,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default = "default_weight_order")]
    pub weight_order: u32,
    /// Exponent of the distance weight; defaults to 2N - n^2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_exponent: Option<f64>,
    /// Allowed relative change of the max ratio when the truncation doubles.
    #[serde(default = "default_stability")]
    pub stability: f64,
}

fn default_windows() -> Vec<usize> {
    vec![1, 2, 3, 4]
}

fn default_trials() -> usize {
    1000
}

fn default_random_tuples() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LwSpec {
    #[serde(default = "default_windows")]
    pub windows: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_random_tuples")]
    pub random_tuples: usize,
    #[serde(default = "default_trials")]
    pub holder_pairs: usize,
}

impl Default for LwSpec {
    fn default() -> Self {
        LwSpec { windows: default_windows(), trials: default_trials(), random_tuples: default_random_tuples(), holder_pairs: default_trials() }
    }
}

fn default_scales() -> Vec<f64> {
    vec![1.0, 4.0, 16.0]
}

fn default_points() -> usize {
    1000
}

fn default_partition_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    #[serde(default = "default_scales")]
    pub scales: Vec<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_partition_tol")]
    pub tolerance: f64,
}

impl Default for PartitionSpec {
    fn default() -> Self {
        PartitionSpec { scales: default_scales(), points: default_points(), tolerance: default_partition_tol() }
    }
}

fn default_x1() -> Vec<f64> {
    vec![0.0, 1.0, -2.0, 4.0, 8.0]
}

fn default_nodes() -> usize {
    64
}

fn default_commutator_tol() -> f64 {
    1e-4
}

fn default_trivial_tol() -> f64 {
    1e-8
}

fn default_power() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorSpec {
    #[serde(default = "default_x1")]
    pub x1: Vec<f64>,
    #[serde(default = "default_power")]
    pub power: u32,
    #[serde(default)]
    pub axis: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_commutator_tol")]
    pub tolerance: f64,
    #[serde(default = "default_trivial_tol")]
    pub trivial_tolerance: f64,
}

impl Default for CommutatorSpec {
    fn default() -> Self {
        CommutatorSpec {
            x1: default_x1(),
            power: default_power(),
            axis: 0,
            x0: None,
            nodes: default_nodes(),
            tolerance: default_commutator_tol(),
            trivial_tolerance: default_trivial_tol(),
        }
    }
}

/// Everything one experiment run needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub radii: Vec<f64>,
    #[serde(default)]
    pub region: RegionKind,
    #[serde(default)]
    pub mesh: MeshChoice,
    #[serde(default)]
    pub grid: GridConfig,
    /// Frame normals N_1, .., N_{n+1}; the standard basis when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normals: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub surfaces: Vec<SurfaceSpec>,
    #[serde(default)]
    pub family: FamilySpec,
    #[serde(default)]
    pub fit: FitSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slab: Option<SlabSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offdiag: Option<OffdiagSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub induction: Option<InductionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lw: Option<LwSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commutator: Option<CommutatorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

/// Mesh rule selection in configs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshChoice {
    #[default]
    Conservative,
    Spectral,
}

impl From<MeshChoice> for MeshRule {
    fn from(m: MeshChoice) -> Self {
        match m {
            MeshChoice::Conservative => MeshRule::Conservative,
            MeshChoice::Spectral => MeshRule::Spectral,
        }
    }
}

fn cfg(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ScenarioConfig = toml::from_str(text).map_err(|e| cfg(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form, as lowercase hex.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Structural checks that do not need any numerics.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(cfg("n must be at least 1"));
        }
        if self.k < 2 || self.k > n + 1 {
            return Err(cfg(format!("k = {} outside 2..=n+1", self.k)));
        }
        if !(self.delta > 0.0) {
            return Err(cfg("delta must be positive"));
        }
        if !(self.nu > 0.0) {
            return Err(cfg("nu must be positive"));
        }
        if !(self.grid.h_x > 0.0) || self.grid.h_xi.is_some_and(|h| !(h > 0.0)) {
            return Err(cfg("grid spacings must be positive"));
        }
        if self.grid.min_nodes < 2 {
            return Err(cfg("min_nodes must be at least 2"));
        }
        if let Some(normals) = &self.normals {
            if normals.len() != n + 1 || normals.iter().any(|v| v.len() != n + 1) {
                return Err(cfg(format!("normals must be {} vectors of length {}", n + 1, n + 1)));
            }
        }
        if !self.surfaces.is_empty() && self.surfaces.len() != self.k {
            return Err(cfg(format!("expected {} surfaces, got {}", self.k, self.surfaces.len())));
        }
        for (i, s) in self.surfaces.iter().enumerate() {
            match &s.domain {
                DomainSpec::Box { half_widths } => {
                    if half_widths.len() != n || half_widths.iter().any(|a| !(*a > 0.0)) {
                        return Err(cfg(format!("surface {i}: box needs {n} positive half-widths")));
                    }
                }
                DomainSpec::Ball { radius } => {
                    if !(*radius > 0.0) {
                        return Err(cfg(format!("surface {i}: ball radius must be positive")));
                    }
                }
            }
            if let GraphSpec::Quadratic { matrix } = &s.graph {
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(cfg(format!("surface {i}: quadratic form must be {n}x{n}")));
                }
            }
            if s.base.as_ref().is_some_and(|b| b.len() != n + 1) {
                return Err(cfg(format!("surface {i}: base point must have length {}", n + 1)));
            }
        }
        if self.radii.iter().any(|r| !(*r > 0.0)) {
            return Err(cfg("radii must be positive"));
        }
        if let Some(r) = self.radii.iter().cloned().reduce(f64::min) {
            if r < self.delta.powi(-2) * (1.0 - 1e-12) {
                return Err(cfg(format!("R = {r} is below delta^-2 = {}", self.delta.powi(-2))));
            }
        }
        if self.family.tuples == 0 || self.family.coarse == 0 || !(self.family.bump_scale > 0.0 && self.family.bump_scale <= 1.0) {
            return Err(cfg("family needs tuples >= 1, coarse >= 1 and bump_scale in (0, 1]"));
        }
        if let Some(slab) = &self.slab {
            if self.k > n {
                return Err(cfg("slab settings need k <= n"));
            }
            if slab.complement.len() != n + 1 - self.k {
                return Err(cfg(format!("slab complement needs {} vectors", n + 1 - self.k)));
            }
            for &mu in &slab.mu {
                if !(mu > 0.0) || mu >= self.delta {
                    return Err(cfg(format!("mu = {mu} must lie in (0, delta)")));
                }
            }
        }
        Ok(())
    }

    pub fn mesh_rule(&self) -> MeshRule {
        self.mesh.into()
    }

    /// The frame, when the normals form one.
    pub fn frame(&self) -> Result<Frame> {
        Frame::new(self.normal_vectors(), self.nu)
    }

    pub fn normal_vectors(&self) -> Vec<Vec<f64>> {
        match &self.normals {
            Some(normals) => normals.clone(),
            None => (0..=self.n).map(|i| (0..=self.n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
        }
    }

    /// The k surfaces; over frame hyperplanes when the frame is valid, otherwise straight from
    /// the normals (region = cube only).
    pub fn surfaces(&self) -> Result<Vec<Hypersurface>> {
        if self.surfaces.is_empty() {
            return Err(cfg("no surfaces configured"));
        }
        let frame = self.frame();
        if frame.is_err() && self.region == RegionKind::LatticeCell {
            return Err(cfg(format!("lattice-cell region needs a valid frame: {}", frame.unwrap_err())));
        }
        let normals = self.normal_vectors();
        self.surfaces
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let domain = match &spec.domain {
                    DomainSpec::Box { half_widths } => Domain::Box { half_widths: half_widths.clone() },
                    DomainSpec::Ball { radius } => Domain::Ball { dim: self.n, radius: *radius },
                };
                let graph = match &spec.graph {
                    GraphSpec::Flat => Graph::Flat,
                    GraphSpec::Paraboloid { kappa } => Graph::paraboloid(self.n, *kappa),
                    GraphSpec::Quadratic { matrix } => Graph::Quadratic(DMatrix::from_fn(self.n, self.n, |r, c| matrix[r][c])),
                };
                let mut s = match &frame {
                    Ok(f) => Hypersurface::new(f, i, domain, graph)?,
                    Err(_) => Hypersurface::from_normal(i, normals[i].clone(), domain, graph)?,
                };
                if let Some(b) = &spec.base {
                    s = s.with_base_point(b.clone())?;
                }
                s.check_regularity(self.delta).map_err(|e| cfg(e.to_string()))?;
                Ok(s)
            })
            .collect()
    }

    /// The slab condition at width mu.
    pub fn slab_condition(&self, mu: f64) -> Result<SlabCondition> {
        let slab = self.slab.as_ref().ok_or_else(|| cfg("no [slab] section"))?;
        SlabCondition::from_complement(vec![0.0; self.n + 1], slab.complement.clone(), mu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
n = 1
k = 2
delta = 12.0
radii = [4.0, 8.0]

[[surfaces]]
domain = { kind = "box", half_widths = [6.0] }

[[surfaces]]
domain = { kind = "box", half_widths = [6.0] }
graph = { kind = "paraboloid", kappa = 0.1 }
"#;

    #[test]
    fn parses_and_round_trips() {
        let c = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.grid.h_x, 0.5);
        assert_eq!(c.family.tuples, 8);
        let again = ScenarioConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        assert_eq!(c.surfaces().unwrap().len(), 2);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(ScenarioConfig::from_toml("n = 1"), Err(Error::Config(_))));
        let bad_k = MINIMAL.replace("k = 2", "k = 3");
        assert!(ScenarioConfig::from_toml(&bad_k).is_err());
        let small_r = MINIMAL.replace("delta = 12.0", "delta = 0.25").replace("[4.0, 8.0]", "[4.0, 8.0, 16.0]");
        assert!(ScenarioConfig::from_toml(&small_r).is_err());
        let unknown = format!("{MINIMAL}\nbogus = 1\n");
        assert!(ScenarioConfig::from_toml(&unknown).is_err());
        let fat = MINIMAL.replace("delta = 12.0", "delta = 2.0").replace("[4.0, 8.0]", "[4.0]");
        let c = ScenarioConfig::from_toml(&fat).unwrap();
        assert!(matches!(c.surfaces(), Err(Error::Config(_))));
    }

    #[test]
    fn degenerate_normals_need_cube_region() {
        let text = MINIMAL.replace("radii", "region = \"cube\"\nnormals = [[1.0, 0.0], [1.0, 0.0]]\nradii");
        let c = ScenarioConfig::from_toml(&text).unwrap();
        assert!(c.frame().is_err());
        assert_eq!(c.surfaces().unwrap().len(), 2);
        let lattice = text.replace("region = \"cube\"\n", "");
        let c = ScenarioConfig::from_toml(&lattice).unwrap();
        assert!(c.surfaces().is_err());
    }
}
