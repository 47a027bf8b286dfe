//! Transversal frames, graph hypersurfaces and the slab condition.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-12;
const ORTHO_TOL: f64 = 1e-10;
const SAMPLES_PER_DIM: usize = 8;
const MAX_GRID_TUPLES: usize = 1 << 18;
const SAMPLE_SEED: u64 = 0x5eed_f2a3;

/// A transversal frame of unit normals in R^{n+1}.
#[derive(Clone, Debug)]
pub struct Frame {
    normals: Vec<DVector<f64>>,
    nu: f64,
    basis: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl Frame {
    /// Builds a frame from unit normals; `nu` is the claimed lower bound on |det|.
    pub fn new(normals: Vec<Vec<f64>>, nu: f64) -> Result<Self> {
        let dim = normals.len();
        if dim < 2 {
            return Err(Error::Dimension("a frame needs at least two normals".into()));
        }
        if !(nu > 0.0) {
            return Err(Error::Invalid(format!("nu must be positive, got {nu}")));
        }
        let mut cols = Vec::with_capacity(dim);
        for (i, v) in normals.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::Dimension(format!(
                    "normal {i} has length {} in ambient dimension {dim}",
                    v.len()
                )));
            }
            let v = DVector::from_column_slice(v);
            if (v.norm() - 1.0).abs() > UNIT_TOL {
                return Err(Error::Invalid(format!("normal {i} is not a unit vector")));
            }
            cols.push(v);
        }
        let basis = DMatrix::from_columns(&cols);
        let det = basis.determinant().abs();
        if det < nu {
            return Err(Error::Invalid(format!(
                "transversality |det| = {det:.6} is below nu = {nu}"
            )));
        }
        let inverse = basis
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Invalid("singular frame".into()))?;
        let check = &basis * &inverse - DMatrix::identity(dim, dim);
        if check.amax() > ORTHO_TOL {
            return Err(Error::Invalid("frame inverse is numerically unstable".into()));
        }
        Ok(Frame { normals: cols, nu, basis, inverse })
    }

    /// Like [`Frame::new`] but normalizes the directions first.
    pub fn from_directions(dirs: Vec<Vec<f64>>, nu: f64) -> Result<Self> {
        let mut unit = Vec::with_capacity(dirs.len());
        for d in dirs {
            let n = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n == 0.0 {
                return Err(Error::Invalid("zero direction".into()));
            }
            unit.push(d.iter().map(|x| x / n).collect());
        }
        Frame::new(unit, nu)
    }

    /// The standard basis of R^dim.
    pub fn standard(dim: usize) -> Self {
        let normals = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Frame::new(normals, 1.0).expect("standard frame")
    }

    /// e_1..e_n together with a tilted last normal so that |det| = `det`.
    pub fn sheared(dim: usize, det: f64) -> Result<Self> {
        if !(det > 0.0 && det <= 1.0) {
            return Err(Error::Invalid(format!("determinant {det} outside (0, 1]")));
        }
        let n = (dim - 1) as f64;
        let t = ((1.0 / (det * det) - 1.0) / n).sqrt();
        let mut dirs: Vec<Vec<f64>> = (0..dim - 1)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let mut last = vec![t; dim];
        last[dim - 1] = 1.0;
        dirs.push(last);
        Frame::from_directions(dirs, det * (1.0 - 1e-12))
    }

    pub fn dim(&self) -> usize {
        self.normals.len()
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn normal(&self, i: usize) -> &DVector<f64> {
        &self.normals[i]
    }

    pub fn normals(&self) -> &[DVector<f64>] {
        &self.normals
    }

    /// Columns are the normals; maps lattice coordinates to standard ones.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn inverse_basis(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn transversality_det(&self) -> f64 {
        self.basis.determinant().abs()
    }

    /// Lattice coordinates of a point given in standard coordinates.
    pub fn lattice_coords(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.inverse * x
    }

    /// Orthonormal basis (as columns) of the hyperplane orthogonal to normal `i`.
    pub fn hyperplane_basis(&self, i: usize) -> DMatrix<f64> {
        hyperplane_basis(&self.normals[i])
    }
}

/// |det(N_1, .., N_{n+1})| for raw vectors (which may be degenerate).
pub fn transversality_det(normals: &[Vec<f64>]) -> Result<f64> {
    let dim = normals.len();
    if dim == 0 || normals.iter().any(|v| v.len() != dim) {
        return Err(Error::Dimension(
            "transversality_det needs n+1 vectors of length n+1".into(),
        ));
    }
    let m = DMatrix::from_fn(dim, dim, |r, c| normals[c][r]);
    Ok(m.determinant().abs())
}

/// Volume of the parallelepiped spanned by the vectors: sqrt(det Gram).
pub fn k_volume(vectors: &[Vec<f64>]) -> Result<f64> {
    let k = vectors.len();
    if k == 0 {
        return Err(Error::Invalid("k_volume of an empty list".into()));
    }
    let d = vectors[0].len();
    if vectors.iter().any(|v| v.len() != d) || k > d {
        return Err(Error::Dimension("k_volume vectors must share a dimension >= k".into()));
    }
    let cols: Vec<DVector<f64>> = vectors.iter().map(|v| DVector::from_column_slice(v)).collect();
    Ok(volume_of(&cols))
}

pub(crate) fn volume_of(cols: &[DVector<f64>]) -> f64 {
    let k = cols.len();
    let gram = DMatrix::from_fn(k, k, |r, c| cols[r].dot(&cols[c]));
    gram.determinant().max(0.0).sqrt()
}

/// Gram-Schmidt on [vectors.., e_1, .., e_d]; returns an orthonormal basis of the
/// orthogonal complement of span(vectors) as columns.
pub fn orthonormal_complement(vectors: &[DVector<f64>], dim: usize) -> DMatrix<f64> {
    let mut accepted: Vec<DVector<f64>> = Vec::new();
    let mut out: Vec<DVector<f64>> = Vec::new();
    let candidates = vectors
        .iter()
        .cloned()
        .map(|v| (v, true))
        .chain((0..dim).map(|i| (DVector::from_fn(dim, |r, _| if r == i { 1.0 } else { 0.0 }), false)));
    for (v, given) in candidates {
        let mut w = v.clone();
        for _ in 0..2 {
            for a in &accepted {
                let c = a.dot(&w);
                w -= a * c;
            }
        }
        let n = w.norm();
        if n > 1e-8 {
            let w = w / n;
            accepted.push(w.clone());
            if !given {
                out.push(w);
            }
        }
        if out.len() + vectors.len() >= dim && accepted.len() >= dim {
            break;
        }
    }
    DMatrix::from_columns(&out)
}

/// Orthonormal basis of the hyperplane orthogonal to `normal`, as columns.
pub fn hyperplane_basis(normal: &DVector<f64>) -> DMatrix<f64> {
    orthonormal_complement(std::slice::from_ref(normal), normal.len())
}

/// A user-supplied graph function.
pub trait GraphFn: Send + Sync + fmt::Debug {
    fn value(&self, xi: &[f64]) -> f64;
    fn gradient(&self, xi: &[f64]) -> Vec<f64>;
}

/// Height function of a hypersurface over its tangent hyperplane.
#[derive(Clone, Debug)]
pub enum Graph {
    Flat,
    /// phi(xi) = xi^T A xi / 2.
    Quadratic(DMatrix<f64>),
    Custom(Arc<dyn GraphFn>),
}

impl Graph {
    /// Paraboloid with curvature `kappa` in every direction.
    pub fn paraboloid(dim: usize, kappa: f64) -> Self {
        Graph::Quadratic(DMatrix::identity(dim, dim) * kappa)
    }

    pub fn is_flat(&self) -> bool {
        match self {
            Graph::Flat => true,
            Graph::Quadratic(a) => a.amax() == 0.0,
            Graph::Custom(_) => false,
        }
    }

    pub fn value(&self, xi: &[f64]) -> f64 {
        match self {
            Graph::Flat => 0.0,
            Graph::Quadratic(a) => {
                let n = xi.len();
                let mut s = 0.0;
                for r in 0..n {
                    for c in 0..n {
                        s += xi[r] * a[(r, c)] * xi[c];
                    }
                }
                0.5 * s
            }
            Graph::Custom(g) => g.value(xi),
        }
    }

    pub fn gradient(&self, xi: &[f64]) -> Vec<f64> {
        match self {
            Graph::Flat => vec![0.0; xi.len()],
            Graph::Quadratic(a) => {
                let n = xi.len();
                (0..n)
                    .map(|r| (0..n).map(|c| 0.5 * (a[(r, c)] + a[(c, r)]) * xi[c]).sum())
                    .collect()
            }
            Graph::Custom(g) => g.gradient(xi),
        }
    }
}

/// Parameter domain U_i in tangent coordinates, centered at the origin.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Box { half_widths: Vec<f64> },
    Ball { dim: usize, radius: f64 },
}

impl Domain {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        Domain::Box { half_widths: vec![half_width; dim] }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { half_widths } => half_widths.len(),
            Domain::Ball { dim, .. } => *dim,
        }
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        const TOL: f64 = 1e-12;
        match self {
            Domain::Box { half_widths } => {
                xi.iter().zip(half_widths).all(|(x, a)| x.abs() <= a + TOL)
            }
            Domain::Ball { radius, .. } => xi.iter().map(|x| x * x).sum::<f64>().sqrt() <= radius + TOL,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Box { half_widths } => 2.0 * half_widths.iter().map(|a| a * a).sum::<f64>().sqrt(),
            Domain::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// Half-widths of the bounding box.
    pub fn half_widths(&self) -> Vec<f64> {
        match self {
            Domain::Box { half_widths } => half_widths.clone(),
            Domain::Ball { dim, radius } => vec![*radius; *dim],
        }
    }

    /// Tensor grid of `per_dim` points per axis over the bounding box, restricted to the
    /// domain; ball domains also get the radial projection of every grid point.
    pub fn sample_points(&self, per_dim: usize) -> Vec<Vec<f64>> {
        let hw = self.half_widths();
        let dim = hw.len();
        let mut pts = Vec::new();
        let mut idx = vec![0usize; dim];
        let total = per_dim.pow(dim as u32);
        for t in 0..total {
            crate::quadrature::unflatten(t, &vec![per_dim; dim], &mut idx);
            let p: Vec<f64> = (0..dim)
                .map(|d| {
                    if per_dim == 1 {
                        0.0
                    } else {
                        -hw[d] + 2.0 * hw[d] * idx[d] as f64 / (per_dim - 1) as f64
                    }
                })
                .collect();
            if self.contains(&p) {
                pts.push(p.clone());
            }
            if let Domain::Ball { radius, .. } = self {
                let n = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 0.0 && n > *radius {
                    pts.push(p.iter().map(|x| x * radius / n).collect());
                }
            }
        }
        pts
    }

    /// Uniform random point in the domain.
    pub fn random_point<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let hw = self.half_widths();
        loop {
            let p: Vec<f64> = hw.iter().map(|a| rng.gen_range(-a..=*a)).collect();
            if self.contains(&p) {
                return p;
            }
        }
    }
}

/// A graph hypersurface Sigma(xi) = base + T xi + phi(xi) N over a domain in H_i.
#[derive(Clone, Debug)]
pub struct Hypersurface {
    index: usize,
    normal: DVector<f64>,
    tangent: DMatrix<f64>,
    domain: Domain,
    base: DVector<f64>,
    graph: Graph,
    derivative_bound: f64,
}

impl Hypersurface {
    /// Surface over the hyperplane of frame direction `index`.
    pub fn new(frame: &Frame, index: usize, domain: Domain, graph: Graph) -> Result<Self> {
        if index >= frame.dim() {
            return Err(Error::Dimension(format!("surface index {index} out of range")));
        }
        let n = frame.dim() - 1;
        if domain.dim() != n {
            return Err(Error::Dimension(format!(
                "domain dimension {} differs from hyperplane dimension {n}",
                domain.dim()
            )));
        }
        if let Graph::Quadratic(a) = &graph {
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::Dimension("quadratic form has wrong size".into()));
            }
        }
        Ok(Hypersurface {
            index,
            normal: frame.normal(index).clone(),
            tangent: frame.hyperplane_basis(index),
            domain,
            base: DVector::zeros(n + 1),
            graph,
            derivative_bound: 1.0,
        })
    }

    /// Surface over the hyperplane orthogonal to an arbitrary unit normal, outside any frame
    /// (used for degenerate configurations).
    pub fn from_normal(index: usize, normal: Vec<f64>, domain: Domain, graph: Graph) -> Result<Self> {
        let d = normal.len();
        if d < 2 || domain.dim() != d - 1 {
            return Err(Error::Dimension("normal and domain dimensions disagree".into()));
        }
        let normal = DVector::from_vec(normal);
        if (normal.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid("surface normal is not a unit vector".into()));
        }
        if let Graph::Quadratic(a) = &graph {
            if a.nrows() != d - 1 || a.ncols() != d - 1 {
                return Err(Error::Dimension("quadratic form has wrong size".into()));
            }
        }
        Ok(Hypersurface {
            index,
            tangent: hyperplane_basis(&normal),
            normal,
            domain,
            base: DVector::zeros(d),
            graph,
            derivative_bound: 1.0,
        })
    }

    /// Replaces the tangent coordinates by another orthonormal basis of H_i.
    pub fn with_tangent(mut self, tangent: DMatrix<f64>) -> Result<Self> {
        let n = self.domain.dim();
        if tangent.nrows() != n + 1 || tangent.ncols() != n {
            return Err(Error::Dimension("tangent basis has wrong shape".into()));
        }
        let gram = tangent.transpose() * &tangent - DMatrix::identity(n, n);
        let normal_part = tangent.transpose() * &self.normal;
        if gram.amax() > ORTHO_TOL || normal_part.amax() > ORTHO_TOL {
            return Err(Error::Invalid("tangent basis is not an orthonormal basis of H_i".into()));
        }
        self.tangent = tangent;
        Ok(self)
    }

    pub fn with_base_point(mut self, base: Vec<f64>) -> Result<Self> {
        if base.len() != self.normal.len() {
            return Err(Error::Dimension("base point has wrong dimension".into()));
        }
        self.base = DVector::from_vec(base);
        Ok(self)
    }

    pub fn with_derivative_bound(mut self, c: f64) -> Self {
        self.derivative_bound = c;
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Result<Self> {
        if domain.dim() != self.domain.dim() {
            return Err(Error::Dimension("domain dimension changed".into()));
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Dimension n of the parameter domain.
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn normal(&self) -> &DVector<f64> {
        &self.normal
    }

    /// Orthonormal basis of H_i (columns) defining the tangent coordinates.
    pub fn tangent(&self) -> &DMatrix<f64> {
        &self.tangent
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn base_point(&self) -> &DVector<f64> {
        &self.base
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn derivative_bound(&self) -> f64 {
        self.derivative_bound
    }

    /// Sigma(xi) in standard coordinates.
    pub fn point(&self, xi: &[f64]) -> DVector<f64> {
        let xi_v = DVector::from_column_slice(xi);
        &self.base + &self.tangent * xi_v + &self.normal * self.graph.value(xi)
    }

    /// Sampled sup |grad phi(x) - grad phi(y)| over the domain.
    pub fn gradient_variation(&self) -> f64 {
        let grads: Vec<Vec<f64>> = self
            .domain
            .sample_points(SAMPLES_PER_DIM)
            .iter()
            .map(|p| self.graph.gradient(p))
            .collect();
        let mut worst = 0.0f64;
        for a in &grads {
            for b in &grads {
                let d = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Checks diam(U) <= delta and the gradient-variation bound C * delta.
    pub fn check_regularity(&self, delta: f64) -> Result<()> {
        let diam = self.domain.diameter();
        if diam > delta * (1.0 + 1e-12) {
            return Err(Error::Invalid(format!(
                "surface {}: domain diameter {diam:.4} exceeds delta = {delta}",
                self.index
            )));
        }
        let var = self.gradient_variation();
        if var > self.derivative_bound * delta * (1.0 + 1e-12) {
            return Err(Error::Invalid(format!(
                "surface {}: gradient variation {var:.4} exceeds C*delta = {:.4}",
                self.index,
                self.derivative_bound * delta
            )));
        }
        Ok(())
    }

    /// sup over the domain of |Sigma(xi)|, the largest spatial frequency of E f.
    pub fn frequency_extent(&self) -> f64 {
        self.domain
            .sample_points(SAMPLES_PER_DIM.max(9))
            .iter()
            .map(|p| self.point(p).norm())
            .fold(0.0, f64::max)
    }
}

/// Unit normal of the surface at xi, oriented with positive N_i component.
pub fn surface_normal(surface: &Hypersurface, xi: &[f64]) -> Result<DVector<f64>> {
    if xi.len() != surface.dim() {
        return Err(Error::Dimension("frequency point has wrong dimension".into()));
    }
    if !surface.domain.contains(xi) {
        return Err(Error::OutsideDomain);
    }
    Ok(normal_unchecked(surface, xi))
}

fn normal_unchecked(surface: &Hypersurface, xi: &[f64]) -> DVector<f64> {
    let g = DVector::from_vec(surface.graph.gradient(xi));
    let v = &surface.normal - &surface.tangent * g;
    let n = v.norm();
    v / n
}

/// Result of a sampled transversality certification.
#[derive(Clone, Debug, PartialEq)]
pub struct TransversalityReport {
    /// Smallest |det| (or k-volume) over the sampled tuples.
    pub min_value: f64,
    pub tuples: usize,
    pub meets_nu: bool,
}

/// Minimum of |det| (k = n+1) or k-volume (k < n+1) of the normals over a
/// tensor grid of tuples plus 256 seeded random tuples.
pub fn verify_transversality(surfaces: &[Hypersurface], nu: f64, random_tuples: usize) -> Result<TransversalityReport> {
    if surfaces.is_empty() {
        return Err(Error::Invalid("no surfaces".into()));
    }
    let dim = surfaces[0].normal.len();
    if surfaces.iter().any(|s| s.normal.len() != dim) || surfaces.len() > dim {
        return Err(Error::Dimension("surfaces live in different ambient spaces".into()));
    }
    let samples: Vec<Vec<Vec<f64>>> = surfaces.iter().map(|s| s.domain.sample_points(SAMPLES_PER_DIM)).collect();
    let sizes: Vec<usize> = samples.iter().map(|s| s.len()).collect();
    let full: u128 = sizes.iter().map(|&s| s as u128).product();
    let mut tuples: Vec<Vec<Vec<f64>>> = Vec::new();
    if full <= MAX_GRID_TUPLES as u128 {
        let mut idx = vec![0usize; sizes.len()];
        for t in 0..full as usize {
            crate::quadrature::unflatten(t, &sizes, &mut idx);
            tuples.push(idx.iter().enumerate().map(|(s, &i)| samples[s][i].clone()).collect());
        }
    } else {
        // Kronecker sequence over the index product
        let alphas: Vec<f64> = (0..sizes.len()).map(|s| ((s + 2) as f64).sqrt().fract()).collect();
        for t in 0..MAX_GRID_TUPLES {
            tuples.push(
                (0..sizes.len())
                    .map(|s| {
                        let i = ((t as f64 * alphas[s]).fract() * sizes[s] as f64) as usize;
                        samples[s][i.min(sizes[s] - 1)].clone()
                    })
                    .collect(),
            );
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    for _ in 0..random_tuples {
        tuples.push(surfaces.iter().map(|s| s.domain.random_point(&mut rng)).collect());
    }
    let square = surfaces.len() == dim;
    let min_value = tuples
        .par_iter()
        .map(|tuple| {
            let cols: Vec<DVector<f64>> = surfaces.iter().zip(tuple).map(|(s, p)| normal_unchecked(s, p)).collect();
            if square {
                DMatrix::from_columns(&cols).determinant().abs()
            } else {
                volume_of(&cols)
            }
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(TransversalityReport { min_value, tuples: tuples.len(), meets_nu: min_value >= nu })
}

/// mu-neighborhood of a k-dimensional affine subspace H = origin + span(subspace).
#[derive(Clone, Debug)]
pub struct SlabCondition {
    origin: DVector<f64>,
    subspace: DMatrix<f64>,
    complement: DMatrix<f64>,
    mu: f64,
}

impl SlabCondition {
    /// `complement` spans H^perp (N_{k+1}, .., N_{n+1}); the subspace basis is derived.
    pub fn from_complement(origin: Vec<f64>, complement: Vec<Vec<f64>>, mu: f64) -> Result<Self> {
        let dim = origin.len();
        let comp: Vec<DVector<f64>> = complement.iter().map(|v| DVector::from_column_slice(v)).collect();
        let sub = orthonormal_complement(&comp, dim);
        let sub_cols: Vec<Vec<f64>> = sub.column_iter().map(|c| c.iter().copied().collect()).collect();
        SlabCondition::new(origin, sub_cols, complement, mu)
    }

    pub fn new(origin: Vec<f64>, subspace: Vec<Vec<f64>>, complement: Vec<Vec<f64>>, mu: f64) -> Result<Self> {
        let dim = origin.len();
        if subspace.len() + complement.len() != dim || subspace.iter().chain(&complement).any(|v| v.len() != dim) {
            return Err(Error::Dimension("slab bases do not split the ambient space".into()));
        }
        if subspace.is_empty() || complement.is_empty() {
            return Err(Error::Dimension("slab subspace dimension must be in 1..=n".into()));
        }
        if !(mu >= 0.0) {
            return Err(Error::Invalid(format!("slab half-width must be nonnegative, got {mu}")));
        }
        let s = DMatrix::from_fn(dim, subspace.len(), |r, c| subspace[c][r]);
        let c = DMatrix::from_fn(dim, complement.len(), |r, cc| complement[cc][r]);
        let all = DMatrix::from_fn(dim, dim, |r, cc| if cc < s.ncols() { s[(r, cc)] } else { c[(r, cc - s.ncols())] });
        let gram = all.transpose() * &all - DMatrix::identity(dim, dim);
        if gram.amax() > ORTHO_TOL {
            return Err(Error::Invalid("slab bases are not orthonormal and mutually orthogonal".into()));
        }
        Ok(SlabCondition { origin: DVector::from_vec(origin), subspace: s, complement: c, mu })
    }

    /// Dimension k of H.
    pub fn k(&self) -> usize {
        self.subspace.ncols()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        SlabCondition { mu, ..self.clone() }
    }

    pub fn origin(&self) -> &DVector<f64> {
        &self.origin
    }

    pub fn subspace(&self) -> &DMatrix<f64> {
        &self.subspace
    }

    pub fn complement(&self) -> &DMatrix<f64> {
        &self.complement
    }

    /// Euclidean distance from a point to H.
    pub fn distance(&self, p: &DVector<f64>) -> f64 {
        (self.complement.transpose() * (p - &self.origin)).norm()
    }
}

/// Whether every sampled point of the surface lies within mu of H, and the largest distance.
pub fn verify_slab_condition(surface: &Hypersurface, slab: &SlabCondition) -> (bool, f64) {
    let worst = surface
        .domain
        .sample_points(SAMPLES_PER_DIM + 1)
        .iter()
        .map(|p| slab.distance(&surface.point(p)))
        .fold(0.0, f64::max);
    (worst <= slab.mu * (1.0 + 1e-12) + 1e-12, worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(dim: usize, i: usize) -> Vec<f64> {
        (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn determinant_examples() {
        assert!((transversality_det(&[e(3, 0), e(3, 1), e(3, 2)]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(transversality_det(&[e(2, 0), e(2, 0)]).unwrap(), 0.0);
        let s = 1.0 / 3f64.sqrt();
        let d = transversality_det(&[e(3, 0), e(3, 1), vec![s, s, s]]).unwrap();
        assert!((d - s).abs() < 1e-14);
        assert!(transversality_det(&[e(3, 0), e(3, 1)]).is_err());
    }

    #[test]
    fn volume_examples() {
        assert!((k_volume(&[e(4, 0), e(4, 2)]).unwrap() - 1.0).abs() < 1e-15);
        assert!(k_volume(&[e(3, 1), e(3, 1)]).unwrap() < 1e-7);
        let v = k_volume(&[vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]]).unwrap();
        assert!((v - 3f64.sqrt() / 2.0).abs() < 1e-14);
        assert!(k_volume(&[]).is_err());
    }

    #[test]
    fn frame_rejects_bad_input() {
        assert!(Frame::new(vec![e(2, 0), vec![0.5, 0.5]], 0.1).is_err());
        assert!(Frame::new(vec![e(2, 0), e(2, 1)], 1.5).is_err());
        let f = Frame::sheared(3, 0.3).unwrap();
        assert!((f.transversality_det() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn normal_examples() {
        let frame = Frame::standard(3);
        let flat = Hypersurface::new(&frame, 2, Domain::cube(2, 0.5), Graph::Flat).unwrap();
        let n = surface_normal(&flat, &[0.2, -0.1]).unwrap();
        assert!((&n - frame.normal(2)).norm() < 1e-15);
        let para = Hypersurface::new(&frame, 2, Domain::cube(2, 0.5), Graph::paraboloid(2, 1.0)).unwrap();
        let n0 = surface_normal(&para, &[0.0, 0.0]).unwrap();
        assert!((&n0 - frame.normal(2)).norm() < 1e-15);
        let n1 = surface_normal(&para, &[0.1, 0.0]).unwrap();
        // components in the (H_i, N_i) frame
        let t = para.tangent().transpose() * &n1;
        let s = 1.01f64.sqrt();
        assert!((t[0] + 0.1 / s).abs() < 1e-14 && t[1].abs() < 1e-14);
        assert!((n1.dot(frame.normal(2)) - 1.0 / s).abs() < 1e-14);
        assert!(matches!(surface_normal(&para, &[0.9, 0.0]), Err(Error::OutsideDomain)));
    }

    #[test]
    fn transversality_flat_and_caps() {
        let frame = Frame::sheared(3, 0.6).unwrap();
        let flats: Vec<_> = (0..3).map(|i| Hypersurface::new(&frame, i, Domain::cube(2, 0.3), Graph::Flat).unwrap()).collect();
        let rep = verify_transversality(&flats, 0.5, 256).unwrap();
        assert!((rep.min_value - 0.6).abs() < 1e-12 && rep.meets_nu);
        let one = verify_transversality(&flats[..1], 0.5, 16).unwrap();
        assert!((one.min_value - 1.0).abs() < 1e-14);

        let std = Frame::standard(3);
        let delta = 0.1;
        let caps: Vec<_> = (0..3)
            .map(|i| Hypersurface::new(&std, i, Domain::Ball { dim: 2, radius: delta / 2.0 }, Graph::paraboloid(2, 1.0)).unwrap())
            .collect();
        let rep = verify_transversality(&caps, 0.0, 256).unwrap();
        assert!(rep.min_value <= 1.0 && rep.min_value >= 1.0 - 3.0 * delta, "{}", rep.min_value);
    }

    #[test]
    fn slab_examples() {
        let frame = Frame::standard(3);
        let inside = Hypersurface::new(&frame, 0, Domain::cube(2, 0.5), Graph::Flat).unwrap();
        // H = span(e2, e3) through origin contains the flat surface over H_1
        let slab = SlabCondition::from_complement(vec![0.0; 3], vec![e(3, 0)], 0.0).unwrap();
        assert_eq!(verify_slab_condition(&inside, &slab), (true, 0.0));
        let curved = Hypersurface::new(&frame, 0, Domain::cube(2, 0.5), Graph::paraboloid(2, 1.0)).unwrap();
        let (ok, d) = verify_slab_condition(&curved, &slab);
        assert!(!ok && d > 0.0);

        let theta: f64 = 0.3;
        let rho = 0.7;
        let tilted = Frame::new(vec![vec![-theta.sin(), theta.cos()], vec![theta.cos(), theta.sin()]], 0.5).unwrap();
        let line = Hypersurface::new(&tilted, 0, Domain::Ball { dim: 1, radius: rho }, Graph::Flat).unwrap();
        let h = SlabCondition::from_complement(vec![0.0, 0.0], vec![e(2, 1)], rho * theta.sin()).unwrap();
        let (ok, d) = verify_slab_condition(&line, &h);
        assert!(ok && (d - rho * theta.sin()).abs() < 1e-12);
    }

    #[test]
    fn regularity_check() {
        let frame = Frame::standard(2);
        let s = Hypersurface::new(&frame, 0, Domain::cube(1, 0.25), Graph::paraboloid(1, 1.0)).unwrap();
        assert!(s.check_regularity(0.5).is_ok());
        assert!(s.check_regularity(0.4).is_err());
    }

    fn unit(v: Vec<f64>) -> Vec<f64> {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
        v.iter().map(|x| x / n).collect()
    }

    proptest! {
        #[test]
        fn det_invariant_under_permutation_and_sign(
            raw in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 3),
            flip in 0usize..3,
        ) {
            let vs: Vec<Vec<f64>> = raw.into_iter().map(unit).collect();
            let d = transversality_det(&vs).unwrap();
            let mut p = vs.clone();
            p.swap(0, 2);
            p[flip] = p[flip].iter().map(|x| -x).collect();
            prop_assert!((transversality_det(&p).unwrap() - d).abs() < 1e-12);
            prop_assert!((k_volume(&vs).unwrap() - d).abs() < 1e-7);
            prop_assert!(k_volume(&vs[..2]).unwrap() <= 1.0 + 1e-12);
        }

        #[test]
        fn normals_are_unit_and_oriented(x in -0.5f64..0.5, y in -0.5f64..0.5, k in -2.0f64..2.0) {
            let frame = Frame::sheared(3, 0.5).unwrap();
            let s = Hypersurface::new(&frame, 2, Domain::cube(2, 0.5), Graph::paraboloid(2, k)).unwrap();
            let n = surface_normal(&s, &[x, y]).unwrap();
            prop_assert!((n.norm() - 1.0).abs() < 1e-12);
            prop_assert!(n.dot(frame.normal(2)) > 0.0);
        }
    }
}
