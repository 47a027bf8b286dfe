//! Oblique lattices generated by a frame, induced lattices, cells and strips.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{orthonormal_complement, Frame, SlabCondition};

const ROUND_EPS: f64 = 1e-9;

/// Which lattice a cell belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellOwner {
    /// The full lattice in R^{n+1}.
    Ambient,
    /// The induced lattice on the hyperplane orthogonal to frame direction i.
    Hyperplane(usize),
    /// The lattice on the section H ∩ H_1 used for strips.
    Section,
}

/// The box prod [r(j_m - 1/2), r(j_m + 1/2)] in lattice coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: Vec<i64>,
    pub scale: f64,
    pub owner: CellOwner,
}

impl Cell {
    pub fn new(index: Vec<i64>, scale: f64, owner: CellOwner) -> Self {
        Cell { index, scale, owner }
    }

    /// Center r*j in lattice coordinates.
    pub fn center(&self) -> Vec<f64> {
        self.index.iter().map(|&j| self.scale * j as f64).collect()
    }

    /// Membership of a point given in lattice coordinates (half-open, tie rounds up).
    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.index.len()
            && u
                .iter()
                .zip(&self.index)
                .all(|(x, &j)| round_half_up(x / self.scale) == j)
    }

    pub fn volume_in_lattice_coords(&self) -> f64 {
        self.scale.powi(self.index.len() as i32)
    }
}

pub(crate) fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// An infinite strip in H_1: a section cell extended along (H_1 ∩ H)^perp.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub base: Cell,
}

impl Strip {
    pub fn center(&self) -> Vec<f64> {
        self.base.center()
    }
}

/// A region to enumerate cells over, in lattice coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Cell(Cell),
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Region {
    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Cell(c) => {
                let lo = c.index.iter().map(|&j| c.scale * (j as f64 - 0.5)).collect();
                let hi = c.index.iter().map(|&j| c.scale * (j as f64 + 0.5)).collect();
                (lo, hi)
            }
            Region::Box { lo, hi } => (lo.clone(), hi.clone()),
        }
    }

    pub fn volume(&self) -> f64 {
        let (lo, hi) = self.bounds();
        lo.iter().zip(&hi).map(|(a, b)| b - a).product()
    }
}

/// Cells of scale r whose regions meet the region in a set of positive measure,
/// in lexicographic order.
pub fn enumerate_cells(owner: CellOwner, region: &Region, r: f64) -> Result<Vec<Cell>> {
    if !(r > 0.0) {
        return Err(Error::Invalid(format!("cell scale must be positive, got {r}")));
    }
    let (lo, hi) = region.bounds();
    if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
        return Err(Error::Invalid("empty or malformed region".into()));
    }
    let ranges: Vec<(i64, i64)> = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| {
            let jmin = (a / r - 0.5 + ROUND_EPS).floor() as i64 + 1;
            let jmax = (b / r + 0.5 - ROUND_EPS).ceil() as i64 - 1;
            (jmin, jmax)
        })
        .collect();
    let counts: Vec<usize> = ranges.iter().map(|(a, b)| (b - a + 1).max(0) as usize).collect();
    let mut out = Vec::with_capacity(counts.iter().product());
    crate::quadrature::for_each_index(&counts, |idx| {
        let j = idx.iter().zip(&ranges).map(|(&i, (a, _))| a + i as i64).collect();
        out.push(Cell::new(j, r, owner));
    });
    Ok(out)
}

/// Surrogate distance r * max(0, |j - j'|_inf - 1).
pub fn cell_distance(q: &Cell, q2: &Cell) -> Result<f64> {
    if q.owner != q2.owner || q.index.len() != q2.index.len() {
        return Err(Error::OwnerMismatch(format!("{:?} vs {:?}", q.owner, q2.owner)));
    }
    if (q.scale - q2.scale).abs() > 1e-12 * q.scale.abs().max(1.0) {
        return Err(Error::OwnerMismatch(format!("scales {} and {}", q.scale, q2.scale)));
    }
    let linf = q.index.iter().zip(&q2.index).map(|(a, b)| (a - b).abs()).max().unwrap_or(0);
    Ok(q.scale * (linf - 1).max(0) as f64)
}

/// The oblique lattice r * sum j_i N_i.
#[derive(Clone, Debug)]
pub struct ObliqueLattice {
    frame: Frame,
    scale: f64,
}

impl ObliqueLattice {
    pub fn new(frame: Frame, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::Invalid(format!("lattice scale must be positive, got {scale}")));
        }
        Ok(ObliqueLattice { frame, scale })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Lattice point for the index j.
    pub fn point(&self, j: &[i64]) -> DVector<f64> {
        let u = DVector::from_iterator(j.len(), j.iter().map(|&x| self.scale * x as f64));
        self.frame.basis() * u
    }

    /// Cell of this lattice containing a point in standard coordinates.
    pub fn cell_of(&self, x: &DVector<f64>) -> Cell {
        let u = self.frame.lattice_coords(x);
        Cell::new(u.iter().map(|v| round_half_up(v / self.scale)).collect(), self.scale, CellOwner::Ambient)
    }

    pub fn enumerate_cells(&self, region: &Region, r: f64) -> Result<Vec<Cell>> {
        enumerate_cells(CellOwner::Ambient, region, r)
    }
}

/// Orthogonal projection onto H_i = N_i^perp, in standard coordinates.
pub fn project_along(frame: &Frame, i: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
    if i >= frame.dim() {
        return Err(Error::Dimension(format!("direction {i} out of range")));
    }
    if x.len() != frame.dim() {
        return Err(Error::Dimension("point has wrong dimension".into()));
    }
    let n = frame.normal(i);
    Ok(x - n * n.dot(x))
}

pub(crate) fn check_section(frame: &Frame, slab: &SlabCondition) -> Result<usize> {
    let d = frame.dim();
    let k = slab.k();
    if slab.origin().len() != d {
        return Err(Error::Dimension("slab lives in another ambient space".into()));
    }
    if k < 1 || k >= d {
        return Err(Error::Invalid(format!("slab dimension k = {k} outside 1..=n")));
    }
    let comp = slab.complement();
    for (c, col) in comp.column_iter().enumerate() {
        let n = frame.normal(k + c);
        let dot = n.dot(&col);
        if (dot.abs() - 1.0).abs() > 1e-10 {
            return Err(Error::Invalid(format!(
                "frame normal {} does not match slab complement vector {c}",
                k + c
            )));
        }
        if frame.normal(0).dot(&col).abs() > 1e-10 {
            return Err(Error::Invalid("N_1 is not orthogonal to the slab complement".into()));
        }
    }
    Ok(k)
}

/// pi = pi_{N_1} ∘ pi_{N_{k+1}} ∘ .. ∘ pi_{N_{n+1}} applied to a point, with the
/// slab complement projections taken in the given order (rightmost first).
pub fn project_to_h_ordered(frame: &Frame, slab: &SlabCondition, order: &[usize], x: &DVector<f64>) -> Result<DVector<f64>> {
    let k = check_section(frame, slab)?;
    if x.len() != frame.dim() {
        return Err(Error::Dimension("point has wrong dimension".into()));
    }
    let mut y = x.clone();
    for &i in order.iter().rev() {
        if i < k || i >= frame.dim() {
            return Err(Error::Invalid(format!("direction {i} is not a slab complement direction")));
        }
        y = project_along(frame, i, &y)?;
    }
    project_along(frame, 0, &y)
}

/// The projector pi onto H ∩ H_1 (standard order of the composition).
pub fn project_to_h(frame: &Frame, slab: &SlabCondition, x: &DVector<f64>) -> Result<DVector<f64>> {
    let order: Vec<usize> = (slab.k()..frame.dim()).collect();
    project_to_h_ordered(frame, slab, &order, x)
}

/// A lattice induced on a subspace by projecting the frame lattice.
#[derive(Clone, Debug)]
pub struct InducedLattice {
    owner: CellOwner,
    /// Rows: orthonormal basis of the subspace (ambient -> subspace coordinates).
    coords: DMatrix<f64>,
    /// Ambient projector onto the subspace.
    projector: DMatrix<f64>,
    /// Columns: projected generators in subspace coordinates.
    generators: DMatrix<f64>,
    /// Inverse of `generators`; maps the lattice onto Z^m.
    to_integer: DMatrix<f64>,
    /// Frame directions whose projections generate this lattice.
    directions: Vec<usize>,
}

impl InducedLattice {
    /// L(H_i) = pi_{N_i}(L) in the orthonormal coordinates of `basis` (columns).
    pub fn hyperplane_with_basis(frame: &Frame, i: usize, basis: &DMatrix<f64>) -> Result<Self> {
        let d = frame.dim();
        if i >= d {
            return Err(Error::Dimension(format!("direction {i} out of range")));
        }
        if basis.nrows() != d || basis.ncols() != d - 1 {
            return Err(Error::Dimension("hyperplane basis has wrong shape".into()));
        }
        let n = frame.normal(i);
        let projector = DMatrix::identity(d, d) - n * n.transpose();
        let directions: Vec<usize> = (0..d).filter(|&j| j != i).collect();
        Self::build(CellOwner::Hyperplane(i), basis.transpose(), projector, frame, directions)
    }

    pub fn hyperplane(frame: &Frame, i: usize) -> Result<Self> {
        if i >= frame.dim() {
            return Err(Error::Dimension(format!("direction {i} out of range")));
        }
        Self::hyperplane_with_basis(frame, i, &frame.hyperplane_basis(i))
    }

    /// pi(L) on H ∩ H_1, generated by pi(N_2), .., pi(N_k).
    pub fn section(frame: &Frame, slab: &SlabCondition) -> Result<Self> {
        let k = check_section(frame, slab)?;
        let d = frame.dim();
        let mut killed = vec![frame.normal(0).clone()];
        killed.extend((k..d).map(|j| frame.normal(j).clone()));
        let basis = orthonormal_complement(&killed, d);
        let mut projector = DMatrix::zeros(d, d);
        for c in 0..d {
            let e = DVector::from_fn(d, |r, _| if r == c { 1.0 } else { 0.0 });
            projector.set_column(c, &project_to_h(frame, slab, &e)?);
        }
        Self::build(CellOwner::Section, basis.transpose(), projector, frame, (1..k).collect())
    }

    /// Section lattice expressed in the first k-1 coordinates of an adapted H_1 basis.
    pub fn section_with_basis(frame: &Frame, slab: &SlabCondition, basis: &DMatrix<f64>) -> Result<Self> {
        let mut s = Self::section(frame, slab)?;
        let m = s.dim();
        if basis.nrows() != frame.dim() || basis.ncols() != m {
            return Err(Error::Dimension("section basis has wrong shape".into()));
        }
        let check = basis.transpose() * &s.projector;
        if (check.clone() * check.transpose() - DMatrix::identity(m, m)).amax() > 1e-10 {
            return Err(Error::Invalid("basis does not span H ∩ H_1".into()));
        }
        s = Self::build(CellOwner::Section, basis.transpose(), s.projector.clone(), frame, s.directions.clone())?;
        Ok(s)
    }

    fn build(owner: CellOwner, coords: DMatrix<f64>, projector: DMatrix<f64>, frame: &Frame, directions: Vec<usize>) -> Result<Self> {
        let m = coords.nrows();
        let cols: Vec<DVector<f64>> = directions.iter().map(|&j| &coords * (&projector * frame.normal(j))).collect();
        let generators = DMatrix::from_columns(&cols);
        let to_integer = generators
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Invalid("projected generators are degenerate".into()))?;
        debug_assert_eq!(generators.nrows(), m);
        Ok(InducedLattice { owner, coords, projector, generators, to_integer, directions })
    }

    pub fn owner(&self) -> CellOwner {
        self.owner
    }

    /// Dimension m of the subspace.
    pub fn dim(&self) -> usize {
        self.coords.nrows()
    }

    pub fn directions(&self) -> &[usize] {
        &self.directions
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.generators
    }

    /// The linear map T taking the lattice onto Z^m.
    pub fn to_integer(&self) -> &DMatrix<f64> {
        &self.to_integer
    }

    /// Rows form an orthonormal basis of the subspace.
    pub fn coords_matrix(&self) -> &DMatrix<f64> {
        &self.coords
    }

    /// Subspace coordinates of the projection of an ambient point.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.coords * (&self.projector * x)
    }

    /// Ambient embedding of subspace coordinates.
    pub fn embed(&self, y: &DVector<f64>) -> DVector<f64> {
        self.coords.transpose() * y
    }

    /// Lattice coordinates (w.r.t. the projected generators) of subspace coordinates.
    pub fn lattice_coords(&self, y: &[f64]) -> DVector<f64> {
        &self.to_integer * DVector::from_column_slice(y)
    }

    /// Center of a cell in subspace coordinates.
    pub fn cell_center(&self, cell: &Cell) -> DVector<f64> {
        &self.generators * DVector::from_vec(cell.center())
    }

    pub fn cell_of(&self, y: &[f64], r: f64) -> Cell {
        let u = self.lattice_coords(y);
        Cell::new(u.iter().map(|v| round_half_up(v / r)).collect(), r, self.owner)
    }

    pub fn enumerate_cells(&self, region: &Region, r: f64) -> Result<Vec<Cell>> {
        enumerate_cells(self.owner, region, r)
    }

    /// Index of a projected ambient lattice point: coordinate `i` deleted.
    pub fn project_index(&self, j: &[i64]) -> Vec<i64> {
        self.directions.iter().map(|&d| j[d]).collect()
    }
}

/// The strip of H_1 whose base is pi(q), for a cell q of L(H_1).
pub fn strip_of(section: &InducedLattice, q: &Cell) -> Result<Strip> {
    if section.owner != CellOwner::Section {
        return Err(Error::OwnerMismatch("strip_of needs the section lattice".into()));
    }
    if q.owner != CellOwner::Hyperplane(0) {
        return Err(Error::OwnerMismatch(format!("strip_of needs a cell of L(H_1), got {:?}", q.owner)));
    }
    // L(H_1) keeps directions 1..=n; the section keeps 1..k-1, i.e. the first k-1 slots
    let m = section.dim();
    if q.index.len() < m {
        return Err(Error::Dimension("cell index shorter than the section".into()));
    }
    Ok(Strip { base: Cell::new(q.index[..m].to_vec(), q.scale, CellOwner::Section) })
}

/// Strip containing an ambient point (after projection by pi).
pub fn strip_containing(section: &InducedLattice, x: &DVector<f64>, r: f64) -> Strip {
    let y = section.project(x);
    Strip { base: section.cell_of(y.as_slice(), r) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(rng: &mut ChaCha8Rng, d: usize, s: f64) -> DVector<f64> {
        DVector::from_fn(d, |_, _| rng.gen_range(-s..s))
    }

    fn oblique3() -> Frame {
        Frame::from_directions(vec![vec![1.0, 0.2, 0.0], vec![0.1, 1.0, 0.3], vec![0.4, -0.2, 1.0]], 0.3).unwrap()
    }

    #[test]
    fn projection_along_normal() {
        let f = oblique3();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for i in 0..3 {
            let n = f.normal(i).clone();
            assert!(project_along(&f, i, &(&n * 2.5)).unwrap().norm() < 1e-14);
            for _ in 0..100 {
                let x = rand_vec(&mut rng, 3, 5.0);
                let p = project_along(&f, i, &x).unwrap();
                let pp = project_along(&f, i, &p).unwrap();
                assert!((&p - &pp).amax() < 1e-10);
            }
        }
        assert!(project_along(&f, 3, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn induced_lattice_drops_a_coordinate() {
        let f = oblique3();
        let lat = ObliqueLattice::new(f.clone(), 1.0).unwrap();
        for i in 0..3 {
            let ind = InducedLattice::hyperplane(&f, i).unwrap();
            for j in [[1i64, -2, 3], [0, 4, -1], [2, 2, 2]] {
                let y = ind.project(&lat.point(&j));
                let u = ind.lattice_coords(y.as_slice());
                let expect = ind.project_index(&j);
                for (a, b) in u.iter().zip(&expect) {
                    assert!((a - *b as f64).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn cell_of_examples() {
        let f = oblique3();
        let lat = ObliqueLattice::new(f, 2.0).unwrap();
        assert_eq!(lat.cell_of(&DVector::zeros(3)).index, vec![0, 0, 0]);
        assert_eq!(lat.cell_of(&lat.point(&[3, -1, 2])).index, vec![3, -1, 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let x = rand_vec(&mut rng, 3, 20.0);
            let c = lat.cell_of(&x);
            let u = lat.frame().lattice_coords(&x);
            for (v, &j) in u.iter().zip(&c.index) {
                assert!(*v >= 2.0 * (j as f64 - 0.5) - 1e-12 && *v < 2.0 * (j as f64 + 0.5) + 1e-12);
            }
            assert!(c.contains(u.as_slice()));
        }
        // ties round up
        let std = ObliqueLattice::new(Frame::standard(2), 1.0).unwrap();
        assert_eq!(std.cell_of(&DVector::from_vec(vec![0.5, -0.5])).index, vec![1, 0]);
    }

    #[test]
    fn distance_examples() {
        let a = Cell::new(vec![0, 0, 0], 3.0, CellOwner::Ambient);
        let b = Cell::new(vec![1, -1, 0], 3.0, CellOwner::Ambient);
        let c = Cell::new(vec![3, 0, 0], 3.0, CellOwner::Ambient);
        assert_eq!(cell_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(cell_distance(&a, &b).unwrap(), 0.0);
        assert_eq!(cell_distance(&a, &c).unwrap(), 6.0);
        // orthonormal frame: box [-1.5, 1.5] vs [7.5, 10.5] are 6 apart
        let other = Cell::new(vec![0, 0], 3.0, CellOwner::Hyperplane(0));
        assert!(cell_distance(&a, &other).is_err());
    }

    #[test]
    fn enumeration_examples() {
        let single = Cell::new(vec![2, -1], 4.0, CellOwner::Ambient);
        let cells = enumerate_cells(CellOwner::Ambient, &Region::Cell(single.clone()), 4.0).unwrap();
        assert_eq!(cells, vec![single]);
        // a box of side 4R aligned with the cell boundaries holds 4^2 cells
        let r = 2.0;
        let boxed = Region::Box { lo: vec![-0.5 * r; 2], hi: vec![3.5 * r; 2] };
        let cells = enumerate_cells(CellOwner::Ambient, &boxed, r).unwrap();
        assert_eq!(cells.len(), 16);
        assert!(cells.windows(2).all(|w| w[0].index < w[1].index));
        // odd ratios nest exactly around the origin
        let q = Cell::new(vec![0, 0, 0], 3.0 * r, CellOwner::Ambient);
        let inner = enumerate_cells(CellOwner::Ambient, &Region::Cell(q), r).unwrap();
        assert_eq!(inner.len(), 27);
        // covering
        let odd = Region::Box { lo: vec![-1.3, 0.2], hi: vec![2.9, 5.1] };
        let cells = enumerate_cells(CellOwner::Ambient, &odd, 1.0).unwrap();
        let vol: f64 = cells.iter().map(|c| c.volume_in_lattice_coords()).sum();
        assert!(vol >= odd.volume());
        assert!(enumerate_cells(CellOwner::Ambient, &odd, 0.0).is_err());
    }

    fn slab_frame() -> (Frame, SlabCondition) {
        // n = 3, k = 2: N_1 and the complement N_3, N_4 orthonormal; N_2 oblique
        let f = Frame::from_directions(
            vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.3, 1.0, 0.2, -0.1], vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]],
            0.3,
        )
        .unwrap();
        let slab = SlabCondition::from_complement(vec![0.0; 4], vec![vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]], 0.1).unwrap();
        (f, slab)
    }

    #[test]
    fn projection_to_section() {
        let (f, slab) = slab_frame();
        let n1 = f.normal(0).clone();
        assert!(project_to_h(&f, &slab, &n1).unwrap().norm() < 1e-14);
        let in_section = DVector::from_vec(vec![0.0, 2.0, 0.0, 0.0]);
        assert!((project_to_h(&f, &slab, &in_section).unwrap() - &in_section).norm() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = rand_vec(&mut rng, 4, 3.0);
            let a = project_to_h_ordered(&f, &slab, &[2, 3], &x).unwrap();
            let b = project_to_h_ordered(&f, &slab, &[3, 2], &x).unwrap();
            assert!((&a - &b).amax() < 1e-10);
            let aa = project_to_h(&f, &slab, &a).unwrap();
            assert!((&a - &aa).amax() < 1e-10);
        }
        let bad = SlabCondition::from_complement(vec![0.0; 4], vec![vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]], 0.1).unwrap();
        assert!(project_to_h(&f, &bad, &n1).is_err());
    }

    #[test]
    fn strips() {
        let (f, slab) = slab_frame();
        let section = InducedLattice::section(&f, &slab).unwrap();
        assert_eq!(section.dim(), 1);
        let q1 = Cell::new(vec![2, 0, 5], 1.5, CellOwner::Hyperplane(0));
        let q2 = Cell::new(vec![2, -3, 1], 1.5, CellOwner::Hyperplane(0));
        let q3 = Cell::new(vec![3, 0, 5], 1.5, CellOwner::Hyperplane(0));
        assert_eq!(strip_of(&section, &q1).unwrap(), strip_of(&section, &q2).unwrap());
        assert_ne!(strip_of(&section, &q1).unwrap(), strip_of(&section, &q3).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let x = rand_vec(&mut rng, 4, 10.0);
            let v = DVector::from_vec(vec![0.0, 0.0, rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)]);
            assert_eq!(strip_containing(&section, &x, 1.5), strip_containing(&section, &(&x + v), 1.5));
        }
        // the strip of a lattice cell contains the projection of its center
        let h1 = InducedLattice::hyperplane(&f, 0).unwrap();
        let lat = ObliqueLattice::new(f.clone(), 1.5).unwrap();
        let p = lat.point(&[4, 2, 0, 5]);
        let cell = h1.cell_of(h1.project(&p).as_slice(), 1.5);
        assert_eq!(cell.index, vec![2, 0, 5]);
        assert_eq!(strip_of(&section, &cell).unwrap(), strip_containing(&section, &p, 1.5));
    }

    proptest! {
        #[test]
        fn distance_is_symmetric(a in prop::collection::vec(-9i64..9, 3), b in prop::collection::vec(-9i64..9, 3)) {
            let qa = Cell::new(a, 2.0, CellOwner::Ambient);
            let qb = Cell::new(b, 2.0, CellOwner::Ambient);
            prop_assert_eq!(cell_distance(&qa, &qb).unwrap(), cell_distance(&qb, &qa).unwrap());
        }

        #[test]
        fn each_point_in_exactly_one_cell(x in -30.0f64..30.0, y in -30.0f64..30.0) {
            let lat = ObliqueLattice::new(Frame::sheared(2, 0.4).unwrap(), 3.0).unwrap();
            let p = DVector::from_vec(vec![x, y]);
            let c = lat.cell_of(&p);
            let u = lat.frame().lattice_coords(&p);
            let mut hits = 0;
            for dj in -1..=1 {
                for dk in -1..=1 {
                    let cand = Cell::new(vec![c.index[0] + dj, c.index[1] + dk], 3.0, CellOwner::Ambient);
                    if cand.contains(u.as_slice()) { hits += 1; }
                }
            }
            prop_assert_eq!(hits, 1);
        }
    }
}
