//! Uniform Cartesian box grids, MAC-staggered fields and the conservative
//! flux-form operators everything else is built on.
//!
//! Scalars live at cell centers. Vector fields live on faces: component `a`
//! is stored at the centers of the faces normal to axis `a`, including the
//! two boundary layers of faces. Boundary-normal faces carry the zero-flux
//! (Neumann) condition for scalars and the no-penetration condition for the
//! velocity.
//!
//! Indexing is x-fastest for both cells and faces. In two dimensions the
//! third axis has a single cell of unit thickness, so the same loops serve
//! both cases.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// A point in the box. The third coordinate is 0 in two dimensions.
pub type Point = [f64; 3];

/// Discretized axis-aligned box `[0, L_1] x ... x [0, L_dim]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    cells: [usize; 3],
    extents: [f64; 3],
    spacing: [f64; 3],
}

/// Shared handle to a grid; every field carries one.
pub type GridRef = Arc<Grid>;

pub const MIN_CELLS: usize = 4;

impl Grid {
    pub fn new(dim: usize, extents: &[f64], cells: &[usize]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(invalid(format!("dim must be 2 or 3, got {dim}")));
        }
        if extents.len() != dim || cells.len() != dim {
            return Err(invalid(format!(
                "expected {dim} extents and {dim} cell counts, got {} and {}",
                extents.len(),
                cells.len()
            )));
        }
        let mut g = Grid {
            dim,
            cells: [1; 3],
            extents: [1.0; 3],
            spacing: [1.0; 3],
        };
        for a in 0..dim {
            let (l, n) = (extents[a], cells[a]);
            if !(l.is_finite() && l > 0.0) {
                return Err(invalid(format!(
                    "extent on axis {a} must be positive, got {l}"
                )));
            }
            if n < MIN_CELLS {
                return Err(invalid(format!(
                    "axis {a} needs at least {MIN_CELLS} cells, got {n}"
                )));
            }
            g.cells[a] = n;
            g.extents[a] = l;
            g.spacing[a] = l / n as f64;
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    /// Cell counts padded to three axes (unused axes have one cell).
    pub fn cells3(&self) -> [usize; 3] {
        self.cells
    }

    pub fn cell_count(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn volume_element(&self) -> f64 {
        self.spacing[..self.dim].iter().product()
    }

    pub fn total_volume(&self) -> f64 {
        self.extents[..self.dim].iter().product()
    }

    pub fn h_min(&self) -> f64 {
        self.spacing().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_extent(&self) -> f64 {
        self.extents().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index distance between neighbouring cells along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.cells[0],
            _ => self.cells[0] * self.cells[1],
        }
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.cells[0] * (j + self.cells[1] * k)
    }

    pub fn cell_coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.cells[0];
        let rest = idx / self.cells[0];
        [i, rest % self.cells[1], rest / self.cells[1]]
    }

    pub fn cell_center(&self, idx: usize) -> Point {
        let c = self.cell_coords(idx);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = (c[a] as f64 + 0.5) * self.spacing[a];
        }
        p
    }

    /// Shape of the face array for component `axis`.
    pub fn face_dims(&self, axis: usize) -> [usize; 3] {
        let mut d = self.cells;
        d[axis] += 1;
        d
    }

    pub fn face_count(&self, axis: usize) -> usize {
        self.face_dims(axis).iter().product()
    }

    #[inline]
    pub fn face_index(&self, axis: usize, i: usize, j: usize, k: usize) -> usize {
        let d = self.face_dims(axis);
        i + d[0] * (j + d[1] * k)
    }

    pub fn face_coords(&self, axis: usize, idx: usize) -> [usize; 3] {
        let d = self.face_dims(axis);
        let i = idx % d[0];
        let rest = idx / d[0];
        [i, rest % d[1], rest / d[1]]
    }

    pub fn face_center(&self, axis: usize, idx: usize) -> Point {
        let c = self.face_coords(axis, idx);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            let offset = if a == axis { 0.0 } else { 0.5 };
            p[a] = (c[a] as f64 + offset) * self.spacing[a];
        }
        p
    }

    /// Index stride between neighbouring faces of component `axis` along `dir`.
    pub fn face_stride(&self, axis: usize, dir: usize) -> usize {
        let d = self.face_dims(axis);
        match dir {
            0 => 1,
            1 => d[0],
            _ => d[0] * d[1],
        }
    }

    /// True when the face lies on the wall normal to its own axis.
    #[inline]
    pub fn is_boundary_face(&self, axis: usize, coords: [usize; 3]) -> bool {
        coords[axis] == 0 || coords[axis] == self.cells[axis]
    }

    /// Distance from `x` to the nearest wall.
    pub fn wall_distance(&self, x: &Point) -> f64 {
        (0..self.dim)
            .map(|a| x[a].min(self.extents[a] - x[a]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: &Point) -> bool {
        (0..self.dim).all(|a| x[a] >= 0.0 && x[a] <= self.extents[a])
    }

    pub fn into_ref(self) -> GridRef {
        Arc::new(self)
    }
}

/// Builds a grid and wraps it in a shared handle.
pub fn make_grid(dim: usize, extents: &[f64], cells: &[usize]) -> Result<GridRef> {
    Grid::new(dim, extents, cells).map(Arc::new)
}

pub(crate) fn same_grid(a: &GridRef, b: &GridRef) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

pub(crate) fn check_same(a: &GridRef, b: &GridRef) -> Result<()> {
    if same_grid(a, b) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// One real value per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridRef,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &GridRef) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &GridRef, value: f64) -> Self {
        Self {
            grid: grid.clone(),
            data: vec![value; grid.cell_count()],
        }
    }

    /// Samples `f` at cell centers.
    pub fn from_fn(grid: &GridRef, mut f: impl FnMut(&Point) -> f64) -> Self {
        let data = (0..grid.cell_count())
            .map(|idx| f(&grid.cell_center(idx)))
            .collect();
        Self {
            grid: grid.clone(),
            data,
        }
    }

    pub fn from_vec(grid: &GridRef, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.cell_count() {
            return Err(invalid(format!(
                "scalar field needs {} values, got {}",
                grid.cell_count(),
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                field: "scalar field",
            });
        }
        Ok(Self {
            grid: grid.clone(),
            data,
        })
    }

    pub(crate) fn from_raw(grid: &GridRef, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), grid.cell_count());
        Self {
            grid: grid.clone(),
            data,
        }
    }

    pub fn grid(&self) -> &GridRef {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Plain sum of cell values in storage order.
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Discrete integral `sum(v) * vol`.
    pub fn integral(&self) -> f64 {
        self.sum() * self.grid.volume_element()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Volume-weighted inner product.
    pub fn dot_vol(&self, other: &ScalarField) -> f64 {
        let s: f64 = self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum();
        s * self.grid.volume_element()
    }

    /// `sum (v - shift)^2 * vol`.
    pub fn l2_sq_about(&self, shift: f64) -> f64 {
        let s: f64 = self.data.iter().map(|v| (v - shift) * (v - shift)).sum();
        s * self.grid.volume_element()
    }

    pub fn max_abs_about(&self, shift: f64) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max((v - shift).abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        Self::from_raw(&self.grid, self.data.iter().map(|&v| f(v)).collect())
    }
}

/// Face-staggered vector field (MAC layout).
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: GridRef,
    comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(grid: &GridRef) -> Self {
        let comps = (0..grid.dim())
            .map(|a| vec![0.0; grid.face_count(a)])
            .collect();
        Self {
            grid: grid.clone(),
            comps,
        }
    }

    /// Samples component `a` of `f` at the centers of the faces normal to
    /// axis `a`. Boundary-normal faces are sampled too; call
    /// [`VectorField::clear_boundary`] to impose the wall condition.
    pub fn from_fn(grid: &GridRef, mut f: impl FnMut(usize, &Point) -> f64) -> Self {
        let comps = (0..grid.dim())
            .map(|a| {
                (0..grid.face_count(a))
                    .map(|idx| f(a, &grid.face_center(a, idx)))
                    .collect()
            })
            .collect();
        Self {
            grid: grid.clone(),
            comps,
        }
    }

    pub fn from_components(grid: &GridRef, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.dim() {
            return Err(invalid(format!(
                "vector field needs {} components, got {}",
                grid.dim(),
                comps.len()
            )));
        }
        for (a, c) in comps.iter().enumerate() {
            if c.len() != grid.face_count(a) {
                return Err(invalid(format!(
                    "component {a} needs {} face values, got {}",
                    grid.face_count(a),
                    c.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    field: "vector field",
                });
            }
        }
        Ok(Self {
            grid: grid.clone(),
            comps,
        })
    }

    pub fn grid(&self) -> &GridRef {
        &self.grid
    }

    pub fn comp(&self, a: usize) -> &[f64] {
        &self.comps[a]
    }

    pub fn comp_mut(&mut self, a: usize) -> &mut [f64] {
        &mut self.comps[a]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|v| v.is_finite())
    }

    /// Zeroes every boundary-normal face.
    pub fn clear_boundary(&mut self) {
        let g = self.grid.clone();
        for a in 0..g.dim() {
            let d = g.face_dims(a);
            for k in 0..d[2] {
                for j in 0..d[1] {
                    for i in 0..d[0] {
                        let c = [i, j, k];
                        if g.is_boundary_face(a, c) {
                            self.comps[a][g.face_index(a, i, j, k)] = 0.0;
                        }
                    }
                }
            }
        }
    }

    /// Largest magnitude over boundary-normal faces.
    pub fn boundary_max_abs(&self) -> f64 {
        let g = &self.grid;
        let mut m: f64 = 0.0;
        for a in 0..g.dim() {
            for (idx, v) in self.comps[a].iter().enumerate() {
                if g.is_boundary_face(a, g.face_coords(a, idx)) {
                    m = m.max(v.abs());
                }
            }
        }
        m
    }

    /// Volume-weighted face inner product.
    pub fn dot_vol(&self, other: &VectorField) -> f64 {
        let mut s = 0.0;
        for (a, b) in self.comps.iter().zip(&other.comps) {
            s += a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        }
        s * self.grid.volume_element()
    }

    pub fn norm_l2_sq(&self) -> f64 {
        self.dot_vol(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flatten()
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &VectorField) {
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
    }

    pub fn scaled(&self, s: f64) -> VectorField {
        let mut out = self.clone();
        out.comps.iter_mut().flatten().for_each(|v| *v *= s);
        out
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Component `a` averaged from its two faces to each cell center.
    pub fn cell_average(&self, a: usize) -> ScalarField {
        let g = &self.grid;
        let n = g.cells3();
        let stride = g.face_stride(a, a);
        let mut out = vec![0.0; g.cell_count()];
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let f = g.face_index(a, i, j, k);
                    out[g.cell_index(i, j, k)] =
                        0.5 * (self.comps[a][f] + self.comps[a][f + stride]);
                }
            }
        }
        ScalarField::from_raw(g, out)
    }
}

/// Face-centered central differences. Boundary-normal faces are set to 0,
/// which is the discrete zero-flux condition.
pub fn gradient_cc(f: &ScalarField) -> VectorField {
    let g = f.grid().clone();
    let mut out = VectorField::zeros(&g);
    let v = f.values();
    for a in 0..g.dim() {
        let d = g.face_dims(a);
        let h = g.spacing()[a];
        let cs = g.stride(a);
        let comp = out.comp_mut(a);
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    let c = [i, j, k];
                    if c[a] == 0 || c[a] == d[a] - 1 {
                        continue;
                    }
                    let hi = g.cell_index(i, j, k);
                    comp[g.face_index(a, i, j, k)] = (v[hi] - v[hi - cs]) / h;
                }
            }
        }
    }
    out
}

/// Cell-centered flux-form divergence. Summed over cells it telescopes to
/// the net flux through boundary-normal faces.
pub fn divergence_fc(field: &VectorField) -> ScalarField {
    let g = field.grid().clone();
    let n = g.cells3();
    let mut out = vec![0.0; g.cell_count()];
    for a in 0..g.dim() {
        let h = g.spacing()[a];
        let fs = g.face_stride(a, a);
        let comp = field.comp(a);
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let lo = g.face_index(a, i, j, k);
                    out[g.cell_index(i, j, k)] += (comp[lo + fs] - comp[lo]) / h;
                }
            }
        }
    }
    ScalarField::from_raw(&g, out)
}

/// Zero-flux Laplacian, defined as `divergence_fc(gradient_cc(f))`.
pub fn laplacian_neumann(f: &ScalarField) -> ScalarField {
    divergence_fc(&gradient_cc(f))
}

/// Arithmetic mean of the two adjacent cells on every interior face;
/// boundary-normal faces are 0.
pub fn face_average(f: &ScalarField) -> VectorField {
    let g = f.grid().clone();
    let mut out = VectorField::zeros(&g);
    let v = f.values();
    for a in 0..g.dim() {
        let d = g.face_dims(a);
        let cs = g.stride(a);
        let comp = out.comp_mut(a);
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    let c = [i, j, k];
                    if c[a] == 0 || c[a] == d[a] - 1 {
                        continue;
                    }
                    let hi = g.cell_index(i, j, k);
                    comp[g.face_index(a, i, j, k)] = 0.5 * (v[hi] + v[hi - cs]);
                }
            }
        }
    }
    out
}

/// Transverse gradient component `b` evaluated at the faces of axis `a`
/// (`b != a`): the mean of the four surrounding `b`-face gradients.
/// Boundary-normal faces of axis `a` get 0.
pub(crate) fn transverse_at_faces(grad: &VectorField, a: usize, b: usize) -> Vec<f64> {
    let g = grad.grid();
    let d = g.face_dims(a);
    let gb = grad.comp(b);
    let bs = g.face_stride(b, b);
    let mut out = vec![0.0; g.face_count(a)];
    for k in 0..d[2] {
        for j in 0..d[1] {
            for i in 0..d[0] {
                let c = [i, j, k];
                if c[a] == 0 || c[a] == d[a] - 1 {
                    continue;
                }
                let mut lo = c;
                lo[a] -= 1;
                let hi = c;
                let f_lo = g.face_index(b, lo[0], lo[1], lo[2]);
                let f_hi = g.face_index(b, hi[0], hi[1], hi[2]);
                out[g.face_index(a, i, j, k)] =
                    0.25 * (gb[f_lo] + gb[f_lo + bs] + gb[f_hi] + gb[f_hi + bs]);
            }
        }
    }
    out
}
