//! Uniform node-centred 2D grids, scalar fields and second-order
//! finite-difference operators.
//!
//! Nodes include the boundary. `NeumannZero` is realised with mirror ghost
//! nodes (`f[-1] = f[1]`); `Dirichlet` pins the boundary nodes to a trace and
//! the operators return zero there, since those nodes are not unknowns.
//! Both operators are self-adjoint in the trapezoid-weighted inner product
//! returned by [`Grid2D::inner`].

use std::borrow::Cow;

use crate::error::{Error, Result};
use crate::exec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    x0: f64,
    y0: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, hx: f64, hy: f64, x0: f64, y0: f64) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 3x3 nodes, got {nx}x{ny}"
            )));
        }
        if !(hx > 0.0 && hy > 0.0 && hx.is_finite() && hy.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid spacings must be positive, got hx={hx} hy={hy}"
            )));
        }
        if !(x0.is_finite() && y0.is_finite()) {
            return Err(Error::InvalidParameter("grid origin must be finite".into()));
        }
        Ok(Grid2D { nx, ny, hx, hy, x0, y0 })
    }

    /// Grid with `n` intervals per unit length covering `[x0, x1] x [y0, y1]`.
    pub fn covering(x0: f64, x1: f64, y0: f64, y1: f64, h: f64) -> Result<Self> {
        let nx = ((x1 - x0) / h).round() as usize + 1;
        let ny = ((y1 - y0) / h).round() as usize + 1;
        Grid2D::new(nx, ny, h, h, x0, y0)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn hx(&self) -> f64 {
        self.hx
    }
    pub fn hy(&self) -> f64 {
        self.hy
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn y0(&self) -> f64 {
        self.y0
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx
    }
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.hy
    }
    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }
    pub fn y_max(&self) -> f64 {
        self.y(self.ny - 1)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    pub fn is_boundary_index(&self, k: usize) -> bool {
        self.is_boundary(k % self.nx, k / self.nx)
    }

    /// Number of boundary nodes.
    pub fn boundary_len(&self) -> usize {
        2 * self.nx + 2 * (self.ny - 2)
    }

    /// Boundary node indices in row-major order.
    pub fn boundary_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.is_boundary_index(k))
    }

    /// Trapezoid weight of node `(i, j)`: 1 inside, 1/2 on edges, 1/4 at corners.
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let wx = if i == 0 || i + 1 == self.nx { 0.5 } else { 1.0 };
        let wy = if j == 0 || j + 1 == self.ny { 0.5 } else { 1.0 };
        wx * wy
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::Dimension(format!(
                "expected {} values for a {}x{} grid, got {len}",
                self.len(),
                self.nx,
                self.ny
            )));
        }
        Ok(())
    }

    /// Trapezoid-weighted inner product, scaled by the cell area.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let nx = self.nx;
        exec::sum_rows(self.ny, |j| {
            let row = j * nx;
            let mut s = 0.0;
            for i in 0..nx {
                s += self.weight(i, j) * a[row + i] * b[row + i];
            }
            s
        }) * self.hx
            * self.hy
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }

    /// Trapezoid rule over the grid.
    pub fn integrate(&self, a: &[f64]) -> f64 {
        let nx = self.nx;
        exec::sum_rows(self.ny, |j| {
            let row = j * nx;
            let mut s = 0.0;
            for i in 0..nx {
                s += self.weight(i, j) * a[row + i];
            }
            s
        }) * self.hx
            * self.hy
    }
}

/// Scalar nodal field on a [`Grid2D`], stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid2D,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite field value at node {k}")));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Field::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid2D, value: f64) -> Self {
        Field {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64 + Sync + Send) -> Self {
        let mut values = vec![0.0; grid.len()];
        exec::for_each_row(&mut values, grid.nx(), |j, row| {
            let y = grid.y(j);
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(grid.x(i), y);
            }
        });
        Field { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Dimension(format!(
                "fields live on different grids ({}x{} vs {}x{})",
                self.grid.nx, self.grid.ny, other.grid.nx, other.grid.ny
            )));
        }
        Ok(())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        exec::max_indexed(self.values.len(), |k| self.values[k].abs())
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn integrate(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// Pointwise `f(a, b)` of two fields on the same grid.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64 + Sync + Send) -> Result<Field> {
        self.check_same_grid(other)?;
        let mut out = Field::zeros(self.grid);
        let (a, b) = (&self.values, &other.values);
        exec::for_each_indexed(&mut out.values, |k, v| *v = f(a[k], b[k]));
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync + Send) -> Field {
        let mut out = Field::zeros(self.grid);
        let a = &self.values;
        exec::for_each_indexed(&mut out.values, |k, v| *v = f(a[k]));
        out
    }
}

/// Boundary condition for one scalar field.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    NeumannZero,
    /// Fixed boundary values, one per boundary node in row-major order.
    Dirichlet(Vec<f64>),
}

impl BoundaryCondition {
    /// Dirichlet condition whose trace is the boundary of `f`.
    pub fn dirichlet_from(f: &Field) -> Self {
        let g = f.grid();
        BoundaryCondition::Dirichlet(g.boundary_indices().map(|k| f.values()[k]).collect())
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundaryCondition::Dirichlet(_))
    }

    /// Same kind with a zero trace; the condition satisfied by increments.
    pub fn homogeneous(&self, grid: &Grid2D) -> Self {
        match self {
            BoundaryCondition::NeumannZero => BoundaryCondition::NeumannZero,
            BoundaryCondition::Dirichlet(_) => BoundaryCondition::Dirichlet(vec![0.0; grid.boundary_len()]),
        }
    }

    pub fn check(&self, grid: &Grid2D) -> Result<()> {
        if let BoundaryCondition::Dirichlet(trace) = self {
            if trace.len() != grid.boundary_len() {
                return Err(Error::Dimension(format!(
                    "Dirichlet trace has {} values, grid has {} boundary nodes",
                    trace.len(),
                    grid.boundary_len()
                )));
            }
        }
        Ok(())
    }

    /// Overwrites the boundary nodes of `f` with the trace (no-op for Neumann).
    pub fn impose(&self, f: &mut Field) -> Result<()> {
        self.check(f.grid())?;
        if let BoundaryCondition::Dirichlet(trace) = self {
            let g = *f.grid();
            for (k, &t) in g.boundary_indices().zip(trace.iter()) {
                f.values_mut()[k] = t;
            }
        }
        Ok(())
    }

    /// Node values seen by the stencils: the field with the trace substituted.
    fn node_values<'a>(&self, f: &'a Field) -> Result<Cow<'a, [f64]>> {
        self.check(f.grid())?;
        match self {
            BoundaryCondition::NeumannZero => Ok(Cow::Borrowed(f.values())),
            BoundaryCondition::Dirichlet(trace) => {
                let mut v = f.values().to_vec();
                for (k, &t) in f.grid().boundary_indices().zip(trace.iter()) {
                    v[k] = t;
                }
                Ok(Cow::Owned(v))
            }
        }
    }
}

#[inline]
fn neighbours(i: usize, n: usize) -> (usize, usize) {
    // mirror ghosts at both ends
    let im = if i == 0 { 1 } else { i - 1 };
    let ip = if i + 1 == n { n - 2 } else { i + 1 };
    (im, ip)
}

/// Conservative flux-difference kernel; `k = None` is the plain Laplacian.
pub(crate) fn flux_divergence(grid: &Grid2D, values: &[f64], k: Option<&[f64]>, dirichlet: bool, out: &mut [f64]) {
    let (nx, ny) = (grid.nx, grid.ny);
    let (ihx2, ihy2) = (1.0 / (grid.hx * grid.hx), 1.0 / (grid.hy * grid.hy));
    exec::for_each_row(out, nx, |j, row| {
        let (jm, jp) = neighbours(j, ny);
        for (i, o) in row.iter_mut().enumerate() {
            if dirichlet && grid.is_boundary(i, j) {
                *o = 0.0;
                continue;
            }
            let (im, ip) = neighbours(i, nx);
            let c = j * nx + i;
            let (w, e, s, n) = (j * nx + im, j * nx + ip, jm * nx + i, jp * nx + i);
            let f = values;
            *o = match k {
                None => ((f[e] - f[c]) - (f[c] - f[w])) * ihx2 + ((f[n] - f[c]) - (f[c] - f[s])) * ihy2,
                Some(k) => {
                    let ke = (k[c] + k[e]) / 2.0;
                    let kw = (k[c] + k[w]) / 2.0;
                    let kn = (k[c] + k[n]) / 2.0;
                    let ks = (k[c] + k[s]) / 2.0;
                    (ke * (f[e] - f[c]) - kw * (f[c] - f[w])) * ihx2 + (kn * (f[n] - f[c]) - ks * (f[c] - f[s])) * ihy2
                }
            };
        }
    });
}

/// Sum of face conductivities over `h^2` at every node: the diagonal of
/// `-div(k grad .)`. Zero at Dirichlet boundary nodes.
pub(crate) fn flux_diagonal(grid: &Grid2D, k: Option<&[f64]>, dirichlet: bool, out: &mut [f64]) {
    let (nx, ny) = (grid.nx, grid.ny);
    let (ihx2, ihy2) = (1.0 / (grid.hx * grid.hx), 1.0 / (grid.hy * grid.hy));
    exec::for_each_row(out, nx, |j, row| {
        let (jm, jp) = neighbours(j, ny);
        for (i, o) in row.iter_mut().enumerate() {
            if dirichlet && grid.is_boundary(i, j) {
                *o = 0.0;
                continue;
            }
            let (im, ip) = neighbours(i, nx);
            let c = j * nx + i;
            *o = match k {
                None => 2.0 * ihx2 + 2.0 * ihy2,
                Some(k) => {
                    let kx = (k[c] + k[j * nx + ip]) / 2.0 + (k[c] + k[j * nx + im]) / 2.0;
                    let ky = (k[c] + k[jp * nx + i]) / 2.0 + (k[c] + k[jm * nx + i]) / 2.0;
                    kx * ihx2 + ky * ihy2
                }
            };
        }
    });
}

/// Five-point Laplacian.
pub fn laplacian(f: &Field, bc: &BoundaryCondition) -> Result<Field> {
    let values = bc.node_values(f)?;
    let mut out = Field::zeros(f.grid);
    flux_divergence(&f.grid, &values, None, bc.is_dirichlet(), &mut out.values);
    Ok(out)
}

/// `div(k grad theta)` in face-flux form with arithmetic-mean face conductivity.
pub fn div_k_grad(theta: &Field, k: &Field, bc: &BoundaryCondition) -> Result<Field> {
    theta.check_same_grid(k)?;
    if let Some(pos) = k.values.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Domain(format!("conductivity not positive at node {pos}")));
    }
    let values = bc.node_values(theta)?;
    let mut out = Field::zeros(theta.grid);
    flux_divergence(
        &theta.grid,
        &values,
        Some(&k.values),
        bc.is_dirichlet(),
        &mut out.values,
    );
    Ok(out)
}

/// `|grad f|^2` by central differences. At Neumann boundaries the normal
/// derivative vanishes; at Dirichlet boundaries it is one-sided.
pub fn gradient_squared(f: &Field, bc: &BoundaryCondition) -> Result<Field> {
    let values = bc.node_values(f)?;
    let g = f.grid;
    let dirichlet = bc.is_dirichlet();
    let mut out = Field::zeros(g);
    let v = &values;
    exec::for_each_row(&mut out.values, g.nx, |j, row| {
        for (i, o) in row.iter_mut().enumerate() {
            let dx = central(v, |a| g.index(a, j), i, g.nx, g.hx, dirichlet);
            let dy = central(v, |b| g.index(i, b), j, g.ny, g.hy, dirichlet);
            *o = dx * dx + dy * dy;
        }
    });
    Ok(out)
}

fn central(v: &[f64], at: impl Fn(usize) -> usize, i: usize, n: usize, h: f64, dirichlet: bool) -> f64 {
    if i == 0 {
        if dirichlet {
            (v[at(1)] - v[at(0)]) / h
        } else {
            0.0
        }
    } else if i + 1 == n {
        if dirichlet {
            (v[at(n - 1)] - v[at(n - 2)]) / h
        } else {
            0.0
        }
    } else {
        (v[at(i + 1)] - v[at(i - 1)]) / (2.0 * h)
    }
}

/// Node average of squared face differences.
///
/// Its trapezoid integral equals the face sum `sum_faces w (Df)^2 hx hy`,
/// which is `-<f, lap f>` under `NeumannZero`. The energy ledgers use this
/// form so that the discrete gradient energy is the one whose variation is
/// the five-point Laplacian.
pub fn compact_gradient_squared(f: &Field) -> Field {
    let g = f.grid;
    let v = &f.values;
    let mut out = Field::zeros(g);
    exec::for_each_row(&mut out.values, g.nx, |j, row| {
        for (i, o) in row.iter_mut().enumerate() {
            let sx = face_mean_sq(v, |a| g.index(a, j), i, g.nx, g.hx);
            let sy = face_mean_sq(v, |b| g.index(i, b), j, g.ny, g.hy);
            *o = sx + sy;
        }
    });
    out
}

fn face_mean_sq(v: &[f64], at: impl Fn(usize) -> usize, i: usize, n: usize, h: f64) -> f64 {
    let d = |a: usize, b: usize| {
        let t = (v[at(b)] - v[at(a)]) / h;
        t * t
    };
    if i == 0 {
        d(0, 1)
    } else if i + 1 == n {
        d(n - 2, n - 1)
    } else {
        0.5 * (d(i - 1, i) + d(i, i + 1))
    }
}

/// Trapezoid-rule integral of a field.
pub fn integrate(f: &Field) -> f64 {
    f.integrate()
}
