//! Matrix-free preconditioned conjugate gradients.
//!
//! Inner products are the trapezoid-weighted ones of the grid, in which the
//! finite-difference operators are self-adjoint. Residual norms reported in
//! [`SolveReport`] are measured in that norm.

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{flux_diagonal, flux_divergence, BoundaryCondition, Field, Grid2D};

/// A linear map on nodal fields.
pub trait LinearMap: Sync {
    fn grid(&self) -> &Grid2D;

    fn apply(&self, x: &[f64], out: &mut [f64]);

    /// Diagonal entries, used for Jacobi preconditioning when all positive.
    fn diagonal(&self) -> Option<&[f64]> {
        None
    }
}

/// Closure-backed map, mostly useful in tests and small studies.
pub struct FnMap<F> {
    grid: Grid2D,
    apply: F,
    diagonal: Option<Vec<f64>>,
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> FnMap<F> {
    pub fn new(grid: Grid2D, apply: F) -> Self {
        FnMap {
            grid,
            apply,
            diagonal: None,
        }
    }

    pub fn with_diagonal(mut self, diagonal: Vec<f64>) -> Self {
        self.diagonal = Some(diagonal);
        self
    }
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> LinearMap for FnMap<F> {
    fn grid(&self) -> &Grid2D {
        &self.grid
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        (self.apply)(x, out)
    }
    fn diagonal(&self) -> Option<&[f64]> {
        self.diagonal.as_deref()
    }
}

/// Diffusion coefficient of a [`ShiftedDiffusion`].
#[derive(Debug, Clone)]
pub enum Diffusion {
    Constant(f64),
    Nodal(Vec<f64>),
}

/// `x -> shift * x - div(k grad x)` with homogeneous boundary conditions.
///
/// Under a Dirichlet condition the boundary rows are the identity and the
/// interior rows see zero boundary values, so the map stays symmetric.
#[derive(Debug, Clone)]
pub struct ShiftedDiffusion {
    grid: Grid2D,
    shift: Vec<f64>,
    diffusion: Diffusion,
    fixed_boundary: bool,
    diagonal: Vec<f64>,
}

impl ShiftedDiffusion {
    pub fn new(grid: Grid2D, shift: Vec<f64>, diffusion: Diffusion, bc: &BoundaryCondition) -> Result<Self> {
        if shift.len() != grid.len() {
            return Err(Error::Dimension("shift length does not match grid".into()));
        }
        if let Diffusion::Nodal(k) = &diffusion {
            if k.len() != grid.len() {
                return Err(Error::Dimension("conductivity length does not match grid".into()));
            }
        }
        let fixed_boundary = bc.is_dirichlet();
        let mut diagonal = vec![0.0; grid.len()];
        match &diffusion {
            Diffusion::Constant(c) => {
                flux_diagonal(&grid, None, fixed_boundary, &mut diagonal);
                diagonal.iter_mut().for_each(|d| *d *= c);
            }
            Diffusion::Nodal(k) => flux_diagonal(&grid, Some(k), fixed_boundary, &mut diagonal),
        }
        for (k, d) in diagonal.iter_mut().enumerate() {
            if fixed_boundary && grid.is_boundary_index(k) {
                *d = 1.0;
            } else {
                *d += shift[k];
            }
        }
        Ok(ShiftedDiffusion {
            grid,
            shift,
            diffusion,
            fixed_boundary,
            diagonal,
        })
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn is_fixed(&self, k: usize) -> bool {
        self.fixed_boundary && self.grid.is_boundary_index(k)
    }
}

impl LinearMap for ShiftedDiffusion {
    fn grid(&self) -> &Grid2D {
        &self.grid
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let masked;
        let input = if self.fixed_boundary {
            let mut v = x.to_vec();
            for k in g.boundary_indices() {
                v[k] = 0.0;
            }
            masked = v;
            &masked[..]
        } else {
            x
        };
        match &self.diffusion {
            Diffusion::Constant(c) => {
                flux_divergence(g, input, None, self.fixed_boundary, out);
                let c = *c;
                exec::for_each_indexed(out, |k, o| {
                    *o = self.shift[k] * input[k] - c * *o;
                });
            }
            Diffusion::Nodal(kf) => {
                flux_divergence(g, input, Some(kf), self.fixed_boundary, out);
                exec::for_each_indexed(out, |k, o| {
                    *o = self.shift[k] * input[k] - *o;
                });
            }
        }
        if self.fixed_boundary {
            for k in g.boundary_indices() {
                out[k] = x[k];
            }
        }
    }

    fn diagonal(&self) -> Option<&[f64]> {
        Some(&self.diagonal)
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_residual_norm: f64,
    pub converged: bool,
    /// Residual norm after each iteration, starting with the initial residual.
    pub residual_history: Vec<f64>,
}

/// Solves `op(x) = rhs` by conjugate gradients, starting from `x0`.
///
/// Converged when `|op(x) - rhs| <= rel_tol * |rhs|`. Jacobi preconditioning
/// is used when `op` supplies a strictly positive diagonal. Running out of
/// iterations is not an error; the report says `converged == false`.
pub fn conjugate_gradient(
    op: &impl LinearMap,
    rhs: &Field,
    x0: Field,
    rel_tol: f64,
    max_iters: usize,
) -> Result<(Field, SolveReport)> {
    let g = *op.grid();
    if rhs.grid() != &g || x0.grid() != &g {
        return Err(Error::Dimension("operator, rhs and initial guess grids differ".into()));
    }
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "rel_tol must be positive, got {rel_tol}"
        )));
    }
    let n = g.len();
    let b = rhs.values();
    let b_norm = g.norm(b);
    if b_norm == 0.0 {
        let report = SolveReport {
            iterations: 0,
            final_residual_norm: 0.0,
            converged: true,
            residual_history: vec![0.0],
        };
        return Ok((Field::zeros(g), report));
    }
    let inv_diag: Option<Vec<f64>> = op
        .diagonal()
        .filter(|d| d.len() == n && d.iter().all(|&v| v > 0.0 && v.is_finite()))
        .map(|d| d.iter().map(|v| 1.0 / v).collect());
    let precondition = |r: &[f64], z: &mut [f64]| match &inv_diag {
        Some(m) => exec::for_each_indexed(z, |k, zk| *zk = m[k] * r[k]),
        None => z.copy_from_slice(r),
    };

    let tol = rel_tol * b_norm;
    let mut x = x0.into_values();
    let mut r = vec![0.0; n];
    op.apply(&x, &mut r);
    exec::for_each_indexed(&mut r, |k, rk| *rk = b[k] - *rk);
    let mut r_norm = g.norm(&r);
    let mut history = vec![r_norm];
    if r_norm <= tol {
        let report = SolveReport {
            iterations: 0,
            final_residual_norm: r_norm,
            converged: true,
            residual_history: history,
        };
        return Ok((Field::new(g, x)?, report));
    }

    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = g.inner(&r, &z);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        op.apply(&p, &mut ap);
        let pap = g.inner(&p, &ap);
        if !(pap.is_finite() && pap != 0.0) {
            break;
        }
        let alpha = rz / pap;
        exec::for_each_indexed(&mut x, |k, xk| *xk += alpha * p[k]);
        exec::for_each_indexed(&mut r, |k, rk| *rk -= alpha * ap[k]);
        r_norm = g.norm(&r);
        history.push(r_norm);
        if r_norm <= tol {
            converged = true;
            break;
        }
        precondition(&r, &mut z);
        let rz_next = g.inner(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        exec::for_each_indexed(&mut p, |k, pk| *pk = z[k] + beta * *pk);
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("conjugate gradient produced non-finite values".into()));
    }
    let report = SolveReport {
        iterations,
        final_residual_norm: r_norm,
        converged,
        residual_history: history,
    };
    Ok((Field::new(g, x)?, report))
}

/// Dense Gaussian elimination with partial pivoting. Reference solver for
/// small systems assembled column by column from a [`LinearMap`].
pub fn dense_solve(op: &impl LinearMap, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = op.grid().len();
    if rhs.len() != n {
        return Err(Error::Dimension("rhs length does not match operator".into()));
    }
    // a[row][col]
    let mut a = vec![vec![0.0; n + 1]; n];
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for c in 0..n {
        e[c] = 1.0;
        op.apply(&e, &mut col);
        e[c] = 0.0;
        for r in 0..n {
            a[r][c] = col[r];
        }
    }
    for r in 0..n {
        a[r][n] = rhs[r];
    }
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap_or(k);
        if a[piv][k].abs() < 1e-300 {
            return Err(Error::Domain("singular matrix in dense solve".into()));
        }
        a.swap(k, piv);
        let (top, rest) = a.split_at_mut(k + 1);
        let pivot_row = &top[k];
        for row in rest.iter_mut() {
            let f = row[k] / pivot_row[k];
            if f != 0.0 {
                for (r, p) in row[k..].iter_mut().zip(&pivot_row[k..]) {
                    *r -= f * p;
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (a[i][n] - s) / a[i][i];
    }
    Ok(x)
}
