//! Semi-implicit time integration.
//!
//! One step first advances the phase with implicit Euler at frozen
//! temperature,
//!
//! ```text
//! (phi' - phi) / dt = -gamma * mu(phi', theta)
//! ```
//!
//! solved by Newton with CG inner solves, and then advances the temperature
//! with the linear implicit system
//!
//! ```text
//! c_v (theta' - theta) / dt = div(k grad theta') - gamma C mu' (phi'^2 - 1) theta' + gamma mu'^2
//! ```
//!
//! where `mu' = mu(phi', theta)` and `C = chi lambda / theta_c`. A failed step is
//! retried as two half steps, recursively, up to `dt_halvings_max` levels.

use thiserror::Error;

use crate::error::{Error, Result};
use crate::grid::{div_k_grad, laplacian, BoundaryCondition, Field};
use crate::linsolve::{conjugate_gradient, Diffusion, ShiftedDiffusion, SolveReport};
use crate::model::ModelParams;

/// Phase field, temperature and clock.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub phi: Field,
    pub theta: Field,
    pub time: f64,
    pub step: u64,
    /// `(phi^{n+1} - phi^n) / dt` of the most recent step; zero initially.
    pub last_dphi_dt: Field,
}

impl SimState {
    pub fn new(phi: Field, theta: Field) -> Result<Self> {
        phi.check_same_grid(&theta)?;
        let state = SimState {
            last_dphi_dt: Field::zeros(*phi.grid()),
            phi,
            theta,
            time: 0.0,
            step: 0,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        self.phi.check_same_grid(&self.theta)?;
        self.phi.check_same_grid(&self.last_dphi_dt)?;
        if !(self.phi.all_finite() && self.theta.all_finite()) {
            return Err(Error::Domain("state contains non-finite values".into()));
        }
        if let Some(k) = self.theta.values().iter().position(|&t| !(t > 0.0)) {
            return Err(Error::Domain(format!("temperature not positive at node {k}")));
        }
        Ok(())
    }
}

/// Boundary conditions of both fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundaries {
    pub phi: BoundaryCondition,
    pub theta: BoundaryCondition,
}

impl Boundaries {
    pub fn neumann() -> Self {
        Boundaries {
            phi: BoundaryCondition::NeumannZero,
            theta: BoundaryCondition::NeumannZero,
        }
    }

    /// Dirichlet conditions frozen from the boundary values of `state`.
    pub fn dirichlet_from(state: &SimState) -> Self {
        Boundaries {
            phi: BoundaryCondition::dirichlet_from(&state.phi),
            theta: BoundaryCondition::dirichlet_from(&state.theta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControls {
    pub dt: f64,
    pub newton_rel_tol: f64,
    pub newton_max_iters: usize,
    pub cg_rel_tol: f64,
    /// `None` means `10 * nx * ny`.
    pub cg_max_iters: Option<usize>,
    pub dt_halvings_max: u32,
}

impl Default for StepControls {
    fn default() -> Self {
        StepControls {
            dt: 1e-3,
            newton_rel_tol: 1e-8,
            newton_max_iters: 50,
            cg_rel_tol: 1e-10,
            cg_max_iters: None,
            dt_halvings_max: 8,
        }
    }
}

impl StepControls {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dt", self.dt),
            ("newton_rel_tol", self.newton_rel_tol),
            ("cg_rel_tol", self.cg_rel_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.newton_max_iters == 0 || self.cg_max_iters == Some(0) {
            return Err(Error::InvalidParameter("iteration limits must be positive".into()));
        }
        Ok(())
    }

    fn cg_limit(&self, n: usize) -> usize {
        self.cg_max_iters.unwrap_or(10 * n)
    }
}

/// Why a single (sub)step could not be completed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepFailure {
    #[error("Newton did not converge after {iterations} iterations (residual {residual:.3e})")]
    Newton { iterations: usize, residual: f64 },
    #[error("{stage} linear solve did not converge ({iterations} iterations, residual {residual:.3e})")]
    LinearSolve {
        stage: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("temperature system diagonal not positive at node {node} ({value:.3e})")]
    NonPositiveDiagonal { node: usize, value: f64 },
    #[error("temperature not positive at node {node} ({value:.3e})")]
    NonPositiveTemperature { node: usize, value: f64 },
    #[error(transparent)]
    Numeric(#[from] Error),
}

/// Fatal error from [`advance`]: every allowed halving failed.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("step from t={time} with dt={dt} failed after {halvings} halvings: {cause}")]
pub struct StepError {
    pub time: f64,
    pub dt: f64,
    pub halvings: u32,
    pub cause: StepFailure,
}

/// Result of the phase sub-step.
#[derive(Debug, Clone)]
pub struct PhiStep {
    pub phi: Field,
    /// `mu(phi^{n+1}, theta^n)`, the potential the temperature step consumes.
    pub mu: Field,
    pub newton_iters: usize,
    pub cg_iters: usize,
}

#[derive(Debug, Clone)]
pub struct ThetaStep {
    pub theta: Field,
    pub cg_iters: usize,
}

/// Iteration counts of one call to [`advance`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub newton_iters: usize,
    pub cg_iters: usize,
    pub substeps: usize,
    /// Deepest halving level used.
    pub halvings: u32,
}

fn mask_fixed(values: &mut [f64], bc: &BoundaryCondition, grid: &crate::grid::Grid2D) {
    if bc.is_dirichlet() {
        for k in grid.boundary_indices() {
            values[k] = 0.0;
        }
    }
}

fn check_solve(stage: &'static str, rep: &SolveReport) -> Result<(), StepFailure> {
    if rep.converged {
        Ok(())
    } else {
        Err(StepFailure::LinearSolve {
            stage,
            iterations: rep.iterations,
            residual: rep.final_residual_norm,
        })
    }
}

/// Implicit Euler step of the phase equation at frozen `state.theta`.
pub fn phi_step(
    state: &SimState,
    params: &ModelParams,
    controls: &StepControls,
    bc_phi: &BoundaryCondition,
) -> Result<PhiStep, StepFailure> {
    let grid = *state.phi.grid();
    let dt = controls.dt;
    let gamma = params.mobility;
    let coupling = params.coupling_strength();
    let tol = controls.newton_rel_tol * state.phi.max_abs().max(1.0);
    let theta = &state.theta;

    let mut phi = state.phi.clone();
    bc_phi.impose(&mut phi)?;
    let homogeneous = bc_phi.homogeneous(&grid);
    let mut newton_iters = 0;
    let mut cg_iters = 0;
    loop {
        let lap = laplacian(&phi, bc_phi)?;
        let mu = params.chemical_potential(&phi, theta, &lap)?;
        let mut residual = phi.zip_map(&state.phi, |a, b| a - b)?;
        {
            let r = residual.values_mut();
            let m = mu.values();
            r.iter_mut().zip(m).for_each(|(r, m)| *r += dt * gamma * m);
            mask_fixed(r, bc_phi, &grid);
        }
        let res_norm = residual.max_abs();
        if res_norm <= tol {
            return Ok(PhiStep {
                phi,
                mu,
                newton_iters,
                cg_iters,
            });
        }
        if newton_iters >= controls.newton_max_iters || !res_norm.is_finite() {
            return Err(StepFailure::Newton {
                iterations: newton_iters,
                residual: res_norm,
            });
        }

        let eps = params.epsilon;
        let theta_c = params.theta_c;
        let shift: Vec<f64> = phi
            .values()
            .iter()
            .zip(theta.values())
            .map(|(&p, &t)| 1.0 + dt * gamma * ((3.0 * p * p - 1.0) / eps + 2.0 * coupling * (t - theta_c) * p))
            .collect();
        let jac = ShiftedDiffusion::new(grid, shift, Diffusion::Constant(dt * gamma * eps), &homogeneous)?;
        let rhs = residual.map(|r| -r);
        let (delta, rep) = conjugate_gradient(
            &jac,
            &rhs,
            Field::zeros(grid),
            controls.cg_rel_tol,
            controls.cg_limit(grid.len()),
        )?;
        cg_iters += rep.iterations;
        check_solve("Newton", &rep)?;
        phi.values_mut()
            .iter_mut()
            .zip(delta.values())
            .for_each(|(p, d)| *p += d);
        newton_iters += 1;
    }
}

/// Linear implicit temperature step given the new phase and its potential.
pub fn theta_step(
    state: &SimState,
    phi_new: &Field,
    mu_new: &Field,
    params: &ModelParams,
    controls: &StepControls,
    bc_theta: &BoundaryCondition,
) -> Result<ThetaStep, StepFailure> {
    let grid = *state.theta.grid();
    phi_new.check_same_grid(&state.theta)?;
    mu_new.check_same_grid(&state.theta)?;
    let dt = controls.dt;
    let gamma = params.mobility;
    let coupling = params.coupling_strength();
    let c_v = params.c_v;
    let conductivity = phi_new.map(|p| params.conductivity(p));

    let shift: Vec<f64> = phi_new
        .values()
        .iter()
        .zip(mu_new.values())
        .map(|(&p, &m)| c_v / dt + gamma * coupling * m * (p * p - 1.0))
        .collect();
    for (k, &d) in shift.iter().enumerate() {
        let fixed = bc_theta.is_dirichlet() && grid.is_boundary_index(k);
        if !fixed && !(d > 0.0) {
            return Err(StepFailure::NonPositiveDiagonal { node: k, value: d });
        }
    }

    // Solve for the increment: A (theta^n + delta) = c_v/dt theta^n + gamma mu^2.
    let flux = div_k_grad(&state.theta, &conductivity, bc_theta)?;
    let mut rhs = Field::zeros(grid);
    {
        let (t, f, m, p) = (state.theta.values(), flux.values(), mu_new.values(), phi_new.values());
        for (k, r) in rhs.values_mut().iter_mut().enumerate() {
            let reaction = gamma * coupling * m[k] * (p[k] * p[k] - 1.0);
            *r = gamma * m[k] * m[k] + f[k] - reaction * t[k];
        }
        mask_fixed(rhs.values_mut(), bc_theta, &grid);
    }
    let op = ShiftedDiffusion::new(
        grid,
        shift,
        Diffusion::Nodal(conductivity.values().to_vec()),
        &bc_theta.homogeneous(&grid),
    )?;
    let (delta, rep) = conjugate_gradient(
        &op,
        &rhs,
        Field::zeros(grid),
        controls.cg_rel_tol,
        controls.cg_limit(grid.len()),
    )?;
    check_solve("temperature", &rep)?;
    let theta = state.theta.zip_map(&delta, |t, d| t + d)?;
    if let Some((node, &value)) = theta.values().iter().enumerate().find(|(_, &t)| !(t > 0.0)) {
        return Err(StepFailure::NonPositiveTemperature { node, value });
    }
    Ok(ThetaStep {
        theta,
        cg_iters: rep.iterations,
    })
}

/// One full step of size `controls.dt`; no retry.
fn single_step(
    state: &SimState,
    params: &ModelParams,
    controls: &StepControls,
    bcs: &Boundaries,
) -> Result<(SimState, StepStats), StepFailure> {
    let ps = phi_step(state, params, controls, &bcs.phi)?;
    let ts = theta_step(state, &ps.phi, &ps.mu, params, controls, &bcs.theta)?;
    let dt = controls.dt;
    let last_dphi_dt = ps.phi.zip_map(&state.phi, |a, b| (a - b) / dt)?;
    let next = SimState {
        phi: ps.phi,
        theta: ts.theta,
        time: state.time + dt,
        step: state.step,
        last_dphi_dt,
    };
    let stats = StepStats {
        newton_iters: ps.newton_iters,
        cg_iters: ps.cg_iters + ts.cg_iters,
        substeps: 1,
        halvings: 0,
    };
    Ok((next, stats))
}

fn step_with_halving(
    state: &SimState,
    params: &ModelParams,
    controls: &StepControls,
    bcs: &Boundaries,
    depth: u32,
) -> Result<(SimState, StepStats), StepFailure> {
    match single_step(state, params, controls, bcs) {
        Ok(ok) => Ok(ok),
        Err(_) if depth < controls.dt_halvings_max => {
            let half = StepControls {
                dt: controls.dt / 2.0,
                ..*controls
            };
            let (mid, a) = step_with_halving(state, params, &half, bcs, depth + 1)?;
            let (end, b) = step_with_halving(&mid, params, &half, bcs, depth + 1)?;
            let stats = StepStats {
                newton_iters: a.newton_iters + b.newton_iters,
                cg_iters: a.cg_iters + b.cg_iters,
                substeps: a.substeps + b.substeps,
                halvings: a.halvings.max(b.halvings).max(depth + 1),
            };
            Ok((end, stats))
        }
        Err(e) => Err(e),
    }
}

/// Advances `state` by `controls.dt`, sub-stepping on failure.
pub fn advance(
    state: &SimState,
    params: &ModelParams,
    controls: &StepControls,
    bcs: &Boundaries,
) -> Result<(SimState, StepStats), StepError> {
    let fail = |cause: StepFailure| StepError {
        time: state.time,
        dt: controls.dt,
        halvings: controls.dt_halvings_max,
        cause,
    };
    state.validate().map_err(|e| fail(e.into()))?;
    let (mut next, stats) = step_with_halving(state, params, controls, bcs, 0).map_err(fail)?;
    let dt = controls.dt;
    next.last_dphi_dt = next
        .phi
        .zip_map(&state.phi, |a, b| (a - b) / dt)
        .map_err(|e| fail(e.into()))?;
    next.time = state.time + dt;
    next.step = state.step + 1;
    Ok((next, stats))
}
