//! Self-checks run by `nisoac verify`: analytic constants, operator
//! convergence orders and the CG solver against dense elimination.

use std::f64::consts::{PI, SQRT_2};

use crate::grid::{div_k_grad, laplacian, BoundaryCondition, Field, Grid2D};
use crate::linsolve::{conjugate_gradient, dense_solve, Diffusion, ShiftedDiffusion};
use crate::model::potential_w_prime;
use crate::reference::{
    equipartition_integral, mcf_circle_radius, profile_gradient_integral, tanh_profile, tanh_profile_second,
};

pub const MIN_ORDER: f64 = 1.9;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Perturbs the Laplacian by a first-order error. Negative control for
    /// the convergence check.
    pub broken_stencil: bool,
}

fn unit_grid(n: usize) -> Grid2D {
    let h = 1.0 / (n - 1) as f64;
    Grid2D::new(n, n, h, h, 0.0, 0.0).expect("valid grid")
}

fn cc(x: f64, y: f64) -> f64 {
    (PI * x).cos() * (PI * y).cos()
}

/// Max-norm error of the Neumann Laplacian of `cos(pi x) cos(pi y)` on an
/// `n x n` unit grid.
pub fn laplacian_error(n: usize, broken: bool) -> f64 {
    let g = unit_grid(n);
    let u = Field::from_fn(g, cc);
    let mut lap = laplacian(&u, &BoundaryCondition::NeumannZero).expect("same grid");
    if broken {
        let h = g.hx();
        lap = lap.map(|v| v * (1.0 + h));
    }
    let exact = Field::from_fn(g, |x, y| -2.0 * PI * PI * cc(x, y));
    lap.zip_map(&exact, |a, b| a - b).expect("same grid").max_abs()
}

/// Max-norm error of `div(k grad u)` for `u = cos(pi x) cos(pi y)`,
/// `k = 2 + u`, Neumann, on an `n x n` unit grid.
pub fn div_k_grad_error(n: usize) -> f64 {
    let g = unit_grid(n);
    let u = Field::from_fn(g, cc);
    let k = u.map(|v| 2.0 + v);
    let out = div_k_grad(&u, &k, &BoundaryCondition::NeumannZero).expect("positive k");
    let exact = Field::from_fn(g, |x, y| {
        let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
        let grad_sq = PI * PI * (sx * sx * cy * cy + cx * cx * sy * sy);
        let u = cx * cy;
        grad_sq - 2.0 * PI * PI * (2.0 + u) * u
    });
    out.zip_map(&exact, |a, b| a - b).expect("same grid").max_abs()
}

/// Observed order between grids with `n` and `2n - 1` nodes per side.
pub fn observed_order(err: impl Fn(usize) -> f64, n: usize) -> f64 {
    (err(n) / err(2 * n - 1)).log2()
}

/// Largest scaled difference between CG and dense solutions of shifted
/// diffusion systems on grids up to 12 x 12.
pub fn cg_vs_dense_error() -> f64 {
    let mut worst: f64 = 0.0;
    for n in 3..=12 {
        let g = unit_grid(n);
        let rhs = Field::from_fn(g, |x, y| (3.0 * x + 1.0).sin() + (5.0 * y).cos() * x);
        let k: Vec<f64> = Field::from_fn(g, |x, y| 1.0 + 0.5 * x * y).into_values();
        let shift = Field::from_fn(g, |x, y| 10.0 + x - y).into_values();
        let dirichlet = BoundaryCondition::dirichlet_from(&Field::zeros(g));
        for bc in [BoundaryCondition::NeumannZero, dirichlet] {
            let op = ShiftedDiffusion::new(g, shift.clone(), Diffusion::Nodal(k.clone()), &bc).expect("valid operator");
            let (x, rep) = conjugate_gradient(&op, &rhs, Field::zeros(g), 1e-14, 1000).expect("valid system");
            let dense = dense_solve(&op, rhs.values()).expect("non-singular");
            let scale = dense.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let diff = x
                .values()
                .iter()
                .zip(&dense)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            worst = worst.max(if rep.converged { diff / scale } else { f64::INFINITY });
        }
    }
    worst
}

/// Largest residual of `Phi0'' = W'(Phi0)` on 1000 points of `[-10, 10]`.
pub fn tanh_ode_residual() -> f64 {
    (0..1000)
        .map(|k| {
            let z = -10.0 + 20.0 * k as f64 / 999.0;
            (tanh_profile_second(z) - potential_w_prime(tanh_profile(z))).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest deviation of the finite-difference slope of the curvature-flow
/// radius from `-1/R` for `R` in `[0.3, 0.6]`.
pub fn mcf_ode_residual() -> f64 {
    let dt = 1e-7;
    (0..=30)
        .map(|k| {
            let r = 0.3 + 0.01 * k as f64;
            let a = mcf_circle_radius(r, 0.0).expect("positive");
            let b = mcf_circle_radius(r, dt).expect("positive");
            let mid = mcf_circle_radius(r, dt / 2.0).expect("positive");
            ((b - a) / dt + 1.0 / mid).abs()
        })
        .fold(0.0, f64::max)
}

pub fn run_checks(opts: VerifyOptions) -> Vec<Check> {
    let mut out = Vec::new();

    let target = SQRT_2 / 3.0;
    let v = equipartition_integral(20.0, 100_000);
    out.push(Check {
        name: "equipartition",
        passed: (v - target).abs() <= 1e-7,
        detail: format!("equipartition {v:.7} vs {target:.7}"),
    });

    let target = 2.0 * SQRT_2 / 3.0;
    let v = profile_gradient_integral(20.0, 100_000);
    out.push(Check {
        name: "jump_constant",
        passed: (v - target).abs() <= 1e-8,
        detail: format!("profile gradient integral {v:.9} vs {target:.9}"),
    });

    let r = tanh_ode_residual();
    out.push(Check {
        name: "tanh_ode",
        passed: r < 1e-10,
        detail: format!("tanh profile ODE residual {r:.2e} (limit 1e-10)"),
    });

    let broken = opts.broken_stencil;
    let order = observed_order(|n| laplacian_error(n, broken), 33);
    out.push(Check {
        name: "laplacian_order",
        passed: order >= MIN_ORDER,
        detail: format!("laplacian order {order:.3} (need >= {MIN_ORDER})"),
    });

    let order = observed_order(div_k_grad_error, 33);
    out.push(Check {
        name: "div_k_grad_order",
        passed: order >= MIN_ORDER,
        detail: format!("div_k_grad order {order:.3} (need >= {MIN_ORDER})"),
    });

    let e = cg_vs_dense_error();
    out.push(Check {
        name: "cg_vs_dense",
        passed: e <= 1e-8,
        detail: format!("cg vs dense max scaled difference {e:.2e} (limit 1e-8)"),
    });

    let r = mcf_ode_residual();
    out.push(Check {
        name: "mcf_ode",
        passed: r <= 1e-6,
        detail: format!("curvature-flow radius ODE residual {r:.2e} (limit 1e-6)"),
    });

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        let checks = run_checks(VerifyOptions::default());
        for c in &checks {
            assert!(c.passed, "{}", c.detail);
        }
        assert_eq!(checks[0].detail, "equipartition 0.4714045 vs 0.4714045");
    }

    #[test]
    fn broken_stencil_detected() {
        let checks = run_checks(VerifyOptions { broken_stencil: true });
        let lap = checks.iter().find(|c| c.name == "laplacian_order").unwrap();
        assert!(!lap.passed, "{}", lap.detail);
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            run_checks(VerifyOptions::default()),
            run_checks(VerifyOptions::default())
        );
    }
}
