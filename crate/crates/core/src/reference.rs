//! Closed-form solutions used as oracles by tests and `verify`.

use std::f64::consts::{PI, SQRT_2};

use crate::model::potential_w;

/// Radius of a circle under motion by mean curvature, `sqrt(R0^2 - 2t)`.
/// `None` once the circle has vanished.
pub fn mcf_circle_radius(r0: f64, t: f64) -> Option<f64> {
    let s = r0 * r0 - 2.0 * t;
    (s > 0.0).then(|| s.sqrt())
}

/// One-dimensional stationary interface profile `tanh(z / sqrt 2)`.
pub fn tanh_profile(z: f64) -> f64 {
    (z / SQRT_2).tanh()
}

/// First derivative of [`tanh_profile`].
pub fn tanh_profile_prime(z: f64) -> f64 {
    let t = tanh_profile(z);
    (1.0 - t * t) / SQRT_2
}

/// Second derivative of [`tanh_profile`].
pub fn tanh_profile_second(z: f64) -> f64 {
    let t = tanh_profile(z);
    -t * (1.0 - t * t)
}

/// Composite Simpson quadrature of `f` on `[a, b]` with `n` intervals
/// (rounded up to even).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// `int W(Phi0(z)) dz` over `[-halfwidth, halfwidth]`; tends to `sqrt(2)/3`.
pub fn equipartition_integral(halfwidth: f64, n_points: usize) -> f64 {
    simpson(|z| potential_w(tanh_profile(z)), -halfwidth, halfwidth, n_points)
}

/// `int |Phi0'(z)|^2 dz` over `[-halfwidth, halfwidth]`; tends to `2 sqrt(2)/3`.
pub fn profile_gradient_integral(halfwidth: f64, n_points: usize) -> f64 {
    simpson(|z| tanh_profile_prime(z).powi(2), -halfwidth, halfwidth, n_points)
}

/// Right-hand side of the temperature-gradient jump across a moving sharp
/// interface with normal velocity `v`: `v (lambda sqrt 2 - v) 2 sqrt 2 / 3`.
pub fn stefan_jump_rhs(v: f64, lambda: f64) -> f64 {
    v * (lambda * SQRT_2 - v) * (2.0 * SQRT_2 / 3.0)
}

/// Amplitude factor of the first Neumann cosine mode `cos(pi x / L)` under
/// `c_v theta_t = k theta_xx`.
pub fn neumann_heat_mode_decay(k_over_cv: f64, t: f64, domain_length: f64) -> f64 {
    (-k_over_cv * (PI / domain_length).powi(2) * t).exp()
}

/// Backward-Euler amplitude factor of the same mode on a node-centred grid
/// with spacing `h`, after `steps` steps of size `dt`.
pub fn discrete_heat_mode_decay(k_over_cv: f64, h: f64, domain_length: f64, dt: f64, steps: usize) -> f64 {
    let lam = 4.0 / (h * h) * (PI * h / (2.0 * domain_length)).sin().powi(2);
    (1.0 + dt * k_over_cv * lam).powi(-(steps as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::potential_w_prime;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mcf_examples() {
        assert_eq!(mcf_circle_radius(0.6, 0.0), Some(0.6));
        assert_abs_diff_eq!(mcf_circle_radius(0.6, 0.05).unwrap(), 0.26f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(mcf_circle_radius(0.6, 0.05).unwrap(), 0.509902, epsilon = 1e-6);
        assert_eq!(mcf_circle_radius(0.6, 0.18), None);
    }

    #[test]
    fn mcf_satisfies_ode() {
        let dt = 1e-7;
        for k in 0..=30 {
            let r = 0.3 + 0.01 * k as f64;
            let slope = (mcf_circle_radius(r, dt).unwrap() - mcf_circle_radius(r, 0.0).unwrap()) / dt;
            let mid = mcf_circle_radius(r, dt / 2.0).unwrap();
            assert!((slope + 1.0 / mid).abs() < 1e-6, "{r}");
        }
    }

    #[test]
    fn tanh_examples() {
        assert_eq!(tanh_profile(0.0), 0.0);
        // 1 - tanh(a) = 2 / (exp(2a) + 1)
        let tail = 2.0 / ((2.0 * 10.0 / SQRT_2).exp() + 1.0);
        assert_abs_diff_eq!(1.0 - tanh_profile(10.0), tail, epsilon = 1e-15);
        assert!(tail < 1.5e-6);
        assert!((tanh_profile(12.0) - 1.0).abs() < 1e-7);
        assert!((tanh_profile(-12.0) + 1.0).abs() < 1e-7);
        assert_abs_diff_eq!(tanh_profile(SQRT_2), 1f64.tanh(), epsilon = 1e-15);
        assert_abs_diff_eq!(tanh_profile(SQRT_2), 0.761594, epsilon = 1e-6);
    }

    #[test]
    fn tanh_solves_profile_ode() {
        for k in 0..1000 {
            let z = -10.0 + 20.0 * k as f64 / 999.0;
            let r = tanh_profile_second(z) - potential_w_prime(tanh_profile(z));
            assert!(r.abs() < 1e-10);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for &z in &[-2.0, -0.3, 0.0, 0.7, 3.0] {
            let d1 = (tanh_profile(z + h) - tanh_profile(z - h)) / (2.0 * h);
            let d2 = (tanh_profile_prime(z + h) - tanh_profile_prime(z - h)) / (2.0 * h);
            assert!((d1 - tanh_profile_prime(z)).abs() < 1e-9);
            assert!((d2 - tanh_profile_second(z)).abs() < 1e-9);
        }
    }

    #[test]
    fn pointwise_equipartition() {
        for &z in &[-1.0, 0.0, 2.0] {
            let d = 0.5 * tanh_profile_prime(z).powi(2) - potential_w(tanh_profile(z));
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn equipartition_value() {
        let v = equipartition_integral(20.0, 100_000);
        assert!((v - SQRT_2 / 3.0).abs() < 1e-8, "{v}");
        let w = equipartition_integral(10.0, 100_000);
        assert!((v - w).abs() < 1e-8);
        let coarse = (equipartition_integral(20.0, 100) - SQRT_2 / 3.0).abs();
        let fine = (equipartition_integral(20.0, 400) - SQRT_2 / 3.0).abs();
        assert!(fine < coarse);
    }

    #[test]
    fn gradient_integral_is_twice_potential_integral() {
        let g = profile_gradient_integral(20.0, 100_000);
        assert!((g - 2.0 * SQRT_2 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn simpson_exact_for_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 3);
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn jump_examples() {
        assert_eq!(stefan_jump_rhs(0.0, 1.0), 0.0);
        assert!(stefan_jump_rhs(SQRT_2, 1.0).abs() < 1e-15);
        assert_abs_diff_eq!(stefan_jump_rhs(1.0, 1.0), 0.390524, epsilon = 1e-6);
    }

    #[test]
    fn heat_decay_examples() {
        assert_eq!(neumann_heat_mode_decay(1.0, 0.0, 1.0), 1.0);
        assert_abs_diff_eq!(neumann_heat_mode_decay(1.0, 0.1, 1.0), 0.372708, epsilon = 1e-6);
        let a = neumann_heat_mode_decay(0.7, 0.3, 2.0);
        assert_abs_diff_eq!(neumann_heat_mode_decay(0.7, 0.6, 2.0), a * a, epsilon = 1e-15);
    }

    #[test]
    fn discrete_decay_approaches_continuous() {
        let exact = neumann_heat_mode_decay(1.0, 0.1, 1.0);
        let coarse = discrete_heat_mode_decay(1.0, 0.02, 1.0, 1e-3, 100);
        let fine = discrete_heat_mode_decay(1.0, 0.01, 1.0, 2.5e-4, 400);
        assert!((fine - exact).abs() < (coarse - exact).abs());
    }
}
