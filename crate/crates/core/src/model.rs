//! Pointwise physics of the non-isothermal Allen-Cahn / heat system.
//!
//! The free energy density is
//!
//! ```text
//! psi = (eps/2)|grad phi|^2 + W(phi)/eps - chi(eps) (lambda/theta_c)(theta - theta_c) g(phi)
//!       + c_v theta (1 - ln theta)
//! ```
//!
//! with the double well `W = (phi^2 - 1)^2 / 4`. Entropy `s = -d psi / d theta` and
//! internal energy `e = psi + theta s` follow from it. The evolution equations use
//! the fixed coupling factor `phi^2 - 1` in both the phase and heat equations; with
//! the cubic `g` this is exactly `-g'(phi)`, which is what makes the integral of `e`
//! a conserved quantity.

use crate::error::{Error, Result};
use crate::grid::Field;

/// Scaling of the latent-heat term with the interface width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChiMode {
    One,
    Eps,
    InvEps,
}

/// Choice of the latent-heat coupling function `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingVariant {
    /// `g(phi) = phi`
    Linear,
    /// `g(phi) = phi - phi^3/3`
    Cubic,
}

impl CouplingVariant {
    pub fn g(self, phi: f64) -> f64 {
        match self {
            CouplingVariant::Linear => phi,
            CouplingVariant::Cubic => -phi * phi * phi / 3.0 + phi,
        }
    }

    pub fn g_prime(self, phi: f64) -> f64 {
        match self {
            CouplingVariant::Linear => 1.0,
            CouplingVariant::Cubic => 1.0 - phi * phi,
        }
    }
}

/// Thermal conductivity as a function of the phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Conductivity {
    Constant(f64),
    /// Linear blend between `minus` (at phi = -1) and `plus` (at phi = +1).
    TwoPhase {
        plus: f64,
        minus: f64,
    },
}

impl Conductivity {
    pub fn new_constant(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "conductivity must be positive, got {k}"
            )));
        }
        Ok(Conductivity::Constant(k))
    }

    pub fn new_two_phase(plus: f64, minus: f64) -> Result<Self> {
        for (name, k) in [("k_plus", plus), ("k_minus", minus)] {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {k}")));
            }
        }
        Ok(Conductivity::TwoPhase { plus, minus })
    }

    pub fn at(&self, phi: f64) -> f64 {
        match *self {
            Conductivity::Constant(k) => k,
            Conductivity::TwoPhase { plus, minus } => {
                let p = phi.clamp(-1.0, 1.0);
                minus + (plus - minus) * (1.0 + p) / 2.0
            }
        }
    }
}

/// Physical constants and functional choices of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub epsilon: f64,
    pub lambda: f64,
    pub theta_c: f64,
    pub c_v: f64,
    pub chi_mode: ChiMode,
    /// Phase mobility `gamma = 1/eta`.
    pub mobility: f64,
    pub g_variant: CouplingVariant,
    pub conductivity: Conductivity,
}

impl Default for ModelParams {
    /// `eps = 0.05`, `lambda = 1`, `theta_c = 273.15`, `c_v = kappa = 1`, `chi = 1`,
    /// `gamma = 1/eps`, cubic coupling.
    fn default() -> Self {
        ModelParams {
            epsilon: 0.05,
            lambda: 1.0,
            theta_c: 273.15,
            c_v: 1.0,
            chi_mode: ChiMode::One,
            mobility: 1.0 / 0.05,
            g_variant: CouplingVariant::Cubic,
            conductivity: Conductivity::Constant(1.0),
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epsilon", self.epsilon),
            ("theta_c", self.theta_c),
            ("c_v", self.c_v),
            ("mobility", self.mobility),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        match self.conductivity {
            Conductivity::Constant(k) => {
                Conductivity::new_constant(k)?;
            }
            Conductivity::TwoPhase { plus, minus } => {
                Conductivity::new_two_phase(plus, minus)?;
            }
        }
        Ok(())
    }

    pub fn chi(&self) -> f64 {
        match self.chi_mode {
            ChiMode::One => 1.0,
            ChiMode::Eps => self.epsilon,
            ChiMode::InvEps => 1.0 / self.epsilon,
        }
    }

    /// `chi(eps) * lambda / theta_c`, the prefactor of the thermal coupling.
    pub fn coupling_strength(&self) -> f64 {
        self.chi() * self.lambda / self.theta_c
    }

    pub fn g(&self, phi: f64) -> f64 {
        self.g_variant.g(phi)
    }

    pub fn g_prime(&self, phi: f64) -> f64 {
        self.g_variant.g_prime(phi)
    }

    pub fn conductivity(&self, phi: f64) -> f64 {
        self.conductivity.at(phi)
    }

    pub fn free_energy_density(&self, phi: f64, grad_phi_sq: f64, theta: f64) -> Result<f64> {
        check_temperature(theta)?;
        Ok(self.epsilon / 2.0 * grad_phi_sq + potential_w(phi) / self.epsilon
            - self.coupling_strength() * (theta - self.theta_c) * self.g(phi)
            + self.c_v * theta * (1.0 - theta.ln()))
    }

    pub fn entropy_density(&self, phi: f64, theta: f64) -> Result<f64> {
        check_temperature(theta)?;
        Ok(self.coupling_strength() * self.g(phi) + self.c_v * theta.ln())
    }

    /// Closed form of `psi + theta * s`.
    pub fn internal_energy_density(&self, phi: f64, grad_phi_sq: f64, theta: f64) -> Result<f64> {
        check_temperature(theta)?;
        Ok(self.epsilon / 2.0 * grad_phi_sq
            + potential_w(phi) / self.epsilon
            + self.chi() * self.lambda * self.g(phi)
            + self.c_v * theta)
    }

    /// Ginzburg-Landau part `(eps/2)|grad phi|^2 + W(phi)/eps`.
    pub fn ginzburg_landau_density(&self, phi: f64, grad_phi_sq: f64) -> f64 {
        self.epsilon / 2.0 * grad_phi_sq + potential_w(phi) / self.epsilon
    }

    /// Pointwise `mu = (phi^2-1)phi/eps - eps*lap + C (theta - theta_c)(phi^2 - 1)`,
    /// `C = chi * lambda / theta_c`.
    pub fn chemical_potential_at(&self, phi: f64, theta: f64, lap_phi: f64) -> f64 {
        let h = phi * phi - 1.0;
        h * phi / self.epsilon - self.epsilon * lap_phi + self.coupling_strength() * (theta - self.theta_c) * h
    }

    /// Chemical potential field. `lap_phi` must be the Laplacian of `phi` under
    /// the phase boundary condition.
    pub fn chemical_potential(&self, phi: &Field, theta: &Field, lap_phi: &Field) -> Result<Field> {
        phi.check_same_grid(theta)?;
        phi.check_same_grid(lap_phi)?;
        let mut out = Field::zeros(*phi.grid());
        let (p, t, l) = (phi.values(), theta.values(), lap_phi.values());
        crate::exec::for_each_indexed(out.values_mut(), |i, v| {
            *v = self.chemical_potential_at(p[i], t[i], l[i]);
        });
        Ok(out)
    }
}

fn check_temperature(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("temperature must be positive, got {theta}")))
    }
}

/// Double-well potential `(phi^2 - 1)^2 / 4`.
pub fn potential_w(phi: f64) -> f64 {
    let h = phi * phi - 1.0;
    0.25 * h * h
}

/// `W'(phi) = phi^3 - phi`.
pub fn potential_w_prime(phi: f64) -> f64 {
    phi * phi * phi - phi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn double_well_values() {
        assert_eq!(potential_w(1.0), 0.0);
        assert_eq!(potential_w(0.0), 0.25);
        assert_eq!(potential_w(2.0), 2.25);
        assert_eq!(potential_w_prime(1.0), 0.0);
        assert_eq!(potential_w_prime(-1.0), 0.0);
        assert_eq!(potential_w_prime(0.0), 0.0);
        assert_eq!(potential_w_prime(0.5), -0.375);
    }

    #[test]
    fn coupling_functions() {
        let c = CouplingVariant::Cubic;
        assert_relative_eq!(c.g(1.0), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(c.g_prime(1.0), 0.0);
        assert_eq!(c.g(0.0), 0.0);
        assert_eq!(c.g_prime(0.0), 1.0);
        let l = CouplingVariant::Linear;
        assert_eq!(l.g(-1.0), -1.0);
        assert_eq!(l.g_prime(-1.0), 1.0);
    }

    #[test]
    fn chemical_potential_examples() {
        let grid = Grid2D::new(4, 4, 0.1, 0.1, 0.0, 0.0).unwrap();
        let p = ModelParams::default();
        let zero = Field::zeros(grid);
        for phi0 in [-1.0, 0.0, 1.0] {
            let phi = Field::constant(grid, phi0);
            let theta = Field::constant(grid, p.theta_c);
            let mu = p.chemical_potential(&phi, &theta, &zero).unwrap();
            assert!(mu.values().iter().all(|&m| m == 0.0));
        }
        let phi = Field::constant(grid, 1.0);
        let theta = Field::constant(grid, 300.0);
        let mu = p.chemical_potential(&phi, &theta, &zero).unwrap();
        assert!(mu.values().iter().all(|&m| m == 0.0));

        let phi = Field::zeros(grid);
        let theta = Field::constant(grid, p.theta_c + 1.0);
        let mu = p.chemical_potential(&phi, &theta, &zero).unwrap();
        for &m in mu.values() {
            assert_relative_eq!(m, -1.0 / 273.15, max_relative = 1e-12);
            assert_relative_eq!(m, -3.6610e-3, max_relative = 1e-4);
        }
    }

    #[test]
    fn chemical_potential_rejects_mismatched_grids() {
        let a = Grid2D::new(4, 4, 0.1, 0.1, 0.0, 0.0).unwrap();
        let b = Grid2D::new(5, 4, 0.1, 0.1, 0.0, 0.0).unwrap();
        let p = ModelParams::default();
        let err = p
            .chemical_potential(&Field::zeros(a), &Field::zeros(b), &Field::zeros(a))
            .unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn free_energy_examples() {
        let mut p = ModelParams::default();
        let v = p.free_energy_density(1.0, 0.0, p.theta_c).unwrap();
        let expected = p.c_v * p.theta_c * (1.0 - p.theta_c.ln());
        assert_relative_eq!(v, expected, max_relative = 1e-14);

        p.lambda = 0.0;
        assert_relative_eq!(
            p.free_energy_density(0.0, 0.0, 1.0).unwrap(),
            0.25 / p.epsilon + 1.0,
            max_relative = 1e-14
        );
        assert!(p.free_energy_density(1.0, 0.0, std::f64::consts::E).unwrap().abs() < 1e-14);
        assert!(matches!(p.free_energy_density(0.0, 0.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn entropy_examples() {
        let mut p = ModelParams::default();
        assert_eq!(p.entropy_density(0.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(
            p.entropy_density(1.0, 1.0).unwrap(),
            p.lambda / p.theta_c * 2.0 / 3.0,
            max_relative = 1e-14
        );
        p.lambda = 0.0;
        assert_eq!(p.entropy_density(0.3, p.theta_c).unwrap(), p.theta_c.ln());
        assert!(p.entropy_density(0.3, -1.0).is_err());
    }

    #[test]
    fn internal_energy_examples() {
        let mut p = ModelParams {
            lambda: 1.0,
            ..ModelParams::default()
        };
        assert_relative_eq!(
            p.internal_energy_density(1.0, 0.0, 2.0).unwrap(),
            8.0 / 3.0,
            max_relative = 1e-14
        );
        p.lambda = 0.0;
        assert_relative_eq!(
            p.internal_energy_density(0.0, 0.0, 1.0).unwrap(),
            6.0,
            max_relative = 1e-14
        );
        assert!(p.internal_energy_density(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn conductivity_examples() {
        let k = Conductivity::new_constant(1.0).unwrap();
        assert_eq!(k.at(0.3), 1.0);
        let k = Conductivity::new_two_phase(2.0, 1.0).unwrap();
        assert_eq!(k.at(1.0), 2.0);
        assert_eq!(k.at(0.0), 1.5);
        assert_eq!(k.at(-3.0), 1.0);
        assert!(Conductivity::new_constant(0.0).is_err());
        assert!(Conductivity::new_two_phase(1.0, -1.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::default().validate().is_ok());
        for bad in [
            ModelParams {
                epsilon: 0.0,
                ..ModelParams::default()
            },
            ModelParams {
                theta_c: -1.0,
                ..ModelParams::default()
            },
            ModelParams {
                c_v: 0.0,
                ..ModelParams::default()
            },
            ModelParams {
                mobility: 0.0,
                ..ModelParams::default()
            },
            ModelParams {
                lambda: -0.1,
                ..ModelParams::default()
            },
            ModelParams {
                conductivity: Conductivity::Constant(0.0),
                ..ModelParams::default()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        for mode in [ChiMode::One, ChiMode::Eps, ChiMode::InvEps] {
            let p = ModelParams {
                chi_mode: mode,
                ..ModelParams::default()
            };
            assert!(p.chi() > 0.0);
        }
        let p = ModelParams {
            chi_mode: ChiMode::InvEps,
            ..ModelParams::default()
        };
        assert_relative_eq!(p.chi(), 20.0, max_relative = 1e-14);
    }

    fn any_params() -> impl Strategy<Value = ModelParams> {
        (
            0.01f64..0.5,
            0.0f64..5.0,
            100.0f64..400.0,
            0.1f64..4.0,
            prop_oneof![Just(ChiMode::One), Just(ChiMode::Eps), Just(ChiMode::InvEps)],
            prop_oneof![Just(CouplingVariant::Linear), Just(CouplingVariant::Cubic)],
        )
            .prop_map(|(epsilon, lambda, theta_c, c_v, chi_mode, g_variant)| ModelParams {
                epsilon,
                lambda,
                theta_c,
                c_v,
                chi_mode,
                mobility: 1.0 / epsilon,
                g_variant,
                conductivity: Conductivity::Constant(1.0),
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn w_prime_is_derivative_of_w(phi in -2.0f64..2.0) {
            let h = 1e-5;
            let fd = (potential_w(phi + h) - potential_w(phi - h)) / (2.0 * h);
            prop_assert!((fd - potential_w_prime(phi)).abs() < 1e-6);
        }

        #[test]
        fn entropy_is_minus_theta_derivative(
            p in any_params(), phi in -1.5f64..1.5, theta in 100.0f64..500.0, gsq in 0.0f64..10.0
        ) {
            let h = 1e-3;
            let fd = -(p.free_energy_density(phi, gsq, theta + h).unwrap()
                - p.free_energy_density(phi, gsq, theta - h).unwrap()) / (2.0 * h);
            let s = p.entropy_density(phi, theta).unwrap();
            prop_assert!((fd - s).abs() <= 1e-6 * s.abs().max(1.0), "fd {} s {}", fd, s);
        }

        #[test]
        fn internal_energy_is_legendre_transform(
            p in any_params(), phi in -1.5f64..1.5, theta in 1.0f64..500.0, gsq in 0.0f64..10.0
        ) {
            let e = p.internal_energy_density(phi, gsq, theta).unwrap();
            let direct = p.free_energy_density(phi, gsq, theta).unwrap()
                + theta * p.entropy_density(phi, theta).unwrap();
            // psi and theta*s each carry c_v*theta*ln(theta); cancellation limits the
            // attainable agreement to that magnitude times machine epsilon.
            let scale = e.abs().max(p.c_v * theta * theta.ln().abs()).max(1.0);
            prop_assert!((e - direct).abs() <= 1e-12 * scale, "e {} direct {}", e, direct);
        }

        #[test]
        fn two_phase_conductivity_positive(phi in -2.0f64..2.0, a in 0.01f64..10.0, b in 0.01f64..10.0) {
            let k = Conductivity::new_two_phase(a, b).unwrap();
            prop_assert!(k.at(phi) > 0.0);
        }
    }
}
