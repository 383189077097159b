use nisoac_core::config::RunConfig;
use nisoac_core::diagnostics::{entropy_production_field, extract_level_set, radius_estimate};
use nisoac_core::exec;
use nisoac_core::grid::{BoundaryCondition, Field, Grid2D};
use nisoac_core::model::ModelParams;
use nisoac_core::run::simulate;
use nisoac_core::stepper::{advance, SimState};
use proptest::prelude::*;

fn square(h: f64) -> Grid2D {
    Grid2D::covering(-1.0, 1.0, -1.0, 1.0, h).unwrap()
}

fn neumann_circle(dt: f64) -> RunConfig {
    let mut c = RunConfig::preset("circle").unwrap();
    for o in [
        "bc_phi=neumann",
        "bc_theta=neumann",
        "nx=41",
        "ny=41",
        "h=0.05",
        "t_end=0.02",
    ] {
        c.apply_override(o).unwrap();
    }
    c.apply_override(&format!("dt={dt}")).unwrap();
    c
}

#[test]
fn energy_drift_first_order_in_dt() {
    let drift = |dt: f64| simulate(&neumann_circle(dt), &mut ()).unwrap().summary.e_drift_rel;
    let (d1, d2, d3) = (drift(1e-3), drift(5e-4), drift(2.5e-4));
    let (r1, r2) = (d1 / d2, d2 / d3);
    assert!((1.5..=3.0).contains(&r1), "{d1} {d2} ratio {r1}");
    assert!((1.5..=3.0).contains(&r2), "{d2} {d3} ratio {r2}");
}

#[test]
fn execution_modes_agree_bitwise() {
    let cfg = neumann_circle(1e-3);
    let s0 = cfg.initial_state().unwrap();
    let bcs = cfg.boundaries(&s0);
    let was = exec::is_parallel();
    exec::set_parallel(true);
    let (a, sa) = advance(&s0, &cfg.model, &cfg.controls, &bcs).unwrap();
    exec::set_parallel(false);
    let (b, sb) = advance(&s0, &cfg.model, &cfg.controls, &bcs).unwrap();
    exec::set_parallel(was);
    assert_eq!(a, b);
    assert_eq!(sa, sb);
}

#[test]
fn entropy_non_decreasing_with_two_phase_conductivity() {
    let mut cfg = neumann_circle(1e-3);
    cfg.apply_override("kappa_plus=2").unwrap();
    cfg.apply_override("kappa_minus=0.5").unwrap();
    let out = simulate(&cfg, &mut ()).unwrap();
    assert!(out.summary.failure.is_none());
    for w in out.rows.windows(2) {
        assert!(w[1].s_total >= w[0].s_total - 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn radius_tracks_imposed_circle(r0 in 0.2f64..0.8, cx in -0.05f64..0.05, cy in -0.05f64..0.05) {
        let h = 0.02;
        let f = Field::from_fn(square(h), |x, y| (((x - cx).hypot(y - cy) - r0) / (2f64.sqrt() * 0.05)).tanh());
        let r = radius_estimate(&f, 0.0, true).unwrap();
        prop_assert!((r - r0).abs() <= h, "{} vs {}", r, r0);
    }

    #[test]
    fn level_set_shift_invariance(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -0.5f64..0.5) {
        let f = Field::from_fn(square(0.05), |x, y| (a * x).sin() + (b * y).cos() * x);
        let direct = extract_level_set(&f, c);
        let shifted = extract_level_set(&f.map(|v| v - c), 0.0);
        prop_assert_eq!(direct.len(), shifted.len());
        for (p, q) in direct.iter().zip(&shifted) {
            prop_assert_eq!(p.points.len(), q.points.len());
            for (u, v) in p.points.iter().zip(&q.points) {
                prop_assert!((u[0] - v[0]).abs() < 1e-12 && (u[1] - v[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn production_non_negative(
        phi in proptest::collection::vec(-1.2f64..1.2, 25),
        theta in proptest::collection::vec(200.0f64..350.0, 25),
        rate in proptest::collection::vec(-50.0f64..50.0, 25),
    ) {
        let g = Grid2D::new(5, 5, 0.1, 0.1, 0.0, 0.0).unwrap();
        let mut s = SimState::new(Field::new(g, phi).unwrap(), Field::new(g, theta).unwrap()).unwrap();
        s.last_dphi_dt = Field::new(g, rate).unwrap();
        let p = entropy_production_field(&s, &ModelParams::default(), &BoundaryCondition::NeumannZero).unwrap();
        prop_assert!(p.min() >= 0.0);
    }
}
