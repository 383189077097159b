//! Run configuration: flat `key = value` files, named presets and initial
//! conditions.
//!
//! ```text
//! # comments run to the end of the line
//! preset = circle
//! chi_mode = inv_eps
//! t_end = 0.05
//! ```
//!
//! A `preset` line is applied first wherever it appears; all other keys are
//! then applied in file order, so a repeated key keeps its last value.
//! Without a preset the defaults are those of `circle`.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::path::PathBuf;

use crate::error::Result;
use crate::grid::{Field, Grid2D};
use crate::model::{ChiMode, Conductivity, CouplingVariant, ModelParams};
use crate::stepper::{Boundaries, SimState, StepControls};

pub const PRESETS: [&str; 5] = ["quasi1d", "circle", "ellipse", "triangle", "circle_inv_eps"];

/// Keys accepted by [`RunConfig::set`].
pub const KEYS: [&str; 37] = [
    "preset",
    "epsilon",
    "lambda",
    "theta_c",
    "c_v",
    "chi_mode",
    "mobility",
    "g_variant",
    "kappa",
    "kappa_plus",
    "kappa_minus",
    "nx",
    "ny",
    "x0",
    "y0",
    "hx",
    "hy",
    "dt",
    "newton_rel_tol",
    "newton_max_iters",
    "cg_rel_tol",
    "cg_max_iters",
    "dt_halvings_max",
    "bc_phi",
    "bc_theta",
    "ic",
    "ic_radius",
    "ic_theta_amp",
    "ic_phi",
    "ic_wave_amp",
    "ic_wave_freq",
    "t_end",
    "snapshot_every",
    "diagnostics_every",
    "out_dir",
    // aliases of hx = hy and mobility
    "h",
    "gamma",
];

/// Keys whose values are not numbers.
const NON_NUMERIC: [&str; 7] = ["preset", "chi_mode", "g_variant", "bc_phi", "bc_theta", "ic", "out_dir"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    fn at_line(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        }
        if let Some(k) = &self.key {
            write!(f, "key `{k}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    Neumann,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcKind {
    /// `tanh((x + a sin(f y)) / (sqrt2 eps))`
    Quasi1d,
    /// `tanh((r - R) / (sqrt2 eps))`
    Circle,
    /// `tanh((sqrt(x^2 + 4y^2) - R) / (sqrt2 eps))`
    Ellipse,
    /// `tanh(d / (sqrt2 eps))`, `d` the signed distance to an equilateral
    /// triangle of circumradius `R` with a vertex on the positive y axis.
    Triangle,
    /// `tanh(x / (sqrt2 eps))`
    TanhX,
    /// `phi = ic_phi`, `theta = theta_c + amp`
    Uniform,
    /// `phi = ic_phi`, `theta = theta_c + amp cos(pi (x - x0) / L)`
    CosineX,
}

/// Initial condition. Unless noted otherwise `theta = theta_c + theta_amp * phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialCondition {
    pub kind: IcKind,
    pub radius: f64,
    pub theta_amp: f64,
    pub phi: f64,
    pub wave_amp: f64,
    pub wave_freq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub x0: f64,
    pub y0: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid2D> {
        Grid2D::new(self.nx, self.ny, self.hx, self.hy, self.x0, self.y0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub model: ModelParams,
    pub grid: GridSpec,
    pub controls: StepControls,
    pub bc_phi: BcKind,
    pub bc_theta: BcKind,
    pub ic: InitialCondition,
    pub t_end: f64,
    pub snapshot_every: u64,
    pub diagnostics_every: u64,
    pub out_dir: Option<PathBuf>,
    mobility_explicit: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::preset("circle").expect("circle is a preset")
    }
}

impl RunConfig {
    /// Configuration of a named preset; `circle_invEps` is accepted as an
    /// alias of `circle_inv_eps`.
    pub fn preset(name: &str) -> Option<Self> {
        let mut c = RunConfig {
            preset: None,
            model: ModelParams::default(),
            grid: GridSpec {
                nx: 101,
                ny: 101,
                hx: 0.02,
                hy: 0.02,
                x0: -1.0,
                y0: -1.0,
            },
            controls: StepControls::default(),
            bc_phi: BcKind::Dirichlet,
            bc_theta: BcKind::Dirichlet,
            ic: InitialCondition {
                kind: IcKind::Circle,
                radius: 0.6,
                theta_amp: 10.0,
                phi: 1.0,
                wave_amp: 0.1,
                wave_freq: 10.0,
            },
            t_end: 0.1,
            snapshot_every: 50,
            diagnostics_every: 1,
            out_dir: None,
            mobility_explicit: false,
        };
        let canonical = match name {
            "quasi1d" => {
                c.ic.kind = IcKind::Quasi1d;
                c.bc_phi = BcKind::Neumann;
                c.bc_theta = BcKind::Neumann;
                c.t_end = 0.05;
                "quasi1d"
            }
            "circle" => "circle",
            "ellipse" => {
                c.ic.kind = IcKind::Ellipse;
                c.t_end = 0.07;
                "ellipse"
            }
            "triangle" => {
                c.ic.kind = IcKind::Triangle;
                "triangle"
            }
            "circle_inv_eps" | "circle_invEps" => {
                c.model.chi_mode = ChiMode::InvEps;
                "circle_inv_eps"
            }
            _ => return None,
        };
        c.preset = Some(canonical.to_string());
        Some(c)
    }

    /// Parses a configuration file.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::parse_with_preset(text, None)
    }

    /// Like [`RunConfig::parse`], starting from `preset` when the text does
    /// not name one itself.
    pub fn parse_with_preset(text: &str, preset: Option<&str>) -> Result<Self, ConfigError> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError {
                    line: Some(n + 1),
                    key: None,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError {
                    line: Some(n + 1),
                    key: None,
                    message: "empty key".into(),
                });
            }
            entries.push((n + 1, k, v));
        }
        let mut cfg = RunConfig::default();
        if let Some(&(line, k, v)) = entries.iter().rev().find(|e| e.1 == "preset") {
            cfg.set(k, v).map_err(|e| e.at_line(line))?;
        } else if let Some(name) = preset {
            cfg.set("preset", name)?;
        }
        for &(line, k, v) in entries.iter().filter(|e| e.1 != "preset") {
            cfg.set(k, v).map_err(|e| e.at_line(line))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Whether `key` takes a numeric value (and can therefore be swept).
    pub fn is_numeric_key(key: &str) -> bool {
        KEYS.contains(&key) && !NON_NUMERIC.contains(&key)
    }

    /// Applies one `key = value` assignment. `preset` replaces the whole
    /// configuration.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let num = || -> Result<f64, ConfigError> {
            let v: f64 = value
                .parse()
                .map_err(|_| ConfigError::new(key, format!("expected a number, got `{value}`")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(ConfigError::new(key, "value must be finite"))
            }
        };
        let positive = || -> Result<f64, ConfigError> {
            let v = num()?;
            if v > 0.0 {
                Ok(v)
            } else {
                Err(ConfigError::new(key, format!("must be positive, got {v}")))
            }
        };
        let count = |min: u64| -> Result<u64, ConfigError> {
            let v: u64 = value
                .parse()
                .map_err(|_| ConfigError::new(key, format!("expected an integer, got `{value}`")))?;
            if v >= min {
                Ok(v)
            } else {
                Err(ConfigError::new(key, format!("must be at least {min}, got {v}")))
            }
        };
        let bc = || match value {
            "neumann" => Ok(BcKind::Neumann),
            "dirichlet" => Ok(BcKind::Dirichlet),
            _ => Err(ConfigError::new(
                key,
                format!("expected neumann or dirichlet, got `{value}`"),
            )),
        };
        match key {
            "preset" => {
                let out_dir = self.out_dir.take();
                *self = RunConfig::preset(value).ok_or_else(|| {
                    ConfigError::new(key, format!("unknown preset `{value}`; known: {}", PRESETS.join(", ")))
                })?;
                self.out_dir = out_dir;
            }
            "epsilon" => {
                self.model.epsilon = positive()?;
                if !self.mobility_explicit {
                    self.model.mobility = 1.0 / self.model.epsilon;
                }
            }
            "lambda" => {
                let v = num()?;
                if v < 0.0 {
                    return Err(ConfigError::new(key, format!("must be non-negative, got {v}")));
                }
                self.model.lambda = v;
            }
            "theta_c" => self.model.theta_c = positive()?,
            "c_v" => self.model.c_v = positive()?,
            "chi_mode" => {
                self.model.chi_mode = match value {
                    "one" | "1" => ChiMode::One,
                    "eps" => ChiMode::Eps,
                    "inv_eps" | "invEps" => ChiMode::InvEps,
                    _ => {
                        return Err(ConfigError::new(
                            key,
                            format!("expected one, eps or inv_eps, got `{value}`"),
                        ))
                    }
                }
            }
            "mobility" | "gamma" => {
                self.model.mobility = positive()?;
                self.mobility_explicit = true;
            }
            "g_variant" => {
                self.model.g_variant = match value {
                    "linear" => CouplingVariant::Linear,
                    "cubic" => CouplingVariant::Cubic,
                    _ => {
                        return Err(ConfigError::new(
                            key,
                            format!("expected linear or cubic, got `{value}`"),
                        ))
                    }
                }
            }
            "kappa" => self.model.conductivity = Conductivity::Constant(positive()?),
            "kappa_plus" | "kappa_minus" => {
                let v = positive()?;
                let (mut plus, mut minus) = match self.model.conductivity {
                    Conductivity::Constant(k) => (k, k),
                    Conductivity::TwoPhase { plus, minus } => (plus, minus),
                };
                if key == "kappa_plus" {
                    plus = v;
                } else {
                    minus = v;
                }
                self.model.conductivity = Conductivity::TwoPhase { plus, minus };
            }
            "nx" => self.grid.nx = count(3)? as usize,
            "ny" => self.grid.ny = count(3)? as usize,
            "x0" => self.grid.x0 = num()?,
            "y0" => self.grid.y0 = num()?,
            "hx" => self.grid.hx = positive()?,
            "hy" => self.grid.hy = positive()?,
            "h" => {
                let h = positive()?;
                self.grid.hx = h;
                self.grid.hy = h;
            }
            "dt" => self.controls.dt = positive()?,
            "newton_rel_tol" => self.controls.newton_rel_tol = positive()?,
            "newton_max_iters" => self.controls.newton_max_iters = count(1)? as usize,
            "cg_rel_tol" => self.controls.cg_rel_tol = positive()?,
            "cg_max_iters" => self.controls.cg_max_iters = Some(count(1)? as usize),
            "dt_halvings_max" => {
                self.controls.dt_halvings_max =
                    u32::try_from(count(0)?).map_err(|_| ConfigError::new(key, "value too large"))?
            }
            "bc_phi" => self.bc_phi = bc()?,
            "bc_theta" => self.bc_theta = bc()?,
            "ic" => {
                self.ic.kind = match value {
                    "quasi1d" => IcKind::Quasi1d,
                    "circle" => IcKind::Circle,
                    "ellipse" => IcKind::Ellipse,
                    "triangle" => IcKind::Triangle,
                    "tanh_x" => IcKind::TanhX,
                    "uniform" => IcKind::Uniform,
                    "cosine_x" => IcKind::CosineX,
                    _ => return Err(ConfigError::new(key, format!("unknown initial condition `{value}`"))),
                }
            }
            "ic_radius" => self.ic.radius = positive()?,
            "ic_theta_amp" => self.ic.theta_amp = num()?,
            "ic_phi" => self.ic.phi = num()?,
            "ic_wave_amp" => self.ic.wave_amp = num()?,
            "ic_wave_freq" => self.ic.wave_freq = num()?,
            "t_end" => self.t_end = positive()?,
            "snapshot_every" => self.snapshot_every = count(1)?,
            "diagnostics_every" => self.diagnostics_every = count(1)?,
            "out_dir" => {
                if value.is_empty() {
                    return Err(ConfigError::new(key, "empty path"));
                }
                self.out_dir = Some(PathBuf::from(value));
            }
            _ => {
                return Err(ConfigError {
                    line: None,
                    key: Some(key.to_string()),
                    message: "unknown key".into(),
                })
            }
        }
        Ok(())
    }

    /// Applies a `KEY=VALUE` override string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (k, v) = assignment.split_once('=').ok_or_else(|| ConfigError {
            line: None,
            key: None,
            message: format!("expected KEY=VALUE, got `{assignment}`"),
        })?;
        self.set(k.trim(), v.trim())?;
        self.validate()
    }

    /// Cross-field checks that single assignments cannot make.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn wrap(key: &'static str) -> impl Fn(crate::Error) -> ConfigError {
            move |e| ConfigError::new(key, e.to_string())
        }
        self.model.validate().map_err(wrap("model"))?;
        self.controls.validate().map_err(wrap("controls"))?;
        self.grid.build().map_err(wrap("grid"))?;
        Ok(())
    }

    /// Number of steps needed to reach `t_end`.
    pub fn n_steps(&self) -> u64 {
        (self.t_end / self.controls.dt - 1e-9).ceil().max(1.0) as u64
    }

    pub fn initial_state(&self) -> Result<SimState> {
        let grid = self.grid.build()?;
        let eps = self.model.epsilon;
        let w = SQRT_2 * eps;
        let ic = self.ic;
        let length = grid.x_max() - grid.x0();
        let (x0, theta_c) = (grid.x0(), self.model.theta_c);
        let phi = match ic.kind {
            IcKind::Quasi1d => Field::from_fn(grid, move |x, y| {
                ((x + ic.wave_amp * (ic.wave_freq * y).sin()) / w).tanh()
            }),
            IcKind::Circle => Field::from_fn(grid, move |x, y| ((x.hypot(y) - ic.radius) / w).tanh()),
            IcKind::Ellipse => Field::from_fn(grid, move |x, y| {
                (((x * x + 4.0 * y * y).sqrt() - ic.radius) / w).tanh()
            }),
            IcKind::Triangle => {
                let tri = equilateral_triangle(ic.radius);
                Field::from_fn(grid, move |x, y| (convex_polygon_sdf([x, y], &tri) / w).tanh())
            }
            IcKind::TanhX => Field::from_fn(grid, move |x, _| (x / w).tanh()),
            IcKind::Uniform | IcKind::CosineX => Field::constant(grid, ic.phi),
        };
        let theta = match ic.kind {
            IcKind::Uniform => Field::constant(grid, theta_c + ic.theta_amp),
            IcKind::CosineX => Field::from_fn(grid, move |x, _| {
                theta_c + ic.theta_amp * (std::f64::consts::PI * (x - x0) / length).cos()
            }),
            _ => phi.map(move |p| theta_c + ic.theta_amp * p),
        };
        SimState::new(phi, theta)
    }

    pub fn boundaries(&self, initial: &SimState) -> Boundaries {
        let pick = |kind: BcKind, f: &Field| match kind {
            BcKind::Neumann => crate::grid::BoundaryCondition::NeumannZero,
            BcKind::Dirichlet => crate::grid::BoundaryCondition::dirichlet_from(f),
        };
        Boundaries {
            phi: pick(self.bc_phi, &initial.phi),
            theta: pick(self.bc_theta, &initial.theta),
        }
    }

    /// Radius of the initial circle when the initial condition is one.
    pub fn initial_circle_radius(&self) -> Option<f64> {
        (self.ic.kind == IcKind::Circle).then_some(self.ic.radius)
    }
}

/// Vertices, counter-clockwise, of the equilateral triangle with circumradius
/// `r` centred at the origin and one vertex at `(0, r)`.
pub fn equilateral_triangle(r: f64) -> [[f64; 2]; 3] {
    let angle = |deg: f64| {
        let a = deg.to_radians();
        [r * a.cos(), r * a.sin()]
    };
    [angle(90.0), angle(210.0), angle(330.0)]
}

/// Signed distance to a convex polygon given counter-clockwise, negative
/// inside.
pub fn convex_polygon_sdf(p: [f64; 2], vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    let mut dist = f64::INFINITY;
    let mut inside = true;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
        let (px, py) = (p[0] - a[0], p[1] - a[1]);
        let t = ((px * ex + py * ey) / (ex * ex + ey * ey)).clamp(0.0, 1.0);
        dist = dist.min((px - t * ex).hypot(py - t * ey));
        if ex * py - ey * px < 0.0 {
            inside = false;
        }
    }
    if inside {
        -dist
    } else {
        dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_preset() {
        let c = RunConfig::parse("preset = circle").unwrap();
        assert_eq!(c.preset.as_deref(), Some("circle"));
        assert_eq!(c.model.epsilon, 0.05);
        assert_eq!(c.bc_phi, BcKind::Dirichlet);
        assert_eq!(c.t_end, 0.1);
        assert_eq!((c.grid.nx, c.grid.ny, c.grid.hx), (101, 101, 0.02));
        assert_eq!(c.n_steps(), 100);
    }

    #[test]
    fn zero_epsilon_is_range_error() {
        let e = RunConfig::parse("# header\nepsilon = 0").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert_eq!(e.key.as_deref(), Some("epsilon"));
    }

    #[test]
    fn inv_eps_override() {
        let c = RunConfig::parse("preset = circle\nchi_mode = inv_eps").unwrap();
        assert_eq!(c.model.chi_mode, ChiMode::InvEps);
        assert_eq!(c.ic.kind, IcKind::Circle);
        assert_eq!(
            c,
            RunConfig::preset("circle_invEps")
                .map(|mut p| {
                    p.preset = Some("circle".into());
                    p
                })
                .unwrap()
        );
    }

    #[test]
    fn preset_applies_first_and_duplicates_override() {
        let a = RunConfig::parse("t_end = 0.02\npreset = quasi1d\ndt = 1e-3\ndt = 5e-4").unwrap();
        assert_eq!(a.t_end, 0.02);
        assert_eq!(a.controls.dt, 5e-4);
        assert_eq!(a.bc_theta, BcKind::Neumann);
    }

    #[test]
    fn order_insensitive_for_distinct_keys() {
        let a = RunConfig::parse("lambda = 0\nnx = 51\nhx = 0.04").unwrap();
        let b = RunConfig::parse("hx = 0.04\nlambda = 0\nnx = 51").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors_name_line_and_key() {
        let e = RunConfig::parse("preset = circle\nfoo = 1").unwrap_err();
        assert_eq!((e.line, e.key.as_deref()), (Some(2), Some("foo")));
        let e = RunConfig::parse("\n\nnonsense").unwrap_err();
        assert_eq!(e.line, Some(3));
        let e = RunConfig::parse("nx = 2").unwrap_err();
        assert_eq!(e.key.as_deref(), Some("nx"));
        assert!(RunConfig::parse("preset = hexagon").is_err());
        assert!(RunConfig::parse("dt = abc").is_err());
        assert!(RunConfig::parse("dt = inf").is_err());
        assert!(e.to_string().contains("line 1"));
    }

    #[test]
    fn fallback_preset() {
        let c = RunConfig::parse_with_preset("t_end = 0.02", Some("ellipse")).unwrap();
        assert_eq!(c.preset.as_deref(), Some("ellipse"));
        assert_eq!(c.t_end, 0.02);
        let c = RunConfig::parse_with_preset("preset = triangle", Some("ellipse")).unwrap();
        assert_eq!(c.preset.as_deref(), Some("triangle"));
        assert!(RunConfig::parse_with_preset("", Some("nope")).is_err());
    }

    #[test]
    fn mobility_follows_epsilon_unless_set() {
        let c = RunConfig::parse("epsilon = 0.1").unwrap();
        assert_eq!(c.model.mobility, 10.0);
        let c = RunConfig::parse("mobility = 3\nepsilon = 0.1").unwrap();
        assert_eq!(c.model.mobility, 3.0);
    }

    #[test]
    fn override_equals_file_edit() {
        let mut a = RunConfig::parse("preset = circle").unwrap();
        a.apply_override("lambda=0").unwrap();
        a.apply_override(" t_end = 0.02 ").unwrap();
        let b = RunConfig::parse("preset = circle\nlambda = 0\nt_end = 0.02").unwrap();
        assert_eq!(a, b);
        assert!(a.apply_override("lambda").is_err());
    }

    #[test]
    fn presets_have_valid_initial_states() {
        for name in PRESETS {
            let c = RunConfig::preset(name).unwrap();
            let s = c.initial_state().unwrap();
            assert!(s.phi.min() >= -1.01 && s.phi.max() <= 1.01, "{name}");
            assert!(s.theta.min() > 0.0);
            assert!(s.phi.min() < 0.0 && s.phi.max() > 0.0, "{name} has an interface");
        }
    }

    #[test]
    fn triangle_distance() {
        let tri = equilateral_triangle(0.6);
        // inradius is half the circumradius
        assert!((convex_polygon_sdf([0.0, 0.0], &tri) + 0.3).abs() < 1e-12);
        for v in tri {
            assert!(convex_polygon_sdf(v, &tri).abs() < 1e-12);
        }
        assert!((convex_polygon_sdf([0.0, 1.0], &tri) - 0.4).abs() < 1e-12);
        assert!((convex_polygon_sdf([0.0, -0.5], &tri) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn cosine_initial_condition() {
        let c = RunConfig::parse("ic = cosine_x\nx0 = 0\nnx = 51\nny = 3\nic_phi = 1").unwrap();
        let s = c.initial_state().unwrap();
        assert!((s.theta.at(0, 1) - (c.model.theta_c + 10.0)).abs() < 1e-12);
        assert!((s.theta.at(50, 1) - (c.model.theta_c - 10.0)).abs() < 1e-12);
        assert!(s.phi.values().iter().all(|&p| p == 1.0));
    }

    #[test]
    fn numeric_keys() {
        assert!(RunConfig::is_numeric_key("dt"));
        assert!(RunConfig::is_numeric_key("epsilon"));
        assert!(!RunConfig::is_numeric_key("preset"));
        assert!(!RunConfig::is_numeric_key("bogus"));
    }
}
