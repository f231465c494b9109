//! Run configuration read from TOML.
//!
//! Every key is optional except `grid.nx` and `grid.ny`. Unknown keys are
//! rejected, and every failure names the offending key.

use std::path::PathBuf;

use serde::Deserialize;

use crate::coupler::{CouplerConfig, CouplingMode};
use crate::director::DirectorStepOptions;
use crate::error::ConfigError;
use crate::experiments::initial::{Component, PerturbationSpec};
use crate::grid::{DirectorBc, GridSpec};
use crate::norms::NormExponents;
use crate::stokes::StokesStrategy;
use crate::viscosity::{ViscosityKind, ViscosityModel};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    grid: RawGrid,
    #[serde(default)]
    time: RawTime,
    #[serde(default)]
    viscosity: RawViscosity,
    #[serde(default)]
    bc: RawBc,
    #[serde(default)]
    initial: RawInitial,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    exponents: RawExponents,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    nx: usize,
    ny: usize,
    #[serde(default = "one")]
    lx: f64,
    #[serde(default = "one")]
    ly: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    dt: Option<f64>,
    t_end: Option<f64>,
    cadence: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViscosityKindName {
    Constant,
    AffineTanh,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawViscosity {
    kind: Option<ViscosityKindName>,
    mu_min: Option<f64>,
    mu_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum BcName {
    DirichletE,
    Neumann,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBc {
    director: Option<BcName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Equilibrium,
    Perturbation,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    #[serde(rename = "type")]
    kind: Option<InitialKind>,
    amplitude: Option<f64>,
    seed: Option<u64>,
    k_max: Option<usize>,
    components: Option<Vec<Component>>,
    e: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum StrategyName {
    Monolithic,
    Splitting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModeName {
    Lagged,
    Picard,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    strategy: Option<StrategyName>,
    mode: Option<ModeName>,
    stokes_tol: Option<f64>,
    stokes_max_iter: Option<usize>,
    picard_tol: Option<f64>,
    picard_max: Option<usize>,
    unit_tol: Option<f64>,
    renormalize: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExponents {
    p: Option<f64>,
    q: Option<f64>,
    r: Option<f64>,
    s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    csv: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
    checkpoint_interval: Option<usize>,
}

/// Where a run writes its results.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputConfig {
    pub csv: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    /// Write the checkpoint every this many emitted records (and at the end).
    pub checkpoint_interval: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConfig {
    pub kind: InitialKind,
    pub perturbation: PerturbationSpec<f64>,
}

/// Validated configuration of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid: GridSpec<f64>,
    pub viscosity: ViscosityModel<f64>,
    pub director_bc: DirectorBc,
    pub initial: InitialConfig,
    pub coupler: CouplerConfig<f64>,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Configuration with every default on an `nx × ny` unit square.
    pub fn with_grid(nx: usize, ny: usize) -> Result<Self, ConfigError> {
        parse_config(&format!("[grid]\nnx = {nx}\nny = {ny}\n"))
    }

    pub fn exponents(&self) -> NormExponents {
        self.coupler.exponents
    }

    /// The seeded initial state this configuration describes.
    pub fn initial_state(&self) -> crate::grid::State<f64> {
        match self.initial.kind {
            InitialKind::Equilibrium => {
                crate::grid::State::equilibrium(self.grid, self.initial.perturbation.e, self.director_bc, 0.0)
            }
            InitialKind::Perturbation => crate::experiments::initial::make_initial(&self.initial.perturbation, self.grid),
        }
    }
}

fn invalid(key: &str, constraint: impl Into<String>) -> ConfigError {
    ConfigError::Validation { key: key.into(), constraint: constraint.into() }
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be positive and finite, got {v}")))
    }
}

fn at_least_one(key: &str, v: usize) -> Result<usize, ConfigError> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(invalid(key, "must be at least 1"))
    }
}

/// Parses and validates a TOML run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let value: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse {
        key: "<document>".into(),
        reason: e.message().to_string(),
    })?;
    let raw: RawConfig = serde_path_to_error::deserialize(toml::Value::Table(value)).map_err(|e| {
        let key = e.path().to_string();
        ConfigError::Parse { key: if key == "." { "<root>".into() } else { key }, reason: e.into_inner().to_string() }
    })?;

    let g = &raw.grid;
    let grid = GridSpec::new(g.nx, g.ny, positive("grid.lx", g.lx)?, positive("grid.ly", g.ly)?)?;
    let h = grid.hx().min(grid.hy());

    let v = &raw.viscosity;
    let kind = match v.kind.unwrap_or(ViscosityKindName::AffineTanh) {
        ViscosityKindName::Constant => ViscosityKind::Constant,
        ViscosityKindName::AffineTanh => ViscosityKind::AffineTanh,
    };
    let mu_min = v.mu_min.unwrap_or(1.0);
    let mu_max = v.mu_max.unwrap_or(if kind == ViscosityKind::Constant { mu_min } else { 2.0 });
    if kind == ViscosityKind::Constant && mu_max != mu_min {
        return Err(invalid("viscosity.mu_max", "a constant viscosity needs mu_max = mu_min"));
    }
    let viscosity = ViscosityModel::new(kind, mu_min, mu_max)?;

    let director_bc = match raw.bc.director.unwrap_or(BcName::DirichletE) {
        BcName::DirichletE => DirectorBc::DirichletE,
        BcName::Neumann => DirectorBc::Neumann,
    };

    let x = &raw.exponents;
    let d = NormExponents::default();
    let exponents = NormExponents::new(x.p.unwrap_or(d.p), x.q.unwrap_or(d.q), x.r.unwrap_or(d.r), x.s.unwrap_or(d.s))?;

    let i = &raw.initial;
    let e = i.e.unwrap_or([0.0, 0.0, 1.0]);
    let norm = (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(invalid("initial.e", format!("must be a unit vector, got length {norm}")));
    }
    let amplitude = i.amplitude.unwrap_or(1e-3);
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(invalid("initial.amplitude", format!("must be non-negative and finite, got {amplitude}")));
    }
    let mut perturbation = PerturbationSpec::new(amplitude, i.seed.unwrap_or(0));
    perturbation.k_max = at_least_one("initial.k_max", i.k_max.unwrap_or(perturbation.k_max))?;
    if let Some(c) = &i.components {
        perturbation.components = c.clone();
    }
    perturbation.e = e;
    perturbation.director_bc = director_bc;
    let initial = InitialConfig { kind: i.kind.unwrap_or(InitialKind::Perturbation), perturbation };

    let t = &raw.time;
    let dt = positive("time.dt", t.dt.unwrap_or(h * h))?;
    let t_end = positive("time.t_end", t.t_end.unwrap_or(0.1))?;
    let mut coupler = CouplerConfig::new(dt, t_end);
    coupler.cadence = at_least_one("time.cadence", t.cadence.unwrap_or(1))?;
    coupler.exponents = exponents;

    let s = &raw.solver;
    coupler.stokes_strategy = match s.strategy.unwrap_or(StrategyName::Monolithic) {
        StrategyName::Monolithic => StokesStrategy::Monolithic,
        StrategyName::Splitting => StokesStrategy::Splitting,
    };
    coupler.mode = match s.mode.unwrap_or(ModeName::Lagged) {
        ModeName::Lagged => CouplingMode::Lagged,
        ModeName::Picard => CouplingMode::Picard,
    };
    if let Some(v) = s.stokes_tol {
        coupler.stokes_tol = positive("solver.stokes_tol", v)?;
    }
    if let Some(v) = s.stokes_max_iter {
        coupler.stokes_max_iter = at_least_one("solver.stokes_max_iter", v)?;
    }
    if let Some(v) = s.picard_tol {
        coupler.picard_tol = positive("solver.picard_tol", v)?;
    }
    if let Some(v) = s.picard_max {
        coupler.picard_max = at_least_one("solver.picard_max", v)?;
    }
    if let Some(v) = s.unit_tol {
        coupler.unit_tol = positive("solver.unit_tol", v)?;
    }
    coupler.director = DirectorStepOptions { renormalize: s.renormalize.unwrap_or(true), ..Default::default() };

    let o = &raw.output;
    let output = OutputConfig {
        csv: o.csv.clone(),
        checkpoint: o.checkpoint.clone(),
        checkpoint_interval: match o.checkpoint_interval {
            Some(v) => Some(at_least_one("output.checkpoint_interval", v)?),
            None => None,
        },
    };

    Ok(RunConfig { grid, viscosity, director_bc, initial, coupler, output })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config("[grid]\nnx = 32\nny = 32\n").unwrap();
        assert_eq!(c.exponents(), NormExponents { p: 2.0, q: 4.0, r: 4.0, s: 2.0 });
        assert_eq!(c.viscosity.mu_min(), 1.0);
        assert_eq!(c.viscosity.mu_max(), 2.0);
        assert_eq!(c.coupler.dt, 1.0 / 1024.0);
        assert_eq!(c.director_bc, DirectorBc::DirichletE);
    }

    #[test]
    fn errors_name_the_key() {
        let err = parse_config("[grid]\nnx = 32\nny = 32\n[viscosity]\nmu_min = 0.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Validation { ref key, .. } if key == "viscosity.mu_min"), "{err}");
        let err = parse_config("[grid]\nnx = 32\nny = \"x\"\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { ref key, .. } if key == "grid.ny"), "{err}");
        let err = parse_config("[grid]\nnx = 32\nny = 32\n[time]\nstep = 1.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { ref key, .. } if key.starts_with("time")), "{err}");
        let err = parse_config("[grid]\nnx = 32\nny = 32\n[exponents]\np = 9.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Validation { ref key, .. } if key.starts_with("exponents")), "{err}");
    }
}
