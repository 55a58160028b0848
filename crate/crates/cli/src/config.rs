//! JSON run configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use magflow::integrator::{IntegratorConfig, Method};
use magflow::revolution::{RevState, RevolutionSurface};
use magflow::surface::{LevelSetSurface, PowerSumSurface};
use magflow::{EllipsoidSpec, PhaseState};

use crate::exit::{config_error, CliError};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub initial: Option<InitialConfig>,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub output: Option<OutputConfig>,
    #[serde(default)]
    pub diagnostics: Option<Vec<String>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    Ellipsoid {
        a: Vec<f64>,
    },
    Sphere {
        n: usize,
        #[serde(default = "one")]
        r: f64,
    },
    /// `Σ c_j |z_j|^{2 p_j} = level`.
    Custom {
        coeffs: Vec<f64>,
        powers: Vec<u32>,
        #[serde(default = "one")]
        level: f64,
    },
    Revolution {
        profile: String,
        #[serde(default)]
        table: Option<ProfileTable>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileTable {
    pub r: Vec<f64>,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
    pub a: Vec<f64>,
    pub da: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub q: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub method: Option<String>,
    pub step: Option<f64>,
    pub t_end: Option<f64>,
    pub sample_every: Option<usize>,
    pub projection_tol: Option<f64>,
    pub projection_max_iter: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub count: usize,
    #[serde(default = "one")]
    pub speed: f64,
}

/// A validated system.
#[derive(Clone)]
pub enum System {
    Ellipsoid(EllipsoidSpec),
    Custom(LevelSetSurface),
    Revolution(RevolutionSurface),
}

impl System {
    /// Number of real position coordinates.
    pub fn position_len(&self) -> usize {
        match self {
            System::Ellipsoid(spec) => 2 * spec.n(),
            System::Custom(s) => 2 * s.dim(),
            System::Revolution(_) => 2,
        }
    }
}

pub enum Initial {
    Phase(PhaseState),
    Rev(RevState),
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn system(&self) -> Result<System, CliError> {
        match &self.system {
            SystemConfig::Ellipsoid { a } => EllipsoidSpec::new(a.clone())
                .map(System::Ellipsoid)
                .map_err(|e| config_error(format!("system.a: {e}"))),
            SystemConfig::Sphere { n, r } => EllipsoidSpec::sphere(*n, *r)
                .map(System::Ellipsoid)
                .map_err(|e| config_error(format!("system.n/system.r: {e}"))),
            SystemConfig::Custom { coeffs, powers, level } => {
                PowerSumSurface::new(coeffs.clone(), powers.clone(), *level)
                    .map(|s| System::Custom(Arc::new(s)))
                    .map_err(|e| config_error(format!("system.coeffs/powers/level: {e}")))
            }
            SystemConfig::Revolution { profile, table } => match (profile.as_str(), table) {
                ("torus", _) => Ok(System::Revolution(RevolutionSurface::torus())),
                ("torus_flat", _) => Ok(System::Revolution(RevolutionSurface::torus_without_potential())),
                ("tabulated", Some(t)) => {
                    RevolutionSurface::tabulated(t.r.clone(), t.f.clone(), t.df.clone(), t.a.clone(), t.da.clone())
                        .map(System::Revolution)
                        .map_err(|e| config_error(format!("system.table: {e}")))
                }
                ("tabulated", None) => Err(config_error("system.table: required for profile \"tabulated\"")),
                (other, _) => Err(config_error(format!(
                    "system.profile: unknown profile {other:?} (expected torus, torus_flat or tabulated)"
                ))),
            },
        }
    }

    pub fn integrator(&self, system: &System) -> Result<IntegratorConfig, CliError> {
        let s = &self.integrator;
        let default_method = match system {
            System::Revolution(_) => Method::Rk4,
            _ => Method::Rk4Projected,
        };
        let method = match s.method.as_deref() {
            None => default_method,
            Some("rk4") => Method::Rk4,
            Some("rk4_projected") => Method::Rk4Projected,
            Some(other) => {
                return Err(config_error(format!(
                    "integrator.method: unknown method {other:?} (expected rk4 or rk4_projected)"
                )))
            }
        };
        if matches!(system, System::Revolution(_)) && method == Method::Rk4Projected {
            return Err(config_error(
                "integrator.method: rk4_projected needs a hypersurface system",
            ));
        }
        let mut cfg = IntegratorConfig {
            method,
            ..IntegratorConfig::default()
        };
        if let Some(x) = s.step {
            cfg.step = x;
        }
        if let Some(x) = s.t_end {
            cfg.t_end = x;
        }
        if let Some(x) = s.sample_every {
            cfg.sample_every = x;
        }
        if let Some(x) = s.projection_tol {
            cfg.projection_tol = x;
        }
        if let Some(x) = s.projection_max_iter {
            cfg.projection_max_iter = x;
        }
        cfg.validate()
            .and_then(|_| cfg.n_steps())
            .map_err(|e| config_error(format!("integrator: {e}")))?;
        Ok(cfg)
    }

    pub fn initial(&self, system: &System) -> Result<Option<Initial>, CliError> {
        let Some(init) = &self.initial else {
            return Ok(None);
        };
        let n = system.position_len();
        for (name, xs) in [("initial.q", &init.q), ("initial.v", &init.v)] {
            if xs.len() != n {
                return Err(config_error(format!("{name}: expected {n} reals, found {}", xs.len())));
            }
            if xs.iter().any(|x| !x.is_finite()) {
                return Err(config_error(format!("{name}: entries must be finite")));
            }
        }
        Ok(Some(match system {
            System::Revolution(_) => Initial::Rev(RevState::new(init.q[0], init.q[1], init.v[0], init.v[1])),
            _ => Initial::Phase(PhaseState::from_real(init.q.clone(), init.v.clone()).expect("checked lengths")),
        }))
    }
}
