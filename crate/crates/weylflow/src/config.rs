//! JSON run configuration: a single file describes the root system, the flow
//! parameters, and per-command options. Unknown keys are rejected so silent
//! typos cannot change an experiment.

use crate::flow::FlowConfig;
use crate::rootsys::{Epsilon, RootFamily, RootSystemError, WeightedRootSystem};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    // Not #[from]: the serde detail stays out of the source chain so
    // chain-printing callers do not render it twice.
    #[error("config is not valid JSON: {0}")]
    Parse(serde_json::Error),
    #[error("config field {field}: {message}")]
    Invalid { field: String, message: String },
    #[error(transparent)]
    System(#[from] RootSystemError),
}

impl From<serde_json::Error> for ConfigError {
    fn from(err: serde_json::Error) -> Self {
        ConfigError::Parse(err)
    }
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Root-system description. `family` is a tag like "a2", "b3", "g2", or
/// "custom"; the rank may ride on the tag or sit in `rank` (they must agree
/// if both are given). Multiplicities are per length orbit for the named
/// families and per root for custom systems.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub family: String,
    #[serde(default)]
    pub rank: Option<usize>,
    pub mults: Vec<u32>,
    pub epsilon: i8,
    /// Explicit positive roots, custom family only.
    #[serde(default)]
    pub roots: Option<Vec<Vec<f64>>>,
}

impl SystemConfig {
    pub fn build(&self) -> Result<WeightedRootSystem, ConfigError> {
        let epsilon = Epsilon::from_i8(self.epsilon)
            .ok_or_else(|| invalid("system.epsilon", "must be 1 or -1"))?;
        if self.family.trim().eq_ignore_ascii_case("custom") {
            let roots = self
                .roots
                .clone()
                .ok_or_else(|| invalid("system.roots", "custom systems must list their roots"))?;
            if self.rank.is_some() {
                return Err(invalid(
                    "system.rank",
                    "custom systems take their rank from the root coordinates",
                ));
            }
            return Ok(WeightedRootSystem::custom(roots, self.mults.clone(), epsilon)?);
        }
        if self.roots.is_some() {
            return Err(invalid(
                "system.roots",
                "explicit roots are only accepted with family \"custom\"",
            ));
        }
        let (family, embedded) = RootFamily::parse(&self.family)?;
        let rank = match (embedded, self.rank) {
            (Some(a), Some(b)) if a != b => {
                return Err(invalid(
                    "system.rank",
                    format!("family tag says rank {a} but rank field says {b}"),
                ));
            }
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => match family {
                RootFamily::G2 => 2,
                RootFamily::F4 => 4,
                _ => {
                    return Err(invalid(
                        "system.rank",
                        "rank is required (either as a field or on the family tag)",
                    ));
                }
            },
        };
        Ok(WeightedRootSystem::build(family, rank, &self.mults, epsilon)?)
    }
}

/// Flow parameters. Exactly one of `r0` (absolute) and `r0_rel` (a multiple
/// of the critical radius r_S) must be set; everything else falls back to
/// the library defaults.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default)]
    pub r0_rel: Option<f64>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub cfl: Option<f64>,
    #[serde(default)]
    pub tol_cmc: Option<f64>,
    #[serde(default)]
    pub tol_rate: Option<f64>,
    #[serde(default)]
    pub max_steps: Option<u64>,
    #[serde(default)]
    pub sample_every: Option<u64>,
    #[serde(default)]
    pub wall_tolerance: Option<f64>,
}

impl FlowSection {
    /// Resolve the initial radius against the system's critical radius.
    pub fn radius(&self, system: &WeightedRootSystem) -> Result<f64, ConfigError> {
        match (self.r0, self.r0_rel) {
            (Some(_), Some(_)) => Err(invalid("flow.r0", "set either r0 or r0_rel, not both")),
            (Some(r), None) => Ok(r),
            (None, Some(rel)) => {
                if !system.r_s().is_finite() {
                    return Err(invalid(
                        "flow.r0_rel",
                        "relative radii need a finite critical radius; this system has none",
                    ));
                }
                Ok(rel * system.r_s())
            }
            (None, None) => Err(invalid("flow.r0", "an initial radius is required")),
        }
    }

    pub fn flow_config(&self, system: &WeightedRootSystem) -> Result<FlowConfig, ConfigError> {
        let mut fc = FlowConfig::new(self.radius(system)?);
        if let Some(n) = self.n {
            fc.n = n;
        }
        if let Some(cfl) = self.cfl {
            fc.cfl = cfl;
        }
        if let Some(t) = self.tol_cmc {
            fc.tol_cmc = t;
        }
        if let Some(t) = self.tol_rate {
            fc.tol_rate = t;
        }
        if let Some(m) = self.max_steps {
            fc.max_steps = m;
        }
        if let Some(s) = self.sample_every {
            fc.sample_every = s;
        }
        if let Some(w) = self.wall_tolerance {
            fc.wall_tolerance = w;
        }
        Ok(fc)
    }
}

/// Options for the sphere-curvature table. The radius falls back to the flow
/// radius when unset.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereSection {
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub radius_rel: Option<f64>,
    /// Inclusive direction count along the chamber arc.
    #[serde(default)]
    pub grid: Option<usize>,
    #[serde(default)]
    pub eta_samples: Option<usize>,
}

impl SphereSection {
    pub const DEFAULT_GRID: usize = 181;
    pub const DEFAULT_ETA_SAMPLES: usize = 10_000;

    pub fn grid(&self) -> usize {
        self.grid.unwrap_or(Self::DEFAULT_GRID)
    }

    pub fn eta_samples(&self) -> usize {
        self.eta_samples.unwrap_or(Self::DEFAULT_ETA_SAMPLES)
    }
}

/// Options for the verification battery.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default)]
    pub eta_samples: Option<usize>,
    /// Steps per residual window (two windows are run, at n and 2n).
    #[serde(default)]
    pub window_steps: Option<u64>,
    /// Relative amplitude of the wall-even perturbation seeding the windows.
    #[serde(default)]
    pub window_amplitude: Option<f64>,
    /// Multiples of r0 for the monotonicity sweep.
    #[serde(default)]
    pub monotone_factors: Option<Vec<f64>>,
}

impl VerifySection {
    pub fn eta_samples(&self) -> usize {
        self.eta_samples.unwrap_or(SphereSection::DEFAULT_ETA_SAMPLES)
    }

    pub fn window_steps(&self) -> u64 {
        self.window_steps.unwrap_or(50)
    }

    pub fn window_amplitude(&self) -> f64 {
        self.window_amplitude.unwrap_or(0.05)
    }

    pub fn monotone_factors(&self) -> Vec<f64> {
        self.monotone_factors
            .clone()
            .unwrap_or_else(|| vec![0.6, 1.0, 1.4])
    }
}

/// One experiment: a system plus per-command sections. Sections a command
/// does not read may be omitted entirely.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub sphere: SphereSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub out_dir: Option<String>,
}

impl RunConfig {
    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self, ConfigError> {
        Ok(serde_json::from_slice(bytes)?)
    }

    /// Radius for the sphere table: its own setting, else the flow radius.
    pub fn sphere_radius(&self, system: &WeightedRootSystem) -> Result<f64, ConfigError> {
        match (self.sphere.radius, self.sphere.radius_rel) {
            (Some(_), Some(_)) => Err(invalid(
                "sphere.radius",
                "set either radius or radius_rel, not both",
            )),
            (Some(r), None) => Ok(r),
            (None, Some(rel)) => {
                if !system.r_s().is_finite() {
                    return Err(invalid(
                        "sphere.radius_rel",
                        "relative radii need a finite critical radius; this system has none",
                    ));
                }
                Ok(rel * system.r_s())
            }
            (None, None) => self.flow.radius(system),
        }
    }
}
