//! Experiment configuration, read from TOML.

use crate::error::{Error, Result};
use crate::forward::{FanBeamGeometry, NoiseLevel, Phantom};
use crate::geom::Vec2;
use crate::ias::IasOptions;
use crate::mesh::DomainShape;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Tomography,
    Darcy,
}

impl ProblemKind {
    pub fn domain(&self) -> DomainShape {
        match self {
            ProblemKind::Tomography => DomainShape::Disc,
            ProblemKind::Darcy => DomainShape::UnitSquare,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub alpha: f64,
    /// Mesh size of the mesh the data are generated on.
    pub truth_h: f64,
    #[serde(default = "default_sweeps")]
    pub max_sweeps: usize,
    /// Bound on the growth of the mesh size per unit metric length; `<= 1`
    /// disables gradation.
    #[serde(default = "default_gradation")]
    pub gradation: f64,
}

fn default_sweeps() -> usize {
    20
}

fn default_gradation() -> f64 {
    1.8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarcyConfig {
    /// Observations on a `grid x grid` lattice.
    pub grid: usize,
}

impl Default for DarcyConfig {
    fn default() -> Self {
        DarcyConfig { grid: 20 }
    }
}

/// Line along which reconstructions are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub samples: usize,
}

impl ProfileConfig {
    pub fn points(&self) -> Vec<Vec2> {
        let a = Vec2::new(self.start[0], self.start[1]);
        let b = Vec2::new(self.end[0], self.end[1]);
        let n = self.samples.max(2);
        (0..n)
            .map(|i| a.lerp(b, i as f64 / (n - 1) as f64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub seed: u64,
    /// Number of outer iterations.
    pub iterations: usize,
    /// First-iteration noise inflation `σ_eff = max(σ, inflation h_init)`.
    pub inflation: f64,
    /// Stop early when the element count changes by less than this fraction.
    pub early_exit: Option<f64>,
    pub mesh: MeshConfig,
    pub noise: NoiseLevel,
    pub ias: IasOptions,
    #[serde(default)]
    pub tomography: FanBeamGeometry,
    #[serde(default)]
    pub darcy: DarcyConfig,
    pub phantom: Option<Phantom>,
    pub profile: Option<ProfileConfig>,
}

impl ExperimentConfig {
    /// High-noise tomography: 15 views of 300 rays, 4 % noise.
    pub fn tomography() -> Self {
        ExperimentConfig {
            problem: ProblemKind::Tomography,
            seed: 2024,
            iterations: 4,
            inflation: 0.3,
            early_exit: Some(0.02),
            mesh: MeshConfig {
                h_init: 0.05,
                h_min: 0.01,
                h_max: 0.1,
                alpha: 12.0,
                truth_h: 0.005,
                max_sweeps: 20,
                gradation: 1.8,
            },
            noise: NoiseLevel::Relative(0.04),
            ias: IasOptions::default(),
            tomography: FanBeamGeometry::default(),
            darcy: DarcyConfig::default(),
            phantom: None,
            profile: None,
        }
    }

    /// Low-noise tomography (1 %) with a finer `h_min`.
    pub fn tomography_fine() -> Self {
        let mut c = Self::tomography();
        c.noise = NoiseLevel::Relative(0.01);
        c.mesh.h_min = 0.005;
        c.mesh.truth_h = 0.0035;
        c
    }

    pub fn darcy() -> Self {
        ExperimentConfig {
            problem: ProblemKind::Darcy,
            seed: 2024,
            iterations: 4,
            inflation: 0.3,
            early_exit: Some(0.02),
            mesh: MeshConfig {
                h_init: 0.05,
                h_min: 0.003,
                h_max: 0.05,
                alpha: 12.0,
                truth_h: 0.02,
                max_sweeps: 20,
                gradation: 1.8,
            },
            noise: NoiseLevel::Absolute(3e-4),
            ias: IasOptions {
                sensitivity_scaling: true,
                ..IasOptions::default()
            },
            tomography: FanBeamGeometry::default(),
            darcy: DarcyConfig::default(),
            phantom: None,
            profile: None,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "tomography" => Ok(Self::tomography()),
            "tomography-fine" => Ok(Self::tomography_fine()),
            "darcy" => Ok(Self::darcy()),
            _ => Err(Error::Config(format!(
                "unknown preset '{name}' (expected tomography, tomography-fine or darcy)"
            ))),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn phantom(&self) -> Phantom {
        self.phantom.clone().unwrap_or_else(|| match self.problem {
            ProblemKind::Tomography => Phantom::tomography_default(),
            ProblemKind::Darcy => Phantom::darcy_default(),
        })
    }

    /// Vertical diagonal of the domain unless configured.
    pub fn profile(&self) -> ProfileConfig {
        self.profile.unwrap_or(match self.problem {
            ProblemKind::Tomography => ProfileConfig {
                start: [0.0, -1.0],
                end: [0.0, 1.0],
                samples: 200,
            },
            ProblemKind::Darcy => ProfileConfig {
                start: [0.0, 0.0],
                end: [1.0, 1.0],
                samples: 200,
            },
        })
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.mesh;
        let positive = [m.h_init, m.h_min, m.h_max, m.truth_h];
        if positive.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::Config("mesh sizes must be positive".into()));
        }
        if !(m.h_min < m.h_max) {
            return Err(Error::Config(format!("h_min = {} must be below h_max = {}", m.h_min, m.h_max)));
        }
        if !(m.alpha >= 1.0) {
            return Err(Error::Config(format!("alpha = {} must be at least 1", m.alpha)));
        }
        if !m.gradation.is_finite() {
            return Err(Error::Config(format!("gradation = {} must be finite", m.gradation)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("at least one outer iteration is required".into()));
        }
        if !(self.inflation >= 0.0) {
            return Err(Error::Config("inflation must be non-negative".into()));
        }
        if let Some(e) = self.early_exit {
            if !(e >= 0.0) {
                return Err(Error::Config("early_exit must be non-negative".into()));
            }
        }
        self.noise.validate()?;
        self.ias
            .validate()
            .map_err(|e| Error::Config(format!("ias: {e}")))?;
        match self.problem {
            ProblemKind::Tomography => self.tomography.validate()?,
            ProblemKind::Darcy => {
                if self.darcy.grid == 0 {
                    return Err(Error::Config("darcy grid must be positive".into()));
                }
            }
        }
        Ok(())
    }
}
