//! Experiment configuration: a single JSON document naming the subsystem,
//! the motifs with their parameters and output-start rules, the initial
//! intermediate states, the input grid, and integrator settings.
//!
//! Matrices are row-major JSON arrays. Motif kinds are named as in the
//! catalog (`scalar-1` .. `scalar-8`, `vec-1` .. `vec-8`, `iffm-1` ..
//! `iffm-4`). The `paper-sec5` preset ships built in; `gamma` is accepted
//! for completeness but enters no equation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::SimConfig;
use crate::linsys::LinearSubsystem;
use crate::motifs::{InitialPolicy, MotifKind, MotifSpec, X0Policy, Y0Policy};
use crate::preset;
use crate::response;

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsystemConfig {
    /// Row-major square matrix.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Y0Spec {
    AdaptedSteadyState,
    MichaelisStart,
    Explicit(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum X0Spec {
    Explicit(Vec<f64>),
    SteadyRay(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MotifConfig {
    pub kind: String,
    pub c: Vec<f64>,
    pub d: f64,
    pub beta: f64,
    #[serde(default)]
    pub k: f64,
    /// Output start rule for this motif.
    pub y0: Y0Spec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default = "default_true")]
    pub log: bool,
}

fn default_true() -> bool {
    true
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { min: preset::GRID_MIN, max: preset::GRID_MAX, points: preset::GRID_POINTS, log: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub n_samples: usize,
    pub dt_max: Option<f64>,
    pub x_floor: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let c = SimConfig::default();
        Self { rtol: c.rtol, atol: c.atol, n_samples: c.n_samples, dt_max: None, x_floor: c.x_floor }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub subsystem: SubsystemConfig,
    pub motifs: Vec<MotifConfig>,
    /// Initial intermediate states; each motif runs every entry.
    pub x0_set: Vec<X0Spec>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub u_grid: GridConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    /// Accepted and echoed, never used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

fn default_horizon() -> f64 {
    preset::HORIZON
}

// ---------------------------------------------------------------------------
// Runtime form
// ---------------------------------------------------------------------------

/// Validated, ready-to-run experiment.
#[derive(Debug)]
pub struct Experiment {
    pub sys: LinearSubsystem,
    /// Motifs with their initial policies (one per configured `x0`).
    pub motifs: Vec<(MotifSpec, Vec<InitialPolicy>)>,
    pub sim: SimConfig,
    pub u_grid: Vec<f64>,
    /// Exact JSON echo of the config that produced this experiment.
    pub echo: serde_json::Value,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig {
            path: "<json>".to_string(),
            message: e.to_string(),
        })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidConfig {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidConfig {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// The built-in `paper-sec5` preset: the five-compartment cascade, the
    /// four IFFMs, three starts, horizon 1.5, 121-point log grid.
    pub fn paper_sec5() -> Self {
        let a = (0..5)
            .map(|i| (0..5).map(|j| preset::matrix_a()[(i, j)]).collect())
            .collect();
        let motifs = (1..=4u8)
            .map(|idx| {
                let kind = MotifKind::from_iffm_index(idx).unwrap();
                MotifConfig {
                    kind: kind.name().to_string(),
                    c: preset::coupling().iter().cloned().collect(),
                    d: preset::D,
                    beta: preset::BETA,
                    k: preset::K_M,
                    y0: match preset::y0_policy(kind) {
                        Y0Policy::AdaptedSteadyState => Y0Spec::AdaptedSteadyState,
                        Y0Policy::MichaelisStart => Y0Spec::MichaelisStart,
                        Y0Policy::Explicit(v) => Y0Spec::Explicit(v),
                    },
                }
            })
            .collect();
        ExperimentConfig {
            subsystem: SubsystemConfig { a, b: preset::vector_b().iter().cloned().collect() },
            motifs,
            x0_set: (1..=3)
                .map(|i| X0Spec::Explicit(preset::x0(i).iter().cloned().collect()))
                .collect(),
            horizon: preset::HORIZON,
            u_grid: GridConfig::default(),
            integrator: IntegratorConfig::default(),
            gamma: Some(preset::GAMMA),
            output_dir: None,
        }
    }

    /// Validate everything through the domain constructors and produce the
    /// runtime experiment.
    pub fn build(&self) -> Result<Experiment> {
        let n = self.subsystem.a.len();
        if self.subsystem.a.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidConfig {
                path: "subsystem.a".into(),
                message: "matrix must be square (row-major rows of equal length)".into(),
            });
        }
        let flat: Vec<f64> = self.subsystem.a.iter().flatten().cloned().collect();
        let a = DMatrix::from_row_slice(n, n, &flat);
        let b = DVector::from_vec(self.subsystem.b.clone());
        let sys = LinearSubsystem::new(a, b).map_err(|e| Error::InvalidConfig {
            path: "subsystem".into(),
            message: e.to_string(),
        })?;

        if self.motifs.is_empty() {
            return Err(Error::InvalidConfig {
                path: "motifs".into(),
                message: "at least one motif is required".into(),
            });
        }
        if self.x0_set.is_empty() {
            return Err(Error::InvalidConfig {
                path: "x0_set".into(),
                message: "at least one initial state is required".into(),
            });
        }

        let mut motifs = Vec::new();
        for (i, mc) in self.motifs.iter().enumerate() {
            let path = format!("motifs[{i}]");
            let kind = MotifKind::parse(&mc.kind)
                .map_err(|e| Error::InvalidConfig { path: path.clone(), message: e.to_string() })?;
            let spec = MotifSpec::new(kind, DVector::from_vec(mc.c.clone()), mc.d, mc.beta, mc.k)
                .map_err(|e| Error::InvalidConfig { path: path.clone(), message: e.to_string() })?;
            if spec.dim() != sys.dim() {
                return Err(Error::InvalidConfig {
                    path,
                    message: format!(
                        "coupling dimension {} does not match subsystem dimension {}",
                        spec.dim(),
                        sys.dim()
                    ),
                });
            }
            let y0 = match &mc.y0 {
                Y0Spec::AdaptedSteadyState => Y0Policy::AdaptedSteadyState,
                Y0Spec::MichaelisStart => Y0Policy::MichaelisStart,
                Y0Spec::Explicit(v) => Y0Policy::Explicit(*v),
            };
            let inits = self
                .x0_set
                .iter()
                .map(|x0| {
                    let x0p = match x0 {
                        X0Spec::Explicit(v) => X0Policy::Explicit(DVector::from_vec(v.clone())),
                        X0Spec::SteadyRay(v) => X0Policy::SteadyRay(*v),
                    };
                    InitialPolicy::new(x0p, y0.clone())
                })
                .collect();
            motifs.push((spec, inits));
        }

        let sim = SimConfig {
            t_horizon: self.horizon,
            rtol: self.integrator.rtol,
            atol: self.integrator.atol,
            dt_max: self.integrator.dt_max.unwrap_or(f64::INFINITY),
            n_samples: self.integrator.n_samples,
            x_floor: self.integrator.x_floor,
        };
        sim.validate().map_err(|e| Error::InvalidConfig {
            path: "integrator".into(),
            message: e.to_string(),
        })?;

        let g = &self.u_grid;
        let u_grid = if g.log {
            response::log_grid(g.min, g.max, g.points)
        } else {
            response::linear_grid(g.min, g.max, g.points)
        }
        .map_err(|e| Error::InvalidConfig { path: "u_grid".into(), message: e.to_string() })?;

        let echo = serde_json::to_value(self)?;
        Ok(Experiment { sys, motifs, sim, u_grid, echo })
    }
}
