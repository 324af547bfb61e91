//! Run configuration documents.
//!
//! One JSON document describes one run:
//!
//! ```json
//! {
//!   "dim": 2,
//!   "sigma": {"diagonal": [1.0, 4.0]},
//!   "u": [1.0, 1.0],
//!   "body": {"kind": "lp_ball", "p": 2, "radius": 1.5},
//!   "t_grid": [0.0, 0.5, 1.0],
//!   "mc": {"samples": 1000000, "seed": 42},
//!   "suite": "sandwich"
//! }
//! ```
//!
//! `sigma` is `"identity"` (the default), `{"diagonal": [...]}` or
//! `{"dense": [[...], ...]}`. Exactly one of `body` and `layers` may be given.

use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::bodies::{BodySpec, ConvexBody};
use crate::bounds::LayeredUnimodal;
use crate::error::{Error, Result};
use crate::linalg::{norm, Covariance, Direction, Matrix, MAX_DIM};
use crate::verify::DEFAULT_Z;

/// Deviation of `‖u‖` from 1 beyond which normalization is reported.
pub const NORMALIZATION_WARN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dim: usize,
    #[serde(default)]
    pub sigma: SigmaSpec,
    pub u: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<BodySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<LayerSpec>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub t_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theta_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSpec>,
    /// Directions queried by `support`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub directions: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<Suite>,
    /// Finite-difference step of the derivative suite.
    #[serde(default = "default_step")]
    pub derivative_step: f64,
    /// Test hook: deliberately corrupts computed bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<FaultSpec>,
}

fn default_step() -> f64 {
    1e-2
}

fn default_z() -> f64 {
    DEFAULT_Z
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaSpec {
    #[default]
    Identity,
    Diagonal(Vec<f64>),
    Dense(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub weight: f64,
    pub body: BodySpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub samples: u64,
    pub seed: u64,
    #[serde(default = "default_z")]
    pub z_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Sandwich,
    Derivative,
    Conditional,
    Power,
    Oracles,
    Kernels,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    /// Multiplies every computed upper bound before adjudication.
    pub upper_scale: f64,
}

/// What a query integrates: a set indicator or a layered weight.
#[derive(Debug, Clone)]
pub enum Target {
    Body(ConvexBody),
    Layers(LayeredUnimodal),
}

impl Target {
    /// The body whose support function drives the bounds.
    pub fn support_set(&self) -> &ConvexBody {
        match self {
            Target::Body(b) => b,
            Target::Layers(w) => w.support_set(),
        }
    }
}

/// A configuration after validation, with every object constructed.
#[derive(Debug, Clone)]
pub struct Problem {
    pub sigma: Covariance,
    pub u: Direction,
    pub target: Option<Target>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("<file>", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }

    pub fn mc(&self) -> Result<McSpec> {
        self.mc
            .ok_or_else(|| Error::config("mc", "this command needs an mc block"))
    }

    /// Checks every field and builds the covariance, direction and target.
    pub fn validate(&self) -> Result<Problem> {
        let n = self.dim;
        if n == 0 || n > MAX_DIM {
            return Err(Error::config("dim", format!("must lie in 1..={MAX_DIM}, got {n}")));
        }
        let sigma = self.build_sigma()?;
        let u = self.build_direction()?;
        check_grid("t_grid", &self.t_grid, |t| t >= 0.0, "finite and >= 0")?;
        check_grid("theta_grid", &self.theta_grid, |t| t > 0.0, "finite and > 0")?;
        if let Some(alpha) = self.alpha {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::config("alpha", format!("must lie in (0, 1), got {alpha}")));
            }
        }
        if let Some(mc) = &self.mc {
            if mc.samples == 0 {
                return Err(Error::config("mc.samples", "must be at least 1"));
            }
            if !(mc.z_threshold > 0.0) || !mc.z_threshold.is_finite() {
                return Err(Error::config(
                    "mc.z_threshold",
                    format!("must be finite and positive, got {}", mc.z_threshold),
                ));
            }
        }
        if !(self.derivative_step > 0.0) || !self.derivative_step.is_finite() {
            return Err(Error::config(
                "derivative_step",
                format!("must be finite and positive, got {}", self.derivative_step),
            ));
        }
        if let Some(f) = &self.fault {
            if !(f.upper_scale > 0.0) || !f.upper_scale.is_finite() {
                return Err(Error::config(
                    "fault.upper_scale",
                    format!("must be finite and positive, got {}", f.upper_scale),
                ));
            }
        }
        for (i, d) in self.directions.iter().enumerate() {
            if d.len() != n {
                return Err(Error::config(
                    format!("directions[{i}]"),
                    format!("expected length {n}, got {}", d.len()),
                ));
            }
            if d.iter().any(|x| !x.is_finite()) {
                return Err(Error::config(format!("directions[{i}]"), "entries must be finite"));
            }
        }
        let target = match (&self.body, &self.layers) {
            (Some(_), Some(_)) => {
                return Err(Error::config("layers", "give either body or layers, not both"));
            }
            (Some(spec), None) => Some(Target::Body(spec.build(n, "body")?)),
            (None, Some(layers)) => Some(Target::Layers(self.build_layers(layers)?)),
            (None, None) => None,
        };
        Ok(Problem { sigma, u, target })
    }

    fn build_sigma(&self) -> Result<Covariance> {
        let n = self.dim;
        let wrap = |path: &str, e: Error| Error::config(path, e.to_string());
        match &self.sigma {
            SigmaSpec::Identity => Ok(Covariance::identity(n)),
            SigmaSpec::Diagonal(d) => {
                if d.len() != n {
                    return Err(Error::config(
                        "sigma.diagonal",
                        format!("expected length {n}, got {}", d.len()),
                    ));
                }
                Covariance::diagonal(d).map_err(|e| wrap("sigma.diagonal", e))
            }
            SigmaSpec::Dense(rows) => {
                if rows.len() != n {
                    return Err(Error::config(
                        "sigma.dense",
                        format!("expected {n} rows, got {}", rows.len()),
                    ));
                }
                for (i, r) in rows.iter().enumerate() {
                    if r.len() != n {
                        return Err(Error::config(
                            format!("sigma.dense[{i}]"),
                            format!("expected length {n}, got {}", r.len()),
                        ));
                    }
                }
                let m = Matrix::from_rows(rows).map_err(|e| wrap("sigma.dense", e))?;
                Covariance::new(m).map_err(|e| wrap("sigma.dense", e))
            }
        }
    }

    fn build_direction(&self) -> Result<Direction> {
        if self.u.len() != self.dim {
            return Err(Error::config(
                "u",
                format!("expected length {}, got {}", self.dim, self.u.len()),
            ));
        }
        let length = norm(&self.u);
        let u = Direction::normalize(&self.u).map_err(|e| Error::config("u", e.to_string()))?;
        if (length - 1.0).abs() > NORMALIZATION_WARN_TOL {
            warn!("u has norm {length}; normalizing to a unit vector");
        }
        Ok(u)
    }

    fn build_layers(&self, layers: &[LayerSpec]) -> Result<LayeredUnimodal> {
        if layers.is_empty() {
            return Err(Error::config("layers", "at least one layer is required"));
        }
        let mut built = Vec::with_capacity(layers.len());
        for (i, layer) in layers.iter().enumerate() {
            if !(layer.weight > 0.0) || !layer.weight.is_finite() {
                return Err(Error::config(
                    format!("layers[{i}].weight"),
                    format!("must be finite and positive, got {}", layer.weight),
                ));
            }
            let body = layer.body.build(self.dim, &format!("layers[{i}].body"))?;
            built.push((layer.weight, body));
        }
        LayeredUnimodal::new(built).map_err(|e| Error::config("layers", e.to_string()))
    }
}

fn check_grid(name: &str, grid: &[f64], ok: impl Fn(f64) -> bool, what: &str) -> Result<()> {
    for (i, &x) in grid.iter().enumerate() {
        if !x.is_finite() || !ok(x) {
            return Err(Error::config(format!("{name}[{i}]"), format!("must be {what}, got {x}")));
        }
    }
    Ok(())
}
