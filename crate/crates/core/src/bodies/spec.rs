//! Serializable description of a convex body.
//!
//! A body is a tree of records discriminated by `"kind"`:
//!
//! ```json
//! {"kind": "intersection", "parts": [
//!     {"kind": "lp_ball", "p": 2, "radius": 1.5},
//!     {"kind": "lp_ball", "p": "inf", "radius": 1.0},
//!     {"kind": "linear_image", "map": [[2, 0], [1, 1]],
//!      "base": {"kind": "slab", "normal": [1, 0], "halfwidth": 0.5}},
//!     {"kind": "ellipsoid", "matrix": [[1, 0], [0, 4]]},
//!     {"kind": "h_polytope", "constraints": [{"normal": [1, 1], "bound": 2}]}
//! ]}
//! ```
//!
//! A slab normal need not be a unit vector: `{|⟨x, n⟩| ≤ h}` is stored as the
//! same set with `n/‖n‖` and `h/‖n‖`.

use serde::{Deserialize, Serialize};

use super::ConvexBody;
use crate::error::{Error, Result};
use crate::linalg::{norm, Direction, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BodySpec {
    Slab {
        normal: Vec<f64>,
        halfwidth: f64,
    },
    LpBall {
        #[serde(with = "crate::cli::float")]
        p: f64,
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    Ellipsoid {
        matrix: Vec<Vec<f64>>,
    },
    HPolytope {
        constraints: Vec<ConstraintSpec>,
    },
    Intersection {
        parts: Vec<BodySpec>,
    },
    LinearImage {
        base: Box<BodySpec>,
        map: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub normal: Vec<f64>,
    pub bound: f64,
}

impl BodySpec {
    /// Builds the body in ambient dimension `dim`. Errors name the offending
    /// field by its path below `path`.
    pub fn build(&self, dim: usize, path: &str) -> Result<ConvexBody> {
        let wrap = |field: &str, e: Error| match e {
            e @ Error::Config { .. } => e,
            other => Error::config(format!("{path}{field}"), other.to_string()),
        };
        let check_len = |field: &str, len: usize| -> Result<()> {
            if len != dim {
                Err(Error::config(
                    format!("{path}{field}"),
                    format!("expected length {dim}, got {len}"),
                ))
            } else {
                Ok(())
            }
        };
        let matrix = |field: &str, rows: &[Vec<f64>]| -> Result<Matrix> {
            check_len(field, rows.len())?;
            let m = Matrix::from_rows(rows).map_err(|e| wrap(field, e))?;
            check_len(field, m.cols())?;
            Ok(m)
        };
        match self {
            BodySpec::Slab { normal, halfwidth } => {
                check_len(".normal", normal.len())?;
                let scale = norm(normal);
                let unit = Direction::normalize(normal).map_err(|e| wrap(".normal", e))?;
                ConvexBody::slab(unit, halfwidth / scale).map_err(|e| wrap(".halfwidth", e))
            }
            BodySpec::LpBall { p, radius, dim: d } => {
                if let Some(d) = d {
                    check_len(".dim", *d)?;
                }
                ConvexBody::lp_ball(dim, *p, *radius).map_err(|e| wrap("", e))
            }
            BodySpec::Ellipsoid { matrix: rows } => {
                let m = matrix(".matrix", rows)?;
                ConvexBody::ellipsoid(m).map_err(|e| wrap(".matrix", e))
            }
            BodySpec::HPolytope { constraints } => {
                if constraints.is_empty() {
                    return Err(Error::config(
                        format!("{path}.constraints"),
                        "at least one constraint is required",
                    ));
                }
                for (i, c) in constraints.iter().enumerate() {
                    check_len(&format!(".constraints[{i}].normal"), c.normal.len())?;
                    if !(c.bound > 0.0) || !c.bound.is_finite() {
                        return Err(Error::config(
                            format!("{path}.constraints[{i}].bound"),
                            format!("bound must be finite and positive, got {}", c.bound),
                        ));
                    }
                }
                ConvexBody::h_polytope(
                    constraints.iter().map(|c| c.normal.clone()).collect(),
                    constraints.iter().map(|c| c.bound).collect(),
                )
                .map_err(|e| wrap(".constraints", e))
            }
            BodySpec::Intersection { parts } => {
                if parts.is_empty() {
                    return Err(Error::config(
                        format!("{path}.parts"),
                        "intersection needs at least one part",
                    ));
                }
                let built = parts
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p.build(dim, &format!("{path}.parts[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                ConvexBody::intersection(built).map_err(|e| wrap(".parts", e))
            }
            BodySpec::LinearImage { base, map } => {
                let m = matrix(".map", map)?;
                let inner = base.build(dim, &format!("{path}.base"))?;
                inner.transform(&m).map_err(|e| wrap(".map", e))
            }
        }
    }
}
