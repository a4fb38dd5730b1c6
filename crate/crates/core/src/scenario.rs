//! Scenario files (TOML, with a JSON mirror) and their validation.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Expression;
use crate::geometry::LevelSetManifold;
use crate::groupoid::ActionGroupoid;
use crate::symmetry::{FiniteGroup, Symmetry, TorusAction, DEFAULT_GROUP_CAP};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid scenario at `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl ToString) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        message: message.to_string(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Analyze,
    Flow,
    Complex,
    Inequalities,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    Finite,
    Torus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetrySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<GroupKind>,
    /// Generator matrices as lists of rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nondeg_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capture_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_starts: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct References {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poincare: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betti: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub ambient_dim: usize,
    #[serde(default)]
    pub constraints: Vec<String>,
    pub function: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetrySpec>,
    #[serde(default)]
    pub tasks: Vec<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_half_width: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub references: References,
    /// Nerve truncation for the double complex.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// Non-critical band `[a, b]` for the retraction check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<[f64; 2]>,
}

/// A validated scenario with its geometric objects built.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub scenario: Scenario,
    pub groupoid: ActionGroupoid,
    pub function: Expression,
}

impl Scenario {
    pub fn from_toml(text: &str, path: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse {
            path: path.to_string(),
            message: e.to_string(),
        })
    }

    pub fn from_json(text: &str, path: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            path: path.to_string(),
            message: e.to_string(),
        })
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: shown.clone(),
            source,
        })?;
        if path.extension().is_some_and(|e| e == "json") {
            Scenario::from_json(&text, &shown)
        } else {
            Scenario::from_toml(&text, &shown)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn manifold_dim(&self) -> usize {
        self.ambient_dim.saturating_sub(self.constraints.len())
    }

    pub fn symmetry_label(&self) -> String {
        match &self.symmetry {
            None => "trivial".into(),
            Some(SymmetrySpec { preset: Some(p), .. }) => p.clone(),
            Some(SymmetrySpec { kind, generators, .. }) => format!(
                "{} ({} generators)",
                match kind {
                    Some(GroupKind::Torus) => "torus",
                    _ => "finite",
                },
                generators.as_ref().map_or(0, |g| g.len())
            ),
        }
    }

    fn build_symmetry(&self) -> Result<Symmetry, ScenarioError> {
        let n = self.ambient_dim;
        let Some(spec) = &self.symmetry else {
            return Ok(Symmetry::trivial(n));
        };
        match (&spec.preset, &spec.generators) {
            (Some(_), Some(_)) => Err(invalid("symmetry", "give either `preset` or `generators`, not both")),
            (Some(p), None) => Symmetry::preset(p, n).map_err(|e| invalid("symmetry.preset", e)),
            (None, None) => Err(invalid("symmetry", "needs `preset` or `generators`")),
            (None, Some(gens)) => {
                let mut mats = Vec::with_capacity(gens.len());
                for (i, g) in gens.iter().enumerate() {
                    if g.len() != n || g.iter().any(|row| row.len() != n) {
                        return Err(invalid(format!("symmetry.generators[{i}]"), format!("expected a {n}x{n} matrix")));
                    }
                    mats.push(DMatrix::from_fn(n, n, |r, c| g[r][c]));
                }
                match spec.kind.unwrap_or(GroupKind::Finite) {
                    GroupKind::Finite => FiniteGroup::close(n, &mats, spec.cap.unwrap_or(DEFAULT_GROUP_CAP))
                        .map(Symmetry::Finite)
                        .map_err(|e| invalid("symmetry.generators", e)),
                    GroupKind::Torus => TorusAction::new(n, mats)
                        .map(Symmetry::Torus)
                        .map_err(|e| invalid("symmetry.generators", e)),
                }
            }
        }
    }

    /// Checks field constraints and builds the groupoid and function.
    pub fn prepare(&self) -> Result<Prepared, ScenarioError> {
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        if self.ambient_dim == 0 || self.ambient_dim > crate::expr::MAX_DIM {
            return Err(invalid(
                "ambient_dim",
                format!("must be between 1 and {}", crate::expr::MAX_DIM),
            ));
        }
        let mut constraints = Vec::with_capacity(self.constraints.len());
        for (i, c) in self.constraints.iter().enumerate() {
            constraints.push(Expression::parse(c, self.ambient_dim).map_err(|e| invalid(format!("constraints[{i}]"), e))?);
        }
        let mut manifold = LevelSetManifold::new(self.ambient_dim, constraints).map_err(|e| invalid("constraints", e))?;
        if let Some(w) = self.box_half_width {
            if !(w > 0.0) {
                return Err(invalid("box_half_width", "must be positive"));
            }
            manifold = manifold.with_box(w);
        }
        let function = Expression::parse(&self.function, self.ambient_dim).map_err(|e| invalid("function", e))?;
        let dim = self.manifold_dim();
        for (field, values) in [("references.poincare", &self.references.poincare), ("references.betti", &self.references.betti)] {
            if let Some(v) = values {
                if v.len() > dim + 1 {
                    return Err(invalid(field, format!("has {} entries, at most {} allowed", v.len(), dim + 1)));
                }
                if let Some(i) = v.iter().position(|c| *c < 0) {
                    return Err(invalid(format!("{field}[{i}]"), "must be a nonnegative integer"));
                }
            }
        }
        let t = &self.tolerances;
        for (field, value) in [
            ("tolerances.critical_tol", t.critical_tol),
            ("tolerances.nondeg_tol", t.nondeg_tol),
            ("tolerances.flow_step", t.flow_step),
            ("tolerances.max_time", t.max_time),
            ("tolerances.capture_radius", t.capture_radius),
        ] {
            if value.is_some_and(|v| !(v > 0.0)) {
                return Err(invalid(field, "must be positive"));
            }
        }
        if let (Some(r), c) = (t.capture_radius, t.critical_tol.unwrap_or(1e-8)) {
            if r <= 10.0 * c {
                return Err(invalid("tolerances.capture_radius", "must exceed 10 × critical_tol"));
            }
        }
        if let Some([a, b]) = self.band {
            if !(a < b) {
                return Err(invalid("band", "needs a < b"));
            }
        }
        if let Some(n) = self.n_max {
            if n < dim + 1 {
                return Err(invalid("n_max", format!("must be at least dim M + 1 = {}", dim + 1)));
            }
        }
        let symmetry = self.build_symmetry()?;
        let groupoid = ActionGroupoid::new(manifold, symmetry).map_err(|e| invalid("symmetry", e))?;
        Ok(Prepared {
            scenario: self.clone(),
            groupoid,
            function,
        })
    }
}
