//! Report model and its JSON, CSV and text renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::complex::DoubleComplexChecks;
use crate::morse::InequalityReport;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioEcho {
    pub name: String,
    pub ambient_dim: usize,
    pub manifold_dim: usize,
    pub constraints: Vec<String>,
    pub function: String,
    pub symmetry: String,
    pub group_order: Option<usize>,
    pub torus_rank: Option<usize>,
    pub tasks: Vec<String>,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitRow {
    pub id: usize,
    pub representative: Vec<f64>,
    pub value: f64,
    pub index: usize,
    pub stacky_index: i64,
    pub orbit_dim: usize,
    pub orbit_size: Option<usize>,
    pub isotropy_order: Option<usize>,
    pub isotropy_dim: usize,
    pub normal_spectrum: Vec<f64>,
    pub nondegenerate: bool,
    pub orientable: bool,
    pub gradient_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowPair {
    pub upper: usize,
    pub lower: usize,
    pub lines: usize,
    pub signs: Vec<i8>,
    pub signed_count: Option<i64>,
    pub mod2_count: i64,
    pub classes: usize,
    pub class_sizes: Vec<usize>,
    pub unresolved: usize,
    pub elsewhere: usize,
    pub flagged: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowCensus {
    pub step: f64,
    pub pairs: Vec<FlowPair>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WittenSummary {
    pub field: String,
    pub dims: Vec<usize>,
    pub betti: Vec<usize>,
    pub euler_characteristic: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DoubleComplexSummary {
    pub n_max: usize,
    pub grid_dims: Vec<Vec<usize>>,
    pub checks: DoubleComplexChecks,
}

#[derive(Clone, Debug, Serialize)]
pub struct Inequalities {
    pub against: String,
    pub poincare: Vec<i64>,
    #[serde(flatten)]
    pub report: InequalityReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: Option<f64>,
    pub threshold: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReferenceEcho {
    pub poincare: Option<Vec<i64>>,
    pub betti: Option<Vec<i64>>,
    pub provenance: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: String,
    pub scenario: ScenarioEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical_orbits: Option<Vec<OrbitRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub morse_polynomial: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowCensus>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witten: Vec<WittenSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_cohomology: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub double_complex: Option<DoubleComplexSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub inequalities: Vec<Inequalities>,
    pub checks: Vec<Check>,
    pub references: ReferenceEcho,
    pub diagnostics: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<BTreeMap<String, u128>>,
    /// Sampled flow lines, written only as CSV.
    #[serde(skip)]
    pub trajectories: Vec<TrajectoryRecord>,
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub upper: usize,
    pub lower: usize,
    pub line: usize,
    pub points: Vec<Vec<f64>>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        let mut out = String::new();
        write_json(&value, 0, &mut out);
        out.push('\n');
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let s = &self.scenario;
        let _ = writeln!(out, "scenario {} (dim M = {}, symmetry {})", s.name, s.manifold_dim, s.symmetry);
        if let Some(orbits) = &self.critical_orbits {
            let _ = writeln!(out, "critical orbits: {}", orbits.len());
            for o in orbits {
                let _ = writeln!(
                    out,
                    "  #{} value {:.10} index {} size {} isotropy {} {}{}",
                    o.id,
                    o.value,
                    o.index,
                    o.orbit_size.map_or("inf".to_string(), |n| n.to_string()),
                    o.isotropy_order.map_or(format!("dim {}", o.isotropy_dim), |n| format!("order {n}")),
                    if o.orientable { "orientable" } else { "non-orientable" },
                    if o.nondegenerate { "" } else { " degenerate" },
                );
            }
        }
        if let Some(m) = &self.morse_polynomial {
            let _ = writeln!(out, "morse polynomial: {}", poly(m));
        }
        if let Some(flow) = &self.flow {
            for p in &flow.pairs {
                let _ = writeln!(
                    out,
                    "  flow #{} -> #{}: {} lines, signed {}, classes {}",
                    p.upper,
                    p.lower,
                    p.lines,
                    p.signed_count.map_or("-".to_string(), |c| c.to_string()),
                    p.classes
                );
            }
        }
        for w in &self.witten {
            let _ = writeln!(out, "witten homology over {}: {:?}", w.field, w.betti);
        }
        if let Some(t) = &self.total_cohomology {
            let _ = writeln!(out, "total cohomology: {t:?}");
        }
        for i in &self.inequalities {
            let _ = writeln!(
                out,
                "inequalities vs {} {}: R = {} ({})",
                i.against,
                poly(&i.poincare),
                poly(&i.report.remainder),
                if i.report.pass { "pass" } else { "fail" }
            );
        }
        for c in &self.checks {
            let _ = writeln!(
                out,
                "[{}] {}{}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.measured.map_or(String::new(), |m| format!(" = {m:e}"))
            );
        }
        for d in &self.diagnostics {
            let _ = writeln!(out, "note: {d}");
        }
        out
    }

    /// Critical inventory and flow census as CSV tables, separated by a
    /// blank line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,value,index,stacky_index,orbit_dim,orbit_size,isotropy_order,isotropy_dim,nondegenerate,orientable,normal_spectrum\n");
        for o in self.critical_orbits.iter().flatten() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                o.id,
                o.value,
                o.index,
                o.stacky_index,
                o.orbit_dim,
                o.orbit_size.map_or(String::new(), |n| n.to_string()),
                o.isotropy_order.map_or(String::new(), |n| n.to_string()),
                o.isotropy_dim,
                o.nondegenerate,
                o.orientable,
                o.normal_spectrum.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
            );
        }
        out.push_str("\nupper,lower,lines,signed_count,mod2_count,classes,unresolved,signs\n");
        for p in self.flow.iter().flat_map(|f| &f.pairs) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                p.upper,
                p.lower,
                p.lines,
                p.signed_count.map_or(String::new(), |c| c.to_string()),
                p.mod2_count,
                p.classes,
                p.unresolved,
                p.signs.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";")
            );
        }
        out
    }
}

impl Report {
    /// One row per sampled point: `upper,lower,line,step,x1,..,xN`.
    pub fn trajectories_csv(&self) -> String {
        let n = self.scenario.ambient_dim;
        let mut out = String::from("upper,lower,line,step");
        for i in 1..=n {
            let _ = write!(out, ",x{i}");
        }
        out.push('\n');
        for t in &self.trajectories {
            for (k, p) in t.points.iter().enumerate() {
                let _ = write!(out, "{},{},{},{k}", t.upper, t.lower, t.line);
                for c in p {
                    let _ = write!(out, ",{c}");
                }
                out.push('\n');
            }
        }
        out
    }
}

fn poly(c: &[i64]) -> String {
    let terms: Vec<String> = c
        .iter()
        .enumerate()
        .filter(|(_, k)| **k != 0)
        .map(|(i, k)| match i {
            0 => k.to_string(),
            1 if *k == 1 => "t".into(),
            1 => format!("{k}t"),
            _ if *k == 1 => format!("t^{i}"),
            _ => format!("{k}t^{i}"),
        })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

/// Indented JSON that keeps arrays of scalars on one line.
fn write_json(v: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize| "  ".repeat(d);
    match v {
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (i, (k, val)) in map.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_json(val, depth + 1, out);
                if i + 1 < map.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
        Value::Array(items) if items.iter().any(|x| x.is_object() || x.is_array()) => {
            out.push_str("[\n");
            for (i, val) in items.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                write_json(val, depth + 1, out);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(depth));
            out.push(']');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, val) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&val.to_string());
            }
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_text() {
        assert_eq!(poly(&[1, 1, 1]), "1 + t + t^2");
        assert_eq!(poly(&[0, 2]), "2t");
        assert_eq!(poly(&[0]), "0");
    }

    #[test]
    fn scalar_arrays_stay_inline() {
        let v = serde_json::json!({"a": [1, 1, 1], "b": [{"c": []}]});
        let mut s = String::new();
        write_json(&v, 0, &mut s);
        assert!(s.contains("\"a\": [1,1,1]"));
        assert!(s.contains("\"c\": []"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
