//! Scenario files: the JSON input format consumed by the CLI and the test
//! corpora.
//!
//! A scenario file pins down one geometry (a compactly nested domain pair
//! with a base point), one test function with known structure, an
//! evaluation set, and the list of inequality checks to run, plus estimator
//! knobs so that runs are reproducible bit for bit. Loading validates
//! everything up front and reports the offending field; the engine then
//! re-validates the geometric invariants it depends on.

use crate::domain::{Domain, NestedPair, Point, GEOM_TOL};
use crate::engine::{CheckKind, Corruption, Scenario};
use crate::error::Error;
use crate::green::{EstimatorParams, WalkBudget};
use crate::hausdorff::Gauge;
use crate::testbed::{TestFunction, TestFunctionKind};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// The one schema version this loader understands.
pub const SCHEMA_VERSION: u32 = 1;

/// How the evaluation set is produced.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvaluationSpec {
    /// Axis-aligned grid over the inner domain's bounding box, keeping the
    /// points that sit deep enough inside. In dimension three the grid is a
    /// plane slice through the base point spanned by the first two axes.
    Grid {
        per_axis: usize,
        /// Fraction of the base inradius treated as "interior": a point
        /// survives when its depth is at least `(1 - margin_factor)` times
        /// the certified inradius lower bound.
        #[serde(default = "default_margin_factor")]
        margin_factor: f64,
    },
    /// Evenly spaced points on a segment, endpoints included.
    Segment {
        from: Vec<f64>,
        to: Vec<f64>,
        count: usize,
    },
    /// Explicit list of points.
    Explicit { points: Vec<Vec<f64>> },
}

fn default_margin_factor() -> f64 {
    0.9
}

/// Estimator knobs with workable defaults.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Chain-graph mesh for Harnack bounds on general domains.
    #[serde(default = "default_mesh")]
    pub mesh: f64,
    /// Relative boundary-shell width for walk-on-spheres termination.
    #[serde(default = "default_shell")]
    pub shell: f64,
}

fn default_samples() -> usize {
    4096
}

fn default_mesh() -> f64 {
    0.05
}

fn default_shell() -> f64 {
    1e-4
}

impl Default for EstimatorSpec {
    fn default() -> Self {
        EstimatorSpec {
            samples: default_samples(),
            seed: 0,
            mesh: default_mesh(),
            shell: default_shell(),
        }
    }
}

/// Nested geometry as written in a scenario file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub inner: Domain,
    pub outer: Domain,
    pub base_point: Vec<f64>,
}

/// Top-level scenario file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema: u32,
    pub name: String,
    pub dimension: usize,
    pub pair: PairSpec,
    pub function: TestFunctionKind,
    pub evaluation: EvaluationSpec,
    #[serde(default)]
    pub gauge: Option<Gauge>,
    /// Radius cap for the exceptional-set check.
    #[serde(default)]
    pub r: Option<f64>,
    /// Reduced radii for the refined check, as fractions of the inner
    /// diameter in `(0, 1]`.
    #[serde(default = "default_r_x")]
    pub r_x: Vec<f64>,
    #[serde(default)]
    pub estimator: EstimatorSpec,
    pub checks: Vec<CheckKind>,
    #[serde(default)]
    pub corruption: Option<Corruption>,
    #[serde(default)]
    pub substitute_outer_sup: bool,
}

fn default_r_x() -> Vec<f64> {
    vec![1.0, 0.5, 0.125]
}

/// Parses and validates a scenario from a JSON string.
pub fn scenario_from_json(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    resolve(file)
}

/// Reads, parses, and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    scenario_from_json(&text)
}

/// Loads every `*.json` scenario in a directory, sorted by file name.
pub fn load_scenario_dir(dir: impl AsRef<Path>) -> Result<Vec<Scenario>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths.into_iter().map(load_scenario).collect()
}

/// Turns a parsed file into a runnable scenario, validating as it goes.
pub fn resolve(file: ScenarioFile) -> Result<Scenario> {
    if file.schema != SCHEMA_VERSION {
        return Err(Error::schema(
            "schema",
            format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                file.schema
            ),
        ));
    }
    if file.name.trim().is_empty() {
        return Err(Error::schema("name", "scenario name must be nonempty"));
    }
    file.pair
        .inner
        .validate()
        .map_err(|e| prefix(e, "pair.inner"))?;
    file.pair
        .outer
        .validate()
        .map_err(|e| prefix(e, "pair.outer"))?;
    if file.dimension == 0 || file.dimension != file.pair.inner.dim() {
        return Err(Error::schema(
            "dimension",
            format!(
                "declared dimension {} does not match the inner domain ({})",
                file.dimension,
                file.pair.inner.dim()
            ),
        ));
    }
    if file.pair.base_point.len() != file.dimension {
        return Err(Error::schema(
            "pair.base_point",
            format!("base point must have {} coordinates", file.dimension),
        ));
    }
    let base = Point::new(&file.pair.base_point);
    let pair = NestedPair::new(file.pair.inner.clone(), file.pair.outer.clone(), base)
        .map_err(|e| prefix(e, "pair"))?;

    let function =
        TestFunction::new(file.function.clone(), base).map_err(|e| prefix(e, "function"))?;
    if function.dim() != file.dimension {
        return Err(Error::schema(
            "function",
            format!(
                "function dimension {} does not match the scenario dimension {}",
                function.dim(),
                file.dimension
            ),
        ));
    }

    if let Some(g) = &file.gauge {
        g.validate().map_err(|e| prefix(e, "gauge"))?;
    }
    if let Some(r) = file.r {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::schema("r", "radius cap must be positive and finite"));
        }
        let diam_lo = pair.inner.diameter().lower;
        if r > diam_lo {
            return Err(Error::schema(
                "r",
                format!("radius cap {r} exceeds the inner diameter lower bound {diam_lo}"),
            ));
        }
    }
    for f in &file.r_x {
        if !(f.is_finite() && *f > 0.0 && *f <= 1.0) {
            return Err(Error::schema("r_x", "radius fractions must lie in (0, 1]"));
        }
    }
    if file.checks.is_empty() {
        return Err(Error::schema("checks", "at least one check is required"));
    }
    if file.checks.contains(&CheckKind::ExceptionalSet) {
        if file.gauge.is_none() {
            return Err(Error::schema(
                "gauge",
                "the exceptional-set check requires a gauge",
            ));
        }
        if file.r.is_none() {
            return Err(Error::schema(
                "r",
                "the exceptional-set check requires a radius cap",
            ));
        }
    }
    if file.checks.contains(&CheckKind::RefinedLowerBound) && file.r_x.is_empty() {
        return Err(Error::schema(
            "r_x",
            "the refined check needs at least one radius fraction",
        ));
    }
    if !(file.estimator.samples >= 16) {
        return Err(Error::schema(
            "estimator.samples",
            "need at least 16 samples",
        ));
    }
    if !(file.estimator.mesh.is_finite() && file.estimator.mesh > 0.0) {
        return Err(Error::schema("estimator.mesh", "mesh must be positive"));
    }
    if !(file.estimator.shell.is_finite()
        && file.estimator.shell > 0.0
        && file.estimator.shell < 0.1)
    {
        return Err(Error::schema(
            "estimator.shell",
            "shell must lie in (0, 0.1)",
        ));
    }

    let eval_points = build_evaluation(&file.evaluation, &pair)?;
    if eval_points.is_empty() {
        return Err(Error::schema(
            "evaluation",
            "evaluation set is empty after interior filtering",
        ));
    }

    let params = EstimatorParams {
        samples: file.estimator.samples,
        seed: file.estimator.seed,
        budget: WalkBudget {
            eps_shell_rel: file.estimator.shell,
            ..Default::default()
        },
    };
    Ok(Scenario {
        name: file.name,
        pair,
        function,
        eval_points,
        gauge: file.gauge,
        r: file.r,
        r_x_fractions: file.r_x,
        params,
        mesh: file.estimator.mesh,
        checks: file.checks,
        corruption: file.corruption,
        substitute_outer_sup: file.substitute_outer_sup,
    })
}

/// Prefixes schema-field paths so errors point into the file; passes other
/// error kinds through untouched by wrapping their message.
fn prefix(e: Error, field: &str) -> Error {
    match e {
        Error::Schema {
            field: inner,
            message,
        } => Error::schema(format!("{field}.{inner}"), message),
        other => Error::schema(field, other.to_string()),
    }
}

fn build_evaluation(spec: &EvaluationSpec, pair: &NestedPair) -> Result<Vec<Point>> {
    let inner = &pair.inner;
    let d = pair.dim();
    match spec {
        EvaluationSpec::Grid {
            per_axis,
            margin_factor,
        } => {
            if *per_axis < 2 {
                return Err(Error::schema(
                    "evaluation.per_axis",
                    "need at least two per axis",
                ));
            }
            if !(*margin_factor > 0.0 && *margin_factor <= 0.999) {
                return Err(Error::schema(
                    "evaluation.margin_factor",
                    "margin factor must lie in (0, 0.999]",
                ));
            }
            let depth = (1.0 - margin_factor) * pair.base_inradius().lower;
            let bb = inner.bounding_box();
            let axis = |k: usize, i: usize| {
                let lo = bb.min.get(k);
                let hi = bb.max.get(k);
                lo + (hi - lo) * i as f64 / (*per_axis as f64 - 1.0)
            };
            let mut pts = Vec::new();
            match d {
                1 => {
                    for i in 0..*per_axis {
                        pts.push(Point::new(&[axis(0, i)]));
                    }
                }
                2 => {
                    for i in 0..*per_axis {
                        for j in 0..*per_axis {
                            pts.push(Point::new(&[axis(0, i), axis(1, j)]));
                        }
                    }
                }
                3 => {
                    let z = pair.base.get(2);
                    for i in 0..*per_axis {
                        for j in 0..*per_axis {
                            pts.push(Point::new(&[axis(0, i), axis(1, j), z]));
                        }
                    }
                }
                other => {
                    return Err(Error::schema(
                        "evaluation",
                        format!("grid evaluation supports dimensions 1-3, not {other}"),
                    ))
                }
            }
            pts.retain(|p| inner.signed_distance(p) <= -depth);
            Ok(pts)
        }
        EvaluationSpec::Segment { from, to, count } => {
            if from.len() != d || to.len() != d {
                return Err(Error::schema(
                    "evaluation",
                    format!("segment endpoints must have {d} coordinates"),
                ));
            }
            if *count < 2 {
                return Err(Error::schema(
                    "evaluation.count",
                    "need at least two points",
                ));
            }
            let a = Point::new(from);
            let b = Point::new(to);
            let scale = inner.diameter().upper;
            let pts: Vec<Point> = (0..*count)
                .map(|i| a.lerp(&b, i as f64 / (*count as f64 - 1.0)))
                .collect();
            for (i, p) in pts.iter().enumerate() {
                if inner.signed_distance(p) >= -GEOM_TOL * scale {
                    return Err(Error::schema(
                        "evaluation",
                        format!("segment point {i} is not strictly inside the inner domain"),
                    ));
                }
            }
            Ok(pts)
        }
        EvaluationSpec::Explicit { points } => {
            let scale = inner.diameter().upper;
            let mut pts = Vec::with_capacity(points.len());
            for (i, coords) in points.iter().enumerate() {
                if coords.len() != d {
                    return Err(Error::schema(
                        "evaluation.points",
                        format!("point {i} must have {d} coordinates"),
                    ));
                }
                let p = Point::new(coords);
                if inner.signed_distance(&p) >= -GEOM_TOL * scale {
                    return Err(Error::schema(
                        "evaluation.points",
                        format!("point {i} is not strictly inside the inner domain"),
                    ));
                }
                pts.push(p);
            }
            Ok(pts)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> String {
        r#"{
            "schema": 1,
            "name": "disk-basic",
            "dimension": 2,
            "pair": {
                "inner": {"type": "ball", "center": [0.0, 0.0], "radius": 1.0},
                "outer": {"type": "ball", "center": [0.0, 0.0], "radius": 2.0},
                "base_point": [0.0, 0.0]
            },
            "function": {
                "kind": "log_abs_product",
                "zeros": [{"location": [0.5, 0.0], "mass": 1.0}]
            },
            "evaluation": {"type": "grid", "per_axis": 9, "margin_factor": 0.9},
            "gauge": {"type": "power", "p": 2.0, "b": 4.0},
            "r": 0.5,
            "checks": ["pointwise_lower_bound", "exceptional_set"]
        }"#
        .to_string()
    }

    #[test]
    fn minimal_scenario_loads_with_defaults() {
        let sc = scenario_from_json(&minimal_json()).unwrap();
        assert_eq!(sc.name, "disk-basic");
        assert_eq!(sc.pair.dim(), 2);
        assert_eq!(sc.r_x_fractions, vec![1.0, 0.5, 0.125]);
        assert_eq!(sc.params.samples, 4096);
        assert_eq!(sc.params.seed, 0);
        assert!(!sc.eval_points.is_empty());
        assert!(sc.eval_points.len() <= 81);
        for p in &sc.eval_points {
            assert!(p.norm() < 1.0);
        }
    }

    #[test]
    fn schema_version_is_enforced() {
        let text = minimal_json().replace("\"schema\": 1", "\"schema\": 2");
        let err = scenario_from_json(&text).unwrap_err();
        assert!(
            matches!(err, Error::Schema { ref field, .. } if field == "schema"),
            "{err}"
        );
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = minimal_json().replace("\"name\"", "\"typo_field\": 1, \"name\"");
        assert!(matches!(scenario_from_json(&text), Err(Error::Json(_))));
    }

    #[test]
    fn invalid_geometry_is_rejected_with_a_field_path() {
        let text = minimal_json().replace("\"radius\": 1.0", "\"radius\": -1.0");
        let err = scenario_from_json(&text).unwrap_err();
        assert!(
            matches!(err, Error::Schema { ref field, .. } if field.starts_with("pair.inner")),
            "{err}"
        );
    }

    #[test]
    fn reversed_nesting_is_rejected() {
        let text = minimal_json().replace("\"radius\": 2.0", "\"radius\": 0.9");
        let err = scenario_from_json(&text).unwrap_err();
        assert!(
            matches!(err, Error::Schema { ref field, .. } if field == "pair"),
            "{err}"
        );
    }

    #[test]
    fn exceptional_check_requires_gauge_and_radius() {
        let text = minimal_json().replace(
            "\"gauge\": {\"type\": \"power\", \"p\": 2.0, \"b\": 4.0},",
            "",
        );
        let err = scenario_from_json(&text).unwrap_err();
        assert!(
            matches!(err, Error::Schema { ref field, .. } if field == "gauge"),
            "{err}"
        );
    }

    #[test]
    fn radius_cap_cannot_exceed_the_diameter() {
        let text = minimal_json().replace("\"r\": 0.5", "\"r\": 2.5");
        let err = scenario_from_json(&text).unwrap_err();
        assert!(
            matches!(err, Error::Schema { ref field, .. } if field == "r"),
            "{err}"
        );
    }

    #[test]
    fn segment_evaluation_must_stay_inside() {
        let text = minimal_json().replace(
            "{\"type\": \"grid\", \"per_axis\": 9, \"margin_factor\": 0.9}",
            "{\"type\": \"segment\", \"from\": [0.0, 0.0], \"to\": [1.5, 0.0], \"count\": 5}",
        );
        let err = scenario_from_json(&text).unwrap_err();
        assert!(
            matches!(err, Error::Schema { ref field, .. } if field == "evaluation"),
            "{err}"
        );
    }

    #[test]
    fn loaded_scenario_runs_end_to_end() {
        let sc = scenario_from_json(&minimal_json()).unwrap();
        let reports = crate::engine::run_scenario(&sc).unwrap();
        assert!(!reports.is_empty());
        assert!(reports.iter().all(|r| matches!(
            r.verdict,
            crate::engine::Verdict::Pass | crate::engine::Verdict::PassWithMc
        )));
    }

    #[test]
    fn interval_grid_keeps_deep_points_only() {
        let text = r#"{
            "schema": 1,
            "name": "interval",
            "dimension": 1,
            "pair": {
                "inner": {"type": "interval", "a": -1.0, "b": 1.0},
                "outer": {"type": "interval", "a": -2.0, "b": 2.0},
                "base_point": [0.0]
            },
            "function": {
                "kind": "convex_piecewise_linear",
                "slope": 1.0,
                "kinks": [{"location": 0.25, "jump": 1.0}]
            },
            "evaluation": {"type": "grid", "per_axis": 21, "margin_factor": 0.9},
            "checks": ["pointwise_lower_bound"]
        }"#;
        let sc = scenario_from_json(text).unwrap();
        assert!(!sc.eval_points.is_empty());
        for p in &sc.eval_points {
            assert!(p.get(0).abs() <= 0.9 + 1e-12);
        }
    }

    #[test]
    fn explicit_points_are_validated() {
        let text = minimal_json().replace(
            "{\"type\": \"grid\", \"per_axis\": 9, \"margin_factor\": 0.9}",
            "{\"type\": \"explicit\", \"points\": [[0.2, 0.1], [0.9999999999, 0.0]]}",
        );
        let err = scenario_from_json(&text).unwrap_err();
        assert!(
            matches!(err, Error::Schema { ref field, .. } if field == "evaluation.points"),
            "{err}"
        );
    }
}
