//! On-disk scenario format: one TOML file describing an inclusion, its
//! constraint set or verification function, the check window, an optional
//! order, an optional polygonal-arc plan, and run settings.
//!
//! Parsing is strict: unknown fields are rejected with a located error, and
//! the hypothesis flags (`h3`, `h4`) are required on every disturbance axis.
//! The flags are author assertions the checkers branch on (sufficient-only
//! versus if-and-only-if conclusions), so the file must state them; nothing
//! here infers or defaults them. Flag claims that contradict the listed
//! values (a missing zero, a wrong cone tag, a union flagged convex) are
//! rejected as hypothesis violations rather than parse errors.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::expr::ScalarField;
use crate::geometry::{ClosedSetSpec, ConeSpec};
use crate::inclusion::{
    ControlSetSpec, DisturbanceMap, DisturbanceRegion, FeedbackRealization, InclusionError,
    ProductInclusion, RegionPred, SelectionPolicy,
};
use crate::interval::{ConeTag, Interval, IntervalUnion};
use crate::invariance::{CheckRegion, InvarianceTarget};
use crate::monotone::{OrderError, OrderSpec};
use crate::sample::BoxRegion;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    /// Malformed file; the message carries the line/column from the parser.
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    /// A hypothesis flag contradicts the listed disturbance values.
    #[error("hypothesis violation: {0}")]
    Hypothesis(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

fn invalid(field: &str, what: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Invalid(format!("{field}: {what}"))
}

fn from_inclusion(e: InclusionError) -> ScenarioError {
    match e {
        InclusionError::TagMismatch { .. } | InclusionError::Hypothesis(_) => {
            ScenarioError::Hypothesis(e.to_string())
        }
        other => ScenarioError::Invalid(other.to_string()),
    }
}

fn from_order(e: OrderError) -> ScenarioError {
    ScenarioError::Invalid(e.to_string())
}

// ---------------------------------------------------------------------------
// raw file schema

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    version: u32,
    name: String,
    dimensions: RawDims,
    dynamics: RawDynamics,
    controls: Option<RawControls>,
    domain: Option<RawBox>,
    constraint: Option<RawSet>,
    window: Option<RawWindow>,
    order: Option<RawOrder>,
    euler: Option<RawEuler>,
    simulate: Option<RawSimulate>,
    run: Option<RawRun>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDims {
    state: usize,
    control: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDynamics {
    factors: Vec<String>,
    disturbances: Vec<RawDisturbance>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDisturbance {
    /// 1-based, matching `x1..xn` in expressions.
    axis: usize,
    /// Zero membership everywhere and a constant generated cone. Required.
    h3: bool,
    /// Convex (single-interval) values plus the author's lower
    /// semicontinuity certificate. Required.
    h4: bool,
    default: RawValue,
    #[serde(default)]
    regions: Vec<RawRegion>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawValue {
    /// `[lo, hi]` pairs; a point is `[v, v]`.
    intervals: Vec<[f64; 2]>,
    tag: ConeTag,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    halfspace: Option<RawHalfspace>,
    #[serde(rename = "box")]
    box_: Option<RawBox>,
    intervals: Vec<[f64; 2]>,
    tag: ConeTag,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHalfspace {
    normal: Vec<f64>,
    offset: f64,
    #[serde(default)]
    strict: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawControls {
    points: Option<Vec<Vec<f64>>>,
    #[serde(rename = "box")]
    box_: Option<RawControlBox>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawControlBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
    per_axis: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSet {
    psi: Option<String>,
    #[serde(default)]
    convex: bool,
    singleton: Option<Vec<f64>>,
    #[serde(rename = "box")]
    box_: Option<RawBox>,
    polyhedron: Option<RawPolyhedron>,
    cone: Option<RawCone>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolyhedron {
    rows: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCone {
    rows: Option<Vec<Vec<f64>>>,
    generators: Option<Vec<Vec<f64>>>,
    /// Nonnegative orthant of this dimension.
    orthant: Option<usize>,
    /// `{0}` of this dimension.
    zero: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWindow {
    lo: Vec<f64>,
    hi: Vec<f64>,
    grid: f64,
    samples: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOrder {
    domain: RawBox,
    state_cone: Option<RawCone>,
    control_cone: Option<RawCone>,
    gamma: Option<RawSet>,
    #[serde(default = "default_order_samples")]
    samples: usize,
}

fn default_order_samples() -> usize {
    32
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEuler {
    start: Vec<f64>,
    gamma: f64,
    horizon: f64,
    /// Feedback realization components over `(t, x)`, one per axis.
    feedback: Vec<String>,
    stages: Vec<RawStage>,
    #[serde(default = "default_quad_nodes")]
    quad_nodes: usize,
    #[serde(default = "default_ball_samples")]
    ball_samples: usize,
    #[serde(default = "default_refine_tol")]
    tol: f64,
}

fn default_quad_nodes() -> usize {
    64
}

fn default_ball_samples() -> usize {
    16
}

fn default_refine_tol() -> f64 {
    1e-3
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStage {
    k: usize,
    eps: f64,
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawPolicy {
    /// Zero disturbance targets with the first grid control.
    Rest,
    /// Seeded uniform choices (seed comes from the run settings).
    Random,
    Constant { control: Vec<f64>, targets: Vec<f64> },
    Adversarial { field: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulate {
    start: Vec<f64>,
    /// Second start point for order-preservation runs.
    start2: Option<Vec<f64>>,
    policy: RawPolicy,
    policy2: Option<RawPolicy>,
    horizon: Option<f64>,
    step: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRun {
    seed: Option<u64>,
    tol: Option<f64>,
    trials: Option<usize>,
    horizon: Option<f64>,
    step: Option<f64>,
    exit_tol: Option<f64>,
    budget: Option<usize>,
}

// ---------------------------------------------------------------------------
// validated scenario

/// Seeds, tolerances and budgets shared by every command.
#[derive(Clone, Debug)]
pub struct RunSettings {
    pub seed: u64,
    pub tol: f64,
    /// Falsifier trial count.
    pub trials: usize,
    /// Falsifier/simulation horizon.
    pub horizon: f64,
    /// Integration step.
    pub step: f64,
    /// Exit measure above which the falsifier counts a crossing.
    pub exit_tol: f64,
    /// Enumeration cap (extreme velocities and similar sweeps).
    pub budget: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            seed: 0,
            tol: 1e-9,
            trials: 100,
            horizon: 1.0,
            step: 1e-3,
            exit_tol: 1e-9,
            budget: 4096,
        }
    }
}

/// Polygonal-arc construction plan (anchor, locality, stage schedule).
#[derive(Clone, Debug)]
pub struct EulerPlan {
    pub realization: FeedbackRealization,
    pub start: Vec<f64>,
    /// `(k, eps)` per refinement stage.
    pub stages: Vec<(usize, f64)>,
    pub quad_nodes: usize,
    pub ball_samples: usize,
    pub tol: f64,
}

/// Simulation plan; `start2`/`policy2` switch the simulate command to an
/// order-preservation pair run (requires an order section).
#[derive(Clone, Debug)]
pub struct SimulatePlan {
    pub start: Vec<f64>,
    pub start2: Option<Vec<f64>>,
    pub policy: SelectionPolicy,
    pub policy2: Option<SelectionPolicy>,
    pub horizon: f64,
    pub step: f64,
}

/// A fully validated scenario file.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub version: u32,
    pub inclusion: ProductInclusion,
    /// Verification function when the constraint was given as a sublevel.
    pub psi: Option<ScalarField>,
    /// The constraint set (also populated for sublevel constraints).
    pub constraint: Option<ClosedSetSpec>,
    pub window: Option<CheckRegion>,
    pub order: Option<OrderSpec>,
    pub order_samples: usize,
    pub euler: Option<EulerPlan>,
    pub simulate: Option<SimulatePlan>,
    pub run: RunSettings,
}

impl Scenario {
    /// The invariance target: the verification function when one was given,
    /// otherwise the structured constraint set.
    pub fn target(&self) -> Option<InvarianceTarget> {
        match (&self.psi, &self.constraint) {
            (Some(psi), _) => Some(InvarianceTarget::Sublevel(psi.clone())),
            (None, Some(set)) => Some(InvarianceTarget::Set(set.clone())),
            (None, None) => None,
        }
    }

    /// One-paragraph echo of the model and its hypothesis flags, printed at
    /// the start of every command so runs are self-describing.
    pub fn banner(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "scenario {} (format version {}): {} states, {} controls, {} grid points",
            self.name,
            self.version,
            self.inclusion.state_dim(),
            self.inclusion.control_dim(),
            self.inclusion.control_points().len(),
        );
        let _ = writeln!(out, "hypothesis flags as declared in the file:");
        for (i, map) in self.inclusion.disturbances().iter().enumerate() {
            let _ = writeln!(
                out,
                "  axis {}: zero-membership/constant-cone = {}, convex-lsc = {} ({} region{} + default, bound {:?})",
                i + 1,
                map.h3(),
                map.h4(),
                map.regions().len(),
                if map.regions().len() == 1 { "" } else { "s" },
                map.bound(),
            );
        }
        let mut sections = Vec::new();
        if self.psi.is_some() {
            sections.push("constraint(sublevel)");
        } else if self.constraint.is_some() {
            sections.push("constraint(set)");
        }
        if self.window.is_some() {
            sections.push("window");
        }
        if self.order.is_some() {
            sections.push("order");
        }
        if self.euler.is_some() {
            sections.push("euler");
        }
        if self.simulate.is_some() {
            sections.push("simulate");
        }
        let _ = writeln!(
            out,
            "sections: {}",
            if sections.is_empty() { "none".to_string() } else { sections.join(", ") }
        );
        out
    }
}

// ---------------------------------------------------------------------------
// building

fn build_interval_union(pairs: &[[f64; 2]], field: &str) -> Result<IntervalUnion, ScenarioError> {
    if pairs.is_empty() {
        return Err(invalid(field, "needs at least one [lo, hi] pair"));
    }
    let mut parts = Vec::with_capacity(pairs.len());
    for (i, p) in pairs.iter().enumerate() {
        if !p[0].is_finite() || !p[1].is_finite() || p[0] > p[1] {
            return Err(invalid(
                &format!("{field}[{i}]"),
                format!("[{}, {}] is not a closed bounded interval", p[0], p[1]),
            ));
        }
        parts.push(Interval::new(p[0], p[1]));
    }
    Ok(IntervalUnion::new(parts))
}

fn build_box(raw: &RawBox, dim: usize, field: &str) -> Result<BoxRegion, ScenarioError> {
    if raw.lo.len() != dim || raw.hi.len() != dim {
        return Err(invalid(field, format!("bounds must have dimension {dim}")));
    }
    for i in 0..dim {
        if !raw.lo[i].is_finite() || !raw.hi[i].is_finite() || raw.lo[i] > raw.hi[i] {
            return Err(invalid(
                field,
                format!("lo[{i}] = {} must be <= hi[{i}] = {}", raw.lo[i], raw.hi[i]),
            ));
        }
    }
    Ok(BoxRegion::new(raw.lo.clone(), raw.hi.clone()))
}

fn build_region(
    raw: &RawRegion,
    n: usize,
    field: &str,
) -> Result<DisturbanceRegion, ScenarioError> {
    let pred = match (&raw.halfspace, &raw.box_) {
        (Some(h), None) => {
            if h.normal.len() != n {
                return Err(invalid(field, format!("halfspace normal must have dimension {n}")));
            }
            if h.normal.iter().all(|c| *c == 0.0) {
                return Err(invalid(field, "halfspace normal must be nonzero"));
            }
            if !h.offset.is_finite() {
                return Err(invalid(field, "halfspace offset must be finite"));
            }
            RegionPred::Halfspace {
                normal: h.normal.clone(),
                offset: h.offset,
                strict: h.strict,
            }
        }
        (None, Some(b)) => RegionPred::Box(build_box(b, n, field)?),
        _ => return Err(invalid(field, "needs exactly one of halfspace or box")),
    };
    let value = build_interval_union(&raw.intervals, &format!("{field}.intervals"))?;
    Ok(DisturbanceRegion { pred, value, tag: raw.tag })
}

fn build_cone(raw: &RawCone, dim: usize, field: &str) -> Result<ConeSpec, ScenarioError> {
    let picks = [raw.rows.is_some(), raw.generators.is_some(), raw.orthant.is_some(), raw.zero.is_some()];
    if picks.iter().filter(|p| **p).count() != 1 {
        return Err(invalid(field, "needs exactly one of rows, generators, orthant, zero"));
    }
    if let Some(d) = raw.orthant {
        if d != dim {
            return Err(invalid(field, format!("orthant dimension {d} expected {dim}")));
        }
        return Ok(ConeSpec::orthant(dim));
    }
    if let Some(d) = raw.zero {
        if d != dim {
            return Err(invalid(field, format!("zero-cone dimension {d} expected {dim}")));
        }
        return Ok(ConeSpec::zero(dim));
    }
    if let Some(rows) = &raw.rows {
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(invalid(field, format!("rows[{i}] must have dimension {dim}")));
            }
        }
        return Ok(ConeSpec::from_rows(dim, rows.clone()));
    }
    let gens = raw.generators.as_ref().unwrap();
    for (i, g) in gens.iter().enumerate() {
        if g.len() != dim {
            return Err(invalid(field, format!("generators[{i}] must have dimension {dim}")));
        }
    }
    Ok(ConeSpec::from_generators(dim, gens.clone()))
}

/// Builds a structured set; `psi` fields parse over `dim` states.
fn build_set(raw: &RawSet, dim: usize, field: &str) -> Result<ClosedSetSpec, ScenarioError> {
    let picks = [
        raw.psi.is_some(),
        raw.singleton.is_some(),
        raw.box_.is_some(),
        raw.polyhedron.is_some(),
        raw.cone.is_some(),
    ];
    if picks.iter().filter(|p| **p).count() != 1 {
        return Err(invalid(
            field,
            "needs exactly one of psi, singleton, box, polyhedron, cone",
        ));
    }
    if let Some(src) = &raw.psi {
        let psi = ScalarField::parse(src, dim, 0).map_err(|e| invalid(&format!("{field}.psi"), e))?;
        if !psi.is_smooth() {
            return Err(invalid(
                &format!("{field}.psi"),
                "sublevel constraints need a smooth defining field",
            ));
        }
        if psi.uses_time() {
            return Err(invalid(&format!("{field}.psi"), "must not depend on time"));
        }
        return Ok(if raw.convex {
            ClosedSetSpec::sublevel_convex(psi)
        } else {
            ClosedSetSpec::sublevel(psi)
        });
    }
    if raw.convex {
        return Err(invalid(field, "convex certificate applies to psi constraints only"));
    }
    if let Some(p) = &raw.singleton {
        if p.len() != dim {
            return Err(invalid(&format!("{field}.singleton"), format!("must have dimension {dim}")));
        }
        return Ok(ClosedSetSpec::Singleton(p.clone()));
    }
    if let Some(b) = &raw.box_ {
        return Ok(ClosedSetSpec::Box(build_box(b, dim, &format!("{field}.box"))?));
    }
    if let Some(p) = &raw.polyhedron {
        if p.rows.is_empty() {
            return Err(invalid(&format!("{field}.polyhedron"), "needs at least one row"));
        }
        if p.rows.len() != p.offsets.len() {
            return Err(invalid(
                &format!("{field}.polyhedron"),
                "rows and offsets must have the same length",
            ));
        }
        for (i, r) in p.rows.iter().enumerate() {
            if r.len() != dim {
                return Err(invalid(
                    &format!("{field}.polyhedron"),
                    format!("rows[{i}] must have dimension {dim}"),
                ));
            }
            if r.iter().all(|c| *c == 0.0) {
                return Err(invalid(
                    &format!("{field}.polyhedron"),
                    format!("rows[{i}] must be nonzero"),
                ));
            }
        }
        return Ok(ClosedSetSpec::polyhedron(p.rows.clone(), p.offsets.clone()));
    }
    let cone = build_cone(raw.cone.as_ref().unwrap(), dim, &format!("{field}.cone"))?;
    Ok(ClosedSetSpec::PolyhedralCone(cone))
}

fn build_policy(
    raw: &RawPolicy,
    inc: &ProductInclusion,
    run: &RunSettings,
    field: &str,
) -> Result<SelectionPolicy, ScenarioError> {
    let n = inc.state_dim();
    let m = inc.control_dim();
    match raw {
        RawPolicy::Rest => Ok(SelectionPolicy::Constant {
            control: inc.control_points()[0].clone(),
            targets: vec![0.0; n],
        }),
        RawPolicy::Random => Ok(SelectionPolicy::Random { seed: run.seed }),
        RawPolicy::Constant { control, targets } => {
            if control.len() != m {
                return Err(invalid(field, format!("constant control must have dimension {m}")));
            }
            if targets.len() != n {
                return Err(invalid(field, format!("constant targets must have dimension {n}")));
            }
            Ok(SelectionPolicy::Constant { control: control.clone(), targets: targets.clone() })
        }
        RawPolicy::Adversarial { field: src } => {
            let f = ScalarField::parse(src, n, 0)
                .map_err(|e| invalid(&format!("{field}.adversarial.field"), e))?;
            if !f.is_smooth() {
                return Err(invalid(
                    &format!("{field}.adversarial.field"),
                    "descent fields must be smooth",
                ));
            }
            Ok(SelectionPolicy::Adversarial { field: f })
        }
    }
}

fn build_scenario(raw: RawScenario, path: &str) -> Result<Scenario, ScenarioError> {
    if raw.version != 1 {
        return Err(invalid("version", format!("unsupported format version {}", raw.version)));
    }
    let n = raw.dimensions.state;
    let m = raw.dimensions.control;
    if n == 0 {
        return Err(invalid("dimensions.state", "must be at least 1"));
    }
    if raw.dynamics.factors.len() != n {
        return Err(invalid(
            "dynamics.factors",
            format!("expected {n} factors, found {}", raw.dynamics.factors.len()),
        ));
    }
    let mut factors = Vec::with_capacity(n);
    for (i, src) in raw.dynamics.factors.iter().enumerate() {
        let f = ScalarField::parse(src, n, m)
            .map_err(|e| invalid(&format!("dynamics.factors[{i}]"), e))?;
        factors.push(f);
    }

    // disturbances: exactly one table per axis, any order in the file
    if raw.dynamics.disturbances.len() != n {
        return Err(invalid(
            "dynamics.disturbances",
            format!("expected {n} axes, found {}", raw.dynamics.disturbances.len()),
        ));
    }
    let mut slots: Vec<Option<&RawDisturbance>> = vec![None; n];
    for d in &raw.dynamics.disturbances {
        if d.axis == 0 || d.axis > n {
            return Err(invalid(
                "dynamics.disturbances",
                format!("axis {} out of range 1..={n}", d.axis),
            ));
        }
        if slots[d.axis - 1].is_some() {
            return Err(invalid(
                "dynamics.disturbances",
                format!("axis {} appears twice", d.axis),
            ));
        }
        slots[d.axis - 1] = Some(d);
    }
    let mut disturbances = Vec::with_capacity(n);
    for (i, slot) in slots.iter().enumerate() {
        let d = slot.unwrap();
        let field = format!("dynamics.disturbances[axis {}]", i + 1);
        let default = build_interval_union(&d.default.intervals, &format!("{field}.default"))?;
        if default.cone_tag() != d.default.tag {
            return Err(ScenarioError::Hypothesis(format!(
                "{field}.default: declared tag {:?} but the values generate {:?}",
                d.default.tag,
                default.cone_tag()
            )));
        }
        let mut regions = Vec::with_capacity(d.regions.len());
        for (j, r) in d.regions.iter().enumerate() {
            regions.push(build_region(r, n, &format!("{field}.regions[{j}]"))?);
        }
        let map = DisturbanceMap::new(i, regions, default, d.h3, d.h4).map_err(from_inclusion)?;
        disturbances.push(map);
    }

    let controls = match &raw.controls {
        None => {
            if m != 0 {
                return Err(invalid("controls", format!("control dimension {m} needs a section")));
            }
            ControlSetSpec::trivial()
        }
        Some(c) => match (&c.points, &c.box_) {
            (Some(points), None) => {
                if points.is_empty() {
                    return Err(invalid("controls.points", "must not be empty"));
                }
                for (i, p) in points.iter().enumerate() {
                    if p.len() != m {
                        return Err(invalid(
                            "controls.points",
                            format!("points[{i}] must have dimension {m}"),
                        ));
                    }
                }
                ControlSetSpec::FiniteSet(points.clone())
            }
            (None, Some(b)) => {
                if b.per_axis == 0 {
                    return Err(invalid("controls.box", "per_axis must be at least 1"));
                }
                let region = build_box(
                    &RawBox { lo: b.lo.clone(), hi: b.hi.clone() },
                    m,
                    "controls.box",
                )?;
                ControlSetSpec::Box { region, per_axis: b.per_axis }
            }
            _ => return Err(invalid("controls", "needs exactly one of points or box")),
        },
    };
    controls.validate().map_err(from_inclusion)?;

    let domain = match &raw.domain {
        Some(b) => Some(build_box(b, n, "domain")?),
        None => None,
    };

    let inclusion = ProductInclusion::new(factors, disturbances, controls, domain)
        .map_err(from_inclusion)?;

    let run = {
        let r = raw.run.unwrap_or_default();
        let d = RunSettings::default();
        let out = RunSettings {
            seed: r.seed.unwrap_or(d.seed),
            tol: r.tol.unwrap_or(d.tol),
            trials: r.trials.unwrap_or(d.trials),
            horizon: r.horizon.unwrap_or(d.horizon),
            step: r.step.unwrap_or(d.step),
            exit_tol: r.exit_tol.unwrap_or_else(|| r.tol.unwrap_or(d.exit_tol)),
            budget: r.budget.unwrap_or(d.budget),
        };
        if !(out.tol > 0.0) {
            return Err(invalid("run.tol", "must be positive"));
        }
        if !(out.horizon > 0.0) || !(out.step > 0.0) {
            return Err(invalid("run", "horizon and step must be positive"));
        }
        if out.trials == 0 || out.budget == 0 {
            return Err(invalid("run", "trials and budget must be at least 1"));
        }
        out
    };

    let (psi, constraint) = match &raw.constraint {
        None => (None, None),
        Some(c) => {
            let set = build_set(c, n, "constraint")?;
            let psi = match &set {
                ClosedSetSpec::SmoothSublevel { psi, .. } => Some(psi.clone()),
                _ => None,
            };
            (psi, Some(set))
        }
    };

    let window = match &raw.window {
        None => None,
        Some(w) => {
            let b = build_box(&RawBox { lo: w.lo.clone(), hi: w.hi.clone() }, n, "window")?;
            if !(w.grid > 0.0) {
                return Err(invalid("window.grid", "must be positive"));
            }
            if w.samples == 0 {
                return Err(invalid("window.samples", "must be at least 1"));
            }
            let mut region = CheckRegion::new(b, w.grid, w.samples);
            region.tol = run.tol;
            region.seed = run.seed;
            Some(region)
        }
    };

    let order = match &raw.order {
        None => None,
        Some(o) => {
            let domain = build_box(&o.domain, n, "order.domain")?;
            match (&o.state_cone, &o.control_cone, &o.gamma) {
                (Some(k), Some(ku), None) => {
                    let k = build_cone(k, n, "order.state_cone")?;
                    let ku = build_cone(ku, m, "order.control_cone")?;
                    Some(OrderSpec::cone_order(domain, k, ku).map_err(from_order)?)
                }
                (None, None, Some(g)) => {
                    let set = build_set(g, 2 * n, "order.gamma")?;
                    Some(OrderSpec::gamma_order(domain, set).map_err(from_order)?)
                }
                _ => {
                    return Err(invalid(
                        "order",
                        "needs either state_cone + control_cone or gamma",
                    ))
                }
            }
        }
    };
    let order_samples = raw.order.as_ref().map(|o| o.samples).unwrap_or(32);
    if order_samples == 0 {
        return Err(invalid("order.samples", "must be at least 1"));
    }

    let euler = match &raw.euler {
        None => None,
        Some(e) => {
            if e.start.len() != n {
                return Err(invalid("euler.start", format!("must have dimension {n}")));
            }
            if e.feedback.len() != n {
                return Err(invalid(
                    "euler.feedback",
                    format!("expected {n} components, found {}", e.feedback.len()),
                ));
            }
            if e.stages.is_empty() {
                return Err(invalid("euler.stages", "needs at least one stage"));
            }
            let mut components = Vec::with_capacity(n);
            for (i, src) in e.feedback.iter().enumerate() {
                let f = ScalarField::parse(src, n, 0)
                    .map_err(|err| invalid(&format!("euler.feedback[{i}]"), err))?;
                components.push(f);
            }
            let realization =
                FeedbackRealization::new(components, e.horizon, e.gamma, e.start.clone(), &raw.name)
                    .map_err(from_inclusion)?;
            let mut stages = Vec::with_capacity(e.stages.len());
            for (i, s) in e.stages.iter().enumerate() {
                if s.k == 0 || !(s.eps > 0.0) {
                    return Err(invalid(
                        &format!("euler.stages[{i}]"),
                        "k must be >= 1 and eps positive",
                    ));
                }
                stages.push((s.k, s.eps));
            }
            if e.quad_nodes < 4 || e.quad_nodes % 2 != 0 {
                return Err(invalid("euler.quad_nodes", "must be even and at least 4"));
            }
            if e.ball_samples < 2 {
                return Err(invalid("euler.ball_samples", "must be at least 2"));
            }
            if !(e.tol > 0.0) {
                return Err(invalid("euler.tol", "must be positive"));
            }
            Some(EulerPlan {
                realization,
                start: e.start.clone(),
                stages,
                quad_nodes: e.quad_nodes,
                ball_samples: e.ball_samples,
                tol: e.tol,
            })
        }
    };

    let simulate = match &raw.simulate {
        None => None,
        Some(s) => {
            if s.start.len() != n {
                return Err(invalid("simulate.start", format!("must have dimension {n}")));
            }
            if let Some(s2) = &s.start2 {
                if s2.len() != n {
                    return Err(invalid("simulate.start2", format!("must have dimension {n}")));
                }
            }
            let horizon = s.horizon.unwrap_or(run.horizon);
            let step = s.step.unwrap_or(run.step);
            if !(horizon > 0.0) || !(step > 0.0) {
                return Err(invalid("simulate", "horizon and step must be positive"));
            }
            let policy = build_policy(&s.policy, &inclusion, &run, "simulate.policy")?;
            let policy2 = match &s.policy2 {
                Some(p) => Some(build_policy(p, &inclusion, &run, "simulate.policy2")?),
                None => None,
            };
            Some(SimulatePlan {
                start: s.start.clone(),
                start2: s.start2.clone(),
                policy,
                policy2,
                horizon,
                step,
            })
        }
    };

    let _ = path;
    Ok(Scenario {
        name: raw.name,
        version: raw.version,
        inclusion,
        psi,
        constraint,
        window,
        order,
        order_samples,
        euler,
        simulate,
        run,
    })
}

/// Parses scenario text; `label` names the source in errors.
pub fn parse_scenario(text: &str, label: &str) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioError::Parse {
        path: label.to_string(),
        message: e.to_string(),
    })?;
    build_scenario(raw, label)
}

/// Loads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: shown.clone(), source })?;
    parse_scenario(&text, &shown)
}
