//! Product-form controlled differential inclusions
//! `dx ∈ ∏ g_i(x, a_i) D_i(x)` with scalar factor fields, state-dependent
//! interval-union disturbances, and a compact control set.
//!
//! The velocity set factors per axis, so the upper Hamiltonian separates
//! into per-axis endpoint suprema maximized over a finite control grid; all
//! structural checks (weak zeroing, feedback containment) work off the same
//! factored representation.

pub mod disturbance;
pub mod integrate;

pub use disturbance::{DisturbanceMap, DisturbanceRegion, RegionPred};
pub use integrate::{SelectionPolicy, Trajectory};

use thiserror::Error;

use crate::expr::{FieldError, ScalarField};
use crate::geometry::{ccone_contains_product, cone_contains_product};
use crate::interval::IntervalUnion;
use crate::sample::BoxRegion;
use crate::verdict::{Resolution, Verdict, Witness};

#[derive(Debug, Error)]
pub enum InclusionError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("axis {axis}: declared cone tag {declared:?} but values generate {actual:?}")]
    TagMismatch {
        axis: usize,
        declared: crate::interval::ConeTag,
        actual: crate::interval::ConeTag,
    },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("state left the domain at t = {t}: {x:?}")]
    DomainExit { t: f64, x: Vec<f64> },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("integration budget exhausted: {0}")]
    Budget(String),
}

/// Compact control set, discretized for all optimization.
#[derive(Clone, Debug)]
pub enum ControlSetSpec {
    FiniteSet(Vec<Vec<f64>>),
    Box { region: BoxRegion, per_axis: usize },
}

impl ControlSetSpec {
    /// The zero-dimensional control set: one empty control point.
    pub fn trivial() -> Self {
        ControlSetSpec::FiniteSet(vec![Vec::new()])
    }

    pub fn dim(&self) -> usize {
        match self {
            ControlSetSpec::FiniteSet(pts) => pts.first().map_or(0, |p| p.len()),
            ControlSetSpec::Box { region, .. } => region.dim(),
        }
    }

    /// The discrete control grid every optimizer runs over.
    pub fn points(&self) -> Vec<Vec<f64>> {
        match self {
            ControlSetSpec::FiniteSet(pts) => pts.clone(),
            ControlSetSpec::Box { region, per_axis } => region.grid_counts(*per_axis),
        }
    }

    pub fn validate(&self) -> Result<(), InclusionError> {
        let pts = self.points();
        if pts.is_empty() {
            return Err(InclusionError::Dimension("control set is empty".into()));
        }
        let m = self.dim();
        if pts.iter().any(|p| p.len() != m) {
            return Err(InclusionError::Dimension("control points of mixed dimension".into()));
        }
        Ok(())
    }
}

/// The product inclusion itself. `windows` maps each axis to the slice of
/// the (possibly stacked) state its disturbance map reads.
#[derive(Clone, Debug)]
pub struct ProductInclusion {
    factors: Vec<ScalarField>,
    disturbances: Vec<DisturbanceMap>,
    windows: Vec<(usize, usize)>,
    controls: ControlSetSpec,
    domain: Option<BoxRegion>,
    state_dim: usize,
    control_dim: usize,
}

/// Argmax record of one Hamiltonian evaluation.
#[derive(Clone, Debug)]
pub struct HamiltonianWitness {
    pub value: f64,
    pub control: Vec<f64>,
    pub deltas: Vec<f64>,
    pub velocity: Vec<f64>,
}

/// Which conic containment a feedback realization is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeMode {
    /// Per-coordinate scalings (the weaker, componentwise containment).
    Componentwise,
    /// One common scaling (the classical ray containment).
    Ray,
}

impl ProductInclusion {
    pub fn new(
        factors: Vec<ScalarField>,
        disturbances: Vec<DisturbanceMap>,
        controls: ControlSetSpec,
        domain: Option<BoxRegion>,
    ) -> Result<Self, InclusionError> {
        let n = factors.len();
        if n == 0 {
            return Err(InclusionError::Dimension("need at least one axis".into()));
        }
        if disturbances.len() != n {
            return Err(InclusionError::Dimension(format!(
                "{} factors but {} disturbance maps",
                n,
                disturbances.len()
            )));
        }
        controls.validate()?;
        let m = controls.dim();
        for (i, f) in factors.iter().enumerate() {
            if f.state_dim() != n || f.control_dim() != m {
                return Err(InclusionError::Dimension(format!(
                    "factor {i} is over ({}, {}) but the inclusion is ({n}, {m})",
                    f.state_dim(),
                    f.control_dim()
                )));
            }
            if f.uses_time() {
                return Err(InclusionError::Dimension(format!(
                    "factor {i} references time; factors are autonomous"
                )));
            }
        }
        if let Some(d) = &domain {
            if d.dim() != n {
                return Err(InclusionError::Dimension("domain dimension mismatch".into()));
            }
        }
        let windows = vec![(0, n); n];
        Ok(ProductInclusion {
            factors,
            disturbances,
            windows,
            controls,
            domain,
            state_dim: n,
            control_dim: m,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn control_dim(&self) -> usize {
        self.control_dim
    }

    pub fn controls(&self) -> &ControlSetSpec {
        &self.controls
    }

    pub fn domain(&self) -> Option<&BoxRegion> {
        self.domain.as_ref()
    }

    pub fn factors(&self) -> &[ScalarField] {
        &self.factors
    }

    pub fn disturbances(&self) -> &[DisturbanceMap] {
        &self.disturbances
    }

    pub fn control_points(&self) -> Vec<Vec<f64>> {
        self.controls.points()
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        self.domain.as_ref().map_or(true, |d| d.contains(x, 0.0))
    }

    /// All hypothesis flags on all axes.
    pub fn all_h3(&self) -> bool {
        self.disturbances.iter().all(|d| d.h3())
    }

    pub fn all_h4(&self) -> bool {
        self.disturbances.iter().all(|d| d.h4())
    }

    fn axis_state<'a>(&self, i: usize, x: &'a [f64]) -> &'a [f64] {
        let (start, len) = self.windows[i];
        &x[start..start + len]
    }

    /// The disturbance value the axis sees at state `x` (window applied).
    pub fn axis_value(&self, i: usize, x: &[f64]) -> &IntervalUnion {
        self.disturbances[i].value_at(self.axis_state(i, x)).0
    }

    /// Per-axis active-region indices; two states with equal signatures see
    /// identical disturbance values on every axis.
    pub fn region_signature(&self, x: &[f64]) -> Vec<usize> {
        (0..self.state_dim)
            .map(|i| self.disturbances[i].region_index(self.axis_state(i, x)))
            .collect()
    }

    /// Snap near-boundary coordinates exactly onto region boundaries.
    pub fn snap_region_boundaries(&self, x: &mut Vec<f64>, tol: f64) {
        for i in 0..self.state_dim {
            let (start, len) = self.windows[i];
            self.disturbances[i].snap_boundaries(&mut x[start..start + len], tol);
        }
    }

    /// The velocity set at `(x, a)` as one interval union per axis:
    /// component `i` is `g_i(x, a) * D_i(x)`, exactly.
    pub fn velocity_set(&self, x: &[f64], a: &[f64]) -> Result<Vec<IntervalUnion>, InclusionError> {
        (0..self.state_dim)
            .map(|i| {
                let g = self.factors[i].eval(x, a, 0.0)?;
                Ok(self.axis_value(i, x).scale(g))
            })
            .collect()
    }

    /// Extreme points of the velocity set: cartesian combinations of the
    /// per-axis endpoint lists, capped deterministically.
    pub fn extreme_velocities(
        &self,
        x: &[f64],
        a: &[f64],
        cap: usize,
    ) -> Result<Vec<Vec<f64>>, InclusionError> {
        let unions = self.velocity_set(x, a)?;
        let endpoint_lists: Vec<Vec<f64>> = unions.iter().map(|u| u.endpoints()).collect();
        let mut out = Vec::new();
        let total: usize = endpoint_lists.iter().map(|l| l.len()).product();
        let take = total.min(cap.max(1));
        for idx in 0..take {
            let mut rem = idx;
            let mut v = Vec::with_capacity(self.state_dim);
            for list in &endpoint_lists {
                v.push(list[rem % list.len()]);
                rem /= list.len();
            }
            out.push(v);
        }
        Ok(out)
    }

    /// Upper Hamiltonian `H(x, d) = sup { <v, d> : v in F(x) }`, computed
    /// separably per axis and maximized over the control grid.
    pub fn hamiltonian(&self, x: &[f64], d: &[f64]) -> Result<f64, InclusionError> {
        Ok(self.hamiltonian_argmax(x, d)?.value)
    }

    /// Hamiltonian with its maximizing control, disturbances, and velocity.
    /// Ties keep the earliest control grid point and the per-axis argsup
    /// tie rule (smallest magnitude), so the output is deterministic.
    pub fn hamiltonian_argmax(
        &self,
        x: &[f64],
        d: &[f64],
    ) -> Result<HamiltonianWitness, InclusionError> {
        assert_eq!(d.len(), self.state_dim);
        let mut best: Option<HamiltonianWitness> = None;
        for a in self.control_points() {
            let mut total = 0.0;
            let mut velocity = Vec::with_capacity(self.state_dim);
            let mut deltas = Vec::with_capacity(self.state_dim);
            for i in 0..self.state_dim {
                let g = self.factors[i].eval(x, &a, 0.0)?;
                let base = self.axis_value(i, x);
                let scaled = base.scale(g);
                let (v, s) = scaled.argsup_linear(d[i]);
                total += s;
                velocity.push(v);
                deltas.push(if g.abs() > 1e-300 { base.project(v / g) } else { base.project(0.0) });
            }
            let better = match &best {
                None => true,
                Some(b) => total > b.value,
            };
            if better {
                best = Some(HamiltonianWitness { value: total, control: a, deltas, velocity });
            }
        }
        Ok(best.expect("control set validated nonempty"))
    }

    /// Whether `w` lies in `F(x)` (over the control grid) within `tol`,
    /// with the offending distance when it does not.
    pub fn velocity_membership(
        &self,
        x: &[f64],
        w: &[f64],
        tol: f64,
    ) -> Result<(bool, f64), InclusionError> {
        let mut best = f64::INFINITY;
        for a in self.control_points() {
            let unions = self.velocity_set(x, &a)?;
            let worst = unions
                .iter()
                .zip(w)
                .map(|(u, wi)| (wi - u.project(*wi)).abs())
                .fold(0.0, f64::max);
            best = best.min(worst);
            if best <= tol {
                return Ok((true, best));
            }
        }
        Ok((false, best))
    }

    /// Weak-zeroing check: every axis embedding of every `p in F(x)` stays
    /// in `F(x)`. Short-circuits structurally when every region of every
    /// axis contains zero; otherwise samples.
    pub fn weakly_zeroing_check(&self, window: &BoxRegion, samples: usize, seed: u64) -> Verdict {
        let n = self.state_dim;
        let base_res = Resolution {
            grid: 0.0,
            samples,
            tol: 1e-9,
            extras: vec![("seed".into(), seed.to_string())],
        };
        if n == 1 {
            return Verdict::pass("single axis: embeddings are the vectors themselves", base_res);
        }
        if self.disturbances.iter().all(|d| d.zero_everywhere()) {
            return Verdict::pass("structural: zero belongs to every axis value", base_res);
        }
        let tol = 1e-9;
        for x in window.halton_samples(samples, seed) {
            if !self.in_domain(&x) {
                continue;
            }
            for a in self.control_points() {
                let candidates = match self.extreme_velocities(&x, &a, 64) {
                    Ok(c) => c,
                    Err(e) => {
                        return Verdict::inconclusive(
                            format!("velocity evaluation failed: {e}"),
                            base_res,
                        )
                    }
                };
                for p in candidates {
                    for axis in 0..n {
                        let mut embedded = vec![0.0; n];
                        embedded[axis] = p[axis];
                        let (ok, margin) = match self.velocity_membership(&x, &embedded, tol) {
                            Ok(r) => r,
                            Err(e) => {
                                return Verdict::inconclusive(
                                    format!("membership evaluation failed: {e}"),
                                    base_res,
                                )
                            }
                        };
                        if !ok {
                            return Verdict::fail(
                                "axis embedding escapes the velocity set",
                                vec![Witness {
                                    t: None,
                                    x,
                                    direction: p,
                                    velocity: embedded,
                                    margin,
                                    note: format!("axis {axis}"),
                                }],
                                base_res,
                            );
                        }
                    }
                }
            }
        }
        Verdict::pass("sampled: all axis embeddings stayed in the velocity set", base_res)
    }

    /// Conic containment of a feedback realization over its locality
    /// window: `f(t, x)` must lie in the componentwise cone (or the ray
    /// cone, per `mode`) of the velocity set for sampled `(t, x)`.
    pub fn realization_ccone_check(
        &self,
        f: &FeedbackRealization,
        mode: ConeMode,
        samples: usize,
        seed: u64,
    ) -> Verdict {
        let n = self.state_dim;
        let tol = 1e-9;
        let res = Resolution {
            grid: 0.0,
            samples,
            tol,
            extras: vec![
                ("seed".into(), seed.to_string()),
                (
                    "mode".into(),
                    match mode {
                        ConeMode::Componentwise => "componentwise".into(),
                        ConeMode::Ray => "ray".into(),
                    },
                ),
            ],
        };
        if f.dim() != n {
            return Verdict::inconclusive("feedback dimension mismatch", res);
        }
        let ball = BoxRegion::ball(&f.anchor, f.gamma);
        let mut lo = vec![0.0];
        lo.extend_from_slice(&ball.lo);
        let mut hi = vec![f.gamma];
        hi.extend_from_slice(&ball.hi);
        let tx_box = BoxRegion::new(lo, hi);
        for tx in tx_box.halton_samples(samples, seed) {
            let t = tx[0];
            let x = &tx[1..];
            let fv = match f.eval(t, x) {
                Ok(v) => v,
                Err(e) => {
                    return Verdict::inconclusive(format!("feedback evaluation failed: {e}"), res)
                }
            };
            let mut contained = false;
            let mut margin = f64::INFINITY;
            for a in self.control_points() {
                let unions = match self.velocity_set(x, &a) {
                    Ok(u) => u,
                    Err(e) => {
                        return Verdict::inconclusive(
                            format!("velocity evaluation failed: {e}"),
                            res,
                        )
                    }
                };
                let ok = match mode {
                    ConeMode::Componentwise => ccone_contains_product(&unions, &fv, tol),
                    ConeMode::Ray => cone_contains_product(&unions, &fv, tol),
                };
                if ok {
                    contained = true;
                    break;
                }
                margin = margin.min(cone_violation(&unions, &fv));
            }
            if !contained {
                let margin = if margin.is_finite() && margin > tol { margin } else { 1.0 };
                return Verdict::fail(
                    "feedback value escapes the conic hull of the velocity set",
                    vec![Witness {
                        t: Some(t),
                        x: x.to_vec(),
                        direction: Vec::new(),
                        velocity: fv,
                        margin,
                        note: match mode {
                            ConeMode::Componentwise => "no componentwise scaling".into(),
                            ConeMode::Ray => "no common scaling".into(),
                        },
                    }],
                    res,
                );
            }
        }
        Verdict::pass("feedback contained on all samples", res)
    }

    /// Stack two inclusions into one over the product state/control space.
    /// Velocity sets factor exactly: the first block reads the first state
    /// slice, the second block the rest.
    pub fn stack(&self, other: &ProductInclusion) -> Result<ProductInclusion, InclusionError> {
        let n1 = self.state_dim;
        let n2 = other.state_dim;
        let m1 = self.control_dim;
        let m2 = other.control_dim;
        let n = n1 + n2;
        let m = m1 + m2;
        let mut factors = Vec::with_capacity(n);
        for f in &self.factors {
            factors.push(f.shift_vars(0, n, 0, m));
        }
        for f in &other.factors {
            factors.push(f.shift_vars(n1, n, m1, m));
        }
        let mut disturbances = Vec::with_capacity(n);
        disturbances.extend(self.disturbances.iter().cloned());
        disturbances.extend(other.disturbances.iter().cloned());
        let mut windows = Vec::with_capacity(n);
        for &(s, l) in &self.windows {
            windows.push((s, l));
        }
        for &(s, l) in &other.windows {
            windows.push((n1 + s, l));
        }
        let pts1 = self.control_points();
        let pts2 = other.control_points();
        let mut pts = Vec::with_capacity(pts1.len() * pts2.len());
        for p1 in &pts1 {
            for p2 in &pts2 {
                let mut p = p1.clone();
                p.extend_from_slice(p2);
                pts.push(p);
            }
        }
        let domain = match (&self.domain, &other.domain) {
            (Some(a), Some(b)) => {
                let mut lo = a.lo.clone();
                lo.extend_from_slice(&b.lo);
                let mut hi = a.hi.clone();
                hi.extend_from_slice(&b.hi);
                Some(BoxRegion::new(lo, hi))
            }
            _ => None,
        };
        Ok(ProductInclusion {
            factors,
            disturbances,
            windows,
            controls: ControlSetSpec::FiniteSet(pts),
            domain,
            state_dim: n,
            control_dim: m,
        })
    }
}

/// Per-coordinate distance of `q` to the cone generated by each factor (a
/// conservative violation measure used for witness margins).
fn cone_violation(unions: &[IntervalUnion], q: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (u, qi) in unions.iter().zip(q) {
        let viol = match u.cone_tag() {
            crate::interval::ConeTag::Zero => qi.abs(),
            crate::interval::ConeTag::Nonneg => (-qi).max(0.0),
            crate::interval::ConeTag::Nonpos => qi.max(0.0),
            crate::interval::ConeTag::Full => 0.0,
        };
        worst = worst.max(viol);
    }
    worst
}

/// A candidate feedback `f(t, x)` with its locality data: containment is
/// checked on `[0, gamma) x (anchor + gamma ball)`.
#[derive(Clone, Debug)]
pub struct FeedbackRealization {
    components: Vec<ScalarField>,
    pub horizon: f64,
    pub gamma: f64,
    pub anchor: Vec<f64>,
    pub label: String,
}

impl FeedbackRealization {
    pub fn new(
        components: Vec<ScalarField>,
        horizon: f64,
        gamma: f64,
        anchor: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self, InclusionError> {
        let n = components.len();
        if n == 0 || anchor.len() != n {
            return Err(InclusionError::Dimension("feedback/anchor dimension mismatch".into()));
        }
        for (i, c) in components.iter().enumerate() {
            if c.state_dim() != n || c.control_dim() != 0 {
                return Err(InclusionError::Dimension(format!(
                    "feedback component {i} must be over (t, x) with {n} states and no controls"
                )));
            }
        }
        if !(horizon > 0.0) {
            return Err(InclusionError::Dimension("horizon must be positive".into()));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(InclusionError::Dimension("locality radius must be in (0, 1)".into()));
        }
        Ok(FeedbackRealization { components, horizon, gamma, anchor, label: label.into() })
    }

    /// Constant-in-(t, x) feedback.
    pub fn constant(
        values: &[f64],
        horizon: f64,
        gamma: f64,
        anchor: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self, InclusionError> {
        let n = values.len();
        let components = values.iter().map(|&v| ScalarField::constant(v, n, 0)).collect();
        Self::new(components, horizon, gamma, anchor, label)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    /// Raw evaluation (no time clipping).
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        self.components.iter().map(|c| c.eval(x, &[], t)).collect()
    }

    /// Evaluation with zero extension outside `[0, horizon]`, the form the
    /// mollifier integrates.
    pub fn eval_extended(&self, t: f64, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        if t < 0.0 || t > self.horizon {
            return Ok(vec![0.0; self.dim()]);
        }
        self.eval(t, x)
    }
}
