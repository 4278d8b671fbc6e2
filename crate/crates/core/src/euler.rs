//! Constructive viability machinery: mollified feedback realizations,
//! interval hull sets over sup-norm balls, coordinate-sequential descent
//! selection, polygonal-arc assembly with the derived step constants, and
//! a (k, eps) refinement loop with a Cauchy distance check.
//!
//! Norms here are supremum norms throughout (balls are boxes); that is the
//! regime all the step constants are derived in.

use thiserror::Error;

use crate::expr::{
    estimate_growth_timed, estimate_modulus_timed, FieldError, ModulusTable, ScalarField,
};
use crate::inclusion::FeedbackRealization;
use crate::sample::{sup_norm, BoxRegion};

#[derive(Debug, Error)]
pub enum EulerError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("configuration rejected: {0}")]
    Config(String),
    #[error(
        "descent failed at step {step}, axis {axis}, t = {t}: best increment {best_increment} \
         exceeds allowed {allowed} (the Hamiltonian hypothesis fails near x = {x:?})"
    )]
    DescentFailed {
        step: usize,
        axis: usize,
        t: f64,
        x: Vec<f64>,
        best_increment: f64,
        allowed: f64,
    },
}

/// The derived step constants: `t_prime = min(horizon, gamma / (32 delta))`
/// and `h_k = gamma / (32 k delta)`.
pub fn step_constants(gamma: f64, horizon: f64, k: usize, delta: f64) -> (f64, f64) {
    let t_prime = horizon.min(gamma / (32.0 * delta));
    let h_k = gamma / (32.0 * k as f64 * delta);
    (t_prime, h_k)
}

// ---------------------------------------------------------------------------
// mollifier

/// Normalization constant of the bump kernel, fixed once so that the exact
/// integral of `C exp(1/(t^2-1))` over [-1, 1] is 1 within 1e-10. The
/// integrand is smooth with all derivatives vanishing at the endpoints, so
/// a fine composite Simpson rule converges superalgebraically.
fn bump_constant() -> f64 {
    use std::sync::OnceLock;
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let m = 4096usize;
        let h = 2.0 / m as f64;
        let raw = |t: f64| {
            let d = t * t - 1.0;
            if d >= 0.0 {
                0.0
            } else {
                (1.0 / d).exp()
            }
        };
        let mut mass = raw(-1.0) + raw(1.0);
        for j in 1..m {
            let w = if j % 2 == 1 { 4.0 } else { 2.0 };
            mass += w * raw(-1.0 + j as f64 * h);
        }
        mass *= h / 3.0;
        1.0 / mass
    })
}

/// The scaled bump `eta_eps(t) = eta(t/eps)/eps`, supported on (-eps, eps).
pub fn mollifier(t: f64, eps: f64) -> f64 {
    assert!(eps > 0.0, "mollifier width must be positive");
    let s = t / eps;
    let d = s * s - 1.0;
    if d >= 0.0 {
        return 0.0;
    }
    bump_constant() * (1.0 / d).exp() / eps
}

/// Discrete unit-mass check of the kernel on its own quadrature: the
/// Simpson mass of `mollifier(., eps)` over [-eps, eps] with `m` intervals.
pub fn mollifier_mass(eps: f64, m: usize) -> f64 {
    assert!(m >= 2 && m % 2 == 0);
    let h = 2.0 * eps / m as f64;
    let mut mass = 0.0;
    for j in 0..=m {
        let w = if j == 0 || j == m {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        mass += w * mollifier(-eps + j as f64 * h, eps);
    }
    mass * h / 3.0
}

/// Time-mollified feedback: componentwise convolution with the bump kernel
/// over `[t-eps, t+eps]` intersected with `[0, horizon]`, dividing by the
/// discrete kernel mass over the same clipped node set. Each value is then
/// an exact convex combination of in-domain feedback values: constants
/// reproduce at every in-domain time (no boundary attenuation), linear-in-t
/// fields reproduce in the interior, and the spatial modulus of the
/// feedback carries over unchanged. Where the window misses the domain
/// entirely the zero extension applies and the value is zero.
pub struct MollifiedFeedback<'a> {
    f: &'a FeedbackRealization,
    pub eps: f64,
    pub quad_nodes: usize,
}

impl<'a> MollifiedFeedback<'a> {
    pub fn new(f: &'a FeedbackRealization, eps: f64, quad_nodes: usize) -> Result<Self, EulerError> {
        if !(eps > 0.0) {
            return Err(EulerError::Config("mollification width must be positive".into()));
        }
        if quad_nodes < 4 || quad_nodes % 2 != 0 {
            return Err(EulerError::Config("quadrature intervals must be even and >= 4".into()));
        }
        Ok(MollifiedFeedback { f, eps, quad_nodes })
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>, EulerError> {
        let m = self.quad_nodes;
        let h = 2.0 * self.eps / m as f64;
        let n = self.f.dim();
        let mut num = vec![0.0; n];
        let mut mass = 0.0;
        for j in 0..=m {
            let s = t - self.eps + j as f64 * h;
            if s < 0.0 || s > self.f.horizon {
                continue;
            }
            let w = if j == 0 || j == m {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let kernel = w * mollifier(t - s, self.eps);
            if kernel == 0.0 {
                continue;
            }
            mass += kernel;
            let fv = self.f.eval_extended(s, x)?;
            for i in 0..n {
                num[i] += kernel * fv[i];
            }
        }
        if mass == 0.0 {
            return Ok(num);
        }
        Ok(num.iter().map(|v| v / mass).collect())
    }

    pub fn eval_component(&self, t: f64, x: &[f64], i: usize) -> Result<f64, EulerError> {
        Ok(self.eval(t, x)?[i])
    }
}

/// One-shot convolution (see [`MollifiedFeedback`] for the semantics).
pub fn mollify(
    f: &FeedbackRealization,
    eps: f64,
    quad_nodes: usize,
    t: f64,
    x: &[f64],
) -> Result<Vec<f64>, EulerError> {
    MollifiedFeedback::new(f, eps, quad_nodes)?.eval(t, x)
}

// ---------------------------------------------------------------------------
// configuration

/// All constants of one arc construction. The derived fields follow the
/// step formulas exactly; `delta_d` majorizes every hull set that the arc
/// can query from inside `anchor + (gamma/2) ball`.
#[derive(Clone, Debug)]
pub struct EulerConfig {
    pub gamma: f64,
    pub horizon: f64,
    pub k: usize,
    pub eps: f64,
    pub quad_nodes: usize,
    pub ball_samples: usize,
    pub delta_d: f64,
    pub t_prime: f64,
    pub h_k: f64,
}

impl EulerConfig {
    /// Derives the constants from the feedback's growth behavior on
    /// `D = anchor + (gamma/2) ball`:
    /// `delta(D) = 1 + c1 + n c2 + c2 max{|v| : v in D}`.
    pub fn derive(
        f: &FeedbackRealization,
        k: usize,
        eps: f64,
        quad_nodes: usize,
        ball_samples: usize,
        seed: u64,
    ) -> Result<Self, EulerError> {
        if k == 0 {
            return Err(EulerError::Config("descent index k must be positive".into()));
        }
        if quad_nodes < 4 || quad_nodes % 2 != 0 {
            return Err(EulerError::Config("quadrature intervals must be even and >= 4".into()));
        }
        if ball_samples < 2 {
            return Err(EulerError::Config("hull sampling needs at least 2 points".into()));
        }
        if !(eps > 0.0) || eps < 2.0 * f.horizon / quad_nodes as f64 {
            return Err(EulerError::Config(format!(
                "mollification width {eps} is below the quadrature resolution 2T/M = {}",
                2.0 * f.horizon / quad_nodes as f64
            )));
        }
        let n = f.dim();
        let d_ball = BoxRegion::ball(&f.anchor, f.gamma / 2.0);
        let mut c1: f64 = 0.0;
        let mut c2: f64 = 0.0;
        for comp in f.components() {
            let g = estimate_growth_timed(comp, &d_ball, f.horizon, 128, seed)?;
            c1 = c1.max(g.c1);
            c2 = c2.max(g.c2);
        }
        let max_norm_d = sup_norm(&f.anchor) + f.gamma / 2.0;
        let delta_d = 1.0 + c1 + n as f64 * c2 + c2 * max_norm_d;
        let (t_prime, h_k) = step_constants(f.gamma, f.horizon, k, delta_d);
        Ok(EulerConfig {
            gamma: f.gamma,
            horizon: f.horizon,
            k,
            eps,
            quad_nodes,
            ball_samples,
            delta_d,
            t_prime,
            h_k,
        })
    }

    /// Number of steps: the smallest integer `>= t_prime / h_k`.
    pub fn c_k(&self) -> usize {
        (self.t_prime / self.h_k).ceil() as usize
    }
}

// ---------------------------------------------------------------------------
// hull sets and descent

/// Per-step descent record: the selected velocity, the certified bound,
/// and the per-axis increments that compose it.
#[derive(Clone, Debug)]
pub struct DescentStep {
    pub t: f64,
    pub h: f64,
    pub psi_before: f64,
    pub psi_after: f64,
    /// `h / k`, the step's total allowance.
    pub allowed: f64,
    pub velocity: Vec<f64>,
    pub axis_increments: Vec<f64>,
}

impl DescentStep {
    pub fn holds(&self) -> bool {
        self.psi_after <= self.psi_before + self.allowed + 1e-12 * (1.0 + self.psi_before.abs())
    }
}

/// Aggregated per-arc certificate.
#[derive(Clone, Debug)]
pub struct DescentCertificate {
    pub steps: Vec<DescentStep>,
    /// Largest node value of the descent functional.
    pub sup_psi: f64,
    /// `psi(anchor) + (t_prime + gamma)/k`, the bound every node must obey.
    pub bound: f64,
}

impl DescentCertificate {
    pub fn holds(&self) -> bool {
        self.steps.iter().all(DescentStep::holds)
    }
}

/// Hull-set evaluator: samples mollified components over sup-norm balls on
/// a regular grid and widens by the empirical modulus at the covering
/// radius, so the interval is a certified superset of the sampled hull.
pub struct HullMachine<'a> {
    pub fm: MollifiedFeedback<'a>,
    moduli: Vec<ModulusTable>,
    ball_samples: usize,
    anchor: Vec<f64>,
    gamma: f64,
}

impl<'a> HullMachine<'a> {
    pub fn new(
        f: &'a FeedbackRealization,
        cfg: &EulerConfig,
        seed: u64,
    ) -> Result<Self, EulerError> {
        let fm = MollifiedFeedback::new(f, cfg.eps, cfg.quad_nodes)?;
        let n = f.dim();
        // modulus region: D fattened by n, covering every hull query ball
        let k_region = BoxRegion::ball(&f.anchor, f.gamma / 2.0 + n as f64);
        let moduli = f
            .components()
            .iter()
            .map(|c| estimate_modulus_timed(c, &k_region, f.horizon, 64, seed))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(HullMachine {
            fm,
            moduli,
            ball_samples: cfg.ball_samples,
            anchor: f.anchor.clone(),
            gamma: f.gamma,
        })
    }

    /// `[min, max]` of mollified component `i` over the ball of radius
    /// `1/r` around `x`, widened by the component modulus at the grid
    /// covering radius.
    pub fn hull_set(&self, t: f64, x: &[f64], r: f64, i: usize) -> Result<(f64, f64), EulerError> {
        assert!(r > 0.0, "hull radius parameter must be positive");
        let rho = 1.0 / r;
        let n = x.len();
        let per_axis = ((self.ball_samples as f64).powf(1.0 / n as f64).floor() as usize).max(2);
        let ball = BoxRegion::ball(x, rho);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for y in ball.grid_counts(per_axis) {
            let v = self.fm.eval_component(t, &y, i)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let covering = rho / (per_axis - 1) as f64;
        let widen = self.moduli[i].eval(covering);
        Ok((lo - widen, hi + widen))
    }

    /// `g_f[t, x, r] = 1 + sup{ |p| : p in the product of component hulls }`
    /// in the sup norm.
    pub fn hull_bound(&self, t: f64, x: &[f64], r: f64) -> Result<f64, EulerError> {
        let mut sup = 0.0f64;
        for i in 0..self.fm.dim() {
            let (lo, hi) = self.hull_set(t, x, r, i)?;
            sup = sup.max(lo.abs()).max(hi.abs());
        }
        Ok(1.0 + sup)
    }

    /// Coordinate-sequential descent selection: for each axis in turn,
    /// minimize `psi` along the axis over the hull interval at radius
    /// `1/(16k)` around the partially advanced point, accepting the axis
    /// increment only when it is within `h/(n k)`. The returned velocity
    /// certifies `psi(x + h v) <= psi(x) + h/k` by direct evaluation.
    pub fn descent_select(
        &self,
        psi: &ScalarField,
        t: f64,
        x: &[f64],
        h: f64,
        k: usize,
    ) -> Result<(Vec<f64>, DescentStep), EulerError> {
        let n = x.len();
        // step/radius relation: h <= 1/(32 k g_f[t,x,k/n]) and the reach
        // x + h g_f ball must stay inside anchor + (2 gamma/3) ball
        let g = self.hull_bound(t, x, k as f64 / n as f64)?;
        if !(h > 0.0) || h > 1.0 / (32.0 * k as f64 * g) {
            return Err(EulerError::Config(format!(
                "step/radius relation violated: h = {h} exceeds 1/(32 k g) = {}",
                1.0 / (32.0 * k as f64 * g)
            )));
        }
        let dist = sup_norm(&x.iter().zip(&self.anchor).map(|(a, b)| a - b).collect::<Vec<_>>());
        if dist + h * g > 2.0 * self.gamma / 3.0 + 1e-12 {
            return Err(EulerError::Config(format!(
                "step/radius relation violated: reach {} leaves the 2 gamma/3 ball",
                dist + h * g
            )));
        }
        let psi_before = psi.eval_state(x)?;
        let mut point = x.to_vec();
        let mut psi_current = psi_before;
        let mut velocity = Vec::with_capacity(n);
        let mut increments = Vec::with_capacity(n);
        let allowed_axis = h / (n as f64 * k as f64);
        for i in 0..n {
            let (lo, hi) = self.hull_set(t, &point, 16.0 * k as f64, i)?;
            let eval_w = |w: f64| -> Result<f64, FieldError> {
                let mut y = point.clone();
                y[i] += h * w;
                psi.eval_state(&y)
            };
            let (w, value) = line_min(eval_w, lo, hi)?;
            let increment = value - psi_current;
            if increment > allowed_axis + 1e-12 * (1.0 + psi_current.abs()) {
                return Err(EulerError::DescentFailed {
                    step: 0,
                    axis: i,
                    t,
                    x: point,
                    best_increment: increment,
                    allowed: allowed_axis,
                });
            }
            point[i] += h * w;
            psi_current = value;
            velocity.push(w);
            increments.push(increment);
        }
        let step = DescentStep {
            t,
            h,
            psi_before,
            psi_after: psi_current,
            allowed: h / k as f64,
            velocity: velocity.clone(),
            axis_increments: increments,
        };
        Ok((velocity, step))
    }
}

/// Golden-section minimization over `[lo, hi]` (40 iterations), with the
/// endpoints and zero also evaluated; exact ties break toward the smallest
/// magnitude, so constant objectives select the least velocity.
fn line_min(
    f: impl Fn(f64) -> Result<f64, FieldError>,
    lo: f64,
    hi: f64,
) -> Result<(f64, f64), FieldError> {
    assert!(hi >= lo);
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut a = lo;
    let mut b = hi;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..40 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let mut candidates = vec![0.5 * (a + b), lo, hi];
    if lo < 0.0 && hi > 0.0 {
        candidates.push(0.0);
    }
    let mut best_w = candidates[0];
    let mut best_v = f(best_w)?;
    for w in candidates.into_iter().skip(1) {
        let v = f(w)?;
        if v < best_v - 1e-15 * (1.0 + best_v.abs())
            || (v <= best_v + 1e-15 * (1.0 + best_v.abs()) && w.abs() < best_w.abs())
        {
            best_w = w;
            best_v = v;
        }
    }
    Ok((best_w, best_v))
}

// ---------------------------------------------------------------------------
// arcs

/// Polygonal arc on the uniform partition (last step clipped to
/// `t_prime`), nodes advanced exactly by `x + (t_{i+1} - t_i) v_i`.
#[derive(Clone, Debug)]
pub struct PolygonalArc {
    pub times: Vec<f64>,
    pub nodes: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub psi_values: Vec<f64>,
    pub k: usize,
    pub eps: f64,
    pub label: String,
    /// Whether the start point satisfied `psi <= 0` (recorded, not
    /// enforced: the descent bound needs only the Hamiltonian hypothesis).
    pub starts_in_sublevel: bool,
}

impl PolygonalArc {
    pub fn dim(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn max_psi(&self) -> f64 {
        self.psi_values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Piecewise-linear interpolant (clamped to the arc).
    pub fn state_at(&self, t: f64) -> Vec<f64> {
        if t <= self.times[0] {
            return self.nodes[0].clone();
        }
        if t >= *self.times.last().unwrap() {
            return self.nodes.last().unwrap().clone();
        }
        let idx = match self.times.binary_search_by(|p| p.total_cmp(&t)) {
            Ok(i) => return self.nodes[i].clone(),
            Err(i) => i - 1,
        };
        let (t0, t1) = (self.times[idx], self.times[idx + 1]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        self.nodes[idx]
            .iter()
            .zip(&self.nodes[idx + 1])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }

    /// CSV with columns `t, x1..xn, v1..vn, psi`; the final node repeats
    /// the last step's velocity.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",x{i}"));
        }
        for i in 1..=n {
            out.push_str(&format!(",v{i}"));
        }
        out.push_str(",psi\n");
        for (i, (t, node)) in self.times.iter().zip(&self.nodes).enumerate() {
            let sel = i.min(self.velocities.len().saturating_sub(1));
            out.push_str(&format!("{t:?}"));
            for v in node {
                out.push_str(&format!(",{v:?}"));
            }
            for v in &self.velocities[sel] {
                out.push_str(&format!(",{v:?}"));
            }
            out.push_str(&format!(",{:?}\n", self.psi_values[i]));
        }
        out
    }
}

/// Builds the polygonal arc from `xbar` on the partition derived in `cfg`,
/// selecting every velocity by coordinate descent. Fails with
/// `DescentFailed` (step index filled in) when no admissible velocity
/// exists, which witnesses a Hamiltonian-hypothesis violation nearby.
pub fn build_arc(
    f: &FeedbackRealization,
    psi: &ScalarField,
    xbar: &[f64],
    cfg: &EulerConfig,
    seed: u64,
) -> Result<(PolygonalArc, DescentCertificate), EulerError> {
    let n = f.dim();
    if xbar.len() != n || psi.state_dim() != n {
        return Err(EulerError::Config("arc dimensions disagree".into()));
    }
    if psi.control_dim() != 0 || psi.uses_time() {
        return Err(EulerError::Config("descent functional must depend on the state only".into()));
    }
    let machine = HullMachine::new(f, cfg, seed)?;
    let c = cfg.c_k();
    if c == 0 {
        return Err(EulerError::Config("empty partition (t_prime = 0)".into()));
    }
    let mut times = Vec::with_capacity(c + 1);
    for i in 0..c {
        times.push(i as f64 * cfg.h_k);
    }
    times.push(cfg.t_prime);
    let psi_start = psi.eval_state(xbar)?;
    let mut nodes = vec![xbar.to_vec()];
    let mut velocities = Vec::with_capacity(c);
    let mut psi_values = vec![psi_start];
    let mut steps = Vec::with_capacity(c);
    for i in 0..c {
        let h = times[i + 1] - times[i];
        let x = nodes[i].clone();
        let (v, mut step) = machine.descent_select(psi, times[i], &x, h, cfg.k).map_err(
            |e| match e {
                EulerError::DescentFailed {
                    axis,
                    t,
                    x,
                    best_increment,
                    allowed,
                    ..
                } => EulerError::DescentFailed { step: i, axis, t, x, best_increment, allowed },
                other => other,
            },
        )?;
        step.t = times[i];
        let next: Vec<f64> = x.iter().zip(&v).map(|(xi, vi)| xi + h * vi).collect();
        let drift = sup_norm(
            &next.iter().zip(xbar).map(|(a, b)| a - b).collect::<Vec<_>>(),
        );
        if drift > cfg.gamma / 2.0 + 1e-12 {
            return Err(EulerError::Config(format!(
                "node {i} left the gamma/2 ball (distance {drift})"
            )));
        }
        psi_values.push(psi.eval_state(&next)?);
        nodes.push(next);
        velocities.push(v);
        steps.push(step);
    }
    let arc = PolygonalArc {
        times,
        nodes,
        velocities,
        psi_values: psi_values.clone(),
        k: cfg.k,
        eps: cfg.eps,
        label: f.label.clone(),
        starts_in_sublevel: psi_start <= 0.0,
    };
    let cert = DescentCertificate {
        steps,
        sup_psi: arc.max_psi(),
        bound: psi_start + (cfg.t_prime + cfg.gamma) / cfg.k as f64,
    };
    Ok((arc, cert))
}

// ---------------------------------------------------------------------------
// refinement

#[derive(Clone, Debug)]
pub struct StageMetrics {
    pub k: usize,
    pub eps: f64,
    pub steps: usize,
    pub h_k: f64,
    pub t_prime: f64,
    pub max_psi: f64,
    pub bound: f64,
}

/// Outcome of a refinement schedule: the built arcs, consecutive
/// sup-distances on the merged time grids, and the final viability margin.
/// A descent failure mid-schedule leaves a partial report with `failure`
/// set; nothing beyond the computed pairs is claimed.
#[derive(Debug)]
pub struct RefinementReport {
    pub stages: Vec<StageMetrics>,
    pub arcs: Vec<PolygonalArc>,
    pub distances: Vec<f64>,
    pub final_margin: f64,
    pub converged: bool,
    pub tol: f64,
    pub failure: Option<String>,
}

impl RefinementReport {
    pub fn render(&self) -> String {
        let mut out = String::from("refinement report\n");
        for (i, s) in self.stages.iter().enumerate() {
            out.push_str(&format!(
                "stage[{i}]: k={} eps={:?} steps={} h_k={:?} t_prime={:?} max_psi={:?} bound={:?}\n",
                s.k, s.eps, s.steps, s.h_k, s.t_prime, s.max_psi, s.bound
            ));
        }
        for (i, d) in self.distances.iter().enumerate() {
            out.push_str(&format!("distance[{i}->{}]: {d:?}\n", i + 1));
        }
        out.push_str(&format!("final margin: {:?}\n", self.final_margin));
        out.push_str(&format!(
            "converged: {} (tol {:?})\n",
            if self.converged { "yes" } else { "no" },
            self.tol
        ));
        if let Some(f) = &self.failure {
            out.push_str(&format!("aborted: {f}\n"));
        }
        out
    }
}

/// Sup-distance of two arcs over the union of their node times (exact for
/// piecewise-linear interpolants).
pub fn arc_distance(a: &PolygonalArc, b: &PolygonalArc) -> f64 {
    let mut grid: Vec<f64> = a.times.iter().chain(&b.times).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let horizon = a.times.last().unwrap().min(*b.times.last().unwrap());
    grid.retain(|t| *t <= horizon);
    grid.iter()
        .map(|&t| {
            let xa = a.state_at(t);
            let xb = b.state_at(t);
            xa.iter().zip(&xb).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Runs `build_arc` per `(k, eps)` schedule entry; `k` must be
/// nondecreasing and `eps` nonincreasing. A `DescentFailed` aborts into a
/// partial report; configuration and evaluation errors propagate.
pub fn refine(
    f: &FeedbackRealization,
    psi: &ScalarField,
    xbar: &[f64],
    schedule: &[(usize, f64)],
    quad_nodes: usize,
    ball_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<RefinementReport, EulerError> {
    if schedule.is_empty() {
        return Err(EulerError::Config("refinement schedule is empty".into()));
    }
    if schedule.windows(2).any(|w| w[1].0 < w[0].0 || w[1].1 > w[0].1) {
        return Err(EulerError::Config(
            "schedule must have nondecreasing k and nonincreasing eps".into(),
        ));
    }
    let mut report = RefinementReport {
        stages: Vec::new(),
        arcs: Vec::new(),
        distances: Vec::new(),
        final_margin: f64::NAN,
        converged: false,
        tol,
        failure: None,
    };
    for &(k, eps) in schedule {
        let cfg = EulerConfig::derive(f, k, eps, quad_nodes, ball_samples, seed)?;
        match build_arc(f, psi, xbar, &cfg, seed) {
            Ok((arc, cert)) => {
                report.stages.push(StageMetrics {
                    k,
                    eps,
                    steps: arc.velocities.len(),
                    h_k: cfg.h_k,
                    t_prime: cfg.t_prime,
                    max_psi: arc.max_psi(),
                    bound: cert.bound,
                });
                if let Some(prev) = report.arcs.last() {
                    report.distances.push(arc_distance(prev, &arc));
                }
                report.arcs.push(arc);
            }
            Err(e @ EulerError::DescentFailed { .. }) => {
                report.failure = Some(e.to_string());
                break;
            }
            Err(other) => return Err(other),
        }
    }
    if let Some(last) = report.arcs.last() {
        report.final_margin = last.max_psi();
    }
    report.converged =
        report.failure.is_none() && report.distances.last().map_or(false, |d| *d < tol);
    Ok(report)
}
