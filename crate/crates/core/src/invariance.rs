//! Invariance verifiers and a trajectory falsifier for product inclusions.
//!
//! Three sampled sufficient-condition checks and one search:
//!
//! * [`check_hamiltonian_condition`] sweeps a window grid and requires the
//!   upper Hamiltonian against the verification function's gradient (or the
//!   constraint set's proximal normal generators) to be nonpositive,
//! * [`check_normal_cone_condition`] samples the constraint boundary and
//!   requires a nonpositive Hamiltonian against every proximal normal
//!   generator, cross-checked against polar containment of the extreme
//!   velocities,
//! * [`check_tangent_condition`] requires every extreme velocity to lie in
//!   the Bouligand tangent cone at sampled boundary points; unless every
//!   axis carries the convex-value flag the verdict is downgraded to
//!   sufficient-only (a FAIL then does not disprove invariance),
//! * [`falsify_invariance`] integrates a schedule of selection policies
//!   (greedy measure ascent first, then coordinate ascents, then seeded
//!   constant and random selections) hunting for a trajectory that leaves
//!   the set.
//!
//! Every check returns a [`Verdict`]: PASS at the stated resolution, FAIL
//! with the max-margin witness (ties broken by lexicographically smaller
//! state), INCONCLUSIVE whenever an evaluation error prevents a definite
//! answer. A check never converts an evaluation failure into a PASS.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::expr::ScalarField;
use crate::geometry::{ClosedSetSpec, GeometryError};
use crate::inclusion::{ProductInclusion, SelectionPolicy, Trajectory};
use crate::sample::{dot, BoxRegion};
use crate::verdict::{Resolution, Verdict, Witness};

/// What invariance is measured against: the 0-sublevel set of a smooth
/// state-only verification function, or a structured closed set.
#[derive(Clone, Debug)]
pub enum InvarianceTarget {
    Sublevel(ScalarField),
    Set(ClosedSetSpec),
}

impl InvarianceTarget {
    pub fn dim(&self) -> usize {
        match self {
            InvarianceTarget::Sublevel(psi) => psi.state_dim(),
            InvarianceTarget::Set(s) => s.dim(),
        }
    }

    /// Exit measure: the verification function's value, or the Euclidean
    /// distance to the set. Nonpositive (up to tolerance) inside the set.
    pub fn measure(&self, x: &[f64]) -> Result<f64, GeometryError> {
        match self {
            InvarianceTarget::Sublevel(psi) => Ok(psi.eval_state(x)?),
            InvarianceTarget::Set(s) => Ok(s.distance(x)?.0),
        }
    }

    /// A state-only field whose steepest descent climbs the exit measure:
    /// the negated verification function, or a negated squared distance
    /// from the start point as a smooth proxy for structured sets.
    fn escape_field(&self, x0: &[f64]) -> ScalarField {
        match self {
            InvarianceTarget::Sublevel(psi) => psi.negate(),
            InvarianceTarget::Set(s) => {
                let n = s.dim();
                let terms: Vec<String> = (1..=n)
                    .map(|i| format!("(x{i} - {c:?})^2", c = x0[i - 1]))
                    .collect();
                let src = format!("0 - ({})", terms.join(" + "));
                ScalarField::parse(&src, n, 0).expect("escape proxy parses")
            }
        }
    }
}

/// Where and how finely an invariance condition is checked. The window is a
/// closed box standing in for the open neighborhood the conditions quantify
/// over; gridded sweeps use `grid` spacing, boundary sweeps draw `samples`
/// points.
#[derive(Clone, Debug)]
pub struct CheckRegion {
    pub window: BoxRegion,
    pub grid: f64,
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
}

impl CheckRegion {
    pub fn new(window: BoxRegion, grid: f64, samples: usize) -> Self {
        assert!(grid > 0.0, "grid spacing must be positive");
        assert!(samples >= 1, "at least one boundary sample");
        CheckRegion { window, grid, samples, tol: 1e-9, seed: 0 }
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Max-margin witness aggregation, order-independent: larger margin wins,
/// ties go to the lexicographically smaller state.
struct WitnessTracker {
    best: Option<Witness>,
}

impl WitnessTracker {
    fn new() -> Self {
        WitnessTracker { best: None }
    }

    fn offer(&mut self, w: Witness) {
        let better = match &self.best {
            None => true,
            Some(b) => w.margin > b.margin || (w.margin == b.margin && lex_less(&w.x, &b.x)),
        };
        if better {
            self.best = Some(w);
        }
    }

    fn take(self) -> Option<Witness> {
        self.best
    }
}

/// Smallest exit measure over the window's boundary faces: positive means
/// the set keeps a documented gap to the window boundary, nonpositive means
/// the window may clip the set.
fn window_margin(target: &InvarianceTarget, region: &CheckRegion) -> Option<f64> {
    let faces = ClosedSetSpec::Box(region.window.clone())
        .boundary_samples(&region.window, region.samples.max(8), region.seed)
        .ok()?;
    let mut margin = f64::INFINITY;
    for p in &faces {
        margin = margin.min(target.measure(p).ok()?);
    }
    if margin.is_finite() {
        Some(margin)
    } else {
        None
    }
}

/// Grid sweep of the Hamiltonian inequality over the window: at every grid
/// point the upper Hamiltonian against the verification function's gradient
/// (or, for structured sets, against every proximal normal generator; points
/// outside the set are skipped and interior points hold trivially) must be
/// nonpositive within tolerance.
pub fn check_hamiltonian_condition(
    inc: &ProductInclusion,
    target: &InvarianceTarget,
    region: &CheckRegion,
) -> Verdict {
    let n = inc.state_dim();
    let tol = region.tol;
    let mut extras = vec![("seed".to_string(), region.seed.to_string())];
    match window_margin(target, region) {
        Some(m) if m > tol => extras.push(("window_margin".into(), format!("{m:?}"))),
        Some(m) => extras.push((
            "window_margin".into(),
            format!("{m:?} (window may clip the set)"),
        )),
        None => extras.push(("window_margin".into(), "unavailable".into())),
    }
    let mut res = Resolution { grid: region.grid, samples: 0, tol, extras };
    if target.dim() != n || region.window.dim() != n {
        return Verdict::inconclusive("target/window dimension mismatch", res);
    }
    if let InvarianceTarget::Sublevel(psi) = target {
        if !psi.is_smooth() {
            return Verdict::inconclusive(
                "verification function is not smooth; supply the set in structured form",
                res,
            );
        }
        if psi.control_dim() != 0 {
            return Verdict::inconclusive("verification function must be state-only", res);
        }
    }

    let points = region.window.grid(region.grid);
    res.samples = points.len();
    let mut tracker = WitnessTracker::new();
    let mut max_h = f64::NEG_INFINITY;
    let mut evaluated = 0usize;
    for x in &points {
        let directions: Vec<Vec<f64>> = match target {
            InvarianceTarget::Sublevel(psi) => match psi.gradient(x) {
                Ok(g) => vec![g],
                Err(e) => {
                    return Verdict::inconclusive(
                        format!("gradient evaluation failed at {x:?}: {e}"),
                        res,
                    )
                }
            },
            InvarianceTarget::Set(s) => {
                match s.contains(x, tol) {
                    Ok(false) => continue,
                    Ok(true) => {}
                    Err(e) => {
                        return Verdict::inconclusive(
                            format!("membership test failed at {x:?}: {e}"),
                            res,
                        )
                    }
                }
                match s.proximal_normal_cone(x, tol) {
                    // interior points carry the zero normal only
                    Ok(cone) => cone.compute_generators().unwrap_or_default(),
                    Err(e) => {
                        return Verdict::inconclusive(
                            format!("proximal normal cone unavailable at {x:?}: {e}"),
                            res,
                        )
                    }
                }
            }
        };
        evaluated += 1;
        for zeta in directions {
            let w = match inc.hamiltonian_argmax(x, &zeta) {
                Ok(w) => w,
                Err(e) => {
                    return Verdict::inconclusive(
                        format!("Hamiltonian evaluation failed at {x:?}: {e}"),
                        res,
                    )
                }
            };
            max_h = max_h.max(w.value);
            if w.value > tol {
                tracker.offer(Witness {
                    t: None,
                    x: x.clone(),
                    direction: zeta,
                    velocity: w.velocity,
                    margin: w.value - tol,
                    note: format!("maximizing control {:?}", w.control),
                });
            }
        }
    }
    if evaluated == 0 {
        return Verdict::inconclusive("no grid point lies in the set", res);
    }
    if max_h.is_finite() {
        res.extras.push(("max_h".into(), format!("{max_h:?}")));
    }
    match tracker.take() {
        Some(w) => Verdict::fail("Hamiltonian positive against a subgradient", vec![w], res),
        None => Verdict::pass("Hamiltonian nonpositive at every grid point", res),
    }
}

/// Per-point polar cross-check value: the largest inner product of any
/// extreme velocity (over the control grid) with any normal generator. In
/// exact arithmetic this equals the largest Hamiltonian over the generators;
/// both routes multiply the same endpoint products and sum them in the same
/// axis order, so agreement is expected bitwise. `None` when the extreme
/// enumeration would be truncated.
fn polar_cross_value(
    inc: &ProductInclusion,
    x: &[f64],
    generators: &[Vec<f64>],
) -> Result<Option<f64>, crate::inclusion::InclusionError> {
    const CAP: usize = 4096;
    let mut worst = f64::NEG_INFINITY;
    for a in inc.control_points() {
        let unions = inc.velocity_set(x, &a)?;
        let total: usize = unions.iter().map(|u| u.endpoints().len()).product();
        if total > CAP {
            return Ok(None);
        }
        for v in inc.extreme_velocities(x, &a, CAP)? {
            for g in generators {
                worst = worst.max(dot(g, &v));
            }
        }
    }
    Ok(Some(worst))
}

/// Boundary sweep of the Hamiltonian inequality against proximal normal
/// generators, with an internal polar cross-check: the Hamiltonian verdict
/// at each sampled point must agree with containment of the extreme
/// velocities in the polar of the generated normal cone. Disagreement is
/// reported as INCONCLUSIVE rather than trusting either route.
pub fn check_normal_cone_condition(
    inc: &ProductInclusion,
    set: &ClosedSetSpec,
    region: &CheckRegion,
) -> Verdict {
    let n = inc.state_dim();
    let tol = region.tol;
    let mut res = Resolution {
        grid: 0.0,
        samples: 0,
        tol,
        extras: vec![("seed".to_string(), region.seed.to_string())],
    };
    if set.dim() != n || region.window.dim() != n {
        return Verdict::inconclusive("set/window dimension mismatch", res);
    }
    let points = match set.boundary_samples(&region.window, region.samples, region.seed) {
        Ok(p) => p,
        Err(e) => return Verdict::inconclusive(format!("boundary sampling failed: {e}"), res),
    };
    if points.is_empty() {
        return Verdict::inconclusive("the set boundary does not meet the window", res);
    }
    res.samples = points.len();
    let mut tracker = WitnessTracker::new();
    let mut max_h = f64::NEG_INFINITY;
    let mut crosscheck = "agreed";
    for x in &points {
        let generators = match set.proximal_normal_cone(x, tol) {
            Ok(cone) => cone.compute_generators().unwrap_or_default(),
            Err(e) => {
                return Verdict::inconclusive(
                    format!("proximal normal cone unavailable at {x:?}: {e}"),
                    res,
                )
            }
        };
        if generators.is_empty() {
            continue;
        }
        let mut point_max = f64::NEG_INFINITY;
        for zeta in &generators {
            let w = match inc.hamiltonian_argmax(x, zeta) {
                Ok(w) => w,
                Err(e) => {
                    return Verdict::inconclusive(
                        format!("Hamiltonian evaluation failed at {x:?}: {e}"),
                        res,
                    )
                }
            };
            point_max = point_max.max(w.value);
            if w.value > tol {
                tracker.offer(Witness {
                    t: None,
                    x: x.clone(),
                    direction: zeta.clone(),
                    velocity: w.velocity,
                    margin: w.value - tol,
                    note: format!("maximizing control {:?}", w.control),
                });
            }
        }
        max_h = max_h.max(point_max);
        match polar_cross_value(inc, x, &generators) {
            Ok(Some(polar_max)) => {
                if (point_max <= tol) != (polar_max <= tol) {
                    return Verdict::inconclusive(
                        format!(
                            "polar cross-check disagreed at {x:?}: hamiltonian {point_max:?} \
                             vs polar violation {polar_max:?}"
                        ),
                        res,
                    );
                }
            }
            Ok(None) => crosscheck = "skipped (extreme velocity cap)",
            Err(e) => {
                return Verdict::inconclusive(
                    format!("velocity enumeration failed at {x:?}: {e}"),
                    res,
                )
            }
        }
    }
    if max_h.is_finite() {
        res.extras.push(("max_h".into(), format!("{max_h:?}")));
    }
    res.extras.push(("polar_crosscheck".into(), crosscheck.into()));
    match tracker.take() {
        Some(w) => Verdict::fail(
            "Hamiltonian positive against a proximal normal generator",
            vec![w],
            res,
        ),
        None => Verdict::pass(
            "Hamiltonian nonpositive against every proximal normal generator",
            res,
        ),
    }
}

/// Boundary sweep of tangential containment: every extreme velocity over the
/// control grid must lie in the Bouligand tangent cone at sampled boundary
/// points (interior points are tangent-trivial and skipped by sampling the
/// boundary only). When any axis lacks the convex-value flag the condition
/// is sufficient-only: a FAIL then does not disprove invariance, and the
/// verdict says so.
pub fn check_tangent_condition(
    inc: &ProductInclusion,
    set: &ClosedSetSpec,
    region: &CheckRegion,
) -> Verdict {
    let n = inc.state_dim();
    let tol = region.tol;
    let iff_grade = inc.all_h4();
    let mode = if iff_grade { "iff" } else { "sufficient-only" };
    let mut res = Resolution {
        grid: 0.0,
        samples: 0,
        tol,
        extras: vec![
            ("seed".to_string(), region.seed.to_string()),
            ("mode".to_string(), mode.to_string()),
        ],
    };
    if set.dim() != n || region.window.dim() != n {
        return Verdict::inconclusive("set/window dimension mismatch", res);
    }
    let points = match set.boundary_samples(&region.window, region.samples, region.seed) {
        Ok(p) => p,
        Err(e) => return Verdict::inconclusive(format!("boundary sampling failed: {e}"), res),
    };
    if points.is_empty() {
        return Verdict::inconclusive("the set boundary does not meet the window", res);
    }
    res.samples = points.len();
    let mut tracker = WitnessTracker::new();
    for x in &points {
        let normals = match set.proximal_normal_cone(x, tol) {
            Ok(cone) => cone.compute_generators().unwrap_or_default(),
            Err(e) => {
                return Verdict::inconclusive(
                    format!("proximal normal cone unavailable at {x:?}: {e}"),
                    res,
                )
            }
        };
        for a in inc.control_points() {
            let extremes = match inc.extreme_velocities(x, &a, 4096) {
                Ok(v) => v,
                Err(e) => {
                    return Verdict::inconclusive(
                        format!("velocity enumeration failed at {x:?}: {e}"),
                        res,
                    )
                }
            };
            for v in extremes {
                match set.bouligand_contains(x, &v, tol) {
                    Ok(true) => {}
                    Ok(false) => {
                        let margin = normals
                            .iter()
                            .map(|g| dot(g, &v))
                            .fold(crate::sample::sup_norm(&v), f64::max);
                        tracker.offer(Witness {
                            t: None,
                            x: x.clone(),
                            direction: normals.first().cloned().unwrap_or_default(),
                            velocity: v.clone(),
                            margin,
                            note: format!("control {a:?}"),
                        });
                    }
                    Err(e) => {
                        return Verdict::inconclusive(
                            format!("tangent test failed at {x:?}: {e}"),
                            res,
                        )
                    }
                }
            }
        }
    }
    match tracker.take() {
        Some(w) => {
            let reason = if iff_grade {
                "an extreme velocity leaves the tangent cone".to_string()
            } else {
                "an extreme velocity leaves the tangent cone (sufficient-only: \
                 a FAIL without the convex-value flags does not disprove invariance)"
                    .to_string()
            };
            Verdict::fail(reason, vec![w], res)
        }
        None => {
            let reason = if iff_grade {
                "extreme velocities tangent at all sampled boundary points"
            } else {
                "extreme velocities tangent at all sampled boundary points \
                 (sufficient-only: convex-value flags absent)"
            };
            Verdict::pass(reason, res)
        }
    }
}

/// One escaping trajectory with its discovery context.
#[derive(Clone, Debug)]
pub struct EscapeRecord {
    pub trajectory: Trajectory,
    /// First node time whose exit measure exceeds the threshold.
    pub t_exit: f64,
    /// Exit measure at that node.
    pub margin: f64,
    /// Human-readable description of the winning policy.
    pub policy: String,
    /// 0-based trial index that found the escape.
    pub trial: usize,
    /// Whether re-integration at half and quarter step also escapes.
    pub confirmed: bool,
}

/// Outcome of a falsification run: either an escape or the trial statistics
/// showing how hard the search tried.
#[derive(Clone, Debug)]
pub struct FalsifyReport {
    pub escape: Option<EscapeRecord>,
    /// Trials actually run (stops early on the first escape).
    pub trials: usize,
    /// Trials abandoned because integration or measure evaluation failed.
    pub skipped: usize,
    /// Largest exit measure seen at any node of any completed trial.
    pub max_node_measure: f64,
    /// Largest exit measure at the final node across completed trials.
    pub max_final_measure: f64,
    pub exit_tol: f64,
    /// First integration/evaluation failure, when any trial was skipped.
    pub first_error: Option<String>,
}

impl FalsifyReport {
    pub fn escaped(&self) -> bool {
        self.escape.is_some()
    }

    /// Stable plain-text rendering.
    pub fn render(&self) -> String {
        let mut out = String::new();
        match &self.escape {
            Some(e) => {
                out.push_str("escape: found\n");
                out.push_str(&format!("  trial: {}\n", e.trial));
                out.push_str(&format!("  policy: {}\n", e.policy));
                out.push_str(&format!("  t_exit: {:?}\n", e.t_exit));
                out.push_str(&format!("  margin: {:?}\n", e.margin));
                out.push_str(&format!("  confirmed: {}\n", e.confirmed));
            }
            None => out.push_str("escape: none\n"),
        }
        out.push_str(&format!("trials: {}\n", self.trials));
        out.push_str(&format!("skipped: {}\n", self.skipped));
        out.push_str(&format!("max_node_measure: {:?}\n", self.max_node_measure));
        out.push_str(&format!("max_final_measure: {:?}\n", self.max_final_measure));
        out.push_str(&format!("exit_tol: {:?}\n", self.exit_tol));
        if let Some(e) = &self.first_error {
            out.push_str(&format!("first_error: {e}\n"));
        }
        out
    }
}

/// The trial schedule: greedy ascent of the exit measure, coordinate ascent
/// probes along every signed axis, the rest selection, then seeded constant
/// targets with a random policy every fourth trial.
fn trial_policy(
    trial: usize,
    inc: &ProductInclusion,
    target: &InvarianceTarget,
    x0: &[f64],
    seed: u64,
) -> (String, SelectionPolicy) {
    let n = inc.state_dim();
    if trial == 0 {
        return (
            "greedy measure ascent".into(),
            SelectionPolicy::Adversarial { field: target.escape_field(x0) },
        );
    }
    if trial <= 2 * n {
        let axis = (trial - 1) / 2;
        let up = (trial - 1) % 2 == 0;
        let expr = if up { format!("0 - x{}", axis + 1) } else { format!("x{}", axis + 1) };
        let field = ScalarField::parse(&expr, n, 0).expect("probe field parses");
        let sign = if up { '+' } else { '-' };
        return (
            format!("coordinate ascent {}x{}", sign, axis + 1),
            SelectionPolicy::Adversarial { field },
        );
    }
    if trial == 2 * n + 1 {
        let control = inc.control_points().into_iter().next().expect("control grid nonempty");
        return (
            "rest selection".into(),
            SelectionPolicy::Constant { control, targets: vec![0.0; n] },
        );
    }
    if trial % 4 == 0 {
        let s = seed.wrapping_add(trial as u64);
        return (format!("random selections (seed {s})"), SelectionPolicy::Random { seed: s });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(
        seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(trial as u64 + 1),
    );
    let grid = inc.control_points();
    let control = grid[rng.gen_range(0..grid.len())].clone();
    let targets: Vec<f64> = inc
        .disturbances()
        .iter()
        .map(|d| {
            let b = d.bound() + 0.5;
            rng.gen_range(-b..=b)
        })
        .collect();
    (
        format!("constant targets {targets:?} control {control:?}"),
        SelectionPolicy::Constant { control, targets },
    )
}

fn first_crossing(
    traj: &Trajectory,
    target: &InvarianceTarget,
    exit_tol: f64,
) -> Result<Option<(f64, f64)>, GeometryError> {
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let m = target.measure(x)?;
        if m > exit_tol {
            return Ok(Some((*t, m)));
        }
    }
    Ok(None)
}

/// Searches for a trajectory of the inclusion that leaves the target set
/// from `x0` within the horizon: `trials` seeded selection policies are
/// integrated in turn and the first trajectory whose exit measure crosses
/// `exit_tol` is returned (re-integrated at half and quarter step for
/// confirmation). Failed integrations are counted, never fatal: the report
/// always comes back with statistics.
pub fn falsify_invariance(
    inc: &ProductInclusion,
    target: &InvarianceTarget,
    x0: &[f64],
    trials: usize,
    horizon: f64,
    step: f64,
    exit_tol: f64,
    seed: u64,
) -> FalsifyReport {
    let n = inc.state_dim();
    assert_eq!(x0.len(), n, "start point dimension mismatch");
    assert_eq!(target.dim(), n, "target dimension mismatch");
    assert!(horizon > 0.0 && step > 0.0 && exit_tol >= 0.0);
    let mut report = FalsifyReport {
        escape: None,
        trials: 0,
        skipped: 0,
        max_node_measure: f64::NEG_INFINITY,
        max_final_measure: f64::NEG_INFINITY,
        exit_tol,
        first_error: None,
    };
    match target.measure(x0) {
        Ok(m) if m > exit_tol => {
            report.first_error =
                Some(format!("start point outside the set: measure {m:?}"));
            return report;
        }
        Ok(_) => {}
        Err(e) => {
            report.first_error = Some(format!("measure evaluation failed at start: {e}"));
            return report;
        }
    }
    if let InvarianceTarget::Sublevel(psi) = target {
        if psi.control_dim() != 0 {
            report.first_error = Some("verification function must be state-only".into());
            return report;
        }
    }

    for trial in 0..trials {
        let (desc, policy) = trial_policy(trial, inc, target, x0, seed);
        report.trials = trial + 1;
        let traj = match inc.integrate(&policy, x0, horizon, step) {
            Ok(t) => t,
            Err(e) => {
                report.skipped += 1;
                report.first_error.get_or_insert(format!("trial {trial} ({desc}): {e}"));
                continue;
            }
        };
        let crossing = match first_crossing(&traj, target, exit_tol) {
            Ok(c) => c,
            Err(e) => {
                report.skipped += 1;
                report.first_error.get_or_insert(format!("trial {trial} ({desc}): {e}"));
                continue;
            }
        };
        // the crossing scan succeeded, so per-node measures are available
        let mut node_max = f64::NEG_INFINITY;
        for x in &traj.states {
            node_max = node_max.max(target.measure(x).unwrap_or(f64::NEG_INFINITY));
        }
        report.max_node_measure = report.max_node_measure.max(node_max);
        let final_measure =
            target.measure(traj.final_state()).unwrap_or(f64::NEG_INFINITY);
        report.max_final_measure = report.max_final_measure.max(final_measure);
        if let Some((t_exit, margin)) = crossing {
            let confirmed = [2.0, 4.0].iter().all(|div| {
                inc.integrate(&policy, x0, horizon, step / div)
                    .ok()
                    .and_then(|t| first_crossing(&t, target, exit_tol).ok().flatten())
                    .is_some()
            });
            report.escape = Some(EscapeRecord {
                trajectory: traj,
                t_exit,
                margin,
                policy: desc,
                trial,
                confirmed,
            });
            return report;
        }
    }
    report
}
