//! Explicit Euler integration of product inclusions under a selection
//! policy. Disturbance selections are projected into the region active at
//! the current node; steps that would cross a region boundary are halved
//! (down to h/64) and finally bisected onto the boundary itself, so no
//! selection is ever drawn from the wrong branch of a discontinuity.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{InclusionError, ProductInclusion};
use crate::expr::ScalarField;
use crate::interval::IntervalUnion;

/// How disturbance values and controls are chosen along an arc.
#[derive(Clone, Debug)]
pub enum SelectionPolicy {
    /// Fixed control, fixed per-axis disturbance targets (projected onto
    /// the active region value at every step).
    Constant { control: Vec<f64>, targets: Vec<f64> },
    /// Piecewise constant in time: segment `i` applies on
    /// `[times[i], times[i+1])`, the last one to the end.
    PiecewiseConstant { times: Vec<f64>, controls: Vec<Vec<f64>>, targets: Vec<Vec<f64>> },
    /// Steepest descent of a scalar field: at each node pick the control
    /// and disturbances minimizing `<v, grad field>` (ties keep the
    /// earliest control and the smallest-magnitude endpoint).
    Adversarial { field: ScalarField },
    /// Seeded uniform choice of a grid control and per-axis values.
    Random { seed: u64 },
}

/// One Euler arc with every selection recorded. `times` and `states` have
/// one more entry than the per-step `controls`/`deltas`/`velocities`;
/// step `i` runs on `[times[i], times[i+1])`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    pub deltas: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub state_dim: usize,
    pub control_dim: usize,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.controls.len()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().unwrap()
    }

    /// Piecewise-linear interpolant at time `t` (clamped to the arc).
    pub fn state_at(&self, t: f64) -> Vec<f64> {
        if t <= self.times[0] {
            return self.states[0].clone();
        }
        if t >= self.final_time() {
            return self.final_state().to_vec();
        }
        let idx = match self.times.binary_search_by(|p| p.total_cmp(&t)) {
            Ok(i) => return self.states[i].clone(),
            Err(i) => i - 1,
        };
        let (t0, t1) = (self.times[idx], self.times[idx + 1]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        self.states[idx]
            .iter()
            .zip(&self.states[idx + 1])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }

    /// Largest value of `f` over all nodes at or after time `from`.
    pub fn max_over_nodes(&self, from: f64, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.times
            .iter()
            .zip(&self.states)
            .filter(|(t, _)| **t >= from - 1e-12)
            .map(|(_, x)| f(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest node-wise deviation from a reference path.
    pub fn max_deviation(&self, reference: impl Fn(f64) -> Vec<f64>) -> f64 {
        self.times
            .iter()
            .zip(&self.states)
            .map(|(t, x)| {
                let r = reference(*t);
                x.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// CSV with columns `t, x1..xn, a1..am, delta1..deltan`. Selection
    /// columns on a row describe the step leaving that node; the final
    /// node repeats the last step's selection so the table is rectangular.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.state_dim {
            out.push_str(&format!(",x{i}"));
        }
        for j in 1..=self.control_dim {
            out.push_str(&format!(",a{j}"));
        }
        for i in 1..=self.state_dim {
            out.push_str(&format!(",delta{i}"));
        }
        out.push('\n');
        for (i, (t, x)) in self.times.iter().zip(&self.states).enumerate() {
            let sel = i.min(self.controls.len().saturating_sub(1));
            out.push_str(&format!("{t:?}"));
            for v in x {
                out.push_str(&format!(",{v:?}"));
            }
            if !self.controls.is_empty() {
                for a in &self.controls[sel] {
                    out.push_str(&format!(",{a:?}"));
                }
                for d in &self.deltas[sel] {
                    out.push_str(&format!(",{d:?}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

struct PolicyEngine<'a> {
    policy: &'a SelectionPolicy,
    rng: Option<ChaCha8Rng>,
    grid: Vec<Vec<f64>>,
}

impl<'a> PolicyEngine<'a> {
    fn new(policy: &'a SelectionPolicy, inc: &ProductInclusion) -> Result<Self, InclusionError> {
        let m = inc.control_dim();
        let n = inc.state_dim();
        match policy {
            SelectionPolicy::Constant { control, targets } => {
                if control.len() != m || targets.len() != n {
                    return Err(InclusionError::Dimension(
                        "constant policy control/target dimension mismatch".into(),
                    ));
                }
            }
            SelectionPolicy::PiecewiseConstant { times, controls, targets } => {
                if times.is_empty()
                    || times.len() != controls.len()
                    || times.len() != targets.len()
                {
                    return Err(InclusionError::Dimension(
                        "piecewise policy table lengths differ".into(),
                    ));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(InclusionError::Dimension(
                        "piecewise policy times must increase".into(),
                    ));
                }
                if controls.iter().any(|c| c.len() != m) || targets.iter().any(|d| d.len() != n) {
                    return Err(InclusionError::Dimension(
                        "piecewise policy entry dimension mismatch".into(),
                    ));
                }
            }
            SelectionPolicy::Adversarial { field } => {
                if field.state_dim() != n || field.control_dim() != 0 {
                    return Err(InclusionError::Dimension(
                        "adversarial field must be a state-only scalar field".into(),
                    ));
                }
            }
            SelectionPolicy::Random { .. } => {}
        }
        let rng = match policy {
            SelectionPolicy::Random { seed } => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        };
        Ok(PolicyEngine { policy, rng, grid: inc.control_points() })
    }

    /// Control and per-axis disturbance values for the step at `(t, x)`.
    /// Every delta returned lies in the active region value exactly.
    fn select(
        &mut self,
        inc: &ProductInclusion,
        t: f64,
        x: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>), InclusionError> {
        let n = inc.state_dim();
        match self.policy {
            SelectionPolicy::Constant { control, targets } => {
                let deltas =
                    (0..n).map(|i| inc.axis_value(i, x).project(targets[i])).collect();
                Ok((control.clone(), deltas))
            }
            SelectionPolicy::PiecewiseConstant { times, controls, targets } => {
                let seg = match times.binary_search_by(|p| p.total_cmp(&t)) {
                    Ok(i) => i,
                    Err(0) => 0,
                    Err(i) => i - 1,
                };
                let deltas =
                    (0..n).map(|i| inc.axis_value(i, x).project(targets[seg][i])).collect();
                Ok((controls[seg].clone(), deltas))
            }
            SelectionPolicy::Adversarial { field } => {
                let grad = field.gradient(x)?;
                let descent: Vec<f64> = grad.iter().map(|g| -g).collect();
                let w = inc.hamiltonian_argmax(x, &descent)?;
                Ok((w.control, w.deltas))
            }
            SelectionPolicy::Random { .. } => {
                let rng = self.rng.as_mut().expect("random policy carries an rng");
                let a = self.grid[rng.gen_range(0..self.grid.len())].clone();
                let deltas = (0..n)
                    .map(|i| sample_union(inc.axis_value(i, x), rng))
                    .collect();
                Ok((a, deltas))
            }
        }
    }
}

fn sample_union(u: &IntervalUnion, rng: &mut ChaCha8Rng) -> f64 {
    let parts = u.parts();
    let part = &parts[rng.gen_range(0..parts.len())];
    if part.hi > part.lo {
        rng.gen_range(part.lo..=part.hi)
    } else {
        part.lo
    }
}

const SNAP_TOL: f64 = 1e-9;
const MAX_HALVINGS: u32 = 6;

impl ProductInclusion {
    /// Explicit Euler integration from `x0` to horizon `tmax` with base
    /// step `h`. Selections are drawn once per accepted step from the
    /// region containing the current node; a step that would land in a
    /// different region signature is retried at half length down to
    /// `h/64`, then bisected so the node lands (snapped) on the boundary.
    ///
    /// A node sitting exactly on a region boundary whose selection exits
    /// immediately is handled by the almost-everywhere rule: the state
    /// spends the whole step inside the region being entered, so the
    /// selection is re-projected onto that region's value. When adjacent
    /// regions keep flipping the re-projection (sliding mode) the state
    /// rests on the boundary whenever the zero velocity is admissible
    /// there; when the entered value cannot be represented at the node the
    /// step advances by the `h/64` floor with the original selection.
    /// Leaving the domain raises `DomainExit`.
    pub fn integrate(
        &self,
        policy: &SelectionPolicy,
        x0: &[f64],
        tmax: f64,
        h: f64,
    ) -> Result<Trajectory, InclusionError> {
        let n = self.state_dim();
        if x0.len() != n {
            return Err(InclusionError::Dimension("initial state dimension mismatch".into()));
        }
        if !(h > 0.0) || !(tmax > 0.0) {
            return Err(InclusionError::Dimension("horizon and step must be positive".into()));
        }
        if !self.in_domain(x0) {
            return Err(InclusionError::DomainExit { t: 0.0, x: x0.to_vec() });
        }
        let mut engine = PolicyEngine::new(policy, self)?;
        let mut x = x0.to_vec();
        self.snap_region_boundaries(&mut x, SNAP_TOL);
        let mut t = 0.0;
        let mut traj = Trajectory {
            times: vec![t],
            states: vec![x.clone()],
            controls: Vec::new(),
            deltas: Vec::new(),
            velocities: Vec::new(),
            state_dim: n,
            control_dim: self.control_dim(),
        };
        let close = 1e-12 * tmax.max(1.0);
        let budget = 256 * (tmax / h).ceil() as usize + 64;
        while tmax - t > close {
            if traj.controls.len() > budget {
                return Err(InclusionError::Budget(format!(
                    "step budget exhausted near t = {t}"
                )));
            }
            let (a, mut deltas) = engine.select(self, t, &x)?;
            let mut v = Vec::with_capacity(n);
            for i in 0..n {
                let g = self.factors()[i].eval(&x, &a, 0.0)?;
                v.push(g * deltas[i]);
            }
            let full = (tmax - t).min(h);
            let sig0 = self.region_signature(&x);
            let landing = |vel: &[f64], dt: f64| -> Vec<f64> {
                let mut y: Vec<f64> =
                    x.iter().zip(vel).map(|(xi, vi)| xi + dt * vi).collect();
                self.snap_region_boundaries(&mut y, SNAP_TOL);
                y
            };
            let raw_sig = |vel: &[f64], dt: f64| -> Vec<usize> {
                let y: Vec<f64> =
                    x.iter().zip(vel).map(|(xi, vi)| xi + dt * vi).collect();
                self.region_signature(&y)
            };
            let rest_admissible =
                |inc: &ProductInclusion| (0..n).all(|i| inc.axis_value(i, &x).contains_zero());
            let mut sig_want = sig0.clone();
            // raw-motion prefix already known to lie in sig_want
            let mut inside_dt = 0.0f64;
            let mut found: Option<(f64, Vec<f64>)> = None;
            for _attempt in 0..4 {
                let mut sub = full;
                let mut accepted: Option<(f64, Vec<f64>)> = None;
                for halving in 0..=MAX_HALVINGS {
                    let y = landing(&v, sub);
                    if self.region_signature(&y) == sig_want {
                        accepted = Some((sub, y));
                        break;
                    }
                    if halving < MAX_HALVINGS {
                        sub *= 0.5;
                    }
                }
                if accepted.is_some() {
                    found = accepted;
                    break;
                }
                // still crossing at h/64: bisect the raw motion
                let mut lo = inside_dt;
                let mut hi = sub;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if raw_sig(&v, mid) == sig_want {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                if lo * crate::sample::sup_norm(&v) >= 1e-12 {
                    // positive same-region prefix: land on the boundary
                    found = Some((hi, landing(&v, hi)));
                    break;
                }
                // the node sits on a region boundary and the selection
                // exits immediately: the state spends the whole substep in
                // the entered region, so the selection must come from there
                let probe_dt =
                    hi.max(SNAP_TOL * (1.0 + crate::sample::sup_norm(&x)))
                        .min(full);
                let probe: Vec<f64> =
                    x.iter().zip(&v).map(|(xi, vi)| xi + probe_dt * vi).collect();
                let sig_probe = self.region_signature(&probe);
                let re_deltas: Vec<f64> =
                    (0..n).map(|i| self.axis_value(i, &probe).project(deltas[i])).collect();
                if re_deltas == deltas {
                    // the entered region admits the same selection: carry on
                    // inside it
                    sig_want = sig_probe;
                    inside_dt = probe_dt;
                    continue;
                }
                // recorded selections must stay valid at the node itself
                let node_ok =
                    (0..n).all(|i| self.axis_value(i, &x).contains(re_deltas[i], 0.0));
                if node_ok {
                    let mut v2 = Vec::with_capacity(n);
                    for i in 0..n {
                        let g = self.factors()[i].eval(&x, &a, 0.0)?;
                        v2.push(g * re_deltas[i]);
                    }
                    deltas = re_deltas;
                    v = v2;
                    sig_want = sig0.clone();
                    inside_dt = 0.0;
                    continue;
                }
                if rest_admissible(self) {
                    // sliding: the boundary value cannot follow the entered
                    // region, rest on the boundary
                    deltas = vec![0.0; n];
                    v = vec![0.0; n];
                    found = Some((full, x.clone()));
                } else {
                    // no admissible rest: advance the contract floor with
                    // the node's own selection
                    found = Some((sub, landing(&v, sub)));
                }
                break;
            }
            let (dt, y) = match found {
                Some(hit) => hit,
                None => {
                    // re-projections kept flipping between adjacent regions
                    if rest_admissible(self) {
                        deltas = vec![0.0; n];
                        v = vec![0.0; n];
                        (full, x.clone())
                    } else {
                        return Err(InclusionError::Budget(format!(
                            "sliding selection did not stabilize at t = {t}, x = {x:?}"
                        )));
                    }
                }
            };
            t += dt;
            x = y;
            if !self.in_domain(&x) {
                return Err(InclusionError::DomainExit { t, x });
            }
            traj.times.push(t);
            traj.states.push(x.clone());
            traj.controls.push(a);
            traj.deltas.push(deltas);
            traj.velocities.push(v);
        }
        Ok(traj)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::tests::{sign_fixture, zero_one_fixture};
    use super::super::{ControlSetSpec, DisturbanceMap, DisturbanceRegion, RegionPred};
    use crate::sample::BoxRegion;

    fn descent_policy() -> SelectionPolicy {
        SelectionPolicy::Adversarial { field: ScalarField::parse("x1^2", 1, 0).unwrap() }
    }

    #[test]
    fn sign_dynamics_reaches_zero_and_stays() {
        let inc = sign_fixture();
        let h = 0.01;
        let traj = inc.integrate(&descent_policy(), &[1.0], 2.0, h).unwrap();
        assert!((traj.final_time() - 2.0).abs() < 1e-9);
        let dev = traj.max_deviation(|t| vec![(1.0 - t).max(0.0)]);
        assert!(dev <= 2.0 * h, "deviation {dev}");
        // after the hitting time the state is exactly zero
        let tail = traj.max_over_nodes(1.0 + 2.0 * h, |x| x[0].abs());
        assert_eq!(tail, 0.0);
    }

    #[test]
    fn sign_dynamics_with_incommensurate_step_snaps_onto_zero() {
        let inc = sign_fixture();
        // 0.3 / 0.07 is not an integer: the arc must cross the boundary
        let traj = inc.integrate(&descent_policy(), &[0.3], 1.0, 0.07).unwrap();
        let tail = traj.max_over_nodes(0.5, |x| x[0].abs());
        assert_eq!(tail, 0.0);
        assert!(traj.states.iter().all(|x| x[0] >= 0.0));
    }

    #[test]
    fn boundary_pushes_reproject_onto_the_entered_region() {
        // at x = 0 the value is [-1, 1], so a +1 target is admissible at
        // the node, but the region entered by moving up only offers
        // {-1, 0}: the almost-everywhere rule re-projects the selection to
        // 0 and the state never leaves the origin
        let inc = sign_fixture();
        let policy = SelectionPolicy::Constant { control: vec![], targets: vec![1.0] };
        let traj = inc.integrate(&policy, &[0.0], 1.0, 0.01).unwrap();
        assert!(traj.states.iter().all(|x| x[0] == 0.0));
        assert!(traj.velocities.iter().all(|v| v[0] == 0.0));
        assert!(traj.deltas.iter().all(|d| d[0] == 0.0));
    }

    fn pure_sign_fixture() -> ProductInclusion {
        use crate::interval::ConeTag;
        let map = DisturbanceMap::new(
            0,
            vec![
                DisturbanceRegion {
                    pred: RegionPred::Halfspace { normal: vec![-1.0], offset: 0.0, strict: true },
                    value: IntervalUnion::point(-1.0),
                    tag: ConeTag::Nonpos,
                },
                DisturbanceRegion {
                    pred: RegionPred::Halfspace { normal: vec![1.0], offset: 0.0, strict: true },
                    value: IntervalUnion::point(1.0),
                    tag: ConeTag::Nonneg,
                },
            ],
            IntervalUnion::interval(-1.0, 1.0),
            false,
            false,
        )
        .unwrap();
        ProductInclusion::new(
            vec![ScalarField::constant(1.0, 1, 0)],
            vec![map],
            ControlSetSpec::trivial(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn pure_sign_dynamics_slides_at_the_origin() {
        // both neighboring regions force motion back across the boundary:
        // the re-projection flips sign forever, which is the sliding mode;
        // zero is admissible at the node, so the state rests there exactly
        let inc = pure_sign_fixture();
        for target in [1.0, -1.0] {
            let policy = SelectionPolicy::Constant { control: vec![], targets: vec![target] };
            let traj = inc.integrate(&policy, &[0.0], 0.5, 0.01).unwrap();
            assert!(traj.states.iter().all(|x| x[0] == 0.0), "target {target}");
        }
        // descending from above: reaches the origin and slides from then on
        let policy = SelectionPolicy::Constant { control: vec![], targets: vec![-1.0] };
        let traj = inc.integrate(&policy, &[0.3], 1.0, 0.07).unwrap();
        assert_eq!(traj.max_over_nodes(0.5, |x| x[0].abs()), 0.0);
        assert!(traj.states.iter().all(|x| x[0] >= 0.0));
    }

    #[test]
    fn inadmissible_boundary_value_advances_by_the_floor_substep() {
        use crate::interval::ConeTag;
        // the value jumps from {1} to {10} below zero and never contains
        // the rest velocity, so a downward push from the boundary advances
        // by the h/64 floor with the node's own selection, after which the
        // entered region takes over
        let map = DisturbanceMap::new(
            0,
            vec![DisturbanceRegion {
                pred: RegionPred::Halfspace { normal: vec![1.0], offset: 0.0, strict: true },
                value: IntervalUnion::point(10.0),
                tag: ConeTag::Nonneg,
            }],
            IntervalUnion::point(1.0),
            false,
            false,
        )
        .unwrap();
        let inc = ProductInclusion::new(
            vec![ScalarField::constant(-1.0, 1, 0)],
            vec![map],
            ControlSetSpec::trivial(),
            None,
        )
        .unwrap();
        let policy = SelectionPolicy::Constant { control: vec![], targets: vec![1.0] };
        let h = 0.064;
        let traj = inc.integrate(&policy, &[0.0], 0.2, h).unwrap();
        assert_eq!(traj.times[1], h / 64.0);
        assert_eq!(traj.deltas[0], vec![1.0]);
        assert_eq!(traj.velocities[0], vec![-1.0]);
        assert_eq!(traj.deltas[1], vec![10.0]);
        assert_eq!(traj.velocities[1], vec![-10.0]);
        assert!(traj.final_state()[0] < -0.1);
    }

    #[test]
    fn entered_region_admitting_the_selection_passes_through() {
        use crate::interval::ConeTag;
        // the region below zero admits the same delta, so the step carries
        // on inside it with no artificial sticking at the boundary
        let map = DisturbanceMap::new(
            0,
            vec![DisturbanceRegion {
                pred: RegionPred::Halfspace { normal: vec![-1.0], offset: 0.0, strict: true },
                value: IntervalUnion::interval(-2.0, 2.0),
                tag: ConeTag::Full,
            }],
            IntervalUnion::interval(-1.0, 1.0),
            false,
            false,
        )
        .unwrap();
        let inc = ProductInclusion::new(
            vec![ScalarField::constant(1.0, 1, 0)],
            vec![map],
            ControlSetSpec::trivial(),
            None,
        )
        .unwrap();
        let policy = SelectionPolicy::Constant { control: vec![], targets: vec![-1.0] };
        let traj = inc.integrate(&policy, &[0.0], 0.3, 0.1).unwrap();
        assert_eq!(traj.steps(), 3);
        assert!((traj.final_state()[0] + 0.3).abs() <= 1e-12);
        assert!(traj.deltas.iter().all(|d| d[0] == -1.0));
    }

    #[test]
    fn zero_policy_keeps_the_state_constant() {
        let inc = sign_fixture();
        let policy = SelectionPolicy::Constant { control: vec![], targets: vec![0.0] };
        let traj = inc.integrate(&policy, &[0.4], 1.0, 0.1).unwrap();
        assert!(traj.states.iter().all(|x| x[0] == 0.4));
        assert_eq!(traj.steps(), 10);
    }

    #[test]
    fn unit_velocity_gives_linear_growth() {
        let inc = zero_one_fixture();
        let policy = SelectionPolicy::Constant { control: vec![], targets: vec![1.0] };
        let traj = inc.integrate(&policy, &[0.0], 1.0, 0.125).unwrap();
        let dev = traj.max_deviation(|t| vec![t]);
        assert!(dev <= 1e-12, "deviation {dev}");
    }

    #[test]
    fn selections_always_lie_in_the_active_value() {
        let inc = sign_fixture();
        let policy = SelectionPolicy::Random { seed: 9 };
        let traj = inc.integrate(&policy, &[0.2], 1.5, 0.05).unwrap();
        for (node, delta) in traj.states.iter().zip(&traj.deltas) {
            let v = inc.axis_value(0, node);
            assert!(v.contains(delta[0], 0.0), "delta {delta:?} outside {v:?} at {node:?}");
        }
    }

    #[test]
    fn random_policy_is_reproducible() {
        let inc = sign_fixture();
        let policy = SelectionPolicy::Random { seed: 42 };
        let a = inc.integrate(&policy, &[0.5], 1.0, 0.1).unwrap();
        let b = inc.integrate(&policy, &[0.5], 1.0, 0.1).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn piecewise_policy_switches_targets() {
        let inc = zero_one_fixture();
        let policy = SelectionPolicy::PiecewiseConstant {
            times: vec![0.0, 0.5],
            controls: vec![vec![], vec![]],
            targets: vec![vec![1.0], vec![0.0]],
        };
        let traj = inc.integrate(&policy, &[0.0], 1.0, 0.25).unwrap();
        let expected = |t: f64| vec![t.min(0.5)];
        assert!(traj.max_deviation(expected) <= 1e-12);
    }

    #[test]
    fn domain_exit_reports_time_and_state() {
        let inc = super::super::ProductInclusion::new(
            vec![ScalarField::constant(1.0, 1, 0)],
            vec![DisturbanceMap::constant(IntervalUnion::point(1.0))],
            ControlSetSpec::trivial(),
            Some(BoxRegion::new(vec![-1.0], vec![0.5])),
        )
        .unwrap();
        let policy = SelectionPolicy::Constant { control: vec![], targets: vec![1.0] };
        let err = inc.integrate(&policy, &[0.0], 2.0, 0.2).unwrap_err();
        match err {
            InclusionError::DomainExit { t, x } => {
                assert!((t - 0.6).abs() < 1e-12);
                assert!(x[0] > 0.5);
            }
            other => panic!("expected DomainExit, got {other:?}"),
        }
    }

    #[test]
    fn csv_shape_matches_columns() {
        let inc = sign_fixture();
        let policy = SelectionPolicy::Constant { control: vec![], targets: vec![0.0] };
        let traj = inc.integrate(&policy, &[0.4], 0.3, 0.1).unwrap();
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,x1,delta1");
        assert_eq!(csv.lines().count(), 1 + traj.times.len());
        for line in lines {
            assert_eq!(line.split(',').count(), 3);
        }
    }
}
