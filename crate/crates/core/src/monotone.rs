//! Order preservation for product inclusions: orders from positivity cones
//! (on states and controls) or from a structured order set in the doubled
//! state space, tangential monotonicity checks, and paired simulation.
//!
//! The reduction underneath both checkers is the same: a flow preserves an
//! order exactly when the stacked two-copy dynamics leave the order set
//! invariant, and the tangential sufficient condition asks the difference of
//! admissible velocities to stay in the tangent cone of the order set where
//! the order constraint binds. For a cone order that boundary is `bd(K)`
//! sampled on the difference of the domain; for an order set it is the part
//! of `bd(Γ)` inside the open domain product (the domain walls themselves do
//! not encode order, so nothing is checked there).

use thiserror::Error;

use crate::geometry::{ClosedSetSpec, ConeSpec, GeometryError};
use crate::inclusion::{InclusionError, ProductInclusion, SelectionPolicy, Trajectory};
use crate::sample::{dot, BoxRegion};
use crate::verdict::{Resolution, Verdict, Witness};

#[derive(Debug, Error)]
pub enum OrderError {
    #[error("order cone must be pointed: {0}")]
    NotPointed(String),
    #[error("pair is not ordered: {0}")]
    NotOrdered(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// How states (and controls) are compared.
#[derive(Clone, Debug)]
pub enum OrderKind {
    /// `x1 >= x2` iff `x1 - x2` lies in the positivity cone `K`; controls
    /// are compared through `K_u`.
    Cone { k: ConeSpec, k_u: ConeSpec },
    /// `x1 >= x2` iff the stacked point `(x1, x2)` lies in the order set.
    Gamma(ClosedSetSpec),
}

/// A partial order on a box-shaped state domain.
#[derive(Clone, Debug)]
pub struct OrderSpec {
    pub domain: BoxRegion,
    pub kind: OrderKind,
}

impl OrderSpec {
    /// Order from positivity cones. Both cones must be pointed (polyhedral
    /// cones are convex by construction); the control cone may have
    /// dimension zero for control-free systems.
    pub fn cone_order(domain: BoxRegion, k: ConeSpec, k_u: ConeSpec) -> Result<Self, OrderError> {
        if k.dim() != domain.dim() {
            return Err(OrderError::Dimension(format!(
                "state cone dimension {} vs domain dimension {}",
                k.dim(),
                domain.dim()
            )));
        }
        if !k.is_pointed()? {
            return Err(OrderError::NotPointed("state cone contains a line".into()));
        }
        if k_u.dim() > 0 && !k_u.is_pointed()? {
            return Err(OrderError::NotPointed("control cone contains a line".into()));
        }
        Ok(OrderSpec { domain, kind: OrderKind::Cone { k, k_u } })
    }

    /// Order from a structured set in the doubled state space.
    pub fn gamma_order(domain: BoxRegion, gamma: ClosedSetSpec) -> Result<Self, OrderError> {
        if gamma.dim() != 2 * domain.dim() {
            return Err(OrderError::Dimension(format!(
                "order set dimension {} vs doubled domain dimension {}",
                gamma.dim(),
                2 * domain.dim()
            )));
        }
        Ok(OrderSpec { domain, kind: OrderKind::Gamma(gamma) })
    }

    pub fn state_dim(&self) -> usize {
        self.domain.dim()
    }

    /// The order set in the doubled space. A cone order induces the
    /// difference polyhedron `{(x1, x2) : x1 - x2 in K}`; a full cone (no
    /// rows) induces the whole domain product.
    pub fn induced_gamma(&self) -> Result<ClosedSetSpec, GeometryError> {
        let n = self.state_dim();
        match &self.kind {
            OrderKind::Gamma(g) => Ok(g.clone()),
            OrderKind::Cone { k, .. } => {
                let rows = k.compute_rows()?;
                if rows.is_empty() {
                    return Ok(ClosedSetSpec::Box(product_box(&self.domain)));
                }
                let doubled: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|r| {
                        let mut row = Vec::with_capacity(2 * n);
                        row.extend_from_slice(r);
                        row.extend(r.iter().map(|c| -c));
                        row
                    })
                    .collect();
                Ok(ClosedSetSpec::polyhedron(doubled, vec![0.0; rows.len()]))
            }
        }
    }

    /// Whether `x1 >= x2` within tolerance.
    pub fn pair_ordered(&self, x1: &[f64], x2: &[f64], tol: f64) -> Result<bool, GeometryError> {
        match &self.kind {
            OrderKind::Cone { k, .. } => {
                let d: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a - b).collect();
                k.contains(&d, tol)
            }
            OrderKind::Gamma(g) => g.contains(&stack_point(x1, x2), tol),
        }
    }

    /// Whether the pair sits where the order constraint binds.
    pub fn pair_on_boundary(&self, x1: &[f64], x2: &[f64], tol: f64) -> Result<bool, GeometryError> {
        match &self.kind {
            OrderKind::Cone { k, .. } => {
                let d: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a - b).collect();
                ClosedSetSpec::PolyhedralCone(k.clone()).boundary_contains(&d, tol)
            }
            OrderKind::Gamma(g) => g.boundary_contains(&stack_point(x1, x2), tol),
        }
    }

    /// Euclidean violation of the order: 0 when ordered, the distance of the
    /// difference (or the stacked point) to the order set otherwise.
    pub fn pair_margin(&self, x1: &[f64], x2: &[f64]) -> Result<f64, GeometryError> {
        match &self.kind {
            OrderKind::Cone { k, .. } => {
                let d: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a - b).collect();
                Ok(ClosedSetSpec::PolyhedralCone(k.clone()).distance(&d)?.0)
            }
            OrderKind::Gamma(g) => Ok(g.distance(&stack_point(x1, x2))?.0),
        }
    }

    /// Whether `u1 >= u2` within tolerance. Order sets do not order
    /// controls, so every control pair is admitted there.
    pub fn controls_ordered(&self, u1: &[f64], u2: &[f64], tol: f64) -> Result<bool, GeometryError> {
        match &self.kind {
            OrderKind::Cone { k_u, .. } => {
                let d: Vec<f64> = u1.iter().zip(u2).map(|(a, b)| a - b).collect();
                k_u.contains(&d, tol)
            }
            OrderKind::Gamma(_) => Ok(true),
        }
    }
}

fn stack_point(x1: &[f64], x2: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x1.len() + x2.len());
    out.extend_from_slice(x1);
    out.extend_from_slice(x2);
    out
}

fn product_box(domain: &BoxRegion) -> BoxRegion {
    BoxRegion::new(
        stack_point(&domain.lo, &domain.lo),
        stack_point(&domain.hi, &domain.hi),
    )
}

/// An ordered pair of states and controls, verified at construction.
#[derive(Clone, Debug)]
pub struct OrderedPairSample {
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    /// The pair sits where the order constraint binds.
    pub boundary: bool,
}

impl OrderedPairSample {
    pub fn new(
        order: &OrderSpec,
        xi1: Vec<f64>,
        xi2: Vec<f64>,
        u1: Vec<f64>,
        u2: Vec<f64>,
    ) -> Result<Self, OrderError> {
        let tol = 1e-9;
        let n = order.state_dim();
        if xi1.len() != n || xi2.len() != n {
            return Err(OrderError::Dimension("state dimension mismatch".into()));
        }
        if u1.len() != u2.len() {
            return Err(OrderError::Dimension("control dimension mismatch".into()));
        }
        if !order.domain.contains(&xi1, tol) || !order.domain.contains(&xi2, tol) {
            return Err(OrderError::NotOrdered("a state lies outside the domain".into()));
        }
        if !order.pair_ordered(&xi1, &xi2, tol)? {
            return Err(OrderError::NotOrdered(format!("{xi1:?} does not dominate {xi2:?}")));
        }
        if !order.controls_ordered(&u1, &u2, tol)? {
            return Err(OrderError::NotOrdered(format!("{u1:?} does not dominate {u2:?}")));
        }
        let boundary = order.pair_on_boundary(&xi1, &xi2, tol)?;
        Ok(OrderedPairSample { xi1, xi2, u1, u2, boundary })
    }
}

const PAIR_CAP: usize = 128;

/// Control-grid pairs admitted by the order, deterministic order, capped.
fn ordered_control_pairs(
    inc: &ProductInclusion,
    order: &OrderSpec,
    tol: f64,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>, GeometryError> {
    let grid = inc.control_points();
    let mut out = Vec::new();
    'outer: for a1 in &grid {
        for a2 in &grid {
            if order.controls_ordered(a1, a2, tol)? {
                out.push((a1.clone(), a2.clone()));
                if out.len() >= PAIR_CAP {
                    break 'outer;
                }
            }
        }
    }
    Ok(out)
}

/// Tangential monotonicity over a cone order: for sampled differences on
/// `bd(K)` (the interior needs no check), base points in the domain, ordered
/// control pairs, and extreme velocity pairs, the velocity difference must
/// lie in the tangent cone of `K` at the difference. FAIL carries the pair,
/// the controls, and the stacked velocities in one witness.
pub fn check_monotone_cone(
    inc: &ProductInclusion,
    order: &OrderSpec,
    samples: usize,
    seed: u64,
) -> Verdict {
    let tol = 1e-9;
    let n = inc.state_dim();
    let mut res = Resolution {
        grid: 0.0,
        samples: 0,
        tol,
        extras: vec![("seed".to_string(), seed.to_string())],
    };
    let k = match &order.kind {
        OrderKind::Cone { k, .. } => k,
        OrderKind::Gamma(_) => {
            return Verdict::inconclusive("cone check requires a cone order", res)
        }
    };
    if order.state_dim() != n {
        return Verdict::inconclusive("order/state dimension mismatch", res);
    }
    let pairs = match ordered_control_pairs(inc, order, tol) {
        Ok(p) => p,
        Err(e) => return Verdict::inconclusive(format!("control-pair enumeration failed: {e}"), res),
    };
    if pairs.is_empty() {
        return Verdict::inconclusive("no ordered control pairs on the grid", res);
    }
    res.extras.push(("control_pairs".into(), pairs.len().to_string()));
    let kset = ClosedSetSpec::PolyhedralCone(k.clone());
    let diff_box = BoxRegion::new(
        order
            .domain
            .lo
            .iter()
            .zip(&order.domain.hi)
            .map(|(lo, hi)| lo - hi)
            .collect(),
        order
            .domain
            .hi
            .iter()
            .zip(&order.domain.lo)
            .map(|(hi, lo)| hi - lo)
            .collect(),
    );
    let diffs = match kset.boundary_samples(&diff_box, samples, seed) {
        Ok(d) => d,
        Err(e) => return Verdict::inconclusive(format!("cone boundary sampling failed: {e}"), res),
    };
    if diffs.is_empty() {
        return Verdict::inconclusive("the cone boundary does not meet the difference box", res);
    }
    res.samples = diffs.len();
    let mut tracker = MaxMarginTracker::new();
    for (di, w) in diffs.iter().enumerate() {
        // base points for the dominated state: xi2 and xi2 + w both in X
        let lo: Vec<f64> = order
            .domain
            .lo
            .iter()
            .zip(w)
            .map(|(l, wi)| l.max(l - wi))
            .collect();
        let hi: Vec<f64> = order
            .domain
            .hi
            .iter()
            .zip(w)
            .map(|(h, wi)| h.min(h - wi))
            .collect();
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            continue;
        }
        let active = match k.active_rows_at(w, tol) {
            Ok(a) => a,
            Err(e) => {
                return Verdict::inconclusive(format!("active rows unavailable at {w:?}: {e}"), res)
            }
        };
        for xi2 in BoxRegion::new(lo, hi).halton_samples(2, seed.wrapping_add(di as u64)) {
            let xi1: Vec<f64> = xi2.iter().zip(w).map(|(b, wi)| b + wi).collect();
            for (a1, a2) in &pairs {
                let vs = match inc.extreme_velocities(&xi1, a1, 512) {
                    Ok(v) => v,
                    Err(e) => {
                        return Verdict::inconclusive(
                            format!("velocity enumeration failed at {xi1:?}: {e}"),
                            res,
                        )
                    }
                };
                let ws = match inc.extreme_velocities(&xi2, a2, 512) {
                    Ok(v) => v,
                    Err(e) => {
                        return Verdict::inconclusive(
                            format!("velocity enumeration failed at {xi2:?}: {e}"),
                            res,
                        )
                    }
                };
                for v in &vs {
                    for vw in &ws {
                        let d: Vec<f64> = v.iter().zip(vw).map(|(a, b)| a - b).collect();
                        match kset.bouligand_contains(w, &d, tol) {
                            Ok(true) => {}
                            Ok(false) => {
                                let margin = active
                                    .iter()
                                    .map(|r| dot(r, &d))
                                    .fold(f64::NEG_INFINITY, f64::max);
                                tracker.offer(Witness {
                                    t: None,
                                    x: stack_point(&xi1, &xi2),
                                    direction: w.clone(),
                                    velocity: stack_point(v, vw),
                                    margin,
                                    note: format!("controls {a1:?} >= {a2:?}"),
                                });
                            }
                            Err(e) => {
                                return Verdict::inconclusive(
                                    format!("tangent test failed at {w:?}: {e}"),
                                    res,
                                )
                            }
                        }
                    }
                }
            }
        }
    }
    match tracker.take() {
        Some(w) => Verdict::fail(
            "velocity difference leaves the cone tangent at an ordered pair",
            vec![w],
            res,
        ),
        None => Verdict::pass(
            "velocity differences tangent to the cone at all sampled ordered pairs",
            res,
        ),
    }
}

/// Tangential monotonicity over an order set: the two-copy stacked inclusion
/// must keep its extreme velocities in the Bouligand tangent cone of the
/// order set at sampled boundary points inside the open domain product. An
/// order boundary that never enters the domain interior passes vacuously
/// (domain walls do not encode order).
pub fn check_monotone_gamma(
    inc: &ProductInclusion,
    order: &OrderSpec,
    samples: usize,
    seed: u64,
) -> Verdict {
    let tol = 1e-9;
    let n = inc.state_dim();
    let mut res = Resolution {
        grid: 0.0,
        samples: 0,
        tol,
        extras: vec![("seed".to_string(), seed.to_string())],
    };
    if order.state_dim() != n {
        return Verdict::inconclusive("order/state dimension mismatch", res);
    }
    let gamma = match order.induced_gamma() {
        Ok(g) => g,
        Err(e) => return Verdict::inconclusive(format!("order set unavailable: {e}"), res),
    };
    let stacked = match inc.stack(inc) {
        Ok(s) => s,
        Err(e) => return Verdict::inconclusive(format!("stacking failed: {e}"), res),
    };
    // shrink the product window so domain walls fall outside the sweep
    let full = product_box(&order.domain);
    let window = BoxRegion::new(
        full.lo
            .iter()
            .zip(&full.hi)
            .map(|(l, h)| l + 1e-6 * (h - l))
            .collect(),
        full.lo
            .iter()
            .zip(&full.hi)
            .map(|(l, h)| h - 1e-6 * (h - l))
            .collect(),
    );
    let points = match gamma.boundary_samples(&window, samples, seed) {
        Ok(p) => p,
        Err(e) => return Verdict::inconclusive(format!("boundary sampling failed: {e}"), res),
    };
    res.samples = points.len();
    if points.is_empty() {
        return Verdict::pass(
            "no order-boundary points inside the domain interior at this resolution \
             (vacuously tangent)",
            res,
        );
    }
    let pairs = match ordered_control_pairs(inc, order, tol) {
        Ok(p) => p,
        Err(e) => return Verdict::inconclusive(format!("control-pair enumeration failed: {e}"), res),
    };
    if pairs.is_empty() {
        return Verdict::inconclusive("no ordered control pairs on the grid", res);
    }
    res.extras.push(("control_pairs".into(), pairs.len().to_string()));
    let mut tracker = MaxMarginTracker::new();
    for xi in &points {
        let normals = match gamma.proximal_normal_cone(xi, tol) {
            Ok(c) => c.compute_generators().unwrap_or_default(),
            Err(e) => {
                return Verdict::inconclusive(
                    format!("proximal normal cone unavailable at {xi:?}: {e}"),
                    res,
                )
            }
        };
        for (a1, a2) in &pairs {
            let control = stack_point(a1, a2);
            let extremes = match stacked.extreme_velocities(xi, &control, 1024) {
                Ok(v) => v,
                Err(e) => {
                    return Verdict::inconclusive(
                        format!("velocity enumeration failed at {xi:?}: {e}"),
                        res,
                    )
                }
            };
            for v in extremes {
                match gamma.bouligand_contains(xi, &v, tol) {
                    Ok(true) => {}
                    Ok(false) => {
                        let margin = normals
                            .iter()
                            .map(|g| dot(g, &v))
                            .fold(crate::sample::sup_norm(&v), f64::max);
                        tracker.offer(Witness {
                            t: None,
                            x: xi.clone(),
                            direction: normals.first().cloned().unwrap_or_default(),
                            velocity: v.clone(),
                            margin,
                            note: format!("controls {a1:?} >= {a2:?}"),
                        });
                    }
                    Err(e) => {
                        return Verdict::inconclusive(
                            format!("tangent test failed at {xi:?}: {e}"),
                            res,
                        )
                    }
                }
            }
        }
    }
    match tracker.take() {
        Some(w) => Verdict::fail(
            "stacked velocity leaves the order-set tangent at a boundary pair",
            vec![w],
            res,
        ),
        None => Verdict::pass(
            "stacked velocities tangent to the order set at all sampled boundary points",
            res,
        ),
    }
}

/// Max-margin witness with ties to the lexicographically smaller state.
struct MaxMarginTracker {
    best: Option<Witness>,
}

impl MaxMarginTracker {
    fn new() -> Self {
        MaxMarginTracker { best: None }
    }

    fn offer(&mut self, w: Witness) {
        let better = match &self.best {
            None => true,
            Some(b) => {
                w.margin > b.margin
                    || (w.margin == b.margin && {
                        let mut less = false;
                        for (x, y) in w.x.iter().zip(&b.x) {
                            if x < y {
                                less = true;
                                break;
                            }
                            if x > y {
                                break;
                            }
                        }
                        less
                    })
            }
        };
        if better {
            self.best = Some(w);
        }
    }

    fn take(self) -> Option<Witness> {
        self.best
    }
}

/// The first order violation along a simulated pair of trajectories.
#[derive(Clone, Debug)]
pub struct OrderViolation {
    pub t_star: f64,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    /// Euclidean violation of the order at `t_star`.
    pub margin: f64,
    pub traj1: Trajectory,
    pub traj2: Trajectory,
}

fn merged_times(a: &Trajectory, b: &Trajectory) -> Vec<f64> {
    let mut times: Vec<f64> = a.times.iter().chain(&b.times).copied().collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

/// Integrates both copies under their policies and reports the first merged
/// node time at which the pair leaves the order (margin above tolerance).
/// Integration errors (domain exit included) propagate.
pub fn simulate_order_preservation(
    inc: &ProductInclusion,
    order: &OrderSpec,
    pair: &OrderedPairSample,
    policy1: &SelectionPolicy,
    policy2: &SelectionPolicy,
    horizon: f64,
    h: f64,
) -> Result<Option<OrderViolation>, InclusionError> {
    let tol = 1e-9;
    let traj1 = inc.integrate(policy1, &pair.xi1, horizon, h)?;
    let traj2 = inc.integrate(policy2, &pair.xi2, horizon, h)?;
    for t in merged_times(&traj1, &traj2) {
        let x1 = traj1.state_at(t);
        let x2 = traj2.state_at(t);
        let margin = order
            .pair_margin(&x1, &x2)
            .map_err(|e| InclusionError::Budget(format!("order margin failed at t = {t}: {e}")))?;
        if margin > tol {
            return Ok(Some(OrderViolation {
                t_star: t,
                phi1: x1,
                phi2: x2,
                margin,
                traj1,
                traj2,
            }));
        }
    }
    Ok(None)
}

/// CSV over the merged node times of a trajectory pair with the order
/// margin in the last column: `t, x1_1..x1_n, x2_1..x2_n, margin`.
pub fn violation_csv(
    order: &OrderSpec,
    traj1: &Trajectory,
    traj2: &Trajectory,
) -> Result<String, GeometryError> {
    let n = traj1.state_dim;
    let mut out = String::from("t");
    for i in 1..=n {
        out.push_str(&format!(",x1_{i}"));
    }
    for i in 1..=n {
        out.push_str(&format!(",x2_{i}"));
    }
    out.push_str(",margin\n");
    for t in merged_times(traj1, traj2) {
        let x1 = traj1.state_at(t);
        let x2 = traj2.state_at(t);
        let margin = order.pair_margin(&x1, &x2)?;
        out.push_str(&format!("{t:?}"));
        for v in x1.iter().chain(&x2) {
            out.push_str(&format!(",{v:?}"));
        }
        out.push_str(&format!(",{margin:?}\n"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ScalarField;
    use crate::inclusion::{ControlSetSpec, DisturbanceMap};
    use crate::interval::IntervalUnion;
    use crate::verdict::Status;

    fn singleton_map(axis: usize) -> DisturbanceMap {
        DisturbanceMap::constant_flagged(axis, IntervalUnion::point(1.0), false, true).unwrap()
    }

    /// Two cooperative coupled states with one nonnegative control on the
    /// first axis; optionally with the coupling sign flipped.
    fn coupled_inclusion(flip: bool) -> ProductInclusion {
        let first = if flip { "0 - x1 - x2 + a1" } else { "0 - x1 + x2 + a1" };
        ProductInclusion::new(
            vec![
                ScalarField::parse(first, 2, 1).unwrap(),
                ScalarField::parse("x1 - 2 * x2", 2, 1).unwrap(),
            ],
            vec![singleton_map(0), singleton_map(1)],
            ControlSetSpec::FiniteSet(vec![vec![0.0], vec![0.5], vec![1.0]]),
            None,
        )
        .unwrap()
    }

    /// Scalar gain system: velocities (1 + u) [0, 1].
    fn gain_inclusion() -> ProductInclusion {
        ProductInclusion::new(
            vec![ScalarField::parse("1 + a1", 1, 1).unwrap()],
            vec![DisturbanceMap::constant_flagged(
                0,
                IntervalUnion::interval(0.0, 1.0),
                true,
                true,
            )
            .unwrap()],
            ControlSetSpec::FiniteSet(vec![vec![0.0], vec![1.0]]),
            None,
        )
        .unwrap()
    }

    fn plane_order() -> OrderSpec {
        OrderSpec::cone_order(
            BoxRegion::new(vec![0.0, 0.0], vec![2.0, 2.0]),
            ConeSpec::orthant(2),
            ConeSpec::orthant(1),
        )
        .unwrap()
    }

    fn line_order() -> OrderSpec {
        OrderSpec::cone_order(
            BoxRegion::new(vec![0.0], vec![1.0]),
            ConeSpec::orthant(1),
            ConeSpec::orthant(1),
        )
        .unwrap()
    }

    #[test]
    fn full_cones_are_rejected_as_orders() {
        let err = OrderSpec::cone_order(
            BoxRegion::new(vec![0.0], vec![1.0]),
            ConeSpec::full(1),
            ConeSpec::orthant(1),
        );
        assert!(matches!(err, Err(OrderError::NotPointed(_))));
    }

    #[test]
    fn ordered_pairs_validate_and_flag_the_boundary() {
        let order = plane_order();
        let face = OrderedPairSample::new(
            &order,
            vec![0.5, 0.9],
            vec![0.5, 0.2],
            vec![1.0],
            vec![0.0],
        )
        .unwrap();
        assert!(face.boundary);
        let interior = OrderedPairSample::new(
            &order,
            vec![1.0, 0.9],
            vec![0.5, 0.2],
            vec![0.0],
            vec![0.0],
        )
        .unwrap();
        assert!(!interior.boundary);
        let unordered = OrderedPairSample::new(
            &order,
            vec![0.5, 0.2],
            vec![0.5, 0.9],
            vec![0.0],
            vec![0.0],
        );
        assert!(matches!(unordered, Err(OrderError::NotOrdered(_))));
        let control_unordered = OrderedPairSample::new(
            &order,
            vec![0.5, 0.9],
            vec![0.5, 0.2],
            vec![0.0],
            vec![1.0],
        );
        assert!(matches!(control_unordered, Err(OrderError::NotOrdered(_))));
    }

    #[test]
    fn cooperative_coupling_passes_the_cone_check() {
        let v = check_monotone_cone(&coupled_inclusion(false), &plane_order(), 32, 3);
        assert_eq!(v.status, Status::Pass, "{}", v.render());
    }

    #[test]
    fn flipped_coupling_fails_on_the_first_axis_face() {
        let v = check_monotone_cone(&coupled_inclusion(true), &plane_order(), 32, 3);
        assert_eq!(v.status, Status::Fail, "{}", v.render());
        let w = &v.witnesses[0];
        // the violating difference sits on the face x1 = 0 with x2 > 0
        assert!(w.direction[0].abs() <= 1e-9, "{:?}", w.direction);
        assert!(w.direction[1] > 0.0, "{:?}", w.direction);
        assert!(w.margin > 0.0);
    }

    #[test]
    fn set_valued_gain_fails_at_the_diagonal() {
        let v = check_monotone_cone(&gain_inclusion(), &line_order(), 16, 5);
        assert_eq!(v.status, Status::Fail, "{}", v.render());
        let w = &v.witnesses[0];
        assert_eq!(w.direction, vec![0.0]);
        // equal states, equal controls, opposite extreme selections
        assert!(w.margin >= 1.0 - 1e-9, "margin {}", w.margin);
    }

    #[test]
    fn everything_ordered_passes_vacuously() {
        let inc = coupled_inclusion(true);
        let x = BoxRegion::new(vec![0.0, 0.0], vec![2.0, 2.0]);
        let order = OrderSpec::gamma_order(x.clone(), ClosedSetSpec::Box(product_box(&x))).unwrap();
        let v = check_monotone_gamma(&inc, &order, 32, 7);
        assert_eq!(v.status, Status::Pass, "{}", v.render());
        assert!(v.reason.contains("vacuously"), "{}", v.reason);
    }

    #[test]
    fn gamma_agrees_with_the_cone_route_on_the_shipped_fixtures() {
        let cases: Vec<(ProductInclusion, OrderSpec)> = vec![
            (coupled_inclusion(false), plane_order()),
            (coupled_inclusion(true), plane_order()),
            (gain_inclusion(), line_order()),
        ];
        for (inc, order) in cases {
            let cone = check_monotone_cone(&inc, &order, 32, 11);
            let gamma = check_monotone_gamma(&inc, &order, 32, 11);
            assert_eq!(cone.status, gamma.status, "{}\n{}", cone.render(), gamma.render());
        }
    }

    #[test]
    fn explicit_diagonal_order_fails_for_the_gain_system() {
        let diagonal = ClosedSetSpec::polyhedron(
            vec![vec![1.0, -1.0], vec![-1.0, 1.0]],
            vec![0.0, 0.0],
        );
        let order =
            OrderSpec::gamma_order(BoxRegion::new(vec![0.0], vec![1.0]), diagonal).unwrap();
        let v = check_monotone_gamma(&gain_inclusion(), &order, 16, 13);
        assert_eq!(v.status, Status::Fail, "{}", v.render());
    }

    #[test]
    fn cooperative_pairs_stay_ordered_in_simulation() {
        let inc = coupled_inclusion(false);
        let order = plane_order();
        let pair = OrderedPairSample::new(
            &order,
            vec![1.0, 0.5],
            vec![0.2, 0.1],
            vec![0.5],
            vec![0.5],
        )
        .unwrap();
        let policy = SelectionPolicy::Constant { control: vec![0.5], targets: vec![1.0, 1.0] };
        let out =
            simulate_order_preservation(&inc, &order, &pair, &policy, &policy, 5.0, 1e-3)
                .unwrap();
        assert!(out.is_none());
    }

    #[test]
    fn gain_selections_violate_on_the_first_step() {
        let inc = gain_inclusion();
        let order = line_order();
        let pair = OrderedPairSample::new(
            &order,
            vec![0.2],
            vec![0.2],
            vec![0.0],
            vec![0.0],
        )
        .unwrap();
        let rest = SelectionPolicy::Constant { control: vec![0.0], targets: vec![0.0] };
        let run = SelectionPolicy::Constant { control: vec![0.0], targets: vec![1.0] };
        let h = 0.01;
        let out = simulate_order_preservation(&inc, &order, &pair, &rest, &run, 1.0, h)
            .unwrap()
            .expect("violation expected");
        assert_eq!(out.t_star, h);
        assert!((out.margin - h).abs() <= 1e-12, "margin {}", out.margin);
        let csv = violation_csv(&order, &out.traj1, &out.traj2).unwrap();
        assert!(csv.starts_with("t,x1_1,x2_1,margin\n"));
        assert!(csv.lines().count() > 2);
    }

    #[test]
    fn zero_dynamics_never_violate() {
        let inc = ProductInclusion::new(
            vec![ScalarField::constant(1.0, 1, 1)],
            vec![DisturbanceMap::constant_flagged(0, IntervalUnion::point(0.0), true, true)
                .unwrap()],
            ControlSetSpec::FiniteSet(vec![vec![0.0], vec![1.0]]),
            None,
        )
        .unwrap();
        let order = line_order();
        let pair =
            OrderedPairSample::new(&order, vec![0.8], vec![0.1], vec![1.0], vec![0.0]).unwrap();
        let p1 = SelectionPolicy::Constant { control: vec![1.0], targets: vec![1.0] };
        let p2 = SelectionPolicy::Constant { control: vec![0.0], targets: vec![-1.0] };
        let out = simulate_order_preservation(&inc, &order, &pair, &p1, &p2, 2.0, 0.05).unwrap();
        assert!(out.is_none());
    }

    #[test]
    fn cone_fail_witnesses_replay_as_simulated_violations() {
        // flipped coupling: the face witness (0, c) with equal controls
        let inc = coupled_inclusion(true);
        let order = plane_order();
        let pair = OrderedPairSample::new(
            &order,
            vec![0.5, 0.7],
            vec![0.5, 0.2],
            vec![0.0],
            vec![0.0],
        )
        .unwrap();
        let policy = SelectionPolicy::Constant { control: vec![0.0], targets: vec![1.0, 1.0] };
        let out = simulate_order_preservation(&inc, &order, &pair, &policy, &policy, 1.0, 0.01)
            .unwrap()
            .expect("flipped coupling must violate");
        assert!(out.t_star <= 1.0);
        // gain fixture: the diagonal witness with opposite selections
        let inc = gain_inclusion();
        let order = line_order();
        let pair =
            OrderedPairSample::new(&order, vec![0.2], vec![0.2], vec![0.0], vec![0.0]).unwrap();
        let rest = SelectionPolicy::Constant { control: vec![0.0], targets: vec![0.0] };
        let run = SelectionPolicy::Constant { control: vec![0.0], targets: vec![1.0] };
        let out = simulate_order_preservation(&inc, &order, &pair, &rest, &run, 1.0, 0.01)
            .unwrap()
            .expect("gain fixture must violate");
        assert!(out.t_star <= 1.0);
    }

    #[test]
    fn control_grid_order_does_not_change_the_verdict() {
        // zero control cone: only equal control pairs are ordered, so the
        // pair set is the same whichever way the grid lists the points
        let order = OrderSpec::cone_order(
            BoxRegion::new(vec![0.0, 0.0], vec![2.0, 2.0]),
            ConeSpec::orthant(2),
            ConeSpec::zero(1),
        )
        .unwrap();
        let build = |grid: Vec<Vec<f64>>| {
            ProductInclusion::new(
                vec![
                    ScalarField::parse("0 - x1 - x2 + a1", 2, 1).unwrap(),
                    ScalarField::parse("x1 - 2 * x2", 2, 1).unwrap(),
                ],
                vec![singleton_map(0), singleton_map(1)],
                ControlSetSpec::FiniteSet(grid),
                None,
            )
            .unwrap()
        };
        let a = check_monotone_cone(&build(vec![vec![0.0], vec![1.0]]), &order, 24, 17);
        let b = check_monotone_cone(&build(vec![vec![1.0], vec![0.0]]), &order, 24, 17);
        assert_eq!(a.status, b.status);
        assert_eq!(a.witnesses[0].x, b.witnesses[0].x);
        assert_eq!(a.witnesses[0].margin.to_bits(), b.witnesses[0].margin.to_bits());
    }

    #[test]
    fn stacked_velocity_sets_factor_exactly() {
        let inc = coupled_inclusion(false);
        let stacked = inc.stack(&inc).unwrap();
        let x1 = [0.4, 0.8];
        let x2 = [1.1, 0.3];
        let joint = stacked
            .velocity_set(&stack_point(&x1, &x2), &[0.5, 1.0])
            .unwrap();
        let left = inc.velocity_set(&x1, &[0.5]).unwrap();
        let right = inc.velocity_set(&x2, &[1.0]).unwrap();
        assert_eq!(&joint[..2], &left[..]);
        assert_eq!(&joint[2..], &right[..]);
    }
}
