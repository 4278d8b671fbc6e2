//! Closed sets, tangent and normal cones, and conic membership.
//!
//! The supported set variants are exactly the ones the solvers need: smooth
//! sublevel sets `{x : psi(x) <= 0}`, polyhedra `{x : Ax <= b}`, polyhedral
//! cones, singletons, and axis boxes. Tangent and normal cone queries run on
//! structured formulas (active constraints, gradients); a numeric
//! distance-quotient fallback exists for cross-checking the structured
//! answers, not for production queries.

pub mod ccone;
pub mod cones;

pub use ccone::{
    ccone_contains_points, ccone_contains_product, cone_contains_points, cone_contains_product,
};
pub use cones::{double_description, rank, ConeSpec, MAX_ENUM_DIM};

use thiserror::Error;

use crate::expr::{FieldError, ScalarField};
use crate::sample::{dot, euclid_dist, euclid_norm, sup_norm, BoxRegion};

#[derive(Debug, Error)]
pub enum GeometryError {
    /// A sublevel boundary point where the gradient vanishes: normal and
    /// tangent cones are not given by the gradient formula there.
    #[error("gradient vanishes at boundary point {at:?}")]
    DegenerateBoundary { at: Vec<f64> },
    /// Clarke tangent queries are only answered for convex sets.
    #[error("Clarke tangent cone requires a convex set; certify sublevel sets as convex explicitly")]
    NonConvexVariant,
    /// Cone representation conversion is enumeration based and refuses high
    /// dimensions rather than returning partial generator lists.
    #[error("cone enumeration supports dimension <= {max}, got {dim}; query halfspace rows directly")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A closed subset of state space in one of five structured forms.
#[derive(Clone, Debug)]
pub enum ClosedSetSpec {
    /// `{x : psi(x) <= 0}` for a smooth scalar field without controls.
    /// `convex` is a user certificate enabling Clarke tangent queries.
    SmoothSublevel { psi: ScalarField, convex: bool },
    /// `{x : rows[j] . x <= offsets[j]}`.
    Polyhedron { rows: Vec<Vec<f64>>, offsets: Vec<f64> },
    /// A polyhedral cone (apex at the origin).
    PolyhedralCone(ConeSpec),
    /// A single point.
    Singleton(Vec<f64>),
    /// An axis-aligned box.
    Box(BoxRegion),
}

impl ClosedSetSpec {
    pub fn sublevel(psi: ScalarField) -> Self {
        assert!(psi.is_smooth(), "sublevel sets need a smooth defining field");
        assert_eq!(psi.control_dim(), 0, "sublevel field must not use controls");
        ClosedSetSpec::SmoothSublevel { psi, convex: false }
    }

    pub fn sublevel_convex(psi: ScalarField) -> Self {
        match Self::sublevel(psi) {
            ClosedSetSpec::SmoothSublevel { psi, .. } => {
                ClosedSetSpec::SmoothSublevel { psi, convex: true }
            }
            _ => unreachable!(),
        }
    }

    pub fn polyhedron(rows: Vec<Vec<f64>>, offsets: Vec<f64>) -> Self {
        assert!(!rows.is_empty(), "polyhedron needs at least one row");
        assert_eq!(rows.len(), offsets.len());
        let n = rows[0].len();
        for r in &rows {
            assert_eq!(r.len(), n);
            assert!(r.iter().any(|c| c.abs() > 0.0), "polyhedron rows must be nonzero");
        }
        ClosedSetSpec::Polyhedron { rows, offsets }
    }

    pub fn dim(&self) -> usize {
        match self {
            ClosedSetSpec::SmoothSublevel { psi, .. } => psi.state_dim(),
            ClosedSetSpec::Polyhedron { rows, .. } => rows[0].len(),
            ClosedSetSpec::PolyhedralCone(c) => c.dim(),
            ClosedSetSpec::Singleton(p) => p.len(),
            ClosedSetSpec::Box(b) => b.dim(),
        }
    }

    /// Membership up to `tol` in the defining inequalities: `psi(x) <= tol`,
    /// `Ax <= b + tol`, `|x - p| <= tol`, box bounds widened by `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool, GeometryError> {
        assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        assert!(tol >= 0.0);
        match self {
            ClosedSetSpec::SmoothSublevel { psi, .. } => Ok(psi.eval_state(x)? <= tol),
            ClosedSetSpec::Polyhedron { rows, offsets } => Ok(rows
                .iter()
                .zip(offsets)
                .all(|(r, b)| dot(r, x) <= b + tol)),
            ClosedSetSpec::PolyhedralCone(c) => c.contains(x, tol),
            ClosedSetSpec::Singleton(p) => Ok(crate::sample::sup_dist(x, p) <= tol),
            ClosedSetSpec::Box(b) => Ok(b.contains(x, tol)),
        }
    }

    /// Whether `x` lies within `tol` of the topological boundary (and in the
    /// set). Interior points of full-dimensional variants return false.
    pub fn boundary_contains(&self, x: &[f64], tol: f64) -> Result<bool, GeometryError> {
        if !self.contains(x, tol)? {
            return Ok(false);
        }
        match self {
            ClosedSetSpec::SmoothSublevel { psi, .. } => Ok(psi.eval_state(x)?.abs() <= tol),
            ClosedSetSpec::Polyhedron { rows, offsets } => Ok(rows
                .iter()
                .zip(offsets)
                .any(|(r, b)| (dot(r, x) - b).abs() <= tol)),
            ClosedSetSpec::PolyhedralCone(c) => {
                let scale = 1.0 + sup_norm(x);
                Ok(c.compute_rows()?
                    .iter()
                    .any(|r| dot(r, x).abs() <= tol * scale))
            }
            ClosedSetSpec::Singleton(_) => Ok(true),
            ClosedSetSpec::Box(b) => {
                Ok((0..b.dim()).any(|i| {
                    (x[i] - b.lo[i]).abs() <= tol || (x[i] - b.hi[i]).abs() <= tol
                }))
            }
        }
    }

    /// The proximal normal cone at a point of the set. Interior points give
    /// the zero cone; structured boundary formulas give the exact cone.
    pub fn proximal_normal_cone(&self, x: &[f64], tol: f64) -> Result<ConeSpec, GeometryError> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        match self {
            ClosedSetSpec::Singleton(_) => Ok(ConeSpec::full(n)),
            ClosedSetSpec::Polyhedron { rows, offsets } => {
                let active: Vec<Vec<f64>> = rows
                    .iter()
                    .zip(offsets)
                    .filter(|(r, b)| (dot(r, x) - *b).abs() <= tol)
                    .map(|(r, _)| r.clone())
                    .collect();
                Ok(ConeSpec::from_generators(n, active))
            }
            ClosedSetSpec::Box(b) => {
                let mut active = Vec::new();
                for i in 0..n {
                    if (x[i] - b.hi[i]).abs() <= tol {
                        let mut e = vec![0.0; n];
                        e[i] = 1.0;
                        active.push(e);
                    }
                    if (x[i] - b.lo[i]).abs() <= tol {
                        let mut e = vec![0.0; n];
                        e[i] = -1.0;
                        active.push(e);
                    }
                }
                Ok(ConeSpec::from_generators(n, active))
            }
            ClosedSetSpec::PolyhedralCone(c) => {
                let active = c.active_rows_at(x, tol)?;
                Ok(ConeSpec::from_generators(n, active))
            }
            ClosedSetSpec::SmoothSublevel { psi, .. } => {
                if psi.eval_state(x)? < -tol {
                    return Ok(ConeSpec::from_generators(n, Vec::new()));
                }
                let grad = psi.gradient(x)?;
                if sup_norm(&grad) <= tol {
                    return Err(GeometryError::DegenerateBoundary { at: x.to_vec() });
                }
                Ok(ConeSpec::from_generators(n, vec![grad]))
            }
        }
    }

    /// Bouligand (contingent) tangent cone membership by the structured
    /// formula for each variant: active constraint rows, the gradient
    /// halfspace, or cone membership.
    pub fn bouligand_contains(&self, x: &[f64], v: &[f64], tol: f64) -> Result<bool, GeometryError> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        assert_eq!(v.len(), n);
        match self {
            ClosedSetSpec::Singleton(_) => Ok(sup_norm(v) <= tol),
            ClosedSetSpec::Polyhedron { rows, offsets } => Ok(rows
                .iter()
                .zip(offsets)
                .filter(|(r, b)| (dot(r, x) - *b).abs() <= tol)
                .all(|(r, _)| dot(r, v) <= tol)),
            ClosedSetSpec::Box(b) => {
                for i in 0..n {
                    if (x[i] - b.hi[i]).abs() <= tol && v[i] > tol {
                        return Ok(false);
                    }
                    if (x[i] - b.lo[i]).abs() <= tol && v[i] < -tol {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            ClosedSetSpec::PolyhedralCone(c) => {
                let active = c.active_rows_at(x, tol)?;
                Ok(active.iter().all(|r| dot(r, v) <= tol))
            }
            ClosedSetSpec::SmoothSublevel { psi, .. } => {
                if psi.eval_state(x)? < -tol {
                    return Ok(true);
                }
                let grad = psi.gradient(x)?;
                if sup_norm(&grad) <= tol {
                    return Err(GeometryError::DegenerateBoundary { at: x.to_vec() });
                }
                Ok(dot(&grad, v) <= tol)
            }
        }
    }

    /// Clarke tangent cone membership. Valid only on convex sets, where it
    /// coincides with the Bouligand cone; sublevel sets must carry the
    /// convexity certificate.
    pub fn clarke_tangent_contains(
        &self,
        x: &[f64],
        v: &[f64],
        tol: f64,
    ) -> Result<bool, GeometryError> {
        if let ClosedSetSpec::SmoothSublevel { convex: false, .. } = self {
            return Err(GeometryError::NonConvexVariant);
        }
        self.bouligand_contains(x, v, tol)
    }

    /// Numeric cross-check for tangent membership: the distance quotients
    /// `dist(x + t v) / t` over three decades of `t` must be nonincreasing
    /// and end below `tol`.
    pub fn bouligand_contains_numeric(
        &self,
        x: &[f64],
        v: &[f64],
        tol: f64,
    ) -> Result<bool, GeometryError> {
        let mut quotients = Vec::with_capacity(3);
        for t in [1e-2, 1e-3, 1e-4] {
            let probe: Vec<f64> = x.iter().zip(v).map(|(xi, vi)| xi + t * vi).collect();
            let (d, _) = self.distance(&probe)?;
            quotients.push(d / t);
        }
        let monotone = quotients.windows(2).all(|w| w[1] <= w[0] + tol);
        Ok(monotone && quotients[2] <= tol)
    }

    /// Euclidean distance to the set with a witness projection point.
    /// Exact for boxes and singletons, Dykstra alternating projections for
    /// polyhedra and cones, gradient projection for sublevel sets.
    pub fn distance(&self, x: &[f64]) -> Result<(f64, Vec<f64>), GeometryError> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        match self {
            ClosedSetSpec::Singleton(p) => Ok((euclid_dist(x, p), p.clone())),
            ClosedSetSpec::Box(b) => {
                let p = b.clamp(x);
                Ok((euclid_dist(x, &p), p))
            }
            ClosedSetSpec::Polyhedron { rows, offsets } => {
                let p = dykstra(rows, offsets, x);
                Ok((euclid_dist(x, &p), p))
            }
            ClosedSetSpec::PolyhedralCone(c) => {
                let rows = c.compute_rows()?;
                let offsets = vec![0.0; rows.len()];
                let p = dykstra(&rows, &offsets, x);
                Ok((euclid_dist(x, &p), p))
            }
            ClosedSetSpec::SmoothSublevel { psi, .. } => {
                let p = project_sublevel(psi, x)?;
                Ok((euclid_dist(x, &p), p))
            }
        }
    }

    /// Deterministic samples on the boundary of the set restricted to a
    /// window box. May return fewer than `count` points when the boundary
    /// barely meets the window.
    pub fn boundary_samples(
        &self,
        within: &BoxRegion,
        count: usize,
        seed: u64,
    ) -> Result<Vec<Vec<f64>>, GeometryError> {
        let n = self.dim();
        assert_eq!(within.dim(), n);
        let tol = 1e-9;
        match self {
            ClosedSetSpec::Singleton(p) => {
                if within.contains(p, tol) {
                    Ok(vec![p.clone()])
                } else {
                    Ok(Vec::new())
                }
            }
            ClosedSetSpec::Box(b) => {
                let mut out = Vec::new();
                let per_face = count / (2 * n) + 1;
                for i in 0..n {
                    for &level in &[b.lo[i], b.hi[i]] {
                        let face = face_samples(b, i, level, per_face, seed + i as u64);
                        for p in face {
                            if within.contains(&p, tol) {
                                out.push(p);
                            }
                        }
                    }
                }
                out.truncate(count);
                Ok(out)
            }
            ClosedSetSpec::Polyhedron { rows, offsets } => {
                self.hyperplane_boundary_samples(rows, offsets, within, count, seed)
            }
            ClosedSetSpec::PolyhedralCone(c) => {
                let rows = c.compute_rows()?;
                let offsets = vec![0.0; rows.len()];
                let mut out =
                    self.hyperplane_boundary_samples(&rows, &offsets, within, count, seed)?;
                let origin = vec![0.0; n];
                if within.contains(&origin, tol) && !out.iter().any(|p| sup_norm(p) <= tol) {
                    out.insert(0, origin);
                    out.truncate(count.max(1));
                }
                Ok(out)
            }
            ClosedSetSpec::SmoothSublevel { psi, .. } => {
                sublevel_boundary_samples(psi, within, count, seed)
            }
        }
    }

    fn hyperplane_boundary_samples(
        &self,
        rows: &[Vec<f64>],
        offsets: &[f64],
        within: &BoxRegion,
        count: usize,
        seed: u64,
    ) -> Result<Vec<Vec<f64>>, GeometryError> {
        let tol = 1e-7;
        let mut out: Vec<Vec<f64>> = Vec::new();
        let candidates = within.halton_samples(count * 8, seed);
        'cand: for cand in candidates {
            if out.len() >= count {
                break;
            }
            for (r, b) in rows.iter().zip(offsets) {
                let nn = euclid_norm(r);
                let shift = (dot(r, &cand) - b) / (nn * nn);
                let p: Vec<f64> = cand.iter().zip(r).map(|(c, ri)| c - shift * ri).collect();
                if self.contains(&p, tol)?
                    && self.boundary_contains(&p, tol)?
                    && within.contains(&p, tol)
                    && !out.iter().any(|q| crate::sample::sup_dist(q, &p) <= 1e-7)
                {
                    out.push(p);
                    continue 'cand;
                }
            }
        }
        Ok(out)
    }
}

/// Projection onto one halfspace `{y : r . y <= b}`.
fn project_halfspace(r: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    let excess = dot(r, y) - b;
    if excess <= 0.0 {
        return y.to_vec();
    }
    let nn = euclid_norm(r);
    let f = excess / (nn * nn);
    y.iter().zip(r).map(|(yi, ri)| yi - f * ri).collect()
}

/// Dykstra's alternating projection onto an intersection of halfspaces.
fn dykstra(rows: &[Vec<f64>], offsets: &[f64], x: &[f64]) -> Vec<f64> {
    if rows.is_empty() {
        return x.to_vec();
    }
    let n = x.len();
    let mut y = x.to_vec();
    let mut corrections = vec![vec![0.0; n]; rows.len()];
    for _ in 0..500 {
        let before = y.clone();
        for (j, (r, b)) in rows.iter().zip(offsets).enumerate() {
            let z: Vec<f64> = y.iter().zip(&corrections[j]).map(|(a, c)| a + c).collect();
            let p = project_halfspace(r, *b, &z);
            for i in 0..n {
                corrections[j][i] = z[i] - p[i];
            }
            y = p;
        }
        if crate::sample::sup_dist(&before, &y) <= 1e-13 {
            break;
        }
    }
    y
}

/// Approximate projection onto `{psi <= 0}`: linearized (Newton) steps reach
/// feasibility, bisection lands on the boundary, then alternating
/// tangential-pull / boundary-restoration steps improve the candidate.
fn project_sublevel(psi: &ScalarField, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
    let n = x.len();
    if psi.eval_state(x)? <= 0.0 {
        return Ok(x.to_vec());
    }
    // reach the sublevel set along gradient directions
    let mut y = x.to_vec();
    let mut feasible = None;
    for _ in 0..50 {
        let val = psi.eval_state(&y)?;
        if val <= 0.0 {
            feasible = Some(y.clone());
            break;
        }
        let g = psi.gradient(&y)?;
        let gn = euclid_norm(&g);
        if gn <= 1e-12 {
            break;
        }
        let step = val / (gn * gn);
        for i in 0..n {
            y[i] -= step * g[i];
        }
    }
    let feasible = match feasible {
        Some(f) => f,
        None => return Ok(y), // flat gradient: best effort
    };

    let mut p = bisect_to_boundary(psi, x, &feasible)?;
    // tangential improvement: pull toward x inside the tangent plane, then
    // restore the boundary along the gradient
    for _ in 0..40 {
        let g = psi.gradient(&p)?;
        let gn = euclid_norm(&g);
        if gn <= 1e-12 {
            break;
        }
        let to_x: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a - b).collect();
        let along = dot(&to_x, &g) / (gn * gn);
        let mut q = p.clone();
        let mut moved = 0.0;
        for i in 0..n {
            let t = 0.5 * (to_x[i] - along * g[i]);
            q[i] += t;
            moved += t * t;
        }
        for _ in 0..8 {
            let val = psi.eval_state(&q)?;
            let g2 = psi.gradient(&q)?;
            let g2n = euclid_norm(&g2);
            if g2n <= 1e-12 {
                break;
            }
            let step = val / (g2n * g2n);
            for i in 0..n {
                q[i] -= step * g2[i];
            }
        }
        if psi.eval_state(&q)? <= 1e-10 && euclid_dist(x, &q) < euclid_dist(x, &p) {
            p = q;
        }
        if moved.sqrt() <= 1e-12 {
            break;
        }
    }
    Ok(p)
}

fn bisect_to_boundary(
    psi: &ScalarField,
    outside: &[f64],
    inside: &[f64],
) -> Result<Vec<f64>, GeometryError> {
    let mut lo = 0.0; // fraction toward `inside` where psi > 0
    let mut hi = 1.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let p: Vec<f64> = outside
            .iter()
            .zip(inside)
            .map(|(o, i)| o + mid * (i - o))
            .collect();
        if psi.eval_state(&p)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(outside
        .iter()
        .zip(inside)
        .map(|(o, i)| o + hi * (i - o))
        .collect())
}

/// Halton samples on one box face (coordinate `axis` pinned to `level`).
fn face_samples(b: &BoxRegion, axis: usize, level: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = b.dim();
    if n == 1 {
        return vec![vec![level]];
    }
    let lo: Vec<f64> = (0..n).filter(|&i| i != axis).map(|i| b.lo[i]).collect();
    let hi: Vec<f64> = (0..n).filter(|&i| i != axis).map(|i| b.hi[i]).collect();
    let face = BoxRegion::new(lo, hi);
    face.halton_samples(count, seed)
        .into_iter()
        .map(|f| {
            let mut p = Vec::with_capacity(n);
            let mut k = 0;
            for i in 0..n {
                if i == axis {
                    p.push(level);
                } else {
                    p.push(f[k]);
                    k += 1;
                }
            }
            p
        })
        .collect()
}

/// Boundary points of `{psi <= 0}` inside a window: bisect between interior
/// and exterior Halton samples.
fn sublevel_boundary_samples(
    psi: &ScalarField,
    within: &BoxRegion,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, GeometryError> {
    let probes = within.halton_samples((count * 8).max(64), seed);
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for p in probes {
        let v = psi.eval_state(&p)?;
        if v <= -1e-12 {
            inside.push(p);
        } else if v > 1e-12 {
            outside.push(p);
        }
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    if inside.is_empty() || outside.is_empty() {
        return Ok(out);
    }
    let mut oi = 0;
    'pairs: for i in 0..inside.len() * outside.len() {
        if out.len() >= count {
            break;
        }
        let a = &inside[i % inside.len()];
        let b = &outside[oi % outside.len()];
        oi += 1;
        let p = bisect_to_boundary(psi, b, a)?;
        if !within.contains(&p, 1e-9) {
            continue 'pairs;
        }
        if out.iter().any(|q| crate::sample::sup_dist(q, &p) <= 1e-6) {
            continue 'pairs;
        }
        out.push(p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ScalarField;

    fn circle() -> ScalarField {
        ScalarField::parse("x1^2 + x2^2 - 1", 2, 0).unwrap()
    }

    #[test]
    fn contains_per_variant() {
        let single = ClosedSetSpec::Singleton(vec![0.0]);
        assert!(single.contains(&[0.0], 1e-9).unwrap());

        let unit = ClosedSetSpec::Box(BoxRegion::new(vec![0.0, 0.0], vec![1.0, 1.0]));
        assert!(!unit.contains(&[0.5, 2.0], 1e-9).unwrap());

        let parabola = ClosedSetSpec::sublevel(ScalarField::parse("x1^2", 1, 0).unwrap());
        assert!(!parabola.contains(&[0.001], 1e-9).unwrap());
        assert!(parabola.contains(&[0.0], 1e-9).unwrap());
    }

    #[test]
    fn normal_cone_of_singleton_is_everything() {
        let single = ClosedSetSpec::Singleton(vec![0.0]);
        let ncone = single.proximal_normal_cone(&[0.0], 1e-9).unwrap();
        assert!(ncone.contains(&[7.0], 1e-9).unwrap());
        assert!(ncone.contains(&[-7.0], 1e-9).unwrap());
    }

    #[test]
    fn normal_cone_of_halfspace_at_boundary() {
        let hs = ClosedSetSpec::polyhedron(vec![vec![1.0, 0.0]], vec![0.0]);
        let ncone = hs.proximal_normal_cone(&[0.0, 3.0], 1e-9).unwrap();
        assert!(ncone.contains(&[2.0, 0.0], 1e-9).unwrap());
        assert!(!ncone.contains(&[-1.0, 0.0], 1e-9).unwrap());
        assert!(!ncone.contains(&[1.0, 0.5], 1e-9).unwrap());
        // interior point: zero cone
        let zero = hs.proximal_normal_cone(&[-1.0, 0.0], 1e-9).unwrap();
        assert!(zero.contains(&[0.0, 0.0], 1e-9).unwrap());
        assert!(!zero.contains(&[1e-3, 0.0], 1e-9).unwrap());
    }

    #[test]
    fn normal_cone_of_circle_sublevel() {
        let disk = ClosedSetSpec::sublevel_convex(circle());
        let ncone = disk.proximal_normal_cone(&[1.0, 0.0], 1e-9).unwrap();
        // gradient (2, 0): the ray through e1
        assert!(ncone.contains(&[3.0, 0.0], 1e-9).unwrap());
        assert!(!ncone.contains(&[-1.0, 0.0], 1e-9).unwrap());
        assert!(!ncone.contains(&[1.0, 1.0], 1e-9).unwrap());
    }

    #[test]
    fn degenerate_boundary_reported() {
        let cusp = ClosedSetSpec::sublevel(ScalarField::parse("x1^2", 1, 0).unwrap());
        assert!(matches!(
            cusp.proximal_normal_cone(&[0.0], 1e-9),
            Err(GeometryError::DegenerateBoundary { .. })
        ));
    }

    #[test]
    fn bouligand_on_orthant_face() {
        let k = ClosedSetSpec::PolyhedralCone(ConeSpec::orthant(2));
        assert!(k.bouligand_contains(&[0.0, 1.0], &[1.0, 0.0], 1e-9).unwrap());
        assert!(!k.bouligand_contains(&[0.0, 1.0], &[-1.0, 0.0], 1e-9).unwrap());
        // apex: the tangent cone is the cone itself
        assert!(k.bouligand_contains(&[0.0, 0.0], &[1.0, 1.0], 1e-9).unwrap());
        assert!(!k.bouligand_contains(&[0.0, 0.0], &[-0.5, 1.0], 1e-9).unwrap());
    }

    #[test]
    fn bouligand_on_singleton() {
        let zero = ClosedSetSpec::Singleton(vec![0.0]);
        assert!(!zero.bouligand_contains(&[0.0], &[1.0], 1e-9).unwrap());
        assert!(zero.bouligand_contains(&[0.0], &[0.0], 1e-9).unwrap());
    }

    #[test]
    fn bouligand_on_half_line_apex() {
        let k = ClosedSetSpec::PolyhedralCone(ConeSpec::orthant(1));
        assert!(!k.bouligand_contains(&[0.0], &[-0.5], 1e-9).unwrap());
        assert!(k.bouligand_contains(&[0.0], &[0.5], 1e-9).unwrap());
    }

    #[test]
    fn clarke_delegates_and_guards() {
        let zero = ClosedSetSpec::Singleton(vec![0.0]);
        assert!(!zero.clarke_tangent_contains(&[0.0], &[1.0], 1e-9).unwrap());

        let unit = ClosedSetSpec::Box(BoxRegion::new(vec![0.0], vec![1.0]));
        assert!(unit.clarke_tangent_contains(&[0.5], &[-3.0], 1e-9).unwrap());

        let k = ClosedSetSpec::PolyhedralCone(ConeSpec::orthant(2));
        assert!(k.clarke_tangent_contains(&[0.0, 0.0], &[1.0, 1.0], 1e-9).unwrap());

        let noncvx = ClosedSetSpec::sublevel(circle());
        assert!(matches!(
            noncvx.clarke_tangent_contains(&[1.0, 0.0], &[0.0, 1.0], 1e-9),
            Err(GeometryError::NonConvexVariant)
        ));
        let cvx = ClosedSetSpec::sublevel_convex(circle());
        assert!(cvx.clarke_tangent_contains(&[1.0, 0.0], &[0.0, 1.0], 1e-9).unwrap());
    }

    #[test]
    fn distance_box_and_polyhedron() {
        let unit = ClosedSetSpec::Box(BoxRegion::new(vec![0.0, 0.0], vec![1.0, 1.0]));
        let (d, p) = unit.distance(&[2.0, 0.5]).unwrap();
        assert!((d - 1.0).abs() <= 1e-12);
        assert_eq!(p, vec![1.0, 0.5]);

        // wedge x1 <= 0, x2 <= 0: projection of (1, 1) is the origin
        let wedge =
            ClosedSetSpec::polyhedron(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]);
        let (d, p) = wedge.distance(&[1.0, 1.0]).unwrap();
        assert!((d - std::f64::consts::SQRT_2).abs() <= 1e-9, "d = {d}");
        assert!(sup_norm(&p) <= 1e-9, "p = {p:?}");
    }

    #[test]
    fn distance_sublevel_circle() {
        let disk = ClosedSetSpec::sublevel_convex(circle());
        let (d, p) = disk.distance(&[2.0, 0.0]).unwrap();
        assert!((d - 1.0).abs() <= 1e-6, "d = {d}");
        assert!((p[0] - 1.0).abs() <= 1e-6 && p[1].abs() <= 1e-6, "p = {p:?}");
        let (d0, _) = disk.distance(&[0.1, -0.2]).unwrap();
        assert_eq!(d0, 0.0);
    }

    #[test]
    fn numeric_tangent_check_agrees_on_circle() {
        let disk = ClosedSetSpec::sublevel_convex(circle());
        let x = [1.0, 0.0];
        assert!(disk.bouligand_contains_numeric(&x, &[0.0, 1.0], 1e-3).unwrap());
        assert!(disk.bouligand_contains_numeric(&x, &[-1.0, 0.3], 1e-3).unwrap());
        assert!(!disk.bouligand_contains_numeric(&x, &[1.0, 0.0], 1e-3).unwrap());
        assert!(disk.bouligand_contains(&x, &[0.0, 1.0], 1e-9).unwrap());
        assert!(!disk.bouligand_contains(&x, &[1.0, 0.0], 1e-9).unwrap());
    }

    #[test]
    fn boundary_samples_land_on_boundaries() {
        let window = BoxRegion::new(vec![-2.0, -2.0], vec![2.0, 2.0]);

        let unit = ClosedSetSpec::Box(BoxRegion::new(vec![0.0, 0.0], vec![1.0, 1.0]));
        let pts = unit.boundary_samples(&window, 20, 7).unwrap();
        assert!(pts.len() >= 8);
        for p in &pts {
            assert!(unit.boundary_contains(p, 1e-9).unwrap(), "{p:?}");
        }

        let disk = ClosedSetSpec::sublevel_convex(circle());
        let pts = disk.boundary_samples(&window, 16, 3).unwrap();
        assert!(pts.len() >= 8);
        for p in &pts {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((r - 1.0).abs() <= 1e-7, "{p:?}");
        }

        let k = ClosedSetSpec::PolyhedralCone(ConeSpec::orthant(2));
        let pts = k.boundary_samples(&window, 12, 1).unwrap();
        assert!(pts.iter().any(|p| sup_norm(p) <= 1e-9), "apex missing");
        for p in &pts {
            assert!(k.boundary_contains(p, 1e-7).unwrap(), "{p:?}");
        }
    }
}
