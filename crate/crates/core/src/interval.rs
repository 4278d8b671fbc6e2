//! Finite unions of closed bounded intervals of the real line.
//!
//! These are the values of the per-axis disturbance maps. A union is kept
//! normalized: parts sorted, overlapping or touching parts merged, and at
//! most [`MAX_PARTS`] components (beyond that, the two closest components
//! are merged until the cap holds).

use serde::{Deserialize, Serialize};

/// Hard cap on the number of disjoint components of an [`IntervalUnion`].
pub const MAX_PARTS: usize = 8;

/// A closed bounded interval `[lo, hi]`, possibly degenerate (`lo == hi`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(
            lo.is_finite() && hi.is_finite() && lo <= hi,
            "invalid interval [{lo}, {hi}]"
        );
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval::new(v, v)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }
}

/// Which cone of the real line a bounded set generates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeTag {
    /// The set is `{0}` (or empty); generates `{0}`.
    Zero,
    /// Contained in `[0, inf)` with a positive element; generates `[0, inf)`.
    Nonneg,
    /// Contained in `(-inf, 0]` with a negative element; generates `(-inf, 0]`.
    Nonpos,
    /// Has elements of both signs; generates the whole line.
    Full,
}

/// A normalized finite union of closed bounded intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    parts: Vec<Interval>,
}

impl IntervalUnion {
    /// Builds a union from arbitrary parts, normalizing as documented on the
    /// type. Panics on empty input: the disturbance values this type models
    /// are nonempty closed sets.
    pub fn new(mut parts: Vec<Interval>) -> Self {
        assert!(!parts.is_empty(), "interval union must be nonempty");
        parts.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(parts.len());
        for p in parts {
            match merged.last_mut() {
                Some(last) if p.lo <= last.hi => {
                    if p.hi > last.hi {
                        last.hi = p.hi;
                    }
                }
                _ => merged.push(p),
            }
        }
        while merged.len() > MAX_PARTS {
            let mut best = 0;
            let mut best_gap = f64::INFINITY;
            for i in 0..merged.len() - 1 {
                let gap = merged[i + 1].lo - merged[i].hi;
                if gap < best_gap {
                    best_gap = gap;
                    best = i;
                }
            }
            let hi = merged[best + 1].hi;
            merged[best].hi = hi;
            merged.remove(best + 1);
        }
        IntervalUnion { parts: merged }
    }

    pub fn point(v: f64) -> Self {
        IntervalUnion::new(vec![Interval::point(v)])
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        IntervalUnion::new(vec![Interval::new(lo, hi)])
    }

    /// Union of point values, e.g. `{-1, 0}`.
    pub fn points(vs: &[f64]) -> Self {
        IntervalUnion::new(vs.iter().map(|&v| Interval::point(v)).collect())
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn min(&self) -> f64 {
        self.parts[0].lo
    }

    pub fn max(&self) -> f64 {
        self.parts[self.parts.len() - 1].hi
    }

    /// Largest absolute endpoint; a bound for the whole set.
    pub fn bound(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }

    pub fn is_single_interval(&self) -> bool {
        self.parts.len() == 1
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        self.parts.iter().any(|p| p.contains(v, tol))
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0, 0.0)
    }

    /// Image under multiplication by `c` (a new normalized union).
    pub fn scale(&self, c: f64) -> IntervalUnion {
        let parts = self
            .parts
            .iter()
            .map(|p| {
                let (a, b) = (c * p.lo, c * p.hi);
                if a <= b {
                    Interval::new(a, b)
                } else {
                    Interval::new(b, a)
                }
            })
            .collect();
        IntervalUnion::new(parts)
    }

    /// Nearest point of the union to `v`; among equidistant candidates the
    /// smaller value wins (deterministic).
    pub fn project(&self, v: f64) -> f64 {
        let mut best = self.parts[0].lo;
        let mut best_d = f64::INFINITY;
        for p in &self.parts {
            let cand = v.clamp(p.lo, p.hi);
            let d = (cand - v).abs();
            if d < best_d {
                best_d = d;
                best = cand;
            }
        }
        best
    }

    /// All part endpoints in ascending order (degenerate parts contribute one
    /// value). These are the extreme candidates for linear optimization over
    /// the union.
    pub fn endpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.parts.len());
        for p in &self.parts {
            out.push(p.lo);
            if p.hi > p.lo {
                out.push(p.hi);
            }
        }
        out
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut parts = self.parts.clone();
        parts.extend_from_slice(&other.parts);
        IntervalUnion::new(parts)
    }

    /// Intersection; `None` when disjoint.
    pub fn intersect(&self, other: &IntervalUnion) -> Option<IntervalUnion> {
        let mut parts = Vec::new();
        for a in &self.parts {
            for b in &other.parts {
                let lo = a.lo.max(b.lo);
                let hi = a.hi.min(b.hi);
                if lo <= hi {
                    parts.push(Interval::new(lo, hi));
                }
            }
        }
        if parts.is_empty() {
            None
        } else {
            Some(IntervalUnion::new(parts))
        }
    }

    /// `sup { c * d : d in self }`, exact at endpoints. `c == 0` gives exactly 0.
    pub fn sup_linear(&self, c: f64) -> f64 {
        if c > 0.0 {
            c * self.max()
        } else if c < 0.0 {
            c * self.min()
        } else {
            0.0
        }
    }

    /// Like [`sup_linear`](Self::sup_linear) but also returns an achieving
    /// element. When `c == 0` every element achieves the sup; the one of
    /// smallest magnitude is returned.
    pub fn argsup_linear(&self, c: f64) -> (f64, f64) {
        if c > 0.0 {
            (self.max(), c * self.max())
        } else if c < 0.0 {
            (self.min(), c * self.min())
        } else {
            (self.project(0.0), 0.0)
        }
    }

    /// Cone of the line generated by this set.
    pub fn cone_tag(&self) -> ConeTag {
        let neg = self.min() < 0.0;
        let pos = self.max() > 0.0;
        match (neg, pos) {
            (false, false) => ConeTag::Zero,
            (false, true) => ConeTag::Nonneg,
            (true, false) => ConeTag::Nonpos,
            (true, true) => ConeTag::Full,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_merges_overlaps_and_sorts() {
        let u = IntervalUnion::new(vec![
            Interval::new(1.0, 2.0),
            Interval::new(-1.0, 0.5),
            Interval::new(0.5, 1.0),
        ]);
        assert_eq!(u.parts().len(), 1);
        assert_eq!(u.min(), -1.0);
        assert_eq!(u.max(), 2.0);
    }

    #[test]
    fn cap_merges_closest_components() {
        let parts: Vec<Interval> = (0..10)
            .map(|i| {
                let base = i as f64 * 10.0;
                // make the gap between parts 3 and 4 the smallest
                let lo = if i == 4 { base - 8.0 } else { base };
                Interval::new(lo, base + 1.0)
            })
            .collect();
        let u = IntervalUnion::new(parts);
        assert_eq!(u.parts().len(), MAX_PARTS);
        assert!(u.contains(31.5, 0.0), "closest gap merged first");
    }

    #[test]
    fn scale_flips_orientation() {
        let u = IntervalUnion::points(&[-1.0, 0.0]);
        let s = u.scale(-2.0);
        assert!(s.contains(2.0, 0.0));
        assert!(s.contains(0.0, 0.0));
        assert!(!s.contains(-2.0, 0.0));
    }

    #[test]
    fn sup_linear_is_exact_at_zero_covector() {
        let u = IntervalUnion::points(&[-1.0, 0.0]);
        assert_eq!(u.sup_linear(0.0), 0.0);
        assert_eq!(u.sup_linear(2.0), 0.0);
        assert_eq!(u.sup_linear(-2.0), 2.0);
    }

    #[test]
    fn project_prefers_smaller_on_ties() {
        let u = IntervalUnion::points(&[-1.0, 1.0]);
        assert_eq!(u.project(0.0), -1.0);
        assert_eq!(u.project(0.2), 1.0);
    }

    #[test]
    fn cone_tags() {
        assert_eq!(IntervalUnion::point(0.0).cone_tag(), ConeTag::Zero);
        assert_eq!(IntervalUnion::points(&[0.0, 1.0]).cone_tag(), ConeTag::Nonneg);
        assert_eq!(IntervalUnion::points(&[-1.0, 0.0]).cone_tag(), ConeTag::Nonpos);
        assert_eq!(IntervalUnion::interval(-1.0, 1.0).cone_tag(), ConeTag::Full);
    }
}
