//! State-dependent scalar disturbance maps `x -> D_i(x)`.
//!
//! A map is a first-match list of region predicates, each carrying an
//! interval union and a declared cone tag, plus a default region for
//! everything unmatched. Predicates are evaluated exactly (no tolerance):
//! region dispatch has to be deterministic because the dynamics are
//! genuinely discontinuous across these boundaries.

use crate::interval::{ConeTag, IntervalUnion};
use crate::sample::{dot, BoxRegion};

use super::InclusionError;

/// Membership predicate for one region of state space.
#[derive(Clone, Debug)]
pub enum RegionPred {
    /// Closed axis box.
    Box(BoxRegion),
    /// `normal . x <= offset`, or strict `<` when `strict` is set.
    Halfspace { normal: Vec<f64>, offset: f64, strict: bool },
}

impl RegionPred {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            RegionPred::Box(b) => b.contains(x, 0.0),
            RegionPred::Halfspace { normal, offset, strict } => {
                let v = dot(normal, x);
                if *strict {
                    v < *offset
                } else {
                    v <= *offset
                }
            }
        }
    }

    /// Signed distances to this predicate's boundary surfaces, used to snap
    /// integrator states exactly onto region boundaries.
    pub fn snap(&self, x: &mut [f64], tol: f64) {
        match self {
            RegionPred::Box(b) => {
                for i in 0..b.dim() {
                    if (x[i] - b.lo[i]).abs() <= tol {
                        x[i] = b.lo[i];
                    }
                    if (x[i] - b.hi[i]).abs() <= tol {
                        x[i] = b.hi[i];
                    }
                }
            }
            RegionPred::Halfspace { normal, offset, .. } => {
                let v = dot(normal, x);
                if (v - offset).abs() <= tol {
                    let nn: f64 = normal.iter().map(|c| c * c).sum();
                    let f = (v - offset) / nn;
                    for (xi, ni) in x.iter_mut().zip(normal) {
                        *xi -= f * ni;
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct DisturbanceRegion {
    pub pred: RegionPred,
    pub value: IntervalUnion,
    pub tag: ConeTag,
}

/// One axis of the product disturbance: finitely many regions plus a
/// default. Carries the hypothesis flags the checkers branch on.
#[derive(Clone, Debug)]
pub struct DisturbanceMap {
    regions: Vec<DisturbanceRegion>,
    default_value: IntervalUnion,
    default_tag: ConeTag,
    /// Zero belongs to every value and the generated cone is constant.
    h3: bool,
    /// Every value is one interval and the map is certified lower
    /// semicontinuous by the scenario author.
    h4: bool,
}

impl DisturbanceMap {
    pub fn new(
        axis: usize,
        regions: Vec<DisturbanceRegion>,
        default_value: IntervalUnion,
        h3: bool,
        h4: bool,
    ) -> Result<Self, InclusionError> {
        let default_tag = default_value.cone_tag();
        for r in &regions {
            let actual = r.value.cone_tag();
            if actual != r.tag {
                return Err(InclusionError::TagMismatch { axis, declared: r.tag, actual });
            }
        }
        let map = DisturbanceMap { regions, default_value, default_tag, h3, h4 };
        if h3 {
            if let Some(v) = map.all_values().find(|v| !v.contains_zero()) {
                return Err(InclusionError::Hypothesis(format!(
                    "axis {axis}: flagged with the zero-membership hypothesis but {v:?} misses 0"
                )));
            }
            let tags: Vec<ConeTag> = map.all_tags().collect();
            if tags.windows(2).any(|w| w[0] != w[1]) {
                return Err(InclusionError::Hypothesis(format!(
                    "axis {axis}: flagged cone-constant but region tags differ: {tags:?}"
                )));
            }
        }
        if h4 {
            if map.all_values().any(|v| !v.is_single_interval()) {
                return Err(InclusionError::Hypothesis(format!(
                    "axis {axis}: flagged convex-valued but a region value is a strict union"
                )));
            }
        }
        Ok(map)
    }

    /// Single value everywhere, no hypothesis flags claimed.
    pub fn constant(value: IntervalUnion) -> Self {
        let default_tag = value.cone_tag();
        DisturbanceMap {
            regions: Vec::new(),
            default_value: value,
            default_tag,
            h3: false,
            h4: false,
        }
    }

    /// Single value everywhere with flags validated.
    pub fn constant_flagged(
        axis: usize,
        value: IntervalUnion,
        h3: bool,
        h4: bool,
    ) -> Result<Self, InclusionError> {
        Self::new(axis, Vec::new(), value, h3, h4)
    }

    pub fn value_at(&self, x: &[f64]) -> (&IntervalUnion, ConeTag) {
        for r in &self.regions {
            if r.pred.contains(x) {
                return (&r.value, r.tag);
            }
        }
        (&self.default_value, self.default_tag)
    }

    /// Index of the active region (regions.len() means the default).
    pub fn region_index(&self, x: &[f64]) -> usize {
        self.regions
            .iter()
            .position(|r| r.pred.contains(x))
            .unwrap_or(self.regions.len())
    }

    pub fn regions(&self) -> &[DisturbanceRegion] {
        &self.regions
    }

    pub fn default_value(&self) -> &IntervalUnion {
        &self.default_value
    }

    pub fn h3(&self) -> bool {
        self.h3
    }

    pub fn h4(&self) -> bool {
        self.h4
    }

    /// Largest magnitude over every region value (local boundedness bound).
    pub fn bound(&self) -> f64 {
        self.all_values().map(|v| v.bound()).fold(0.0, f64::max)
    }

    /// Whether every region's value contains zero (the structural
    /// weak-zeroing condition, independent of the flags).
    pub fn zero_everywhere(&self) -> bool {
        self.all_values().all(|v| v.contains_zero())
    }

    /// Snap coordinates of `x` lying within `tol` of any region boundary
    /// exactly onto it.
    pub fn snap_boundaries(&self, x: &mut [f64], tol: f64) {
        for r in &self.regions {
            r.pred.snap(x, tol);
        }
    }

    /// Sampled disjointness check: regions must not overlap. Returns the
    /// first sampled point claimed by two regions.
    pub fn overlap_witness(
        &self,
        window: &BoxRegion,
        samples: usize,
        seed: u64,
    ) -> Option<(Vec<f64>, usize, usize)> {
        for x in window.halton_samples(samples, seed) {
            let hits: Vec<usize> = self
                .regions
                .iter()
                .enumerate()
                .filter(|(_, r)| r.pred.contains(&x))
                .map(|(i, _)| i)
                .collect();
            if hits.len() > 1 {
                return Some((x, hits[0], hits[1]));
            }
        }
        None
    }

    fn all_values(&self) -> impl Iterator<Item = &IntervalUnion> {
        self.regions
            .iter()
            .map(|r| &r.value)
            .chain(std::iter::once(&self.default_value))
    }

    fn all_tags(&self) -> impl Iterator<Item = ConeTag> + '_ {
        self.regions
            .iter()
            .map(|r| r.tag)
            .chain(std::iter::once(self.default_tag))
    }
}
