//! Numerical toolkit for strong invariance, viability, and monotonicity of
//! product-form differential inclusions with set-valued disturbances.
//!
//! The crate is organized around one model object: a controlled inclusion
//! whose velocity set factors as a product of scalar factors times per-axis
//! disturbance sets (bounded interval unions that may jump across state
//! regions). On top of that sit:
//!
//! * [`expr`] — scalar expression fields (dynamics factors, verification
//!   functions, feedback components) with exact forward-mode gradients,
//! * [`interval`] — normalized finite unions of closed intervals,
//! * [`geometry`] — structured closed sets and their cones (proximal normal,
//!   Bouligand/Clarke tangent, polars, componentwise cones),
//! * [`inclusion`] — the product inclusion, its upper Hamiltonian,
//!   selections, trajectories, and structural checks,
//! * [`euler`] — mollified feedback, hull sets, coordinate-descent velocity
//!   selection, and polygonal-arc construction with certified descent,
//! * [`invariance`] — Hamiltonian / normal-cone / tangent-cone invariance
//!   verifiers and a trajectory-based falsifier,
//! * [`monotone`] — order preservation via positivity cones or order sets,
//! * [`scenario`] — the on-disk scenario format consumed by the `invar`
//!   binary.
//!
//! All verdict-producing checks are sampling- or grid-based: PASS means "the
//! condition held at every checked point at the stated resolution", never a
//! proof. Every verdict carries its resolution metadata, and INCONCLUSIVE is
//! reported when evaluation errors prevent a definite answer.
//!
//! Determinism: given identical inputs (including seeds), every function in
//! this crate produces identical results, bit for bit. Randomized trials use
//! a counter-seeded ChaCha stream; sampling uses Halton sequences or regular
//! grids. All model types are immutable after construction and safe to share
//! across threads.

pub mod euler;
pub mod expr;
pub mod geometry;
pub mod inclusion;
pub mod interval;
pub mod invariance;
pub mod monotone;
pub mod sample;
pub mod scenario;
pub mod verdict;

pub use euler::{
    arc_distance, build_arc, mollifier, mollify, refine, DescentCertificate, DescentStep,
    EulerConfig, EulerError, HullMachine, MollifiedFeedback, PolygonalArc, RefinementReport,
    StageMetrics,
};
pub use expr::{FieldError, ScalarField};
pub use geometry::{
    ccone_contains_points, ccone_contains_product, cone_contains_points, cone_contains_product,
    ClosedSetSpec, ConeSpec, GeometryError,
};
pub use inclusion::{
    ConeMode, ControlSetSpec, DisturbanceMap, DisturbanceRegion, FeedbackRealization,
    InclusionError, ProductInclusion, RegionPred, SelectionPolicy, Trajectory,
};
pub use interval::{ConeTag, Interval, IntervalUnion};
pub use invariance::{
    check_hamiltonian_condition, check_normal_cone_condition, check_tangent_condition,
    falsify_invariance, CheckRegion, EscapeRecord, FalsifyReport, InvarianceTarget,
};
pub use monotone::{
    check_monotone_cone, check_monotone_gamma, simulate_order_preservation, violation_csv,
    OrderError, OrderKind, OrderSpec, OrderViolation, OrderedPairSample,
};
pub use sample::BoxRegion;
pub use scenario::{load_scenario, parse_scenario, Scenario, ScenarioError};
pub use verdict::{Resolution, Status, Verdict, Witness};
