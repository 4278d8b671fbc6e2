//! Check outcomes with witnesses and the resolution they were obtained at.
//!
//! Every verifier in this crate returns a `Verdict` rather than a bare bool:
//! a PASS is always a pass at a stated grid/sample/tolerance resolution, a
//! FAIL always carries at least one concrete witness, and INCONCLUSIVE is
//! reserved for runs whose numerical budget could not separate the margins.

use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Inconclusive => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// A concrete point where a check failed (or a representative probe).
#[derive(Clone, Debug, Default)]
pub struct Witness {
    /// Time coordinate when the witness comes from a trajectory.
    pub t: Option<f64>,
    pub x: Vec<f64>,
    /// Normal vector, subgradient, or probe direction, depending on check.
    pub direction: Vec<f64>,
    pub velocity: Vec<f64>,
    /// How far past the tolerance the violated inequality is.
    pub margin: f64,
    pub note: String,
}

/// The discretization a verdict is relative to.
#[derive(Clone, Debug, Default)]
pub struct Resolution {
    /// Grid spacing for gridded checks (0 when not applicable).
    pub grid: f64,
    /// Number of sampled points/pairs/trials.
    pub samples: usize,
    pub tol: f64,
    /// Free-form extras (control grid size, seeds, budgets), stable order.
    pub extras: Vec<(String, String)>,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub status: Status,
    pub reason: String,
    pub witnesses: Vec<Witness>,
    pub resolution: Resolution,
}

impl Verdict {
    pub fn pass(reason: impl Into<String>, resolution: Resolution) -> Self {
        Verdict { status: Status::Pass, reason: reason.into(), witnesses: Vec::new(), resolution }
    }

    pub fn fail(reason: impl Into<String>, witnesses: Vec<Witness>, resolution: Resolution) -> Self {
        assert!(!witnesses.is_empty(), "a FAIL verdict needs a witness");
        Verdict { status: Status::Fail, reason: reason.into(), witnesses, resolution }
    }

    pub fn inconclusive(reason: impl Into<String>, resolution: Resolution) -> Self {
        Verdict {
            status: Status::Inconclusive,
            reason: reason.into(),
            witnesses: Vec::new(),
            resolution,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Stable plain-text rendering (shortest round-trip float formatting, so
    /// identical runs serialize identically).
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "status: {}", self.status.label());
        let _ = writeln!(out, "reason: {}", self.reason);
        let _ = writeln!(out, "resolution:");
        let _ = writeln!(out, "  grid: {:?}", self.resolution.grid);
        let _ = writeln!(out, "  samples: {}", self.resolution.samples);
        let _ = writeln!(out, "  tol: {:?}", self.resolution.tol);
        for (k, v) in &self.resolution.extras {
            let _ = writeln!(out, "  {k}: {v}");
        }
        for (i, w) in self.witnesses.iter().enumerate() {
            let _ = writeln!(out, "witness[{i}]:");
            if let Some(t) = w.t {
                let _ = writeln!(out, "  t: {t:?}");
            }
            let _ = writeln!(out, "  x: {:?}", w.x);
            if !w.direction.is_empty() {
                let _ = writeln!(out, "  direction: {:?}", w.direction);
            }
            if !w.velocity.is_empty() {
                let _ = writeln!(out, "  velocity: {:?}", w.velocity);
            }
            let _ = writeln!(out, "  margin: {:?}", w.margin);
            if !w.note.is_empty() {
                let _ = writeln!(out, "  note: {}", w.note);
            }
        }
        out
    }
}
