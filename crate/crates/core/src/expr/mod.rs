//! Scalar expression fields over state variables `x1..xn`, control
//! variables `a1..am`, and time `t`.
//!
//! Fields are immutable expression trees built by [`ScalarField::parse`].
//! Evaluation is pure; division is guarded (denominators below
//! [`DIVIDE_GUARD`] are an error, never a silent infinity); gradients are
//! exact forward-mode derivatives and refuse points where a nonsmooth node
//! (`min`, `max`, `abs`, `sign`) is within [`KINK_TOL`] of its kink.

mod calibrate;
mod parser;

pub use calibrate::{
    estimate_growth, estimate_growth_timed, estimate_modulus, estimate_modulus_timed,
    GrowthConstants, ModulusTable,
};

use std::fmt;

use thiserror::Error;

/// Kink-activity tolerance for gradient queries.
pub const KINK_TOL: f64 = 1e-9;

/// Guarded-divide threshold on |denominator|.
pub const DIVIDE_GUARD: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("dimension mismatch: field over (n={expected_state}, m={expected_control}) evaluated with (n={got_state}, m={got_control})")]
    DimensionMismatch {
        expected_state: usize,
        expected_control: usize,
        got_state: usize,
        got_control: usize,
    },
    #[error("guarded divide: |denominator| = {denom:e} is below {DIVIDE_GUARD:e}")]
    DivideGuard { denom: f64 },
    #[error("nonsmooth point: {node} node has an active kink at the query point")]
    NonsmoothPoint { node: &'static str },
    #[error("growth bound violated: |value| = {value} exceeds inflated affine bound {bound} at a sample with norm {norm}")]
    GrowthViolated { value: f64, bound: f64, norm: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Node {
    Const(f64),
    State(usize),
    Control(usize),
    Time,
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Min(Box<Node>, Box<Node>),
    Max(Box<Node>, Box<Node>),
    Abs(Box<Node>),
    Sign(Box<Node>),
    Exp(Box<Node>),
    Sin(Box<Node>),
    Cos(Box<Node>),
    Pow(Box<Node>, u32),
}

impl Node {
    fn is_smooth(&self) -> bool {
        match self {
            Node::Const(_) | Node::State(_) | Node::Control(_) | Node::Time => true,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.is_smooth() && b.is_smooth()
            }
            Node::Min(_, _) | Node::Max(_, _) | Node::Abs(_) | Node::Sign(_) => false,
            Node::Exp(a) | Node::Sin(a) | Node::Cos(a) => a.is_smooth(),
            Node::Pow(a, _) => a.is_smooth(),
        }
    }

    fn uses_time(&self) -> bool {
        match self {
            Node::Time => true,
            Node::Const(_) | Node::State(_) | Node::Control(_) => false,
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Min(a, b)
            | Node::Max(a, b) => a.uses_time() || b.uses_time(),
            Node::Abs(a) | Node::Sign(a) | Node::Exp(a) | Node::Sin(a) | Node::Cos(a) => {
                a.uses_time()
            }
            Node::Pow(a, _) => a.uses_time(),
        }
    }

    fn shift(&self, state_off: usize, control_off: usize) -> Node {
        let s = |n: &Node| Box::new(n.shift(state_off, control_off));
        match self {
            Node::Const(v) => Node::Const(*v),
            Node::State(i) => Node::State(i + state_off),
            Node::Control(j) => Node::Control(j + control_off),
            Node::Time => Node::Time,
            Node::Add(a, b) => Node::Add(s(a), s(b)),
            Node::Sub(a, b) => Node::Sub(s(a), s(b)),
            Node::Mul(a, b) => Node::Mul(s(a), s(b)),
            Node::Div(a, b) => Node::Div(s(a), s(b)),
            Node::Min(a, b) => Node::Min(s(a), s(b)),
            Node::Max(a, b) => Node::Max(s(a), s(b)),
            Node::Abs(a) => Node::Abs(s(a)),
            Node::Sign(a) => Node::Sign(s(a)),
            Node::Exp(a) => Node::Exp(s(a)),
            Node::Sin(a) => Node::Sin(s(a)),
            Node::Cos(a) => Node::Cos(s(a)),
            Node::Pow(a, k) => Node::Pow(s(a), *k),
        }
    }

    fn render(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(v) => write!(f, "{v}"),
            Node::State(i) => write!(f, "x{}", i + 1),
            Node::Control(j) => write!(f, "a{}", j + 1),
            Node::Time => write!(f, "t"),
            Node::Add(a, b) => binary(f, a, "+", b),
            Node::Sub(a, b) => binary(f, a, "-", b),
            Node::Mul(a, b) => binary(f, a, "*", b),
            Node::Div(a, b) => binary(f, a, "/", b),
            Node::Min(a, b) => call2(f, "min", a, b),
            Node::Max(a, b) => call2(f, "max", a, b),
            Node::Abs(a) => call1(f, "abs", a),
            Node::Sign(a) => call1(f, "sign", a),
            Node::Exp(a) => call1(f, "exp", a),
            Node::Sin(a) => call1(f, "sin", a),
            Node::Cos(a) => call1(f, "cos", a),
            Node::Pow(a, k) => {
                write!(f, "(")?;
                a.render(f)?;
                write!(f, ")^{k}")
            }
        }
    }
}

fn binary(f: &mut fmt::Formatter<'_>, a: &Node, op: &str, b: &Node) -> fmt::Result {
    write!(f, "(")?;
    a.render(f)?;
    write!(f, " {op} ")?;
    b.render(f)?;
    write!(f, ")")
}

fn call1(f: &mut fmt::Formatter<'_>, name: &str, a: &Node) -> fmt::Result {
    write!(f, "{name}(")?;
    a.render(f)?;
    write!(f, ")")
}

fn call2(f: &mut fmt::Formatter<'_>, name: &str, a: &Node, b: &Node) -> fmt::Result {
    write!(f, "{name}(")?;
    a.render(f)?;
    write!(f, ", ")?;
    b.render(f)?;
    write!(f, ")")
}

/// Mathematical sign: -1 / 0 / +1 (not `f64::signum`, which maps 0 to 1).
fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// An immutable scalar expression over `(x, a, t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    node: Node,
    state_dim: usize,
    control_dim: usize,
    smooth: bool,
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.node.render(f)
    }
}

impl ScalarField {
    /// Parses an infix expression. Grammar:
    ///
    /// ```text
    /// expr   := term (('+' | '-') term)*
    /// term   := factor (('*' | '/') factor)*
    /// factor := '-' factor | power
    /// power  := atom ('^' nonneg-integer)?
    /// atom   := number | 'x'k | 'a'k | 't' | fn1 '(' expr ')'
    ///         | fn2 '(' expr ',' expr ')' | '(' expr ')'
    /// fn1    := abs | sign | exp | sin | cos      fn2 := min | max
    /// ```
    ///
    /// Variable indices are 1-based and validated against `(n, m)`.
    pub fn parse(src: &str, n: usize, m: usize) -> Result<Self, FieldError> {
        let node = parser::parse(src, n, m)?;
        let smooth = node.is_smooth();
        Ok(ScalarField { node, state_dim: n, control_dim: m, smooth })
    }

    pub fn constant(v: f64, n: usize, m: usize) -> Self {
        ScalarField { node: Node::Const(v), state_dim: n, control_dim: m, smooth: true }
    }

    /// The pointwise negation, sharing dimensions and smoothness.
    pub fn negate(&self) -> ScalarField {
        ScalarField {
            node: Node::Sub(Box::new(Node::Const(0.0)), Box::new(self.node.clone())),
            state_dim: self.state_dim,
            control_dim: self.control_dim,
            smooth: self.smooth,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn control_dim(&self) -> usize {
        self.control_dim
    }

    /// True iff the tree contains no `min`, `max`, `abs`, `sign` node.
    /// Recomputed from the tree at construction, never user-set.
    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    pub fn uses_time(&self) -> bool {
        self.node.uses_time()
    }

    fn check_dims(&self, x: &[f64], a: &[f64]) -> Result<(), FieldError> {
        if x.len() != self.state_dim || a.len() != self.control_dim {
            return Err(FieldError::DimensionMismatch {
                expected_state: self.state_dim,
                expected_control: self.control_dim,
                got_state: x.len(),
                got_control: a.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], a: &[f64], t: f64) -> Result<f64, FieldError> {
        self.check_dims(x, a)?;
        eval_node(&self.node, x, a, t)
    }

    /// Evaluation for control-free fields at `t = 0`.
    pub fn eval_state(&self, x: &[f64]) -> Result<f64, FieldError> {
        self.eval(x, &vec![0.0; self.control_dim], 0.0)
    }

    /// Forward-mode gradient in the state variables at `(x, a, t)`.
    pub fn gradient_at(&self, x: &[f64], a: &[f64], t: f64) -> Result<Vec<f64>, FieldError> {
        self.check_dims(x, a)?;
        let (_, grad) = eval_dual(&self.node, x, a, t)?;
        Ok(grad)
    }

    /// Gradient in the state variables with controls zeroed and `t = 0`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        self.gradient_at(x, &vec![0.0; self.control_dim], 0.0)
    }

    /// Re-dimensions the field into a larger product space: state indices
    /// move up by `state_off` within `new_n` and control indices by
    /// `control_off` within `new_m`.
    pub fn shift_vars(
        &self,
        state_off: usize,
        new_n: usize,
        control_off: usize,
        new_m: usize,
    ) -> ScalarField {
        assert!(self.state_dim + state_off <= new_n);
        assert!(self.control_dim + control_off <= new_m);
        let node = self.node.shift(state_off, control_off);
        let smooth = node.is_smooth();
        ScalarField { node, state_dim: new_n, control_dim: new_m, smooth }
    }
}

fn eval_node(node: &Node, x: &[f64], a: &[f64], t: f64) -> Result<f64, FieldError> {
    Ok(match node {
        Node::Const(v) => *v,
        Node::State(i) => x[*i],
        Node::Control(j) => a[*j],
        Node::Time => t,
        Node::Add(p, q) => eval_node(p, x, a, t)? + eval_node(q, x, a, t)?,
        Node::Sub(p, q) => eval_node(p, x, a, t)? - eval_node(q, x, a, t)?,
        Node::Mul(p, q) => eval_node(p, x, a, t)? * eval_node(q, x, a, t)?,
        Node::Div(p, q) => {
            let den = eval_node(q, x, a, t)?;
            if den.abs() < DIVIDE_GUARD {
                return Err(FieldError::DivideGuard { denom: den.abs() });
            }
            eval_node(p, x, a, t)? / den
        }
        Node::Min(p, q) => eval_node(p, x, a, t)?.min(eval_node(q, x, a, t)?),
        Node::Max(p, q) => eval_node(p, x, a, t)?.max(eval_node(q, x, a, t)?),
        Node::Abs(p) => eval_node(p, x, a, t)?.abs(),
        Node::Sign(p) => sgn(eval_node(p, x, a, t)?),
        Node::Exp(p) => eval_node(p, x, a, t)?.exp(),
        Node::Sin(p) => eval_node(p, x, a, t)?.sin(),
        Node::Cos(p) => eval_node(p, x, a, t)?.cos(),
        Node::Pow(p, k) => eval_node(p, x, a, t)?.powi(*k as i32),
    })
}

/// Value plus state-gradient in one pass. Kink activity is checked against
/// [`KINK_TOL`] on the argument of the nonsmooth node.
fn eval_dual(node: &Node, x: &[f64], a: &[f64], t: f64) -> Result<(f64, Vec<f64>), FieldError> {
    let n = x.len();
    let zero = || vec![0.0; n];
    Ok(match node {
        Node::Const(v) => (*v, zero()),
        Node::State(i) => {
            let mut g = zero();
            g[*i] = 1.0;
            (x[*i], g)
        }
        Node::Control(j) => (a[*j], zero()),
        Node::Time => (t, zero()),
        Node::Add(p, q) => {
            let (pv, pg) = eval_dual(p, x, a, t)?;
            let (qv, qg) = eval_dual(q, x, a, t)?;
            (pv + qv, combine(pg, qg, 1.0, 1.0))
        }
        Node::Sub(p, q) => {
            let (pv, pg) = eval_dual(p, x, a, t)?;
            let (qv, qg) = eval_dual(q, x, a, t)?;
            (pv - qv, combine(pg, qg, 1.0, -1.0))
        }
        Node::Mul(p, q) => {
            let (pv, pg) = eval_dual(p, x, a, t)?;
            let (qv, qg) = eval_dual(q, x, a, t)?;
            (pv * qv, combine(pg, qg, qv, pv))
        }
        Node::Div(p, q) => {
            let (pv, pg) = eval_dual(p, x, a, t)?;
            let (qv, qg) = eval_dual(q, x, a, t)?;
            if qv.abs() < DIVIDE_GUARD {
                return Err(FieldError::DivideGuard { denom: qv.abs() });
            }
            (pv / qv, combine(pg, qg, 1.0 / qv, -pv / (qv * qv)))
        }
        Node::Min(p, q) => {
            let (pv, pg) = eval_dual(p, x, a, t)?;
            let (qv, qg) = eval_dual(q, x, a, t)?;
            if (pv - qv).abs() < KINK_TOL {
                return Err(FieldError::NonsmoothPoint { node: "min" });
            }
            if pv < qv {
                (pv, pg)
            } else {
                (qv, qg)
            }
        }
        Node::Max(p, q) => {
            let (pv, pg) = eval_dual(p, x, a, t)?;
            let (qv, qg) = eval_dual(q, x, a, t)?;
            if (pv - qv).abs() < KINK_TOL {
                return Err(FieldError::NonsmoothPoint { node: "max" });
            }
            if pv > qv {
                (pv, pg)
            } else {
                (qv, qg)
            }
        }
        Node::Abs(p) => {
            let (pv, pg) = eval_dual(p, x, a, t)?;
            if pv.abs() < KINK_TOL {
                return Err(FieldError::NonsmoothPoint { node: "abs" });
            }
            let s = sgn(pv);
            (pv.abs(), scale(pg, s))
        }
        Node::Sign(p) => {
            let (pv, _) = eval_dual(p, x, a, t)?;
            if pv.abs() < KINK_TOL {
                return Err(FieldError::NonsmoothPoint { node: "sign" });
            }
            (sgn(pv), zero())
        }
        Node::Exp(p) => {
            let (pv, pg) = eval_dual(p, x, a, t)?;
            let v = pv.exp();
            (v, scale(pg, v))
        }
        Node::Sin(p) => {
            let (pv, pg) = eval_dual(p, x, a, t)?;
            (pv.sin(), scale(pg, pv.cos()))
        }
        Node::Cos(p) => {
            let (pv, pg) = eval_dual(p, x, a, t)?;
            (pv.cos(), scale(pg, -pv.sin()))
        }
        Node::Pow(p, k) => {
            let (pv, pg) = eval_dual(p, x, a, t)?;
            let k = *k;
            if k == 0 {
                (1.0, zero())
            } else {
                (pv.powi(k as i32), scale(pg, k as f64 * pv.powi(k as i32 - 1)))
            }
        }
    })
}

fn combine(mut a: Vec<f64>, b: Vec<f64>, ca: f64, cb: f64) -> Vec<f64> {
    for (ai, bi) in a.iter_mut().zip(b) {
        *ai = ca * *ai + cb * bi;
    }
    a
}

fn scale(mut a: Vec<f64>, c: f64) -> Vec<f64> {
    for ai in a.iter_mut() {
        *ai *= c;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(src: &str, n: usize, m: usize) -> ScalarField {
        ScalarField::parse(src, n, m).expect(src)
    }

    #[test]
    fn eval_basic_arithmetic() {
        assert_eq!(field("x1^2", 1, 0).eval_state(&[0.5]).unwrap(), 0.25);
        assert_eq!(field("sign(x1)", 1, 0).eval_state(&[-0.3]).unwrap(), -1.0);
        assert_eq!(field("x2 - x1", 2, 0).eval_state(&[1.0, 3.0]).unwrap(), 2.0);
    }

    #[test]
    fn eval_controls_and_time() {
        let f = field("(1 + a1) * x1 + t", 1, 1);
        assert_eq!(f.eval(&[2.0], &[0.5], 0.25).unwrap(), 3.25);
    }

    #[test]
    fn sign_of_zero_is_zero() {
        assert_eq!(field("sign(x1)", 1, 0).eval_state(&[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn divide_guard_rejects_small_denominators() {
        let f = field("1 / x1", 1, 0);
        assert!(matches!(
            f.eval_state(&[1e-13]),
            Err(FieldError::DivideGuard { .. })
        ));
        assert_eq!(f.eval_state(&[2.0]).unwrap(), 0.5);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let f = field("x1", 1, 0);
        assert!(matches!(
            f.eval(&[1.0, 2.0], &[], 0.0),
            Err(FieldError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gradient_of_square() {
        let g = field("x1^2", 1, 0).gradient(&[0.5]).unwrap();
        assert_eq!(g, vec![1.0]);
    }

    #[test]
    fn negation_flips_values_and_gradients() {
        let f = field("x1^2 + 3 * x2", 2, 0);
        let neg = f.negate();
        assert!(neg.is_smooth());
        let x = [0.5, -2.0];
        assert_eq!(neg.eval_state(&x).unwrap(), -f.eval_state(&x).unwrap());
        let g = f.gradient(&x).unwrap();
        let gn = neg.gradient(&x).unwrap();
        assert_eq!(gn, vec![-g[0], -g[1]]);
    }

    #[test]
    fn gradient_at_minimum_is_zero() {
        let g = field("x1^2 + x2^2", 2, 0).gradient(&[0.0, 0.0]).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn gradient_rejects_kinks() {
        assert!(matches!(
            field("abs(x1)", 1, 0).gradient(&[0.0]),
            Err(FieldError::NonsmoothPoint { node: "abs" })
        ));
        assert!(matches!(
            field("min(x1, 2 * x1)", 1, 0).gradient(&[0.0]),
            Err(FieldError::NonsmoothPoint { node: "min" })
        ));
        // away from the kink the derivative follows the active branch
        assert_eq!(field("abs(x1)", 1, 0).gradient(&[0.5]).unwrap(), vec![1.0]);
        assert_eq!(field("abs(x1)", 1, 0).gradient(&[-0.5]).unwrap(), vec![-1.0]);
    }

    #[test]
    fn gradient_chain_rules() {
        let f = field("exp(2 * x1) + sin(x2) * cos(x1)", 2, 0);
        let x = [0.3, -0.7];
        let g = f.gradient(&x).unwrap();
        let expected0 = 2.0 * (2.0f64 * 0.3).exp() + (-0.7f64).sin() * -(0.3f64).sin();
        let expected1 = (-0.7f64).cos() * (0.3f64).cos();
        assert!((g[0] - expected0).abs() < 1e-12);
        assert!((g[1] - expected1).abs() < 1e-12);
    }

    #[test]
    fn smoothness_flag_recomputed() {
        assert!(field("x1^2 + exp(x1)", 1, 0).is_smooth());
        assert!(!field("x1 + abs(x2)", 2, 0).is_smooth());
        assert!(!field("sign(t)", 0, 0).is_smooth());
    }

    #[test]
    fn shift_vars_reindexes() {
        let f = field("x1 + a1", 1, 1).shift_vars(2, 3, 1, 2);
        assert_eq!(f.eval(&[0.0, 0.0, 5.0], &[0.0, 3.0], 0.0).unwrap(), 8.0);
    }

    #[test]
    fn central_difference_agreement_on_smooth_fields() {
        let fields = [
            field("x1^2 - 3 * x2 + x1 * x2", 2, 0),
            field("exp(x1) * sin(x2)", 2, 0),
            field("1 / (2 + x1)", 2, 0),
            field("cos(x1 * x2) + x2^3", 2, 0),
        ];
        let h = 1e-5;
        for f in &fields {
            for p in crate::sample::BoxRegion::new(vec![-1.0, -1.0], vec![1.0, 1.0])
                .halton_samples(25, 0)
            {
                let g = f.gradient(&p).unwrap();
                for i in 0..2 {
                    let mut hi = p.clone();
                    let mut lo = p.clone();
                    hi[i] += h;
                    lo[i] -= h;
                    let cd =
                        (f.eval_state(&hi).unwrap() - f.eval_state(&lo).unwrap()) / (2.0 * h);
                    let tol = 1e-4 * (1.0 + crate::sample::sup_norm(&g));
                    assert!(
                        (g[i] - cd).abs() <= tol,
                        "field {f}: forward-mode {} vs central {} at {:?}",
                        g[i],
                        cd,
                        p
                    );
                }
            }
        }
    }
}
