//! Test functions with optional derivative oracles.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{norm, Expr};

pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type MatrixField = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;

/// `f: ℝᵈ → ℝ` with optional gradient `g`, Hessian `h` and declared Hölder
/// order `α(x)`.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    pub d: usize,
    f: ScalarField,
    grad: Option<VectorField>,
    hess: Option<MatrixField>,
    /// `f ∈ C_∞`, i.e. vanishes at infinity.
    pub vanishes: bool,
    order: Option<ScalarField>,
    /// Exact Hölder constant at a point, when known in closed form.
    pub exact_constant: Option<(Vec<f64>, f64)>,
    /// Locally constant expression with no decay.
    pub constant: bool,
    pub bounded: bool,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TestFunction({}, d={}, grad={}, hess={})",
            self.name,
            self.d,
            self.grad.is_some(),
            self.hess.is_some()
        )
    }
}

impl TestFunction {
    pub fn new(name: impl Into<String>, d: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        TestFunction {
            name: name.into(),
            d,
            f: Arc::new(f),
            grad: None,
            hess: None,
            vanishes: false,
            order: None,
            exact_constant: None,
            constant: false,
            bounded: true,
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn with_hessian(mut self, h: impl Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static) -> Self {
        self.hess = Some(Arc::new(h));
        self
    }

    pub fn with_order(mut self, a: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.order = Some(Arc::new(a));
        self
    }

    pub fn vanishing(mut self, v: bool) -> Self {
        self.vanishes = v;
        self
    }

    pub fn bounded(mut self, b: bool) -> Self {
        self.bounded = b;
        self
    }

    pub fn zero(d: usize) -> Self {
        TestFunction::new("zero", d, |_| 0.0)
            .with_gradient(move |_| vec![0.0; d])
            .with_hessian(move |_| vec![vec![0.0; d]; d])
            .vanishing(true)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.grad.as_ref().map(|g| g(x))
    }

    pub fn hessian(&self, x: &[f64]) -> Option<Vec<Vec<f64>>> {
        self.hess.as_ref().map(|h| h(x))
    }

    pub fn has_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn has_hessian(&self) -> bool {
        self.hess.is_some()
    }

    /// Declared Hölder order at `x`.
    pub fn order_at(&self, x: &[f64]) -> Option<f64> {
        self.order.as_ref().map(|a| a(x))
    }

    /// `a·f₁ + b·f₂`; oracles survive when both sides carry them.
    pub fn linear(a: f64, f1: &TestFunction, b: f64, f2: &TestFunction) -> Result<TestFunction> {
        if f1.d != f2.d {
            return Err(Error::contract("linear combination of functions on different dimensions"));
        }
        let (p, q) = (f1.f.clone(), f2.f.clone());
        let mut out = TestFunction::new(
            format!("{a}*{}+{b}*{}", f1.name, f2.name),
            f1.d,
            move |x| a * p(x) + b * q(x),
        )
        .vanishing(f1.vanishes && f2.vanishes)
        .bounded(f1.bounded && f2.bounded);
        if let (Some(p), Some(q)) = (f1.grad.clone(), f2.grad.clone()) {
            out = out.with_gradient(move |x| p(x).iter().zip(q(x)).map(|(u, v)| a * u + b * v).collect());
        }
        if let (Some(p), Some(q)) = (f1.hess.clone(), f2.hess.clone()) {
            out = out.with_hessian(move |x| {
                p(x).iter()
                    .zip(q(x))
                    .map(|(r, s)| r.iter().zip(s).map(|(u, v)| a * u + b * v).collect())
                    .collect()
            });
        }
        if let (Some(p), Some(q)) = (f1.order.clone(), f2.order.clone()) {
            out = out.with_order(move |x| p(x).min(q(x)));
        }
        Ok(out)
    }

    /// Checks the supplied oracles against finite differences at `x`:
    /// `|g − g_fd| ≤ max(1e−6, 1e−4·|g|)` and likewise for `h`, which must
    /// also be symmetric.
    pub fn check_oracles(&self, x: &[f64]) -> Result<()> {
        let d = self.d;
        let fd = |f: &dyn Fn(&[f64]) -> f64, i: usize| {
            let h = 1e-3 * x[i].abs().max(1.0);
            let at = |s: f64| {
                let mut z = x.to_vec();
                z[i] += s * h;
                f(&z)
            };
            (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) / (12.0 * h)
        };
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-6f64.max(1e-4 * a.abs());
        if let Some(g) = &self.grad {
            let gx = g(x);
            if gx.len() != d {
                return Err(Error::contract(format!("gradient of {} has length {}", self.name, gx.len())));
            }
            for (i, gi) in gx.iter().enumerate() {
                let approx = fd(&*self.f, i);
                if !close(*gi, approx) {
                    return Err(Error::contract(format!(
                        "gradient of {} disagrees with finite differences in coordinate {i}: {gi} vs {approx}",
                        self.name
                    )));
                }
            }
            if let Some(h) = &self.hess {
                let hx = h(x);
                for i in 0..d {
                    for j in 0..d {
                        if hx[i][j] != hx[j][i] {
                            return Err(Error::contract(format!("Hessian of {} is not symmetric", self.name)));
                        }
                        let gj = |z: &[f64]| g(z)[j];
                        let approx = fd(&gj, i);
                        if !close(hx[i][j], approx) {
                            return Err(Error::contract(format!(
                                "Hessian of {} disagrees with finite differences at ({i},{j}): {} vs {approx}",
                                self.name, hx[i][j]
                            )));
                        }
                    }
                }
            }
        } else if self.hess.is_some() {
            return Err(Error::contract("Hessian oracle without gradient"));
        }
        Ok(())
    }
}

/// Serializable description of a test function.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// `exp(−|x−c|²/s²)`
    Gaussian {
        d: usize,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// Smooth plateau: 1 on `|x−c| ≤ inner`, 0 on `|x−c| ≥ outer`.
    Bump {
        d: usize,
        #[serde(default)]
        inner: f64,
        #[serde(default = "one")]
        outer: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// `|x−c|^β exp(−|x−c|²)`, Hölder of order `β` (β ≤ 1) with constant 1 at `c`.
    PowerGaussian {
        d: usize,
        beta: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// `cos(ξ·x)`
    Cos { freq: Vec<f64> },
    /// `sin(ξ·x)`
    Sin { freq: Vec<f64> },
    /// `|x|²` times a smooth cutoff equal to 1 on `|x| ≤ cutoff`.
    Quadratic {
        d: usize,
        #[serde(default = "two")]
        cutoff: f64,
    },
    /// Unbounded `|x|²` (for stopped experiments).
    Square { d: usize },
    Zero { d: usize },
    Expr {
        d: usize,
        f: Expr,
        #[serde(default)]
        grad: Option<Vec<Expr>>,
        #[serde(default)]
        hess: Option<Vec<Vec<Expr>>>,
        #[serde(default)]
        vanishes: bool,
        #[serde(default)]
        order: Option<Expr>,
        /// Declared `sup |f| < ∞`.
        #[serde(default = "yes")]
        bounded: bool,
    },
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

/// Radial profiles `φ(r)` with first and second derivatives.
#[derive(Clone, Copy, Debug)]
enum Radial {
    Gaussian { s: f64 },
    Plateau { inner: f64, outer: f64 },
    PowerGauss { beta: f64 },
    QuadCut { cut: f64 },
    Square,
}

/// Smooth step `S(t)` from 0 (t ≤ 0) to 1 (t ≥ 1) with `S'`, `S''`.
fn smooth_step(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let e = |u: f64| (-1.0 / u).exp();
    let (s, c) = (t, 1.0 - t);
    let (a, b) = (e(s), e(c));
    let (a1, b1) = (a / (s * s), -b / (c * c));
    let (a2, b2) = (a * (1.0 - 2.0 * s) / s.powi(4), b * (1.0 - 2.0 * c) / c.powi(4));
    let den = a + b;
    let num = a1 * b - a * b1;
    let num1 = a2 * b - a * b2;
    (a / den, num / (den * den), (num1 * den - 2.0 * num * (a1 + b1)) / den.powi(3))
}

impl Radial {
    fn jet(self, r: f64) -> (f64, f64, f64) {
        match self {
            Radial::Gaussian { s } => {
                let e = (-(r * r) / (s * s)).exp();
                let k = 2.0 / (s * s);
                (e, -k * r * e, (k * k * r * r - k) * e)
            }
            Radial::Plateau { inner, outer } => {
                let w = outer - inner;
                let (v, v1, v2) = smooth_step((r - inner) / w);
                (1.0 - v, -v1 / w, -v2 / (w * w))
            }
            Radial::PowerGauss { beta } => {
                let e = (-r * r).exp();
                let p = |k: f64| if r == 0.0 { if k == 0.0 { 1.0 } else if k > 0.0 { 0.0 } else { f64::INFINITY } } else { r.powf(k) };
                (
                    p(beta) * e,
                    (beta * p(beta - 1.0) - 2.0 * p(beta + 1.0)) * e,
                    (beta * (beta - 1.0) * p(beta - 2.0) - 2.0 * (2.0 * beta + 1.0) * p(beta) + 4.0 * p(beta + 2.0)) * e,
                )
            }
            Radial::QuadCut { cut } => {
                let (c, c1, c2) = Radial::Plateau { inner: cut, outer: cut + 1.0 }.jet(r);
                (r * r * c, 2.0 * r * c + r * r * c1, 2.0 * c + 4.0 * r * c1 + r * r * c2)
            }
            Radial::Square => (r * r, 2.0 * r, 2.0),
        }
    }

    /// Highest derivative order available everywhere (0, 1 or 2).
    fn smoothness(self) -> u8 {
        match self {
            Radial::PowerGauss { beta } if beta <= 1.0 => 0,
            Radial::PowerGauss { beta } if beta < 2.0 => 1,
            _ => 2,
        }
    }
}

fn radial(name: String, d: usize, c: Vec<f64>, prof: Radial, vanishes: bool) -> TestFunction {
    let shift = move |x: &[f64]| -> (Vec<f64>, f64) {
        let z: Vec<f64> = x.iter().zip(&c).map(|(a, b)| a - b).collect();
        let r = norm(&z);
        (z, r)
    };
    let sh = shift.clone();
    let mut f = TestFunction::new(name, d, move |x| prof.jet(sh(x).1).0).vanishing(vanishes);
    let smooth = prof.smoothness();
    if smooth >= 1 {
        let sh = shift.clone();
        f = f.with_gradient(move |x| {
            let (z, r) = sh(x);
            if r == 0.0 {
                return vec![0.0; z.len()];
            }
            let (_, p1, _) = prof.jet(r);
            z.iter().map(|v| p1 * v / r).collect()
        });
    }
    if smooth >= 2 {
        f = f.with_hessian(move |x| {
            let (z, r) = shift(x);
            let n = z.len();
            if r == 0.0 {
                let (_, _, p2) = prof.jet(0.0);
                return (0..n).map(|i| (0..n).map(|j| if i == j { p2 } else { 0.0 }).collect()).collect();
            }
            let (_, p1, p2) = prof.jet(r);
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let uu = z[i] * z[j] / (r * r);
                            let id = if i == j { 1.0 } else { 0.0 };
                            p2 * uu + p1 / r * (id - uu)
                        })
                        .collect()
                })
                .collect()
        });
    }
    f
}

fn center_of(center: &Option<Vec<f64>>, d: usize) -> Result<Vec<f64>> {
    match center {
        None => Ok(vec![0.0; d]),
        Some(c) if c.len() == d => Ok(c.clone()),
        Some(c) => Err(Error::domain(format!("center has length {} but d = {d}", c.len()))),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

impl FunctionSpec {
    pub fn dim(&self) -> usize {
        match self {
            FunctionSpec::Cos { freq } | FunctionSpec::Sin { freq } => freq.len(),
            FunctionSpec::Gaussian { d, .. }
            | FunctionSpec::Bump { d, .. }
            | FunctionSpec::PowerGaussian { d, .. }
            | FunctionSpec::Quadratic { d, .. }
            | FunctionSpec::Square { d }
            | FunctionSpec::Zero { d }
            | FunctionSpec::Expr { d, .. } => *d,
        }
    }

    pub fn build(&self) -> Result<TestFunction> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::domain("dimension must be positive"));
        }
        let f = match self {
            FunctionSpec::Gaussian { scale, center, .. } => {
                if !(*scale > 0.0) {
                    return Err(Error::domain("gaussian scale must be positive"));
                }
                radial("gaussian".into(), d, center_of(center, d)?, Radial::Gaussian { s: *scale }, true)
            }
            FunctionSpec::Bump { inner, outer, center, .. } => {
                if !(*inner >= 0.0 && outer > inner) {
                    return Err(Error::domain("bump needs 0 ≤ inner < outer"));
                }
                radial(
                    "bump".into(),
                    d,
                    center_of(center, d)?,
                    Radial::Plateau {
                        inner: *inner,
                        outer: *outer,
                    },
                    true,
                )
            }
            FunctionSpec::PowerGaussian { beta, center, .. } => {
                if !(*beta > 0.0) {
                    return Err(Error::domain("power-gaussian exponent must be positive"));
                }
                let c = center_of(center, d)?;
                let b = *beta;
                let mut f = radial("power-gaussian".into(), d, c.clone(), Radial::PowerGauss { beta: b }, true);
                if b <= 1.0 {
                    f = f.with_order(move |_| b);
                    f.exact_constant = Some((c, 1.0));
                }
                f
            }
            FunctionSpec::Cos { freq } | FunctionSpec::Sin { freq } => {
                let is_cos = matches!(self, FunctionSpec::Cos { .. });
                let (w, w1, w2) = (freq.clone(), freq.clone(), freq.clone());
                let name = if is_cos { "cos" } else { "sin" };
                let val = move |t: f64| if is_cos { t.cos() } else { t.sin() };
                let der = move |t: f64| if is_cos { -t.sin() } else { t.cos() };
                TestFunction::new(name, d, move |x| val(dot(&w, x)))
                    .with_gradient(move |x| {
                        let s = der(dot(&w1, x));
                        w1.iter().map(|v| s * v).collect()
                    })
                    .with_hessian(move |x| {
                        let c = -val(dot(&w2, x));
                        w2.iter().map(|a| w2.iter().map(|b| c * a * b).collect()).collect()
                    })
            }
            FunctionSpec::Quadratic { cutoff, .. } => {
                if !(*cutoff > 0.0) {
                    return Err(Error::domain("cutoff must be positive"));
                }
                radial("quadratic".into(), d, vec![0.0; d], Radial::QuadCut { cut: *cutoff }, true)
            }
            FunctionSpec::Square { .. } => {
                radial("square".into(), d, vec![0.0; d], Radial::Square, false).bounded(false)
            }
            FunctionSpec::Zero { .. } => TestFunction::zero(d),
            FunctionSpec::Expr {
                f,
                grad,
                hess,
                vanishes,
                order,
                bounded,
                ..
            } => {
                let e = f.clone();
                let mut t = TestFunction::new(format!("expr({})", f.source()), d, move |x| e.eval(x)).vanishing(*vanishes).bounded(*bounded);
                t.constant = f.is_constant();
                if let Some(g) = grad {
                    if g.len() != d {
                        return Err(Error::domain(format!("gradient needs {d} components, got {}", g.len())));
                    }
                    let g = g.clone();
                    t = t.with_gradient(move |x| g.iter().map(|e| e.eval(x)).collect());
                }
                if let Some(h) = hess {
                    if h.len() != d || h.iter().any(|row| row.len() != d) {
                        return Err(Error::domain(format!("Hessian must be {d}×{d}")));
                    }
                    if grad.is_none() {
                        return Err(Error::contract("Hessian oracle without gradient"));
                    }
                    let h = h.clone();
                    t = t.with_hessian(move |x| h.iter().map(|row| row.iter().map(|e| e.eval(x)).collect()).collect());
                }
                if let Some(a) = order {
                    let a = a.clone();
                    t = t.with_order(move |x| a.eval(x));
                }
                t
            }
        };
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(json: &str) -> TestFunction {
        serde_json::from_str::<FunctionSpec>(json).unwrap().build().unwrap()
    }

    #[test]
    fn catalog_oracles_match_finite_differences() {
        let fs = [
            r#"{"kind":"gaussian","d":2,"scale":1.5,"center":[0.2,-0.1]}"#,
            r#"{"kind":"bump","d":1,"inner":0.5,"outer":2.0}"#,
            r#"{"kind":"bump","d":2,"inner":0.0,"outer":1.5}"#,
            r#"{"kind":"power-gaussian","d":1,"beta":1.5}"#,
            r#"{"kind":"power-gaussian","d":2,"beta":2.5}"#,
            r#"{"kind":"cos","freq":[1.0,-2.0]}"#,
            r#"{"kind":"sin","freq":[0.5]}"#,
            r#"{"kind":"quadratic","d":2}"#,
            r#"{"kind":"expr","d":1,"f":"exp(-x^2)","grad":["-2*x*exp(-x^2)"],"hess":[["(4*x^2-2)*exp(-x^2)"]]}"#,
        ];
        for s in fs {
            let f = spec(s);
            for x in [[0.3, 0.7], [1.2, -0.4], [2.4, 0.1], [0.0, 0.0]] {
                let x = &x[..f.d];
                // derivatives of |x|^β are only Hölder at the centre
                if f.name == "power-gaussian" && norm(x) == 0.0 {
                    continue;
                }
                f.check_oracles(x).unwrap_or_else(|e| panic!("{s} at {x:?}: {e}"));
            }
        }
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let f = TestFunction::new("sq", 1, |x| x[0] * x[0]).with_gradient(|x| vec![3.0 * x[0]]);
        assert!(f.check_oracles(&[1.0]).is_err());
    }

    #[test]
    fn plateau_is_flat_inside() {
        let f = spec(r#"{"kind":"bump","d":1,"inner":1.0,"outer":2.0}"#);
        assert_eq!(f.eval(&[0.7]), 1.0);
        assert_eq!(f.eval(&[-1.0]), 1.0);
        assert_eq!(f.eval(&[2.0]), 0.0);
        assert!(f.eval(&[1.5]) > 0.0 && f.eval(&[1.5]) < 1.0);
    }

    #[test]
    fn power_gaussian_declares_its_order() {
        let f = spec(r#"{"kind":"power-gaussian","d":1,"beta":0.8}"#);
        assert_eq!(f.order_at(&[0.3]), Some(0.8));
        assert!(!f.has_gradient());
        assert_eq!(f.exact_constant, Some((vec![0.0], 1.0)));
    }

    #[test]
    fn linear_combination_keeps_common_oracles() {
        let a = spec(r#"{"kind":"gaussian","d":1}"#);
        let b = spec(r#"{"kind":"cos","freq":[2.0]}"#);
        let c = TestFunction::linear(2.0, &a, -0.5, &b).unwrap();
        let x = [0.4];
        assert!((c.eval(&x) - (2.0 * a.eval(&x) - 0.5 * b.eval(&x))).abs() < 1e-15);
        assert!(c.has_hessian());
        c.check_oracles(&x).unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<FunctionSpec>(r#"{"kind":"gaussian","d":1,"sigma":2}"#).is_err());
    }
}
