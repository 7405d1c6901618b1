//! The integro-differential operator `Lf(x)` in its zero-, first- and
//! second-order representations.

mod function;

pub use function::{FunctionSpec, MatrixField, ScalarField, TestFunction, VectorField};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::norm;
use crate::holder::VariableOrderFn;
use crate::measure::{c_alpha, compensator_drift, fractional_moment, LevyMeasure, Profile, Region};
use crate::quad::{self, ShellRule};
use crate::symbol::{LevyTriplet, StateTriplet, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorForm {
    /// `∫ (f(x+y) − f(x)) ν(dy)`
    ZeroOrder,
    /// `b·∇f(x) + ∫ (f(x+y) − f(x) − ∇f(x)·y 1_{|y|<1}) ν(dy)`
    FirstOrder,
    /// First-order form plus `½ tr(Q ∇²f(x))`.
    SecondOrder,
}

/// Representation matching a local Hölder order `α ∈ (0, 2]`.
pub fn select_form(alpha: f64) -> Result<GeneratorForm> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::domain(format!("Hölder order {alpha} outside (0, 2]")));
    }
    Ok(if alpha <= 1.0 {
        GeneratorForm::ZeroOrder
    } else if alpha < 2.0 {
        GeneratorForm::FirstOrder
    } else {
        GeneratorForm::SecondOrder
    })
}

/// Quadrature settings for [`apply_pointwise_with`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorOptions {
    /// Inner shells stop here when no Hessian is available; the remainder
    /// is extrapolated geometrically.
    pub inner_floor: f64,
    /// Below this radius the compensated integrand is replaced by its
    /// second-order Taylor term when a Hessian is available.
    pub taylor_radius: f64,
    /// Panel width for `|y| ≥ 1`.
    pub panel: f64,
    /// Panels stop at this radius; the rest is a tail correction.
    pub reach: f64,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        GeneratorOptions {
            inner_floor: 1e-6,
            taylor_radius: 1e-4,
            panel: 0.5,
            reach: 4096.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorValue {
    pub value: f64,
    pub abs_error: f64,
    pub form: GeneratorForm,
    /// `b·∇f(x)` and `½ tr(Q ∇²f(x))`.
    pub drift_term: f64,
    pub diffusion_term: f64,
    /// Jump integral over `|y| < 1` and `|y| ≥ 1`.
    pub inner: f64,
    pub outer: f64,
    pub evaluations: usize,
}

/// `Lf(x)` for a Lévy triplet in the requested representation.
pub fn apply_pointwise(triplet: &LevyTriplet, f: &TestFunction, x: &[f64], form: GeneratorForm) -> Result<GeneratorValue> {
    apply_pointwise_with(triplet, f, x, form, &GeneratorOptions::default())
}

pub fn apply_pointwise_with(
    triplet: &LevyTriplet,
    f: &TestFunction,
    x: &[f64],
    form: GeneratorForm,
    opts: &GeneratorOptions,
) -> Result<GeneratorValue> {
    match form {
        GeneratorForm::FirstOrder if !f.has_gradient() => {
            return Err(Error::contract(format!("first-order form needs a gradient oracle for {}", f.name)))
        }
        GeneratorForm::SecondOrder if !(f.has_gradient() && f.has_hessian()) => {
            return Err(Error::contract(format!(
                "second-order form needs gradient and Hessian oracles for {}",
                f.name
            )))
        }
        _ => {}
    }
    evaluate(triplet, f, x, form, opts)
}

/// `Δ^{α/2} f(x) = c_{α,d} ∫ (f(x+y) − f(x) − ∇f(x)·y 1_{|y|<1}) |y|^{−d−α} dy`,
/// with `ν(dy) = c_{α,d}|y|^{−d−α}dy` so that the symbol is `|ξ|^α`.
/// Symmetric pairs make the gradient term vanish, so no oracle is needed.
pub fn fractional_laplacian(f: &TestFunction, x: &[f64], alpha: f64, d: usize) -> Result<GeneratorValue> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::domain(format!("α = {alpha} outside (0, 2)")));
    }
    if f.constant {
        return Err(Error::precondition("constant function rejected: no decay flag"));
    }
    let nu = LevyMeasure::IsotropicPower {
        d,
        intensity: c_alpha(alpha, d)?,
        alpha,
        truncation: None,
    };
    let triplet = LevyTriplet::new(vec![0.0; d], vec![vec![0.0; d]; d], nu);
    let form = if alpha < 1.0 {
        GeneratorForm::ZeroOrder
    } else {
        GeneratorForm::FirstOrder
    };
    evaluate(&triplet, f, x, form, &GeneratorOptions::default())
}

fn evaluate(tr: &LevyTriplet, f: &TestFunction, x: &[f64], form: GeneratorForm, opts: &GeneratorOptions) -> Result<GeneratorValue> {
    tr.check_coefficients()?;
    let d = tr.dim();
    if x.len() != d || f.d != d {
        return Err(Error::domain(format!(
            "state has length {}, function dimension {}, triplet dimension {d}",
            x.len(),
            f.d
        )));
    }
    let compensated = form != GeneratorForm::ZeroOrder;
    if form != GeneratorForm::SecondOrder && tr.has_gaussian_part() {
        return Err(Error::precondition(format!(
            "{form:?} has no diffusion term but Q ≠ 0; use the second-order form"
        )));
    }
    if form == GeneratorForm::ZeroOrder {
        let comp = compensator_drift(&tr.measure)?;
        let gap = tr.drift.iter().zip(&comp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if gap > 1e-9 {
            return Err(Error::precondition(format!(
                "zero-order form needs b = ∫_{{|y|<1}} y ν(dy); b = {:?}, compensator = {comp:?}",
                tr.drift
            )));
        }
        if let Some(a) = f.order_at(x) {
            let m = fractional_moment(&tr.measure, a, Region::unit_ball())?;
            if m.divergent {
                return Err(Error::InsufficientRegularity(format!(
                    "∫_{{|y|≤1}} |y|^{a} ν(dy) diverges at x = {x:?}"
                )));
            }
        }
    }
    let parts = tr.measure.decompose()?;
    if !parts.pairs.is_empty() {
        parts.require_angular()?;
    }
    let fx = f.eval(x);
    let grad = if compensated { f.gradient(x) } else { None };
    let hess = f.hessian(x);
    let need_grad = compensated
        && (tr.has_drift()
            || parts.atoms.iter().any(|a| norm(&a.location) < 1.0)
            || parts.pairs.iter().any(|p| !p.symmetric));
    if need_grad && grad.is_none() {
        return Err(Error::contract(format!(
            "{form:?} with drift or asymmetric jumps needs a gradient oracle for {}",
            f.name
        )));
    }
    let g = grad.clone().unwrap_or_else(|| vec![0.0; d]);
    let drift_term = if compensated { dot(&tr.drift, &g) } else { 0.0 };
    let diffusion_term = if form == GeneratorForm::SecondOrder {
        let h = hess.as_ref().ok_or_else(|| Error::contract("second-order form needs a Hessian oracle"))?;
        0.5 * (0..d).map(|i| (0..d).map(|j| tr.diffusion[i][j] * h[j][i]).sum::<f64>()).sum::<f64>()
    } else {
        0.0
    };

    let shifted = |dir: &[f64], r: f64| -> Vec<f64> { x.iter().zip(dir).map(|(a, b)| a + r * b).collect() };

    let mut inner = 0.0;
    let mut outer = 0.0;
    let mut err = 0.0;
    let mut evals = 0;
    for a in &parts.atoms {
        let y = &a.location;
        let mut v = f.eval(&shifted(y, 1.0)) - fx;
        if norm(y) < 1.0 {
            if compensated {
                v -= dot(&g, y);
            }
            inner += a.weight * v;
        } else {
            outer += a.weight * v;
        }
    }

    let taylor = compensated && hess.is_some();
    let rule = ShellRule {
        min_radius: if taylor { 1e-12 } else { opts.inner_floor },
        ..ShellRule::default()
    };
    let diverged = |side: &str| {
        Error::InsufficientRegularity(format!(
            "inner shells along {side} do not decay at x = {x:?} ({form:?})"
        ))
    };
    for pair in &parts.pairs {
        let th = &pair.dir;
        let curv = hess.as_ref().map(|h| quad_form(h, th)).unwrap_or(0.0);
        let slope = dot(&g, th);
        let top = pair.plus.trunc().max(pair.minus.trunc()).min(1.0);
        // inner region
        if pair.symmetric && compensated {
            let p = &pair.plus;
            let h = |r: f64| {
                let w = p.density(r);
                if w == 0.0 {
                    0.0
                } else if taylor && r < opts.taylor_radius {
                    r * r * curv * w
                } else {
                    (f.eval(&shifted(th, r)) + f.eval(&shifted(th, -r)) - 2.0 * fx) * w
                }
            };
            let e = quad::inward(h, top, &rule).finite().ok_or_else(|| diverged("a symmetric pair"))?;
            inner += e.value;
            err += e.abs_error;
            evals += e.evaluations;
        } else {
            for (sign, p) in [(1.0, &pair.plus), (-1.0, &pair.minus)] {
                let h = |r: f64| {
                    let w = p.density(r);
                    if w == 0.0 {
                        0.0
                    } else if taylor && r < opts.taylor_radius {
                        0.5 * r * r * curv * w
                    } else {
                        let mut v = f.eval(&shifted(th, sign * r)) - fx;
                        if compensated {
                            v -= sign * r * slope;
                        }
                        v * w
                    }
                };
                let e = quad::inward(h, top, &rule)
                    .finite()
                    .ok_or_else(|| diverged(if sign > 0.0 { "+θ" } else { "−θ" }))?;
                inner += e.value;
                err += e.abs_error;
                evals += e.evaluations;
            }
        }
        // outer region
        let sides: Vec<(Vec<f64>, &Profile)> = if pair.symmetric {
            vec![(th.clone(), &pair.plus)]
        } else {
            vec![(th.clone(), &pair.plus), (th.iter().map(|v| -v).collect(), &pair.minus)]
        };
        for (dir, p) in sides {
            let t = p.trunc();
            if t <= 1.0 {
                continue;
            }
            let mass = p.mass_beyond(1.0);
            let (e, scale) = if pair.symmetric {
                let neg: Vec<f64> = dir.iter().map(|v| -v).collect();
                let g = |r: f64| (f.eval(&shifted(&dir, r)) + f.eval(&shifted(&neg, r))) * p.density(r);
                (outer_tail(g, p, opts), 2.0)
            } else {
                let g = |r: f64| f.eval(&shifted(&dir, r)) * p.density(r);
                (outer_tail(g, p, opts), 1.0)
            };
            outer += e.value - scale * fx * mass;
            err += e.abs_error;
            evals += e.evaluations;
        }
    }
    Ok(GeneratorValue {
        value: drift_term + diffusion_term + inner + outer,
        abs_error: err,
        form,
        drift_term,
        diffusion_term,
        inner,
        outer,
        evaluations: evals,
    })
}

fn outer_tail(g: impl Fn(f64) -> f64, p: &Profile, opts: &GeneratorOptions) -> quad::Estimate<f64> {
    let t = p.trunc();
    let beyond = if t > opts.reach { p.mass_beyond(opts.reach) } else { 0.0 };
    quad::outward_bounded(g, |r| p.density(r), 1.0, t, opts.reach, beyond, opts.panel)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn quad_form(h: &[Vec<f64>], v: &[f64]) -> f64 {
    h.iter()
        .zip(v)
        .map(|(row, vi)| vi * row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
        .sum()
}

/// Anything that yields a Lévy triplet per state.
pub trait TripletSource: Sync {
    fn dim(&self) -> usize;
    fn triplet_at(&self, x: &[f64]) -> Result<LevyTriplet>;
}

impl TripletSource for StateTriplet {
    fn dim(&self) -> usize {
        StateTriplet::dim(self)
    }

    fn triplet_at(&self, x: &[f64]) -> Result<LevyTriplet> {
        self.at(x)
    }
}

impl TripletSource for Symbol {
    fn dim(&self) -> usize {
        self.d
    }

    fn triplet_at(&self, x: &[f64]) -> Result<LevyTriplet> {
        Symbol::triplet_at(self, x)
    }
}

impl TripletSource for LevyTriplet {
    fn dim(&self) -> usize {
        LevyTriplet::dim(self)
    }

    fn triplet_at(&self, _: &[f64]) -> Result<LevyTriplet> {
        Ok(self.clone())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridRow {
    pub x: Vec<f64>,
    pub alpha: f64,
    pub form: Option<GeneratorForm>,
    pub value: Option<f64>,
    pub abs_error: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridReport {
    pub rows: Vec<GridRow>,
    /// `max |Lf|` on the outermost grid shell over `max |Lf|`.
    pub outer_ratio: f64,
    /// Largest `|Lf|` difference between consecutive grid states.
    pub max_oscillation: f64,
    pub failures: usize,
}

/// `Lf` on a grid of states, each with the form selected by `α(x)`.
/// Per-state failures are recorded in the table rather than aborting.
pub fn apply_on_grid(
    model: &dyn TripletSource,
    order: &VariableOrderFn,
    f: &TestFunction,
    grid: &[Vec<f64>],
) -> Result<GridReport> {
    if grid.is_empty() {
        return Err(Error::precondition("state grid is empty"));
    }
    let rows: Vec<GridRow> = grid
        .par_iter()
        .map(|x| {
            let alpha = order.at(x);
            let run = || -> Result<(GeneratorForm, GeneratorValue)> {
                let form = select_form(alpha)?;
                let tr = model.triplet_at(x)?;
                Ok((form, apply_pointwise(&tr, f, x, form)?))
            };
            match run() {
                Ok((form, v)) => GridRow {
                    x: x.clone(),
                    alpha,
                    form: Some(form),
                    value: Some(v.value),
                    abs_error: Some(v.abs_error),
                    status: "ok".into(),
                },
                Err(e) => GridRow {
                    x: x.clone(),
                    alpha,
                    form: None,
                    value: None,
                    abs_error: None,
                    status: e.to_string(),
                },
            }
        })
        .collect();
    let sup_norm = |x: &[f64]| x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let reach = grid.iter().map(|x| sup_norm(x)).fold(0.0, f64::max);
    let mut all = 0.0f64;
    let mut edge = 0.0f64;
    for r in &rows {
        if let Some(v) = r.value {
            all = all.max(v.abs());
            if sup_norm(&r.x) >= 0.999 * reach {
                edge = edge.max(v.abs());
            }
        }
    }
    let max_oscillation = rows
        .windows(2)
        .filter_map(|w| Some((w[0].value? - w[1].value?).abs()))
        .fold(0.0, f64::max);
    Ok(GridReport {
        outer_ratio: if all > 0.0 { edge / all } else { 0.0 },
        max_oscillation,
        failures: rows.iter().filter(|r| r.value.is_none()).count(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Atom;

    fn fun(json: &str) -> TestFunction {
        serde_json::from_str::<FunctionSpec>(json).unwrap().build().unwrap()
    }

    fn atoms(d: usize, list: &[(&[f64], f64)]) -> LevyMeasure {
        LevyMeasure::Atoms {
            d,
            atoms: list
                .iter()
                .map(|(y, w)| Atom {
                    location: y.to_vec(),
                    weight: *w,
                })
                .collect(),
        }
    }

    #[test]
    fn form_selection() {
        assert_eq!(select_form(0.8).unwrap(), GeneratorForm::ZeroOrder);
        assert_eq!(select_form(1.0).unwrap(), GeneratorForm::ZeroOrder);
        assert_eq!(select_form(1.5).unwrap(), GeneratorForm::FirstOrder);
        assert_eq!(select_form(2.0).unwrap(), GeneratorForm::SecondOrder);
        assert!(select_form(0.0).is_err());
    }

    #[test]
    fn finite_atoms_are_exact_sums() {
        let tr = LevyTriplet::new(vec![0.0], vec![vec![0.0]], atoms(1, &[(&[1.0], 2.0)]));
        let f = fun(r#"{"kind":"gaussian","d":1}"#);
        let v = apply_pointwise(&tr, &f, &[0.0], GeneratorForm::ZeroOrder).unwrap();
        assert!((v.value - 2.0 * ((-1.0f64).exp() - 1.0)).abs() < 1e-15);
        let zero = apply_pointwise(&tr, &TestFunction::zero(1), &[0.3], GeneratorForm::SecondOrder).unwrap();
        assert_eq!(zero.value, 0.0);
    }

    #[test]
    fn cosine_against_half_stable() {
        let tr = LevyTriplet::new(vec![0.0], vec![vec![0.0]], LevyMeasure::stable(0.5, 1).unwrap());
        let f = fun(r#"{"kind":"cos","freq":[1.0]}"#);
        let v = apply_pointwise(&tr, &f, &[0.0], GeneratorForm::ZeroOrder).unwrap();
        assert!((v.value + 1.0).abs() < 1e-6, "{v:?}");
    }

    #[test]
    fn fractional_laplacian_eigenfunctions() {
        for &alpha in &[0.5, 1.0, 1.5] {
            for xi in [0.5f64, 1.0, 2.0] {
                let f = fun(&format!(r#"{{"kind":"cos","freq":[{xi}]}}"#));
                let v = fractional_laplacian(&f, &[0.0], alpha, 1).unwrap();
                let want = -xi.powf(alpha);
                assert!((v.value - want).abs() < 1e-4 * want.abs(), "α={alpha} ξ={xi}: {v:?}");
            }
        }
    }

    #[test]
    fn fractional_laplacian_in_two_dimensions() {
        let f = fun(r#"{"kind":"cos","freq":[0.6,0.8]}"#);
        let v = fractional_laplacian(&f, &[0.0, 0.0], 1.2, 2).unwrap();
        assert!((v.value + 1.0).abs() < 1e-2, "{v:?}");
    }

    #[test]
    fn locally_constant_function_has_no_inner_contribution() {
        let f = fun(r#"{"kind":"bump","d":1,"inner":1.5,"outer":3.0}"#);
        let v = fractional_laplacian(&f, &[0.0], 1.5, 1).unwrap();
        assert_eq!(v.inner, 0.0);
        assert!(v.value < 0.0);
        let c = fun(r#"{"kind":"expr","d":1,"f":"2"}"#);
        assert!(fractional_laplacian(&c, &[0.0], 0.5, 1).is_err());
    }

    #[test]
    fn zero_and_first_order_agree_with_compensating_drift() {
        // one-sided density r^{-1.5} on (0, 2]: compensator 2, first moment finite
        let nu = LevyMeasure::Density {
            d: 1,
            density: crate::measure::DensitySpec::Expr {
                expr: crate::Expr::parse("step(x)*abs(x)^-1.5").unwrap(),
                singularity: 0.5,
                truncation: Some(2.0),
            },
        };
        let b = compensator_drift(&nu).unwrap();
        assert!((b[0] - 2.0).abs() < 1e-9);
        let tr = LevyTriplet::new(b, vec![vec![0.0]], nu);
        let f = fun(r#"{"kind":"gaussian","d":1,"center":[0.3]}"#);
        let z = apply_pointwise(&tr, &f, &[0.0], GeneratorForm::ZeroOrder).unwrap();
        let o = apply_pointwise(&tr, &f, &[0.0], GeneratorForm::FirstOrder).unwrap();
        assert!((z.value - o.value).abs() < 1e-7 * (1.0 + z.value.abs()), "{z:?} {o:?}");
        let bad = LevyTriplet::new(vec![0.0], vec![vec![0.0]], tr.measure.clone());
        assert!(matches!(
            apply_pointwise(&bad, &f, &[0.0], GeneratorForm::ZeroOrder),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn insufficient_regularity_is_reported() {
        // smooth f is not enough for the zero-order form when α > 1
        let tr = LevyTriplet::new(vec![0.0], vec![vec![0.0]], LevyMeasure::stable(1.5, 1).unwrap());
        let f = fun(r#"{"kind":"gaussian","d":1,"center":[0.4]}"#);
        assert!(matches!(
            apply_pointwise(&tr, &f, &[0.0], GeneratorForm::ZeroOrder),
            Err(Error::InsufficientRegularity(_))
        ));
        let rough = fun(r#"{"kind":"power-gaussian","d":1,"beta":0.4}"#);
        let tr = LevyTriplet::new(vec![0.0], vec![vec![0.0]], LevyMeasure::stable(0.5, 1).unwrap());
        assert!(matches!(
            apply_pointwise(&tr, &rough, &[0.0], GeneratorForm::ZeroOrder),
            Err(Error::InsufficientRegularity(_))
        ));
    }

    #[test]
    fn missing_oracles_are_contract_errors() {
        let tr = LevyTriplet::new(vec![0.0], vec![vec![0.0]], LevyMeasure::stable(1.5, 1).unwrap());
        let f = fun(r#"{"kind":"power-gaussian","d":1,"beta":0.8}"#);
        assert!(matches!(
            apply_pointwise(&tr, &f, &[0.0], GeneratorForm::FirstOrder),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn second_order_includes_diffusion() {
        // Q = 2: L cos(x) at 0 = ½·2·(−1) = −1
        let tr = LevyTriplet::new(vec![0.5], vec![vec![2.0]], LevyMeasure::zero(1));
        let f = fun(r#"{"kind":"sin","freq":[1.0]}"#);
        let v = apply_pointwise(&tr, &f, &[0.0], GeneratorForm::SecondOrder).unwrap();
        assert!((v.value - 0.5).abs() < 1e-15);
        let c = fun(r#"{"kind":"cos","freq":[1.0]}"#);
        let v = apply_pointwise(&tr, &c, &[0.0], GeneratorForm::SecondOrder).unwrap();
        assert!((v.value + 1.0).abs() < 1e-15);
        assert!(apply_pointwise(&tr, &c, &[0.0], GeneratorForm::FirstOrder).is_err());
    }

    #[test]
    fn translation_equivariance_on_a_grid() {
        let tr = LevyTriplet::new(vec![0.0], vec![vec![0.0]], LevyMeasure::stable(1.2, 1).unwrap());
        let order = VariableOrderFn::constant(1.6);
        let f0 = fun(r#"{"kind":"gaussian","d":1}"#);
        let f1 = fun(r#"{"kind":"gaussian","d":1,"center":[0.25]}"#);
        let g0: Vec<Vec<f64>> = (-4..=4).map(|k| vec![k as f64 * 0.5]).collect();
        let g1: Vec<Vec<f64>> = g0.iter().map(|x| vec![x[0] + 0.25]).collect();
        let a = apply_on_grid(&tr, &order, &f0, &g0).unwrap();
        let b = apply_on_grid(&tr, &order, &f1, &g1).unwrap();
        for (p, q) in a.rows.iter().zip(&b.rows) {
            let (p, q) = (p.value.unwrap(), q.value.unwrap());
            assert!((p - q).abs() < 1e-8, "{p} {q}");
        }
    }

    #[test]
    fn stable_like_grid_decays() {
        let sym = Symbol::stable_like(crate::Expr::parse("0.6 + 0.2*sin(x)").unwrap(), 1);
        let order = VariableOrderFn::from_expr(crate::Expr::parse("0.75 + 0.2*sin(x)").unwrap());
        let f = fun(r#"{"kind":"gaussian","d":1}"#);
        let grid: Vec<Vec<f64>> = (0..=16).map(|k| vec![-8.0 + k as f64]).collect();
        let rep = apply_on_grid(&sym, &order, &f, &grid).unwrap();
        assert_eq!(rep.failures, 0, "{rep:?}");
        assert!(rep.outer_ratio <= 0.05, "{}", rep.outer_ratio);
        let z = apply_on_grid(&sym, &order, &TestFunction::zero(1), &grid).unwrap();
        assert!(z.rows.iter().all(|r| r.value == Some(0.0)));
    }
}
