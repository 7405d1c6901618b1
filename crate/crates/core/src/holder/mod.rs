//! Local and variable-order Hölder seminorms and domain certificates.

mod order;

pub use order::{OrderCheck, OrderSpec, VariableOrderFn, DEFAULT_GAP};

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::norm;
use crate::generator::TestFunction;
use crate::measure::{compensator_drift, fractional_moment, Region};
use crate::symbol::{bg_index_infinity, sector_constant, Family, SectorGrid, Symbol};

/// 24 geometric radii from `1e−4` to `1`.
pub fn default_probe_radii() -> Vec<f64> {
    (0..24).map(|k| 1e-4 * 1e4f64.powf(k as f64 / 23.0)).collect()
}

/// Unit probe directions: `±1` in d=1, 16 otherwise.
pub fn probe_directions(d: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..16)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 16.0;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..16)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / 16.0;
                    let rho = (1.0 - z * z).sqrt();
                    let phi = golden * k as f64;
                    vec![rho * phi.cos(), rho * phi.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut out = Vec::new();
            for i in 0..d {
                for s in [1.0, -1.0] {
                    let mut e = vec![0.0; d];
                    e[i] = s;
                    out.push(e);
                }
            }
            let c = 1.0 / (d as f64).sqrt();
            out.push(vec![c; d]);
            out.push(vec![-c; d]);
            out
        }
    }
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
        return Err(Error::precondition("probe radii must be a nonempty subset of (0, 1]"));
    }
    Ok(())
}

/// `max ratio(x+y, y)` over radii × probe directions.
fn sup_ratio(x: &[f64], radii: &[f64], ratio: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
    let mut best = 0.0f64;
    for dir in probe_directions(x.len()) {
        for &r in radii {
            let y: Vec<f64> = dir.iter().map(|v| r * v).collect();
            let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            best = best.max(ratio(&z, &y));
        }
    }
    best
}

/// `max |f(x+y) − f(x)| / |y|^α` over probe offsets; a lower bound for
/// the sup over `0 < |y| ≤ 1`.
pub fn local_holder_seminorm(f: &TestFunction, x: &[f64], alpha: f64, radii: &[f64]) -> Result<f64> {
    check_radii(radii)?;
    let fx = f.eval(x);
    Ok(sup_ratio(x, radii, |z, y| (f.eval(z) - fx).abs() / norm(y).powf(alpha)))
}

/// `max |f(x+y) − f(x) − ∇f(x)·y| / |y|^α` over probe offsets.
pub fn first_order_remainder_seminorm(f: &TestFunction, x: &[f64], alpha: f64, radii: &[f64]) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::domain(format!("order {alpha} outside (1, 2)")));
    }
    remainder(f, x, alpha, radii)
}

fn remainder(f: &TestFunction, x: &[f64], alpha: f64, radii: &[f64]) -> Result<f64> {
    check_radii(radii)?;
    let g = f
        .gradient(x)
        .ok_or_else(|| Error::contract(format!("first-order remainder needs a gradient oracle for {}", f.name)))?;
    let fx = f.eval(x);
    Ok(sup_ratio(x, radii, |z, y| {
        let lin: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
        (f.eval(z) - fx - lin).abs() / norm(y).powf(alpha)
    }))
}

/// Which regularity condition applies at a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// `0 < α(x) ≤ 1`: local Hölder seminorm.
    C1,
    /// `1 < α(x) < 2`: first-order remainder and a continuous gradient.
    C2,
    /// `α(x) = 2`: twice differentiable with a continuous Hessian.
    C3,
}

impl Condition {
    pub fn of(alpha: f64) -> Condition {
        if alpha <= 1.0 {
            Condition::C1
        } else if alpha < 2.0 {
            Condition::C2
        } else {
            Condition::C3
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateCondition {
    pub x: Vec<f64>,
    pub alpha: f64,
    pub condition: Condition,
    pub value: Option<f64>,
    pub pass: bool,
    pub note: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: Condition,
    pub states: usize,
    pub sup: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MembershipReport {
    pub states: Vec<StateCondition>,
    pub summary: Vec<ConditionSummary>,
    pub cap: f64,
    pub pass: bool,
}

/// Seminorm cap that counts as "finite".
pub const DEFAULT_CAP: f64 = 1e6;

/// Per-state regularity conditions for `f` against the order `α(·)`.
pub fn membership_check(f: &TestFunction, order: &VariableOrderFn, grid: &[Vec<f64>], cap: f64) -> Result<MembershipReport> {
    if grid.is_empty() {
        return Err(Error::precondition("state grid is empty"));
    }
    let radii = default_probe_radii();
    let states: Vec<StateCondition> = grid
        .par_iter()
        .map(|x| {
            let alpha = order.at(x);
            let condition = Condition::of(alpha);
            let (value, note) = match condition {
                Condition::C1 => match local_holder_seminorm(f, x, alpha, &radii) {
                    Ok(v) => (Some(v), String::new()),
                    Err(e) => (None, e.to_string()),
                },
                Condition::C2 => match (remainder(f, x, alpha, &radii), f.check_oracles(x)) {
                    (Ok(v), Ok(())) => (Some(v), String::new()),
                    (Err(_), _) => (None, "C2 requires gradient oracle".to_string()),
                    (_, Err(e)) => (None, format!("gradient not continuous at x: {e}")),
                },
                Condition::C3 => {
                    if !f.has_hessian() {
                        (None, "C3 requires Hessian oracle".to_string())
                    } else {
                        match f.check_oracles(x) {
                            Ok(()) => {
                                let h = f.hessian(x).unwrap_or_default();
                                (Some(h.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))), String::new())
                            }
                            Err(e) => (None, e.to_string()),
                        }
                    }
                }
            };
            let pass = value.is_some_and(|v| v.is_finite() && v <= cap);
            StateCondition {
                x: x.clone(),
                alpha,
                condition,
                value,
                pass,
                note,
            }
        })
        .collect();
    let summary: Vec<ConditionSummary> = [Condition::C1, Condition::C2, Condition::C3]
        .into_iter()
        .filter_map(|c| {
            let rows: Vec<&StateCondition> = states.iter().filter(|s| s.condition == c).collect();
            if rows.is_empty() {
                return None;
            }
            Some(ConditionSummary {
                condition: c,
                states: rows.len(),
                sup: rows.iter().map(|s| s.value.unwrap_or(f64::INFINITY)).fold(0.0, f64::max),
                pass: rows.iter().all(|s| s.pass),
            })
        })
        .collect();
    let pass = summary.iter().all(|s| s.pass);
    Ok(MembershipReport {
        states,
        summary,
        cap,
        pass,
    })
}

/// Certificate routes, strongest first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictStatus {
    /// Lévy process with constant order: `C^α`, `C^{1,α−1}` or `C²_∞` in the domain.
    CertifiedLevy,
    /// Variable-order Hölder space `C^{α(·)}_∞` with the zero-order form.
    CertifiedVariableHolder,
    /// `C^{1,α(·)−1}_∞` with the first-order form.
    CertifiedVariableC1,
    /// General conditions C1–C3 against `β∞(x) + ε`.
    CertifiedGeneral,
    NotCertified,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Reason {
    pub check: String,
    pub pass: bool,
    /// Positive when passed; see `detail` for the quantity measured.
    pub margin: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RouteOutcome {
    pub route: VerdictStatus,
    pub pass: bool,
    pub reasons: Vec<Reason>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DomainVerdict {
    pub status: VerdictStatus,
    /// Checks of the issued route, or of every attempted route when none passed.
    pub reasons: Vec<Reason>,
    pub routes: Vec<RouteOutcome>,
}

/// Per-state quantities shared by the routes.
struct StateData {
    x: Vec<f64>,
    alpha: f64,
    moment_eps: Result<f64>,
    moment_exact: Result<f64>,
    sector: Result<(f64, bool)>,
    bg: Result<(f64, f64)>,
    diffusion: f64,
    drift_gap: Result<f64>,
}

const MOMENT_CAP: f64 = 1e8;
const SECTOR_CAP: f64 = 1e6;

fn moment_at(nu: &crate::LevyMeasure, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::domain(format!("moment order {kappa} ≤ 0")));
    }
    let m = fractional_moment(nu, kappa.min(2.0), Region::Ball { radius: 1.0, closed: true })?;
    Ok(if m.divergent { f64::INFINITY } else { m.value })
}

fn gather(sym: &Symbol, order: &VariableOrderFn, x: &[f64]) -> StateData {
    let alpha = order.at(x);
    let eps = order.eps_gap;
    let tr = sym.triplet_at(x);
    let (moment_eps, moment_exact, diffusion, drift_gap) = match &tr {
        Ok(t) => (
            moment_at(&t.measure, alpha - eps),
            moment_at(&t.measure, alpha),
            t.diffusion.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())),
            compensator_drift(&t.measure)
                .map(|c| c.iter().zip(&t.drift).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)),
        ),
        Err(e) => {
            let msg = e.to_string();
            (
                Err(Error::Unsupported(msg.clone())),
                Err(Error::Unsupported(msg.clone())),
                f64::NAN,
                Err(Error::Unsupported(msg)),
            )
        }
    };
    let sector = sector_constant(sym, x, &SectorGrid::standard(sym.d)).map(|s| (s.constant, s.unbounded));
    let bg = bg_index_infinity(sym, x, None).map(|b| (b.value, b.band));
    StateData {
        x: x.to_vec(),
        alpha,
        moment_eps,
        moment_exact,
        sector,
        bg,
        diffusion,
        drift_gap,
    }
}

fn fail_msg<T>(r: &Result<T>) -> String {
    match r {
        Ok(_) => String::new(),
        Err(e) => e.to_string(),
    }
}

fn moment_reason(states: &[StateData], exact: bool, eps: f64) -> Reason {
    let mut sup = 0.0f64;
    let mut worst = None;
    for s in states {
        let m = if exact { &s.moment_exact } else { &s.moment_eps };
        match m {
            Ok(v) if v.is_finite() => sup = sup.max(*v),
            other => {
                worst.get_or_insert_with(|| {
                    let why = if other.is_ok() { "diverges".to_string() } else { fail_msg(other) };
                    format!("moment condition {why} at x={:?}", s.x)
                });
                sup = f64::INFINITY;
            }
        }
    }
    let label = if exact { "α(x)" } else { "α(x)−ε" };
    Reason {
        check: "moment".into(),
        pass: worst.is_none() && sup <= MOMENT_CAP,
        margin: MOMENT_CAP - sup,
        detail: worst.unwrap_or_else(|| {
            format!("sup_x ∫_{{|y|≤1}} |y|^{{{label}}} ν(x,dy) = {sup:.6e} (ε = {eps}); margin = cap {MOMENT_CAP:e} − sup")
        }),
    }
}

/// Sector condition or `α(x) − ε ≥ β∞(x) + band` at every state.
fn sector_or_gap(states: &[StateData], eps: f64, allow_sector: bool) -> Vec<Reason> {
    let mut sector_sup = 0.0f64;
    let mut sector_ok = allow_sector;
    let mut sector_note = String::new();
    for s in states {
        match &s.sector {
            Ok((c, unbounded)) => {
                sector_sup = sector_sup.max(*c);
                if *unbounded {
                    sector_ok = false;
                    sector_note = format!("ratio grows at the largest radii at x={:?}", s.x);
                }
            }
            Err(e) => {
                sector_ok = false;
                sector_note = e.to_string();
            }
        }
    }
    sector_ok &= sector_sup <= SECTOR_CAP;
    let mut gap_margin = f64::INFINITY;
    let mut gap_note = String::new();
    let mut indeterminate = false;
    for s in states {
        match &s.bg {
            Ok((beta, band)) => {
                let m = s.alpha - eps - beta - band;
                if (s.alpha - eps - beta).abs() <= *band {
                    indeterminate = true;
                }
                if m < gap_margin {
                    gap_margin = m;
                    gap_note = format!("min α(x)−ε−β∞(x)−band = {m:.4} at x={:?}", s.x);
                }
            }
            Err(e) => {
                gap_margin = f64::NEG_INFINITY;
                gap_note = e.to_string();
            }
        }
    }
    if indeterminate && gap_margin < 0.0 {
        gap_note.push_str(" (indeterminate band)");
    }
    let gap_ok = gap_margin > 0.0;
    let mut out = vec![Reason {
        check: "bg-gap".into(),
        pass: gap_ok,
        margin: gap_margin,
        detail: gap_note,
    }];
    if allow_sector {
        out.push(Reason {
            check: "sector".into(),
            pass: sector_ok,
            margin: if sector_ok { SECTOR_CAP - sector_sup } else { -1.0 },
            detail: if sector_note.is_empty() {
                format!("sup |Im q|/Re q = {sector_sup:.3e} on the standard grid")
            } else {
                sector_note
            },
        });
        out.push(Reason {
            check: "sector-or-gap".into(),
            pass: sector_ok || gap_ok,
            margin: if sector_ok { SECTOR_CAP - sector_sup } else { gap_margin },
            detail: "either condition suffices".into(),
        });
    }
    out
}

fn no_diffusion(states: &[StateData]) -> Reason {
    let q = states.iter().map(|s| s.diffusion).fold(0.0f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v) });
    Reason {
        check: "no-diffusion".into(),
        pass: q == 0.0,
        margin: if q == 0.0 { 1.0 } else { -q.abs() },
        detail: format!("max |Q_ij(x)| = {q:e}"),
    }
}

fn drift_reason(states: &[StateData]) -> Reason {
    let mut worst = 0.0f64;
    let mut note = String::new();
    for s in states {
        match &s.drift_gap {
            Ok(g) => worst = worst.max(*g),
            Err(e) => {
                worst = f64::INFINITY;
                note = e.to_string();
            }
        }
    }
    Reason {
        check: "drift-compatibility".into(),
        pass: worst <= 1e-9,
        margin: 1e-9 - worst,
        detail: if note.is_empty() {
            format!("max |b(x) − ∫_{{|y|<1}} y ν(x,dy)| = {worst:e}")
        } else {
            note
        },
    }
}

fn range_reason(states: &[StateData], lo: f64, lo_closed: bool, hi: f64) -> Reason {
    let margin = states
        .iter()
        .map(|s| (s.alpha - lo).min(hi - s.alpha))
        .fold(f64::INFINITY, f64::min);
    let pass = states
        .iter()
        .all(|s| (if lo_closed { s.alpha >= lo } else { s.alpha > lo }) && s.alpha <= hi);
    Reason {
        check: "order-range".into(),
        pass,
        // a closed endpoint may be attained
        margin: if pass { margin.max(f64::MIN_POSITIVE) } else { margin.min(-f64::MIN_POSITIVE) },
        detail: format!("α(x) ∈ {}{lo}, {hi}]", if lo_closed { "[" } else { "(" }),
    }
}

fn continuity_reason(check: &OrderCheck) -> Reason {
    Reason {
        check: "order-continuity".into(),
        pass: check.pass,
        margin: match check.lipschitz {
            Some(l) => l * (1.0 + 1e-9) + 1e-12 - check.sampled_lipschitz,
            None if check.pass => f64::MIN_POSITIVE,
            None => -1.0,
        },
        detail: format!(
            "α ∈ [{:.4}, {:.4}], sampled Lipschitz {:.4e}{}",
            check.inf,
            check.sup,
            check.sampled_lipschitz,
            if check.heuristic { " (heuristic: sampled modulus)" } else { "" }
        ),
    }
}

fn membership_reason(check: &str, rep: &Result<MembershipReport>) -> Reason {
    match rep {
        Ok(m) => {
            let sup = m.summary.iter().map(|s| s.sup).fold(0.0, f64::max);
            let failing = m.states.iter().find(|s| !s.pass);
            Reason {
                check: check.into(),
                pass: m.pass,
                margin: m.cap - sup,
                detail: match failing {
                    Some(s) if !s.note.is_empty() => format!("{} at x={:?}", s.note, s.x),
                    Some(s) => format!("seminorm {:?} exceeds cap at x={:?}", s.value, s.x),
                    None => format!("sup seminorm {sup:.4e} ≤ cap {:e}", m.cap),
                },
            }
        }
        Err(e) => Reason {
            check: check.into(),
            pass: false,
            margin: -1.0,
            detail: e.to_string(),
        },
    }
}

fn route(status: VerdictStatus, reasons: Vec<Reason>) -> RouteOutcome {
    RouteOutcome {
        route: status,
        pass: reasons.iter().all(|r| r.pass && r.margin > 0.0),
        reasons,
    }
}

/// Strongest domain certificate for `f` whose checks all pass on `grid`.
pub fn domain_verdict(sym: &Symbol, f: &TestFunction, order: &VariableOrderFn, grid: &[Vec<f64>]) -> Result<DomainVerdict> {
    if let Family::TripletIntegrated(t) = &sym.family {
        if t.bound.is_none() {
            return Err(Error::precondition("model must declare bounded coefficients"));
        }
    }
    if grid.is_empty() {
        return Err(Error::precondition("state grid is empty"));
    }
    let eps = order.eps_gap;
    let oc = order.check(grid)?;
    let states: Vec<StateData> = grid.par_iter().map(|x| gather(sym, order, x)).collect();
    let cont = continuity_reason(&oc);
    let mut routes = Vec::new();

    if sym.is_levy() {
        if let Some(a) = order.constant_value() {
            let mut reasons = vec![moment_reason(&states, true, 0.0)];
            let fixed = VariableOrderFn::constant(a);
            if a <= 1.0 {
                reasons.push(no_diffusion(&states));
                reasons.push(drift_reason(&states));
                reasons.push(membership_reason("holder-seminorm", &membership_check(f, &fixed, grid, DEFAULT_CAP)));
            } else if a < 2.0 || !f.has_hessian() {
                reasons.push(no_diffusion(&states));
                reasons.push(gradient_holder(f, grid, a));
            } else {
                reasons.push(membership_reason("second-derivatives", &membership_check(f, &fixed, grid, DEFAULT_CAP)));
            }
            routes.push(route(VerdictStatus::CertifiedLevy, reasons));
        }
    }

    let mut r11 = vec![
        range_reason(&states, eps, true, 1.0),
        cont.clone(),
        no_diffusion(&states),
        drift_reason(&states),
        moment_reason(&states, false, eps),
    ];
    r11.extend(sector_or_gap(&states, eps, true));
    r11.push(membership_reason("holder-seminorm", &membership_check(f, order, grid, DEFAULT_CAP)));
    routes.push(route(VerdictStatus::CertifiedVariableHolder, r11));

    let mut r13 = vec![
        range_reason(&states, eps, false, 2.0),
        cont.clone(),
        no_diffusion(&states),
        moment_reason(&states, false, eps),
    ];
    r13.extend(sector_or_gap(&states, eps, true));
    r13.push(gradient_holder_variable(f, order, grid));
    routes.push(route(VerdictStatus::CertifiedVariableC1, r13));

    let mut r5 = vec![range_reason(&states, 0.0, false, 2.0), cont, moment_reason(&states, false, eps)];
    // α(x) ≥ min(β∞(x) + ε, 2): α = 2 needs no gap
    let below_two: Vec<StateData> = states.iter().filter(|s| s.alpha < 2.0).map(clone_state).collect();
    if !below_two.is_empty() {
        let zero_q = below_two.iter().all(|s| s.diffusion == 0.0);
        r5.extend(sector_or_gap(&below_two, eps, zero_q));
    }
    r5.push(membership_reason("conditions-c1-c3", &membership_check(f, order, grid, DEFAULT_CAP)));
    routes.push(route(VerdictStatus::CertifiedGeneral, r5));

    let chosen = routes.iter().find(|r| r.pass);
    let (status, reasons) = match chosen {
        Some(r) => (r.route, r.reasons.clone()),
        None => (
            VerdictStatus::NotCertified,
            routes
                .iter()
                .flat_map(|r| {
                    r.reasons.iter().filter(|x| !x.pass).map(move |x| Reason {
                        check: format!("{:?}/{}", r.route, x.check),
                        ..x.clone()
                    })
                })
                .collect(),
        ),
    };
    Ok(DomainVerdict { status, reasons, routes })
}

fn clone_state(s: &StateData) -> StateData {
    let copy = |r: &Result<f64>| match r {
        Ok(v) => Ok(*v),
        Err(e) => Err(Error::Unsupported(e.to_string())),
    };
    StateData {
        x: s.x.clone(),
        alpha: s.alpha,
        moment_eps: copy(&s.moment_eps),
        moment_exact: copy(&s.moment_exact),
        sector: match &s.sector {
            Ok(v) => Ok(*v),
            Err(e) => Err(Error::Unsupported(e.to_string())),
        },
        bg: match &s.bg {
            Ok(v) => Ok(*v),
            Err(e) => Err(Error::Unsupported(e.to_string())),
        },
        diffusion: s.diffusion,
        drift_gap: copy(&s.drift_gap),
    }
}

/// `∇f ∈ C^{α−1}` via the first-order remainder at constant order `α`.
fn gradient_holder(f: &TestFunction, grid: &[Vec<f64>], alpha: f64) -> Reason {
    gradient_holder_at(f, grid, |_| alpha)
}

fn gradient_holder_variable(f: &TestFunction, order: &VariableOrderFn, grid: &[Vec<f64>]) -> Reason {
    gradient_holder_at(f, grid, |x| order.at(x).max(1.0))
}

fn gradient_holder_at(f: &TestFunction, grid: &[Vec<f64>], alpha: impl Fn(&[f64]) -> f64 + Sync) -> Reason {
    let radii = default_probe_radii();
    let vals: Vec<Result<f64>> = grid
        .par_iter()
        .map(|x| {
            f.check_oracles(x)?;
            remainder(f, x, alpha(x).min(2.0), &radii)
        })
        .collect();
    let mut sup = 0.0f64;
    for (x, v) in grid.iter().zip(&vals) {
        match v {
            Ok(v) => sup = sup.max(*v),
            Err(e) => {
                return Reason {
                    check: "gradient-holder".into(),
                    pass: false,
                    margin: -1.0,
                    detail: format!("{e} at x={x:?}"),
                }
            }
        }
    }
    Reason {
        check: "gradient-holder".into(),
        pass: sup <= DEFAULT_CAP,
        margin: DEFAULT_CAP - sup,
        detail: format!("sup first-order remainder seminorm {sup:.4e}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::FunctionSpec;
    use crate::Expr;

    fn fun(json: &str) -> TestFunction {
        serde_json::from_str::<FunctionSpec>(json).unwrap().build().unwrap()
    }

    #[test]
    fn seminorm_examples() {
        let abs = TestFunction::new("abs", 1, |x| x[0].abs());
        let r = default_probe_radii();
        assert!((local_holder_seminorm(&abs, &[0.0], 1.0, &r).unwrap() - 1.0).abs() < 1e-15);
        let pg = fun(r#"{"kind":"power-gaussian","d":1,"beta":0.8}"#);
        let v = local_holder_seminorm(&pg, &[0.0], 0.8, &r).unwrap();
        assert!((v - (-1e-8f64).exp()).abs() < 1e-12, "{v}");
        let g = fun(r#"{"kind":"gaussian","d":1}"#);
        let near: Vec<f64> = (0..12).map(|k| 1e-3 * 100f64.powf(k as f64 / 11.0)).collect();
        assert!(local_holder_seminorm(&g, &[0.0], 1.0, &near).unwrap() <= 0.1);
        assert!(local_holder_seminorm(&g, &[0.0], 1.0, &[]).is_err());
        assert!(local_holder_seminorm(&g, &[0.0], 1.0, &[1.5]).is_err());
    }

    #[test]
    fn remainder_examples() {
        let r = default_probe_radii();
        let q = fun(r#"{"kind":"quadratic","d":1}"#);
        let v = first_order_remainder_seminorm(&q, &[0.0], 1.5, &r).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{v}");
        let lin = TestFunction::new("lin", 1, |x| 3.0 * x[0] - 1.0).with_gradient(|_| vec![3.0]);
        assert!(first_order_remainder_seminorm(&lin, &[0.2], 1.5, &r).unwrap() < 1e-10);
        let g = fun(r#"{"kind":"gaussian","d":1}"#);
        assert!(first_order_remainder_seminorm(&g, &[0.0], 1.99, &r).unwrap() <= 1.05);
        let pg = fun(r#"{"kind":"power-gaussian","d":1,"beta":0.8}"#);
        assert!(matches!(
            first_order_remainder_seminorm(&pg, &[0.0], 1.5, &r),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn membership_regions() {
        let grid: Vec<Vec<f64>> = (-3..=3).map(|k| vec![k as f64]).collect();
        let g = fun(r#"{"kind":"gaussian","d":1}"#);
        let rep = membership_check(&g, &VariableOrderFn::constant(0.8), &grid, DEFAULT_CAP).unwrap();
        assert!(rep.pass && rep.summary.len() == 1 && rep.summary[0].condition == Condition::C1);
        let rep = membership_check(&g, &VariableOrderFn::constant(1.5), &grid, DEFAULT_CAP).unwrap();
        assert!(rep.pass && rep.summary[0].condition == Condition::C2);
        let no_h = TestFunction::new("g", 1, |x| (-x[0] * x[0]).exp()).with_gradient(|x| vec![-2.0 * x[0] * (-x[0] * x[0]).exp()]);
        let rep = membership_check(&no_h, &VariableOrderFn::constant(2.0), &grid, DEFAULT_CAP).unwrap();
        assert!(!rep.pass);
        assert!(rep.states[0].note.contains("C3 requires Hessian oracle"));
    }

    #[test]
    fn levy_stable_with_smoother_function() {
        let sym = Symbol::levy(
            1,
            vec![crate::symbol::ExponentTerm::Stable {
                alpha: 0.5,
                scale: 1.0,
            }],
        );
        let f = fun(r#"{"kind":"power-gaussian","d":1,"beta":0.8}"#);
        let grid: Vec<Vec<f64>> = (-4..=4).map(|k| vec![k as f64 * 0.5]).collect();
        let v = domain_verdict(&sym, &f, &VariableOrderFn::constant(0.8), &grid).unwrap();
        assert_eq!(v.status, VerdictStatus::CertifiedLevy, "{v:#?}");
        assert!(v.reasons.iter().all(|r| r.pass && r.margin > 0.0));
    }

    #[test]
    fn stable_like_variable_holder() {
        let sym = Symbol::stable_like(Expr::parse("0.6 + 0.2*sin(x)").unwrap(), 1);
        let f = fun(r#"{"kind":"gaussian","d":1}"#);
        let grid: Vec<Vec<f64>> = (0..=16).map(|k| vec![-8.0 + k as f64]).collect();
        let order = VariableOrderFn::sine(0.75, 0.2, 1.0).with_gap(0.1);
        let v = domain_verdict(&sym, &f, &order, &grid).unwrap();
        assert_eq!(v.status, VerdictStatus::CertifiedVariableHolder, "{v:#?}");
        // α below γ somewhere: the moment condition fails on every route
        let low = VariableOrderFn::sine(0.55, 0.2, 1.0).with_gap(0.1);
        let v = domain_verdict(&sym, &f, &low, &grid).unwrap();
        assert_eq!(v.status, VerdictStatus::NotCertified);
        assert!(v.reasons.iter().any(|r| r.detail.contains("moment condition diverges at x=")), "{v:#?}");
    }

    #[test]
    fn order_checks() {
        let grid: Vec<Vec<f64>> = (0..=20).map(|k| vec![k as f64 * 0.1]).collect();
        let c = VariableOrderFn::sine(1.0, 0.5, 2.0).check(&grid).unwrap();
        assert!(c.pass && !c.heuristic && c.sampled_lipschitz <= 1.0);
        let e = VariableOrderFn::from_expr(Expr::parse("1 + 0.5*sin(2*x)").unwrap()).check(&grid).unwrap();
        assert!(e.pass && e.heuristic);
        assert!(!VariableOrderFn::constant(2.5).check(&grid).unwrap().pass);
    }
}
