//! Fourier-side identities for fractional moments and the growth classes
//! used for unbounded test functions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ops::{c_alpha, fractional_moment, MomentReport, Region};
use super::{Decomposed, LevyMeasure};
use crate::error::{Error, Result};
use crate::expr::norm;
use crate::quad::{self, GaussLegendre, ShellRule, ShellSum};
use crate::symbol::Symbol;

/// Frequencies beyond this are replaced by a fitted power-law tail.
pub const FREQ_CUTOFF: f64 = 65536.0;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
    pub lhs_divergent: bool,
    pub rhs_divergent: bool,
}

impl IdentityCheck {
    fn new(lhs: f64, rhs: f64, lhs_divergent: bool, rhs_divergent: bool) -> Self {
        let rel_err = if lhs_divergent || rhs_divergent {
            if lhs_divergent == rhs_divergent {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (lhs - rhs).abs() / lhs.abs()
        };
        IdentityCheck {
            lhs,
            rhs,
            rel_err,
            lhs_divergent,
            rhs_divergent,
        }
    }

    /// Both sides finite and within `tol`, or both divergent.
    pub fn agrees(&self, tol: f64) -> bool {
        self.rel_err <= tol
    }
}

/// `2 sin²(x/2) = 1 − cos x` without cancellation.
pub(crate) fn one_minus_cos(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    2.0 * s * s
}

/// `|y|^α` against `c_α ∫ (1 − cos(yξ)) |ξ|^{−1−α} dξ` (d = 1).
pub fn kernel_identity_check(y: f64, alpha: f64) -> Result<IdentityCheck> {
    if y == 0.0 || !y.is_finite() {
        return Err(Error::domain("kernel identity needs y ≠ 0"));
    }
    let c = c_alpha(alpha, 1)?;
    let a = y.abs();
    let g = |xi: f64| one_minus_cos(a * xi) * xi.powf(-1.0 - alpha);
    let split = 1.0 / a;
    let inner = quad::inward(g, split, &ShellRule::default());
    let outer = quad::power_tail_walk(g, split, FREQ_CUTOFF.max(4.0 * split), 2.0 / a);
    let (rhs, div) = match (inner, outer) {
        (ShellSum::Finite(i), ShellSum::Finite(o)) => (2.0 * c * (i.value + o.value), false),
        _ => (f64::INFINITY, true),
    };
    Ok(IdentityCheck::new(a.powf(alpha), rhs, false, div))
}

/// `m(ξ) = ∫ (1 − cos(y ξ)) ν(dy)` for a one-dimensional measure.
fn cosine_transform(parts: &Decomposed, xi: f64) -> f64 {
    let atoms: f64 = parts
        .atoms
        .iter()
        .map(|a| a.weight * one_minus_cos(a.location[0] * xi))
        .sum();
    let rule = ShellRule::default();
    let rays: f64 = parts
        .pairs
        .iter()
        .map(|p| {
            let side = |prof: &super::Profile| {
                let t = prof.trunc();
                let g = |r: f64| one_minus_cos(r * xi) * prof.density(r);
                let split = (1.0 / xi).min(t);
                let inner = quad::inward(g, split, &rule).finite().map(|e| e.value).unwrap_or(f64::INFINITY);
                if split >= t {
                    return inner;
                }
                let outer = quad::log_panels(&g, split, t, 2.0 / xi).0;
                inner + outer
            };
            if p.symmetric {
                2.0 * side(&p.plus)
            } else {
                side(&p.plus) + side(&p.minus)
            }
        })
        .sum();
    atoms + rays
}

/// Both sides of
/// `∫_{|y|≤1} |y|^κ ν(dy) = c_κ ∫ (∫_{|y|≤1} (1 − cos(yξ)) ν(dy)) |ξ|^{−1−κ} dξ`
/// for a one-dimensional measure supported in the closed unit ball.
pub fn moment_identity_check(nu: &LevyMeasure, kappa: f64) -> Result<IdentityCheck> {
    if nu.dim() != 1 {
        return Err(Error::precondition("the moment identity is implemented for d = 1"));
    }
    if nu.support_radius() > 1.0 {
        return Err(Error::precondition("measure must be supported in {|y| ≤ 1}"));
    }
    let c = c_alpha(kappa, 1)?;
    let lhs: MomentReport = fractional_moment(nu, kappa, Region::unit_ball())?;
    let parts = nu.decompose()?;
    let g = |xi: f64| cosine_transform(&parts, xi) * xi.powf(-1.0 - kappa);
    let reach = parts
        .atoms
        .iter()
        .map(|a| norm(&a.location))
        .fold(0.0, f64::max);
    let max_panel = if parts.pairs.is_empty() && reach > 0.0 {
        1.0 / reach
    } else {
        f64::INFINITY
    };
    let inner = quad::inward(g, 1.0, &ShellRule::default()).finite().map(|e| e.value);
    let outer = quad::power_tail_walk(g, 1.0, FREQ_CUTOFF, max_panel);
    let (rhs, div) = match (inner, outer) {
        (Some(i), ShellSum::Finite(o)) => (2.0 * c * (i + o.value), false),
        _ => (f64::INFINITY, true),
    };
    Ok(IdentityCheck::new(lhs.value, rhs, lhs.divergent, div))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivalenceProbe {
    pub convergent: bool,
    /// `(2^k, ∫_1^{2^k} sup_{|ξ|≤r} Re ψ(ξ) r^{−1−κ} dr)`.
    pub partial_integrals: Vec<(f64, f64)>,
    pub increments: Vec<f64>,
    pub ratios: Vec<f64>,
}

/// Classifies `∫_1^∞ sup_{|ξ|≤r} Re ψ(ξ) r^{−1−κ} dr` by the decay of its
/// dyadic increments up to `r = 2^20`.
pub fn equivalence_probe(sym: &Symbol, x: &[f64], kappa: f64) -> Result<EquivalenceProbe> {
    if !(kappa > 0.0 && kappa < 2.0) {
        return Err(Error::domain(format!("κ = {kappa} must lie in (0,2)")));
    }
    let gl = GaussLegendre::standard();
    let frozen = sym.freeze(x)?;
    let increments: Vec<f64> = (1..=20)
        .into_par_iter()
        .map(|k| {
            let (a, b) = (2f64.powi(k - 1), 2f64.powi(k));
            gl.integrate(
                |u| {
                    let r = u.exp();
                    sym.sup_real(&frozen, r) * r.powf(-kappa)
                },
                a.ln(),
                b.ln(),
            )
        })
        .collect();
    let mut acc = 0.0;
    let partial_integrals = increments
        .iter()
        .enumerate()
        .map(|(k, v)| {
            acc += v;
            (2f64.powi(k as i32 + 1), acc)
        })
        .collect();
    let ratios: Vec<f64> = increments
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    let convergent = increments.iter().all(|v| *v == 0.0) || ratios[ratios.len() - 5..].iter().all(|q| *q < 1.0);
    Ok(EquivalenceProbe {
        convergent,
        partial_integrals,
        increments,
        ratios,
    })
}

/// Radial submultiplicative growth functions.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Growth {
    /// `(1 + |y|)^p`
    Poly { p: f64 },
    /// `exp(β |y|^κ)`, `κ ∈ (0,1]`
    Exp { beta: f64, kappa: f64 },
    Product { factors: Vec<Growth> },
}

impl Growth {
    pub fn validate(&self) -> Result<()> {
        match self {
            Growth::Poly { p } if !(*p >= 0.0) => Err(Error::domain("(1+|y|)^p needs p ≥ 0")),
            Growth::Exp { beta, kappa } if !(*beta > 0.0 && *kappa > 0.0 && *kappa <= 1.0) => {
                Err(Error::domain("exp(β|y|^κ) needs β > 0 and κ ∈ (0,1]"))
            }
            Growth::Product { factors } => factors.iter().try_for_each(Growth::validate),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Growth::Poly { p } => (1.0 + r).powf(*p),
            Growth::Exp { beta, kappa } => (beta * r.powf(*kappa)).exp(),
            Growth::Product { factors } => factors.iter().map(|g| g.eval(r)).product(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubmultiplicativeReport {
    /// `sup_K ∫_{|y|≥1} g dν`, `+∞` if some state diverges.
    pub m: f64,
    /// `(R, sup_K ∫_{|y|≥R} g dν)` for `R = 2^0 … 2^10`.
    pub m_r: Vec<(f64, f64)>,
    pub integrable: bool,
    pub tight: bool,
    pub verdict: String,
}

fn growth_integral(parts: &Decomposed, g: &Growth, radius: f64) -> f64 {
    let atoms: f64 = parts
        .atoms
        .iter()
        .filter(|a| norm(&a.location) >= radius)
        .map(|a| a.weight * g.eval(norm(&a.location)))
        .sum();
    let rule = ShellRule::default();
    let weight = |r: f64| g.eval(r);
    let mut total = atoms;
    for p in &parts.pairs {
        let sides: &[&super::Profile] = if p.symmetric { &[&p.plus] } else { &[&p.plus, &p.minus] };
        let mult = if p.symmetric { 2.0 } else { 1.0 };
        for prof in sides {
            match prof.integrate(&weight, radius, f64::INFINITY, &rule).finite() {
                Some(e) => total += mult * e.value,
                None => return f64::INFINITY,
            }
        }
    }
    total
}

/// Integrability `M(K)` and tightness `M_R(K)` of a growth function over a
/// family of jump measures (one per probe state).
pub fn submultiplicative_bounds(g: &Growth, family: &[LevyMeasure]) -> Result<SubmultiplicativeReport> {
    g.validate()?;
    if family.is_empty() {
        return Err(Error::precondition("probe family must be nonempty"));
    }
    let parts: Vec<Decomposed> = family.iter().map(|m| m.decompose()).collect::<Result<_>>()?;
    let sup_at = |radius: f64| {
        parts
            .iter()
            .map(|p| growth_integral(p, g, radius))
            .fold(0.0, f64::max)
    };
    let m = sup_at(1.0);
    let m_r: Vec<(f64, f64)> = (0..=10)
        .map(|k| {
            let r = 2f64.powi(k);
            (r, sup_at(r))
        })
        .collect();
    let integrable = m.is_finite();
    let tight = integrable
        && (m == 0.0
            || (m_r.windows(2).all(|w| w[1].1 <= w[0].1) && m_r.last().map(|v| v.1).unwrap_or(0.0) < 0.01 * m));
    let verdict = if !integrable {
        "g ∉ Σ(K): ∫_{|y|≥1} g dν diverges".to_string()
    } else if tight {
        "g ∈ Σ(K): integrable and tight".to_string()
    } else {
        "integrable, tightness not reached on R ≤ 2^10".to_string()
    };
    Ok(SubmultiplicativeReport {
        m,
        m_r,
        integrable,
        tight,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::super::Atom;
    use super::*;

    fn power(alpha: f64, trunc: Option<f64>) -> LevyMeasure {
        LevyMeasure::IsotropicPower {
            d: 1,
            intensity: c_alpha(alpha, 1).unwrap(),
            alpha,
            truncation: trunc,
        }
    }

    fn atom(y: f64, w: f64) -> LevyMeasure {
        LevyMeasure::Atoms {
            d: 1,
            atoms: vec![Atom {
                location: vec![y],
                weight: w,
            }],
        }
    }

    #[test]
    fn kernel_identity_examples() {
        let k = kernel_identity_check(0.5, 0.7).unwrap();
        assert!((k.lhs - 0.615_572_206_672_458_6).abs() < 1e-12);
        assert!(k.rel_err <= 0.01, "{k:?}");
        let one = kernel_identity_check(1.0, 1.0).unwrap();
        assert!(one.rel_err <= 0.01, "{one:?}");
        let neg = kernel_identity_check(-1.0, 1.0).unwrap();
        assert_eq!(neg.rhs, one.rhs);
        assert!(kernel_identity_check(0.0, 1.0).is_err());
    }

    #[test]
    fn moment_identity_for_an_atom() {
        let k = moment_identity_check(&atom(0.5, 1.0), 1.0).unwrap();
        assert!((k.lhs - 0.5).abs() < 1e-15);
        assert!(k.rel_err <= 0.01, "{k:?}");
    }

    #[test]
    fn moment_identity_support_precondition() {
        assert!(matches!(
            moment_identity_check(&atom(2.0, 1.0), 1.0),
            Err(Error::Precondition(_))
        ));
        assert!(moment_identity_check(&power(0.6, None), 0.8).is_err());
    }

    #[test]
    fn growth_examples() {
        let g = Growth::Poly { p: 2.0 };
        let r = submultiplicative_bounds(&g, &[power(0.6, Some(1.0))]).unwrap();
        assert_eq!(r.m, 0.0);
        assert!(r.tight);
        let r = submultiplicative_bounds(&g, &[atom(1.0, 2.0)]).unwrap();
        assert_eq!(r.m, 8.0);
        let e = Growth::Exp { beta: 1.0, kappa: 1.0 };
        let r = submultiplicative_bounds(&e, &[power(0.6, None)]).unwrap();
        assert!(!r.integrable && r.m.is_infinite());
        assert!(r.verdict.contains("Σ(K)"));
        assert!(Growth::Exp { beta: 1.0, kappa: 1.5 }.validate().is_err());
    }

    #[test]
    fn tempered_tail_is_tight() {
        let nu = LevyMeasure::Density {
            d: 1,
            density: super::super::DensitySpec::Tempered {
                intensity: 1.0,
                alpha: 0.5,
                rate: 2.0,
                truncation: None,
            },
        };
        let r = submultiplicative_bounds(&Growth::Exp { beta: 1.0, kappa: 1.0 }, &[nu]).unwrap();
        assert!(r.integrable && r.tight, "{r:?}");
    }
}
