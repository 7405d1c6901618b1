//! Characteristic exponents and state-dependent symbols `q(x, ξ)`.

mod analysis;
mod triplet;

pub use analysis::{
    bg_index_infinity, default_frequency_probes, diffusion_estimate, quadratic_growth_check, sector_constant, symbol_sup, BgIndexEstimate,
    DiffusionReport, GrowthReport, SectorGrid, SectorReport,
};
pub use triplet::{exponent_from_triplet, LevyTriplet, MeasureFamily, StateTriplet};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::expr::{norm, Expr};
use crate::measure::{c_alpha, Atom, Decomposed, DensitySpec, LevyMeasure};

/// One summand of a closed-form Lévy exponent.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExponentTerm {
    /// `−i b·ξ`
    Drift { b: Vec<f64> },
    /// `½ ξ·Qξ`
    Gaussian { q: Vec<Vec<f64>> },
    /// `scale · |ξ|^α`
    Stable { alpha: f64, scale: f64 },
    /// `Σ w (1 − e^{iy·ξ} + iy·ξ 1_{|y|<1})`
    Atoms { atoms: Vec<Atom> },
}

#[derive(Clone, Debug)]
pub enum Family {
    /// `|ξ|^{γ(x)}`
    StableLike { gamma: Expr },
    /// `(|ξ|² + m²)^{γ/2} − m^γ`
    Relativistic { mass: Expr, gamma: Expr },
    /// `(|ξ|² + m²)^{γ/2} cos(γ arctan(|ξ|/m)) − m^γ`
    TlpLike { mass: Expr, gamma: Expr },
    /// `(|ξ|² + m)_γ − (m)_γ` with the Pochhammer symbol `(z)_γ = Γ(z+γ)/Γ(z)`
    Lamperti { mass: Expr, gamma: Expr },
    /// x-independent exponent given as a sum of closed-form terms.
    Levy { terms: Vec<ExponentTerm> },
    /// `ψ(σ(x)ᵀ ξ)` for a Lévy driver `ψ` on `ℝᵏ` and `σ(x)` of size `d × k`.
    SdeComposed { sigma: Vec<Vec<Expr>>, driver: Box<Symbol> },
    /// Lévy–Khintchine integral of a state-dependent triplet.
    TripletIntegrated(StateTriplet),
    /// `re(x, ξ) + i·im(x, ξ)`
    Custom { re: Expr, im: Expr },
}

/// An evaluatable symbol on `ℝᵈ × ℝᵈ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawSymbol", into = "RawSymbol")]
pub struct Symbol {
    pub d: usize,
    pub family: Family,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSymbol {
    family: String,
    d: usize,
    #[serde(default)]
    params: Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GammaParams {
    gamma: Expr,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MassGammaParams {
    mass: Expr,
    gamma: Expr,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevyParams {
    terms: Vec<ExponentTerm>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SdeParams {
    sigma: Vec<Vec<Expr>>,
    driver: Symbol,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomParams {
    re: Expr,
    #[serde(default = "zero_expr")]
    im: Expr,
}

fn zero_expr() -> Expr {
    Expr::constant(0.0)
}

impl TryFrom<RawSymbol> for Symbol {
    type Error = String;

    fn try_from(raw: RawSymbol) -> std::result::Result<Self, String> {
        let p = raw.params;
        let err = |e: serde_json::Error| format!("params of family '{}': {e}", raw.family);
        let family = match raw.family.as_str() {
            "stable-like" => {
                let g: GammaParams = serde_json::from_value(p).map_err(err)?;
                Family::StableLike { gamma: g.gamma }
            }
            "relativistic" | "tlp-like" | "lamperti" => {
                let m: MassGammaParams = serde_json::from_value(p).map_err(err)?;
                match raw.family.as_str() {
                    "relativistic" => Family::Relativistic {
                        mass: m.mass,
                        gamma: m.gamma,
                    },
                    "tlp-like" => Family::TlpLike {
                        mass: m.mass,
                        gamma: m.gamma,
                    },
                    _ => Family::Lamperti {
                        mass: m.mass,
                        gamma: m.gamma,
                    },
                }
            }
            "levy" => {
                let l: LevyParams = serde_json::from_value(p).map_err(err)?;
                Family::Levy { terms: l.terms }
            }
            "sde-composed" => {
                let s: SdeParams = serde_json::from_value(p).map_err(err)?;
                Family::SdeComposed {
                    sigma: s.sigma,
                    driver: Box::new(s.driver),
                }
            }
            "triplet-integrated" => Family::TripletIntegrated(serde_json::from_value(p).map_err(err)?),
            "custom" => {
                let c: CustomParams = serde_json::from_value(p).map_err(err)?;
                Family::Custom { re: c.re, im: c.im }
            }
            other => {
                return Err(format!(
                    "unknown family '{other}' (expected stable-like, relativistic, tlp-like, lamperti, levy, \
                     sde-composed, triplet-integrated or custom)"
                ))
            }
        };
        let sym = Symbol { d: raw.d, family };
        sym.check_shape().map_err(|e| e.to_string())?;
        Ok(sym)
    }
}

impl From<Symbol> for RawSymbol {
    fn from(s: Symbol) -> Self {
        let (family, params) = match s.family {
            Family::StableLike { gamma } => ("stable-like", serde_json::to_value(GammaParams { gamma })),
            Family::Relativistic { mass, gamma } => {
                ("relativistic", serde_json::to_value(MassGammaParams { mass, gamma }))
            }
            Family::TlpLike { mass, gamma } => ("tlp-like", serde_json::to_value(MassGammaParams { mass, gamma })),
            Family::Lamperti { mass, gamma } => ("lamperti", serde_json::to_value(MassGammaParams { mass, gamma })),
            Family::Levy { terms } => ("levy", serde_json::to_value(LevyParams { terms })),
            Family::SdeComposed { sigma, driver } => (
                "sde-composed",
                serde_json::to_value(SdeParams {
                    sigma,
                    driver: *driver,
                }),
            ),
            Family::TripletIntegrated(t) => ("triplet-integrated", serde_json::to_value(t)),
            Family::Custom { re, im } => ("custom", serde_json::to_value(CustomParams { re, im })),
        };
        RawSymbol {
            family: family.to_string(),
            d: s.d,
            params: params.unwrap_or(Value::Null),
        }
    }
}

/// A symbol with its state-dependent parameters evaluated at one `x`.
pub enum Frozen {
    Radial(Box<dyn Fn(f64) -> Complex64 + Send + Sync>),
    General(Box<dyn Fn(&[f64]) -> Result<Complex64> + Send + Sync>),
}

impl Frozen {
    pub fn eval(&self, xi: &[f64]) -> Result<Complex64> {
        match self {
            Frozen::Radial(f) => Ok(f(norm(xi))),
            Frozen::General(f) => f(xi),
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, Frozen::Radial(_))
    }
}

fn param(e: &Expr, x: &[f64], name: &str) -> Result<f64> {
    let v = e.eval(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(format!("{name}(x) = {v} is not finite at x = {x:?}")))
    }
}

fn pochhammer(z: f64, g: f64) -> f64 {
    (ln_gamma(z + g) - ln_gamma(z)).exp()
}

impl Symbol {
    pub fn stable_like(gamma: Expr, d: usize) -> Self {
        Symbol {
            d,
            family: Family::StableLike { gamma },
        }
    }

    pub fn levy(d: usize, terms: Vec<ExponentTerm>) -> Self {
        Symbol {
            d,
            family: Family::Levy { terms },
        }
    }

    fn check_shape(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        match &self.family {
            Family::TlpLike { .. } | Family::Lamperti { .. } | Family::Relativistic { .. } | Family::StableLike { .. } => {
                Ok(())
            }
            Family::Levy { terms } => {
                for t in terms {
                    let ok = match t {
                        ExponentTerm::Drift { b } => b.len() == self.d,
                        ExponentTerm::Gaussian { q } => q.len() == self.d && q.iter().all(|r| r.len() == self.d),
                        ExponentTerm::Stable { alpha, scale } => *alpha > 0.0 && *alpha <= 2.0 && *scale >= 0.0,
                        ExponentTerm::Atoms { atoms } => atoms.iter().all(|a| a.location.len() == self.d),
                    };
                    if !ok {
                        return Err(Error::domain(format!("malformed exponent term {t:?} for d = {}", self.d)));
                    }
                }
                Ok(())
            }
            Family::SdeComposed { sigma, driver } => {
                if sigma.len() != self.d || sigma.iter().any(|r| r.len() != driver.d) {
                    return Err(Error::domain(format!("σ must be {} × {}", self.d, driver.d)));
                }
                if sigma.iter().flatten().any(|e| !e.is_constant()) && !driver.is_levy() {
                    return Err(Error::domain("the driver of an SDE-composed symbol must be x-independent"));
                }
                Ok(())
            }
            Family::TripletIntegrated(t) => t.check_shape(self.d),
            Family::Custom { .. } => Ok(()),
        }
    }

    /// The symbol does not depend on `x`.
    pub fn is_levy(&self) -> bool {
        match &self.family {
            Family::Levy { .. } => true,
            Family::StableLike { gamma } => gamma.is_constant(),
            Family::Relativistic { mass, gamma } | Family::TlpLike { mass, gamma } | Family::Lamperti { mass, gamma } => {
                mass.is_constant() && gamma.is_constant()
            }
            Family::SdeComposed { sigma, driver } => sigma.iter().flatten().all(Expr::is_constant) && driver.is_levy(),
            Family::TripletIntegrated(t) => t.is_constant(),
            Family::Custom { .. } => false,
        }
    }

    /// Fixes the state and validates the parameters there.
    pub fn freeze(&self, x: &[f64]) -> Result<Frozen> {
        match &self.family {
            Family::StableLike { gamma } => {
                let g = param(gamma, x, "γ")?;
                if !(g > 0.0 && g <= 2.0) {
                    return Err(Error::domain(format!("stable-like γ(x) = {g} must lie in (0,2] at x = {x:?}")));
                }
                Ok(Frozen::Radial(Box::new(move |k| Complex64::new(k.powf(g), 0.0))))
            }
            Family::Relativistic { mass, gamma } => {
                let (m, g) = (param(mass, x, "m")?, param(gamma, x, "γ")?);
                if !(g > 0.0 && g < 2.0) || !(m >= 0.0) {
                    return Err(Error::domain(format!(
                        "relativistic symbol needs γ(x) ∈ (0,2) and m(x) ≥ 0, got γ = {g}, m = {m} at x = {x:?}"
                    )));
                }
                Ok(Frozen::Radial(Box::new(move |k| {
                    let v = if m > 0.0 {
                        m.powf(g) * (0.5 * g * (k * k / (m * m)).ln_1p()).exp_m1()
                    } else {
                        k.powf(g)
                    };
                    Complex64::new(v, 0.0)
                })))
            }
            Family::TlpLike { mass, gamma } => {
                let (m, g) = (param(mass, x, "m")?, param(gamma, x, "γ")?);
                if !(g > 0.0 && g < 1.0) || !(m > 0.0) {
                    return Err(Error::domain(format!(
                        "TLP-like symbol needs γ(x) ∈ (0,1) and m(x) > 0, got γ = {g}, m = {m} at x = {x:?}"
                    )));
                }
                Ok(Frozen::Radial(Box::new(move |k| {
                    let v = (k * k + m * m).powf(0.5 * g) * (g * (k / m).atan()).cos() - m.powf(g);
                    Complex64::new(v, 0.0)
                })))
            }
            Family::Lamperti { mass, gamma } => {
                let (m, g) = (param(mass, x, "m")?, param(gamma, x, "γ")?);
                if !(g > 0.0 && g < 1.0) || !(m > 0.0) {
                    return Err(Error::domain(format!(
                        "Lamperti symbol needs γ(x) ∈ (0,1) and m(x) > 0 (positive Γ arguments), got γ = {g}, m = {m} at x = {x:?}"
                    )));
                }
                let base = pochhammer(m, g);
                Ok(Frozen::Radial(Box::new(move |k| {
                    Complex64::new(pochhammer(k * k + m, g) - base, 0.0)
                })))
            }
            Family::Levy { terms } => {
                if terms.iter().all(|t| matches!(t, ExponentTerm::Stable { .. })) {
                    let pairs: Vec<(f64, f64)> = terms
                        .iter()
                        .filter_map(|t| match t {
                            ExponentTerm::Stable { alpha, scale } => Some((*alpha, *scale)),
                            _ => None,
                        })
                        .collect();
                    return Ok(Frozen::Radial(Box::new(move |k| {
                        Complex64::new(pairs.iter().map(|(a, s)| s * k.powf(*a)).sum(), 0.0)
                    })));
                }
                let terms = terms.clone();
                Ok(Frozen::General(Box::new(move |xi| Ok(closed_levy(&terms, xi)))))
            }
            Family::SdeComposed { sigma, driver } => {
                let s: Vec<Vec<f64>> = sigma
                    .iter()
                    .map(|row| row.iter().map(|e| param(e, x, "σ")).collect::<Result<_>>())
                    .collect::<Result<_>>()?;
                let inner = driver.freeze(&vec![0.0; driver.d])?;
                let k = driver.d;
                Ok(Frozen::General(Box::new(move |xi| {
                    let eta: Vec<f64> = (0..k).map(|j| s.iter().zip(xi).map(|(row, v)| row[j] * v).sum()).collect();
                    inner.eval(&eta)
                })))
            }
            Family::TripletIntegrated(t) => {
                let trip = t.at(x)?;
                let parts = trip.measure.decompose()?;
                Ok(Frozen::General(Box::new(move |xi| {
                    triplet::exponent_parts(&trip.drift, &trip.diffusion, &parts, xi).map(|e| e.value)
                })))
            }
            Family::Custom { re, im } => {
                let (re, im, x) = (re.clone(), im.clone(), x.to_vec());
                Ok(Frozen::General(Box::new(move |xi| {
                    Ok(Complex64::new(re.eval_with_freq(&x, xi), im.eval_with_freq(&x, xi)))
                })))
            }
        }
    }

    /// `q(x, ξ)`.
    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Result<Complex64> {
        if xi.len() != self.d {
            return Err(Error::domain(format!("ξ has length {} but d = {}", xi.len(), self.d)));
        }
        self.freeze(x)?.eval(xi)
    }

    /// `sup_{|ξ|≤r} Re q(x, ξ)`.
    pub fn sup_real(&self, frozen: &Frozen, r: f64) -> f64 {
        analysis::sup_by(self.d, frozen, r, |c| c.re)
    }

    /// Lévy triplet of `q(x, ·)` where the family has one in closed form.
    pub fn triplet_at(&self, x: &[f64]) -> Result<LevyTriplet> {
        let d = self.d;
        let zero_q = || vec![vec![0.0; d]; d];
        match &self.family {
            Family::StableLike { gamma } => {
                let g = param(gamma, x, "γ")?;
                if !(g > 0.0 && g <= 2.0) {
                    return Err(Error::domain(format!("stable-like γ(x) = {g} must lie in (0,2] at x = {x:?}")));
                }
                if g == 2.0 {
                    let mut q = zero_q();
                    (0..d).for_each(|i| q[i][i] = 2.0);
                    return Ok(LevyTriplet::new(vec![0.0; d], q, LevyMeasure::zero(d)));
                }
                Ok(LevyTriplet::new(vec![0.0; d], zero_q(), LevyMeasure::stable(g, d)?))
            }
            Family::Relativistic { mass, gamma } => {
                self.freeze(x)?;
                Ok(LevyTriplet::new(
                    vec![0.0; d],
                    zero_q(),
                    LevyMeasure::Density {
                        d,
                        density: DensitySpec::Relativistic {
                            mass: param(mass, x, "m")?,
                            gamma: param(gamma, x, "γ")?,
                        },
                    },
                ))
            }
            Family::TlpLike { mass, gamma } => {
                self.freeze(x)?;
                if d != 1 {
                    return Err(Error::Unsupported("TLP-like Lévy measure is available for d = 1".into()));
                }
                let g = param(gamma, x, "γ")?;
                Ok(LevyTriplet::new(
                    vec![0.0],
                    zero_q(),
                    LevyMeasure::Density {
                        d: 1,
                        density: DensitySpec::Tempered {
                            intensity: 0.5 / gamma_neg(g).abs(),
                            alpha: g,
                            rate: param(mass, x, "m")?,
                            truncation: None,
                        },
                    },
                ))
            }
            Family::Lamperti { .. } => Err(Error::Unsupported(
                "the Lamperti family has no closed-form Lévy triplet".into(),
            )),
            Family::Levy { terms } => levy_triplet(d, terms),
            Family::SdeComposed { sigma, driver } => {
                let s: Vec<Vec<f64>> = sigma
                    .iter()
                    .map(|row| row.iter().map(|e| param(e, x, "σ")).collect::<Result<_>>())
                    .collect::<Result<_>>()?;
                let inner = driver.triplet_at(&vec![0.0; driver.d])?;
                triplet::compose(&s, &inner)
            }
            Family::TripletIntegrated(t) => t.at(x),
            Family::Custom { .. } => Err(Error::Unsupported("custom symbols carry no Lévy triplet".into())),
        }
    }
}

/// `Γ(−γ)` for `γ ∈ (0,1)`.
fn gamma_neg(g: f64) -> f64 {
    gamma(1.0 - g) / (-g)
}

fn closed_levy(terms: &[ExponentTerm], xi: &[f64]) -> Complex64 {
    let dot = |a: &[f64]| a.iter().zip(xi).map(|(u, v)| u * v).sum::<f64>();
    let mut acc = Complex64::new(0.0, 0.0);
    for t in terms {
        match t {
            ExponentTerm::Drift { b } => acc -= Complex64::new(0.0, dot(b)),
            ExponentTerm::Gaussian { q } => {
                let quad: f64 = q.iter().zip(xi).map(|(row, xi_i)| xi_i * dot(row)).sum();
                acc += 0.5 * quad;
            }
            ExponentTerm::Stable { alpha, scale } => acc += scale * norm(xi).powf(*alpha),
            ExponentTerm::Atoms { atoms } => {
                for a in atoms {
                    let s = dot(&a.location);
                    let comp = if norm(&a.location) < 1.0 { s } else { 0.0 };
                    acc += a.weight * Complex64::new(1.0 - s.cos(), comp - s.sin());
                }
            }
        }
    }
    acc
}

fn levy_triplet(d: usize, terms: &[ExponentTerm]) -> Result<LevyTriplet> {
    let mut b = vec![0.0; d];
    let mut q = vec![vec![0.0; d]; d];
    let mut measures = Vec::new();
    for t in terms {
        match t {
            ExponentTerm::Drift { b: v } => b.iter_mut().zip(v).for_each(|(a, c)| *a += c),
            ExponentTerm::Gaussian { q: m } => {
                for (row, mrow) in q.iter_mut().zip(m) {
                    row.iter_mut().zip(mrow).for_each(|(a, c)| *a += c);
                }
            }
            ExponentTerm::Stable { alpha, scale } => {
                if *scale == 0.0 {
                    continue;
                }
                if *alpha == 2.0 {
                    (0..d).for_each(|i| q[i][i] += 2.0 * scale);
                } else {
                    measures.push(LevyMeasure::IsotropicPower {
                        d,
                        intensity: scale * c_alpha(*alpha, d)?,
                        alpha: *alpha,
                        truncation: None,
                    });
                }
            }
            ExponentTerm::Atoms { atoms } => measures.push(LevyMeasure::Atoms {
                d,
                atoms: atoms.clone(),
            }),
        }
    }
    let measure = match measures.len() {
        0 => LevyMeasure::zero(d),
        1 => measures.pop().expect("one measure"),
        _ => LevyMeasure::Sum { d, terms: measures },
    };
    Ok(LevyTriplet::new(b, q, measure))
}

/// Directions used for sup/sector grids: 64 on the circle, Fibonacci points
/// on the sphere, Halton points projected to the sphere for `d > 3`.
pub(crate) fn grid_directions(d: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..64)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 64.0;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..64)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / 64.0;
                    let rho = (1.0 - z * z).sqrt();
                    let phi = golden * k as f64;
                    vec![rho * phi.cos(), rho * phi.sin(), z]
                })
                .collect()
        }
        _ => {
            const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
            let halton = |mut i: u32, b: u32| {
                let (mut f, mut r) = (1.0, 0.0);
                while i > 0 {
                    f /= b as f64;
                    r += f * (i % b) as f64;
                    i /= b;
                }
                r
            };
            (1..=64u32)
                .map(|i| {
                    let v: Vec<f64> = (0..d).map(|j| 2.0 * halton(i, PRIMES[j % 16]) - 1.0).collect();
                    let n = norm(&v);
                    v.iter().map(|c| c / n).collect()
                })
                .collect()
        }
    }
}

impl Decomposed {
    /// `∫ (1 − e^{iy·ξ} + iy·ξ 1_{|y|<1}) ν(dy)`.
    pub fn exponent(&self, xi: &[f64]) -> Result<crate::quad::Estimate<Complex64>> {
        triplet::exponent_parts(&[], &[], self, xi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(src: &str) -> Symbol {
        serde_json::from_str(src).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let s = sym(r#"{"family":"stable-like","d":1,"params":{"gamma":0.5}}"#);
        assert_eq!(s.eval(&[0.3], &[4.0]).unwrap(), Complex64::new(2.0, 0.0));
        assert_eq!(s.eval(&[0.3], &[0.0]).unwrap(), Complex64::new(0.0, 0.0));
        let r = sym(r#"{"family":"relativistic","d":1,"params":{"mass":1,"gamma":1}}"#);
        let v = r.eval(&[0.0], &[3f64.sqrt()]).unwrap();
        assert!((v.re - 1.0).abs() < 1e-15 && v.im == 0.0);
    }

    #[test]
    fn out_of_range_parameters_are_domain_errors() {
        let s = sym(r#"{"family":"stable-like","d":1,"params":{"gamma":"2.5"}}"#);
        let e = s.eval(&[0.0], &[1.0]).unwrap_err();
        assert!(matches!(e, Error::Domain(ref m) if m.contains("(0,2]")), "{e}");
        let l = sym(r#"{"family":"lamperti","d":1,"params":{"mass":-1,"gamma":0.5}}"#);
        assert!(l.eval(&[0.0], &[1.0]).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = r#"{"family":"stable-like","d":1,"params":{"gamma":0.5,"gama":1}}"#;
        let e = serde_json::from_str::<Symbol>(bad).unwrap_err().to_string();
        assert!(e.contains("gama"), "{e}");
        assert!(serde_json::from_str::<Symbol>(r#"{"family":"foo","d":1}"#).is_err());
    }

    #[test]
    fn compound_poisson_closed_form() {
        let s = sym(r#"{"family":"levy","d":1,"params":{"terms":[{"kind":"atoms","atoms":[{"location":[1],"weight":2}]}]}}"#);
        let v = s.eval(&[0.0], &[PI]).unwrap();
        assert!((v - Complex64::new(4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn lamperti_and_tlp_vanish_at_zero() {
        for fam in ["lamperti", "tlp-like"] {
            let s = sym(&format!(r#"{{"family":"{fam}","d":1,"params":{{"mass":1.5,"gamma":0.4}}}}"#));
            assert!(s.eval(&[0.0], &[0.0]).unwrap().norm() < 1e-12);
            assert!(s.eval(&[0.0], &[2.0]).unwrap().re > 0.0);
        }
    }

    #[test]
    fn round_trip_through_json() {
        let s = sym(r#"{"family":"sde-composed","d":1,"params":{"sigma":[[2]],"driver":{"family":"stable-like","d":1,"params":{"gamma":1}}}}"#);
        let again: Symbol = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        let v = again.eval(&[0.0], &[1.5]).unwrap();
        assert!((v.re - 3.0).abs() < 1e-12);
    }
}
