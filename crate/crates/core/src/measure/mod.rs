//! Lévy measures: description, decomposition into rays, and singular
//! quadrature of moments, tails and compensators.

mod aux;
mod ops;
mod profile;

pub use aux::{
    equivalence_probe, moment_identity_check, kernel_identity_check, submultiplicative_bounds,
    EquivalenceProbe, Growth, IdentityCheck, SubmultiplicativeReport,
};
pub use ops::{c_alpha, compensator_drift, fractional_moment, tail_mass, MomentReport, Region};
pub use profile::Profile;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::expr::{norm, Expr};
use crate::quad::{self, GaussLegendre, ShellRule};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub location: Vec<f64>,
    pub weight: f64,
}

/// Radial or directional jump density.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DensitySpec {
    /// `n(y)` given by an expression in `y` (or `r = |y|`), with
    /// `n(y) ~ |y|^{-d-singularity}` near the origin.
    Expr {
        expr: Expr,
        singularity: f64,
        #[serde(default)]
        truncation: Option<f64>,
    },
    /// `c |y|^{-d-α} e^{-λ|y|}`.
    Tempered {
        intensity: f64,
        alpha: f64,
        rate: f64,
        #[serde(default)]
        truncation: Option<f64>,
    },
    /// Lévy measure of the relativistic exponent `(|ξ|²+m²)^{γ/2} − m^γ`.
    Relativistic { mass: f64, gamma: f64 },
}

/// Structured description of a Lévy measure on `ℝᵈ \ {0}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum LevyMeasure {
    Atoms {
        d: usize,
        atoms: Vec<Atom>,
    },
    /// `c |y|^{-d-α} dy`, optionally restricted to `|y| ≤ truncation`.
    IsotropicPower {
        d: usize,
        intensity: f64,
        alpha: f64,
        #[serde(default)]
        truncation: Option<f64>,
    },
    Density {
        d: usize,
        density: DensitySpec,
    },
    /// Image of `base` under `y ↦ M y`, `M` given row by row.
    Pushforward {
        base: Box<LevyMeasure>,
        map: Vec<Vec<f64>>,
    },
    /// Sum of measures on the same space.
    Sum {
        d: usize,
        terms: Vec<LevyMeasure>,
    },
}

/// One direction `θ` together with the radial profiles of the measure on the
/// rays `{rθ}` and `{−rθ}`.
#[derive(Clone, Debug)]
pub struct RayPair {
    pub dir: Vec<f64>,
    pub plus: Profile,
    pub minus: Profile,
    pub symmetric: bool,
}

/// A Lévy measure as exact atoms plus a finite family of ray pairs.
#[derive(Clone, Debug)]
pub struct Decomposed {
    pub d: usize,
    pub atoms: Vec<Atom>,
    pub pairs: Vec<RayPair>,
    /// Pairs carry total spherical mass only (no angular resolution).
    pub radial_only: bool,
    /// Some rays of a pushforward were mapped to the origin and dropped.
    pub degenerate: bool,
}

impl LevyMeasure {
    pub fn zero(d: usize) -> Self {
        LevyMeasure::Atoms { d, atoms: Vec::new() }
    }

    /// Isotropic α-stable measure with `ψ(ξ) = |ξ|^α`.
    pub fn stable(alpha: f64, d: usize) -> Result<Self> {
        Ok(LevyMeasure::IsotropicPower {
            d,
            intensity: c_alpha(alpha, d)?,
            alpha,
            truncation: None,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            LevyMeasure::Atoms { d, .. }
            | LevyMeasure::IsotropicPower { d, .. }
            | LevyMeasure::Density { d, .. }
            | LevyMeasure::Sum { d, .. } => *d,
            LevyMeasure::Pushforward { map, .. } => map.len(),
        }
    }

    pub fn is_finite_atomic(&self) -> bool {
        match self {
            LevyMeasure::Atoms { .. } => true,
            LevyMeasure::Pushforward { base, .. } => base.is_finite_atomic(),
            LevyMeasure::Sum { terms, .. } => terms.iter().all(LevyMeasure::is_finite_atomic),
            _ => false,
        }
    }

    /// Largest `|y|` in the support, `∞` if unbounded.
    pub fn support_radius(&self) -> f64 {
        match self {
            LevyMeasure::Atoms { atoms, .. } => atoms.iter().map(|a| norm(&a.location)).fold(0.0, f64::max),
            LevyMeasure::IsotropicPower { truncation, .. } => truncation.unwrap_or(f64::INFINITY),
            LevyMeasure::Density { density, .. } => match density {
                DensitySpec::Expr { truncation, .. } | DensitySpec::Tempered { truncation, .. } => {
                    truncation.unwrap_or(f64::INFINITY)
                }
                DensitySpec::Relativistic { .. } => f64::INFINITY,
            },
            LevyMeasure::Pushforward { base, map } => {
                let r = base.support_radius();
                if r == 0.0 {
                    0.0
                } else {
                    operator_norm(map) * r
                }
            }
            LevyMeasure::Sum { terms, .. } => terms.iter().map(LevyMeasure::support_radius).fold(0.0, f64::max),
        }
    }

    /// Checks parameter ranges and `∫ min(|y|²,1) ν(dy) < ∞`.
    pub fn validate(&self) -> Result<()> {
        self.check_params()?;
        let parts = self.decompose()?;
        let inner = ops::moment_of(&parts, 2.0, Region::unit_ball());
        if inner.divergent {
            return Err(Error::domain("∫_{|y|≤1} |y|² ν(dy) diverges"));
        }
        let tail = ops::tail_of(&parts, 1.0);
        if !tail.is_finite() {
            return Err(Error::domain("ν({|y| > 1}) is infinite"));
        }
        Ok(())
    }

    fn check_params(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        match self {
            LevyMeasure::Atoms { atoms, .. } => {
                for a in atoms {
                    if a.location.len() != d {
                        return Err(Error::domain(format!("atom {:?} has wrong dimension (d = {d})", a.location)));
                    }
                    if norm(&a.location) == 0.0 {
                        return Err(Error::domain("atoms must exclude the origin"));
                    }
                    if !(a.weight > 0.0 && a.weight.is_finite()) {
                        return Err(Error::domain(format!("atom weight {} must be positive", a.weight)));
                    }
                }
            }
            LevyMeasure::IsotropicPower {
                intensity,
                alpha,
                truncation,
                ..
            } => {
                if !(*intensity > 0.0) {
                    return Err(Error::domain("intensity must be positive"));
                }
                check_alpha(*alpha)?;
                check_trunc(*truncation)?;
            }
            LevyMeasure::Density { density, .. } => match density {
                DensitySpec::Expr {
                    singularity,
                    truncation,
                    ..
                } => {
                    if !(*singularity < 2.0) {
                        return Err(Error::domain("density singularity exponent must be < 2"));
                    }
                    check_trunc(*truncation)?;
                }
                DensitySpec::Tempered {
                    intensity,
                    alpha,
                    rate,
                    truncation,
                } => {
                    if !(*intensity > 0.0) || !(*rate >= 0.0) {
                        return Err(Error::domain("tempered density needs intensity > 0 and rate ≥ 0"));
                    }
                    check_alpha(*alpha)?;
                    check_trunc(*truncation)?;
                }
                DensitySpec::Relativistic { mass, gamma } => {
                    if !(*mass >= 0.0) {
                        return Err(Error::domain("relativistic mass must be ≥ 0"));
                    }
                    if !(*gamma > 0.0 && *gamma < 2.0) {
                        return Err(Error::domain(format!("relativistic γ = {gamma} must lie in (0,2)")));
                    }
                }
            },
            LevyMeasure::Pushforward { base, map } => {
                base.check_params()?;
                let k = base.dim();
                if map.is_empty() || map.iter().any(|row| row.len() != k) {
                    return Err(Error::domain(format!("pushforward map must be d × {k}")));
                }
            }
            LevyMeasure::Sum { terms, .. } => {
                for t in terms {
                    if t.dim() != d {
                        return Err(Error::domain(format!("summand of dimension {} in a sum on ℝ^{d}", t.dim())));
                    }
                    t.check_params()?;
                }
            }
        }
        Ok(())
    }

    /// `true` if the linear map of a pushforward lacks full column rank.
    pub fn degenerate_image(&self) -> bool {
        match self {
            LevyMeasure::Pushforward { base, map } => column_rank(map) < base.dim() || base.degenerate_image(),
            LevyMeasure::Sum { terms, .. } => terms.iter().any(LevyMeasure::degenerate_image),
            _ => false,
        }
    }

    pub fn decompose(&self) -> Result<Decomposed> {
        self.check_params()?;
        let d = self.dim();
        match self {
            LevyMeasure::Atoms { atoms, .. } => Ok(Decomposed {
                d,
                atoms: atoms.clone(),
                pairs: Vec::new(),
                radial_only: false,
                degenerate: false,
            }),
            LevyMeasure::IsotropicPower {
                intensity,
                alpha,
                truncation,
                ..
            } => {
                let trunc = truncation.unwrap_or(f64::INFINITY);
                isotropic(d, |w| Profile::Power {
                    c: w * intensity,
                    alpha: *alpha,
                    trunc,
                })
            }
            LevyMeasure::Density { density, .. } => match density {
                DensitySpec::Tempered {
                    intensity,
                    alpha,
                    rate,
                    truncation,
                } => {
                    let trunc = truncation.unwrap_or(f64::INFINITY);
                    isotropic(d, |w| Profile::Tempered {
                        c: w * intensity,
                        alpha: *alpha,
                        rate: *rate,
                        trunc,
                    })
                }
                DensitySpec::Relativistic { mass, gamma } => {
                    let (m, g) = (*mass, *gamma);
                    isotropic(d, |w| Profile::Func {
                        f: Arc::new(move |r| w * relativistic_density(r, d, m, g) * r.powi(d as i32 - 1)),
                        singularity: g,
                        trunc: f64::INFINITY,
                    })
                }
                DensitySpec::Expr {
                    expr,
                    singularity,
                    truncation,
                } => {
                    let trunc = truncation.unwrap_or(f64::INFINITY);
                    let (dirs, radial_only) = directions(d);
                    let pairs = dirs
                        .into_iter()
                        .map(|(dir, w)| {
                            let side = |sign: f64| {
                                let e = expr.clone();
                                let th: Vec<f64> = dir.iter().map(|v| sign * v).collect();
                                Profile::Func {
                                    f: Arc::new(move |r: f64| {
                                        let y: Vec<f64> = th.iter().map(|v| r * v).collect();
                                        w * e.eval(&y).max(0.0) * r.powi(d as i32 - 1)
                                    }),
                                    singularity: *singularity,
                                    trunc,
                                }
                            };
                            let (plus, minus) = (side(1.0), side(-1.0));
                            let symmetric = probe_equal(&plus, &minus);
                            RayPair {
                                dir,
                                plus,
                                minus,
                                symmetric,
                            }
                        })
                        .collect();
                    Ok(Decomposed {
                        d,
                        atoms: Vec::new(),
                        pairs,
                        radial_only,
                        degenerate: false,
                    })
                }
            },
            LevyMeasure::Pushforward { base, map } => {
                let inner = base.decompose()?;
                if inner.radial_only {
                    return Err(Error::Unsupported(
                        "pushforward of a measure without angular resolution (d > 3)".into(),
                    ));
                }
                let apply = |v: &[f64]| -> Vec<f64> {
                    map.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
                };
                let mut degenerate = inner.degenerate;
                let mut atoms = Vec::new();
                for a in &inner.atoms {
                    let loc = apply(&a.location);
                    if norm(&loc) == 0.0 {
                        degenerate = true;
                    } else {
                        atoms.push(Atom {
                            location: loc,
                            weight: a.weight,
                        });
                    }
                }
                let mut pairs = Vec::new();
                for p in &inner.pairs {
                    let v = apply(&p.dir);
                    let s = norm(&v);
                    if s == 0.0 {
                        degenerate = true;
                        continue;
                    }
                    pairs.push(RayPair {
                        dir: v.iter().map(|x| x / s).collect(),
                        plus: p.plus.scaled(s, 1.0),
                        minus: p.minus.scaled(s, 1.0),
                        symmetric: p.symmetric,
                    });
                }
                Ok(Decomposed {
                    d,
                    atoms,
                    pairs,
                    radial_only: false,
                    degenerate,
                })
            }
            LevyMeasure::Sum { terms, .. } => {
                let mut out = Decomposed {
                    d,
                    atoms: Vec::new(),
                    pairs: Vec::new(),
                    radial_only: false,
                    degenerate: false,
                };
                for t in terms {
                    let p = t.decompose()?;
                    out.atoms.extend(p.atoms);
                    out.pairs.extend(p.pairs);
                    out.radial_only |= p.radial_only;
                    out.degenerate |= p.degenerate;
                }
                Ok(out)
            }
        }
    }
}

impl Decomposed {
    /// Symmetric under `y ↦ −y`, detected from the structure alone.
    pub fn is_symmetric(&self) -> bool {
        self.pairs.iter().all(|p| p.symmetric) && atoms_symmetric(&self.atoms)
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.pairs.is_empty()
    }

    pub(crate) fn require_angular(&self) -> Result<()> {
        if self.radial_only {
            return Err(Error::Unsupported(format!(
                "directional quadrature is available for d ≤ 3 only (d = {})",
                self.d
            )));
        }
        Ok(())
    }
}

fn atoms_symmetric(atoms: &[Atom]) -> bool {
    atoms.iter().all(|a| {
        atoms.iter().any(|b| {
            b.weight == a.weight && b.location.iter().zip(&a.location).all(|(u, v)| *u == -*v)
        })
    })
}

fn probe_equal(a: &Profile, b: &Profile) -> bool {
    (0..48).all(|k| {
        let r = 2f64.powf(-30.0 + 1.25 * k as f64);
        a.density(r) == b.density(r)
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("α = {alpha} must lie in (0,2)")))
    }
}

fn check_trunc(t: Option<f64>) -> Result<()> {
    match t {
        Some(t) if !(t > 0.0) => Err(Error::domain("truncation radius must be positive")),
        _ => Ok(()),
    }
}

/// Angular rule: one direction per antipodal pair with its weight on the
/// unit sphere. For `d > 3` a single pair carrying half the sphere area.
pub(crate) fn directions(d: usize) -> (Vec<(Vec<f64>, f64)>, bool) {
    match d {
        1 => (vec![(vec![1.0], 1.0)], false),
        2 => {
            let n = 32;
            let w = PI / n as f64;
            let dirs = (0..n)
                .map(|k| {
                    let t = (k as f64 + 0.5) * PI / n as f64;
                    (vec![t.cos(), t.sin()], w)
                })
                .collect();
            (dirs, false)
        }
        3 => {
            let gl = GaussLegendre::new(8);
            let nphi = 16;
            let mut dirs = Vec::new();
            for (z, wz) in gl.nodes.iter().zip(&gl.weights) {
                if *z <= 0.0 {
                    continue;
                }
                let rho = (1.0 - z * z).sqrt();
                for j in 0..nphi {
                    let phi = (j as f64 + 0.5) * 2.0 * PI / nphi as f64;
                    dirs.push((vec![rho * phi.cos(), rho * phi.sin(), *z], wz * 2.0 * PI / nphi as f64));
                }
            }
            (dirs, false)
        }
        _ => {
            let mut e1 = vec![0.0; d];
            e1[0] = 1.0;
            (vec![(e1, 0.5 * sphere_area(d))], true)
        }
    }
}

/// Surface area of the unit sphere in `ℝᵈ`.
pub fn sphere_area(d: usize) -> f64 {
    let h = 0.5 * d as f64;
    2.0 * (h * PI.ln() - ln_gamma(h)).exp()
}

fn isotropic(d: usize, make: impl Fn(f64) -> Profile) -> Result<Decomposed> {
    let (dirs, radial_only) = directions(d);
    let pairs = dirs
        .into_iter()
        .map(|(dir, w)| {
            let p = make(w);
            RayPair {
                dir,
                plus: p.clone(),
                minus: p,
                symmetric: true,
            }
        })
        .collect();
    Ok(Decomposed {
        d,
        atoms: Vec::new(),
        pairs,
        radial_only,
        degenerate: false,
    })
}

/// Density at `|y| = r` of the Lévy measure with exponent
/// `(|ξ|²+m²)^{γ/2} − m^γ`, by Gaussian subordination.
pub fn relativistic_density(r: f64, d: usize, m: f64, gamma: f64) -> f64 {
    let h = 0.5 * gamma;
    let log_c = h.ln() - ln_gamma(1.0 - h);
    let dd = d as f64;
    let g = |s: f64| {
        let lg = log_c - (1.0 + h) * s.ln() - m * m * s - 0.5 * dd * (4.0 * PI * s).ln() - r * r / (4.0 * s);
        lg.exp()
    };
    let rule = ShellRule {
        rel_tol: 1e-12,
        ..ShellRule::default()
    };
    let s0 = 0.25 * r * r;
    let inner = quad::inward(g, s0, &ShellRule { min_radius: 0.0, ..rule });
    let outer = quad::outward(g, s0, f64::INFINITY, &rule);
    let v = |s: quad::ShellSum<f64>| s.finite().map(|e| e.value).unwrap_or(f64::NAN);
    v(inner) + v(outer)
}

fn operator_norm(map: &[Vec<f64>]) -> f64 {
    // Frobenius norm bounds the operator norm from above
    map.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

fn column_rank(map: &[Vec<f64>]) -> usize {
    let k = map.first().map(|r| r.len()).unwrap_or(0);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for j in 0..k {
        let mut col: Vec<f64> = map.iter().map(|row| row[j]).collect();
        let scale = norm(&col);
        for b in &basis {
            let dot: f64 = col.iter().zip(b).map(|(u, v)| u * v).sum();
            for (c, v) in col.iter_mut().zip(b) {
                *c -= dot * v;
            }
        }
        let n = norm(&col);
        if n > 1e-12 * scale.max(1e-300) && scale > 0.0 {
            basis.push(col.iter().map(|c| c / n).collect());
        }
    }
    basis.len()
}
