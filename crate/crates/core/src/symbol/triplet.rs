use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{norm, Expr};
use crate::measure::{c_alpha, Decomposed, LevyMeasure};
use crate::quad::Estimate;

/// Drift, Gaussian covariance and jump measure of a Lévy exponent.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyTriplet {
    pub drift: Vec<f64>,
    pub diffusion: Vec<Vec<f64>>,
    pub measure: LevyMeasure,
}

impl LevyTriplet {
    pub fn new(drift: Vec<f64>, diffusion: Vec<Vec<f64>>, measure: LevyMeasure) -> Self {
        LevyTriplet {
            drift,
            diffusion,
            measure,
        }
    }

    pub fn dim(&self) -> usize {
        self.measure.dim()
    }

    /// Shapes, exact symmetry and positive semidefiniteness of `Q`.
    pub fn check_coefficients(&self) -> Result<()> {
        let d = self.dim();
        if self.drift.len() != d {
            return Err(Error::domain(format!("drift has length {} but d = {d}", self.drift.len())));
        }
        if self.diffusion.len() != d || self.diffusion.iter().any(|r| r.len() != d) {
            return Err(Error::domain(format!("diffusion matrix must be {d} × {d}")));
        }
        for i in 0..d {
            for j in 0..i {
                if self.diffusion[i][j] != self.diffusion[j][i] {
                    return Err(Error::domain(format!("diffusion matrix is not symmetric at ({i},{j})")));
                }
            }
        }
        let min = min_eigenvalue(&self.diffusion);
        if min < -1e-12 {
            return Err(Error::domain(format!("diffusion matrix has eigenvalue {min:e} < 0")));
        }
        Ok(())
    }

    /// All triplet invariants, including `∫ min(|y|²,1) ν(dy) < ∞`.
    pub fn validate(&self) -> Result<()> {
        self.check_coefficients()?;
        self.measure.validate()
    }

    pub fn has_gaussian_part(&self) -> bool {
        self.diffusion.iter().flatten().any(|v| *v != 0.0)
    }

    pub fn has_drift(&self) -> bool {
        self.drift.iter().any(|v| *v != 0.0)
    }
}

pub(crate) fn min_eigenvalue(q: &[Vec<f64>]) -> f64 {
    let d = q.len();
    if d == 0 {
        return 0.0;
    }
    let m = DMatrix::from_fn(d, d, |i, j| q[i][j]);
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `ψ(ξ) = −i b·ξ + ½ ξ·Qξ + ∫ (1 − e^{iy·ξ} + iy·ξ 1_{(0,1)}(|y|)) ν(dy)`
/// with the jump part by quadrature.
pub fn exponent_from_triplet(triplet: &LevyTriplet, xi: &[f64]) -> Result<Estimate<Complex64>> {
    triplet.check_coefficients()?;
    if xi.len() != triplet.dim() {
        return Err(Error::domain(format!("ξ has length {} but d = {}", xi.len(), triplet.dim())));
    }
    let parts = triplet.measure.decompose()?;
    exponent_parts(&triplet.drift, &triplet.diffusion, &parts, xi)
}

pub(crate) fn exponent_parts(
    drift: &[f64],
    diffusion: &[Vec<f64>],
    parts: &Decomposed,
    xi: &[f64],
) -> Result<Estimate<Complex64>> {
    let dot = |a: &[f64]| a.iter().zip(xi).map(|(u, v)| u * v).sum::<f64>();
    let gauss: f64 = diffusion.iter().zip(xi).map(|(row, x)| x * dot(row)).sum();
    let mut est = Estimate::exact(Complex64::new(0.5 * gauss, -dot(drift)));
    for a in &parts.atoms {
        let s = dot(&a.location);
        let comp = if norm(&a.location) < 1.0 { s } else { 0.0 };
        est.value += a.weight * Complex64::new(1.0 - s.cos(), comp - s.sin());
    }
    if !parts.pairs.is_empty() && norm(xi) > 0.0 {
        parts.require_angular()?;
    }
    for p in &parts.pairs {
        let s = dot(&p.dir);
        if s == 0.0 {
            continue;
        }
        if p.symmetric {
            let e = p.plus.char_integral(s)?;
            est = est.combine(Estimate {
                value: Complex64::new(2.0 * e.value.re, 0.0),
                abs_error: 2.0 * e.abs_error,
                evaluations: e.evaluations,
            });
        } else {
            est = est.combine(p.plus.char_integral(s)?);
            est = est.combine(p.minus.char_integral(-s)?);
        }
    }
    Ok(est)
}

/// Triplet of `ξ ↦ ψ(σᵀξ)` from the triplet of `ψ`.
pub(crate) fn compose(sigma: &[Vec<f64>], inner: &LevyTriplet) -> Result<LevyTriplet> {
    let d = sigma.len();
    let k = inner.dim();
    let apply = |v: &[f64]| -> Vec<f64> { sigma.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect() };
    let mut drift = apply(&inner.drift);
    let mut q = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut acc = 0.0;
            for a in 0..k {
                for b in 0..k {
                    acc += sigma[i][a] * inner.diffusion[a][b] * sigma[j][b];
                }
            }
            q[i][j] = acc;
        }
    }
    for i in 0..d {
        for j in 0..i {
            q[j][i] = q[i][j];
        }
    }
    // ∫ σy (1_{|σy|<1} − 1_{|y|<1}) ν(dy)
    let parts = inner.measure.decompose()?;
    for a in &parts.atoms {
        let img = apply(&a.location);
        let w = (norm(&img) < 1.0) as i32 as f64 - (norm(&a.location) < 1.0) as i32 as f64;
        drift.iter_mut().zip(&img).for_each(|(b, v)| *b += a.weight * w * v);
    }
    let rule = crate::quad::ShellRule::default();
    for p in parts.pairs.iter().filter(|p| !p.symmetric) {
        let img = apply(&p.dir);
        let s = norm(&img);
        if s == 0.0 || s == 1.0 {
            continue;
        }
        let (lo, hi, sign) = if s < 1.0 { (1.0, 1.0 / s, 1.0) } else { (1.0 / s, 1.0, -1.0) };
        let first = |prof: &crate::measure::Profile| {
            prof.integrate(&|r| r, lo, hi, &rule)
                .finite()
                .map(|e| e.value)
                .ok_or(Error::CompensatorUndefined)
        };
        let net = sign * (first(&p.plus)? - first(&p.minus)?);
        drift.iter_mut().zip(&img).for_each(|(b, v)| *b += net * v);
    }
    let measure = if parts.is_empty() {
        LevyMeasure::zero(d)
    } else {
        LevyMeasure::Pushforward {
            base: Box::new(inner.measure.clone()),
            map: sigma.to_vec(),
        }
    };
    Ok(LevyTriplet::new(drift, q, measure))
}

/// State-indexed jump measures `ν(x, ·)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureFamily {
    Fixed {
        measure: LevyMeasure,
    },
    /// `c(x) |y|^{−d−α(x)}`
    IsotropicPower {
        d: usize,
        intensity: Expr,
        alpha: Expr,
        #[serde(default)]
        truncation: Option<f64>,
    },
    /// `c_{γ(x),d} |y|^{−d−γ(x)}`, the measure of `|ξ|^{γ(x)}`
    StableLike {
        d: usize,
        gamma: Expr,
    },
    /// Image of `base` under `y ↦ M(x) y`.
    Pushforward {
        base: LevyMeasure,
        map: Vec<Vec<Expr>>,
    },
}

impl MeasureFamily {
    pub fn dim(&self) -> usize {
        match self {
            MeasureFamily::Fixed { measure } => measure.dim(),
            MeasureFamily::IsotropicPower { d, .. } | MeasureFamily::StableLike { d, .. } => *d,
            MeasureFamily::Pushforward { map, .. } => map.len(),
        }
    }

    pub fn at(&self, x: &[f64]) -> Result<LevyMeasure> {
        let ev = |e: &Expr, name: &str| {
            let v = e.eval(x);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::domain(format!("{name}(x) is not finite at x = {x:?}")))
            }
        };
        Ok(match self {
            MeasureFamily::Fixed { measure } => measure.clone(),
            MeasureFamily::IsotropicPower {
                d,
                intensity,
                alpha,
                truncation,
            } => LevyMeasure::IsotropicPower {
                d: *d,
                intensity: ev(intensity, "intensity")?,
                alpha: ev(alpha, "α")?,
                truncation: *truncation,
            },
            MeasureFamily::StableLike { d, gamma } => {
                let g = ev(gamma, "γ")?;
                LevyMeasure::IsotropicPower {
                    d: *d,
                    intensity: c_alpha(g, *d)?,
                    alpha: g,
                    truncation: None,
                }
            }
            MeasureFamily::Pushforward { base, map } => LevyMeasure::Pushforward {
                base: Box::new(base.clone()),
                map: map
                    .iter()
                    .map(|row| row.iter().map(|e| ev(e, "M")).collect::<Result<_>>())
                    .collect::<Result<_>>()?,
            },
        })
    }

    fn is_constant(&self) -> bool {
        match self {
            MeasureFamily::Fixed { .. } => true,
            MeasureFamily::IsotropicPower { intensity, alpha, .. } => intensity.is_constant() && alpha.is_constant(),
            MeasureFamily::StableLike { gamma, .. } => gamma.is_constant(),
            MeasureFamily::Pushforward { map, .. } => map.iter().flatten().all(Expr::is_constant),
        }
    }
}

/// `x ↦ (b(x), Q(x), ν(x, ·))`; empty drift or diffusion means zero.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateTriplet {
    #[serde(default)]
    pub drift: Vec<Expr>,
    #[serde(default)]
    pub diffusion: Vec<Vec<Expr>>,
    pub measure: MeasureFamily,
    /// Certified `c` with `|q(x,ξ)| ≤ c (1 + |ξ|²)`.
    #[serde(default)]
    pub bound: Option<f64>,
}

impl StateTriplet {
    pub fn dim(&self) -> usize {
        self.measure.dim()
    }

    pub(crate) fn check_shape(&self, d: usize) -> Result<()> {
        if self.measure.dim() != d {
            return Err(Error::domain(format!("measure family has dimension {} but d = {d}", self.measure.dim())));
        }
        if !self.drift.is_empty() && self.drift.len() != d {
            return Err(Error::domain(format!("drift must have {d} entries")));
        }
        if !self.diffusion.is_empty() && (self.diffusion.len() != d || self.diffusion.iter().any(|r| r.len() != d)) {
            return Err(Error::domain(format!("diffusion must be {d} × {d}")));
        }
        Ok(())
    }

    pub(crate) fn is_constant(&self) -> bool {
        self.drift.iter().all(Expr::is_constant)
            && self.diffusion.iter().flatten().all(Expr::is_constant)
            && self.measure.is_constant()
    }

    /// The Lévy triplet at `x` (coefficient invariants checked).
    pub fn at(&self, x: &[f64]) -> Result<LevyTriplet> {
        let d = self.dim();
        self.check_shape(d)?;
        let drift = if self.drift.is_empty() {
            vec![0.0; d]
        } else {
            self.drift.iter().map(|e| e.eval(x)).collect()
        };
        let diffusion = if self.diffusion.is_empty() {
            vec![vec![0.0; d]; d]
        } else {
            self.diffusion
                .iter()
                .map(|row| row.iter().map(|e| e.eval(x)).collect())
                .collect()
        };
        let t = LevyTriplet::new(drift, diffusion, self.measure.at(x)?);
        t.check_coefficients()?;
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Atom;

    #[test]
    fn half_stable_round_trip() {
        let t = LevyTriplet::new(vec![0.0], vec![vec![0.0]], LevyMeasure::stable(0.5, 1).unwrap());
        for xi in [0.25f64, 1.0, 4.0] {
            let v = exponent_from_triplet(&t, &[xi]).unwrap().value;
            assert!((v.re - xi.sqrt()).abs() < 1e-3 * xi.sqrt(), "{xi}: {v}");
            assert_eq!(v.im, 0.0);
        }
    }

    #[test]
    fn atoms_and_gaussian() {
        let t = LevyTriplet::new(
            vec![0.0],
            vec![vec![0.0]],
            LevyMeasure::Atoms {
                d: 1,
                atoms: vec![Atom {
                    location: vec![1.0],
                    weight: 2.0,
                }],
            },
        );
        let v = exponent_from_triplet(&t, &[0.7]).unwrap().value;
        let expect = 2.0 * (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, 0.7));
        assert!((v - expect).norm() < 1e-14);
        let g = LevyTriplet::new(
            vec![0.0, 0.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            LevyMeasure::zero(2),
        );
        assert_eq!(exponent_from_triplet(&g, &[1.0, 1.0]).unwrap().value, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn psd_and_symmetry_checks() {
        let bad = LevyTriplet::new(vec![0.0, 0.0], vec![vec![1.0, 2.0], vec![2.0, 1.0]], LevyMeasure::zero(2));
        assert!(bad.check_coefficients().is_err());
        let asym = LevyTriplet::new(vec![0.0, 0.0], vec![vec![1.0, 0.1], vec![0.0, 1.0]], LevyMeasure::zero(2));
        assert!(asym.check_coefficients().is_err());
    }

    #[test]
    fn isotropic_two_dimensional_stable() {
        let t = LevyTriplet::new(vec![0.0; 2], vec![vec![0.0; 2]; 2], LevyMeasure::stable(1.0, 2).unwrap());
        let v = exponent_from_triplet(&t, &[0.6, 0.8]).unwrap().value;
        assert!((v.re - 1.0).abs() < 5e-3, "{v}");
    }
}
