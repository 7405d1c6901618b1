use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{Decomposed, LevyMeasure};
use crate::error::{Error, Result};
use crate::expr::norm;
use crate::quad::ShellRule;

/// Integration region in `|y|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Region {
    /// `|y| ≤ radius` (`closed`) or `|y| < radius`.
    Ball { radius: f64, closed: bool },
    /// `|y| ≥ radius` (`closed`) or `|y| > radius`.
    Exterior { radius: f64, closed: bool },
}

impl Region {
    pub fn unit_ball() -> Self {
        Region::Ball {
            radius: 1.0,
            closed: true,
        }
    }

    pub fn beyond(radius: f64) -> Self {
        Region::Exterior { radius, closed: false }
    }

    pub fn contains(&self, r: f64) -> bool {
        match *self {
            Region::Ball { radius, closed } => r < radius || (closed && r == radius),
            Region::Exterior { radius, closed } => r > radius || (closed && r == radius),
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match *self {
            Region::Ball { radius, .. } => (0.0, radius),
            Region::Exterior { radius, .. } => (radius, f64::INFINITY),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    /// `+∞` when divergent.
    pub value: f64,
    pub abs_error: f64,
    pub nodes: usize,
    pub divergent: bool,
}

impl MomentReport {
    fn divergent(nodes: usize) -> Self {
        MomentReport {
            value: f64::INFINITY,
            abs_error: f64::INFINITY,
            nodes,
            divergent: true,
        }
    }
}

/// `c_{α,d} = α 2^{α−1} π^{−d/2} Γ((α+d)/2) / Γ(1−α/2)`, the constant that
/// makes `c_{α,d}|y|^{−d−α}dy` the Lévy measure of `|ξ|^α`.
pub fn c_alpha(alpha: f64, d: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::domain(format!("c_α needs α ∈ (0,2), got {alpha}")));
    }
    if d == 0 {
        return Err(Error::domain("c_α needs d ≥ 1"));
    }
    let dd = d as f64;
    let log = alpha.ln() + (alpha - 1.0) * std::f64::consts::LN_2 - 0.5 * dd * std::f64::consts::PI.ln()
        + ln_gamma(0.5 * (alpha + dd))
        - ln_gamma(1.0 - 0.5 * alpha);
    Ok(log.exp())
}

/// `∫_region |y|^κ ν(dy)`, with `+∞` reported when the shell sums do not decay.
pub fn fractional_moment(nu: &LevyMeasure, kappa: f64, region: Region) -> Result<MomentReport> {
    if !(kappa > 0.0) {
        return Err(Error::domain(format!("moment order κ = {kappa} must be positive")));
    }
    if let Region::Exterior { radius, .. } = region {
        if !(radius >= 0.0) {
            return Err(Error::domain("exterior radius must be ≥ 0"));
        }
    }
    Ok(moment_of(&nu.decompose()?, kappa, region))
}

pub(crate) fn moment_of(parts: &Decomposed, kappa: f64, region: Region) -> MomentReport {
    let mut value = 0.0;
    let mut err = 0.0;
    let mut nodes = 0;
    for a in &parts.atoms {
        let r = norm(&a.location);
        if region.contains(r) {
            value += a.weight * r.powf(kappa);
        }
    }
    let (lo, hi) = region.bounds();
    let rule = ShellRule::default();
    let weight = |r: f64| r.powf(kappa);
    for p in &parts.pairs {
        let sides: &[&super::Profile] = if p.symmetric { &[&p.plus] } else { &[&p.plus, &p.minus] };
        let mult = if p.symmetric { 2.0 } else { 1.0 };
        for prof in sides {
            match prof.integrate(&weight, lo, hi, &rule).finite() {
                Some(e) => {
                    value += mult * e.value;
                    err += mult * e.abs_error;
                    nodes += e.evaluations;
                }
                None => return MomentReport::divergent(nodes),
            }
        }
    }
    MomentReport {
        value,
        abs_error: err,
        nodes,
        divergent: false,
    }
}

/// `ν({|y| > R})`.
pub fn tail_mass(nu: &LevyMeasure, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::domain("tail radius must be positive"));
    }
    Ok(tail_of(&nu.decompose()?, radius))
}

pub(crate) fn tail_of(parts: &Decomposed, radius: f64) -> f64 {
    let atoms: f64 = parts
        .atoms
        .iter()
        .filter(|a| norm(&a.location) > radius)
        .map(|a| a.weight)
        .sum();
    let rays: f64 = parts
        .pairs
        .iter()
        .map(|p| {
            if p.symmetric {
                2.0 * p.plus.mass_beyond(radius)
            } else {
                p.plus.mass_beyond(radius) + p.minus.mass_beyond(radius)
            }
        })
        .sum();
    atoms + rays
}

/// `∫_{|y|<1} y ν(dy)`; exactly zero for structurally symmetric measures.
pub fn compensator_drift(nu: &LevyMeasure) -> Result<Vec<f64>> {
    compensator_of(&nu.decompose()?)
}

pub(crate) fn compensator_of(parts: &Decomposed) -> Result<Vec<f64>> {
    let mut b = vec![0.0; parts.d];
    if parts.is_symmetric() {
        return Ok(b);
    }
    for a in &parts.atoms {
        if norm(&a.location) < 1.0 {
            for (bi, yi) in b.iter_mut().zip(&a.location) {
                *bi += a.weight * yi;
            }
        }
    }
    let rule = ShellRule::default();
    let first = |r: f64| r;
    for p in parts.pairs.iter().filter(|p| !p.symmetric) {
        parts.require_angular()?;
        let side = |prof: &super::Profile| -> Result<f64> {
            prof.integrate(&first, 0.0, 1.0, &rule)
                .finite()
                .map(|e| e.value)
                .ok_or(Error::CompensatorUndefined)
        };
        let net = side(&p.plus)? - side(&p.minus)?;
        for (bi, th) in b.iter_mut().zip(&p.dir) {
            *bi += net * th;
        }
    }
    Ok(b)
}
