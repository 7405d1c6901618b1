//! Radial jump densities along a single direction.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{self, Estimate, ShellRule, ShellSum};

type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Jump intensity per unit radius along one ray, angular weight and
/// Jacobian already folded in. Zero beyond `trunc`.
#[derive(Clone)]
pub enum Profile {
    /// `c r^{-1-α}`
    Power { c: f64, alpha: f64, trunc: f64 },
    /// `c r^{-1-α} e^{-λ r}`
    Tempered { c: f64, alpha: f64, rate: f64, trunc: f64 },
    /// Arbitrary density; `singularity` is the exponent `a` in `r^{-1-a}` near 0.
    Func {
        f: RadialFn,
        singularity: f64,
        trunc: f64,
    },
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Power { c, alpha, trunc } => {
                write!(f, "Power(c={c}, α={alpha}, trunc={trunc})")
            }
            Profile::Tempered {
                c,
                alpha,
                rate,
                trunc,
            } => write!(f, "Tempered(c={c}, α={alpha}, λ={rate}, trunc={trunc})"),
            Profile::Func {
                singularity, trunc, ..
            } => write!(f, "Func(sing={singularity}, trunc={trunc})"),
        }
    }
}

impl Profile {
    pub fn density(&self, r: f64) -> f64 {
        if r > self.trunc() || r <= 0.0 {
            return 0.0;
        }
        match self {
            Profile::Power { c, alpha, .. } => c * r.powf(-1.0 - alpha),
            Profile::Tempered { c, alpha, rate, .. } => c * r.powf(-1.0 - alpha) * (-rate * r).exp(),
            Profile::Func { f, .. } => f(r),
        }
    }

    pub fn trunc(&self) -> f64 {
        match self {
            Profile::Power { trunc, .. }
            | Profile::Tempered { trunc, .. }
            | Profile::Func { trunc, .. } => *trunc,
        }
    }

    pub fn singularity(&self) -> f64 {
        match self {
            Profile::Power { alpha, .. } | Profile::Tempered { alpha, .. } => *alpha,
            Profile::Func { singularity, .. } => *singularity,
        }
    }

    /// Profile of the image measure under `y ↦ s·y` along this ray,
    /// multiplied by the angular weight `w`.
    pub fn scaled(&self, s: f64, w: f64) -> Profile {
        match self {
            Profile::Power { c, alpha, trunc } => Profile::Power {
                c: c * w * s.powf(*alpha),
                alpha: *alpha,
                trunc: trunc * s,
            },
            Profile::Tempered {
                c,
                alpha,
                rate,
                trunc,
            } => Profile::Tempered {
                c: c * w * s.powf(*alpha),
                alpha: *alpha,
                rate: rate / s,
                trunc: trunc * s,
            },
            Profile::Func {
                f,
                singularity,
                trunc,
            } => {
                let f = f.clone();
                Profile::Func {
                    f: Arc::new(move |r| w * f(r / s) / s),
                    singularity: *singularity,
                    trunc: trunc * s,
                }
            }
        }
    }

    /// `∫_lo^hi F(r) p(r) dr` for a non-oscillatory `F`, by shells.
    /// `lo = 0` walks inward from `min(hi, 1)` and outward beyond.
    pub fn integrate(&self, weight: &impl Fn(f64) -> f64, lo: f64, hi: f64, rule: &ShellRule) -> ShellSum<f64> {
        let hi = hi.min(self.trunc());
        if hi <= lo {
            return ShellSum::Finite(quad::Estimate::exact(0.0));
        }
        let g = |r: f64| {
            let p = self.density(r);
            if p == 0.0 { 0.0 } else { weight(r) * p }
        };
        if lo <= 0.0 {
            let split = hi.min(1.0);
            let inner = quad::inward(g, split, rule);
            if split >= hi {
                return inner;
            }
            let outer = quad::outward(g, split, hi, rule);
            return join(inner, outer);
        }
        quad::outward(g, lo, hi, rule)
    }

    /// `∫_{r > lo} p(r) dr`.
    pub fn mass_beyond(&self, lo: f64) -> f64 {
        let t = self.trunc();
        if lo >= t {
            return 0.0;
        }
        match self {
            Profile::Power { c, alpha, .. } => {
                let upper = if t.is_finite() { t.powf(-alpha) } else { 0.0 };
                c * (lo.powf(-alpha) - upper) / alpha
            }
            _ => self
                .integrate(&|_| 1.0, lo, f64::INFINITY, &ShellRule::default())
                .finite()
                .map(|e| e.value)
                .unwrap_or(f64::INFINITY),
        }
    }
}

/// `1 − e^{ix} + ix` (compensated) or `1 − e^{ix}`, free of cancellation.
fn kernel(x: f64, compensated: bool) -> Complex64 {
    let h = (0.5 * x).sin();
    let re = 2.0 * h * h;
    let im = if compensated {
        if x.abs() < 0.1 {
            let x2 = x * x;
            x * x2 * (1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 / 5040.0))
        } else {
            x - x.sin()
        }
    } else {
        -x.sin()
    };
    Complex64::new(re, im)
}

impl Profile {
    /// `∫_0^∞ p(r) (1 − e^{irs} + irs·1_{r<1}) dr`.
    ///
    /// Oscillatory ranges are resolved by panels up to `r = 64/|s|`; beyond
    /// that the non-oscillatory part is integrated by shells and the
    /// remaining `∫ p e^{irs}` is taken from two integration-by-parts terms.
    pub fn char_integral(&self, s: f64) -> Result<Estimate<Complex64>> {
        if s == 0.0 {
            return Ok(Estimate::exact(Complex64::new(0.0, 0.0)));
        }
        let a = s.abs();
        let t = self.trunc();
        let rule = ShellRule::default();
        let g = |r: f64| kernel(r * s, r < 1.0) * self.density(r);
        let r1 = (1.0 / a).min(t).min(1.0);
        let mut est = quad::inward(g, r1, &rule).finite().ok_or(Error::NonConvergence {
            partial: f64::NAN,
            residual: f64::INFINITY,
        })?;
        let l = (64.0 / a).max(r1);
        let direct_end = l.min(t);
        let panel = 2.0 / a;
        let mut lo = r1;
        for hi in [1.0f64.min(direct_end), direct_end] {
            if hi > lo {
                let (v, n) = quad::log_panels(&g, lo, hi, panel);
                est = est.combine(Estimate {
                    value: v,
                    abs_error: 0.0,
                    evaluations: n,
                });
                lo = hi;
            }
        }
        if t <= l {
            return Ok(est);
        }
        // ∫_l^t p(r)(1 + irs·1_{r<1}) dr − ∫_l^t p(r) e^{irs} dr
        let mass = self.mass_beyond(l);
        let first = if l < 1.0 {
            self.integrate(&|r| r, l, 1.0, &rule).finite().map(|e| e.value).unwrap_or(f64::NAN)
        } else {
            0.0
        };
        let deriv = |r: f64| {
            let h = 1e-5 * r;
            (self.density(r + h) - self.density(r - h)) / (2.0 * h)
        };
        let ibp = |r: f64, p: f64, dp: f64| Complex64::from_polar(1.0, r * s) * Complex64::new(dp / (s * s), -p / s);
        let mut osc = -ibp(l, self.density(l), deriv(l));
        if t.is_finite() {
            let inside = t * (1.0 - 1e-12);
            osc += ibp(t, self.density(inside), deriv(inside * (1.0 - 1e-5)));
        }
        let value = Complex64::new(mass, s * first) - osc;
        Ok(est.combine(Estimate {
            value,
            abs_error: deriv(l).abs() / (s * s) / (a * l),
            evaluations: 8,
        }))
    }
}

pub(crate) fn join(a: ShellSum<f64>, b: ShellSum<f64>) -> ShellSum<f64> {
    match (a, b) {
        (ShellSum::Finite(x), ShellSum::Finite(y)) => ShellSum::Finite(x.combine(y)),
        (ShellSum::Divergent { partial, tail_shells }, other)
        | (other @ ShellSum::Finite(_), ShellSum::Divergent { partial, tail_shells }) => {
            let extra = match other {
                ShellSum::Finite(e) => e.value,
                ShellSum::Divergent { partial, .. } => partial,
            };
            ShellSum::Divergent {
                partial: partial + extra,
                tail_shells,
            }
        }
    }
}
