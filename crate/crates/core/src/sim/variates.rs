//! Exact random variates for stable and related laws.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

fn uniform_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Symmetric α-stable with `E e^{iξS} = e^{−|ξ|^α}` (Chambers–Mallows–Stuck).
pub fn symmetric_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = PI * (uniform_open(rng) - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    if alpha == 2.0 {
        let z: f64 = StandardNormal.sample(rng);
        return std::f64::consts::SQRT_2 * z;
    }
    let w: f64 = Exp1.sample(rng);
    (alpha * v).sin() / v.cos().powf(1.0 / alpha) * ((v * (1.0 - alpha)).cos() / w).powf((1.0 - alpha) / alpha)
}

/// `t^{1/α}·S` for `S` as in [`symmetric_stable`], from the same draws but
/// with one `exp` in place of three `powf`; the Euler loop lives here.
fn scaled_symmetric_stable<R: Rng + ?Sized>(alpha: f64, t: f64, rng: &mut R) -> f64 {
    if alpha == 1.0 || alpha == 2.0 {
        return t.powf(1.0 / alpha) * symmetric_stable(alpha, rng);
    }
    let v = PI * (uniform_open(rng) - 0.5);
    let w: f64 = Exp1.sample(rng);
    let b = 1.0 - alpha;
    let log = (t.ln() - v.cos().ln() + b * ((v * b).cos().ln() - w.ln())) / alpha;
    (alpha * v).sin() * log.exp()
}

/// Positive ρ-stable with `E e^{−λS} = e^{−λ^ρ}`, `ρ ∈ (0, 1]` (Kanter).
pub fn positive_stable<R: Rng + ?Sized>(rho: f64, rng: &mut R) -> f64 {
    if rho >= 1.0 {
        return 1.0;
    }
    let u = PI * uniform_open(rng);
    let e: f64 = Exp1.sample(rng);
    let a = (rho * u).sin() / u.sin().powf(1.0 / rho);
    a * ((1.0 - rho) * u).sin().powf((1.0 - rho) / rho) / e.powf((1.0 - rho) / rho)
}

/// Writes `√(2s)·N(0, I)` into `out`.
pub fn gaussian_at<R: Rng + ?Sized>(s: f64, rng: &mut R, out: &mut [f64]) {
    let k = (2.0 * s).sqrt();
    for o in out.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *o = k * z;
    }
}

/// Isotropic stable increment with `E e^{iξ·X} = e^{−t|ξ|^α}`, added to `out`.
pub fn isotropic_stable<R: Rng + ?Sized>(alpha: f64, t: f64, rng: &mut R, out: &mut [f64]) {
    if out.len() == 1 {
        out[0] += scaled_symmetric_stable(alpha, t, rng);
        return;
    }
    let scale = t.powf(1.0 / alpha);
    // Brownian motion run at an (α/2)-stable clock
    let s = positive_stable(0.5 * alpha, rng);
    let k = scale * (2.0 * s).sqrt();
    for o in out.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *o += k * z;
    }
}

/// Relativistic increment, `E e^{iξ·X} = e^{−t((|ξ|²+m²)^{γ/2} − m^γ)}`,
/// added to `out`. The subordinator is the (γ/2)-stable clock tilted by
/// `e^{−m²S}`, sampled by rejection in pieces of mass `t m^γ ≤ 1`.
pub fn relativistic<R: Rng + ?Sized>(mass: f64, gamma: f64, t: f64, rng: &mut R, out: &mut [f64]) {
    let rho = 0.5 * gamma;
    let m2 = mass * mass;
    let pieces = (t * mass.powf(gamma)).ceil().max(1.0) as usize;
    let tp = t / pieces as f64;
    let clock_scale = tp.powf(1.0 / rho);
    let mut clock = 0.0;
    for _ in 0..pieces {
        loop {
            let s = clock_scale * positive_stable(rho, rng);
            if m2 == 0.0 || uniform_open(rng) <= (-m2 * s).exp() {
                clock += s;
                break;
            }
        }
    }
    let k = (2.0 * clock).sqrt();
    for o in out.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *o += k * z;
    }
}

/// Uniform point on the unit sphere of `ℝᵈ` (a random sign for `d = 1`).
pub fn unit_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    if out.len() == 1 {
        out[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return;
    }
    if out.len() == 2 {
        let a = 2.0 * PI * rng.random::<f64>();
        out[0] = a.cos();
        out[1] = a.sin();
        return;
    }
    loop {
        let mut s = 0.0;
        for o in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *o = z;
            s += z * z;
        }
        if s > 0.0 {
            let k = s.sqrt().recip();
            out.iter_mut().for_each(|o| *o *= k);
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::SeedPolicy;

    fn ecf(samples: &[f64], xi: f64) -> f64 {
        samples.iter().map(|x| (xi * x).cos()).sum::<f64>() / samples.len() as f64
    }

    #[test]
    fn scaled_sampler_matches_plain() {
        for &alpha in &[0.3, 0.7, 1.0, 1.4, 1.9, 2.0] {
            let seeds = SeedPolicy::new(5);
            let (mut a, mut b) = (seeds.rng(0), seeds.rng(0));
            for _ in 0..1000 {
                let x = scaled_symmetric_stable(alpha, 0.01, &mut a);
                let y = 0.01f64.powf(1.0 / alpha) * symmetric_stable(alpha, &mut b);
                assert!((x - y).abs() <= 1e-9 * y.abs().max(1e-300), "{alpha}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn symmetric_stable_characteristic_function() {
        let mut rng = SeedPolicy::new(11).rng(0);
        for alpha in [0.5, 1.0, 1.5, 2.0] {
            let xs: Vec<f64> = (0..200_000).map(|_| symmetric_stable(alpha, &mut rng)).collect();
            for xi in [0.3, 1.0, 2.0] {
                let want = (-f64::powf(xi, alpha)).exp();
                assert!((ecf(&xs, xi) - want).abs() < 0.01, "α={alpha} ξ={xi}");
            }
        }
    }

    #[test]
    fn positive_stable_laplace_transform() {
        let mut rng = SeedPolicy::new(12).rng(0);
        for rho in [0.25, 0.5, 0.75] {
            let xs: Vec<f64> = (0..200_000).map(|_| positive_stable(rho, &mut rng)).collect();
            for lam in [0.5, 1.0, 3.0] {
                let got = xs.iter().map(|s| (-lam * s).exp()).sum::<f64>() / xs.len() as f64;
                let want = (-f64::powf(lam, rho)).exp();
                assert!((got - want).abs() < 0.01, "ρ={rho} λ={lam}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn isotropic_stable_in_two_dimensions() {
        let mut rng = SeedPolicy::new(13).rng(0);
        let t = 0.7;
        let alpha = 1.2;
        let mut sum = 0.0;
        let n = 200_000;
        let xi = [0.6, -0.8];
        for _ in 0..n {
            let mut x = [0.0; 2];
            isotropic_stable(alpha, t, &mut rng, &mut x);
            sum += (xi[0] * x[0] + xi[1] * x[1]).cos();
        }
        let want = (-t * 1f64.powf(alpha)).exp();
        assert!((sum / n as f64 - want).abs() < 0.01);
    }

    #[test]
    fn relativistic_characteristic_function() {
        let mut rng = SeedPolicy::new(14).rng(0);
        let (m, g, t) = (1.0, 1.0, 2.5);
        let n = 200_000;
        for xi in [0.5, 1.0, 3f64.sqrt()] {
            let mut sum = 0.0;
            for _ in 0..n {
                let mut x = [0.0];
                relativistic(m, g, t, &mut rng, &mut x);
                sum += (xi * x[0]).cos();
            }
            let psi = (xi * xi + m * m).powf(0.5 * g) - m.powf(g);
            assert!((sum / n as f64 - (-t * psi).exp()).abs() < 0.01, "ξ={xi}");
        }
    }

    #[test]
    fn directions_are_unit() {
        let mut rng = SeedPolicy::new(15).rng(0);
        for d in 1..5 {
            let mut v = vec![0.0; d];
            unit_direction(&mut rng, &mut v);
            let n: f64 = v.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }
}
