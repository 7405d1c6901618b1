use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{grid_directions, Frozen, Symbol};
use crate::error::{Error, Result};
use crate::expr::norm;

const RADII: usize = 128;
/// Geometric spacing of the sup grid: 128 radii span `2^{-127/6} r … r`.
const RADIAL_STEP: f64 = 1.0 / 6.0;
const REFINE_STEPS: usize = 48;

fn scaled(dir: &[f64], r: f64) -> Vec<f64> {
    dir.iter().map(|v| v * r).collect()
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = norm(&v);
    v.into_iter().map(|c| c / n).collect()
}

/// `sup_{|ξ|≤r} F(q(ξ))` on the radial-angular grid with a refinement
/// around the best node. `NaN` evaluations are ignored.
pub(crate) fn sup_by(d: usize, frozen: &Frozen, r: f64, score: impl Fn(Complex64) -> f64 + Sync) -> f64 {
    if !(r > 0.0) {
        return 0.0;
    }
    let dirs = if frozen.is_radial() {
        let mut e = vec![0.0; d];
        e[0] = 1.0;
        vec![e]
    } else {
        grid_directions(d)
    };
    let f = |xi: &[f64]| frozen.eval(xi).map(&score).unwrap_or(f64::NAN);
    let radius = |j: f64| r * 2f64.powf(-RADIAL_STEP * j);
    let values: Vec<(f64, usize, usize)> = (0..RADII)
        .into_par_iter()
        .map(|j| {
            let rj = radius(j as f64);
            dirs.iter()
                .enumerate()
                .map(|(k, dir)| (f(&scaled(dir, rj)), j, k))
                .fold((f64::NEG_INFINITY, j, 0), |a, b| if b.0 > a.0 { b } else { a })
        })
        .collect();
    let (mut best, j, k) = values
        .into_iter()
        .fold((f64::NEG_INFINITY, 0, 0), |a, b| if b.0 > a.0 { b } else { a });
    if !best.is_finite() {
        return best.max(0.0);
    }
    // radial bracket in grid units, clipped at |ξ| = r
    let mut pos = j as f64;
    let mut dir = dirs[k].clone();
    let neighbours: Vec<Vec<f64>> = if dirs.len() > 2 {
        let mut by_dist: Vec<(f64, usize)> = dirs
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(i, v)| (v.iter().zip(&dir).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
            .collect();
        by_dist.sort_by(|a, b| a.0.total_cmp(&b.0));
        by_dist.iter().take(4).map(|(_, i)| dirs[*i].clone()).collect()
    } else {
        Vec::new()
    };
    let mut h = 1.0;
    let mut w = 0.5;
    for _ in 0..REFINE_STEPS {
        h *= 0.5;
        for cand in [pos - h, pos + h] {
            if cand < 0.0 {
                continue;
            }
            let v = f(&scaled(&dir, radius(cand)));
            if v > best {
                best = v;
                pos = cand;
            }
        }
        if !neighbours.is_empty() {
            let rr = radius(pos);
            let mut next = dir.clone();
            for n in &neighbours {
                for sign in [1.0, -1.0] {
                    let cand = unit(dir.iter().zip(n).map(|(a, b)| a + sign * w * (b - a)).collect());
                    let v = f(&scaled(&cand, rr));
                    if v > best {
                        best = v;
                        next = cand;
                    }
                }
            }
            dir = next;
            w *= 0.5;
        }
    }
    best
}

/// `sup_{|ξ|≤r} |q(x, ξ)|`, a grid lower bound.
pub fn symbol_sup(sym: &Symbol, x: &[f64], r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::precondition(format!("radius must be positive, got {r}")));
    }
    let frozen = sym.freeze(x)?;
    Ok(sup_by(sym.d, &frozen, r, |c| c.norm()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BgIndexEstimate {
    pub value: f64,
    pub slope_stderr: f64,
    /// Half-width used by the gap checks: `3·stderr + 1e−3`.
    pub band: f64,
    pub r_grid: Vec<f64>,
    pub per_r_sup: Vec<f64>,
    pub bounded: bool,
}

/// Blumenthal–Getoor index at infinity by log-log regression of
/// `sup_{|ξ|≤r}|q|` over the top half of `r = 2^0 … r_max`.
pub fn bg_index_infinity(sym: &Symbol, x: &[f64], r_max: Option<f64>) -> Result<BgIndexEstimate> {
    let kmax = r_max.map(|r| r.log2().round() as i32).unwrap_or(20).max(4);
    let frozen = sym.freeze(x)?;
    let r_grid: Vec<f64> = (0..=kmax).map(|k| 2f64.powi(k)).collect();
    let raw: Vec<f64> = r_grid.par_iter().map(|&r| sup_by(sym.d, &frozen, r, |c| c.norm())).collect();
    let mut per_r_sup = Vec::with_capacity(raw.len());
    let mut run = 0.0f64;
    for v in raw {
        run = run.max(v);
        per_r_sup.push(run);
    }
    let start = (kmax as usize).div_ceil(2);
    let top = &per_r_sup[start..];
    let first = top[0];
    let bounded = first <= 0.0 || top.iter().all(|v| (v - first).abs() <= 1e-9 * first.abs());
    if bounded {
        return Ok(BgIndexEstimate {
            value: 0.0,
            slope_stderr: 0.0,
            band: 1e-3,
            r_grid,
            per_r_sup,
            bounded: true,
        });
    }
    let xs: Vec<f64> = r_grid[start..].iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = top.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum::<f64>() / sxx;
    let resid: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - ybar - slope * (x - xbar)).powi(2))
        .sum();
    let stderr = (resid / (n - 2.0) / sxx).sqrt();
    Ok(BgIndexEstimate {
        value: slope.clamp(0.0, 2.0),
        slope_stderr: stderr,
        band: 3.0 * stderr + 1e-3,
        r_grid,
        per_r_sup,
        bounded: false,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectorGrid {
    pub radii: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
}

impl SectorGrid {
    /// Radii `2^{-10} … 2^{20}` times the sup-grid directions.
    pub fn standard(d: usize) -> Self {
        SectorGrid {
            radii: (-10..=20).map(|k| 2f64.powi(k)).collect(),
            directions: grid_directions(d),
        }
    }

    pub fn describe(&self) -> String {
        format!(
            "{} radii in [{:e}, {:e}] × {} directions",
            self.radii.len(),
            self.radii.iter().copied().fold(f64::INFINITY, f64::min),
            self.radii.iter().copied().fold(0.0, f64::max),
            self.directions.len()
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectorReport {
    pub constant: f64,
    /// Ratio increased strictly over the three largest radii.
    pub unbounded: bool,
    pub argmax: Vec<f64>,
    pub ratio_by_radius: Vec<(f64, f64)>,
    pub grid: String,
}

/// `sup |Im q| / max(Re q, 1e−300)` on a grid; `Im q = 0` gives ratio 0.
pub fn sector_constant(sym: &Symbol, x: &[f64], grid: &SectorGrid) -> Result<SectorReport> {
    if grid.radii.is_empty() || grid.directions.is_empty() {
        return Err(Error::precondition("sector grid must be nonempty"));
    }
    let frozen = sym.freeze(x)?;
    let mut radii = grid.radii.clone();
    radii.sort_by(f64::total_cmp);
    let rows: Vec<(f64, Vec<f64>)> = radii
        .par_iter()
        .map(|&r| {
            let mut best = (0.0, scaled(&grid.directions[0], r));
            for dir in &grid.directions {
                let xi = scaled(dir, r);
                let q = frozen.eval(&xi)?;
                let ratio = if q.im == 0.0 { 0.0 } else { q.im.abs() / q.re.max(1e-300) };
                if ratio > best.0 {
                    best = (ratio, xi);
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let (constant, argmax) = rows
        .iter()
        .fold((0.0, rows[0].1.clone()), |a, b| if b.0 > a.0 { b.clone() } else { a });
    let n = rows.len();
    let unbounded = n >= 3 && rows[n - 3].0 < rows[n - 2].0 && rows[n - 2].0 < rows[n - 1].0;
    Ok(SectorReport {
        constant,
        unbounded,
        argmax,
        ratio_by_radius: radii.iter().zip(&rows).map(|(r, row)| (*r, row.0)).collect(),
        grid: grid.describe(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiffusionReport {
    /// `2 Re q(x, rη) / r²` at the largest radius.
    pub value: f64,
    pub values: Vec<(f64, f64)>,
    pub decreasing: bool,
}

/// Proxy for `η·Q(x)η` from `2 Re q(x, rη)/r²` at `r = 2^18, 2^19, 2^20`.
pub fn diffusion_estimate(sym: &Symbol, x: &[f64], eta: &[f64]) -> Result<DiffusionReport> {
    if eta.len() != sym.d || (norm(eta) - 1.0).abs() > 1e-12 {
        return Err(Error::precondition("η must be a unit vector in ℝᵈ"));
    }
    let frozen = sym.freeze(x)?;
    let values: Vec<(f64, f64)> = [18, 19, 20]
        .iter()
        .map(|&k| {
            let r = 2f64.powi(k);
            Ok((r, 2.0 * frozen.eval(&scaled(eta, r))?.re / (r * r)))
        })
        .collect::<Result<_>>()?;
    let decreasing = values.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok(DiffusionReport {
        value: values[2].1,
        values,
        decreasing,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthReport {
    pub c_k: f64,
    pub worst_ratio: f64,
    pub worst: Option<(Vec<f64>, Vec<f64>)>,
    pub pass: bool,
}

/// Checks `|q(x,ξ)| ≤ 2 C_K (1 + |ξ|²)` with `C_K = sup_{x∈K} sup_{|ξ|≤1}|q(x,ξ)|`.
pub fn quadratic_growth_check(sym: &Symbol, states: &[Vec<f64>], xis: &[Vec<f64>]) -> Result<GrowthReport> {
    if states.is_empty() || xis.is_empty() {
        return Err(Error::precondition("probe sets must be nonempty"));
    }
    let frozen: Vec<Frozen> = states.iter().map(|x| sym.freeze(x)).collect::<Result<_>>()?;
    let c_k = frozen
        .iter()
        .map(|f| sup_by(sym.d, f, 1.0, |c| c.norm()))
        .fold(0.0, f64::max);
    let mut worst_ratio = 0.0;
    let mut worst = None;
    for (x, f) in states.iter().zip(&frozen) {
        for xi in xis {
            let q = f.eval(xi)?.norm();
            let bound = 2.0 * c_k * (1.0 + xi.iter().map(|v| v * v).sum::<f64>());
            let ratio = if q == 0.0 { 0.0 } else { q / bound };
            if ratio > worst_ratio {
                worst_ratio = ratio;
                worst = Some((x.clone(), xi.clone()));
            }
        }
    }
    Ok(GrowthReport {
        c_k,
        worst_ratio,
        worst,
        pass: worst_ratio <= 1.0,
    })
}

/// Frequencies `2^k θ`, `k = −4 … 12`, over the sup-grid directions.
pub fn default_frequency_probes(d: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; d]];
    for k in -4..=12 {
        for dir in grid_directions(d) {
            out.push(scaled(&dir, 2f64.powi(k)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    fn sym(src: &str) -> Symbol {
        serde_json::from_str(src).unwrap()
    }

    #[test]
    fn sup_examples() {
        let s = Symbol::stable_like(Expr::constant(0.7), 1);
        assert!((symbol_sup(&s, &[0.0], 2.0).unwrap() - 2f64.powf(0.7)).abs() < 1e-12);
        let cp = sym(r#"{"family":"levy","d":1,"params":{"terms":[{"kind":"atoms","atoms":[{"location":[1],"weight":2}]}]}}"#);
        for r in [1.0, 3.0, 3.2, 10.0, 100.0] {
            let v = symbol_sup(&cp, &[0.0], r).unwrap();
            assert!(v <= 4.0 + 1e-12);
            if r >= std::f64::consts::PI {
                assert!((v - 4.0).abs() < 1e-9, "r={r}: {v}");
            }
        }
        assert!(symbol_sup(&s, &[0.0], 1e-9).unwrap() < 1e-5);
    }

    #[test]
    fn bg_examples() {
        let s = Symbol::stable_like(Expr::constant(0.7), 1);
        let b = bg_index_infinity(&s, &[0.0], None).unwrap();
        assert!((b.value - 0.7).abs() < 0.02);
        let cp = sym(r#"{"family":"levy","d":1,"params":{"terms":[{"kind":"atoms","atoms":[{"location":[1],"weight":2}]}]}}"#);
        let b = bg_index_infinity(&cp, &[0.0], None).unwrap();
        assert!(b.bounded && b.value == 0.0);
        let rel = sym(r#"{"family":"relativistic","d":1,"params":{"mass":1,"gamma":1.5}}"#);
        assert!((bg_index_infinity(&rel, &[0.0], None).unwrap().value - 1.5).abs() < 0.05);
    }

    #[test]
    fn sector_examples() {
        let real = Symbol::stable_like(Expr::constant(1.2), 2);
        let r = sector_constant(&real, &[0.0, 0.0], &SectorGrid::standard(2)).unwrap();
        assert_eq!(r.constant, 0.0);
        assert!(!r.unbounded);
        let drift = sym(r#"{"family":"levy","d":1,"params":{"terms":[{"kind":"drift","b":[1]},{"kind":"stable","alpha":0.5,"scale":1}]}}"#);
        let r = sector_constant(&drift, &[0.0], &SectorGrid::standard(1)).unwrap();
        assert!(r.unbounded);
    }

    #[test]
    fn diffusion_examples() {
        let bm = sym(r#"{"family":"levy","d":2,"params":{"terms":[{"kind":"gaussian","q":[[2,0],[0,0]]}]}}"#);
        assert_eq!(diffusion_estimate(&bm, &[0.0, 0.0], &[1.0, 0.0]).unwrap().value, 2.0);
        assert_eq!(diffusion_estimate(&bm, &[0.0, 0.0], &[0.0, 1.0]).unwrap().value, 0.0);
        let s = Symbol::stable_like(Expr::constant(1.5), 1);
        let d = diffusion_estimate(&s, &[0.0], &[1.0]).unwrap();
        assert!(d.value <= 0.01 && d.decreasing);
    }

    #[test]
    fn growth_examples() {
        let s = Symbol::stable_like(Expr::constant(2.0), 1);
        let xis = default_frequency_probes(1);
        let g = quadratic_growth_check(&s, &[vec![0.0]], &xis).unwrap();
        assert!(g.pass && (g.c_k - 1.0).abs() < 1e-12 && g.worst_ratio < 1.0);
        let g = quadratic_growth_check(&s, &[vec![0.0]], &[vec![0.0]]).unwrap();
        assert!(g.pass);
    }
}
