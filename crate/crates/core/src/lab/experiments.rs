//! Vague convergence, maximal inequality, tail moments and uniform sweeps.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{csv_writer, discrepancy, moment_adaptive, ConvergenceReport, ConvergenceRow, LimitExperiment, MomentOptions};
use crate::error::{Error, Result};
use crate::expr::norm;
use crate::generator::TripletSource;
use crate::generator::{apply_on_grid, TestFunction};
use crate::holder::{domain_verdict, VariableOrderFn, VerdictStatus};
use crate::measure::{fractional_moment, tail_mass, Decomposed, Region};
use crate::sim::{hitting_rate_with, JumpSet, ProcessModel};
use crate::stats::{monte_carlo, monte_carlo_multi, MCEstimate};
use crate::symbol::symbol_sup;

/// `{r > 0 : rθ ∈ A}` as an interval `[a, b]`, empty if `a ≥ b`.
fn ray_interval(set: &JumpSet, dir: &[f64]) -> (f64, f64) {
    match set {
        JumpSet::Annulus { inner, outer } => (*inner, *outer),
        JumpSet::Box { lo, hi } => {
            let (mut a, mut b) = (0.0f64, f64::INFINITY);
            for ((l, h), v) in lo.iter().zip(hi).zip(dir) {
                if *v == 0.0 {
                    if !(*l <= 0.0 && *h >= 0.0) {
                        return (0.0, 0.0);
                    }
                    continue;
                }
                let (s, e) = if *v > 0.0 { (l / v, h / v) } else { (h / v, l / v) };
                a = a.max(s);
                b = b.min(e);
            }
            (a, b)
        }
    }
}

/// `ν(A)` from the atoms and ray profiles of `ν`.
fn set_mass(parts: &Decomposed, set: &JumpSet) -> Result<f64> {
    if parts.radial_only && matches!(set, JumpSet::Box { .. }) {
        return Err(Error::Unsupported(format!(
            "boxes need angular resolution of ν, unavailable in d = {}",
            parts.d
        )));
    }
    let mut total = 0.0;
    for a in &parts.atoms {
        if set.on_boundary(&a.location) {
            return Err(Error::precondition(format!(
                "atom at {:?} lies on the boundary of the set, so ν(∂A) > 0",
                a.location
            )));
        }
        if set.contains(&a.location) {
            total += a.weight;
        }
    }
    for p in &parts.pairs {
        let minus: Vec<f64> = p.dir.iter().map(|v| -v).collect();
        for (dir, prof) in [(&p.dir, &p.plus), (&minus, &p.minus)] {
            let (a, b) = ray_interval(set, dir);
            if a < b {
                total += prof.mass_beyond(a) - prof.mass_beyond(b);
            }
        }
    }
    Ok(total)
}

/// Hitting rates `t⁻¹ P^x(X_t − x ∈ A)` on the t-grid against `ν(x, A)`.
pub fn vague_convergence_experiment(
    exp: &LimitExperiment,
    model: &ProcessModel,
    x: &[f64],
    set: &JumpSet,
) -> Result<ConvergenceReport> {
    exp.validate()?;
    let d = model.dim();
    if x.len() != d {
        return Err(Error::domain(format!("state must lie in ℝ^{d}")));
    }
    set.check(d)?;
    let nu = model.triplet_at(x)?.measure;
    let parts = nu.decompose()?;
    let reference = set_mass(&parts, set)?;
    let sim = model.compile()?;
    let mut notes = Vec::new();
    if d > 1 && !parts.pairs.is_empty() {
        notes.push(format!("ν(A) from {} ray pairs", parts.pairs.len()));
    }
    for (eps, var) in sim.small_jump_report() {
        notes.push(format!("small jumps below {eps:.3e} dropped (variance {var:.3e} per unit time)"));
    }
    let mut rows = Vec::with_capacity(exp.t_grid.len());
    for (k, &t) in exp.t_grid.iter().enumerate() {
        let steps = if sim.is_levy() { 0 } else { exp.steps };
        let est = hitting_rate_with(&sim, x, set, t, exp.n, exp.steps, &exp.seed.child(k as u64))?;
        rows.push(ConvergenceRow {
            t,
            estimate: est,
            discrepancy: discrepancy(est.mean, est.stderr, reference),
            steps,
        });
    }
    Ok(ConvergenceReport::build(
        format!("t⁻¹ P(X_t − x ∈ A) → ν(A) at x = {x:?}"),
        exp,
        rows,
        reference,
        0.0,
        notes,
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaximalRow {
    pub r: f64,
    /// `t⁻¹ P(sup_{s ≤ t} |X_s − x| ≥ r)` per t (grid supremum).
    pub rates: Vec<MCEstimate>,
    /// Max over the three smallest t.
    pub rate: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaximalReport {
    pub t_grid: Vec<f64>,
    pub rows: Vec<MaximalRow>,
    /// Least-squares slopes of `log rate` and `log bound` against `log r`.
    pub rate_slope: Option<f64>,
    pub bound_slope: f64,
    pub max_ratio: f64,
    pub ratio_ok: bool,
    /// `None` when fewer than three rates are positive.
    pub slope_ok: Option<bool>,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl MaximalReport {
    /// Columns `r, t, rate, stderr, bound`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["r", "t", "rate", "stderr", "bound"])?;
        for row in &self.rows {
            for (t, e) in self.t_grid.iter().zip(&row.rates) {
                w.write_record([
                    row.r.to_string(),
                    t.to_string(),
                    e.mean.to_string(),
                    e.stderr.to_string(),
                    row.bound.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Finite ratio bound asserted for the unknown constant `c(x)`.
pub const MAX_RATIO: f64 = 50.0;
pub const SLOPE_TOLERANCE: f64 = 0.15;

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln() / n, b + y.ln() / n));
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in points {
        sxy += (x.ln() - mx) * (y.ln() - my);
        sxx += (x.ln() - mx).powi(2);
    }
    sxy / sxx
}

pub fn default_r_grid() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0, 8.0]
}

/// Crossing rates of the running supremum against `sup_{|ξ| ≤ 1/r} |q(x, ξ)|`.
pub fn maximal_inequality_experiment(
    exp: &LimitExperiment,
    model: &ProcessModel,
    x: &[f64],
    r_grid: &[f64],
) -> Result<MaximalReport> {
    exp.validate()?;
    let d = model.dim();
    if x.len() != d {
        return Err(Error::domain(format!("state must lie in ℝ^{d}")));
    }
    if r_grid.is_empty() || r_grid.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::domain("r-grid must be nonempty and positive"));
    }
    let sym = model.symbol();
    let sim = model.compile()?;
    let k = r_grid.len();
    let mut per_t: Vec<Vec<MCEstimate>> = Vec::with_capacity(exp.t_grid.len());
    for (i, &t) in exp.t_grid.iter().enumerate() {
        sim.run(x, t, exp.steps, None, &mut exp.seed.rng(u64::MAX))?;
        let est = monte_carlo_multi(exp.n, k, &exp.seed.child(i as u64), |rng, out| match sim.run(x, t, exp.steps, None, rng) {
            Ok(e) => {
                for (o, r) in out.iter_mut().zip(r_grid) {
                    *o = if e.sup >= *r { 1.0 / t } else { 0.0 };
                }
            }
            Err(_) => out.fill(f64::NAN),
        });
        if est.iter().any(|e| !e.mean.is_finite()) {
            return Err(Error::domain("the Euler scheme left the admissible parameter range"));
        }
        per_t.push(est);
    }
    let tail = exp.tail_indices();
    let mut rows = Vec::with_capacity(k);
    for (j, &r) in r_grid.iter().enumerate() {
        let rates: Vec<MCEstimate> = per_t.iter().map(|v| v[j]).collect();
        let rate = rates[tail.clone()].iter().map(|e| e.mean).fold(0.0, f64::max);
        let bound = symbol_sup(&sym, x, 1.0 / r)?;
        let ratio = if rate == 0.0 { 0.0 } else { rate / bound };
        rows.push(MaximalRow {
            r,
            rates,
            rate,
            bound,
            ratio,
        });
    }
    let positive: Vec<(f64, f64)> = rows.iter().filter(|w| w.rate > 0.0).map(|w| (w.r, w.rate)).collect();
    let bounds: Vec<(f64, f64)> = rows.iter().filter(|w| w.bound > 0.0).map(|w| (w.r, w.bound)).collect();
    let bound_slope = if bounds.len() >= 2 { slope(&bounds) } else { 0.0 };
    let rate_slope = (positive.len() >= 3).then(|| slope(&positive));
    let max_ratio = rows.iter().map(|w| w.ratio).fold(0.0, f64::max);
    let ratio_ok = max_ratio.is_finite() && max_ratio <= MAX_RATIO;
    let slope_ok = rate_slope.map(|s| (s - bound_slope).abs() <= SLOPE_TOLERANCE);
    let notes = vec![
        "supremum over the simulation grid (a lower bound of the path supremum)".to_string(),
        format!(
            "small-t rate is the maximum over the {} smallest t",
            tail.len()
        ),
    ];
    Ok(MaximalReport {
        t_grid: exp.t_grid.clone(),
        rows,
        rate_slope,
        bound_slope,
        max_ratio,
        ratio_ok,
        slope_ok,
        pass: ratio_ok && slope_ok != Some(false),
        notes,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailBoundReport {
    pub a: f64,
    pub radius: f64,
    /// `t⁻¹ E[|X_t − x|^a 1{|X_t − x| > R}]` per t.
    pub rows: Vec<(f64, MCEstimate)>,
    /// `∫_{|y|>R} |y|^a ν(dy)`, `+∞` if divergent.
    pub reference: f64,
    pub divergent: bool,
    /// `R^a ν(|y| > R)` for `R > 0`.
    pub boundary_term: f64,
    /// Min over the three smallest t and its standard error.
    pub liminf: f64,
    pub liminf_stderr: f64,
    /// `boundary_term + liminf + 3·stderr − reference`.
    pub margin: f64,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl TailBoundReport {
    /// Columns `t, mean, stderr, reference`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["t", "mean", "stderr", "reference"])?;
        for (t, e) in &self.rows {
            w.write_record([t.to_string(), e.mean.to_string(), e.stderr.to_string(), self.reference.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Checks `∫_{|y|>R} |y|^a ν ≤ R^a ν(|y|>R) 1{R>0} + liminf_t t⁻¹ E[|X_t−x|^a 1{|X_t−x|>R}]`.
pub fn moment_tail_bound_experiment(
    exp: &LimitExperiment,
    model: &ProcessModel,
    x: &[f64],
    a: f64,
    radius: f64,
) -> Result<TailBoundReport> {
    exp.validate()?;
    let d = model.dim();
    if x.len() != d {
        return Err(Error::domain(format!("state must lie in ℝ^{d}")));
    }
    if !(a > 0.0) {
        return Err(Error::domain(format!("moment order a = {a} must be positive")));
    }
    if !(radius >= 0.0) {
        return Err(Error::domain("R must be nonnegative"));
    }
    let nu = model.triplet_at(x)?.measure;
    let mut notes = Vec::new();
    let moment = fractional_moment(&nu, a, Region::Exterior { radius, closed: false })?;
    if moment.divergent {
        notes.push(format!("∫_{{|y|>{radius}}} |y|^{a} ν(dy) diverges"));
    }
    let boundary_term = if radius > 0.0 { radius.powf(a) * tail_mass(&nu, radius)? } else { 0.0 };
    let sim = model.compile()?;
    let mut rows = Vec::with_capacity(exp.t_grid.len());
    for (k, &t) in exp.t_grid.iter().enumerate() {
        crate::sim::endpoint(&sim, x, t, exp.steps, &mut exp.seed.rng(u64::MAX), &mut vec![0.0; d])?;
        let est = monte_carlo(exp.n, &exp.seed.child(k as u64), |rng| {
            let mut y = vec![0.0; d];
            if crate::sim::endpoint(&sim, x, t, exp.steps, rng, &mut y).is_err() {
                return f64::NAN;
            }
            y.iter_mut().zip(x).for_each(|(v, b)| *v -= b);
            let r = norm(&y);
            if r > radius {
                r.powf(a) / t
            } else {
                0.0
            }
        });
        if !est.mean.is_finite() {
            return Err(Error::domain("the Euler scheme left the admissible parameter range"));
        }
        rows.push((t, est));
    }
    let tail = exp.tail_indices();
    let best = rows[tail.clone()]
        .iter()
        .min_by(|p, q| p.1.mean.total_cmp(&q.1.mean))
        .map(|p| p.1)
        .expect("nonempty t-grid");
    notes.push(format!("liminf proxied by the minimum over the {} smallest t", tail.len()));
    let margin = boundary_term + best.mean + 3.0 * best.stderr - moment.value;
    Ok(TailBoundReport {
        a,
        radius,
        rows,
        reference: moment.value,
        divergent: moment.divergent,
        boundary_term,
        liminf: best.mean,
        liminf_stderr: best.stderr,
        margin,
        pass: !moment.divergent && margin > 0.0,
        notes,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub t: f64,
    /// `sup_x |MC(x) − Lf(x)|` over the state grid.
    pub sup_discrepancy: f64,
    /// `3 · max_x stderr(x)`.
    pub noise_floor: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub verdict: VerdictStatus,
    pub states: Vec<Vec<f64>>,
    pub generator: Vec<f64>,
    pub rows: Vec<SweepRow>,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl SweepReport {
    /// Columns `t, sup_discrepancy, noise_floor`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["t", "sup_discrepancy", "noise_floor"])?;
        for r in &self.rows {
            w.write_record([r.t.to_string(), r.sup_discrepancy.to_string(), r.noise_floor.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `sup_x |t⁻¹(E^x f(X_t) − f(x)) − Lf(x)|` over a state grid, for each t.
/// Passes when each of the last three values is below its predecessor or
/// already at the noise floor.
pub fn uniform_limit_sweep(
    exp: &LimitExperiment,
    model: &ProcessModel,
    f: &TestFunction,
    grid: &[Vec<f64>],
    order: &VariableOrderFn,
) -> Result<SweepReport> {
    exp.validate()?;
    if grid.is_empty() {
        return Err(Error::precondition("state grid is empty"));
    }
    let sym = model.symbol();
    let verdict = domain_verdict(&sym, f, order, grid)?;
    if verdict.status == VerdictStatus::NotCertified {
        let failed: Vec<String> = verdict
            .reasons
            .iter()
            .filter(|r| !r.pass)
            .map(|r| format!("{}: {}", r.check, r.detail))
            .collect();
        return Err(Error::precondition(format!(
            "f is not certified in the domain: {}",
            failed.join("; ")
        )));
    }
    let table = apply_on_grid(model, order, f, grid)?;
    let mut generator = Vec::with_capacity(grid.len());
    for row in &table.rows {
        match row.value {
            Some(v) => generator.push(v),
            None => {
                return Err(Error::precondition(format!("Lf at {:?} unavailable: {}", row.x, row.status)));
            }
        }
    }
    let sim = model.compile()?;
    let opts = MomentOptions::default();
    let mut rows = Vec::with_capacity(exp.t_grid.len());
    for (k, &t) in exp.t_grid.iter().enumerate() {
        let (mut sup, mut se): (f64, f64) = (0.0, 0.0);
        for (i, x) in grid.iter().enumerate() {
            let seeds = exp.seed.child(k as u64).child(i as u64);
            let (est, _) = moment_adaptive(&sim, f, x, t, exp, opts.stopped_in.as_ref(), &seeds)?;
            sup = sup.max((est.mean - generator[i]).abs());
            se = se.max(est.stderr);
        }
        rows.push(SweepRow {
            t,
            sup_discrepancy: sup,
            noise_floor: 3.0 * se,
        });
    }
    let last = &rows[rows.len().saturating_sub(3)..];
    let pass = last
        .windows(2)
        .all(|w| w[1].sup_discrepancy <= w[0].sup_discrepancy || w[1].sup_discrepancy <= w[1].noise_floor);
    Ok(SweepReport {
        verdict: verdict.status,
        states: grid.to_vec(),
        generator,
        rows,
        pass,
        notes: vec![format!("{} states; Lf by quadrature per state", grid.len())],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::FunctionSpec;
    use crate::measure::{Atom, LevyMeasure};
    use crate::stats::SeedPolicy;
    use crate::symbol::{ExponentTerm, Symbol};

    fn cp() -> ProcessModel {
        ProcessModel::compound_poisson(
            vec![Atom {
                location: vec![1.0],
                weight: 2.0,
            }],
            None,
        )
    }

    fn quick(t_grid: Vec<f64>, n: usize) -> LimitExperiment {
        LimitExperiment {
            t_grid,
            n,
            seed: SeedPolicy::new(21),
            ..LimitExperiment::default()
        }
    }

    #[test]
    fn set_masses() {
        let stable = LevyMeasure::stable(1.0, 1).unwrap().decompose().unwrap();
        let m = set_mass(&stable, &JumpSet::interval(1.0, 2.0)).unwrap();
        assert!((m - 0.5 / std::f64::consts::PI).abs() < 1e-12);
        let m = set_mass(&stable, &JumpSet::interval(-2.0, -1.0)).unwrap();
        assert!((m - 0.5 / std::f64::consts::PI).abs() < 1e-12);
        let m = set_mass(&stable, &JumpSet::Annulus { inner: 1.0, outer: 2.0 }).unwrap();
        assert!((m - 1.0 / std::f64::consts::PI).abs() < 1e-12);
        let atoms = LevyMeasure::Atoms {
            d: 1,
            atoms: vec![Atom {
                location: vec![1.0],
                weight: 2.0,
            }],
        }
        .decompose()
        .unwrap();
        assert_eq!(set_mass(&atoms, &JumpSet::interval(0.5, 1.5)).unwrap(), 2.0);
        assert_eq!(set_mass(&atoms, &JumpSet::interval(5.0, 6.0)).unwrap(), 0.0);
        assert!(matches!(
            set_mass(&atoms, &JumpSet::interval(1.0, 2.0)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn planar_boxes_use_rays() {
        // isotropic 1-stable in the plane: the quadrant box [1,2]² carries the
        // radial mass of angles in a sub-arc
        let nu = LevyMeasure::stable(1.0, 2).unwrap().decompose().unwrap();
        let quarter = set_mass(&nu, &JumpSet::Box { lo: vec![0.0, 1.0], hi: vec![1e9, 1e9] }).unwrap();
        assert!(quarter > 0.0 && quarter.is_finite());
        let full = set_mass(&nu, &JumpSet::Annulus { inner: 1.0, outer: 1e9 }).unwrap();
        assert!(quarter < full);
    }

    #[test]
    fn compound_poisson_vague_limit() {
        let rep = vague_convergence_experiment(&quick(vec![1e-2, 1e-3], 200_000), &cp(), &[0.0], &JumpSet::interval(0.5, 1.5)).unwrap();
        assert_eq!(rep.reference, 2.0);
        assert!(rep.pass, "{rep:?}");
        let none = vague_convergence_experiment(&quick(vec![1e-2, 1e-3], 10_000), &cp(), &[0.0], &JumpSet::interval(5.0, 6.0)).unwrap();
        assert_eq!(none.extrapolated, 0.0);
        assert!(none.pass);
    }

    #[test]
    fn compound_poisson_crossings() {
        let rep = maximal_inequality_experiment(&quick(vec![1e-1, 1e-2, 1e-3], 100_000), &cp(), &[0.0], &[0.25, 0.5, 0.9, 1.5]).unwrap();
        for row in &rep.rows[..3] {
            assert!((row.rate - 2.0).abs() < 0.2, "{row:?}");
            assert!(row.bound.is_finite() && row.bound > 0.0);
        }
        assert!(rep.rows[3].rate < 0.2);
        assert!(rep.ratio_ok);
    }

    #[test]
    fn brownian_crossings_vanish() {
        let m = ProcessModel::Levy {
            symbol: Symbol::levy(1, vec![ExponentTerm::Gaussian { q: vec![vec![1.0]] }]),
            small_jumps: Default::default(),
        };
        let rep = maximal_inequality_experiment(&quick(vec![1e-2, 1e-3, 1e-4], 20_000), &m, &[0.0], &[1.0, 2.0]).unwrap();
        assert!(rep.rows.iter().all(|r| r.rate == 0.0));
        assert!(rep.pass && rep.slope_ok.is_none());
    }

    #[test]
    fn compound_poisson_tail_moment() {
        let rep = moment_tail_bound_experiment(&quick(vec![1e-1, 1e-2, 1e-3], 200_000), &cp(), &[0.0], 1.0, 0.5).unwrap();
        assert!((rep.reference - 2.0).abs() < 1e-12);
        assert!((rep.boundary_term - 1.0).abs() < 1e-12);
        assert!(rep.pass);
        assert!((rep.rows.last().unwrap().1.mean - 2.0).abs() < 0.2);
    }

    #[test]
    fn zero_function_sweep_is_identically_zero() {
        let f = FunctionSpec::Zero { d: 1 }.build().unwrap();
        let grid: Vec<Vec<f64>> = (-2..=2).map(|k| vec![k as f64]).collect();
        let rep = uniform_limit_sweep(
            &quick(vec![1e-1, 1e-2, 1e-3], 1000),
            &ProcessModel::stable(0.5, 1),
            &f,
            &grid,
            &VariableOrderFn::constant(0.8),
        )
        .unwrap();
        assert!(rep.rows.iter().all(|r| r.sup_discrepancy == 0.0 && r.noise_floor == 0.0));
        assert!(rep.pass);
    }
}
