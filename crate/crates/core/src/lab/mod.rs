//! Monte Carlo experiments on the small-time behaviour of `X_t`: generalized
//! moments, vague convergence of `t⁻¹ P^x(X_t − x ∈ ·)`, the maximal
//! inequality, the tail-moment bound and uniform limits over state grids.

mod experiments;

pub use experiments::{
    default_r_grid, maximal_inequality_experiment, moment_tail_bound_experiment, uniform_limit_sweep,
    vague_convergence_experiment, MaximalReport, MaximalRow, SweepReport, SweepRow, TailBoundReport, MAX_RATIO,
    SLOPE_TOLERANCE,
};

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{apply_pointwise, select_form, GeneratorForm, TestFunction, TripletSource};
use crate::measure::{submultiplicative_bounds, Growth};
use crate::sim::{probe_grid, Ball, ProcessModel, Simulator, DEFAULT_STEPS};
use crate::stats::{monte_carlo, MCEstimate, SeedPolicy};
use crate::symbol::LevyTriplet;

/// `8` geometric points from `1e−1` down to `1e−4`.
pub fn default_t_grid() -> Vec<f64> {
    (0..8).map(|k| 0.1 * 1e-3f64.powf(k as f64 / 7.0)).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extrapolation {
    /// Value at the smallest `t`.
    #[default]
    LastPoint,
    /// Linear-in-`t` extrapolation through the two smallest `t`.
    Richardson,
}

/// Discretization of `t → 0`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitExperiment {
    pub t_grid: Vec<f64>,
    /// Replicates per `t`.
    pub n: usize,
    pub extrapolation: Extrapolation,
    pub seed: SeedPolicy,
    /// Euler steps per `[0, t]` for non-Lévy models and path statistics.
    pub steps: usize,
    /// Double the step count while the estimate moves by more than one
    /// standard error (at most 4 times). Non-Lévy models only.
    pub step_halving: bool,
}

impl Default for LimitExperiment {
    fn default() -> Self {
        LimitExperiment {
            t_grid: default_t_grid(),
            n: 100_000,
            extrapolation: Extrapolation::LastPoint,
            seed: SeedPolicy::default(),
            steps: DEFAULT_STEPS,
            step_halving: true,
        }
    }
}

impl LimitExperiment {
    pub fn validate(&self) -> Result<()> {
        if self.t_grid.is_empty() {
            return Err(Error::domain("t-grid is empty"));
        }
        if self.t_grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::domain("t-grid points must be positive"));
        }
        if self.t_grid.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::domain("t-grid must be strictly decreasing"));
        }
        if self.n < 1000 {
            return Err(Error::domain(format!("N = {} is below the minimum of 1000", self.n)));
        }
        if self.steps == 0 {
            return Err(Error::domain("steps must be positive"));
        }
        if self.extrapolation == Extrapolation::Richardson && self.t_grid.len() < 2 {
            return Err(Error::domain("Richardson extrapolation needs two t-points"));
        }
        Ok(())
    }

    /// Indices of the three smallest `t` (fewer if the grid is short).
    pub(crate) fn tail_indices(&self) -> std::ops::Range<usize> {
        self.t_grid.len().saturating_sub(3)..self.t_grid.len()
    }
}

/// Envelope `3·stderr + 0.05·|reference| + 1e−6`.
pub fn allowance(stderr: f64, reference: f64) -> f64 {
    3.0 * stderr + 0.05 * reference.abs() + 1e-6
}

pub fn discrepancy(value: f64, stderr: f64, reference: f64) -> f64 {
    (value - reference).abs() / allowance(stderr, reference)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub t: f64,
    pub estimate: MCEstimate,
    pub discrepancy: f64,
    /// Euler steps used (`0` for exact increments).
    pub steps: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub label: String,
    pub rows: Vec<ConvergenceRow>,
    pub extrapolation: Extrapolation,
    pub extrapolated: f64,
    pub extrapolated_stderr: f64,
    pub reference: f64,
    pub reference_error: f64,
    /// `3·stderr` and `0.05·|reference| + 1e−6`, the two parts of the envelope.
    pub statistical_allowance: f64,
    pub model_allowance: f64,
    pub discrepancy: f64,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl ConvergenceReport {
    fn build(
        label: impl Into<String>,
        exp: &LimitExperiment,
        rows: Vec<ConvergenceRow>,
        reference: f64,
        reference_error: f64,
        notes: Vec<String>,
    ) -> ConvergenceReport {
        let (extrapolated, extrapolated_stderr) = extrapolate(exp.extrapolation, &rows);
        let discrepancy = discrepancy(extrapolated, extrapolated_stderr, reference);
        ConvergenceReport {
            label: label.into(),
            rows,
            extrapolation: exp.extrapolation,
            extrapolated,
            extrapolated_stderr,
            reference,
            reference_error,
            statistical_allowance: 3.0 * extrapolated_stderr,
            model_allowance: 0.05 * reference.abs() + 1e-6,
            discrepancy,
            pass: discrepancy <= 1.0,
            notes,
        }
    }

    /// Columns `t, mean, stderr, reference, discrepancy`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["t", "mean", "stderr", "reference", "discrepancy"])?;
        for r in &self.rows {
            w.write_record([
                r.t.to_string(),
                r.estimate.mean.to_string(),
                r.estimate.stderr.to_string(),
                self.reference.to_string(),
                r.discrepancy.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn extrapolate(how: Extrapolation, rows: &[ConvergenceRow]) -> (f64, f64) {
    let last = rows.last().expect("nonempty t-grid");
    match how {
        Extrapolation::LastPoint => (last.estimate.mean, last.estimate.stderr),
        Extrapolation::Richardson => {
            let prev = &rows[rows.len() - 2];
            let (t1, t2) = (prev.t, last.t);
            let (v1, v2) = (prev.estimate.mean, last.estimate.mean);
            let (s1, s2) = (prev.estimate.stderr, last.estimate.stderr);
            let value = (t1 * v2 - t2 * v1) / (t1 - t2);
            let se = ((t1 * s2).powi(2) + (t2 * s1).powi(2)).sqrt() / (t1 - t2);
            (value, se)
        }
    }
}

/// Optional stopping and growth certificate for small-time moments.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentOptions {
    /// Use `X_{t∧τ_K}` for the exit time `τ_K` of this ball.
    pub stopped_in: Option<Ball>,
    /// Submultiplicative bound admitting an unbounded `f` without stopping.
    pub growth: Option<Growth>,
}

/// Checks that an unbounded `f` is admissible for `model` and returns a note.
fn admit_unbounded(model: &ProcessModel, f: &TestFunction, opts: &MomentOptions) -> Result<Option<String>> {
    if f.bounded || opts.stopped_in.is_some() {
        return Ok(None);
    }
    let Some(g) = &opts.growth else {
        return Err(Error::contract(format!(
            "{} is unbounded: supply a stopping ball, or a submultiplicative growth function \
             integrable and tight against the jump measures of a model with bounded coefficients",
            f.name
        )));
    };
    let grid = probe_grid(model.dim());
    let mut family = Vec::with_capacity(grid.len());
    for x in &grid {
        let tr = model.triplet_at(x)?;
        tr.check_coefficients()?;
        family.push(tr.measure);
    }
    let rep = submultiplicative_bounds(g, &family)?;
    if !(rep.integrable && rep.tight) {
        return Err(Error::contract(format!(
            "growth certificate for {} failed: {}",
            f.name, rep.verdict
        )));
    }
    // the growth function must dominate f away from the probe states
    let d = model.dim();
    let mut ratio: f64 = 0.0;
    for k in 0..=10 {
        let r = 2f64.powi(k);
        for i in 0..d {
            for s in [-1.0, 1.0] {
                let mut y = vec![0.0; d];
                y[i] = s * r;
                ratio = ratio.max(f.eval(&y).abs() / g.eval(r));
            }
        }
    }
    if !ratio.is_finite() {
        return Err(Error::contract(format!("{} is not dominated by the growth function", f.name)));
    }
    Ok(Some(format!("unbounded f admitted: {}", rep.verdict)))
}

/// Samples `(f(X_{t∧τ}) − f(x)) / t` with a fixed Euler step count.
fn moment_once(
    sim: &Simulator,
    f: &TestFunction,
    x: &[f64],
    t: f64,
    n: usize,
    steps: usize,
    stop: Option<&Ball>,
    seeds: &SeedPolicy,
) -> Result<MCEstimate> {
    let d = sim.dim();
    let fx = f.eval(x);
    let exact = sim.is_levy() && stop.is_none();
    // one probe run surfaces scheme errors before the parallel loop
    let mut probe = seeds.rng(u64::MAX);
    if exact {
        sim.increment(t, &mut probe, &mut vec![0.0; d])?;
    } else {
        sim.run(x, t, steps, stop, &mut probe)?;
    }
    let est = monte_carlo(n, seeds, |rng| {
        let end = if exact {
            let mut y = x.to_vec();
            match sim.increment(t, rng, &mut y) {
                Ok(()) => y,
                Err(_) => return f64::NAN,
            }
        } else {
            match sim.run(x, t, steps, stop, rng) {
                Ok(e) => e.x,
                Err(_) => return f64::NAN,
            }
        };
        (f.eval(&end) - fx) / t
    });
    if !est.mean.is_finite() {
        return Err(Error::domain(format!(
            "non-finite sample of (f(X_t) − f(x))/t at t = {t}; the scheme left the admissible range or f overflowed"
        )));
    }
    Ok(est)
}

/// `(1/t)(E^x f(X_{t∧τ_K}) − f(x))` with `N` replicates.
pub fn small_time_generalized_moment(
    model: &ProcessModel,
    f: &TestFunction,
    x: &[f64],
    t: f64,
    n: usize,
    opts: &MomentOptions,
    seeds: &SeedPolicy,
) -> Result<MCEstimate> {
    check_point(model, f, x)?;
    if !(t > 0.0) {
        return Err(Error::domain(format!("t = {t} must be positive")));
    }
    admit_unbounded(model, f, opts)?;
    let sim = model.compile()?;
    moment_once(&sim, f, x, t, n, DEFAULT_STEPS, opts.stopped_in.as_ref(), seeds)
}

fn check_point(model: &ProcessModel, f: &TestFunction, x: &[f64]) -> Result<()> {
    let d = model.dim();
    if x.len() != d || f.d != d {
        return Err(Error::domain(format!(
            "state has length {}, function dimension {}, model dimension {d}",
            x.len(),
            f.d
        )));
    }
    Ok(())
}

/// Moment at `t` with the step-halving diagnostic; returns the steps used.
fn moment_adaptive(
    sim: &Simulator,
    f: &TestFunction,
    x: &[f64],
    t: f64,
    exp: &LimitExperiment,
    stop: Option<&Ball>,
    seeds: &SeedPolicy,
) -> Result<(MCEstimate, usize)> {
    if sim.is_levy() && stop.is_none() {
        return Ok((moment_once(sim, f, x, t, exp.n, 0, None, seeds)?, 0));
    }
    let mut steps = exp.steps;
    let mut est = moment_once(sim, f, x, t, exp.n, steps, stop, &seeds.child(steps as u64))?;
    if !exp.step_halving || sim.is_levy() {
        return Ok((est, steps));
    }
    for _ in 0..4 {
        let finer = moment_once(sim, f, x, t, exp.n, 2 * steps, stop, &seeds.child(2 * steps as u64))?;
        let moved = (finer.mean - est.mean).abs();
        let se = (finer.stderr.powi(2) + est.stderr.powi(2)).sqrt();
        steps *= 2;
        est = finer;
        if moved < se {
            break;
        }
    }
    Ok((est, steps))
}

/// Generator form used for reference values: second order with a Gaussian
/// part, otherwise the form of the declared Hölder order, otherwise first
/// order when a gradient exists.
pub fn reference_form(tr: &LevyTriplet, f: &TestFunction, x: &[f64]) -> Result<GeneratorForm> {
    if tr.has_gaussian_part() {
        return Ok(GeneratorForm::SecondOrder);
    }
    if let Some(a) = f.order_at(x) {
        return select_form(a);
    }
    Ok(if f.has_gradient() {
        GeneratorForm::FirstOrder
    } else {
        GeneratorForm::ZeroOrder
    })
}

/// Per-`t` moments, extrapolation and comparison with `Lf(x)`. The reference
/// is computed by quadrature unless given.
pub fn limit_study(
    exp: &LimitExperiment,
    model: &ProcessModel,
    f: &TestFunction,
    x: &[f64],
    opts: &MomentOptions,
    reference: Option<f64>,
) -> Result<ConvergenceReport> {
    exp.validate()?;
    check_point(model, f, x)?;
    let mut notes = Vec::new();
    if let Some(n) = admit_unbounded(model, f, opts)? {
        notes.push(n);
    }
    let (reference, reference_error) = match reference {
        Some(v) => (v, 0.0),
        None => {
            let tr = model.triplet_at(x)?;
            let form = reference_form(&tr, f, x)?;
            let v = apply_pointwise(&tr, f, x, form)?;
            notes.push(format!("reference by {form:?} quadrature"));
            (v.value, v.abs_error)
        }
    };
    let sim = model.compile()?;
    for (eps, var) in sim.small_jump_report() {
        notes.push(format!("small jumps below {eps:.3e} dropped (variance {var:.3e} per unit time)"));
    }
    if let Some(b) = &opts.stopped_in {
        notes.push(format!("stopped at the first grid exit from B({:?}, {})", b.center, b.radius));
    }
    let mut rows = Vec::with_capacity(exp.t_grid.len());
    for (k, &t) in exp.t_grid.iter().enumerate() {
        let (est, steps) = moment_adaptive(&sim, f, x, t, exp, opts.stopped_in.as_ref(), &exp.seed.child(k as u64))?;
        rows.push(ConvergenceRow {
            t,
            estimate: est,
            discrepancy: discrepancy(est.mean, est.stderr, reference),
            steps,
        });
    }
    Ok(ConvergenceReport::build(
        format!("limit of (E f(X_t) − f(x))/t for {} at x = {x:?}", f.name),
        exp,
        rows,
        reference,
        reference_error,
        notes,
    ))
}
