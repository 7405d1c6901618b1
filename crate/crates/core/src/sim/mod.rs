//! Sampling of increments and paths of Lévy and Lévy-type processes.

mod jumps;
mod path;
pub mod variates;

pub use jumps::{JumpSampler, SmallJumpMode, SmallJumps};
pub use path::{simulate_path, Ball, Endpoint, JumpRecord, PathSample};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{norm, Expr};
use crate::generator::TripletSource;
use crate::measure::{Atom, LevyMeasure};
use crate::stats::{draw, monte_carlo, MCEstimate, SeedPolicy, SimRng};
use crate::symbol::{ExponentTerm, Family, LevyTriplet, Symbol};

use jumps::psd_root;

/// A process to simulate.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProcessModel {
    /// Lévy process with an x-independent symbol.
    Levy {
        symbol: Symbol,
        #[serde(default)]
        small_jumps: SmallJumps,
    },
    /// Symbol `|ξ|^{γ(x)}`.
    StableLike { d: usize, gamma: Expr },
    /// Symbol `(|ξ|² + m(x)²)^{γ(x)/2} − m(x)^{γ(x)}`.
    RelativisticStableLike { d: usize, mass: Expr, gamma: Expr },
    /// `dX = σ(X_−) dL` for a Lévy driver `L` on `ℝᵏ` and `σ` of size `d × k`.
    Sde {
        sigma: Vec<Vec<Expr>>,
        driver: Box<ProcessModel>,
        /// Declared `sup |σ(x)|` (operator norm).
        sigma_bound: f64,
        /// Declared Lipschitz constant of `σ`.
        sigma_lipschitz: f64,
    },
    /// `X_t = x + drift·t + Σ jumps`, drift being the plain velocity.
    CompoundPoisson {
        d: usize,
        atoms: Vec<Atom>,
        #[serde(default)]
        drift: Option<Vec<f64>>,
    },
}

/// States on which model invariants are checked.
pub fn probe_grid(d: usize) -> Vec<Vec<f64>> {
    let line: Vec<f64> = (0..33).map(|i| -8.0 + 0.5 * i as f64).collect();
    if d == 1 {
        return line.into_iter().map(|v| vec![v]).collect();
    }
    let mut out = vec![vec![0.0; d]];
    for i in 0..d {
        for v in &line {
            if *v != 0.0 {
                let mut x = vec![0.0; d];
                x[i] = *v;
                out.push(x);
            }
        }
    }
    out
}

fn eval_matrix(m: &[Vec<Expr>], x: &[f64]) -> Vec<Vec<f64>> {
    m.iter().map(|row| row.iter().map(|e| e.eval(x)).collect()).collect()
}

fn operator_norm(m: &[Vec<f64>]) -> f64 {
    let k = m.first().map_or(0, Vec::len);
    let mat = nalgebra::DMatrix::from_fn(m.len(), k, |i, j| m[i][j]);
    mat.singular_values().iter().copied().fold(0.0, f64::max)
}

impl ProcessModel {
    pub fn stable(alpha: f64, d: usize) -> Self {
        ProcessModel::Levy {
            symbol: Symbol::levy(d, vec![ExponentTerm::Stable { alpha, scale: 1.0 }]),
            small_jumps: SmallJumps::default(),
        }
    }

    pub fn compound_poisson(atoms: Vec<Atom>, drift: Option<Vec<f64>>) -> Self {
        let d = atoms.first().map_or_else(|| drift.as_ref().map_or(1, Vec::len), |a| a.location.len());
        ProcessModel::CompoundPoisson { d, atoms, drift }
    }

    pub fn dim(&self) -> usize {
        match self {
            ProcessModel::Levy { symbol, .. } => symbol.d,
            ProcessModel::StableLike { d, .. } | ProcessModel::RelativisticStableLike { d, .. } => *d,
            ProcessModel::Sde { sigma, .. } => sigma.len(),
            ProcessModel::CompoundPoisson { d, .. } => *d,
        }
    }

    /// The symbol `q(x, ξ)` of the process.
    pub fn symbol(&self) -> Symbol {
        match self {
            ProcessModel::Levy { symbol, .. } => symbol.clone(),
            ProcessModel::StableLike { d, gamma } => Symbol::stable_like(gamma.clone(), *d),
            ProcessModel::RelativisticStableLike { d, mass, gamma } => Symbol {
                d: *d,
                family: Family::Relativistic {
                    mass: mass.clone(),
                    gamma: gamma.clone(),
                },
            },
            ProcessModel::Sde { sigma, driver, .. } => Symbol {
                d: sigma.len(),
                family: Family::SdeComposed {
                    sigma: sigma.clone(),
                    driver: Box::new(driver.symbol()),
                },
            },
            ProcessModel::CompoundPoisson { d, atoms, drift } => {
                // Lévy–Khintchine drift compensates the atoms inside the unit ball
                let mut b = drift.clone().unwrap_or_else(|| vec![0.0; *d]);
                for a in atoms.iter().filter(|a| norm(&a.location) < 1.0) {
                    b.iter_mut().zip(&a.location).for_each(|(bi, y)| *bi += a.weight * y);
                }
                Symbol::levy(
                    *d,
                    vec![
                        ExponentTerm::Drift { b },
                        ExponentTerm::Atoms { atoms: atoms.clone() },
                    ],
                )
            }
        }
    }

    /// Increments are stationary (no x-dependence).
    pub fn is_levy(&self) -> bool {
        match self {
            ProcessModel::Levy { symbol, .. } => symbol.is_levy(),
            ProcessModel::StableLike { gamma, .. } => gamma.is_constant(),
            ProcessModel::RelativisticStableLike { mass, gamma, .. } => mass.is_constant() && gamma.is_constant(),
            ProcessModel::Sde { sigma, driver, .. } => sigma.iter().flatten().all(Expr::is_constant) && driver.is_levy(),
            ProcessModel::CompoundPoisson { .. } => true,
        }
    }

    /// Checks the model invariants on `grid`.
    pub fn validate(&self, grid: &[Vec<f64>]) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        if grid.iter().any(|x| x.len() != d) {
            return Err(Error::domain(format!("probe grid must consist of points of ℝ^{d}")));
        }
        match self {
            ProcessModel::Levy { symbol, .. } => {
                if !symbol.is_levy() {
                    return Err(Error::domain(
                        "a Lévy model needs an x-independent symbol; use a stable-like or SDE model instead",
                    ));
                }
                symbol.freeze(&vec![0.0; d])?;
            }
            ProcessModel::StableLike { gamma, .. } => {
                let vals: Vec<f64> = grid.iter().map(|x| gamma.eval(x)).collect();
                let inf = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let sup = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if !(inf > 0.0 && sup < 2.0) || vals.iter().any(|v| !v.is_finite()) {
                    return Err(Error::domain(format!(
                        "stable-like γ needs inf γ > 0 and sup γ < 2 on the probe grid, got [{inf}, {sup}]"
                    )));
                }
            }
            ProcessModel::RelativisticStableLike { mass, gamma, .. } => {
                for x in grid {
                    let (m, g) = (mass.eval(x), gamma.eval(x));
                    if !(m >= 0.0 && m.is_finite() && g > 0.0 && g <= 2.0) {
                        return Err(Error::domain(format!("relativistic m = {m}, γ = {g} inadmissible at x = {x:?}")));
                    }
                }
            }
            ProcessModel::Sde {
                sigma,
                driver,
                sigma_bound,
                sigma_lipschitz,
            } => {
                if !driver.is_levy() {
                    return Err(Error::domain("the SDE driver must be a Lévy process"));
                }
                let k = driver.dim();
                if sigma.iter().any(|r| r.len() != k) {
                    return Err(Error::domain(format!("σ must be {d} × {k}")));
                }
                driver.validate(&probe_grid(k))?;
                let mats: Vec<Vec<Vec<f64>>> = grid.iter().map(|x| eval_matrix(sigma, x)).collect();
                for (x, m) in grid.iter().zip(&mats) {
                    let n = operator_norm(m);
                    if !(n <= sigma_bound * (1.0 + 1e-12)) {
                        return Err(Error::domain(format!(
                            "|σ(x)| = {n} exceeds the declared bound {sigma_bound} at x = {x:?}"
                        )));
                    }
                }
                for i in 0..grid.len() {
                    for j in i + 1..grid.len() {
                        let dx: Vec<f64> = grid[i].iter().zip(&grid[j]).map(|(a, b)| a - b).collect();
                        let diff: Vec<Vec<f64>> = mats[i]
                            .iter()
                            .zip(&mats[j])
                            .map(|(a, b)| a.iter().zip(b).map(|(u, v)| u - v).collect())
                            .collect();
                        let l = operator_norm(&diff) / norm(&dx);
                        if l > sigma_lipschitz * (1.0 + 1e-9) + 1e-12 {
                            return Err(Error::domain(format!(
                                "σ has sampled Lipschitz ratio {l} above the declared {sigma_lipschitz}"
                            )));
                        }
                    }
                }
            }
            ProcessModel::CompoundPoisson { atoms, drift, .. } => {
                if let Some(b) = drift {
                    if b.len() != d {
                        return Err(Error::domain(format!("drift must have {d} components")));
                    }
                }
                LevyMeasure::Atoms { d, atoms: atoms.clone() }.validate()?;
            }
        }
        Ok(())
    }

    /// Validates on the default probe grid and prepares the samplers.
    pub fn compile(&self) -> Result<Simulator> {
        self.validate(&probe_grid(self.dim()))?;
        let d = self.dim();
        let stepper = match self {
            ProcessModel::StableLike { gamma, .. } if !gamma.is_constant() => Stepper::StableLike { gamma: gamma.clone() },
            ProcessModel::RelativisticStableLike { mass, gamma, .. } if !(mass.is_constant() && gamma.is_constant()) => {
                Stepper::Relativistic {
                    mass: mass.clone(),
                    gamma: gamma.clone(),
                }
            }
            ProcessModel::Sde { sigma, driver, .. } if !sigma.iter().flatten().all(Expr::is_constant) => Stepper::Sde {
                sigma: sigma.clone(),
                driver: IncrementSampler::of_model(driver)?,
            },
            _ => Stepper::Levy(IncrementSampler::of_model(self)?),
        };
        Ok(Simulator { d, stepper })
    }
}

impl TripletSource for ProcessModel {
    fn dim(&self) -> usize {
        ProcessModel::dim(self)
    }

    fn triplet_at(&self, x: &[f64]) -> Result<LevyTriplet> {
        self.symbol().triplet_at(x)
    }
}

/// One independent summand of a Lévy increment.
#[derive(Clone, Debug)]
enum Part {
    Drift(Vec<f64>),
    /// Square root of `Q`.
    Gaussian(Vec<Vec<f64>>),
    Stable { alpha: f64, scale: f64 },
    Relativistic { mass: f64, gamma: f64 },
    Jumps(JumpSampler),
    Linear { map: Vec<Vec<f64>>, inner: Box<IncrementSampler> },
}

/// Exact (or cutoff-exact) sampler of `X_t − X_0` for a Lévy process.
#[derive(Clone, Debug)]
pub struct IncrementSampler {
    d: usize,
    parts: Vec<Part>,
}

impl IncrementSampler {
    fn of_model(model: &ProcessModel) -> Result<IncrementSampler> {
        let d = model.dim();
        let x0 = vec![0.0; d];
        match model {
            ProcessModel::Levy { symbol, small_jumps } => IncrementSampler::of_symbol(symbol, small_jumps),
            ProcessModel::StableLike { gamma, .. } => Ok(IncrementSampler {
                d,
                parts: vec![Part::Stable {
                    alpha: gamma.eval(&x0),
                    scale: 1.0,
                }],
            }),
            ProcessModel::RelativisticStableLike { mass, gamma, .. } => Ok(IncrementSampler {
                d,
                parts: vec![Part::Relativistic {
                    mass: mass.eval(&x0),
                    gamma: gamma.eval(&x0),
                }],
            }),
            ProcessModel::Sde { sigma, driver, .. } => Ok(IncrementSampler {
                d,
                parts: vec![Part::Linear {
                    map: eval_matrix(sigma, &x0),
                    inner: Box::new(IncrementSampler::of_model(driver)?),
                }],
            }),
            ProcessModel::CompoundPoisson { atoms, drift, .. } => {
                let mut parts = Vec::new();
                if let Some(b) = drift {
                    parts.push(Part::Drift(b.clone()));
                }
                if !atoms.is_empty() {
                    let nu = LevyMeasure::Atoms { d, atoms: atoms.clone() };
                    parts.push(Part::Jumps(JumpSampler::new(&nu, &SmallJumps::default(), false)?));
                }
                Ok(IncrementSampler { d, parts })
            }
        }
    }

    fn of_symbol(sym: &Symbol, sj: &SmallJumps) -> Result<IncrementSampler> {
        let d = sym.d;
        let x0 = vec![0.0; d];
        if !sym.is_levy() {
            return Err(Error::Unsupported(
                "the symbol depends on x; simulate it with a frozen-coefficient (stable-like or SDE) model".into(),
            ));
        }
        sym.freeze(&x0)?;
        let mut parts = Vec::new();
        match &sym.family {
            Family::Levy { terms } => {
                for t in terms {
                    match t {
                        ExponentTerm::Drift { b } => parts.push(Part::Drift(b.clone())),
                        ExponentTerm::Gaussian { q } => parts.push(Part::Gaussian(psd_root(q))),
                        ExponentTerm::Stable { alpha, scale } => {
                            if *scale > 0.0 {
                                parts.push(Part::Stable {
                                    alpha: *alpha,
                                    scale: *scale,
                                })
                            }
                        }
                        ExponentTerm::Atoms { atoms } => {
                            if !atoms.is_empty() {
                                let nu = LevyMeasure::Atoms { d, atoms: atoms.clone() };
                                parts.push(Part::Jumps(JumpSampler::new(&nu, sj, true)?));
                            }
                        }
                    }
                }
            }
            Family::StableLike { gamma } => parts.push(Part::Stable {
                alpha: gamma.eval(&x0),
                scale: 1.0,
            }),
            Family::Relativistic { mass, gamma } => parts.push(Part::Relativistic {
                mass: mass.eval(&x0),
                gamma: gamma.eval(&x0),
            }),
            Family::SdeComposed { sigma, driver } => parts.push(Part::Linear {
                map: eval_matrix(sigma, &x0),
                inner: Box::new(IncrementSampler::of_symbol(driver, sj)?),
            }),
            _ => {
                // general route: drift, Gaussian part and cutoff jumps of the triplet
                let tr = sym.triplet_at(&x0).map_err(|e| match e {
                    Error::Unsupported(m) => {
                        Error::Unsupported(format!("{m}; exact sampling needs a Lévy triplet or a closed-form family"))
                    }
                    other => other,
                })?;
                if tr.has_drift() {
                    parts.push(Part::Drift(tr.drift.clone()));
                }
                if tr.has_gaussian_part() {
                    parts.push(Part::Gaussian(psd_root(&tr.diffusion)));
                }
                let js = JumpSampler::new(&tr.measure, sj, true)?;
                if js.rate() > 0.0 || js.compensator.iter().any(|c| *c != 0.0) {
                    parts.push(Part::Jumps(js));
                }
            }
        }
        Ok(IncrementSampler { d, parts })
    }

    /// Cutoff and discarded small-jump variance of the approximate parts.
    pub fn small_jump_report(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for p in &self.parts {
            match p {
                Part::Jumps(js) if js.discarded_variance > 0.0 => out.push((js.cutoff, js.discarded_variance)),
                Part::Linear { inner, .. } => out.extend(inner.small_jump_report()),
                _ => {}
            }
        }
        out
    }

    /// Adds an increment over `t` to `out`; jump offsets and sizes go to `log`.
    pub fn add<R: Rng + ?Sized>(&self, t: f64, rng: &mut R, out: &mut [f64], mut log: Option<&mut Vec<(f64, Vec<f64>)>>) {
        for p in &self.parts {
            match p {
                Part::Drift(b) => out.iter_mut().zip(b).for_each(|(o, v)| *o += t * v),
                Part::Gaussian(root) => {
                    let z: Vec<f64> = (0..self.d).map(|_| StandardNormal.sample(rng)).collect();
                    let s = t.sqrt();
                    for (o, row) in out.iter_mut().zip(root) {
                        *o += s * row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
                    }
                }
                Part::Stable { alpha, scale } => variates::isotropic_stable(*alpha, scale * t, rng, out),
                Part::Relativistic { mass, gamma } => variates::relativistic(*mass, *gamma, t, rng, out),
                Part::Jumps(js) => js.add(t, rng, out, log.as_deref_mut()),
                Part::Linear { map, inner } => {
                    let mut y = vec![0.0; inner.d];
                    let mut inner_log = log.as_ref().map(|_| Vec::new());
                    inner.add(t, rng, &mut y, inner_log.as_mut());
                    for (o, row) in out.iter_mut().zip(map) {
                        *o += row.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
                    }
                    if let (Some(log), Some(inner_log)) = (log.as_deref_mut(), inner_log) {
                        for (s, j) in inner_log {
                            log.push((s, map.iter().map(|row| row.iter().zip(&j).map(|(a, b)| a * b).sum()).collect()));
                        }
                    }
                }
            }
        }
    }

    /// The driver has no continuous part, so jumps can be applied one by one.
    fn pure_jump(&self) -> bool {
        self.parts.iter().all(|p| matches!(p, Part::Jumps(_) | Part::Drift(_)))
    }
}

#[derive(Clone, Debug)]
enum Stepper {
    Levy(IncrementSampler),
    StableLike { gamma: Expr },
    Relativistic { mass: Expr, gamma: Expr },
    Sde { sigma: Vec<Vec<Expr>>, driver: IncrementSampler },
}

/// A compiled model: increments for Lévy models, Euler steps otherwise.
#[derive(Clone, Debug)]
pub struct Simulator {
    d: usize,
    stepper: Stepper,
}

impl Simulator {
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Exact increments are available.
    pub fn is_levy(&self) -> bool {
        matches!(self.stepper, Stepper::Levy(_))
    }

    pub fn small_jump_report(&self) -> Vec<(f64, f64)> {
        match &self.stepper {
            Stepper::Levy(s) | Stepper::Sde { driver: s, .. } => s.small_jump_report(),
            _ => Vec::new(),
        }
    }

    /// Increment `X_t − X_0` of a Lévy model, added to `out`.
    pub fn increment<R: Rng + ?Sized>(&self, t: f64, rng: &mut R, out: &mut [f64]) -> Result<()> {
        match &self.stepper {
            Stepper::Levy(s) => {
                s.add(t, rng, out, None);
                Ok(())
            }
            _ => Err(Error::Unsupported(
                "exact increments exist for Lévy models only; use path simulation".into(),
            )),
        }
    }

    /// One step of length `h` from `x` at absolute time `t0`.
    pub(crate) fn step<R: Rng + ?Sized>(
        &self,
        x: &mut [f64],
        t0: f64,
        h: f64,
        rng: &mut R,
        mut log: Option<&mut Vec<JumpRecord>>,
    ) -> Result<()> {
        match &self.stepper {
            Stepper::Levy(s) => {
                let mut local = log.as_ref().map(|_| Vec::new());
                s.add(h, rng, x, local.as_mut());
                if let (Some(log), Some(mut local)) = (log, local) {
                    local.sort_by(|a, b| a.0.total_cmp(&b.0));
                    log.extend(local.into_iter().map(|(s, size)| JumpRecord { time: t0 + s, size }));
                }
            }
            Stepper::StableLike { gamma } => {
                let g = gamma.eval(x);
                if !(g > 0.0 && g <= 2.0) {
                    return Err(Error::domain(format!("stable-like γ(x) = {g} left (0,2] at x = {x:?}")));
                }
                variates::isotropic_stable(g, h, rng, x);
            }
            Stepper::Relativistic { mass, gamma } => {
                let (m, g) = (mass.eval(x), gamma.eval(x));
                if !(m >= 0.0 && g > 0.0 && g <= 2.0) {
                    return Err(Error::domain(format!("relativistic m = {m}, γ = {g} inadmissible at x = {x:?}")));
                }
                variates::relativistic(m, g, h, rng, x);
            }
            Stepper::Sde { sigma, driver } => {
                let apply = |x: &mut [f64], dl: &[f64]| -> Vec<f64> {
                    let s = eval_matrix(sigma, x);
                    let dx: Vec<f64> = s.iter().map(|row| row.iter().zip(dl).map(|(a, b)| a * b).sum()).collect();
                    x.iter_mut().zip(&dx).for_each(|(xi, v)| *xi += v);
                    dx
                };
                let k = driver.d;
                if driver.pure_jump() {
                    // continuous part first, then each jump with σ(X_{τ−})
                    let mut jumps = Vec::new();
                    let mut dl = vec![0.0; k];
                    driver.add(h, rng, &mut dl, Some(&mut jumps));
                    jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
                    for (_, j) in &jumps {
                        dl.iter_mut().zip(j).for_each(|(a, b)| *a -= b);
                    }
                    apply(x, &dl);
                    for (s, j) in jumps {
                        let dx = apply(x, &j);
                        if let Some(log) = log.as_deref_mut() {
                            log.push(JumpRecord { time: t0 + s, size: dx });
                        }
                    }
                } else {
                    let mut dl = vec![0.0; k];
                    driver.add(h, rng, &mut dl, None);
                    apply(x, &dl);
                }
            }
        }
        Ok(())
    }
}

/// `n` i.i.d. increments `X_t − X_0` in replicate order.
pub fn sample_levy_increment(model: &ProcessModel, t: f64, n: usize, seeds: &SeedPolicy) -> Result<Vec<Vec<f64>>> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("t = {t} must be positive")));
    }
    let sim = model.compile()?;
    if !sim.is_levy() {
        return Err(Error::Unsupported(
            "exact increments exist for Lévy models only; use simulate_path".into(),
        ));
    }
    let d = sim.dim();
    Ok(draw(n, seeds, |rng: &mut SimRng| {
        let mut x = vec![0.0; d];
        sim.increment(t, rng, &mut x).expect("Lévy stepper");
        x
    }))
}

/// Target set for hitting frequencies, bounded away from the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum JumpSet {
    /// Closed box `∏ [lo_i, hi_i]`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `inner ≤ |y| ≤ outer`.
    Annulus { inner: f64, outer: f64 },
}

impl JumpSet {
    pub fn interval(lo: f64, hi: f64) -> Self {
        JumpSet::Box { lo: vec![lo], hi: vec![hi] }
    }

    pub fn check(&self, d: usize) -> Result<()> {
        match self {
            JumpSet::Box { lo, hi } => {
                if lo.len() != d || hi.len() != d || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return Err(Error::domain(format!("box must have {d} increasing coordinate ranges")));
                }
                if lo.iter().zip(hi).all(|(a, b)| *a <= 0.0 && *b >= 0.0) {
                    return Err(Error::precondition("the closure of the set contains the origin"));
                }
            }
            JumpSet::Annulus { inner, outer } => {
                if !(*inner > 0.0) {
                    return Err(Error::precondition("the closure of the set contains the origin"));
                }
                if !(outer > inner) {
                    return Err(Error::domain("annulus needs outer > inner"));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        match self {
            JumpSet::Box { lo, hi } => y.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| v >= a && v <= b),
            JumpSet::Annulus { inner, outer } => {
                let r = norm(y);
                r >= *inner && r <= *outer
            }
        }
    }

    /// `true` if `y` lies on the boundary.
    pub fn on_boundary(&self, y: &[f64]) -> bool {
        match self {
            JumpSet::Box { lo, hi } => {
                self.contains(y) && y.iter().zip(lo.iter().zip(hi)).any(|(v, (a, b))| v == a || v == b)
            }
            JumpSet::Annulus { inner, outer } => {
                let r = norm(y);
                r == *inner || r == *outer
            }
        }
    }
}

/// Endpoint `X_t` started at `x`, exact for Lévy models and by Euler steps
/// of length `t/steps` otherwise.
pub(crate) fn endpoint<R: Rng + ?Sized>(sim: &Simulator, x: &[f64], t: f64, steps: usize, rng: &mut R, out: &mut [f64]) -> Result<()> {
    out.copy_from_slice(x);
    if sim.is_levy() {
        return sim.increment(t, rng, out);
    }
    let h = t / steps as f64;
    for k in 0..steps {
        sim.step(out, k as f64 * h, h, rng, None)?;
    }
    Ok(())
}

/// Euler steps per unit of the small-time horizon for non-Lévy models.
pub const DEFAULT_STEPS: usize = 64;

/// `(1/t)·P^x(X_t − x ∈ A)` with its binomial standard error.
pub fn empirical_hitting_rate(
    model: &ProcessModel,
    x: &[f64],
    set: &JumpSet,
    t: f64,
    n: usize,
    seeds: &SeedPolicy,
) -> Result<MCEstimate> {
    let sim = model.compile()?;
    hitting_rate_with(&sim, x, set, t, n, DEFAULT_STEPS, seeds)
}

pub(crate) fn hitting_rate_with(
    sim: &Simulator,
    x: &[f64],
    set: &JumpSet,
    t: f64,
    n: usize,
    steps: usize,
    seeds: &SeedPolicy,
) -> Result<MCEstimate> {
    let d = sim.dim();
    if x.len() != d {
        return Err(Error::domain(format!("state must lie in ℝ^{d}")));
    }
    set.check(d)?;
    if !(t > 0.0) {
        return Err(Error::domain(format!("t = {t} must be positive")));
    }
    // probe once so that per-sample errors cannot occur silently
    endpoint(sim, x, t, steps, &mut seeds.rng(u64::MAX), &mut vec![0.0; d])?;
    let est = monte_carlo(n, seeds, |rng| {
        let mut y = vec![0.0; d];
        if endpoint(sim, x, t, steps, rng, &mut y).is_err() {
            return f64::NAN;
        }
        y.iter_mut().zip(x).for_each(|(a, b)| *a -= b);
        if set.contains(&y) {
            1.0
        } else {
            0.0
        }
    });
    if !est.mean.is_finite() {
        return Err(Error::domain("the Euler scheme left the admissible parameter range"));
    }
    Ok(est.scale(1.0 / t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cp() -> ProcessModel {
        ProcessModel::compound_poisson(
            vec![Atom {
                location: vec![1.0],
                weight: 2.0,
            }],
            None,
        )
    }

    #[test]
    fn brownian_variance() {
        let m = ProcessModel::stable(2.0, 1);
        let xs = sample_levy_increment(&m, 1.0, 1_000_000, &SeedPolicy::default()).unwrap();
        let n = xs.len() as f64;
        let mean = xs.iter().map(|v| v[0]).sum::<f64>() / n;
        let var = xs.iter().map(|v| (v[0] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - 2.0).abs() < 0.02, "{var}");
    }

    #[test]
    fn poisson_jump_count() {
        let xs = sample_levy_increment(&cp(), 0.5, 1_000_000, &SeedPolicy::default()).unwrap();
        let mean = xs.iter().map(|v| v[0]).sum::<f64>() / xs.len() as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn cauchy_median() {
        let m = ProcessModel::stable(1.0, 1);
        let t = 0.3;
        let mut xs: Vec<f64> = sample_levy_increment(&m, t, 1_000_000, &SeedPolicy::new(5))
            .unwrap()
            .into_iter()
            .map(|v| v[0].abs() / t)
            .collect();
        xs.sort_by(f64::total_cmp);
        let med = xs[xs.len() / 2];
        assert!((med - 1.0).abs() < 0.01, "{med}");
    }

    #[test]
    fn cauchy_hitting_rate() {
        let m = ProcessModel::stable(1.0, 1);
        let e = empirical_hitting_rate(&m, &[0.0], &JumpSet::interval(1.0, 2.0), 1e-3, 2_000_000, &SeedPolicy::default())
            .unwrap();
        let want = 0.5 / std::f64::consts::PI;
        assert!((e.mean - want).abs() <= 3.0 * e.stderr + 0.05 * want, "{e:?}");
    }

    #[test]
    fn compound_poisson_hitting_rates() {
        let seeds = SeedPolicy::default();
        let t = 1e-3;
        let e = empirical_hitting_rate(&cp(), &[0.0], &JumpSet::interval(0.5, 1.5), t, 1_000_000, &seeds).unwrap();
        let want = 2.0 * (-2.0 * t).exp();
        assert!((e.mean - want).abs() <= 3.0 * e.stderr + 0.05 * want, "{e:?}");
        let far = empirical_hitting_rate(&cp(), &[0.0], &JumpSet::interval(5.0, 6.0), t, 1_000_000, &seeds).unwrap();
        assert_eq!(far.mean, 0.0);
    }

    #[test]
    fn sets_touching_the_origin_are_rejected() {
        let e = empirical_hitting_rate(&cp(), &[0.0], &JumpSet::interval(-1.0, 1.0), 0.1, 10, &SeedPolicy::default());
        assert!(matches!(e, Err(Error::Precondition(_))));
        let a = JumpSet::Annulus { inner: 0.0, outer: 1.0 };
        assert!(matches!(a.check(2), Err(Error::Precondition(_))));
    }

    #[test]
    fn stable_like_rejects_bad_orders() {
        let m = ProcessModel::StableLike {
            d: 1,
            gamma: Expr::parse("1.5 + sin(x)").unwrap(),
        };
        assert!(m.compile().is_err());
    }

    #[test]
    fn sde_sigma_bounds_are_checked() {
        let m = ProcessModel::Sde {
            sigma: vec![vec![Expr::parse("2 + sin(x)").unwrap()]],
            driver: Box::new(cp()),
            sigma_bound: 2.5,
            sigma_lipschitz: 1.0,
        };
        assert!(m.compile().is_err());
        let ok = ProcessModel::Sde {
            sigma: vec![vec![Expr::parse("2 + sin(x)").unwrap()]],
            driver: Box::new(cp()),
            sigma_bound: 3.0,
            sigma_lipschitz: 1.0,
        };
        ok.compile().unwrap();
    }

    #[test]
    fn general_measure_route_reports_its_cutoff() {
        let sym: Symbol = serde_json::from_str(
            r#"{"family":"relativistic","d":1,"params":{"mass":"1","gamma":"1"}}"#,
        )
        .unwrap();
        // closed-form families are sampled exactly
        let m = ProcessModel::Levy {
            symbol: sym,
            small_jumps: SmallJumps::default(),
        };
        assert!(m.compile().unwrap().small_jump_report().is_empty());
        let tlp: Symbol = serde_json::from_str(r#"{"family":"tlp-like","d":1,"params":{"mass":"1","gamma":"0.5"}}"#).unwrap();
        let m = ProcessModel::Levy {
            symbol: tlp,
            small_jumps: SmallJumps::default(),
        };
        let rep = m.compile().unwrap().small_jump_report();
        assert_eq!(rep.len(), 1);
        assert!(rep[0].1 <= 1e-4 * 1.001);
    }
}
