use levygen::generator::{apply_on_grid, apply_pointwise, GeneratorForm, GridReport, GridRow};
use levygen::holder::{domain_verdict, VerdictStatus};
use levygen::lab::{
    limit_study, maximal_inequality_experiment, moment_tail_bound_experiment, reference_form, uniform_limit_sweep,
    vague_convergence_experiment,
};
use levygen::measure::{c_alpha, kernel_identity_check, moment_identity_check, LevyMeasure};
use levygen::sim::probe_grid;
use levygen::symbol::{
    bg_index_infinity, default_frequency_probes, diffusion_estimate, quadratic_growth_check, sector_constant, SectorGrid,
};
use levygen::{SeedPolicy, Symbol};
use serde::Serialize;

use crate::config::{AsymptoticsConfig, GeneratorConfig, SimulateConfig, Study, SymbolConfig, VerifyConfig};
use crate::{Ctx, Failure};

fn csv_writer<W: std::io::Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn csv_err(e: csv::Error) -> Failure {
    Failure::Run(e.to_string())
}

fn check_states(states: &[Vec<f64>], d: usize) -> Result<(), Failure> {
    if states.is_empty() {
        return Err(Failure::Config("states: at least one state is required".into()));
    }
    if let Some(x) = states.iter().find(|x| x.len() != d) {
        return Err(Failure::Config(format!("states: {x:?} does not lie in ℝ^{d}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct StateSummary {
    x: Vec<f64>,
    beta_infinity: f64,
    beta_band: f64,
    sector_constant: f64,
    sector_unbounded: bool,
    /// Largest `2 Re q(x, rη)/r²` over the coordinate directions.
    diffusion: f64,
}

pub fn symbol(cfg: SymbolConfig, ctx: &Ctx) -> Result<bool, Failure> {
    let sym: Symbol = cfg.symbol;
    let d = sym.d;
    check_states(&cfg.states, d)?;
    let xis = cfg.frequencies.unwrap_or_else(|| default_frequency_probes(d));
    if let Some(xi) = xis.iter().find(|xi| xi.len() != d) {
        return Err(Failure::Config(format!("frequencies: {xi:?} does not lie in ℝ^{d}")));
    }
    let mut w = csv_writer(ctx.file("symbol_values.csv")?);
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    header.extend((1..=d).map(|i| format!("xi{i}")));
    header.push("re".into());
    header.push("im".into());
    w.write_record(&header).map_err(csv_err)?;
    let mut states = Vec::with_capacity(cfg.states.len());
    for x in &cfg.states {
        for xi in &xis {
            let q = sym.eval(x, xi)?;
            let mut row: Vec<String> = x.iter().chain(xi).map(f64::to_string).collect();
            row.push(q.re.to_string());
            row.push(q.im.to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        let bg = bg_index_infinity(&sym, x, cfg.r_max)?;
        let sector = sector_constant(&sym, x, &SectorGrid::standard(d))?;
        let mut diffusion: f64 = 0.0;
        for i in 0..d {
            let mut eta = vec![0.0; d];
            eta[i] = 1.0;
            diffusion = diffusion.max(diffusion_estimate(&sym, x, &eta)?.value);
        }
        states.push(StateSummary {
            x: x.clone(),
            beta_infinity: bg.value,
            beta_band: bg.band,
            sector_constant: sector.constant,
            sector_unbounded: sector.unbounded,
            diffusion,
        });
    }
    w.flush()?;
    let growth = quadratic_growth_check(&sym, &cfg.states, &xis)?;
    #[derive(Serialize)]
    struct Report<'a> {
        states: &'a [StateSummary],
        growth: &'a levygen::symbol::GrowthReport,
        pass: bool,
    }
    ctx.write_json(
        "symbol.json",
        &Report {
            states: &states,
            growth: &growth,
            pass: growth.pass,
        },
    )?;
    for s in &states {
        println!(
            "x = {:?}: β∞ ≈ {:.4}, sector constant {:.4}, diffusion {:.3e}",
            s.x, s.beta_infinity, s.sector_constant, s.diffusion
        );
    }
    println!("growth check {}", if growth.pass { "passed" } else { "FAILED" });
    Ok(growth.pass)
}

pub fn generator(cfg: GeneratorConfig, ctx: &Ctx) -> Result<bool, Failure> {
    let sym = cfg.symbol;
    check_states(&cfg.states, sym.d)?;
    let f = cfg.function.build()?;
    let report = match (cfg.form, &cfg.order) {
        (None, Some(order)) => apply_on_grid(&sym, order, &f, &cfg.states)?,
        (form, _) => {
            let rows: Vec<GridRow> = cfg
                .states
                .iter()
                .map(|x| {
                    let run = || -> levygen::Result<(GeneratorForm, f64, f64)> {
                        let tr = sym.triplet_at(x)?;
                        let form = match form {
                            Some(fm) => fm,
                            None => reference_form(&tr, &f, x)?,
                        };
                        let v = apply_pointwise(&tr, &f, x, form)?;
                        Ok((form, v.value, v.abs_error))
                    };
                    match run() {
                        Ok((form, value, err)) => GridRow {
                            x: x.clone(),
                            alpha: f64::NAN,
                            form: Some(form),
                            value: Some(value),
                            abs_error: Some(err),
                            status: "ok".into(),
                        },
                        Err(e) => GridRow {
                            x: x.clone(),
                            alpha: f64::NAN,
                            form: None,
                            value: None,
                            abs_error: None,
                            status: e.to_string(),
                        },
                    }
                })
                .collect();
            let failures = rows.iter().filter(|r| r.value.is_none()).count();
            GridReport {
                rows,
                outer_ratio: f64::NAN,
                max_oscillation: f64::NAN,
                failures,
            }
        }
    };
    let mut w = csv_writer(ctx.file("generator.csv")?);
    let mut header: Vec<String> = (1..=sym.d).map(|i| format!("x{i}")).collect();
    header.extend(["form", "value", "abs_error", "status"].map(String::from));
    w.write_record(&header).map_err(csv_err)?;
    for r in &report.rows {
        let mut row: Vec<String> = r.x.iter().map(f64::to_string).collect();
        row.push(r.form.map(|f| format!("{f:?}")).unwrap_or_default());
        row.push(r.value.map(|v| v.to_string()).unwrap_or_default());
        row.push(r.abs_error.map(|v| v.to_string()).unwrap_or_default());
        row.push(r.status.clone());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    ctx.write_json("generator.json", &report)?;
    println!("{} states, {} failures", report.rows.len(), report.failures);
    Ok(report.failures == 0)
}

pub fn simulate(cfg: SimulateConfig, ctx: &Ctx) -> Result<bool, Failure> {
    let d = cfg.model.dim();
    cfg.model.validate(&probe_grid(d))?;
    if cfg.paths == 0 {
        return Err(Failure::Config("paths must be positive".into()));
    }
    let sim = cfg.model.compile()?;
    let seeds = SeedPolicy::new(ctx.seed_or(cfg.seed));
    #[derive(Serialize)]
    struct PathSummary {
        file: String,
        final_state: Vec<f64>,
        sup: f64,
        exit_time: Option<f64>,
        jumps: usize,
    }
    let mut paths = Vec::with_capacity(cfg.paths);
    for k in 0..cfg.paths {
        let mut rng = seeds.rng(k as u64);
        let p = sim.path(&cfg.x0, cfg.horizon, cfg.step, cfg.exit_radius, &mut rng)?;
        let file = format!("path_{k}.csv");
        p.write_csv(ctx.file(&file)?)?;
        paths.push(PathSummary {
            file,
            final_state: p.states.last().cloned().unwrap_or_default(),
            sup: p.running_sup.last().copied().unwrap_or(0.0),
            exit_time: p.exit_time.is_finite().then_some(p.exit_time),
            jumps: p.jumps.len(),
        });
    }
    #[derive(Serialize)]
    struct Report {
        seed: u64,
        small_jumps: Vec<(f64, f64)>,
        paths: Vec<PathSummary>,
    }
    ctx.write_json(
        "simulate.json",
        &Report {
            seed: seeds.master,
            small_jumps: sim.small_jump_report(),
            paths,
        },
    )?;
    println!("{} paths written to {}", cfg.paths, ctx.out.display());
    Ok(true)
}

pub fn asymptotics(cfg: AsymptoticsConfig, ctx: &Ctx) -> Result<bool, Failure> {
    let mut exp = cfg.experiment;
    exp.seed.master = ctx.seed.or(cfg.seed).unwrap_or(exp.seed.master);
    let csv = ctx.file("asymptotics.csv")?;
    let pass = match cfg.study {
        Study::Limit {
            model,
            function,
            x,
            options,
            reference,
        } => {
            let f = function.build()?;
            let rep = limit_study(&exp, &model, &f, &x, &options, reference)?;
            rep.write_csv(csv)?;
            ctx.write_json("asymptotics.json", &rep)?;
            println!(
                "limit {:.6} ± {:.6} vs reference {:.6}: discrepancy {:.3}",
                rep.extrapolated, rep.extrapolated_stderr, rep.reference, rep.discrepancy
            );
            rep.pass
        }
        Study::Vague { model, x, set } => {
            let rep = vague_convergence_experiment(&exp, &model, &x, &set)?;
            rep.write_csv(csv)?;
            ctx.write_json("asymptotics.json", &rep)?;
            println!(
                "hitting rate {:.6} ± {:.6} vs ν(A) = {:.6}: discrepancy {:.3}",
                rep.extrapolated, rep.extrapolated_stderr, rep.reference, rep.discrepancy
            );
            rep.pass
        }
        Study::Maximal { model, x, r_grid } => {
            let rep = maximal_inequality_experiment(&exp, &model, &x, &r_grid)?;
            rep.write_csv(csv)?;
            ctx.write_json("asymptotics.json", &rep)?;
            println!(
                "max ratio {:.4}, rate slope {:?} vs bound slope {:.4}",
                rep.max_ratio, rep.rate_slope, rep.bound_slope
            );
            rep.pass
        }
        Study::TailMoment { model, x, a, radius } => {
            let rep = moment_tail_bound_experiment(&exp, &model, &x, a, radius)?;
            rep.write_csv(csv)?;
            ctx.write_json("asymptotics.json", &rep)?;
            println!("reference {:.6}, margin {:.6}", rep.reference, rep.margin);
            rep.pass
        }
        Study::Sweep {
            model,
            function,
            states,
            order,
        } => {
            let f = function.build()?;
            let rep = uniform_limit_sweep(&exp, &model, &f, &states, &order)?;
            rep.write_csv(csv)?;
            ctx.write_json("asymptotics.json", &rep)?;
            println!("verdict {:?}; sweep {}", rep.verdict, if rep.pass { "decreasing" } else { "NOT decreasing" });
            rep.pass
        }
    };
    Ok(pass)
}

#[derive(Serialize)]
struct Check {
    name: String,
    pass: bool,
    /// Positive when passed.
    margin: f64,
    detail: String,
}

pub fn verify(cfg: VerifyConfig, ctx: &Ctx) -> Result<bool, Failure> {
    let mut checks = Vec::new();
    let suite = match cfg {
        VerifyConfig::MomentIdentity {
            alphas,
            kappa_offset,
            tolerance,
        } => {
            for alpha in alphas {
                let nu = LevyMeasure::IsotropicPower {
                    d: 1,
                    intensity: c_alpha(alpha, 1)?,
                    alpha,
                    truncation: Some(1.0),
                };
                let kappa = alpha + kappa_offset;
                if kappa < 2.0 {
                    let c = moment_identity_check(&nu, kappa)?;
                    checks.push(Check {
                        name: format!("α={alpha} κ={kappa}"),
                        pass: c.agrees(tolerance),
                        margin: tolerance - c.rel_err,
                        detail: format!("lhs {:.6e} rhs {:.6e} rel_err {:.2e}", c.lhs, c.rhs, c.rel_err),
                    });
                }
                let c = moment_identity_check(&nu, alpha)?;
                let both = c.lhs_divergent && c.rhs_divergent;
                checks.push(Check {
                    name: format!("α={alpha} κ=α"),
                    pass: both,
                    margin: if both { 1.0 } else { -1.0 },
                    detail: format!("divergence flagged: lhs {} rhs {}", c.lhs_divergent, c.rhs_divergent),
                });
            }
            "moment-identity"
        }
        VerifyConfig::Diffusion {
            symbol,
            states,
            tolerance,
        } => {
            check_states(&states, symbol.d)?;
            for x in &states {
                let bg = bg_index_infinity(&symbol, x, None)?;
                if bg.value + bg.band >= 2.0 {
                    checks.push(Check {
                        name: format!("x={x:?}"),
                        pass: true,
                        margin: 0.0,
                        detail: format!("β∞ ≈ {:.4} is not below 2; nothing to check", bg.value),
                    });
                    continue;
                }
                let mut worst: f64 = 0.0;
                for i in 0..symbol.d {
                    let mut eta = vec![0.0; symbol.d];
                    eta[i] = 1.0;
                    worst = worst.max(diffusion_estimate(&symbol, x, &eta)?.value);
                }
                checks.push(Check {
                    name: format!("x={x:?}"),
                    pass: worst <= tolerance,
                    margin: tolerance - worst,
                    detail: format!("β∞ ≈ {:.4}, diffusion estimate {worst:.3e}", bg.value),
                });
            }
            "diffusion"
        }
        VerifyConfig::Kernel { ys, alphas, tolerance } => {
            for y in &ys {
                for alpha in &alphas {
                    let c = kernel_identity_check(*y, *alpha)?;
                    checks.push(Check {
                        name: format!("y={y} α={alpha}"),
                        pass: c.agrees(tolerance),
                        margin: tolerance - c.rel_err,
                        detail: format!("|y|^α {:.6e}, integral {:.6e}", c.lhs, c.rhs),
                    });
                }
            }
            "kernel"
        }
        VerifyConfig::Domain {
            symbol,
            function,
            order,
            states,
            expect,
        } => {
            check_states(&states, symbol.d)?;
            let f = function.build()?;
            let v = domain_verdict(&symbol, &f, &order, &states)?;
            let pass = match expect {
                Some(e) => v.status == e,
                None => v.status != VerdictStatus::NotCertified,
            };
            for r in &v.reasons {
                checks.push(Check {
                    name: r.check.clone(),
                    pass: r.pass,
                    margin: r.margin,
                    detail: r.detail.clone(),
                });
            }
            checks.push(Check {
                name: "verdict".into(),
                pass,
                margin: if pass { 1.0 } else { -1.0 },
                detail: serde_json::to_value(v.status)?.as_str().unwrap_or_default().to_string(),
            });
            "domain"
        }
    };
    let pass = checks.iter().all(|c| c.pass);
    #[derive(Serialize)]
    struct Report<'a> {
        suite: &'a str,
        pass: bool,
        checks: &'a [Check],
    }
    ctx.write_json(
        "verify.json",
        &Report {
            suite,
            pass,
            checks: &checks,
        },
    )?;
    for c in &checks {
        println!("{} {}: {}", if c.pass { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(pass)
}
