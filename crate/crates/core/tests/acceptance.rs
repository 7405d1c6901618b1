//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use levygen::expr::Expr;
use levygen::generator::{fractional_laplacian, FunctionSpec, TestFunction};
use levygen::holder::{domain_verdict, VariableOrderFn, VerdictStatus};
use levygen::lab::{
    default_r_grid, limit_study, maximal_inequality_experiment, moment_tail_bound_experiment, uniform_limit_sweep,
    vague_convergence_experiment, LimitExperiment, MomentOptions,
};
use levygen::measure::{c_alpha, kernel_identity_check, moment_identity_check, Atom, LevyMeasure};
use levygen::sim::JumpSet;
use levygen::symbol::exponent_from_triplet;
use levygen::{LevyTriplet, ProcessModel, SeedPolicy, Symbol};

struct Outcome {
    pass: bool,
    detail: String,
}

fn fun(json: &str) -> TestFunction {
    serde_json::from_str::<FunctionSpec>(json).unwrap().build().unwrap()
}

fn cp() -> ProcessModel {
    ProcessModel::compound_poisson(
        vec![Atom {
            location: vec![1.0],
            weight: 2.0,
        }],
        None,
    )
}

fn exp(t_grid: Vec<f64>, n: usize, seed: u64) -> LimitExperiment {
    LimitExperiment {
        t_grid,
        n,
        seed: SeedPolicy::new(seed),
        ..LimitExperiment::default()
    }
}

fn symbol_round_trip() -> Outcome {
    let tr = LevyTriplet::new(vec![0.0], vec![vec![0.0]], LevyMeasure::stable(0.5, 1).unwrap());
    let mut worst: f64 = 0.0;
    for xi in [0.25, 1.0, 4.0] {
        let got = exponent_from_triplet(&tr, &[xi]).unwrap().value;
        let want = f64::powf(xi, 0.5);
        worst = worst.max((got.re - want).abs().max(got.im.abs()) / want);
    }
    Outcome {
        pass: worst <= 5e-3,
        detail: format!("max relative error {worst:.2e}"),
    }
}

fn c_alpha_constants() -> Outcome {
    let cases = [
        (1.0, 1, 1.0 / PI),
        (0.5, 1, 0.5 / (2.0 * PI).sqrt()),
        (1.0, 2, 0.5 / PI),
    ];
    let worst = cases
        .iter()
        .map(|(a, d, want)| ((c_alpha(*a, *d).unwrap() - want) / want).abs())
        .fold(0.0, f64::max);
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("max relative error {worst:.2e}"),
    }
}

fn kernel_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for y in [0.5, 1.0, 2.0, 4.0] {
        for alpha in [0.3, 0.8, 1.2, 1.7] {
            worst = worst.max(kernel_identity_check(y, alpha).unwrap().rel_err);
        }
    }
    Outcome {
        pass: worst <= 0.01,
        detail: format!("16 points, max relative error {worst:.2e}"),
    }
}

fn moment_identity() -> Outcome {
    let nu = LevyMeasure::IsotropicPower {
        d: 1,
        intensity: c_alpha(0.6, 1).unwrap(),
        alpha: 0.6,
        truncation: Some(1.0),
    };
    let finite = moment_identity_check(&nu, 0.8).unwrap();
    let divergent = moment_identity_check(&nu, 0.6).unwrap();
    Outcome {
        pass: finite.agrees(0.01) && divergent.lhs_divergent && divergent.rhs_divergent,
        detail: format!(
            "κ=0.8: lhs {:.5} rhs {:.5}; κ=α: divergence flagged lhs {} rhs {}",
            finite.lhs, finite.rhs, divergent.lhs_divergent, divergent.rhs_divergent
        ),
    }
}

fn vague_convergence() -> Outcome {
    let cauchy = vague_convergence_experiment(
        &exp(vec![1e-2, 1e-3], 10_000_000, 51),
        &ProcessModel::stable(1.0, 1),
        &[0.0],
        &JumpSet::interval(1.0, 2.0),
    )
    .unwrap();
    let poisson = vague_convergence_experiment(
        &exp(vec![1e-2, 1e-3], 10_000_000, 52),
        &cp(),
        &[0.0],
        &JumpSet::interval(0.5, 1.5),
    )
    .unwrap();
    let ok = (cauchy.reference - 0.5 / PI).abs() < 1e-12 && poisson.reference == 2.0;
    Outcome {
        pass: ok && cauchy.pass && poisson.pass,
        detail: format!(
            "1-stable {:.5} ± {:.5} vs {:.5} (discrepancy {:.2}); compound Poisson {:.4} ± {:.4} vs 2 (discrepancy {:.2})",
            cauchy.extrapolated,
            cauchy.extrapolated_stderr,
            cauchy.reference,
            cauchy.discrepancy,
            poisson.extrapolated,
            poisson.extrapolated_stderr,
            poisson.discrepancy
        ),
    }
}

fn generator_limits() -> Outcome {
    let e = |seed| exp(levygen::lab::default_t_grid(), 1_000_000, seed);
    let none = MomentOptions::default();
    let a = limit_study(&e(61), &cp(), &fun(r#"{"kind":"gaussian","d":1}"#), &[0.0], &none, None).unwrap();
    let a_exact = (a.reference - 2.0 * ((-1f64).exp() - 1.0)).abs() < 1e-12;
    let b = limit_study(
        &e(62),
        &ProcessModel::stable(0.5, 1),
        &fun(r#"{"kind":"power-gaussian","d":1,"beta":0.8}"#),
        &[0.0],
        &none,
        None,
    )
    .unwrap();
    let drift = ProcessModel::Levy {
        symbol: Symbol::levy(1, vec![levygen::symbol::ExponentTerm::Drift { b: vec![1.0] }]),
        small_jumps: Default::default(),
    };
    let c = limit_study(&e(63), &drift, &fun(r#"{"kind":"sin","freq":[1.0]}"#), &[0.0], &none, None).unwrap();
    let c_exact = c
        .rows
        .iter()
        .all(|r| r.estimate.stderr == 0.0 && r.estimate.mean == r.t.sin() / r.t);
    Outcome {
        pass: a_exact && a.pass && b.pass && c_exact && c.pass,
        detail: format!(
            "(a) {:.4} vs {:.4} discrepancy {:.2}; (b) {:.4} vs {:.4} discrepancy {:.2}; (c) exact quotients {c_exact}, discrepancy {:.1e}",
            a.extrapolated, a.reference, a.discrepancy, b.extrapolated, b.reference, b.discrepancy, c.discrepancy
        ),
    }
}

fn fractional_laplacian_eigen() -> Outcome {
    let mut worst: f64 = 0.0;
    for alpha in [0.5, 1.0, 1.5] {
        for xi in [0.5, 1.0, 2.0] {
            let f = fun(&format!(r#"{{"kind":"cos","freq":[{xi}]}}"#));
            let got = fractional_laplacian(&f, &[0.0], alpha, 1).unwrap().value;
            let want = -f64::powf(xi, alpha);
            worst = worst.max(((got - want) / want).abs());
        }
    }
    Outcome {
        pass: worst <= 0.01,
        detail: format!("9 points, max relative error {worst:.2e}"),
    }
}

fn maximal_inequality() -> Outcome {
    let rep = maximal_inequality_experiment(
        &exp(vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3], 2_000_000, 81),
        &ProcessModel::stable(1.0, 1),
        &[0.0],
        &default_r_grid(),
    )
    .unwrap();
    let slope = rep.rate_slope.unwrap_or(f64::NAN);
    Outcome {
        pass: (-1.15..=-0.85).contains(&slope) && rep.ratio_ok,
        detail: format!(
            "rate slope {slope:.3} (bound slope {:.3}), max ratio {:.3}",
            rep.bound_slope, rep.max_ratio
        ),
    }
}

fn tail_moment_bound() -> Outcome {
    let rep = moment_tail_bound_experiment(
        &exp(levygen::lab::default_t_grid(), 1_000_000, 91),
        &ProcessModel::stable(0.5, 1),
        &[0.0],
        0.3,
        1.0,
    )
    .unwrap();
    let c = c_alpha(0.5, 1).unwrap();
    let closed = ((rep.reference - 10.0 * c) / (10.0 * c)).abs() < 1e-6;
    Outcome {
        pass: closed && rep.pass && rep.margin > 0.0,
        detail: format!(
            "reference {:.4} (10c = {:.4}), boundary term {:.4}, liminf proxy {:.4} ± {:.4}, margin {:.4}",
            rep.reference,
            10.0 * c,
            rep.boundary_term,
            rep.liminf,
            rep.liminf_stderr,
            rep.margin
        ),
    }
}

fn domain_and_sweep() -> Outcome {
    let gamma = Expr::parse("0.6 + 0.2*sin(x)").unwrap();
    let model = ProcessModel::StableLike { d: 1, gamma: gamma.clone() };
    let f = fun(r#"{"kind":"gaussian","d":1}"#);
    let grid: Vec<Vec<f64>> = (0..=16).map(|k| vec![-8.0 + k as f64]).collect();
    let order = VariableOrderFn::sine(0.75, 0.2, 1.0).with_gap(0.1);
    let verdict = domain_verdict(&Symbol::stable_like(gamma, 1), &f, &order, &grid).unwrap();
    let sweep = uniform_limit_sweep(&exp(levygen::lab::default_t_grid(), 100_000, 101), &model, &f, &grid, &order).unwrap();
    let curve: Vec<String> = sweep
        .rows
        .iter()
        .map(|r| format!("{:.3}/{:.3}", r.sup_discrepancy, r.noise_floor))
        .collect();
    Outcome {
        pass: verdict.status == VerdictStatus::CertifiedVariableHolder && sweep.pass,
        detail: format!("verdict {:?}; sup/floor per t: {}", verdict.status, curve.join(" ")),
    }
}

fn sde_symbol_law() -> Outcome {
    let model = ProcessModel::Sde {
        sigma: vec![vec![Expr::constant(2.0)]],
        driver: Box::new(cp()),
        sigma_bound: 2.0,
        sigma_lipschitz: 0.0,
    };
    let f = fun(r#"{"kind":"gaussian","d":1}"#);
    let want = 2.0 * ((-4f64).exp() - 1.0);
    let rep = limit_study(
        &exp(vec![1e-1, 1e-2, 1e-3], 1_000_000, 111),
        &model,
        &f,
        &[0.0],
        &MomentOptions::default(),
        Some(want),
    )
    .unwrap();
    Outcome {
        pass: rep.pass,
        detail: format!("{:.4} vs {want:.4}, discrepancy {:.2}", rep.extrapolated, rep.discrepancy),
    }
}

fn csv_of_runs() -> Vec<u8> {
    let mut out = Vec::new();
    let e = exp(vec![1e-1, 1e-2, 1e-3], 20_000, 7);
    vague_convergence_experiment(&e, &ProcessModel::stable(1.0, 1), &[0.0], &JumpSet::interval(1.0, 2.0))
        .unwrap()
        .write_csv(&mut out)
        .unwrap();
    limit_study(&e, &cp(), &fun(r#"{"kind":"gaussian","d":1}"#), &[0.0], &MomentOptions::default(), None)
        .unwrap()
        .write_csv(&mut out)
        .unwrap();
    maximal_inequality_experiment(&e, &ProcessModel::stable(1.5, 1), &[0.0], &default_r_grid())
        .unwrap()
        .write_csv(&mut out)
        .unwrap();
    let sl = ProcessModel::StableLike {
        d: 1,
        gamma: Expr::parse("1.2 + 0.3*sin(x)").unwrap(),
    };
    limit_study(&e, &sl, &fun(r#"{"kind":"gaussian","d":1}"#), &[0.5], &MomentOptions::default(), Some(0.0))
        .unwrap()
        .write_csv(&mut out)
        .unwrap();
    out
}

fn determinism() -> Outcome {
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(csv_of_runs)
    };
    let base = run(1);
    let again = run(1);
    let wide = run(2);
    let wider = run(4);
    Outcome {
        pass: base == again && base == wide && base == wider,
        detail: format!(
            "{} CSV bytes; repeat identical {}, 2 workers identical {}, 4 workers identical {}",
            base.len(),
            base == again,
            base == wide,
            base == wider
        ),
    }
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("symbol round-trip", Duration::from_secs(1), symbol_round_trip),
        ("c_α constants", Duration::from_secs(1), c_alpha_constants),
        ("kernel identity", Duration::from_secs(10), kernel_identity),
        ("fractional moment identity", Duration::from_secs(30), moment_identity),
        ("vague convergence", Duration::from_secs(300), vague_convergence),
        ("small-time generator limits", Duration::from_secs(600), generator_limits),
        ("fractional Laplacian eigenfunctions", Duration::from_secs(60), fractional_laplacian_eigen),
        ("maximal inequality", Duration::from_secs(600), maximal_inequality),
        ("tail-moment bound", Duration::from_secs(300), tail_moment_bound),
        ("domain certificate and uniform sweep", Duration::from_secs(1200), domain_and_sweep),
        ("SDE symbol law", Duration::from_secs(120), sde_symbol_law),
        ("determinism", Duration::from_secs(600), determinism),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let ok = out.pass && took <= *budget;
        if !ok {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {name}: {} ({:.1} s of {} s)",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
