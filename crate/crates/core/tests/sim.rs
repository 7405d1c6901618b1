use approx::assert_relative_eq;
use levygen::sim::variates::symmetric_stable;
use levygen::sim::{empirical_hitting_rate, JumpSet};
use levygen::stats::{draw, monte_carlo};
use levygen::{Expr, ProcessModel, SeedPolicy};
use rand::Rng;

fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn constant_stable_like_euler_matches_exact_law() {
    let n = 20_000;
    let t = 0.05;
    let euler = ProcessModel::StableLike {
        d: 1,
        gamma: Expr::parse("1.3 + 0*x").unwrap(),
    }
    .compile()
    .unwrap();
    let seeds = SeedPolicy::new(17);
    let a = draw(n, &seeds.child(1), |rng| euler.run(&[0.0], t, 16, None, rng).unwrap().x[0]);
    let b = draw(n, &seeds.child(2), |rng| t.powf(1.0 / 1.3) * symmetric_stable(1.3, rng));
    let d = ks_statistic(a, b);
    // two-sample critical value at level 1e-3
    let crit = 1.95 * (2.0 / n as f64).sqrt();
    assert!(d < crit, "KS {d} ≥ {crit}");
}

#[test]
fn hitting_rate_is_stable_under_cutoff_halving() {
    let model = |cutoff: f64| -> ProcessModel {
        serde_json::from_str(&format!(
            r#"{{"variant":"levy",
                "symbol":{{"family":"tlp-like","d":1,"params":{{"mass":"1","gamma":"0.8"}}}},
                "small_jumps":{{"cutoff":{cutoff}}}}}"#
        ))
        .unwrap()
    };
    let set = JumpSet::interval(0.5, 2.0);
    let seeds = SeedPolicy::new(3);
    let coarse = empirical_hitting_rate(&model(0.02), &[0.0], &set, 0.01, 200_000, &seeds).unwrap();
    let fine = empirical_hitting_rate(&model(0.01), &[0.0], &set, 0.01, 200_000, &seeds.child(9)).unwrap();
    let se = (coarse.stderr.powi(2) + fine.stderr.powi(2)).sqrt();
    assert!(coarse.mean > 0.0);
    assert!((coarse.mean - fine.mean).abs() < 4.0 * se, "{coarse:?} vs {fine:?}");
}

#[test]
fn runs_reproduce_across_pool_sizes() {
    let model = ProcessModel::StableLike {
        d: 2,
        gamma: Expr::parse("1.2 + 0.3*sin(x1)").unwrap(),
    }
    .compile()
    .unwrap();
    let sample = |threads: usize| -> Vec<f64> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            draw(5_000, &SeedPolicy::new(11), |rng| {
                model.run(&[0.5, -0.5], 0.1, 8, None, rng).unwrap().x[1]
            })
        })
    };
    let one = sample(1);
    assert_eq!(one, sample(3));
    assert_eq!(one, sample(1));
    assert_ne!(one, draw(5_000, &SeedPolicy::new(12), |rng| model.run(&[0.5, -0.5], 0.1, 8, None, rng).unwrap().x[1]));
}

#[test]
fn stderr_scales_with_sample_size() {
    let seeds = SeedPolicy::new(5);
    let est = |n: usize| monte_carlo(n, &seeds.child(n as u64), |rng| rng.random::<f64>().powi(2)).stderr;
    let (s1, s2, s4) = (est(40_000), est(80_000), est(160_000));
    assert_relative_eq!(s1 / s2, 2f64.sqrt(), max_relative = 0.2);
    assert_relative_eq!(s1 / s4, 2.0, max_relative = 0.2);
}
