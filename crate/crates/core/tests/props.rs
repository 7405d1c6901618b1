use levygen::holder::{domain_verdict, VariableOrderFn, VerdictStatus};
use levygen::measure::c_alpha;
use levygen::stats::Welford;
use levygen::symbol::symbol_sup;
use levygen::{Expr, Symbol};
use proptest::prelude::*;

fn relativistic(m: f64, g: f64) -> Symbol {
    serde_json::from_str(&format!(
        r#"{{"family":"relativistic","d":1,"params":{{"mass":"{m}","gamma":"{g}"}}}}"#
    ))
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn welford_merge_matches_single_pass(a in prop::collection::vec(-1e3..1e3f64, 0..50),
                                         b in prop::collection::vec(-1e3..1e3f64, 0..50)) {
        let mut left = Welford::default();
        a.iter().for_each(|v| left.push(*v));
        let mut right = Welford::default();
        b.iter().for_each(|v| right.push(*v));
        let mut all = Welford::default();
        a.iter().chain(&b).for_each(|v| all.push(*v));
        let merged = left.merge(right);
        prop_assert_eq!(merged.n, all.n);
        prop_assert!((merged.mean - all.mean).abs() <= 1e-9 * (1.0 + all.mean.abs()));
        prop_assert!((merged.m2 - all.m2).abs() <= 1e-7 * (1.0 + all.m2));
    }

    #[test]
    fn c_alpha_is_positive_and_finite(alpha in 0.01..1.99f64, d in 1usize..5) {
        let c = c_alpha(alpha, d).unwrap();
        prop_assert!(c.is_finite() && c > 0.0);
    }

    #[test]
    fn symbol_sup_is_monotone_in_radius(g in 0.2..1.9f64, x in -3.0..3.0f64, r in 0.1..50.0f64, k in 1.0..4.0f64) {
        let sym = Symbol::stable_like(Expr::parse(&format!("{g} + 0.05*sin(x)")).unwrap(), 1);
        let a = symbol_sup(&sym, &[x], r).unwrap();
        let b = symbol_sup(&sym, &[x], k * r).unwrap();
        prop_assert!(a <= b + 1e-12, "{} > {}", a, b);
    }

    #[test]
    fn relativistic_symbol_is_between_zero_and_stable(m in 0.0..3.0f64, g in 0.1..2.0f64, xi in -100.0..100.0f64) {
        let q = relativistic(m, g).eval(&[0.0], &[xi]).unwrap();
        prop_assert!(q.im.abs() < 1e-12);
        prop_assert!(q.re >= -1e-12);
        prop_assert!(q.re <= xi.abs().powf(g) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn real_part_is_even_in_frequency(g in 0.2..1.9f64, x in -2.0..2.0f64, xi in 0.0..40.0f64) {
        let sym = Symbol::stable_like(Expr::parse(&format!("{g} + 0.05*cos(x)")).unwrap(), 1);
        let p = sym.eval(&[x], &[xi]).unwrap();
        let n = sym.eval(&[x], &[-xi]).unwrap();
        prop_assert!((p.re - n.re).abs() <= 1e-12 * (1.0 + p.re.abs()));
    }

    #[test]
    fn expressions_survive_serde(a in -5.0..5.0f64, b in 0.1..3.0f64, x in -4.0..4.0f64) {
        let e = Expr::parse(&format!("{a} + {b}*sin(x) - abs(x)^0.5")).unwrap();
        let back: Expr = serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap();
        prop_assert_eq!(e.eval(&[x]).to_bits(), back.eval(&[x]).to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    // a wider gap can only make certification harder
    #[test]
    fn certification_is_monotone_in_gap(e1 in 0.01..0.3f64, extra in 0.0..0.3f64) {
        let gamma = Expr::parse("0.6 + 0.2*sin(x)").unwrap();
        let sym = Symbol::stable_like(gamma, 1);
        let f = serde_json::from_str::<levygen::generator::FunctionSpec>(r#"{"kind":"gaussian","d":1}"#)
            .unwrap()
            .build()
            .unwrap();
        let grid: Vec<Vec<f64>> = (0..=8).map(|k| vec![-4.0 + k as f64]).collect();
        let verdict = |eps: f64| {
            domain_verdict(&sym, &f, &VariableOrderFn::sine(0.75, 0.2, 1.0).with_gap(eps), &grid)
                .unwrap()
                .status
        };
        if verdict(e1 + extra) != VerdictStatus::NotCertified {
            prop_assert!(verdict(e1) != VerdictStatus::NotCertified);
        }
    }
}
