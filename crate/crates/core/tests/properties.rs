use proptest::prelude::*;

use tailsum::clt::KRule;
use tailsum::config::ExperimentConfig;
use tailsum::functionals::{c1, c_beta, c_beta_stieltjes, mu};
use tailsum::models::{parse_descriptor, quantile, QuantileModel};
use tailsum::sampling::{draw_top_k, SeedSpec};

const GUMBEL_DOMAIN: [&str; 6] = [
    "exponential(1)",
    "gumbel(0,1)",
    "weibull(2)",
    "normal(0,1)",
    "lognormal(0,1)",
    "gamma(2)",
];

fn models() -> impl Strategy<Value = Box<dyn QuantileModel>> {
    prop::sample::select(&GUMBEL_DOMAIN[..])
        .prop_union(prop::sample::select(
            &[
                "pareto(3)",
                "uniform(-1,2)",
                "weibull(0.5)",
                "affine(2,5,normal(0,1))",
            ][..],
        ))
        .prop_map(|d| parse_descriptor(d).unwrap())
}

/// `s` spread evenly on a log scale over `[1e-8, 1/2]`.
fn tail_s() -> impl Strategy<Value = f64> {
    (-8.0f64..-std::f64::consts::LOG10_2).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantile_is_monotone(m in models(), a in 1e-9f64..1.0 - 1e-9, b in 1e-9f64..1.0 - 1e-9) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(quantile(&*m, lo).unwrap() <= quantile(&*m, hi).unwrap());
    }

    #[test]
    fn cdf_inverts_quantile(m in models(), u in 1e-6f64..1.0 - 1e-6) {
        if let Some(f) = m.cdf(quantile(&*m, u).unwrap()) {
            prop_assert!((f - u).abs() <= 1e-9, "{} u={u} F(Q(u))={f}", m.descriptor());
        }
    }

    #[test]
    fn c_beta_is_positive_and_both_routes_agree(
        d in prop::sample::select(&GUMBEL_DOMAIN[..]),
        s in tail_s(),
        beta in 0.5f64..3.0,
    ) {
        let m = parse_descriptor(d).unwrap();
        let a = c_beta(&*m, s, beta).unwrap();
        let b = c_beta_stieltjes(&*m, s, beta).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!((a - b).abs() <= 1e-7 * a, "{d} s={s} beta={beta}: {a} vs {b}");
    }

    #[test]
    fn mean_excess_centering(m in models(), s in tail_s()) {
        // μ(s) - s Q(1-s) = s c(s)
        let lhs = mu(&*m, s).unwrap() - s * m.upper_quantile(s);
        let rhs = s * c1(&*m, s).unwrap();
        let scale = s * (1.0 + m.upper_quantile(s).abs());
        prop_assert!((lhs - rhs).abs() <= 1e-9 * scale, "{} s={s}: {lhs} vs {rhs}", m.descriptor());
    }

    #[test]
    fn order_statistics_are_ordered(m in models(), seed in any::<u64>(), n in 10u64..1_000_000, k in 1usize..40) {
        let k = k.min(n as usize - 1);
        let d = draw_top_k(SeedSpec::new(seed, 0), n, k, &*m).unwrap();
        prop_assert_eq!(d.top_x.len(), k);
        prop_assert!(d.top_x.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(d.threshold_x <= d.top_x[k - 1]);
        prop_assert!(d.top_tail.iter().chain([&d.threshold_tail]).all(|&t| t > 0.0 && t < 1.0));
        let again = draw_top_k(SeedSpec::new(seed, 0), n, k, &*m).unwrap();
        prop_assert_eq!(d.top_x, again.top_x);
    }

    #[test]
    fn config_round_trip_is_idempotent(
        reps in 1usize..10_000,
        seed in any::<u64>(),
        ns in prop::collection::vec(4u64..1_000_000, 1..4),
        coeff in 0.1f64..5.0,
        gamma in 0.1f64..0.9,
        fixed in prop::option::of(1u64..50),
    ) {
        let mut c = ExperimentConfig::for_models(&["gumbel(0,1)", "pareto(2)"]);
        c.replicates = reps;
        c.master_seed = seed;
        c.n_values = ns;
        c.k_rule = match fixed {
            Some(k) => KRule::Fixed { k },
            None => KRule::Power { coeff, gamma },
        };
        let once = c.to_json();
        let back = ExperimentConfig::from_json(&once).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.to_json(), once);
    }
}
