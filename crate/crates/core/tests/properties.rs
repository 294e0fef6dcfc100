use std::f64::consts::PI;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nonloc_core::deloc::{exhaustive_min_support, min_support_size};
use nonloc_core::graph::{generate_random_regular, girth_report};
use nonloc_core::kernel::{dirichlet_approx, dirichlet_approx_cf, wrap_distance, KernelRecipe};
use nonloc_core::report::to_canonical_json_line;
use nonloc_core::tree::{spherical_function, SpectralPoint};

fn regular_params() -> impl Strategy<Value = (usize, usize, u64)> {
    (2usize..=4, 6usize..40, any::<u64>()).prop_filter_map("parity", |(d, n, seed)| {
        let n = n.max(d + 2);
        ((n * (d + 1)) % 2 == 0).then_some((n, d, seed))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn girth_ignores_labels((n, d, seed) in regular_params(), shuffle in any::<u64>()) {
        let g = generate_random_regular(n, d, seed).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
        let h = g.relabeled(&perm);
        prop_assert_eq!(girth_report(&g, 32).unwrap(), girth_report(&h, 32).unwrap());
    }

    #[test]
    fn dirichlet_scan_is_minimal(theta in 0.0..PI, big_r in 1usize..3000) {
        let r = dirichlet_approx(theta, big_r);
        let bound = 2.0 * PI / big_r as f64;
        prop_assert!(r >= 1 && r <= big_r);
        prop_assert!(wrap_distance(r as f64 * theta) < bound);
        for s in 1..r {
            prop_assert!(wrap_distance(s as f64 * theta) >= bound);
        }
        if let Some(cf) = dirichlet_approx_cf(theta, big_r) {
            prop_assert!(cf >= r && cf <= big_r);
            prop_assert!(wrap_distance(cf as f64 * theta) < bound);
        }
    }

    #[test]
    fn fejer_transform_bounded_below(theta0 in 0.0..=PI, eps in 0.1f64..0.5, scale in 1.0f64..40.0, theta in 0.0..=PI) {
        let n = ((256.0 / (eps * eps)) * scale).ceil() as usize;
        let recipe = KernelRecipe::new(theta0, eps, n).unwrap();
        let h = recipe.fejer_transform(theta);
        prop_assert!(h >= -1.0 - 1e-12);
        prop_assert!(h <= (2 * recipe.m - 1) as f64 + 1e-12);
        prop_assert!((h - recipe.fejer_closed_form(theta)).abs() <= 1e-10);
        prop_assert_eq!(recipe.r_prime % 2, 0);
        prop_assert!(recipe.support_radius <= n);
    }

    #[test]
    fn spherical_function_three_term_recurrence(d in 2usize..6, theta in 0.0..=PI, x in 1usize..20) {
        // (d+1) phi(1) = lambda sqrt(d) phi(0) at the root, then
        // d phi(x+1) + phi(x-1) = lambda sqrt(d) phi(x)
        let p = SpectralPoint::from_theta(theta);
        let lam = 2.0 * theta.cos() * (d as f64).sqrt();
        let f = |k: usize| spherical_function(d, &p, k);
        prop_assert!((f(0) - 1.0).abs() <= 1e-12);
        prop_assert!(((d + 1) as f64 * f(1) - lam * f(0)).abs() <= 1e-10);
        let lhs = d as f64 * f(x + 1) + f(x - 1);
        prop_assert!((lhs - lam * f(x)).abs() <= 1e-9);
    }

    #[test]
    fn canonical_json_round_trips(v in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let text = to_canonical_json_line(&serde_json::json!({ "v": v })).unwrap();
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back["v"].as_f64(), Some(v));
    }

    #[test]
    fn greedy_support_is_minimal(raw in prop::collection::vec(-1.0f64..1.0, 2..14), eps in 0.05f64..0.95) {
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-6);
        let phi: Vec<f64> = raw.iter().map(|x| x / norm).collect();
        let greedy = min_support_size(&phi, eps);
        let exact = exhaustive_min_support(&phi, eps);
        prop_assert_eq!(greedy.size, exact);
    }
}
