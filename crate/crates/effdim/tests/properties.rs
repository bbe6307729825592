//! Randomized invariants over the weight and quadrature machinery.

use proptest::prelude::*;

use effdim::bounds::{
    lambert_w0, product_dimension_bounds, superposition_dimension_bound,
    truncation_dimension_bound, ComparisonMode, DimValue, Extent,
};
use effdim::quadrature::{gauss_legendre_01, low_discrepancy_points, PointKind};
use effdim::subset::SubsetMask;
use effdim::weights::WeightScheme;

proptest! {
    /// Parametric evaluation agrees with a materialized explicit table.
    #[test]
    fn weight_of_matches_materialized_table(
        eta in 0.0f64..4.0,
        alpha in 0.1f64..1.5,
        beta_gap in 0.1f64..2.0,
        gamma in 0.05f64..1.0,
        bits in 1u32..64,
    ) {
        let d = 6;
        let u = SubsetMask::from_bits(d, (bits & 0x3f) as u128);
        prop_assume!(!u.is_empty());
        for scheme in [
            WeightScheme::product_power(eta),
            WeightScheme::pod(alpha, alpha + beta_gap),
            WeightScheme::order_geometric(gamma).unwrap(),
        ] {
            let table = scheme.materialize_explicit(d).unwrap();
            let a = scheme.weight_of(u).unwrap();
            let b = table.weight_of(u).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{u}: {a} vs {b}");
        }
    }

    /// Nonincreasing product factors bounded by one satisfy both weight
    /// conditions at any enumerable dimension.
    #[test]
    fn dominated_product_factors_satisfy_conditions(
        raw in proptest::collection::vec(0.01f64..=1.0, 8),
    ) {
        let mut factors = raw;
        factors.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let scheme = WeightScheme::product_factors(factors).unwrap();
        prop_assert!(scheme.verify_cardinality_condition(8).unwrap().holds());
        prop_assert!(scheme.verify_index_condition(8).unwrap().holds());
    }

    /// The POD family with growing cardinality factors always keeps the
    /// cardinality condition but breaks the index condition with a witness
    /// containing index 1.
    #[test]
    fn pod_condition_dichotomy(alpha in 0.05f64..1.0, gap in 0.05f64..2.0) {
        let scheme = WeightScheme::pod(alpha, alpha + gap);
        prop_assert!(scheme.verify_cardinality_condition(6).unwrap().holds());
        match scheme.verify_index_condition(6).unwrap() {
            effdim::ConditionVerdict::Holds => prop_assert!(false, "index condition held"),
            effdim::ConditionVerdict::Fails { witness_u, .. } => {
                prop_assert!(witness_u.contains(1), "witness {witness_u} must contain 1");
            }
        }
    }

    /// Gauss-Legendre rules keep positive weights summing to one and nodes
    /// symmetric in the unit interval.
    #[test]
    fn gauss_rule_shape(n in 1usize..48) {
        let (nodes, weights) = gauss_legendre_01(n);
        prop_assert!(weights.iter().all(|&w| w > 0.0));
        prop_assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for k in 0..n {
            prop_assert!((nodes[k] + nodes[n - 1 - k] - 1.0).abs() < 1e-14);
        }
    }

    /// Halton streams live in the half-open cube and are prefix-stable.
    #[test]
    fn halton_prefix_and_range(d in 1usize..10, n in 1usize..200) {
        let long = low_discrepancy_points(d, n + 32, PointKind::Halton);
        let short = low_discrepancy_points(d, n, PointKind::Halton);
        for (a, b) in long.iter().zip(&short) {
            prop_assert_eq!(a, b);
        }
        prop_assert!(short.iter().all(|p| p.iter().all(|&x| (0.0..1.0).contains(&x))));
    }

    /// Principal-branch residuals stay within the documented tolerance.
    #[test]
    fn lambert_residual(x in -0.36f64..1e6) {
        let w = lambert_w0(x).unwrap();
        prop_assert!((w * w.exp() - x).abs() <= 1e-12 * x.abs().max(1.0));
    }

    /// Strict bounds never exceed non-strict ones, and both senses shrink as
    /// epsilon grows.
    #[test]
    fn mode_and_epsilon_ordering(eta in 0.2f64..3.0, eps in 1e-6f64..0.5) {
        let (t_ns, s_ns) = product_dimension_bounds(eta, eps, ComparisonMode::NonStrict).unwrap();
        let (t_s, s_s) = product_dimension_bounds(eta, eps, ComparisonMode::Strict).unwrap();
        let fin = |v: DimValue| v.as_finite().unwrap();
        prop_assert!(fin(t_s.value) <= fin(t_ns.value));
        prop_assert!(fin(s_s.value) <= fin(s_ns.value));
        prop_assert!(fin(t_ns.value) - fin(t_s.value) <= 1);

        let (t_big, s_big) =
            product_dimension_bounds(eta, (eps * 2.0).min(0.99), ComparisonMode::NonStrict)
                .unwrap();
        prop_assert!(fin(t_big.value) <= fin(t_ns.value));
        prop_assert!(fin(s_big.value) <= fin(s_ns.value));
    }

    /// Scheme-level and closed-form product bounds agree once the finite
    /// extent is large enough.
    #[test]
    fn scheme_matches_closed_form(eta in 0.3f64..3.0, eps in 1e-5f64..0.5) {
        let (t, s) = product_dimension_bounds(eta, eps, ComparisonMode::NonStrict).unwrap();
        let scheme = WeightScheme::product_power(eta);
        let d = t.value.as_finite().unwrap() + 5;
        let t2 = truncation_dimension_bound(&scheme, Extent::Finite(d), eps, ComparisonMode::NonStrict)
            .unwrap();
        prop_assert_eq!(t.value, t2.value);
        let s2 = superposition_dimension_bound(
            &scheme,
            Extent::Finite(s.value.as_finite().unwrap() + 5),
            eps,
            ComparisonMode::NonStrict,
        )
        .unwrap();
        prop_assert_eq!(s.value, s2.value);
    }
}
