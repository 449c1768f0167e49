//! Algebraic properties of the frozen system.

use proptest::prelude::*;
use tis_fhn::frozen;
use tis_fhn::model::Params;
use tis_fhn::singular::c_of_point;

fn params() -> impl Strategy<Value = Params> {
    (0.01..0.7f64, 0.01..0.7f64, 0.05..1.5f64, 0.05..2.0f64)
        .prop_map(|(a, b, beta, gamma)| Params::new(a, b, beta, gamma, 0.05).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn equilibrium_satisfies_both_nullclines(p in params(), c in -1.0..=1.0f64) {
        let r = frozen::r_of_c(&p, c).unwrap();
        let eq = frozen::equilibrium(&p, c).unwrap();
        prop_assert!((r * eq.v_e - eq.v_e.powi(3) / 3.0 - eq.w_e).abs() < 1e-10);
        prop_assert!((eq.v_e - p.gamma() * eq.w_e + p.beta()).abs() < 1e-12);
        // the leftmost root: no equilibrium further left
        let g = |v: f64| r * v - v.powi(3) / 3.0 - (v + p.beta()) / p.gamma();
        let step = 1e-3;
        let mut v = eq.v_e - step;
        while v > eq.v_e - 5.0 {
            prop_assert!(g(v) > 0.0);
            v -= step;
        }
    }

    #[test]
    fn fold_is_a_critical_point_of_the_cubic(p in params(), c in -1.0..=1.0f64) {
        let r = frozen::r_of_c(&p, c).unwrap();
        prop_assume!(r > 0.0);
        let f = frozen::fold_point(&p, c).unwrap();
        prop_assert!((r - f.v_m * f.v_m).abs() < 1e-14);
        prop_assert!((r * f.v_m - f.v_m.powi(3) / 3.0 - f.w_m).abs() < 1e-14);
        let coord = c_of_point(&p, f.v_m, f.w_m).unwrap();
        prop_assert!((coord.value - c).abs() < 1e-12);
    }

    #[test]
    fn coordinate_inverts_equilibria(p in params(), c in -1.0..=1.0f64) {
        let eq = frozen::equilibrium(&p, c).unwrap();
        prop_assume!(eq.v_e.abs() > 1e-6);
        let coord = c_of_point(&p, eq.v_e, eq.w_e).unwrap();
        prop_assert!((coord.value - c).abs() < 1e-9 / eq.v_e.abs());
    }

    #[test]
    fn spiking_conditions_are_exclusive(p in params()) {
        let class = frozen::classify_region(&p, frozen::DEFAULT_C_GRID).unwrap();
        prop_assert_eq!(class.in_e_ges_small_eps, class.in_e_0);
        if class.in_e_0 {
            prop_assert!(class.in_e_unique);
            let none = frozen::no_spiking_condition(&p).unwrap();
            let some = frozen::piecewise_spiking_condition(&p);
            prop_assert!(!(none && some));
        } else {
            prop_assert!(frozen::no_spiking_condition(&p).is_err());
        }
    }

    #[test]
    fn region_requires_fold_bound(p in params()) {
        let class = frozen::classify_region(&p, 201).unwrap();
        if p.a() + p.b() >= std::f64::consts::SQRT_2 {
            prop_assert!(!class.in_e_0);
        }
    }
}

#[test]
fn table_is_consistent_with_pointwise_queries() {
    let p = Params::new(0.3, 0.3, 0.8, 0.5, 0.05).unwrap();
    let rows = frozen::nullcline_table(&p, 11).unwrap();
    assert_eq!(rows.len(), 11);
    for row in rows {
        let eq = frozen::equilibrium(&p, row.c).unwrap();
        let f = frozen::fold_point(&p, row.c).unwrap();
        assert_eq!((row.v_e, row.w_e, row.v_m, row.w_m), (eq.v_e, eq.w_e, f.v_m, f.w_m));
        assert!(row.v_e < row.v_m);
    }
}
