use std::sync::Arc;

use fracflow::brackets::{plus_bracket, q_bracket, truncate, truncation_power_inequality, JZeroFunction};
use fracflow::operator::psi;
use fracflow::resolvent::resolvent_contraction_check;
use fracflow::{
    apply_operator, energy, pairing, resolvent_step, Geometry, Grid, KernelTable, Perturbation, Phi, ResolventConfig,
    ScalarField,
};
use proptest::prelude::*;

fn small_kernel(p: f64) -> KernelTable {
    let grid = Arc::new(Grid::build(&Geometry::Interval { a: 0.0, b: 1.0 }, 1.0 / 13.0, 1.5).unwrap());
    KernelTable::new(grid, 0.5, p).unwrap()
}

fn field(grid: &Grid, vals: &[f64]) -> ScalarField {
    let mut u = ScalarField::zeros(grid.len());
    for (&i, &v) in grid.interior().iter().zip(vals.iter().cycle()) {
        u[i] = v;
    }
    u
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pairing_is_twice_the_weighted_product(p in 1.3f64..3.5, a in values(), b in values()) {
        let kernel = small_kernel(p);
        let g = kernel.grid();
        let (u, v) = (field(g, &a), field(g, &b));
        let au = apply_operator(u.as_slice(), &kernel);
        let direct = 2.0 * au.dot(g, &v);
        let paired = pairing(u.as_slice(), v.as_slice(), &kernel);
        prop_assert!((direct - paired).abs() <= 1e-9 * (1.0 + direct.abs()));
    }

    #[test]
    fn operator_is_odd_and_homogeneous(p in 1.3f64..3.5, a in values(), c in 0.1f64..3.0) {
        let kernel = small_kernel(p);
        let g = kernel.grid();
        let u = field(g, &a);
        let au = apply_operator(u.as_slice(), &kernel);
        let neg = apply_operator(u.scaled(-1.0).as_slice(), &kernel);
        let big = apply_operator(u.scaled(c).as_slice(), &kernel);
        let k = c.powf(p - 1.0);
        for &i in g.interior() {
            prop_assert!((au[i] + neg[i]).abs() <= 1e-9 * (1.0 + au[i].abs()));
            prop_assert!((big[i] - k * au[i]).abs() <= 1e-9 * (1.0 + big[i].abs()));
        }
    }

    #[test]
    fn energy_is_convex_along_segments(p in 1.3f64..3.5, a in values(), b in values(), t in 0.0f64..1.0) {
        let kernel = small_kernel(p);
        let g = kernel.grid();
        let (u, v) = (field(g, &a), field(g, &b));
        let mid = u.scaled(1.0 - t).axpy(t, &v);
        let e = |w: &ScalarField| energy(w.as_slice(), &kernel).energy;
        prop_assert!(e(&mid) <= (1.0 - t) * e(&u) + t * e(&v) + 1e-9 * (1.0 + e(&u) + e(&v)));
    }

    #[test]
    fn psi_is_monotone(p in 1.05f64..4.0, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        prop_assert!((psi(a, p) - psi(b, p)) * (a - b) >= 0.0);
    }

    #[test]
    fn truncation_is_a_contraction(lambda in 0.0f64..3.0, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        prop_assert!((truncate(lambda, a) - truncate(lambda, b)).abs() <= (a - b).abs() + 1e-15);
        prop_assert!(truncate(lambda, a).abs() <= a.abs());
    }

    #[test]
    fn truncation_power_inequality_for_m_at_least_one(
        m in 1.0f64..4.0, lambda in 0.0f64..2.0, p in 1.05f64..4.0, a in -3.0f64..3.0, b in -3.0f64..3.0,
    ) {
        prop_assert!(truncation_power_inequality(m, lambda, a, b, p));
    }

    #[test]
    fn brackets_are_bounded_by_the_direction(q in 1.0f64..4.0, a in values(), b in values()) {
        let g = small_kernel(2.0).grid().clone();
        let (u, v) = (field(&g, &a), field(&g, &b));
        // |[u, v]_q| ≤ ‖u‖_q^{q−1} ‖v‖_q by Hölder
        let lhs = q_bracket(q, &g, u.as_slice(), v.as_slice()).abs();
        let rhs = u.norm(&g, q).powf(q - 1.0) * v.norm(&g, q);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
        prop_assert!(plus_bracket(&g, u.as_slice(), v.as_slice()) <= v.positive_l1(&g) + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn resolvent_contracts_and_is_complete(
        pm in prop::sample::select(vec![(2.0, 1.0), (3.0, 2.0), (1.5, 1.0), (2.0, 0.5)]),
        a in values(),
        b in values(),
    ) {
        let kernel = small_kernel(pm.0);
        let g = kernel.grid();
        let (v1, v2) = (field(g, &a), field(g, &b));
        let js = [JZeroFunction::AbsPower(1.0), JZeroFunction::PowerPlus(2.0), JZeroFunction::ShiftedPlus(0.25)];
        let rep = resolvent_contraction_check(
            &v1, &v2, &Phi::power(pm.1).unwrap(), &Perturbation::zero(), &kernel, &ResolventConfig::with_lambda(0.05), &js,
        ).unwrap();
        prop_assert!(rep.holds(1e-8), "{rep:?}");
    }

    #[test]
    fn resolvent_preserves_order(a in values(), shift in 0.0f64..1.0) {
        let kernel = small_kernel(2.5);
        let g = kernel.grid();
        let v1 = field(g, &a);
        let v2 = v1.map(|x| x + shift);
        let phi = Phi::power(1.5).unwrap();
        let cfg = ResolventConfig::with_lambda(0.1);
        let pert = Perturbation::tanh(0.5).unwrap();
        let (u1, _) = resolvent_step(&v1, &phi, &pert, &kernel, &cfg).unwrap();
        let (u2, _) = resolvent_step(&v2, &phi, &pert, &kernel, &cfg).unwrap();
        for &i in g.interior() {
            prop_assert!(u1[i] <= u2[i] + 1e-10);
        }
    }
}
