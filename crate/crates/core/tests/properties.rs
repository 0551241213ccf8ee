//! Property tests over randomly drawn parameters.

use proptest::prelude::*;
use rnnhl::equilibria::{
    find_equilibria, fixed_point_map_F, invariant_box, symmetric_diagonal_root, NewtonConfig,
};
use rnnhl::model::{
    apply_symmetry_S, reduced3_field, sigmoid, BidirectionalMotif, Dynamics, NetworkSpec, Reduced3,
    ReducedState3,
};
use rnnhl::netgen::{build, TopologyConfig};
use rnnhl::stability::{contraction_certificate, CertificateVerdict};

fn nonzero(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi).prop_filter("c must be nonzero", |c: &f64| c.abs() > 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn swap_commutes_with_reduced_field(
        c in nonzero(-300.0, 100.0),
        x1 in -50.0..50.0f64,
        x2 in -50.0..50.0f64,
        w in -50.0..50.0f64,
    ) {
        let s = ReducedState3::new(x1, x2, w);
        prop_assert_eq!(apply_symmetry_S(reduced3_field(c, s)), reduced3_field(c, apply_symmetry_S(s)));
    }

    #[test]
    fn diagonal_root_solves_its_equation(c in nonzero(-1000.0, 1000.0)) {
        let x = symmetric_diagonal_root(c);
        prop_assert!((x - c * sigmoid(x).powi(3)).abs() < 1e-12 * c.abs().max(1.0));
    }

    #[test]
    fn weights_never_leave_the_box(
        a in 0.2..3.0f64,
        b in 0.2..3.0f64,
        c in nonzero(-20.0, 20.0),
        x1 in -1.0..1.0f64,
        x2 in -1.0..1.0f64,
    ) {
        // On the face |w| = w_max the weight flow points inward.
        let spec = BidirectionalMotif::uniform(a, b, c).to_spec();
        let bx = invariant_box(&spec);
        let x = [x1 * bx.x_bound, x2 * bx.x_bound];
        for sign in [-1.0, 1.0] {
            let f = spec.field_vec(&[x[0], x[1], sign * bx.w_bound, 0.0]);
            prop_assert!(sign * f[2] <= 0.0);
        }
    }

    #[test]
    fn generated_specs_round_trip(seed in 0u64..1000, k in 2usize..6) {
        let g = build(&TopologyConfig::interconnected(k, seed)).unwrap();
        let text = serde_json::to_string(&g.spec).unwrap();
        let back: NetworkSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &g.spec);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reduced_equilibria_are_swap_closed_and_odd(c in nonzero(-250.0, 60.0)) {
        prop_assume!((c + 123.7215).abs() > 0.05);
        let set = find_equilibria(&Reduced3 { c }, &NewtonConfig::default()).unwrap();
        prop_assert_eq!(set.count() % 2, 1);
        prop_assert_eq!(set.diagnostics.index_sum, 1);
        for e in &set.equilibria {
            let image = apply_symmetry_S(ReducedState3::from_slice(&e.point)).to_array();
            let mirrored = set.equilibria.iter().any(|f| {
                f.point.iter().zip(&image).all(|(p, q)| (p - q).abs() < 1e-6 * (1.0 + c.abs()))
            });
            prop_assert!(mirrored, "no mirror image of {:?}", e.point);
        }
    }

    #[test]
    fn certified_equilibrium_is_fixed_by_the_motif_map(
        a1 in 1.05..4.0f64,
        a2 in 1.05..4.0f64,
        b1 in 0.5..3.0f64,
        b2 in 0.5..3.0f64,
        c1 in nonzero(-1.5, 1.5),
        c2 in nonzero(-1.5, 1.5),
    ) {
        let motif = BidirectionalMotif { a1, a2, b1, b2, c1, c2 };
        prop_assume!(contraction_certificate(&motif).verdict == CertificateVerdict::UniqueGuaranteed);
        let set = find_equilibria(&motif.to_spec(), &NewtonConfig::default()).unwrap();
        prop_assert_eq!(set.count(), 1);
        let p = &set.equilibria[0].point;
        let image = fixed_point_map_F(&motif, &[p[0], p[1], p[2], p[3]]);
        for (u, v) in image.iter().zip(p) {
            prop_assert!((u - v).abs() < 1e-9);
        }
    }
}
