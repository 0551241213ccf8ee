//! Vector fields and Jacobians of networks with Hebbian synapses.

mod activation;
mod dynamics;
mod network;
mod reduced;

pub use activation::{logit, sigmoid, sigmoid_prime, with_sigmoid_gain};
pub use dynamics::{Dynamics, EquilibriumSystem, SymmetryTag};
pub use network::{
    BidirectionalMotif, NetworkMetadata, NetworkSpec, SingleSynapseMotif, Synapse, SystemState,
    NETWORK_SCHEMA,
};
pub use reduced::{
    apply_symmetry_S, reduced3_field, reduced_planar_field, reduced_planar_jacobian, Reduced3,
    ReducedPlanar, ReducedState3, SymmetricParams,
};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error("{field} {reason}")]
    Invalid { field: String, reason: String },
    #[error("dimension mismatch in {field}: expected {expected}, got {got}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        got: usize,
    },
}

#[cfg(test)]
mod jacobian_tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn fd_check<D: Dynamics>(sys: &D, s: &[f64]) {
        let jac = sys.jacobian(s);
        let n = sys.dim();
        for k in 0..n {
            let h = 1e-6 * s[k].abs().max(1.0);
            let mut sp = s.to_vec();
            let mut sm = s.to_vec();
            sp[k] += h;
            sm[k] -= h;
            let (fp, fm) = (sys.field_vec(&sp), sys.field_vec(&sm));
            for r in 0..n {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                let an = jac[(r, k)];
                assert!(
                    (fd - an).abs() <= 1e-5 * an.abs().max(1.0),
                    "entry ({r},{k}): analytic {an}, fd {fd}"
                );
            }
        }
    }

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let n = rng.gen_range(1..5);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if rng.gen_bool(0.6) {
                        edges.push(Synapse { i, j, b: rng.gen_range(0.2..2.0), c: rng.gen_range(-10.0..10.0) });
                    }
                }
            }
            let spec = NetworkSpec::new((0..n).map(|_| rng.gen_range(0.2..2.0)).collect(), edges);
            let s: Vec<f64> = (0..spec.state_dim()).map(|_| rng.gen_range(-4.0..4.0)).collect();
            fd_check(&spec, &s);
            let r3 = Reduced3 { c: rng.gen_range(-150.0..50.0) };
            fd_check(&r3, &[rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(-20.0..20.0)]);
            let pl = ReducedPlanar { c: r3.c };
            fd_check(&pl, &[rng.gen_range(-4.0..4.0), rng.gen_range(-20.0..20.0)]);
        }
    }

    #[test]
    fn node_jacobian_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let spec = NetworkSpec::new(
            vec![0.7, 1.1, 0.9],
            vec![
                Synapse { i: 0, j: 1, b: 0.5, c: -3.0 },
                Synapse { i: 1, j: 0, b: 1.5, c: 2.0 },
                Synapse { i: 2, j: 2, b: 1.0, c: -1.0 },
                Synapse { i: 2, j: 0, b: 0.8, c: 4.0 },
            ],
        );
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let jac = spec.node_jacobian(&x);
            for k in 0..3 {
                let h = 1e-6;
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                let (mut rp, mut rm) = (vec![0.0; 3], vec![0.0; 3]);
                spec.node_residual(&xp, &mut rp);
                spec.node_residual(&xm, &mut rm);
                for r in 0..3 {
                    let fd = (rp[r] - rm[r]) / (2.0 * h);
                    assert!((fd - jac[(r, k)]).abs() < 1e-6 * jac[(r, k)].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn reduced_jacobian_at_diagonal_equilibrium_matches_closed_form() {
        for c in [-150.0, -3.0, 1.0, 12.0] {
            let x = crate::equilibria::symmetric_diagonal_root(c);
            let p = sigmoid(x);
            let jac = Reduced3 { c }.jacobian(&[x, x, c * p * p]);
            let off = c * p.powi(3) * sigmoid(-x);
            let low = c * p * p * sigmoid(-x);
            let want = [[-1.0, off, p], [off, -1.0, p], [low, low, -1.0]];
            for r in 0..3 {
                for k in 0..3 {
                    assert!((jac[(r, k)] - want[r][k]).abs() < 1e-12, "c = {c} ({r},{k})");
                }
            }
        }
    }

    #[test]
    fn single_synapse_jacobian_structure() {
        let m = SingleSynapseMotif { a1: 1.0, a2: 1.0, b1: 1.0, c1: 1.0 };
        let spec = m.to_spec();
        // Bisection on 4x − φ(x) over [0, 1].
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 4.0 * mid - sigmoid(mid) < 0.0 { lo = mid } else { hi = mid }
        }
        let x2 = lo;
        assert!((x2 - 0.1334).abs() < 1e-4);
        let s = [0.0, x2, 2.0 * x2];
        assert!(spec.field_vec(&s).iter().all(|v| v.abs() < 1e-12));
        let jac = spec.jacobian(&s);
        assert_eq!(jac[(0, 0)], -1.0);
        assert!((jac[(1, 2)] - 0.5).abs() < 1e-15);
        assert!((jac[(2, 1)] - sigmoid_prime(x2) / 2.0).abs() < 1e-15);
        assert!((jac[(1, 0)] - x2 / 2.0).abs() < 1e-15);
        assert!((jac[(2, 0)] - sigmoid(x2) / 4.0).abs() < 1e-15);
    }
}
