use std::cell::Cell;

thread_local! {
    static GAIN: Cell<f64> = const { Cell::new(1.0) };
}

/// Runs `f` with the sigmoid on the current thread replaced by
/// `1 / (1 + e^{-gain·z})` while [`sigmoid_prime`] keeps its unit-gain form.
///
/// This deliberately breaks the model so the verification harness can prove
/// that it notices. Work fanned out to other threads is unaffected, so
/// callers should run sequentially inside `f`.
pub fn with_sigmoid_gain<R>(gain: f64, f: impl FnOnce() -> R) -> R {
    struct Restore(f64);
    impl Drop for Restore {
        fn drop(&mut self) {
            GAIN.with(|g| g.set(self.0));
        }
    }
    let _restore = Restore(GAIN.with(|g| g.replace(gain)));
    f()
}

/// Logistic sigmoid `1 / (1 + e^{-z})`.
///
/// Uses the two-branch form so that `e^{-z}` never overflows for large
/// negative arguments.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    let z = z * GAIN.with(Cell::get);
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Derivative of [`sigmoid`], `φ(z)(1 − φ(z))`, with maximum 1/4 at zero.
#[inline]
pub fn sigmoid_prime(z: f64) -> f64 {
    // φ(z)·φ(−z) avoids the cancellation in 1 − φ(z) for large z.
    sigmoid(z) * sigmoid(-z)
}

/// Inverse of [`sigmoid`] on (0, 1).
#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_is_scoped() {
        let inside = with_sigmoid_gain(2.0, || sigmoid(1.0));
        assert_eq!(inside, 1.0 / (1.0 + (-2.0f64).exp()));
        assert_eq!(sigmoid(1.0), 1.0 / (1.0 + (-1.0f64).exp()));
    }

    #[test]
    fn symmetry_point() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid_prime(0.0), 0.25);
    }

    #[test]
    fn saturation() {
        let s = sigmoid(40.0);
        assert!(1.0 - s < 1e-17);
        assert!(sigmoid_prime(40.0) < 1e-17);
        assert!(sigmoid(-745.0) >= 0.0);
        assert!(sigmoid(-700.0) > 0.0 && sigmoid(-700.0).is_finite());
        assert_eq!(sigmoid(800.0), 1.0);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let h = 1e-6;
        for z in [1.0, -2.0, 0.3, 4.0] {
            let fd = (sigmoid(z + h) - sigmoid(z - h)) / (2.0 * h);
            assert!((fd - sigmoid_prime(z)).abs() < 1e-9, "z = {z}");
        }
        // Frozen values from direct evaluation.
        assert!((sigmoid_prime(1.0) - 0.196_611_933_241_481_85).abs() < 1e-12);
        assert!((sigmoid_prime(-2.0) - 0.104_993_585_403_507_4).abs() < 1e-12);
    }

    #[test]
    fn logit_inverts_sigmoid() {
        for z in [-10.0, -1.0, 0.0, 0.5, 7.0] {
            assert!((logit(sigmoid(z)) - z).abs() < 1e-10);
        }
    }
}
