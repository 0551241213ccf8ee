//! One-dimensional root problems of the symmetric motif: the diagonal
//! equilibrium, the admissible-interval endpoint, the off-diagonal root
//! function and the critical learning rate.

use std::f64::consts::E;

use crate::model::sigmoid;

use super::EquilibriaError;

/// Bisection on a sign-changing bracket followed by Newton polishing.
///
/// `g` returns `(value, derivative)`. The bracket must satisfy
/// `g(lo) < 0 < g(hi)` or the reverse; the result is the best point found
/// once `|g| < tol` or the bracket collapses.
pub(crate) fn bracketed_root<G: Fn(f64) -> (f64, f64)>(g: G, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let (glo, _) = g(lo);
    if glo == 0.0 {
        return lo;
    }
    let lo_negative = glo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (gm, _) = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() < 1e-6 * (1.0 + lo.abs()) {
            break;
        }
    }
    let mut x = 0.5 * (lo + hi);
    let (a, b) = if lo < hi { (lo, hi) } else { (hi, lo) };
    for _ in 0..60 {
        let (gx, dg) = g(x);
        if gx.abs() < tol {
            return x;
        }
        let next = x - gx / dg;
        if !next.is_finite() || next < a || next > b {
            break;
        }
        if next == x {
            return x;
        }
        x = next;
    }
    // Newton left the bracket; finish by bisection.
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (gm, _) = g(mid);
        if gm.abs() < tol || mid == lo || mid == hi {
            return mid;
        }
        if (gm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The unique root `x̂` of `x = cφ(x)³`; `sign(x̂) = sign(c)`.
pub fn symmetric_diagonal_root(c: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    let g = |x: f64| {
        let p = sigmoid(x);
        let dp = p * sigmoid(-x);
        (x - c * p * p * p, 1.0 - 3.0 * c * p * p * dp)
    };
    bracketed_root(g, c.min(0.0), c.max(0.0), 1e-13 * c.abs().max(1.0))
}

/// `h(ξ) = ξ(1 + e^{−ξ})`, strictly increasing on ℝ.
fn xi_map(xi: f64) -> f64 {
    xi * (1.0 + (-xi).exp())
}

/// Root of `ξ(1 + e^{−ξ}) = c`, with the sign of `c`.
pub fn beta_c(c: f64) -> Result<f64, EquilibriaError> {
    if c == 0.0 || !c.is_finite() {
        return Err(EquilibriaError::BetaUndefined);
    }
    let g = |xi: f64| {
        let e = (-xi).exp();
        (xi * (1.0 + e) - c, 1.0 + e - xi * e)
    };
    let (lo, hi) = if c > 0.0 {
        (0.0, c)
    } else {
        (-(c.abs().max(1.0).ln() + 1.0), 0.0)
    };
    Ok(bracketed_root(g, lo, hi, 1e-12 * c.abs().max(1.0)))
}

/// Open interval of `ξ` on which `α = ξ(1 + e^{−ξ})/c` lies in (0, 1).
pub fn admissible_interval(c: f64) -> Result<(f64, f64), EquilibriaError> {
    let beta = beta_c(c)?;
    Ok(if c > 0.0 { (0.0, beta) } else { (beta, 0.0) })
}

/// The off-diagonal root function (with unit combined decay):
/// `ln(√α / (1 − √α)) − c√α φ(ξ)²`, `α = ξ(1 + e^{−ξ})/c`.
///
/// Its zeros are the `x2` coordinates of the equilibria of the symmetric
/// motif; `√α` is the matching `φ(x1)`.
pub fn f_xi(c: f64, xi: f64) -> Result<f64, EquilibriaError> {
    if c == 0.0 {
        return Err(EquilibriaError::BetaUndefined);
    }
    let alpha = xi_map(xi) / c;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EquilibriaError::Domain { c, xi, alpha });
    }
    let s = alpha.sqrt();
    if s >= 1.0 {
        return Err(EquilibriaError::Domain { c, xi, alpha });
    }
    let p = sigmoid(xi);
    Ok((s / (1.0 - s)).ln() - c * s * p * p)
}

/// Zeros of [`f_xi`] found by dense sign-change scanning of the admissible
/// interval (ends inset by `1e−9` of its length) and bisection refinement.
///
/// The diagonal root `x̂` is always a zero. For strongly Hebbian `c` it sits
/// within rounding of the interval end, where no scan can see it, so it is
/// added explicitly when the scan misses it.
pub fn count_f_roots(c: f64, grid_points: usize) -> Result<Vec<f64>, EquilibriaError> {
    if grid_points < 1000 {
        return Err(EquilibriaError::GridTooCoarse(grid_points));
    }
    let (lo, hi) = admissible_interval(c)?;
    let inset = 1e-9 * (hi - lo);
    let (lo, hi) = (lo + inset, hi - inset);
    let step = (hi - lo) / (grid_points - 1) as f64;
    let grid: Vec<f64> = (0..grid_points)
        .map(|k| if k + 1 == grid_points { hi } else { lo + step * k as f64 })
        .collect();
    let values = grid
        .iter()
        .map(|&xi| f_xi(c, xi))
        .collect::<Result<Vec<_>, _>>()?;
    let mut roots = Vec::new();
    for k in 0..grid_points - 1 {
        let (fa, fb) = (values[k], values[k + 1]);
        if fa == 0.0 {
            roots.push(grid[k]);
            continue;
        }
        if fa.signum() == fb.signum() || fb == 0.0 {
            continue;
        }
        let (mut a, mut b) = (grid[k], grid[k + 1]);
        while b - a > 1e-12 {
            let mid = 0.5 * (a + b);
            if mid == a || mid == b {
                break;
            }
            let fm = f_xi(c, mid)?;
            if fm.signum() == fa.signum() {
                a = mid;
            } else {
                b = mid;
            }
        }
        roots.push(0.5 * (a + b));
    }
    if values[grid_points - 1] == 0.0 {
        roots.push(grid[grid_points - 1]);
    }
    let diagonal = symmetric_diagonal_root(c);
    if !roots.iter().any(|r| (r - diagonal).abs() <= 1e-6 * (1.0 + diagonal.abs())) {
        roots.push(diagonal);
        roots.sort_by(f64::total_cmp);
    }
    Ok(roots)
}

/// Principal branch `W₀` of the Lambert W function: `w e^w = y`, `w ≥ −1`.
pub fn lambert_w0(y: f64) -> Result<f64, EquilibriaError> {
    let branch = -1.0 / E;
    if y.is_nan() || y < branch {
        return Err(EquilibriaError::LambertDomain(y));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y == branch {
        return Ok(-1.0);
    }
    let mut w = if y < -0.25 {
        // Series about the branch point.
        let p = (2.0 * (E * y + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if y < 3.0 {
        (1.0 + y).ln()
    } else {
        let l = y.ln();
        l - l.ln()
    };
    let tol = 1e-14 * y.abs().max(1.0);
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - y;
        if f.abs() < tol {
            break;
        }
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        let next = (w - step).max(-1.0);
        if next == w {
            break;
        }
        w = next;
    }
    Ok(w)
}

/// `x̂₀ = −W₀(1/e) − 1`, the diagonal coordinate at which the transverse
/// eigenvalue of the diagonal equilibrium vanishes.
pub fn critical_x0() -> f64 {
    -lambert_w0(1.0 / E).expect("1/e is inside the domain") - 1.0
}

/// Critical learning rate `c₀ = x̂₀(1 + e^{−x̂₀})³ ≈ −123.7215`.
pub fn critical_c0() -> f64 {
    let x0 = critical_x0();
    x0 * (1.0 + (-x0).exp()).powi(3)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
        let flo = f(lo);
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) < 0.0) == (flo < 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn diagonal_root_examples() {
        assert_eq!(symmetric_diagonal_root(0.0), 0.0);
        let oracle = bisect(|x| x - sigmoid(x).powi(3), 0.0, 1.0);
        assert!((symmetric_diagonal_root(1.0) - oracle).abs() < 1e-12);
        assert!((oracle - 0.157).abs() < 1e-3);
        let x0 = symmetric_diagonal_root(critical_c0());
        assert!((x0 - critical_x0()).abs() < 1e-9, "{x0}");
        assert!((x0 + 1.27846).abs() < 1e-5);
        for c in [-1e4, -150.0, -2.0, 3.0, 500.0] {
            let x = symmetric_diagonal_root(c);
            assert_eq!(x.signum(), c.signum());
            assert!((x - c * sigmoid(x).powi(3)).abs() < 1e-12 * c.abs().max(1.0));
        }
    }

    #[test]
    fn beta_examples() {
        let b = beta_c(2.0).unwrap();
        let oracle = bisect(|x| xi_map(x) - 2.0, 0.0, 2.0);
        assert!((b - oracle).abs() < 1e-10);
        assert!((b - 1.68789).abs() < 1e-5, "{b}");
        let b = beta_c(-2.0).unwrap();
        let oracle = bisect(|x| xi_map(x) + 2.0, -2.0, 0.0);
        assert!((b - oracle).abs() < 1e-10);
        assert!((b + 0.674832).abs() < 1e-6, "{b}");
        assert!(matches!(beta_c(0.0), Err(EquilibriaError::BetaUndefined)));
    }

    #[test]
    fn beta_defining_property() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let c: f64 = rng.gen_range(-500.0..500.0);
            let b = beta_c(c).unwrap();
            assert!((xi_map(b) - c).abs() < 1e-12 * c.abs().max(1.0), "c = {c}");
            assert_eq!(b.signum(), c.signum());
        }
    }

    #[test]
    fn f_limits_on_admissible_interval() {
        let beta = beta_c(2.0).unwrap();
        assert!(f_xi(2.0, 1e-10).unwrap() < -10.0);
        assert!(f_xi(2.0, beta - 1e-12).unwrap() > 10.0);
        assert!(f_xi(2.0, -0.1).is_err());
        assert!(f_xi(2.0, beta + 1e-3).is_err());
        assert!(f_xi(-150.0, 0.5).is_err());
    }

    #[test]
    fn f_root_counts() {
        assert_eq!(count_f_roots(2.0, 4000).unwrap().len(), 1);
        assert_eq!(count_f_roots(-100.0, 4000).unwrap().len(), 1);
        assert_eq!(count_f_roots(-150.0, 4000).unwrap().len(), 3);
        let c0 = critical_c0();
        assert_eq!(count_f_roots(c0 + 0.5, 20000).unwrap().len(), 1);
        assert_eq!(count_f_roots(c0 - 0.5, 20000).unwrap().len(), 3);
        assert!(count_f_roots(-150.0, 10).is_err());
    }

    #[test]
    fn diagonal_root_is_an_f_root() {
        for c in [-150.0, -50.0, 3.0] {
            let x = symmetric_diagonal_root(c);
            let roots = count_f_roots(c, 4000).unwrap();
            assert!(roots.iter().any(|r| (r - x).abs() < 1e-9), "c = {c}: {roots:?} vs {x}");
        }
    }

    #[test]
    fn lambert_examples() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-14);
        let oracle = bisect(|w| w * w.exp() - 1.0 / E, 0.0, 1.0);
        assert!((lambert_w0(1.0 / E).unwrap() - oracle).abs() < 1e-14);
        assert!((oracle - 0.278_464_542_8).abs() < 1e-10);
        assert!(lambert_w0(-0.5).is_err());
        assert_eq!(lambert_w0(-1.0 / E).unwrap(), -1.0);
    }

    #[test]
    fn lambert_residuals_across_range() {
        let mut y = -1.0 / E + 1e-12;
        while y < 1e6 {
            let w = lambert_w0(y).unwrap();
            assert!(w >= -1.0);
            assert!(
                (w * w.exp() - y).abs() < 1e-14 * y.abs().max(1.0) * 4.0,
                "y = {y}, w = {w}, r = {}",
                w * w.exp() - y
            );
            y = if y < 0.0 { y * 0.7 + 1e-3 } else { y * 1.9 + 1e-3 };
        }
    }

    #[test]
    fn critical_value() {
        let c0 = critical_c0();
        assert!((c0 + 123.7215).abs() < 5e-5, "{c0}");
        let x0 = critical_x0();
        assert!((x0 * (sigmoid(x0) - 1.0) - 1.0).abs() < 1e-12);
    }
}
