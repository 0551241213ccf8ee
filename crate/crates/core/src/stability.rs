//! Eigenvalues of equilibrium Jacobians, stability classes, and the
//! closed-form spectra and certificates of the minimal motifs.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::equilibria::{bracketed_root, invariant_box, symmetric_diagonal_root};
use crate::model::{sigmoid, BidirectionalMotif, Dynamics, SingleSynapseMotif};

/// Real parts within this band of zero are reported as marginal.
pub const MARGINAL_BAND: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum StabilityError {
    #[error("eigenvalue iteration did not converge for a {dim}x{dim} matrix (max |entry| = {max_abs:e})")]
    NoConvergence { dim: usize, max_abs: f64 },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("no sign change of the transverse eigenvalue on [{c_lo}, {c_hi}]")]
    NoSignChange { c_lo: f64, c_hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    pub fn from_leading_real(leading_real: f64) -> Self {
        if leading_real > MARGINAL_BAND {
            Stability::Unstable
        } else if leading_real < -MARGINAL_BAND {
            Stability::Stable
        } else {
            Stability::Marginal
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        }
    }
}

impl std::str::FromStr for Stability {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stable" => Ok(Stability::Stable),
            "unstable" => Ok(Stability::Unstable),
            "marginal" => Ok(Stability::Marginal),
            other => Err(format!("unknown stability class '{other}'")),
        }
    }
}

/// Serializes complex lists as `[[re, im], ...]`.
pub(crate) mod complex_pairs {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    #[serde(with = "complex_pairs")]
    pub eigenvalues: Vec<Complex64>,
    pub classification: Stability,
    pub leading_real: f64,
    pub determinant: f64,
}

/// All eigenvalues of a dense real matrix, sorted by decreasing real part
/// (then decreasing imaginary part).
///
/// Balancing, then Hessenberg reduction and shifted QR iteration to real
/// Schur form.
pub fn eigen_dense(m: &DMatrix<f64>) -> Result<Vec<Complex64>, StabilityError> {
    assert!(m.is_square(), "eigen_dense needs a square matrix");
    let dim = m.nrows();
    if dim == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(StabilityError::NonFinite);
    }
    // Decay terms put a near-scalar block on the diagonal while saturated
    // sigmoid slopes make the rest tiny. Removing the mean diagonal first and
    // balancing keeps the small splittings from drowning in rounding of the
    // diagonal.
    let shift = m.trace() / dim as f64;
    let mut balanced = m.clone();
    for k in 0..dim {
        balanced[(k, k)] -= shift;
    }
    nalgebra::linalg::balancing::balance_parlett_reinsch(&mut balanced);
    let schur = Schur::try_new(balanced, f64::EPSILON, 1000 * dim.max(10)).ok_or_else(|| {
        StabilityError::NoConvergence {
            dim,
            max_abs: m.amax(),
        }
    })?;
    let mut eig: Vec<Complex64> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z + shift)
        .collect();
    // Complex pairs come from 2x2 blocks; make the conjugate symmetry exact.
    for k in 0..eig.len() {
        if eig[k].im > 0.0 {
            if let Some(partner) = (0..eig.len())
                .find(|&p| p != k && eig[p].im < 0.0 && eig[p].re == eig[k].re)
            {
                eig[partner].im = -eig[k].im;
            }
        }
    }
    eig.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(eig)
}

pub fn analyze(jacobian: &DMatrix<f64>) -> Result<StabilityReport, StabilityError> {
    let eigenvalues = eigen_dense(jacobian)?;
    let leading_real = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(StabilityReport {
        classification: Stability::from_leading_real(leading_real),
        leading_real,
        determinant: jacobian.clone().lu().determinant(),
        eigenvalues,
    })
}

/// Stability report of `system` at `state`.
pub fn analyze_at<D: Dynamics + ?Sized>(
    system: &D,
    state: &[f64],
) -> Result<StabilityReport, StabilityError> {
    analyze(&system.jacobian(state))
}

/// `k = cφ̂³(1 − φ̂)` at the diagonal equilibrium; all three eigenvalues are
/// functions of it.
fn transverse_gain(c: f64) -> f64 {
    let x = symmetric_diagonal_root(c);
    let p = sigmoid(x);
    // 1 − φ̂ = φ(−x̂) keeps precision when φ̂ is close to one.
    c * p * p * p * sigmoid(-x)
}

/// Transverse eigenvalue `λ₁ = cφ̂⁴ − cφ̂³ − 1` of the diagonal equilibrium.
pub fn reduced3_lambda1(c: f64) -> f64 {
    -1.0 - transverse_gain(c)
}

/// Closed-form spectrum `(λ₁, λ₂, λ₃)` of the three-dimensional symmetric
/// system at its diagonal equilibrium.
///
/// `λ_{2,3} = (k − 2)/2 ± √(k(k + 8))/2` with `k = cφ̂³ − cφ̂⁴`; the pair is
/// complex conjugate when the radicand is negative.
pub fn reduced3_eigenvalues_closed_form(c: f64) -> [Complex64; 3] {
    let k = transverse_gain(c);
    let lambda1 = Complex64::new(-1.0 - k, 0.0);
    let mean = (k - 2.0) / 2.0;
    let radicand = k * (k + 8.0);
    if radicand >= 0.0 {
        let half = radicand.sqrt() / 2.0;
        [lambda1, Complex64::new(mean + half, 0.0), Complex64::new(mean - half, 0.0)]
    } else {
        let half = (-radicand).sqrt() / 2.0;
        [lambda1, Complex64::new(mean, half), Complex64::new(mean, -half)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleSynapseReport {
    /// `x̃₂`, the root of `4 a₂ b₁ x = c₁ φ(x)`.
    pub x2: f64,
    /// Equilibrium `(0, x̃₂, 2 a₂ x̃₂)`.
    pub equilibrium: [f64; 3],
    pub report: StabilityReport,
    /// `−a₁a₂b₁[1 − x̃₂(1 − φ(x̃₂))]`.
    pub determinant_closed_form: f64,
}

/// Equilibrium and spectrum of the single-synapse motif.
pub fn single_synapse_stability(
    motif: &SingleSynapseMotif,
) -> Result<SingleSynapseReport, StabilityError> {
    let SingleSynapseMotif { a1, a2, b1, c1 } = *motif;
    let scale = 4.0 * a2 * b1;
    let g = |x: f64| {
        let p = sigmoid(x);
        (scale * x - c1 * p, scale - c1 * p * sigmoid(-x))
    };
    let bound = c1 / scale;
    let x2 = bracketed_root(g, bound.min(0.0), bound.max(0.0), 1e-14 * c1.abs().max(1.0));
    let equilibrium = [0.0, x2, 2.0 * a2 * x2];
    let report = analyze_at(&motif.to_spec(), &equilibrium)?;
    let determinant_closed_form = -a1 * a2 * b1 * (1.0 - x2 * sigmoid(-x2));
    Ok(SingleSynapseReport {
        x2,
        equilibrium,
        report,
        determinant_closed_form,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateVerdict {
    UniqueGuaranteed,
    Inconclusive,
}

/// The 1-norm contraction test for the fixed-point map of the bidirectional motif.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionCertificate {
    pub verdict: CertificateVerdict,
    pub w_max: f64,
    /// `max{w_max/a₁, w_max/a₂} + |c₁|/b₁ + |c₂|/b₂`; must be below 4.
    pub activation_columns: f64,
    /// `max{1/a₁, 1/a₂}`; must be below 1.
    pub weight_columns: f64,
    /// Upper bound on `sup_χ ‖DF‖₁`.
    pub norm_bound: f64,
}

pub fn contraction_certificate(motif: &BidirectionalMotif) -> ContractionCertificate {
    let w_max = invariant_box(&motif.to_spec()).w_bound;
    let activation_columns = (w_max / motif.a1).max(w_max / motif.a2)
        + motif.c1.abs() / motif.b1
        + motif.c2.abs() / motif.b2;
    let weight_columns = (1.0 / motif.a1).max(1.0 / motif.a2);
    let verdict = if motif.a1 > 1.0 && motif.a2 > 1.0 && activation_columns < 4.0 {
        CertificateVerdict::UniqueGuaranteed
    } else {
        CertificateVerdict::Inconclusive
    };
    ContractionCertificate {
        verdict,
        w_max,
        activation_columns,
        weight_columns,
        norm_bound: (activation_columns / 4.0).max(weight_columns),
    }
}

/// Locates the sign change of `λ₁(c)` on `[c_lo, c_hi]` by a grid scan and
/// bisection.
pub fn stability_transition_scan(c_lo: f64, c_hi: f64, n: usize) -> Result<f64, StabilityError> {
    let n = n.max(2);
    let grid: Vec<f64> = (0..n)
        .map(|k| c_lo + (c_hi - c_lo) * k as f64 / (n - 1) as f64)
        .collect();
    let signs: Vec<bool> = grid.iter().map(|&c| reduced3_lambda1(c) > 0.0).collect();
    let k = (0..n - 1)
        .find(|&k| signs[k] != signs[k + 1])
        .ok_or(StabilityError::NoSignChange { c_lo, c_hi })?;
    let (mut lo, mut hi) = (grid[k], grid[k + 1]);
    let lo_positive = signs[k];
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (reduced3_lambda1(mid) > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::critical_c0;
    use crate::model::Reduced3;
    use rand::{Rng, SeedableRng};

    fn closed_form_matrix(c: f64) -> DMatrix<f64> {
        let x = symmetric_diagonal_root(c);
        let p = sigmoid(x);
        let off = c * p.powi(3) * sigmoid(-x);
        let low = c * p * p * sigmoid(-x);
        DMatrix::from_row_slice(3, 3, &[-1.0, off, p, off, -1.0, p, low, low, -1.0])
    }

    fn assert_spectra_match(a: &[Complex64], b: &[Complex64], tol: f64) {
        assert_eq!(a.len(), b.len());
        let mut used = vec![false; b.len()];
        for z in a {
            let (k, d) = b
                .iter()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .map(|(k, w)| (k, (z - w).norm()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            assert!(d < tol, "eigenvalue {z} unmatched (closest distance {d})");
            used[k] = true;
        }
    }

    #[test]
    fn diagonal_matrix() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -2.0, -3.0]));
        let eig = eigen_dense(&m).unwrap();
        assert_eq!(eig.iter().map(|z| z.re).collect::<Vec<_>>(), vec![-1.0, -2.0, -3.0]);
        assert!(eig.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn rotation_block_gives_conjugate_pair() {
        let m = DMatrix::from_row_slice(2, 2, &[-0.5, 2.0, -2.0, -0.5]);
        let eig = eigen_dense(&m).unwrap();
        assert!((eig[0] - Complex64::new(-0.5, 2.0)).norm() < 1e-12);
        assert_eq!(eig[0].im, -eig[1].im);
        assert_eq!(eig[0].re, eig[1].re);
    }

    #[test]
    fn random_matrix_trace_and_singularity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(50);
        let n = 50;
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let eig = eigen_dense(&m).unwrap();
        assert_eq!(eig.len(), n);
        let sum: Complex64 = eig.iter().sum();
        assert!((sum.re - m.trace()).abs() < 1e-8 * m.trace().abs().max(1.0));
        assert!(sum.im.abs() < 1e-8);
        // Each eigenvalue makes M − λI numerically singular: its smallest
        // singular value is at rounding level relative to ‖M‖.
        let mc = m.map(|v| Complex64::new(v, 0.0));
        let norm = m.norm();
        for lambda in &eig {
            let shifted = &mc - DMatrix::from_diagonal_element(n, n, *lambda);
            let sv = shifted.singular_values();
            let smallest = sv.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(smallest < 1e-10 * norm, "λ = {lambda}: σ_min = {smallest}");
        }
    }

    #[test]
    fn closed_form_matches_dense_at_c_one() {
        let closed = reduced3_eigenvalues_closed_form(1.0);
        let dense = eigen_dense(&closed_form_matrix(1.0)).unwrap();
        assert_spectra_match(&closed, &dense, 1e-9);
        assert!((closed[0].re + 1.0722).abs() < 1e-4, "{}", closed[0]);
        assert!(closed[1].re < 0.0 && closed[2].re < 0.0);
        // The general Jacobian path agrees with the hand-written matrix.
        let x = symmetric_diagonal_root(1.0);
        let p = sigmoid(x);
        let jac = Reduced3 { c: 1.0 }.jacobian(&[x, x, p * p]);
        assert_spectra_match(&closed, &eigen_dense(&jac).unwrap(), 1e-9);
    }

    #[test]
    fn closed_form_matches_dense_on_wide_range() {
        for k in 0..50 {
            let c = -200.0 + 250.0 * k as f64 / 49.0;
            let closed = reduced3_eigenvalues_closed_form(c);
            let dense = eigen_dense(&closed_form_matrix(c)).unwrap();
            assert_spectra_match(&closed, &dense, 1e-9);
        }
    }

    #[test]
    fn lambda1_vanishes_at_critical_value() {
        assert!(reduced3_lambda1(critical_c0()).abs() < 1e-10);
    }

    #[test]
    fn lambda1_for_large_hebbian_rate_approaches_minus_one() {
        // λ₁ = −1 − x̂(1 − φ̂) < −1 for every c > 0, tending to −1 as c grows.
        let l = reduced3_lambda1(1e6);
        assert!((l + 1.0).abs() < 1e-2 && l <= -1.0, "{l}");
        let mut prev = reduced3_lambda1(5.0);
        for c in [10.0, 15.0, 20.0] {
            let l = reduced3_lambda1(c);
            assert!(l < -1.0 && l > prev, "c = {c}: {l}");
            prev = l;
        }
    }

    #[test]
    fn lambda23_have_negative_real_part_everywhere() {
        let mut c = -200.0;
        while c <= 100.0 {
            let eig = reduced3_eigenvalues_closed_form(c);
            assert!(eig[1].re < 0.0 && eig[2].re < 0.0, "c = {c}");
            c += 0.25;
        }
    }

    #[test]
    fn transition_scan_finds_critical_value() {
        let c = stability_transition_scan(-130.0, -120.0, 64).unwrap();
        assert!((c - critical_c0()).abs() < 1e-6);
        assert!((c + 123.7215).abs() < 1e-4);
        assert!(matches!(
            stability_transition_scan(-100.0, -50.0, 16),
            Err(StabilityError::NoSignChange { .. })
        ));
    }

    #[test]
    fn lambda1_decreases_with_diagonal_coordinate() {
        // As c decreases x̂ decreases; λ₁ must increase, i.e. it is strictly
        // decreasing in x̂ for x̂ < 0.
        let mut prev = f64::NEG_INFINITY;
        for k in 0..200 {
            let c = -1.0 - k as f64 * 2.0;
            let l = reduced3_lambda1(c);
            assert!(l > prev, "c = {c}");
            prev = l;
        }
    }

    #[test]
    fn exchange_of_stability_around_critical_value() {
        let c0 = critical_c0();
        let above = reduced3_eigenvalues_closed_form(c0 + 1e-3);
        assert!(above.iter().all(|z| z.re < 0.0));
        let below = reduced3_eigenvalues_closed_form(c0 - 1e-3);
        let positive: Vec<_> = below.iter().filter(|z| z.re > 0.0).collect();
        assert_eq!(positive.len(), 1);
        assert_eq!(positive[0].im, 0.0);
    }

    #[test]
    fn single_synapse_unit_parameters() {
        let r = single_synapse_stability(&SingleSynapseMotif { a1: 1.0, a2: 1.0, b1: 1.0, c1: 1.0 })
            .unwrap();
        assert!((r.x2 - 0.1334).abs() < 1e-4);
        assert!(r.report.eigenvalues.iter().all(|z| z.re < 0.0));
        assert_eq!(r.report.classification, Stability::Stable);
        assert!((r.report.determinant - r.determinant_closed_form).abs() < 1e-12);
    }

    #[test]
    fn single_synapse_random_draws() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let m = SingleSynapseMotif {
                a1: rng.gen_range(0.1..10.0),
                a2: rng.gen_range(0.1..10.0),
                b1: rng.gen_range(0.1..10.0),
                c1: rng.gen_range(0.5..100.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
            };
            let r = single_synapse_stability(&m).unwrap();
            assert!(r.determinant_closed_form < 0.0);
            assert!((r.report.determinant - r.determinant_closed_form).abs() < 1e-9 * r.determinant_closed_form.abs().max(1.0));
            // λ = −a₁ belongs to the spectrum exactly.
            assert!(r.report.eigenvalues.iter().any(|z| (z.re + m.a1).abs() < 1e-10 * m.a1.max(1.0) && z.im == 0.0));
            assert!(r.report.leading_real < 0.0);
        }
    }

    #[test]
    fn certificate_examples() {
        let cert = contraction_certificate(&BidirectionalMotif::uniform(2.0, 1.0, 1.0));
        assert_eq!(cert.verdict, CertificateVerdict::UniqueGuaranteed);
        assert!((cert.activation_columns - 2.5).abs() < 1e-15);
        assert!(cert.norm_bound < 1.0);
        let cert = contraction_certificate(&BidirectionalMotif::uniform(1.0, 100.0, 0.01));
        assert_eq!(cert.verdict, CertificateVerdict::Inconclusive);
        let cert = contraction_certificate(&BidirectionalMotif { a1: 1.0, a2: 3.0, ..BidirectionalMotif::uniform(3.0, 1.0, 0.1) });
        assert_eq!(cert.verdict, CertificateVerdict::Inconclusive);
    }

    #[test]
    fn classification_band() {
        assert_eq!(Stability::from_leading_real(-1e-9), Stability::Marginal);
        assert_eq!(Stability::from_leading_real(2e-8), Stability::Unstable);
        assert_eq!(Stability::from_leading_real(-2e-8), Stability::Stable);
    }
}
