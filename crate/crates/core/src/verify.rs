//! Executable acceptance checks.
//!
//! Each criterion is a self-contained experiment with fixed tolerances that
//! returns a [`CriterionOutcome`]; suites group them for the CLI and for the
//! acceptance test target.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bifurcation::{linear_grid, refine_transition, sweep, EdgeTarget, SweepResult, SweepSpec};
use crate::equilibria::{
    count_f_roots, critical_c0, critical_x0, equilibrium_count_from_f_roots, find_equilibria,
    symmetric_diagonal_root, NewtonConfig,
};
use crate::integrate::{check_forward_invariance, integrate, lyapunov_monitor, sample_in_box, IntegrationConfig, TerminalReason};
use crate::model::{
    sigmoid, with_sigmoid_gain, BidirectionalMotif, Dynamics, NetworkSpec, Reduced3, ReducedState3,
    SingleSynapseMotif, SymmetryTag,
};
use crate::netgen::{build, TopologyConfig};
use crate::stability::{
    contraction_certificate, eigen_dense, reduced3_eigenvalues_closed_form, single_synapse_stability,
    CertificateVerdict, Stability,
};
use crate::Execution;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum VerifyError {
    #[error("unknown suite '{0}' (expected one of: {list})", list = Suite::NAMES.join(", "))]
    UnknownSuite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Critical,
    Pitchfork,
    StabilityExchange,
    ClosedForm,
    Theorem1,
    Lemma2,
    GlobalStability,
    FRoots,
    Imperfect,
    NetworkTrend,
    Hygiene,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 12] = [
        "critical",
        "pitchfork",
        "stability-exchange",
        "closed-form",
        "theorem1",
        "lemma2",
        "global-stability",
        "f-roots",
        "imperfect",
        "network-trend",
        "hygiene",
        "all",
    ];

    const ORDER: [Suite; 11] = [
        Suite::Critical,
        Suite::Pitchfork,
        Suite::StabilityExchange,
        Suite::ClosedForm,
        Suite::Theorem1,
        Suite::Lemma2,
        Suite::GlobalStability,
        Suite::FRoots,
        Suite::Imperfect,
        Suite::NetworkTrend,
        Suite::Hygiene,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            s => Self::NAMES[Self::ORDER.iter().position(|&o| o == s).expect("listed")],
        }
    }

    /// Criterion numbers covered by this suite.
    pub fn criteria(self) -> Vec<u8> {
        match self {
            Suite::All => (1..=11).collect(),
            s => vec![Self::ORDER.iter().position(|&o| o == s).expect("listed") as u8 + 1],
        }
    }
}

impl FromStr for Suite {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match Self::NAMES.iter().position(|&n| n == s) {
            Some(11) => Ok(Suite::All),
            Some(k) => Ok(Self::ORDER[k]),
            None => Err(VerifyError::UnknownSuite(s.to_string())),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyOptions {
    pub seed: u64,
    pub execution: Execution,
    /// Stop after the first failing criterion.
    pub fail_fast: bool,
    /// Gain applied inside the sigmoid for the harness self-test; 1 is the
    /// real model. Any other value forces sequential execution.
    pub sigmoid_gain: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            execution: Execution::default(),
            fail_fast: false,
            sigmoid_gain: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    /// One-line human summary.
    pub detail: String,
    pub metrics: Value,
    pub elapsed_s: f64,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} criterion {:>2} [{}] {} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed_s
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub passed: bool,
    pub failed: Vec<String>,
    pub criteria: Vec<CriterionOutcome>,
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> VerifyReport {
    let mut criteria = Vec::new();
    for id in suite.criteria() {
        let outcome = run_criterion(id, opts);
        let failed = !outcome.passed;
        criteria.push(outcome);
        if failed && opts.fail_fast {
            break;
        }
    }
    let failed: Vec<String> = criteria.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    VerifyReport {
        suite,
        passed: failed.is_empty(),
        failed,
        criteria,
    }
}

/// Runs criterion `id` (1 to 11).
///
/// # Panics
/// On an id outside 1..=11.
pub fn run_criterion(id: u8, opts: &VerifyOptions) -> CriterionOutcome {
    let mut opts = opts.clone();
    if opts.sigmoid_gain != 1.0 {
        opts.execution = Execution::Sequential;
    }
    let name = Suite::ORDER
        .get(usize::from(id).wrapping_sub(1))
        .unwrap_or_else(|| panic!("no criterion {id}"))
        .name();
    let start = Instant::now();
    let check = with_sigmoid_gain(opts.sigmoid_gain, || match id {
        1 => critical_value(),
        2 => pitchfork_signature(&opts),
        3 => stability_exchange(&opts),
        4 => closed_form_eigenvalues(),
        5 => single_synapse_draws(&opts),
        6 => certified_motifs(&opts),
        7 => global_stability(&opts),
        8 => f_root_structure(&opts),
        9 => imperfect_pitchfork(&opts),
        10 => network_trend(&opts),
        _ => numerical_hygiene(&opts),
    });
    let elapsed_s = start.elapsed().as_secs_f64();
    let check = check.unwrap_or_else(|e| Check::fail(format!("error: {e}"), json!({ "error": e })));
    let budget = match id {
        1 => Some(1.0),
        2 => Some(60.0),
        5 => Some(10.0),
        10 => Some(600.0),
        _ => None,
    };
    let over_budget = budget.is_some_and(|b| elapsed_s >= b);
    CriterionOutcome {
        id,
        name: name.to_string(),
        passed: check.passed && !over_budget,
        detail: if over_budget {
            format!("{}; exceeded the {}s runtime budget", check.detail, budget.unwrap_or_default())
        } else {
            check.detail
        },
        metrics: check.metrics,
        elapsed_s,
    }
}

struct Check {
    passed: bool,
    detail: String,
    metrics: Value,
}

impl Check {
    fn new(passed: bool, detail: String, metrics: Value) -> Self {
        Check { passed, detail, metrics }
    }

    fn fail(detail: String, metrics: Value) -> Self {
        Check::new(false, detail, metrics)
    }
}

type CheckResult = Result<Check, String>;

fn err<E: fmt::Display>(e: E) -> String {
    e.to_string()
}

fn newton(opts: &VerifyOptions) -> NewtonConfig {
    NewtonConfig {
        execution: opts.execution,
        ..NewtonConfig::default().with_seed(opts.seed)
    }
}

/// The diagonal equilibrium `(x̂, x̂, cφ(x̂)²)` of the reduced system.
fn diagonal_point(c: f64) -> [f64; 3] {
    let x = symmetric_diagonal_root(c);
    let p = sigmoid(x);
    [x, x, c * p * p]
}

fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

const C0_REFERENCE: f64 = -123.7215;

fn critical_value() -> CheckResult {
    let c0 = critical_c0();
    let error = (c0 - C0_REFERENCE).abs();
    Ok(Check::new(
        error < 5e-4,
        format!("c0 = {c0:.6}, |error| = {error:.2e} (< 5e-4)"),
        json!({ "c0": c0, "x0": critical_x0(), "error": error }),
    ))
}

fn pitchfork_signature(opts: &VerifyOptions) -> CheckResult {
    let c0 = critical_c0();
    let spec = SweepSpec {
        newton: newton(opts),
        seed: opts.seed,
        ..SweepSpec::reduced(linear_grid(-150.0, -3.0, 148))
    };
    let result = sweep(&spec).map_err(err)?;
    let bad: Vec<(f64, usize)> = result
        .points
        .iter()
        .filter(|p| (p.c < c0 - 0.5 && p.count != 3) || (p.c > c0 + 0.5 && p.count != 1))
        .map(|p| (p.c, p.count))
        .collect();
    let index = result
        .transitions
        .iter()
        .position(|t| t.count_before == 3 && t.count_after == 1);
    let refined = match index {
        Some(k) => Some(refine_transition(&spec, &result, k, 1e-6).map_err(err)?),
        None => None,
    };
    let located = refined.is_some_and(|c| (c - c0).abs() < 1e-3);
    Ok(Check::new(
        bad.is_empty() && located,
        format!(
            "{} off-signature grid points, refined transition {} (c0 = {c0:.6}, tol 1e-3)",
            bad.len(),
            refined.map_or("missing".to_string(), |c| format!("{c:.6}"))
        ),
        json!({ "mismatches": bad, "refined": refined, "c0": c0, "transitions": result.transitions }),
    ))
}

fn stability_exchange(opts: &VerifyOptions) -> CheckResult {
    let cfg = newton(opts);
    let strong = find_equilibria(&Reduced3 { c: -150.0 }, &cfg).map_err(err)?;
    let weak = find_equilibria(&Reduced3 { c: -3.0 }, &cfg).map_err(err)?;
    // Records are sorted lexicographically, hence by x1.
    let pattern = strong.stabilities();
    let on_plane: Vec<bool> = strong
        .equilibria
        .iter()
        .map(|e| e.symmetry_tag == Some(SymmetryTag::OnPlaneL))
        .collect();
    let strong_ok = pattern == [Stability::Stable, Stability::Unstable, Stability::Stable]
        && on_plane == [false, true, false];
    let weak_ok = weak.stabilities() == [Stability::Stable];
    let leading: Vec<f64> = strong.equilibria.iter().chain(&weak.equilibria).map(|e| e.leading_real).collect();
    Ok(Check::new(
        strong_ok && weak_ok,
        format!(
            "c=-150: {:?} (on L: {:?}); c=-3: {:?}",
            pattern.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
            on_plane,
            weak.stabilities().iter().map(|s| s.as_str()).collect::<Vec<_>>()
        ),
        json!({ "strong": strong.equilibria, "weak": weak.equilibria, "leading_real": leading }),
    ))
}

/// Largest distance in an optimal-by-greedy matching of two spectra.
fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for z in a {
        let Some((k, d)) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, w)| (k, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
        else {
            return f64::INFINITY;
        };
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

fn closed_form_eigenvalues() -> CheckResult {
    let mut worst: f64 = 0.0;
    let mut worst_c = f64::NAN;
    for c in linear_grid(-200.0, 50.0, 50) {
        let jac = Reduced3 { c }.jacobian(&diagonal_point(c));
        let dense = eigen_dense(&jac).map_err(err)?;
        let d = spectrum_distance(&reduced3_eigenvalues_closed_form(c), &dense);
        if !(d <= worst) {
            worst = d;
            worst_c = c;
        }
    }
    Ok(Check::new(
        worst < 1e-9,
        format!("max eigenvalue mismatch {worst:.2e} at c = {worst_c:.3} (< 1e-9, 50 values)"),
        json!({ "max_mismatch": worst, "at_c": worst_c }),
    ))
}

fn single_synapse_draws(opts: &VerifyOptions) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut failures = Vec::new();
    let mut max_leading = f64::NEG_INFINITY;
    for _ in 0..500 {
        let mut c1 = 0.0;
        while c1 == 0.0 {
            c1 = rng.gen_range(-100.0..100.0);
        }
        let motif = SingleSynapseMotif {
            a1: rng.gen_range(0.1..10.0),
            a2: rng.gen_range(0.1..10.0),
            b1: rng.gen_range(0.1..10.0),
            c1,
        };
        let report = single_synapse_stability(&motif).map_err(err)?;
        let jac = motif.to_spec().jacobian(&report.equilibrium);
        let det = jac.determinant();
        max_leading = max_leading.max(report.report.leading_real);
        if !(det < 0.0 && report.report.leading_real < 0.0) {
            failures.push(json!({ "motif": motif, "det": det, "leading_real": report.report.leading_real }));
        }
    }
    Ok(Check::new(
        failures.is_empty(),
        format!("{} of 500 draws violate det < 0 and max Re λ < 0 (worst max Re λ {max_leading:.3e})", failures.len()),
        json!({ "failures": failures, "max_leading_real": max_leading }),
    ))
}

fn certified_motifs(opts: &VerifyOptions) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let cfg = NewtonConfig {
        execution: opts.execution,
        ..NewtonConfig::default().with_starts(512).with_seed(opts.seed)
    };
    let mut tried = 0;
    let mut counts = Vec::new();
    let mut failures = Vec::new();
    while counts.len() < 50 && tried < 100_000 {
        tried += 1;
        let sign = |r: &mut ChaCha8Rng| if r.gen::<bool>() { 1.0 } else { -1.0 };
        let motif = BidirectionalMotif {
            a1: rng.gen_range(1.0..4.0),
            a2: rng.gen_range(1.0..4.0),
            b1: rng.gen_range(0.5..3.0),
            b2: rng.gen_range(0.5..3.0),
            c1: sign(&mut rng) * rng.gen_range(0.05..3.0),
            c2: sign(&mut rng) * rng.gen_range(0.05..3.0),
        };
        if contraction_certificate(&motif).verdict != CertificateVerdict::UniqueGuaranteed {
            continue;
        }
        let count = find_equilibria(&motif.to_spec(), &cfg).map_err(err)?.count();
        if count != 1 {
            failures.push(json!({ "motif": motif, "count": count }));
        }
        counts.push(count);
    }
    Ok(Check::new(
        counts.len() == 50 && failures.is_empty(),
        format!(
            "{} certified motifs ({} draws), {} with more than one equilibrium",
            counts.len(),
            tried,
            failures.len()
        ),
        json!({ "certified": counts.len(), "draws": tried, "failures": failures }),
    ))
}

fn global_stability(opts: &VerifyOptions) -> CheckResult {
    let c = -15.0;
    let sys = Reduced3 { c };
    let target = diagonal_point(c);
    let cfg = IntegrationConfig::default();
    let starts = sample_in_box(&sys.coordinate_bounds(), 1.0, 100, opts.seed);
    let mut worst_distance: f64 = 0.0;
    let mut worst_increase: f64 = 0.0;
    let mut failures = 0;
    for s0 in &starts {
        let tr = integrate(&sys, s0, &cfg).map_err(err)?;
        let d = dist_inf(&tr.terminal_state, &target);
        let series = lyapunov_monitor(c, ReducedState3::from_slice(s0), &cfg).map_err(err)?;
        worst_distance = worst_distance.max(d);
        worst_increase = worst_increase.max(series.max_increase);
        let converged = tr.terminal_reason == TerminalReason::Converged && tr.terminal_time <= cfg.t_max && d < 1e-6;
        if !converged || !series.non_increasing {
            failures += 1;
        }
    }
    Ok(Check::new(
        failures == 0,
        format!(
            "{failures} of 100 starts fail; max distance {worst_distance:.2e} (< 1e-6), max V rise {worst_increase:.2e} (<= 1e-10)"
        ),
        json!({ "failures": failures, "max_distance": worst_distance, "max_v_increase": worst_increase, "target": target }),
    ))
}

fn f_root_structure(opts: &VerifyOptions) -> CheckResult {
    const GRID: usize = 4000;
    let weak = count_f_roots(-100.0, GRID).map_err(err)?.len();
    let strong = count_f_roots(-150.0, GRID).map_err(err)?.len();
    let cfg = newton(opts);
    let mut mismatches = Vec::new();
    for c in linear_grid(-195.0, -5.0, 20) {
        let from_roots = equilibrium_count_from_f_roots(c, GRID).map_err(err)?;
        let from_newton = find_equilibria(&Reduced3 { c }, &cfg).map_err(err)?.count();
        if from_roots != from_newton {
            mismatches.push(json!({ "c": c, "f_roots": from_roots, "newton": from_newton }));
        }
    }
    Ok(Check::new(
        weak == 1 && strong == 3 && mismatches.is_empty(),
        format!("roots at c=-100: {weak}, at c=-150: {strong}; {} count mismatches over 20 c values", mismatches.len()),
        json!({ "roots_c_minus_100": weak, "roots_c_minus_150": strong, "mismatches": mismatches }),
    ))
}

/// The asymmetric motif of the imperfect pitchfork with both learning rates
/// set to `c`.
pub fn imperfect_preset(c: f64) -> BidirectionalMotif {
    BidirectionalMotif {
        a1: 0.2,
        a2: 0.4,
        b1: 0.25,
        b2: 0.5,
        c1: c,
        c2: c,
    }
}

fn imperfect_pitchfork(opts: &VerifyOptions) -> CheckResult {
    let grid = linear_grid(-200.0, -0.5, 400);
    let mut windows = Vec::new();
    let mut histograms = Vec::new();
    for k in 0..5 {
        let seed = opts.seed.wrapping_add(k);
        let spec = SweepSpec {
            newton: NewtonConfig { execution: opts.execution, ..NewtonConfig::default() },
            seed,
            ..SweepSpec::network(imperfect_preset(-1.0).to_spec(), EdgeTarget::All, grid.clone())
        };
        let result = sweep(&spec).map_err(err)?;
        let window: Vec<f64> = result.points.iter().filter(|p| p.count == 2).map(|p| p.c).collect();
        let mut histogram = std::collections::BTreeMap::new();
        for p in &result.points {
            *histogram.entry(p.count).or_insert(0usize) += 1;
        }
        windows.push(window);
        histograms.push(histogram);
    }
    let present = windows.iter().all(|w| !w.is_empty());
    let stable = windows.windows(2).all(|p| p[0] == p[1]);
    Ok(Check::new(
        present && stable,
        format!(
            "grid points with exactly 2 equilibria per seed: {:?}; count histogram (seed 0): {:?}",
            windows.iter().map(Vec::len).collect::<Vec<_>>(),
            histograms[0]
        ),
        json!({ "windows": windows, "count_histograms": histograms }),
    ))
}

/// Interconnect learning rates for the network presets.
pub fn network_trend_grid() -> Vec<f64> {
    linear_grid(-2000.0, -1.0, 80)
}

fn preset_sweep(cfg: &TopologyConfig, opts: &VerifyOptions) -> Result<SweepResult, String> {
    let generated = build(cfg).map_err(err)?;
    let spec = SweepSpec {
        newton: NewtonConfig { execution: opts.execution, ..NewtonConfig::default() },
        seed: opts.seed,
        ..SweepSpec::network(generated.spec, EdgeTarget::Indices(generated.swept_edges), network_trend_grid())
    };
    sweep(&spec).map_err(err)
}

fn network_trend(opts: &VerifyOptions) -> CheckResult {
    let mut rows = Vec::new();
    let mut passed = true;
    let mut summary = Vec::new();
    for (label, make) in [
        ("3+3", (|s| TopologyConfig::interconnected(3, s)) as fn(u64) -> TopologyConfig),
        ("5+5", |s| TopologyConfig::interconnected(5, s)),
        ("random12", |s| TopologyConfig::random_mixed(12, 0.25, 0.5, s)),
    ] {
        let mut ok_seeds = 0;
        for k in 0..5 {
            let seed = opts.seed.wrapping_add(k);
            let result = preset_sweep(&make(seed), opts)?;
            let most_negative = result.points.first().map_or(0, |p| p.count);
            let least_negative = result.points.last().map_or(0, |p| p.count);
            let ok = if label == "3+3" {
                least_negative == 1
                    && most_negative == 3
                    && result.transitions.iter().any(|t| t.count_before == 3 && t.count_after == 1)
            } else {
                most_negative > least_negative
            };
            ok_seeds += usize::from(ok);
            passed &= ok;
            rows.push(json!({
                "preset": label,
                "seed": seed,
                "count_most_negative": most_negative,
                "count_least_negative": least_negative,
                "transitions": result.transitions,
                "passed": ok,
            }));
        }
        summary.push(format!("{label} {ok_seeds}/5"));
    }
    Ok(Check::new(
        passed,
        format!("seeds showing the trend: {}", summary.join(", ")),
        json!({ "c_range": [-2000.0, -1.0], "grid_points": 80, "runs": rows }),
    ))
}

/// Central-difference Jacobian of `sys` at `state`.
fn finite_difference_jacobian<D: Dynamics + ?Sized>(sys: &D, state: &[f64]) -> DMatrix<f64> {
    let n = sys.dim();
    let mut jac = DMatrix::zeros(n, n);
    let mut probe = state.to_vec();
    for k in 0..n {
        let h = 1e-6 * state[k].abs().max(1.0);
        probe[k] = state[k] + h;
        let plus = sys.field_vec(&probe);
        probe[k] = state[k] - h;
        let minus = sys.field_vec(&probe);
        probe[k] = state[k];
        for i in 0..n {
            jac[(i, k)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    jac
}

fn jacobian_error<D: Dynamics + ?Sized>(sys: &D, state: &[f64]) -> f64 {
    let analytic = sys.jacobian(state);
    let numeric = finite_difference_jacobian(sys, state);
    (&analytic - &numeric).amax() / analytic.amax().max(1e-300)
}

fn numerical_hygiene(opts: &VerifyOptions) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let network: NetworkSpec = build(&TopologyConfig::random_mixed(12, 0.25, 0.5, opts.seed))
        .map(|g| g.spec)
        .unwrap_or_else(|_| BidirectionalMotif::uniform(1.0, 1.0, -3.0).to_spec());
    let mut worst_jacobian: f64 = 0.0;
    for k in 0..100 {
        let error = if k % 2 == 0 {
            let sys = Reduced3 { c: rng.gen_range(-200.0..50.0) };
            let s = sample_in_box(&sys.coordinate_bounds(), 1.0, 1, rng.gen()).remove(0);
            jacobian_error(&sys, &s)
        } else {
            let s = sample_in_box(&network.coordinate_bounds(), 1.0, 1, rng.gen()).remove(0);
            jacobian_error(&network, &s)
        };
        worst_jacobian = worst_jacobian.max(error);
    }

    let sys = Reduced3 { c: -3.0 };
    let s0 = [1.5, -2.0, 0.7];
    let run = |dt| integrate(&sys, &s0, &IntegrationConfig::rk4(dt, 2.0)).map(|t| t.terminal_state);
    let reference = run(1e-4).map_err(err)?;
    let ratio = dist_inf(&run(0.1).map_err(err)?, &reference) / dist_inf(&run(0.05).map_err(err)?, &reference);

    let invariance = check_forward_invariance(
        &Reduced3 { c: -150.0 },
        200,
        opts.seed,
        &IntegrationConfig { t_max: 50.0, ..Default::default() },
        opts.execution,
    )
    .map_err(err)?;

    let jacobian_ok = worst_jacobian <= 1e-5;
    let order_ok = (12.0..=20.0).contains(&ratio);
    Ok(Check::new(
        jacobian_ok && order_ok && invariance.violations == 0,
        format!(
            "Jacobian rel. error {worst_jacobian:.2e} (<= 1e-5); RK4 ratio {ratio:.2} (in [12, 20]); {} invariance violations in {} starts",
            invariance.violations, invariance.samples
        ),
        json!({ "max_jacobian_error": worst_jacobian, "rk4_ratio": ratio, "invariance": invariance }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for name in Suite::NAMES {
            assert_eq!(name.parse::<Suite>().unwrap().name(), name);
        }
        assert_eq!("all".parse::<Suite>().unwrap().criteria().len(), 11);
        assert_eq!("hygiene".parse::<Suite>().unwrap().criteria(), vec![11]);
        assert!(matches!("bogus".parse::<Suite>(), Err(VerifyError::UnknownSuite(_))));
    }

    #[test]
    fn critical_suite_passes() {
        let report = run_suite(Suite::Critical, &VerifyOptions::default());
        assert!(report.passed, "{:?}", report.criteria);
    }

    #[test]
    fn corrupted_sigmoid_fails_by_name() {
        let opts = VerifyOptions {
            sigmoid_gain: 1.1,
            fail_fast: true,
            ..Default::default()
        };
        let report = run_suite(Suite::All, &opts);
        assert!(!report.passed);
        assert_eq!(report.failed, vec!["pitchfork".to_string()], "{:?}", report.criteria);
        assert!(!run_criterion(11, &opts).passed);
        assert!(run_criterion(11, &VerifyOptions::default()).passed);
    }

    #[test]
    fn spectrum_distance_matches_up_to_order() {
        let a = [Complex64::new(1.0, 0.0), Complex64::new(-2.0, 1.0)];
        let b = [Complex64::new(-2.0, 1.0), Complex64::new(1.0, 1e-12)];
        assert!(spectrum_distance(&a, &b) < 1e-11);
    }

    #[test]
    fn finite_differences_agree_on_motif() {
        let spec = BidirectionalMotif::uniform(1.0, 1.0, -3.0).to_spec();
        assert!(jacobian_error(&spec, &[0.3, -0.7, 0.2, 1.1]) < 1e-7);
    }
}
