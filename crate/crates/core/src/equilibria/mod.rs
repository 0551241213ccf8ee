//! Equilibrium search: multi-start damped Newton over activations, plus the
//! semi-analytic machinery of the symmetric motif.

mod bounds;
mod sampling;
mod scalar;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::exec::{map_slice, Execution};
use crate::model::{EquilibriumSystem, SymmetryTag};
use crate::integrate::{integrate, IntegrationConfig, TerminalReason};
use crate::stability::{analyze_at, complex_pairs, Stability, StabilityError, StabilityReport};

pub use bounds::{fixed_point_map_F, invariant_box, InvariantBox};
pub use sampling::{generate_starts, StartStrategy};
pub(crate) use scalar::bracketed_root;
pub use scalar::{
    admissible_interval, beta_c, count_f_roots, critical_c0, critical_x0, f_xi, lambert_w0,
    symmetric_diagonal_root,
};

#[derive(Debug, thiserror::Error)]
pub enum EquilibriaError {
    #[error("beta undefined: c must be finite and non-zero")]
    BetaUndefined,
    #[error("xi = {xi} outside the admissible interval for c = {c} (alpha = {alpha})")]
    Domain { c: f64, xi: f64, alpha: f64 },
    #[error("grid of {0} points is too coarse (need at least 1000)")]
    GridTooCoarse(usize),
    #[error("lambert W0 undefined for y = {0} < -1/e")]
    LambertDomain(f64),
    #[error("equilibrium routines require zero constant inputs")]
    NonAutonomous,
    #[error("invalid Newton configuration: {0}")]
    InvalidConfig(String),
    #[error("no equilibrium found from {starts} starts ({singular} singular, {stalled} stalled); anomalous since one always exists")]
    NoneFound {
        starts: usize,
        singular: usize,
        stalled: usize,
    },
    #[error(transparent)]
    Stability(#[from] StabilityError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonConfig {
    /// Number of fresh starts; `None` means `max(64, 8 · state dimension)`.
    pub n_starts: Option<usize>,
    pub start_strategy: StartStrategy,
    pub max_iters: usize,
    /// Acceptance threshold on `‖field‖∞`, relative to `1 + box scale`.
    pub newton_tol: f64,
    /// Merge radius relative to `1 + box scale`.
    pub dedup_tol: f64,
    pub backtrack_factor: f64,
    /// Smallest step fraction tried before a start is declared stalled.
    pub min_step: f64,
    pub seed: u64,
    pub execution: Execution,
    /// Extra search rounds allowed when the index sum shows a missed equilibrium.
    pub max_rounds: usize,
    /// Failed starts per round that are retried after a short flow.
    pub flow_budget: usize,
    /// Length of that flow.
    pub flow_time: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            n_starts: None,
            start_strategy: StartStrategy::LowDiscrepancy,
            max_iters: 100,
            newton_tol: 1e-11,
            dedup_tol: 1e-6,
            backtrack_factor: 0.5,
            min_step: 0.5f64.powi(30),
            seed: 0,
            execution: Execution::default(),
            max_rounds: 3,
            flow_budget: 16,
            flow_time: 50.0,
        }
    }
}

impl NewtonConfig {
    pub fn with_starts(mut self, n: usize) -> Self {
        self.n_starts = Some(n);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn starts_for(&self, state_dim: usize) -> usize {
        self.n_starts.unwrap_or_else(|| (8 * state_dim).max(64))
    }

    pub fn validate(&self) -> Result<(), EquilibriaError> {
        let bad = |m: &str| Err(EquilibriaError::InvalidConfig(m.to_string()));
        if self.n_starts == Some(0) {
            return bad("n_starts must be > 0");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be > 0");
        }
        if !(self.newton_tol > 0.0) {
            return bad("newton_tol must be > 0");
        }
        if !(self.dedup_tol > self.newton_tol) {
            return bad("dedup_tol must exceed newton_tol");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if !(self.min_step > 0.0 && self.min_step < 1.0) {
            return bad("min_step must lie in (0, 1)");
        }
        if !(self.flow_time > 0.0 && self.flow_time.is_finite()) {
            return bad("flow_time must be > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub point: Vec<f64>,
    pub residual: f64,
    #[serde(with = "complex_pairs")]
    pub eigenvalues: Vec<Complex64>,
    pub stability: Stability,
    pub leading_real: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry_tag: Option<SymmetryTag>,
    pub basin_hits: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NewtonDiagnostics {
    pub starts: usize,
    pub converged: usize,
    pub singular: usize,
    pub stalled: usize,
    pub max_iters_reached: usize,
    pub rejected_residual: usize,
    /// Starts that converged only after the flow fallback.
    pub flow_recovered: usize,
    pub rounds: usize,
    /// Sum of the fixed-point indices of the equilibria found; one when the
    /// set is complete and nondegenerate.
    pub index_sum: i64,
}

impl NewtonDiagnostics {
    pub fn complete(&self) -> bool {
        self.index_sum == 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSet {
    pub equilibria: Vec<EquilibriumRecord>,
    pub diagnostics: NewtonDiagnostics,
}

impl EquilibriumSet {
    pub fn count(&self) -> usize {
        self.equilibria.len()
    }

    pub fn stabilities(&self) -> Vec<Stability> {
        self.equilibria.iter().map(|r| r.stability).collect()
    }
}

enum NewtonOutcome {
    Converged(Vec<f64>),
    Singular,
    Stalled,
    MaxIters,
}

fn sq_norm(v: &DVector<f64>) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn newton_solve<S: EquilibriumSystem + ?Sized>(
    sys: &S,
    x0: &[f64],
    cfg: &NewtonConfig,
    tol: f64,
) -> NewtonOutcome {
    let n = sys.node_dim();
    let step_tol = 0.1 * cfg.dedup_tol * (1.0 + sys.box_scale());
    let mut x = DVector::from_column_slice(x0);
    let mut r = DVector::zeros(n);
    sys.node_residual(x.as_slice(), r.as_mut_slice());
    for _ in 0..cfg.max_iters {
        if !r.iter().all(|v| v.is_finite()) {
            return NewtonOutcome::Singular;
        }
        if inf_norm(r.as_slice()) < tol {
            return match polish(sys, x, r, cfg.max_iters, step_tol) {
                Some(root) => NewtonOutcome::Converged(root),
                None => NewtonOutcome::Stalled,
            };
        }
        let jac = sys.node_jacobian(x.as_slice());
        let Some(dx) = jac.lu().solve(&(-&r)) else {
            return NewtonOutcome::Singular;
        };
        let scale = 1.0 + x.amax();
        if !dx.iter().all(|v| v.is_finite()) || dx.amax() > 1e12 * scale {
            return NewtonOutcome::Singular;
        }
        let merit = sq_norm(&r);
        let mut step = 1.0;
        let mut trial_r = DVector::zeros(n);
        loop {
            let trial = &x + &dx * step;
            sys.node_residual(trial.as_slice(), trial_r.as_mut_slice());
            let trial_merit = sq_norm(&trial_r);
            if trial_merit < merit || inf_norm(trial_r.as_slice()) < tol {
                x = trial;
                std::mem::swap(&mut r, &mut trial_r);
                break;
            }
            step *= cfg.backtrack_factor;
            if step < cfg.min_step {
                return NewtonOutcome::Stalled;
            }
        }
    }
    if inf_norm(r.as_slice()) < tol {
        match polish(sys, x, r, cfg.max_iters, step_tol) {
            Some(root) => NewtonOutcome::Converged(root),
            None => NewtonOutcome::Stalled,
        }
    } else {
        NewtonOutcome::MaxIters
    }
}

/// Damped Newton steps past the tolerance for as long as they still reduce the
/// residual. Near a degenerate root convergence is only linear and the first
/// point under the tolerance can sit far from the root along the flat
/// direction; without polishing, one root would be reported as several.
fn polish<S: EquilibriumSystem + ?Sized>(
    sys: &S,
    mut x: DVector<f64>,
    mut r: DVector<f64>,
    max_iters: usize,
    step_tol: f64,
) -> Option<Vec<f64>> {
    let mut trial_r = DVector::zeros(r.len());
    // Length of the last Newton step, an estimate of the distance to the root.
    let mut last = f64::INFINITY;
    for _ in 0..max_iters {
        let dx = sys.node_jacobian(x.as_slice()).lu().solve(&(-&r))?;
        if !dx.iter().all(|v| v.is_finite()) {
            return None;
        }
        last = dx.amax();
        if last == 0.0 {
            break;
        }
        let merit = sq_norm(&r);
        let mut step = 1.0;
        let accepted = loop {
            let trial = &x + &dx * step;
            sys.node_residual(trial.as_slice(), trial_r.as_mut_slice());
            if sq_norm(&trial_r) < merit {
                break Some(trial);
            }
            step *= 0.5;
            if step < 1e-3 {
                break None;
            }
        };
        let Some(trial) = accepted else { break };
        x = trial;
        std::mem::swap(&mut r, &mut trial_r);
    }
    // A small residual next to a near-singular Jacobian is not a root when
    // Newton still wants to move far.
    (last <= step_tol).then(|| x.as_slice().to_vec())
}

/// All equilibria reachable by damped Newton from fresh multi-starts in the
/// inflated invariant box.
pub fn find_equilibria<S: EquilibriumSystem + ?Sized>(
    sys: &S,
    cfg: &NewtonConfig,
) -> Result<EquilibriumSet, EquilibriaError> {
    find_equilibria_seeded(sys, cfg, &[])
}

/// Newton from the endpoint of a short flow, for starts where plain Newton
/// got trapped.
fn flow_then_newton<S: EquilibriumSystem + ?Sized>(
    sys: &S,
    x0: &[f64],
    cfg: &NewtonConfig,
    tol: f64,
) -> NewtonOutcome {
    let icfg = IntegrationConfig {
        t_max: cfg.flow_time,
        burn_in: 0.0,
        convergence_eps: tol.max(1e-8),
        record_every: usize::MAX,
        ..Default::default()
    };
    match integrate(sys, &sys.lift(x0), &icfg) {
        Ok(tr) if tr.terminal_reason != TerminalReason::Diverged => {
            newton_solve(sys, &sys.project(&tr.terminal_state), cfg, tol)
        }
        _ => NewtonOutcome::Stalled,
    }
}

struct Cluster {
    point: Vec<f64>,
    residual: f64,
    hits: usize,
    report: Option<StabilityReport>,
}

/// Starts on the segments between pairs of known equilibria, where saddles
/// separating two attractors tend to sit.
fn segment_starts(clusters: &[Cluster], n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let limit = clusters.len().min(12);
    for i in 0..limit {
        for j in i + 1..limit {
            for t in [0.25, 0.5, 0.75] {
                out.push(
                    (0..n)
                        .map(|k| (1.0 - t) * clusters[i].point[k] + t * clusters[j].point[k])
                        .collect(),
                );
            }
        }
    }
    out
}

/// `(−1)^m` with `m` the number of eigenvalues in the open right half-plane:
/// the sign of `det(−J)`.
fn fixed_point_index(report: &StabilityReport) -> i64 {
    if report.eigenvalues.iter().filter(|z| z.re > 0.0).count() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Like [`find_equilibria`], with additional activation-space starts tried
/// before the fresh ones (for warm-starting along a parameter sweep).
///
/// The field points strictly into the invariant box, so the indices of the
/// equilibria inside it sum to one when all are nondegenerate. A different
/// sum means some equilibrium was missed; the search then repeats with a
/// doubled start budget, a new seed and starts between the equilibria
/// already found, up to `max_rounds` times.
pub fn find_equilibria_seeded<S: EquilibriumSystem + ?Sized>(
    sys: &S,
    cfg: &NewtonConfig,
    extra_starts: &[Vec<f64>],
) -> Result<EquilibriumSet, EquilibriaError> {
    cfg.validate()?;
    if sys.has_inputs() {
        return Err(EquilibriaError::NonAutonomous);
    }
    let n = sys.node_dim();
    let node_bounds: Vec<f64> = sys.coordinate_bounds()[..n].to_vec();
    // Residual terms grow with the box, and so does their rounding floor.
    let tol = cfg.newton_tol * (1.0 + sys.box_scale());
    let radius = cfg.dedup_tol * (1.0 + sys.box_scale());
    let base = cfg.starts_for(sys.dim());

    let mut diagnostics = NewtonDiagnostics::default();
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut round = 0;
    loop {
        let mut starts: Vec<Vec<f64>> = if round == 0 {
            extra_starts.iter().filter(|s| s.len() == n).cloned().collect()
        } else {
            segment_starts(&clusters, n)
        };
        starts.extend(generate_starts(
            &node_bounds,
            base << round,
            cfg.start_strategy,
            cfg.seed.wrapping_add(round as u64),
        ));
        diagnostics.starts += starts.len();

        let mut outcomes = map_slice(cfg.execution, &starts, |x0| newton_solve(sys, x0, cfg, tol));
        let failed: Vec<usize> = outcomes
            .iter()
            .enumerate()
            .filter(|(_, o)| !matches!(o, NewtonOutcome::Converged(_)))
            .map(|(k, _)| k)
            .take(cfg.flow_budget)
            .collect();
        let retried = map_slice(cfg.execution, &failed, |&k| flow_then_newton(sys, &starts[k], cfg, tol));
        for (&k, outcome) in failed.iter().zip(retried) {
            if let NewtonOutcome::Converged(_) = outcome {
                diagnostics.flow_recovered += 1;
                outcomes[k] = outcome;
            }
        }

        let mut roots: Vec<(Vec<f64>, f64)> = Vec::new();
        for outcome in outcomes {
            match outcome {
                NewtonOutcome::Converged(x) => {
                    let point = sys.lift(&x);
                    let residual = inf_norm(&sys.field_vec(&point));
                    if residual < tol {
                        diagnostics.converged += 1;
                        roots.push((point, residual));
                    } else {
                        diagnostics.rejected_residual += 1;
                    }
                }
                NewtonOutcome::Singular => diagnostics.singular += 1,
                NewtonOutcome::Stalled => diagnostics.stalled += 1,
                NewtonOutcome::MaxIters => diagnostics.max_iters_reached += 1,
            }
        }

        // Sorting first makes the merge independent of completion order.
        roots.sort_by(|a, b| lexicographic(&a.0, &b.0));
        for (point, residual) in roots {
            match clusters.iter_mut().find(|c| distance_inf(&c.point, &point) <= radius) {
                Some(cluster) => {
                    cluster.hits += 1;
                    if residual < cluster.residual {
                        cluster.point = point;
                        cluster.residual = residual;
                        cluster.report = None;
                    }
                }
                None => clusters.push(Cluster {
                    point,
                    residual,
                    hits: 1,
                    report: None,
                }),
            }
        }
        for cluster in clusters.iter_mut().filter(|c| c.report.is_none()) {
            cluster.report = Some(analyze_at(sys, &cluster.point)?);
        }
        diagnostics.rounds = round + 1;
        diagnostics.index_sum = clusters
            .iter()
            .map(|c| fixed_point_index(c.report.as_ref().expect("analyzed")))
            .sum();
        if diagnostics.index_sum == 1 || round >= cfg.max_rounds {
            break;
        }
        round += 1;
    }
    if clusters.is_empty() {
        return Err(EquilibriaError::NoneFound {
            starts: diagnostics.starts,
            singular: diagnostics.singular,
            stalled: diagnostics.stalled,
        });
    }

    clusters.sort_by(|a, b| lexicographic(&a.point, &b.point));
    let equilibria = clusters
        .into_iter()
        .map(|c| {
            let report = c.report.expect("analyzed");
            EquilibriumRecord {
                symmetry_tag: sys.symmetry_tag(&c.point, radius),
                residual: c.residual,
                eigenvalues: report.eigenvalues,
                stability: report.classification,
                leading_real: report.leading_real,
                basin_hits: c.hits,
                point: c.point,
            }
        })
        .collect();
    Ok(EquilibriumSet {
        equilibria,
        diagnostics,
    })
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

pub(crate) fn distance_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Equilibrium count predicted by the root function: one diagonal root, or
/// one diagonal root plus the two coordinates of a swapped pair.
pub fn equilibrium_count_from_f_roots(c: f64, grid_points: usize) -> Result<usize, EquilibriaError> {
    Ok(count_f_roots(c, grid_points)?.len())
}
