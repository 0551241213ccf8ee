//! Explicit Runge–Kutta integration with convergence and escape detection.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec::{map_slice, Execution};
use crate::model::{Dynamics, Reduced3, ReducedState3};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum IntegrateError {
    #[error("invalid integration config: {0}")]
    InvalidConfig(String),
    #[error("initial state has dimension {got}, system has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("initial state is not finite")]
    NonFiniteStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rk4Fixed,
    Rk45Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrationConfig {
    pub method: Method,
    /// Fixed step for RK4, initial step for RK45.
    pub dt: f64,
    pub t_max: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Record every k-th accepted step (the first and last state are always kept).
    pub record_every: usize,
    pub convergence_eps: f64,
    pub burn_in: f64,
    pub max_steps: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            method: Method::Rk45Adaptive,
            dt: 0.01,
            t_max: 500.0,
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            record_every: 1,
            convergence_eps: 1e-8,
            burn_in: 10.0,
            max_steps: 50_000_000,
        }
    }
}

impl IntegrationConfig {
    pub fn rk4(dt: f64, t_max: f64) -> Self {
        IntegrationConfig {
            method: Method::Rk4Fixed,
            dt,
            t_max,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), IntegrateError> {
        let positive = [
            ("dt", self.dt),
            ("t_max", self.t_max),
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("convergence_eps", self.convergence_eps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(IntegrateError::InvalidConfig(format!("{name} must be > 0 (got {v})")));
            }
        }
        if !(self.burn_in >= 0.0) {
            return Err(IntegrateError::InvalidConfig("burn_in must be >= 0".into()));
        }
        if self.record_every == 0 {
            return Err(IntegrateError::InvalidConfig("record_every must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    Converged,
    Horizon,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub terminal_reason: TerminalReason,
    pub terminal_time: f64,
    pub terminal_state: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    /// Header `t,<coordinate names>` followed by one row per sample.
    pub fn write_csv<W: Write>(&self, names: &[String], mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,{}", names.join(","))?;
        for (t, s) in self.times.iter().zip(&self.states) {
            write!(out, "{t:.16e}")?;
            for v in s {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// What the stepper reports back to its observer after each accepted step.
enum Control {
    Continue,
    Stop,
}

struct StepOutcome {
    reason: TerminalReason,
    t: f64,
    y: Vec<f64>,
    diagnostic: Option<String>,
    accepted: usize,
    rejected: usize,
}

// Dormand–Prince stages; the fields are autonomous, so the nodes are unused.
const DP_A: [&[f64]; 6] = [
    &[1.0 / 5.0],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Difference between the fifth- and fourth-order weights.
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn rk4_step<D: Dynamics + ?Sized>(sys: &D, y: &[f64], h: f64, k: &mut [Vec<f64>; 4], tmp: &mut [f64], out: &mut [f64]) {
    let n = y.len();
    sys.field(y, &mut k[0]);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k[0][i];
    }
    sys.field(tmp, &mut k[1]);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k[1][i];
    }
    sys.field(tmp, &mut k[2]);
    for i in 0..n {
        tmp[i] = y[i] + h * k[2][i];
    }
    sys.field(tmp, &mut k[3]);
    for i in 0..n {
        out[i] = y[i] + h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
    }
}

fn run<D, O>(sys: &D, y0: &[f64], cfg: &IntegrationConfig, mut observe: O) -> StepOutcome
where
    D: Dynamics + ?Sized,
    O: FnMut(f64, &[f64], &[f64]) -> Control,
{
    let n = y0.len();
    let limit = 1e6 * (1.0 + sys.box_scale());
    let mut t = 0.0;
    let mut y = y0.to_vec();
    let mut f = sys.field_vec(&y);
    let mut accepted = 0;
    let mut rejected = 0;
    let finish = |reason, t, y: Vec<f64>, diagnostic, accepted, rejected| StepOutcome {
        reason,
        t,
        y,
        diagnostic,
        accepted,
        rejected,
    };
    if let Control::Stop = observe(t, &y, &f) {
        return finish(TerminalReason::Converged, t, y, None, 0, 0);
    }
    let mut next = vec![0.0; n];
    match cfg.method {
        Method::Rk4Fixed => {
            let mut k: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; n]);
            let mut tmp = vec![0.0; n];
            let steps = (cfg.t_max / cfg.dt).round().max(1.0) as usize;
            for step in 1..=steps {
                rk4_step(sys, &y, cfg.dt, &mut k, &mut tmp, &mut next);
                std::mem::swap(&mut y, &mut next);
                t = if step == steps { cfg.t_max } else { step as f64 * cfg.dt };
                accepted += 1;
                if let Some(d) = escape(&y, limit) {
                    return finish(TerminalReason::Diverged, t, y, Some(d), accepted, rejected);
                }
                sys.field(&y, &mut f);
                if let Control::Stop = observe(t, &y, &f) {
                    return finish(TerminalReason::Converged, t, y, None, accepted, rejected);
                }
            }
        }
        Method::Rk45Adaptive => {
            let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
            let mut tmp = vec![0.0; n];
            k[0].copy_from_slice(&f);
            let mut h = cfg.dt.min(cfg.t_max);
            while t < cfg.t_max {
                if accepted + rejected >= cfg.max_steps {
                    let d = format!("step budget of {} exhausted at t = {t}", cfg.max_steps);
                    return finish(TerminalReason::Horizon, t, y, Some(d), accepted, rejected);
                }
                let last = t + h >= cfg.t_max;
                if last {
                    h = cfg.t_max - t;
                }
                for s in 0..6 {
                    for i in 0..n {
                        let mut acc = 0.0;
                        for (j, a) in DP_A[s].iter().enumerate() {
                            acc += a * k[j][i];
                        }
                        tmp[i] = y[i] + h * acc;
                    }
                    sys.field(&tmp, &mut k[s + 1]);
                }
                // Stage six already evaluated the fifth-order solution.
                next.copy_from_slice(&tmp);
                let mut err: f64 = 0.0;
                for i in 0..n {
                    let mut e = 0.0;
                    for (j, ej) in DP_E.iter().enumerate() {
                        e += ej * k[j][i];
                    }
                    let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(next[i].abs());
                    err = err.max((h * e).abs() / scale);
                }
                if !err.is_finite() {
                    let d = format!("non-finite state at t = {t}");
                    return finish(TerminalReason::Diverged, t, y, Some(d), accepted, rejected);
                }
                if err <= 1.0 {
                    t = if last { cfg.t_max } else { t + h };
                    std::mem::swap(&mut y, &mut next);
                    k.swap(0, 6);
                    accepted += 1;
                    if let Some(d) = escape(&y, limit) {
                        return finish(TerminalReason::Diverged, t, y, Some(d), accepted, rejected);
                    }
                    if let Control::Stop = observe(t, &y, &k[0]) {
                        return finish(TerminalReason::Converged, t, y, None, accepted, rejected);
                    }
                } else {
                    rejected += 1;
                }
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h *= factor;
                if h < 1e-14 * (1.0 + t.abs()) {
                    let d = format!("step size underflow at t = {t}");
                    return finish(TerminalReason::Diverged, t, y, Some(d), accepted, rejected);
                }
            }
        }
    }
    finish(TerminalReason::Horizon, t, y, None, accepted, rejected)
}

fn escape(y: &[f64], limit: f64) -> Option<String> {
    y.iter().enumerate().find_map(|(i, v)| {
        if !v.is_finite() {
            Some(format!("coordinate {i} became non-finite"))
        } else if v.abs() > limit {
            Some(format!("coordinate {i} reached {v:e}, beyond {limit:e}"))
        } else {
            None
        }
    })
}

fn check_start<D: Dynamics + ?Sized>(sys: &D, s0: &[f64], cfg: &IntegrationConfig) -> Result<(), IntegrateError> {
    cfg.validate()?;
    if s0.len() != sys.dim() {
        return Err(IntegrateError::DimensionMismatch {
            expected: sys.dim(),
            got: s0.len(),
        });
    }
    if s0.iter().any(|v| !v.is_finite()) {
        return Err(IntegrateError::NonFiniteStart);
    }
    Ok(())
}

/// Integrates from `s0` until the field falls below `convergence_eps` (after
/// `burn_in`), the state escapes, or `t_max` is reached.
pub fn integrate<D: Dynamics + ?Sized>(
    sys: &D,
    s0: &[f64],
    cfg: &IntegrationConfig,
) -> Result<Trajectory, IntegrateError> {
    check_start(sys, s0, cfg)?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut count = 0usize;
    let outcome = run(sys, s0, cfg, |t, y, f| {
        if count % cfg.record_every == 0 {
            times.push(t);
            states.push(y.to_vec());
        }
        count += 1;
        if t >= cfg.burn_in && f.iter().all(|v| v.abs() < cfg.convergence_eps) {
            Control::Stop
        } else {
            Control::Continue
        }
    });
    if times.last() != Some(&outcome.t) {
        times.push(outcome.t);
        states.push(outcome.y.clone());
    }
    Ok(Trajectory {
        times,
        states,
        terminal_reason: outcome.reason,
        terminal_time: outcome.t,
        terminal_state: outcome.y,
        diagnostic: outcome.diagnostic,
        accepted_steps: outcome.accepted,
        rejected_steps: outcome.rejected,
    })
}

/// Integrates every start, returning trajectories in input order.
pub fn integrate_many<D: Dynamics + ?Sized>(
    sys: &D,
    starts: &[Vec<f64>],
    cfg: &IntegrationConfig,
    exec: Execution,
) -> Vec<Result<Trajectory, IntegrateError>> {
    map_slice(exec, starts, |s0| integrate(sys, s0, cfg))
}

/// Uniform samples in the box `|s_k| ≤ scale · bounds_k`.
pub fn sample_in_box(bounds: &[f64], scale: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            bounds
                .iter()
                .map(|b| {
                    let r = scale * b;
                    if r > 0.0 {
                        rng.gen_range(-r..=r)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Samples on the box surface: each point has one coordinate pinned to a face.
fn sample_on_boundary(bounds: &[f64], count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let face = rng.gen_range(0..bounds.len());
            bounds
                .iter()
                .enumerate()
                .map(|(k, &b)| {
                    if k == face {
                        if rng.gen::<bool>() { b } else { -b }
                    } else if b > 0.0 {
                        rng.gen_range(-b..=b)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub samples: usize,
    /// Starts whose trajectory left the box by more than the allowance.
    pub violations: usize,
    /// Largest excursion beyond the box over all accepted steps.
    pub max_excursion: f64,
    pub allowance: f64,
    pub passed: bool,
}

/// Integrates from `n_samples` points of the box (half on its surface, half
/// inside) and measures how far any trajectory strays outside it.
pub fn check_forward_invariance<D: Dynamics + ?Sized>(
    sys: &D,
    n_samples: usize,
    seed: u64,
    cfg: &IntegrationConfig,
    exec: Execution,
) -> Result<InvarianceReport, IntegrateError> {
    cfg.validate()?;
    let bounds = sys.coordinate_bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_surface = n_samples / 2;
    let mut starts = sample_on_boundary(&bounds, n_surface, &mut rng);
    starts.extend(sample_in_box(&bounds, 1.0, n_samples - n_surface, rng.gen()));
    let allowance = 1e-6 * (1.0 + sys.box_scale());
    let excursions = map_slice(exec, &starts, |s0| {
        let mut worst: f64 = 0.0;
        run(sys, s0, cfg, |_, y, _| {
            for (v, b) in y.iter().zip(&bounds) {
                worst = worst.max(v.abs() - b);
            }
            Control::Continue
        });
        worst
    });
    let violations = excursions.iter().filter(|&&e| e > allowance).count();
    let max_excursion = excursions.iter().copied().fold(0.0, f64::max);
    Ok(InvarianceReport {
        samples: starts.len(),
        violations,
        max_excursion,
        allowance,
        passed: violations == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractivityReport {
    pub samples: usize,
    /// Time each start first entered the inflated box, if it did.
    pub entry_times: Vec<Option<f64>>,
    pub passed: bool,
}

/// Starts each sample at `start_scale` times the box and records when it
/// enters the box inflated by `inflation`.
pub fn check_attractivity<D: Dynamics + ?Sized>(
    sys: &D,
    n_samples: usize,
    start_scale: f64,
    inflation: f64,
    seed: u64,
    cfg: &IntegrationConfig,
    exec: Execution,
) -> Result<AttractivityReport, IntegrateError> {
    cfg.validate()?;
    let bounds = sys.coordinate_bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outer: Vec<f64> = bounds.iter().map(|b| start_scale * b.max(1.0)).collect();
    let starts = sample_on_boundary(&outer, n_samples, &mut rng);
    let entry_times = map_slice(exec, &starts, |s0| {
        let mut entered = None;
        run(sys, s0, cfg, |t, y, _| {
            if y.iter().zip(&bounds).all(|(v, b)| v.abs() <= inflation * b) {
                entered = Some(t);
                Control::Stop
            } else {
                Control::Continue
            }
        });
        entered
    });
    Ok(AttractivityReport {
        samples: starts.len(),
        passed: entry_times.iter().all(Option::is_some),
        entry_times,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSeries {
    pub times: Vec<f64>,
    /// `V = (x₁ − x₂)²/2` at the recorded samples.
    pub values: Vec<f64>,
    /// Largest rise of `V` between consecutive accepted steps after burn-in.
    pub max_increase: f64,
    pub non_increasing: bool,
    pub terminal_reason: TerminalReason,
    pub terminal_state: ReducedState3,
}

/// Monotonicity slack on `V` after burn-in.
pub const LYAPUNOV_SLACK: f64 = 1e-10;

/// Tracks `V(t) = (x₁ − x₂)²/2` along a trajectory of the reduced system.
/// Monotonicity is checked at every accepted step, not only the recorded ones.
pub fn lyapunov_monitor(
    c: f64,
    s0: ReducedState3,
    cfg: &IntegrationConfig,
) -> Result<LyapunovSeries, IntegrateError> {
    let sys = Reduced3 { c };
    let y0 = s0.to_array();
    check_start(&sys, &y0, cfg)?;
    let v = |y: &[f64]| 0.5 * (y[0] - y[1]).powi(2);
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut count = 0usize;
    let mut prev: Option<f64> = None;
    let mut max_increase = f64::NEG_INFINITY;
    let outcome = run(&sys, &y0, cfg, |t, y, f| {
        let value = v(y);
        if count % cfg.record_every == 0 {
            times.push(t);
            values.push(value);
        }
        count += 1;
        if t >= cfg.burn_in {
            if let Some(p) = prev {
                max_increase = max_increase.max(value - p);
            }
            prev = Some(value);
            if f.iter().all(|d| d.abs() < cfg.convergence_eps) {
                return Control::Stop;
            }
        }
        Control::Continue
    });
    if times.last() != Some(&outcome.t) {
        times.push(outcome.t);
        values.push(v(&outcome.y));
    }
    let max_increase = max_increase.max(0.0);
    Ok(LyapunovSeries {
        times,
        values,
        max_increase,
        non_increasing: max_increase <= LYAPUNOV_SLACK,
        terminal_reason: outcome.reason,
        terminal_state: ReducedState3::from_slice(&outcome.y),
    })
}
