use std::path::PathBuf;

use rnnhl::bifurcation::{export_diagram, refine_transition, sweep as run_sweep, BifurcationError, SweepSystem};
use rnnhl::equilibria::{critical_c0, critical_x0, find_equilibria, EquilibriaError, NewtonConfig};
use rnnhl::integrate::{integrate, sample_in_box, TerminalReason};
use rnnhl::model::{BidirectionalMotif, Dynamics, EquilibriumSystem};
use rnnhl::stability::contraction_certificate;
use rnnhl::verify::{run_suite, VerifyOptions};
use rnnhl::Execution;
use serde_json::json;

use crate::config::{RunConfig, System};
use crate::manifest::Outputs;
use crate::{CliError, Common};

const DEFAULT_OUT: &str = "rnnhl-out";

fn load(common: &Common) -> Result<RunConfig, CliError> {
    RunConfig::load(common.config.as_deref(), &common.overrides, common.seed)
}

fn out_dir(common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn execution(common: &Common) -> Execution {
    match common.jobs {
        Some(1) => Execution::Sequential,
        _ => Execution::default(),
    }
}

fn newton_config(cfg: &RunConfig, common: &Common) -> NewtonConfig {
    NewtonConfig {
        seed: cfg.seed,
        execution: execution(common),
        ..cfg.newton.clone()
    }
}

fn equilibria_error(e: EquilibriaError) -> CliError {
    match e {
        EquilibriaError::InvalidConfig(_) | EquilibriaError::NonAutonomous => CliError::Config(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    }
}

pub fn simulate(common: &Common) -> Result<(), CliError> {
    let cfg = load(common)?;
    let system = cfg.system()?;
    let sys: &dyn Dynamics = match &system {
        System::Reduced(r) => r,
        System::Network { spec, .. } => spec,
    };
    let initial = match &cfg.simulate.initial {
        Some(v) => v.clone(),
        None => sample_in_box(&sys.coordinate_bounds(), 1.0, 1, cfg.seed).remove(0),
    };
    let trajectory =
        integrate(sys, &initial, &cfg.simulate.integration).map_err(|e| CliError::Config(e.to_string()))?;
    let mut out = Outputs::create(&out_dir(common))?;
    let mut csv = Vec::new();
    trajectory.write_csv(&sys.coordinate_names(), &mut csv)?;
    let path = out.write("trajectory.csv", &csv)?;
    if let System::Network { spec, .. } = &system {
        out.write_json("network.json", spec)?;
    }
    out.finish("simulate", &cfg, common.jobs)?;
    println!(
        "{:?} at t = {} after {} steps; trajectory in {}",
        trajectory.terminal_reason,
        trajectory.terminal_time,
        trajectory.accepted_steps,
        path.display()
    );
    if trajectory.terminal_reason == TerminalReason::Diverged {
        return Err(CliError::Runtime(format!(
            "trajectory diverged: {}",
            trajectory.diagnostic.unwrap_or_default()
        )));
    }
    Ok(())
}

pub fn equilibria(common: &Common) -> Result<(), CliError> {
    let cfg = load(common)?;
    let system = cfg.system()?;
    let newton = newton_config(&cfg, common);
    let (set, certificate, label) = match &system {
        System::Reduced(r) => (find_equilibria(r, &newton), None, json!({ "kind": "reduced", "c": r.c })),
        System::Network { spec, .. } => (
            find_equilibria(spec, &newton),
            BidirectionalMotif::from_spec(spec).map(|m| contraction_certificate(&m)),
            json!({ "kind": "network", "n": spec.n, "state_dim": spec.state_dim() }),
        ),
    };
    let set = set.map_err(equilibria_error)?;
    let mut out = Outputs::create(&out_dir(common))?;
    let mut doc = json!({
        "system": label,
        "count": set.count(),
        "equilibria": set.equilibria,
        "diagnostics": set.diagnostics,
    });
    if let Some(cert) = &certificate {
        doc["contraction_certificate"] = serde_json::to_value(cert).expect("certificate serializes");
    }
    let path = out.write_json("equilibria.json", &doc)?;
    if let System::Network { spec, .. } = &system {
        out.write_json("network.json", spec)?;
    }
    out.finish("equilibria", &cfg, common.jobs)?;
    let kinds: Vec<&str> = set.stabilities().iter().map(|s| s.as_str()).collect();
    println!("{} equilibria [{}]; written to {}", set.count(), kinds.join(", "), path.display());
    if let Some(cert) = certificate {
        println!("contraction certificate: {:?}", cert.verdict);
    }
    if !set.diagnostics.complete() {
        eprintln!(
            "warning: fixed-point indices sum to {} rather than 1; an equilibrium may be missing",
            set.diagnostics.index_sum
        );
    }
    Ok(())
}

fn sweep_error(e: BifurcationError) -> CliError {
    match e {
        BifurcationError::InvalidSweep(_) => CliError::Config(e.to_string()),
        BifurcationError::Solve { source, .. } if matches!(source, EquilibriaError::InvalidConfig(_)) => {
            CliError::Config(source.to_string())
        }
        other => CliError::Runtime(other.to_string()),
    }
}

pub fn sweep(common: &Common) -> Result<(), CliError> {
    let cfg = load(common)?;
    let mut spec = cfg.sweep_spec()?;
    spec.newton.execution = execution(common);
    let result = run_sweep(&spec).map_err(sweep_error)?;
    let refined: Vec<serde_json::Value> = (0..result.transitions.len())
        .map(|k| {
            let t = &result.transitions[k];
            let mut row = serde_json::to_value(t).expect("transition serializes");
            if cfg.sweep.refine {
                match refine_transition(&spec, &result, k, cfg.sweep.refine_tol) {
                    Ok(c) => row["refined_c"] = json!(c),
                    Err(e) => row["refine_error"] = json!(e.to_string()),
                }
            }
            row
        })
        .collect();
    let projection = match &cfg.sweep.projection {
        Some(p) => p.clone(),
        None => match &spec.system {
            SweepSystem::Reduced => vec![0, 1, 2],
            SweepSystem::Network { spec, .. } => (0..spec.node_dim()).collect(),
        },
    };
    if let Some(&bad) = projection.iter().find(|&&k| k >= result.coordinate_names.len()) {
        return Err(CliError::Config(format!(
            "sweep.projection index {bad} out of range ({} coordinates)",
            result.coordinate_names.len()
        )));
    }
    let mut out = Outputs::create(&out_dir(common))?;
    let mut csv = Vec::new();
    export_diagram(&result, &projection, &mut csv)?;
    let path = out.write("diagram.csv", &csv)?;
    let counts: Vec<serde_json::Value> = result.points.iter().map(|p| json!([p.c, p.count])).collect();
    out.write_json(
        "transitions.json",
        &json!({ "transitions": refined, "counts": counts, "warnings": result.warnings }),
    )?;
    if let SweepSystem::Network { spec, .. } = &spec.system {
        out.write_json("network.json", spec)?;
    }
    out.finish("sweep", &cfg, common.jobs)?;
    for row in &refined {
        println!(
            "transition {} -> {} in [{}, {}]{}",
            row["count_before"],
            row["count_after"],
            row["c_lo"],
            row["c_hi"],
            row.get("refined_c").map(|c| format!(", refined c = {c}")).unwrap_or_default()
        );
    }
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    println!("{} grid points; diagram in {}", result.points.len(), path.display());
    Ok(())
}

pub fn critical_c(common: &Common) -> Result<(), CliError> {
    let c0 = critical_c0();
    let x0 = critical_x0();
    println!("c0 = {c0}");
    println!("x0 = {x0}");
    if common.out.is_some() {
        let cfg = load(common)?;
        let mut out = Outputs::create(&out_dir(common))?;
        out.write_json("critical.json", &json!({ "c0": c0, "x0": x0 }))?;
        out.finish("critical-c", &cfg, common.jobs)?;
    }
    Ok(())
}

pub fn verify(common: &Common, suite: Option<String>, fail_fast: bool, sigmoid_gain: f64) -> Result<(), CliError> {
    let mut cfg = load(common)?;
    if let Some(s) = suite {
        cfg.verify.suite = s;
    }
    cfg.verify.fail_fast |= fail_fast;
    let suite = cfg.suite()?;
    if !(sigmoid_gain > 0.0 && sigmoid_gain.is_finite()) {
        return Err(CliError::Config("--sigmoid-gain must be > 0".into()));
    }
    let opts = VerifyOptions {
        seed: cfg.seed,
        execution: execution(common),
        fail_fast: cfg.verify.fail_fast,
        sigmoid_gain,
    };
    let report = run_suite(suite, &opts);
    for outcome in &report.criteria {
        println!("{outcome}");
    }
    let mut out = Outputs::create(&out_dir(common))?;
    out.write_json("verify_report.json", &report)?;
    out.finish("verify", &cfg, common.jobs)?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Runtime(format!("failed criteria: {}", report.failed.join(", "))))
    }
}
