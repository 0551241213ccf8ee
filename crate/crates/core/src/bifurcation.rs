//! Learning-rate sweeps: equilibrium counts, branch tracking, transitions and
//! diagram export.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::equilibria::{
    distance_inf, find_equilibria_seeded, EquilibriaError, EquilibriumRecord, NewtonConfig,
};
use crate::model::{EquilibriumSystem, NetworkSpec, Reduced3};
use crate::stability::Stability;

#[derive(Debug, thiserror::Error)]
pub enum BifurcationError {
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("no transition with index {index} ({available} detected)")]
    NoSuchTransition { index: usize, available: usize },
    #[error("count {count} at c = {c} matches neither side of the bracket ({before} -> {after}); more than one transition inside, use a finer grid")]
    NonMonotone {
        c: f64,
        count: usize,
        before: usize,
        after: usize,
    },
    #[error("malformed diagram line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("at c = {c}: {source}")]
    Solve {
        c: f64,
        #[source]
        source: EquilibriaError,
    },
}

/// Which learning rates of a network the sweep sets to the swept value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeTarget {
    All,
    Bidirectional,
    Indices(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepSystem {
    /// The three-dimensional symmetric reduction with rate `c`.
    Reduced,
    Network { spec: NetworkSpec, target: EdgeTarget },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub system: SweepSystem,
    pub c_values: Vec<f64>,
    #[serde(default)]
    pub newton: NewtonConfig,
    #[serde(default)]
    pub seed: u64,
}

enum Instance {
    Reduced(Reduced3),
    Network(NetworkSpec),
}

impl Instance {
    fn system(&self) -> &dyn EquilibriumSystem {
        match self {
            Instance::Reduced(r) => r,
            Instance::Network(s) => s,
        }
    }
}

impl SweepSpec {
    pub fn reduced(c_values: Vec<f64>) -> Self {
        SweepSpec {
            system: SweepSystem::Reduced,
            c_values,
            newton: NewtonConfig::default(),
            seed: 0,
        }
    }

    pub fn network(spec: NetworkSpec, target: EdgeTarget, c_values: Vec<f64>) -> Self {
        SweepSpec {
            system: SweepSystem::Network { spec, target },
            c_values,
            newton: NewtonConfig::default(),
            seed: 0,
        }
    }

    /// Edge indices the sweep overwrites (empty for the reduced system).
    pub fn swept_edges(&self) -> Vec<usize> {
        match &self.system {
            SweepSystem::Reduced => Vec::new(),
            SweepSystem::Network { spec, target } => match target {
                EdgeTarget::All => (0..spec.edges.len()).collect(),
                EdgeTarget::Bidirectional => spec.bidirectional_edges(),
                EdgeTarget::Indices(v) => v.clone(),
            },
        }
    }

    pub fn validate(&self) -> Result<(), BifurcationError> {
        let bad = |m: String| Err(BifurcationError::InvalidSweep(m));
        if self.c_values.len() < 2 {
            return bad(format!("c_values needs at least 2 entries (got {})", self.c_values.len()));
        }
        if self.c_values.iter().any(|c| !c.is_finite()) {
            return bad("c_values must be finite".into());
        }
        let increasing = self.c_values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = self.c_values.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return bad("c_values must be strictly monotone".into());
        }
        self.newton
            .validate()
            .map_err(|e| BifurcationError::InvalidSweep(e.to_string()))?;
        if let SweepSystem::Network { spec, .. } = &self.system {
            spec.validate()
                .map_err(|e| BifurcationError::InvalidSweep(format!("base spec: {e}")))?;
            if !spec.is_autonomous() {
                return bad("base spec must have zero inputs".into());
            }
            let edges = self.swept_edges();
            if edges.is_empty() {
                return bad("target selects no edges".into());
            }
            if let Some(&k) = edges.iter().find(|&&k| k >= spec.edges.len()) {
                return bad(format!("target edge {k} out of range (spec has {})", spec.edges.len()));
            }
            if self.c_values.contains(&0.0) {
                return bad("c_values must not contain 0 for network sweeps".into());
            }
        }
        Ok(())
    }

    fn instance(&self, c: f64, edges: &[usize]) -> Instance {
        match &self.system {
            SweepSystem::Reduced => Instance::Reduced(Reduced3 { c }),
            SweepSystem::Network { spec, .. } => Instance::Network(spec.with_learning_rate(edges, c)),
        }
    }

    fn coordinate_names(&self) -> Vec<String> {
        self.instance(self.c_values[0], &self.swept_edges())
            .system()
            .coordinate_names()
    }

    fn newton_config(&self) -> NewtonConfig {
        NewtonConfig {
            seed: self.seed,
            ..self.newton.clone()
        }
    }

    /// Equilibria at a single learning rate, with optional warm starts.
    pub fn solve_at(&self, c: f64, warm: &[Vec<f64>]) -> Result<Vec<EquilibriumRecord>, BifurcationError> {
        let inst = self.instance(c, &self.swept_edges());
        let sys = inst.system();
        find_equilibria_seeded(sys, &self.newton_config(), warm)
            .map(|set| set.equilibria)
            .map_err(|source| BifurcationError::Solve { c, source })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub c: f64,
    pub count: usize,
    pub equilibria: Vec<EquilibriumRecord>,
    /// Branch of each equilibrium, parallel to `equilibria`.
    pub branch_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchMember {
    pub grid_index: usize,
    pub equilibrium_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: usize,
    pub members: Vec<BranchMember>,
}

/// A pair of adjacent grid values across which the count changes. `c_lo`
/// is the smaller value; `count_before` is the count there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub c_lo: f64,
    pub c_hi: f64,
    pub count_before: usize,
    pub count_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub coordinate_names: Vec<String>,
    pub points: Vec<SweepPoint>,
    pub branches: Vec<Branch>,
    pub transitions: Vec<Transition>,
    pub warnings: Vec<String>,
}

impl SweepResult {
    pub fn counts(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.count).collect()
    }
}

/// Evenly spaced grid from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "a grid needs at least two points");
    (0..n)
        .map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
        .collect()
}

/// Half of the points spread evenly over `[lo, hi]`; the rest placed at
/// geometrically shrinking offsets on both sides of each focus.
pub fn focused_grid(lo: f64, hi: f64, n: usize, foci: &[f64]) -> Vec<f64> {
    let (lo, hi) = (lo.min(hi), lo.max(hi));
    let uniform = if foci.is_empty() { n } else { (n / 2).max(2) };
    let mut grid = linear_grid(lo, hi, uniform);
    let foci: Vec<f64> = foci.iter().copied().filter(|f| *f > lo && *f < hi).collect();
    if !foci.is_empty() {
        let per_side = (n - uniform) / (2 * foci.len());
        let width = hi - lo;
        for f in &foci {
            for m in 0..per_side {
                // Offsets from width/8 down to width·1e−4.
                let s = if per_side > 1 { m as f64 / (per_side - 1) as f64 } else { 0.0 };
                let d = width / 8.0 * (1e-4f64 * 8.0).powf(s);
                for v in [f - d, f + d] {
                    if v > lo && v < hi {
                        grid.push(v);
                    }
                }
            }
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    grid
}

/// Runs the sweep in grid order, warm-starting each solve from the previous
/// grid point's equilibria.
pub fn sweep(spec: &SweepSpec) -> Result<SweepResult, BifurcationError> {
    spec.validate()?;
    let mut points: Vec<SweepPoint> = Vec::with_capacity(spec.c_values.len());
    let mut warm: Vec<Vec<f64>> = Vec::new();
    for &c in &spec.c_values {
        let equilibria = spec.solve_at(c, &warm)?;
        let node_dim = match &spec.system {
            SweepSystem::Reduced => 2,
            SweepSystem::Network { spec, .. } => spec.n,
        };
        warm = equilibria.iter().map(|r| r.point[..node_dim].to_vec()).collect();
        points.push(SweepPoint {
            c,
            count: equilibria.len(),
            branch_ids: vec![0; equilibria.len()],
            equilibria,
        });
    }
    let branches = link_branches(&mut points);
    let transitions = detect_transitions(&points);
    let mut warnings = Vec::new();
    for t in &transitions {
        let jump = t.count_before.abs_diff(t.count_after);
        if jump > 2 {
            warnings.push(format!(
                "count jumps by {jump} between c = {} and c = {}; several transitions may coincide, refine within [{}, {}]",
                t.c_lo, t.c_hi, t.c_lo, t.c_hi
            ));
        }
    }
    for pair in transitions.windows(2) {
        if pair[0].c_hi == pair[1].c_lo {
            warnings.push(format!(
                "transitions in adjacent intervals around c = {}; grid may be too coarse, refine within [{}, {}]",
                pair[0].c_hi, pair[0].c_lo, pair[1].c_hi
            ));
        }
    }
    Ok(SweepResult {
        coordinate_names: spec.coordinate_names(),
        points,
        branches,
        transitions,
        warnings,
    })
}

/// One-to-one nearest-neighbour linking between consecutive grid points.
/// A link is accepted only below half the smallest distance between the
/// previous point's equilibria; anything unmatched starts a new branch.
fn link_branches(points: &mut [SweepPoint]) -> Vec<Branch> {
    let mut branches: Vec<Branch> = Vec::new();
    for g in 0..points.len() {
        let mut assigned: Vec<Option<usize>> = vec![None; points[g].equilibria.len()];
        if g > 0 {
            let prev = &points[g - 1];
            let cur = &points[g];
            let mut min_sep = f64::INFINITY;
            for a in 0..prev.equilibria.len() {
                for b in a + 1..prev.equilibria.len() {
                    min_sep = min_sep.min(distance_inf(&prev.equilibria[a].point, &prev.equilibria[b].point));
                }
            }
            let threshold = 0.5 * min_sep;
            let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
            for (a, pa) in prev.equilibria.iter().enumerate() {
                for (b, pb) in cur.equilibria.iter().enumerate() {
                    let d = distance_inf(&pa.point, &pb.point);
                    if d < threshold {
                        candidates.push((d, a, b));
                    }
                }
            }
            candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
            let mut prev_used = vec![false; prev.equilibria.len()];
            for (_, a, b) in candidates {
                if !prev_used[a] && assigned[b].is_none() {
                    prev_used[a] = true;
                    assigned[b] = Some(prev.branch_ids[a]);
                }
            }
        }
        for (b, slot) in assigned.into_iter().enumerate() {
            let id = slot.unwrap_or_else(|| {
                branches.push(Branch {
                    id: branches.len(),
                    members: Vec::new(),
                });
                branches.len() - 1
            });
            branches[id].members.push(BranchMember {
                grid_index: g,
                equilibrium_index: b,
            });
            points[g].branch_ids[b] = id;
        }
    }
    branches
}

fn detect_transitions(points: &[SweepPoint]) -> Vec<Transition> {
    let mut out: Vec<Transition> = points
        .windows(2)
        .filter(|w| w[0].count != w[1].count)
        .map(|w| {
            let (lo, hi) = if w[0].c < w[1].c { (&w[0], &w[1]) } else { (&w[1], &w[0]) };
            Transition {
                c_lo: lo.c,
                c_hi: hi.c,
                count_before: lo.count,
                count_after: hi.count,
            }
        })
        .collect();
    out.sort_by(|a, b| a.c_lo.total_cmp(&b.c_lo));
    out
}

/// Bisects the `index`-th detected transition with a full re-solve at each
/// midpoint until the bracket is narrower than `tol`; returns its midpoint.
/// A midpoint whose count lies strictly between the two sides is returned
/// directly, since the solver can no longer separate the colliding
/// equilibria there.
pub fn refine_transition(
    spec: &SweepSpec,
    result: &SweepResult,
    index: usize,
    tol: f64,
) -> Result<f64, BifurcationError> {
    spec.validate()?;
    let t = *result
        .transitions
        .get(index)
        .ok_or(BifurcationError::NoSuchTransition {
            index,
            available: result.transitions.len(),
        })?;
    if !(tol > 0.0) {
        return Err(BifurcationError::InvalidSweep(format!("tol must be > 0 (got {tol})")));
    }
    let node_dim = match &spec.system {
        SweepSystem::Reduced => 2,
        SweepSystem::Network { spec, .. } => spec.n,
    };
    let seeds_at = |c: f64| -> Vec<Vec<f64>> {
        result
            .points
            .iter()
            .filter(|p| p.c == c)
            .flat_map(|p| p.equilibria.iter().map(|r| r.point[..node_dim].to_vec()))
            .collect()
    };
    let mut warm = seeds_at(t.c_lo);
    warm.extend(seeds_at(t.c_hi));
    let (mut lo, mut hi) = (t.c_lo, t.c_hi);
    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let eq = spec.solve_at(mid, &warm)?;
        let count = eq.len();
        if count == t.count_before {
            lo = mid;
        } else if count == t.count_after {
            hi = mid;
        } else if (t.count_before.min(t.count_after) + 1..t.count_before.max(t.count_after)).contains(&count) {
            // Strictly between the two sides: the colliding equilibria are no
            // longer resolved apart, so this is the transition itself.
            return Ok(mid);
        } else {
            return Err(BifurcationError::NonMonotone {
                c: mid,
                count,
                before: t.count_before,
                after: t.count_after,
            });
        }
        warm.extend(eq.iter().map(|r| r.point[..node_dim].to_vec()));
    }
    Ok(0.5 * (lo + hi))
}

/// One diagram row: an equilibrium at a grid value, projected.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramRow {
    pub c: f64,
    pub branch_id: usize,
    pub values: Vec<f64>,
    pub stability: Stability,
}

/// Rows in grid order, then branch order, projected onto `projection`.
pub fn diagram_rows(result: &SweepResult, projection: &[usize]) -> Vec<DiagramRow> {
    let mut rows = Vec::new();
    for p in &result.points {
        let mut order: Vec<usize> = (0..p.equilibria.len()).collect();
        order.sort_by_key(|&k| p.branch_ids[k]);
        for k in order {
            let r = &p.equilibria[k];
            rows.push(DiagramRow {
                c: p.c,
                branch_id: p.branch_ids[k],
                values: projection.iter().map(|&i| r.point[i]).collect(),
                stability: r.stability,
            });
        }
    }
    rows
}

/// CSV with header `c,branch_id,<projected coordinates>,stability`.
pub fn export_diagram<W: Write>(result: &SweepResult, projection: &[usize], mut out: W) -> std::io::Result<()> {
    let names: Vec<&str> = projection
        .iter()
        .map(|&i| result.coordinate_names.get(i).map(String::as_str).unwrap_or("?"))
        .collect();
    writeln!(out, "c,branch_id,{},stability", names.join(","))?;
    for row in diagram_rows(result, projection) {
        write!(out, "{:.16e},{}", row.c, row.branch_id)?;
        for v in &row.values {
            write!(out, ",{v:.16e}")?;
        }
        writeln!(out, ",{}", row.stability.as_str())?;
    }
    Ok(())
}

/// Parses a diagram written by [`export_diagram`]; returns the projected
/// column names and the rows.
pub fn parse_diagram<R: BufRead>(input: R) -> Result<(Vec<String>, Vec<DiagramRow>), BifurcationError> {
    let mut lines = input.lines().enumerate();
    let parse_err = |line: usize, reason: String| BifurcationError::Parse { line: line + 1, reason };
    let (_, header) = lines.next().ok_or_else(|| parse_err(0, "empty input".into()))?;
    let header = header.map_err(|e| parse_err(0, e.to_string()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "c" || cols[1] != "branch_id" || cols[cols.len() - 1] != "stability" {
        return Err(parse_err(0, format!("unexpected header {header:?}")));
    }
    let names: Vec<String> = cols[2..cols.len() - 1].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for (ln, line) in lines {
        let line = line.map_err(|e| parse_err(ln, format!("{e}")))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(parse_err(ln, format!("expected {} fields, got {}", cols.len(), fields.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| parse_err(ln, format!("{s:?}: {e}")));
        rows.push(DiagramRow {
            c: num(fields[0])?,
            branch_id: fields[1].parse().map_err(|e| parse_err(ln, format!("branch_id: {e}")))?,
            values: fields[2..fields.len() - 1].iter().map(|s| num(s)).collect::<Result<_, _>>()?,
            stability: fields[fields.len() - 1]
                .parse()
                .map_err(|e| parse_err(ln, format!("{e}")))?,
        });
    }
    Ok((names, rows))
}

/// Transition report: a JSON array of `{c_lo, c_hi, count_before, count_after}`.
pub fn transitions_json(result: &SweepResult) -> String {
    serde_json::to_string_pretty(&result.transitions).expect("transitions serialize")
}
