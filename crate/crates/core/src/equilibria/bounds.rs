use serde::{Deserialize, Serialize};

use crate::model::{sigmoid, BidirectionalMotif, NetworkSpec};

/// Forward-invariant, attractive box `|x_i| ≤ x_bound`, `|w_ij| ≤ w_bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantBox {
    pub x_bound: f64,
    pub w_bound: f64,
}

impl InvariantBox {
    pub fn scale(&self) -> f64 {
        self.x_bound.max(self.w_bound)
    }

    /// Whether `state` (activations first, then weights) lies in the box
    /// inflated by `slack` in every coordinate.
    pub fn contains(&self, n: usize, state: &[f64], slack: f64) -> bool {
        state.iter().enumerate().all(|(k, v)| {
            let bound = if k < n { self.x_bound } else { self.w_bound };
            v.abs() <= bound + slack
        })
    }
}

/// `w_max = max|c_ij| / min b_ij` and
/// `x_max = w_max · max(1, largest in-degree) / min a_i`.
///
/// For networks whose nodes each receive at most one synapse (all minimal
/// motifs) this is `x_max = w_max / min a_i`.
pub fn invariant_box(spec: &NetworkSpec) -> InvariantBox {
    let max_c = spec.edges.iter().map(|e| e.c.abs()).fold(0.0, f64::max);
    let min_b = spec.edges.iter().map(|e| e.b).fold(f64::INFINITY, f64::min);
    let min_a = spec.a.iter().copied().fold(f64::INFINITY, f64::min);
    let w_bound = if spec.edges.is_empty() { 0.0 } else { max_c / min_b };
    let mut in_degree = vec![0usize; spec.n];
    for e in &spec.edges {
        in_degree[e.i] += 1;
    }
    let fan_in = in_degree.into_iter().max().unwrap_or(0).max(1) as f64;
    InvariantBox {
        x_bound: w_bound * fan_in / min_a,
        w_bound,
    }
}

/// The map whose fixed points are the motif's equilibria:
/// `(w₂φ(x₂)/a₁, w₁φ(x₁)/a₂, c₁φ(x₁)φ(x₂)/b₁, c₂φ(x₁)φ(x₂)/b₂)`.
#[allow(non_snake_case)]
pub fn fixed_point_map_F(motif: &BidirectionalMotif, state: &[f64; 4]) -> [f64; 4] {
    let [x1, x2, w1, w2] = *state;
    let (p1, p2) = (sigmoid(x1), sigmoid(x2));
    [
        w2 * p2 / motif.a1,
        w1 * p1 / motif.a2,
        motif.c1 * p1 * p2 / motif.b1,
        motif.c2 * p1 * p2 / motif.b2,
    ]
}
