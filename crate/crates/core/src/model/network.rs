use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::activation::{sigmoid, sigmoid_prime};
use super::dynamics::{Dynamics, EquilibriumSystem, SymmetryTag};
use super::ModelError;
use crate::equilibria::invariant_box;
use crate::netgen::ParameterRanges;

pub const NETWORK_SCHEMA: &str = "rnnhl.network/1";

fn default_schema() -> String {
    NETWORK_SCHEMA.to_string()
}

/// A plastic synapse carrying `w_ij`: input from node `j` into node `i`'s equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Synapse {
    pub i: usize,
    pub j: usize,
    /// Weight decay rate `b_ij`.
    pub b: f64,
    /// Learning rate `c_ij`; positive is Hebbian, negative anti-Hebbian.
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMetadata {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranges: Option<ParameterRanges>,
}

/// Full parameterization of a network with Hebbian synapses.
///
/// Activations evolve as `ẋ_i = −a_i x_i + Σ_j w_ij φ(x_j) + u_i` and every
/// listed synapse as `ẇ_ij = −b_ij w_ij + c_ij φ(x_i) φ(x_j)`. The state
/// vector is `[x_0 .. x_{n-1}, w_e0 .. w_e(m-1)]` with weights in edge order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub n: usize,
    pub a: Vec<f64>,
    pub edges: Vec<Synapse>,
    #[serde(default)]
    pub u: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<NetworkMetadata>,
}

fn invalid(field: String, reason: String) -> ModelError {
    ModelError::Invalid { field, reason }
}

impl NetworkSpec {
    /// Spec with zero inputs. Parameters are not checked here; see
    /// [`NetworkSpec::validate`].
    pub fn new(a: Vec<f64>, edges: Vec<Synapse>) -> Self {
        let n = a.len();
        NetworkSpec {
            schema: default_schema(),
            n,
            u: vec![0.0; n],
            a,
            edges,
            metadata: None,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.schema != NETWORK_SCHEMA {
            return Err(invalid(
                "schema".into(),
                format!("must be \"{NETWORK_SCHEMA}\" (got \"{}\")", self.schema),
            ));
        }
        if self.n == 0 {
            return Err(invalid("n".into(), "must be >= 1".into()));
        }
        if self.a.len() != self.n {
            return Err(ModelError::DimensionMismatch {
                field: "a",
                expected: self.n,
                got: self.a.len(),
            });
        }
        if !self.u.is_empty() && self.u.len() != self.n {
            return Err(ModelError::DimensionMismatch {
                field: "u",
                expected: self.n,
                got: self.u.len(),
            });
        }
        for (k, &a) in self.a.iter().enumerate() {
            if !(a > 0.0 && a.is_finite()) {
                return Err(invalid(format!("a[{k}]"), format!("must be > 0 (got {a})")));
            }
        }
        for (k, &u) in self.u.iter().enumerate() {
            if !u.is_finite() {
                return Err(invalid(format!("u[{k}]"), format!("must be finite (got {u})")));
            }
        }
        let mut seen = HashSet::new();
        for (k, e) in self.edges.iter().enumerate() {
            if e.i >= self.n || e.j >= self.n {
                return Err(invalid(
                    format!("edges[{k}]"),
                    format!("endpoint ({}, {}) out of range for n = {}", e.i, e.j, self.n),
                ));
            }
            if !(e.b > 0.0 && e.b.is_finite()) {
                return Err(invalid(format!("edges[{k}].b"), format!("must be > 0 (got {})", e.b)));
            }
            if e.c == 0.0 || !e.c.is_finite() {
                return Err(invalid(
                    format!("edges[{k}].c"),
                    format!("must be finite and non-zero (got {})", e.c),
                ));
            }
            if !seen.insert((e.i, e.j)) {
                return Err(invalid(
                    format!("edges[{k}]"),
                    format!("duplicate edge ({}, {})", e.i, e.j),
                ));
            }
        }
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        self.n + self.edges.len()
    }

    /// Weight slot in the flat state vector for synapse `(i, j)`.
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        self.edges
            .iter()
            .position(|e| e.i == i && e.j == j)
            .map(|k| self.n + k)
    }

    pub fn input(&self, i: usize) -> f64 {
        self.u.get(i).copied().unwrap_or(0.0)
    }

    pub fn is_autonomous(&self) -> bool {
        self.u.iter().all(|&u| u == 0.0)
    }

    /// Edge indices whose reverse edge is also present.
    pub fn bidirectional_edges(&self) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.i != e.j && self.slot(e.j, e.i).is_some())
            .map(|(k, _)| k)
            .collect()
    }

    /// Returns a copy with `c` replaced on the listed edges.
    pub fn with_learning_rate(&self, edges: &[usize], c: f64) -> NetworkSpec {
        let mut spec = self.clone();
        for &k in edges {
            spec.edges[k].c = c;
        }
        spec
    }

    /// Dense weight matrix `W[i][j] = w_ij` reconstructed from a state.
    pub fn weight_matrix(&self, state: &SystemState) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.n, self.n);
        for (e, &v) in self.edges.iter().zip(&state.w) {
            w[(e.i, e.j)] = v;
        }
        w
    }

    fn check_dim(&self, state: &SystemState) -> Result<(), ModelError> {
        if state.x.len() != self.n {
            return Err(ModelError::DimensionMismatch {
                field: "x",
                expected: self.n,
                got: state.x.len(),
            });
        }
        if state.w.len() != self.edges.len() {
            return Err(ModelError::DimensionMismatch {
                field: "w",
                expected: self.edges.len(),
                got: state.w.len(),
            });
        }
        Ok(())
    }

    pub fn vector_field(&self, state: &SystemState) -> Result<SystemState, ModelError> {
        self.check_dim(state)?;
        let flat = state.to_flat();
        let out = self.field_vec(&flat);
        Ok(SystemState::from_flat(self, &out))
    }

    pub fn jacobian_at(&self, state: &SystemState) -> Result<DMatrix<f64>, ModelError> {
        self.check_dim(state)?;
        Ok(self.jacobian(&state.to_flat()))
    }

    fn is_symmetric_motif(&self) -> bool {
        if self.n != 2 || self.edges.len() != 2 || self.a[0] != self.a[1] {
            return false;
        }
        let (e0, e1) = (&self.edges[0], &self.edges[1]);
        e0.i == e1.j && e0.j == e1.i && e0.i != e0.j && e0.b == e1.b && e0.c == e1.c
    }
}

impl Dynamics for NetworkSpec {
    fn dim(&self) -> usize {
        self.state_dim()
    }

    fn field(&self, state: &[f64], out: &mut [f64]) {
        let n = self.n;
        let phi: Vec<f64> = state[..n].iter().map(|&x| sigmoid(x)).collect();
        for i in 0..n {
            out[i] = -self.a[i] * state[i] + self.input(i);
        }
        for (k, e) in self.edges.iter().enumerate() {
            let w = state[n + k];
            out[e.i] += w * phi[e.j];
            out[n + k] = -e.b * w + e.c * phi[e.i] * phi[e.j];
        }
    }

    fn jacobian(&self, state: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        let dim = self.state_dim();
        let phi: Vec<f64> = state[..n].iter().map(|&x| sigmoid(x)).collect();
        let dphi: Vec<f64> = state[..n].iter().map(|&x| sigmoid_prime(x)).collect();
        let mut jac = DMatrix::zeros(dim, dim);
        for i in 0..n {
            jac[(i, i)] = -self.a[i];
        }
        for (k, e) in self.edges.iter().enumerate() {
            let row = n + k;
            let w = state[row];
            jac[(e.i, e.j)] += w * dphi[e.j];
            jac[(e.i, row)] = phi[e.j];
            // Self-loops accumulate both chain-rule terms on the same entry.
            jac[(row, e.i)] += e.c * dphi[e.i] * phi[e.j];
            jac[(row, e.j)] += e.c * phi[e.i] * dphi[e.j];
            jac[(row, row)] = -e.b;
        }
        jac
    }

    fn coordinate_bounds(&self) -> Vec<f64> {
        let bx = invariant_box(self);
        let mut bounds = vec![bx.x_bound; self.n];
        bounds.extend(std::iter::repeat_n(bx.w_bound, self.edges.len()));
        bounds
    }

    fn coordinate_names(&self) -> Vec<String> {
        (0..self.n)
            .map(|i| format!("x_{}", i + 1))
            .chain(self.edges.iter().map(|e| format!("w_{}_{}", e.i + 1, e.j + 1)))
            .collect()
    }
}

impl EquilibriumSystem for NetworkSpec {
    fn node_dim(&self) -> usize {
        self.n
    }

    fn node_residual(&self, x: &[f64], out: &mut [f64]) {
        let phi: Vec<f64> = x.iter().map(|&v| sigmoid(v)).collect();
        for i in 0..self.n {
            out[i] = -self.a[i] * x[i] + self.input(i);
        }
        for e in &self.edges {
            out[e.i] += e.c / e.b * phi[e.i] * phi[e.j] * phi[e.j];
        }
    }

    fn node_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let phi: Vec<f64> = x.iter().map(|&v| sigmoid(v)).collect();
        let dphi: Vec<f64> = x.iter().map(|&v| sigmoid_prime(v)).collect();
        let mut jac = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            jac[(i, i)] = -self.a[i];
        }
        for e in &self.edges {
            let g = e.c / e.b;
            jac[(e.i, e.i)] += g * dphi[e.i] * phi[e.j] * phi[e.j];
            jac[(e.i, e.j)] += 2.0 * g * phi[e.i] * phi[e.j] * dphi[e.j];
        }
        jac
    }

    fn lift(&self, x: &[f64]) -> Vec<f64> {
        let mut s = x.to_vec();
        s.extend(
            self.edges
                .iter()
                .map(|e| e.c / e.b * sigmoid(x[e.i]) * sigmoid(x[e.j])),
        );
        s
    }

    fn symmetry_tag(&self, state: &[f64], tol: f64) -> Option<SymmetryTag> {
        if !self.is_symmetric_motif() {
            return None;
        }
        let on = (state[0] - state[1]).abs() <= tol && (state[2] - state[3]).abs() <= tol;
        Some(if on { SymmetryTag::OnPlaneL } else { SymmetryTag::OffPlane })
    }

    fn has_inputs(&self) -> bool {
        !self.is_autonomous()
    }
}

/// Neuron activations and synaptic weights of a [`NetworkSpec`].
///
/// `w[k]` belongs to `spec.edges[k]`; the flat layout places it at slot `n + k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl SystemState {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        SystemState {
            x: vec![0.0; spec.n],
            w: vec![0.0; spec.edges.len()],
        }
    }

    pub fn from_flat(spec: &NetworkSpec, flat: &[f64]) -> Self {
        SystemState {
            x: flat[..spec.n].to_vec(),
            w: flat[spec.n..].to_vec(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.x.clone();
        v.extend_from_slice(&self.w);
        v
    }

    pub fn dim(&self) -> usize {
        self.x.len() + self.w.len()
    }
}

/// The two-neuron motif with reciprocal plastic synapses.
///
/// `w1` carries node 1 into node 2 and `w2` carries node 2 into node 1, so the
/// state is ordered `(x1, x2, w1, w2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BidirectionalMotif {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
}

impl BidirectionalMotif {
    pub fn uniform(a: f64, b: f64, c: f64) -> Self {
        BidirectionalMotif { a1: a, a2: a, b1: b, b2: b, c1: c, c2: c }
    }

    pub fn to_spec(&self) -> NetworkSpec {
        let mut spec = NetworkSpec::new(
            vec![self.a1, self.a2],
            vec![
                Synapse { i: 1, j: 0, b: self.b1, c: self.c1 },
                Synapse { i: 0, j: 1, b: self.b2, c: self.c2 },
            ],
        );
        spec.metadata = Some(NetworkMetadata {
            kind: "bidirectional_motif".into(),
            seed: None,
            ranges: None,
        });
        spec
    }

    /// Recognizes a spec built by [`BidirectionalMotif::to_spec`] (or any
    /// two-node spec with exactly the reciprocal pair of synapses).
    pub fn from_spec(spec: &NetworkSpec) -> Option<Self> {
        if spec.n != 2 || spec.edges.len() != 2 {
            return None;
        }
        let w1 = spec.edges.iter().find(|e| e.i == 1 && e.j == 0)?;
        let w2 = spec.edges.iter().find(|e| e.i == 0 && e.j == 1)?;
        Some(BidirectionalMotif {
            a1: spec.a[0],
            a2: spec.a[1],
            b1: w1.b,
            b2: w2.b,
            c1: w1.c,
            c2: w2.c,
        })
    }

    pub fn with_c(self, c: f64) -> Self {
        BidirectionalMotif { c1: c, c2: c, ..self }
    }
}

/// The two-neuron motif with a single plastic synapse from node 1 into node 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleSynapseMotif {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub c1: f64,
}

impl SingleSynapseMotif {
    pub fn to_spec(&self) -> NetworkSpec {
        let mut spec = NetworkSpec::new(
            vec![self.a1, self.a2],
            vec![Synapse { i: 1, j: 0, b: self.b1, c: self.c1 }],
        );
        spec.metadata = Some(NetworkMetadata {
            kind: "single_synapse_motif".into(),
            seed: None,
            ranges: None,
        });
        spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Straightforward term-by-term evaluation over a dense weight matrix,
    /// kept separate from the edge-list implementation.
    fn dense_field(spec: &NetworkSpec, s: &SystemState) -> SystemState {
        let w = spec.weight_matrix(s);
        let phi = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut dx = vec![0.0; spec.n];
        for i in 0..spec.n {
            dx[i] = -spec.a[i] * s.x[i] + spec.input(i);
            for j in 0..spec.n {
                dx[i] += w[(i, j)] * phi(s.x[j]);
            }
        }
        let dw = spec
            .edges
            .iter()
            .zip(&s.w)
            .map(|(e, &wv)| -e.b * wv + e.c * phi(s.x[e.i]) * phi(s.x[e.j]))
            .collect();
        SystemState { x: dx, w: dw }
    }

    #[test]
    fn zero_state_on_motif() {
        let spec = BidirectionalMotif::uniform(1.0, 1.0, 1.0).to_spec();
        let d = spec.vector_field(&SystemState::zeros(&spec)).unwrap();
        assert_eq!(d.x, vec![0.0, 0.0]);
        assert_eq!(d.w, vec![0.25, 0.25]);
    }

    #[test]
    fn symmetric_plane_is_tangent() {
        let spec = BidirectionalMotif::uniform(1.0, 1.0, -7.5).to_spec();
        for &(x, w) in &[(0.3, -1.2), (-2.0, 4.0), (5.0, 0.1)] {
            let d = spec
                .vector_field(&SystemState { x: vec![x, x], w: vec![w, w] })
                .unwrap();
            assert_eq!(d.x[0], d.x[1]);
            assert_eq!(d.w[0], d.w[1]);
        }
    }

    #[test]
    fn matches_dense_reference() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(1..6);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if rng.gen_bool(0.5) {
                        edges.push(Synapse {
                            i,
                            j,
                            b: rng.gen_range(0.1..3.0),
                            c: rng.gen_range(-5.0..5.0),
                        });
                    }
                }
            }
            let mut spec = NetworkSpec::new((0..n).map(|_| rng.gen_range(0.1..3.0)).collect(), edges);
            spec.u = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = SystemState {
                x: (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect(),
                w: (0..spec.edges.len()).map(|_| rng.gen_range(-5.0..5.0)).collect(),
            };
            let got = spec.vector_field(&s).unwrap();
            let want = dense_field(&spec, &s);
            for (g, w) in got.to_flat().iter().zip(want.to_flat()) {
                assert!((g - w).abs() <= 1e-14 * (1.0 + w.abs()), "{g} vs {w}");
            }
        }
    }

    #[test]
    fn dimension_mismatch_names_field() {
        let spec = BidirectionalMotif::uniform(1.0, 1.0, 1.0).to_spec();
        let err = spec
            .vector_field(&SystemState { x: vec![0.0, 0.0], w: vec![0.0] })
            .unwrap_err();
        assert!(err.to_string().contains("w"), "{err}");
        let err = spec
            .vector_field(&SystemState { x: vec![0.0], w: vec![0.0, 0.0] })
            .unwrap_err();
        assert!(matches!(err, ModelError::DimensionMismatch { field: "x", .. }));
    }

    #[test]
    fn validation_errors() {
        let mut spec = BidirectionalMotif::uniform(1.0, 1.0, 1.0).to_spec();
        spec.a[0] = 0.0;
        assert_eq!(spec.validate().unwrap_err().to_string(), "a[0] must be > 0 (got 0)");
        let mut spec = BidirectionalMotif::uniform(1.0, 1.0, 1.0).to_spec();
        spec.edges[1].c = 0.0;
        assert!(spec.validate().unwrap_err().to_string().contains("edges[1].c"));
        let mut spec = BidirectionalMotif::uniform(1.0, 1.0, 1.0).to_spec();
        spec.edges.push(spec.edges[0]);
        assert!(spec.validate().unwrap_err().to_string().contains("duplicate"));
        let mut spec = BidirectionalMotif::uniform(1.0, 1.0, 1.0).to_spec();
        spec.edges[0].b = -1.0;
        assert!(spec.validate().is_err());
        let self_loop = NetworkSpec::new(vec![1.0], vec![Synapse { i: 0, j: 0, b: 1.0, c: 1.0 }]);
        assert!(self_loop.validate().is_ok());
    }

    #[test]
    fn motif_round_trips_through_spec() {
        let m = BidirectionalMotif { a1: 0.2, a2: 0.4, b1: 0.25, b2: 0.5, c1: -3.0, c2: 2.0 };
        assert_eq!(BidirectionalMotif::from_spec(&m.to_spec()), Some(m));
        assert_eq!(m.to_spec().slot(1, 0), Some(2));
        assert_eq!(m.to_spec().slot(0, 1), Some(3));
        assert_eq!(m.to_spec().bidirectional_edges(), vec![0, 1]);
    }

    #[test]
    fn lift_lands_on_weight_nullcline() {
        let spec = BidirectionalMotif { a1: 0.7, a2: 1.3, b1: 0.5, b2: 2.0, c1: -4.0, c2: 3.0 }.to_spec();
        let s = spec.lift(&[0.4, -1.1]);
        let d = spec.field_vec(&s);
        assert!(d[2].abs() < 1e-15 && d[3].abs() < 1e-15);
        let mut r = vec![0.0; 2];
        spec.node_residual(&[0.4, -1.1], &mut r);
        assert!((r[0] - d[0]).abs() < 1e-15 && (r[1] - d[1]).abs() < 1e-15);
    }
}
