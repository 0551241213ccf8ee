use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// An autonomous vector field on a flat state vector.
pub trait Dynamics: Sync {
    fn dim(&self) -> usize;

    /// Writes the time derivative at `state` into `out`.
    fn field(&self, state: &[f64], out: &mut [f64]);

    /// Analytic Jacobian of [`Dynamics::field`].
    fn jacobian(&self, state: &[f64]) -> DMatrix<f64>;

    /// Per-coordinate half-widths of the invariant box, in state order.
    fn coordinate_bounds(&self) -> Vec<f64>;

    /// Column labels for CSV export.
    fn coordinate_names(&self) -> Vec<String>;

    fn box_scale(&self) -> f64 {
        self.coordinate_bounds().into_iter().fold(0.0, f64::max)
    }

    fn field_vec(&self, state: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.field(state, &mut out);
        out
    }
}

/// Position of an equilibrium relative to the symmetric plane of a
/// swap-symmetric system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryTag {
    OnPlaneL,
    OffPlane,
}

/// A system whose equilibria can be searched over neuron activations alone.
///
/// At any equilibrium each weight is pinned to `c φ(x_i) φ(x_j) / b`, so the
/// equilibrium equations collapse onto the `node_dim` activation coordinates.
pub trait EquilibriumSystem: Dynamics {
    fn node_dim(&self) -> usize;

    /// `ẋ` with every weight replaced by its equilibrium value.
    fn node_residual(&self, x: &[f64], out: &mut [f64]);

    fn node_jacobian(&self, x: &[f64]) -> DMatrix<f64>;

    /// Full state whose activations are `x` and whose weights sit on their nullcline.
    fn lift(&self, x: &[f64]) -> Vec<f64>;

    /// Projects a full state back onto the activation coordinates.
    fn project(&self, state: &[f64]) -> Vec<f64> {
        state[..self.node_dim()].to_vec()
    }

    fn symmetry_tag(&self, _state: &[f64], _tol: f64) -> Option<SymmetryTag> {
        None
    }

    /// Non-zero constant inputs make the system non-autonomous in the sense
    /// used by the equilibrium theory.
    fn has_inputs(&self) -> bool {
        false
    }
}
