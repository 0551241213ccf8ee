//! The symmetric minimal motif after setting all decays to one and
//! identifying the two weights, plus its restriction to the plane `x1 = x2`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::activation::{sigmoid, sigmoid_prime};
use super::dynamics::{Dynamics, EquilibriumSystem, SymmetryTag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedState3 {
    pub x1: f64,
    pub x2: f64,
    pub w: f64,
}

impl ReducedState3 {
    pub fn new(x1: f64, x2: f64, w: f64) -> Self {
        ReducedState3 { x1, x2, w }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x1, self.x2, self.w]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        ReducedState3 { x1: s[0], x2: s[1], w: s[2] }
    }
}

/// Parameters of the swap-symmetric motif: `b2 a1 = b1 a2 = A`, `c1 = c2 = c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricParams {
    pub combined_decay: f64,
    pub c: f64,
}

impl SymmetricParams {
    /// Only `A = 1` is analysed downstream.
    pub fn unit(c: f64) -> Self {
        SymmetricParams { combined_decay: 1.0, c }
    }
}

/// `(−x1 + wφ(x2), −x2 + wφ(x1), −w + cφ(x1)φ(x2))`.
pub fn reduced3_field(c: f64, s: ReducedState3) -> ReducedState3 {
    let (p1, p2) = (sigmoid(s.x1), sigmoid(s.x2));
    ReducedState3 {
        x1: -s.x1 + s.w * p2,
        x2: -s.x2 + s.w * p1,
        w: -s.w + c * (p1 * p2),
    }
}

/// The Z2 swap `S(x1, x2, w) = (x2, x1, w)`.
#[allow(non_snake_case)]
pub fn apply_symmetry_S(s: ReducedState3) -> ReducedState3 {
    ReducedState3 { x1: s.x2, x2: s.x1, w: s.w }
}

/// Planar dynamics on `x1 = x2`: `(−x1 + wφ(x1), −w + cφ(x1)²)`.
pub fn reduced_planar_field(c: f64, x1: f64, w: f64) -> (f64, f64) {
    let p = sigmoid(x1);
    (-x1 + w * p, -w + c * p * p)
}

pub fn reduced_planar_jacobian(c: f64, x1: f64, w: f64) -> [[f64; 2]; 2] {
    let (p, dp) = (sigmoid(x1), sigmoid_prime(x1));
    [[-1.0 + w * dp, p], [2.0 * c * p * dp, -1.0]]
}

/// The three-dimensional symmetric system as a [`Dynamics`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reduced3 {
    pub c: f64,
}

impl Dynamics for Reduced3 {
    fn dim(&self) -> usize {
        3
    }

    fn field(&self, state: &[f64], out: &mut [f64]) {
        let d = reduced3_field(self.c, ReducedState3::from_slice(state));
        out[0] = d.x1;
        out[1] = d.x2;
        out[2] = d.w;
    }

    fn jacobian(&self, s: &[f64]) -> DMatrix<f64> {
        let (p1, p2) = (sigmoid(s[0]), sigmoid(s[1]));
        let (d1, d2) = (sigmoid_prime(s[0]), sigmoid_prime(s[1]));
        let w = s[2];
        DMatrix::from_row_slice(
            3,
            3,
            &[
                -1.0, w * d2, p2, //
                w * d1, -1.0, p1, //
                self.c * d1 * p2, self.c * p1 * d2, -1.0,
            ],
        )
    }

    fn coordinate_bounds(&self) -> Vec<f64> {
        vec![self.c.abs(); 3]
    }

    fn coordinate_names(&self) -> Vec<String> {
        vec!["x_1".into(), "x_2".into(), "w".into()]
    }
}

impl EquilibriumSystem for Reduced3 {
    fn node_dim(&self) -> usize {
        2
    }

    fn node_residual(&self, x: &[f64], out: &mut [f64]) {
        let (p1, p2) = (sigmoid(x[0]), sigmoid(x[1]));
        out[0] = -x[0] + self.c * p1 * p2 * p2;
        out[1] = -x[1] + self.c * p1 * p1 * p2;
    }

    fn node_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let (p1, p2) = (sigmoid(x[0]), sigmoid(x[1]));
        let (d1, d2) = (sigmoid_prime(x[0]), sigmoid_prime(x[1]));
        let c = self.c;
        DMatrix::from_row_slice(
            2,
            2,
            &[
                -1.0 + c * d1 * p2 * p2,
                2.0 * c * p1 * p2 * d2,
                2.0 * c * p1 * d1 * p2,
                -1.0 + c * p1 * p1 * d2,
            ],
        )
    }

    fn lift(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0], x[1], self.c * sigmoid(x[0]) * sigmoid(x[1])]
    }

    fn symmetry_tag(&self, state: &[f64], tol: f64) -> Option<SymmetryTag> {
        Some(if (state[0] - state[1]).abs() <= tol {
            SymmetryTag::OnPlaneL
        } else {
            SymmetryTag::OffPlane
        })
    }
}

/// The planar system on `x1 = x2` as a [`Dynamics`], state `(x1, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedPlanar {
    pub c: f64,
}

impl Dynamics for ReducedPlanar {
    fn dim(&self) -> usize {
        2
    }

    fn field(&self, state: &[f64], out: &mut [f64]) {
        let (a, b) = reduced_planar_field(self.c, state[0], state[1]);
        out[0] = a;
        out[1] = b;
    }

    fn jacobian(&self, state: &[f64]) -> DMatrix<f64> {
        let j = reduced_planar_jacobian(self.c, state[0], state[1]);
        DMatrix::from_row_slice(2, 2, &[j[0][0], j[0][1], j[1][0], j[1][1]])
    }

    fn coordinate_bounds(&self) -> Vec<f64> {
        vec![self.c.abs(); 2]
    }

    fn coordinate_names(&self) -> Vec<String> {
        vec!["x_1".into(), "w".into()]
    }
}
