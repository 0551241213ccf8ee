//! Start points for the multi-start equilibrium search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::logit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartStrategy {
    Grid,
    UniformRandom,
    LowDiscrepancy,
}

/// Additive-recurrence sequence with generator `1/g^k`, where `g` is the
/// unique positive root of `g^{d+1} = g + 1`.
pub(crate) fn kronecker_sequence(dim: usize, count: usize, shift: &[f64]) -> Vec<Vec<f64>> {
    let mut g = 2.0f64;
    for _ in 0..50 {
        g = (1.0 + g).powf(1.0 / (dim as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=dim).map(|k| g.powi(-(k as i32))).collect();
    (0..count)
        .map(|n| {
            alpha
                .iter()
                .zip(shift)
                .map(|(a, s)| (s + a * (n as f64 + 1.0)).fract())
                .collect()
        })
        .collect()
}

fn grid_points(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let per_axis = ((count as f64).powf(1.0 / dim as f64).floor() as usize).max(2);
    let total = per_axis.saturating_pow(dim as u32).min(count.max(1));
    (0..total)
        .map(|mut idx| {
            (0..dim)
                .map(|_| {
                    let k = idx % per_axis;
                    idx /= per_axis;
                    (k as f64 + 0.5) / per_axis as f64
                })
                .collect()
        })
        .collect()
}

/// Unit-cube samples for the given strategy.
fn unit_samples(strategy: StartStrategy, dim: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    match strategy {
        StartStrategy::Grid => grid_points(dim, count),
        StartStrategy::UniformRandom => (0..count)
            .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
            .collect(),
        StartStrategy::LowDiscrepancy => {
            let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
            kronecker_sequence(dim, count, &shift)
        }
    }
}

/// Start points in activation space.
///
/// Half of the budget covers the inflated box `[−1.2 b_i, 1.2 b_i]` uniformly;
/// the other half is spread uniformly in sigmoid space (`x = logit(u)`,
/// clipped to the same box) because every equilibrium coordinate sits where
/// the sigmoid is not saturated relative to its own scale. The box centre
/// and, in low dimension, its corners are always included.
pub fn generate_starts(
    bounds: &[f64],
    count: usize,
    strategy: StartStrategy,
    seed: u64,
) -> Vec<Vec<f64>> {
    let dim = bounds.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limits: Vec<f64> = bounds.iter().map(|b| 1.2 * b.max(1e-3)).collect();
    let mut starts = vec![vec![0.0; dim]];
    if dim <= 6 {
        for mask in 0..(1usize << dim) {
            starts.push(
                (0..dim)
                    .map(|k| if mask >> k & 1 == 1 { limits[k] } else { -limits[k] })
                    .collect(),
            );
        }
    }
    let remaining = count.saturating_sub(starts.len());
    let box_count = remaining / 2;
    let sig_count = remaining - box_count;
    for u in unit_samples(strategy, dim, box_count, &mut rng) {
        starts.push(u.iter().zip(&limits).map(|(u, l)| (2.0 * u - 1.0) * l).collect());
    }
    for u in unit_samples(strategy, dim, sig_count, &mut rng) {
        starts.push(
            u.iter()
                .zip(&limits)
                .map(|(u, l)| logit(u.clamp(1e-12, 1.0 - 1e-12)).clamp(-l, *l))
                .collect(),
        );
    }
    starts.truncate(count.max(1));
    starts
}
