//! Seeded generators for moderate-sized network presets.
//!
//! Randomness comes from ChaCha8 seeded through `seed_from_u64`, which is
//! specified independently of platform and word size.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{NetworkMetadata, NetworkSpec, Synapse};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NetgenError {
    #[error("invalid topology config: {0}")]
    InvalidConfig(String),
    #[error("nothing to sweep: the sampled graph has no bidirectional edge")]
    NothingToSweep,
}

/// Sampling intervals for generated parameters. Frozen learning rates have a
/// uniform magnitude in `c_magnitude` and a fair random sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParameterRanges {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub c_magnitude: [f64; 2],
}

impl Default for ParameterRanges {
    fn default() -> Self {
        ParameterRanges {
            a: [0.5, 1.5],
            b: [0.5, 1.5],
            c_magnitude: [0.1, 2.0],
        }
    }
}

impl ParameterRanges {
    fn validate(&self) -> Result<(), NetgenError> {
        for (name, [lo, hi]) in [("a", self.a), ("b", self.b), ("c_magnitude", self.c_magnitude)] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(NetgenError::InvalidConfig(format!(
                    "ranges.{name} must satisfy 0 < lo <= hi (got [{lo}, {hi}])"
                )));
            }
        }
        Ok(())
    }

    fn draw(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
        if hi > lo {
            rng.gen_range(lo..hi)
        } else {
            lo
        }
    }

    fn draw_c(&self, rng: &mut ChaCha8Rng) -> f64 {
        let m = Self::draw(rng, self.c_magnitude);
        if rng.gen::<bool>() {
            m
        } else {
            -m
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    RandomMixed,
    Interconnected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopologyConfig {
    pub kind: TopologyKind,
    /// Node count for `random_mixed`.
    pub n: usize,
    /// Subnetwork size for `interconnected`.
    pub k: usize,
    pub density: f64,
    pub bidirectional_fraction: f64,
    pub self_loops: bool,
    pub ranges: ParameterRanges,
    pub seed: u64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            kind: TopologyKind::RandomMixed,
            n: 12,
            k: 3,
            density: 0.25,
            bidirectional_fraction: 0.5,
            self_loops: false,
            ranges: ParameterRanges::default(),
            seed: 0,
        }
    }
}

impl TopologyConfig {
    pub fn random_mixed(n: usize, density: f64, bidirectional_fraction: f64, seed: u64) -> Self {
        TopologyConfig {
            kind: TopologyKind::RandomMixed,
            n,
            density,
            bidirectional_fraction,
            seed,
            ..Default::default()
        }
    }

    pub fn interconnected(k: usize, seed: u64) -> Self {
        TopologyConfig {
            kind: TopologyKind::Interconnected,
            k,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), NetgenError> {
        self.ranges.validate()?;
        match self.kind {
            TopologyKind::RandomMixed => {
                if self.n == 0 {
                    return Err(NetgenError::InvalidConfig("n must be >= 1".into()));
                }
                if !(self.density > 0.0 && self.density <= 1.0) {
                    return Err(NetgenError::InvalidConfig(format!(
                        "density must lie in (0, 1] (got {})",
                        self.density
                    )));
                }
                if !(0.0..=1.0).contains(&self.bidirectional_fraction) {
                    return Err(NetgenError::InvalidConfig(format!(
                        "bidirectional_fraction must lie in [0, 1] (got {})",
                        self.bidirectional_fraction
                    )));
                }
            }
            TopologyKind::Interconnected => {
                if self.k < 2 {
                    return Err(NetgenError::InvalidConfig(format!("k must be >= 2 (got {})", self.k)));
                }
            }
        }
        Ok(())
    }
}

/// A generated spec together with the edges a sweep should vary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedNetwork {
    pub spec: NetworkSpec,
    pub swept_edges: Vec<usize>,
}

pub fn build(cfg: &TopologyConfig) -> Result<GeneratedNetwork, NetgenError> {
    match cfg.kind {
        TopologyKind::RandomMixed => build_random_mixed(cfg),
        TopologyKind::Interconnected => build_interconnected(cfg),
    }
}

fn metadata(cfg: &TopologyConfig, kind: &str) -> NetworkMetadata {
    NetworkMetadata {
        kind: kind.to_string(),
        seed: Some(cfg.seed),
        ranges: Some(cfg.ranges.clone()),
    }
}

/// Random graph where each node pair is connected with probability
/// `density`; a connected pair is bidirectional with probability
/// `bidirectional_fraction` and otherwise gets one edge of random direction.
/// The swept set is every bidirectional edge.
pub fn build_random_mixed(cfg: &TopologyConfig) -> Result<GeneratedNetwork, NetgenError> {
    cfg.validate()?;
    if cfg.kind != TopologyKind::RandomMixed {
        return Err(NetgenError::InvalidConfig("kind must be random_mixed".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n;
    let a: Vec<f64> = (0..n).map(|_| ParameterRanges::draw(&mut rng, cfg.ranges.a)).collect();
    let mut pairs = Vec::new();
    for i in 0..n {
        if cfg.self_loops && rng.gen::<f64>() < cfg.density {
            pairs.push((i, i));
        }
        for j in i + 1..n {
            if rng.gen::<f64>() >= cfg.density {
                continue;
            }
            if rng.gen::<f64>() < cfg.bidirectional_fraction {
                pairs.push((i, j));
                pairs.push((j, i));
            } else if rng.gen::<bool>() {
                pairs.push((i, j));
            } else {
                pairs.push((j, i));
            }
        }
    }
    let edges: Vec<Synapse> = pairs
        .into_iter()
        .map(|(i, j)| Synapse {
            i,
            j,
            b: ParameterRanges::draw(&mut rng, cfg.ranges.b),
            c: cfg.ranges.draw_c(&mut rng),
        })
        .collect();
    let mut spec = NetworkSpec::new(a, edges);
    spec.metadata = Some(metadata(cfg, "random_mixed"));
    let swept_edges = spec.bidirectional_edges();
    if swept_edges.is_empty() {
        return Err(NetgenError::NothingToSweep);
    }
    Ok(GeneratedNetwork { spec, swept_edges })
}

/// Two complete directed subnetworks on nodes `0..k` and `k..2k`, joined by
/// one edge in each direction between their gateways, nodes `0` and `k`. The
/// swept set is the two cross edges, which are listed last.
pub fn build_interconnected(cfg: &TopologyConfig) -> Result<GeneratedNetwork, NetgenError> {
    cfg.validate()?;
    if cfg.kind != TopologyKind::Interconnected {
        return Err(NetgenError::InvalidConfig("kind must be interconnected".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let k = cfg.k;
    let a: Vec<f64> = (0..2 * k).map(|_| ParameterRanges::draw(&mut rng, cfg.ranges.a)).collect();
    let mut edges = Vec::new();
    for base in [0, k] {
        for i in base..base + k {
            for j in base..base + k {
                if i != j {
                    edges.push(Synapse {
                        i,
                        j,
                        b: ParameterRanges::draw(&mut rng, cfg.ranges.b),
                        c: cfg.ranges.draw_c(&mut rng),
                    });
                }
            }
        }
    }
    for (i, j) in [(k, 0), (0, k)] {
        edges.push(Synapse {
            i,
            j,
            b: ParameterRanges::draw(&mut rng, cfg.ranges.b),
            c: cfg.ranges.draw_c(&mut rng),
        });
    }
    let m = edges.len();
    let mut spec = NetworkSpec::new(a, edges);
    spec.metadata = Some(metadata(cfg, "interconnected"));
    Ok(GeneratedNetwork {
        spec,
        swept_edges: vec![m - 2, m - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_mixed_is_deterministic() {
        let cfg = TopologyConfig::random_mixed(12, 0.25, 0.5, 7);
        let a = build(&cfg).unwrap();
        let b = build(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&a.spec).unwrap(), serde_json::to_string(&b.spec).unwrap());
        let other = build(&TopologyConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a.spec, other.spec);
    }

    #[test]
    fn complete_bidirectional_graph() {
        let g = build(&TopologyConfig::random_mixed(12, 1.0, 1.0, 1)).unwrap();
        assert_eq!(g.spec.edges.len(), 132);
        assert_eq!(g.swept_edges.len(), 132);
    }

    #[test]
    fn swept_edges_have_reverses() {
        for seed in 0..20 {
            let Ok(g) = build(&TopologyConfig::random_mixed(12, 0.25, 0.5, seed)) else {
                continue;
            };
            assert!(!g.swept_edges.is_empty());
            for &e in &g.swept_edges {
                let s = g.spec.edges[e];
                assert!(g.spec.slot(s.j, s.i).is_some());
            }
            g.spec.validate().unwrap();
            assert!(g.spec.edges.iter().all(|e| e.i != e.j));
        }
    }

    #[test]
    fn unidirectional_only_has_nothing_to_sweep() {
        assert_eq!(
            build(&TopologyConfig::random_mixed(6, 0.3, 0.0, 2)),
            Err(NetgenError::NothingToSweep)
        );
    }

    #[test]
    fn interconnected_counts() {
        for (k, edges, dim) in [(3, 14, 20), (5, 42, 52)] {
            let g = build(&TopologyConfig::interconnected(k, 4)).unwrap();
            assert_eq!(g.spec.edges.len(), edges);
            assert_eq!(g.spec.state_dim(), dim);
            g.spec.validate().unwrap();
            let cross: Vec<_> = g.swept_edges.iter().map(|&e| (g.spec.edges[e].i, g.spec.edges[e].j)).collect();
            assert_eq!(cross, vec![(k, 0), (0, k)]);
        }
    }

    #[test]
    fn parameters_respect_ranges() {
        let g = build(&TopologyConfig::interconnected(5, 11)).unwrap();
        assert!(g.spec.a.iter().all(|a| (0.5..1.5).contains(a)));
        for e in &g.spec.edges {
            assert!((0.5..1.5).contains(&e.b));
            assert!((0.1..2.0).contains(&e.c.abs()));
        }
        let meta = g.spec.metadata.unwrap();
        assert_eq!(meta.kind, "interconnected");
        assert_eq!(meta.seed, Some(11));
    }

    #[test]
    fn config_errors() {
        assert!(build(&TopologyConfig { density: 0.0, ..Default::default() }).is_err());
        assert!(build(&TopologyConfig::interconnected(1, 0)).is_err());
        let mut cfg = TopologyConfig::interconnected(3, 0);
        cfg.ranges.b = [0.0, 1.0];
        assert!(build(&cfg).is_err());
    }
}
