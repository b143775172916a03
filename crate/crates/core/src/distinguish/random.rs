use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::sample_uniform_graph;
use crate::oracles::a2_at;

/// Two values closer than this count as a collision.
pub const COLLISION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct A2Report {
    pub n: usize,
    pub seeds: [u64; 2],
    /// Cross-graph vertex pairs `(u1, u2)` with equal two-step return
    /// probability.
    pub collisions: Vec<(usize, usize)>,
    /// Smallest gap among the remaining pairs.
    pub min_gap: Option<f64>,
}

/// Samples two uniform graphs and compares the two-step return probability at
/// every vertex of one with every vertex of the other.
pub fn random_graph_a2_experiment(n: usize, seed1: u64, seed2: u64) -> Result<A2Report> {
    if n < 8 {
        return Err(Error::param("n", "the experiment needs n >= 8"));
    }
    let g1 = sample_uniform_graph(n, seed1)?;
    let g2 = sample_uniform_graph(n, seed2)?;
    let a: Vec<f64> = (0..n).map(|u| a2_at(&g1, u)).collect();
    let b: Vec<f64> = (0..n).map(|u| a2_at(&g2, u)).collect();
    let mut collisions = Vec::new();
    let mut min_gap: Option<f64> = None;
    for (u1, x) in a.iter().enumerate() {
        for (u2, y) in b.iter().enumerate() {
            let gap = (x - y).abs();
            if gap < COLLISION_TOL {
                collisions.push((u1, u2));
            } else {
                min_gap = Some(min_gap.map_or(gap, |m| m.min(gap)));
            }
        }
    }
    Ok(A2Report {
        n,
        seeds: [seed1, seed2],
        collisions,
        min_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_collides_on_diagonal() {
        let r = random_graph_a2_experiment(16, 3, 3).unwrap();
        for u in 0..16 {
            assert!(r.collisions.contains(&(u, u)));
        }
        assert!(r.collisions.len() <= 256);
    }

    #[test]
    fn small_n_rejected() {
        assert!(random_graph_a2_experiment(5, 1, 2).is_err());
    }
}
