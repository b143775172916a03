use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_epsilon, Error, Result};
use crate::graph::{Graph, Vertex};

/// Largest graph accepted by [`meet_matrix`].
pub const MEET_MAX_VERTICES: usize = 256;

/// Unknown count above which the pair system is solved by Gauss–Seidel.
pub const DENSE_UNKNOWNS: usize = 4096;

/// Required fixed-point residual.
pub const RESIDUAL_TARGET: f64 = 1e-12;

/// Probability that two independent terminable walkers, moving in lockstep,
/// are ever on the same vertex, for every start pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeetMatrix {
    n: usize,
    epsilon: f64,
    /// Row-major `n × n`, symmetric with unit diagonal.
    m: Vec<f64>,
    residual: f64,
}

impl MeetMatrix {
    pub fn get(&self, a: Vertex, b: Vertex) -> f64 {
        self.m[a * self.n + b]
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Max violation of the fixed-point equation over off-diagonal pairs.
    pub fn residual(&self) -> f64 {
        self.residual
    }
}

/// Index of the unordered pair `a < b` among unknowns, or `None` when the
/// pair is fixed (diagonal, or odd distance in a bipartite graph).
struct PairIndex {
    n: usize,
    slot: Vec<Option<usize>>,
    pairs: Vec<(Vertex, Vertex)>,
}

impl PairIndex {
    fn new(g: &Graph) -> Self {
        let n = g.vertex_count();
        let parts = g.bipartition();
        let mut slot = vec![None; n * n];
        let mut pairs = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if parts.as_ref().is_some_and(|p| p[a] != p[b]) {
                    continue;
                }
                slot[a * n + b] = Some(pairs.len());
                slot[b * n + a] = Some(pairs.len());
                pairs.push((a, b));
            }
        }
        PairIndex { n, slot, pairs }
    }

    fn get(&self, a: Vertex, b: Vertex) -> Option<usize> {
        self.slot[a * self.n + b]
    }
}

/// Solves the lockstep pair chain on `g`.
pub fn meet_matrix(g: &Graph, epsilon: f64) -> Result<MeetMatrix> {
    check_epsilon(epsilon)?;
    let n = g.vertex_count();
    if n > MEET_MAX_VERTICES {
        return Err(Error::Capacity(format!(
            "{n} vertices (pair chain allows at most {MEET_MAX_VERTICES})"
        )));
    }
    let c = (1.0 - epsilon).powi(2);
    let idx = PairIndex::new(g);
    let u = idx.pairs.len();

    let mut x = if u == 0 {
        Vec::new()
    } else if u <= DENSE_UNKNOWNS {
        solve_dense(g, &idx, c)?
    } else {
        vec![0.0; u]
    };
    for _ in 0..100_000 {
        if gauss_seidel_sweep(g, &idx, c, &mut x) < 1e-15 {
            break;
        }
    }
    let residual = fixed_point_residual(g, &idx, c, &x);
    if residual > RESIDUAL_TARGET {
        return Err(Error::Numeric {
            message: "pair chain did not reach the residual target".into(),
            residual,
        });
    }

    let mut m = vec![0.0; n * n];
    for a in 0..n {
        m[a * n + a] = 1.0;
    }
    for (i, &(a, b)) in idx.pairs.iter().enumerate() {
        let v = x[i].clamp(0.0, 1.0);
        m[a * n + b] = v;
        m[b * n + a] = v;
    }
    Ok(MeetMatrix {
        n,
        epsilon,
        m,
        residual,
    })
}

/// Sum over neighbor pairs of the current values, split into known mass
/// (meets) and a callback for unknowns.
fn row<F: FnMut(usize, f64)>(
    g: &Graph,
    idx: &PairIndex,
    c: f64,
    a: Vertex,
    b: Vertex,
    mut unknown: F,
) -> f64 {
    let w = c / (g.degree(a) * g.degree(b)) as f64;
    let mut known = 0.0;
    for &a2 in g.neighbors(a) {
        for &b2 in g.neighbors(b) {
            if a2 == b2 {
                known += w;
            } else if let Some(j) = idx.get(a2, b2) {
                unknown(j, w);
            }
        }
    }
    known
}

fn solve_dense(g: &Graph, idx: &PairIndex, c: f64) -> Result<Vec<f64>> {
    let u = idx.pairs.len();
    let mut a = DMatrix::<f64>::identity(u, u);
    let mut rhs = DVector::<f64>::zeros(u);
    for (i, &(p, q)) in idx.pairs.iter().enumerate() {
        rhs[i] = row(g, idx, c, p, q, |j, w| a[(i, j)] -= w);
    }
    let x = a.lu().solve(&rhs).ok_or_else(|| Error::Numeric {
        message: "singular pair system".into(),
        residual: f64::NAN,
    })?;
    Ok(x.iter().copied().collect())
}

fn gauss_seidel_sweep(g: &Graph, idx: &PairIndex, c: f64, x: &mut [f64]) -> f64 {
    let mut change: f64 = 0.0;
    for i in 0..x.len() {
        let (p, q) = idx.pairs[i];
        let mut acc = 0.0;
        let known = row(g, idx, c, p, q, |j, w| acc += w * x[j]);
        let new = known + acc;
        change = change.max((new - x[i]).abs());
        x[i] = new;
    }
    change
}

fn fixed_point_residual(g: &Graph, idx: &PairIndex, c: f64, x: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, &(p, q)) in idx.pairs.iter().enumerate() {
        let mut acc = 0.0;
        let known = row(g, idx, c, p, q, |j, w| acc += w * x[j]);
        worst = worst.max((known + acc - x[i]).abs());
    }
    worst
}

/// Distribution of the simple random walk from `start` after `d` steps.
pub fn walk_distribution(g: &Graph, start: Vertex, d: usize) -> Vec<f64> {
    let mut p = vec![0.0; g.vertex_count()];
    p[start] = 1.0;
    for _ in 0..d {
        let mut next = vec![0.0; p.len()];
        for (v, &mass) in p.iter().enumerate() {
            if mass > 0.0 {
                let share = mass / g.degree(v) as f64;
                for &w in g.neighbors(v) {
                    next[w] += share;
                }
            }
        }
        p = next;
    }
    p
}

/// Limiting probability that the paths at offsets 0 and `d` meet: the later
/// path walks `d` solo steps, then both walk in lockstep.
pub fn pd_exact(g: &Graph, epsilon: f64, d: usize) -> Result<f64> {
    let m = meet_matrix(g, epsilon)?;
    pd_from_matrix(g, &m, d)
}

/// [`pd_exact`] reusing an already solved pair chain.
pub fn pd_from_matrix(g: &Graph, m: &MeetMatrix, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::param("d", "must be positive"));
    }
    let root = g.root();
    let p = walk_distribution(g, root, d);
    let sum: f64 = p
        .iter()
        .enumerate()
        .map(|(w, &pw)| pw * m.get(root, w))
        .sum();
    Ok((1.0 - m.epsilon()).powi(d as i32) * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_finite, Family};

    #[test]
    fn k2_never_meets() {
        let g = build_finite(&Family::Complete { n: 2 }).unwrap();
        let m = meet_matrix(&g, 0.3).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
        assert!((pd_exact(&g, 0.3, 2).unwrap() - 0.49).abs() < 1e-15);
    }

    #[test]
    fn c4_hand_solution() {
        let g = build_finite(&Family::Cycle { n: 4 }).unwrap();
        let m = meet_matrix(&g, 0.5).unwrap();
        assert!((m.get(0, 2) - 1.0 / 7.0).abs() < 1e-14);
        assert_eq!(m.get(0, 1), 0.0);
        assert!((pd_exact(&g, 0.5, 2).unwrap() - 1.0 / 7.0).abs() < 1e-14);
        assert!(m.residual() < RESIDUAL_TARGET);
    }

    #[test]
    fn k3_values() {
        let g = build_finite(&Family::Complete { n: 3 }).unwrap();
        let p1 = pd_exact(&g, 0.5, 1).unwrap();
        let p2 = pd_exact(&g, 0.5, 2).unwrap();
        assert!((p1 - 0.5 / 13.0).abs() < 1e-14, "{p1}");
        assert!((p2 - 1.75 / 13.0).abs() < 1e-14, "{p2}");
    }

    #[test]
    fn iterative_path_agrees_with_dense() {
        // 101 vertices: 5050 unknowns, above the dense limit.
        let g = build_finite(&Family::Cycle { n: 101 }).unwrap();
        let small = build_finite(&Family::Cycle { n: 21 }).unwrap();
        let m = meet_matrix(&g, 0.7).unwrap();
        let s = meet_matrix(&small, 0.7).unwrap();
        // Far from the wrap-around the two cycles look alike.
        assert!((m.get(0, 2) - s.get(0, 2)).abs() < 1e-6);
        assert!(m.residual() < RESIDUAL_TARGET);
    }

    #[test]
    fn walk_distribution_sums_to_one() {
        let g = build_finite(&Family::PerfectTree { k: 2, h: 3 }).unwrap();
        let p = walk_distribution(&g, 0, 5);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
