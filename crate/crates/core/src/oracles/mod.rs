//! Exact meeting probabilities: the lockstep pair chain, closed forms for
//! complete, complete bipartite and perfect tree graphs, the inverse-degree
//! two-step return probability, and the lattice two-step value.

mod lattice;
mod meet;

use serde::Serialize;

pub use lattice::{lattice_p2, LatticeP2, LATTICE_STEP_CAP};
pub use meet::{
    meet_matrix, pd_exact, pd_from_matrix, walk_distribution, MeetMatrix, DENSE_UNKNOWNS,
    MEET_MAX_VERTICES, RESIDUAL_TARGET,
};

use crate::error::{check_epsilon, Error, Result};
use crate::genealogy::{check_offsets, limit_distribution, PatternDistribution};
use crate::graph::{build_finite, Family, Graph, Vertex};

/// `(p1, p2)` on the complete graph `K_n`.
pub fn closed_forms_complete(n: usize, epsilon: f64) -> Result<(f64, f64)> {
    check_epsilon(epsilon)?;
    if n < 2 {
        return Err(Error::Domain(format!(
            "complete graph needs n >= 2, got {n}"
        )));
    }
    let s = 1.0 - epsilon;
    let nf = n as f64;
    let den = (nf - 1.0).powi(2) - s * s * (nf * nf - 3.0 * nf + 3.0);
    let p1 = s.powi(3) * (nf - 2.0) / den;
    let p2 = s * s / (nf - 1.0) + s.powi(4) * (nf - 2.0).powi(2) / ((nf - 1.0) * den);
    Ok((p1, p2))
}

/// `p_2` of `K_{n,m}` observed in the part of size `n`, as a function of
/// `x = (1-ε)^2`.
pub fn bipartite_p_at(n: usize, m: usize, x: f64) -> f64 {
    if n == 1 {
        // Every two-step walk from the lone vertex returns to it.
        return x;
    }
    let (n, m) = (n as f64, m as f64);
    x * (m + (n - 1.0) * x) / (n * m - (n - 1.0) * (m - 1.0) * x * x)
}

/// `p_2` of `K_{n,m}` observed in the part of size `n`.
pub fn bipartite_p(n: usize, m: usize, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_parts(n, m)?;
    Ok(bipartite_p_at(n, m, (1.0 - epsilon).powi(2)))
}

fn check_parts(n: usize, m: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::Domain(
            "bipartite part size n must be at least 1".into(),
        ));
    }
    if m < 1 {
        return Err(Error::Domain(
            "bipartite part size m must be at least 1".into(),
        ));
    }
    Ok(())
}

/// `p_d` of `K_{n,m}` observed in the part of size `n`: zero for odd `d`,
/// `(1-ε)^(d-2) p_2` for even `d`.
pub fn closed_form_bipartite(n: usize, m: usize, epsilon: f64, d: usize) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_parts(n, m)?;
    if d == 0 {
        return Err(Error::param("d", "must be positive"));
    }
    if d % 2 == 1 {
        return Ok(0.0);
    }
    Ok((1.0 - epsilon).powi(d as i32 - 2) * bipartite_p_at(n, m, (1.0 - epsilon).powi(2)))
}

/// Integer coefficients of the cubic whose roots `x = (1-ε)^2` are exactly the
/// noise levels at which `K_{n1,m1}` and `K_{n2,m2}` have equal `p_2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Cubic {
    pub a: i128,
    pub b: i128,
    pub c: i128,
    pub d: i128,
}

impl Cubic {
    pub fn eval(&self, x: f64) -> f64 {
        ((self.a as f64 * x + self.b as f64) * x + self.c as f64) * x + self.d as f64
    }

    pub fn max_abs(&self) -> f64 {
        [self.a, self.b, self.c, self.d]
            .iter()
            .map(|v| v.abs())
            .max()
            .unwrap_or(0) as f64
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0 && self.c == 0 && self.d == 0
    }
}

pub fn cubic_coeffs(n1: usize, m1: usize, n2: usize, m2: usize) -> Cubic {
    let (n1, m1, n2, m2) = (n1 as i128, m1 as i128, n2 as i128, m2 as i128);
    Cubic {
        a: (n1 - 1) * (n2 - 1) * (m1 - m2),
        b: m2 * (n1 - 1) * (m1 - 1) - m1 * (n2 - 1) * (m2 - 1),
        c: (n1 - 1) * m2 * n2 - (n2 - 1) * m1 * n1,
        d: m1 * m2 * (n2 - n1),
    }
}

/// Two-step return probability of the simple random walk from the root.
pub fn a2_formula(g: &Graph) -> f64 {
    a2_at(g, g.root())
}

pub fn a2_at(g: &Graph, u: Vertex) -> f64 {
    let inv: f64 = g
        .neighbors(u)
        .iter()
        .map(|&v| 1.0 / g.degree(v) as f64)
        .sum();
    inv / g.degree(u) as f64
}

/// `p_2` of a perfect `k`-ary tree observed at its root, assembled from the
/// first two steps of the later path, alongside the pair-chain value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TreeP2 {
    /// `(1-ε)^2 (1/(k+1) + k/(k+1) f)` for `h >= 2`, `(1-ε)^2` for `h = 1`.
    pub p2: f64,
    /// Meeting probability of walkers started at the root and at a
    /// grandchild; absent for `h = 1`, where the later path always returns.
    pub f: Option<f64>,
    /// `pd_exact(tree, ε, 2)`.
    pub exact: f64,
    pub discrepancy: f64,
}

pub fn tree_p2(k: usize, h: usize, epsilon: f64) -> Result<TreeP2> {
    check_epsilon(epsilon)?;
    let family = Family::PerfectTree { k, h };
    family.validate()?;
    let size = family.vertex_count().unwrap_or(usize::MAX);
    if size > MEET_MAX_VERTICES {
        return Err(Error::Capacity(format!(
            "perfect tree k={k}, h={h} has {size} vertices (at most {MEET_MAX_VERTICES})"
        )));
    }
    let g = build_finite(&family)?;
    let m = meet_matrix(&g, epsilon)?;
    let exact = pd_from_matrix(&g, &m, 2)?;
    let s2 = (1.0 - epsilon).powi(2);
    let (p2, f) = if h == 1 {
        (s2, None)
    } else {
        // Vertex 1 is a child of the root and k + 1 is its first child.
        let f = m.get(0, k + 1);
        let kf = k as f64;
        (s2 * (1.0 / (kf + 1.0) + kf / (kf + 1.0) * f), Some(f))
    };
    Ok(TreeP2 {
        p2,
        f,
        exact,
        discrepancy: (p2 - exact).abs(),
    })
}

/// Largest number of paths accepted by [`joint_exact_small`].
pub const JOINT_MAX_PATHS: usize = 4;

/// Exact limiting law of the meeting partition for up to four paths, from the
/// absorbing chain on cluster positions.
pub fn joint_exact_small(
    g: &Graph,
    epsilon: f64,
    offsets: &[usize],
) -> Result<PatternDistribution> {
    check_offsets(offsets)?;
    if offsets.len() > JOINT_MAX_PATHS {
        return Err(Error::Capacity(format!(
            "{} paths (exact joint law allows at most {JOINT_MAX_PATHS})",
            offsets.len()
        )));
    }
    limit_distribution(g, epsilon, offsets)
}
