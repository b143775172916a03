use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use super::{compare_mode, Decision, DEFAULT_SIGNIFICANCE};
use crate::error::{check_epsilon, Error, Result};
use crate::genealogy::{q_from_components, QComponents};
use crate::graph::{build_finite, Family, FamilySpec, Side};
use crate::oracles::{
    bipartite_p, cubic_coeffs, joint_exact_small, meet_matrix, pd_from_matrix, Cubic,
};
use crate::stats::RepMode;

/// A fraction `num / den` in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rational {
    num: u64,
    den: u64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::param("alpha", "denominator is zero"));
        }
        let g = gcd(num, den).max(1);
        Ok(Rational {
            num: num / g,
            den: den / g,
        })
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param("alpha", format!("`{s}` is not a fraction a/b"));
        let (a, b) = s.split_once('/').ok_or_else(bad)?;
        Rational::new(
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        )
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `(n1, m1, n2, m2)` with `n2 = (1-α) n1`, `m2 = (1-α) n2`, `m1 = (1-α) m2`.
pub fn bipartite_quadruple(alpha: Rational, n1: u64) -> Result<(u64, u64, u64, u64)> {
    if alpha.num == 0 || alpha.num >= alpha.den {
        return Err(Error::param("alpha", format!("{alpha} is not in (0, 1)")));
    }
    let b3 = alpha
        .den
        .checked_pow(3)
        .ok_or_else(|| Error::Capacity(format!("denominator {} is too large", alpha.den)))?;
    if n1 == 0 || !n1.is_multiple_of(b3) {
        return Err(Error::Domain(format!(
            "n1 = {n1} must be a positive multiple of {b3}"
        )));
    }
    let c = alpha.den - alpha.num;
    let shrink = |v: u64| v / alpha.den * c;
    let n2 = shrink(n1);
    let m2 = shrink(n2);
    let m1 = shrink(m2);
    debug_assert_eq!(m1 * n1, m2 * n2);
    debug_assert_eq!((m2 - m1) * alpha.den * alpha.den, (n1 - n2) * c * c);
    Ok((n1, m1, n2, m2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingStatus {
    Found,
    /// No strict sign change on the open interval.
    None,
    /// The two curves coincide for every noise level.
    DegenerateEqual,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Crossing {
    pub status: CrossingStatus,
    pub eps_star: Option<f64>,
    /// `|p(n1,m1,ε*) - p(n2,m2,ε*)|`.
    pub gap: Option<f64>,
    /// `|A x³ + B x² + C x + D|` at `x = (1-ε*)²`.
    pub cubic_residual: Option<f64>,
    pub cubic: Cubic,
}

/// Grid intervals scanned for a sign change before bisection.
pub const CROSSING_GRID: usize = 1000;

/// Looks for `ε ∈ (0,1)` where `K_{n1,m1}` and `K_{n2,m2}` (both observed in
/// the first part) have equal `p_2`. `ε = 0` is excluded: every pair ties there.
pub fn find_crossing(n1: usize, m1: usize, n2: usize, m2: usize, tol: f64) -> Result<Crossing> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    for (name, v) in [("n1", n1), ("m1", m1), ("n2", n2), ("m2", m2)] {
        if v == 0 {
            return Err(Error::param(name, "must be at least 1"));
        }
    }
    let cubic = cubic_coeffs(n1, m1, n2, m2);
    let none = |status| Crossing {
        status,
        eps_star: None,
        gap: None,
        cubic_residual: None,
        cubic,
    };
    if cubic.is_zero() {
        return Ok(none(CrossingStatus::DegenerateEqual));
    }
    let g =
        |eps: f64| -> f64 { bipartite_p(n1, m1, eps).unwrap() - bipartite_p(n2, m2, eps).unwrap() };

    let mut prev = (1.0 / CROSSING_GRID as f64, g(1.0 / CROSSING_GRID as f64));
    let mut bracket = None;
    if prev.1 == 0.0 {
        bracket = Some((prev.0, prev.0));
    }
    for i in 2..CROSSING_GRID {
        if bracket.is_some() {
            break;
        }
        let e = i as f64 / CROSSING_GRID as f64;
        let v = g(e);
        if v == 0.0 {
            bracket = Some((e, e));
        } else if v * prev.1 < 0.0 {
            bracket = Some((prev.0, e));
        }
        prev = (e, v);
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Ok(none(CrossingStatus::None));
    };
    let sign_lo = g(lo).signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid);
        if v == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if v.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eps = if g(lo).abs() <= g(hi).abs() { lo } else { hi };
    let gap = g(eps).abs();
    if gap >= tol {
        return Err(Error::Numeric {
            message: format!("bisection stalled at ε = {eps}"),
            residual: gap,
        });
    }
    let x = (1.0 - eps).powi(2);
    Ok(Crossing {
        status: CrossingStatus::Found,
        eps_star: Some(eps),
        gap: Some(gap),
        cubic_residual: Some(cubic.eval(x).abs()),
        cubic,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum QuadMode {
    ExactSmall,
    MonteCarlo { t_budget: u64, seed: u64 },
}

/// One rooted graph `K_{n,m}` observed in the part of size `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadSide {
    pub n: usize,
    pub m: usize,
    /// `p_2, p_4, p_6` from the pair chain.
    pub pairwise: [f64; 3],
    /// Agreement probability of the joint meeting law, summed over partitions.
    pub q_direct: f64,
    /// The same quantity assembled from pairwise, tilde and triple components.
    pub q_formula: f64,
    pub components: QComponents,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadReport {
    pub eps_star: f64,
    pub mode: QuadMode,
    pub first: QuadSide,
    pub second: QuadSide,
    pub q_difference: f64,
    pub max_pairwise_gap: f64,
    /// Every `p_2, p_4, p_6` agrees across the two graphs to `1e-9`.
    pub pairwise_tie: bool,
    /// Both routes to `q` agree to `1e-9` on both graphs.
    pub consistent: bool,
    pub decision: Option<Decision>,
}

const QUAD_OFFSETS: [usize; 4] = [0, 2, 4, 6];

fn quad_side(n: usize, m: usize, eps: f64) -> Result<QuadSide> {
    let g = build_finite(&Family::CompleteBipartite {
        n,
        m,
        side: Side::First,
    })?;
    let joint = joint_exact_small(&g, eps, &QUAD_OFFSETS)?;
    let meet = meet_matrix(&g, eps)?;
    let mut pairwise = BTreeMap::new();
    for d in [2, 4, 6] {
        pairwise.insert(d, pd_from_matrix(&g, &meet, d)?);
    }
    let components = QComponents::from_distribution(&joint, pairwise.clone())?;
    Ok(QuadSide {
        n,
        m,
        pairwise: [pairwise[&2], pairwise[&4], pairwise[&6]],
        q_direct: joint.agreement(),
        q_formula: q_from_components(&components, 2, 4, 6)?,
        components,
    })
}

/// Quadruple coincidence probabilities `q_{2,4,6}` of two complete bipartite
/// graphs at a noise level where their `p_2` agree.
pub fn quadruple_statistic_experiment(
    n1: usize,
    m1: usize,
    n2: usize,
    m2: usize,
    eps_star: f64,
    mode: QuadMode,
) -> Result<QuadReport> {
    check_epsilon(eps_star)?;
    let first = quad_side(n1, m1, eps_star)?;
    let second = quad_side(n2, m2, eps_star)?;
    let max_pairwise_gap = first
        .pairwise
        .iter()
        .zip(&second.pairwise)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let consistent = (first.q_direct - first.q_formula).abs() <= 1e-9
        && (second.q_direct - second.q_formula).abs() <= 1e-9;
    let decision = match mode {
        QuadMode::ExactSmall => None,
        QuadMode::MonteCarlo { t_budget, seed } => {
            let spec = |n, m| {
                FamilySpec::new(
                    Family::CompleteBipartite {
                        n,
                        m,
                        side: Side::First,
                    },
                    eps_star,
                )
            };
            Some(compare_mode(
                &spec(n1, m1)?,
                &spec(n2, m2)?,
                RepMode::Quadruple {
                    d1: 2,
                    d2: 4,
                    d3: 6,
                },
                t_budget,
                DEFAULT_SIGNIFICANCE,
                seed,
            )?)
        }
    };
    Ok(QuadReport {
        eps_star,
        mode,
        q_difference: first.q_direct - second.q_direct,
        max_pairwise_gap,
        pairwise_tie: max_pairwise_gap <= 1e-9,
        consistent,
        first,
        second,
        decision,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadruple_examples() {
        assert_eq!(
            bipartite_quadruple(Rational::new(1, 2).unwrap(), 8).unwrap(),
            (8, 1, 4, 2)
        );
        assert_eq!(
            bipartite_quadruple(Rational::new(1, 4).unwrap(), 64).unwrap(),
            (64, 27, 48, 36)
        );
        let err = bipartite_quadruple(Rational::new(1, 4).unwrap(), 60).unwrap_err();
        assert!(err.to_string().contains("64"), "{err}");
        assert_eq!(Rational::new(2, 8).unwrap(), "1/4".parse().unwrap());
    }

    #[test]
    fn crossing_three_one_two_two() {
        let c = find_crossing(3, 1, 2, 2, 1e-12).unwrap();
        assert_eq!(c.status, CrossingStatus::Found);
        let eps = c.eps_star.unwrap();
        assert!((eps - (1.0 - 0.5f64.sqrt())).abs() < 1e-9, "{eps}");
        assert!(c.cubic_residual.unwrap() < 1e-9 * c.cubic.max_abs());
    }

    #[test]
    fn identical_pairs_are_degenerate() {
        let c = find_crossing(4, 3, 4, 3, 1e-12).unwrap();
        assert_eq!(c.status, CrossingStatus::DegenerateEqual);
        assert!(c.eps_star.is_none());
    }

    #[test]
    fn self_comparison_has_zero_q_difference() {
        let r = quadruple_statistic_experiment(2, 2, 2, 2, 0.3, QuadMode::ExactSmall).unwrap();
        assert_eq!(r.q_difference, 0.0);
        assert!(r.pairwise_tie && r.consistent);
    }
}
