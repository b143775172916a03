//! Backward paths in the genealogy graph: Monte Carlo sampling of which paths
//! meet, exact small-instance laws, and assembly of the quadruple coincidence
//! probability from path-meeting components.
//!
//! The path born at `(root, t + o)` for offset `o` follows copy events backward
//! in time until a noise event or time 0. Paths that reach the same vertex at
//! the same time share every later decision, so the "met" relation among paths
//! is always an equivalence relation and a sample is summarized by a
//! [`Partition`] of the offsets.

pub(crate) mod chain;
pub mod partition;

use std::collections::BTreeMap;
use std::fmt;

use rand::distr::{Bernoulli, Distribution};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use partition::Partition;

use crate::error::{check_epsilon, Error, Result};
use crate::graph::{Graph, RootedGraph, Walkable};
use crate::rng::stream_rng;

/// Largest number of simultaneous paths.
pub const MAX_PATHS: usize = 16;

/// Replicas handled per parallel work unit.
const CHUNK: usize = 4096;

/// One sample of the coalescing path system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MeetPattern {
    pub offsets: Vec<usize>,
    pub partition: Partition,
    /// Steps each path survived, capped by the horizon.
    pub depths: Vec<usize>,
}

impl MeetPattern {
    pub fn met(&self, i: usize, j: usize) -> bool {
        self.partition.same_block(i, j)
    }

    pub fn met_matrix(&self) -> Vec<Vec<bool>> {
        let k = self.offsets.len();
        (0..k)
            .map(|i| (0..k).map(|j| self.met(i, j)).collect())
            .collect()
    }
}

/// Monte Carlo value with its standard error and a bound on truncation bias.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub replicas: u64,
    pub truncation_bound: f64,
}

impl Estimate {
    /// Mean of `hits` indicators out of `replicas`.
    pub fn from_count(hits: u64, replicas: u64, truncation_bound: f64) -> Self {
        let value = hits as f64 / replicas as f64;
        Estimate {
            value,
            stderr: (value * (1.0 - value) / replicas as f64).sqrt(),
            replicas,
            truncation_bound,
        }
    }

    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            stderr: 0.0,
            replicas: 0,
            truncation_bound: 0.0,
        }
    }

    /// `|value - target|` in units of standard error (infinite when stderr is 0
    /// and the values differ).
    pub fn z_against(&self, target: f64) -> f64 {
        let diff = (self.value - target).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.stderr
        }
    }
}

/// An event over the paths, named by offset values rather than indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PatternEvent {
    /// The paths at the two offsets meet.
    Pair(usize, usize),
    /// All listed paths lie in one cluster.
    All(Vec<usize>),
    /// `0` meets `a`, `b` meets `c`, and `a` does not meet `b`.
    Tilde(usize, usize, usize),
    /// The partition is exactly this one.
    Exactly(Partition),
}

impl fmt::Display for PatternEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        match self {
            PatternEvent::Pair(a, b) => write!(f, "pair({a},{b})"),
            PatternEvent::All(v) => write!(f, "all({})", join(v)),
            PatternEvent::Tilde(a, b, c) => write!(f, "tilde(0,{a}|{b},{c})"),
            PatternEvent::Exactly(p) => write!(f, "exactly{p}"),
        }
    }
}

impl Serialize for PatternEvent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl PatternEvent {
    fn index(offsets: &[usize], o: usize) -> Result<usize> {
        offsets
            .iter()
            .position(|&x| x == o)
            .ok_or_else(|| Error::Domain(format!("offset {o} is not among {offsets:?}")))
    }

    /// Compiles the event into a predicate on partitions over `offsets`.
    fn compile(&self, offsets: &[usize]) -> Result<Box<dyn Fn(&Partition) -> bool + '_>> {
        Ok(match self {
            PatternEvent::Pair(a, b) => {
                let (i, j) = (Self::index(offsets, *a)?, Self::index(offsets, *b)?);
                Box::new(move |p| p.same_block(i, j))
            }
            PatternEvent::All(v) => {
                let idx = v
                    .iter()
                    .map(|&o| Self::index(offsets, o))
                    .collect::<Result<Vec<_>>>()?;
                Box::new(move |p| idx.windows(2).all(|w| p.same_block(w[0], w[1])))
            }
            PatternEvent::Tilde(a, b, c) => {
                let z = Self::index(offsets, 0)?;
                let (i, j, k) = (
                    Self::index(offsets, *a)?,
                    Self::index(offsets, *b)?,
                    Self::index(offsets, *c)?,
                );
                Box::new(move |p| p.same_block(z, i) && p.same_block(j, k) && !p.same_block(i, j))
            }
            PatternEvent::Exactly(q) => {
                if q.len() != offsets.len() {
                    return Err(Error::Domain(format!(
                        "partition over {} paths, offsets have {}",
                        q.len(),
                        offsets.len()
                    )));
                }
                let q = q.clone();
                Box::new(move |p| *p == q)
            }
        })
    }

    /// Pairwise events, `0`-anchored joint events, and for four offsets the
    /// three tilde events.
    pub fn standard(offsets: &[usize]) -> Vec<PatternEvent> {
        let mut events = Vec::new();
        for i in 0..offsets.len() {
            for j in i + 1..offsets.len() {
                events.push(PatternEvent::Pair(offsets[i], offsets[j]));
            }
        }
        let rest = &offsets[1..];
        for i in 0..rest.len() {
            for j in i + 1..rest.len() {
                events.push(PatternEvent::All(vec![0, rest[i], rest[j]]));
            }
        }
        if rest.len() >= 3 {
            events.push(PatternEvent::All(offsets.to_vec()));
        }
        if let [a, b, c] = *rest {
            events.push(PatternEvent::Tilde(a, b, c));
            events.push(PatternEvent::Tilde(b, a, c));
            events.push(PatternEvent::Tilde(c, a, b));
        }
        events
    }
}

pub(crate) fn check_offsets(offsets: &[usize]) -> Result<()> {
    if offsets.first() != Some(&0) {
        return Err(Error::param("offsets", "must start with 0"));
    }
    if offsets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("offsets", "must be strictly increasing"));
    }
    if offsets.len() > MAX_PATHS {
        return Err(Error::Capacity(format!(
            "{} paths (at most {MAX_PATHS})",
            offsets.len()
        )));
    }
    Ok(())
}

/// Exact law of the final partition, with event lookup.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatternDistribution {
    pub offsets: Vec<usize>,
    pub probs: BTreeMap<Partition, f64>,
}

impl PatternDistribution {
    pub fn probability(&self, event: &PatternEvent) -> Result<f64> {
        let pred = event.compile(&self.offsets)?;
        Ok(self
            .probs
            .iter()
            .filter(|(p, _)| pred(p))
            .map(|(_, w)| w)
            .sum())
    }

    /// Probability that fair coins attached to the clusters all agree, i.e.
    /// the limiting coincidence probability of the observations at the offsets.
    pub fn agreement(&self) -> f64 {
        self.probs
            .iter()
            .map(|(p, w)| w * p.agreement_weight())
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }
}

/// Pattern counts from a Monte Carlo run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeetingEstimates {
    pub offsets: Vec<usize>,
    pub replicas: u64,
    pub horizon: usize,
    pub truncation_bound: f64,
    pub counts: BTreeMap<Partition, u64>,
}

impl MeetingEstimates {
    pub fn probability(&self, event: &PatternEvent) -> Result<Estimate> {
        let pred = event.compile(&self.offsets)?;
        let hits = self
            .counts
            .iter()
            .filter(|(p, _)| pred(p))
            .map(|(_, c)| c)
            .sum();
        Ok(Estimate::from_count(
            hits,
            self.replicas,
            self.truncation_bound,
        ))
    }

    pub fn standard_events(&self) -> Result<Vec<(PatternEvent, Estimate)>> {
        PatternEvent::standard(&self.offsets)
            .into_iter()
            .map(|e| self.probability(&e).map(|est| (e, est)))
            .collect()
    }

    /// Empirical coincidence frequency of fair coins on the sampled clusters.
    pub fn agreement(&self) -> f64 {
        let total: f64 = self
            .counts
            .iter()
            .map(|(p, &c)| c as f64 * p.agreement_weight())
            .sum();
        total / self.replicas as f64
    }
}

/// Number of backward levels needed so that `k` paths all terminate before
/// the floor except with probability below `tolerance`.
pub fn horizon_for(epsilon: f64, k: usize, max_offset: usize, tolerance: f64) -> usize {
    if epsilon >= 1.0 {
        return max_offset;
    }
    // Strict inequality k (1-ε)^extra < tolerance.
    let extra = ((tolerance / k as f64).ln() / (1.0 - epsilon).ln()).floor() + 1.0;
    max_offset + extra.max(0.0) as usize
}

fn truncation_bound(epsilon: f64, k: usize, horizon: usize, max_offset: usize) -> f64 {
    k as f64 * (1.0 - epsilon).powi((horizon - max_offset) as i32)
}

/// Samples one pattern. The latest path is born at level 0, the path at
/// offset 0 at level `max_offset`, and the floor (time 0) is at `horizon`.
pub fn sample_meet_pattern<W: Walkable, R: Rng + ?Sized>(
    g: &W,
    epsilon: f64,
    offsets: &[usize],
    horizon: usize,
    rng: &mut R,
) -> Result<MeetPattern> {
    check_epsilon(epsilon)?;
    check_offsets(offsets)?;
    let top = *offsets.last().unwrap();
    if horizon < top {
        return Err(Error::Domain(format!(
            "horizon {horizon} is below the largest offset {top}"
        )));
    }
    let noise = Bernoulli::new(epsilon).map_err(|e| Error::param("epsilon", e.to_string()))?;
    Ok(sample_unchecked(g, &noise, offsets, horizon, rng))
}

fn sample_unchecked<W: Walkable, R: Rng + ?Sized>(
    g: &W,
    noise: &Bernoulli,
    offsets: &[usize],
    horizon: usize,
    rng: &mut R,
) -> MeetPattern {
    const UNBORN: u8 = u8::MAX;
    let k = offsets.len();
    let top = offsets[k - 1];
    let mut labels = vec![UNBORN; k];
    let mut end = vec![horizon; k];
    let mut alive: Vec<(W::Node, u8)> = Vec::with_capacity(k);
    let mut next_label = 0u8;

    for level in 0..=horizon {
        if level <= top {
            for i in (0..k).filter(|&i| top - offsets[i] == level) {
                let root = g.start();
                match alive.iter().find(|(v, _)| *v == root) {
                    Some(&(_, block)) => labels[i] = block,
                    None => {
                        labels[i] = next_label;
                        alive.push((root, next_label));
                        next_label += 1;
                    }
                }
            }
        }
        if level == horizon {
            break;
        }
        // One decision per occupied node: the shared randomness field.
        let mut j = 0;
        while j < alive.len() {
            if noise.sample(rng) {
                let (_, block) = alive.swap_remove(j);
                for i in 0..k {
                    if labels[i] == block {
                        end[i] = level;
                    }
                }
            } else {
                let deg = g.degree_of(&alive[j].0);
                alive[j].0 = g.step(&alive[j].0, rng.random_range(0..deg));
                j += 1;
            }
        }
        // Merge clusters that landed on the same node.
        let mut a = 0;
        while a < alive.len() {
            let mut b = a + 1;
            while b < alive.len() {
                if alive[b].0 == alive[a].0 {
                    let (_, gone) = alive.swap_remove(b);
                    let keep = alive[a].1;
                    for l in labels.iter_mut().filter(|l| **l == gone) {
                        *l = keep;
                    }
                } else {
                    b += 1;
                }
            }
            a += 1;
        }
    }

    let depths = (0..k).map(|i| end[i] - (top - offsets[i])).collect();
    MeetPattern {
        offsets: offsets.to_vec(),
        partition: Partition::from_labels(&labels),
        depths,
    }
}

fn run_replicas<W: Walkable>(
    g: &W,
    epsilon: f64,
    offsets: &[usize],
    horizon: usize,
    replicas: u64,
    seed: u64,
) -> BTreeMap<Partition, u64> {
    let noise = Bernoulli::new(epsilon).expect("validated epsilon");
    let chunks = replicas.div_ceil(CHUNK as u64);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = BTreeMap::new();
            let lo = c * CHUNK as u64;
            let hi = (lo + CHUNK as u64).min(replicas);
            for r in lo..hi {
                let mut rng = stream_rng(seed, r);
                let p = sample_unchecked(g, &noise, offsets, horizon, &mut rng);
                *counts.entry(p.partition).or_insert(0u64) += 1;
            }
            counts
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (p, c) in b {
                *a.entry(p).or_insert(0) += c;
            }
            a
        })
}

/// Monte Carlo pattern counts. Replica `r` uses stream `r` of `seed`, and counts
/// are merged by integer addition, so results do not depend on thread count.
pub fn estimate_meeting_probs(
    g: &RootedGraph,
    epsilon: f64,
    offsets: &[usize],
    replicas: u64,
    tolerance: f64,
    seed: u64,
) -> Result<MeetingEstimates> {
    check_epsilon(epsilon)?;
    check_offsets(offsets)?;
    if replicas == 0 {
        return Err(Error::param("replicas", "must be at least 1"));
    }
    if !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(Error::param(
            "tolerance",
            format!("{tolerance} is not in (0, 1)"),
        ));
    }
    let k = offsets.len();
    let top = *offsets.last().unwrap();
    let horizon = horizon_for(epsilon, k, top, tolerance);
    let counts = match g {
        RootedGraph::Finite(g) => run_replicas(g, epsilon, offsets, horizon, replicas, seed),
        RootedGraph::Lattice(l) => run_replicas(l, epsilon, offsets, horizon, replicas, seed),
    };
    Ok(MeetingEstimates {
        offsets: offsets.to_vec(),
        replicas,
        horizon,
        truncation_bound: if epsilon >= 1.0 {
            0.0
        } else {
            truncation_bound(epsilon, k, horizon, top)
        },
        counts,
    })
}

/// Monte Carlo counts for the finite-time law where the offset-0 path starts
/// at time `t`; the counterpart of [`exact_enumeration_probs`].
pub fn estimate_meeting_probs_at(
    g: &Graph,
    epsilon: f64,
    offsets: &[usize],
    t: usize,
    replicas: u64,
    seed: u64,
) -> Result<MeetingEstimates> {
    check_epsilon(epsilon)?;
    check_offsets(offsets)?;
    if replicas == 0 {
        return Err(Error::param("replicas", "must be at least 1"));
    }
    let horizon = t + offsets.last().unwrap();
    Ok(MeetingEstimates {
        offsets: offsets.to_vec(),
        replicas,
        horizon,
        truncation_bound: 0.0,
        counts: run_replicas(g, epsilon, offsets, horizon, replicas, seed),
    })
}

/// Estimates the two-step return probability of the simple random walk from
/// the root, via terminable walks rescaled by `(1-ε)^-2`.
pub fn estimate_a2(g: &Graph, epsilon: f64, replicas: u64, seed: u64) -> Result<Estimate> {
    check_epsilon(epsilon)?;
    if epsilon >= 1.0 {
        return Err(Error::param(
            "epsilon",
            "must be below 1 (no walk survives a step)",
        ));
    }
    if replicas == 0 {
        return Err(Error::param("replicas", "must be at least 1"));
    }
    let noise = Bernoulli::new(epsilon).expect("validated epsilon");
    let chunks = replicas.div_ceil(CHUNK as u64);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK as u64;
            let hi = (lo + CHUNK as u64).min(replicas);
            let mut hits = 0;
            for r in lo..hi {
                let mut rng = stream_rng(seed, r);
                let mut v = g.root();
                let mut survived = true;
                for _ in 0..2 {
                    if noise.sample(&mut rng) {
                        survived = false;
                        break;
                    }
                    v = g.neighbors(v)[rng.random_range(0..g.degree(v))];
                }
                if survived && v == g.root() {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let raw = Estimate::from_count(hits, replicas, 0.0);
    let scale = (1.0 - epsilon).powi(2);
    Ok(Estimate {
        value: (raw.value / scale).clamp(0.0, 1.0),
        stderr: raw.stderr / scale,
        replicas,
        truncation_bound: 0.0,
    })
}

/// Largest graph accepted by [`exact_enumeration_probs`].
pub const ENUMERATION_MAX_VERTICES: usize = 4;
/// Largest `t + max offset` accepted by [`exact_enumeration_probs`].
pub const ENUMERATION_MAX_LEVELS: usize = 12;

/// Exact finite-time law of the partition when the offset-0 path starts at
/// time `t`.
pub fn exact_enumeration_probs(
    g: &Graph,
    epsilon: f64,
    offsets: &[usize],
    t: usize,
) -> Result<PatternDistribution> {
    check_epsilon(epsilon)?;
    check_offsets(offsets)?;
    if g.vertex_count() > ENUMERATION_MAX_VERTICES {
        return Err(Error::Capacity(format!(
            "{} vertices (exact enumeration allows at most {ENUMERATION_MAX_VERTICES})",
            g.vertex_count()
        )));
    }
    let levels = t + offsets.last().unwrap();
    if levels > ENUMERATION_MAX_LEVELS {
        return Err(Error::Capacity(format!(
            "t + max offset = {levels} (exact enumeration allows at most {ENUMERATION_MAX_LEVELS})"
        )));
    }
    Ok(PatternDistribution {
        offsets: offsets.to_vec(),
        probs: chain::finite_time(g, epsilon, offsets, t)?,
    })
}

/// Exact limiting law of the partition (every path runs until it terminates).
pub fn limit_distribution(
    g: &Graph,
    epsilon: f64,
    offsets: &[usize],
) -> Result<PatternDistribution> {
    check_epsilon(epsilon)?;
    check_offsets(offsets)?;
    Ok(PatternDistribution {
        offsets: offsets.to_vec(),
        probs: chain::limit(g, epsilon, offsets)?,
    })
}

/// Components of the quadruple coincidence probability for offsets
/// `(0, d1, d2, d3)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct QComponents {
    /// Limiting `p_d` keyed by `d`.
    pub pairwise: BTreeMap<usize, f64>,
    /// All four paths meet.
    pub triple: f64,
    /// `{0,d1}{d2,d3}`, `{0,d2}{d1,d3}`, `{0,d3}{d1,d2}`.
    pub tilde: [f64; 3],
}

/// `q = (1 + six pairwise + three tilde + triple) / 8`.
pub fn q_from_components(c: &QComponents, d1: usize, d2: usize, d3: usize) -> Result<f64> {
    if !(0 < d1 && d1 < d2 && d2 < d3) {
        return Err(Error::Domain(format!(
            "need 0 < d1 < d2 < d3, got ({d1}, {d2}, {d3})"
        )));
    }
    let check = |name: String, v: f64| {
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(Error::Domain(format!("{name} = {v} is not a probability")))
        }
    };
    let mut sum = 1.0;
    for d in [d1, d2, d3, d2 - d1, d3 - d1, d3 - d2] {
        let v = c
            .pairwise
            .get(&d)
            .ok_or_else(|| Error::Domain(format!("missing component p_{d}")))?;
        sum += check(format!("p_{d}"), *v)?;
    }
    for (i, &v) in c.tilde.iter().enumerate() {
        sum += check(format!("tilde[{i}]"), v)?;
    }
    sum += check("triple".into(), c.triple)?;
    Ok(sum / 8.0)
}

impl QComponents {
    /// Reads the components off an exact law over offsets `(0, d1, d2, d3)`.
    pub fn from_distribution(
        dist: &PatternDistribution,
        pairwise: BTreeMap<usize, f64>,
    ) -> Result<Self> {
        let [0, d1, d2, d3] = dist.offsets[..] else {
            return Err(Error::Domain(format!(
                "need four offsets starting at 0, got {:?}",
                dist.offsets
            )));
        };
        Ok(QComponents {
            pairwise,
            triple: dist.probability(&PatternEvent::All(vec![0, d1, d2, d3]))?,
            tilde: [
                dist.probability(&PatternEvent::Tilde(d1, d2, d3))?,
                dist.probability(&PatternEvent::Tilde(d2, d1, d3))?,
                dist.probability(&PatternEvent::Tilde(d3, d1, d2))?,
            ],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build, build_finite, Family};

    fn finite(f: Family) -> RootedGraph {
        build(&f).unwrap()
    }

    #[test]
    fn eps_one_gives_singletons() {
        let g = finite(Family::Cycle { n: 5 });
        let est = estimate_meeting_probs(&g, 1.0, &[0, 1, 3], 1000, 1e-6, 3).unwrap();
        assert_eq!(est.counts.len(), 1);
        assert_eq!(est.counts[&Partition::singletons(3)], 1000);
    }

    #[test]
    fn bipartite_odd_offsets_never_meet() {
        let g = finite(Family::CompleteBipartite {
            n: 2,
            m: 3,
            side: crate::graph::Side::First,
        });
        let est = estimate_meeting_probs(&g, 0.3, &[0, 1], 20_000, 1e-6, 9).unwrap();
        assert_eq!(
            est.probability(&PatternEvent::Pair(0, 1)).unwrap().value,
            0.0
        );
    }

    #[test]
    fn k2_offset_two() {
        let g = finite(Family::Complete { n: 2 });
        let est = estimate_meeting_probs(&g, 0.5, &[0, 2], 100_000, 1e-9, 1).unwrap();
        let p = est.probability(&PatternEvent::Pair(0, 2)).unwrap();
        assert!(p.z_against(0.25) < 3.0, "{p:?}");
        assert!(p.truncation_bound < 1e-9);
    }

    #[test]
    fn c4_offset_two() {
        let g = finite(Family::Cycle { n: 4 });
        let est = estimate_meeting_probs(&g, 0.5, &[0, 2], 100_000, 1e-9, 2).unwrap();
        let p = est.probability(&PatternEvent::Pair(0, 2)).unwrap();
        assert!(p.z_against(1.0 / 7.0) < 3.0, "{p:?}");
    }

    #[test]
    fn horizon_rule() {
        assert_eq!(horizon_for(0.5, 2, 2, 0.25), 6);
        assert_eq!(horizon_for(0.5, 2, 2, 0.3), 5);
        assert_eq!(horizon_for(1.0, 3, 4, 1e-9), 4);
        assert!(truncation_bound(0.5, 2, 6, 2) < 0.25);
    }

    #[test]
    fn horizon_below_offset_is_rejected() {
        let g = build_finite(&Family::Complete { n: 3 }).unwrap();
        let mut rng = stream_rng(0, 0);
        assert!(matches!(
            sample_meet_pattern(&g, 0.5, &[0, 4], 3, &mut rng),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn depths_are_bounded() {
        let g = build_finite(&Family::Cycle { n: 5 }).unwrap();
        let mut rng = stream_rng(5, 0);
        for _ in 0..200 {
            let p = sample_meet_pattern(&g, 0.2, &[0, 1, 4], 10, &mut rng).unwrap();
            assert!(p.depths[0] <= 6 && p.depths[1] <= 7 && p.depths[2] <= 10);
            let m = p.met_matrix();
            for (i, row) in m.iter().enumerate() {
                assert!(row[i]);
            }
        }
    }

    #[test]
    fn path_a2() {
        let mid = build_finite(&Family::Path { n: 3 })
            .unwrap()
            .with_root(1)
            .unwrap();
        let end = build_finite(&Family::Path { n: 3 }).unwrap();
        let a = estimate_a2(&mid, 0.2, 50_000, 4).unwrap();
        let b = estimate_a2(&end, 0.2, 50_000, 4).unwrap();
        assert!((a.value - 1.0).abs() < 4.0 * a.stderr + 1e-12, "{a:?}");
        assert!(b.z_against(0.5) < 4.0, "{b:?}");
    }

    #[test]
    fn q_extremes() {
        let mut c = QComponents::default();
        for d in [1, 2, 3] {
            c.pairwise.insert(d, 0.0);
        }
        assert_eq!(q_from_components(&c, 1, 2, 3).unwrap(), 0.125);
        for d in [1, 2, 3] {
            c.pairwise.insert(d, 1.0);
        }
        c.triple = 1.0;
        assert_eq!(q_from_components(&c, 1, 2, 3).unwrap(), 1.0);
        c.pairwise.remove(&2);
        let err = q_from_components(&c, 1, 2, 3).unwrap_err();
        assert!(err.to_string().contains("p_2"));
    }

    #[test]
    fn partition_sum_matches_q() {
        let g = build_finite(&Family::Cycle { n: 3 }).unwrap();
        let dist = limit_distribution(&g, 0.4, &[0, 1, 2, 3]).unwrap();
        let mut pairwise = BTreeMap::new();
        for d in [1, 2, 3] {
            pairwise.insert(
                d,
                limit_distribution(&g, 0.4, &[0, d])
                    .unwrap()
                    .probability(&PatternEvent::Pair(0, d))
                    .unwrap(),
            );
        }
        let c = QComponents::from_distribution(&dist, pairwise).unwrap();
        let q = q_from_components(&c, 1, 2, 3).unwrap();
        assert!(
            (q - dist.agreement()).abs() < 1e-10,
            "{q} vs {}",
            dist.agreement()
        );
    }
}
