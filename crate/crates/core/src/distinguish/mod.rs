//! Two-graph experiments: a sequential z-test on simulated traces, noise
//! sweeps of exact meeting probabilities, the bipartite crossing machinery and
//! the random-graph two-step return experiment.

mod bipartite;
mod random;
mod sweep;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

pub use bipartite::{
    bipartite_quadruple, find_crossing, quadruple_statistic_experiment, Crossing, CrossingStatus,
    QuadMode, QuadReport, QuadSide, Rational,
};
pub use random::{random_graph_a2_experiment, A2Report};
pub use sweep::{exact_pd, grid_range, sweep_eps, McSettings, Source, Sweep, SweepRow};

use crate::error::{Error, Result};
use crate::graph::{build_finite, FamilySpec, Graph};
use crate::rng::{mix, tag_of};
use crate::sim::Simulator;
use crate::stats::{repetition_stat, RepMode, RepStatResult};

pub const DEFAULT_SIGNIFICANCE: f64 = 0.01;

/// First checkpoint of the doubling schedule.
pub const INITIAL_BUDGET: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    DistinctFirstGreater,
    DistinctSecondGreater,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decision {
    pub verdict: Verdict,
    pub statistic: RepMode,
    pub z_score: f64,
    pub significance: f64,
    pub critical: f64,
    /// Trace length `t` simulated per side.
    pub samples_used: u64,
    pub first: RepStatResult,
    pub second: RepStatResult,
    pub seeds: [u64; 2],
}

/// Two-sided standard normal critical value.
pub fn critical_value(significance: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - significance / 2.0)
}

/// Seed for one side, derived from the run seed and the side's descriptor so
/// that swapping the inputs swaps the traces.
fn side_seeds(a: &FamilySpec, b: &FamilySpec, seed: u64) -> [u64; 2] {
    let da = format!("{}@{}", a.family, a.epsilon);
    let db = format!("{}@{}", b.family, b.epsilon);
    let sa = mix(seed, tag_of(&da));
    let sb = mix(seed, tag_of(&db));
    if sa == sb {
        // Identical descriptors still get independent traces.
        [sa, mix(sb, tag_of("second"))]
    } else {
        [sa, sb]
    }
}

fn finite_of(spec: &FamilySpec, which: &'static str) -> Result<Graph> {
    spec.validate()?;
    build_finite(&spec.family).map_err(|e| match e {
        Error::Unsupported { reason, .. } => Error::Unsupported {
            what: which,
            reason,
        },
        other => other,
    })
}

/// Simulates both rooted graphs on a doubling schedule up to `t_budget` and
/// tests equality of the chosen repetition statistic.
pub fn compare(
    a: &FamilySpec,
    b: &FamilySpec,
    d: usize,
    t_budget: u64,
    significance: f64,
    seed: u64,
) -> Result<Decision> {
    compare_mode(a, b, RepMode::Plain { d }, t_budget, significance, seed)
}

pub fn compare_mode(
    a: &FamilySpec,
    b: &FamilySpec,
    mode: RepMode,
    t_budget: u64,
    significance: f64,
    seed: u64,
) -> Result<Decision> {
    if !(significance > 0.0 && significance <= 0.1) {
        return Err(Error::param(
            "significance",
            format!("{significance} is not in (0, 0.1]"),
        ));
    }
    if t_budget < 2 {
        return Err(Error::param("t", "budget must be at least 2"));
    }
    let ga = finite_of(a, "first graph")?;
    let gb = finite_of(b, "second graph")?;
    let seeds = side_seeds(a, b, seed);
    let mut sa = Simulator::new(&ga, a.epsilon, seeds[0])?;
    let mut sb = Simulator::new(&gb, b.epsilon, seeds[1])?;
    let critical = critical_value(significance);

    let mut target = t_budget.min(INITIAL_BUDGET);
    loop {
        let (ra, rb) = rayon::join(
            || sa.advance(target - sa.time()),
            || sb.advance(target - sb.time()),
        );
        ra?;
        rb?;
        let first = repetition_stat(&sa.trace(), mode)?;
        let second = repetition_stat(&sb.trace(), mode)?;
        let se = (first.batch_stderr.powi(2) + second.batch_stderr.powi(2)).sqrt();
        let diff = first.value - second.value;
        let z = if diff == 0.0 { 0.0 } else { diff / se };
        let done = target >= t_budget || z.abs() >= 2.0 * critical;
        if done {
            let verdict = if z.abs() >= critical && z > 0.0 {
                Verdict::DistinctFirstGreater
            } else if z.abs() >= critical {
                Verdict::DistinctSecondGreater
            } else {
                Verdict::Undecided
            };
            return Ok(Decision {
                verdict,
                statistic: mode,
                z_score: z,
                significance,
                critical,
                samples_used: target,
                first,
                second,
                seeds,
            });
        }
        target = target.saturating_mul(2).min(t_budget);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Family;

    #[test]
    fn critical_values() {
        assert!((critical_value(0.05) - 1.959_963_984_540_054).abs() < 1e-9);
        assert!((critical_value(0.01) - 2.575_829_303_548_901).abs() < 1e-9);
    }

    #[test]
    fn seeds_swap_with_inputs() {
        let a = FamilySpec::new(Family::Complete { n: 4 }, 0.3).unwrap();
        let b = FamilySpec::new(Family::Cycle { n: 5 }, 0.3).unwrap();
        let s = side_seeds(&a, &b, 11);
        let t = side_seeds(&b, &a, 11);
        assert_eq!(s, [t[1], t[0]]);
        let same = side_seeds(&a, &a, 11);
        assert_ne!(same[0], same[1]);
    }

    #[test]
    fn significance_range() {
        let a = FamilySpec::new(Family::Complete { n: 4 }, 0.3).unwrap();
        assert!(matches!(
            compare(&a, &a, 2, 1000, 0.2, 1),
            Err(Error::Parameter { .. })
        ));
    }

    #[test]
    fn lattice_is_unsupported() {
        let a = FamilySpec::new(Family::Complete { n: 4 }, 0.3).unwrap();
        let z = FamilySpec::new(Family::Lattice { d: 2 }, 0.3).unwrap();
        assert!(matches!(
            compare(&a, &z, 2, 1000, 0.01, 1),
            Err(Error::Unsupported { .. })
        ));
    }
}
