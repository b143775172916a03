use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_epsilon, Error, Result};
use crate::genealogy::{estimate_meeting_probs, PatternEvent};
use crate::graph::{build, Family, RootedGraph, Side};
use crate::oracles::{closed_form_bipartite, closed_forms_complete, pd_exact, MEET_MAX_VERTICES};

/// Where a value came from, ordered from most to least exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    ClosedForm,
    PairChain,
    MonteCarlo,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::ClosedForm => "closed_form",
            Source::PairChain => "pair_chain",
            Source::MonteCarlo => "monte_carlo",
        }
    }
}

/// Settings for the Monte Carlo fallback.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McSettings {
    pub replicas: u64,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings {
            replicas: 100_000,
            tolerance: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub value_first: f64,
    pub value_second: f64,
    pub difference: f64,
    pub source: Source,
    /// The difference changed strictly sign since the previous row.
    pub bracket: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sweep {
    pub first: Family,
    pub second: Family,
    pub d: usize,
    pub rows: Vec<SweepRow>,
    /// Adjacent grid points between which the difference changes sign.
    pub brackets: Vec<(f64, f64)>,
}

/// `p_d` from the most exact source available for the family.
pub fn exact_pd(family: &Family, epsilon: f64, d: usize, mc: &McSettings) -> Result<(f64, Source)> {
    check_epsilon(epsilon)?;
    family.validate()?;
    if d == 0 {
        return Err(Error::param("d", "must be positive"));
    }
    let bipartite = |n, m| closed_form_bipartite(n, m, epsilon, d).map(|v| (v, Source::ClosedForm));
    match *family {
        Family::Complete { n } if d <= 2 => {
            let (p1, p2) = closed_forms_complete(n, epsilon)?;
            return Ok((if d == 1 { p1 } else { p2 }, Source::ClosedForm));
        }
        Family::CompleteBipartite { n, m, side } => {
            return match side {
                Side::First => bipartite(n, m),
                Side::Second => bipartite(m, n),
            }
        }
        Family::Star { m, leaf_root } => {
            return if leaf_root {
                bipartite(m, 1)
            } else {
                bipartite(1, m)
            }
        }
        _ => {}
    }
    let g = build(family)?;
    match &g {
        RootedGraph::Finite(fg) if fg.vertex_count() <= MEET_MAX_VERTICES => {
            Ok((pd_exact(fg, epsilon, d)?, Source::PairChain))
        }
        _ => {
            let est =
                estimate_meeting_probs(&g, epsilon, &[0, d], mc.replicas, mc.tolerance, mc.seed)?;
            Ok((
                est.probability(&PatternEvent::Pair(0, d))?.value,
                Source::MonteCarlo,
            ))
        }
    }
}

/// Inclusive grid `lo, lo + step, …, hi`, rounded to 12 decimals so that
/// values print as written.
pub fn grid_range(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::param("grid", format!("bad range {lo}:{hi}:{step}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(Error::Capacity(format!("grid with {count} points")));
    }
    Ok((0..count)
        .map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// Evaluates `p_d` for both families over the grid and flags strict sign
/// changes of the difference between neighboring points.
pub fn sweep_eps(
    first: &Family,
    second: &Family,
    d: usize,
    grid: &[f64],
    mc: &McSettings,
) -> Result<Sweep> {
    if grid.is_empty() {
        return Err(Error::param("grid", "must not be empty"));
    }
    if let Some(e) = grid.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::param("grid", format!("{e} is not in (0, 1)")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("grid", "must be strictly increasing"));
    }
    let values = grid
        .par_iter()
        .map(|&eps| {
            let (a, sa) = exact_pd(first, eps, d, mc)?;
            let (b, sb) = exact_pd(second, eps, d, mc)?;
            Ok((eps, a, b, sa.max(sb)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<SweepRow> = Vec::with_capacity(values.len());
    let mut brackets = Vec::new();
    for (eps, a, b, source) in values {
        let difference = a - b;
        let bracket = rows
            .last()
            .is_some_and(|prev| prev.difference * difference < 0.0);
        if bracket {
            brackets.push((rows.last().unwrap().epsilon, eps));
        }
        rows.push(SweepRow {
            epsilon: eps,
            value_first: a,
            value_second: b,
            difference,
            source,
            bracket,
        });
    }
    Ok(Sweep {
        first: first.clone(),
        second: second.clone(),
        d,
        rows,
        brackets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_clean() {
        let g = grid_range(0.05, 0.95, 0.05).unwrap();
        assert_eq!(g.len(), 19);
        assert_eq!(g[2], 0.15);
        assert_eq!(*g.last().unwrap(), 0.95);
    }

    #[test]
    fn sources() {
        let mc = McSettings::default();
        assert_eq!(
            exact_pd(&Family::Complete { n: 5 }, 0.3, 2, &mc).unwrap().1,
            Source::ClosedForm
        );
        assert_eq!(
            exact_pd(&Family::Complete { n: 5 }, 0.3, 3, &mc).unwrap().1,
            Source::PairChain
        );
        assert_eq!(
            exact_pd(&Family::Cycle { n: 7 }, 0.3, 1, &mc).unwrap().1,
            Source::PairChain
        );
        let star = exact_pd(
            &Family::Star {
                m: 4,
                leaf_root: false,
            },
            0.3,
            2,
            &mc,
        )
        .unwrap();
        assert_eq!(star.1, Source::ClosedForm);
        assert!((star.0 - 0.49).abs() < 1e-15);
    }

    #[test]
    fn identical_inputs_have_zero_difference() {
        let grid = grid_range(0.1, 0.9, 0.2).unwrap();
        let s = sweep_eps(
            &Family::Cycle { n: 5 },
            &Family::Cycle { n: 5 },
            2,
            &grid,
            &McSettings::default(),
        )
        .unwrap();
        assert!(s.rows.iter().all(|r| r.difference == 0.0));
        assert!(s.brackets.is_empty());
    }
}
