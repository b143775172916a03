//! Monte Carlo routes checked against exact ones: genealogy sampling against
//! the pair chain and the finite-time enumeration, forward traces against
//! closed forms, and the genealogy lattice sampler against the lattice
//! two-step estimator.

use std::collections::BTreeMap;

use nvm_core::genealogy::{
    estimate_meeting_probs, estimate_meeting_probs_at, exact_enumeration_probs, q_from_components,
    PatternDistribution, PatternEvent, QComponents,
};
use nvm_core::graph::{build, build_finite, Family, Side};
use nvm_core::oracles::{lattice_p2, pd_exact};
use nvm_core::sim::simulate_finite;
use nvm_core::stats::{pd_hat, repetition_stat, RepMode};

#[test]
fn genealogy_mc_matches_pair_chain() {
    let cases = [
        Family::Cycle { n: 5 },
        Family::Complete { n: 4 },
        Family::PerfectTree { k: 2, h: 2 },
        Family::Path { n: 5 },
    ];
    for (i, f) in cases.iter().enumerate() {
        let rooted = build(f).unwrap();
        let g = build_finite(f).unwrap();
        for d in [1, 2, 3] {
            let est = estimate_meeting_probs(&rooted, 0.3, &[0, d], 100_000, 1e-7, 40 + i as u64)
                .unwrap();
            let p = est.probability(&PatternEvent::Pair(0, d)).unwrap();
            let exact = pd_exact(&g, 0.3, d).unwrap();
            assert!(
                p.z_against(exact) < 4.0,
                "{f} d={d}: {} vs {exact}",
                p.value
            );
        }
    }
}

#[test]
fn k2_and_c4_examples() {
    for (f, want) in [
        (Family::Complete { n: 2 }, 0.25),
        (Family::Cycle { n: 4 }, 1.0 / 7.0),
    ] {
        let est =
            estimate_meeting_probs(&build(&f).unwrap(), 0.5, &[0, 2], 100_000, 1e-7, 5).unwrap();
        let p = est.probability(&PatternEvent::Pair(0, 2)).unwrap();
        assert!(p.z_against(want) < 3.0, "{f}: {} vs {want}", p.value);
    }
}

#[test]
fn path_enumeration_matches_mc_at_a_million_replicas() {
    let g = build_finite(&Family::Path { n: 3 }).unwrap();
    let exact = exact_enumeration_probs(&g, 0.5, &[0, 2], 4).unwrap();
    let mc = estimate_meeting_probs_at(&g, 0.5, &[0, 2], 4, 1_000_000, 77).unwrap();
    let e = PatternEvent::Pair(0, 2);
    let p = exact.probability(&e).unwrap();
    let sd = (p * (1.0 - p) / 1e6).sqrt();
    let est = mc.probability(&e).unwrap().value;
    assert!((est - p).abs() < 4.0 * sd, "{est} vs {p}");
}

#[test]
fn lattice_genealogy_matches_two_step_estimator() {
    for d in 1..=3 {
        let eps = 0.3;
        let rooted = build(&Family::Lattice { d }).unwrap();
        let est =
            estimate_meeting_probs(&rooted, eps, &[0, 2], 200_000, 1e-6, 90 + d as u64).unwrap();
        let dual = est.probability(&PatternEvent::Pair(0, 2)).unwrap();
        let lp = lattice_p2(d, eps, 200_000, 190 + d as u64).unwrap();
        let se = (dual.stderr.powi(2) + lp.p2.stderr.powi(2)).sqrt();
        assert!(
            (dual.value - lp.p2.value).abs() < 4.0 * se,
            "d={d}: {} vs {}",
            dual.value,
            lp.p2.value
        );
    }
}

#[test]
fn forward_trace_matches_pair_chain() {
    let f = Family::Cycle { n: 5 };
    let g = build_finite(&f).unwrap();
    let trace = simulate_finite(&g, 0.3, 1_000_000, 3).unwrap();
    for d in 1..=3 {
        let est = pd_hat(&trace, d).unwrap();
        let exact = pd_exact(&g, 0.3, d).unwrap();
        assert!(
            est.z_against(exact) < 4.0,
            "d={d}: {} vs {exact}",
            est.value
        );
    }
}

#[test]
fn q_from_mc_components_matches_forward_quadruple_frequency() {
    let f = Family::CompleteBipartite {
        n: 2,
        m: 3,
        side: Side::First,
    };
    let eps = 0.4;
    let offsets = [0, 2, 4, 6];
    let replicas = 200_000;
    let est =
        estimate_meeting_probs(&build(&f).unwrap(), eps, &offsets, replicas, 1e-7, 11).unwrap();
    let dist = PatternDistribution {
        offsets: offsets.to_vec(),
        probs: est
            .counts
            .iter()
            .map(|(p, &c)| (p.clone(), c as f64 / replicas as f64))
            .collect(),
    };
    let pairwise: BTreeMap<usize, f64> = [2, 4, 6]
        .into_iter()
        .map(|d| (d, est.probability(&PatternEvent::Pair(0, d)).unwrap().value))
        .collect();
    let c = QComponents::from_distribution(&dist, pairwise).unwrap();
    let q_mc = q_from_components(&c, 2, 4, 6).unwrap();
    // Each component carries weight at most 1/8 in q, so this bounds its stderr.
    let se_mc = (0.25 / replicas as f64).sqrt();

    let g = build_finite(&f).unwrap();
    let trace = simulate_finite(&g, eps, 2_000_000, 12).unwrap();
    let s = repetition_stat(
        &trace,
        RepMode::Quadruple {
            d1: 2,
            d2: 4,
            d3: 6,
        },
    )
    .unwrap();
    let se = (se_mc.powi(2) + s.batch_stderr.powi(2)).sqrt();
    assert!(
        (q_mc - s.value).abs() < 4.0 * se,
        "{q_mc} vs {} (se {se})",
        s.value
    );
}
