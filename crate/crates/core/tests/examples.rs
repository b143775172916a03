//! Worked examples for simulation, statistics, the joint meeting law and the
//! two-graph experiments.

use nvm_core::distinguish::{compare, grid_range, sweep_eps, McSettings, Verdict};
use nvm_core::genealogy::{exact_enumeration_probs, PatternEvent};
use nvm_core::graph::{build_finite, Family, FamilySpec, Side};
use nvm_core::oracles::{closed_forms_complete, joint_exact_small, walk_distribution};
use nvm_core::sim::{simulate_finite, window_counts};
use nvm_core::stats::{
    clt_report, pd_hat, repetition_stat, triple_identity_residual, variance_profile,
    Classification, RepMode,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn finite(f: Family) -> nvm_core::Graph {
    build_finite(&f).unwrap()
}

#[test]
fn pure_noise_windows_are_uniform() {
    let trace = simulate_finite(&finite(Family::Complete { n: 2 }), 1.0, 1_000_000, 8).unwrap();
    // Disjoint windows of iid bits are independent draws.
    let w = window_counts(&trace, 3, 3).unwrap();
    let expected = w.total as f64 / 8.0;
    let stat: f64 = w
        .counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let p = 1.0 - ChiSquared::new(7.0).unwrap().cdf(stat);
    assert!(p > 0.01, "chi2 {stat}, p {p}");
    for f in w.frequencies() {
        assert!((f - 0.125).abs() < 0.005);
    }
}

#[test]
fn star_center_two_step_repeat() {
    let trace = simulate_finite(
        &finite(Family::Star {
            m: 5,
            leaf_root: false,
        }),
        0.5,
        1_000_000,
        21,
    )
    .unwrap();
    let s = repetition_stat(&trace, RepMode::Plain { d: 2 }).unwrap();
    assert!((s.value - 0.625).abs() < 3.0 * s.batch_stderr, "{s:?}");
}

#[test]
fn pure_noise_statistics() {
    let trace = simulate_finite(&finite(Family::Cycle { n: 5 }), 1.0, 1_000_000, 5).unwrap();
    let p = pd_hat(&trace, 2).unwrap();
    assert!((0.0..=0.01).contains(&p.value), "{p:?}");

    let v = variance_profile(&trace, 1).unwrap();
    assert_eq!(v.classification, Classification::Linear);
    assert!((v.slope - 0.25).abs() < 0.02, "slope {}", v.slope);

    let r = triple_identity_residual(&trace, 1, 3).unwrap();
    assert!(r.residual < 0.01 && (0.0..=1.0).contains(&r.frequency));
    assert!((r.frequency - 0.25).abs() < 0.01);
}

#[test]
fn noisy_complete_graph_has_linear_variance() {
    let trace = simulate_finite(&finite(Family::Complete { n: 5 }), 0.3, 2_000_000, 6).unwrap();
    let v = variance_profile(&trace, 2).unwrap();
    assert_eq!(v.classification, Classification::Linear, "{v:?}");
    assert!(v.slope > 0.0 && v.slope < 1.0);
}

#[test]
fn pure_noise_clt_moments() {
    let trace = simulate_finite(&finite(Family::Complete { n: 5 }), 1.0, 3_100_000, 1).unwrap();
    let r = clt_report(&trace, 2, 3, 2000).unwrap();
    assert!(r.batch_size >= 500);
    assert!(r.m1.abs() < 1e-12 && (r.m2 - 1.0).abs() < 1e-12);
    assert!(r.m3.abs() < 0.15 && (r.m4 - 3.0).abs() < 0.3, "{r:?}");
}

#[test]
fn enumeration_hand_cases() {
    let k2 = finite(Family::Complete { n: 2 });
    let p = exact_enumeration_probs(&k2, 0.5, &[0, 2], 2).unwrap();
    assert!((p.probability(&PatternEvent::Pair(0, 2)).unwrap() - 0.25).abs() < 1e-15);

    // At t = 0 the only meeting opportunity is the root at time 0.
    for f in [
        Family::Cycle { n: 3 },
        Family::Path { n: 3 },
        Family::Star {
            m: 3,
            leaf_root: false,
        },
    ] {
        let g = finite(f);
        for d in 1..=4 {
            let eps: f64 = 0.3;
            let want = (1.0 - eps).powi(d as i32) * walk_distribution(&g, g.root(), d)[g.root()];
            let got = exact_enumeration_probs(&g, eps, &[0, d], 0)
                .unwrap()
                .probability(&PatternEvent::Pair(0, d))
                .unwrap();
            assert!((got - want).abs() < 1e-14, "d={d}: {got} vs {want}");
        }
    }
}

#[test]
fn bipartite_joint_law_respects_parity() {
    let g = finite(Family::CompleteBipartite {
        n: 2,
        m: 2,
        side: Side::First,
    });
    let dist = joint_exact_small(&g, 0.3, &[0, 1, 3]).unwrap();
    for e in [
        PatternEvent::Pair(0, 1),
        PatternEvent::Pair(0, 3),
        PatternEvent::All(vec![0, 1, 3]),
    ] {
        assert_eq!(dist.probability(&e).unwrap(), 0.0, "{e}");
    }
    assert!(dist.probability(&PatternEvent::Pair(1, 3)).unwrap() > 0.0);
    assert!((dist.total() - 1.0).abs() < 1e-12);
}

fn spec(f: Family, eps: f64) -> FamilySpec {
    FamilySpec::new(f, eps).unwrap()
}

#[test]
fn complete_six_versus_eight_is_distinct() {
    let d = compare(
        &spec(Family::Complete { n: 6 }, 0.3),
        &spec(Family::Complete { n: 8 }, 0.3),
        2,
        4_000_000,
        0.01,
        1,
    )
    .unwrap();
    assert_eq!(d.verdict, Verdict::DistinctFirstGreater, "{d:?}");
    assert!(d.z_score.abs() >= d.critical);
}

#[test]
fn star_centers_are_undecided() {
    for d in 1..=3 {
        let r = compare(
            &spec(
                Family::Star {
                    m: 3,
                    leaf_root: false,
                },
                0.5,
            ),
            &spec(
                Family::Star {
                    m: 8,
                    leaf_root: false,
                },
                0.5,
            ),
            d,
            4_000_000,
            0.01,
            2,
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Undecided, "d={d}: {r:?}");
        assert_eq!(r.samples_used, 4_000_000);
    }
}

#[test]
fn identical_specs_are_undecided() {
    let a = spec(Family::Cycle { n: 5 }, 0.4);
    for seed in 1..=5 {
        let r = compare(&a, &a, 2, 200_000, 0.01, seed).unwrap();
        assert_eq!(
            r.verdict,
            Verdict::Undecided,
            "seed {seed}: z = {}",
            r.z_score
        );
    }
}

#[test]
fn compare_is_symmetric_under_swap() {
    let a = spec(Family::Complete { n: 4 }, 0.3);
    let b = spec(Family::Cycle { n: 5 }, 0.3);
    let ab = compare(&a, &b, 2, 300_000, 0.01, 9).unwrap();
    let ba = compare(&b, &a, 2, 300_000, 0.01, 9).unwrap();
    assert_eq!(ab.z_score, -ba.z_score);
    assert_eq!(ab.first, ba.second);
    let flipped = match ab.verdict {
        Verdict::DistinctFirstGreater => Verdict::DistinctSecondGreater,
        Verdict::DistinctSecondGreater => Verdict::DistinctFirstGreater,
        Verdict::Undecided => Verdict::Undecided,
    };
    assert_eq!(ba.verdict, flipped);
}

#[test]
fn complete_six_versus_eight_sweep_has_no_sign_change() {
    let grid = grid_range(0.05, 0.95, 0.05).unwrap();
    let s = sweep_eps(
        &Family::Complete { n: 6 },
        &Family::Complete { n: 8 },
        2,
        &grid,
        &McSettings::default(),
    )
    .unwrap();
    assert!(s.brackets.is_empty());
    assert!(s
        .rows
        .iter()
        .all(|r| r.difference > 0.0 && r.difference == r.value_first - r.value_second));
}

/// `p_2(K_3) > p_2(K_5)` throughout `(0, 1)`: the two curves meet only at
/// `ε = 0`, so the sweep finds no sign change.
#[test]
fn complete_three_versus_five_never_cross() {
    let grid = grid_range(0.05, 0.95, 0.05).unwrap();
    let s = sweep_eps(
        &Family::Complete { n: 3 },
        &Family::Complete { n: 5 },
        2,
        &grid,
        &McSettings::default(),
    )
    .unwrap();
    assert!(s.brackets.is_empty());
    assert!(s.rows.iter().all(|r| r.difference > 0.0));
    for i in 1..1000 {
        let eps = i as f64 / 1000.0;
        let (_, a) = closed_forms_complete(3, eps).unwrap();
        let (_, b) = closed_forms_complete(5, eps).unwrap();
        assert!(a > b, "eps {eps}");
    }
    // The gap opens linearly at the origin.
    let eps = 1e-4;
    let gap = closed_forms_complete(3, eps).unwrap().1 - closed_forms_complete(5, eps).unwrap().1;
    assert!((gap / eps - 4.0).abs() < 0.01, "{}", gap / eps);
}
