//! The acceptance suite: fourteen numbered checks, each producing a verdict,
//! a one-line detail and the tables it measured. Shared by the `verify`
//! command and the `acceptance` integration test.
//!
//! Tables and details hold only seeded, deterministic values; timings are
//! reported separately so repeated runs write identical files.

use std::time::{Duration, Instant};

use serde_json::{json, Value};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::distinguish::{
    bipartite_quadruple, compare, find_crossing, quadruple_statistic_experiment,
    random_graph_a2_experiment, sweep_eps, CrossingStatus, McSettings, QuadMode, Rational,
};
use crate::error::Result;
use crate::genealogy::{
    estimate_a2, estimate_meeting_probs, estimate_meeting_probs_at, exact_enumeration_probs,
    Partition, PatternEvent, ENUMERATION_MAX_LEVELS,
};
use crate::graph::{build, build_finite, sample_uniform_graph, Family, FamilySpec, Graph, Side};
use crate::oracles::{
    a2_formula, bipartite_p, closed_form_bipartite, closed_forms_complete, joint_exact_small,
    lattice_p2, pd_exact, tree_p2,
};
use crate::report::{num, text, Table};
use crate::rng::{mix, tag_of};
use crate::sim::{simulate_finite, window_counts, Simulator};
use crate::stats::{
    choose_kappa, clt_report, pd_hat, repetition_stat, triple_identity_residual, RepMode,
};

/// Root seed; each criterion derives its own streams from it.
pub const SUITE_SEED: u64 = 20_250_101;

/// Criteria that are implemented as stated but whose tolerance cannot be met.
/// Each is documented alongside its expected failure line.
pub const KNOWN_UNATTAINABLE: &[u8] = &[9, 13];

pub const EPS_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

fn seed(id: &str) -> u64 {
    mix(SUITE_SEED, tag_of(id))
}

/// Result of one criterion's computation.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub passed: bool,
    pub detail: String,
    pub tables: Vec<Table>,
}

pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub budget: Duration,
    run: fn() -> Result<Check>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub tables: Vec<Table>,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl Outcome {
    pub fn known_unattainable(&self) -> bool {
        KNOWN_UNATTAINABLE.contains(&self.id)
    }

    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let mut line = format!(
            "[{status}] {:>2} {}: {} ({:.1} s",
            self.id,
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        );
        if self.elapsed > self.budget {
            line.push_str(&format!(", over the {} s budget", self.budget.as_secs()));
        }
        line.push(')');
        if !self.passed && self.known_unattainable() {
            line.push_str(" [known unattainable]");
        }
        line
    }
}

pub fn criteria() -> Vec<Criterion> {
    let c = |id, title, secs, run| Criterion {
        id,
        title,
        budget: Duration::from_secs(secs),
        run,
    };
    vec![
        c(1, "closed forms vs pair chain", 10, c01_closed_forms),
        c(2, "complete-graph p1/p2 identity", 1, c02_complete_identity),
        c(
            3,
            "brute-force enumeration vs genealogy Monte Carlo",
            60,
            c03_enumeration,
        ),
        c(4, "law of large numbers on K5", 30, c04_lln),
        c(5, "cycle parity and strictness", 10, c05_cycles),
        c(6, "monotonicity suite", 120, c06_monotonicity),
        c(7, "star indistinguishability", 60, c07_star),
        c(8, "bipartite cubic crossing", 120, c08_crossing),
        c(9, "bipartite asymptotic tie", 1, c09_asymptotic_tie),
        c(10, "triple identity on K_{2,3}", 60, c10_triple),
        c(11, "CLT diagnostics", 120, c11_clt),
        c(12, "random graphs", 60, c12_random),
        c(
            13,
            "pairwise vectors separate small graphs",
            10,
            c13_separation,
        ),
        c(14, "determinism", 600, c14_determinism),
    ]
}

pub fn run_one(c: &Criterion) -> Outcome {
    let start = Instant::now();
    let check = (c.run)().unwrap_or_else(|e| Check {
        passed: false,
        detail: format!("error: {e}"),
        tables: Vec::new(),
    });
    Outcome {
        id: c.id,
        title: c.title,
        passed: check.passed,
        detail: check.detail,
        tables: check.tables,
        elapsed: start.elapsed(),
        budget: c.budget,
    }
}

/// Runs the selected criteria (all when `only` is `None`) in order, calling
/// `report` after each.
pub fn run(only: Option<&[u8]>, mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    criteria()
        .iter()
        .filter(|c| only.is_none_or(|ids| ids.contains(&c.id)))
        .map(|c| {
            let o = run_one(c);
            report(&o);
            o
        })
        .collect()
}

pub fn summary_table(outcomes: &[Outcome]) -> Table {
    let mut t = Table::new(
        "acceptance",
        &["id", "criterion", "status", "known_unattainable", "detail"],
    );
    for o in outcomes {
        t.push(vec![
            json!(o.id),
            text(o.title),
            text(if o.passed { "pass" } else { "fail" }),
            json!(o.known_unattainable()),
            text(o.detail.clone()),
        ]);
    }
    t
}

fn verdict(passed: bool, detail: String, tables: Vec<Table>) -> Result<Check> {
    Ok(Check {
        passed,
        detail,
        tables,
    })
}

fn c01_closed_forms() -> Result<Check> {
    let mut t = Table::new(
        "c01_closed_forms",
        &[
            "family",
            "eps",
            "d",
            "closed_form",
            "pair_chain",
            "abs_diff",
        ],
    );
    let mut worst = 0.0f64;
    let mut record =
        |t: &mut Table, family: &Family, eps: f64, d: usize, closed: f64, exact: f64| {
            let diff = (closed - exact).abs();
            worst = worst.max(diff);
            t.push(vec![
                text(family.to_string()),
                num(eps),
                json!(d),
                num(closed),
                num(exact),
                num(diff),
            ]);
        };
    let grid = [0.1, 0.3, 0.5, 0.7, 0.9];
    for &eps in &grid {
        for n in 3..=8 {
            let f = Family::Complete { n };
            let g = build_finite(&f)?;
            let (p1, p2) = closed_forms_complete(n, eps)?;
            record(&mut t, &f, eps, 1, p1, pd_exact(&g, eps, 1)?);
            record(&mut t, &f, eps, 2, p2, pd_exact(&g, eps, 2)?);
        }
        for n in 1..=11 {
            for m in 1..=12 - n {
                let f = Family::CompleteBipartite {
                    n,
                    m,
                    side: Side::First,
                };
                let g = build_finite(&f)?;
                for d in 1..=4 {
                    record(
                        &mut t,
                        &f,
                        eps,
                        d,
                        closed_form_bipartite(n, m, eps, d)?,
                        pd_exact(&g, eps, d)?,
                    );
                }
            }
        }
        for k in 1..=3 {
            for h in 1..=3 {
                let tp = tree_p2(k, h, eps)?;
                record(
                    &mut t,
                    &Family::PerfectTree { k, h },
                    eps,
                    2,
                    tp.p2,
                    tp.exact,
                );
            }
        }
    }
    let rows = t.len();
    verdict(
        worst < 1e-10,
        format!("max |diff| {worst:e} over {rows} cases"),
        vec![t],
    )
}

fn c02_complete_identity() -> Result<Check> {
    let mut t = Table::new(
        "c02_complete_identity",
        &["n", "eps", "p1", "p2", "identity_rhs", "abs_diff"],
    );
    let mut worst = 0.0f64;
    for n in 2..=50 {
        for &eps in &EPS_GRID {
            let (p1, p2) = closed_forms_complete(n, eps)?;
            let s = 1.0 - eps;
            let nf = n as f64;
            let rhs = s * s / (nf - 1.0) + s * (nf - 2.0) / (nf - 1.0) * p1;
            let diff = (p2 - rhs).abs();
            worst = worst.max(diff);
            t.push(vec![
                json!(n),
                num(eps),
                num(p1),
                num(p2),
                num(rhs),
                num(diff),
            ]);
        }
    }
    verdict(worst < 1e-12, format!("max |diff| {worst:e}"), vec![t])
}

fn c03_enumeration() -> Result<Check> {
    const REPLICAS: u64 = 100_000;
    let graphs = [
        Family::Complete { n: 2 },
        Family::Path { n: 3 },
        Family::Cycle { n: 3 },
        Family::Star {
            m: 3,
            leaf_root: false,
        },
    ];
    let offset_sets: [&[usize]; 2] = [&[0, 2], &[0, 1, 3]];
    let mut mc_table = Table::new(
        "c03_enumeration_vs_mc",
        &[
            "graph", "eps", "offsets", "t", "event", "exact", "mc", "stderr", "z",
        ],
    );
    let mut approach = Table::new(
        "c03_approach",
        &[
            "graph", "eps", "offsets", "event", "t", "exact", "limit", "gap",
        ],
    );
    let mut worst_z = 0.0f64;
    let mut comparisons = 0;
    let mut monotone = true;
    for f in &graphs {
        let g = build_finite(f)?;
        for eps in [0.3, 0.5] {
            for offsets in offset_sets {
                let top = *offsets.last().unwrap();
                let label = format!("{offsets:?}");
                let mut events = PatternEvent::standard(offsets);
                let nested: Vec<PatternEvent> = events.clone();
                events.extend(
                    Partition::enumerate(offsets.len())
                        .into_iter()
                        .map(PatternEvent::Exactly),
                );
                for t in 0..=6 {
                    let exact = exact_enumeration_probs(&g, eps, offsets, t)?;
                    let stream = seed(&format!("c03:{f}:{eps}:{label}:{t}"));
                    let mc = estimate_meeting_probs_at(&g, eps, offsets, t, REPLICAS, stream)?;
                    for e in &events {
                        let p = exact.probability(e)?;
                        let est = mc.probability(e)?;
                        let sd = (p * (1.0 - p) / REPLICAS as f64).sqrt();
                        let diff = (est.value - p).abs();
                        // Degenerate events must match exactly.
                        let z = if diff == 0.0 {
                            0.0
                        } else if sd == 0.0 {
                            f64::INFINITY
                        } else {
                            diff / sd
                        };
                        worst_z = worst_z.max(z);
                        comparisons += 1;
                        mc_table.push(vec![
                            text(f.to_string()),
                            num(eps),
                            text(label.clone()),
                            json!(t),
                            text(e.to_string()),
                            num(p),
                            num(est.value),
                            num(sd),
                            num(z),
                        ]);
                    }
                }
                let limit = joint_exact_small(&g, eps, offsets)?;
                for e in &nested {
                    let target = limit.probability(e)?;
                    let mut prev = f64::NEG_INFINITY;
                    for t in 0..=ENUMERATION_MAX_LEVELS - top {
                        let p = exact_enumeration_probs(&g, eps, offsets, t)?.probability(e)?;
                        if p < prev - 1e-14 || p > target + 1e-12 {
                            monotone = false;
                        }
                        prev = p;
                        approach.push(vec![
                            text(f.to_string()),
                            num(eps),
                            text(label.clone()),
                            text(e.to_string()),
                            json!(t),
                            num(p),
                            num(target),
                            num(target - p),
                        ]);
                    }
                }
            }
        }
    }
    let passed = worst_z <= 4.0 && monotone;
    verdict(
        passed,
        format!(
            "max z {worst_z:.3} over {comparisons} comparisons; approach to limits {}",
            if monotone {
                "monotone from below"
            } else {
                "NOT monotone from below"
            }
        ),
        vec![mc_table, approach],
    )
}

fn c04_lln() -> Result<Check> {
    let g = build_finite(&Family::Complete { n: 5 })?;
    let trace = simulate_finite(&g, 0.3, 2_000_000, seed("c04"))?;
    let s = repetition_stat(&trace, RepMode::Plain { d: 2 })?;
    let (_, p2) = closed_forms_complete(5, 0.3)?;
    let est = 2.0 * s.value - 1.0;
    let se = 2.0 * s.batch_stderr;
    let z = (est - p2).abs() / se;
    let mut t = Table::new(
        "c04_lln",
        &["t", "s2", "estimate", "stderr", "closed_form", "z"],
    );
    t.push(vec![
        json!(2_000_000),
        num(s.value),
        num(est),
        num(se),
        num(p2),
        num(z),
    ]);
    verdict(
        z < 4.0,
        format!("2S-1 = {est:.6}, p2 = {p2:.6}, z = {z:.3}"),
        vec![t],
    )
}

fn c05_cycles() -> Result<Check> {
    let mut t = Table::new("c05_cycles", &["n", "eps", "p1", "p2", "p1_lower_bound"]);
    let mut ok = true;
    let mut notes = Vec::new();
    let mut p2s = std::collections::BTreeMap::new();
    for n in 3..=9 {
        let g = build_finite(&Family::Cycle { n })?;
        for &eps in &EPS_GRID {
            let p1 = pd_exact(&g, eps, 1)?;
            let p2 = pd_exact(&g, eps, 2)?;
            let bound = ((1.0 - eps) / 2.0).powi(n as i32);
            if n % 2 == 0 && n <= 8 && p1 != 0.0 {
                ok = false;
                notes.push(format!("p1(C{n}, {eps}) = {p1:e} is not 0"));
            }
            if n % 2 == 1 && n <= 7 && p1 < bound {
                ok = false;
                notes.push(format!("p1(C{n}, {eps}) below bound"));
            }
            p2s.insert((n, (eps * 10.0).round() as u32), p2);
            t.push(vec![json!(n), num(eps), num(p1), num(p2), num(bound)]);
        }
    }
    for eps10 in [2, 5] {
        for ns in [&[3, 5, 7, 9][..], &[4, 6, 8][..]] {
            for w in ns.windows(2) {
                if p2s[&(w[0], eps10)] <= p2s[&(w[1], eps10)] {
                    ok = false;
                    notes.push(format!("p2(C{}) <= p2(C{}) at eps 0.{eps10}", w[0], w[1]));
                }
            }
        }
    }
    let detail = if ok {
        "even cycles have p1 = 0, odd cycles respect the bound, p2 strictly decreasing within each parity".into()
    } else {
        notes.join("; ")
    };
    verdict(ok, detail, vec![t])
}

fn c06_monotonicity() -> Result<Check> {
    let mut ok = true;
    let mut notes = Vec::new();
    let mut ct = Table::new("c06_complete", &["n", "eps", "p2"]);
    let mut tt = Table::new("c06_tree", &["k", "h", "eps", "p2"]);
    for &eps in &EPS_GRID {
        let mut prev = f64::INFINITY;
        for n in 6..=12 {
            let (_, p2) = closed_forms_complete(n, eps)?;
            if p2 >= prev {
                ok = false;
                notes.push(format!("K{n} not below K{} at {eps}", n - 1));
            }
            prev = p2;
            ct.push(vec![json!(n), num(eps), num(p2)]);
        }
        for (kh, label) in [
            ([(2, 2), (3, 2), (4, 2)], "k"),
            ([(2, 1), (2, 2), (2, 3)], "h"),
        ] {
            let mut prev = f64::INFINITY;
            for (k, h) in kh {
                let p2 = tree_p2(k, h, eps)?.p2;
                if p2 >= prev {
                    ok = false;
                    notes.push(format!(
                        "tree p2 not decreasing in {label} at k={k}, h={h}, eps {eps}"
                    ));
                }
                prev = p2;
                tt.push(vec![json!(k), json!(h), num(eps), num(p2)]);
            }
        }
    }
    let mut lt = Table::new(
        "c06_lattice",
        &["d", "eps", "p2", "stderr", "low_3sigma", "high_3sigma"],
    );
    let mut prev_low = f64::INFINITY;
    for d in 1..=3 {
        let l = lattice_p2(d, 0.2, 100_000, seed(&format!("c06:lattice:{d}")))?;
        let (lo, hi) = (
            l.p2.value - 3.0 * l.p2.stderr,
            l.p2.value + 3.0 * l.p2.stderr,
        );
        if hi >= prev_low {
            ok = false;
            notes.push(format!("lattice d={d} interval overlaps d={}", d - 1));
        }
        prev_low = lo;
        lt.push(vec![
            json!(d),
            num(0.2),
            num(l.p2.value),
            num(l.p2.stderr),
            num(lo),
            num(hi),
        ]);
    }
    let detail = if ok {
        let p: Vec<String> = lt
            .rows
            .iter()
            .map(|r| format!("{:.4}", r[2].as_f64().unwrap()))
            .collect();
        format!(
            "complete and tree p2 strictly decreasing on the grid; lattice p2 = {} with disjoint 3σ intervals",
            p.join(" > ")
        )
    } else {
        notes.join("; ")
    };
    verdict(ok, detail, vec![ct, tt, lt])
}

/// Chi-square homogeneity test on two count vectors; returns the statistic,
/// degrees of freedom and p-value. Cells empty in both rows are dropped.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> (f64, usize, f64) {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let n = (na + nb) as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        cells += 1;
        let ea = col * na as f64 / n;
        let eb = col * nb as f64 / n;
        stat += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    let df = cells.saturating_sub(1).max(1);
    let p = 1.0 - ChiSquared::new(df as f64).expect("positive df").cdf(stat);
    (stat, df, p)
}

/// Stride between windows in the homogeneity test, well past the
/// correlation length at the noise levels used here.
const WINDOW_GAP: usize = 16;

fn c07_star() -> Result<Check> {
    let mut ok = true;
    let mut t1 = Table::new("c07_star_closed_form", &["m", "eps", "p2", "expected"]);
    for m in 1..=20 {
        for &eps in &EPS_GRID {
            let p = closed_form_bipartite(1, m, eps, 2)?;
            let want = (1.0 - eps).powi(2);
            ok &= p == want;
            t1.push(vec![json!(m), num(eps), num(p), num(want)]);
        }
    }
    let exact_ok = ok;

    let eps = 0.5;
    let w = 4;
    let t_len = 1_000_000;
    let g3 = build_finite(&Family::Star {
        m: 3,
        leaf_root: false,
    })?;
    let g8 = build_finite(&Family::Star {
        m: 8,
        leaf_root: false,
    })?;
    let tr3 = simulate_finite(&g3, eps, t_len, seed("c07:star3"))?;
    let tr8 = simulate_finite(&g8, eps, t_len, seed("c07:star8"))?;
    let w3 = window_counts(&tr3, w, w + WINDOW_GAP)?;
    let w8 = window_counts(&tr8, w, w + WINDOW_GAP)?;
    let (stat, df, p_value) = chi_square_homogeneity(&w3.counts, &w8.counts);
    let mut t2 = Table::new("c07_windows", &["window", "count_k13", "count_k18"]);
    for i in 0..1 << w {
        t2.push(vec![
            text(format!("{i:04b}")),
            json!(w3.counts[i]),
            json!(w8.counts[i]),
        ]);
    }
    let chi_ok = p_value > 0.01;

    let target = eps / 2.0 + (1.0 - eps) * eps / 2.0 + (1.0 - eps).powi(2);
    let mut t3 = Table::new("c07_transition", &["graph", "s2", "stderr", "target", "z"]);
    let mut trans_ok = true;
    let mut zs = Vec::new();
    for (name, tr) in [("star:3", &tr3), ("star:8", &tr8)] {
        let s = repetition_stat(tr, RepMode::Plain { d: 2 })?;
        let z = (s.value - target).abs() / s.batch_stderr;
        trans_ok &= z < 4.0;
        zs.push(z);
        t3.push(vec![
            text(name),
            num(s.value),
            num(s.batch_stderr),
            num(target),
            num(z),
        ]);
    }
    verdict(
        exact_ok && chi_ok && trans_ok,
        format!(
            "closed form exact: {exact_ok}; chi2 = {stat:.2} on {df} df, p = {p_value:.4}; \
             S2 vs {target}: z = {:.2}, {:.2}",
            zs[0], zs[1]
        ),
        vec![t1, t2, t3],
    )
}

fn c08_crossing() -> Result<Check> {
    let c = find_crossing(3, 1, 2, 2, 1e-12)?;
    let want = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
    let eps_star = c.eps_star.unwrap_or(f64::NAN);
    let at_half = c.cubic.eval(0.5).abs();
    let found =
        c.status == CrossingStatus::Found && (eps_star - want).abs() < 1e-6 && at_half < 1e-9;
    let r = quadruple_statistic_experiment(3, 1, 2, 2, eps_star, QuadMode::ExactSmall)?;
    let mut t = Table::new(
        "c08_crossing",
        &[
            "graph",
            "eps_star",
            "p2",
            "p4",
            "p6",
            "q_direct",
            "q_formula",
            "q_consistency",
        ],
    );
    for side in [&r.first, &r.second] {
        t.push(vec![
            text(format!("bipartite:{},{}", side.n, side.m)),
            num(eps_star),
            num(side.pairwise[0]),
            num(side.pairwise[1]),
            num(side.pairwise[2]),
            num(side.q_direct),
            num(side.q_formula),
            num((side.q_direct - side.q_formula).abs()),
        ]);
    }
    verdict(
        found && r.pairwise_tie && r.consistent,
        format!(
            "eps* = {eps_star:.9} (|err| {:.1e}), cubic at 1/2 = {at_half:e}, pairwise gap {:.1e}, \
             q routes agree: {}, q difference {:e}",
            (eps_star - want).abs(),
            r.max_pairwise_gap,
            r.consistent,
            r.q_difference
        ),
        vec![t],
    )
}

fn c09_asymptotic_tie() -> Result<Check> {
    let alpha = Rational::new(1, 4)?;
    let mut t = Table::new(
        "c09_asymptotic_tie",
        &[
            "n1", "m1", "n2", "m2", "p_first", "p_second", "abs_diff", "ratio",
        ],
    );
    let mut diffs = Vec::new();
    for n1 in [64, 128, 256] {
        let (n1, m1, n2, m2) = bipartite_quadruple(alpha, n1)?;
        let a = bipartite_p(n1 as usize, m1 as usize, alpha.value())?;
        let b = bipartite_p(n2 as usize, m2 as usize, alpha.value())?;
        let diff = (a - b).abs();
        let ratio = diffs.last().map_or(f64::NAN, |prev| diff / prev);
        diffs.push(diff);
        t.push(vec![
            json!(n1),
            json!(m1),
            json!(n2),
            json!(m2),
            num(a),
            num(b),
            num(diff),
            num(ratio),
        ]);
    }
    let decreasing = diffs.windows(2).all(|w| w[1] < w[0]);
    let ratios: Vec<f64> = diffs.windows(2).map(|w| w[1] / w[0]).collect();
    let in_band = ratios.iter().all(|r| (0.35..=0.65).contains(r));
    verdict(
        decreasing && in_band,
        format!(
            "differences {:.3e}, {:.3e}, {:.3e}; ratios {:.4}, {:.4} (band [0.35, 0.65]; the leading terms \
             cancel at x = (1-α)^2, so the decay is 1/n^2 with ratio near 1/4)",
            diffs[0], diffs[1], diffs[2], ratios[0], ratios[1]
        ),
        vec![t],
    )
}

fn c10_triple() -> Result<Check> {
    let g = build_finite(&Family::CompleteBipartite {
        n: 2,
        m: 3,
        side: Side::First,
    })?;
    let trace = simulate_finite(&g, 0.4, 2_000_000, seed("c10"))?;
    let r = triple_identity_residual(&trace, 2, 4)?;
    let mut t = Table::new(
        "c10_triple",
        &["d1", "d2", "frequency", "predicted", "residual", "stderr"],
    );
    t.push(vec![
        json!(2),
        json!(4),
        num(r.frequency),
        num(r.predicted),
        num(r.residual),
        num(r.stderr),
    ]);
    verdict(
        r.residual < 5.0 * r.stderr,
        format!(
            "residual {:.3e} vs 5 x stderr {:.3e}",
            r.residual,
            5.0 * r.stderr
        ),
        vec![t],
    )
}

const CLT_BATCHES: usize = 2000;
const CLT_BATCH_SIZE: usize = 500;
const CLT_PILOT: u64 = 1_000_000;

/// Two-pass CLT run: a pilot for `p̂`, then the trace extended until the
/// thinned stream fills every batch.
fn clt_run(g: &Graph, eps: f64, seed: u64) -> Result<crate::stats::CltReport> {
    let d = 2;
    let mut sim = Simulator::new(g, eps, seed)?;
    sim.advance(CLT_PILOT)?;
    let p_hat = pd_hat(&sim.trace(), d)?.value;
    let kappa = choose_kappa(eps, d, p_hat)?;
    let burn = sim.trace().burn_in() as u64;
    let needed = burn + (CLT_BATCHES * CLT_BATCH_SIZE * kappa + d) as u64;
    if needed > sim.time() {
        sim.advance(needed - sim.time())?;
    }
    clt_report(&sim.trace(), d, kappa, CLT_BATCHES)
}

fn c11_clt() -> Result<Check> {
    let g = build_finite(&Family::Complete { n: 5 })?;
    let mut t = Table::new(
        "c11_clt",
        &["eps", "seed", "kappa", "batch_size", "m1", "m2", "m3", "m4"],
    );
    let mut ok = true;
    let mut worst = (0.0f64, 0.0f64);
    let mut row = |t: &mut Table, eps: f64, s: u64, r: &crate::stats::CltReport| {
        let pass = r.m3.abs() < 0.15 && (r.m4 - 3.0).abs() < 0.35 && r.batch_size >= CLT_BATCH_SIZE;
        worst = (worst.0.max(r.m3.abs()), worst.1.max((r.m4 - 3.0).abs()));
        t.push(vec![
            num(eps),
            json!(s),
            json!(r.kappa),
            json!(r.batch_size),
            num(r.m1),
            num(r.m2),
            num(r.m3),
            num(r.m4),
        ]);
        pass
    };
    let main_seed = seed("c11");
    let main = clt_run(&g, 0.3, main_seed)?;
    ok &= row(&mut t, 0.3, main_seed, &main);
    for s in 1..=10 {
        let r = clt_run(&g, 1.0, s)?;
        ok &= row(&mut t, 1.0, s, &r);
    }
    verdict(
        ok,
        format!(
            "K5 eps 0.3: kappa {}, m3 {:.3}, m4 {:.3}; max |m3| {:.3}, max |m4-3| {:.3} over 11 runs",
            main.kappa, main.m3, main.m4, worst.0, worst.1
        ),
        vec![t],
    )
}

fn c12_random() -> Result<Check> {
    let r = random_graph_a2_experiment(64, 7, 11)?;
    let g = sample_uniform_graph(12, seed("c12:graph"))?;
    let eps = 0.3;
    let est = estimate_a2(&g, eps, 100_000, seed("c12:mc"))?;
    let exact = a2_formula(&g);
    let z = est.z_against(exact);
    let mut t = Table::new(
        "c12_random",
        &["check", "value", "reference", "stderr", "z"],
    );
    t.push(vec![
        text("collisions n=64 seeds 7,11"),
        json!(r.collisions.len()),
        json!(0),
        Value::Null,
        Value::Null,
    ]);
    t.push(vec![
        text("min gap n=64"),
        num(r.min_gap.unwrap_or(f64::NAN)),
        Value::Null,
        Value::Null,
        Value::Null,
    ]);
    t.push(vec![
        text("a2 n=12"),
        num(est.value),
        num(exact),
        num(est.stderr),
        num(z),
    ]);
    verdict(
        r.collisions.is_empty() && z < 3.0,
        format!(
            "{} collisions (min gap {:.3e}); a2 estimate {:.5} vs {:.5}, z = {z:.2}",
            r.collisions.len(),
            r.min_gap.unwrap_or(f64::NAN),
            est.value,
            exact
        ),
        vec![t],
    )
}

fn c13_separation() -> Result<Check> {
    const SEPARATION: f64 = 1e-9;
    let mut t = Table::new(
        "c13_separation",
        &["first", "second", "eps", "p1_gap", "p2_gap"],
    );
    let mut min_sep = f64::INFINITY;
    let mut below = Vec::new();
    let mut families = Vec::new();
    for n in 3..=8 {
        families.push((Family::Complete { n }, true));
    }
    for n in 3..=9 {
        families.push((Family::Cycle { n }, false));
    }
    for &eps in &EPS_GRID {
        let values: Vec<(Family, bool, f64, f64)> = families
            .iter()
            .map(|(f, complete)| {
                let (p1, p2) = match (f, complete) {
                    (Family::Complete { n }, true) => closed_forms_complete(*n, eps)?,
                    _ => {
                        let g = build_finite(f)?;
                        (pd_exact(&g, eps, 1)?, pd_exact(&g, eps, 2)?)
                    }
                };
                Ok((f.clone(), *complete, p1, p2))
            })
            .collect::<Result<_>>()?;
        for (i, a) in values.iter().enumerate() {
            for b in &values[i + 1..] {
                if a.1 != b.1 {
                    continue;
                }
                let (g1, g2) = ((a.2 - b.2).abs(), (a.3 - b.3).abs());
                let sep = g1.max(g2);
                min_sep = min_sep.min(sep);
                if sep <= SEPARATION {
                    below.push(format!("{} vs {} at {eps} ({sep:.2e})", a.0, b.0));
                }
                t.push(vec![
                    text(a.0.to_string()),
                    text(b.0.to_string()),
                    num(eps),
                    num(g1),
                    num(g2),
                ]);
            }
        }
    }
    let detail = if below.is_empty() {
        format!(
            "smallest max-coordinate gap {min_sep:.3e} over {} pairs",
            t.len()
        )
    } else {
        // Nonzero but tiny: odd cycles have p1 of order ((1-eps)/2)^n.
        format!(
            "{} of {} pairs separate by at most {SEPARATION:e}, though none tie: {}",
            below.len(),
            t.len(),
            below.join("; ")
        )
    };
    verdict(below.is_empty(), detail, vec![t])
}

/// Computations whose results must not depend on the worker count.
fn parallel_fingerprint() -> Result<String> {
    let c5 = build(&Family::Cycle { n: 5 })?;
    let est = estimate_meeting_probs(&c5, 0.3, &[0, 1, 3], 50_000, 1e-6, seed("c14:genealogy"))?;
    let lat = build(&Family::Lattice { d: 2 })?;
    let lat_est = estimate_meeting_probs(&lat, 0.4, &[0, 2], 20_000, 1e-6, seed("c14:lattice"))?;
    let g = sample_uniform_graph(12, seed("c14:graph"))?;
    let a2 = estimate_a2(&g, 0.3, 50_000, seed("c14:a2"))?;
    let lp = lattice_p2(2, 0.3, 20_000, seed("c14:lp2"))?;
    let a = FamilySpec::new(Family::Complete { n: 6 }, 0.3)?;
    let b = FamilySpec::new(Family::Complete { n: 8 }, 0.3)?;
    let decision = compare(&a, &b, 2, 200_000, 0.01, seed("c14:compare"))?;
    let sweep = sweep_eps(
        &Family::Complete { n: 3 },
        &Family::Cycle { n: 5 },
        2,
        &EPS_GRID,
        &McSettings::default(),
    )?;
    Ok(serde_json::to_string(&json!({
        "genealogy": est,
        "lattice_genealogy": lat_est,
        "a2": a2,
        "lattice_p2": lp,
        "compare": decision,
        "sweep": sweep,
    }))?)
}

/// Criteria rerun for the byte-identity check; chosen to cover exact and
/// Monte Carlo paths while staying quick.
const RERUN: [u8; 4] = [1, 5, 12, 13];

fn rendered(only: &[u8]) -> String {
    let mut out = String::new();
    for o in run(Some(only), |_| {}) {
        out.push_str(&summary_table(std::slice::from_ref(&o)).to_csv());
        for t in &o.tables {
            out.push_str(&t.to_csv());
        }
    }
    out
}

fn c14_determinism() -> Result<Check> {
    let pool = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| crate::error::Error::Capacity(format!("thread pool: {e}")))
    };
    let one = pool(1)?;
    let four = pool(4)?;
    let f1 = one.install(parallel_fingerprint)?;
    let f4 = four.install(parallel_fingerprint)?;
    let threads_ok = f1 == f4;

    let first = one.install(|| rendered(&RERUN));
    let second = four.install(|| rendered(&RERUN));
    let bytes_ok = first == second;

    let mut t = Table::new("c14_determinism", &["check", "identical", "bytes"]);
    t.push(vec![
        text("monte carlo, 1 vs 4 threads"),
        json!(threads_ok),
        json!(f1.len()),
    ]);
    t.push(vec![
        text("criterion csv rerun"),
        json!(bytes_ok),
        json!(first.len()),
    ]);
    verdict(
        threads_ok && bytes_ok,
        format!(
            "MC results {} across 1 and 4 threads; CSV output of criteria {RERUN:?} {} on rerun",
            if threads_ok { "identical" } else { "DIFFER" },
            if bytes_ok {
                "byte-identical"
            } else {
                "DIFFERS"
            }
        ),
        vec![t],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_of_identical_rows_is_one() {
        let (stat, df, p) = chi_square_homogeneity(&[10, 20, 30, 0], &[10, 20, 30, 0]);
        assert_eq!(stat, 0.0);
        assert_eq!(df, 2);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_detects_difference() {
        let (_, _, p) = chi_square_homogeneity(&[1000, 10], &[10, 1000]);
        assert!(p < 1e-10);
    }

    #[test]
    fn ids_are_in_order() {
        let ids: Vec<u8> = criteria().iter().map(|c| c.id).collect();
        assert_eq!(ids, (1..=14).collect::<Vec<_>>());
    }
}
