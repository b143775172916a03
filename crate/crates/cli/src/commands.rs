//! One function per subcommand. Each resolves its settings in place (so the
//! manifest records defaults) and returns tables and raw files to emit.

use nvm_core::acceptance;
use nvm_core::distinguish::{compare_mode, exact_pd, sweep_eps, McSettings, Verdict};
use nvm_core::graph::{build, save_edge_list, FamilySpec};
use nvm_core::oracles::{pd_exact, MEET_MAX_VERTICES};
use nvm_core::report::{num, text, Table};
use nvm_core::sim::{simulate_finite, simulate_trace};
use nvm_core::stats::{
    pd_hat, repetition_stat, triple_identity_residual, variance_profile, RepMode,
};
use nvm_core::{Error, Result, Trace};
use serde_json::json;

use crate::settings::{GraphSource, Settings};

pub struct Run {
    pub summary: String,
    pub tables: Vec<Table>,
    /// Files written verbatim under the output directory.
    pub files: Vec<(String, Vec<u8>)>,
    /// Printed to stdout when there is no output directory.
    pub stdout: Option<String>,
    /// `verify` found failing criteria.
    pub failed: bool,
}

impl Run {
    fn new(summary: String) -> Self {
        Run {
            summary,
            tables: Vec::new(),
            files: Vec::new(),
            stdout: None,
            failed: false,
        }
    }
}

const DEFAULT_REPLICAS: u64 = 100_000;
const DEFAULT_TOLERANCE: f64 = 1e-6;
const DEFAULT_BUDGET: u64 = 1 << 22;

fn default<T: Copy>(slot: &mut Option<T>, value: T) -> T {
    *slot.get_or_insert(value)
}

pub fn gen(s: &mut Settings) -> Result<Run> {
    let source = s.finite_or_family()?;
    let g = source.finite()?;
    let edges = save_edge_list(&g);
    let mut run = Run::new(format!(
        "{}: {} vertices, {} edges, root {}",
        source.label(),
        g.vertex_count(),
        g.edge_count(),
        g.root()
    ));
    run.files
        .push(("graph.edges".into(), edges.clone().into_bytes()));
    run.stdout = Some(edges);
    Ok(run)
}

pub fn simulate(s: &mut Settings) -> Result<Run> {
    let source = s.finite_or_family()?;
    let eps = Settings::require(s.eps, "eps")?;
    let t = Settings::require(s.t, "t")?;
    let seed = default(&mut s.seed, 0);
    if s.out.is_none() {
        return Err(Error::Validation(
            "`simulate` writes a trace file and needs `out`".into(),
        ));
    }
    let trace = simulate(&source, eps, t, seed)?;
    let ones = trace.bits().iter().filter(|&&b| b == 1).count();
    let mut run = Run::new(format!(
        "simulated {} observations on {} at eps {eps}: {ones} ones, burn-in {}",
        trace.len(),
        source.label(),
        trace.burn_in()
    ));
    let mut sidecar = serde_json::to_string_pretty(&trace.sidecar())?;
    sidecar.push('\n');
    run.files.push(("trace.bits".into(), trace.packed_bits()));
    run.files.push(("trace.json".into(), sidecar.into_bytes()));
    return Ok(run);

    fn simulate(source: &GraphSource, eps: f64, t: u64, seed: u64) -> Result<Trace> {
        match source {
            GraphSource::Family(f) => simulate_trace(&build(f)?, eps, t, seed),
            GraphSource::Edges(g) => simulate_finite(g, eps, t, seed),
        }
    }
}

pub fn stats(s: &mut Settings) -> Result<Run> {
    let mut trace = match s.trace.clone() {
        Some(stem) => {
            if s.family.is_some()
                || s.edges.is_some()
                || s.eps.is_some()
                || s.t.is_some()
                || s.seed.is_some()
            {
                return Err(Error::Validation(
                    "`trace` replaces the graph, `eps`, `t` and `seed`; give one or the other"
                        .into(),
                ));
            }
            Trace::read_files(&stem)?
        }
        None => {
            let source = s.finite_or_family()?;
            let eps = Settings::require(s.eps, "eps")?;
            let t = Settings::require(s.t, "t")?;
            let seed = default(&mut s.seed, 0);
            simulate_finite(&source.finite()?, eps, t, seed)?
        }
    };
    if let Some(b) = s.burn_in {
        trace.set_burn_in(b)?;
    }
    let d = default(&mut s.d, 2);
    let quad = s.quad()?;

    let mut t = Table::new("stats", &["statistic", "lags", "value", "stderr", "terms"]);
    let rep = repetition_stat(&trace, RepMode::Plain { d })?;
    t.push(vec![
        text("repetition"),
        text(d.to_string()),
        num(rep.value),
        num(rep.batch_stderr),
        json!(rep.terms),
    ]);
    let p = pd_hat(&trace, d)?;
    t.push(vec![
        text("p_hat"),
        text(d.to_string()),
        num(p.value),
        num(p.stderr),
        json!(rep.terms),
    ]);
    let tri = triple_identity_residual(&trace, d, 2 * d)?;
    t.push(vec![
        text("triple_residual"),
        text(format!("{d},{}", 2 * d)),
        num(tri.residual),
        num(tri.stderr),
        json!(null),
    ]);
    if let Some((d1, d2, d3)) = quad {
        let q = repetition_stat(&trace, RepMode::Quadruple { d1, d2, d3 })?;
        t.push(vec![
            text("quadruple"),
            text(format!("{d1},{d2},{d3}")),
            num(q.value),
            num(q.batch_stderr),
            json!(q.terms),
        ]);
    }
    let v = variance_profile(&trace, d)?;
    t.push(vec![
        text("variance_slope"),
        text(d.to_string()),
        num(v.slope),
        json!(null),
        json!(null),
    ]);
    t.push(vec![
        text("variance_log_slope"),
        text(d.to_string()),
        num(v.log_slope),
        json!(null),
        json!(null),
    ]);
    let class = serde_json::to_value(v.classification)?;
    t.push(vec![
        text("variance_growth"),
        text(d.to_string()),
        class.clone(),
        json!(null),
        json!(null),
    ]);

    let mut run = Run::new(format!(
        "S^({d}) = {:.6} ± {:.1e}, p_hat = {:.6}, variance growth {}",
        rep.value,
        rep.batch_stderr,
        p.value,
        class.as_str().unwrap_or("?")
    ));
    run.tables.push(t);
    Ok(run)
}

pub fn oracle(s: &mut Settings) -> Result<Run> {
    let source = s.finite_or_family()?;
    let eps = Settings::require(s.eps, "eps")?;
    let d = default(&mut s.d, 2);
    let (value, src, cross) = match &source {
        GraphSource::Family(f) => {
            let mc = McSettings {
                replicas: default(&mut s.replicas, DEFAULT_REPLICAS),
                tolerance: default(&mut s.tolerance, DEFAULT_TOLERANCE),
                seed: default(&mut s.seed, 0),
            };
            let (value, src) = exact_pd(f, eps, d, &mc)?;
            // A closed form is cross-checked against the pair chain when the
            // graph is small enough.
            let cross = match build(f)?.as_finite() {
                Some(g)
                    if src.as_str() == "closed_form" && g.vertex_count() <= MEET_MAX_VERTICES =>
                {
                    Some(pd_exact(g, eps, d)?)
                }
                _ => None,
            };
            (value, src.as_str(), cross)
        }
        GraphSource::Edges(g) => (pd_exact(g, eps, d)?, "pair_chain", None),
    };
    let mut t = Table::new(
        "oracle",
        &[
            "graph",
            "epsilon",
            "d",
            "value",
            "source",
            "pair_chain",
            "abs_diff",
        ],
    );
    t.push(vec![
        text(source.label()),
        num(eps),
        json!(d),
        num(value),
        text(src),
        cross.map_or(json!(null), num),
        cross.map_or(json!(null), |c| num((c - value).abs())),
    ]);
    let check = cross.map_or(String::new(), |c| {
        format!("; pair chain {c} (diff {:.1e})", (c - value).abs())
    });
    let mut run = Run::new(format!(
        "p{d} = {value} on {} at eps {eps} ({src}){check}",
        source.label()
    ));
    run.tables.push(t);
    Ok(run)
}

pub fn distinguish(s: &mut Settings) -> Result<Run> {
    let (fa, fb) = s.pair()?;
    let eps = Settings::require(s.eps, "eps")?;
    let eps_b = default(&mut s.eps_b, eps);
    let mode = match s.quad()? {
        Some((d1, d2, d3)) => {
            if s.d.is_some() {
                return Err(Error::Validation("give either `d` or `quad`".into()));
            }
            RepMode::Quadruple { d1, d2, d3 }
        }
        None => RepMode::Plain {
            d: default(&mut s.d, 2),
        },
    };
    let budget = default(&mut s.t, DEFAULT_BUDGET);
    let significance = default(
        &mut s.significance,
        nvm_core::distinguish::DEFAULT_SIGNIFICANCE,
    );
    let seed = default(&mut s.seed, 0);
    let a = FamilySpec::new(fa.clone(), eps)?;
    let b = FamilySpec::new(fb.clone(), eps_b)?;
    let r = compare_mode(&a, &b, mode, budget, significance, seed)?;

    let verdict = serde_json::to_value(r.verdict)?;
    let mut t = Table::new(
        "distinguish",
        &[
            "first",
            "second",
            "eps_first",
            "eps_second",
            "statistic",
            "value_first",
            "stderr_first",
            "value_second",
            "stderr_second",
            "z",
            "critical",
            "verdict",
            "t_used",
            "seed_first",
            "seed_second",
        ],
    );
    let statistic = match mode {
        RepMode::Quadruple { d1, d2, d3 } => format!("quadruple:{d1},{d2},{d3}"),
        RepMode::Plain { d } | RepMode::Thinned { d, .. } => format!("repetition:{d}"),
    };
    t.push(vec![
        text(fa.to_string()),
        text(fb.to_string()),
        num(eps),
        num(eps_b),
        text(statistic),
        num(r.first.value),
        num(r.first.batch_stderr),
        num(r.second.value),
        num(r.second.batch_stderr),
        num(r.z_score),
        num(r.critical),
        verdict,
        json!(r.samples_used),
        json!(r.seeds[0]),
        json!(r.seeds[1]),
    ]);
    let word = match r.verdict {
        Verdict::DistinctFirstGreater => format!("{fa} > {fb}"),
        Verdict::DistinctSecondGreater => format!("{fa} < {fb}"),
        Verdict::Undecided => "undecided".into(),
    };
    let mut run = Run::new(format!(
        "{word}: z = {:.3} after t = {}",
        r.z_score, r.samples_used
    ));
    run.tables.push(t);
    Ok(run)
}

pub fn sweep(s: &mut Settings) -> Result<Run> {
    let (fa, fb) = s.pair()?;
    let d = default(&mut s.d, 2);
    let grid = s.grid()?;
    let mc = McSettings {
        replicas: default(&mut s.replicas, DEFAULT_REPLICAS),
        tolerance: default(&mut s.tolerance, DEFAULT_TOLERANCE),
        seed: default(&mut s.seed, 0),
    };
    let sw = sweep_eps(&fa, &fb, d, &grid, &mc)?;
    let mut t = Table::new(
        "sweep",
        &[
            "epsilon",
            "value_first",
            "value_second",
            "difference",
            "source",
            "sign_change",
        ],
    );
    for r in &sw.rows {
        t.push(vec![
            num(r.epsilon),
            num(r.value_first),
            num(r.value_second),
            num(r.difference),
            text(r.source.as_str()),
            json!(r.bracket),
        ]);
    }
    let brackets: Vec<String> = sw
        .brackets
        .iter()
        .map(|(lo, hi)| format!("({lo}, {hi})"))
        .collect();
    let mut run = Run::new(format!(
        "p{d}({fa}) - p{d}({fb}) over {} points: {} sign change(s){}{}",
        sw.rows.len(),
        sw.brackets.len(),
        if brackets.is_empty() { "" } else { " in " },
        brackets.join(", ")
    ));
    run.tables.push(t);
    Ok(run)
}

pub fn verify(s: &mut Settings) -> Result<Run> {
    let only = s.only()?;
    let outcomes = acceptance::run(only.as_deref(), |o| println!("{}", o.line()));
    let passed = outcomes.iter().filter(|o| o.passed).count();
    let known: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.passed && o.known_unattainable())
        .map(|o| o.id.to_string())
        .collect();
    let mut summary = format!("{passed}/{} criteria passed", outcomes.len());
    if !known.is_empty() {
        summary.push_str(&format!(" (known unattainable: {})", known.join(", ")));
    }
    let mut run = Run::new(summary);
    run.failed = passed < outcomes.len();
    run.tables.push(acceptance::summary_table(&outcomes));
    for o in &outcomes {
        for t in &o.tables {
            let mut t = t.clone();
            t.name = format!("c{:02}_{}", o.id, t.name);
            run.tables.push(t);
        }
    }
    // The per-criterion lines already went to stdout.
    run.stdout = Some(String::new());
    Ok(run)
}
