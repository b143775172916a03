//! Exact evolution of the coalescing backward-path system on a finite graph.
//!
//! A state records where the live clusters sit (at most one per vertex, since
//! clusters on a shared vertex have merged) and which paths belong to which
//! cluster. Each step, every live cluster independently terminates with
//! probability `ε` or moves to a uniform neighbor; clusters landing on the same
//! vertex merge.

use std::collections::{BTreeMap, HashMap, VecDeque};

use nalgebra::DMatrix;

use super::check_offsets;
use super::partition::Partition;
use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};

const UNBORN: u8 = u8::MAX;

/// Above this many transient states the absorbing system is solved iteratively.
pub const DENSE_LIMIT: usize = 4096;

/// Hard cap on transient states in the absorbing system.
pub const MAX_STATES: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct ClusterState {
    /// `(vertex, block)` for every live cluster, sorted by vertex.
    alive: Vec<(u32, u8)>,
    /// Block of each path, `UNBORN` before its birth.
    labels: Vec<u8>,
}

impl ClusterState {
    fn unborn(paths: usize) -> Self {
        ClusterState {
            alive: Vec::new(),
            labels: vec![UNBORN; paths],
        }
    }

    fn canonicalize(&mut self) {
        let mut map = [UNBORN; 256];
        let mut next = 0u8;
        for l in self.labels.iter_mut().filter(|l| **l != UNBORN) {
            if map[*l as usize] == UNBORN {
                map[*l as usize] = next;
                next += 1;
            }
            *l = map[*l as usize];
        }
        for (_, b) in &mut self.alive {
            *b = map[*b as usize];
        }
        self.alive.sort_unstable();
    }

    fn born(&mut self, path: usize, root: Vertex) {
        let root = root as u32;
        match self.alive.iter().find(|(v, _)| *v == root) {
            Some(&(_, block)) => self.labels[path] = block,
            None => {
                // Fresh label above anything in use; canonicalize renumbers.
                let block = self
                    .labels
                    .iter()
                    .filter(|&&l| l != UNBORN)
                    .max()
                    .map_or(0, |m| m + 1);
                self.labels[path] = block;
                self.alive.push((root, block));
            }
        }
        self.canonicalize();
    }

    fn is_terminal(&self) -> bool {
        self.alive.is_empty()
    }

    fn partition(&self) -> Partition {
        Partition::from_labels(&self.labels)
    }

    /// Adds `weight ×` the one-step successor distribution to `out`.
    fn step_into(&self, g: &Graph, eps: f64, weight: f64, out: &mut HashMap<ClusterState, f64>) {
        let mut moves: Vec<Option<u32>> = vec![None; self.alive.len()];
        self.enumerate(g, eps, 0, weight, &mut moves, out);
    }

    fn enumerate(
        &self,
        g: &Graph,
        eps: f64,
        i: usize,
        weight: f64,
        moves: &mut Vec<Option<u32>>,
        out: &mut HashMap<ClusterState, f64>,
    ) {
        if weight == 0.0 {
            return;
        }
        if i == self.alive.len() {
            let next = self.apply(moves);
            *out.entry(next).or_insert(0.0) += weight;
            return;
        }
        let v = self.alive[i].0 as usize;
        moves[i] = None;
        self.enumerate(g, eps, i + 1, weight * eps, moves, out);
        let move_weight = weight * (1.0 - eps) / g.degree(v) as f64;
        for &w in g.neighbors(v) {
            moves[i] = Some(w as u32);
            self.enumerate(g, eps, i + 1, move_weight, moves, out);
        }
    }

    fn apply(&self, moves: &[Option<u32>]) -> ClusterState {
        let mut next = ClusterState {
            alive: self
                .alive
                .iter()
                .zip(moves)
                .filter_map(|(&(_, block), m)| m.map(|v| (v, block)))
                .collect(),
            labels: self.labels.clone(),
        };
        next.alive.sort_unstable();
        let mut i = 1;
        while i < next.alive.len() {
            if next.alive[i].0 == next.alive[i - 1].0 {
                let keep = next.alive[i - 1].1;
                let gone = next.alive.remove(i).1;
                for l in next.labels.iter_mut().filter(|l| **l == gone) {
                    *l = keep;
                }
            } else {
                i += 1;
            }
        }
        next.canonicalize();
        next
    }
}

/// Runs the birth phase: from the birth of the latest path down to the birth
/// of the path at offset 0. No floor is reached in this phase.
fn birth_phase(g: &Graph, eps: f64, offsets: &[usize]) -> HashMap<ClusterState, f64> {
    let top = *offsets.last().unwrap();
    let mut dist = HashMap::from([(ClusterState::unborn(offsets.len()), 1.0)]);
    for level in 0..=top {
        let births: Vec<usize> = (0..offsets.len())
            .filter(|&i| top - offsets[i] == level)
            .collect();
        if !births.is_empty() {
            dist = dist
                .into_iter()
                .map(|(mut s, w)| {
                    for &i in &births {
                        s.born(i, g.root());
                    }
                    (s, w)
                })
                .fold(HashMap::new(), |mut acc, (s, w)| {
                    *acc.entry(s).or_insert(0.0) += w;
                    acc
                });
        }
        if level < top {
            let mut next = HashMap::new();
            for (s, w) in &dist {
                s.step_into(g, eps, *w, &mut next);
            }
            dist = next;
        }
    }
    dist
}

/// Exact finite-time partition law: the path at offset 0 is born at time `t`
/// and every path stops at time 0.
pub(crate) fn finite_time(
    g: &Graph,
    eps: f64,
    offsets: &[usize],
    t: usize,
) -> Result<BTreeMap<Partition, f64>> {
    check_offsets(offsets)?;
    let mut dist = birth_phase(g, eps, offsets);
    for _ in 0..t {
        let mut next = HashMap::new();
        for (s, w) in &dist {
            if s.is_terminal() {
                *next.entry(s.clone()).or_insert(0.0) += w;
            } else {
                s.step_into(g, eps, *w, &mut next);
            }
        }
        dist = next;
    }
    let mut out = BTreeMap::new();
    for (s, w) in dist {
        *out.entry(s.partition()).or_insert(0.0) += w;
    }
    Ok(out)
}

/// Exact limiting partition law, from the absorbing chain that runs until
/// every cluster has terminated.
pub(crate) fn limit(g: &Graph, eps: f64, offsets: &[usize]) -> Result<BTreeMap<Partition, f64>> {
    check_offsets(offsets)?;
    let budget = (g.vertex_count() as f64).powi(offsets.len() as i32);
    if budget > MAX_STATES as f64 {
        return Err(Error::Capacity(format!(
            "{} vertices and {} paths give up to {budget:.0} states (cap {MAX_STATES})",
            g.vertex_count(),
            offsets.len()
        )));
    }
    let start = birth_phase(g, eps, offsets);

    let mut result: BTreeMap<Partition, f64> = BTreeMap::new();
    let mut index: HashMap<ClusterState, usize> = HashMap::new();
    let mut states: Vec<ClusterState> = Vec::new();
    let mut queue = VecDeque::new();
    for (s, w) in &start {
        if s.is_terminal() {
            *result.entry(s.partition()).or_insert(0.0) += w;
        } else if !index.contains_key(s) {
            index.insert(s.clone(), states.len());
            states.push(s.clone());
            queue.push_back(states.len() - 1);
        }
    }

    // Transient-to-transient weights and absorption weights per final partition.
    let mut finals: BTreeMap<Partition, usize> = BTreeMap::new();
    let mut inner: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut absorb: Vec<Vec<(usize, f64)>> = Vec::new();
    while let Some(i) = queue.pop_front() {
        let mut next = HashMap::new();
        states[i].step_into(g, eps, 1.0, &mut next);
        let mut row = Vec::new();
        let mut exits = Vec::new();
        let mut succ: Vec<_> = next.into_iter().collect();
        succ.sort_by(|a, b| a.0.cmp(&b.0));
        for (s, w) in succ {
            if s.is_terminal() {
                let n = finals.len();
                let f = *finals.entry(s.partition()).or_insert(n);
                exits.push((f, w));
            } else {
                let j = match index.get(&s) {
                    Some(&j) => j,
                    None => {
                        if states.len() >= MAX_STATES {
                            return Err(Error::Capacity(format!(
                                "more than {MAX_STATES} joint states"
                            )));
                        }
                        index.insert(s.clone(), states.len());
                        states.push(s);
                        queue.push_back(states.len() - 1);
                        states.len() - 1
                    }
                };
                row.push((j, w));
            }
        }
        debug_assert_eq!(inner.len(), i);
        inner.push(row);
        absorb.push(exits);
    }

    let values = solve_absorbing(&inner, &absorb, finals.len())?;
    let final_list: Vec<Partition> = {
        let mut v = vec![Partition::singletons(0); finals.len()];
        for (p, &f) in &finals {
            v[f] = p.clone();
        }
        v
    };
    for (s, w) in &start {
        if let Some(&i) = index.get(s) {
            for (f, p) in final_list.iter().enumerate() {
                *result.entry(p.clone()).or_insert(0.0) += w * values[i * finals.len() + f];
            }
        }
    }
    Ok(result)
}

/// Solves `V = A V + B` for the absorption probabilities, row-major
/// `states × finals`.
fn solve_absorbing(
    inner: &[Vec<(usize, f64)>],
    absorb: &[Vec<(usize, f64)>],
    finals: usize,
) -> Result<Vec<f64>> {
    let n = inner.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut values = if n <= DENSE_LIMIT {
        let mut a = DMatrix::<f64>::identity(n, n);
        let mut b = DMatrix::<f64>::zeros(n, finals);
        for i in 0..n {
            for &(j, w) in &inner[i] {
                a[(i, j)] -= w;
            }
            for &(f, w) in &absorb[i] {
                b[(i, f)] += w;
            }
        }
        let x = a.lu().solve(&b).ok_or_else(|| Error::Numeric {
            message: "singular absorbing system".into(),
            residual: f64::NAN,
        })?;
        let mut v = vec![0.0; n * finals];
        for i in 0..n {
            for f in 0..finals {
                v[i * finals + f] = x[(i, f)];
            }
        }
        v
    } else {
        gauss_seidel(inner, absorb, finals)
    };
    let residual = residual(inner, absorb, finals, &values);
    if residual > 1e-12 {
        // One refinement sweep pass usually fixes dense round-off.
        values = refine(inner, absorb, finals, values);
        let again = self::residual(inner, absorb, finals, &values);
        if again > 1e-12 {
            return Err(Error::Numeric {
                message: "absorbing system did not converge".into(),
                residual: again,
            });
        }
    }
    Ok(values)
}

fn sweep(
    inner: &[Vec<(usize, f64)>],
    absorb: &[Vec<(usize, f64)>],
    finals: usize,
    v: &mut [f64],
) -> f64 {
    let mut change: f64 = 0.0;
    let mut acc = vec![0.0; finals];
    for i in 0..inner.len() {
        acc.iter_mut().for_each(|a| *a = 0.0);
        let mut diag = 0.0;
        for &(j, w) in &inner[i] {
            if j == i {
                diag += w;
            } else {
                for f in 0..finals {
                    acc[f] += w * v[j * finals + f];
                }
            }
        }
        for &(f, w) in &absorb[i] {
            acc[f] += w;
        }
        for f in 0..finals {
            let new = acc[f] / (1.0 - diag);
            change = change.max((new - v[i * finals + f]).abs());
            v[i * finals + f] = new;
        }
    }
    change
}

fn gauss_seidel(
    inner: &[Vec<(usize, f64)>],
    absorb: &[Vec<(usize, f64)>],
    finals: usize,
) -> Vec<f64> {
    let mut v = vec![0.0; inner.len() * finals];
    for _ in 0..100_000 {
        if sweep(inner, absorb, finals, &mut v) < 1e-15 {
            break;
        }
    }
    v
}

fn refine(
    inner: &[Vec<(usize, f64)>],
    absorb: &[Vec<(usize, f64)>],
    finals: usize,
    mut v: Vec<f64>,
) -> Vec<f64> {
    for _ in 0..1_000 {
        if sweep(inner, absorb, finals, &mut v) < 1e-16 {
            break;
        }
    }
    v
}

fn residual(
    inner: &[Vec<(usize, f64)>],
    absorb: &[Vec<(usize, f64)>],
    finals: usize,
    v: &[f64],
) -> f64 {
    let mut worst: f64 = 0.0;
    let mut acc = vec![0.0; finals];
    for i in 0..inner.len() {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for &(j, w) in &inner[i] {
            for f in 0..finals {
                acc[f] += w * v[j * finals + f];
            }
        }
        for &(f, w) in &absorb[i] {
            acc[f] += w;
        }
        for f in 0..finals {
            worst = worst.max((acc[f] - v[i * finals + f]).abs());
        }
    }
    worst
}
