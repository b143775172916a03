//! Rooted graphs: the finite families used throughout the crate, uniform random
//! graphs, the implicit integer lattice, and a plain-text edge-list format.
//!
//! Finite graphs use contiguous 0-based vertex ids. Lattices are never
//! materialized; their neighbors are computed on demand.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_epsilon, Error, Result};

pub type Vertex = usize;

/// Upper bound on materialized graph size.
pub const MAX_VERTICES: usize = 1 << 20;

/// Resampling attempts for disconnected uniform graph draws.
pub const RANDOM_GRAPH_RETRIES: u32 = 64;

/// Which part of a complete bipartite graph holds the root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// The part of size `n`.
    First,
    /// The part of size `m`.
    Second,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Complete {
        n: usize,
    },
    Cycle {
        n: usize,
    },
    /// Path on `n` vertices rooted at an endpoint.
    Path {
        n: usize,
    },
    CompleteBipartite {
        n: usize,
        m: usize,
        side: Side,
    },
    PerfectTree {
        k: usize,
        h: usize,
    },
    Star {
        m: usize,
        leaf_root: bool,
    },
    Lattice {
        d: usize,
    },
    Random {
        n: usize,
        seed: u64,
    },
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Family::Complete { n } if n < 2 => {
                Err(Error::param("n", "complete graph needs n >= 2"))
            }
            Family::Cycle { n } if n < 3 => Err(Error::param("n", "cycle needs n >= 3")),
            Family::Path { n } if n < 2 => Err(Error::param("n", "path needs n >= 2")),
            Family::CompleteBipartite { n, m, .. } if n < 1 || m < 1 => Err(Error::param(
                if n < 1 { "n" } else { "m" },
                "complete bipartite parts need at least one vertex each",
            )),
            Family::PerfectTree { k, .. } if k < 1 => {
                Err(Error::param("k", "tree arity must be >= 1"))
            }
            Family::PerfectTree { h, .. } if h < 1 => {
                Err(Error::param("h", "tree height must be >= 1"))
            }
            Family::Star { m, .. } if m < 1 => {
                Err(Error::param("m", "star needs at least one leaf"))
            }
            Family::Lattice { d } if d < 1 => {
                Err(Error::param("d", "lattice dimension must be >= 1"))
            }
            Family::Random { n, .. } if n < 2 => {
                Err(Error::param("n", "random graph needs n >= 2"))
            }
            _ => Ok(()),
        }
    }

    /// Vertex count of the materialized graph, `None` for lattices or on overflow.
    pub fn vertex_count(&self) -> Option<usize> {
        match *self {
            Family::Complete { n } | Family::Cycle { n } | Family::Path { n } => Some(n),
            Family::Random { n, .. } => Some(n),
            Family::CompleteBipartite { n, m, .. } => n.checked_add(m),
            Family::Star { m, .. } => m.checked_add(1),
            Family::PerfectTree { k, h } => perfect_tree_size(k, h),
            Family::Lattice { .. } => None,
        }
    }
}

fn perfect_tree_size(k: usize, h: usize) -> Option<usize> {
    let mut total: usize = 1;
    let mut level: usize = 1;
    for _ in 0..h {
        level = level.checked_mul(k)?;
        total = total.checked_add(level)?;
    }
    Some(total)
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Family::Complete { n } => write!(f, "complete:{n}"),
            Family::Cycle { n } => write!(f, "cycle:{n}"),
            Family::Path { n } => write!(f, "path:{n}"),
            Family::CompleteBipartite {
                n,
                m,
                side: Side::First,
            } => write!(f, "bipartite:{n},{m}"),
            Family::CompleteBipartite {
                n,
                m,
                side: Side::Second,
            } => {
                write!(f, "bipartite:{n},{m},second")
            }
            Family::PerfectTree { k, h } => write!(f, "tree:{k},{h}"),
            Family::Star {
                m,
                leaf_root: false,
            } => write!(f, "star:{m}"),
            Family::Star { m, leaf_root: true } => write!(f, "star-leaf:{m}"),
            Family::Lattice { d } => write!(f, "lattice:{d}"),
            Family::Random { n, seed } => write!(f, "random:{n},{seed}"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    /// Parses the compact `name:params` form, e.g. `complete:5`, `bipartite:2,3`,
    /// `tree:2,3`, `star-leaf:4`, `lattice:2`, `random:64,7`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::param("family", format!("`{s}`: {reason}"));
        let (name, rest) = s
            .split_once(':')
            .ok_or_else(|| bad("expected name:params"))?;
        let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
        let num = |i: usize| -> Result<usize> {
            parts
                .get(i)
                .ok_or_else(|| bad("missing parameter"))?
                .parse::<usize>()
                .map_err(|_| bad("parameters must be non-negative integers"))
        };
        let arity = |k: usize| -> Result<()> {
            if parts.len() == k {
                Ok(())
            } else {
                Err(bad(&format!("expected {k} parameter(s)")))
            }
        };
        let family = match name.trim() {
            "complete" => {
                arity(1)?;
                Family::Complete { n: num(0)? }
            }
            "cycle" => {
                arity(1)?;
                Family::Cycle { n: num(0)? }
            }
            "path" => {
                arity(1)?;
                Family::Path { n: num(0)? }
            }
            "bipartite" => {
                let side = match parts.len() {
                    2 => Side::First,
                    3 => match parts[2] {
                        "first" => Side::First,
                        "second" => Side::Second,
                        _ => return Err(bad("side must be `first` or `second`")),
                    },
                    _ => return Err(bad("expected n,m[,side]")),
                };
                Family::CompleteBipartite {
                    n: num(0)?,
                    m: num(1)?,
                    side,
                }
            }
            "tree" => {
                arity(2)?;
                Family::PerfectTree {
                    k: num(0)?,
                    h: num(1)?,
                }
            }
            "star" => {
                arity(1)?;
                Family::Star {
                    m: num(0)?,
                    leaf_root: false,
                }
            }
            "star-leaf" => {
                arity(1)?;
                Family::Star {
                    m: num(0)?,
                    leaf_root: true,
                }
            }
            "lattice" => {
                arity(1)?;
                Family::Lattice { d: num(0)? }
            }
            "random" => {
                arity(2)?;
                let seed = parts[1]
                    .parse::<u64>()
                    .map_err(|_| bad("seed must be an integer"))?;
                Family::Random { n: num(0)?, seed }
            }
            _ => return Err(bad("unknown family")),
        };
        family.validate()?;
        Ok(family)
    }
}

/// A family plus the noise level an experiment pairs it with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: Family,
    pub epsilon: f64,
}

impl FamilySpec {
    pub fn new(family: Family, epsilon: f64) -> Result<Self> {
        let spec = FamilySpec { family, epsilon };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        check_epsilon(self.epsilon)
    }
}

/// Provenance of a finite graph's structure.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    Family(Family),
    Custom,
}

/// A finite, simple, undirected, connected graph with a distinguished root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<Vertex>>,
    root: Vertex,
    tag: FamilyTag,
}

impl Graph {
    /// Validates and builds a graph from adjacency lists. Neighbor lists are
    /// sorted so that structurally equal graphs compare equal.
    pub fn from_adjacency(
        mut adjacency: Vec<Vec<Vertex>>,
        root: Vertex,
        tag: FamilyTag,
    ) -> Result<Self> {
        let n = adjacency.len();
        if n < 2 {
            return Err(Error::Validation(format!(
                "graph needs at least 2 vertices, got {n}"
            )));
        }
        if root >= n {
            return Err(Error::Validation(format!(
                "root {root} not in vertex set 0..{n}"
            )));
        }
        for (v, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Validation(format!("duplicate edge at vertex {v}")));
            }
            if list.binary_search(&v).is_ok() {
                return Err(Error::Validation(format!("loop at vertex {v}")));
            }
            if let Some(&w) = list.iter().find(|&&w| w >= n) {
                return Err(Error::Validation(format!(
                    "edge {v}-{w} leaves the vertex set"
                )));
            }
        }
        for (v, list) in adjacency.iter().enumerate() {
            for &w in list {
                if adjacency[w].binary_search(&v).is_err() {
                    return Err(Error::Validation(format!("edge {v}-{w} is not symmetric")));
                }
            }
        }
        let g = Graph {
            adjacency,
            root,
            tag,
        };
        let reached = g
            .distances_from(root)
            .iter()
            .filter(|d| d.is_some())
            .count();
        if reached != n {
            return Err(Error::Validation(format!(
                "graph is disconnected: {reached} of {n} vertices reachable from the root"
            )));
        }
        Ok(g)
    }

    fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (Vertex, Vertex)>,
        root: Vertex,
        tag: FamilyTag,
    ) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for (a, b) in edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        Graph::from_adjacency(adjacency, root, tag)
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn root(&self) -> Vertex {
        self.root
    }

    pub fn tag(&self) -> &FamilyTag {
        &self.tag
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adjacency[v].len()
    }

    pub fn adjacency(&self) -> &[Vec<Vertex>] {
        &self.adjacency
    }

    /// Same structure, different root. The family tag is dropped since the
    /// family's root convention no longer holds.
    pub fn with_root(&self, root: Vertex) -> Result<Self> {
        if root >= self.vertex_count() {
            return Err(Error::Domain(format!("vertex {root} out of range")));
        }
        Ok(Graph {
            adjacency: self.adjacency.clone(),
            root,
            tag: FamilyTag::Custom,
        })
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// BFS distances; `None` for unreachable vertices.
    pub fn distances_from(&self, source: Vertex) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count()];
        let mut queue = VecDeque::from([source]);
        dist[source] = Some(0);
        while let Some(v) = queue.pop_front() {
            let next = dist[v].map(|d| d + 1);
            for &w in &self.adjacency[v] {
                if dist[w].is_none() {
                    dist[w] = next;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Proper 2-coloring if the graph is bipartite.
    pub fn bipartition(&self) -> Option<Vec<u8>> {
        let dist = self.distances_from(0);
        let color: Vec<u8> = dist.iter().map(|d| (d.unwrap_or(0) % 2) as u8).collect();
        self.edges()
            .all(|(a, b)| color[a] != color[b])
            .then_some(color)
    }
}

/// The implicit integer lattice Z^d rooted at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lattice {
    dim: usize,
}

impl Lattice {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("d", "lattice dimension must be >= 1"));
        }
        Ok(Lattice { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> Vec<i64> {
        vec![0; self.dim]
    }

    /// The `i`-th neighbor in canonical order: `+e_0, -e_0, +e_1, -e_1, ...`.
    pub fn neighbor(&self, p: &[i64], i: usize) -> Vec<i64> {
        let mut q = p.to_vec();
        q[i / 2] += if i.is_multiple_of(2) { 1 } else { -1 };
        q
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RootedGraph {
    Finite(Graph),
    Lattice(Lattice),
}

/// A vertex of a finite graph or a point of a lattice.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Site {
    Vertex(Vertex),
    Point(Vec<i64>),
}

impl RootedGraph {
    pub fn as_finite(&self) -> Option<&Graph> {
        match self {
            RootedGraph::Finite(g) => Some(g),
            RootedGraph::Lattice(_) => None,
        }
    }

    pub fn root(&self) -> Site {
        match self {
            RootedGraph::Finite(g) => Site::Vertex(g.root),
            RootedGraph::Lattice(l) => Site::Point(l.origin()),
        }
    }

    pub fn degree(&self, v: &Site) -> Result<usize> {
        Ok(neighbors(self, v)?.len())
    }
}

/// Neighbors of `v`: the adjacency list for finite graphs, the `2d` unit
/// steps for lattices.
pub fn neighbors(g: &RootedGraph, v: &Site) -> Result<Vec<Site>> {
    match (g, v) {
        (RootedGraph::Finite(g), Site::Vertex(v)) => {
            if *v >= g.vertex_count() {
                return Err(Error::Domain(format!(
                    "vertex {v} out of range 0..{}",
                    g.vertex_count()
                )));
            }
            Ok(g.neighbors(*v).iter().map(|&w| Site::Vertex(w)).collect())
        }
        (RootedGraph::Lattice(l), Site::Point(p)) => {
            if p.len() != l.dim {
                return Err(Error::Domain(format!(
                    "point has {} coordinates, lattice has {}",
                    p.len(),
                    l.dim
                )));
            }
            Ok((0..2 * l.dim)
                .map(|i| Site::Point(l.neighbor(p, i)))
                .collect())
        }
        _ => Err(Error::Domain("site kind does not match graph kind".into())),
    }
}

/// Anything a terminable random walk can move on.
pub trait Walkable: Sync {
    type Node: Clone + Eq + Ord + Hash + Send + Sync + fmt::Debug;

    fn start(&self) -> Self::Node;
    fn degree_of(&self, v: &Self::Node) -> usize;
    /// The `i`-th neighbor, `i < degree_of(v)`.
    fn step(&self, v: &Self::Node, i: usize) -> Self::Node;
}

impl Walkable for Graph {
    type Node = Vertex;

    fn start(&self) -> Vertex {
        self.root
    }

    fn degree_of(&self, v: &Vertex) -> usize {
        self.adjacency[*v].len()
    }

    fn step(&self, v: &Vertex, i: usize) -> Vertex {
        self.adjacency[*v][i]
    }
}

impl Walkable for Lattice {
    type Node = Vec<i64>;

    fn start(&self) -> Vec<i64> {
        self.origin()
    }

    fn degree_of(&self, _: &Vec<i64>) -> usize {
        2 * self.dim
    }

    fn step(&self, v: &Vec<i64>, i: usize) -> Vec<i64> {
        self.neighbor(v, i)
    }
}

/// Builds the rooted graph described by `spec`.
pub fn build_family(spec: &FamilySpec) -> Result<RootedGraph> {
    spec.validate()?;
    build(&spec.family)
}

/// Like [`build_family`] but without an accompanying noise level.
pub fn build(family: &Family) -> Result<RootedGraph> {
    family.validate()?;
    if let Family::Lattice { d } = *family {
        return Ok(RootedGraph::Lattice(Lattice::new(d)?));
    }
    if let Family::Random { n, seed } = *family {
        return sample_uniform_graph(n, seed).map(RootedGraph::Finite);
    }
    let n = family
        .vertex_count()
        .filter(|&n| n <= MAX_VERTICES)
        .ok_or_else(|| Error::Capacity(format!("{family} exceeds {MAX_VERTICES} vertices")))?;
    let tag = FamilyTag::Family(family.clone());
    let g = match *family {
        Family::Complete { n } => {
            let edges = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b)));
            Graph::from_edges(n, edges, 0, tag)?
        }
        Family::Cycle { n } => Graph::from_edges(n, (0..n).map(|a| (a, (a + 1) % n)), 0, tag)?,
        Family::Path { n } => Graph::from_edges(n, (1..n).map(|a| (a - 1, a)), 0, tag)?,
        Family::CompleteBipartite { n: a, m: b, side } => {
            let edges = (0..a).flat_map(|u| (a..a + b).map(move |v| (u, v)));
            let root = match side {
                Side::First => 0,
                Side::Second => a,
            };
            Graph::from_edges(a + b, edges, root, tag)?
        }
        Family::PerfectTree { k, .. } => {
            // Heap layout: children of v are k*v+1 ..= k*v+k.
            Graph::from_edges(n, (1..n).map(|c| ((c - 1) / k, c)), 0, tag)?
        }
        Family::Star { m, leaf_root } => Graph::from_edges(
            m + 1,
            (1..=m).map(|leaf| (0, leaf)),
            usize::from(leaf_root),
            tag,
        )?,
        Family::Lattice { .. } | Family::Random { .. } => unreachable!(),
    };
    debug_assert_eq!(g.vertex_count(), n);
    Ok(RootedGraph::Finite(g))
}

/// Convenience for families known to be finite.
pub fn build_finite(family: &Family) -> Result<Graph> {
    match build(family)? {
        RootedGraph::Finite(g) => Ok(g),
        RootedGraph::Lattice(_) => Err(Error::Unsupported {
            what: "lattice",
            reason: "a finite graph is required".into(),
        }),
    }
}

/// Uniform labelled graph on `n` vertices (each pair an edge with probability
/// 1/2), rooted at 0. Disconnected draws are resampled on the next stream.
///
/// Pair `(i, j)` is decided by the draw at its lexicographic position in the
/// stream keyed by `(seed, attempt)`.
pub fn sample_uniform_graph(n: usize, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::param("n", "random graph needs n >= 2"));
    }
    if n > 1 << 14 {
        return Err(Error::Capacity(format!("random graph with {n} vertices")));
    }
    let tag = FamilyTag::Family(Family::Random { n, seed });
    for attempt in 0..RANDOM_GRAPH_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::from(attempt));
        let mut adjacency = vec![Vec::new(); n];
        for a in 0..n {
            for b in a + 1..n {
                if rng.random::<bool>() {
                    adjacency[a].push(b);
                    adjacency[b].push(a);
                }
            }
        }
        match Graph::from_adjacency(adjacency, 0, tag.clone()) {
            Ok(g) => return Ok(g),
            Err(Error::Validation(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Sampling {
        attempts: RANDOM_GRAPH_RETRIES,
        reason: format!("every draw on {n} vertices was disconnected"),
    })
}

/// Parses `root r` followed by one `u v` edge per line. Blank lines and
/// `#` comments are ignored.
pub fn load_edge_list(text: &str) -> Result<Graph> {
    let mut root = None;
    let mut edges = BTreeSet::new();
    let mut max_id = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse_id = |s: &str| {
            s.parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("`{s}` is not a vertex id"),
            })
        };
        if root.is_none() {
            match fields.as_slice() {
                ["root", r] => {
                    let r = parse_id(r)?;
                    max_id = max_id.max(r);
                    root = Some(r);
                    continue;
                }
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "first line must be `root <id>`".into(),
                    })
                }
            }
        }
        let [a, b] = fields.as_slice() else {
            return Err(Error::Parse {
                line: line_no,
                message: "expected `u v`".into(),
            });
        };
        let (a, b) = (parse_id(a)?, parse_id(b)?);
        if a == b {
            return Err(Error::Validation(format!("loop {a}-{a} on line {line_no}")));
        }
        if a >= MAX_VERTICES || b >= MAX_VERTICES {
            return Err(Error::Capacity(format!(
                "vertex id on line {line_no} exceeds {MAX_VERTICES}"
            )));
        }
        if !edges.insert((a.min(b), a.max(b))) {
            return Err(Error::Validation(format!(
                "duplicate edge {a}-{b} on line {line_no}"
            )));
        }
        max_id = max_id.max(a).max(b);
    }
    let root = root.ok_or(Error::Parse {
        line: 1,
        message: "missing `root <id>` line".into(),
    })?;
    Graph::from_edges(max_id + 1, edges, root, FamilyTag::Custom)
}

/// Canonical edge-list text: the root line, then edges `u v` with `u < v`
/// in lexicographic order.
pub fn save_edge_list(g: &Graph) -> String {
    let mut out = format!("root {}\n", g.root);
    for (a, b) in g.edges() {
        out.push_str(&format!("{a} {b}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn degrees(g: &Graph) -> Vec<usize> {
        let mut d: Vec<usize> = (0..g.vertex_count()).map(|v| g.degree(v)).collect();
        d.sort_unstable_by(|a, b| b.cmp(a));
        d
    }

    #[test]
    fn complete_five() {
        let g = build_finite(&Family::Complete { n: 5 }).unwrap();
        assert_eq!(g.vertex_count(), 5);
        assert_eq!(g.edge_count(), 10);
        assert!(degrees(&g).iter().all(|&d| d == 4));
    }

    #[test]
    fn perfect_binary_tree_height_three() {
        let g = build_finite(&Family::PerfectTree { k: 2, h: 3 }).unwrap();
        assert_eq!(g.vertex_count(), 15);
        assert_eq!(g.degree(g.root()), 2);
        assert_eq!((0..15).filter(|&v| g.degree(v) == 1).count(), 8);
        let dist = g.distances_from(0);
        for v in 0..15 {
            let children = g
                .neighbors(v)
                .iter()
                .filter(|&&w| dist[w] > dist[v])
                .count();
            if children == 0 {
                assert_eq!(dist[v], Some(3));
            } else {
                assert_eq!(children, 2);
            }
        }
    }

    #[test]
    fn unary_tree_is_a_path() {
        let g = build_finite(&Family::PerfectTree { k: 1, h: 2 }).unwrap();
        assert_eq!(save_edge_list(&g), "root 0\n0 1\n1 2\n");
    }

    #[test]
    fn bipartite_two_three() {
        let g = build_finite(&Family::CompleteBipartite {
            n: 2,
            m: 3,
            side: Side::First,
        })
        .unwrap();
        assert_eq!(g.edge_count(), 6);
        assert_eq!(degrees(&g), vec![3, 3, 2, 2, 2]);
        assert_eq!(g.neighbors(g.root()), &[2, 3, 4]);
        let other = build_finite(&Family::CompleteBipartite {
            n: 2,
            m: 3,
            side: Side::Second,
        })
        .unwrap();
        assert_eq!(other.degree(other.root()), 2);
    }

    #[test]
    fn star_roots() {
        let center = build_finite(&Family::Star {
            m: 4,
            leaf_root: false,
        })
        .unwrap();
        let leaf = build_finite(&Family::Star {
            m: 4,
            leaf_root: true,
        })
        .unwrap();
        assert_eq!(center.degree(center.root()), 4);
        assert_eq!(leaf.degree(leaf.root()), 1);
    }

    #[test]
    fn invalid_parameters_name_the_field() {
        let err = build(&Family::Cycle { n: 2 }).unwrap_err();
        assert!(matches!(err, Error::Parameter { field: "n", .. }));
        let err = FamilySpec::new(Family::Complete { n: 3 }, 0.0).unwrap_err();
        assert!(matches!(
            err,
            Error::Parameter {
                field: "epsilon",
                ..
            }
        ));
        let err = FamilySpec::new(Family::Complete { n: 3 }, 1.5).unwrap_err();
        assert!(matches!(
            err,
            Error::Parameter {
                field: "epsilon",
                ..
            }
        ));
        assert!(FamilySpec::new(Family::Complete { n: 3 }, 1.0).is_ok());
    }

    #[test]
    fn neighbor_lists() {
        let c4 = build(&Family::Cycle { n: 4 }).unwrap();
        assert_eq!(
            neighbors(&c4, &Site::Vertex(0)).unwrap(),
            vec![Site::Vertex(1), Site::Vertex(3)]
        );
        let z2 = build(&Family::Lattice { d: 2 }).unwrap();
        assert_eq!(
            neighbors(&z2, &z2.root()).unwrap(),
            vec![
                Site::Point(vec![1, 0]),
                Site::Point(vec![-1, 0]),
                Site::Point(vec![0, 1]),
                Site::Point(vec![0, -1]),
            ]
        );
        let k23 = build(&Family::CompleteBipartite {
            n: 2,
            m: 3,
            side: Side::First,
        })
        .unwrap();
        for v in 0..2 {
            let ns = neighbors(&k23, &Site::Vertex(v)).unwrap();
            assert_eq!(ns, vec![Site::Vertex(2), Site::Vertex(3), Site::Vertex(4)]);
        }
        assert!(matches!(
            neighbors(&c4, &Site::Vertex(4)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn lattice_degree() {
        for d in 1..5 {
            let z = build(&Family::Lattice { d }).unwrap();
            assert_eq!(z.degree(&Site::Point(vec![3; d])).unwrap(), 2 * d);
        }
    }

    #[test]
    fn random_graph_is_deterministic() {
        let a = sample_uniform_graph(64, 7).unwrap();
        let b = sample_uniform_graph(64, 7).unwrap();
        assert_eq!(a, b);
        // Edge count is Binomial(2016, 1/2): mean 1008, sd 22.4; the degree
        // sum 2|E| then lands in 2016 +- 268.
        assert!((874..=1142).contains(&a.edge_count()), "{}", a.edge_count());
        let degree_sum: usize = (0..64).map(|v| a.degree(v)).sum();
        assert!((1748..=2284).contains(&degree_sum), "{degree_sum}");
        assert_ne!(a, sample_uniform_graph(64, 8).unwrap());
    }

    #[test]
    fn random_graph_on_two_vertices_is_k2() {
        for seed in 0..20 {
            let g = sample_uniform_graph(2, seed).unwrap();
            assert_eq!(g.edge_count(), 1);
        }
    }

    #[test]
    fn edge_list_loading() {
        let g = load_edge_list("root 0\n0 1\n").unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert!(matches!(
            load_edge_list("root 0\n0 1\n2 3\n"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            load_edge_list("root 0\n0 0\n"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            load_edge_list("root 0\n0 1\n1 0\n"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            load_edge_list("root 0\n0 x\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            load_edge_list("0 1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            load_edge_list("root 0\n0 1 2\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn canonical_save() {
        let g = load_edge_list("root 2\n# triangle\n2 1\n\n0 2\n1 0\n").unwrap();
        assert_eq!(save_edge_list(&g), "root 2\n0 1\n0 2\n1 2\n");
    }

    #[test]
    fn family_strings_round_trip() {
        for s in [
            "complete:5",
            "cycle:6",
            "path:3",
            "bipartite:2,3",
            "bipartite:2,3,second",
            "tree:2,3",
            "star:5",
            "star-leaf:5",
            "lattice:3",
            "random:64,7",
        ] {
            let f: Family = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        assert!("complete:1".parse::<Family>().is_err());
        assert!("blob:3".parse::<Family>().is_err());
        assert!("tree:2".parse::<Family>().is_err());
    }

    #[test]
    fn bipartition_detection() {
        assert!(build_finite(&Family::Cycle { n: 6 })
            .unwrap()
            .bipartition()
            .is_some());
        assert!(build_finite(&Family::Cycle { n: 5 })
            .unwrap()
            .bipartition()
            .is_none());
        assert!(build_finite(&Family::PerfectTree { k: 3, h: 2 })
            .unwrap()
            .bipartition()
            .is_some());
    }
}
