//! Synchronous forward simulation of the noisy voter model on a finite graph,
//! observed at the root.
//!
//! At step `t` every vertex reads the time-`t-1` state: with probability `ε`
//! it takes a fresh fair coin, otherwise it copies a uniformly chosen
//! neighbor. Step `t` draws from the stream keyed by `(seed, t)` in vertex
//! order, so a trace is a pure function of `(graph, ε, seed)` and a longer
//! trace extends a shorter one bit for bit.

use std::fs;
use std::path::Path;

use bitvec::vec::BitVec;
use rand::distr::{Bernoulli, Distribution};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_epsilon, Error, Result};
use crate::graph::{save_edge_list, Family, FamilyTag, Graph, RootedGraph};
use crate::rng::stream_rng;

/// Longest trace we are willing to hold in memory.
pub const MAX_TRACE_LEN: u64 = 1 << 32;

/// Threshold for the default burn-in: the first `B` entries are skipped where
/// `(1-ε)^B` drops below this.
pub const BURN_IN_TOLERANCE: f64 = 1e-9;

/// Identifies the graph a trace was generated on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphDescriptor {
    Family(Family),
    /// SHA-256 of the canonical edge-list text.
    EdgeList {
        sha256: String,
    },
    Unknown,
}

impl GraphDescriptor {
    pub fn of(g: &Graph) -> Self {
        match g.tag() {
            FamilyTag::Family(f) => GraphDescriptor::Family(f.clone()),
            FamilyTag::Custom => GraphDescriptor::EdgeList {
                sha256: hex::encode(Sha256::digest(save_edge_list(g).as_bytes())),
            },
        }
    }
}

/// Smallest `B` with `(1-ε)^B < 1e-9`.
pub fn default_burn_in(epsilon: f64) -> usize {
    let decay = 1.0 - epsilon;
    if decay <= 0.0 {
        return 1;
    }
    let b = (BURN_IN_TOLERANCE.ln() / decay.ln()).floor() as usize + 1;
    debug_assert!(decay.powi(b as i32) < BURN_IN_TOLERANCE);
    b
}

/// Observations `X_0 .. X_T` at the root.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    bits: Vec<u8>,
    epsilon: f64,
    graph: GraphDescriptor,
    seed: u64,
    burn_in: usize,
}

impl Trace {
    /// Wraps externally produced bits (each 0 or 1).
    pub fn from_bits(bits: Vec<u8>, epsilon: f64, burn_in: usize) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Domain(
                "trace must hold at least one observation".into(),
            ));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Domain("trace entries must be 0 or 1".into()));
        }
        check_epsilon(epsilon)?;
        let mut trace = Trace {
            bits,
            epsilon,
            graph: GraphDescriptor::Unknown,
            seed: 0,
            burn_in: 0,
        };
        trace.set_burn_in(burn_in)?;
        Ok(trace)
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn graph(&self) -> &GraphDescriptor {
        &self.graph
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    /// Bits after the burn-in.
    pub fn usable(&self) -> &[u8] {
        &self.bits[self.burn_in..]
    }

    pub fn set_burn_in(&mut self, burn_in: usize) -> Result<()> {
        if burn_in >= self.bits.len() {
            return Err(Error::Domain(format!(
                "burn-in {burn_in} must be shorter than the trace ({})",
                self.bits.len()
            )));
        }
        self.burn_in = burn_in;
        Ok(())
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Result<Self> {
        self.set_burn_in(burn_in)?;
        Ok(self)
    }

    /// The bitwise complement, same metadata.
    pub fn complement(&self) -> Trace {
        Trace {
            bits: self.bits.iter().map(|b| 1 - b).collect(),
            ..self.clone()
        }
    }

    pub fn sidecar(&self) -> TraceSidecar {
        TraceSidecar {
            length: self.bits.len(),
            epsilon: self.epsilon,
            seed: self.seed,
            graph: self.graph.clone(),
            burn_in: self.burn_in,
            bit_order: "msb-first".into(),
        }
    }

    /// Bits packed eight per byte, most significant bit first; the last byte
    /// is zero-padded.
    pub fn packed_bits(&self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | (b << (7 - i)))
            })
            .collect()
    }

    /// Writes `<stem>.bits` and the JSON sidecar `<stem>.json`.
    pub fn write_files(&self, stem: &Path) -> Result<()> {
        fs::write(stem.with_extension("bits"), self.packed_bits())?;
        let mut json = serde_json::to_string_pretty(&self.sidecar())?;
        json.push('\n');
        fs::write(stem.with_extension("json"), json)?;
        Ok(())
    }

    pub fn read_files(stem: &Path) -> Result<Self> {
        let sidecar: TraceSidecar =
            serde_json::from_slice(&fs::read(stem.with_extension("json"))?)?;
        let packed = fs::read(stem.with_extension("bits"))?;
        Trace::from_packed(&packed, sidecar)
    }

    pub fn from_packed(packed: &[u8], sidecar: TraceSidecar) -> Result<Self> {
        if sidecar.bit_order != "msb-first" {
            return Err(Error::Validation(format!(
                "unsupported bit order `{}`",
                sidecar.bit_order
            )));
        }
        if packed.len() != sidecar.length.div_ceil(8) {
            return Err(Error::Validation(format!(
                "bit file holds {} bytes, sidecar length {} needs {}",
                packed.len(),
                sidecar.length,
                sidecar.length.div_ceil(8)
            )));
        }
        let bits = (0..sidecar.length)
            .map(|i| (packed[i / 8] >> (7 - i % 8)) & 1)
            .collect();
        let mut trace = Trace::from_bits(bits, sidecar.epsilon, sidecar.burn_in)?;
        trace.seed = sidecar.seed;
        trace.graph = sidecar.graph;
        Ok(trace)
    }
}

/// JSON metadata stored next to a raw bit file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSidecar {
    pub length: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub graph: GraphDescriptor,
    pub burn_in: usize,
    pub bit_order: String,
}

/// Incremental simulator; holds the full vertex state so a trace can be
/// extended without regenerating its prefix.
pub struct Simulator<'g> {
    graph: &'g Graph,
    epsilon: f64,
    noise: Bernoulli,
    seed: u64,
    state: BitVec,
    next: BitVec,
    bits: Vec<u8>,
}

impl<'g> Simulator<'g> {
    /// Draws `X_0` (iid fair coins, stream 0) and records the root's value.
    pub fn new(graph: &'g Graph, epsilon: f64, seed: u64) -> Result<Self> {
        check_epsilon(epsilon)?;
        let noise = Bernoulli::new(epsilon).map_err(|e| Error::param("epsilon", e.to_string()))?;
        let n = graph.vertex_count();
        let mut rng = stream_rng(seed, 0);
        let state: BitVec = (0..n).map(|_| rng.random::<bool>()).collect();
        let bits = vec![u8::from(state[graph.root()])];
        Ok(Simulator {
            graph,
            epsilon,
            noise,
            seed,
            next: BitVec::repeat(false, n),
            state,
            bits,
        })
    }

    /// Current time `t`; the trace holds `t + 1` observations.
    pub fn time(&self) -> u64 {
        self.bits.len() as u64 - 1
    }

    pub fn advance(&mut self, steps: u64) -> Result<()> {
        let target = self
            .time()
            .checked_add(steps)
            .filter(|&t| t < MAX_TRACE_LEN);
        let Some(target) = target else {
            return Err(Error::Capacity(format!(
                "trace length {} + {steps} exceeds {MAX_TRACE_LEN}",
                self.bits.len()
            )));
        };
        self.bits.reserve(steps as usize);
        let root = self.graph.root();
        for t in self.time() + 1..=target {
            let mut rng = stream_rng(self.seed, t);
            for v in 0..self.graph.vertex_count() {
                let value = if self.noise.sample(&mut rng) {
                    rng.random::<bool>()
                } else {
                    let ns = self.graph.neighbors(v);
                    self.state[ns[rng.random_range(0..ns.len())]]
                };
                self.next.set(v, value);
            }
            std::mem::swap(&mut self.state, &mut self.next);
            self.bits.push(u8::from(self.state[root]));
        }
        Ok(())
    }

    /// Full vertex state at the current time.
    pub fn state(&self) -> &BitVec {
        &self.state
    }

    pub fn trace(&self) -> Trace {
        let len = self.bits.len();
        Trace {
            bits: self.bits.clone(),
            epsilon: self.epsilon,
            graph: GraphDescriptor::of(self.graph),
            seed: self.seed,
            burn_in: default_burn_in(self.epsilon).min(len - 1),
        }
    }
}

/// Simulates `X_0 .. X_{t_max}` at the root of a finite graph.
pub fn simulate_trace(g: &RootedGraph, epsilon: f64, t_max: u64, seed: u64) -> Result<Trace> {
    let graph = g.as_finite().ok_or_else(|| Error::Unsupported {
        what: "forward simulation on a lattice",
        reason: "forward simulation needs a finite graph".into(),
    })?;
    simulate_finite(graph, epsilon, t_max, seed)
}

pub fn simulate_finite(graph: &Graph, epsilon: f64, t_max: u64, seed: u64) -> Result<Trace> {
    if t_max < 1 {
        return Err(Error::param("t_max", "must be >= 1"));
    }
    let mut sim = Simulator::new(graph, epsilon, seed)?;
    sim.advance(t_max)?;
    Ok(sim.trace())
}

/// Empirical law of `width`-bit windows over the post-burn-in bits.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowDistribution {
    pub width: usize,
    pub stride: usize,
    /// Indexed by the window read as a binary number, first bit most significant.
    pub counts: Vec<u64>,
    pub total: u64,
}

impl WindowDistribution {
    pub fn frequency(&self, window: usize) -> f64 {
        self.counts[window] as f64 / self.total as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|w| self.frequency(w)).collect()
    }

    /// Non-zero entries keyed by the window's bit string.
    pub fn to_map(&self) -> std::collections::BTreeMap<String, f64> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(w, _)| {
                (
                    format!("{w:0width$b}", width = self.width),
                    self.frequency(w),
                )
            })
            .collect()
    }
}

/// Largest supported window width.
pub const MAX_WINDOW: usize = 20;

/// Sliding-window distribution (every start position).
pub fn window_distribution(trace: &Trace, width: usize) -> Result<WindowDistribution> {
    window_counts(trace, width, 1)
}

/// Window distribution sampling one window every `stride` positions. Strides
/// well beyond the mixing time give nearly independent windows, which is what
/// contingency tests assume.
pub fn window_counts(trace: &Trace, width: usize, stride: usize) -> Result<WindowDistribution> {
    if width == 0 || width > MAX_WINDOW {
        return Err(Error::param(
            "w",
            format!("window width must be in 1..={MAX_WINDOW}"),
        ));
    }
    if stride == 0 {
        return Err(Error::param("stride", "must be >= 1"));
    }
    let bits = trace.usable();
    if bits.len() < width {
        return Err(Error::Domain(format!(
            "window width {width} exceeds the {} usable observations",
            bits.len()
        )));
    }
    let mut counts = vec![0u64; 1 << width];
    let mut total = 0;
    for start in (0..=bits.len() - width).step_by(stride) {
        let w = bits[start..start + width]
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | b as usize);
        counts[w] += 1;
        total += 1;
    }
    Ok(WindowDistribution {
        width,
        stride,
        counts,
        total,
    })
}
