//! Run settings: command-line flags layered over an optional JSON config.
//!
//! Flags and config keys share one schema. A config file is read first,
//! every flag given on the command line replaces the matching key, and the
//! result is resolved per command (defaults filled in, inapplicable keys
//! rejected). The resolved settings are what the manifest records, so a
//! manifest is itself a valid config.

use std::path::{Path, PathBuf};

use clap::Args;
use nvm_core::distinguish::grid_range;
use nvm_core::graph::{build_finite, load_edge_list, Family, Graph};
use nvm_core::report::Format;
use nvm_core::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Subcommand this config was resolved for; only read from config files.
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,

    /// JSON config file; flags given on the command line take precedence.
    #[arg(long)]
    #[serde(skip_serializing)]
    pub config: Option<PathBuf>,

    /// Graph family, either a name (with --n/--m/--k/--h/--side/--dim/--graph-seed)
    /// or the compact form such as `complete:5`, `bipartite:2,3` or `tree:2,3`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<usize>,
    /// Root side of a complete bipartite graph: first or second.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<String>,
    /// Lattice dimension.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Seed of a uniform random graph.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph_seed: Option<u64>,
    /// Edge-list file used instead of a family.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<PathBuf>,

    /// First graph of a two-graph command, compact form.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<String>,
    /// Second graph of a two-graph command, compact form.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,

    /// Noise level ε in (0, 1].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Noise level of the second graph in `distinguish` (defaults to --eps).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_b: Option<f64>,
    /// Lag.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Quadruple lags `d1,d2,d3`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<u64>,
    /// Trace length, or the per-graph budget in `distinguish`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub significance: Option<f64>,
    /// Truncation tolerance of the genealogy sampler.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// ε grid as `lo:hi:step`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    /// Trace stem (`<stem>.bits` + `<stem>.json`) read by `stats`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    /// Comma-separated acceptance criterion ids for `verify`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub only: Option<String>,

    /// Output directory. Without it tables go to stdout and no manifest is written.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// csv or jsonl.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    /// Worker threads (also read from THREADS). Never changes results.
    #[arg(long)]
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
}

const GRAPH_KEYS: &[&str] = &[
    "family",
    "n",
    "m",
    "k",
    "h",
    "side",
    "dim",
    "graph_seed",
    "edges",
];
const OUTPUT_KEYS: &[&str] = &["out", "format"];

/// Keys each command accepts besides `command`, `config` and `threads`.
fn allowed(command: &str) -> Vec<&'static str> {
    let extra: &[&str] = match command {
        "gen" => &[],
        "simulate" => &["eps", "t", "seed"],
        "stats" => &["eps", "t", "seed", "trace", "d", "quad", "burn_in"],
        "oracle" => &["eps", "d", "replicas", "tolerance", "seed"],
        "distinguish" => &[
            "a",
            "b",
            "eps",
            "eps_b",
            "d",
            "quad",
            "t",
            "significance",
            "seed",
        ],
        "sweep" => &["a", "b", "d", "grid", "replicas", "tolerance", "seed"],
        "verify" => &["only"],
        _ => &[],
    };
    let graph = matches!(command, "gen" | "simulate" | "stats" | "oracle");
    graph
        .then_some(GRAPH_KEYS)
        .into_iter()
        .flatten()
        .chain(extra)
        .chain(OUTPUT_KEYS)
        .copied()
        .collect()
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

fn to_map(s: &Settings) -> Map<String, Value> {
    match serde_json::to_value(s).expect("settings serialize") {
        Value::Object(m) => m,
        _ => unreachable!(),
    }
}

/// Reads the config file named by `flags.config` (if any) and lays the flags
/// over it.
pub fn merge(flags: Settings) -> Result<Settings> {
    let Some(path) = flags.config.clone() else {
        return Ok(flags);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| invalid(format!("config `{}`: {e}", path.display())))?;
    let base: Settings = serde_json::from_str(&text)
        .map_err(|e| invalid(format!("config `{}`: {e}", path.display())))?;
    let mut merged = to_map(&base);
    merged.extend(to_map(&flags));
    let mut out: Settings =
        serde_json::from_value(Value::Object(merged)).map_err(|e| invalid(e.to_string()))?;
    out.threads = flags.threads.or(base.threads);
    out.config = flags.config;
    Ok(out)
}

impl Settings {
    /// Checks that only applicable keys are present and that the config, if
    /// it names a command, names this one.
    pub fn check_keys(&self, command: &str) -> Result<()> {
        if let Some(c) = &self.command {
            if c != command {
                return Err(invalid(format!("config is for `{c}`, not `{command}`")));
            }
        }
        let ok = allowed(command);
        for key in to_map(self).keys() {
            if key != "command" && !ok.contains(&key.as_str()) {
                return Err(invalid(format!("`{key}` does not apply to `{command}`")));
            }
        }
        Ok(())
    }

    pub fn format(&self) -> Result<Format> {
        self.format.as_deref().unwrap_or("csv").parse()
    }

    pub fn require<T: Copy>(value: Option<T>, field: &str) -> Result<T> {
        value.ok_or_else(|| invalid(format!("`{field}` is required")))
    }

    /// Replaces the family flags with the canonical compact form.
    pub fn resolve_family(&mut self) -> Result<Option<Family>> {
        let Some(name) = self.family.take() else {
            let stray = [
                ("n", self.n.is_some()),
                ("m", self.m.is_some()),
                ("k", self.k.is_some()),
                ("h", self.h.is_some()),
                ("side", self.side.is_some()),
                ("dim", self.dim.is_some()),
                ("graph_seed", self.graph_seed.is_some()),
            ];
            if let Some((key, _)) = stray.iter().find(|(_, set)| *set) {
                return Err(invalid(format!("`{key}` needs `family`")));
            }
            return Ok(None);
        };
        let compact = if name.contains(':') {
            name
        } else {
            let need = |v: Option<usize>, key: &str| {
                v.ok_or_else(|| invalid(format!("`{name}` needs `{key}`")))
            };
            match name.as_str() {
                "complete" | "cycle" | "path" => format!("{name}:{}", need(self.n, "n")?),
                "bipartite" => format!(
                    "bipartite:{},{},{}",
                    need(self.n, "n")?,
                    need(self.m, "m")?,
                    self.side.as_deref().unwrap_or("first")
                ),
                "tree" => format!("tree:{},{}", need(self.k, "k")?, need(self.h, "h")?),
                "star" | "star-leaf" => format!("{name}:{}", need(self.m, "m")?),
                "lattice" => format!("lattice:{}", need(self.dim, "dim")?),
                "random" => format!(
                    "random:{},{}",
                    need(self.n, "n")?,
                    self.graph_seed
                        .ok_or_else(|| invalid("`random` needs `graph_seed`"))?
                ),
                other => return Err(invalid(format!("unknown family `{other}`"))),
            }
        };
        let family: Family = compact.parse()?;
        (
            self.n,
            self.m,
            self.k,
            self.h,
            self.side,
            self.dim,
            self.graph_seed,
        ) = (None, None, None, None, None, None, None);
        self.family = Some(family.to_string());
        Ok(Some(family))
    }

    /// The graph for single-graph commands: a family or an edge-list file.
    pub fn finite_or_family(&mut self) -> Result<GraphSource> {
        let family = self.resolve_family()?;
        match (family, &self.edges) {
            (Some(_), Some(_)) => Err(invalid("give either `family` or `edges`, not both")),
            (Some(f), None) => Ok(GraphSource::Family(f)),
            (None, Some(path)) => Ok(GraphSource::Edges(read_edges(path)?)),
            (None, None) => Err(invalid("`family` or `edges` is required")),
        }
    }

    pub fn pair(&self) -> Result<(Family, Family)> {
        let parse = |v: &Option<String>, key: &str| -> Result<Family> {
            v.as_deref()
                .ok_or_else(|| invalid(format!("`{key}` is required")))?
                .parse()
        };
        Ok((parse(&self.a, "a")?, parse(&self.b, "b")?))
    }

    pub fn quad(&self) -> Result<Option<(usize, usize, usize)>> {
        let Some(q) = &self.quad else { return Ok(None) };
        let parts: Vec<usize> = q
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| invalid(format!("`quad` must be d1,d2,d3, got `{q}`")))?;
        match parts[..] {
            [d1, d2, d3] if 0 < d1 && d1 < d2 && d2 < d3 => Ok(Some((d1, d2, d3))),
            _ => Err(invalid(format!("`quad` needs 0 < d1 < d2 < d3, got `{q}`"))),
        }
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        let g = self
            .grid
            .as_deref()
            .ok_or_else(|| invalid("`grid` is required"))?;
        let parts: Vec<f64> = g
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| invalid(format!("`grid` must be lo:hi:step, got `{g}`")))?;
        match parts[..] {
            [lo, hi, step] => grid_range(lo, hi, step),
            _ => Err(invalid(format!("`grid` must be lo:hi:step, got `{g}`"))),
        }
    }

    pub fn only(&self) -> Result<Option<Vec<u8>>> {
        let Some(s) = &self.only else { return Ok(None) };
        let ids: Vec<u8> = s
            .split(',')
            .map(|p| p.trim().parse::<u8>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| invalid(format!("`only` must be comma-separated ids, got `{s}`")))?;
        let known: Vec<u8> = nvm_core::acceptance::criteria()
            .iter()
            .map(|c| c.id)
            .collect();
        if let Some(id) = ids.iter().find(|id| !known.contains(id)) {
            return Err(invalid(format!("`only`: no criterion {id}")));
        }
        Ok(Some(ids))
    }
}

pub enum GraphSource {
    Family(Family),
    Edges(Graph),
}

impl GraphSource {
    pub fn finite(&self) -> Result<Graph> {
        match self {
            GraphSource::Family(f) => build_finite(f),
            GraphSource::Edges(g) => Ok(g.clone()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            GraphSource::Family(f) => f.to_string(),
            GraphSource::Edges(g) => format!("edge list ({} vertices)", g.vertex_count()),
        }
    }
}

fn read_edges(path: &Path) -> Result<Graph> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("edges `{}`: {e}", path.display())))?;
    load_edge_list(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_flags_become_compact() {
        let mut s = Settings {
            family: Some("bipartite".into()),
            n: Some(2),
            m: Some(3),
            ..Default::default()
        };
        let f = s.resolve_family().unwrap().unwrap();
        assert_eq!(s.family.as_deref(), Some("bipartite:2,3"));
        assert_eq!(f.to_string(), "bipartite:2,3");
        assert!(s.n.is_none() && s.m.is_none());
    }

    #[test]
    fn stray_keys_are_rejected() {
        let s = Settings {
            grid: Some("0.1:0.9:0.1".into()),
            ..Default::default()
        };
        assert!(s.check_keys("gen").unwrap_err().is_validation());
        assert!(s.check_keys("sweep").is_ok());
    }

    #[test]
    fn unknown_config_fields_fail() {
        assert!(serde_json::from_str::<Settings>(r#"{"epsilon": 0.3}"#).is_err());
        assert!(serde_json::from_str::<Settings>(r#"{"eps": 0.3, "threads": 2}"#).is_ok());
    }

    #[test]
    fn quad_and_grid_parse() {
        let s = Settings {
            quad: Some("2,4,6".into()),
            grid: Some("0.1:0.3:0.1".into()),
            ..Default::default()
        };
        assert_eq!(s.quad().unwrap(), Some((2, 4, 6)));
        assert_eq!(s.grid().unwrap(), vec![0.1, 0.2, 0.3]);
        let bad = Settings {
            quad: Some("4,2,6".into()),
            ..Default::default()
        };
        assert!(bad.quad().is_err());
    }
}
