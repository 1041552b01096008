//! Force-directed 2-D layout and node visual attributes.

mod attributes;
mod barnes_hut;
mod forceatlas2;

use std::fmt::Write as _;
use std::path::Path;

pub use attributes::{node_attributes, NodeAttributes};
pub use forceatlas2::{forceatlas2, LayoutParams};

use crate::coupling::CouplingGraph;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutPositions<T> {
    /// `(x, y)` of every graph node, by node index.
    pub positions: Vec<(T, T)>,
    pub iterations_run: usize,
    pub seed: u64,
}

impl<T: Scalar> LayoutPositions<T> {
    pub fn distance(&self, a: usize, b: usize) -> T {
        let (ax, ay) = self.positions[a];
        let (bx, by) = self.positions[b];
        ((ax - bx) * (ax - bx) + (ay - by) * (ay - by)).sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.positions.iter().all(|(x, y)| x.is_finite() && y.is_finite())
    }

    /// `channel_id<TAB>x<TAB>y` rows after a `#` metadata line. Coordinates
    /// are written with six decimals.
    pub fn to_tsv(&self, graph: &CouplingGraph) -> String {
        let mut out = format!("# seed={} iterations={}\n", self.seed, self.iterations_run);
        out.push_str("channel_id\tx\ty\n");
        for (node, (x, y)) in graph.nodes.iter().zip(&self.positions) {
            let _ = writeln!(out, "{}\t{:.6}\t{:.6}", node.id, x, y);
        }
        out
    }

    pub fn from_tsv(text: &str, graph: &CouplingGraph, path: &Path) -> Result<Self> {
        let mut seed = 0;
        let mut iterations_run = 0;
        let mut positions = vec![None; graph.n_nodes()];
        for line in text.lines() {
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("seed", v)) => seed = v.parse().unwrap_or(0),
                        Some(("iterations", v)) => iterations_run = v.parse().unwrap_or(0),
                        _ => {}
                    }
                }
                continue;
            }
            if line.starts_with("channel_id\t") {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, x, y] = fields[..] else {
                return Err(Error::malformed(path, format!("bad line {line:?}")));
            };
            let node = graph
                .node_index(id)
                .ok_or_else(|| Error::malformed(path, format!("unknown channel {id}")))?;
            let parse = |v: &str| {
                v.parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| Error::malformed(path, format!("bad coordinate {v:?}")))
            };
            positions[node] = Some((parse(x)?, parse(y)?));
        }
        let positions = positions
            .into_iter()
            .enumerate()
            .map(|(i, p)| p.ok_or_else(|| Error::UncoveredNode(graph.nodes[i].id.clone())))
            .collect::<Result<_>>()?;
        Ok(Self {
            positions,
            iterations_run,
            seed,
        })
    }
}
