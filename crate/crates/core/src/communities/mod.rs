//! Non-overlapping community detection on the coupling graph.

mod louvain;
mod modularity;
mod summary;

use std::fmt::Write as _;
use std::path::Path;

pub use louvain::{louvain, LouvainParams};
pub use modularity::{modularity, modularity_with_resolution};
pub use summary::{coalition_summary, CoalitionMember, CoalitionReport};

use crate::coupling::CouplingGraph;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A partition of the graph's nodes.
///
/// `membership[i]` is the community of graph node `i`. Community ids are
/// contiguous from 0 and ordered by descending size.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityAssignment<T> {
    pub membership: Vec<usize>,
    /// Modularity (resolution 1) of `membership` on the weighted graph.
    pub modularity: T,
    pub community_sizes: Vec<usize>,
    pub seed: u64,
    pub resolution: T,
    /// Aggregation levels performed.
    pub passes: usize,
    /// Objective at the given resolution: the all-singleton start, then the
    /// value after every level.
    pub pass_modularity: Vec<T>,
}

impl<T: Scalar> CommunityAssignment<T> {
    pub fn n_communities(&self) -> usize {
        self.community_sizes.len()
    }

    /// Renumbers communities by descending size (ties: the community whose
    /// first member has the smaller node index comes first).
    pub fn canonical_labels(raw: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let n_raw = raw.iter().copied().max().map_or(0, |m| m + 1);
        let mut size = vec![0usize; n_raw];
        let mut first = vec![usize::MAX; n_raw];
        for (i, &c) in raw.iter().enumerate() {
            size[c] += 1;
            first[c] = first[c].min(i);
        }
        let mut order: Vec<usize> = (0..n_raw).filter(|&c| size[c] > 0).collect();
        order.sort_by(|&a, &b| size[b].cmp(&size[a]).then(first[a].cmp(&first[b])));
        let mut relabel = vec![usize::MAX; n_raw];
        for (new, &old) in order.iter().enumerate() {
            relabel[old] = new;
        }
        let membership = raw.iter().map(|&c| relabel[c]).collect();
        let sizes = order.iter().map(|&c| size[c]).collect();
        (membership, sizes)
    }

    /// Builds an assignment from an arbitrary labelling, recomputing sizes
    /// and modularity.
    pub fn from_membership(graph: &CouplingGraph, raw: &[usize], seed: u64, resolution: T) -> Result<Self> {
        if raw.len() != graph.n_nodes() {
            return Err(Error::UncoveredNode(format!(
                "{} labels for {} nodes",
                raw.len(),
                graph.n_nodes()
            )));
        }
        let (membership, community_sizes) = Self::canonical_labels(raw);
        let modularity = if graph.n_edges() == 0 {
            T::zero()
        } else {
            modularity(graph, &membership)?
        };
        Ok(Self {
            membership,
            modularity,
            community_sizes,
            seed,
            resolution,
            passes: 0,
            pass_modularity: Vec::new(),
        })
    }

    /// Two-column `channel_id<TAB>community` text after a `#` metadata line.
    pub fn to_tsv(&self, graph: &CouplingGraph) -> String {
        let mut out = format!(
            "# seed={} resolution={} modularity={:.12} passes={} communities={}\n",
            self.seed,
            self.resolution,
            self.modularity,
            self.passes,
            self.n_communities()
        );
        out.push_str("channel_id\tcommunity\n");
        for (node, &c) in graph.nodes.iter().zip(&self.membership) {
            let _ = writeln!(out, "{}\t{}", node.id, c);
        }
        out
    }

    /// Reads [`Self::to_tsv`] output for `graph`; modularity is recomputed.
    pub fn from_tsv(text: &str, graph: &CouplingGraph, path: &Path) -> Result<Self> {
        let mut seed = 0;
        let mut resolution = T::one();
        let mut passes = 0;
        let mut labels = vec![usize::MAX; graph.n_nodes()];
        for line in text.lines() {
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("seed", v)) => seed = v.parse().unwrap_or(0),
                        Some(("resolution", v)) => resolution = v.parse::<f64>().map(T::lit).unwrap_or(T::one()),
                        Some(("passes", v)) => passes = v.parse().unwrap_or(0),
                        _ => {}
                    }
                }
                continue;
            }
            if line.starts_with("channel_id\t") {
                continue;
            }
            let (id, c) = line
                .split_once('\t')
                .ok_or_else(|| Error::malformed(path, format!("bad line {line:?}")))?;
            let node = graph
                .node_index(id)
                .ok_or_else(|| Error::malformed(path, format!("unknown channel {id}")))?;
            labels[node] = c
                .parse()
                .map_err(|_| Error::malformed(path, format!("bad community {c:?}")))?;
        }
        if let Some(i) = labels.iter().position(|&c| c == usize::MAX) {
            return Err(Error::UncoveredNode(graph.nodes[i].id.clone()));
        }
        let mut a = Self::from_membership(graph, &labels, seed, resolution)?;
        a.passes = passes;
        Ok(a)
    }
}
