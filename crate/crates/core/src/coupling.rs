//! Bibliographic coupling frequencies and the thresholded coupling graph.
//!
//! The coupling frequency of two channels is the number of sources both cite,
//! i.e. the dot product of their binary matrix columns. All pairs are computed
//! source-major: each source contributes one to every pair of channels citing
//! it, so the work is proportional to the co-citation structure rather than to
//! the square of the channel count.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::CitationMatrix;

/// Coupling frequency of two binary vectors.
pub fn bcf_pair(a: &[u8], b: &[u8]) -> Result<u64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).filter(|(x, y)| **x != 0 && **y != 0).count() as u64)
}

/// Pairwise coupling frequencies, keyed by column indices `(i, j)` with
/// `i < j`. Only pairs sharing at least one source are present.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WeightMap {
    pub channels: Vec<String>,
    pub weights: BTreeMap<(u32, u32), u32>,
    /// Sources skipped because more channels cited them than the cap allows.
    pub capped_sources: Vec<String>,
}

impl WeightMap {
    pub fn get(&self, a: usize, b: usize) -> u32 {
        let key = if a < b {
            (a as u32, b as u32)
        } else {
            (b as u32, a as u32)
        };
        self.weights.get(&key).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Rows of `(channel_a, channel_b, bcf)` with `channel_a < channel_b`,
    /// sorted lexicographically.
    pub fn labelled(&self) -> Vec<(&str, &str, u32)> {
        let mut rows: Vec<_> = self
            .weights
            .iter()
            .map(|(&(i, j), &w)| {
                let (a, b) = (&self.channels[i as usize], &self.channels[j as usize]);
                if a <= b {
                    (a.as_str(), b.as_str(), w)
                } else {
                    (b.as_str(), a.as_str(), w)
                }
            })
            .collect();
        rows.sort_unstable();
        rows
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (a, b, w) in self.labelled() {
            let _ = writeln!(out, "{a}\t{b}\t{w}");
        }
        out
    }

    /// Reads the three-column form. Channels become the sorted set of
    /// endpoints.
    pub fn from_tsv(text: &str, path: &Path) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split('\t').collect();
            let [a, b, w] = fields[..] else {
                return Err(Error::malformed(path, format!("line {}: expected 3 columns", i + 1)));
            };
            let w: u32 = w
                .parse()
                .map_err(|_| Error::malformed(path, format!("line {}: bad weight", i + 1)))?;
            rows.push((a.to_owned(), b.to_owned(), w));
        }
        let mut channels: Vec<String> = rows.iter().flat_map(|(a, b, _)| [a.clone(), b.clone()]).collect();
        channels.sort_unstable();
        channels.dedup();
        let index: HashMap<&str, u32> = channels
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i as u32))
            .collect();
        let weights = rows
            .iter()
            .map(|(a, b, w)| {
                let (i, j) = (index[a.as_str()], index[b.as_str()]);
                ((i.min(j), i.max(j)), *w)
            })
            .collect();
        Ok(WeightMap {
            channels,
            weights,
            capped_sources: Vec::new(),
        })
    }
}

/// Coupling frequencies of all channel pairs of `matrix`.
pub fn bcf_all_pairs(matrix: &CitationMatrix) -> WeightMap {
    bcf_all_pairs_capped(matrix, None)
}

/// As [`bcf_all_pairs`], skipping sources cited by more than `cap` channels.
pub fn bcf_all_pairs_capped(matrix: &CitationMatrix, cap: Option<usize>) -> WeightMap {
    let rows = matrix.rows();
    let capped_sources = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| cap.is_some_and(|c| r.len() > c))
        .map(|(i, _)| matrix.sources[i].to_string())
        .collect();
    let chunk = (rows.len() / (rayon::current_num_threads() * 4)).max(64);
    let partials: Vec<HashMap<(u32, u32), u32>> = rows
        .par_chunks(chunk)
        .map(|part| {
            let mut acc = HashMap::new();
            for citing in part {
                if cap.is_some_and(|c| citing.len() > c) {
                    continue;
                }
                for (k, &i) in citing.iter().enumerate() {
                    for &j in &citing[k + 1..] {
                        *acc.entry((i, j)).or_insert(0) += 1;
                    }
                }
            }
            acc
        })
        .collect();
    let mut weights = BTreeMap::new();
    for part in partials {
        for (key, w) in part {
            *weights.entry(key).or_insert(0) += w;
        }
    }
    WeightMap {
        channels: matrix.channels.clone(),
        weights,
        capped_sources,
    }
}

/// Self-coupling of every channel: the number of sources it cites.
pub fn self_coupling(matrix: &CitationMatrix) -> Vec<u64> {
    matrix.columns().iter().map(|c| c.len() as u64).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub id: String,
    pub title: String,
    pub degree: usize,
}

/// Undirected weighted graph of channels. Nodes are ordered by id; edges
/// `(a, b, w)` have `a < b` and are sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CouplingGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<(usize, usize, u32)>,
}

impl CouplingGraph {
    /// Assembles a graph from labelled edges. Nodes listed in `extra_nodes`
    /// are kept even without edges. Degrees are recomputed.
    pub fn from_edges<'a>(
        edges: impl IntoIterator<Item = (&'a str, &'a str, u32)>,
        extra_nodes: impl IntoIterator<Item = &'a str>,
        title_of: impl Fn(&str) -> Option<String>,
    ) -> Result<Self> {
        let edges: Vec<_> = edges.into_iter().collect();
        let mut ids: Vec<&str> = edges.iter().flat_map(|&(a, b, _)| [a, b]).chain(extra_nodes).collect();
        ids.sort_unstable();
        ids.dedup();
        let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut nodes: Vec<GraphNode> = ids
            .iter()
            .map(|&id| GraphNode {
                id: id.to_owned(),
                title: title_of(id).unwrap_or_else(|| id.to_owned()),
                degree: 0,
            })
            .collect();
        let mut out = Vec::with_capacity(edges.len());
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop on {a}")));
            }
            let (i, j) = (index[a], index[b]);
            nodes[i].degree += 1;
            nodes[j].degree += 1;
            out.push((i.min(j), i.max(j), w));
        }
        out.sort_unstable();
        Ok(CouplingGraph { nodes, edges: out })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.id.as_str().cmp(id)).ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.degree).collect()
    }

    /// Neighbour lists with edge weights.
    pub fn adjacency(&self) -> Vec<Vec<(usize, u32)>> {
        let mut adj = vec![Vec::new(); self.n_nodes()];
        for &(a, b, w) in &self.edges {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        adj
    }

    pub fn nodes_tsv(&self) -> String {
        let mut out = String::from("id\ttitle\tdegree\n");
        for n in &self.nodes {
            let title: String = n
                .title
                .chars()
                .map(|c| if matches!(c, '\t' | '\n' | '\r') { ' ' } else { c })
                .collect();
            let _ = writeln!(out, "{}\t{}\t{}", n.id, title, n.degree);
        }
        out
    }

    pub fn edges_tsv(&self) -> String {
        let mut out = String::new();
        for &(a, b, w) in &self.edges {
            let _ = writeln!(out, "{}\t{}\t{}", self.nodes[a].id, self.nodes[b].id, w);
        }
        out
    }

    pub fn from_tsv(nodes: &str, edges: &str, path: &Path) -> Result<Self> {
        let mut titles = HashMap::new();
        let mut ids = Vec::new();
        for (i, line) in nodes.lines().enumerate().skip(1) {
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, title, _degree] = fields[..] else {
                return Err(Error::malformed(
                    path,
                    format!("node line {}: expected 3 columns", i + 1),
                ));
            };
            titles.insert(id, title.to_owned());
            ids.push(id);
        }
        let weights = WeightMap::from_tsv(edges, path)?;
        let graph = CouplingGraph::from_edges(weights.labelled(), ids.iter().copied(), |id| titles.get(id).cloned())?;
        Ok(graph)
    }
}

/// Keeps the pairs with `bcf >= min_bcf`. Channels left without edges are
/// dropped unless `keep_isolates` is set.
pub fn build_graph(
    weights: &WeightMap,
    min_bcf: u32,
    keep_isolates: bool,
    title_of: impl Fn(&str) -> Option<String>,
) -> Result<CouplingGraph> {
    if min_bcf == 0 {
        return Err(Error::InvalidParameter("min_bcf must be at least 1".into()));
    }
    let kept = weights.labelled().into_iter().filter(|&(_, _, w)| w >= min_bcf);
    let extra: Vec<&str> = if keep_isolates {
        weights.channels.iter().map(String::as_str).collect()
    } else {
        Vec::new()
    };
    CouplingGraph::from_edges(kept, extra, title_of)
}
