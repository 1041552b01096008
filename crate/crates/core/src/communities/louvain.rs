//! Louvain modularity optimisation: greedy local moves, then aggregation of
//! communities into super-nodes, repeated until no move improves the
//! objective.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::CommunityAssignment;
use crate::coupling::CouplingGraph;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LouvainParams<T> {
    pub resolution: T,
    pub seed: u64,
    /// Minimum objective gain for a move or a level to count.
    pub tolerance: T,
    pub max_passes: usize,
}

impl<T: Scalar> Default for LouvainParams<T> {
    fn default() -> Self {
        Self {
            resolution: T::one(),
            seed: 42,
            tolerance: T::lit(1e-7),
            max_passes: 100,
        }
    }
}

/// Weighted graph at one aggregation level. `self_loops[i]` is the weight
/// internal to super-node `i`, counted once.
struct Level<T> {
    adj: Vec<Vec<(usize, T)>>,
    self_loops: Vec<T>,
    degree: Vec<T>,
}

impl<T: Scalar> Level<T> {
    fn from_graph(graph: &CouplingGraph) -> Self {
        let n = graph.n_nodes();
        let mut adj = vec![Vec::new(); n];
        for &(a, b, w) in &graph.edges {
            let w = T::from_u32(w).expect("weight fits scalar");
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        Self::new(adj, vec![T::zero(); n])
    }

    fn new(adj: Vec<Vec<(usize, T)>>, self_loops: Vec<T>) -> Self {
        let degree = adj
            .iter()
            .zip(&self_loops)
            .map(|(nbrs, &s)| nbrs.iter().map(|&(_, w)| w).sum::<T>() + s + s)
            .collect();
        Self {
            adj,
            self_loops,
            degree,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Objective of a partition of this level's nodes.
    fn quality(&self, community: &[usize], m: T, resolution: T) -> T {
        let k = community.iter().copied().max().map_or(0, |c| c + 1);
        let mut inside = vec![T::zero(); k];
        let mut total = vec![T::zero(); k];
        for i in 0..self.len() {
            let ci = community[i];
            total[ci] += self.degree[i];
            inside[ci] += self.self_loops[i];
            for &(j, w) in &self.adj[i] {
                // Each undirected edge is visited from both ends.
                if j > i && community[j] == ci {
                    inside[ci] += w;
                }
            }
        }
        let two_m = m + m;
        inside
            .iter()
            .zip(&total)
            .map(|(&w, &t)| w / m - resolution * (t / two_m) * (t / two_m))
            .sum()
    }

    /// Moves nodes greedily until a full sweep changes nothing. Returns the
    /// community of every node and whether anything moved.
    fn local_moves(&self, m: T, params: &LouvainParams<T>, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut community: Vec<usize> = (0..n).collect();
        let mut total = self.degree.clone();
        let mut weight_to = vec![T::zero(); n];
        let mut touched: Vec<usize> = Vec::new();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let two_m = m + m;
        let threshold = params.tolerance * m;
        let mut any_moved = false;

        for _ in 0..params.max_passes {
            let mut moved = false;
            for &i in &order {
                let current = community[i];
                let ki = self.degree[i];
                for &(j, w) in &self.adj[i] {
                    let c = community[j];
                    if weight_to[c] == T::zero() {
                        touched.push(c);
                    }
                    weight_to[c] += w;
                }
                total[current] -= ki;
                let gain = |c: usize| weight_to[c] - params.resolution * total[c] * ki / two_m;
                let mut best = current;
                let mut best_gain = gain(current);
                for &c in &touched {
                    let g = gain(c);
                    if g - best_gain > threshold {
                        best = c;
                        best_gain = g;
                    }
                }
                total[best] += ki;
                community[i] = best;
                if best != current {
                    moved = true;
                }
                for &c in &touched {
                    weight_to[c] = T::zero();
                }
                touched.clear();
            }
            if !moved {
                break;
            }
            any_moved = true;
        }
        (community, any_moved)
    }

    /// Collapses each community into one node. `community` must be
    /// contiguous from 0.
    fn aggregate(&self, community: &[usize], k: usize) -> Level<T> {
        let mut self_loops = vec![T::zero(); k];
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); k];
        for i in 0..self.len() {
            let ci = community[i];
            self_loops[ci] += self.self_loops[i];
            for &(j, w) in &self.adj[i] {
                let cj = community[j];
                if ci == cj {
                    if j > i {
                        self_loops[ci] += w;
                    }
                } else {
                    rows[ci].push((cj, w));
                }
            }
        }
        let adj = rows
            .into_iter()
            .map(|mut r| {
                r.sort_by_key(|&(c, _)| c);
                let mut merged: Vec<(usize, T)> = Vec::with_capacity(r.len());
                for (c, w) in r {
                    match merged.last_mut() {
                        Some((last, acc)) if *last == c => *acc += w,
                        _ => merged.push((c, w)),
                    }
                }
                merged
            })
            .collect();
        Level::new(adj, self_loops)
    }
}

/// Renumbers labels to `0..k` in order of first appearance.
fn compact(labels: &mut [usize]) -> usize {
    let mut map = vec![usize::MAX; labels.len()];
    let mut next = 0;
    for l in labels.iter_mut() {
        if map[*l] == usize::MAX {
            map[*l] = next;
            next += 1;
        }
        *l = map[*l];
    }
    next
}

/// Partitions `graph` by Louvain modularity maximisation.
///
/// The node visiting order is shuffled from `params.seed`, so a given
/// `(graph, params)` always yields the same partition; different seeds may
/// produce different partitions.
pub fn louvain<T: Scalar>(graph: &CouplingGraph, params: &LouvainParams<T>) -> Result<CommunityAssignment<T>> {
    if graph.is_empty() {
        return Err(Error::InvalidParameter("cannot partition an empty graph".into()));
    }
    if params.resolution.is_nan() || params.resolution <= T::zero() {
        return Err(Error::InvalidParameter("resolution must be positive".into()));
    }
    let n = graph.n_nodes();
    let singletons: Vec<usize> = (0..n).collect();
    if graph.n_edges() == 0 {
        let mut a = CommunityAssignment::from_membership(graph, &singletons, params.seed, params.resolution)?;
        a.pass_modularity = vec![T::zero()];
        return Ok(a);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut level = Level::from_graph(graph);
    let m = graph
        .edges
        .iter()
        .map(|&(_, _, w)| T::from_u32(w).expect("weight fits scalar"))
        .sum::<T>();
    // Community of every original node.
    let mut membership = singletons;
    let mut history = vec![level.quality(&(0..n).collect::<Vec<_>>(), m, params.resolution)];
    let mut passes = 0;

    while passes < params.max_passes {
        let (mut community, moved) = level.local_moves(m, params, &mut rng);
        if !moved {
            break;
        }
        let k = compact(&mut community);
        let q = level.quality(&community, m, params.resolution);
        let previous = *history.last().expect("history starts non-empty");
        if q - previous <= params.tolerance {
            break;
        }
        for c in membership.iter_mut() {
            *c = community[*c];
        }
        history.push(q);
        passes += 1;
        if k == level.len() {
            break;
        }
        level = level.aggregate(&community, k);
    }

    let mut assignment = CommunityAssignment::from_membership(graph, &membership, params.seed, params.resolution)?;
    assignment.passes = passes;
    assignment.pass_modularity = history;
    Ok(assignment)
}
