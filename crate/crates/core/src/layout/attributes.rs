use crate::communities::CommunityAssignment;
use crate::coupling::CouplingGraph;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeAttributes<T> {
    pub size: T,
    /// Index into the colour palette; equal to the community label.
    pub color_index: usize,
}

/// Node sizes scale affinely with degree onto `[min_size, max_size]`; when
/// every node has the same degree they all get `min_size`.
pub fn node_attributes<T: Scalar>(
    graph: &CouplingGraph,
    assignment: &CommunityAssignment<T>,
    min_size: T,
    max_size: T,
) -> Result<Vec<NodeAttributes<T>>> {
    if !(min_size > T::zero() && max_size >= min_size && max_size.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "node size range [{min_size}, {max_size}] is invalid"
        )));
    }
    if assignment.membership.len() != graph.n_nodes() {
        let i = assignment.membership.len().min(graph.n_nodes().saturating_sub(1));
        let id = graph.nodes.get(i).map_or_else(|| i.to_string(), |n| n.id.clone());
        return Err(Error::UncoveredNode(id));
    }
    let lo = graph.nodes.iter().map(|n| n.degree).min().unwrap_or(0);
    let hi = graph.nodes.iter().map(|n| n.degree).max().unwrap_or(0);
    Ok(graph
        .nodes
        .iter()
        .zip(&assignment.membership)
        .map(|(node, &c)| {
            let size = if hi == lo {
                min_size
            } else {
                let t = T::from_count(node.degree - lo) / T::from_count(hi - lo);
                min_size + (max_size - min_size) * t
            };
            NodeAttributes { size, color_index: c }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_extremes_map_to_range() {
        // Hub of degree 11 plus leaves of degree 1.
        let edges: Vec<(String, String)> = (0..11).map(|i| ("hub".to_string(), format!("l{i:02}"))).collect();
        let g =
            CouplingGraph::from_edges(edges.iter().map(|(a, b)| (a.as_str(), b.as_str(), 1)), [], |_| None).unwrap();
        let a = CommunityAssignment::<f64>::from_membership(&g, &vec![0; g.n_nodes()], 1, 1.0).unwrap();
        let attrs = node_attributes(&g, &a, 4.0, 24.0).unwrap();
        let hub = g.node_index("hub").unwrap();
        assert_eq!(attrs[hub].size, 24.0);
        assert!(attrs
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != hub)
            .all(|(_, x)| x.size == 4.0));
    }

    #[test]
    fn constant_degree_is_min() {
        let g = CouplingGraph::from_edges([("a", "b", 1), ("c", "d", 1)], [], |_| None).unwrap();
        let a = CommunityAssignment::<f64>::from_membership(&g, &[0, 0, 1, 1], 1, 1.0).unwrap();
        let attrs = node_attributes(&g, &a, 3.0, 9.0).unwrap();
        assert!(attrs.iter().all(|x| x.size == 3.0));
        assert_eq!(attrs[2].color_index, 1);
    }

    #[test]
    fn bad_range() {
        let g = CouplingGraph::from_edges([("a", "b", 1)], [], |_| None).unwrap();
        let a = CommunityAssignment::<f64>::from_membership(&g, &[0, 0], 1, 1.0).unwrap();
        assert!(node_attributes(&g, &a, 5.0, 1.0).is_err());
        assert!(node_attributes(&g, &a, 0.0, 1.0).is_err());
    }
}
