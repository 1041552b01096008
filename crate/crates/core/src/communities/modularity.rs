use crate::coupling::CouplingGraph;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Newman modularity of a partition, with coupling frequencies as weights.
pub fn modularity<T: Scalar>(graph: &CouplingGraph, membership: &[usize]) -> Result<T> {
    modularity_with_resolution(graph, membership, T::one())
}

/// `Q = Σ_c [ w_in(c) / m − γ (k(c) / 2m)² ]`, where `w_in(c)` is the weight
/// inside community `c` and `k(c)` the sum of its weighted degrees.
pub fn modularity_with_resolution<T: Scalar>(graph: &CouplingGraph, membership: &[usize], resolution: T) -> Result<T> {
    if membership.len() != graph.n_nodes() {
        let i = membership.len().min(graph.n_nodes().saturating_sub(1));
        let id = graph.nodes.get(i).map_or_else(|| i.to_string(), |n| n.id.clone());
        return Err(Error::UncoveredNode(id));
    }
    if graph.n_edges() == 0 {
        return Err(Error::InvalidParameter("modularity needs at least one edge".into()));
    }
    let k = membership.iter().copied().max().unwrap_or(0) + 1;
    let mut inside = vec![T::zero(); k];
    let mut total = vec![T::zero(); k];
    let mut m = T::zero();
    for &(a, b, w) in &graph.edges {
        let w = T::from_u32(w).expect("weight fits scalar");
        m += w;
        total[membership[a]] += w;
        total[membership[b]] += w;
        if membership[a] == membership[b] {
            inside[membership[a]] += w;
        }
    }
    let two_m = m + m;
    Ok(inside
        .iter()
        .zip(&total)
        .map(|(&i, &t)| i / m - resolution * (t / two_m) * (t / two_m))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(edges: &[(&str, &str, u32)]) -> CouplingGraph {
        CouplingGraph::from_edges(edges.iter().copied(), [], |_| None).unwrap()
    }

    fn two_triangles() -> CouplingGraph {
        graph(&[
            ("a", "b", 1),
            ("a", "c", 1),
            ("b", "c", 1),
            ("d", "e", 1),
            ("d", "f", 1),
            ("e", "f", 1),
        ])
    }

    #[test]
    fn single_community_is_zero() {
        let g = two_triangles();
        let q: f64 = modularity(&g, &[0; 6]).unwrap();
        assert!(q.abs() < 1e-15);
    }

    #[test]
    fn two_triangles_half() {
        let q: f64 = modularity(&two_triangles(), &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!((q - 0.5).abs() < 1e-15);
        let q32: f32 = modularity(&two_triangles(), &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!((q32 - 0.5).abs() < 1e-6);
    }

    #[test]
    fn singletons_negative_sum_of_squares() {
        let g = graph(&[("a", "b", 2), ("b", "c", 1)]);
        let q: f64 = modularity(&g, &[0, 1, 2]).unwrap();
        // degrees 2, 3, 1 over 2m = 6
        let expected = -((2.0f64 / 6.0).powi(2) + 0.25 + (1.0f64 / 6.0).powi(2));
        assert!((q - expected).abs() < 1e-15);
        assert!(q < 0.0);
    }

    #[test]
    fn uncovered_node() {
        assert!(matches!(
            modularity::<f64>(&two_triangles(), &[0, 0, 0]),
            Err(Error::UncoveredNode(_))
        ));
    }
}
