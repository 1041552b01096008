//! GEXF 1.2 export with community/degree attributes and viz data.

use std::fmt::Write as _;
use std::path::Path;

use crate::communities::CommunityAssignment;
use crate::coupling::CouplingGraph;
use crate::error::{Error, Result};
use crate::layout::{node_attributes, LayoutPositions};
use crate::scalar::Scalar;

/// Qualitative community colours; community `c` gets `PALETTE[c % len]`.
pub const PALETTE: [(u8, u8, u8); 12] = [
    (31, 119, 180),
    (255, 127, 14),
    (44, 160, 44),
    (214, 39, 40),
    (148, 103, 189),
    (140, 86, 75),
    (227, 119, 194),
    (127, 127, 127),
    (188, 189, 34),
    (23, 190, 207),
    (174, 199, 232),
    (255, 187, 120),
];

pub(crate) const MIN_NODE_SIZE: f64 = 4.0;
pub(crate) const MAX_NODE_SIZE: f64 = 24.0;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            // Characters XML 1.0 cannot carry at all.
            c if (c as u32) < 0x20 && !matches!(c, '\t' | '\n' | '\r') => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

/// Renders the graph as a GEXF 1.2 document. Node sizes scale degree onto
/// `[min_size, max_size]`.
pub fn render_gexf<T: Scalar>(
    graph: &CouplingGraph,
    assignment: &CommunityAssignment<T>,
    positions: &LayoutPositions<T>,
    min_size: T,
    max_size: T,
) -> Result<String> {
    if positions.positions.len() != graph.n_nodes() {
        let i = positions.positions.len().min(graph.n_nodes().saturating_sub(1));
        return Err(Error::UncoveredNode(
            graph.nodes.get(i).map_or_else(|| i.to_string(), |n| n.id.clone()),
        ));
    }
    let attrs = if graph.is_empty() {
        Vec::new()
    } else {
        node_attributes(graph, assignment, min_size, max_size)?
    };

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(
        "<gexf xmlns=\"http://www.gexf.net/1.2draft\" \
         xmlns:viz=\"http://www.gexf.net/1.2draft/viz\" \
         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
         xsi:schemaLocation=\"http://www.gexf.net/1.2draft http://www.gexf.net/1.2draft/gexf.xsd\" \
         version=\"1.2\">\n",
    );
    out.push_str("  <meta>\n    <creator>coalitions</creator>\n");
    let _ = writeln!(
        out,
        "    <description>channel coupling graph; seed {}; modularity {:.6}</description>",
        assignment.seed, assignment.modularity
    );
    out.push_str("  </meta>\n");
    out.push_str("  <graph mode=\"static\" defaultedgetype=\"undirected\">\n");
    out.push_str("    <attributes class=\"node\" mode=\"static\">\n");
    out.push_str("      <attribute id=\"community\" title=\"community\" type=\"integer\"/>\n");
    out.push_str("      <attribute id=\"degree\" title=\"degree\" type=\"integer\"/>\n");
    out.push_str("    </attributes>\n");
    out.push_str("    <nodes>\n");
    for (i, node) in graph.nodes.iter().enumerate() {
        let a = attrs[i];
        let (x, y) = positions.positions[i];
        let (r, g, b) = PALETTE[a.color_index % PALETTE.len()];
        let label = if node.title.is_empty() { &node.id } else { &node.title };
        let _ = writeln!(
            out,
            "      <node id=\"{}\" label=\"{}\">",
            escape(&node.id),
            escape(label)
        );
        out.push_str("        <attvalues>\n");
        let _ = writeln!(
            out,
            "          <attvalue for=\"community\" value=\"{}\"/>",
            a.color_index
        );
        let _ = writeln!(out, "          <attvalue for=\"degree\" value=\"{}\"/>", node.degree);
        out.push_str("        </attvalues>\n");
        let _ = writeln!(out, "        <viz:color r=\"{r}\" g=\"{g}\" b=\"{b}\"/>");
        let _ = writeln!(out, "        <viz:position x=\"{x:.6}\" y=\"{y:.6}\" z=\"0.0\"/>");
        let _ = writeln!(out, "        <viz:size value=\"{:.6}\"/>", a.size);
        out.push_str("      </node>\n");
    }
    out.push_str("    </nodes>\n");
    out.push_str("    <edges>\n");
    for (k, &(a, b, w)) in graph.edges.iter().enumerate() {
        let _ = writeln!(
            out,
            "      <edge id=\"{k}\" source=\"{}\" target=\"{}\" weight=\"{w}\"/>",
            escape(&graph.nodes[a].id),
            escape(&graph.nodes[b].id)
        );
    }
    out.push_str("    </edges>\n");
    out.push_str("  </graph>\n</gexf>\n");
    Ok(out)
}

/// Writes [`render_gexf`] output with the default size range.
pub fn export_gexf<T: Scalar>(
    graph: &CouplingGraph,
    assignment: &CommunityAssignment<T>,
    positions: &LayoutPositions<T>,
    path: &Path,
) -> Result<()> {
    let doc = render_gexf(
        graph,
        assignment,
        positions,
        T::lit(MIN_NODE_SIZE),
        T::lit(MAX_NODE_SIZE),
    )?;
    std::fs::write(path, doc).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parts(edges: &[(&str, &str, u32)]) -> (CouplingGraph, CommunityAssignment<f64>, LayoutPositions<f64>) {
        let g = CouplingGraph::from_edges(edges.iter().copied(), [], |id| Some(format!("T<{id}>"))).unwrap();
        let a = CommunityAssignment::from_membership(&g, &vec![0; g.n_nodes()], 42, 1.0).unwrap();
        let p = LayoutPositions {
            positions: (0..g.n_nodes()).map(|i| (i as f64, -(i as f64))).collect(),
            iterations_run: 1,
            seed: 42,
        };
        (g, a, p)
    }

    #[test]
    fn single_weighted_edge() {
        let (g, a, p) = parts(&[("ch1", "ch2", 3)]);
        let doc = render_gexf(&g, &a, &p, 4.0, 24.0).unwrap();
        let xml = roxmltree::Document::parse(&doc).unwrap();
        assert_eq!(xml.descendants().filter(|n| n.has_tag_name("node")).count(), 2);
        let edges: Vec<_> = xml.descendants().filter(|n| n.has_tag_name("edge")).collect();
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].attribute("weight"), Some("3"));
        assert!(doc.contains("label=\"T&lt;ch1&gt;\""));
    }

    #[test]
    fn empty_graph_is_well_formed() {
        let g = CouplingGraph::default();
        let a = CommunityAssignment {
            membership: vec![],
            modularity: 0.0,
            community_sizes: vec![],
            seed: 1,
            resolution: 1.0,
            passes: 0,
            pass_modularity: vec![],
        };
        let p = LayoutPositions {
            positions: vec![],
            iterations_run: 0,
            seed: 1,
        };
        let doc = render_gexf(&g, &a, &p, 4.0, 24.0).unwrap();
        let xml = roxmltree::Document::parse(&doc).unwrap();
        assert_eq!(xml.descendants().filter(|n| n.has_tag_name("node")).count(), 0);
    }

    #[test]
    fn byte_stable() {
        let (g, a, p) = parts(&[("a", "b", 2), ("b", "c", 5)]);
        assert_eq!(
            render_gexf(&g, &a, &p, 4.0, 24.0).unwrap(),
            render_gexf(&g, &a, &p, 4.0, 24.0).unwrap()
        );
    }

    #[test]
    fn escapes_control_characters() {
        assert_eq!(escape("a\u{1}b&\"'"), "a b&amp;&quot;&apos;");
    }
}
