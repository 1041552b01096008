use super::CommunityAssignment;
use crate::coupling::CouplingGraph;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoalitionMember {
    pub channel_id: String,
    pub title: String,
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionReport<T> {
    pub community: usize,
    pub size: usize,
    /// Fraction of graph nodes in this community.
    pub share: T,
    /// `false` for communities below the minimum share.
    pub main: bool,
    /// Sorted by degree descending, then channel id.
    pub members: Vec<CoalitionMember>,
}

/// Splits communities into main coalitions (node share `>= min_share`) and
/// disregarded small ones, listing members by degree.
pub fn coalition_summary<T: Scalar>(
    assignment: &CommunityAssignment<T>,
    graph: &CouplingGraph,
    min_share: T,
) -> Result<Vec<CoalitionReport<T>>> {
    if !(min_share >= T::zero() && min_share < T::one()) {
        return Err(Error::InvalidParameter(format!("min_share {min_share} outside [0, 1)")));
    }
    if assignment.membership.len() != graph.n_nodes() {
        return Err(Error::UncoveredNode(format!(
            "{} of {} nodes assigned",
            assignment.membership.len(),
            graph.n_nodes()
        )));
    }
    let n = T::from_count(graph.n_nodes().max(1));
    let mut reports: Vec<CoalitionReport<T>> = assignment
        .community_sizes
        .iter()
        .enumerate()
        .map(|(community, &size)| {
            let share = T::from_count(size) / n;
            CoalitionReport {
                community,
                size,
                share,
                main: share >= min_share,
                members: Vec::with_capacity(size),
            }
        })
        .collect();
    for (node, &c) in graph.nodes.iter().zip(&assignment.membership) {
        reports[c].members.push(CoalitionMember {
            channel_id: node.id.clone(),
            title: node.title.clone(),
            degree: node.degree,
        });
    }
    for r in &mut reports {
        r.members
            .sort_by(|a, b| b.degree.cmp(&a.degree).then_with(|| a.channel_id.cmp(&b.channel_id)));
    }
    Ok(reports)
}
