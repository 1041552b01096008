mod common;

use std::collections::BTreeSet;

use coalitions_core::coupling::{bcf_all_pairs, bcf_all_pairs_capped, bcf_pair, build_graph, self_coupling};
use coalitions_core::matrix::exclude_top_sources;
use common::{dense_ata, matrix_from_dense};
use proptest::prelude::*;

fn dense_strategy(max_rows: usize, max_cols: usize) -> impl Strategy<Value = (Vec<Vec<u8>>, usize)> {
    (1..=max_rows, 2..=max_cols, 1u32..=30).prop_flat_map(|(rows, cols, pct)| {
        let density = f64::from(pct) / 100.0;
        let row = proptest::collection::vec(proptest::bool::weighted(density).prop_map(u8::from), cols);
        (proptest::collection::vec(row, rows), Just(cols))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sparse_equals_dense((dense, cols) in dense_strategy(60, 25)) {
        let m = matrix_from_dense(&dense, cols);
        let w = bcf_all_pairs(&m);
        let oracle = dense_ata(&dense, cols);
        let got: Vec<_> = w.weights.iter().map(|(&(a, b), &v)| ((a as usize, b as usize), u64::from(v))).collect();
        let want: Vec<_> = oracle.into_iter().collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn symmetric_bounded_and_matches_pairwise_dot((dense, cols) in dense_strategy(40, 12)) {
        let m = matrix_from_dense(&dense, cols);
        let w = bcf_all_pairs(&m);
        let diag = self_coupling(&m);
        for a in 0..cols {
            let own: u64 = dense.iter().map(|r| u64::from(r[a])).sum();
            prop_assert_eq!(diag[a], own);
            for b in 0..cols {
                if a == b {
                    continue;
                }
                prop_assert_eq!(w.get(a, b), w.get(b, a));
                prop_assert!(u64::from(w.get(a, b)) <= diag[a].min(diag[b]));
                prop_assert_eq!(u64::from(w.get(a, b)), bcf_pair(&m.column_vector(a), &m.column_vector(b)).unwrap());
            }
        }
    }

    #[test]
    fn deleting_any_row_never_raises_a_weight((dense, cols) in dense_strategy(30, 10), pick in any::<proptest::sample::Index>()) {
        let full = bcf_all_pairs(&matrix_from_dense(&dense, cols));
        let drop = pick.index(dense.len());
        let reduced: Vec<_> = dense.iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, r)| r.clone()).collect();
        let less = bcf_all_pairs(&matrix_from_dense(&reduced, cols));
        for (&(a, b), &v) in &less.weights {
            prop_assert!(v <= full.get(a as usize, b as usize));
        }
    }

    #[test]
    fn exclusion_removes_largest_rows_and_is_monotone((dense, cols) in dense_strategy(40, 12), n in 0usize..8) {
        let m = matrix_from_dense(&dense, cols);
        prop_assume!(n < m.n_rows());
        let (reduced, removed) = exclude_top_sources(&m, n).unwrap();
        prop_assert_eq!(removed.len(), n);
        prop_assert_eq!(reduced.n_rows(), m.n_rows() - n);
        prop_assert_eq!(reduced.n_cols(), m.n_cols());
        // Oracle: sort (row sum desc, name asc) independently.
        let mut ranked: Vec<(usize, String)> = dense
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().map(|&x| usize::from(x)).sum(), m.sources[i].to_string()))
            .collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        let want: Vec<_> = ranked[..n].to_vec();
        let got: Vec<_> = removed.iter().map(|(d, s)| (*s, d.to_string())).collect();
        prop_assert_eq!(got, want);
        let before = bcf_all_pairs(&m);
        let after = bcf_all_pairs(&reduced);
        for a in 0..cols {
            for b in a + 1..cols {
                prop_assert!(after.get(a, b) <= before.get(a, b));
            }
        }
    }

    #[test]
    fn cap_skips_exactly_the_ubiquitous_sources((dense, cols) in dense_strategy(30, 10), cap in 1usize..6) {
        let m = matrix_from_dense(&dense, cols);
        let w = bcf_all_pairs_capped(&m, Some(cap));
        let kept: Vec<_> = dense
            .iter()
            .filter(|r| r.iter().map(|&x| usize::from(x)).sum::<usize>() <= cap)
            .cloned()
            .collect();
        let oracle = dense_ata(&kept, cols);
        let got: Vec<_> = w.weights.iter().map(|(&(a, b), &v)| ((a as usize, b as usize), u64::from(v))).collect();
        prop_assert_eq!(got, oracle.into_iter().collect::<Vec<_>>());
        prop_assert_eq!(w.capped_sources.len(), dense.len() - kept.len());
    }

    #[test]
    fn threshold_keeps_heavy_edges_and_their_endpoints((dense, cols) in dense_strategy(30, 12), min_bcf in 1u32..4) {
        let w = bcf_all_pairs(&matrix_from_dense(&dense, cols));
        let g = build_graph(&w, min_bcf, false, |_| None).unwrap();
        let want: Vec<(String, String, u32)> = w
            .labelled()
            .into_iter()
            .filter(|&(_, _, v)| v >= min_bcf)
            .map(|(a, b, v)| (a.to_owned(), b.to_owned(), v))
            .collect();
        let got: Vec<(String, String, u32)> = g
            .edges
            .iter()
            .map(|&(a, b, v)| (g.nodes[a].id.clone(), g.nodes[b].id.clone(), v))
            .collect();
        prop_assert_eq!(&got, &want);
        let endpoints: BTreeSet<&str> = want.iter().flat_map(|(a, b, _)| [a.as_str(), b.as_str()]).collect();
        let nodes: BTreeSet<&str> = g.nodes.iter().map(|n| n.id.as_str()).collect();
        prop_assert_eq!(nodes, endpoints);
        for (i, n) in g.nodes.iter().enumerate() {
            let deg = g.edges.iter().filter(|&&(a, b, _)| a == i || b == i).count();
            prop_assert_eq!(n.degree, deg);
        }
        let with_isolates = build_graph(&w, min_bcf, true, |_| None).unwrap();
        prop_assert_eq!(with_isolates.n_nodes(), cols);
        prop_assert_eq!(with_isolates.edges.len(), g.edges.len());
    }
}

#[test]
fn exclusion_rejects_removing_every_row() {
    let m = matrix_from_dense(&[vec![1, 0], vec![1, 1]], 2);
    assert!(exclude_top_sources(&m, 2).is_err());
    let (same, removed) = exclude_top_sources(&m, 0).unwrap();
    assert_eq!(same, m);
    assert!(removed.is_empty());
}

#[test]
fn ties_break_by_source_name() {
    // Rows 0 and 2 both have sum 2; s0000.org sorts first.
    let dense = vec![vec![1, 1, 0], vec![0, 0, 1], vec![0, 1, 1]];
    let m = matrix_from_dense(&dense, 3);
    let (_, removed) = exclude_top_sources(&m, 1).unwrap();
    assert_eq!(removed[0].0.as_str(), "s0000.org");
}
