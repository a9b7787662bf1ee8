use combwalk::graph::Graph;
use combwalk::percolation::{box_edges, label_clusters, origin_cluster_conditioned, sample_bonds, PercolationSample};
use proptest::prelude::*;
use std::collections::VecDeque;

/// Components by breadth-first flood fill, as a partition into sorted vertex lists.
fn flood_fill(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    let mut parts = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut part = vec![s];
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    part.push(w);
                    queue.push_back(w);
                }
            }
        }
        part.sort_unstable();
        parts.push(part);
    }
    parts.sort();
    parts
}

fn partition_of(sample: &PercolationSample) -> Vec<Vec<usize>> {
    let mut parts: Vec<Vec<usize>> = (0..sample.cluster_sizes.len() as u32).map(|l| sample.cluster(l)).collect();
    parts.sort();
    parts
}

#[test]
fn open_fraction_matches_p() {
    let s = sample_bonds(200, 0.5, 1).unwrap();
    assert_eq!(s.open.len(), 2 * 401 * 400);
    assert!((s.open_fraction() - 0.5).abs() <= 0.005, "{}", s.open_fraction());
}

#[test]
fn same_seed_couples_monotonically() {
    for seed in 0..5 {
        let low = sample_bonds(30, 0.6, seed).unwrap();
        let high = sample_bonds(30, 0.8, seed).unwrap();
        assert!(low.open.iter().zip(&high.open).all(|(&a, &b)| !a || b));
        assert!(high.cluster_sizes[0] >= low.cluster_sizes[0]);
    }
}

#[test]
fn clusters_agree_with_flood_fill() {
    for seed in 0..20 {
        let s = sample_bonds(6, 0.5, seed).unwrap();
        assert_eq!(partition_of(&s), flood_fill(s.vertex_count(), &s.open_edges()));
    }
}

#[test]
fn conditioned_cluster_graph() {
    let (g, sample) = origin_cluster_conditioned(20, 0.7, 3, 100).unwrap();
    assert_eq!(sample.cluster_of[sample.origin()], 0);
    assert_eq!(g.vertex_count(), sample.cluster_sizes[0]);
    assert_eq!(g.coords(g.origin()), Some([0, 0]));
    let edges = g.edge_count();
    let open_in_cluster = sample.open_edges().iter().filter(|&&(u, _)| sample.cluster_of[u] == 0).count();
    assert_eq!(edges, open_in_cluster);
    assert!(origin_cluster_conditioned(5, 0.0, 3, 10).is_err());
    assert!(sample_bonds(5, 1.5, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn labels_are_ordered_by_size(n in 1u64..8, p in 0.0f64..=1.0, seed in any::<u64>()) {
        let s = sample_bonds(n, p, seed).unwrap();
        let v = s.vertex_count();
        prop_assert_eq!(s.cluster_of.len(), v);
        prop_assert_eq!(s.cluster_sizes.iter().sum::<usize>(), v);
        prop_assert!(s.cluster_sizes.windows(2).all(|w| w[0] >= w[1]));
        for (label, &size) in s.cluster_sizes.iter().enumerate() {
            prop_assert_eq!(s.cluster(label as u32).len(), size);
        }
        for (u, w) in s.open_edges() {
            prop_assert_eq!(s.cluster_of[u], s.cluster_of[w]);
        }
        let back = PercolationSample::from_text(&s.to_text()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn union_find_matches_flood_fill(n in 1usize..30, edges in prop::collection::vec((0usize..30, 0usize..30), 0..40)) {
        let edges: Vec<(usize, usize)> = edges.into_iter().filter(|&(u, v)| u < n && v < n).collect();
        let (labels, sizes) = label_clusters(n, edges.iter().copied());
        let mut parts: Vec<Vec<usize>> = (0..sizes.len() as u32)
            .map(|l| (0..n).filter(|&v| labels[v] == l).collect())
            .collect();
        parts.sort();
        prop_assert_eq!(parts, flood_fill(n, &edges));
    }
}

#[test]
fn box_edge_count() {
    for n in 1..6u64 {
        let side = 2 * n + 1;
        assert_eq!(box_edges(n).len() as u64, 2 * side * (side - 1));
    }
}
