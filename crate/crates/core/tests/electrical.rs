use combwalk::graph::{ball, bfs_distances, BaseGraph, BaseSpec, Csr, Graph};
use combwalk::kernels::killed_green;
use combwalk::resistance::{effective_resistance, harmonic_potential, resistance_to_complement, thompson_bound, Flow};
use combwalk::stats::log_log_slope;
use proptest::prelude::*;

/// `R(a, b)` by grounding `b` and solving the dense Laplacian system with
/// Gaussian elimination.
fn grounded_resistance(g: &impl Graph, a: usize, b: usize) -> f64 {
    let idx: Vec<usize> = (0..g.vertex_count()).filter(|&v| v != b).collect();
    let m = idx.len();
    let pos = |v: usize| idx.iter().position(|&w| w == v);
    let mut mat = vec![vec![0.0; m + 1]; m];
    for (i, &v) in idx.iter().enumerate() {
        mat[i][i] = g.degree(v) as f64;
        for w in g.neighbors(v) {
            if let Some(j) = pos(w) {
                mat[i][j] -= 1.0;
            }
        }
        mat[i][m] = (v == a) as u8 as f64;
    }
    for c in 0..m {
        let p = (c..m).max_by(|&i, &j| mat[i][c].abs().total_cmp(&mat[j][c].abs())).unwrap();
        mat.swap(c, p);
        for r in c + 1..m {
            let f = mat[r][c] / mat[c][c];
            for k in c..=m {
                mat[r][k] -= f * mat[c][k];
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|k| mat[r][k] * x[k]).sum();
        x[r] = (mat[r][m] - s) / mat[r][r];
    }
    x[pos(a).unwrap()]
}

#[test]
fn small_networks() {
    let k3 = Csr::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
    assert!((effective_resistance(&k3, &[0], &[1]).unwrap() - 2.0 / 3.0).abs() < 1e-14);
    assert!((grounded_resistance(&k3, 0, 1) - 2.0 / 3.0).abs() < 1e-14);
    let g = BaseGraph::build(BaseSpec::Gasket { level: 1 }).unwrap();
    let corners: Vec<usize> = (0..g.vertex_count()).filter(|&v| g.degree(v) == 2).collect();
    assert_eq!(corners.len(), 3);
    let r = effective_resistance(&g, &[corners[0]], &[corners[1]]).unwrap();
    assert!((r - grounded_resistance(&g, corners[0], corners[1])).abs() < 1e-13);
    // Each level multiplies the corner-to-corner resistance by 5/3.
    assert!((r - 10.0 / 9.0).abs() < 1e-13);
}

#[test]
fn gasket_resistance_exponent() {
    let g = BaseGraph::build(BaseSpec::Gasket { level: 6 }).unwrap();
    let o = g.origin();
    let dist = bfs_distances(&g, o, u32::MAX);
    let ks: Vec<f64> = (4..=32).map(|k| k as f64).collect();
    let rs: Vec<f64> = (4..=32u32)
        .map(|k| {
            let inside: Vec<bool> = dist.iter().map(|&d| d <= k).collect();
            resistance_to_complement(&g, o, &inside).unwrap()
        })
        .collect();
    let slope = log_log_slope(&ks, &rs);
    let target = (5.0f64 / 3.0).ln() / 2f64.ln();
    assert!((slope - target).abs() <= 0.15, "slope {slope}, target {target}");
    assert_eq!(ball(&g, o, 4).len(), 15);
}

/// Connected graph from a Prüfer-like parent list plus extra edges.
fn graph_strategy() -> impl Strategy<Value = Csr> {
    (3usize..24)
        .prop_flat_map(|n| {
            let parents: Vec<BoxedStrategy<usize>> = (1..n).map(|v| (0..v).boxed()).collect();
            (Just(n), parents, prop::collection::vec((0..n, 0..n), 0..n))
        })
        .prop_map(|(n, parents, extra)| {
            let mut edges: Vec<(usize, usize)> = parents.iter().enumerate().map(|(i, &p)| (p, i + 1)).collect();
            for (a, b) in extra {
                let e = (a.min(b), a.max(b));
                if a != b && !edges.contains(&e) {
                    edges.push(e);
                }
            }
            Csr::from_edges(n, &edges).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn resistance_is_a_metric_below_graph_distance(g in graph_strategy(), a in 0usize..64, b in 0usize..64, c in 0usize..64) {
        let n = g.vertex_count();
        let (a, b, c) = (a % n, b % n, c % n);
        prop_assume!(a != b && b != c && a != c);
        let r = |x: usize, y: usize| effective_resistance(&g, &[x], &[y]).unwrap();
        prop_assert!((r(a, b) - r(b, a)).abs() < 1e-10);
        prop_assert!(r(a, c) <= r(a, b) + r(b, c) + 1e-10);
        prop_assert!(r(a, b) <= bfs_distances(&g, a, u32::MAX)[b] as f64 + 1e-10);
        prop_assert!((r(a, b) - grounded_resistance(&g, a, b)).abs() < 1e-9);
    }

    #[test]
    fn potentials_are_harmonic_and_flows_dominate(g in graph_strategy(), a in 0usize..64, b in 0usize..64) {
        let n = g.vertex_count();
        let (a, b) = (a % n, b % n);
        prop_assume!(a != b);
        let p = harmonic_potential(&g, &[a], &[b]).unwrap();
        prop_assert!(p.harmonic_residual(&g) < 1e-10);
        prop_assert!(p.values.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        let r = effective_resistance(&g, &[a], &[b]).unwrap();
        let optimal = Flow::from_potential(&g, &p);
        prop_assert!((thompson_bound(&g, &optimal).unwrap() - r).abs() < 1e-9);
    }

    #[test]
    fn removing_an_edge_never_lowers_resistance(g in graph_strategy(), pick in 0usize..1000) {
        let n = g.vertex_count();
        let edges: Vec<(usize, usize)> = g.edges().collect();
        let drop = edges[pick % edges.len()];
        let rest: Vec<(usize, usize)> = edges.iter().copied().filter(|&e| e != drop).collect();
        let h = Csr::from_edges(n, &rest).unwrap();
        prop_assume!(bfs_distances(&h, 0, u32::MAX).iter().all(|&d| d != u32::MAX));
        let before = effective_resistance(&g, &[0], &[n - 1]).unwrap();
        let after = effective_resistance(&h, &[0], &[n - 1]).unwrap();
        prop_assert!(after >= before - 1e-10);
    }

    #[test]
    fn killed_green_is_symmetric(g in graph_strategy(), mask in prop::collection::vec(any::<bool>(), 24), x in 0usize..64, y in 0usize..64) {
        let n = g.vertex_count();
        let mut inside: Vec<bool> = mask[..n].to_vec();
        let (x, y) = (x % n, y % n);
        inside[x] = true;
        inside[y] = true;
        prop_assume!(inside.iter().any(|&b| !b));
        let gxy = killed_green(&g, &inside, x, y).unwrap();
        let gyx = killed_green(&g, &inside, y, x).unwrap();
        prop_assert!((gxy - gyx).abs() < 1e-10);
        prop_assert!(gxy <= killed_green(&g, &inside, x, x).unwrap() + 1e-12);
    }
}
