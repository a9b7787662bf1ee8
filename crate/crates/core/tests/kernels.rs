use combwalk::graph::{BaseGraph, BaseSpec, CombGraph, Csr, Graph, Metric, TeethProfile};
use combwalk::kernels::{
    expected_collisions_region, heat_kernel_row, interval_exit_law, kernel_table, killed_green, killed_green_series,
    occupation_moments, return_probabilities, segment_hitting_law, truncated_green, Normalization,
};
use combwalk::resistance::effective_resistance;
use proptest::prelude::*;

fn graph_strategy() -> impl Strategy<Value = Csr> {
    (2usize..20)
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

fn value(row: &[(usize, f64)], v: usize) -> f64 {
    row.iter().find(|e| e.0 == v).map_or(0.0, |e| e.1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_is_symmetric_and_conserves_mass(g in graph_strategy(), t in 0u64..24, x in 0usize..64, y in 0usize..64) {
        let n = g.vertex_count();
        let (x, y) = (x % n, y % n);
        let rx = heat_kernel_row(&g, x, t).unwrap();
        let ry = heat_kernel_row(&g, y, t).unwrap();
        prop_assert!((value(&rx, y) - value(&ry, x)).abs() < 1e-14);
        let mass: f64 = rx.iter().map(|&(v, p)| p * g.degree(v) as f64).sum();
        prop_assert!((mass - 1.0).abs() < 1e-12);
        let table = kernel_table(&g, x, t, Normalization::Probability).unwrap();
        prop_assert!((table.row_sum(t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncated_green_matches_row_sums(g in graph_strategy(), a in 0u64..10, len in 0u64..12, x in 0usize..64, y in 0usize..64) {
        let n = g.vertex_count();
        let (x, y) = (x % n, y % n);
        let b = a + len;
        let direct: f64 = (a..=b).map(|t| value(&heat_kernel_row(&g, x, t).unwrap(), y)).sum();
        prop_assert!((truncated_green(&g, x, y, a, b).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn killed_series_converges_to_the_solve(g in graph_strategy(), mask in prop::collection::vec(any::<bool>(), 20), x in 0usize..64) {
        let n = g.vertex_count();
        let x = x % n;
        let mut inside = mask[..n].to_vec();
        inside[x] = true;
        prop_assume!(inside.iter().any(|&b| !b));
        let exact = killed_green(&g, &inside, x, x).unwrap();
        let series = killed_green_series(&g, &inside, x, x, 20_000).unwrap();
        prop_assert!(series <= exact + 1e-12);
        prop_assert!((series - exact).abs() < 1e-6 * exact.max(1.0));
    }
}

#[test]
fn green_at_time_zero_and_on_a_path() {
    let g = BaseGraph::build(BaseSpec::Gasket { level: 2 }).unwrap();
    for v in 0..g.vertex_count() {
        assert_eq!(truncated_green(&g, v, v, 0, 0).unwrap(), 1.0 / g.degree(v) as f64);
    }
    let path = Csr::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
    let a = [false, true, true, false];
    assert!((killed_green(&path, &a, 1, 1).unwrap() - 2.0 / 3.0).abs() < 1e-14);
    assert_eq!(killed_green(&path, &a, 0, 1).unwrap(), 0.0);
}

#[test]
fn occupation_moments_on_the_plane() {
    let g = BaseGraph::build(BaseSpec::Z2Box { n: 513 }).unwrap();
    let ret = return_probabilities(&g, g.origin(), 512).unwrap();
    assert_eq!(occupation_moments(&ret[..1]).1, 1.0);
    assert!((occupation_moments(&ret[..3]).1 - 1.75).abs() < 1e-15);
    let scaled: Vec<f64> =
        [64usize, 128, 256, 512].iter().map(|&t| occupation_moments(&ret[..=t]).1 / (t as f64).ln().powi(4)).collect();
    for w in scaled.windows(2) {
        assert!(w[1] <= w[0], "{scaled:?}");
    }
    assert!(scaled.iter().all(|s| s / scaled[0] <= 1.0));
}

#[test]
fn tooth_and_interval_laws() {
    let forced = segment_hitting_law(1, 1, 10).unwrap();
    assert_eq!(forced.law.pmf[1], 1.0);
    let two = segment_hitting_law(2, 1, 60).unwrap();
    for k in 0..25usize {
        assert!((two.law.pmf[2 * k + 1] - 0.5f64.powi(k as i32 + 1)).abs() < 1e-15);
        assert_eq!(two.law.pmf[2 * k + 2], 0.0);
    }
    // Commute time across the bottom edge of a tooth of length 3.
    let down = segment_hitting_law(3, 1, 0).unwrap().mean;
    let tooth = Csr::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
    let r = effective_resistance(&tooth, &[0], &[1]).unwrap();
    assert_eq!(down, 5.0);
    assert!((down + 1.0 - 2.0 * 3.0 * r).abs() < 1e-12);

    let exit = interval_exit_law(1, 0, 60).unwrap();
    for s in 1..=60usize {
        assert!((exit.bottom[s] + exit.top[s] - 0.5f64.powi(s as i32)).abs() < 1e-15);
    }
    for m in 1..6u64 {
        for h in 0..=m as i64 {
            let law = interval_exit_law(m, h, 4000).unwrap();
            let top: f64 = law.top.iter().sum();
            assert!((top - law.p_top).abs() < 1e-12, "m={m} h={h}");
            let mirror = interval_exit_law(m, m as i64 - h, 4000).unwrap();
            assert_eq!(law.bottom, mirror.top);
        }
    }
}

#[test]
fn expected_collisions_small_cases() {
    let k2 = Csr::from_edges(2, &[(0, 1)]).unwrap();
    let v = expected_collisions_region(&k2, &[true, true], 3, 0, None).unwrap();
    assert_eq!((v.lower, v.upper), (4.0, 4.0));
    assert_eq!(expected_collisions_region(&k2, &[false, false], 3, 0, None).unwrap().upper, 0.0);
}

/// Collisions in the shell at sup-radius `k` decay with `k`. The walk is
/// killed outside a box of half-width 96, which it leaves with negligible
/// probability before time 4096, and the bounds bracket the exact sums.
#[test]
fn annulus_collisions_decay_with_radius() {
    let base = BaseGraph::build(BaseSpec::Z2Box { n: 97 }).unwrap();
    let comb = CombGraph::attach_teeth(base, TeethProfile::logarithmic(2.0, Metric::SupNorm)).unwrap();
    let dense = comb.materialize(10_000_000).unwrap();
    let inner: Vec<bool> = (0..comb.base().vertex_count()).map(|v| comb.radius(v) <= 96).collect();
    let domain = dense.lift(&inner);
    let start = dense.index(comb.origin_vertex());
    let shell = |k: u64| dense.lift(&(0..comb.base().vertex_count()).map(|v| comb.radius(v) == k).collect::<Vec<_>>());
    let near = expected_collisions_region(&dense, &shell(8), 4096, start, Some(&domain)).unwrap();
    let far = expected_collisions_region(&dense, &shell(16), 4096, start, Some(&domain)).unwrap();
    assert!(far.upper <= near.lower, "k=8 {near:?}, k=16 {far:?}");
}
