mod common;

use dilated_egt::treeplex::{shapes, Treeplex, TreeplexStats};
use proptest::prelude::*;
use rand::Rng;

/// Independent max-l1 computation: depth-first recursion over subtrees.
fn max_l1_recursive(t: &Treeplex, j: usize) -> f64 {
    let s = t.simplex(j);
    s.children
        .iter()
        .map(|ch| 1.0 + ch.iter().map(|&k| max_l1_recursive(t, k)).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn vertex_max_l1(t: &Treeplex) -> f64 {
    t.enumerate_vertices(1_000_000)
        .unwrap()
        .iter()
        .map(|v| common::l1(v))
        .fold(0.0, f64::max)
}

#[test]
fn nine_simplex_example_sizes() {
    let t = shapes::nine_simplex_example();
    let stats = t.compute_stats();
    assert_eq!(t.num_simplexes(), 9);
    assert_eq!(t.num_variables(), 20);
    assert_eq!(stats.max_l1, 6.0);
    assert_eq!(stats.depth, 2);
    assert_eq!(stats.largest_simplex, 3);
    assert_eq!(stats.max_l1_truncated, vec![2.0, 4.0, 6.0]);
    assert_eq!(stats.subtree_max_l1[..3], [4.0, 2.0, 3.0]);
    let vertices = t.enumerate_vertices(1000).unwrap();
    assert_eq!(vertices.len(), 54);
    assert_eq!(t.vertex_count(), 54.0);
    assert_eq!(vertex_max_l1(&t), 6.0);
}

#[test]
fn alternating_counts_match_geometric_sums() {
    for (k, d) in [(2usize, 1usize), (2, 2), (2, 3), (3, 2), (3, 3)] {
        let t = shapes::alternating(k, d);
        let simplexes: usize = (0..d).map(|i| k.pow(2 * i as u32)).sum();
        let m_q: usize = (0..d).map(|i| k.pow(i as u32)).sum();
        assert_eq!(t.num_simplexes(), simplexes, "k={k} d={d}");
        assert_eq!(t.compute_stats().max_l1, m_q as f64, "k={k} d={d}");
        if t.vertex_count() <= 1e5 {
            assert_eq!(vertex_max_l1(&t), m_q as f64, "k={k} d={d}");
        }
    }
}

#[test]
fn vertex_limit_is_enforced() {
    let t = shapes::alternating(3, 3);
    assert!(t.vertex_count() > 1e6);
    assert!(t.enumerate_vertices(1_000_000).is_err());
}

#[test]
fn malformed_text_is_rejected() {
    for text in [
        "0 | - | 0:1 ;\n",
        "0 | 3 | 0: ;\n",
        "0 | - | 0: ;\n0 | - | 1: ;\n",
        "0 | - | 0:1 ;\n1 | 1 | 1: ;\n",
        "0 | - |\n",
    ] {
        assert!(Treeplex::from_text(text).is_err(), "accepted {text:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stats_match_vertex_enumeration(seed in any::<u64>()) {
        let t = common::treeplex(seed, 16);
        let stats = t.compute_stats();
        let expected: f64 = t.roots().iter().map(|&j| max_l1_recursive(&t, j)).sum();
        prop_assert_eq!(stats.max_l1, expected, "seed {} treeplex:\n{}", seed, t.to_text());
        if t.vertex_count() <= 1e5 {
            prop_assert_eq!(stats.max_l1, vertex_max_l1(&t), "seed {} treeplex:\n{}", seed, t.to_text());
        }
        for j in 0..t.num_simplexes() {
            prop_assert_eq!(stats.subtree_max_l1[j], max_l1_recursive(&t, j));
        }
        let trunc = &stats.max_l1_truncated;
        prop_assert!(trunc.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(*trunc.last().unwrap(), stats.max_l1);
    }

    #[test]
    fn subtree_size_dominates_children(seed in any::<u64>()) {
        let t = common::treeplex(seed, 40);
        let stats = TreeplexStats::compute(&t);
        for s in t.simplexes() {
            for ch in &s.children {
                let below: f64 = ch.iter().map(|&k| stats.subtree_max_l1[k]).sum();
                prop_assert!(stats.subtree_max_l1[s.id] >= 1.0 + below, "seed {} simplex {}", seed, s.id);
            }
        }
    }

    #[test]
    fn depth_slices_of_vertices_are_bounded(seed in any::<u64>()) {
        let t = common::treeplex(seed, 14);
        prop_assume!(t.vertex_count() <= 1e5);
        let stats = t.compute_stats();
        for v in t.enumerate_vertices(100_000).unwrap() {
            for d in 0..=stats.depth {
                let slice: f64 = t
                    .simplexes()
                    .iter()
                    .filter(|s| s.branchings_above == d)
                    .map(|s| t.parent_value(s.id, &v) * stats.subtree_max_l1[s.id])
                    .sum();
                prop_assert!(slice <= stats.max_l1 + 1e-12, "seed {} depth {} slice {}", seed, d, slice);
            }
        }
    }

    #[test]
    fn convex_combinations_stay_feasible(seed in any::<u64>()) {
        let t = common::treeplex(seed, 14);
        prop_assume!(t.vertex_count() <= 1e5);
        let vertices = t.enumerate_vertices(100_000).unwrap();
        let mut rng = common::rng(seed);
        let w: Vec<f64> = vertices.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
        let z: f64 = w.iter().sum();
        let mut q = vec![0.0; t.num_variables()];
        for (v, wi) in vertices.iter().zip(&w) {
            for (qi, vi) in q.iter_mut().zip(v) {
                *qi += wi / z * vi;
            }
        }
        prop_assert!(t.constraint_residual(&q) <= 1e-12);
        for v in &vertices {
            prop_assert_eq!(t.constraint_residual(v), 0.0);
        }
    }

    #[test]
    fn text_round_trip(seed in any::<u64>()) {
        let t = common::treeplex(seed, 40);
        let back = Treeplex::from_text(&t.to_text()).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(back.to_text(), t.to_text());
    }

    #[test]
    fn behavioral_round_trip(seed in any::<u64>()) {
        let t = common::treeplex(seed, 40);
        let mut rng = common::rng(seed ^ 1);
        let q = common::spread_interior(&mut rng, &t, 4.0);
        prop_assert!(t.check_member(&q, 1e-12).is_ok());
        let b = t.behavioral_from_sequence(&q, 1e-12).unwrap();
        let back = t.sequence_from_behavioral(&b);
        prop_assert!(common::linf_dist(&q, &back) <= 1e-14);
    }
}
