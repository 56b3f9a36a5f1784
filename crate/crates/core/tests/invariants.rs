use proptest::prelude::*;

use critgraph::encoding::{decode, decode_gx, encode_graph, PointSet};
use critgraph::exploration::permitted_edges;
use critgraph::graph::{components, connected_diameter, generate_gnp};
use critgraph::rng::stream;
use critgraph::samplers::{binomial_pointset, uniform_tree};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn encode_then_decode_is_identity(seed in any::<u64>(), n in 1usize..40, p in 0.02f64..0.6) {
        let g = generate_gnp(n, p, &mut stream(seed, 0)).unwrap();
        for c in components(&g) {
            let mw = encode_graph(&c.graph).unwrap();
            prop_assert!(mw.tree.walk().iter().all(|&x| x >= 0));
            prop_assert_eq!(mw.marks.len(), c.surplus);
            prop_assert_eq!(decode(&mw), c.graph);
        }
    }

    #[test]
    fn decode_then_encode_is_identity(seed in any::<u64>(), m in 1usize..60, p in 0.0f64..0.5) {
        let mut r = stream(seed, 1);
        let t = uniform_tree(m, &mut r);
        let q = binomial_pointset(&t.walk(), p, &mut r).unwrap();
        let g = decode_gx(&t, &q);
        prop_assert_eq!(g.edge_count(), m - 1 + q.len());
        let back = encode_graph(&g).unwrap();
        prop_assert_eq!(&back.tree, &t);
        prop_assert_eq!(&back.marks, &q);
    }

    #[test]
    fn permitted_edges_count_is_area(seed in any::<u64>(), m in 1usize..80) {
        let t = uniform_tree(m, &mut stream(seed, 2));
        prop_assert_eq!(permitted_edges(&t).len() as u64, t.area());
        let all = PointSet::new(t.walk().iter().enumerate().flat_map(|(i, &x)| (1..=x as u32).map(move |j| (i as u32, j)))).unwrap();
        let full = decode_gx(&t, &all);
        // adding every permitted edge cannot increase the diameter
        prop_assert!(connected_diameter(&full) <= connected_diameter(&t.to_graph()));
    }
}
