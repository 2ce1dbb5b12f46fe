mod oracles;

use modnet_core::mlp::{Activation, InitScheme, SpatialMlp};
use modnet_core::modules::{ari, isolation, modularity_q, Partition};
use modnet_core::rng;
use oracles::*;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn ari_matches_pair_counting_on_random_pairs() {
    let mut r = rng::stream(11, 0);
    for _ in 0..200 {
        let n = r.gen_range(2..=12);
        let (k1, k2) = (r.gen_range(1..=n), r.gen_range(1..=n));
        let a: Vec<usize> = (0..n).map(|_| r.gen_range(0..k1)).collect();
        let b: Vec<usize> = (0..n).map(|_| r.gen_range(0..k2)).collect();
        let got = ari(&partition(&a), &partition(&b)).unwrap();
        let want = ari_pairs(&a, &b);
        assert!((got - want).abs() < 1e-12, "{a:?} {b:?}: {got} vs {want}");
    }
}

#[test]
fn single_community_has_zero_isolation_and_modularity() {
    for seed in 0..20 {
        let n = 3 + seed as usize % 8;
        let adj = random_graph(seed, n, 0.5);
        let g = graph(adj, n);
        let q = modularity_q(&g, &partition(&vec![0; n])).unwrap();
        assert!(q.abs() < 1e-12, "{q}");
    }
    let net = SpatialMlp::new(&[3, 4, 2], Activation::Tanh, InitScheme::actor(), 3).unwrap();
    assert_eq!(isolation(&net, &Partition::single(net.neurons().collect())).0, 0.0);
}

fn labels(max_n: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (2..=max_n).prop_flat_map(|n| (prop::collection::vec(0..4usize, n), prop::collection::vec(0..4usize, n)))
}

proptest! {
    #[test]
    fn ari_is_symmetric_and_bounded((a, b) in labels(12)) {
        let (pa, pb) = (partition(&a), partition(&b));
        let x = ari(&pa, &pb).unwrap();
        prop_assert!((x - ari(&pb, &pa).unwrap()).abs() < 1e-12);
        prop_assert!(x <= 1.0 + 1e-12);
        prop_assert_eq!(ari(&pa, &pa).unwrap(), 1.0);
    }

    #[test]
    fn ari_ignores_label_names((a, b) in labels(12), shift in 1usize..10) {
        let renamed: Vec<usize> = a.iter().map(|l| (l + shift) * 7).collect();
        let x = ari(&partition(&a), &partition(&b)).unwrap();
        let y = ari(&partition(&renamed), &partition(&b)).unwrap();
        prop_assert!((x - y).abs() < 1e-12);
    }

    #[test]
    fn modularity_is_scale_invariant(seed in 0u64..1000, n in 3usize..9, scale in 0.01f64..100.0) {
        let adj = random_graph(seed, n, 0.6);
        let labels: Vec<usize> = (0..n).map(|i| (i * 7 + seed as usize) % 3).collect();
        let q1 = modularity_q(&graph(adj.clone(), n), &partition(&labels)).unwrap();
        let q2 = modularity_q(&graph(adj.iter().map(|w| w * scale).collect(), n), &partition(&labels)).unwrap();
        prop_assert!((q1 - q2).abs() < 1e-12);
        prop_assert!((q1 - modularity(&adj, n, &labels)).abs() < 1e-12);
        prop_assert!((-0.5 - 1e-12..=1.0).contains(&q1));
    }

    #[test]
    fn isolation_lies_in_unit_interval(seed in 0u64..500, k in 1usize..5) {
        let net = random_net(seed, Activation::Tanh);
        let ids: Vec<_> = net.neurons().collect();
        let labels: Vec<usize> = (0..ids.len()).map(|i| i % k).collect();
        let p = Partition::new(ids, labels, Vec::new()).unwrap();
        let (i, per) = isolation(&net, &p);
        prop_assert!((0.0..=1.0).contains(&i));
        prop_assert!(per.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert_eq!(per.len(), p.community_count());
    }
}
