use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use socex_core::distribution::{Piece, PiecewiseDistribution};
use socex_core::mechanism::MechanismKind;
use socex_core::network::{generate, GraphSpec, VisibilityGraph};
use socex_core::partition::build_partition;
use socex_core::sim::{ArrivalOrder, GraphSource, Scenario};
use socex_core::Action;

/// Mass and first moment of a uniform mixture on `[a, b)`, straight from
/// the pieces.
fn oracle_moments(pieces: &[(f64, f64, f64)], a: f64, b: f64) -> (f64, f64) {
    let mut mass = 0.0;
    let mut first = 0.0;
    for &(lo, hi, w) in pieces {
        let (l, h) = (lo.max(a), hi.min(b));
        if l < h {
            let dens = w / (hi - lo);
            mass += dens * (h - l);
            first += dens * (h * h - l * l) / 2.0;
        }
    }
    (mass, first)
}

fn mixture() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((0.0f64..0.9, 0.02f64..0.6, 0.1f64..1.0), 1..5).prop_map(|raw| {
        let total: f64 = raw.iter().map(|r| r.2).sum();
        raw.into_iter().map(|(lo, len, w)| (lo, (lo + len).min(1.0), w / total)).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn partition_invariants_on_random_mixtures(pieces in mixture(), frac in 0.05f64..0.95) {
        let dist = PiecewiseDistribution::new(pieces.iter().map(|&(l, h, w)| Piece::new(l, h, w)).collect()).unwrap();
        let (lo, hi) = (dist.support_lo(), dist.support_hi());
        let (_, total_first) = oracle_moments(&pieces, lo, hi + 1.0);
        let mu_b = lo + frac * (total_first - lo);
        let (m0, f0) = oracle_moments(&pieces, lo, mu_b);
        let delta = m0 * mu_b - f0;
        prop_assume!(m0 > 1e-6 && delta > 2e-3);

        let part = build_partition(&dist, mu_b, 1e-10).unwrap();
        let k = part.k();
        let lower = ((total_first - mu_b) / delta + 1.0 - 1e-9).ceil() as usize;
        let upper = ((total_first - mu_b / 2.0) / delta + 2.0 + 1e-9).floor() as usize;
        prop_assert!(lower <= k && k <= upper, "K = {} outside [{}, {}]", k, lower, upper);

        // cells tile [mu_b, hi] in order
        let mut edge = mu_b;
        for (i, cell) in part.cells().iter().enumerate() {
            let parts = cell.parts();
            prop_assert_eq!(parts.len(), 1);
            prop_assert!((parts[0].lo() - edge).abs() < 1e-12);
            edge = parts[0].hi();
            let (mk, fk) = oracle_moments(&pieces, parts[0].lo(), parts[0].hi());
            let mean = (f0 + fk) / (m0 + mk);
            if i + 1 < k {
                prop_assert!((mean - mu_b).abs() < 1e-8, "cell {} mean {}", i + 1, mean);
                prop_assert!(mk >= delta / hi.max(1e-12) - 1e-9 || hi <= 0.0);
            } else {
                prop_assert!(mean <= mu_b + 1e-8);
            }
        }
        prop_assert!((edge - hi).abs() < 1e-12);
    }

    #[test]
    fn generated_graphs_are_well_formed(n in 2usize..120, cap in 1usize..6, seed in any::<u64>()) {
        let spec = GraphSpec::BoundedDegree { n, cap, mean_degree: cap as f64 / 2.0 };
        let g = generate(&spec, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(g.is_well_formed());
        prop_assert!(g.max_degree() <= cap);
        for (i, j) in g.edges() {
            prop_assert!(i != j && g.has_edge(j, i));
        }
    }

    #[test]
    fn second_neighborhood_is_monotone(n in 3usize..60, seed in any::<u64>(), picks in prop::collection::vec(0usize..60, 1..6)) {
        let spec = GraphSpec::BoundedDegree { n, cap: 4, mean_degree: 2.5 };
        let g = generate(&spec, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let seeds: Vec<usize> = picks.iter().map(|p| p % n).collect();
        let mut prev = std::collections::BTreeSet::new();
        for i in 1..=seeds.len() {
            let cur = g.second_neighborhood(&seeds[..i], None);
            prop_assert!(prev.is_subset(&cur));
            for &s in &seeds[..i] {
                for &f in g.neighbors(s).unwrap() {
                    prop_assert!(cur.contains(&f));
                    for &ff in g.neighbors(f).unwrap() {
                        prop_assert!(ff == s || cur.contains(&ff) || seeds[..i].contains(&ff));
                    }
                }
            }
            prev = cur;
        }
    }

    #[test]
    fn medium_is_order_robust(seed in any::<u64>()) {
        let va = PiecewiseDistribution::uniform(0.0, 1.0).unwrap();
        let vb = PiecewiseDistribution::uniform(0.0, 0.5).unwrap();
        let n = 300;
        let mut s = Scenario::new(va, vb, GraphSource::Generated(GraphSpec::BoundedDegree { n, cap: 4, mean_degree: 3.0 }), MechanismKind::Medium);
        s.arrival = ArrivalOrder::SeededShuffle;
        s.seed = seed;
        let p = s.prepare().unwrap();
        let t = p.run_index(0).unwrap();
        prop_assert!(p.bound_checks(&t).iter().all(|c| c.pass()));
        prop_assert_eq!(t.exploration_end.is_some(), true);
        let best = Action::argmax(t.va, t.vb);
        let end = t.exploration_end.unwrap();
        prop_assert!(t.records[end..].iter().all(|r| r.action == best));
    }
}

#[test]
fn runs_are_reproducible_across_prepares() {
    let va = PiecewiseDistribution::uniform(0.0, 1.0).unwrap();
    let vb = PiecewiseDistribution::uniform(0.0, 0.5).unwrap();
    let spec = GraphSpec::TwoTier { n: 400, alpha: 0.3, beta: 0.2, mean_degree: 2.0, hub_degree: None };
    let mut s = Scenario::new(va, vb, GraphSource::Generated(spec), MechanismKind::High);
    s.seed = 99;
    s.arrival = ArrivalOrder::SeededShuffle;
    let (a, b) = (s.prepare().unwrap(), s.prepare().unwrap());
    assert_eq!(a.graph, b.graph);
    assert_eq!(a.order, b.order);
    for i in 0..5 {
        assert_eq!(a.run_index(i).unwrap(), b.run_index(i).unwrap());
    }
}

#[test]
fn degenerate_single_cell() {
    let va = PiecewiseDistribution::uniform(0.0, 1.0).unwrap();
    let part = build_partition(&va, 0.5, 1e-10).unwrap();
    assert_eq!(part.k(), 1);
    let g = VisibilityGraph::empty(5);
    assert_eq!(g.edge_count(), 0);
}
