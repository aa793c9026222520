use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbdc_core::attack::{induced_weight_perturbation, random_attack, AttackSpec};
use sbdc_core::coding::{
    decode_weights, linear_decoder, paper_decoder, synthesize_codeword, CodingAssignment, DecodingFunction,
};
use sbdc_core::graph::Edge;
use sbdc_core::sampling::{random_connected_graph, random_edge_subset};

fn decoder(kind: bool, gain: f64) -> DecodingFunction {
    if kind {
        paper_decoder(gain).unwrap()
    } else {
        linear_decoder(gain).unwrap()
    }
}

proptest! {
    #[test]
    fn decode_inverts_synthesis(seed in any::<u64>(), gain in 0.2f64..20.0, paper in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size = rng.gen_range(2..9);
        let g = random_connected_graph(&mut rng, size, 0.4, (0.05, 50.0));
        let coding = CodingAssignment::uniform(&g, decoder(paper, gain));
        let theta = synthesize_codeword(&g, &coding).unwrap();
        let w = decode_weights(&g, &coding, &theta, None).unwrap();
        for (a, b) in w.iter().zip(g.weights()) {
            prop_assert!((a - b).abs() <= 1e-9 * b.max(1.0), "{} vs {}", a, b);
        }
    }

    #[test]
    fn paper_decoder_is_monotone_and_lipschitz(gain in 0.1f64..30.0, a in -50.0f64..50.0, b in -50.0f64..50.0) {
        let f = paper_decoder(gain).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(f.raw(hi) >= f.raw(lo));
        prop_assert!(f.raw(hi) - f.raw(lo) <= gain * (hi - lo) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn attacks_touch_only_their_support(seed in any::<u64>(), budget in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size = rng.gen_range(3..9);
        let g = random_connected_graph(&mut rng, size, 0.4, (0.5, 3.0));
        let size = rng.gen_range(1..=g.m());
        let support = random_edge_subset(&mut rng, &g, size);
        let coding = CodingAssignment::uniform(&g, paper_decoder(2.0).unwrap());
        let theta = synthesize_codeword(&g, &coding).unwrap();
        let attack = random_attack(&g, &support, budget, seed).unwrap();
        prop_assert!(attack.norm_inf() <= budget);
        let nominal = decode_weights(&g, &coding, &theta, None).unwrap();
        let attacked = decode_weights(&g, &coding, &theta, Some(&attack)).unwrap();
        for (k, e) in g.edges().iter().enumerate() {
            if !support.contains(e) {
                prop_assert_eq!(nominal[k], attacked[k]);
            }
        }
    }

    #[test]
    fn attack_json_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_connected_graph(&mut rng, 6, 0.5, (0.5, 3.0));
        let support = random_edge_subset(&mut rng, &g, 3);
        let attack = random_attack(&g, &support, 0.7, seed).unwrap();
        let text = serde_json::to_string(&attack).unwrap();
        let back: AttackSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, attack);
    }
}

#[test]
fn weight_deviation_is_bounded_by_lipschitz_aggregate() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pairs = 0;
    while pairs < 10_000 {
        let size = rng.gen_range(2..8);
        let g = random_connected_graph(&mut rng, size, 0.4, (0.1, 10.0));
        let mut map = BTreeMap::new();
        for &e in g.edges() {
            map.insert(e, decoder(rng.gen_bool(0.7), rng.gen_range(0.2..10.0)));
        }
        let coding = CodingAssignment::from_map(&g, map).unwrap();
        let theta = synthesize_codeword(&g, &coding).unwrap();
        let size = rng.gen_range(1..=g.m());
        let support = random_edge_subset(&mut rng, &g, size);
        let k_delta = coding.k_delta(&support).unwrap();
        for _ in 0..20 {
            let attack = random_attack(&g, &support, rng.gen_range(0.0..3.0), rng.gen()).unwrap();
            let wp = induced_weight_perturbation(&g, &coding, &theta, &attack).unwrap();
            assert!(wp.norm <= k_delta * attack.norm_inf() * (1.0 + 1e-12) + 1e-12);
            for (e, d) in wp.edges.iter().zip(&wp.deltas) {
                let k = coding.decoder(*e).unwrap().lipschitz();
                assert!(d.abs() <= k * attack.deviation(*e).abs() * (1.0 + 1e-12) + 1e-12);
            }
            pairs += 1;
        }
    }
}

#[test]
fn budget_is_enforced() {
    let e = Edge::new(1, 2);
    assert!(AttackSpec::new(BTreeMap::from([(e, 0.3)]), 0.2).is_err());
    assert!(AttackSpec::new(BTreeMap::from([(e, -0.2)]), 0.2).is_ok());
}
