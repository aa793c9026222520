mod common;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbdc_core::graph::{build_graph, Edge};
use sbdc_core::robustness::{
    codeword_bound_ct, codeword_bound_dt, compensated_lipschitz, effective_resistance_multi, epsilon_star,
    general_resistance_profile, resilience_gap, tree_resistance,
};
use sbdc_core::sampling::{random_connected_graph, random_cyclic_graph, random_edge_subset, random_tree};

#[test]
fn resistance_matches_pseudo_inverse_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let size = rng.gen_range(2..10);
        let g = random_connected_graph(&mut rng, size, 0.4, (0.2, 5.0));
        let size = rng.gen_range(1..=g.m());
        let attacked = random_edge_subset(&mut rng, &g, size);
        let p = general_resistance_profile(&g, &attacked).unwrap();
        let (multi, star, tot) = common::resistance_oracle(&g, &attacked);
        assert!((p.r_multi - multi).abs() < 1e-9 * multi.max(1.0));
        assert!((p.r_star - star).abs() < 1e-9 * star.max(1.0));
        assert!((p.r_tot - tot).abs() < 1e-9 * tot.max(1.0));
    }
}

#[test]
fn resistance_ordering() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..100 {
        let size = rng.gen_range(2..=12);
        let g = random_connected_graph(&mut rng, size, 0.3, (0.2, 5.0));
        let size = rng.gen_range(1..=g.m());
        let attacked = random_edge_subset(&mut rng, &g, size);
        let p = effective_resistance_multi(&g, &attacked).unwrap();
        assert!(p.r_multi - p.r_star >= -1e-9);
        assert!(p.r_tot - p.r_multi >= -1e-9);
    }
}

#[test]
fn trees_and_singletons_have_no_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..50 {
        let size = rng.gen_range(2..10);
        let t = random_tree(&mut rng, size, (0.2, 5.0));
        let size = rng.gen_range(1..=t.m());
        let attacked = random_edge_subset(&mut rng, &t, size);
        let general = general_resistance_profile(&t, &attacked).unwrap();
        assert!(resilience_gap(&general) <= 1e-12);
        let fast = tree_resistance(&t, &attacked).unwrap().unwrap();
        assert!((fast - general.r_multi).abs() <= 1e-12 * fast.max(1.0));

        let size = rng.gen_range(3..10);

        let g = random_cyclic_graph(&mut rng, size, 0.3, (0.2, 5.0));
        let single = random_edge_subset(&mut rng, &g, 1);
        assert!(resilience_gap(&effective_resistance_multi(&g, &single).unwrap()) <= 1e-12);
        assert_eq!(tree_resistance(&g, &single).unwrap(), None);
    }
}

#[test]
fn unit_triangle_two_edges_has_positive_gap() {
    let g = build_graph(3, &[(1, 2, 1.0), (2, 3, 1.0), (1, 3, 1.0)]).unwrap();
    let p = effective_resistance_multi(&g, &[Edge::new(1, 2), Edge::new(2, 3)]).unwrap();
    assert!((p.r_multi - 1.0).abs() < 1e-12);
    assert!((p.r_star - 2.0 / 3.0).abs() < 1e-12);
    assert!((resilience_gap(&p) - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn small_gain_perturbations_keep_one_zero_mode() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..200 {
        let size = rng.gen_range(2..10);
        let g = random_connected_graph(&mut rng, size, 0.4, (0.2, 5.0));
        let size = rng.gen_range(1..=g.m());
        let attacked = random_edge_subset(&mut rng, &g, size);
        let r = effective_resistance_multi(&g, &attacked).unwrap().r_multi;
        let bound = 0.99 / r;
        let mut w = g.weights().to_vec();
        let pin = rng.gen_range(0..attacked.len());
        for (k, e) in attacked.iter().enumerate() {
            let d = if k == pin {
                bound * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
            } else {
                rng.gen_range(-bound..=bound)
            };
            w[g.edge_index(*e).unwrap()] += d;
        }
        let ev = common::eigenvalues(&common::laplacian_from(&g, &w));
        assert!(ev[0] >= -1e-9, "{ev:?}");
        assert_eq!(ev.iter().filter(|&&l| l < 1e-9).count(), 1, "{ev:?}");
    }
}

#[test]
fn bound_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let mut strict = 0;
    for _ in 0..100 {
        let size = rng.gen_range(2..9);
        let g = random_connected_graph(&mut rng, size, 0.5, (0.2, 5.0));
        let size = rng.gen_range(1..=g.m());
        let attacked = random_edge_subset(&mut rng, &g, size);
        let p = effective_resistance_multi(&g, &attacked).unwrap();
        let k = rng.gen_range(0.3..10.0);
        let ct = codeword_bound_ct(&p, k).unwrap();
        assert!(ct.identity_residual <= 1e-12 * ct.rho.max(1.0));

        let k2 = compensated_lipschitz(k, ct.gap).unwrap();
        let improved = codeword_bound_ct(&p, k2).unwrap().rho_star;
        assert!((improved - ct.rho_star / (1.0 - ct.gap)).abs() <= 1e-12 * improved.max(1.0));
        if ct.gap > 1e-9 {
            assert!(improved > ct.rho_star);
            strict += 1;
        }

        let es = epsilon_star(&g, &p);
        for eps in [es.epsilon_star, 0.5 * es.epsilon_star, 0.99 * es.epsilon_star] {
            let dt = codeword_bound_dt(&g, &p, k, eps).unwrap();
            assert!((dt - ct.rho).abs() <= 1e-12 * ct.rho.max(1.0));
        }
        let above = 0.5 * (es.epsilon_star + 1.0 / es.psi);
        assert!(codeword_bound_dt(&g, &p, k, above).unwrap() < ct.rho);
    }
    assert!(strict > 10);
}

#[test]
fn pseudo_inverse_identity_on_chords() {
    // Eᵀ L⁺ E equals Rᵀ (R W Rᵀ)⁻¹ R for any spanning-tree basis.
    use sbdc_core::graph::{cutset_matrix, incidence_matrix, laplacian, spanning_tree_partition};
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    for _ in 0..30 {
        let size = rng.gen_range(3..9);
        let g = random_cyclic_graph(&mut rng, size, 0.4, (0.2, 5.0));
        let part = spanning_tree_partition(&g);
        let r = cutset_matrix(&g, &part).unwrap();
        let w = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(g.weights()));
        let lhs = r.transpose() * (&r * w * r.transpose()).try_inverse().unwrap() * &r;
        let e = incidence_matrix(&g);
        let rhs = e.transpose() * common::pseudo_inverse(&laplacian(&g)) * e;
        assert!((lhs - rhs).amax() < 1e-9);
    }
}
