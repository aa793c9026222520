#![allow(dead_code)]

use nalgebra::DMatrix;
use sbdc_core::graph::{incidence_matrix, laplacian, Edge, Graph};

/// `L⁺ = (L + 11ᵀ/n)⁻¹ − 11ᵀ/n` for a connected graph.
pub fn pseudo_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let j = DMatrix::from_element(n, n, 1.0 / n as f64);
    (l + &j).try_inverse().expect("connected graph") - j
}

/// Selected resistance form through the Laplacian pseudo-inverse:
/// `Pᵀ Eᵀ L⁺ E P`.
pub fn resistance_form_oracle(g: &Graph, attacked: &[Edge]) -> DMatrix<f64> {
    let e = incidence_matrix(g);
    let lp = pseudo_inverse(&laplacian(g));
    let full = e.transpose() * lp * e;
    let idx: Vec<usize> = attacked.iter().map(|&a| g.edge_index(a).unwrap()).collect();
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| full[(idx[r], idx[c])])
}

pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// `(r_multi, r_star, r_tot)` from the pseudo-inverse oracle.
pub fn resistance_oracle(g: &Graph, attacked: &[Edge]) -> (f64, f64, f64) {
    let q = resistance_form_oracle(g, attacked);
    let ev = eigenvalues(&q);
    let diag = (0..q.nrows()).map(|k| q[(k, k)]);
    (*ev.last().unwrap(), diag.clone().fold(f64::MIN, f64::max), diag.sum())
}

/// Laplacian built edge by edge from arbitrary (possibly negative) weights.
pub fn laplacian_from(g: &Graph, weights: &[f64]) -> DMatrix<f64> {
    let n = g.n();
    let mut l = DMatrix::zeros(n, n);
    for (e, &w) in g.edges().iter().zip(weights) {
        let (u, v) = (e.i() - 1, e.j() - 1);
        l[(u, u)] += w;
        l[(v, v)] += w;
        l[(u, v)] -= w;
        l[(v, u)] -= w;
    }
    l
}

pub mod scenarios {
    use std::collections::BTreeMap;

    use rand::Rng;
    use sbdc_core::attack::AttackSpec;
    use sbdc_core::coding::{
        decode_weights, linear_decoder, paper_decoder, synthesize_codeword, verify_assumption1, Codeword,
        CodingAssignment,
    };
    use sbdc_core::dynamics::{SimConfig, StateVector};
    use sbdc_core::graph::{Edge, Graph};
    use sbdc_core::robustness::{codeword_bound_ct, effective_resistance_multi, epsilon_star};
    use sbdc_core::sampling::{random_connected_graph, random_edge_subset};

    use super::{eigenvalues, laplacian_from};

    pub struct Certified {
        pub graph: Graph,
        pub coding: CodingAssignment,
        pub theta: Codeword,
        pub attacked: Vec<Edge>,
        pub attack: AttackSpec,
        pub rho: f64,
        pub epsilon_star: f64,
        pub x0: StateVector,
    }

    /// Random graph, numerically verified decoders and an attack whose
    /// largest deviation is exactly `fraction · ρ`.
    pub fn certified<R: Rng>(rng: &mut R, fraction: f64) -> Certified {
        let n = rng.gen_range(3..=8);
        let graph = random_connected_graph(rng, n, 0.3, (0.5, 3.0));
        let mut map = BTreeMap::new();
        for &e in graph.edges() {
            let gain = rng.gen_range(0.5..6.0);
            let f = if rng.gen_bool(0.75) { paper_decoder(gain) } else { linear_decoder(gain) }.unwrap();
            assert!(verify_assumption1(&f, 200, rng.gen()).passes);
            map.insert(e, f);
        }
        let coding = CodingAssignment::from_map(&graph, map).unwrap();
        let theta = synthesize_codeword(&graph, &coding).unwrap();
        let size = rng.gen_range(1..=graph.m());
        let attacked = random_edge_subset(rng, &graph, size);
        let profile = effective_resistance_multi(&graph, &attacked).unwrap();
        let rho = codeword_bound_ct(&profile, coding.k_delta(&attacked).unwrap()).unwrap().rho;
        let cap = fraction * rho;
        let pin = rng.gen_range(0..attacked.len());
        let deviations = attacked
            .iter()
            .enumerate()
            .map(|(k, &e)| {
                let d = if k == pin {
                    if rng.gen_bool(0.5) {
                        cap
                    } else {
                        -cap
                    }
                } else {
                    rng.gen_range(-cap..=cap)
                };
                (e, d)
            })
            .collect();
        let attack = AttackSpec::new(deviations, cap).unwrap();
        let x0 = StateVector::scalar((0..n).map(|_| rng.gen_range(-5.0..5.0)).collect()).unwrap();
        let epsilon_star = epsilon_star(&graph, &profile).epsilon_star;
        Certified { graph, coding, theta, attacked, attack, rho, epsilon_star, x0 }
    }

    fn spread(x0: &StateVector) -> f64 {
        let mean = x0.values.iter().sum::<f64>() / x0.values.len() as f64;
        x0.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt().max(1e-3)
    }

    impl Certified {
        fn perturbed_spectrum(&self) -> Vec<f64> {
            let w = decode_weights(&self.graph, &self.coding, &self.theta, Some(&self.attack)).unwrap();
            eigenvalues(&laplacian_from(&self.graph, &w))
        }

        /// Fixed-step settings long enough for the spectral decay bound to
        /// push the disagreement under 1e-7 before the last 5% of samples.
        pub fn ct_config(&self) -> SimConfig {
            let ev = self.perturbed_spectrum();
            let (l2, ln) = (ev[1].max(1e-6), *ev.last().unwrap());
            let dt = (0.5 / ln).min(1e-2);
            let horizon = (spread(&self.x0) / 1e-7).ln() / l2 / 0.9;
            SimConfig::continuous(dt, (horizon / dt).ceil() * dt)
        }

        pub fn dt_config(&self, epsilon: f64) -> SimConfig {
            let ev = self.perturbed_spectrum();
            let rate = ev[1..].iter().map(|l| (1.0 - epsilon * l).abs()).fold(0.0, f64::max);
            let steps = ((spread(&self.x0) / 1e-7).ln() / -rate.ln() / 0.9).ceil() as usize + 10;
            SimConfig::discrete(epsilon, steps)
        }
    }
}
