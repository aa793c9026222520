//! Random graph and attack-set generators for Monte Carlo studies.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{build_graph, Edge, Graph};

/// Random labelled spanning tree on `n` vertices: each vertex in a random
/// order attaches to a uniformly chosen earlier one.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize, weights: (f64, f64)) -> Graph {
    let edges = tree_edges(rng, n);
    let weighted: Vec<_> = edges.into_iter().map(|(i, j)| (i, j, rng.gen_range(weights.0..=weights.1))).collect();
    build_graph(n, &weighted).expect("a spanning tree is connected")
}

/// Random connected graph: a random spanning tree plus every remaining pair
/// independently with probability `extra`.
pub fn random_connected_graph<R: Rng>(rng: &mut R, n: usize, extra: f64, weights: (f64, f64)) -> Graph {
    let mut edges = tree_edges(rng, n);
    for i in 1..=n {
        for j in i + 1..=n {
            if !edges.contains(&(i, j)) && rng.gen_bool(extra) {
                edges.push((i, j));
            }
        }
    }
    let weighted: Vec<_> = edges.into_iter().map(|(i, j)| (i, j, rng.gen_range(weights.0..=weights.1))).collect();
    build_graph(n, &weighted).expect("contains a spanning tree")
}

/// Connected graph with at least one cycle (`n ≥ 3`).
pub fn random_cyclic_graph<R: Rng>(rng: &mut R, n: usize, extra: f64, weights: (f64, f64)) -> Graph {
    assert!(n >= 3, "a simple cycle needs three vertices");
    loop {
        let g = random_connected_graph(rng, n, extra, weights);
        if !g.is_tree() {
            return g;
        }
    }
}

/// Uniformly random subset of `size` edges, in canonical order.
pub fn random_edge_subset<R: Rng>(rng: &mut R, g: &Graph, size: usize) -> Vec<Edge> {
    let mut idx: Vec<usize> = (0..g.m()).collect();
    idx.shuffle(rng);
    let mut chosen: Vec<Edge> = idx[..size.min(g.m())].iter().map(|&k| g.edges()[k]).collect();
    chosen.sort();
    chosen
}

fn tree_edges<R: Rng>(rng: &mut R, n: usize) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    (1..n)
        .map(|k| {
            let parent = order[rng.gen_range(0..k)];
            let child = order[k];
            (parent.min(child), parent.max(child))
        })
        .collect()
}
