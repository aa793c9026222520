//! Weighted undirected graphs and the matrices derived from them.
//!
//! Vertices are labelled `1..=n` on every public surface; matrix rows use
//! `label - 1`. Edges are stored with `i < j` and sorted lexicographically,
//! so edge index `k` is stable for a given edge set.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Connectivity threshold on the second-smallest Laplacian eigenvalue.
pub const CONNECTIVITY_TOL: f64 = 1e-9;

/// An undirected edge between 1-based vertex labels, normalized so `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "(usize, usize)", from = "(usize, usize)")]
pub struct Edge {
    i: usize,
    j: usize,
}

impl Edge {
    /// Normalizes the endpoint order. Self loops are rejected later by
    /// [`build_graph`].
    pub fn new(a: usize, b: usize) -> Self {
        Edge { i: a.min(b), j: a.max(b) }
    }

    pub fn i(&self) -> usize {
        self.i
    }

    pub fn j(&self) -> usize {
        self.j
    }

    /// Zero-based row indices of the two endpoints.
    pub fn rows(&self) -> (usize, usize) {
        (self.i - 1, self.j - 1)
    }

    pub fn touches(&self, v: usize) -> bool {
        self.i == v || self.j == v
    }
}

impl From<(usize, usize)> for Edge {
    fn from((a, b): (usize, usize)) -> Self {
        Edge::new(a, b)
    }
}

impl From<Edge> for (usize, usize) {
    fn from(e: Edge) -> Self {
        (e.i, e.j)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.i, self.j)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseEdgeError(pub String);

impl fmt::Display for ParseEdgeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid edge key {:?} (expected \"i-j\")", self.0)
    }
}

impl std::error::Error for ParseEdgeError {}

impl FromStr for Edge {
    type Err = ParseEdgeError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let err = || ParseEdgeError(s.to_string());
        let (a, b) = s.split_once('-').ok_or_else(err)?;
        let a: usize = a.trim().parse().map_err(|_| err())?;
        let b: usize = b.trim().parse().map_err(|_| err())?;
        Ok(Edge::new(a, b))
    }
}

/// Serialized form of a [`Graph`]: `{"n": 6, "edges": [[1, 2, 3.0], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

/// A connected, positively weighted, undirected graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphSpec", into = "GraphSpec")]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    weights: Vec<f64>,
}

impl TryFrom<GraphSpec> for Graph {
    type Error = Error;

    fn try_from(spec: GraphSpec) -> Result<Self> {
        build_graph(spec.n, &spec.edges)
    }
}

impl From<Graph> for GraphSpec {
    fn from(g: Graph) -> Self {
        GraphSpec { n: g.n, edges: g.edges.iter().zip(&g.weights).map(|(e, &w)| (e.i, e.j, w)).collect() }
    }
}

/// Validates and canonicalizes a weighted edge list over vertices `1..=n`.
pub fn build_graph(n: usize, weighted_edges: &[(usize, usize, f64)]) -> Result<Graph> {
    if n < 2 {
        return Err(Error::TooFewVertices(n));
    }
    let mut items: Vec<(Edge, f64)> = Vec::with_capacity(weighted_edges.len());
    for &(a, b, w) in weighted_edges {
        if a == 0 || b == 0 || a > n || b > n {
            return Err(Error::VertexOutOfRange { i: a, j: b, n });
        }
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        let edge = Edge::new(a, b);
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::NonPositiveWeight { edge, weight: w });
        }
        items.push((edge, w));
    }
    items.sort_by_key(|x| x.0);
    if let Some(pair) = items.windows(2).find(|p| p[0].0 == p[1].0) {
        return Err(Error::DuplicateEdge(pair[0].0));
    }
    let (edges, weights): (Vec<_>, Vec<_>) = items.into_iter().unzip();
    let g = Graph { n, edges, weights };

    if !g.structurally_connected() {
        return Err(Error::DisconnectedGraph);
    }
    let ev = linalg::symmetric_eigenvalues(&laplacian(&g));
    if ev[1] <= CONNECTIVITY_TOL {
        return Err(Error::DisconnectedGraph);
    }
    Ok(g)
}

impl Graph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    /// Index of `edge` in the canonical edge order.
    pub fn edge_index(&self, edge: Edge) -> Option<usize> {
        self.edges.binary_search(&edge).ok()
    }

    pub fn require_edge(&self, edge: Edge) -> Result<usize> {
        self.edge_index(edge).ok_or(Error::UnknownEdge(edge))
    }

    pub fn is_tree(&self) -> bool {
        self.m() == self.n - 1
    }

    pub fn to_spec(&self) -> GraphSpec {
        self.clone().into()
    }

    /// Same topology with replacement weights (must stay positive).
    pub fn with_weights(&self, weights: &[f64]) -> Result<Graph> {
        let items: Vec<_> = self.edges.iter().zip(weights).map(|(e, &w)| (e.i, e.j, w)).collect();
        build_graph(self.n, &items)
    }

    /// Edge indices incident to each vertex row, in edge order.
    pub fn incident_edges(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for (k, e) in self.edges.iter().enumerate() {
            let (u, v) = e.rows();
            adj[u].push(k);
            adj[v].push(k);
        }
        adj
    }

    fn structurally_connected(&self) -> bool {
        let mut uf = UnionFind::new(self.n);
        for e in &self.edges {
            let (u, v) = e.rows();
            uf.union(u, v);
        }
        uf.components() == 1
    }
}

/// Disjoint-set forest with path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), components: n }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        self.components -= 1;
        true
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

/// Oriented incidence matrix: column `k` of edge `(i, j)` holds `-1` at row
/// `i` and `+1` at row `j`.
pub fn incidence_matrix(g: &Graph) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(g.n, g.m());
    for (k, edge) in g.edges.iter().enumerate() {
        let (u, v) = edge.rows();
        e[(u, k)] = -1.0;
        e[(v, k)] = 1.0;
    }
    e
}

/// `L = E W Eᵀ`, assembled edge by edge.
pub fn laplacian(g: &Graph) -> DMatrix<f64> {
    laplacian_with_weights(g, &g.weights)
}

/// Laplacian of `g`'s topology with arbitrary (possibly negative) weights.
pub fn laplacian_with_weights(g: &Graph, weights: &[f64]) -> DMatrix<f64> {
    assert_eq!(weights.len(), g.m(), "one weight per edge");
    let mut l = DMatrix::zeros(g.n, g.n);
    for (edge, &w) in g.edges.iter().zip(weights) {
        let (u, v) = edge.rows();
        l[(u, u)] += w;
        l[(v, v)] += w;
        l[(u, v)] -= w;
        l[(v, u)] -= w;
    }
    l
}

/// Spanning tree / chord split of the edge set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreePartition {
    /// Tree edge indices, ascending.
    pub tree_edges: Vec<usize>,
    /// Chord (cycle) edge indices, ascending.
    pub chord_edges: Vec<usize>,
    /// `permutation[p]` is the original index of the edge at permuted
    /// position `p`; tree edges come first.
    pub permutation: Vec<usize>,
}

impl TreePartition {
    /// Partition from an explicit set of tree edges, checked to form a
    /// spanning tree of `g`.
    pub fn from_tree_edges(g: &Graph, tree: &[usize]) -> Result<Self> {
        let set: BTreeSet<usize> = tree.iter().copied().collect();
        if set.len() != g.n - 1 || set.iter().any(|&k| k >= g.m()) {
            return Err(Error::SingularTreeGram);
        }
        let mut uf = UnionFind::new(g.n);
        for &k in &set {
            let (u, v) = g.edges[k].rows();
            if !uf.union(u, v) {
                return Err(Error::SingularTreeGram);
            }
        }
        Ok(Self::from_sets(g.m(), set))
    }

    fn from_sets(m: usize, tree: BTreeSet<usize>) -> Self {
        let tree_edges: Vec<usize> = tree.into_iter().collect();
        let chord_edges: Vec<usize> = (0..m).filter(|k| tree_edges.binary_search(k).is_err()).collect();
        let permutation = tree_edges.iter().chain(&chord_edges).copied().collect();
        TreePartition { tree_edges, chord_edges, permutation }
    }

    pub fn tau(&self) -> usize {
        self.tree_edges.len()
    }

    /// Reorders the columns of an `r × m` matrix into tree-first order.
    pub fn permute_columns(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| a[(r, self.permutation[c])])
    }
}

/// Breadth-first spanning tree from vertex 1, scanning incident edges in
/// canonical order.
pub fn spanning_tree_partition(g: &Graph) -> TreePartition {
    let adj = g.incident_edges();
    let mut seen = vec![false; g.n];
    let mut tree = BTreeSet::new();
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &k in &adj[u] {
            let (a, b) = g.edges[k].rows();
            let v = if a == u { b } else { a };
            if !seen[v] {
                seen[v] = true;
                tree.insert(k);
                queue.push_back(v);
            }
        }
    }
    TreePartition::from_sets(g.m(), tree)
}

/// Cut-set matrix `R = [I_τ T]`, `T = (E_Tᵀ E_T)⁻¹ E_Tᵀ E_C`, returned with
/// columns in the original edge order (tree columns form the identity).
pub fn cutset_matrix(g: &Graph, part: &TreePartition) -> Result<DMatrix<f64>> {
    cutset_from_incidence(&incidence_matrix(g), part)
}

/// [`cutset_matrix`] for an arbitrary orientation of the incidence matrix.
pub fn cutset_from_incidence(e: &DMatrix<f64>, part: &TreePartition) -> Result<DMatrix<f64>> {
    let tau = part.tau();
    let m = e.ncols();
    let mut r = DMatrix::zeros(tau, m);
    for (row, &k) in part.tree_edges.iter().enumerate() {
        r[(row, k)] = 1.0;
    }
    if part.chord_edges.is_empty() {
        return Ok(r);
    }
    let e_tree = e.select_columns(&part.tree_edges);
    let e_chord = e.select_columns(&part.chord_edges);
    let gram = e_tree.transpose() * &e_tree;
    let chol = gram.cholesky().ok_or(Error::SingularTreeGram)?;
    let t = chol.solve(&(e_tree.transpose() * e_chord));
    for (col, &k) in part.chord_edges.iter().enumerate() {
        for row in 0..tau {
            // entries are path coefficients in {-1, 0, 1}
            let x = t[(row, col)];
            let snapped = x.round();
            r[(row, k)] = if (x - snapped).abs() < 1e-9 { snapped } else { x };
        }
    }
    Ok(r)
}

/// Zero/one matrix selecting the attacked edges.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSelector {
    /// Attacked edge indices, ascending.
    pub support: Vec<usize>,
    /// `m × |support|`.
    pub matrix: DMatrix<f64>,
}

pub fn edge_selector(g: &Graph, attacked: &[Edge]) -> Result<EdgeSelector> {
    if attacked.is_empty() {
        return Err(Error::EmptyAttackSet);
    }
    let mut support = attacked.iter().map(|&e| g.require_edge(e)).collect::<Result<Vec<_>>>()?;
    support.sort_unstable();
    if let Some(p) = support.windows(2).find(|p| p[0] == p[1]) {
        return Err(Error::DuplicateEdge(g.edges[p[0]]));
    }
    let mut matrix = DMatrix::zeros(g.m(), support.len());
    for (col, &k) in support.iter().enumerate() {
        matrix[(k, col)] = 1.0;
    }
    Ok(EdgeSelector { support, matrix })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedDegrees {
    /// `w̄_i = Σ_j |w_ij|`, indexed by vertex row.
    pub per_node: Vec<f64>,
    /// `Ψ = max_i w̄_i`.
    pub max: f64,
    /// 1-based vertex attaining the maximum (smallest label on ties).
    pub argmax: usize,
}

pub fn weighted_degrees(g: &Graph) -> WeightedDegrees {
    let mut per_node = vec![0.0; g.n];
    for (edge, &w) in g.edges.iter().zip(&g.weights) {
        let (u, v) = edge.rows();
        per_node[u] += w.abs();
        per_node[v] += w.abs();
    }
    let (mut argmax, mut max) = (0, per_node[0]);
    for (i, &d) in per_node.iter().enumerate() {
        if d > max {
            max = d;
            argmax = i;
        }
    }
    WeightedDegrees { per_node, max, argmax: argmax + 1 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        build_graph(3, &[(1, 2, 1.0), (2, 3, 1.0), (1, 3, 1.0)]).unwrap()
    }

    fn benchmark() -> Graph {
        build_graph(6, &[(1, 2, 3.0), (3, 5, 1.0), (4, 6, 1.0), (2, 4, 2.0), (2, 3, 2.0)]).unwrap()
    }

    #[test]
    fn smallest_graph() {
        let g = build_graph(2, &[(1, 2, 1.0)]).unwrap();
        assert_eq!(g.m(), 1);
        assert!(g.is_tree());
    }

    #[test]
    fn canonical_order_is_lexicographic() {
        let g = benchmark();
        let pairs: Vec<(usize, usize)> = g.edges().iter().map(|&e| e.into()).collect();
        assert_eq!(pairs, vec![(1, 2), (2, 3), (2, 4), (3, 5), (4, 6)]);
        assert_eq!(g.weights(), &[3.0, 2.0, 2.0, 1.0, 1.0]);
        let flipped = build_graph(2, &[(2, 1, 1.0)]).unwrap();
        assert_eq!(flipped.edges()[0], Edge::new(1, 2));
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(build_graph(3, &[(1, 2, 0.0), (2, 3, 1.0)]), Err(Error::NonPositiveWeight { .. })));
        assert!(matches!(build_graph(3, &[(1, 2, f64::NAN), (2, 3, 1.0)]), Err(Error::NonPositiveWeight { .. })));
        assert_eq!(build_graph(3, &[(1, 2, 1.0)]), Err(Error::DisconnectedGraph));
        assert_eq!(
            build_graph(3, &[(1, 2, 1.0), (2, 1, 2.0), (2, 3, 1.0)]),
            Err(Error::DuplicateEdge(Edge::new(1, 2)))
        );
        assert_eq!(build_graph(1, &[]), Err(Error::TooFewVertices(1)));
        assert!(matches!(build_graph(3, &[(1, 4, 1.0)]), Err(Error::VertexOutOfRange { .. })));
        assert_eq!(build_graph(3, &[(2, 2, 1.0)]), Err(Error::SelfLoop(2)));
    }

    #[test]
    fn incidence_sign_convention() {
        let g = build_graph(2, &[(1, 2, 1.0)]).unwrap();
        let e = incidence_matrix(&g);
        assert_eq!(e[(0, 0)], -1.0);
        assert_eq!(e[(1, 0)], 1.0);
    }

    #[test]
    fn incidence_columns_sum_to_zero_and_rank() {
        let g = benchmark();
        let e = incidence_matrix(&g);
        for c in 0..g.m() {
            assert_eq!(e.column(c).sum(), 0.0);
        }
        assert_eq!(e.rank(1e-9), 5);
    }

    #[test]
    fn laplacian_examples() {
        let g = build_graph(2, &[(1, 2, 1.0)]).unwrap();
        assert_eq!(laplacian(&g), DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));

        let l = laplacian(&triangle());
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(l[(i, j)], if i == j { 2.0 } else { -1.0 });
            }
        }
        let ev = linalg::symmetric_eigenvalues(&l);
        assert!(ev[0].abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12 && (ev[2] - 3.0).abs() < 1e-12);

        let ev = linalg::symmetric_eigenvalues(&laplacian(&benchmark()));
        assert!(ev[0].abs() < 1e-12);
        assert!(ev[1] > 1e-3);
    }

    #[test]
    fn tree_partitions() {
        let g = benchmark();
        let p = spanning_tree_partition(&g);
        assert_eq!(p.tree_edges, vec![0, 1, 2, 3, 4]);
        assert!(p.chord_edges.is_empty());
        assert_eq!(p.permutation, vec![0, 1, 2, 3, 4]);

        let p = spanning_tree_partition(&triangle());
        assert_eq!((p.tree_edges.len(), p.chord_edges.len()), (2, 1));

        let mut k4 = Vec::new();
        for i in 1..=4 {
            for j in i + 1..=4 {
                k4.push((i, j, 1.0));
            }
        }
        let p = spanning_tree_partition(&build_graph(4, &k4).unwrap());
        assert_eq!((p.tree_edges.len(), p.chord_edges.len()), (3, 3));
    }

    #[test]
    fn cutset_is_identity_on_trees() {
        let g = benchmark();
        let r = cutset_matrix(&g, &spanning_tree_partition(&g)).unwrap();
        assert_eq!(r, DMatrix::identity(5, 5));
    }

    #[test]
    fn triangle_cutset_columns() {
        // edges: 0 = (1,2), 1 = (1,3), 2 = (2,3)
        let g = triangle();
        // (1,3) = (1,2) + (2,3) in incidence columns
        let part = TreePartition::from_tree_edges(&g, &[0, 2]).unwrap();
        let r = cutset_matrix(&g, &part).unwrap();
        assert_eq!(part.chord_edges, vec![1]);
        assert_eq!(r.column(1).iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0]);
        let rp = part.permute_columns(&r);
        assert_eq!(rp, DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]));
        assert_eq!(rp.rank(1e-9), 2);

        // breadth-first picks (1,2),(1,3); chord (2,3) = -(1,2) + (1,3)
        let part = spanning_tree_partition(&g);
        assert_eq!(part.tree_edges, vec![0, 1]);
        let r = cutset_matrix(&g, &part).unwrap();
        assert_eq!(r.column(2).iter().copied().collect::<Vec<_>>(), vec![-1.0, 1.0]);
    }

    #[test]
    fn from_tree_edges_rejects_cycles() {
        let mut edges = vec![(1, 2, 1.0), (2, 3, 1.0), (1, 3, 1.0), (3, 4, 1.0)];
        edges.sort_by_key(|e| (e.0, e.1));
        let g = build_graph(4, &edges).unwrap();
        // (1,2), (1,3), (2,3) close a cycle
        assert_eq!(TreePartition::from_tree_edges(&g, &[0, 1, 2]), Err(Error::SingularTreeGram));
    }

    #[test]
    fn selectors() {
        let g = benchmark();
        let s = edge_selector(&g, &[Edge::new(1, 2)]).unwrap();
        let mut e1 = DMatrix::zeros(5, 1);
        e1[(0, 0)] = 1.0;
        assert_eq!(s.matrix, e1);

        let s = edge_selector(&g, &[Edge::new(1, 2), Edge::new(3, 5), Edge::new(4, 6)]).unwrap();
        assert_eq!(s.support, vec![0, 3, 4]);
        assert_eq!(s.matrix.shape(), (5, 3));
        for c in 0..3 {
            assert_eq!(s.matrix.column(c).sum(), 1.0);
        }

        let all = edge_selector(&g, g.edges()).unwrap();
        assert_eq!(all.matrix, DMatrix::identity(5, 5));

        assert_eq!(edge_selector(&g, &[Edge::new(1, 3)]), Err(Error::UnknownEdge(Edge::new(1, 3))));
        assert_eq!(edge_selector(&g, &[]), Err(Error::EmptyAttackSet));
    }

    #[test]
    fn degrees() {
        let d = weighted_degrees(&benchmark());
        assert_eq!(d.per_node, vec![3.0, 7.0, 3.0, 3.0, 1.0, 1.0]);
        assert_eq!((d.max, d.argmax), (7.0, 2));
        let d = weighted_degrees(&build_graph(2, &[(1, 2, 1.0)]).unwrap());
        assert_eq!((d.max, d.argmax), (1.0, 1));
        assert_eq!(weighted_degrees(&triangle()).per_node, vec![2.0; 3]);
    }

    #[test]
    fn edge_keys_parse() {
        assert_eq!("3-5".parse::<Edge>().unwrap(), Edge::new(3, 5));
        assert_eq!("5-3".parse::<Edge>().unwrap(), Edge::new(3, 5));
        assert!("35".parse::<Edge>().is_err());
        assert_eq!(Edge::new(4, 6).to_string(), "4-6");
    }

    #[test]
    fn json_round_trip() {
        let g = benchmark();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"n":6,"edges":[[1,2,3.0],[2,3,2.0],[2,4,2.0],[3,5,1.0],[4,6,1.0]]}"#);
        let back: Graph = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        let bad: std::result::Result<Graph, _> = serde_json::from_str(r#"{"n":3,"edges":[[1,2,1.0]]}"#);
        assert!(bad.is_err());
    }
}
