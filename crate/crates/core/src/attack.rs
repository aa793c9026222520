//! Structured codeword tampering: additive deviations on a fixed edge subset.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coding::{decode_weights, Codeword, CodingAssignment};
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};

/// Deviations `δ^θ_uv` on the attacked edges, bounded by `budget` in ∞-norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AttackSpecJson", into = "AttackSpecJson")]
pub struct AttackSpec {
    deviations: BTreeMap<Edge, f64>,
    budget: f64,
}

impl AttackSpec {
    pub fn new(deviations: BTreeMap<Edge, f64>, budget: f64) -> Result<Self> {
        if !(budget.is_finite() && budget >= 0.0) {
            return Err(Error::InvalidBudget(budget));
        }
        if deviations.is_empty() {
            return Err(Error::EmptySupport);
        }
        for (&edge, &d) in &deviations {
            if !d.is_finite() || d.abs() > budget {
                return Err(Error::BudgetExceeded { edge, deviation: d, budget });
            }
        }
        Ok(AttackSpec { deviations, budget })
    }

    /// Attacked edges in canonical order.
    pub fn support(&self) -> Vec<Edge> {
        self.deviations.keys().copied().collect()
    }

    pub fn deviations(&self) -> &BTreeMap<Edge, f64> {
        &self.deviations
    }

    pub fn deviation(&self, edge: Edge) -> f64 {
        self.deviations.get(&edge).copied().unwrap_or(0.0)
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// `‖δ^θ‖_∞`.
    pub fn norm_inf(&self) -> f64 {
        self.deviations.values().fold(0.0, |acc, d| acc.max(d.abs()))
    }

    /// Rescales so that `‖δ^θ‖_∞ == norm` exactly on the largest entry; the
    /// budget becomes `norm`. An all-zero attack is pushed onto its first
    /// edge.
    pub fn with_norm(&self, norm: f64) -> Result<Self> {
        let current = self.norm_inf();
        let mut deviations = self.deviations.clone();
        if current == 0.0 {
            if let Some(d) = deviations.values_mut().next() {
                *d = norm;
            }
        } else {
            let argmax =
                *self.deviations.iter().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map(|(e, _)| e).unwrap();
            for (e, d) in deviations.iter_mut() {
                *d = if *e == argmax { norm.copysign(*d) } else { (*d / current * norm).clamp(-norm, norm) };
            }
        }
        AttackSpec::new(deviations, norm)
    }

    /// Fails when an attacked edge is missing from `g`.
    pub fn check_graph(&self, g: &Graph) -> Result<()> {
        for &e in self.deviations.keys() {
            g.require_edge(e)?;
        }
        Ok(())
    }
}

/// `{"support": [[i, j], ...], "deviations": {"i-j": δ}, "budget": b}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpecJson {
    pub support: Vec<(usize, usize)>,
    pub deviations: BTreeMap<String, f64>,
    pub budget: f64,
}

impl TryFrom<AttackSpecJson> for AttackSpec {
    type Error = String;

    fn try_from(j: AttackSpecJson) -> std::result::Result<Self, String> {
        let mut deviations = BTreeMap::new();
        for (key, &d) in &j.deviations {
            let edge: Edge = key.parse().map_err(|e| format!("deviations: {e}"))?;
            deviations.insert(edge, d);
        }
        let support: Vec<Edge> = j.support.iter().map(|&p| Edge::from(p)).collect();
        let mut sorted = support.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != support.len() || sorted != deviations.keys().copied().collect::<Vec<_>>() {
            return Err("support must list exactly the edges that carry deviations".into());
        }
        AttackSpec::new(deviations, j.budget).map_err(|e| e.to_string())
    }
}

impl From<AttackSpec> for AttackSpecJson {
    fn from(a: AttackSpec) -> Self {
        AttackSpecJson {
            support: a.deviations.keys().map(|&e| e.into()).collect(),
            deviations: a.deviations.iter().map(|(e, &d)| (e.to_string(), d)).collect(),
            budget: a.budget,
        }
    }
}

/// Edge `(1, 2)` only.
pub fn benchmark_support_single() -> Vec<Edge> {
    vec![Edge::new(1, 2)]
}

/// Edges `(1, 2)`, `(3, 5)`, `(4, 6)`.
pub fn benchmark_support_triple() -> Vec<Edge> {
    vec![Edge::new(1, 2), Edge::new(3, 5), Edge::new(4, 6)]
}

/// Benchmark attacks on the six-agent tree: deviation `-ρ/2` on
/// `(1, 2)` (variant 1) or on `(1, 2)`, `(3, 5)`, `(4, 6)` (variant 2).
pub fn paper_attack(variant: u8, rho: f64) -> Result<AttackSpec> {
    let support = match variant {
        1 => benchmark_support_single(),
        2 => benchmark_support_triple(),
        v => return Err(Error::UnknownVariant(v)),
    };
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::InvalidBudget(rho));
    }
    let d = -0.5 * rho;
    AttackSpec::new(support.into_iter().map(|e| (e, d)).collect(), 0.5 * rho)
}

/// Deviations i.i.d. uniform on `[-budget, budget]`, reproducible per seed.
pub fn random_attack(g: &Graph, support: &[Edge], budget: f64, seed: u64) -> Result<AttackSpec> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    if !(budget.is_finite() && budget >= 0.0) {
        return Err(Error::InvalidBudget(budget));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut deviations = BTreeMap::new();
    for &e in support {
        g.require_edge(e)?;
        let d = if budget == 0.0 { 0.0 } else { rng.gen_range(-budget..=budget) };
        deviations.insert(e, d);
    }
    AttackSpec::new(deviations, budget)
}

/// Effective-weight deviations `δ^w_uv = p_uv(θ_uv + δ^θ_uv) − p_uv(θ_uv)`
/// over an attack's support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightPerturbation {
    pub edges: Vec<Edge>,
    pub deltas: Vec<f64>,
    /// Spectral norm of the diagonal perturbation, i.e. `max |δ^w_k|`.
    pub norm: f64,
}

impl WeightPerturbation {
    pub fn new(edges: Vec<Edge>, deltas: Vec<f64>) -> Self {
        let norm = deltas.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
        WeightPerturbation { edges, deltas, norm }
    }
}

pub fn induced_weight_perturbation(
    g: &Graph,
    coding: &CodingAssignment,
    theta: &Codeword,
    attack: &AttackSpec,
) -> Result<WeightPerturbation> {
    attack.check_graph(g)?;
    let nominal = decode_weights(g, coding, theta, None)?;
    let perturbed = decode_weights(g, coding, theta, Some(attack))?;
    let edges = attack.support();
    let deltas = edges
        .iter()
        .map(|&e| {
            let k = g.require_edge(e)?;
            Ok(perturbed[k] - nominal[k])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightPerturbation::new(edges, deltas))
}
