//! Declarative scenario files and their resolution into core objects.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sbdc_core::attack::{paper_attack, random_attack, AttackSpec, AttackSpecJson};
use sbdc_core::coding::{synthesize_codeword, Codeword, CodingAssignment, CodingSpec, DecoderSpec};
use sbdc_core::dynamics::{SanConfig, SimConfig, StateVector, Thresholds, DEFAULT_DT, DEFAULT_MAX_SAMPLES};
use sbdc_core::graph::{build_graph, Edge, Graph, GraphSpec};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub graph: GraphSpec,
    pub coding: CodingSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackSection>,
    /// Edges analysed when no attack is present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attacked: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub san: Option<SanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    /// Seed for random attacks and random initial states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<OutputSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CodingSection {
    Uniform(DecoderSpec),
    Edges(BTreeMap<String, DecoderSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackSection {
    /// Six-agent benchmark attack: variant 1 or 2 with deviation `-ρ/2`.
    Benchmark {
        variant: u8,
        rho: f64,
    },
    Explicit(AttackSpecJson),
    Random {
        support: Vec<(usize, usize)>,
        budget: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SanSection {
    pub leaders: Vec<usize>,
    /// `n × |leaders|`; defaults to unit gain on each leader's own column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<f64>>>,
    pub inputs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Ct,
    Dt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escape_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn invalid<T>(field: impl Into<String>, message: impl fmt::Display) -> Result<T, ValidationError> {
    Err(ValidationError { field: field.into(), message: message.to_string() })
}

/// Simulation settings after defaults and cross-checks.
#[derive(Debug, Clone)]
pub struct ResolvedSimulation {
    pub mode: Mode,
    pub config: SimConfig,
    pub x0: StateVector,
}

/// A validated scenario, ready for analysis and simulation.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub graph: Graph,
    pub coding: CodingAssignment,
    pub theta: Codeword,
    pub attack: Option<AttackSpec>,
    /// Edges covered by the robustness analysis, if determinable.
    pub attacked: Option<Vec<Edge>>,
    pub san: Option<SanConfig>,
    pub simulation: Option<ResolvedSimulation>,
    /// Step size used for the discrete-time certificates.
    pub epsilon: Option<f64>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = path.trim_end_matches(".?").trim_end_matches('?').to_string();
            let inner = e.into_inner();
            let at = if path.is_empty() || path == "." { String::new() } else { format!(" (field `{path}`)") };
            CliError::Parse(format!("line {} column {}{at}: {inner}", inner.line(), inner.column()))
        })?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Normalized form: edges oriented `i < j` and sorted, attack supports
    /// sorted, output settings dropped.
    pub fn canonical(&self) -> Scenario {
        let norm = |(a, b): (usize, usize)| (a.min(b), a.max(b));
        let mut s = self.clone();
        s.outputs = None;
        for e in &mut s.graph.edges {
            (e.0, e.1) = norm((e.0, e.1));
        }
        s.graph.edges.sort_by_key(|a| (a.0, a.1));
        let sort_support = |v: &mut Vec<(usize, usize)>| {
            for e in v.iter_mut() {
                *e = norm(*e);
            }
            v.sort();
        };
        match &mut s.attack {
            Some(AttackSection::Explicit(a)) => {
                sort_support(&mut a.support);
                a.deviations = a
                    .deviations
                    .iter()
                    .map(|(k, v)| (k.parse::<Edge>().map(|e| e.to_string()).unwrap_or_else(|_| k.clone()), *v))
                    .collect();
            }
            Some(AttackSection::Random { support, .. }) => sort_support(support),
            _ => {}
        }
        if let Some(a) = &mut s.attacked {
            sort_support(a);
        }
        if let CodingSection::Edges(map) = &mut s.coding {
            *map = map
                .iter()
                .map(|(k, v)| (k.parse::<Edge>().map(|e| e.to_string()).unwrap_or_else(|_| k.clone()), *v))
                .collect();
        }
        s
    }

    /// SHA-256 of the canonical form; object keys are emitted sorted.
    pub fn content_hash(&self) -> String {
        let value = serde_json::to_value(self.canonical()).expect("scenario serializes");
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn resolve(&self, seed_override: Option<u64>) -> Result<Resolved, ValidationError> {
        let seed = seed_override.or(self.seed).unwrap_or(0);
        let graph = build_graph(self.graph.n, &self.graph.edges).or_else(|e| invalid("graph", e))?;
        let coding = match &self.coding {
            CodingSection::Uniform(spec) => {
                CodingAssignment::uniform(&graph, spec.build().or_else(|e| invalid("coding.uniform", e))?)
            }
            CodingSection::Edges(map) => {
                CodingSpec { edges: map.clone() }.build(&graph).or_else(|e| invalid("coding.edges", e))?
            }
        };
        let theta = synthesize_codeword(&graph, &coding).or_else(|e| invalid("coding", e))?;

        let attack = match &self.attack {
            None => None,
            Some(AttackSection::Benchmark { variant, rho }) => {
                let a = paper_attack(*variant, *rho).or_else(|e| invalid("attack.benchmark", e))?;
                a.check_graph(&graph).or_else(|e| invalid("attack.benchmark", e))?;
                Some(a)
            }
            Some(AttackSection::Explicit(json)) => {
                let a = AttackSpec::try_from(json.clone()).or_else(|e| invalid("attack.explicit", e))?;
                a.check_graph(&graph).or_else(|e| invalid("attack.explicit.support", e))?;
                Some(a)
            }
            Some(AttackSection::Random { support, budget }) => {
                let edges: Vec<Edge> = support.iter().map(|&(i, j)| Edge::new(i, j)).collect();
                Some(random_attack(&graph, &edges, *budget, seed).or_else(|e| invalid("attack.random", e))?)
            }
        };

        let attacked = match (&self.attacked, &attack) {
            (Some(list), a) => {
                let mut edges: Vec<Edge> = list.iter().map(|&(i, j)| Edge::new(i, j)).collect();
                edges.sort();
                for e in &edges {
                    graph.require_edge(*e).or_else(|err| invalid("attacked", err))?;
                }
                if edges.windows(2).any(|p| p[0] == p[1]) {
                    return invalid("attacked", "duplicate edge");
                }
                if edges.is_empty() {
                    return invalid("attacked", "edge list is empty");
                }
                if let Some(a) = a {
                    if a.support() != edges {
                        return invalid("attacked", "differs from the attack support");
                    }
                }
                Some(edges)
            }
            (None, Some(a)) => Some(a.support()),
            (None, None) => None,
        };

        let san = match &self.san {
            None => None,
            Some(s) => {
                let n = graph.n();
                let b = s.b.clone().unwrap_or_else(|| {
                    (1..=n).map(|i| s.leaders.iter().map(|&l| if l == i { 1.0 } else { 0.0 }).collect()).collect()
                });
                Some(SanConfig::new(n, s.leaders.clone(), b, s.inputs.clone()).or_else(|e| invalid("san", e))?)
            }
        };

        let (simulation, epsilon) = match &self.simulation {
            None => (None, None),
            Some(sim) => {
                let resolved = self.resolve_simulation(sim, &graph, seed)?;
                if let (Some(s), Some(san)) = (&san, Some(&resolved)) {
                    if s.input_dim() != san.x0.dim {
                        return invalid("san.inputs", "input dimension must equal simulation.dim");
                    }
                }
                (Some(resolved), sim.epsilon)
            }
        };

        Ok(Resolved { graph, coding, theta, attack, attacked, san, simulation, epsilon })
    }

    fn resolve_simulation(
        &self,
        sim: &SimulationSection,
        graph: &Graph,
        seed: u64,
    ) -> Result<ResolvedSimulation, ValidationError> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                invalid(field, format!("must be positive and finite, got {v}"))
            }
        };
        let mode = match sim.mode {
            Mode::Ct => {
                if sim.epsilon.is_some() {
                    return invalid("simulation.epsilon", "only allowed in dt mode");
                }
                if sim.steps.is_some() {
                    return invalid("simulation.steps", "only allowed in dt mode");
                }
                let dt = positive("simulation.dt", sim.dt.unwrap_or(DEFAULT_DT))?;
                let horizon = match sim.horizon {
                    Some(h) => positive("simulation.horizon", h)?,
                    None => return invalid("simulation.horizon", "required in ct mode"),
                };
                if horizon < dt {
                    return invalid("simulation.horizon", format!("must be at least dt = {dt}"));
                }
                sbdc_core::dynamics::TimeMode::Continuous { dt, horizon }
            }
            Mode::Dt => {
                if sim.dt.is_some() {
                    return invalid("simulation.dt", "only allowed in ct mode");
                }
                let epsilon = match sim.epsilon {
                    Some(e) => positive("simulation.epsilon", e)?,
                    None => return invalid("simulation.epsilon", "required in dt mode"),
                };
                let steps = match (sim.steps, sim.horizon) {
                    (Some(_), Some(_)) => return invalid("simulation.steps", "give either steps or horizon, not both"),
                    (Some(0), None) => return invalid("simulation.steps", "must be at least 1"),
                    (Some(s), None) => s,
                    (None, Some(h)) => (positive("simulation.horizon", h)? / epsilon).round().max(1.0) as usize,
                    (None, None) => return invalid("simulation.steps", "steps or horizon is required in dt mode"),
                };
                sbdc_core::dynamics::TimeMode::Discrete { epsilon, steps }
            }
        };
        let defaults = Thresholds::default();
        let thresholds = Thresholds {
            convergence_tol: positive(
                "simulation.convergence_tol",
                sim.convergence_tol.unwrap_or(defaults.convergence_tol),
            )?,
            escape: positive("simulation.escape_threshold", sim.escape_threshold.unwrap_or(defaults.escape))?,
        };
        let max_samples = sim.max_samples.unwrap_or(DEFAULT_MAX_SAMPLES);
        if max_samples < 2 {
            return invalid("simulation.max_samples", "must be at least 2");
        }
        let dim = sim.dim.unwrap_or(1);
        if dim == 0 {
            return invalid("simulation.dim", "must be at least 1");
        }
        let len = graph.n() * dim;
        let values = match &sim.x0 {
            Some(x) if x.len() != len => {
                return invalid(
                    "simulation.x0",
                    format!("expected {len} entries (n = {}, dim = {dim}), got {}", graph.n(), x.len()),
                )
            }
            Some(x) => x.clone(),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..len).map(|_| rng.gen_range(-1.0..=1.0)).collect()
            }
        };
        let x0 = StateVector::new(values, dim).or_else(|e| invalid("simulation.x0", e))?;
        Ok(ResolvedSimulation { mode: sim.mode, config: SimConfig { mode, thresholds, max_samples }, x0 })
    }
}
