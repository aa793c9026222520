//! Consensus and leader-follower dynamics driven by decoded edge weights.
//!
//! All models share the linear drift `ẋ = −(L_B ⊗ I_D) x + (B ⊗ I_D) u`
//! where `L_B` is the Laplacian of the (possibly attacked) decoded weights
//! plus the leader gains on the diagonal. Plain consensus has no leaders and
//! no input. Continuous time uses fixed-step RK4; discrete time iterates
//! `x⁺ = x + ε · drift(x)`.

use serde::{Deserialize, Serialize};

use crate::attack::AttackSpec;
use crate::coding::{decode_weights, Codeword, CodingAssignment};
use crate::error::{Error, Result};
use crate::graph::{laplacian, Graph};
use crate::numfmt::fmt_sig;

/// Stacked agent states `x = [x_1; …; x_n]`, each `x_i ∈ ℝ^D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub dim: usize,
    pub values: Vec<f64>,
}

impl StateVector {
    pub fn new(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim) || values.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "state of length {} does not split into agents of dimension {dim}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState(0.0));
        }
        Ok(StateVector { dim, values })
    }

    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        Self::new(values, 1)
    }

    pub fn agents(&self) -> usize {
        self.values.len() / self.dim
    }

    fn expect_agents(&self, n: usize) -> Result<()> {
        if self.agents() != n {
            return Err(Error::DimensionMismatch { expected: n * self.dim, got: self.values.len() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Disagreement below which a run counts as converged.
    pub convergence_tol: f64,
    /// State magnitude that counts as escape.
    pub escape: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { convergence_tol: 1e-6, escape: 1e6 }
    }
}

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_MAX_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeMode {
    Continuous { dt: f64, horizon: f64 },
    Discrete { epsilon: f64, steps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mode: TimeMode,
    pub thresholds: Thresholds,
    pub max_samples: usize,
}

impl SimConfig {
    pub fn continuous(dt: f64, horizon: f64) -> Self {
        SimConfig {
            mode: TimeMode::Continuous { dt, horizon },
            thresholds: Thresholds::default(),
            max_samples: DEFAULT_MAX_SAMPLES,
        }
    }

    pub fn discrete(epsilon: f64, steps: usize) -> Self {
        SimConfig {
            mode: TimeMode::Discrete { epsilon, steps },
            thresholds: Thresholds::default(),
            max_samples: DEFAULT_MAX_SAMPLES,
        }
    }

    pub fn with_thresholds(mut self, thresholds: Thresholds) -> Self {
        self.thresholds = thresholds;
        self
    }

    fn validate(&self) -> Result<()> {
        match self.mode {
            TimeMode::Continuous { dt, horizon } => {
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
                }
                if !(horizon >= dt && horizon.is_finite()) {
                    return Err(Error::InvalidParameter(format!("horizon {horizon} must be at least dt {dt}")));
                }
            }
            TimeMode::Discrete { epsilon, steps } => {
                if !(epsilon > 0.0 && epsilon.is_finite()) {
                    return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
                }
                if steps == 0 {
                    return Err(Error::InvalidParameter("steps must be at least 1".into()));
                }
            }
        }
        if self.max_samples < 2 {
            return Err(Error::InvalidParameter("max_samples must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Converged {
        limit: Vec<f64>,
    },
    /// `escape_time` is set when a state crossed the escape threshold;
    /// `None` means sustained growth of the disagreement.
    Diverged {
        escape_time: Option<f64>,
    },
    Undecided,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Converged { .. } => "converged",
            Verdict::Diverged { .. } => "diverged",
            Verdict::Undecided => "undecided",
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self, Verdict::Converged { .. })
    }

    pub fn is_diverged(&self) -> bool {
        matches!(self, Verdict::Diverged { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n: usize,
    pub dim: usize,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `max_i ‖x_i − mean‖` per sample.
    pub disagreement: Vec<f64>,
    pub verdict: Verdict,
}

/// JSON sidecar written next to a trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub verdict: String,
    pub limit: Option<Vec<f64>>,
    pub escape_time: Option<f64>,
    pub disagreement_final: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has samples")
    }

    /// `t,x_1,…,x_n` (or `x_i_c` per coordinate when `D > 1`), numbers at
    /// 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.n {
            if self.dim == 1 {
                out.push_str(&format!(",x_{i}"));
            } else {
                for c in 1..=self.dim {
                    out.push_str(&format!(",x_{i}_{c}"));
                }
            }
        }
        out.push('\n');
        for (t, x) in self.times.iter().zip(&self.states) {
            out.push_str(&fmt_sig(*t));
            for v in x {
                out.push(',');
                out.push_str(&fmt_sig(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> TrajectorySummary {
        let (limit, escape_time) = match &self.verdict {
            Verdict::Converged { limit } => (Some(limit.clone()), None),
            Verdict::Diverged { escape_time } => (None, *escape_time),
            Verdict::Undecided => (None, None),
        };
        TrajectorySummary {
            verdict: self.verdict.label().to_string(),
            limit,
            escape_time,
            disagreement_final: self.disagreement.last().copied().unwrap_or(0.0),
        }
    }
}

/// Leaders, input gains `B` (`n × |leaders|`) and constant inputs `u_ℓ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanConfig {
    leaders: Vec<usize>,
    gains: Vec<Vec<f64>>,
    inputs: Vec<Vec<f64>>,
}

impl SanConfig {
    pub fn new(n: usize, leaders: Vec<usize>, gains: Vec<Vec<f64>>, inputs: Vec<Vec<f64>>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidSanConfig(m));
        if leaders.is_empty() {
            return bad("leader set is empty".into());
        }
        let mut sorted = leaders.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != leaders.len() || sorted.iter().any(|&l| l == 0 || l > n) {
            return bad(format!("leaders must be distinct vertices in 1..={n}"));
        }
        if gains.len() != n || gains.iter().any(|row| row.len() != leaders.len()) {
            return bad(format!("B must be {n} x {}", leaders.len()));
        }
        for (i, row) in gains.iter().enumerate() {
            if row.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
                return bad(format!("B row {} has negative or non-finite entries", i + 1));
            }
            let nonzero = row.iter().any(|&b| b > 0.0);
            if nonzero != leaders.contains(&(i + 1)) {
                return bad(format!("B row {} must be nonzero exactly when the agent is a leader", i + 1));
            }
        }
        if inputs.len() != leaders.len() {
            return bad("one input per leader is required".into());
        }
        let dim = inputs[0].len();
        if dim == 0 || inputs.iter().any(|u| u.len() != dim || u.iter().any(|v| !v.is_finite())) {
            return bad("inputs must share one positive dimension and be finite".into());
        }
        Ok(SanConfig { leaders, gains, inputs })
    }

    /// Leader `leader` with gain `gain` on its own column.
    pub fn single_leader(n: usize, leader: usize, gain: f64, input: Vec<f64>) -> Result<Self> {
        let gains = (1..=n).map(|i| vec![if i == leader { gain } else { 0.0 }]).collect();
        Self::new(n, vec![leader], gains, vec![input])
    }

    pub fn leaders(&self) -> &[usize] {
        &self.leaders
    }

    pub fn gains(&self) -> &[Vec<f64>] {
        &self.gains
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    /// `diag(B 1)`.
    fn leader_diagonal(&self) -> Vec<f64> {
        self.gains.iter().map(|row| row.iter().sum()).collect()
    }

    /// `(B ⊗ I_D) u`, stacked per agent.
    fn forcing(&self) -> Vec<f64> {
        let dim = self.input_dim();
        let mut out = vec![0.0; self.gains.len() * dim];
        for (i, row) in self.gains.iter().enumerate() {
            for (l, &b) in row.iter().enumerate() {
                for c in 0..dim {
                    out[i * dim + c] += b * self.inputs[l][c];
                }
            }
        }
        out
    }
}

/// Edge-list form of `ẋ = −(L_B ⊗ I_D) x + f`.
#[derive(Debug, Clone)]
struct LinearNetwork {
    n: usize,
    dim: usize,
    edges: Vec<(usize, usize, f64)>,
    diagonal: Vec<f64>,
    forcing: Vec<f64>,
}

impl LinearNetwork {
    fn new(g: &Graph, weights: &[f64], dim: usize, san: Option<&SanConfig>) -> Self {
        let edges = g.edges().iter().zip(weights).map(|(e, &w)| (e.rows().0, e.rows().1, w)).collect();
        let n = g.n();
        let (diagonal, forcing) = match san {
            Some(s) => (s.leader_diagonal(), s.forcing()),
            None => (vec![0.0; n], vec![0.0; n * dim]),
        };
        LinearNetwork { n, dim, edges, diagonal, forcing }
    }

    fn drift(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        out.copy_from_slice(&self.forcing);
        for i in 0..self.n {
            for c in 0..d {
                out[i * d + c] -= self.diagonal[i] * x[i * d + c];
            }
        }
        for &(u, v, w) in &self.edges {
            for c in 0..d {
                let diff = w * (x[u * d + c] - x[v * d + c]);
                out[u * d + c] -= diff;
                out[v * d + c] += diff;
            }
        }
    }
}

struct Recorder {
    n: usize,
    dim: usize,
    stride: usize,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    disagreement: Vec<f64>,
}

impl Recorder {
    fn new(n: usize, dim: usize, steps: usize, max_samples: usize) -> Self {
        // initial sample + every stride-th step + the last step
        let stride = steps.div_ceil(max_samples - 1).max(1);
        Recorder { n, dim, stride, times: Vec::new(), states: Vec::new(), disagreement: Vec::new() }
    }

    fn push(&mut self, t: f64, x: &[f64]) {
        self.times.push(t);
        self.states.push(x.to_vec());
        self.disagreement.push(disagreement(x, self.n, self.dim));
    }

    fn finish(self, thresholds: &Thresholds) -> Trajectory {
        let mut traj = Trajectory {
            n: self.n,
            dim: self.dim,
            times: self.times,
            states: self.states,
            disagreement: self.disagreement,
            verdict: Verdict::Undecided,
        };
        traj.verdict = classify(&traj, thresholds);
        traj
    }
}

fn disagreement(x: &[f64], n: usize, dim: usize) -> f64 {
    let mean: Vec<f64> = (0..dim).map(|c| (0..n).map(|i| x[i * dim + c]).sum::<f64>() / n as f64).collect();
    (0..n).map(|i| (0..dim).map(|c| (x[i * dim + c] - mean[c]).powi(2)).sum::<f64>().sqrt()).fold(0.0, f64::max)
}

fn escaped(x: &[f64], escape: f64) -> bool {
    x.iter().any(|v| !v.is_finite() || v.abs() > escape)
}

fn run(net: &LinearNetwork, x0: &StateVector, config: &SimConfig) -> Result<Trajectory> {
    config.validate()?;
    x0.expect_agents(net.n)?;
    let len = x0.values.len();
    let mut x = x0.values.clone();
    let escape = config.thresholds.escape;

    match config.mode {
        TimeMode::Continuous { dt, horizon } => {
            let steps = (horizon / dt).round().max(1.0) as usize;
            let mut rec = Recorder::new(net.n, net.dim, steps, config.max_samples);
            rec.push(0.0, &x);
            let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
                (vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]);
            for step in 1..=steps {
                net.drift(&x, &mut k1);
                for i in 0..len {
                    tmp[i] = x[i] + 0.5 * dt * k1[i];
                }
                net.drift(&tmp, &mut k2);
                for i in 0..len {
                    tmp[i] = x[i] + 0.5 * dt * k2[i];
                }
                net.drift(&tmp, &mut k3);
                for i in 0..len {
                    tmp[i] = x[i] + dt * k3[i];
                }
                net.drift(&tmp, &mut k4);
                for i in 0..len {
                    tmp[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                let t = step as f64 * dt;
                if escaped(&tmp, escape) {
                    if tmp.iter().all(|v| v.is_finite()) {
                        rec.push(t, &tmp);
                    }
                    return Ok(escape_trajectory(rec, t, &config.thresholds));
                }
                std::mem::swap(&mut x, &mut tmp);
                if step % rec.stride == 0 || step == steps {
                    rec.push(t, &x);
                }
            }
            Ok(rec.finish(&config.thresholds))
        }
        TimeMode::Discrete { epsilon, steps } => {
            let mut rec = Recorder::new(net.n, net.dim, steps, config.max_samples);
            rec.push(0.0, &x);
            let mut d = vec![0.0; len];
            for step in 1..=steps {
                net.drift(&x, &mut d);
                let next: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + epsilon * di).collect();
                let t = step as f64;
                if escaped(&next, escape) {
                    if next.iter().all(|v| v.is_finite()) {
                        rec.push(t, &next);
                    }
                    return Ok(escape_trajectory(rec, t, &config.thresholds));
                }
                x = next;
                if step % rec.stride == 0 || step == steps {
                    rec.push(t, &x);
                }
            }
            Ok(rec.finish(&config.thresholds))
        }
    }
}

fn escape_trajectory(rec: Recorder, t: f64, thresholds: &Thresholds) -> Trajectory {
    let mut traj = rec.finish(thresholds);
    traj.verdict = Verdict::Diverged { escape_time: Some(t) };
    traj
}

fn effective_weights(
    g: &Graph,
    coding: &CodingAssignment,
    theta: &Codeword,
    attack: Option<&AttackSpec>,
) -> Result<Vec<f64>> {
    decode_weights(g, coding, theta, attack)
}

/// Continuous-time consensus on the decoded (attacked) weights.
pub fn simulate_ct(
    g: &Graph,
    coding: &CodingAssignment,
    theta: &Codeword,
    attack: Option<&AttackSpec>,
    x0: &StateVector,
    dt: f64,
    horizon: f64,
) -> Result<Trajectory> {
    let config = SimConfig::continuous(dt, horizon);
    simulate(g, coding, theta, attack, None, x0, &config)
}

/// Discrete-time consensus with common step `ε`.
pub fn simulate_dt(
    g: &Graph,
    coding: &CodingAssignment,
    theta: &Codeword,
    attack: Option<&AttackSpec>,
    x0: &StateVector,
    steps: usize,
    epsilon: f64,
) -> Result<Trajectory> {
    let config = SimConfig::discrete(epsilon, steps);
    simulate(g, coding, theta, attack, None, x0, &config)
}

/// Leader-follower dynamics `ẋ = −L_B x + B u` (or its `ε`-scaled
/// discrete counterpart).
#[allow(clippy::too_many_arguments)]
pub fn simulate_san(
    g: &Graph,
    coding: &CodingAssignment,
    theta: &Codeword,
    attack: Option<&AttackSpec>,
    san: &SanConfig,
    x0: &StateVector,
    config: &SimConfig,
) -> Result<Trajectory> {
    simulate(g, coding, theta, attack, Some(san), x0, config)
}

/// General entry point; `san = None` gives plain consensus.
pub fn simulate(
    g: &Graph,
    coding: &CodingAssignment,
    theta: &Codeword,
    attack: Option<&AttackSpec>,
    san: Option<&SanConfig>,
    x0: &StateVector,
    config: &SimConfig,
) -> Result<Trajectory> {
    let weights = effective_weights(g, coding, theta, attack)?;
    simulate_weights(g, &weights, san, x0, config)
}

/// Simulation on explicit effective weights (which may be negative).
pub fn simulate_weights(
    g: &Graph,
    weights: &[f64],
    san: Option<&SanConfig>,
    x0: &StateVector,
    config: &SimConfig,
) -> Result<Trajectory> {
    if weights.len() != g.m() {
        return Err(Error::DimensionMismatch { expected: g.m(), got: weights.len() });
    }
    if let Some(s) = san {
        if s.gains.len() != g.n() {
            return Err(Error::InvalidSanConfig(format!("B has {} rows, graph has {} agents", s.gains.len(), g.n())));
        }
        if s.input_dim() != x0.dim {
            return Err(Error::InvalidSanConfig(format!(
                "input dimension {} differs from state dimension {}",
                s.input_dim(),
                x0.dim
            )));
        }
    }
    let net = LinearNetwork::new(g, weights, x0.dim, san);
    run(&net, x0, config)
}

/// Converged: disagreement under tolerance over the final 5% of samples.
/// Diverged: a state beyond the escape threshold, or disagreement strictly
/// increasing across the final 20%. Anything else is undecided.
pub fn classify(traj: &Trajectory, thresholds: &Thresholds) -> Verdict {
    let len = traj.states.len();
    if len < 2 {
        return Verdict::Undecided;
    }
    for (t, x) in traj.times.iter().zip(&traj.states) {
        if escaped(x, thresholds.escape) {
            return Verdict::Diverged { escape_time: Some(*t) };
        }
    }
    let tail = (len as f64 * 0.05).ceil() as usize;
    if traj.disagreement[len - tail.max(1)..].iter().all(|&d| d < thresholds.convergence_tol) {
        let x = traj.final_state();
        let limit =
            (0..traj.dim).map(|c| (0..traj.n).map(|i| x[i * traj.dim + c]).sum::<f64>() / traj.n as f64).collect();
        return Verdict::Converged { limit };
    }
    let window = ((len as f64 * 0.2).ceil() as usize).max(2).min(len);
    let tail = &traj.disagreement[len - window..];
    if tail.windows(2).all(|w| w[1] > w[0]) {
        return Verdict::Diverged { escape_time: None };
    }
    Verdict::Undecided
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftComparison {
    /// `−H(x) p(θ)`, agent by agent through the decoders.
    pub sbdc: Vec<f64>,
    /// `−(L ⊗ I_D) x` from the nominal Laplacian matrix.
    pub laplacian: Vec<f64>,
    pub max_abs_diff: f64,
}

/// Evaluates the coded drift `ẋ_i = −Σ_j p_ij(θ_ij)(x_i − x_j)` and the
/// matrix drift `−L x` independently and compares them.
pub fn sbdc_drift_oracle(
    g: &Graph,
    coding: &CodingAssignment,
    theta: &Codeword,
    x: &StateVector,
) -> Result<DriftComparison> {
    x.expect_agents(g.n())?;
    let d = x.dim;
    let n = g.n();
    let adj = g.incident_edges();

    let mut sbdc = vec![0.0; n * d];
    for i in 0..n {
        for &k in &adj[i] {
            let edge = g.edges()[k];
            let (a, b) = edge.rows();
            let j = if a == i { b } else { a };
            let f = coding.decoder_at(k);
            let eta = theta.values()[k];
            let p = f.value(eta).ok_or(Error::DomainViolation {
                edge,
                value: eta,
                lo: f.domain().lo,
                hi: f.domain().hi,
            })?;
            for c in 0..d {
                // h_ij(x) = x_i − x_j
                sbdc[i * d + c] -= p * (x.values[i * d + c] - x.values[j * d + c]);
            }
        }
    }

    let l = laplacian(g);
    let mut lap = vec![0.0; n * d];
    for i in 0..n {
        for j in 0..n {
            for c in 0..d {
                lap[i * d + c] -= l[(i, j)] * x.values[j * d + c];
            }
        }
    }
    let max_abs_diff = sbdc.iter().zip(&lap).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(DriftComparison { sbdc, laplacian: lap, max_abs_diff })
}

/// `‖−(L_B ⊗ I)x + (B ⊗ I)u‖_∞` at a given state; zero at an equilibrium.
pub fn san_residual(g: &Graph, weights: &[f64], san: &SanConfig, x: &StateVector) -> Result<f64> {
    x.expect_agents(g.n())?;
    let net = LinearNetwork::new(g, weights, x.dim, Some(san));
    let mut out = vec![0.0; x.values.len()];
    net.drift(&x.values, &mut out);
    Ok(out.iter().fold(0.0, |acc, v| acc.max(v.abs())))
}
