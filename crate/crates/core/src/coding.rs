//! Objective decoding functions and the codewords that drive edge weights.
//!
//! Every edge `(i, j)` carries one scalar codeword fragment `θ_ij`; agents
//! recover the consensus weight as `p_ij(θ_ij)`. Decoders are expected to
//! be non-constant, concave and Lipschitz ([`verify_assumption1`] checks
//! this numerically).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attack::AttackSpec;
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};

/// Closed interval of admissible codeword values; bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub const REALS: Domain = Domain { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Self {
        Domain { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

impl Default for Domain {
    fn default() -> Self {
        Domain::REALS
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied decoder. Only constructible in code.
#[derive(Clone)]
pub struct CustomDecoder {
    name: String,
    f: ScalarFn,
    lipschitz: f64,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for CustomDecoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDecoder")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum DecoderFamily {
    /// Piecewise linear / quadratic / square-root decoder with gain `K`:
    /// `Kη` below 0, `K(η - 2η²/13)` on `[0, 3)`, `K(4√(η+1)/13 + 1)` from 3.
    Paper {
        gain: f64,
    },
    /// `Kη`.
    Linear {
        gain: f64,
    },
    Custom(CustomDecoder),
}

#[derive(Debug, Clone)]
pub struct DecodingFunction {
    family: DecoderFamily,
    domain: Domain,
}

/// Piecewise decoder with gain `K`: `Kη` for `η < 0`, `K(η − 2η²/13)` on
/// `[0, 3)`, and `K(4√(η+1)/13 + 1)` from `3` on. Continuous, concave,
/// increasing, with Lipschitz constant `K`.
pub fn paper_decoder(gain: f64) -> Result<DecodingFunction> {
    check_gain(gain)?;
    Ok(DecodingFunction { family: DecoderFamily::Paper { gain }, domain: Domain::REALS })
}

pub fn linear_decoder(gain: f64) -> Result<DecodingFunction> {
    check_gain(gain)?;
    Ok(DecodingFunction { family: DecoderFamily::Linear { gain }, domain: Domain::REALS })
}

fn check_gain(gain: f64) -> Result<()> {
    if gain.is_finite() && gain > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveGain(gain))
    }
}

fn paper_value(gain: f64, eta: f64) -> f64 {
    if eta >= 3.0 {
        gain * (4.0 / 13.0 * (eta + 1.0).sqrt() + 1.0)
    } else if eta >= 0.0 {
        gain * (-2.0 / 13.0 * eta * eta + eta)
    } else {
        gain * eta
    }
}

impl DecodingFunction {
    /// Wraps an arbitrary scalar map with a declared Lipschitz constant.
    pub fn custom<F>(name: impl Into<String>, f: F, lipschitz: f64, breakpoints: Vec<f64>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        DecodingFunction {
            family: DecoderFamily::Custom(CustomDecoder { name: name.into(), f: Arc::new(f), lipschitz, breakpoints }),
            domain: Domain::REALS,
        }
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn family(&self) -> &DecoderFamily {
        &self.family
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Declared Lipschitz constant `K_ij`.
    pub fn lipschitz(&self) -> f64 {
        match &self.family {
            DecoderFamily::Paper { gain } | DecoderFamily::Linear { gain } => *gain,
            DecoderFamily::Custom(c) => c.lipschitz,
        }
    }

    /// Points where the closed form switches branch.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.family {
            DecoderFamily::Paper { .. } => vec![0.0, 3.0],
            DecoderFamily::Linear { .. } => Vec::new(),
            DecoderFamily::Custom(c) => c.breakpoints.clone(),
        }
    }

    /// Evaluates without a domain check.
    pub fn raw(&self, eta: f64) -> f64 {
        match &self.family {
            DecoderFamily::Paper { gain } => paper_value(*gain, eta),
            DecoderFamily::Linear { gain } => gain * eta,
            DecoderFamily::Custom(c) => (c.f)(eta),
        }
    }

    /// `None` when `eta` lies outside the domain.
    pub fn value(&self, eta: f64) -> Option<f64> {
        self.domain.contains(eta).then(|| self.raw(eta))
    }

    /// Smallest codeword on the increasing side that decodes to `target`.
    /// Falls back to the decreasing side when the increasing side cannot
    /// reach it. Concavity makes the superlevel set `{f ≥ target}` an
    /// interval, so its left end is found by bisection.
    pub fn preimage(&self, target: f64) -> Option<f64> {
        if !target.is_finite() {
            return None;
        }
        let f = |x: f64| self.raw(x);
        let probes = self.probe_points();
        let above = |x: f64| f(x) >= target;

        let hit = match probes.iter().position(|&p| above(p)) {
            Some(idx) => idx,
            None => {
                // superlevel set may sit strictly between two probes
                let best = (0..probes.len()).max_by(|&a, &b| f(probes[a]).total_cmp(&f(probes[b])))?;
                let lo = probes[best.saturating_sub(1)];
                let hi = probes[(best + 1).min(probes.len() - 1)];
                let peak = golden_max(&f, lo, hi);
                if !above(peak) {
                    return None;
                }
                if !above(lo) {
                    return Some(bisect(&above, lo, peak));
                }
                return None;
            }
        };
        if hit > 0 {
            return Some(bisect(&above, probes[hit - 1], probes[hit]));
        }
        if f(probes[0]) == target {
            return Some(probes[0]);
        }
        // only a decreasing-side preimage can exist
        let below_after = probes.iter().skip(1).position(|&p| !above(p))? + 1;
        let (inside, outside) = (probes[below_after - 1], probes[below_after]);
        Some(bisect(&above, outside, inside))
    }

    fn probe_points(&self) -> Vec<f64> {
        let mut pts = vec![0.0];
        for k in -8..=60 {
            let s = 2f64.powi(k);
            pts.push(s);
            pts.push(-s);
        }
        pts.extend(self.breakpoints());
        for b in [self.domain.lo, self.domain.hi] {
            if b.is_finite() {
                pts.push(b);
            }
        }
        let mut pts: Vec<f64> = pts.into_iter().filter(|&x| self.domain.contains(x)).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Serializable description; `None` for custom decoders.
    pub fn spec(&self) -> Option<DecoderSpec> {
        let domain = (self.domain != Domain::REALS).then_some(self.domain);
        match &self.family {
            DecoderFamily::Paper { gain } => Some(DecoderSpec { family: Family::Paper, gain: *gain, domain }),
            DecoderFamily::Linear { gain } => Some(DecoderSpec { family: Family::Linear, gain: *gain, domain }),
            DecoderFamily::Custom(_) => None,
        }
    }
}

/// Bisection on a monotone predicate: `pred(outside)` is false,
/// `pred(inside)` is true. Returns the last `inside` point, so the result
/// always satisfies the predicate.
fn bisect(pred: &impl Fn(f64) -> bool, mut outside: f64, mut inside: f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (outside + inside);
        if mid == outside || mid == inside {
            break;
        }
        if pred(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..300 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
        if (b - a).abs() <= f64::EPSILON * (a.abs() + b.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Paper,
    Linear,
}

/// JSON form of a built-in decoder: `{"family": "paper", "gain": 6}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoderSpec {
    pub family: Family,
    pub gain: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,
}

impl DecoderSpec {
    pub fn build(&self) -> Result<DecodingFunction> {
        let f = match self.family {
            Family::Paper => paper_decoder(self.gain)?,
            Family::Linear => linear_decoder(self.gain)?,
        };
        Ok(f.with_domain(self.domain.unwrap_or_default()))
    }
}

/// One decoder per graph edge, aligned with the canonical edge order.
#[derive(Debug, Clone)]
pub struct CodingAssignment {
    edges: Vec<Edge>,
    decoders: Vec<DecodingFunction>,
}

impl CodingAssignment {
    pub fn uniform(g: &Graph, f: DecodingFunction) -> Self {
        CodingAssignment { edges: g.edges().to_vec(), decoders: vec![f; g.m()] }
    }

    pub fn from_map(g: &Graph, mut map: BTreeMap<Edge, DecodingFunction>) -> Result<Self> {
        if let Some(&extra) = map.keys().find(|e| g.edge_index(**e).is_none()) {
            return Err(Error::UnknownEdge(extra));
        }
        let decoders =
            g.edges().iter().map(|e| map.remove(e).ok_or(Error::MissingDecoder(*e))).collect::<Result<Vec<_>>>()?;
        Ok(CodingAssignment { edges: g.edges().to_vec(), decoders })
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn decoder_at(&self, k: usize) -> &DecodingFunction {
        &self.decoders[k]
    }

    pub fn decoder(&self, edge: Edge) -> Option<&DecodingFunction> {
        self.edges.binary_search(&edge).ok().map(|k| &self.decoders[k])
    }

    fn check_graph(&self, g: &Graph) -> Result<()> {
        if self.edges.as_slice() == g.edges() {
            return Ok(());
        }
        match g.edges().iter().find(|e| self.edges.binary_search(e).is_err()) {
            Some(&e) => Err(Error::MissingDecoder(e)),
            None => Err(Error::UnknownEdge(*self.edges.iter().find(|e| g.edge_index(**e).is_none()).unwrap())),
        }
    }

    /// `K_Δ` over the given attacked edges.
    pub fn k_delta(&self, attacked: &[Edge]) -> Result<f64> {
        aggregate_lipschitz(self, attacked)
    }

    pub fn spec(&self) -> Option<CodingSpec> {
        let edges = self
            .edges
            .iter()
            .zip(&self.decoders)
            .map(|(e, d)| d.spec().map(|s| (e.to_string(), s)))
            .collect::<Option<BTreeMap<_, _>>>()?;
        Some(CodingSpec { edges })
    }
}

/// `{"edges": {"i-j": {"family": "paper", "gain": K}, ...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodingSpec {
    pub edges: BTreeMap<String, DecoderSpec>,
}

impl CodingSpec {
    pub fn build(&self, g: &Graph) -> std::result::Result<CodingAssignment, String> {
        let mut map = BTreeMap::new();
        for (key, spec) in &self.edges {
            let edge: Edge = key.parse().map_err(|e| format!("{e}"))?;
            let f = spec.build().map_err(|e| format!("edges.{key}: {e}"))?;
            if map.insert(edge, f).is_some() {
                return Err(format!("edges.{key}: duplicate edge"));
            }
        }
        CodingAssignment::from_map(g, map).map_err(|e| e.to_string())
    }
}

/// Per-edge codeword fragments `θ_ij`, aligned with the canonical edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct Codeword {
    edges: Vec<Edge>,
    values: Vec<f64>,
}

impl Codeword {
    pub fn from_values(g: &Graph, values: Vec<f64>) -> Result<Self> {
        if values.len() != g.m() {
            return Err(Error::CodewordMismatch);
        }
        Ok(Codeword { edges: g.edges().to_vec(), values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, edge: Edge) -> Option<f64> {
        self.edges.binary_search(&edge).ok().map(|k| self.values[k])
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.edges.iter().zip(&self.values).map(|(e, &v)| (e.to_string(), v)).collect()
    }
}

/// Network-manager side: picks `θ_ij` with `p_ij(θ_ij) = w_ij` on every edge.
pub fn synthesize_codeword(g: &Graph, coding: &CodingAssignment) -> Result<Codeword> {
    coding.check_graph(g)?;
    let values = g
        .edges()
        .iter()
        .zip(g.weights())
        .enumerate()
        .map(|(k, (&edge, &w))| coding.decoder_at(k).preimage(w).ok_or(Error::WeightOutOfImage { edge, weight: w }))
        .collect::<Result<Vec<_>>>()?;
    Ok(Codeword { edges: g.edges().to_vec(), values })
}

/// Effective weights `p_ij(θ_ij + δ_ij)`; unattacked edges use `δ = 0`.
pub fn decode_weights(
    g: &Graph,
    coding: &CodingAssignment,
    theta: &Codeword,
    attack: Option<&AttackSpec>,
) -> Result<Vec<f64>> {
    coding.check_graph(g)?;
    if theta.edges.as_slice() != g.edges() {
        return Err(Error::CodewordMismatch);
    }
    let mut shifted = theta.values.clone();
    if let Some(a) = attack {
        for (&edge, &d) in a.deviations() {
            shifted[g.require_edge(edge)?] += d;
        }
    }
    g.edges()
        .iter()
        .zip(&shifted)
        .enumerate()
        .map(|(k, (&edge, &eta))| {
            let f = coding.decoder_at(k);
            f.value(eta).ok_or(Error::DomainViolation { edge, value: eta, lo: f.domain.lo, hi: f.domain.hi })
        })
        .collect()
}

/// `K_Δ = max K_uv` over the attacked edges.
pub fn aggregate_lipschitz(coding: &CodingAssignment, attacked: &[Edge]) -> Result<f64> {
    if attacked.is_empty() {
        return Err(Error::EmptyAttackSet);
    }
    attacked.iter().try_fold(f64::NEG_INFINITY, |acc, &e| {
        let f = coding.decoder(e).ok_or(Error::UnknownEdge(e))?;
        Ok(acc.max(f.lipschitz()))
    })
}

/// Outcome of the numerical concavity / Lipschitz / continuity checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumption1Report {
    pub samples: usize,
    pub non_constant: bool,
    pub concavity_violations: usize,
    pub concavity_pass_rate: f64,
    pub max_slope: f64,
    pub declared_lipschitz: f64,
    pub slope_ok: bool,
    pub max_jump: f64,
    pub continuity_ok: bool,
    pub passes: bool,
}

const CHECK_TOL: f64 = 1e-9;

/// Samples `samples` random pairs over the decoder's working window and
/// checks non-constancy, midpoint concavity, finite-difference slopes
/// against the declared constant, and continuity at the breakpoints.
pub fn verify_assumption1(f: &DecodingFunction, samples: usize, seed: u64) -> Assumption1Report {
    let samples = samples.max(100);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bps = f.breakpoints();
    let lo_bp = bps.iter().copied().fold(0.0, f64::min);
    let hi_bp = bps.iter().copied().fold(0.0, f64::max);
    let lo = f.domain.lo.max(lo_bp - 10.0);
    let hi = f.domain.hi.min(hi_bp + 20.0);
    let k = f.lipschitz();

    let mut violations = 0;
    let mut max_slope: f64 = 0.0;
    let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in 0..samples {
        let a = rng.gen_range(lo..=hi);
        // alternate between wide pairs and short local pairs
        let b = if s % 2 == 0 {
            rng.gen_range(lo..=hi)
        } else {
            let h = rng.gen_range(1e-3..1e-2);
            if a + h <= hi {
                a + h
            } else {
                a - h
            }
        };
        let (fa, fb) = (f.raw(a), f.raw(b));
        vmin = vmin.min(fa).min(fb);
        vmax = vmax.max(fa).max(fb);
        if a != b {
            let mid = f.raw(0.5 * (a + b));
            if mid < 0.5 * (fa + fb) - CHECK_TOL {
                violations += 1;
            }
            max_slope = max_slope.max(((fb - fa) / (b - a)).abs());
        }
    }

    let h = 1e-9;
    let mut max_jump: f64 = 0.0;
    for &bp in bps.iter().filter(|&&bp| f.domain.contains(bp)) {
        let at = f.raw(bp);
        for side in [bp - h, bp + h] {
            if f.domain.contains(side) {
                max_jump = max_jump.max((f.raw(side) - at).abs() - k * h);
            }
        }
    }

    let non_constant = vmax - vmin > 1e-12;
    let slope_ok = max_slope <= k + CHECK_TOL;
    let continuity_ok = max_jump < CHECK_TOL;
    Assumption1Report {
        samples,
        non_constant,
        concavity_violations: violations,
        concavity_pass_rate: 1.0 - violations as f64 / samples as f64,
        max_slope,
        declared_lipschitz: k,
        slope_ok,
        max_jump,
        continuity_ok,
        passes: non_constant && violations == 0 && slope_ok && continuity_ok,
    }
}
