//! Robustness certificates for consensus under multi-edge codeword tampering.
//!
//! The central quantity is the multi-edge effective resistance
//! `ℛ = ‖Pᵀ Rᵀ (R W Rᵀ)⁻¹ R P‖`, built from the cut-set matrix `R` and the
//! attacked-edge selector `P`. Everything else (codeword bounds, the
//! resilience gap, discrete-time step limits) is a closed-form function of
//! `ℛ`, its single-edge counterpart `ℛ*`, the decoder Lipschitz aggregate
//! and the maximum weighted degree.
//!
//! Strict inequalities are evaluated with zero margin; the raw slack is
//! returned alongside every verdict.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::attack::{induced_weight_perturbation, AttackSpec, WeightPerturbation};
use crate::coding::{Codeword, CodingAssignment};
use crate::error::{Error, Result};
use crate::graph::{cutset_matrix, edge_selector, laplacian, spanning_tree_partition, weighted_degrees, Edge, Graph};
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResistanceProfile {
    pub attacked: Vec<Edge>,
    /// Spectral norm of the selected cut-set quadratic form.
    pub r_multi: f64,
    /// Largest single-edge effective resistance over the attacked edges.
    pub r_star: f64,
    /// Trace of the selected quadratic form.
    pub r_tot: f64,
    /// Attacked edge attaining `r_star` (first in edge order on ties).
    pub argmax_edge: Edge,
}

/// `Pᵀ Rᵀ (R W Rᵀ)⁻¹ R P`, symmetrized; rows/columns follow the attacked
/// edges in canonical order. `(R W Rᵀ)` is factored by Cholesky.
pub fn selected_resistance_matrix(g: &Graph, attacked: &[Edge]) -> Result<DMatrix<f64>> {
    let selector = edge_selector(g, attacked)?;
    let part = spanning_tree_partition(g);
    let r = cutset_matrix(g, &part)?;
    let w = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(g.weights()));
    let gram = &r * w * r.transpose();
    let chol = gram.cholesky().ok_or(Error::SingularTreeGram)?;
    let rp = r * &selector.matrix;
    let solved = chol.solve(&rp);
    Ok(linalg::symmetrize(&(rp.transpose() * solved)))
}

/// Resistance profile through the general cut-set formula, never taking
/// the tree shortcut.
pub fn general_resistance_profile(g: &Graph, attacked: &[Edge]) -> Result<ResistanceProfile> {
    let q = selected_resistance_matrix(g, attacked)?;
    let support = edge_selector(g, attacked)?.support;
    let r_multi = linalg::largest_eigenvalue(&q);
    let diag: Vec<f64> = (0..q.nrows()).map(|k| q[(k, k)]).collect();
    Ok(profile_from_parts(g, support, r_multi, &diag))
}

/// On a tree `R = I`, so the quadratic form is `diag(1/w_k)` over the
/// attacked edges and `ℛ = max 1/w_k`. `None` if `g` has cycles.
pub fn tree_resistance(g: &Graph, attacked: &[Edge]) -> Result<Option<f64>> {
    let support = edge_selector(g, attacked)?.support;
    if !g.is_tree() {
        return Ok(None);
    }
    Ok(Some(support.iter().map(|&k| 1.0 / g.weight(k)).fold(f64::NEG_INFINITY, f64::max)))
}

/// Multi-edge, single-edge and total effective resistance of the attacked
/// set. Trees use the closed form.
pub fn effective_resistance_multi(g: &Graph, attacked: &[Edge]) -> Result<ResistanceProfile> {
    if g.is_tree() {
        let support = edge_selector(g, attacked)?.support;
        let diag: Vec<f64> = support.iter().map(|&k| 1.0 / g.weight(k)).collect();
        let r_multi = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Ok(profile_from_parts(g, support, r_multi, &diag));
    }
    general_resistance_profile(g, attacked)
}

fn profile_from_parts(g: &Graph, support: Vec<usize>, r_multi: f64, diag: &[f64]) -> ResistanceProfile {
    let mut best = 0;
    for (k, &d) in diag.iter().enumerate() {
        if d > diag[best] {
            best = k;
        }
    }
    // a single attacked edge makes the quadratic form a scalar
    let r_multi = if diag.len() == 1 { diag[0] } else { r_multi };
    ResistanceProfile {
        attacked: support.iter().map(|&k| g.edges()[k]).collect(),
        r_multi,
        r_star: diag[best],
        r_tot: diag.iter().sum(),
        argmax_edge: g.edges()[support[best]],
    }
}

/// `g = 1 − ℛ*/ℛ ∈ [0, 1)`.
pub fn resilience_gap(profile: &ResistanceProfile) -> f64 {
    (1.0 - profile.r_star / profile.r_multi).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtBound {
    /// `ρ = (K_Δ ℛ)⁻¹`.
    pub rho: f64,
    /// `ρ* = (K_Δ ℛ*)⁻¹`.
    pub rho_star: f64,
    pub gap: f64,
    /// `|ρ − (1 − g) ρ*|`.
    pub identity_residual: f64,
}

/// Largest codeword deviation certified for continuous-time agreement.
pub fn codeword_bound_ct(profile: &ResistanceProfile, k_delta: f64) -> Result<CtBound> {
    if !(k_delta.is_finite() && k_delta > 0.0) {
        return Err(Error::NonPositiveLipschitz(k_delta));
    }
    let rho = 1.0 / (k_delta * profile.r_multi);
    let rho_star = 1.0 / (k_delta * profile.r_star);
    let gap = resilience_gap(profile);
    Ok(CtBound { rho, rho_star, gap, identity_residual: (rho - (1.0 - gap) * rho_star).abs() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonStar {
    /// `ε* = (Ψ + ℛ⁻¹)⁻¹`.
    pub epsilon_star: f64,
    /// Maximum weighted degree `Ψ`.
    pub psi: f64,
    /// Largest nominal Laplacian eigenvalue.
    pub lambda_max: f64,
    /// `2 / λ_n`, the nominal discrete-time stability limit.
    pub stability_limit: f64,
    pub below_stability_limit: bool,
}

pub fn epsilon_star(g: &Graph, profile: &ResistanceProfile) -> EpsilonStar {
    let psi = weighted_degrees(g).max;
    let epsilon_star = 1.0 / (psi + 1.0 / profile.r_multi);
    let lambda_max = linalg::largest_eigenvalue(&laplacian(g));
    let stability_limit = 2.0 / lambda_max;
    EpsilonStar {
        epsilon_star,
        psi,
        lambda_max,
        stability_limit,
        below_stability_limit: epsilon_star < stability_limit,
    }
}

/// Discrete-time codeword bound `K_Δ⁻¹ min{ℛ⁻¹, ε⁻¹ − Ψ}`, defined for
/// `0 < ε < Ψ⁻¹`.
pub fn codeword_bound_dt(g: &Graph, profile: &ResistanceProfile, k_delta: f64, epsilon: f64) -> Result<f64> {
    if !(k_delta.is_finite() && k_delta > 0.0) {
        return Err(Error::NonPositiveLipschitz(k_delta));
    }
    let psi = weighted_degrees(g).max;
    let limit = 1.0 / psi;
    if !(epsilon > 0.0 && epsilon < limit) {
        return Err(Error::EpsilonTooLarge { epsilon, limit });
    }
    Ok((1.0 / profile.r_multi).min(1.0 / epsilon - psi) / k_delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiTerm {
    pub edge: Edge,
    pub node: usize,
    /// `w̄_node + K_edge |δ_edge|`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiCheck {
    pub epsilon: f64,
    /// `φ = max{Ψ, max ψ_i}` with one attacked edge per `ψ_i` term.
    pub phi: f64,
    /// Coarser `Ψ + K_Δ ‖δ^θ‖_∞`, always `≥ phi`.
    pub phi_upper: f64,
    pub psi_terms: Vec<PsiTerm>,
    /// `ε⁻¹ − φ`.
    pub slack: f64,
    pub phi_ok: bool,
    /// The continuous-time codeword bound, required alongside the φ test.
    pub ct_bound_ok: bool,
    pub verdict: bool,
}

/// Discrete-time check: `φ(δ^θ) < ε⁻¹` together with `‖δ^θ‖_∞ < ρ`.
pub fn phi_check_dt(g: &Graph, coding: &CodingAssignment, attack: &AttackSpec, epsilon: f64) -> Result<PhiCheck> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let degrees = weighted_degrees(g);
    let support = attack.support();
    let k_delta = coding.k_delta(&support)?;
    let mut psi_terms = Vec::with_capacity(2 * support.len());
    for &edge in &support {
        let k_uv = coding.decoder(edge).ok_or(Error::UnknownEdge(edge))?.lipschitz();
        let bump = k_uv * attack.deviation(edge).abs();
        for node in [edge.i(), edge.j()] {
            psi_terms.push(PsiTerm { edge, node, value: degrees.per_node[node - 1] + bump });
        }
    }
    let phi = psi_terms.iter().map(|t| t.value).fold(degrees.max, f64::max);
    let phi_upper = degrees.max + k_delta * attack.norm_inf();
    let profile = effective_resistance_multi(g, &support)?;
    let rho = codeword_bound_ct(&profile, k_delta)?.rho;
    let phi_ok = phi < 1.0 / epsilon;
    let ct_bound_ok = attack.norm_inf() < rho;
    Ok(PhiCheck {
        epsilon,
        phi,
        phi_upper,
        psi_terms,
        slack: 1.0 / epsilon - phi,
        phi_ok,
        ct_bound_ok,
        verdict: phi_ok && ct_bound_ok,
    })
}

/// `K′ = (1 − g) K`.
pub fn compensated_lipschitz(k_delta: f64, gap: f64) -> Result<f64> {
    if !(k_delta.is_finite() && k_delta > 0.0) {
        return Err(Error::NonPositiveLipschitz(k_delta));
    }
    if !(0.0..1.0).contains(&gap) {
        return Err(Error::InvalidGap(gap));
    }
    Ok((1.0 - gap) * k_delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub holds: bool,
    /// Quantity being bounded.
    pub value: f64,
    pub bound: f64,
    /// `bound − value`.
    pub slack: f64,
}

impl Certificate {
    fn strict(value: f64, bound: f64) -> Self {
        Certificate { holds: value < bound, value, bound, slack: bound - value }
    }
}

/// Edge-weight robustness: `max |δ^w| < ℛ⁻¹`.
pub fn certify_weight_perturbation(g: &Graph, attacked: &[Edge], wp: &WeightPerturbation) -> Result<Certificate> {
    let mut a = attacked.to_vec();
    a.sort();
    if a != wp.edges {
        return Err(Error::SupportMismatch);
    }
    let profile = effective_resistance_multi(g, attacked)?;
    Ok(Certificate::strict(wp.norm, 1.0 / profile.r_multi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteBounds {
    pub epsilon: f64,
    /// `None` when `ε ≥ Ψ⁻¹`.
    pub rho_dt: Option<f64>,
    pub at_or_below_epsilon_star: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackVerdicts {
    pub deviation_norm: f64,
    /// `‖δ^θ‖_∞ < ρ`.
    pub codeword_bound: Certificate,
    /// `max |δ^w| < ℛ⁻¹` on the decoded perturbation.
    pub weight_perturbation: WeightPerturbation,
    pub weight_bound: Certificate,
    /// Both discrete-time certificates, when a step size is given.
    pub phi: Option<PhiCheck>,
    pub discrete_bound: Option<Certificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub resistance: ResistanceProfile,
    pub gap: f64,
    pub k_delta: f64,
    pub rho_ct: f64,
    pub rho_star: f64,
    pub compensated_k_delta: f64,
    pub rho_star_compensated: f64,
    pub epsilon: EpsilonStar,
    pub discrete: Option<DiscreteBounds>,
    pub attack: Option<AttackVerdicts>,
    pub all_pass: bool,
}

/// Every certificate for one scenario. `attack` (if any) must be supported
/// on `attacked`; `epsilon` enables the discrete-time checks.
pub fn analyze(
    g: &Graph,
    coding: &CodingAssignment,
    theta: &Codeword,
    attacked: &[Edge],
    attack: Option<&AttackSpec>,
    epsilon: Option<f64>,
) -> Result<RobustnessReport> {
    let resistance = effective_resistance_multi(g, attacked)?;
    let k_delta = coding.k_delta(attacked)?;
    let ct = codeword_bound_ct(&resistance, k_delta)?;
    let compensated = compensated_lipschitz(k_delta, ct.gap)?;
    let rho_star_compensated = codeword_bound_ct(&resistance, compensated)?.rho_star;
    let eps_star = epsilon_star(g, &resistance);

    let discrete = epsilon.map(|eps| DiscreteBounds {
        epsilon: eps,
        rho_dt: codeword_bound_dt(g, &resistance, k_delta, eps).ok(),
        at_or_below_epsilon_star: eps <= eps_star.epsilon_star,
    });

    let verdicts = match attack {
        None => None,
        Some(a) => {
            let mut want = attacked.to_vec();
            want.sort();
            if a.support() != want {
                return Err(Error::SupportMismatch);
            }
            let norm = a.norm_inf();
            let wp = induced_weight_perturbation(g, coding, theta, a)?;
            let weight_bound = certify_weight_perturbation(g, attacked, &wp)?;
            let (phi, discrete_bound) = match &discrete {
                Some(d) => (
                    Some(phi_check_dt(g, coding, a, d.epsilon)?),
                    Some(match d.rho_dt {
                        Some(rho_dt) => Certificate::strict(norm, rho_dt),
                        None => Certificate { holds: false, value: norm, bound: f64::NAN, slack: f64::NAN },
                    }),
                ),
                None => (None, None),
            };
            Some(AttackVerdicts {
                deviation_norm: norm,
                codeword_bound: Certificate::strict(norm, ct.rho),
                weight_perturbation: wp,
                weight_bound,
                phi,
                discrete_bound,
            })
        }
    };

    let all_pass = verdicts.as_ref().is_none_or(|v| {
        v.codeword_bound.holds
            && v.weight_bound.holds
            && v.phi.as_ref().is_none_or(|p| p.verdict)
            && v.discrete_bound.is_none_or(|c| c.holds)
    });

    Ok(RobustnessReport {
        resistance,
        gap: ct.gap,
        k_delta,
        rho_ct: ct.rho,
        rho_star: ct.rho_star,
        compensated_k_delta: compensated,
        rho_star_compensated,
        epsilon: eps_star,
        discrete,
        attack: verdicts,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::{benchmark_support_single, benchmark_support_triple, paper_attack};
    use crate::coding::{paper_decoder, synthesize_codeword};
    use crate::graph::build_graph;

    fn benchmark() -> Graph {
        build_graph(6, &[(1, 2, 3.0), (3, 5, 1.0), (4, 6, 1.0), (2, 4, 2.0), (2, 3, 2.0)]).unwrap()
    }

    fn triangle() -> Graph {
        build_graph(3, &[(1, 2, 1.0), (2, 3, 1.0), (1, 3, 1.0)]).unwrap()
    }

    #[test]
    fn single_unit_edge() {
        let g = build_graph(2, &[(1, 2, 1.0)]).unwrap();
        let p = effective_resistance_multi(&g, &[Edge::new(1, 2)]).unwrap();
        assert_eq!((p.r_multi, p.r_star, p.r_tot), (1.0, 1.0, 1.0));
        let p = general_resistance_profile(&g, &[Edge::new(1, 2)]).unwrap();
        assert!((p.r_multi - 1.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_resistances() {
        // unit triangle: Eᵀ L⁺ E has 2/3 on the diagonal and ±1/3 off it
        let g = triangle();
        let p = effective_resistance_multi(&g, &[Edge::new(1, 3)]).unwrap();
        assert!((p.r_multi - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(resilience_gap(&p), 0.0);

        let p = effective_resistance_multi(&g, &[Edge::new(1, 2), Edge::new(1, 3)]).unwrap();
        assert!((p.r_star - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.r_multi - 1.0).abs() < 1e-12);
        assert!((p.r_tot - 4.0 / 3.0).abs() < 1e-12);
        assert!((resilience_gap(&p) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn benchmark_quantities() {
        let g = benchmark();
        let p1 = effective_resistance_multi(&g, &benchmark_support_single()).unwrap();
        let p2 = effective_resistance_multi(&g, &benchmark_support_triple()).unwrap();
        assert_eq!(p1.r_multi, 1.0 / 3.0);
        assert_eq!(p2.r_multi, 1.0);
        assert_eq!(resilience_gap(&p2), 0.0);

        let b1 = codeword_bound_ct(&p1, 6.0).unwrap();
        let b2 = codeword_bound_ct(&p2, 2.0).unwrap();
        assert!((b1.rho - 0.5).abs() < 1e-12);
        assert!((b2.rho - 0.5).abs() < 1e-12);
        assert!((codeword_bound_ct(&p2, 4.0).unwrap().rho - 0.25).abs() < 1e-12);
        assert_eq!(codeword_bound_ct(&p2, 0.0), Err(Error::NonPositiveLipschitz(0.0)));

        let e1 = epsilon_star(&g, &p1);
        assert!((e1.epsilon_star - 0.1).abs() < 1e-12);
        assert_eq!(e1.psi, 7.0);
        assert!(e1.below_stability_limit);
        let e2 = epsilon_star(&g, &p2);
        assert!((e2.epsilon_star - 0.125).abs() < 1e-12);
        assert!(0.1 <= e2.epsilon_star);
    }

    #[test]
    fn discrete_bound() {
        let g = benchmark();
        let p2 = effective_resistance_multi(&g, &benchmark_support_triple()).unwrap();
        assert!((codeword_bound_dt(&g, &p2, 2.0, 0.1).unwrap() - 0.5).abs() < 1e-12);
        let p1 = effective_resistance_multi(&g, &benchmark_support_single()).unwrap();
        assert!(matches!(codeword_bound_dt(&g, &p1, 6.0, 0.25), Err(Error::EpsilonTooLarge { .. })));
        let ct = codeword_bound_ct(&p1, 6.0).unwrap().rho;
        assert!((codeword_bound_dt(&g, &p1, 6.0, 1e-9).unwrap() - ct).abs() < 1e-12);
        // above ε* the step-size term binds
        let eps = 0.12;
        let rho = codeword_bound_dt(&g, &p1, 6.0, eps).unwrap();
        assert!((rho - (1.0 / eps - 7.0) / 6.0).abs() < 1e-12);
        assert!(rho < ct);
    }

    #[test]
    fn phi_checks() {
        let g = benchmark();
        let c2 = CodingAssignment::uniform(&g, paper_decoder(2.0).unwrap());
        let attack = paper_attack(2, 0.5).unwrap();
        let phi = phi_check_dt(&g, &c2, &attack, 0.1).unwrap();
        // node 2 touches attacked edge (1,2): 7 + 2 * 0.25
        assert!((phi.phi - 7.5).abs() < 1e-12);
        assert!(phi.phi <= phi.phi_upper + 1e-12);
        assert!(phi.verdict);

        let zero = paper_attack(2, 0.0).unwrap();
        let phi = phi_check_dt(&g, &c2, &zero, 0.1).unwrap();
        assert_eq!(phi.phi, 7.0);
        assert!(phi.verdict);
        assert!(!phi_check_dt(&g, &c2, &zero, 0.2).unwrap().verdict);

        let c6 = CodingAssignment::uniform(&g, paper_decoder(6.0).unwrap());
        let phi = phi_check_dt(&g, &c6, &attack, 0.1).unwrap();
        assert!(!phi.ct_bound_ok && !phi.verdict);
    }

    #[test]
    fn compensation() {
        assert_eq!(compensated_lipschitz(6.0, 0.0).unwrap(), 6.0);
        assert_eq!(compensated_lipschitz(6.0, 0.5).unwrap(), 3.0);
        assert!(compensated_lipschitz(6.0, 1.0).is_err());

        let g = triangle();
        let p = effective_resistance_multi(&g, &[Edge::new(1, 2), Edge::new(1, 3)]).unwrap();
        let gap = resilience_gap(&p);
        let k = 2.0;
        let kp = compensated_lipschitz(k, gap).unwrap();
        let before = codeword_bound_ct(&p, k).unwrap().rho_star;
        let after = codeword_bound_ct(&p, kp).unwrap().rho_star;
        assert!(after > before);
        assert!((after - before / (1.0 - gap)).abs() < 1e-12);
        // compensated multi-edge bound recovers the uncompensated single-edge bound
        assert!((codeword_bound_ct(&p, kp).unwrap().rho - before).abs() < 1e-12);
    }

    #[test]
    fn weight_certificates() {
        let g = benchmark();
        let support = benchmark_support_triple();
        let zero = WeightPerturbation::new(support.clone(), vec![0.0; 3]);
        assert!(certify_weight_perturbation(&g, &support, &zero).unwrap().holds);

        // zeroing a tree edge sits exactly on the strict bound
        let e = [Edge::new(2, 4)];
        let cut = WeightPerturbation::new(e.to_vec(), vec![-2.0]);
        let c = certify_weight_perturbation(&g, &e, &cut).unwrap();
        assert!(!c.holds && c.slack == 0.0);

        let c2 = CodingAssignment::uniform(&g, paper_decoder(2.0).unwrap());
        let theta = synthesize_codeword(&g, &c2).unwrap();
        let wp = induced_weight_perturbation(&g, &c2, &theta, &paper_attack(2, 0.5).unwrap()).unwrap();
        assert!(certify_weight_perturbation(&g, &support, &wp).unwrap().holds);

        let other = WeightPerturbation::new(vec![Edge::new(1, 2)], vec![0.0]);
        assert_eq!(certify_weight_perturbation(&g, &support, &other), Err(Error::SupportMismatch));
    }

    #[test]
    fn full_report() {
        let g = benchmark();
        let support = benchmark_support_triple();
        let attack = paper_attack(2, 0.5).unwrap();
        for (k, pass) in [(2.0, true), (6.0, false)] {
            let coding = CodingAssignment::uniform(&g, paper_decoder(k).unwrap());
            let theta = synthesize_codeword(&g, &coding).unwrap();
            let r = analyze(&g, &coding, &theta, &support, Some(&attack), Some(0.1)).unwrap();
            assert_eq!(r.all_pass, pass, "K = {k}");
            assert_eq!(r.gap, 0.0);
            assert!((r.epsilon.epsilon_star - 0.125).abs() < 1e-12);
            assert!(r.discrete.as_ref().unwrap().rho_dt.unwrap() <= r.rho_ct + 1e-15);
        }
    }
}
