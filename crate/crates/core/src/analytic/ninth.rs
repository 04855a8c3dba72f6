//! A ninth and tenth unitary added to a block set.
//!
//! Λ-orthogonality of `W = [[a, b], [c, d]]` to the eight block-set members
//! forces `a = -x δ ã` and `c = -x γ ã'` with `δ = Tr d`, `γ = Tr(b B†)`,
//! where `ã = A m A†`, `ã' = B₁ m_v B₂` and `m` solves `Tr(m u_j†) = 1`.
//! Both `√(1-3x) ã` and `√(1-3x) ã'` are unitary (`P` and `Q` below).
//! Unitarity of `W` then gives `|δ|² + |γ|² = (1-3x)/x²`,
//! `b = s_γ 𝒱 B`, `d = s_δ 𝒱'` with `s = x|·|/√(1-3x)`, and
//! `𝒱' = -e^{i(arg γ - arg δ)} Q P† 𝒱 B`. The trace definitions of `δ` and
//! `γ` require `Tr 𝒱 = e^{i arg γ} τ` and `Tr 𝒱' = e^{i arg δ} τ` with
//! `τ = √(1-3x)/x`, which is possible only when `τ ≤ 2`, i.e. `x ≥ 1/4`.

use nalgebra::Vector3;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::phasemap::edge_e_spectrum_at_x;
use crate::protocol::verify_message_set;
use crate::qmat::{unitarity_defect, BlockView, ComplexMatrix, MessageSet, C64, I};

use super::blocks::BlockSet;
use super::ufamily::su2_like;

/// Tolerance for the trace and unitarity relations of supplied parameters.
const RELATION_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub x: f64,
    pub feasible: bool,
    /// `4 - (1-3x)/x²`.
    pub slack: f64,
}

/// Whether a ninth unitary can exist for block sets at ratio `x`.
pub fn ninth_feasibility_certificate(x: f64) -> Result<Certificate> {
    if !(x > 0.0 && 1.0 - 3.0 * x > 0.0) {
        return Err(Error::Domain(format!("certificate needs 0 < x < 1/3, got {x}")));
    }
    let slack = 4.0 - (1.0 - 3.0 * x) / (x * x);
    Ok(Certificate { x, feasible: slack >= 0.0, slack })
}

/// Closed form of `m` (so `ã = A m A†`) for the family with `u₀ = I`:
/// `½ [[1 + i s, e^{iθ} t (1 + i q)], [-e^{-iθ} t (1 - i q), 1 - i s]]`
/// with `s = √((1+x)/(1-x))`, `t = √((1+x)/((1-x)(1-2x)))`,
/// `q = √((1-x)/(1-3x))`.
pub fn closed_form_dual(x: f64, theta: f64) -> Result<ComplexMatrix> {
    if !(x >= 0.0 && 1.0 - 3.0 * x > 0.0) {
        return Err(Error::FamilyDoesNotExist(x));
    }
    let s = ((1.0 + x) / (1.0 - x)).sqrt();
    let t = ((1.0 + x) / ((1.0 - x) * (1.0 - 2.0 * x))).sqrt();
    let q = ((1.0 - x) / (1.0 - 3.0 * x)).sqrt();
    let e = C64::from_polar(1.0, theta);
    ComplexMatrix::new(
        2,
        2,
        vec![
            C64::new(0.5, 0.5 * s),
            e * C64::new(0.5 * t, 0.5 * t * q),
            -e.conj() * C64::new(0.5 * t, -0.5 * t * q),
            C64::new(0.5, -0.5 * s),
        ],
    )
}

/// Phase `θ` of the closed form for the family built with `arg β₂ = φ`.
pub fn closed_form_theta(beta2_phase: f64) -> f64 {
    std::f64::consts::PI - beta2_phase
}

#[derive(Clone, Debug, PartialEq)]
pub struct NinthParams {
    pub delta: C64,
    pub gamma: C64,
    pub cal_v: ComplexMatrix,
    pub cal_v_prime: ComplexMatrix,
}

/// A unitary `[[a, b], [c, d]]` orthogonal to a block set.
#[derive(Clone, Debug, PartialEq)]
pub struct WCandidate {
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub c: ComplexMatrix,
    pub d: ComplexMatrix,
    pub delta: C64,
    pub gamma: C64,
    pub cal_v: ComplexMatrix,
    pub cal_v_prime: ComplexMatrix,
    /// Phases of the closed forms of `ã` and `ã'`, when dressings are trivial.
    pub theta: f64,
    pub phi: f64,
}

impl WCandidate {
    pub fn matrix(&self) -> ComplexMatrix {
        BlockView::from_blocks(self.a.clone(), self.b.clone(), self.c.clone(), self.d.clone())
            .expect("2x2 blocks")
            .assemble()
    }
}

#[derive(Clone, Debug)]
pub struct NinthAndTenth {
    pub w: WCandidate,
    pub w_prime: WCandidate,
    pub dual: DualMethod,
    /// The eight block-set members followed by `W` and `W'`.
    pub set: MessageSet,
    pub max_violation: f64,
}

/// How `W'` was obtained from `W`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DualMethod {
    /// `b' = i d† B`, `d' = -i b† B`.
    Recipe,
    /// `δ' = -iγ*`, `γ' = iδ*` with `𝒱` rephased and `𝒱'` re-solved; used
    /// when the recipe does not give a unitary (`B` or `Q P†` not commuting
    /// with `𝒱`).
    TraceSolution,
}

struct Frame {
    x: f64,
    tau: f64,
    p: ComplexMatrix,
    q: ComplexMatrix,
    b: ComplexMatrix,
    a_tilde: ComplexMatrix,
    a_tilde_prime: ComplexMatrix,
}

fn frame(bs: &BlockSet) -> Result<Frame> {
    let x = bs.x;
    let cert = ninth_feasibility_certificate(x)?;
    if !cert.feasible {
        return Err(Error::CertificateInfeasible { x, slack: cert.slack });
    }
    let k = C64::new((1.0 - 3.0 * x).sqrt(), 0.0);
    let a_tilde = bs.a_tilde();
    let a_tilde_prime = bs.a_tilde_prime();
    Ok(Frame {
        x,
        tau: (1.0 - 3.0 * x).sqrt() / x,
        p: a_tilde.scale(k),
        q: a_tilde_prime.scale(k),
        b: bs.dressings.b.clone(),
        a_tilde,
        a_tilde_prime,
    })
}

/// `(ζ, s0, s)` with `S = e^{iζ} (s0 I + i s·σ)`.
fn su2_parts(s: &ComplexMatrix) -> (f64, f64, Vector3<f64>) {
    let det = s.get(0, 0) * s.get(1, 1) - s.get(0, 1) * s.get(1, 0);
    let zeta = det.arg() / 2.0;
    let r = s.scale(C64::from_polar(1.0, -zeta));
    (zeta, r.get(0, 0).re, Vector3::new(r.get(0, 1).im, r.get(0, 1).re, r.get(0, 0).im))
}

fn unit_orthogonal(v: &Vector3<f64>) -> Vector3<f64> {
    let trial = if v.x.abs() < 0.9 * v.norm() { Vector3::x() } else { Vector3::y() };
    let w = trial - v * (v.dot(&trial) / v.norm_squared());
    w.normalize()
}

/// Solve the trace relations for `𝒱`, `𝒱'` and the phases of `δ`, `γ`, given
/// `|δ|²` and `arg γ`.
pub fn solve_ninth_params(bs: &BlockSet, delta_sq: f64, gamma_phase: f64) -> Result<NinthParams> {
    let f = frame(bs)?;
    let total = (1.0 - 3.0 * f.x) / (f.x * f.x);
    if !(delta_sq > 0.0 && delta_sq < total) {
        return Err(Error::TraceRelation(format!(
            "|δ|² + |γ|² = (1-3x)/x² = {total} needs 0 < |δ|² < {total}, got {delta_sq}"
        )));
    }
    let gamma = C64::from_polar((total - delta_sq).sqrt(), gamma_phase);
    let s = &(&f.b * &f.q) * &f.p.adjoint();
    let (zeta, s0, svec) = su2_parts(&s);
    let half = f.tau / 2.0;
    let tau2 = f.tau * f.tau;
    // Tr(S 𝒱) = 2 e^{i(ζ + arg γ)} (s0 τ/2 - s·w) must have modulus τ.
    let sign = if tau2 / 2.0 <= 1.0 + s0 + 1e-12 {
        1.0
    } else if tau2 / 2.0 <= 1.0 - s0 + 1e-12 {
        -1.0
    } else {
        return Err(Error::TraceRelation(format!(
            "|Tr 𝒱'| = τ = {} is unreachable for these dressings (Tr(S𝒱) bound)",
            f.tau
        )));
    };
    let h = half * (s0 - sign);
    let w_len2 = (1.0 - half * half).max(0.0);
    let s2 = svec.norm_squared();
    let w = if s2 < 1e-24 {
        Vector3::z() * w_len2.sqrt()
    } else {
        let along = svec * (h / s2);
        let perp2 = (w_len2 - h * h / s2).max(0.0);
        along + unit_orthogonal(&svec) * perp2.sqrt()
    };
    let cal_v = su2_like(half, &w).scale(C64::from_polar(1.0, gamma_phase));
    let two_delta_phase = zeta + 2.0 * gamma_phase + if sign > 0.0 { std::f64::consts::PI } else { 0.0 };
    let delta = C64::from_polar(delta_sq.sqrt(), two_delta_phase / 2.0);
    let cal_v_prime = vprime(&f, delta, gamma, &cal_v);
    Ok(NinthParams { delta, gamma, cal_v, cal_v_prime })
}

fn vprime(f: &Frame, delta: C64, gamma: C64, cal_v: &ComplexMatrix) -> ComplexMatrix {
    let phase = C64::from_polar(1.0, gamma.arg() - delta.arg());
    (&(&(&f.q * &f.p.adjoint()) * cal_v) * &f.b).scale(-phase)
}

fn check_params(f: &Frame, p: &NinthParams) -> Result<()> {
    let x = f.x;
    let total = (1.0 - 3.0 * x) / (x * x);
    let dg = p.delta.norm_sqr() + p.gamma.norm_sqr();
    if (dg - total).abs() > RELATION_TOL * total.max(1.0) {
        return Err(Error::TraceRelation(format!("|δ|² + |γ|² = (1-3x)/x²: got {dg}, need {total}")));
    }
    if p.delta.norm() == 0.0 || p.gamma.norm() == 0.0 {
        return Err(Error::TraceRelation("δ and γ must both be nonzero".into()));
    }
    for (name, m) in [("𝒱", &p.cal_v), ("𝒱'", &p.cal_v_prime)] {
        if m.shape() != (2, 2) {
            return Err(Error::InvalidArgument(format!("{name} must be 2x2")));
        }
        let defect = unitarity_defect(m);
        if defect > RELATION_TOL {
            return Err(Error::NonUnitaryDressing { name: if name == "𝒱" { "V" } else { "V'" }, defect });
        }
    }
    let s_delta2 = x * x * p.delta.norm_sqr() / (1.0 - 3.0 * x);
    let s_gamma2 = x * x * p.gamma.norm_sqr() / (1.0 - 3.0 * x);
    let tv = p.cal_v.trace();
    let tvp = p.cal_v_prime.trace();
    let r1 = (p.gamma - tv * s_gamma2.sqrt()).norm();
    if r1 > RELATION_TOL {
        return Err(Error::TraceRelation(format!(
            "|γ|² = (1 - x²|δ|²/(1-3x)) |Tr 𝒱|² with matching phase (residual {r1:.3e})"
        )));
    }
    let r2 = (p.delta - tvp * s_delta2.sqrt()).norm();
    if r2 > RELATION_TOL {
        return Err(Error::TraceRelation(format!(
            "|δ|² = (1 - x²|γ|²/(1-3x)) |Tr 𝒱'|² with matching phase (residual {r2:.3e})"
        )));
    }
    let r3 = (&p.cal_v_prime - &vprime(f, p.delta, p.gamma, &p.cal_v)).frobenius_norm();
    if r3 > RELATION_TOL {
        return Err(Error::TraceRelation(format!(
            "off-diagonal block of W†W: 𝒱' = -e^(i(arg γ - arg δ)) Q P† 𝒱 B (residual {r3:.3e})"
        )));
    }
    Ok(())
}

fn assemble(f: &Frame, delta: C64, gamma: C64, b: ComplexMatrix, d: ComplexMatrix, cal_v: ComplexMatrix, cal_v_prime: ComplexMatrix, theta: f64, phi: f64) -> WCandidate {
    let x = C64::new(f.x, 0.0);
    WCandidate {
        a: f.a_tilde.scale(-x * delta),
        b,
        c: f.a_tilde_prime.scale(-x * gamma),
        d,
        delta,
        gamma,
        cal_v,
        cal_v_prime,
        theta,
        phi,
    }
}

fn dual_by_recipe(f: &Frame, w: &WCandidate, s_delta: f64, s_gamma: f64, theta: f64, phi: f64) -> Option<WCandidate> {
    let b_prime = (&w.d.adjoint() * &f.b).scale(I);
    let d_prime = (&w.b.adjoint() * &f.b).scale(-I);
    let delta_prime = d_prime.trace();
    let gamma_prime = (&b_prime * &f.b.adjoint()).trace();
    let cal_v = (&b_prime * &f.b.adjoint()).scale(C64::new(1.0 / s_delta, 0.0));
    let cal_v_prime = d_prime.scale(C64::new(1.0 / s_gamma, 0.0));
    let wp = assemble(f, delta_prime, gamma_prime, b_prime, d_prime, cal_v, cal_v_prime, theta, phi);
    (unitarity_defect(&wp.matrix()) <= RELATION_TOL).then_some(wp)
}

/// With `δ' = -iγ*` and `γ' = iδ*` the `a`, `c` blocks of `W` and `W'` are
/// orthogonal, and the `b`, `d` contributions cancel for any `𝒱₂` meeting the
/// trace relations; `e^{i(arg γ' - arg γ)} 𝒱` is one.
fn dual_by_trace_solution(f: &Frame, w: &WCandidate, theta: f64, phi: f64) -> WCandidate {
    let delta = -I * w.gamma.conj();
    let gamma = I * w.delta.conj();
    let cal_v = w.cal_v.scale(C64::from_polar(1.0, gamma.arg() - w.gamma.arg()));
    let cal_v_prime = vprime(f, delta, gamma, &cal_v);
    let x = f.x;
    let s_gamma = (x * x * gamma.norm_sqr() / (1.0 - 3.0 * x)).sqrt();
    let s_delta = (x * x * delta.norm_sqr() / (1.0 - 3.0 * x)).sqrt();
    let b = (&cal_v * &f.b).scale(C64::new(s_gamma, 0.0));
    let d = cal_v_prime.scale(C64::new(s_delta, 0.0));
    assemble(f, delta, gamma, b, d, cal_v, cal_v_prime, theta, phi)
}

/// Build `W` from `params` and its dual `W'`, then verify the resulting
/// ten-unitary set.
pub fn build_ninth_and_tenth(bs: &BlockSet, params: &NinthParams) -> Result<NinthAndTenth> {
    let f = frame(bs)?;
    check_params(&f, params)?;
    let x = f.x;
    let s_gamma = (x * x * params.gamma.norm_sqr() / (1.0 - 3.0 * x)).sqrt();
    let s_delta = (x * x * params.delta.norm_sqr() / (1.0 - 3.0 * x)).sqrt();
    let b = (&params.cal_v * &f.b).scale(C64::new(s_gamma, 0.0));
    let d = params.cal_v_prime.scale(C64::new(s_delta, 0.0));
    let theta = closed_form_theta(bs.diagonal_family.members[1].beta().arg());
    let phi = closed_form_theta(bs.zero_diagonal_family.members[1].beta().arg());
    let w = assemble(&f, params.delta, params.gamma, b, d, params.cal_v.clone(), params.cal_v_prime.clone(), theta, phi);

    let (w_prime, dual) = match dual_by_recipe(&f, &w, s_delta, s_gamma, theta, phi) {
        Some(wp) => (wp, DualMethod::Recipe),
        None => (dual_by_trace_solution(&f, &w, theta, phi), DualMethod::TraceSolution),
    };

    let mut members = bs.members.clone();
    members.push(w.matrix());
    members.push(w_prime.matrix());
    for (name, m) in [("W", &members[8]), ("W'", &members[9])] {
        let defect = unitarity_defect(m);
        if defect > RELATION_TOL {
            return Err(Error::Verification(format!("{name} is not unitary (defect {defect:.3e})")));
        }
    }
    let set = MessageSet::from_unitaries(edge_e_spectrum_at_x(x)?, members)?;
    let v = verify_message_set(&set, RELATION_TOL);
    if !v.passed {
        return Err(Error::Verification(v.worst.unwrap_or_else(|| format!("max violation {:.3e}", v.max_violation))));
    }
    Ok(NinthAndTenth { w, w_prime, dual, set, max_violation: v.max_violation })
}
