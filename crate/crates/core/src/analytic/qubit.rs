//! Two qubits: a third deterministic message is impossible below maximal
//! entanglement.
//!
//! With `U₀ = I`, a second unitary with `|a₀⟩ = μ|0⟩ + ν|1⟩` must satisfy
//! `μ λ₀ = e^{iφ} μ* λ₁`, so `μ = 0` when `λ₀ ≠ λ₁` and
//! `U₁ = ν*|0⟩⟨1| + ν|1⟩⟨0|`. A third message then lives in the span of
//! `Φ₁ = √λ₁|00⟩ - √λ₀|11⟩` and `Φ₂ = ν√λ₁|10⟩ - ν*√λ₀|01⟩`, which forces
//! `K = √(λ₁/λ₀)(α|0⟩ + νβ|1⟩)⟨0| - √(λ₀/λ₁)(ν*β|0⟩ + α|1⟩)⟨1|`. The
//! diagonal of `Σ K†K` is then proportional to `(λ₁/λ₀, λ₀/λ₁)`, never `I`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qmat::{ComplexMatrix, C64, ZERO};

#[derive(Clone, Debug, Serialize)]
pub struct QubitNoGo {
    pub lambda0: f64,
    pub lambda1: f64,
    /// `min |μ λ₀ - e^{iφ} μ* λ₁|` over `|μ| = 1`; nonzero forces `μ = 0`.
    pub unit_mu_residual: f64,
    /// The two diagonal coefficients `(λ₁/λ₀, λ₀/λ₁)` of `Σ K†K`.
    pub coefficients: (f64, f64),
    /// `λ₀/λ₁ - λ₁/λ₀`.
    pub gap: f64,
}

fn check(lambda0: f64) -> Result<()> {
    if lambda0 == 0.5 {
        return Err(Error::NoObstruction);
    }
    if !(lambda0 > 0.5 && lambda0 < 1.0) {
        return Err(Error::Domain(format!("qubit argument needs 1/2 < λ₀ < 1, got {lambda0}")));
    }
    Ok(())
}

pub fn qubit_no_go(lambda0: f64) -> Result<QubitNoGo> {
    check(lambda0)?;
    let lambda1 = 1.0 - lambda0;
    let c = (lambda1 / lambda0, lambda0 / lambda1);
    Ok(QubitNoGo {
        lambda0,
        lambda1,
        unit_mu_residual: lambda0 - lambda1,
        coefficients: c,
        gap: c.1 - c.0,
    })
}

/// The forced second unitary `ν*|0⟩⟨1| + ν|1⟩⟨0|`.
pub fn forced_second_unitary(nu_phase: f64) -> ComplexMatrix {
    let nu = C64::from_polar(1.0, nu_phase);
    ComplexMatrix::new(2, 2, vec![ZERO, nu.conj(), nu, ZERO]).expect("2x2")
}

/// The Kraus operator whose state is `α Φ₁ + β Φ₂`.
pub fn third_message_operator(lambda0: f64, nu_phase: f64, alpha: C64, beta: C64) -> Result<ComplexMatrix> {
    check(lambda0)?;
    let lambda1 = 1.0 - lambda0;
    let nu = C64::from_polar(1.0, nu_phase);
    let r = (lambda1 / lambda0).sqrt();
    ComplexMatrix::new(
        2,
        2,
        vec![alpha * r, -(nu.conj() * beta) / r, nu * beta * r, -alpha / r],
    )
}
