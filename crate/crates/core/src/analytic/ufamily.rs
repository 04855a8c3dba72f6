//! The 2x2 families `u_j = -x I + i n_j·σ` with `Tr(u_j u_k†) = -2x`.
//!
//! Writing `u = [[-x + iα, -β*], [β, -x - iα]]` gives `n = (Im β, -Re β, α)`,
//! so unitarity is `x² + |n|² = 1` and the pairwise condition is
//! `n_j·n_k = -x(1 + x)`. Together with `u₀ = I` the three vectors have equal
//! length and equal pairwise angles.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qmat::{ComplexMatrix, C64, ONE};

/// `n0 I + i n·σ`.
pub(crate) fn su2_like(n0: f64, n: &Vector3<f64>) -> ComplexMatrix {
    ComplexMatrix::new(
        2,
        2,
        vec![
            C64::new(n0, n.z),
            C64::new(n.y, n.x),
            C64::new(-n.y, n.x),
            C64::new(n0, -n.z),
        ],
    )
    .expect("2x2")
}

/// One member `-x I + i n·σ` of a family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UMember {
    pub alpha: f64,
    /// `(Re β, Im β)`.
    pub beta: (f64, f64),
}

impl UMember {
    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.beta.1, -self.beta.0, self.alpha)
    }

    pub fn beta(&self) -> C64 {
        C64::new(self.beta.0, self.beta.1)
    }

    pub fn matrix(&self, x: f64) -> ComplexMatrix {
        su2_like(-x, &self.vector())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UFamily {
    pub x: f64,
    /// `u₀ = I` followed by the three members.
    pub u: [ComplexMatrix; 4],
    /// Parameters of `u₁, u₂, u₃`.
    pub members: [UMember; 3],
}

fn check_x(x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("x must be non-negative, got {x}")));
    }
    if 1.0 - 3.0 * x <= 0.0 {
        return Err(Error::FamilyDoesNotExist(x));
    }
    Ok(())
}

/// Angle between the `β₂` and `β₃` phases.
fn beta_phase_gap(x: f64) -> f64 {
    -(-x / (1.0 - 2.0 * x)).clamp(-1.0, 1.0).acos()
}

/// The family with `β₁ = 0`, `α₁ = +√(1 - x²)` and `arg β₂ = beta2_phase`.
pub fn build_u_family(x: f64, beta2_phase: f64) -> Result<UFamily> {
    check_x(x)?;
    let r2 = 1.0 - x * x;
    let r = r2.sqrt();
    let c = -x * (1.0 + x);
    let alpha = c / r;
    let beta_mod = (r2 - c * c / r2).max(0.0).sqrt();
    let phase3 = beta2_phase + beta_phase_gap(x);
    let members = [
        UMember { alpha: r, beta: (0.0, 0.0) },
        UMember { alpha, beta: (beta_mod * beta2_phase.cos(), beta_mod * beta2_phase.sin()) },
        UMember { alpha, beta: (beta_mod * phase3.cos(), beta_mod * phase3.sin()) },
    ];
    let u = [
        ComplexMatrix::identity(2),
        members[0].matrix(x),
        members[1].matrix(x),
        members[2].matrix(x),
    ];
    Ok(UFamily { x, u, members })
}

impl UFamily {
    /// Largest `|Tr(u_j u_k†) + 2x|` over pairs.
    pub fn pair_residual(&self) -> f64 {
        pair_residual(&self.u, self.x)
    }

    /// Solve `Tr(m u_j†) = 1` for all four members.
    pub fn dual(&self) -> ComplexMatrix {
        dual_matrix(&self.u)
    }
}

pub(crate) fn pair_residual(u: &[ComplexMatrix], x: f64) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..u.len() {
        for k in j + 1..u.len() {
            let t = (&u[j] * &u[k].adjoint()).trace();
            worst = worst.max((t + 2.0 * x).norm());
        }
    }
    worst
}

/// The matrix `m` with `Tr(m u_j†) = 1` for four linearly independent `u_j`.
pub(crate) fn dual_matrix(u: &[ComplexMatrix; 4]) -> ComplexMatrix {
    let a = nalgebra::Matrix4::from_fn(|j, e| u[j].get(e / 2, e % 2).conj());
    let rhs = nalgebra::Vector4::from_element(ONE);
    let sol = a.lu().solve(&rhs).expect("u family is linearly independent");
    ComplexMatrix::new(2, 2, sol.iter().copied().collect()).expect("2x2")
}

/// Result of extending a family by a fifth member.
#[derive(Clone, Debug)]
pub struct FifthMember {
    /// The unique `-x I + i n₄·σ` satisfying the pairwise condition with
    /// the other four; unitary only when `x = 1/4`.
    pub u: ComplexMatrix,
    /// `‖u†u - I‖_F`.
    pub unitarity_defect: f64,
    /// Largest pairwise residual over all five members.
    pub pair_residual: f64,
}

/// Extend the pairwise system to five members: `n₄` solves `n₄·n_j = -x(1+x)`
/// for `j = 1, 2, 3`.
pub fn fifth_member(family: &UFamily) -> FifthMember {
    let x = family.x;
    let c = -x * (1.0 + x);
    let rows: Vec<Vector3<f64>> = family.members.iter().map(UMember::vector).collect();
    let n = Matrix3::from_rows(&[rows[0].transpose(), rows[1].transpose(), rows[2].transpose()]);
    let n4 = n.lu().solve(&Vector3::from_element(c)).expect("members are linearly independent");
    let u = su2_like(-x, &n4);
    let unitarity_defect = crate::qmat::unitarity_defect(&u);
    let all = [
        family.u[0].clone(),
        family.u[1].clone(),
        family.u[2].clone(),
        family.u[3].clone(),
        u.clone(),
    ];
    FifthMember { u, unitarity_defect, pair_residual: pair_residual(&all, x) }
}

/// Five-member family; exists only at `x = 1/4`.
pub fn extend_u_family(family: &UFamily) -> Result<[ComplexMatrix; 5]> {
    let f = fifth_member(family);
    let worst = f.unitarity_defect.max(f.pair_residual);
    if worst > 1e-12 {
        return Err(Error::Verification(format!(
            "no fifth member at x = {}: unitarity defect {:.3e}, pairwise residual {:.3e}",
            family.x, f.unitarity_defect, f.pair_residual
        )));
    }
    let [a, b, c, d] = family.u.clone();
    Ok([a, b, c, d, f.u])
}
