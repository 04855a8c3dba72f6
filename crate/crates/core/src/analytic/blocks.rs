//! Block-diagonal and block zero-diagonal message sets on edge E.

use crate::error::{Error, Result};
use crate::phasemap::edge_e_spectrum_at_x;
use crate::qmat::{unitarity_defect, BlockView, ComplexMatrix, MessageSet, C64, CONSTRUCTION_TOL};

use super::ufamily::{build_u_family, extend_u_family, UFamily};

/// The unitaries dressing a block set.
#[derive(Clone, Debug, PartialEq)]
pub struct Dressings {
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub b1: ComplexMatrix,
    pub b2: ComplexMatrix,
}

impl Dressings {
    pub fn identity() -> Self {
        let i = ComplexMatrix::identity(2);
        Self { a: i.clone(), b: i.clone(), b1: i.clone(), b2: i }
    }

    /// `B₁ = -B†A`, `B₂ = A†`: the zero-diagonal members become
    /// `[[0, B], [-B† A v A†, 0]]`, the partners of `diag(A u A†, I)`.
    pub fn paired(a: ComplexMatrix, b: ComplexMatrix) -> Self {
        let b1 = (&b.adjoint() * &a).scale(C64::new(-1.0, 0.0));
        let b2 = a.adjoint();
        Self { a, b, b1, b2 }
    }

    fn check(&self) -> Result<()> {
        for (name, m) in [("A", &self.a), ("B", &self.b), ("B1", &self.b1), ("B2", &self.b2)] {
            if m.shape() != (2, 2) {
                return Err(Error::InvalidArgument(format!("dressing {name} must be 2x2")));
            }
            let defect = unitarity_defect(m);
            if defect > CONSTRUCTION_TOL {
                return Err(Error::NonUnitaryDressing { name, defect });
            }
        }
        Ok(())
    }
}

pub(crate) fn block_diag(ul: &ComplexMatrix, lr: &ComplexMatrix) -> ComplexMatrix {
    let z = ComplexMatrix::zeros(2, 2);
    BlockView::from_blocks(ul.clone(), z.clone(), z, lr.clone()).expect("2x2 blocks").assemble()
}

pub(crate) fn block_anti(ur: &ComplexMatrix, ll: &ComplexMatrix) -> ComplexMatrix {
    let z = ComplexMatrix::zeros(2, 2);
    BlockView::from_blocks(z.clone(), ur.clone(), ll.clone(), z).expect("2x2 blocks").assemble()
}

#[derive(Clone, Debug)]
pub struct BlockSet {
    pub x: f64,
    pub dressings: Dressings,
    pub diagonal_family: UFamily,
    pub zero_diagonal_family: UFamily,
    /// `diag(A u_j A†, I)` for `j = 0..4`, then `[[0, B], [B₁ v_j B₂, 0]]`.
    pub members: Vec<ComplexMatrix>,
}

impl BlockSet {
    pub fn message_set(&self) -> MessageSet {
        MessageSet::from_unitaries(edge_e_spectrum_at_x(self.x).expect("x < 1/3"), self.members.clone())
            .expect("eight 4x4 unitaries")
    }

    /// `A m A†` with `Tr(m u_j†) = 1`.
    pub fn a_tilde(&self) -> ComplexMatrix {
        let d = &self.dressings;
        &(&d.a * &self.diagonal_family.dual()) * &d.a.adjoint()
    }

    /// `B₁ m_v B₂` with `Tr(m_v v_j†) = 1`.
    pub fn a_tilde_prime(&self) -> ComplexMatrix {
        let d = &self.dressings;
        &(&d.b1 * &self.zero_diagonal_family.dual()) * &d.b2
    }
}

/// Four block-diagonal and four block zero-diagonal mutually Λ-orthogonal
/// unitaries at the edge-E spectrum with ratio `x`. `phases` are the `β₂`
/// phases of the diagonal and zero-diagonal families.
pub fn build_block_set(x: f64, dressings: Dressings, phases: (f64, f64)) -> Result<BlockSet> {
    dressings.check()?;
    let diag = build_u_family(x, phases.0)?;
    let anti = build_u_family(x, phases.1)?;
    let d = &dressings;
    let i2 = ComplexMatrix::identity(2);
    let mut members = Vec::with_capacity(8);
    for u in &diag.u {
        members.push(block_diag(&(&(&d.a * u) * &d.a.adjoint()), &i2));
    }
    for v in &anti.u {
        members.push(block_anti(&d.b, &(&(&d.b1 * v) * &d.b2)));
    }
    Ok(BlockSet { x, dressings, diagonal_family: diag, zero_diagonal_family: anti, members })
}

/// Five block-diagonal and five block zero-diagonal unitaries at `Λ*`
/// (`x = 1/4`), the zero-diagonal ones being the partners
/// `[[0, B], [-B† A u_j A†, 0]]`.
pub fn build_five_plus_five(x: f64, a: ComplexMatrix, b: ComplexMatrix, beta2_phase: f64) -> Result<Vec<ComplexMatrix>> {
    let dressings = Dressings::paired(a, b);
    dressings.check()?;
    let fam = build_u_family(x, beta2_phase)?;
    let five = extend_u_family(&fam)?;
    let i2 = ComplexMatrix::identity(2);
    let d = &dressings;
    let dressed: Vec<ComplexMatrix> = five.iter().map(|u| &(&d.a * u) * &d.a.adjoint()).collect();
    let mut out: Vec<ComplexMatrix> = dressed.iter().map(|u| block_diag(u, &i2)).collect();
    let minus_bdag = d.b.adjoint().scale(C64::new(-1.0, 0.0));
    out.extend(dressed.iter().map(|u| block_anti(&d.b, &(&minus_bdag * u))));
    Ok(out)
}

/// Mix a block-diagonal `D` and its zero-diagonal partner `Z` into the pair
/// `μ₁(D + g Z)`, `μ₂(D - Z/g)`, with `|μ|` fixed by unitarity.
pub fn mix_pair(d: &ComplexMatrix, z: &ComplexMatrix, g: f64, phases: (f64, f64)) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if !(g.is_finite() && g != 0.0) {
        return Err(Error::InvalidArgument("mixing coefficient must be finite and nonzero".into()));
    }
    let mix = |coef: f64, phase: f64| {
        let mu = C64::from_polar(1.0 / (1.0 + coef * coef).sqrt(), phase);
        (d + &z.scale(C64::new(coef, 0.0))).scale(mu)
    };
    Ok((mix(g, phases.0), mix(-1.0 / g, phases.1)))
}
