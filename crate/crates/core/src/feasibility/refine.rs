//! Extended-precision refinement of unitary witnesses.
//!
//! Near a feasibility boundary the solution set is degenerate and the cost
//! behaves like the fourth power of the distance to it, so an f64 cost floor
//! of about 1e-30 leaves witnesses only about 1e-7 from an exact solution.
//! Here overlaps are evaluated in double-double arithmetic and the set is
//! moved by minimum-norm damped Gauss-Newton steps `U_j ← U_j exp(i H_j)`,
//! with message 0 held fixed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::qmat::{ComplexMatrix, MessageSet, C64};

type Dd = Complex<TwoFloat>;

#[derive(Clone, Debug, Serialize)]
pub struct Refinement {
    #[serde(skip)]
    pub set: MessageSet,
    /// Σ |Tr(U_j Λ U_k†)|² over pairs, in extended precision.
    pub initial_cost: f64,
    pub final_cost: f64,
    pub iterations: usize,
}

/// Settings for [`refine_unitary_witness`].
#[derive(Clone, Copy, Debug)]
pub struct RefineSettings {
    pub max_iterations: usize,
    /// Stop once the extended-precision cost is at most this.
    pub target_cost: f64,
}

impl Default for RefineSettings {
    fn default() -> Self {
        Self { max_iterations: 400, target_cost: 1e-56 }
    }
}

#[derive(Clone)]
struct DdMatrix {
    d: usize,
    e: Vec<Dd>,
}

fn dd(z: C64) -> Dd {
    Complex::new(TwoFloat::from(z.re), TwoFloat::from(z.im))
}

fn to_c64(z: Dd) -> C64 {
    C64::new(f64::from(z.re), f64::from(z.im))
}

fn zero() -> Dd {
    Complex::new(TwoFloat::from(0.0), TwoFloat::from(0.0))
}

impl DdMatrix {
    fn from_matrix(m: &ComplexMatrix) -> Self {
        let d = m.rows();
        Self { d, e: m.to_row_major().into_iter().map(dd).collect() }
    }

    fn at(&self, r: usize, c: usize) -> Dd {
        self.e[r * self.d + c]
    }

    fn mul(&self, o: &Self) -> Self {
        let d = self.d;
        let mut e = vec![zero(); d * d];
        for r in 0..d {
            for c in 0..d {
                let mut s = zero();
                for k in 0..d {
                    s += self.at(r, k) * o.at(k, c);
                }
                e[r * d + c] = s;
            }
        }
        Self { d, e }
    }

    fn add(&self, o: &Self) -> Self {
        Self { d: self.d, e: self.e.iter().zip(&o.e).map(|(a, b)| a + b).collect() }
    }

    fn adjoint(&self) -> Self {
        let d = self.d;
        let mut e = vec![zero(); d * d];
        for r in 0..d {
            for c in 0..d {
                e[r * d + c] = self.at(c, r).conj();
            }
        }
        Self { d, e }
    }

    fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::new(self.d, self.d, self.e.iter().map(|&z| to_c64(z)).collect()).expect("square")
    }

    /// `X (3I - X†X) / 2`, repeated; converges quadratically to the polar factor.
    fn reunitarize(&self) -> Self {
        let d = self.d;
        let mut x = self.clone();
        for _ in 0..4 {
            let g = x.adjoint().mul(&x);
            let mut t = g.clone();
            for (i, v) in t.e.iter_mut().enumerate() {
                let diag = if i / d == i % d { 3.0 } else { 0.0 };
                *v = (Complex::new(TwoFloat::from(diag), TwoFloat::from(0.0)) - *v) * TwoFloat::from(0.5);
            }
            x = x.mul(&t);
        }
        x
    }
}

/// Hermitian basis: `E_aa`, then `E_ab + E_ba` and `i(E_ab - E_ba)` for `a < b`.
fn hermitian_basis(d: usize) -> Vec<DMatrix<C64>> {
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        let mut m = DMatrix::zeros(d, d);
        m[(a, a)] = C64::new(1.0, 0.0);
        out.push(m);
    }
    for a in 0..d {
        for b in a + 1..d {
            let mut s = DMatrix::zeros(d, d);
            s[(a, b)] = C64::new(1.0, 0.0);
            s[(b, a)] = C64::new(1.0, 0.0);
            out.push(s);
            let mut t = DMatrix::zeros(d, d);
            t[(a, b)] = C64::new(0.0, 1.0);
            t[(b, a)] = C64::new(0.0, -1.0);
            out.push(t);
        }
    }
    out
}

fn overlaps(us: &[DdMatrix], lambdas: &[TwoFloat]) -> Vec<Dd> {
    let n = us.len();
    let d = us[0].d;
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for j in 0..n {
        for k in j + 1..n {
            let mut s = zero();
            for a in 0..d {
                for b in 0..d {
                    s += us[j].at(a, b) * us[k].at(a, b).conj() * lambdas[b];
                }
            }
            out.push(s);
        }
    }
    out
}

fn cost_of(ov: &[Dd]) -> TwoFloat {
    ov.iter().fold(TwoFloat::from(0.0), |acc, z| acc + z.re * z.re + z.im * z.im)
}

/// Real Jacobian of the stacked `(Re, Im)` overlaps with respect to the
/// generator coordinates of messages `1..n`.
fn jacobian(us: &[DMatrix<C64>], lambda: &DMatrix<C64>, basis: &[DMatrix<C64>]) -> DMatrix<f64> {
    let n = us.len();
    let p = basis.len();
    let pairs = n * (n - 1) / 2;
    let mut jac = DMatrix::zeros(2 * pairs, (n - 1) * p);
    let i = C64::new(0.0, 1.0);
    let mut row = 0;
    for j in 0..n {
        for k in j + 1..n {
            let uk_dag = us[k].adjoint();
            for (q, e) in basis.iter().enumerate() {
                // ∂/∂θ of Tr(U_j e^{iθE} Λ U_k†) and of Tr(U_j Λ (U_k e^{iθE})†).
                if j > 0 {
                    let v = i * (&us[j] * e * lambda * &uk_dag).trace();
                    jac[(2 * row, (j - 1) * p + q)] = v.re;
                    jac[(2 * row + 1, (j - 1) * p + q)] = v.im;
                }
                let v = -i * (&us[j] * lambda * e * &uk_dag).trace();
                jac[(2 * row, (k - 1) * p + q)] = v.re;
                jac[(2 * row + 1, (k - 1) * p + q)] = v.im;
            }
            row += 1;
        }
    }
    jac
}

/// Refine a set of unitary messages toward exact mutual Λ-orthogonality.
pub fn refine_unitary_witness(set: &MessageSet, settings: &RefineSettings) -> Result<Refinement> {
    if set.messages().iter().any(|m| !m.is_unitary()) {
        return Err(Error::InvalidArgument("refinement needs unitary messages".into()));
    }
    if set.len() < 2 {
        return Err(Error::InvalidArgument("refinement needs at least two messages".into()));
    }
    let d = set.dim();
    let lambdas: Vec<TwoFloat> = set.spectrum().lambdas().iter().map(|&l| TwoFloat::from(l)).collect();
    let lambda = set.spectrum().lambda_matrix().into_matrix();
    let basis = hermitian_basis(d);
    let mut us: Vec<DdMatrix> =
        set.messages().iter().map(|m| DdMatrix::from_matrix(&m.kraus()[0]).reunitarize()).collect();
    let mut ov = overlaps(&us, &lambdas);
    let mut cost = cost_of(&ov);
    let initial_cost = f64::from(cost);
    let mut iterations = 0;
    let mut mu_scale = 1.0;
    while iterations < settings.max_iterations && f64::from(cost) > settings.target_cost {
        iterations += 1;
        let us64: Vec<DMatrix<C64>> = us.iter().map(|u| u.to_matrix().into_matrix()).collect();
        let jac = jacobian(&us64, &lambda, &basis);
        let r = DVector::from_iterator(ov.len() * 2, ov.iter().flat_map(|z| [f64::from(z.re), f64::from(z.im)]));
        // Damped minimum-norm step from the SVD of J: the near-singular
        // directions that matter here would be lost by forming J Jᵀ.
        let svd = jac.clone().svd(true, true);
        let (u_mat, v_t) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
        let ur = u_mat.transpose() * &r;
        let mut accepted = false;
        for _ in 0..30 {
            let mu = mu_scale * r.norm();
            let y = DVector::from_iterator(
                ur.len(),
                ur.iter().zip(svd.singular_values.iter()).map(|(c, s)| c * s / (s * s + mu)),
            );
            let delta = -(v_t.transpose() * y);
            let p = basis.len();
            let trial: Vec<DdMatrix> = us
                .iter()
                .enumerate()
                .map(|(j, u)| {
                    if j == 0 {
                        return u.clone();
                    }
                    let mut h = DMatrix::<C64>::zeros(d, d);
                    for (q, e) in basis.iter().enumerate() {
                        h += e * C64::new(delta[(j - 1) * p + q], 0.0);
                    }
                    // U (I + iH - H²/2) with the small part added in extended
                    // precision, then polar projection.
                    let ih = h * C64::new(0.0, 1.0);
                    let small = &ih + &ih * &ih * C64::new(0.5, 0.0);
                    let small = DdMatrix::from_matrix(&ComplexMatrix::from_dmatrix(small).expect("finite"));
                    u.add(&u.mul(&small)).reunitarize()
                })
                .collect();
            let trial_ov = overlaps(&trial, &lambdas);
            let trial_cost = cost_of(&trial_ov);
            if trial_cost < cost {
                us = trial;
                ov = trial_ov;
                cost = trial_cost;
                mu_scale = (mu_scale / 10.0).max(1e-6);
                accepted = true;
                break;
            }
            mu_scale *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    let refined = MessageSet::from_unitaries(set.spectrum().clone(), us.iter().map(DdMatrix::to_matrix).collect())?;
    Ok(Refinement { set: refined, initial_cost, final_cost: f64::from(cost), iterations })
}
