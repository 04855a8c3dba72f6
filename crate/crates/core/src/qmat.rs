//! Complex matrices, Schmidt spectra, messages and the Λ-weighted inner product.
//!
//! A message is a quantum operation given by its Kraus operators. Its encoded
//! states are `(K ⊗ I)|Ψ₀⟩`, and two Kraus operators produce orthogonal states
//! exactly when `Tr(K Λ K'†) = 0`, where `Λ` is the diagonal matrix of Schmidt
//! coefficients. Everything else in the crate is built on [`lambda_inner`].

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerance for exact-math construction and verification checks.
pub const CONSTRUCTION_TOL: f64 = 1e-12;

/// Dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix{}", self.0)
    }
}

impl ComplexMatrix {
    /// Build from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!("empty shape {rows}x{cols}")));
        }
        if entries.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(rows, cols, &entries))
    }

    /// Build from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(rows, cols, entries.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn from_dmatrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::InvalidMatrix("empty matrix".into()));
        }
        if let Some(bad) = m.iter().find(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMatrix(format!("non-finite entry {bad}")));
        }
        Ok(Self(m))
    }

    /// Wrap a matrix produced by internal arithmetic on finite inputs.
    pub(crate) fn wrap(m: DMatrix<C64>) -> Self {
        debug_assert!(m.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        Self(m)
    }

    pub fn identity(d: usize) -> Self {
        Self(DMatrix::identity(d, d))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        Self(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0[(r, c)]
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<C64> {
        let (r, c) = self.shape();
        (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).map(|ij| self.0[ij]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn trace(&self) -> C64 {
        self.0.diagonal().iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Copy of the `rows x cols` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self(self.0.view((r0, c0), (rows, cols)).into_owned())
    }

    /// Stack matrices with equal column counts vertically.
    pub fn vstack(parts: &[ComplexMatrix]) -> Result<Self> {
        let cols = parts.first().ok_or_else(|| Error::InvalidMatrix("nothing to stack".into()))?.cols();
        if let Some(p) = parts.iter().find(|p| p.cols() != cols) {
            return Err(Error::DimensionMismatch {
                left_rows: parts[0].rows(),
                left_cols: cols,
                right_rows: p.rows(),
                right_cols: p.cols(),
            });
        }
        let rows = parts.iter().map(|p| p.rows()).sum();
        let mut out = DMatrix::zeros(rows, cols);
        let mut r0 = 0;
        for p in parts {
            out.view_mut((r0, 0), p.shape()).copy_from(&p.0);
            r0 += p.rows();
        }
        Ok(Self(out))
    }

    /// Split into `rows / block` stacked blocks of `block x cols`.
    pub fn vsplit(&self, block: usize) -> Result<Vec<ComplexMatrix>> {
        if block == 0 || self.rows() % block != 0 {
            return Err(Error::InvalidMatrix(format!(
                "{} rows do not split into blocks of {block}",
                self.rows()
            )));
        }
        Ok((0..self.rows() / block).map(|k| self.block(k * block, 0, block, self.cols())).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols(), rhs.rows(), "matrix product shape mismatch");
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix sum shape mismatch");
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix difference shape mismatch");
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// Pauli X.
pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
}

/// Pauli Y.
pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::new(2, 2, vec![ZERO, -I, I, ZERO]).unwrap()
}

/// Pauli Z.
pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
}

/// Cyclic shift `|m⟩ → |m+1 mod d⟩`.
pub fn shift(d: usize) -> ComplexMatrix {
    let mut m = DMatrix::zeros(d, d);
    for c in 0..d {
        m[((c + 1) % d, c)] = ONE;
    }
    ComplexMatrix(m)
}

/// Clock `|m⟩ → ω^m |m⟩` with `ω = exp(2πi/d)`.
pub fn clock(d: usize) -> ComplexMatrix {
    let diag: Vec<C64> = (0..d)
        .map(|m| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / d as f64))
        .collect();
    ComplexMatrix::diagonal(&diag)
}

/// Schmidt coefficients `λ₀ ≥ λ₁ ≥ … > 0` summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtSpectrum {
    lambdas: Vec<f64>,
}

impl SchmidtSpectrum {
    pub const SUM_TOL: f64 = 1e-12;

    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidSpectrum("empty".into()));
        }
        if let Some(l) = lambdas.iter().find(|l| !l.is_finite() || **l <= 0.0) {
            return Err(Error::InvalidSpectrum(format!("coefficient {l} is not positive")));
        }
        if let Some(w) = lambdas.windows(2).find(|w| w[1] > w[0]) {
            return Err(Error::InvalidSpectrum(format!(
                "not non-increasing ({} < {})",
                w[0], w[1]
            )));
        }
        let sum: f64 = lambdas.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::InvalidSpectrum(format!("sum {sum} differs from 1")));
        }
        Ok(Self { lambdas })
    }

    /// Accept coefficients whose sum is within `tol` of one and rescale them.
    pub fn normalized(lambdas: Vec<f64>, tol: f64) -> Result<Self> {
        let sum: f64 = lambdas.iter().sum();
        if !sum.is_finite() || (sum - 1.0).abs() > tol {
            return Err(Error::InvalidSpectrum(format!(
                "sum {sum} is not 1 within {tol:e}"
            )));
        }
        Self::new(lambdas.into_iter().map(|l| l / sum).collect())
    }

    /// The maximally entangled spectrum `(1/d, …, 1/d)`.
    pub fn uniform(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidSpectrum("dimension 0".into()));
        }
        Self::new(vec![1.0 / d as f64; d])
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambdas[0]
    }

    /// Λ as a matrix.
    pub fn lambda_matrix(&self) -> ComplexMatrix {
        let diag: Vec<C64> = self.lambdas.iter().map(|&l| C64::new(l, 0.0)).collect();
        ComplexMatrix::diagonal(&diag)
    }

    /// Largest message count allowed by `N λ₀ ≤ d`.
    pub fn message_bound(&self) -> usize {
        (self.dim() as f64 / self.lambda_max() + 1e-9).floor() as usize
    }

    /// Whether `n` messages are excluded outright by `N λ₀ ≤ d`.
    pub fn excludes(&self, n: usize) -> bool {
        n as f64 * self.lambda_max() > self.dim() as f64 + 1e-12
    }
}

/// One encoding operation, as its Kraus operators.
#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    kraus: Vec<ComplexMatrix>,
}

impl Message {
    /// Structural checks only: non-empty, square, equal dimensions.
    /// Use [`Message::checked`] to also enforce completeness and independence.
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or(Error::EmptyKraus)?;
        let d = first.rows();
        if let Some(k) = kraus.iter().find(|k| k.rows() != d || k.cols() != d) {
            return Err(Error::InvalidMessage(format!(
                "Kraus operator of shape {:?} in a message of dimension {d}",
                k.shape()
            )));
        }
        Ok(Self { kraus })
    }

    /// Like [`Message::new`], and additionally require `‖Σ K†K − I‖_F ≤ tol`
    /// and linearly independent Kraus operators.
    pub fn checked(kraus: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        let m = Self::new(kraus)?;
        let defect = completeness_defect(&m);
        if defect > tol {
            return Err(Error::InvalidMessage(format!("completeness defect {defect:e} > {tol:e}")));
        }
        let gram = hs_gram(&m.kraus);
        let min_eig = min_hermitian_eigenvalue(&gram);
        if min_eig <= tol {
            return Err(Error::InvalidMessage(format!(
                "Kraus operators are linearly dependent (Gram eigenvalue {min_eig:e})"
            )));
        }
        Ok(m)
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    /// Slice a `(κ d) x d` isometry into κ stacked Kraus operators.
    pub fn from_stacked(v: &ComplexMatrix) -> Result<Self> {
        let d = v.cols();
        Self::new(v.vsplit(d)?)
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn kraus_rank(&self) -> usize {
        self.kraus.len()
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].rows()
    }

    pub fn is_unitary(&self) -> bool {
        self.kraus.len() == 1
    }

    /// Kraus operators stacked into a `(κ d) x d` matrix.
    pub fn stacked(&self) -> ComplexMatrix {
        ComplexMatrix::vstack(&self.kraus).expect("kraus operators share a shape")
    }
}

/// A candidate codebook: N messages over one Schmidt spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageSet {
    spectrum: SchmidtSpectrum,
    messages: Vec<Message>,
}

impl MessageSet {
    pub fn new(spectrum: SchmidtSpectrum, messages: Vec<Message>) -> Result<Self> {
        let d = spectrum.dim();
        if let Some(m) = messages.iter().find(|m| m.dim() != d) {
            return Err(Error::DimensionMismatch {
                left_rows: d,
                left_cols: d,
                right_rows: m.dim(),
                right_cols: m.dim(),
            });
        }
        let total: usize = messages.iter().map(Message::kraus_rank).sum();
        if total > d * d {
            return Err(Error::RankBound { total, bound: d * d });
        }
        Ok(Self { spectrum, messages })
    }

    /// A set of unitary messages.
    pub fn from_unitaries(spectrum: SchmidtSpectrum, unitaries: Vec<ComplexMatrix>) -> Result<Self> {
        let msgs = unitaries.into_iter().map(Message::unitary).collect::<Result<Vec<_>>>()?;
        Self::new(spectrum, msgs)
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    pub fn spectrum(&self) -> &SchmidtSpectrum {
        &self.spectrum
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn kappas(&self) -> Vec<usize> {
        self.messages.iter().map(Message::kraus_rank).collect()
    }

    pub fn total_rank(&self) -> usize {
        self.messages.iter().map(Message::kraus_rank).sum()
    }

    /// All Kraus operators tagged with their message index.
    pub fn indexed_kraus(&self) -> impl Iterator<Item = (usize, &ComplexMatrix)> {
        self.messages
            .iter()
            .enumerate()
            .flat_map(|(j, m)| m.kraus().iter().map(move |k| (j, k)))
    }

    /// Drop message `j`.
    pub fn without(&self, j: usize) -> Result<Self> {
        if j >= self.len() {
            return Err(Error::InvalidArgument(format!("message index {j} out of range")));
        }
        let mut messages = self.messages.clone();
        messages.remove(j);
        Self::new(self.spectrum.clone(), messages)
    }
}

/// The four equal blocks of an even-dimensional square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockView {
    pub upper_left: ComplexMatrix,
    pub upper_right: ComplexMatrix,
    pub lower_left: ComplexMatrix,
    pub lower_right: ComplexMatrix,
}

impl BlockView {
    pub fn split(m: &ComplexMatrix) -> Result<Self> {
        let (r, c) = m.shape();
        if r != c || r % 2 != 0 {
            return Err(Error::InvalidMatrix(format!("{r}x{c} is not square of even size")));
        }
        let h = r / 2;
        Ok(Self {
            upper_left: m.block(0, 0, h, h),
            upper_right: m.block(0, h, h, h),
            lower_left: m.block(h, 0, h, h),
            lower_right: m.block(h, h, h, h),
        })
    }

    pub fn from_blocks(
        upper_left: ComplexMatrix,
        upper_right: ComplexMatrix,
        lower_left: ComplexMatrix,
        lower_right: ComplexMatrix,
    ) -> Result<Self> {
        let h = upper_left.rows();
        for b in [&upper_left, &upper_right, &lower_left, &lower_right] {
            if b.shape() != (h, h) {
                return Err(Error::DimensionMismatch {
                    left_rows: h,
                    left_cols: h,
                    right_rows: b.rows(),
                    right_cols: b.cols(),
                });
            }
        }
        Ok(Self { upper_left, upper_right, lower_left, lower_right })
    }

    pub fn assemble(&self) -> ComplexMatrix {
        let h = self.upper_left.rows();
        let mut m = DMatrix::zeros(2 * h, 2 * h);
        m.view_mut((0, 0), (h, h)).copy_from(self.upper_left.matrix());
        m.view_mut((0, h), (h, h)).copy_from(self.upper_right.matrix());
        m.view_mut((h, 0), (h, h)).copy_from(self.lower_left.matrix());
        m.view_mut((h, h), (h, h)).copy_from(self.lower_right.matrix());
        ComplexMatrix(m)
    }

    /// Frobenius norm of the two off-diagonal blocks.
    pub fn off_diagonal_norm(&self) -> f64 {
        self.upper_right.frobenius_norm().hypot(self.lower_left.frobenius_norm())
    }

    /// Frobenius norm of the two diagonal blocks.
    pub fn diagonal_norm(&self) -> f64 {
        self.upper_left.frobenius_norm().hypot(self.lower_right.frobenius_norm())
    }
}

fn check_operator(k: &ComplexMatrix, d: usize) -> Result<()> {
    if k.shape() != (d, d) {
        return Err(Error::DimensionMismatch {
            left_rows: k.rows(),
            left_cols: k.cols(),
            right_rows: d,
            right_cols: d,
        });
    }
    Ok(())
}

/// `Tr(K Λ K'†)`, the overlap of the states `(K ⊗ I)|Ψ₀⟩` and `(K' ⊗ I)|Ψ₀⟩`.
pub fn lambda_inner(k: &ComplexMatrix, kp: &ComplexMatrix, spec: &SchmidtSpectrum) -> Result<C64> {
    let d = spec.dim();
    if k.shape() != kp.shape() {
        return Err(Error::DimensionMismatch {
            left_rows: k.rows(),
            left_cols: k.cols(),
            right_rows: kp.rows(),
            right_cols: kp.cols(),
        });
    }
    check_operator(k, d)?;
    Ok(lambda_inner_unchecked(k.matrix(), kp.matrix(), spec.lambdas()))
}

pub(crate) fn lambda_inner_unchecked(k: &DMatrix<C64>, kp: &DMatrix<C64>, lambdas: &[f64]) -> C64 {
    let mut acc = ZERO;
    for (b, &l) in lambdas.iter().enumerate() {
        let mut col = ZERO;
        for a in 0..k.nrows() {
            col += k[(a, b)] * kp[(a, b)].conj();
        }
        acc += col * l;
    }
    acc
}

/// `‖Σ_k K_k†K_k − I‖_F`.
pub fn completeness_defect(m: &Message) -> f64 {
    let d = m.dim();
    let mut sum = DMatrix::<C64>::zeros(d, d);
    for k in m.kraus() {
        sum += k.matrix().ad_mul(k.matrix());
    }
    (sum - DMatrix::identity(d, d)).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖M†M − I‖_F`; for non-square matrices the isometry defect.
pub fn unitarity_defect(m: &ComplexMatrix) -> f64 {
    let c = m.cols();
    (m.matrix().ad_mul(m.matrix()) - DMatrix::identity(c, c))
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

/// Haar-random `d x d` unitary.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if d == 0 {
        return Err(Error::InvalidArgument("haar_unitary needs d >= 1".into()));
    }
    haar_isometry(d, d, rng)
}

/// Haar-random `kd x d` isometry (orthonormal columns).
///
/// QR of a complex Gaussian matrix, with the phases of `R`'s diagonal moved
/// into `Q` so the distribution is exactly invariant.
pub fn haar_isometry<R: Rng + ?Sized>(kd: usize, d: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if d == 0 || kd < d {
        return Err(Error::InvalidArgument(format!(
            "haar_isometry needs rows >= cols >= 1, got {kd}x{d}"
        )));
    }
    let z = gaussian_matrix(kd, d, rng);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..d {
        let rc = r[(c, c)];
        let phase = if rc.norm() > 0.0 { rc / rc.norm() } else { ONE };
        for row in 0..kd {
            q[(row, c)] *= phase;
        }
    }
    Ok(ComplexMatrix(q))
}

/// Λ-Gram matrix over every Kraus operator of the set, in message order.
pub fn pairwise_gram(set: &MessageSet) -> ComplexMatrix {
    let ops: Vec<&ComplexMatrix> = set.indexed_kraus().map(|(_, k)| k).collect();
    let l = set.spectrum().lambdas();
    let n = ops.len();
    let mut g = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = lambda_inner_unchecked(ops[a].matrix(), ops[b].matrix(), l);
            g[(a, b)] = v;
            g[(b, a)] = v.conj();
        }
    }
    ComplexMatrix(g)
}

/// Hilbert–Schmidt Gram matrix `Tr(A_i† A_j)`.
pub(crate) fn hs_gram(ops: &[ComplexMatrix]) -> DMatrix<C64> {
    let n = ops.len();
    DMatrix::from_fn(n, n, |i, j| ops[i].matrix().dotc(ops[j].matrix()))
}

pub(crate) fn min_hermitian_eigenvalue(h: &DMatrix<C64>) -> f64 {
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}
