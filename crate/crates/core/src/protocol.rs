//! Independent verification of a message set and simulation of the
//! encode / transmit / measure protocol.
//!
//! Joint states live in `C^{d²}` with index `a d + b` for `|a⟩_A |b⟩_B`, so
//! `(K ⊗ I)|Ψ₀⟩` has components `K[a, b] √λ_b`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qmat::{completeness_defect, lambda_inner_unchecked, ComplexMatrix, MessageSet, C64, ZERO};
use crate::rng::{derive_seed, seeded};

/// Posterior needed for a decoding to count as certain.
pub const CERTAINTY: f64 = 1.0 - 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verification {
    pub passed: bool,
    /// Largest completeness defect or cross-message overlap modulus.
    pub max_violation: f64,
    pub max_completeness_defect: f64,
    pub max_cross_overlap: f64,
    /// Smallest eigenvalue over the within-message Gram matrices.
    pub min_within_eigenvalue: f64,
    /// Human-readable description of the worst violation, if any.
    pub worst: Option<String>,
}

/// Check completeness, cross-message orthogonality and within-message
/// linear independence, all at tolerance `tol`.
pub fn verify_message_set(set: &MessageSet, tol: f64) -> Verification {
    let lambdas = set.spectrum().lambdas();
    let mut worst: Option<(f64, String)> = None;
    let mut note = |v: f64, what: String| {
        if worst.as_ref().is_none_or(|w| v > w.0) {
            worst = Some((v, what));
        }
    };

    let mut max_def = 0.0f64;
    for (j, m) in set.messages().iter().enumerate() {
        let def = completeness_defect(m);
        max_def = max_def.max(def);
        note(def, format!("message {j}: completeness defect {def:.3e}"));
    }

    let ops: Vec<(usize, usize, &ComplexMatrix)> = set
        .messages()
        .iter()
        .enumerate()
        .flat_map(|(j, m)| m.kraus().iter().enumerate().map(move |(k, op)| (j, k, op)))
        .collect();
    let mut max_cross = 0.0f64;
    for (a, &(ja, ka, opa)) in ops.iter().enumerate() {
        for &(jb, kb, opb) in &ops[a + 1..] {
            if ja == jb {
                continue;
            }
            let v = lambda_inner_unchecked(opa.matrix(), opb.matrix(), lambdas).norm();
            max_cross = max_cross.max(v);
            note(v, format!("messages {ja} (Kraus {ka}) and {jb} (Kraus {kb}): overlap {v:.3e}"));
        }
    }

    let mut min_eig = f64::INFINITY;
    for (j, m) in set.messages().iter().enumerate() {
        let k = m.kraus();
        let g = DMatrix::from_fn(k.len(), k.len(), |a, b| {
            lambda_inner_unchecked(k[b].matrix(), k[a].matrix(), lambdas)
        });
        let e = g.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if e < min_eig {
            min_eig = e;
            if e <= tol {
                note(f64::INFINITY, format!("message {j}: encoded states are linearly dependent (eigenvalue {e:.3e})"));
            }
        }
    }

    let max_violation = max_def.max(max_cross);
    let passed = max_violation <= tol && min_eig > tol;
    Verification {
        passed,
        max_violation,
        max_completeness_defect: max_def,
        max_cross_overlap: max_cross,
        min_within_eigenvalue: min_eig,
        worst: if passed { None } else { worst.map(|w| w.1) },
    }
}

/// `(K ⊗ I)|Ψ₀⟩` as a vector of length `d²`.
pub fn encoded_state(k: &ComplexMatrix, lambdas: &[f64]) -> DVector<C64> {
    let d = lambdas.len();
    DVector::from_fn(d * d, |i, _| k.get(i / d, i % d) * lambdas[i % d].sqrt())
}

/// Bob's measurement: one projector per message plus the complement.
#[derive(Clone, Debug)]
pub struct Decoder {
    /// Orthonormal basis of each message subspace.
    pub subspaces: Vec<Vec<DVector<C64>>>,
    pub projectors: Vec<ComplexMatrix>,
    pub complement: ComplexMatrix,
}

impl Decoder {
    pub fn ranks(&self) -> Vec<usize> {
        self.subspaces.iter().map(Vec::len).collect()
    }

    pub fn complement_rank(&self) -> usize {
        let total = self.complement.rows();
        total - self.subspaces.iter().map(Vec::len).sum::<usize>()
    }

    /// Probability of each outcome (messages, then complement) for a normalized state.
    pub fn outcome_probabilities(&self, psi: &DVector<C64>) -> Vec<f64> {
        let mut probs: Vec<f64> = self
            .subspaces
            .iter()
            .map(|basis| basis.iter().map(|e| e.dotc(psi).norm_sqr()).sum())
            .collect();
        let rest = (1.0 - probs.iter().sum::<f64>()).max(0.0);
        probs.push(rest);
        probs
    }
}

/// Gram–Schmidt with pivoting: repeatedly take the largest remaining vector.
fn orthonormal_basis(vectors: &[DVector<C64>], rel_tol: f64) -> Vec<DVector<C64>> {
    let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut rest: Vec<DVector<C64>> = vectors.to_vec();
    let mut basis: Vec<DVector<C64>> = Vec::new();
    while !rest.is_empty() {
        let (idx, norm) = rest
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        if norm <= rel_tol * scale {
            break;
        }
        let e = rest.swap_remove(idx) / C64::new(norm, 0.0);
        for v in rest.iter_mut() {
            for _ in 0..2 {
                let p = e.dotc(v);
                *v -= &e * p;
            }
        }
        basis.push(e);
    }
    basis
}

fn projector(basis: &[DVector<C64>], n: usize) -> DMatrix<C64> {
    let mut p = DMatrix::zeros(n, n);
    for e in basis {
        p += e * e.adjoint();
    }
    p
}

/// Build the decoding measurement for a set that verifies at `tol`.
pub fn build_decoder(set: &MessageSet, tol: f64) -> Result<Decoder> {
    let v = verify_message_set(set, tol);
    if !v.passed {
        return Err(Error::Verification(format!(
            "max violation {:.3e}{}",
            v.max_violation,
            v.worst.map(|w| format!("; {w}")).unwrap_or_default()
        )));
    }
    let lambdas = set.spectrum().lambdas();
    let n = lambdas.len() * lambdas.len();
    let subspaces: Vec<Vec<DVector<C64>>> = set
        .messages()
        .iter()
        .map(|m| {
            let states: Vec<DVector<C64>> = m.kraus().iter().map(|k| encoded_state(k, lambdas)).collect();
            orthonormal_basis(&states, 1e-10)
        })
        .collect();
    let projectors: Vec<DMatrix<C64>> = subspaces.iter().map(|b| projector(b, n)).collect();
    let mut complement = DMatrix::identity(n, n);
    for p in &projectors {
        complement -= p;
    }
    Ok(Decoder {
        subspaces,
        projectors: projectors.into_iter().map(ComplexMatrix::wrap).collect(),
        complement: ComplexMatrix::wrap(complement),
    })
}

/// One run of the protocol.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trial {
    pub sent: usize,
    /// Alice's ancilla outcome (0-based Kraus index).
    pub branch: usize,
    /// Bob's outcome; `None` when the complement projector fired.
    pub decoded: Option<usize>,
    /// Probability Bob's measurement assigned to the decoded outcome.
    pub posterior: f64,
}

impl Trial {
    pub fn correct(&self) -> bool {
        self.decoded == Some(self.sent) && self.posterior >= CERTAINTY
    }
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, p) in probs.iter().enumerate() {
        if u < *p {
            return i;
        }
        u -= p;
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// Probabilities `Tr(K_jk Λ K_jk†)` of Alice's ancilla outcomes for message `j`.
pub fn branch_probabilities(set: &MessageSet, j: usize) -> Vec<f64> {
    let l = set.spectrum().lambdas();
    set.messages()[j]
        .kraus()
        .iter()
        .map(|k| lambda_inner_unchecked(k.matrix(), k.matrix(), l).re)
        .collect()
}

/// Send message `j`: sample Alice's branch, then Bob's measurement outcome.
pub fn simulate<R: Rng + ?Sized>(set: &MessageSet, decoder: &Decoder, j: usize, rng: &mut R) -> Result<Trial> {
    if j >= set.len() {
        return Err(Error::InvalidArgument(format!("message index {j} out of range")));
    }
    let probs = branch_probabilities(set, j);
    let branch = sample_index(&probs, rng);
    let k = &set.messages()[j].kraus()[branch];
    let state = encoded_state(k, set.spectrum().lambdas());
    let norm = state.norm();
    let psi = if norm > 0.0 { state / C64::new(norm, 0.0) } else { DVector::from_element(1, ZERO) };
    let outcome_probs = decoder.outcome_probabilities(&psi);
    let outcome = sample_index(&outcome_probs, rng);
    let decoded = (outcome < set.len()).then_some(outcome);
    Ok(Trial { sent: j, branch, decoded, posterior: outcome_probs[outcome] })
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationReport {
    pub trials: Vec<Trial>,
    /// (attempts, correct) per message.
    pub per_message: Vec<(usize, usize)>,
}

impl SimulationReport {
    pub fn accuracy(&self) -> f64 {
        let (a, c) = self.per_message.iter().fold((0, 0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
        if a == 0 {
            1.0
        } else {
            c as f64 / a as f64
        }
    }
}

/// Run `trials` trials cycling through the messages, each with its own
/// derived seed.
pub fn simulate_many(set: &MessageSet, decoder: &Decoder, trials: usize, seed: u64) -> Result<SimulationReport> {
    let n = set.len();
    let mut per_message = vec![(0, 0); n];
    let mut out = Vec::with_capacity(trials);
    for t in 0..trials {
        let j = t % n;
        let mut rng = seeded(derive_seed(seed, &[t as u64]));
        let trial = simulate(set, decoder, j, &mut rng)?;
        per_message[j].0 += 1;
        if trial.correct() {
            per_message[j].1 += 1;
        }
        out.push(trial);
    }
    Ok(SimulationReport { trials: out, per_message })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{haar_isometry, pauli_x, pauli_y, pauli_z, Message, SchmidtSpectrum};
    use crate::rng::seeded;

    fn paulis() -> MessageSet {
        MessageSet::from_unitaries(
            SchmidtSpectrum::new(vec![0.5, 0.5]).unwrap(),
            vec![ComplexMatrix::identity(2), pauli_x(), pauli_y(), pauli_z()],
        )
        .unwrap()
    }

    #[test]
    fn pauli_set_verifies() {
        let v = verify_message_set(&paulis(), 1e-12);
        assert!(v.passed);
        assert!(v.max_violation < 1e-15);
    }

    #[test]
    fn duplicate_identity_fails_with_unit_violation() {
        let s = SchmidtSpectrum::new(vec![0.6, 0.4]).unwrap();
        let set = MessageSet::from_unitaries(s, vec![ComplexMatrix::identity(2); 2]).unwrap();
        let v = verify_message_set(&set, 1e-10);
        assert!(!v.passed);
        assert!((v.max_violation - 1.0).abs() < 1e-15);
        assert!(v.worst.unwrap().contains("messages 0 (Kraus 0) and 1 (Kraus 0)"));
    }

    #[test]
    fn pauli_decoder_is_bell_measurement() {
        let dec = build_decoder(&paulis(), 1e-12).unwrap();
        assert_eq!(dec.ranks(), vec![1, 1, 1, 1]);
        assert_eq!(dec.complement_rank(), 0);
        assert!(dec.complement.max_abs() < 1e-14);
        for (i, p) in dec.projectors.iter().enumerate() {
            assert!((p.trace().re - 1.0).abs() < 1e-14);
            for q in &dec.projectors[i + 1..] {
                assert!((p * q).max_abs() < 1e-14);
            }
        }
    }

    #[test]
    fn decoder_refuses_unverified_set() {
        let s = SchmidtSpectrum::new(vec![0.6, 0.4]).unwrap();
        let set = MessageSet::from_unitaries(s, vec![ComplexMatrix::identity(2); 2]).unwrap();
        assert!(matches!(build_decoder(&set, 1e-10), Err(Error::Verification(_))));
    }

    #[test]
    fn unitary_messages_always_take_branch_zero() {
        let set = paulis();
        let dec = build_decoder(&set, 1e-12).unwrap();
        let report = simulate_many(&set, &dec, 400, 1).unwrap();
        assert!(report.trials.iter().all(|t| t.branch == 0));
        assert_eq!(report.accuracy(), 1.0);
    }

    #[test]
    fn branch_frequency_matches_probability() {
        // A single rank-2 message: decoding is trivial, branch statistics are not.
        let s = SchmidtSpectrum::new(vec![0.7, 0.3]).unwrap();
        let v = haar_isometry(4, 2, &mut seeded(12)).unwrap();
        let set = MessageSet::new(s, vec![Message::from_stacked(&v).unwrap()]).unwrap();
        let p = branch_probabilities(&set, 0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let dec = build_decoder(&set, 1e-10).unwrap();
        assert_eq!(dec.ranks(), vec![2]);
        let trials = 20_000;
        let mut rng = seeded(77);
        let hits = (0..trials)
            .filter(|_| simulate(&set, &dec, 0, &mut rng).unwrap().branch == 0)
            .count();
        let freq = hits as f64 / trials as f64;
        let sigma = (p[0] * (1.0 - p[0]) / trials as f64).sqrt();
        assert!((freq - p[0]).abs() < 3.0 * sigma, "freq {freq} vs {}", p[0]);
    }
}
