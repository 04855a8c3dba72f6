//! Multi-restart feasibility search for mutually Λ-orthogonal message sets.
//!
//! A verdict of "infeasible" is operational: every one of `restarts`
//! independent local minimizations ended with cost above `success_tol`.
//! Each restart is seeded from `(cfg.seed, restart index)`, so any verdict can
//! be replayed from its log.

mod engine;
mod refine;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use engine::Optimizer;
pub use refine::{refine_unitary_witness, RefineSettings, Refinement};
use engine::{LocalSettings, Layout, Stop};

use crate::error::{Error, Result};
use crate::protocol::verify_message_set;
use crate::qmat::{haar_isometry, ComplexMatrix, Message, MessageSet, SchmidtSpectrum, C64};
use crate::rng::{derive_seed, seeded};

/// Kraus ranks `κ_j` of a candidate set, kept sorted non-decreasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RankProfile(Vec<usize>);

impl RankProfile {
    pub fn new(mut kappas: Vec<usize>) -> Result<Self> {
        if kappas.is_empty() {
            return Err(Error::InvalidArgument("empty rank profile".into()));
        }
        if kappas.contains(&0) {
            return Err(Error::InvalidArgument("Kraus ranks must be positive".into()));
        }
        kappas.sort_unstable();
        Ok(Self(kappas))
    }

    /// All-ones profile of `n` unitary messages.
    pub fn unitary(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    pub fn kappas(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn is_unitary(&self) -> bool {
        self.0.iter().all(|&k| k == 1)
    }

    /// Reject profiles with `Σ κ_j > d²`.
    pub fn check_bound(&self, d: usize) -> Result<()> {
        let total = self.total();
        if total > d * d {
            return Err(Error::RankBound { total, bound: d * d });
        }
        Ok(())
    }
}

impl std::fmt::Display for RankProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Unitary-only or general (Kraus rank up to `max_kappa`) encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Unitary,
    General,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Unitary => "unitary",
            Mode::General => "general",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unitary" | "unitary-only" => Ok(Mode::Unitary),
            "general" => Ok(Mode::General),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?}"))),
        }
    }
}

/// Entrywise tolerance a witness must meet under `verify_message_set`.
pub const WITNESS_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// A restart succeeds once the orthogonality cost is at most this.
    pub success_tol: f64,
    pub max_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Freeze message 0 at the identity when it is unitary.
    pub gauge_fix_identity: bool,
    pub optimizer: Optimizer,
    /// Successful restarts keep iterating until the cost is below this.
    pub polish_tol: f64,
    pub stall_rel_decrease: f64,
    pub stall_window: usize,
    /// Coarse stop: fractional decrease required over each plateau window.
    pub plateau_rel_decrease: f64,
    /// Iterations per plateau check; 0 disables the check.
    pub plateau_window: usize,
    pub initial_step: f64,
    pub shrink: f64,
    pub armijo: f64,
    /// Largest Kraus rank tried in general mode.
    pub max_kappa: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            success_tol: 1e-11,
            max_iterations: 5000,
            restarts: 20,
            seed: 0,
            gauge_fix_identity: true,
            optimizer: Optimizer::LevenbergMarquardt,
            polish_tol: 1e-26,
            stall_rel_decrease: 1e-14,
            stall_window: 50,
            plateau_rel_decrease: 1e-3,
            plateau_window: 100,
            initial_step: 1e-1,
            shrink: 0.5,
            armijo: 1e-4,
            max_kappa: 2,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.success_tol > 0.0) {
            return Err(Error::InvalidArgument("success_tol must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("at least one restart is required".into()));
        }
        if self.max_kappa == 0 {
            return Err(Error::InvalidArgument("max_kappa must be positive".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) || !(self.initial_step > 0.0) {
            return Err(Error::InvalidArgument("line-search parameters out of range".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    fn local(&self) -> LocalSettings {
        LocalSettings {
            optimizer: self.optimizer,
            success_tol: self.success_tol,
            polish_tol: self.polish_tol.min(self.success_tol),
            max_iterations: self.max_iterations,
            stall_rel_decrease: self.stall_rel_decrease,
            stall_window: self.stall_window,
            plateau_rel_decrease: self.plateau_rel_decrease,
            plateau_window: self.plateau_window,
            initial_step: self.initial_step,
            shrink: self.shrink,
            armijo: self.armijo,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Feasible,
    InfeasibleAfterRestarts,
}

impl Verdict {
    pub fn is_feasible(self) -> bool {
        self == Verdict::Feasible
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestartStop {
    Converged,
    Stalled,
    MaxIterations,
    /// Cost reached the tolerance but the polished set failed verification.
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub seed: u64,
    pub final_cost: f64,
    pub iterations: usize,
    pub stop: RestartStop,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub verdict: Verdict,
    pub profile: RankProfile,
    pub best_cost: f64,
    pub witness: Option<MessageSet>,
    pub restart_log: Vec<RestartRecord>,
}

impl SearchOutcome {
    /// Seed of the successful restart, or of the best failed one.
    pub fn decisive_seed(&self) -> Option<u64> {
        match self.verdict {
            Verdict::Feasible => self.restart_log.last().map(|r| r.seed),
            Verdict::InfeasibleAfterRestarts => self
                .restart_log
                .iter()
                .min_by(|a, b| a.final_cost.total_cmp(&b.final_cost))
                .map(|r| r.seed),
        }
    }
}

/// Sum over ordered cross-message pairs of `|Tr(K_jk Λ K_j'k'†)|²`.
pub fn orthogonality_cost(set: &MessageSet) -> f64 {
    let (layout, point) = layout_of(set);
    layout.cost(&point)
}

fn layout_of(set: &MessageSet) -> (Layout, Vec<DMatrix<C64>>) {
    let kappas = set.kappas();
    let layout = Layout::new(set.spectrum().lambdas(), &kappas, &vec![false; kappas.len()]);
    let point = set.messages().iter().map(|m| m.stacked().into_matrix()).collect();
    (layout, point)
}

/// Riemannian gradient of [`orthogonality_cost`]: the Euclidean gradient with
/// respect to each stacked isometry, projected to the tangent space.
pub fn cost_gradient(set: &MessageSet) -> Vec<ComplexMatrix> {
    let (layout, point) = layout_of(set);
    layout
        .euclidean_gradient(&point)
        .iter()
        .zip(&point)
        .map(|(g, v)| ComplexMatrix::wrap(engine::project_tangent(v, g)))
        .collect()
}

/// Euclidean (unprojected) gradient, one `(κ d) x d` matrix per message.
pub fn euclidean_gradient(set: &MessageSet) -> Vec<ComplexMatrix> {
    let (layout, point) = layout_of(set);
    layout.euclidean_gradient(&point).into_iter().map(ComplexMatrix::wrap).collect()
}

/// Project `z` onto the tangent space of the isometry manifold at `v`.
pub fn project_tangent(v: &ComplexMatrix, z: &ComplexMatrix) -> Result<ComplexMatrix> {
    if v.shape() != z.shape() {
        return Err(Error::DimensionMismatch {
            left_rows: v.rows(),
            left_cols: v.cols(),
            right_rows: z.rows(),
            right_cols: z.cols(),
        });
    }
    Ok(ComplexMatrix::wrap(engine::project_tangent(v.matrix(), z.matrix())))
}

/// Polar-decomposition retraction of `point + step`, message by message.
pub fn retract(point: &[ComplexMatrix], step: &[ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
    if point.len() != step.len() {
        return Err(Error::InvalidArgument(format!(
            "{} isometries but {} steps",
            point.len(),
            step.len()
        )));
    }
    point
        .iter()
        .zip(step)
        .map(|(v, s)| {
            if v.shape() != s.shape() {
                return Err(Error::DimensionMismatch {
                    left_rows: v.rows(),
                    left_cols: v.cols(),
                    right_rows: s.rows(),
                    right_cols: s.cols(),
                });
            }
            engine::polar(&(v.matrix() + s.matrix())).map(ComplexMatrix::wrap)
        })
        .collect()
}

fn frozen_mask(profile: &RankProfile, cfg: &SearchConfig) -> Vec<bool> {
    let mut frozen = vec![false; profile.len()];
    if cfg.gauge_fix_identity && profile.kappas()[0] == 1 {
        frozen[0] = true;
    }
    frozen
}

fn check_inputs(d: usize, spec: &SchmidtSpectrum, profile: &RankProfile, cfg: &SearchConfig) -> Result<()> {
    cfg.validate()?;
    if spec.dim() != d {
        return Err(Error::InvalidArgument(format!(
            "spectrum has {} coefficients but d = {d}",
            spec.dim()
        )));
    }
    profile.check_bound(d)
}

/// Run a single restart from `seed`. Returns its record and, when it
/// converged to a verified set, the witness.
pub fn run_restart(
    d: usize,
    spec: &SchmidtSpectrum,
    profile: &RankProfile,
    cfg: &SearchConfig,
    seed: u64,
) -> Result<(RestartRecord, Option<MessageSet>)> {
    check_inputs(d, spec, profile, cfg)?;
    let frozen = frozen_mask(profile, cfg);
    let layout = Layout::new(spec.lambdas(), profile.kappas(), &frozen);
    Ok(restart(&layout, spec, profile, cfg, seed))
}

fn restart(
    layout: &Layout,
    spec: &SchmidtSpectrum,
    profile: &RankProfile,
    cfg: &SearchConfig,
    seed: u64,
) -> (RestartRecord, Option<MessageSet>) {
    let d = layout.d;
    let mut rng = seeded(seed);
    let start: Vec<DMatrix<C64>> = profile
        .kappas()
        .iter()
        .zip(&layout.frozen)
        .map(|(&k, &f)| {
            if f {
                DMatrix::identity(d, d)
            } else {
                haar_isometry(k * d, d, &mut rng).expect("valid shape").into_matrix()
            }
        })
        .collect();
    let result = engine::minimize(layout, start, &cfg.local());
    let mut stop = match result.stop {
        Stop::Converged => RestartStop::Converged,
        Stop::Stalled => RestartStop::Stalled,
        Stop::MaxIterations => RestartStop::MaxIterations,
    };
    let mut witness = None;
    if result.cost <= cfg.success_tol {
        let messages: Vec<Message> = result
            .point
            .iter()
            .map(|v| Message::from_stacked(&ComplexMatrix::wrap(v.clone())).expect("stacked isometry"))
            .collect();
        let set = MessageSet::new(spec.clone(), messages).expect("profile respects the rank bound");
        if verify_message_set(&set, WITNESS_TOL).passed {
            stop = RestartStop::Converged;
            witness = Some(set);
        } else {
            stop = RestartStop::Degenerate;
        }
    }
    let record = RestartRecord { seed, final_cost: result.cost, iterations: result.iterations, stop };
    (record, witness)
}

/// Search for `profile.len()` messages with the given Kraus ranks.
///
/// Restarts run in parallel batches; the result is the lowest-index
/// successful restart, so it does not depend on the thread count.
pub fn search_feasible(
    d: usize,
    spec: &SchmidtSpectrum,
    profile: &RankProfile,
    cfg: &SearchConfig,
) -> Result<SearchOutcome> {
    check_inputs(d, spec, profile, cfg)?;
    let frozen = frozen_mask(profile, cfg);
    let layout = Layout::new(spec.lambdas(), profile.kappas(), &frozen);
    let batch = rayon::current_num_threads().max(1);
    let mut log = Vec::with_capacity(cfg.restarts);
    let mut best_cost = f64::INFINITY;
    let mut start = 0;
    while start < cfg.restarts {
        let end = (start + batch).min(cfg.restarts);
        let results: Vec<(RestartRecord, Option<MessageSet>)> = (start..end)
            .into_par_iter()
            .map(|r| restart(&layout, spec, profile, cfg, derive_seed(cfg.seed, &[r as u64])))
            .collect();
        for (record, witness) in results {
            best_cost = best_cost.min(record.final_cost);
            log.push(record);
            if let Some(w) = witness {
                return Ok(SearchOutcome {
                    verdict: Verdict::Feasible,
                    profile: profile.clone(),
                    best_cost,
                    witness: Some(w),
                    restart_log: log,
                });
            }
        }
        start = end;
    }
    Ok(SearchOutcome {
        verdict: Verdict::InfeasibleAfterRestarts,
        profile: profile.clone(),
        best_cost,
        witness: None,
        restart_log: log,
    })
}

/// Canonical profiles of length `n` with entries in `[1, max_kappa]` and
/// total at most `d²`, by total rank and then lexicographically.
pub fn enumerate_profiles(n: usize, d: usize, max_kappa: usize) -> Vec<RankProfile> {
    let bound = d * d;
    if n == 0 || n > bound || max_kappa == 0 {
        return Vec::new();
    }
    fn extend(prefix: &mut Vec<usize>, n: usize, max_kappa: usize, budget: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let lo = prefix.last().copied().unwrap_or(1);
        let remaining = n - prefix.len();
        for k in lo..=max_kappa {
            // the rest are at least k each
            if k * remaining > budget {
                break;
            }
            prefix.push(k);
            extend(prefix, n, max_kappa, budget - k, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    extend(&mut Vec::with_capacity(n), n, max_kappa, bound, &mut raw);
    raw.sort_by(|a, b| a.iter().sum::<usize>().cmp(&b.iter().sum::<usize>()).then_with(|| a.cmp(b)));
    raw.into_iter().map(RankProfile).collect()
}

/// Verdict for `n` messages at one spectrum.
#[derive(Clone, Debug)]
pub enum Decision {
    Feasible(SearchOutcome),
    /// Every allowed profile failed; one outcome per profile tried.
    Infeasible(Vec<SearchOutcome>),
    /// `n λ₀ > d`; no search was run.
    ExcludedByBound,
}

impl Decision {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Decision::Feasible(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Decision::Feasible(_) => "feasible",
            Decision::Infeasible(_) => "infeasible",
            Decision::ExcludedByBound => "excluded-by-bound",
        }
    }

    /// Lowest cost seen in the decisive search(es).
    pub fn best_cost(&self) -> Option<f64> {
        match self {
            Decision::Feasible(o) => Some(o.best_cost),
            Decision::Infeasible(os) => os.iter().map(|o| o.best_cost).reduce(f64::min),
            Decision::ExcludedByBound => None,
        }
    }

    pub fn witness(&self) -> Option<&MessageSet> {
        match self {
            Decision::Feasible(o) => o.witness.as_ref(),
            _ => None,
        }
    }
}

/// Profiles searched for `n` messages in `mode`.
pub fn mode_profiles(n: usize, d: usize, mode: Mode, cfg: &SearchConfig) -> Vec<RankProfile> {
    match mode {
        Mode::Unitary if n <= d * d => vec![RankProfile(vec![1; n])],
        Mode::Unitary => Vec::new(),
        Mode::General => enumerate_profiles(n, d, cfg.max_kappa),
    }
}

fn profile_seed(base: u64, n: usize, profile: &RankProfile) -> u64 {
    let mut labels = vec![0x5EA2_C4u64, n as u64];
    labels.extend(profile.kappas().iter().map(|&k| k as u64));
    derive_seed(base, &labels)
}

/// Decide whether `n` messages are possible at `spec` in `mode`. Profiles are
/// tried in [`enumerate_profiles`] order; the first feasible one wins.
pub fn decide(d: usize, spec: &SchmidtSpectrum, n: usize, mode: Mode, cfg: &SearchConfig) -> Result<Decision> {
    cfg.validate()?;
    if spec.dim() != d {
        return Err(Error::InvalidArgument(format!(
            "spectrum has {} coefficients but d = {d}",
            spec.dim()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("at least one message is required".into()));
    }
    if spec.excludes(n) {
        return Ok(Decision::ExcludedByBound);
    }
    let mut failures = Vec::new();
    for profile in mode_profiles(n, d, mode, cfg) {
        let outcome = search_feasible(d, spec, &profile, &cfg.with_seed(profile_seed(cfg.seed, n, &profile)))?;
        if outcome.verdict.is_feasible() {
            return Ok(Decision::Feasible(outcome));
        }
        failures.push(outcome);
    }
    Ok(Decision::Infeasible(failures))
}

#[derive(Clone, Debug)]
pub struct MaxMessages {
    pub max_n: usize,
    /// Decisions for each count searched, up to the first failure.
    pub per_n: Vec<(usize, Decision)>,
}

/// Largest `n` for which some allowed profile is feasible. Counts are tried in
/// increasing order and the scan stops at the first failure or bound exclusion.
pub fn max_messages(d: usize, spec: &SchmidtSpectrum, mode: Mode, cfg: &SearchConfig) -> Result<MaxMessages> {
    max_messages_above(d, spec, mode, cfg, 0)
}

/// As [`max_messages`], taking every `n <= known` as already shown feasible
/// (for example by a unitary-only scan when `mode` is general).
pub fn max_messages_above(
    d: usize,
    spec: &SchmidtSpectrum,
    mode: Mode,
    cfg: &SearchConfig,
    known: usize,
) -> Result<MaxMessages> {
    let mut per_n = Vec::new();
    let mut max_n = known.min(d * d);
    for n in max_n + 1..=d * d + 1 {
        let decision = if n > d * d { Decision::Infeasible(Vec::new()) } else { decide(d, spec, n, mode, cfg)? };
        let ok = decision.is_feasible();
        per_n.push((n, decision));
        if !ok {
            break;
        }
        max_n = n;
    }
    Ok(MaxMessages { max_n, per_n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{pauli_x, pauli_y, pauli_z, unitarity_defect};

    fn spec(l: &[f64]) -> SchmidtSpectrum {
        SchmidtSpectrum::new(l.to_vec()).unwrap()
    }

    #[test]
    fn cost_examples() {
        let s = spec(&[0.5, 0.5]);
        let paulis = MessageSet::from_unitaries(
            s.clone(),
            vec![ComplexMatrix::identity(2), pauli_x(), pauli_y(), pauli_z()],
        )
        .unwrap();
        assert!(orthogonality_cost(&paulis) < 1e-30);
        let twins = MessageSet::from_unitaries(s, vec![ComplexMatrix::identity(2); 2]).unwrap();
        assert!((orthogonality_cost(&twins) - 2.0).abs() < 1e-15);
        let s = spec(&[0.7, 0.3]);
        let pair = MessageSet::from_unitaries(s, vec![ComplexMatrix::identity(2), pauli_z()]).unwrap();
        assert!((orthogonality_cost(&pair) - 0.32).abs() < 1e-15);
    }

    #[test]
    fn profile_enumeration() {
        let p = enumerate_profiles(3, 2, 4);
        assert_eq!(p, vec![RankProfile(vec![1, 1, 1]), RankProfile(vec![1, 1, 2])]);
        let p = enumerate_profiles(9, 4, 2);
        assert_eq!(p.len(), 8);
        assert!(p[0].is_unitary());
        assert_eq!(p[7].kappas(), &[1, 1, 2, 2, 2, 2, 2, 2, 2]);
        assert!(p.windows(2).all(|w| w[0].total() < w[1].total()));
        assert!(enumerate_profiles(17, 4, 2).is_empty());
        assert_eq!(enumerate_profiles(16, 4, 3), vec![RankProfile(vec![1; 16])]);
    }

    #[test]
    fn profile_bound_rejected_before_search() {
        let s = spec(&[0.5, 0.5]);
        let p = RankProfile::new(vec![2, 2, 1]).unwrap();
        let err = search_feasible(2, &s, &p, &SearchConfig::default()).unwrap_err();
        assert_eq!(err, Error::RankBound { total: 5, bound: 4 });
    }

    #[test]
    fn finds_pauli_like_set_at_max_entanglement() {
        let s = spec(&[0.5, 0.5]);
        let out = search_feasible(2, &s, &RankProfile::unitary(4).unwrap(), &SearchConfig::default()).unwrap();
        assert!(out.verdict.is_feasible());
        let w = out.witness.unwrap();
        assert!(orthogonality_cost(&w) <= 1e-11);
        assert_eq!(w.messages()[0].kraus()[0], ComplexMatrix::identity(2));
        for m in w.messages() {
            assert!(unitarity_defect(&m.kraus()[0]) < 1e-12);
        }
    }

    #[test]
    fn search_is_deterministic() {
        let s = spec(&[0.45, 0.35, 0.2]);
        let cfg = SearchConfig { seed: 17, ..Default::default() };
        let p = RankProfile::unitary(5).unwrap();
        let a = search_feasible(3, &s, &p, &cfg).unwrap();
        let b = search_feasible(3, &s, &p, &cfg).unwrap();
        assert_eq!(a.restart_log, b.restart_log);
        assert_eq!(a.witness, b.witness);
    }

    #[test]
    fn replaying_a_restart_reproduces_it() {
        let s = spec(&[0.5, 0.3, 0.2]);
        let cfg = SearchConfig { seed: 3, ..Default::default() };
        let p = RankProfile::new(vec![1, 1, 1, 2]).unwrap();
        let out = search_feasible(3, &s, &p, &cfg).unwrap();
        let last = out.restart_log.last().unwrap();
        let (rec, w) = run_restart(3, &s, &p, &cfg, last.seed).unwrap();
        assert_eq!(&rec, last);
        assert_eq!(w, out.witness);
    }

    #[test]
    fn excluded_counts_skip_search() {
        let s = spec(&[0.7, 0.3]);
        let cfg = SearchConfig::default();
        assert!(matches!(decide(2, &s, 3, Mode::General, &cfg).unwrap(), Decision::ExcludedByBound));
    }
}
