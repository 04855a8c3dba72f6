//! Feasibility boundaries in Schmidt-coefficient space: edge E of the d = 4
//! simplex, affine paths with bisection, the d = 3 grid sweep and the
//! edge-E window scan.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{decide, max_messages_above, Decision, Mode, SearchConfig};
use crate::qmat::SchmidtSpectrum;
use crate::rng::derive_seed;

/// Desk-scale bisection resolution.
pub const DEFAULT_RESOLUTION: f64 = 5e-4;

/// A point on edge E, `λ = (λ₀, λ₀, λ₂, λ₂)` with `λ₂ = (1 − 2λ₀)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeEPoint {
    lambda0: f64,
}

impl EdgeEPoint {
    /// Points with `3/8 < λ₀ < 1/2`, where `0 < x < 1/3`.
    pub fn new(lambda0: f64) -> Result<Self> {
        if !(lambda0 > 0.375 && lambda0 < 0.5) {
            return Err(Error::Domain(format!("edge-E point needs 3/8 < λ₀ < 1/2, got {lambda0}")));
        }
        Ok(Self { lambda0 })
    }

    /// The point with ratio `x = λ₂/λ₀`.
    pub fn from_x(x: f64) -> Result<Self> {
        if !(0.0..1.0 / 3.0).contains(&x) || x == 0.0 {
            return Err(Error::Domain(format!("edge-E ratio needs 0 < x < 1/3, got {x}")));
        }
        Self::new(1.0 / (2.0 * (1.0 + x)))
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// `x = λ₂/λ₀ = (1 − 2λ₀)/(2λ₀)`.
    pub fn x(&self) -> f64 {
        (1.0 - 2.0 * self.lambda0) / (2.0 * self.lambda0)
    }

    pub fn spectrum(&self) -> SchmidtSpectrum {
        edge_e_spectrum(self.lambda0).expect("validated on construction")
    }
}

/// `(λ₀, λ₀, (1 − 2λ₀)/2, (1 − 2λ₀)/2)` for `1/4 ≤ λ₀ < 1/2`.
pub fn edge_e_spectrum(lambda0: f64) -> Result<SchmidtSpectrum> {
    if !(0.25..0.5).contains(&lambda0) {
        return Err(Error::Domain(format!("edge E needs 1/4 <= λ₀ < 1/2, got {lambda0}")));
    }
    let l2 = (1.0 - 2.0 * lambda0) / 2.0;
    SchmidtSpectrum::new(vec![lambda0, lambda0, l2, l2])
}

/// Spectrum at edge-E ratio `x = λ₂/λ₀`.
pub fn edge_e_spectrum_at_x(x: f64) -> Result<SchmidtSpectrum> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::Domain(format!("edge-E ratio needs 0 < x <= 1, got {x}")));
    }
    let l0 = 1.0 / (2.0 * (1.0 + x));
    let l2 = x * l0;
    SchmidtSpectrum::new(vec![l0, l0, l2, l2])
}

/// Affine path `p ↦ λ(p)` between two spectra, with parameter `p` running
/// from `p_start` to `p_end`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinePath {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub p_start: f64,
    pub p_end: f64,
}

impl LinePath {
    /// Path between two spectra, parameterized by `t ∈ [0, 1]`.
    pub fn new(start: &SchmidtSpectrum, end: &SchmidtSpectrum) -> Result<Self> {
        if start.dim() != end.dim() {
            return Err(Error::InvalidArgument(format!(
                "path endpoints have dimensions {} and {}",
                start.dim(),
                end.dim()
            )));
        }
        Ok(Self { start: start.lambdas().to_vec(), end: end.lambdas().to_vec(), p_start: 0.0, p_end: 1.0 })
    }

    /// Segment of edge E parameterized by `λ₀` itself.
    pub fn edge_e(from: f64, to: f64) -> Result<Self> {
        let a = edge_e_spectrum(from)?;
        let b = edge_e_spectrum(to)?;
        Ok(Self { p_start: from, p_end: to, ..Self::new(&a, &b)? })
    }

    pub fn dim(&self) -> usize {
        self.start.len()
    }

    pub fn spectrum_at(&self, p: f64) -> Result<SchmidtSpectrum> {
        let t = (p - self.p_start) / (self.p_end - self.p_start);
        let l: Vec<f64> = self.start.iter().zip(&self.end).map(|(a, b)| a + t * (b - a)).collect();
        SchmidtSpectrum::normalized(l, 1e-9)
    }
}

/// Configuration used at parameter value `p`: its seed depends only on the
/// base seed, `n` and the bits of `p`.
pub fn point_config(cfg: &SearchConfig, p: f64, n: usize) -> SearchConfig {
    cfg.with_seed(derive_seed(cfg.seed, &[p.to_bits(), n as u64]))
}

/// Verdict at one path parameter.
#[derive(Clone, Debug)]
pub struct BracketPoint {
    pub parameter: f64,
    pub lambdas: Vec<f64>,
    pub seed: u64,
    pub decision: Decision,
}

#[derive(Clone, Debug)]
pub struct BoundaryRecord {
    pub path: LinePath,
    pub n: usize,
    pub mode: Mode,
    /// Midpoint of the final bracket.
    pub location: f64,
    pub resolution: f64,
    pub feasible: BracketPoint,
    pub infeasible: BracketPoint,
    /// Every point evaluated, in evaluation order.
    pub trail: Vec<TrailPoint>,
}

/// One evaluated point of a bisection.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrailPoint {
    pub parameter: f64,
    pub lambdas: Vec<f64>,
    pub verdict: &'static str,
    pub best_cost: Option<f64>,
    pub seed: u64,
}

impl From<&BracketPoint> for TrailPoint {
    fn from(p: &BracketPoint) -> Self {
        Self {
            parameter: p.parameter,
            lambdas: p.lambdas.clone(),
            verdict: p.decision.label(),
            best_cost: p.decision.best_cost(),
            seed: p.seed,
        }
    }
}

impl BoundaryRecord {
    /// Half-width of the final bracket.
    pub fn half_width(&self) -> f64 {
        (self.feasible.parameter - self.infeasible.parameter).abs() / 2.0
    }
}

fn evaluate(path: &LinePath, p: f64, n: usize, mode: Mode, cfg: &SearchConfig) -> Result<BracketPoint> {
    let spec = path.spectrum_at(p)?;
    let point_cfg = point_config(cfg, p, n);
    let decision = decide(path.dim(), &spec, n, mode, &point_cfg)?;
    Ok(BracketPoint { parameter: p, lambdas: spec.lambdas().to_vec(), seed: point_cfg.seed, decision })
}

/// Bisect the feasibility transition for `n` messages along `path` until the
/// bracket is no wider than `resolution`.
pub fn bisect_boundary(
    path: &LinePath,
    n: usize,
    mode: Mode,
    resolution: f64,
    cfg: &SearchConfig,
) -> Result<BoundaryRecord> {
    if !(resolution > 0.0) {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let (a, b) = rayon::join(
        || evaluate(path, path.p_start, n, mode, cfg),
        || evaluate(path, path.p_end, n, mode, cfg),
    );
    let (a, b) = (a?, b?);
    let mut trail = vec![TrailPoint::from(&a), TrailPoint::from(&b)];
    if a.decision.is_feasible() == b.decision.is_feasible() {
        return Err(Error::NoTransition("same verdict at both path endpoints"));
    }
    let (mut feasible, mut infeasible) = if a.decision.is_feasible() { (a, b) } else { (b, a) };
    while (feasible.parameter - infeasible.parameter).abs() > resolution {
        let mid = 0.5 * (feasible.parameter + infeasible.parameter);
        let point = evaluate(path, mid, n, mode, cfg)?;
        trail.push(TrailPoint::from(&point));
        if point.decision.is_feasible() {
            feasible = point;
        } else {
            infeasible = point;
        }
    }
    Ok(BoundaryRecord {
        path: path.clone(),
        n,
        mode,
        location: 0.5 * (feasible.parameter + infeasible.parameter),
        resolution,
        feasible,
        infeasible,
        trail,
    })
}

/// Re-run the decision stored for a bracket point.
pub fn replay_bracket(record: &BoundaryRecord, point: &BracketPoint, cfg: &SearchConfig) -> Result<Decision> {
    let spec = record.path.spectrum_at(point.parameter)?;
    decide(record.path.dim(), &spec, record.n, record.mode, &cfg.with_seed(point.seed))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambdas: Vec<f64>,
    pub max_n: usize,
    /// Seed used for the point.
    pub seed: u64,
    /// Lowest cost of the failing count, if a search ran.
    pub failing_cost: Option<f64>,
    /// Verdict label of the first failing count.
    pub failing_verdict: &'static str,
}

/// Grid of ordered d = 3 spectra with entries that are positive multiples
/// of `step`, lexicographically by `(λ₀, λ₁)` descending.
pub fn simplex_grid(step: f64) -> Result<Vec<[f64; 3]>> {
    let m = (1.0 / step).round();
    if !(step > 0.0) || (m * step - 1.0).abs() > 1e-9 || m < 3.0 {
        return Err(Error::InvalidArgument(format!("grid step {step} must divide 1 into at least 3 parts")));
    }
    let m = m as usize;
    let mut out = Vec::new();
    for a in (1..=m).rev() {
        for b in (1..=a.min(m - a)).rev() {
            let c = m - a - b;
            if c >= 1 && c <= b {
                out.push([a as f64 / m as f64, b as f64 / m as f64, c as f64 / m as f64]);
            }
        }
    }
    Ok(out)
}

fn sweep_point(lambdas: &[f64], mode: Mode, known: usize, cfg: &SearchConfig, labels: &[u64]) -> Result<SweepRow> {
    let spec = SchmidtSpectrum::new(lambdas.to_vec())?;
    let seed = derive_seed(cfg.seed, labels);
    let result = max_messages_above(spec.dim(), &spec, mode, &cfg.with_seed(seed), known)?;
    let last = result.per_n.last().map(|(_, d)| d);
    Ok(SweepRow {
        lambdas: lambdas.to_vec(),
        max_n: result.max_n,
        seed,
        failing_cost: last.and_then(Decision::best_cost),
        failing_verdict: last.map(Decision::label).unwrap_or("none"),
    })
}

fn grid_labels(lambdas: &[f64], step: f64) -> Vec<u64> {
    lambdas.iter().map(|l| (l / step).round() as u64).collect()
}

/// Maximum message count at every point of the d = 3 grid.
pub fn sweep_simplex(step: f64, mode: Mode, cfg: &SearchConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    simplex_grid(step)?
        .par_iter()
        .map(|l| sweep_point(l, mode, 0, cfg, &grid_labels(l, step)))
        .collect()
}

/// Unitary-only and general tables over the same grid. The general scan
/// starts above the unitary maximum, since every unitary set is a general one.
pub fn sweep_simplex_both(step: f64, cfg: &SearchConfig) -> Result<(Vec<SweepRow>, Vec<SweepRow>)> {
    cfg.validate()?;
    let rows: Vec<(SweepRow, SweepRow)> = simplex_grid(step)?
        .par_iter()
        .map(|l| {
            let labels = grid_labels(l, step);
            let u = sweep_point(l, Mode::Unitary, 0, cfg, &labels)?;
            let g = sweep_point(l, Mode::General, u.max_n, cfg, &labels)?;
            Ok((u, g))
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().unzip())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowRow {
    pub lambda0: f64,
    pub max_unitary: usize,
    pub max_general: usize,
    pub seed: u64,
}

/// Maximum unitary and general message counts at edge-E points.
pub fn window_scan(lambda0s: &[f64], cfg: &SearchConfig) -> Result<Vec<WindowRow>> {
    cfg.validate()?;
    lambda0s
        .par_iter()
        .map(|&l0| {
            let spec = edge_e_spectrum(l0)?;
            let seed = derive_seed(cfg.seed, &[l0.to_bits()]);
            let point_cfg = cfg.with_seed(seed);
            let u = max_messages_above(4, &spec, Mode::Unitary, &point_cfg, 0)?;
            let g = max_messages_above(4, &spec, Mode::General, &point_cfg, u.max_n)?;
            Ok(WindowRow { lambda0: l0, max_unitary: u.max_n, max_general: g.max_n, seed })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_e_examples() {
        assert_eq!(edge_e_spectrum(0.4).unwrap().lambdas(), &[0.4, 0.4, 0.09999999999999998, 0.09999999999999998]);
        assert!(edge_e_spectrum(0.5).is_err());
        assert!(edge_e_spectrum(0.2).is_err());
        let p = EdgeEPoint::new(0.375 + 1e-12).unwrap();
        assert!((p.x() - 1.0 / 3.0).abs() < 1e-10);
        let s = edge_e_spectrum(0.375).unwrap();
        assert_eq!(s.lambdas(), &[0.375, 0.375, 0.125, 0.125]);
        assert!(EdgeEPoint::new(0.375).is_err());
        let q = EdgeEPoint::from_x(0.25).unwrap();
        assert!((q.lambda0() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn edge_path_interpolates_lambda0() {
        let path = LinePath::edge_e(0.38, 0.42).unwrap();
        let s = path.spectrum_at(0.401).unwrap();
        let e = edge_e_spectrum(0.401).unwrap();
        for (a, b) in s.lambdas().iter().zip(e.lambdas()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn grid_is_ordered_and_normalized() {
        let g = simplex_grid(0.05).unwrap();
        assert_eq!(g.len(), 33);
        assert_eq!(g[0], [0.9, 0.05, 0.05]);
        for l in &g {
            assert!(l[0] >= l[1] && l[1] >= l[2] && l[2] > 0.0);
            assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(simplex_grid(0.3).is_err());
    }

    #[test]
    fn bound_wall_is_found_on_qubit_line() {
        // d = 2: three messages need λ₀ <= 2/3 by the counting bound, but the
        // true wall sits at the maximally entangled point.
        let a = SchmidtSpectrum::new(vec![0.5, 0.5]).unwrap();
        let b = SchmidtSpectrum::new(vec![0.6, 0.4]).unwrap();
        let path = LinePath::new(&a, &b).unwrap();
        let cfg = SearchConfig { restarts: 4, ..Default::default() };
        let r = bisect_boundary(&path, 3, Mode::Unitary, 0.1, &cfg).unwrap();
        assert!(r.feasible.decision.is_feasible());
        assert!(!r.infeasible.decision.is_feasible());
        assert!(r.half_width() <= 0.05);
        assert!(r.location < 0.1);
    }

    #[test]
    fn no_transition_is_an_error() {
        let a = SchmidtSpectrum::new(vec![0.5, 0.5]).unwrap();
        let b = SchmidtSpectrum::new(vec![0.6, 0.4]).unwrap();
        let path = LinePath::new(&a, &b).unwrap();
        let cfg = SearchConfig { restarts: 2, ..Default::default() };
        assert!(matches!(bisect_boundary(&path, 2, Mode::Unitary, 0.1, &cfg), Err(Error::NoTransition(_))));
    }
}
