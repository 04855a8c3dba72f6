//! Inner loop of the feasibility search.
//!
//! Each message is a `(κ d) x d` isometry `V` whose row blocks are its Kraus
//! operators, so completeness holds by construction. Messages move on the
//! complex Stiefel manifold; tangent vectors at `V` are written `Q E` with
//! `Q = [V | V⊥]` and `E = [Ω; C]`, `Ω` skew-Hermitian. The residuals are the
//! cross-message overlaps `Tr(K_s Λ K_t†)`, and the cost is the sum of their
//! squared moduli over ordered pairs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::qmat::{C64, I, ONE, ZERO};

const SQRT2: f64 = std::f64::consts::SQRT_2;
const FRAC_1_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Static description of a search problem.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub d: usize,
    pub lambdas: Vec<f64>,
    sqrt_l: Vec<f64>,
    pub kappas: Vec<usize>,
    pub frozen: Vec<bool>,
    /// (message, kraus index) per state.
    states: Vec<(usize, usize)>,
    /// Cross-message state pairs `s < t`.
    pairs: Vec<(usize, usize)>,
    /// Pairs touching each message, as (pair index, state of this message, other state, this is first).
    touching: Vec<Vec<(usize, usize, usize, bool)>>,
    param_offset: Vec<usize>,
    pub n_params: usize,
}

impl Layout {
    pub fn new(lambdas: &[f64], kappas: &[usize], frozen: &[bool]) -> Self {
        let d = lambdas.len();
        let states: Vec<(usize, usize)> = kappas
            .iter()
            .enumerate()
            .flat_map(|(j, &k)| (0..k).map(move |i| (j, i)))
            .collect();
        let mut pairs = Vec::new();
        let mut touching = vec![Vec::new(); kappas.len()];
        for s in 0..states.len() {
            for t in s + 1..states.len() {
                if states[s].0 != states[t].0 {
                    let p = pairs.len();
                    pairs.push((s, t));
                    touching[states[s].0].push((p, s, t, true));
                    touching[states[t].0].push((p, t, s, false));
                }
            }
        }
        let mut param_offset = Vec::with_capacity(kappas.len());
        let mut n = 0;
        for (j, &k) in kappas.iter().enumerate() {
            param_offset.push(n);
            if !frozen[j] {
                n += d * d * (2 * k - 1);
            }
        }
        Self {
            d,
            lambdas: lambdas.to_vec(),
            sqrt_l: lambdas.iter().map(|l| l.sqrt()).collect(),
            kappas: kappas.to_vec(),
            frozen: frozen.to_vec(),
            states,
            pairs,
            touching,
            param_offset,
            n_params: n,
        }
    }

    pub fn n_residuals(&self) -> usize {
        2 * self.pairs.len()
    }

    fn params_of(&self, j: usize) -> usize {
        if self.frozen[j] {
            0
        } else {
            self.d * self.d * (2 * self.kappas[j] - 1)
        }
    }

    /// Flattened `K √Λ` for every state.
    fn state_vectors(&self, point: &[DMatrix<C64>]) -> Vec<C64> {
        let d = self.d;
        let mut out = Vec::with_capacity(self.states.len() * d * d);
        for &(j, k) in &self.states {
            let v = &point[j];
            for a in 0..d {
                for b in 0..d {
                    out.push(v[(k * d + a, b)] * self.sqrt_l[b]);
                }
            }
        }
        out
    }

    /// Overlaps `g_p = Tr(K_s Λ K_t†)` for every cross pair.
    pub fn overlaps(&self, point: &[DMatrix<C64>]) -> Vec<C64> {
        let dd = self.d * self.d;
        let phi = self.state_vectors(point);
        self.pairs
            .iter()
            .map(|&(s, t)| {
                let (x, y) = (&phi[s * dd..(s + 1) * dd], &phi[t * dd..(t + 1) * dd]);
                x.iter().zip(y).fold(ZERO, |acc, (a, b)| acc + a * b.conj())
            })
            .collect()
    }

    pub fn cost(&self, point: &[DMatrix<C64>]) -> f64 {
        2.0 * self.overlaps(point).iter().map(|g| g.norm_sqr()).sum::<f64>()
    }

    fn residuals(&self, overlaps: &[C64]) -> DVector<f64> {
        let mut r = DVector::zeros(2 * overlaps.len());
        for (p, g) in overlaps.iter().enumerate() {
            r[2 * p] = SQRT2 * g.re;
            r[2 * p + 1] = SQRT2 * g.im;
        }
        r
    }

    /// Euclidean gradient of the cost with respect to each stacked isometry
    /// (real inner product `Re Tr(A†B)`), frozen messages included.
    pub fn euclidean_gradient(&self, point: &[DMatrix<C64>]) -> Vec<DMatrix<C64>> {
        let d = self.d;
        let g = self.overlaps(point);
        let mut grads: Vec<DMatrix<C64>> =
            point.iter().map(|v| DMatrix::zeros(v.nrows(), v.ncols())).collect();
        for (j, touch) in self.touching.iter().enumerate() {
            for &(p, s, t, first) in touch {
                // G_s = 4 Σ_t g_st K_t Λ, with g_st = g_p or its conjugate.
                let gst = if first { g[p] } else { g[p].conj() };
                let (_, ks) = self.states[s];
                let (jt, kt) = self.states[t];
                let vt = &point[jt];
                for a in 0..d {
                    for b in 0..d {
                        grads[j][(ks * d + a, b)] +=
                            4.0 * gst * vt[(kt * d + a, b)] * self.lambdas[b];
                    }
                }
            }
        }
        grads
    }

    /// Real Jacobian of the residual vector in tangent coordinates.
    fn jacobian(&self, point: &[DMatrix<C64>], frames: &[DMatrix<C64>]) -> DMatrix<f64> {
        let d = self.d;
        let mut jac = DMatrix::zeros(self.n_residuals(), self.n_params);
        let mut f = DMatrix::<C64>::zeros(0, 0);
        for (j, touch) in self.touching.iter().enumerate() {
            if self.frozen[j] {
                continue;
            }
            let q = &frames[j];
            let kd = q.nrows();
            let off = self.param_offset[j];
            if f.nrows() != kd {
                f = DMatrix::zeros(kd, d);
            }
            for &(p, s, t, first) in touch {
                let (_, ks) = self.states[s];
                let (jt, kt) = self.states[t];
                let vt = &point[jt];
                // F = Qᵀ H, H holding λ_b conj(K_t[a, b]) in block ks.
                for qi in 0..kd {
                    for b in 0..d {
                        let mut acc = ZERO;
                        for a in 0..d {
                            acc += q[(ks * d + a, qi)] * vt[(kt * d + a, b)].conj();
                        }
                        f[(qi, b)] = acc * self.lambdas[b];
                    }
                }
                let mut col = off;
                let mut put = |dg: C64, col: &mut usize| {
                    let dg = if first { dg } else { dg.conj() };
                    jac[(2 * p, *col)] = SQRT2 * dg.re;
                    jac[(2 * p + 1, *col)] = SQRT2 * dg.im;
                    *col += 1;
                };
                for a in 0..d {
                    put(I * f[(a, a)], &mut col);
                }
                for a in 0..d {
                    for b in a + 1..d {
                        put((f[(a, b)] - f[(b, a)]) * FRAC_1_SQRT2, &mut col);
                        put(I * (f[(a, b)] + f[(b, a)]) * FRAC_1_SQRT2, &mut col);
                    }
                }
                for r in d..kd {
                    for c in 0..d {
                        put(f[(r, c)], &mut col);
                        put(I * f[(r, c)], &mut col);
                    }
                }
            }
        }
        jac
    }

    /// Tangent matrices `Q E` from a coordinate vector.
    fn tangent_from_coords(&self, coords: &DVector<f64>, frames: &[DMatrix<C64>]) -> Vec<Option<DMatrix<C64>>> {
        let d = self.d;
        (0..self.kappas.len())
            .map(|j| {
                if self.frozen[j] {
                    return None;
                }
                let q = &frames[j];
                let kd = q.nrows();
                let mut e = DMatrix::<C64>::zeros(kd, d);
                let mut i = self.param_offset[j];
                for a in 0..d {
                    e[(a, a)] = I * coords[i];
                    i += 1;
                }
                for a in 0..d {
                    for b in a + 1..d {
                        let (c1, c2) = (coords[i], coords[i + 1]);
                        i += 2;
                        e[(a, b)] += C64::new(c1, c2) * FRAC_1_SQRT2;
                        e[(b, a)] += C64::new(-c1, c2) * FRAC_1_SQRT2;
                    }
                }
                for r in d..kd {
                    for c in 0..d {
                        e[(r, c)] = C64::new(coords[i], coords[i + 1]);
                        i += 2;
                    }
                }
                debug_assert_eq!(i, self.param_offset[j] + self.params_of(j));
                Some(q * e)
            })
            .collect()
    }
}

/// Complete an isometry to a unitary `[V | V⊥]`.
pub(crate) fn complete_frame(v: &DMatrix<C64>) -> DMatrix<C64> {
    let (kd, d) = v.shape();
    let mut q = DMatrix::<C64>::zeros(kd, kd);
    q.view_mut((0, 0), (kd, d)).copy_from(v);
    let mut filled = d;
    let mut used = vec![false; kd];
    while filled < kd {
        // Project each unused basis vector against the current frame and keep
        // the one with the largest remainder.
        let mut best: Option<(usize, DVector<C64>, f64)> = None;
        for (e, &u) in used.iter().enumerate() {
            if u {
                continue;
            }
            let mut x = DVector::<C64>::zeros(kd);
            x[e] = ONE;
            for _ in 0..2 {
                for c in 0..filled {
                    let col = q.column(c);
                    let proj = col.dotc(&x);
                    x -= col * proj;
                }
            }
            let n = x.norm();
            if best.as_ref().is_none_or(|b| n > b.2) {
                best = Some((e, x, n));
            }
        }
        let (e, x, n) = best.expect("an unused basis vector remains");
        used[e] = true;
        q.column_mut(filled).copy_from(&(x / C64::new(n, 0.0)));
        filled += 1;
    }
    q
}

/// Polar factor of `m` (closest isometry in Frobenius norm).
pub(crate) fn polar(m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let svd = m.clone().svd(true, true);
    let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if !(smin > 1e-12 * smax.max(1.0)) || !smin.is_finite() {
        return Err(Error::RankDeficient(smin));
    }
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    Ok(u * vt)
}

/// Tangent-space projection `Z - V herm(V† Z)`.
pub(crate) fn project_tangent(v: &DMatrix<C64>, z: &DMatrix<C64>) -> DMatrix<C64> {
    let vz = v.ad_mul(z);
    let herm = (&vz + vz.adjoint()) * C64::new(0.5, 0.0);
    z - v * herm
}

fn retract_all(point: &[DMatrix<C64>], steps: &[Option<DMatrix<C64>>]) -> Result<Vec<DMatrix<C64>>> {
    point
        .iter()
        .zip(steps)
        .map(|(v, s)| match s {
            Some(s) => polar(&(v + s)),
            None => Ok(v.clone()),
        })
        .collect()
}

/// Which local optimizer drives each restart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    /// Levenberg–Marquardt steps in tangent coordinates, polar retraction.
    LevenbergMarquardt,
    /// Riemannian steepest descent with Armijo backtracking, polar retraction.
    SteepestDescent,
}

#[derive(Clone, Debug)]
pub(crate) struct LocalSettings {
    pub optimizer: Optimizer,
    pub success_tol: f64,
    pub polish_tol: f64,
    pub max_iterations: usize,
    pub stall_rel_decrease: f64,
    pub stall_window: usize,
    pub plateau_rel_decrease: f64,
    pub plateau_window: usize,
    pub initial_step: f64,
    pub shrink: f64,
    pub armijo: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Stop {
    Converged,
    Stalled,
    MaxIterations,
}

pub(crate) struct LocalResult {
    pub point: Vec<DMatrix<C64>>,
    pub cost: f64,
    pub iterations: usize,
    pub stop: Stop,
}

struct StallTracker {
    rel: f64,
    window: usize,
    count: usize,
}

impl StallTracker {
    fn record(&mut self, before: f64, after: f64) -> bool {
        let rel = if before > 0.0 { (before - after) / before } else { 0.0 };
        if rel < self.rel {
            self.count += 1;
        } else {
            self.count = 0;
        }
        self.count >= self.window
    }
}

/// Coarse progress check: over every `window` iterations the cost must drop
/// by at least the fraction `rel`. A window of 0 disables it.
struct PlateauTracker {
    rel: f64,
    window: usize,
    checkpoint: (usize, f64),
}

impl PlateauTracker {
    fn new(cfg: &LocalSettings, cost: f64) -> Self {
        Self { rel: cfg.plateau_rel_decrease, window: cfg.plateau_window, checkpoint: (0, cost) }
    }

    fn stuck(&mut self, iterations: usize, cost: f64) -> bool {
        if self.window == 0 || iterations < self.checkpoint.0 + self.window {
            return false;
        }
        let stuck = cost > self.checkpoint.1 * (1.0 - self.rel);
        self.checkpoint = (iterations, cost);
        stuck
    }
}

/// Minimize from `start` until the cost reaches `success_tol` (then polish),
/// stalls, or hits the iteration cap.
pub(crate) fn minimize(layout: &Layout, start: Vec<DMatrix<C64>>, cfg: &LocalSettings) -> LocalResult {
    match cfg.optimizer {
        Optimizer::LevenbergMarquardt => levenberg_marquardt(layout, start, cfg),
        Optimizer::SteepestDescent => steepest_descent(layout, start, cfg),
    }
}

fn solve_damped(jac: &DMatrix<f64>, r: &DVector<f64>, mu: f64) -> Option<DVector<f64>> {
    let (m, n) = jac.shape();
    if n == 0 {
        return Some(DVector::zeros(0));
    }
    if m >= n {
        let mut a = jac.tr_mul(jac);
        for i in 0..n {
            a[(i, i)] += mu;
        }
        let g = jac.tr_mul(r);
        a.cholesky().map(|c| -c.solve(&g))
    } else {
        let mut b = jac * jac.transpose();
        for i in 0..m {
            b[(i, i)] += mu;
        }
        b.cholesky().map(|c| -(jac.tr_mul(&c.solve(r))))
    }
}

fn levenberg_marquardt(layout: &Layout, start: Vec<DMatrix<C64>>, cfg: &LocalSettings) -> LocalResult {
    let mut point = start;
    let mut overlaps = layout.overlaps(&point);
    let mut cost = 2.0 * overlaps.iter().map(|g| g.norm_sqr()).sum::<f64>();
    let mut stall = StallTracker { rel: cfg.stall_rel_decrease, window: cfg.stall_window, count: 0 };
    let mut iterations = 0;
    let mut mu = -1.0;
    let mut nu = 2.0;
    let mut polishing = cost <= cfg.success_tol;
    let mut polish_steps = 0;
    let mut plateau = PlateauTracker::new(cfg, cost);

    loop {
        if cost <= cfg.polish_tol || layout.n_params == 0 {
            return LocalResult { point, cost, iterations, stop: if cost <= cfg.success_tol { Stop::Converged } else { Stop::Stalled } };
        }
        if !polishing && plateau.stuck(iterations, cost) {
            return LocalResult { point, cost, iterations, stop: Stop::Stalled };
        }
        if polishing && polish_steps >= 50 {
            return LocalResult { point, cost, iterations, stop: Stop::Converged };
        }
        if iterations >= cfg.max_iterations {
            let stop = if cost <= cfg.success_tol { Stop::Converged } else { Stop::MaxIterations };
            return LocalResult { point, cost, iterations, stop };
        }
        let frames: Vec<DMatrix<C64>> = point.iter().map(complete_frame).collect();
        let jac = layout.jacobian(&point, &frames);
        let r = layout.residuals(&overlaps);
        if mu < 0.0 {
            let max_diag = (0..jac.ncols()).map(|c| jac.column(c).norm_squared()).fold(0.0, f64::max);
            mu = 1e-3 * max_diag.max(1e-12);
        }
        // Inner loop: adjust damping until a step is accepted.
        loop {
            iterations += 1;
            if polishing {
                polish_steps += 1;
            }
            let accepted = match solve_damped(&jac, &r, mu) {
                Some(delta) => {
                    let jd = &jac * &delta;
                    let predicted = -2.0 * delta.dot(&jac.tr_mul(&r)) - jd.norm_squared();
                    let steps = layout.tangent_from_coords(&delta, &frames);
                    match retract_all(&point, &steps) {
                        Ok(trial) => {
                            let trial_overlaps = layout.overlaps(&trial);
                            let trial_cost = 2.0 * trial_overlaps.iter().map(|g| g.norm_sqr()).sum::<f64>();
                            let rho = if predicted > 0.0 { (cost - trial_cost) / predicted } else { -1.0 };
                            if trial_cost < cost && rho > 1e-4 {
                                mu *= (1.0 / 3.0f64).max(1.0 - (2.0 * rho - 1.0).powi(3));
                                nu = 2.0;
                                Some((trial, trial_overlaps, trial_cost))
                            } else {
                                None
                            }
                        }
                        Err(_) => None,
                    }
                }
                None => None,
            };
            match accepted {
                Some((trial, trial_overlaps, trial_cost)) => {
                    let stalled = stall.record(cost, trial_cost);
                    point = trial;
                    overlaps = trial_overlaps;
                    cost = trial_cost;
                    if cost <= cfg.success_tol {
                        polishing = true;
                    }
                    if stalled {
                        let stop = if cost <= cfg.success_tol { Stop::Converged } else { Stop::Stalled };
                        return LocalResult { point, cost, iterations, stop };
                    }
                    break;
                }
                None => {
                    mu *= nu;
                    nu *= 2.0;
                    let stalled = stall.record(cost, cost);
                    if stalled || mu > 1e30 || iterations >= cfg.max_iterations || (polishing && polish_steps >= 50) {
                        let stop = if cost <= cfg.success_tol {
                            Stop::Converged
                        } else if iterations >= cfg.max_iterations {
                            Stop::MaxIterations
                        } else {
                            Stop::Stalled
                        };
                        return LocalResult { point, cost, iterations, stop };
                    }
                }
            }
        }
    }
}

fn steepest_descent(layout: &Layout, start: Vec<DMatrix<C64>>, cfg: &LocalSettings) -> LocalResult {
    let mut point = start;
    let mut cost = layout.cost(&point);
    let mut stall = StallTracker { rel: cfg.stall_rel_decrease, window: cfg.stall_window, count: 0 };
    let mut iterations = 0;
    let mut polish_steps = 0;
    let mut plateau = PlateauTracker::new(cfg, cost);
    loop {
        if cost <= cfg.polish_tol || layout.n_params == 0 {
            let stop = if cost <= cfg.success_tol { Stop::Converged } else { Stop::Stalled };
            return LocalResult { point, cost, iterations, stop };
        }
        if cost <= cfg.success_tol {
            polish_steps += 1;
            if polish_steps > 200 {
                return LocalResult { point, cost, iterations, stop: Stop::Converged };
            }
        }
        if iterations >= cfg.max_iterations {
            let stop = if cost <= cfg.success_tol { Stop::Converged } else { Stop::MaxIterations };
            return LocalResult { point, cost, iterations, stop };
        }
        if cost > cfg.success_tol && plateau.stuck(iterations, cost) {
            return LocalResult { point, cost, iterations, stop: Stop::Stalled };
        }
        iterations += 1;
        let egrad = layout.euclidean_gradient(&point);
        let rgrad: Vec<Option<DMatrix<C64>>> = point
            .iter()
            .zip(&egrad)
            .enumerate()
            .map(|(j, (v, g))| (!layout.frozen[j]).then(|| project_tangent(v, g)))
            .collect();
        let gnorm2: f64 = rgrad.iter().flatten().map(|g| g.norm_squared()).sum();
        let mut t = cfg.initial_step;
        let mut next = None;
        for _ in 0..60 {
            let steps: Vec<Option<DMatrix<C64>>> =
                rgrad.iter().map(|g| g.as_ref().map(|g| g * C64::new(-t, 0.0))).collect();
            if let Ok(trial) = retract_all(&point, &steps) {
                let c = layout.cost(&trial);
                if c <= cost - cfg.armijo * t * gnorm2 {
                    next = Some((trial, c));
                    break;
                }
            }
            t *= cfg.shrink;
        }
        match next {
            Some((trial, c)) => {
                let stalled = stall.record(cost, c);
                point = trial;
                cost = c;
                if stalled {
                    let stop = if cost <= cfg.success_tol { Stop::Converged } else { Stop::Stalled };
                    return LocalResult { point, cost, iterations, stop };
                }
            }
            None => {
                let stop = if cost <= cfg.success_tol { Stop::Converged } else { Stop::Stalled };
                return LocalResult { point, cost, iterations, stop };
            }
        }
    }
}
