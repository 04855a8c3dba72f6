//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! `cargo test --test acceptance -- 3 5` runs only criteria 3 and 5.

use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use dense_coding::analytic::{
    build_block_set, build_five_plus_five, build_ninth_and_tenth, build_u_family, detect_pairing, extend_u_family,
    ninth_feasibility_certificate, qubit_no_go, solve_ninth_params, Dressings, LAMBDA_STAR,
};
use dense_coding::feasibility::{
    cost_gradient, decide, enumerate_profiles, euclidean_gradient, orthogonality_cost, refine_unitary_witness,
    retract, search_feasible, Decision, Mode, RankProfile, RefineSettings, SearchConfig,
};
use dense_coding::phasemap::{bisect_boundary, edge_e_spectrum, edge_e_spectrum_at_x, sweep_simplex_both, LinePath};
use dense_coding::protocol::{build_decoder, simulate_many, verify_message_set};
use dense_coding::qmat::{
    completeness_defect, haar_isometry, haar_unitary, lambda_inner, BlockView, ComplexMatrix, Message, MessageSet,
    SchmidtSpectrum, C64,
};
use dense_coding::rng::{derive_seed, seeded, Rng as SeededRng};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e(err: dense_coding::Error) -> String {
    err.to_string()
}

/// Restart budget behind every "infeasible" verdict here.
const RESTARTS: usize = 50;

fn config(seed: u64) -> SearchConfig {
    SearchConfig { restarts: RESTARTS, seed, ..SearchConfig::default() }
}

fn spectrum(l: &[f64]) -> SchmidtSpectrum {
    SchmidtSpectrum::new(l.to_vec()).expect("valid spectrum")
}

fn criterion_1() -> Check {
    let mut notes = Vec::new();
    for l0 in [0.55, 0.7, 0.9] {
        let spec = spectrum(&[l0, 1.0 - l0]);
        let profiles = enumerate_profiles(3, 2, 4);
        ensure(profiles.len() == 2, || format!("expected profiles 1,1,1 and 1,1,2, got {profiles:?}"))?;
        for p in profiles {
            let o = search_feasible(2, &spec, &p, &config(11)).map_err(e)?;
            ensure(!o.verdict.is_feasible(), || format!("λ₀={l0}: profile {:?} found feasible", p.kappas()))?;
            ensure(o.restart_log.len() == RESTARTS, || "restart budget not exhausted".into())?;
            notes.push(format!("{l0}/{:?} best {:.2e}", p.kappas(), o.best_cost));
        }
        let gap = qubit_no_go(l0).map_err(e)?.gap;
        ensure(gap > 0.0, || format!("gap {gap} at λ₀={l0}"))?;
    }
    let o = search_feasible(2, &spectrum(&[0.5, 0.5]), &RankProfile::unitary(4).map_err(e)?, &config(11)).map_err(e)?;
    ensure(o.verdict.is_feasible() && o.best_cost <= 1e-11, || format!("4 unitaries at λ₀=0.5: cost {:.3e}", o.best_cost))?;
    Ok(format!("all 3-message profiles infeasible ({}); 4 unitaries at 0.5 cost {:.1e}", notes.join(", "), o.best_cost))
}

fn criterion_2() -> Check {
    let res = 5e-4;
    let ten = bisect_boundary(&LinePath::edge_e(0.39, 0.41).map_err(e)?, 10, Mode::Unitary, res, &config(2)).map_err(e)?;
    let nine = bisect_boundary(&LinePath::edge_e(0.40, 0.41).map_err(e)?, 9, Mode::General, res, &config(2)).map_err(e)?;
    let line = format!(
        "N=10 unitary at {:.5} (bracket {:.5}..{:.5}), N=9 general at {:.5} (bracket {:.5}..{:.5})",
        ten.location,
        ten.feasible.parameter,
        ten.infeasible.parameter,
        nine.location,
        nine.feasible.parameter,
        nine.infeasible.parameter
    );
    ensure((ten.location - 0.400).abs() <= res, || line.clone())?;
    ensure((nine.location - 0.4025).abs() <= res, || line.clone())?;
    Ok(line)
}

fn check_witness(set: &MessageSet) -> Result<String, String> {
    let v = verify_message_set(set, 1e-10);
    ensure(v.passed, || format!("witness fails verification: {:?}", v.worst))?;
    let decoder = build_decoder(set, 1e-10).map_err(e)?;
    let report = simulate_many(set, &decoder, 10_000, 5).map_err(e)?;
    ensure(report.accuracy() == 1.0, || format!("decoding accuracy {}", report.accuracy()))?;
    Ok(format!("violation {:.1e}, ranks {:?}, 10⁴ trials 100%", v.max_violation, decoder.ranks()))
}

fn criterion_3() -> Check {
    let at = |l0: f64, n: usize, mode: Mode| -> Result<Decision, String> {
        decide(4, &edge_e_spectrum(l0).map_err(e)?, n, mode, &config(3)).map_err(e)
    };
    let u9 = at(0.401, 9, Mode::Unitary)?;
    ensure(matches!(u9, Decision::Infeasible(_)), || format!("9 unitaries at 0.401: {}", u9.label()))?;
    let g9 = at(0.401, 9, Mode::General)?;
    let Decision::Feasible(o) = &g9 else { return Err(format!("9 general at 0.401: {}", g9.label())) };
    ensure(o.best_cost <= 1e-11, || format!("cost {:.3e}", o.best_cost))?;
    let w = check_witness(o.witness.as_ref().expect("witness"))?;
    let u10 = at(0.399, 10, Mode::Unitary)?;
    ensure(u10.is_feasible(), || "10 unitaries at 0.399 not found".into())?;
    let g9b = at(0.41, 9, Mode::General)?;
    ensure(matches!(g9b, Decision::Infeasible(_)), || format!("9 general at 0.41: {}", g9b.label()))?;
    let u8 = at(0.41, 8, Mode::Unitary)?;
    ensure(u8.is_feasible(), || "8 unitaries at 0.41 not found".into())?;
    Ok(format!(
        "0.401: 9 unitary infeasible (best {:.2e}), 9 general feasible with profile {:?} ({w}); 0.399: 10 unitary; 0.41: 9 general infeasible (best {:.2e}), 8 unitary",
        u9.best_cost().unwrap_or(f64::NAN),
        o.profile.kappas(),
        g9b.best_cost().unwrap_or(f64::NAN)
    ))
}

fn criterion_4() -> Check {
    let (u, g) = sweep_simplex_both(0.05, &config(4)).map_err(e)?;
    ensure(u.len() == g.len() && !u.is_empty(), || "tables differ in size".into())?;
    for (a, b) in u.iter().zip(&g) {
        ensure(a.max_n == b.max_n, || format!("λ={:?}: unitary {} vs general {}", a.lambdas, a.max_n, b.max_n))?;
        let bound = (3.0 / a.lambdas[0] + 1e-9).floor() as usize;
        ensure(a.max_n <= bound && b.max_n <= bound, || format!("λ={:?} exceeds bound {bound}", a.lambdas))?;
    }
    let hist = (1..=9).map(|n| u.iter().filter(|r| r.max_n == n).count()).collect::<Vec<_>>();
    Ok(format!("{} grid points, tables identical, counts by max N 1..9: {hist:?}", u.len()))
}

fn criterion_5() -> Check {
    let grid: Vec<f64> = (1..=25).map(|i| 0.05 + 0.28 * i as f64 / 26.0).collect();
    let mut rng = seeded(55);
    for &x in &grid {
        for dressings in [Dressings::identity(), random_dressings(&mut rng)?] {
            let bs = build_block_set(x, dressings, (0.3, -1.1)).map_err(e)?;
            let v = verify_message_set(&bs.message_set(), 1e-12);
            ensure(v.passed, || format!("block set at x={x}: {:?}", v.worst))?;
        }
        let c = ninth_feasibility_certificate(x).map_err(e)?;
        ensure(c.feasible == (x >= 0.25), || format!("certificate at x={x}: slack {}", c.slack))?;
    }
    let c = ninth_feasibility_certificate(0.25).map_err(e)?;
    ensure(c.feasible && c.slack == 0.0, || format!("x=1/4 slack {}", c.slack))?;
    let mut built = Vec::new();
    for x in [0.25, 0.26, 0.30] {
        let bs = build_block_set(x, Dressings::identity(), (0.7, 0.7)).map_err(e)?;
        let total = (1.0 - 3.0 * x) / (x * x);
        let params = solve_ninth_params(&bs, total / 2.0, 0.4).map_err(e)?;
        let nt = build_ninth_and_tenth(&bs, &params).map_err(e)?;
        let v = verify_message_set(&nt.set, 1e-12);
        ensure(v.passed && nt.set.len() == 10, || format!("ten unitaries at x={x}: {:?}", v.worst))?;
        built.push(format!("{x}: {:.1e}", v.max_violation));
    }
    let reference = {
        let bs = build_block_set(0.26, Dressings::identity(), (0.7, 0.7)).map_err(e)?;
        solve_ninth_params(&bs, 1.0, 0.0).map_err(e)?
    };
    for x in [0.20, 0.24] {
        let bs = build_block_set(x, Dressings::identity(), (0.7, 0.7)).map_err(e)?;
        ensure(solve_ninth_params(&bs, 1.0, 0.0).is_err(), || format!("parameters solved at x={x}"))?;
        let r = build_ninth_and_tenth(&bs, &reference);
        ensure(matches!(r, Err(dense_coding::Error::CertificateInfeasible { .. })), || format!("built at x={x}"))?;
    }
    Ok(format!("25 block sets verify at 1e-12, certificate signs match, ten-unitary sets ({}), refusals at 0.20 and 0.24", built.join(", ")))
}

fn random_dressings(rng: &mut SeededRng) -> Result<Dressings, String> {
    let mut draw = || haar_unitary(2, rng).map_err(e);
    Ok(Dressings { a: draw()?, b: draw()?, b1: draw()?, b2: draw()? })
}

fn criterion_6() -> Check {
    let spec = spectrum(&LAMBDA_STAR);
    let profile = RankProfile::unitary(10).map_err(e)?;
    let mut worst = 0.0f64;
    let mut frames = Vec::new();
    let mut matching = 0;
    for seed in 0..10u64 {
        let cfg = SearchConfig { seed: derive_seed(0xC0, &[seed]), restarts: 20, ..SearchConfig::default() };
        let o = search_feasible(4, &spec, &profile, &cfg).map_err(e)?;
        let w = o.witness.ok_or_else(|| format!("seed {seed}: no witness"))?;
        let refined = refine_unitary_witness(&w, &RefineSettings::default()).map_err(e)?;
        let r = detect_pairing(&refined.set, 1e-8).map_err(e)?;
        ensure(r.conforms && r.max_residual <= 1e-8, || format!("seed {seed}: {r}"))?;
        ensure(r.block_diagonal == 5 && r.zero_diagonal == 5, || format!("seed {seed}: {r}"))?;
        worst = worst.max(r.max_residual);
        frames.push(r.frame.map_or("given".to_string(), |m| m.to_string()));
        matching += r.families_match as usize;
    }
    Ok(format!(
        "10/10 witnesses conform 5+5, max residual {worst:.1e}, identity frames [{}], {matching}/10 with equal families",
        frames.join(",")
    ))
}

fn random_matrix(rows: usize, cols: usize, rng: &mut SeededRng) -> ComplexMatrix {
    let entries = (0..rows * cols)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    ComplexMatrix::new(rows, cols, entries).expect("shape")
}

fn random_spectrum(d: usize, rng: &mut SeededRng) -> SchmidtSpectrum {
    let mut l: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 0.05).collect();
    l.sort_by(|a, b| b.total_cmp(a));
    let s: f64 = l.iter().sum();
    SchmidtSpectrum::normalized(l.iter().map(|x| x / s).collect(), 1e-9).expect("valid")
}

fn random_set(spec: &SchmidtSpectrum, kappas: &[usize], rng: &mut SeededRng) -> MessageSet {
    let d = spec.dim();
    let msgs = kappas
        .iter()
        .map(|&k| Message::from_stacked(&haar_isometry(k * d, d, rng).expect("shape")).expect("isometry"))
        .collect();
    MessageSet::new(spec.clone(), msgs).expect("valid set")
}

fn stacked_set(spec: &SchmidtSpectrum, stacks: &[ComplexMatrix]) -> MessageSet {
    MessageSet::new(spec.clone(), stacks.iter().map(|v| Message::from_stacked(v).expect("stack")).collect())
        .expect("valid set")
}

fn re_inner(a: &[ComplexMatrix], b: &[ComplexMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (&x.adjoint() * y).trace().re).sum()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

/// Gradients against central differences, Euclidean and along the manifold.
fn gradient_checks(rng: &mut SeededRng) -> Result<usize, String> {
    let cases: [(usize, &[usize]); 4] = [(2, &[1, 1, 1]), (3, &[1, 2, 1, 1]), (4, &[1, 1, 2]), (4, &[2, 2, 1, 1, 1])];
    let h = 1e-6;
    let mut points = 0;
    for (d, kappas) in cases {
        for _ in 0..100 {
            let spec = random_spectrum(d, rng);
            let set = random_set(&spec, kappas, rng);
            let stacks: Vec<ComplexMatrix> = set.messages().iter().map(Message::stacked).collect();
            let dirs: Vec<ComplexMatrix> = stacks.iter().map(|v| random_matrix(v.rows(), d, rng)).collect();
            let shifted = |t: f64| -> Vec<ComplexMatrix> {
                stacks.iter().zip(&dirs).map(|(v, e)| v + &e.scale(C64::new(t, 0.0))).collect()
            };
            let fd = (orthogonality_cost(&stacked_set(&spec, &shifted(h)))
                - orthogonality_cost(&stacked_set(&spec, &shifted(-h))))
                / (2.0 * h);
            let an = re_inner(&euclidean_gradient(&set), &dirs);
            ensure(close(fd, an, 1e-6), || format!("Euclidean gradient d={d} {kappas:?}: {an} vs {fd}"))?;

            let tangent: Vec<ComplexMatrix> = stacks
                .iter()
                .zip(&dirs)
                .map(|(v, z)| dense_coding::feasibility::project_tangent(v, z).expect("shape"))
                .collect();
            let along = |t: f64| -> f64 {
                let step: Vec<ComplexMatrix> = tangent.iter().map(|x| x.scale(C64::new(t, 0.0))).collect();
                orthogonality_cost(&stacked_set(&spec, &retract(&stacks, &step).expect("retraction")))
            };
            // five-point stencil: the retraction's own rounding swamps a two-point difference
            let h = 1e-4;
            let fd = (8.0 * (along(h) - along(-h)) - (along(2.0 * h) - along(-2.0 * h))) / (12.0 * h);
            let an = re_inner(&cost_gradient(&set), &tangent);
            ensure(close(fd, an, 1e-6), || format!("Riemannian gradient d={d} {kappas:?}: {an} vs {fd}"))?;
            points += 1;
        }
    }
    Ok(points)
}

fn invariance_checks(rng: &mut SeededRng) -> Result<(), String> {
    for trial in 0..50 {
        let spec = spectrum(&[0.4, 0.4, 0.1, 0.1]);
        let spec = if trial % 2 == 0 { spec } else { random_spectrum(4, rng) };
        let set = random_set(&spec, &[1, 2, 1, 2, 1], rng);
        let base = orthogonality_cost(&set);
        let map = |f: &dyn Fn(&ComplexMatrix) -> ComplexMatrix| -> MessageSet {
            let msgs = set.messages().iter().map(|m| Message::new(m.kraus().iter().map(f).collect()).expect("ok")).collect();
            MessageSet::new(spec.clone(), msgs).expect("ok")
        };
        let v = haar_unitary(4, rng).map_err(e)?;
        let gauge = orthogonality_cost(&map(&|k| &v * k));
        ensure(close(base, gauge, 1e-12), || format!("gauge: {base} vs {gauge}"))?;

        let mut msgs = set.messages().to_vec();
        msgs.reverse();
        msgs.swap(0, 2);
        let perm = orthogonality_cost(&MessageSet::new(spec.clone(), msgs).map_err(e)?);
        ensure(close(base, perm, 1e-12), || format!("message permutation: {base} vs {perm}"))?;

        let msgs = set
            .messages()
            .iter()
            .map(|m| {
                let mut k = m.kraus().to_vec();
                k.reverse();
                Message::new(k).expect("ok")
            })
            .collect();
        let kperm = orthogonality_cost(&MessageSet::new(spec.clone(), msgs).map_err(e)?);
        ensure(close(base, kperm, 1e-12), || format!("Kraus permutation: {base} vs {kperm}"))?;

        if trial % 2 == 0 {
            let p = ComplexMatrix::from_real(4, 4, &[0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.])
                .map_err(e)?;
            let block = orthogonality_cost(&map(&|k| k * &p));
            ensure(close(base, block, 1e-12), || format!("equal-λ permutation: {base} vs {block}"))?;
        }

        let (k1, k2, kp) = (random_matrix(4, 4, rng), random_matrix(4, 4, rng), random_matrix(4, 4, rng));
        let (a, b) = (C64::new(rng.random(), rng.random()), C64::new(rng.random(), rng.random()));
        let lhs = lambda_inner(&(&k1.scale(a) + &k2.scale(b)), &kp, &spec).map_err(e)?;
        let rhs = a * lambda_inner(&k1, &kp, &spec).map_err(e)? + b * lambda_inner(&k2, &kp, &spec).map_err(e)?;
        ensure((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()), || format!("sesquilinearity: {lhs} vs {rhs}"))?;
        let g = lambda_inner(&(&v * &k1), &(&v * &kp), &spec).map_err(e)?;
        let h = lambda_inner(&k1, &kp, &spec).map_err(e)?;
        ensure((g - h).norm() <= 1e-12 * (1.0 + h.norm()), || format!("inner-product gauge: {g} vs {h}"))?;

        for m in set.messages() {
            let c = completeness_defect(m);
            ensure(c <= 1e-12, || format!("Haar isometry completeness defect {c:e}"))?;
        }
    }
    Ok(())
}

fn block_checks(rng: &mut SeededRng) -> Result<(), String> {
    for d in [2usize, 4, 6] {
        let h = d / 2;
        for _ in 0..50 {
            let spec = random_spectrum(d, rng);
            let z = ComplexMatrix::zeros(h, h);
            let diag = BlockView::from_blocks(random_matrix(h, h, rng), z.clone(), z.clone(), random_matrix(h, h, rng))
                .map_err(e)?
                .assemble();
            let anti = BlockView::from_blocks(z.clone(), random_matrix(h, h, rng), random_matrix(h, h, rng), z)
                .map_err(e)?
                .assemble();
            let g = lambda_inner(&diag, &anti, &spec).map_err(e)?.norm();
            ensure(g <= 1e-12, || format!("block orthogonality d={d}: {g:e}"))?;
        }
    }
    Ok(())
}

fn analytic_checks() -> Result<(), String> {
    for i in 0..50 {
        let x = 0.33 * i as f64 / 50.0;
        let f = build_u_family(x, 0.1 * i as f64).map_err(e)?;
        let defect = f.u.iter().map(dense_coding::qmat::unitarity_defect).fold(0.0, f64::max);
        ensure(defect <= 1e-12 && f.pair_residual() <= 1e-12, || format!("u family at x={x}"))?;
    }
    for x in [0.22, 0.26, 0.3] {
        let bs = build_block_set(x, Dressings::identity(), (0.2, 0.9)).map_err(e)?;
        let l0 = edge_e_spectrum_at_x(x).map_err(e)?.lambdas()[0];
        let off = spectrum(&[l0 + 1e-3, l0 - 1e-3, x * l0, x * l0]);
        let off_set = MessageSet::from_unitaries(off, bs.members.clone()).map_err(e)?;
        let worst = verify_message_set(&off_set, 1e-12).max_cross_overlap;
        ensure(worst > 1e-6, || format!("block set at x={x} still orthogonal off edge E ({worst:e})"))?;
    }
    let u = haar_unitary(2, &mut seeded(9)).map_err(e)?;
    for x in [0.2, 0.24, 0.25, 0.26, 0.3] {
        let ok = extend_u_family(&build_u_family(x, 0.5).map_err(e)?).is_ok();
        ensure(ok == (x == 0.25), || format!("five-member family at x={x}: {ok}"))?;
        if x == 0.25 {
            let ten = build_five_plus_five(x, u.clone(), u.adjoint(), 0.5).map_err(e)?;
            let set = MessageSet::from_unitaries(edge_e_spectrum_at_x(x).map_err(e)?, ten).map_err(e)?;
            ensure(verify_message_set(&set, 1e-12).passed, || "5+5 set fails".into())?;
        }
    }
    for i in 0..30 {
        let x = 0.19 + 0.004 * i as f64;
        let bs = build_block_set(x, Dressings::identity(), (0.4, 0.4)).map_err(e)?;
        let total = (1.0 - 3.0 * x) / (x * x);
        let built = solve_ninth_params(&bs, total / 2.0, 0.0).and_then(|p| build_ninth_and_tenth(&bs, &p));
        let cert = ninth_feasibility_certificate(x).map_err(e)?;
        ensure(built.is_ok() == cert.feasible, || format!("certificate and construction disagree at x={x}"))?;
        if let Ok(nt) = built {
            ensure(verify_message_set(&nt.set, 1e-12).passed, || format!("W' fails at x={x}"))?;
        }
    }
    Ok(())
}

fn bound_checks() -> Result<usize, String> {
    let cases: [(&[f64], usize); 4] =
        [(&[0.6, 0.4], 4), (&[0.5, 0.3, 0.2], 7), (&[0.45, 0.3, 0.25], 7), (&[0.41, 0.41, 0.09, 0.09], 10)];
    let cfg = SearchConfig { restarts: 10, ..SearchConfig::default() };
    for (l, n) in cases {
        let spec = spectrum(l);
        let d = l.len();
        ensure(spec.excludes(n), || format!("{l:?} should exclude {n}"))?;
        ensure(matches!(decide(d, &spec, n, Mode::General, &cfg).map_err(e)?, Decision::ExcludedByBound), || {
            format!("{l:?} N={n} not excluded")
        })?;
        let o = search_feasible(d, &spec, &RankProfile::unitary(n).map_err(e)?, &cfg).map_err(e)?;
        ensure(!o.verdict.is_feasible(), || format!("search beat the bound at {l:?} N={n}"))?;
    }
    Ok(cases.len())
}

fn deletion_checks() -> Result<(), String> {
    let spec = SchmidtSpectrum::uniform(3).map_err(e)?;
    let o = search_feasible(3, &spec, &RankProfile::unitary(9).map_err(e)?, &SearchConfig::default()).map_err(e)?;
    let w = o.witness.ok_or("no 9-unitary witness at d=3")?;
    for j in 0..w.len() {
        ensure(verify_message_set(&w.without(j).map_err(e)?, 1e-10).passed, || format!("deleting {j} broke the set"))?;
    }
    let o = search_feasible(2, &spectrum(&[0.6, 0.4]), &RankProfile::new(vec![1, 2]).map_err(e)?, &SearchConfig::default())
        .map_err(e)?;
    let w = o.witness.ok_or("no 1,2 witness")?;
    for j in 0..2 {
        ensure(verify_message_set(&w.without(j).map_err(e)?, 1e-10).passed, || format!("deleting {j} broke the set"))?;
    }
    Ok(())
}

fn criterion_7() -> Check {
    let mut rng = seeded(77);
    let points = gradient_checks(&mut rng)?;
    invariance_checks(&mut rng)?;
    block_checks(&mut rng)?;
    analytic_checks()?;
    let bounds = bound_checks()?;
    deletion_checks()?;
    Ok(format!(
        "gradients at {points} points (4 cases x 100), invariances, block orthogonality, analytic invariants, {bounds} bound cases, deletion"
    ))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Check); 7] = [
        (1, "two-qubit no-go", criterion_1),
        (2, "edge-E walls", criterion_2),
        (3, "non-optimality window", criterion_3),
        (4, "d=3 coincidence", criterion_4),
        (5, "analytic certificates", criterion_5),
        (6, "pairing of Λ* witnesses", criterion_6),
        (7, "property suites", criterion_7),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, f) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let result = f();
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {n} ({name}): PASS in {secs:.1}s: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL in {secs:.1}s: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
