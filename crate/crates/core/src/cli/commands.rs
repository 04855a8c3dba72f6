use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::analytic::{
    build_block_set, build_five_plus_five, build_ninth_and_tenth, build_u_family, detect_pairing, fifth_member,
    ninth_feasibility_certificate, qubit_no_go, solve_ninth_params, Dressings, UMember,
};
use crate::feasibility::{
    decide, refine_unitary_witness, search_feasible, Decision, Mode, RankProfile, RefineSettings, SearchOutcome,
};
use crate::io::{format_real, matrix_rows, real_cell, to_json, write_text, MatrixRows, MessageSetFile, Table};
use crate::phasemap::{
    bisect_boundary, edge_e_spectrum, edge_e_spectrum_at_x, sweep_simplex, sweep_simplex_both, window_scan, LinePath,
    SweepRow,
};
use crate::protocol::{build_decoder, simulate_many, verify_message_set};
use crate::qmat::{haar_unitary, MessageSet, SchmidtSpectrum};
use crate::rng::seeded;

use super::*;

/// Tolerance on the sum of user-supplied Schmidt coefficients.
const SPECTRUM_SUM_TOL: f64 = 1e-9;

pub fn dispatch(cmd: &Command, io: &mut Io) -> Outcome {
    match cmd {
        Command::Search(a) => search(a, io),
        Command::Boundary(a) => boundary(a, io),
        Command::Sweep(a) => sweep(a, io),
        Command::Window(a) => window(a, io),
        Command::Verify(a) => verify(a, io),
        Command::Simulate(a) => simulate(a, io),
        Command::Construct(a) => construct(a, io),
        Command::Pairing(a) => pairing(a, io),
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn io_err(e: std::io::Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn spectrum(lambdas: &[f64]) -> std::result::Result<SchmidtSpectrum, Failure> {
    Ok(SchmidtSpectrum::normalized(lambdas.to_vec(), SPECTRUM_SUM_TOL)?)
}

fn joined<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn write_set(path: &Path, set: &MessageSet, seed: Option<u64>, io: &Io) -> std::result::Result<(), Failure> {
    let mut file = MessageSetFile::from_set(set, seed);
    if io.timestamp {
        file = file.with_timestamp(now());
    }
    Ok(file.write(path)?)
}

/// Write a table to `out`, or to standard output when absent.
fn emit_table(table: &Table, out: Option<&Path>, io: &mut Io) -> std::result::Result<(), Failure> {
    let text = table.to_csv()?;
    match out {
        Some(p) => write_text(p, &text)?,
        None => io.out.write_all(text.as_bytes()).map_err(io_err)?,
    }
    Ok(())
}

/// Summary lines go to standard output unless it carries the table.
fn summary(io: &mut Io, table_on_stdout: bool, line: &str) -> std::result::Result<(), Failure> {
    let w = if table_on_stdout { &mut io.err } else { &mut io.out };
    writeln!(w, "{line}").map_err(io_err)
}

fn search(a: &SearchArgs, io: &mut Io) -> Outcome {
    let spec = spectrum(&a.schmidt)?;
    let d = a.dim.unwrap_or(spec.dim());
    if d != spec.dim() {
        return Err(usage(format!("--dim {d} but {} Schmidt coefficients", spec.dim())));
    }
    let profile = match &a.profile {
        Some(k) => {
            let p = RankProfile::new(k.clone())?;
            if a.messages.is_some_and(|n| n != p.len()) {
                return Err(usage(format!("--messages {} but profile has {} entries", a.messages.unwrap(), p.len())));
            }
            if a.mode == ModeArg::Unitary && !p.is_unitary() {
                return Err(usage("--mode unitary with a profile containing ranks above 1"));
            }
            Some(p)
        }
        None => None,
    };
    let n = match (a.messages, &profile) {
        (Some(n), _) => n,
        (None, Some(p)) => p.len(),
        (None, None) => return Err(usage("--messages or --profile is required")),
    };
    let mode: Mode = a.mode.into();
    let cfg = a.engine.config();
    cfg.validate()?;
    let head = format!("n={n} mode={mode} schmidt={}", joined(spec.lambdas()));

    if spec.excludes(n) {
        writeln!(io.out, "verdict=excluded-by-bound {head} bound={}", spec.message_bound()).map_err(io_err)?;
        return Ok(EXIT_NEGATIVE);
    }
    let outcomes: Vec<SearchOutcome> = match &profile {
        Some(p) => {
            p.check_bound(d)?;
            vec![search_feasible(d, &spec, p, &cfg)?]
        }
        None => match decide(d, &spec, n, mode, &cfg)? {
            Decision::Feasible(o) => vec![o],
            Decision::Infeasible(os) => os,
            Decision::ExcludedByBound => unreachable!("checked above"),
        },
    };
    if let Some(path) = &a.restart_log {
        let mut t = Table::new(["profile", "restart", "seed", "final_cost", "iterations", "stop"]);
        for o in &outcomes {
            for (i, r) in o.restart_log.iter().enumerate() {
                let stop = serde_json::to_value(r.stop).map_err(crate::Error::from)?;
                t.push(vec![
                    joined(o.profile.kappas()),
                    i.to_string(),
                    r.seed.to_string(),
                    format_real(r.final_cost),
                    r.iterations.to_string(),
                    stop.as_str().unwrap_or_default().to_string(),
                ]);
            }
        }
        write_text(path, &t.to_csv()?)?;
    }
    let restarts: usize = outcomes.iter().map(|o| o.restart_log.len()).sum();
    let best = outcomes.iter().map(|o| o.best_cost).fold(f64::INFINITY, f64::min);
    let feasible = outcomes.iter().find(|o| o.verdict.is_feasible());
    let Some(o) = feasible else {
        let tried: Vec<String> = outcomes.iter().map(|o| joined(o.profile.kappas())).collect();
        writeln!(
            io.out,
            "verdict=infeasible {head} profiles_tried={} best_cost={} restarts_run={restarts}",
            tried.join(";"),
            real_cell(best.is_finite().then_some(best)),
        )
        .map_err(io_err)?;
        return Ok(EXIT_NEGATIVE);
    };
    let mut witness = o.witness.clone().expect("feasible outcomes carry a witness");
    let mut refined = String::new();
    if a.refine {
        if !o.profile.is_unitary() {
            return Err(usage("--refine applies to unitary witnesses only"));
        }
        let r = refine_unitary_witness(&witness, &RefineSettings::default())?;
        refined = format!(" refined_cost={}", format_real(r.final_cost));
        witness = r.set;
    }
    let v = verify_message_set(&witness, a.engine.tol.max(1e-10));
    let seed = o.decisive_seed();
    writeln!(
        io.out,
        "verdict=feasible {head} profile={} best_cost={} seed={} restarts_run={restarts} max_violation={}{refined}",
        joined(o.profile.kappas()),
        format_real(o.best_cost),
        seed.map(|s| s.to_string()).unwrap_or_default(),
        format_real(v.max_violation),
    )
    .map_err(io_err)?;
    if let Some(path) = &a.out {
        write_set(path, &witness, seed, io)?;
    }
    Ok(EXIT_OK)
}

fn lambda_header(d: usize) -> Vec<String> {
    (0..d).map(|i| format!("lambda{i}")).collect()
}

fn boundary(a: &BoundaryArgs, io: &mut Io) -> Outcome {
    let path = match (a.from, a.to, &a.start, &a.end) {
        (Some(f), Some(t), None, None) => LinePath::edge_e(f, t)?,
        (None, None, Some(s), Some(e)) => LinePath::new(&spectrum(s)?, &spectrum(e)?)?,
        _ => return Err(usage("give either --from/--to (edge E) or --start/--end")),
    };
    let mode: Mode = a.mode.into();
    let cfg = a.engine.config();
    let record = bisect_boundary(&path, a.messages, mode, a.resolution, &cfg)?;
    let d = path.dim();
    let mut header = vec!["row".to_string(), "parameter".to_string()];
    header.extend(lambda_header(d));
    header.extend(["n", "mode", "verdict", "cost", "seed"].map(String::from));
    let mut t = Table::new(header);
    for p in &record.trail {
        let mut row = vec!["probe".to_string(), format_real(p.parameter)];
        row.extend(p.lambdas.iter().map(|&l| format_real(l)));
        row.extend([a.messages.to_string(), mode.to_string(), p.verdict.into(), real_cell(p.best_cost), p.seed.to_string()]);
        t.push(row);
    }
    let at = path.spectrum_at(record.location)?;
    let mut row = vec!["location".to_string(), format_real(record.location)];
    row.extend(at.lambdas().iter().map(|&l| format_real(l)));
    row.extend([a.messages.to_string(), mode.to_string(), "boundary".into(), String::new(), cfg.seed.to_string()]);
    t.push(row);
    emit_table(&t, a.out.as_deref(), io)?;
    summary(
        io,
        a.out.is_none(),
        &format!(
            "location={} resolution={} feasible_at={} infeasible_at={} probes={}",
            format_real(record.location),
            format_real(record.resolution),
            format_real(record.feasible.parameter),
            format_real(record.infeasible.parameter),
            record.trail.len()
        ),
    )?;
    Ok(EXIT_OK)
}

fn sweep_rows(t: &mut Table, rows: &[SweepRow], mode: Mode) {
    for r in rows {
        let mut row: Vec<String> = r.lambdas.iter().map(|&l| format_real(l)).collect();
        row.extend([
            r.max_n.to_string(),
            mode.to_string(),
            r.failing_verdict.to_string(),
            real_cell(r.failing_cost),
            r.seed.to_string(),
        ]);
        t.push(row);
    }
}

fn sweep(a: &SweepArgs, io: &mut Io) -> Outcome {
    if a.dim != 3 {
        return Err(usage("sweep supports --dim 3 only"));
    }
    let cfg = a.engine.config();
    let mut header = lambda_header(3);
    header.extend(["max_n", "mode", "next_verdict", "next_cost", "seed"].map(String::from));
    let mut t = Table::new(header);
    let mut note = None;
    match a.mode {
        SweepMode::Unitary => sweep_rows(&mut t, &sweep_simplex(a.step, Mode::Unitary, &cfg)?, Mode::Unitary),
        SweepMode::General => sweep_rows(&mut t, &sweep_simplex(a.step, Mode::General, &cfg)?, Mode::General),
        SweepMode::Both => {
            let (u, g) = sweep_simplex_both(a.step, &cfg)?;
            let differ = u.iter().zip(&g).filter(|(x, y)| x.max_n != y.max_n).count();
            let over = u.iter().chain(&g).filter(|r| r.max_n > (3.0 / r.lambdas[0] + 1e-9).floor() as usize).count();
            sweep_rows(&mut t, &u, Mode::Unitary);
            sweep_rows(&mut t, &g, Mode::General);
            note = Some(format!("points={} tables_match={} differing={differ} above_bound={over}", u.len(), differ == 0));
        }
    }
    emit_table(&t, a.out.as_deref(), io)?;
    if let Some(n) = note {
        summary(io, a.out.is_none(), &n)?;
    }
    Ok(EXIT_OK)
}

fn window(a: &WindowArgs, io: &mut Io) -> Outcome {
    for &l in &a.lambda0 {
        edge_e_spectrum(l)?;
    }
    let rows = window_scan(&a.lambda0, &a.engine.config())?;
    let mut t = Table::new(["lambda0", "max_unitary", "max_general", "seed"]);
    for r in rows {
        t.push(vec![format_real(r.lambda0), r.max_unitary.to_string(), r.max_general.to_string(), r.seed.to_string()]);
    }
    emit_table(&t, a.out.as_deref(), io)?;
    Ok(EXIT_OK)
}

fn load(path: &Path) -> std::result::Result<(MessageSetFile, MessageSet), Failure> {
    let file = MessageSetFile::read(path)?;
    let set = file.to_set()?;
    Ok((file, set))
}

fn verify(a: &VerifyArgs, io: &mut Io) -> Outcome {
    let (file, set) = load(&a.file)?;
    let v = verify_message_set(&set, a.tol);
    let agrees = file.cost_agrees(&set);
    let ok = v.passed && agrees;
    writeln!(
        io.out,
        "verdict={} messages={} max_violation={} completeness={} cross={} min_within_eigenvalue={} cost_agrees={agrees}",
        if ok { "pass" } else { "fail" },
        set.len(),
        format_real(v.max_violation),
        format_real(v.max_completeness_defect),
        format_real(v.max_cross_overlap),
        format_real(v.min_within_eigenvalue),
    )
    .map_err(io_err)?;
    if let Some(w) = &v.worst {
        if !v.passed {
            writeln!(io.out, "worst: {w}").map_err(io_err)?;
        }
    }
    if !agrees {
        writeln!(
            io.out,
            "stored cost {} differs from recomputed {}",
            format_real(file.metadata.cost),
            format_real(crate::feasibility::orthogonality_cost(&set))
        )
        .map_err(io_err)?;
    }
    Ok(if ok { EXIT_OK } else { EXIT_NEGATIVE })
}

fn simulate(a: &SimulateArgs, io: &mut Io) -> Outcome {
    let (_, set) = load(&a.file)?;
    let decoder = build_decoder(&set, a.tol)?;
    let report = simulate_many(&set, &decoder, a.trials, a.seed)?;
    let mut t = Table::new(["message", "rank", "trials", "correct", "accuracy"]);
    for (j, (n, c)) in report.per_message.iter().enumerate() {
        let acc = if *n == 0 { 1.0 } else { *c as f64 / *n as f64 };
        t.push(vec![j.to_string(), decoder.ranks()[j].to_string(), n.to_string(), c.to_string(), format_real(acc)]);
    }
    io.out.write_all(t.to_csv()?.as_bytes()).map_err(io_err)?;
    let acc = report.accuracy();
    writeln!(io.out, "overall_accuracy={}", format_real(acc)).map_err(io_err)?;
    if let Some(path) = &a.log {
        let mut log = Table::new(["trial", "sent", "branch", "decoded", "posterior"]);
        for (i, tr) in report.trials.iter().enumerate() {
            log.push(vec![
                i.to_string(),
                tr.sent.to_string(),
                tr.branch.to_string(),
                tr.decoded.map(|d| d.to_string()).unwrap_or_else(|| "complement".into()),
                format_real(tr.posterior),
            ]);
        }
        write_text(path, &log.to_csv()?)?;
    }
    Ok(if acc == 1.0 { EXIT_OK } else { EXIT_NEGATIVE })
}

fn require_x(a: &ConstructArgs) -> std::result::Result<f64, Failure> {
    a.x.ok_or_else(|| usage(format!("--x is required for --family {:?}", a.family).to_lowercase()))
}

fn phases(a: &ConstructArgs) -> (f64, f64) {
    match a.phases.as_deref() {
        Some([p]) => (*p, *p),
        Some([p, q]) => (*p, *q),
        _ => (0.0, 0.0),
    }
}

fn dressings(a: &ConstructArgs) -> std::result::Result<Dressings, Failure> {
    Ok(match a.dressings {
        DressingArg::Identity => Dressings::identity(),
        DressingArg::Random => {
            let mut rng = seeded(a.dressing_seed);
            let mut draw = || haar_unitary(2, &mut rng);
            Dressings { a: draw()?, b: draw()?, b1: draw()?, b2: draw()? }
        }
    })
}

fn report<T: Serialize>(a: &ConstructArgs, value: &T, io: &mut Io) -> std::result::Result<(), Failure> {
    let text = to_json(value)?;
    match &a.report {
        Some(p) => write_text(p, &text)?,
        None => io.out.write_all(text.as_bytes()).map_err(io_err)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct UReport {
    x: f64,
    beta2_phase: f64,
    members: Vec<UMember>,
    matrices: Vec<MatrixRows>,
    pair_residual: f64,
    fifth_member: MatrixRows,
    fifth_unitarity_defect: f64,
    fifth_pair_residual: f64,
}

#[derive(Serialize)]
struct SetReport {
    family: &'static str,
    x: f64,
    messages: usize,
    max_violation: f64,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    dual: Option<crate::analytic::DualMethod>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slack: Option<f64>,
}

fn construct(a: &ConstructArgs, io: &mut Io) -> Outcome {
    match a.family {
        Family::U => {
            let x = require_x(a)?;
            let fam = build_u_family(x, phases(a).0)?;
            let fifth = fifth_member(&fam);
            let r = UReport {
                x,
                beta2_phase: phases(a).0,
                members: fam.members.to_vec(),
                matrices: fam.u.iter().map(matrix_rows).collect(),
                pair_residual: fam.pair_residual(),
                fifth_member: matrix_rows(&fifth.u),
                fifth_unitarity_defect: fifth.unitarity_defect,
                fifth_pair_residual: fifth.pair_residual,
            };
            report(a, &r, io)?;
            Ok(EXIT_OK)
        }
        Family::Blockset => {
            let x = require_x(a)?;
            let bs = build_block_set(x, dressings(a)?, phases(a))?;
            finish_set(a, "blockset", x, &bs.message_set(), None, None, io)
        }
        Family::NinthTenth => {
            let x = require_x(a)?;
            let cert = ninth_feasibility_certificate(x)?;
            if !cert.feasible {
                writeln!(io.out, "certificate=infeasible x={} slack={}", format_real(x), format_real(cert.slack))
                    .map_err(io_err)?;
                return Ok(EXIT_NEGATIVE);
            }
            let bs = build_block_set(x, dressings(a)?, phases(a))?;
            let total = (1.0 - 3.0 * x) / (x * x);
            let params = solve_ninth_params(&bs, a.delta_sq.unwrap_or(total / 2.0), a.gamma_phase)?;
            let nt = build_ninth_and_tenth(&bs, &params)?;
            finish_set(a, "ninth-tenth", x, &nt.set, Some(nt.dual), Some(cert.slack), io)
        }
        Family::FivePlusFive => {
            let x = a.x.unwrap_or(0.25);
            let dr = dressings(a)?;
            let members = build_five_plus_five(x, dr.a, dr.b, phases(a).0)?;
            let set = MessageSet::from_unitaries(edge_e_spectrum_at_x(x)?, members)?;
            finish_set(a, "five-plus-five", x, &set, None, None, io)
        }
        Family::QubitNogo => {
            let l0 = a.lambda0.ok_or_else(|| usage("--lambda0 is required for --family qubit-nogo"))?;
            let r = qubit_no_go(l0)?;
            report(a, &r, io)?;
            Ok(EXIT_OK)
        }
    }
}

fn finish_set(
    a: &ConstructArgs,
    family: &'static str,
    x: f64,
    set: &MessageSet,
    dual: Option<crate::analytic::DualMethod>,
    slack: Option<f64>,
    io: &mut Io,
) -> Outcome {
    let v = verify_message_set(set, 1e-10);
    let r = SetReport { family, x, messages: set.len(), max_violation: v.max_violation, passed: v.passed, dual, slack };
    if let Some(p) = &a.out {
        write_set(p, set, None, io)?;
    }
    report(a, &r, io)?;
    Ok(if v.passed { EXIT_OK } else { EXIT_NEGATIVE })
}

fn pairing(a: &PairingArgs, io: &mut Io) -> Outcome {
    let (_, mut set) = load(&a.file)?;
    if a.refine {
        set = refine_unitary_witness(&set, &RefineSettings::default())?.set;
    }
    let r = detect_pairing(&set, a.tol)?;
    writeln!(io.out, "{r}").map_err(io_err)?;
    io.out.write_all(to_json(&r)?.as_bytes()).map_err(io_err)?;
    Ok(if r.conforms { EXIT_OK } else { EXIT_NEGATIVE })
}
