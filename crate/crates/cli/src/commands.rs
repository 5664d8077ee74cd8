//! The five batch commands. Each returns a report; printing is left to the
//! binary.

use std::path::PathBuf;

use log::{info, warn};
use petviashvili::analysis::{exact_interpolant, h1_error};
use petviashvili::exact::solve_beta;
use petviashvili::iteration::{
    check_sequence_inequalities, contraction_factor, energy, iterate, iterate_with,
    linearized_spectrum, IterationOutcome, StopReason, StopRule,
};
use petviashvili::linalg::EigenConfig;
use petviashvili::shooting::{
    find_excited_state, first_bracket, ground_state, scan, RadialProblem,
};
use petviashvili::{Field, ProblemSpec, SpectrumResult};

use crate::config::{Domain, RunConfig};
use crate::error::CliError;
use crate::output::{
    fmt_float, solution_text, trace_table, OutDir, Summary, Table, SPECTRUM_HEADER,
};

/// Files written by a command and its summary.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub summary: Summary,
}

impl Report {
    fn finish(&mut self, out: &OutDir, name: &str) -> Result<(), CliError> {
        self.files.push(out.write(name, &self.summary.render())?);
        Ok(())
    }
}

/// Stop rule for states whose spectrum is taken: converge on the field, not
/// on `M`, which reaches 1 long before the field settles.
pub fn spectrum_stop_rule(cfg: &RunConfig) -> StopRule {
    StopRule {
        max_steps: cfg.max_steps.max(1000),
        m_tol: None,
        diff_tol: Some(1e-12),
    }
}

fn reason_name(r: StopReason) -> &'static str {
    match r {
        StopReason::MTolerance => "m_tol",
        StopReason::DiffTolerance => "diff_tol",
        StopReason::MaxSteps => "max_steps",
    }
}

fn initial_field(cfg: &RunConfig, spec: &ProblemSpec) -> Result<Field, CliError> {
    Ok(cfg.guess(spec.mesh())?.evaluate(spec.mesh())?)
}

fn eigen_config(cfg: &RunConfig) -> EigenConfig {
    EigenConfig {
        seed: cfg.eigen_seed(),
        ..EigenConfig::default()
    }
}

/// The exact cn solution is available for the cubic interval problem.
fn has_exact_solution(cfg: &RunConfig) -> bool {
    cfg.domain == Domain::Interval && cfg.p == 3.0
}

fn exact_reference(spec: &ProblemSpec, xmax: f64) -> Result<Field, CliError> {
    let params = solve_beta(xmax).map_err(|e| CliError::Numerical(e.to_string()))?;
    exact_interpolant(spec, &params).map_err(|e| CliError::Numerical(e.to_string()))
}

fn describe_outcome(s: &mut Summary, spec: &ProblemSpec, outcome: &IterationOutcome) {
    let last = outcome
        .trace
        .states
        .last()
        .expect("trace has the initial state");
    s.add("stop_reason", reason_name(outcome.reason));
    s.add("steps", outcome.trace.steps());
    s.num("M", last.m);
    s.num("abs_M_minus_1", (last.m - 1.0).abs());
    s.num("h1_norm", last.h1_norm);
    s.num("lp1_norm", last.lp1_norm);
    s.num("E1", last.energy);
    s.num("gamma", spec.gamma());
    s.num("alpha", spec.alpha());
    let (lo, hi) = outcome
        .field
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    s.num("min_value", lo);
    s.num("max_value", hi);
}

/// Iterate from the configured guess; writes `solution.txt`, `trace.csv`,
/// `config.txt` and `summary.txt`. A run that exhausts `max_steps` with
/// tolerances set still writes its files, then fails with exit 3.
pub fn solve(cfg: &RunConfig) -> Result<Report, CliError> {
    let spec = cfg.build_spec()?;
    let u0 = initial_field(cfg, &spec)?;
    let stop = cfg.stop_rule();
    let outcome = iterate(&u0, &spec, &stop)?;
    info!(
        "solve: {} after {} steps, M = {}",
        reason_name(outcome.reason),
        outcome.trace.steps(),
        outcome.final_m()
    );

    let out = OutDir::create(&cfg.out_dir)?;
    let mut report = Report::default();
    report.files.push(out.write("config.txt", &cfg.render())?);
    report
        .files
        .push(out.write("solution.txt", &solution_text(spec.mesh(), &outcome.field))?);
    report
        .files
        .push(out.write_csv("trace.csv", &trace_table(&outcome.trace))?);
    let s = &mut report.summary;
    s.add("command", "solve");
    s.add("domain", cfg.domain.name());
    s.add("nodes", spec.mesh().n_nodes());
    s.add("guess", cfg.guess(spec.mesh())?.name());
    describe_outcome(s, &spec, &outcome);
    if has_exact_solution(cfg) {
        let reference = exact_reference(&spec, cfg.xmax)?;
        s.num(
            "h1_error_exact",
            h1_error(&outcome.field, &reference, &spec),
        );
    }
    report.finish(&out, "summary.txt")?;

    if !outcome.converged(&stop) {
        return Err(CliError::Numerical(format!(
            "no convergence within {} steps (|M - 1| = {:e}); outputs written to {}",
            stop.max_steps,
            (outcome.final_m() - 1.0).abs(),
            cfg.out_dir.display()
        )));
    }
    Ok(report)
}

/// Result of one resolution in a study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub n_cells: usize,
    /// `‖u_n − I_h φ‖_{H¹}` for every iterate.
    pub errors: Vec<f64>,
    pub abs_m_minus_1: Vec<f64>,
    pub plateau_error: f64,
    pub steps_to_m_tol: Option<usize>,
}

fn study_one(cfg: &RunConfig, n_cells: usize, m_tol: f64) -> Result<StudyRow, CliError> {
    let mut cfg = cfg.clone();
    cfg.n_cells = Some(n_cells);
    let spec = cfg.build_spec()?;
    let reference = exact_reference(&spec, cfg.xmax)?;
    let u0 = initial_field(&cfg, &spec)?;
    let mut errors = Vec::new();
    let outcome = iterate_with(&u0, &spec, &StopRule::fixed_steps(cfg.max_steps), |_, u| {
        errors.push(h1_error(u, &reference, &spec))
    })?;
    let abs_m_minus_1: Vec<f64> = outcome
        .trace
        .m_values()
        .iter()
        .map(|m| (m - 1.0).abs())
        .collect();
    let steps_to_m_tol = abs_m_minus_1.iter().position(|&d| d <= m_tol);
    Ok(StudyRow {
        n_cells,
        plateau_error: *errors.last().expect("at least the initial iterate"),
        errors,
        abs_m_minus_1,
        steps_to_m_tol,
    })
}

/// Mesh-refinement study against the exact cn solution: every resolution
/// runs exactly `max_steps` iterations (in parallel), writing
/// `study_N<n>.csv` per resolution and `study_summary.csv`.
pub fn study(cfg: &RunConfig, resolutions: &[usize]) -> Result<(Report, Vec<StudyRow>), CliError> {
    if !has_exact_solution(cfg) {
        return Err(CliError::Config(
            "study needs the interval domain with p = 3 (exact solution)".into(),
        ));
    }
    if resolutions.is_empty() {
        return Err(CliError::Config(
            "study needs at least one resolution".into(),
        ));
    }
    cfg.validate()?;
    let m_tol = cfg.m_tol.unwrap_or(1e-10);
    let rows: Vec<Result<StudyRow, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = resolutions
            .iter()
            .map(|&n| scope.spawn(move || study_one(cfg, n, m_tol)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("study worker panicked"))
            .collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;

    let out = OutDir::create(&cfg.out_dir)?;
    let mut report = Report::default();
    report.files.push(out.write("config.txt", &cfg.render())?);
    let mut summary = Table::new(&["n_cells", "plateau_error", "ratio", "steps_to_m_tol"]);
    for (i, row) in rows.iter().enumerate() {
        let mut t = Table::new(&["step", "h1_error", "abs_M_minus_1"]);
        for (n, (e, d)) in row.errors.iter().zip(&row.abs_m_minus_1).enumerate() {
            t.push(vec![n.to_string(), fmt_float(*e), fmt_float(*d)]);
        }
        report
            .files
            .push(out.write_csv(&format!("study_N{}.csv", row.n_cells), &t)?);
        let ratio = i.checked_sub(1).map_or(String::new(), |j| {
            fmt_float(rows[j].plateau_error / row.plateau_error)
        });
        summary.push(vec![
            row.n_cells.to_string(),
            fmt_float(row.plateau_error),
            ratio,
            row.steps_to_m_tol.map_or(String::new(), |s| s.to_string()),
        ]);
    }
    report
        .files
        .push(out.write_csv("study_summary.csv", &summary)?);
    report.summary.add("command", "study");
    report.summary.add(
        "resolutions",
        resolutions
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    report.summary.num("m_tol", m_tol);
    Ok((report, rows))
}

fn spectrum_table(result: &SpectrumResult) -> Table {
    let mut t = Table::new(&SPECTRUM_HEADER);
    for (i, (v, r)) in result.eigenvalues.iter().zip(&result.residuals).enumerate() {
        t.push(vec![(i + 1).to_string(), fmt_float(*v), fmt_float(*r)]);
    }
    t
}

fn describe_spectrum(s: &mut Summary, result: &SpectrumResult, p: f64, gamma: f64) {
    s.add(
        "eigenvalues",
        result
            .eigenvalues
            .iter()
            .map(|v| fmt_float(*v))
            .collect::<Vec<_>>()
            .join(","),
    );
    s.add(
        "eigenvalues_above_1",
        result.eigenvalues.iter().filter(|&&v| v > 1.0).count(),
    );
    s.num("amplitude_factor", (p - gamma * (p - 1.0)).abs());
    s.num(
        "contraction_factor",
        contraction_factor(&result.eigenvalues, p, gamma),
    );
    s.add("eigen_seed", result.seed);
    s.add("eigen_sweeps", result.sweeps);
}

/// Converge the configured problem tightly, then compute the top `k`
/// eigenpairs of its linearization. Writes `spectrum.csv`,
/// `spectrum_solution.txt` and `spectrum_summary.txt`.
pub fn spectrum(cfg: &RunConfig, k: usize) -> Result<(Report, SpectrumResult), CliError> {
    if k == 0 {
        return Err(CliError::Config("k must be at least 1".into()));
    }
    let spec = cfg.build_spec()?;
    let u0 = initial_field(cfg, &spec)?;
    let outcome = iterate(&u0, &spec, &spectrum_stop_rule(cfg))?;
    if outcome.reason == StopReason::MaxSteps {
        warn!(
            "spectrum: state not converged after {} steps",
            outcome.trace.steps()
        );
    }
    let result = linearized_spectrum(&outcome.field, &spec, k, &eigen_config(cfg))?;

    let out = OutDir::create(&cfg.out_dir)?;
    let mut report = Report::default();
    report
        .files
        .push(out.write_csv("spectrum.csv", &spectrum_table(&result))?);
    report.files.push(out.write(
        "spectrum_solution.txt",
        &solution_text(spec.mesh(), &outcome.field),
    )?);
    let s = &mut report.summary;
    s.add("command", "spectrum");
    s.add("domain", cfg.domain.name());
    describe_outcome(s, &spec, &outcome);
    describe_spectrum(s, &result, spec.p(), spec.gamma());
    report.finish(&out, "spectrum_summary.txt")?;
    Ok((report, result))
}

/// Radial excited state by slope matching. Always writes `scan.csv` (the
/// `F(r0)` scan) first; then, if a bracket is found or given and a root is
/// reached, `excited_solution.txt`, `excited_spectrum.csv` and
/// `excited_summary.txt`.
pub fn excited(
    cfg: &RunConfig,
    bracket: Option<(f64, f64)>,
    tol: f64,
    k: usize,
) -> Result<Report, CliError> {
    if cfg.domain != Domain::Radial {
        return Err(CliError::Config("excited needs domain = radial".into()));
    }
    cfg.validate()?;
    if !(tol > 0.0) {
        return Err(CliError::Config(format!("tol = {tol} must be positive")));
    }
    let mut problem = RadialProblem::new(cfg.rmax, cfg.p);
    problem.gamma = cfg.gamma_value();
    problem.mass = cfg.mass;
    problem.n_cells_per_side = (cfg.n_cells() / 2).max(1);

    let out = OutDir::create(&cfg.out_dir)?;
    let mut report = Report::default();
    let grid = problem.default_scan_grid();
    let table = scan(&problem, &grid)?;
    let mut t = Table::new(&["r0", "F"]);
    for (r0, f) in &table {
        t.push(vec![fmt_float(*r0), fmt_float(*f)]);
    }
    report.files.push(out.write_csv("scan.csv", &t)?);

    let bracket = match bracket.or_else(|| first_bracket(&table)) {
        Some(b) => b,
        None => {
            return Err(CliError::Numerical(format!(
                "no sign change of F on the scan [{}, {}]; scan written to {}",
                grid[0],
                grid[grid.len() - 1],
                out.path("scan.csv").display()
            )))
        }
    };
    let state = find_excited_state(&problem, bracket, tol)?;
    let full = state.full_spec(&problem)?;
    report.files.push(out.write(
        "excited_solution.txt",
        &solution_text(&state.mesh, &state.glued),
    )?);
    let result = linearized_spectrum(&state.glued, &full, k, &eigen_config(cfg))?;
    report
        .files
        .push(out.write_csv("excited_spectrum.csv", &spectrum_table(&result))?);

    let ground = ground_state(&problem, cfg.n_cells())?;
    let gspec = ProblemSpec::new(ground.mesh.clone(), problem.p, problem.gamma, problem.mass)?;
    let s = &mut report.summary;
    s.add("command", "excited");
    s.num("bracket_lo", bracket.0);
    s.num("bracket_hi", bracket.1);
    s.num("r0", state.r0);
    s.num("F", state.mismatch);
    s.add("root_iterations", state.root_iterations);
    s.add("sign_changes", state.sign_changes());
    s.num(
        "M",
        petviashvili::iteration::compute_m(&state.glued, &full)?,
    );
    s.num("E1", energy(&state.glued, &full)?);
    s.num("ground_E1", energy(&ground.field, &gspec)?);
    describe_spectrum(s, &result, problem.p, problem.gamma);
    report.finish(&out, "excited_summary.txt")?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Warn,
    Fail,
    Skip,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Warn => "WARN",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn status(&self, name: &str) -> Option<Status> {
        self.checks
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.status)
    }
}

/// Slack allowed in the sequence inequalities.
pub const SLACK_TOL: f64 = 1e-9;
/// Slack allowed in the `M ≤ 1` bound and the energy checks.
pub const ENERGY_TOL: f64 = 1e-10;

fn check(name: &'static str, ok: bool, fail: Status, detail: String) -> Check {
    Check {
        name,
        status: if ok { Status::Pass } else { fail },
        detail,
    }
}

/// Run the configured iteration and test the properties every run must have.
pub fn verify(cfg: &RunConfig) -> Result<VerifyReport, CliError> {
    let spec = cfg.build_spec()?;
    let u0 = initial_field(cfg, &spec)?;
    let stop = cfg.stop_rule();
    let outcome = iterate(&u0, &spec, &stop)?;
    let trace = &outcome.trace;
    let mut checks = Vec::new();

    let dm: Vec<f64> = trace.m_values().iter().map(|m| (m - 1.0).abs()).collect();
    let first_below = |t: f64| dm.iter().position(|&d| d <= t);
    let speed = match (first_below(1e-4), first_below(1e-8)) {
        (Some(a), Some(b)) => format!("; |M-1| <= 1e-4 at step {a}, <= 1e-8 at step {b}"),
        (Some(a), None) => format!("; |M-1| <= 1e-4 at step {a}, never <= 1e-8"),
        _ => "; |M-1| never <= 1e-4".to_string(),
    };
    checks.push(check(
        "convergence",
        outcome.converged(&stop),
        Status::Warn,
        format!(
            "{} after {} steps, |M-1| = {:e}{speed}",
            reason_name(outcome.reason),
            trace.steps(),
            dm.last().copied().unwrap_or(f64::NAN)
        ),
    ));

    let report = check_sequence_inequalities(trace, SLACK_TOL);
    checks.push(check(
        "sequence_inequalities",
        report.passed(),
        Status::Fail,
        format!(
            "minimum slacks [{}], {} violations below -{SLACK_TOL:e}",
            report
                .minimum
                .iter()
                .map(|v| fmt_float(*v))
                .collect::<Vec<_>>()
                .join(", "),
            report.violations.len()
        ),
    ));

    if spec.is_gamma_star() {
        let worst = trace.states[1..]
            .iter()
            .map(|s| s.m - 1.0)
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(check(
            "m_bound",
            trace.states.len() < 2 || worst <= ENERGY_TOL,
            Status::Fail,
            format!("max over n >= 1 of M[u_n] - 1 = {}", fmt_float(worst)),
        ));

        let em: Vec<f64> = trace.states.iter().map(|s| s.modified_energy).collect();
        let applicable = trace.states.get(1).is_some_and(|s| s.m <= 1.0 + ENERGY_TOL);
        if applicable {
            let rise = em
                .windows(2)
                .map(|w| w[1] - w[0])
                .filter(|d| d.is_finite())
                .fold(f64::NEG_INFINITY, f64::max);
            let monotone = em.windows(2).all(|w| w[1] <= w[0] + ENERGY_TOL);
            checks.push(check(
                "modified_energy_monotone",
                monotone,
                Status::Fail,
                format!("largest step change of E_M = {}", fmt_float(rise)),
            ));
        } else {
            checks.push(Check {
                name: "modified_energy_monotone",
                status: Status::Skip,
                detail: "M[u_1] > 1".into(),
            });
        }
        let e_final = trace.states.last().expect("nonempty").energy;
        checks.push(check(
            "energy_bound",
            e_final <= em[0] + ENERGY_TOL,
            Status::Fail,
            format!(
                "E1[final] = {} vs E_M[u_0] = {}",
                fmt_float(e_final),
                fmt_float(em[0])
            ),
        ));
    } else {
        for name in ["m_bound", "modified_energy_monotone", "energy_bound"] {
            checks.push(Check {
                name,
                status: Status::Skip,
                detail: format!("gamma = {} is not gamma_star", spec.gamma()),
            });
        }
    }
    Ok(VerifyReport { checks })
}
