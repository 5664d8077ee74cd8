//! The Petviashvili iteration `u ↦ M[u]^γ ℒ⁻¹ b(u)` with
//! `M[u] = ⟨ℒu, u⟩ / ⟨b(u), u⟩`, its diagnostics, the unstabilized step, the
//! energies and the linearization at a fixed point.
//!
//! Throughout, `b(u)` is the load vector of the nodally interpolated
//! nonlinearity and `N(u) = (u · b(u))^{1/(p+1)}` is the matching discrete
//! `L^{p+1}` norm. Using `N` (rather than an independently integrated norm)
//! keeps `M[u] N(u)^{p+1} = ‖u‖²_{H¹}` exact, which the trace identities rely on.

use log::warn;
use thiserror::Error;

use crate::assemble::{
    assemble_weighted_mass, AssemblyError, Discretization, Field, MassKind, SparseOperator,
};
use crate::linalg::{
    top_generalized_eigenpairs_with, EigenConfig, LinalgError, SolveConfig, SolveMethod, SpdSolver,
    SpectrumResult,
};
use crate::mesh::Mesh;

/// Slack allowed in `M ≤ 1` checks; values this close to 1 are rounding noise.
pub const M_BOUND_SLACK: f64 = 1e-10;

/// Maximum `|M[φ] − 1|` accepted by [`Linearization::new`].
pub const FIXED_POINT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IterationError {
    #[error("exponent p = {p} is not in (1, {critical}) for dimension {dimension}")]
    InvalidExponent {
        p: f64,
        dimension: usize,
        critical: f64,
    },
    #[error("gamma = {gamma} is not in (1, {upper})")]
    InvalidGamma { gamma: f64, upper: f64 },
    #[error("field is identically zero")]
    ZeroField,
    #[error("non-finite values at step {0}")]
    NonFinite(usize),
    #[error("field is not a fixed point: |M - 1| = {0:e}")]
    NotAFixedPoint(f64),
    #[error("stop rule has a non-positive tolerance")]
    InvalidStopRule,
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Upper end of the subcritical range, `d† = (d+2)/(d−2)` for `d ≥ 3`.
pub fn critical_exponent(dimension: usize) -> f64 {
    if dimension <= 2 {
        f64::INFINITY
    } else {
        (dimension as f64 + 2.0) / (dimension as f64 - 2.0)
    }
}

/// `γ★ = p/(p−1)`.
pub fn gamma_star(p: f64) -> f64 {
    p / (p - 1.0)
}

/// Problem data: exponents, discretization and a factored ℒ.
#[derive(Debug)]
pub struct ProblemSpec {
    p: f64,
    gamma: f64,
    disc: Discretization,
    solver: SpdSolver,
}

impl ProblemSpec {
    pub fn new(mesh: Mesh, p: f64, gamma: f64, mass: MassKind) -> Result<Self, IterationError> {
        let dimension = mesh.kind().pde_dimension();
        let critical = critical_exponent(dimension);
        if !(p > 1.0 && p < critical) || !p.is_finite() {
            return Err(IterationError::InvalidExponent {
                p,
                dimension,
                critical,
            });
        }
        let upper = (p + 1.0) / (p - 1.0);
        if !(gamma > 1.0 && gamma < upper) {
            return Err(IterationError::InvalidGamma { gamma, upper });
        }
        let disc = Discretization::new(mesh, mass);
        let method = SolveMethod::auto_for(disc.l());
        let solver = SpdSolver::new(disc.l(), &SolveConfig::with_method(method))?;
        Ok(ProblemSpec {
            p,
            gamma,
            disc,
            solver,
        })
    }

    pub fn with_gamma_star(mesh: Mesh, p: f64, mass: MassKind) -> Result<Self, IterationError> {
        Self::new(mesh, p, gamma_star(p), mass)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `α = γ − γp + p`, the homogeneity degree of one step.
    pub fn alpha(&self) -> f64 {
        self.gamma - self.gamma * self.p + self.p
    }

    pub fn is_gamma_star(&self) -> bool {
        (self.gamma - gamma_star(self.p)).abs() <= 1e-12 * self.gamma
    }

    pub fn disc(&self) -> &Discretization {
        &self.disc
    }

    pub fn mesh(&self) -> &Mesh {
        self.disc.mesh()
    }

    pub fn l(&self) -> &SparseOperator {
        self.disc.l()
    }

    pub fn n(&self) -> usize {
        self.disc.n()
    }

    pub fn solve_l(&self, rhs: &[f64]) -> Result<Field, IterationError> {
        Ok(Field::new(self.solver.solve(rhs)?))
    }

    pub fn h1_norm(&self, u: &[f64]) -> f64 {
        self.disc.h1_norm(u)
    }

    pub fn load(&self, u: &Field) -> Result<Field, IterationError> {
        Ok(self.disc.nonlinear_load(u, self.p)?)
    }
}

/// Quantities of one iterate that everything else is derived from.
#[derive(Debug, Clone, Copy)]
struct Moments {
    /// `⟨ℒu, u⟩`
    h1_sq: f64,
    /// `⟨b(u), u⟩`
    load_dot: f64,
}

fn moments(u: &Field, load: &Field, spec: &ProblemSpec) -> Result<Moments, IterationError> {
    spec.disc.check(u)?;
    Ok(Moments {
        h1_sq: spec.l().bilinear(u, u),
        load_dot: load.dot(u),
    })
}

fn nonzero(u: &Field) -> Result<(), IterationError> {
    if u.is_zero() {
        Err(IterationError::ZeroField)
    } else {
        Ok(())
    }
}

/// `M[u] = ⟨ℒu, u⟩ / ⟨b(u), u⟩`.
pub fn compute_m(u: &Field, spec: &ProblemSpec) -> Result<f64, IterationError> {
    nonzero(u)?;
    let load = spec.load(u)?;
    let mo = moments(u, &load, spec)?;
    Ok(mo.h1_sq / mo.load_dot)
}

/// Discrete `L^{p+1}` norm `N(u) = (u · b(u))^{1/(p+1)}`.
pub fn lp1_norm(u: &Field, spec: &ProblemSpec) -> Result<f64, IterationError> {
    let load = spec.load(u)?;
    Ok(load.dot(u).max(0.0).powf(1.0 / (spec.p + 1.0)))
}

fn step_from_load(
    u: &Field,
    load: &Field,
    spec: &ProblemSpec,
) -> Result<(Field, f64), IterationError> {
    let mo = moments(u, load, spec)?;
    let m = mo.h1_sq / mo.load_dot;
    let next = spec.solve_l(load)?.scaled(m.powf(spec.gamma));
    Ok((next, m))
}

/// One stabilized step `M[u]^γ ℒ⁻¹ b(u)`.
pub fn petviashvili_step(u: &Field, spec: &ProblemSpec) -> Result<Field, IterationError> {
    nonzero(u)?;
    let load = spec.load(u)?;
    Ok(step_from_load(u, &load, spec)?.0)
}

/// The unstabilized step `ℒ⁻¹ b(u)`.
pub fn naive_step(u: &Field, spec: &ProblemSpec) -> Result<Field, IterationError> {
    nonzero(u)?;
    let load = spec.load(u)?;
    spec.solve_l(&load)
}

/// `E(u) = ½‖u‖²_{H¹} − N(u)^{p+1}/(p+1)`.
pub fn energy(u: &Field, spec: &ProblemSpec) -> Result<f64, IterationError> {
    let load = spec.load(u)?;
    let mo = moments(u, &load, spec)?;
    Ok(0.5 * mo.h1_sq - mo.load_dot / (spec.p + 1.0))
}

fn modified_from(h1_sq: f64, m: f64, p: f64) -> f64 {
    if m <= 1.0 + M_BOUND_SLACK {
        h1_sq * (0.5 - 1.0 / (p + 1.0))
    } else {
        f64::INFINITY
    }
}

/// Modified energy: `‖u‖²_{H¹}(½ − 1/(p+1))` when `M[u] ≤ 1`, `+∞` otherwise.
/// `M` within [`M_BOUND_SLACK`] of 1 counts as `≤ 1`.
pub fn modified_energy(u: &Field, spec: &ProblemSpec) -> Result<f64, IterationError> {
    let m = compute_m(u, spec)?;
    Ok(modified_from(spec.l().bilinear(u, u), m, spec.p))
}

/// Diagnostics of a single iterate `u_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub m: f64,
    pub h1_norm: f64,
    /// Discrete `N(u_n)`.
    pub lp1_norm: f64,
    pub energy: f64,
    pub modified_energy: f64,
}

impl StepRecord {
    fn new(mo: Moments, p: f64) -> Self {
        let m = mo.h1_sq / mo.load_dot;
        StepRecord {
            m,
            h1_norm: mo.h1_sq.sqrt(),
            lp1_norm: mo.load_dot.max(0.0).powf(1.0 / (p + 1.0)),
            energy: 0.5 * mo.h1_sq - mo.load_dot / (p + 1.0),
            modified_energy: modified_from(mo.h1_sq, m, p),
        }
    }
}

/// Per-iterate diagnostics of a run. `states[n]` describes `u_n`;
/// `diffs[n] = ‖u_{n+1} − u_n‖_{H¹}`, so `diffs.len() + 1 == states.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub p: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub states: Vec<StepRecord>,
    pub diffs: Vec<f64>,
}

impl IterationTrace {
    pub fn steps(&self) -> usize {
        self.diffs.len()
    }

    pub fn m_values(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.m).collect()
    }

    pub fn slacks(&self) -> Vec<[f64; 4]> {
        check_sequence_inequalities(self, 0.0).slacks
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_steps: usize,
    pub m_tol: Option<f64>,
    /// Relative: stop when `‖u_n − u_{n−1}‖_{H¹} ≤ diff_tol ‖u_n‖_{H¹}`.
    pub diff_tol: Option<f64>,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            max_steps: 100,
            m_tol: Some(1e-10),
            diff_tol: Some(1e-10),
        }
    }
}

impl StopRule {
    pub fn fixed_steps(max_steps: usize) -> Self {
        StopRule {
            max_steps,
            m_tol: None,
            diff_tol: None,
        }
    }

    fn validate(&self) -> Result<(), IterationError> {
        let ok = |t: Option<f64>| t.is_none_or(|t| t > 0.0 && !t.is_nan());
        if ok(self.m_tol) && ok(self.diff_tol) {
            Ok(())
        } else {
            Err(IterationError::InvalidStopRule)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MTolerance,
    DiffTolerance,
    MaxSteps,
}

#[derive(Debug, Clone)]
pub struct IterationOutcome {
    pub field: Field,
    pub trace: IterationTrace,
    pub reason: StopReason,
}

impl IterationOutcome {
    /// True unless the run stopped on the step limit while tolerances were set.
    pub fn converged(&self, stop: &StopRule) -> bool {
        self.reason != StopReason::MaxSteps || (stop.m_tol.is_none() && stop.diff_tol.is_none())
    }

    pub fn final_m(&self) -> f64 {
        self.trace.states.last().map_or(f64::NAN, |s| s.m)
    }
}

pub fn iterate(
    u0: &Field,
    spec: &ProblemSpec,
    stop: &StopRule,
) -> Result<IterationOutcome, IterationError> {
    iterate_with(u0, spec, stop, |_, _| {})
}

/// Like [`iterate`], calling `observe(n, u_n)` for every iterate including `u_0`.
pub fn iterate_with(
    u0: &Field,
    spec: &ProblemSpec,
    stop: &StopRule,
    mut observe: impl FnMut(usize, &Field),
) -> Result<IterationOutcome, IterationError> {
    stop.validate()?;
    nonzero(u0)?;
    spec.disc.check(u0)?;
    if !u0.is_finite() {
        return Err(IterationError::NonFinite(0));
    }
    let check_bound = spec.is_gamma_star();
    let mut trace = IterationTrace {
        p: spec.p,
        gamma: spec.gamma,
        alpha: spec.alpha(),
        states: Vec::new(),
        diffs: Vec::new(),
    };
    let mut u = u0.clone();
    let mut n = 0;
    loop {
        observe(n, &u);
        let load = spec.load(&u)?;
        let mo = moments(&u, &load, spec)?;
        let record = StepRecord::new(mo, spec.p);
        if !(record.m.is_finite() && record.h1_norm.is_finite()) {
            return Err(IterationError::NonFinite(n));
        }
        if check_bound && n >= 1 && record.m > 1.0 + M_BOUND_SLACK {
            warn!("step {n}: M = {} exceeds 1 at gamma = gamma_star", record.m);
        }
        trace.states.push(record);

        let reason = if stop.m_tol.is_some_and(|t| (record.m - 1.0).abs() <= t) {
            Some(StopReason::MTolerance)
        } else if stop
            .diff_tol
            .zip(trace.diffs.last())
            .is_some_and(|(t, &d)| d <= t * record.h1_norm)
        {
            Some(StopReason::DiffTolerance)
        } else if n >= stop.max_steps {
            Some(StopReason::MaxSteps)
        } else {
            None
        };
        if let Some(reason) = reason {
            return Ok(IterationOutcome {
                field: u,
                trace,
                reason,
            });
        }

        let (next, _) = step_from_load(&u, &load, spec)?;
        if !next.is_finite() {
            return Err(IterationError::NonFinite(n + 1));
        }
        trace.diffs.push(spec.h1_norm(&next.sub(&u)));
        u = next;
        n += 1;
    }
}

/// Signed slacks of the four sequence inequalities for every consecutive
/// pair of iterates; a negative slack below `-tol` is a violation.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackReport {
    /// Per step `n`: `[growth, norm ratio, growth², M monotone]`.
    pub slacks: Vec<[f64; 4]>,
    pub minimum: [f64; 4],
    /// `(step, which)` pairs with slack below `-tol`.
    pub violations: Vec<(usize, usize)>,
}

impl SlackReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const SLACK_NAMES: [&str; 4] = [
    "slack_Mgrowth",
    "slack_revSob",
    "slack_Mgrowth2",
    "slack_Mmonotone",
];

/// Evaluates, for each `n`,
/// (a) `‖u_{n+1}‖/‖u_n‖ − M_n^{γ−1}`,
/// (b) `‖u_n‖/N_n − ‖u_{n+1}‖/N_{n+1}`,
/// (c) `M_n^{γ−1} − (‖u_{n+1}‖²/‖u_n‖²)(N_n/N_{n+1})`,
/// (d) `M_n^α − M_{n+1}`,
/// with `H¹` norms `‖·‖` and discrete `L^{p+1}` norms `N`.
pub fn check_sequence_inequalities(trace: &IterationTrace, tol: f64) -> SlackReport {
    let g1 = trace.gamma - 1.0;
    let slacks: Vec<[f64; 4]> = trace
        .states
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let ratio = b.h1_norm / a.h1_norm;
            [
                ratio - a.m.powf(g1),
                a.h1_norm / a.lp1_norm - b.h1_norm / b.lp1_norm,
                a.m.powf(g1) - ratio * ratio * (a.lp1_norm / b.lp1_norm),
                a.m.powf(trace.alpha) - b.m,
            ]
        })
        .collect();
    let mut minimum = [f64::INFINITY; 4];
    let mut violations = Vec::new();
    for (n, s) in slacks.iter().enumerate() {
        for (k, &v) in s.iter().enumerate() {
            minimum[k] = minimum[k].min(v);
            if v < -tol {
                violations.push((n, k));
            }
        }
    }
    SlackReport {
        slacks,
        minimum,
        violations,
    }
}

/// The linearization of the step at a fixed point `φ`:
/// `h ↦ ℒ⁻¹(B h) − γ(p−1) (⟨φ,h⟩_{H¹}/⟨φ,φ⟩_{H¹}) φ`, where `B` is the mass
/// weighted by `p|φ|^{p−1}` with the same quadrature as the nonlinear load.
pub struct Linearization<'a> {
    spec: &'a ProblemSpec,
    phi: Field,
    phi_sq: f64,
    weighted: SparseOperator,
}

impl<'a> Linearization<'a> {
    pub fn new(phi: &Field, spec: &'a ProblemSpec) -> Result<Self, IterationError> {
        let m = compute_m(phi, spec)?;
        if !((m - 1.0).abs() < FIXED_POINT_TOL) {
            return Err(IterationError::NotAFixedPoint((m - 1.0).abs()));
        }
        let weighted = linearized_weight_operator(phi, spec)?;
        Ok(Linearization {
            spec,
            phi: phi.clone(),
            phi_sq: spec.l().bilinear(phi, phi),
            weighted,
        })
    }

    /// `B`, the weighted mass of `p|φ|^{p−1}`.
    pub fn weighted_mass(&self) -> &SparseOperator {
        &self.weighted
    }

    pub fn apply(&self, h: &Field) -> Result<Field, IterationError> {
        self.spec.disc.check(h)?;
        let mut out = self.spec.solve_l(&self.weighted.mul_vec(h))?;
        let proj = self.spec.l().bilinear(&self.phi, h) / self.phi_sq;
        out.axpy(-self.spec.gamma * (self.spec.p - 1.0) * proj, &self.phi);
        Ok(out)
    }
}

pub fn apply_linearization(
    phi: &Field,
    h: &Field,
    spec: &ProblemSpec,
) -> Result<Field, IterationError> {
    Linearization::new(phi, spec)?.apply(h)
}

/// Weighted mass of `p|φ|^{p−1}` (no fixed-point check).
pub fn linearized_weight_operator(
    phi: &Field,
    spec: &ProblemSpec,
) -> Result<SparseOperator, IterationError> {
    spec.disc.check(phi)?;
    let w: Vec<f64> = phi
        .iter()
        .map(|&v| spec.p * v.abs().powf(spec.p - 1.0))
        .collect();
    let nodal = spec.mesh().expand(&w);
    Ok(assemble_weighted_mass(
        spec.mesh(),
        &nodal,
        spec.disc.mass_kind(),
    )?)
}

/// Leading eigenpairs of `p|φ|^{p−1} ψ = ν ℒ ψ`.
pub fn linearized_spectrum(
    phi: &Field,
    spec: &ProblemSpec,
    k: usize,
    cfg: &EigenConfig,
) -> Result<SpectrumResult, IterationError> {
    let b = linearized_weight_operator(phi, spec)?;
    Ok(top_generalized_eigenpairs_with(&b, spec.l(), k, cfg)?)
}

/// Predicted linear contraction factor `max{|p − γ(p−1)|, μ★}`, where `μ★` is
/// the largest computed eigenvalue other than the one closest to `p`
/// (the eigenvalue `p` belongs to `φ` itself and is damped by the `M` factor).
pub fn contraction_factor(eigenvalues: &[f64], p: f64, gamma: f64) -> f64 {
    let own = eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - p).abs().total_cmp(&(b.1 - p).abs()))
        .map(|(i, _)| i);
    let mu_star = eigenvalues
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != own)
        .map(|(_, &v)| v)
        .fold(0.0, f64::max);
    (p - gamma * (p - 1.0)).abs().max(mu_star)
}
