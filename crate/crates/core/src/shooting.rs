//! One-node radial excited states by shooting on the gluing radius `r0`.
//!
//! A positive solution on `(0, r0)` (Neumann at 0, Dirichlet at `r0`) and a
//! positive solution on `(r0, R)` (Dirichlet at both ends) are glued with the
//! outer piece negated. The result is `C¹` exactly when the slope mismatch
//! `F(r0) = ∂_r φ_in(r0⁻) + ∂_r φ_out(r0⁺)` vanishes.

use log::{debug, warn};
use thiserror::Error;

use crate::assemble::{Field, MassKind};
use crate::iteration::{gamma_star, iterate, IterationError, ProblemSpec, StopReason, StopRule};
use crate::mesh::{Mesh, MeshError, MeshKind};

/// Norm below which a subdomain solve is considered to have collapsed to zero.
pub const COLLAPSE_NORM: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShootingError {
    #[error("subdomain ({rlo}, {rhi}) collapsed to the zero solution")]
    TrivialCollapse { rlo: f64, rhi: f64 },
    #[error("no sign change of the slope mismatch on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("root search stopped after {iterations} iterations with |F| = {residual:e}")]
    MaxRootIterations { iterations: usize, residual: f64 },
    #[error("gluing radius {r0} outside (0, {rmax})")]
    RadiusOutOfRange { r0: f64, rmax: f64 },
    #[error("need at least 4 cells per side, got {0}")]
    TooFewCells(usize),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Iteration(#[from] IterationError),
}

/// Which combination of one-sided slopes defines `F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MismatchConvention {
    /// `φ_in′(r0⁻) + φ_out′(r0⁺)`: zero when the sign-flipped glued function is `C¹`.
    #[default]
    Glued,
    /// `φ_in′(r0⁻) − φ_out′(r0⁺)` with both pieces positive.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProblem {
    pub rmax: f64,
    pub p: f64,
    pub gamma: f64,
    pub mass: MassKind,
    pub n_cells_per_side: usize,
    pub stop: StopRule,
    pub convention: MismatchConvention,
}

impl RadialProblem {
    /// `R`, `p` and γ★, with a tight stop rule so that `F` is not polluted by
    /// iteration error.
    pub fn new(rmax: f64, p: f64) -> Self {
        RadialProblem {
            rmax,
            p,
            gamma: gamma_star(p),
            mass: MassKind::default(),
            n_cells_per_side: 250,
            stop: StopRule {
                max_steps: 1000,
                m_tol: None,
                diff_tol: Some(1e-12),
            },
            convention: MismatchConvention::Glued,
        }
    }

    /// The default `r0` scan: 20 equispaced points on `[0.02 R, 0.8 R]`.
    pub fn default_scan_grid(&self) -> Vec<f64> {
        let (lo, hi) = (0.02 * self.rmax, 0.8 * self.rmax);
        (0..20).map(|i| lo + (hi - lo) * i as f64 / 19.0).collect()
    }
}

/// A converged positive solution on one subdomain.
#[derive(Debug, Clone)]
pub struct SubdomainSolution {
    pub mesh: Mesh,
    pub field: Field,
    /// Values on all mesh nodes, zeros at Dirichlet ends.
    pub nodal: Vec<f64>,
    pub final_m: f64,
    pub steps: usize,
}

pub fn solve_subdomain(
    rlo: f64,
    rhi: f64,
    neumann_left: bool,
    problem: &RadialProblem,
    n_cells: usize,
) -> Result<SubdomainSolution, ShootingError> {
    let mesh = Mesh::radial_segment(rlo, rhi, n_cells, neumann_left)?;
    let spec = ProblemSpec::new(mesh.clone(), problem.p, problem.gamma, problem.mass)?;
    let guess = |r: f64| {
        if neumann_left {
            rhi * rhi - r * r
        } else {
            (r - rlo) * (rhi - r)
        }
    };
    let u0 = Field::new(
        mesh.interior_nodes()
            .iter()
            .map(|&i| guess(mesh.node(i)[0]))
            .collect(),
    );
    let out = iterate(&u0, &spec, &problem.stop)?;
    if out.reason == StopReason::MaxSteps
        && (problem.stop.m_tol.is_some() || problem.stop.diff_tol.is_some())
    {
        warn!("subdomain ({rlo}, {rhi}) hit the step limit");
    }
    if spec.h1_norm(&out.field) < COLLAPSE_NORM {
        return Err(ShootingError::TrivialCollapse { rlo, rhi });
    }
    let nodal = mesh.expand(&out.field);
    Ok(SubdomainSolution {
        final_m: out.final_m(),
        steps: out.trace.steps(),
        nodal,
        field: out.field,
        mesh,
    })
}

/// The radial ground state on `(0, R)` with `cells` elements.
pub fn ground_state(
    problem: &RadialProblem,
    cells: usize,
) -> Result<SubdomainSolution, ShootingError> {
    solve_subdomain(0.0, problem.rmax, true, problem, cells)
}

fn left_slope(nodal: &[f64], mesh: &Mesh) -> f64 {
    let n = nodal.len() - 1;
    let h = mesh.node(n)[0] - mesh.node(n - 1)[0];
    (3.0 * nodal[n] - 4.0 * nodal[n - 1] + nodal[n - 2]) / (2.0 * h)
}

fn right_slope(nodal: &[f64], mesh: &Mesh) -> f64 {
    let h = mesh.node(1)[0] - mesh.node(0)[0];
    (-3.0 * nodal[0] + 4.0 * nodal[1] - nodal[2]) / (2.0 * h)
}

#[derive(Debug, Clone)]
pub struct MismatchEval {
    pub r0: f64,
    pub value: f64,
    pub inner: SubdomainSolution,
    pub outer: SubdomainSolution,
}

pub fn evaluate_mismatch(r0: f64, problem: &RadialProblem) -> Result<MismatchEval, ShootingError> {
    if !(r0 > 0.0 && r0 < problem.rmax) {
        return Err(ShootingError::RadiusOutOfRange {
            r0,
            rmax: problem.rmax,
        });
    }
    let n = problem.n_cells_per_side;
    if n < 4 {
        return Err(ShootingError::TooFewCells(n));
    }
    let inner = solve_subdomain(0.0, r0, true, problem, n)?;
    let outer = solve_subdomain(r0, problem.rmax, false, problem, n)?;
    let din = left_slope(&inner.nodal, &inner.mesh);
    let dout = right_slope(&outer.nodal, &outer.mesh);
    let value = match problem.convention {
        MismatchConvention::Glued => din + dout,
        MismatchConvention::Literal => din - dout,
    };
    debug!("F({r0}) = {value:e}");
    Ok(MismatchEval {
        r0,
        value,
        inner,
        outer,
    })
}

pub fn slope_mismatch(r0: f64, problem: &RadialProblem) -> Result<f64, ShootingError> {
    Ok(evaluate_mismatch(r0, problem)?.value)
}

/// `F` at every grid point, in order.
pub fn scan(problem: &RadialProblem, grid: &[f64]) -> Result<Vec<(f64, f64)>, ShootingError> {
    grid.iter()
        .map(|&r0| Ok((r0, slope_mismatch(r0, problem)?)))
        .collect()
}

/// First adjacent pair of scan points with a sign change of `F`.
pub fn first_bracket(scan: &[(f64, f64)]) -> Option<(f64, f64)> {
    scan.windows(2)
        .find(|w| w[0].1 * w[1].1 <= 0.0)
        .map(|w| (w[0].0, w[1].0))
}

/// Excited state glued at the root `r0`.
#[derive(Debug, Clone)]
pub struct GluedState {
    pub r0: f64,
    pub mismatch: f64,
    pub inner: SubdomainSolution,
    pub outer: SubdomainSolution,
    /// Radial mesh of `(0, R)`: inner nodes followed by the outer nodes
    /// beyond `r0`; only `R` is masked.
    pub mesh: Mesh,
    /// Interior values on [`GluedState::mesh`] (outer piece negated).
    pub glued: Field,
    pub root_iterations: usize,
}

impl GluedState {
    fn from_eval(eval: MismatchEval, root_iterations: usize) -> Result<Self, ShootingError> {
        let MismatchEval {
            r0,
            value,
            inner,
            outer,
        } = eval;
        let mut nodes: Vec<f64> = (0..inner.mesh.n_nodes())
            .map(|i| inner.mesh.node(i)[0])
            .collect();
        nodes.extend((1..outer.mesh.n_nodes()).map(|i| outer.mesh.node(i)[0]));
        let mut values = inner.nodal.clone();
        values.extend(outer.nodal[1..].iter().map(|v| -v));
        let mut mask = vec![false; nodes.len()];
        *mask.last_mut().unwrap() = true;
        let mesh = Mesh::from_1d_nodes(MeshKind::Radial, nodes, mask)?;
        let glued = Field::new(mesh.restrict(&values));
        Ok(GluedState {
            r0,
            mismatch: value,
            inner,
            outer,
            mesh,
            glued,
            root_iterations,
        })
    }

    /// Problem on the glued mesh, for energies, `M` and spectra.
    pub fn full_spec(&self, problem: &RadialProblem) -> Result<ProblemSpec, ShootingError> {
        Ok(ProblemSpec::new(
            self.mesh.clone(),
            problem.p,
            problem.gamma,
            problem.mass,
        )?)
    }

    pub fn sign_changes(&self) -> usize {
        sign_changes(&self.mesh.expand(&self.glued))
    }
}

/// Number of sign changes in a sequence, skipping exact zeros.
pub fn sign_changes(values: &[f64]) -> usize {
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in values {
        if v != 0.0 {
            if last != 0.0 && (v > 0.0) != (last > 0.0) {
                count += 1;
            }
            last = v;
        }
    }
    count
}

const MAX_ROOT_ITERATIONS: usize = 100;

/// Root of `F` on `bracket` to `|F| ≤ tol`, by secant steps safeguarded with
/// bisection.
pub fn find_excited_state(
    problem: &RadialProblem,
    bracket: (f64, f64),
    tol: f64,
) -> Result<GluedState, ShootingError> {
    let (mut a, mut b) = bracket;
    let ea = evaluate_mismatch(a, problem)?;
    let eb = evaluate_mismatch(b, problem)?;
    let (mut fa, mut fb) = (ea.value, eb.value);
    if fa.abs() <= tol {
        return GluedState::from_eval(ea, 0);
    }
    if fb.abs() <= tol {
        return GluedState::from_eval(eb, 0);
    }
    if fa * fb > 0.0 {
        return Err(ShootingError::NoBracket { lo: a, hi: b });
    }
    let mut best = (fa.abs(), a);
    for it in 1..=MAX_ROOT_ITERATIONS {
        let secant = b - fb * (b - a) / (fb - fa);
        let width = (b - a).abs();
        let lo = a.min(b) + 0.05 * width;
        let hi = a.max(b) - 0.05 * width;
        let c = if secant.is_finite() && secant > lo && secant < hi {
            secant
        } else {
            0.5 * (a + b)
        };
        let ec = evaluate_mismatch(c, problem)?;
        let fc = ec.value;
        if fc.abs() < best.0 {
            best = (fc.abs(), c);
        }
        if fc.abs() <= tol {
            return GluedState::from_eval(ec, it);
        }
        if fa * fc < 0.0 {
            b = c;
            fb = fc;
        } else {
            a = c;
            fa = fc;
        }
    }
    Err(ShootingError::MaxRootIterations {
        iterations: MAX_ROOT_ITERATIONS,
        residual: best.0,
    })
}
