//! Post-processing of runs: errors against the exact 1D solution, observed
//! contraction rates and growth of perturbations.

use crate::assemble::Field;
use crate::exact::{exact_solution, EllipticError, EllipticParams};
use crate::iteration::{
    naive_step, petviashvili_step, IterationError, IterationTrace, ProblemSpec,
};
use crate::mesh::MeshKind;

/// Nodal interpolant of the exact cn solution on the interior nodes.
pub fn exact_interpolant(
    spec: &ProblemSpec,
    params: &EllipticParams,
) -> Result<Field, EllipticError> {
    let mesh = spec.mesh();
    debug_assert_eq!(mesh.kind(), MeshKind::Interval);
    let values = mesh
        .interior_nodes()
        .iter()
        .map(|&i| exact_solution(mesh.node(i)[0], params))
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(Field::new(values))
}

/// `‖u − I_h φ‖_{H¹}` for the nodal interpolant `I_h φ` of the reference.
pub fn h1_error(u: &Field, reference: &Field, spec: &ProblemSpec) -> f64 {
    spec.h1_norm(&u.sub(reference))
}

/// Geometric-mean contraction of successive differences over a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub ratio: f64,
    pub first_step: usize,
    pub last_step: usize,
}

/// Late-stage ratio `d_{n+1}/d_n` of successive differences
/// `d_n = ‖u_{n+1} − u_n‖_{H¹}`, averaged geometrically over the steps where
/// `d_n/‖u_n‖` lies in `[lo, hi]`: late enough for the slowest mode to
/// dominate, early enough to stay above rounding noise.
pub fn late_stage_ratio(trace: &IterationTrace, lo: f64, hi: f64) -> Option<RateEstimate> {
    let inside: Vec<usize> = trace
        .diffs
        .iter()
        .enumerate()
        .filter(|(n, &d)| {
            let rel = d / trace.states[*n].h1_norm;
            rel >= lo && rel <= hi
        })
        .map(|(n, _)| n)
        .collect();
    let (&first, &last) = (inside.first()?, inside.last()?);
    if last <= first {
        return None;
    }
    let ratio = (trace.diffs[last] / trace.diffs[first]).powf(1.0 / (last - first) as f64);
    Some(RateEstimate {
        ratio,
        first_step: first,
        last_step: last,
    })
}

/// Distances `‖u_n − φ‖_{H¹}` along a run started from `(1+ε)φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationRun {
    pub deviations: Vec<f64>,
}

impl PerturbationRun {
    /// Geometric-mean growth per step over the steps whose deviation stays
    /// below `max_relative · ‖φ‖` (the linear regime).
    pub fn linear_growth(&self, phi_norm: f64, max_relative: f64) -> Option<f64> {
        let last = self
            .deviations
            .iter()
            .rposition(|&d| d <= max_relative * phi_norm)?;
        if last == 0 {
            return None;
        }
        Some((self.deviations[last] / self.deviations[0]).powf(1.0 / last as f64))
    }

    /// Nonincreasing, with increases below `floor` ignored as rounding noise.
    pub fn is_monotone_decreasing(&self, floor: f64) -> bool {
        self.deviations
            .windows(2)
            .all(|w| w[1] <= w[0] || w[1] <= floor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Naive,
    Petviashvili,
}

pub fn perturbation_run(
    phi: &Field,
    eps: f64,
    steps: usize,
    kind: StepKind,
    spec: &ProblemSpec,
) -> Result<PerturbationRun, IterationError> {
    let mut u = phi.scaled(1.0 + eps);
    let mut deviations = vec![spec.h1_norm(&u.sub(phi))];
    for _ in 0..steps {
        u = match kind {
            StepKind::Naive => naive_step(&u, spec)?,
            StepKind::Petviashvili => petviashvili_step(&u, spec)?,
        };
        deviations.push(spec.h1_norm(&u.sub(phi)));
    }
    Ok(PerturbationRun { deviations })
}
