//! Petviashvili fixed-point iteration for `−φ + Δφ + |φ|^{p−1}φ = 0` with
//! homogeneous Dirichlet conditions, discretized by P1 finite elements on
//! intervals, radial segments and triangulations.
//!
//! * [`mesh`]: meshes and Triangle-format input.
//! * [`assemble`]: ℒ = I − Δ, mass matrices, nonlinear load and norms.
//! * [`linalg`]: SPD solves and the generalized eigensolver.
//! * [`iteration`]: the iteration, its diagnostics and linearization.
//! * [`exact`]: the Jacobi-elliptic reference solution in 1D.
//! * [`shooting`]: radial excited states by slope matching.
//! * [`guess`]: named initial guesses.
//! * [`analysis`]: errors, rates and perturbation growth of runs.

pub mod analysis;
pub mod assemble;
pub mod exact;
pub mod guess;
pub mod iteration;
pub mod linalg;
pub mod mesh;
pub mod rng;
pub mod shooting;

pub use assemble::{Discretization, Field, MassKind, SparseOperator};
pub use guess::InitialGuess;
pub use iteration::{IterationOutcome, IterationTrace, ProblemSpec, StopReason, StopRule};
pub use linalg::SpectrumResult;
pub use mesh::{Mesh, MeshKind};
