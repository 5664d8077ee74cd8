//! Sparse SPD solves (banded Cholesky or Jacobi-preconditioned conjugate
//! gradients) and a generalized symmetric eigensolver for the largest
//! eigenvalues of `L⁻¹B`.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::assemble::{Field, SparseOperator};
use crate::rng::XorShift64Star;

/// Seed for eigensolver start vectors when none is supplied.
pub const DEFAULT_EIGEN_SEED: u64 = 0x5eed_0001;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error(
        "linear solve did not converge: {iterations} iterations, relative residual {residual:e}"
    )]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("matrix is not positive definite: pivot {index} is {pivot:e}")]
    SingularMatrix { index: usize, pivot: f64 },
    #[error("dimension mismatch: operator {expected}, vector {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("requested {k} eigenpairs of a {n}-dimensional problem")]
    KTooLarge { k: usize, n: usize },
    #[error("eigensolver did not converge after {sweeps} sweeps (residuals {residuals:?})")]
    EigenNoConvergence { sweeps: usize, residuals: Vec<f64> },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    ConjugateGradient,
    BandedCholesky,
}

impl SolveMethod {
    /// Banded Cholesky for narrow bands (1D meshes), CG otherwise.
    pub fn auto_for(a: &SparseOperator) -> Self {
        if a.half_bandwidth() <= 64 {
            SolveMethod::BandedCholesky
        } else {
            SolveMethod::ConjugateGradient
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub rel_tolerance: f64,
    /// Defaults to `10 n` when `None`.
    pub max_iterations: Option<usize>,
    pub method: SolveMethod,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            rel_tolerance: 1e-12,
            max_iterations: None,
            method: SolveMethod::ConjugateGradient,
        }
    }
}

impl SolveConfig {
    pub fn with_method(method: SolveMethod) -> Self {
        SolveConfig {
            method,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), LinalgError> {
        if !(self.rel_tolerance > 0.0 && self.rel_tolerance < 1.0) {
            return Err(LinalgError::InvalidConfig(format!(
                "rel_tolerance {} not in (0, 1)",
                self.rel_tolerance
            )));
        }
        if self.max_iterations == Some(0) {
            return Err(LinalgError::InvalidConfig(
                "max_iterations must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Lower-triangular band factor `A = L Lᵀ`.
#[derive(Debug, Clone)]
struct BandCholesky {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandCholesky {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + (j + self.bw - i)
    }

    fn factor(a: &SparseOperator) -> Result<Self, LinalgError> {
        let n = a.dim();
        let bw = a.half_bandwidth();
        let mut f = BandCholesky {
            n,
            bw,
            band: vec![0.0; n * (bw + 1)],
        };
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    let k = f.idx(i, j);
                    f.band[k] = v;
                }
            }
        }
        for i in 0..n {
            let lo_i = i.saturating_sub(bw);
            for j in lo_i..=i {
                let lo = lo_i.max(j.saturating_sub(bw));
                let mut s = f.band[f.idx(i, j)];
                for k in lo..j {
                    s -= f.band[f.idx(i, k)] * f.band[f.idx(j, k)];
                }
                let ij = f.idx(i, j);
                if i == j {
                    if !(s > 0.0) {
                        return Err(LinalgError::SingularMatrix { index: i, pivot: s });
                    }
                    f.band[ij] = s.sqrt();
                } else {
                    f.band[ij] = s / f.band[f.idx(j, j)];
                }
            }
        }
        Ok(f)
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(self.bw)..i {
                s -= self.band[self.idx(i, k)] * y[k];
            }
            y[i] = s / self.band[self.idx(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + self.bw + 1).min(n) {
                s -= self.band[self.idx(k, i)] * y[k];
            }
            y[i] = s / self.band[self.idx(i, i)];
        }
        y
    }
}

/// An SPD operator prepared for repeated solves.
#[derive(Debug, Clone)]
pub struct SpdSolver {
    config: SolveConfig,
    kind: SolverKind,
}

#[derive(Debug, Clone)]
enum SolverKind {
    Banded(BandCholesky),
    Cg {
        a: SparseOperator,
        inv_diag: Vec<f64>,
    },
}

impl SpdSolver {
    pub fn new(a: &SparseOperator, config: &SolveConfig) -> Result<Self, LinalgError> {
        config.validate()?;
        let kind = match config.method {
            SolveMethod::BandedCholesky => SolverKind::Banded(BandCholesky::factor(a)?),
            SolveMethod::ConjugateGradient => {
                let diag = a.diagonal();
                if let Some((index, &pivot)) = diag.iter().enumerate().find(|(_, &d)| !(d > 0.0)) {
                    return Err(LinalgError::SingularMatrix { index, pivot });
                }
                SolverKind::Cg {
                    a: a.clone(),
                    inv_diag: diag.iter().map(|d| 1.0 / d).collect(),
                }
            }
        };
        Ok(SpdSolver {
            config: config.clone(),
            kind,
        })
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            SolverKind::Banded(f) => f.n,
            SolverKind::Cg { a, .. } => a.dim(),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim(),
                found: b.len(),
            });
        }
        if b.iter().all(|&v| v == 0.0) {
            return Ok(vec![0.0; b.len()]);
        }
        match &self.kind {
            SolverKind::Banded(f) => Ok(f.solve(b)),
            SolverKind::Cg { a, inv_diag } => {
                let max_it = self.config.max_iterations.unwrap_or(10 * a.dim().max(1));
                pcg(a, inv_diag, b, self.config.rel_tolerance, max_it)
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn pcg(
    a: &SparseOperator,
    inv_diag: &[f64],
    b: &[f64],
    tol: f64,
    max_it: usize,
) -> Result<Vec<f64>, LinalgError> {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=max_it {
        a.mul_vec_into(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = norm(&r) / bnorm;
        if res <= tol {
            return Ok(x);
        }
        if it == max_it {
            return Err(LinalgError::NoConvergence {
                iterations: it,
                residual: res,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(LinalgError::NoConvergence {
        iterations: max_it,
        residual: norm(&r) / bnorm,
    })
}

/// Solve `A x = b` for SPD `A`.
pub fn solve_spd(
    a: &SparseOperator,
    b: &[f64],
    cfg: &SolveConfig,
) -> Result<Vec<f64>, LinalgError> {
    SpdSolver::new(a, cfg)?.solve(b)
}

/// Leading eigenpairs of `B ψ = ν L ψ`.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// L-orthonormal.
    pub eigenvectors: Vec<Field>,
    /// `‖Bψ − νLψ‖ / ‖Lψ‖` per pair.
    pub residuals: Vec<f64>,
    pub seed: u64,
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenConfig {
    pub tol: f64,
    pub max_sweeps: usize,
    pub seed: u64,
    /// Extra block vectors beyond `k`.
    pub guard: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig {
            tol: 1e-10,
            max_sweeps: 5000,
            seed: DEFAULT_EIGEN_SEED,
            guard: 6,
        }
    }
}

struct LInner<'a> {
    l: &'a SparseOperator,
}

impl LInner<'_> {
    fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.l.bilinear(x, y)
    }

    /// Orthonormalize `v` against `basis` (assumed L-orthonormal), twice.
    /// Returns false if `v` collapsed.
    fn orthonormalize(&self, v: &mut [f64], basis: &[Vec<f64>]) -> bool {
        let start = self.inner(v, v).sqrt();
        if !(start > 0.0) {
            return false;
        }
        for _ in 0..2 {
            for u in basis {
                let c = self.inner(u, v);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= c * ui;
                }
            }
        }
        let nrm = self.inner(v, v).sqrt();
        if !(nrm > 1e-10 * start) {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= nrm);
        true
    }
}

/// The `k` largest eigenvalues of `L⁻¹B` with L-orthonormal eigenvectors,
/// using the default seed and block size.
pub fn top_generalized_eigenpairs(
    b: &SparseOperator,
    l: &SparseOperator,
    k: usize,
    tol: f64,
) -> Result<SpectrumResult, LinalgError> {
    top_generalized_eigenpairs_with(
        b,
        l,
        k,
        &EigenConfig {
            tol,
            ..Default::default()
        },
    )
}

/// Block inverse-operator power iteration: each sweep applies `L⁻¹B` to the
/// block, L-orthonormalizes it against the locked pairs, and extracts Ritz
/// pairs. Leading pairs whose residual drops below `cfg.tol` are locked and
/// deflated from later sweeps.
pub fn top_generalized_eigenpairs_with(
    b: &SparseOperator,
    l: &SparseOperator,
    k: usize,
    cfg: &EigenConfig,
) -> Result<SpectrumResult, LinalgError> {
    let n = l.dim();
    if b.dim() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: b.dim(),
        });
    }
    if k == 0 || k > n {
        return Err(LinalgError::KTooLarge { k, n });
    }
    let solver = SpdSolver::new(l, &SolveConfig::with_method(SolveMethod::auto_for(l)))?;
    let ip = LInner { l };
    let mut rng = XorShift64Star::new(cfg.seed);
    let random_vec =
        |rng: &mut XorShift64Star| -> Vec<f64> { (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect() };

    let block = (k + cfg.guard).min(n);
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut locked_vals: Vec<f64> = Vec::new();
    let mut locked_res: Vec<f64> = Vec::new();

    let mut active: Vec<Vec<f64>> = Vec::with_capacity(block);
    while active.len() < block {
        let mut v = random_vec(&mut rng);
        let basis: Vec<Vec<f64>> = locked.iter().chain(active.iter()).cloned().collect();
        if ip.orthonormalize(&mut v, &basis) {
            active.push(v);
        }
    }

    let mut last_res = Vec::new();
    for sweep in 1..=cfg.max_sweeps {
        // Y = L⁻¹ B X, orthonormalized against locked pairs and itself.
        let mut ys: Vec<Vec<f64>> = Vec::with_capacity(active.len());
        for x in &active {
            let mut y = solver.solve(&b.mul_vec(x))?;
            let mut basis: Vec<Vec<f64>> = locked.iter().chain(ys.iter()).cloned().collect();
            let mut tries = 0;
            while !ip.orthonormalize(&mut y, &basis) {
                y = random_vec(&mut rng);
                tries += 1;
                if tries > 20 {
                    return Err(LinalgError::EigenNoConvergence {
                        sweeps: sweep,
                        residuals: last_res,
                    });
                }
                basis = locked.iter().chain(ys.iter()).cloned().collect();
            }
            ys.push(y);
        }

        // Rayleigh-Ritz on span(Y) with the L-orthonormal basis.
        let m = ys.len();
        let bys: Vec<Vec<f64>> = ys.iter().map(|y| b.mul_vec(y)).collect();
        let h = DMatrix::from_fn(m, m, |i, j| {
            0.5 * (dot(&ys[i], &bys[j]) + dot(&ys[j], &bys[i]))
        });
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

        let mut ritz_vals = Vec::with_capacity(m);
        let mut ritz_vecs = Vec::with_capacity(m);
        let mut ritz_res = Vec::with_capacity(m);
        for &c in &order {
            let theta = eig.eigenvalues[c];
            let mut x = vec![0.0; n];
            let mut bx = vec![0.0; n];
            for a in 0..m {
                let coef = eig.eigenvectors[(a, c)];
                for i in 0..n {
                    x[i] += coef * ys[a][i];
                    bx[i] += coef * bys[a][i];
                }
            }
            let lx = l.mul_vec(&x);
            let r: Vec<f64> = bx.iter().zip(&lx).map(|(bv, lv)| bv - theta * lv).collect();
            ritz_res.push(norm(&r) / norm(&lx).max(f64::MIN_POSITIVE));
            ritz_vals.push(theta);
            ritz_vecs.push(x);
        }

        // Lock the converged leading pairs.
        let mut n_lock = 0;
        while locked.len() + n_lock < k && n_lock < m && ritz_res[n_lock] < cfg.tol {
            n_lock += 1;
        }
        for i in 0..n_lock {
            locked.push(ritz_vecs[i].clone());
            locked_vals.push(ritz_vals[i]);
            locked_res.push(ritz_res[i]);
        }
        if locked.len() >= k {
            let mut idx: Vec<usize> = (0..k).collect();
            idx.sort_by(|&i, &j| locked_vals[j].total_cmp(&locked_vals[i]));
            return Ok(SpectrumResult {
                eigenvalues: idx.iter().map(|&i| locked_vals[i]).collect(),
                eigenvectors: idx.iter().map(|&i| Field::new(locked[i].clone())).collect(),
                residuals: idx.iter().map(|&i| locked_res[i]).collect(),
                seed: cfg.seed,
                sweeps: sweep,
            });
        }
        last_res = locked_res
            .iter()
            .chain(&ritz_res[n_lock..])
            .copied()
            .take(k)
            .collect();
        active = ritz_vecs.split_off(n_lock);
    }
    Err(LinalgError::EigenNoConvergence {
        sweeps: cfg.max_sweeps,
        residuals: last_res,
    })
}
