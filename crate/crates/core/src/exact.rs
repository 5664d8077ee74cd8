//! Exact solution of the 1D cubic problem `φ'' − φ + φ³ = 0`, `φ(±X) = 0`,
//! in terms of the Jacobi elliptic function `cn(βx; m)` with parameter
//! `m = (1 + β⁻²)/2` (parameter convention, not modulus).
//!
//! Substituting `φ = A cn(βx; m)` and using
//! `cn'' = (2m − 1) cn − 2m cn³` gives `β²(2m − 1) = 1` and `A² = 2mβ² = 1 + β²`.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

const AGM_MAX_ITER: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EllipticError {
    #[error("elliptic parameter m = {0} outside [0, 1)")]
    ParameterOutOfRange(f64),
    #[error("no sign change for beta in [{lo:e}, {hi:e}]")]
    BracketFailure { lo: f64, hi: f64 },
    #[error("x = {x} outside [-{xmax}, {xmax}]")]
    OutOfDomain { x: f64, xmax: f64 },
    #[error("half-width must be positive, got {0}")]
    InvalidHalfWidth(f64),
}

fn check_parameter(m: f64) -> Result<(), EllipticError> {
    if (0.0..1.0).contains(&m) {
        Ok(())
    } else {
        Err(EllipticError::ParameterOutOfRange(m))
    }
}

/// Complete elliptic integral of the first kind, `K(m) = π / (2 AGM(1, √(1−m)))`.
pub fn complete_k(m: f64) -> Result<f64, EllipticError> {
    check_parameter(m)?;
    let (mut a, mut b) = (1.0f64, (1.0 - m).sqrt());
    for _ in 0..AGM_MAX_ITER {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    Ok(FRAC_PI_2 / a)
}

/// `(sn, cn, dn)(u; m)` by the descending Landen / AGM scheme.
pub fn jacobi_sn_cn_dn(u: f64, m: f64) -> Result<(f64, f64, f64), EllipticError> {
    check_parameter(m)?;
    if m == 0.0 {
        return Ok((u.sin(), u.cos(), 1.0));
    }
    let mut a = vec![1.0f64];
    let mut c = vec![m.sqrt()];
    let mut b = (1.0 - m).sqrt();
    while c.last().unwrap().abs() > f64::EPSILON * a.last().unwrap() && a.len() < AGM_MAX_ITER {
        let (ai, bi) = (*a.last().unwrap(), b);
        a.push(0.5 * (ai + bi));
        c.push(0.5 * (ai - bi));
        b = (ai * bi).sqrt();
    }
    let n = a.len() - 1;
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    let mut phi_prev = phi;
    for i in (1..=n).rev() {
        phi_prev = phi;
        phi = 0.5 * (phi + (c[i] / a[i] * phi.sin()).asin());
    }
    let (sn, cn) = phi.sin_cos();
    let dn = if n == 0 {
        1.0
    } else {
        cn / (phi_prev - phi).cos()
    };
    Ok((sn, cn, dn))
}

pub fn jacobi_cn(u: f64, m: f64) -> Result<f64, EllipticError> {
    jacobi_sn_cn_dn(u, m).map(|(_, cn, _)| cn)
}

/// Parameters of the exact solution on `(−xmax, xmax)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticParams {
    pub xmax: f64,
    pub beta: f64,
    pub m: f64,
    pub k: f64,
    pub amplitude: f64,
    /// Number of interior zeros of the solution (0 for the ground state).
    pub branch: usize,
}

impl EllipticParams {
    /// `β · xmax − (2·branch + 1) K(m)`; zero at a solution.
    pub fn residual(&self) -> f64 {
        self.beta * self.xmax - (2 * self.branch + 1) as f64 * self.k
    }
}

fn parameter_of(beta: f64) -> f64 {
    0.5 * (1.0 + 1.0 / (beta * beta))
}

/// Ground-state branch: `β · xmax = K(m(β))`.
pub fn solve_beta(xmax: f64) -> Result<EllipticParams, EllipticError> {
    solve_beta_branch(xmax, 0)
}

/// Solve `β · xmax = (2·branch + 1) K(m(β))` by bisection on `β ∈ [1e−6, 1e6]`.
///
/// For `β ≤ 1` the parameter leaves `[0, 1)` and `K` is infinite, so the
/// residual is taken as negative there. Beyond `xmax ≈ 18` the root lies
/// within one ulp of `β = 1` and the residual cannot be driven to zero in
/// double precision; the closest representable `β > 1` is returned.
pub fn solve_beta_branch(xmax: f64, branch: usize) -> Result<EllipticParams, EllipticError> {
    if !(xmax > 0.0) || !xmax.is_finite() {
        return Err(EllipticError::InvalidHalfWidth(xmax));
    }
    let quarter_periods = (2 * branch + 1) as f64;
    let f = |beta: f64| match complete_k(parameter_of(beta)) {
        Ok(k) => beta * xmax - quarter_periods * k,
        Err(_) => f64::NEG_INFINITY,
    };
    let (mut lo, mut hi) = (1e-6, 1e6);
    if !(f(lo) < 0.0 && f(hi) > 0.0) {
        return Err(EllipticError::BracketFailure { lo, hi });
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-13 * mid.max(1.0) * 1e-2 {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta = 0.5 * (lo + hi);
    let m = parameter_of(beta);
    Ok(EllipticParams {
        xmax,
        beta,
        m,
        k: complete_k(m)?,
        amplitude: (1.0 + beta * beta).sqrt(),
        branch,
    })
}

/// `sqrt(1 + β²) · cn(βx; m)`.
pub fn exact_solution(x: f64, params: &EllipticParams) -> Result<f64, EllipticError> {
    if x.abs() > params.xmax * (1.0 + 1e-12) {
        return Err(EllipticError::OutOfDomain {
            x,
            xmax: params.xmax,
        });
    }
    Ok(params.amplitude * jacobi_cn(params.beta * x, params.m)?)
}

/// Derivative of [`exact_solution`]: `−A β sn dn`.
pub fn exact_derivative(x: f64, params: &EllipticParams) -> Result<f64, EllipticError> {
    if x.abs() > params.xmax * (1.0 + 1e-12) {
        return Err(EllipticError::OutOfDomain {
            x,
            xmax: params.xmax,
        });
    }
    let (sn, _, dn) = jacobi_sn_cn_dn(params.beta * x, params.m)?;
    Ok(-params.amplitude * params.beta * sn * dn)
}
