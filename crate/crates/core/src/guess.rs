//! Named initial guesses, evaluated on the interior nodes of a mesh.

use thiserror::Error;

use crate::assemble::Field;
use crate::mesh::{Mesh, MeshKind};
use crate::rng::XorShift64Star;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GuessError {
    #[error("guess '{guess}' is not defined on {kind} meshes")]
    WrongMesh {
        guess: &'static str,
        kind: &'static str,
    },
    #[error("mesh is not symmetric about its midpoint (node {0})")]
    NotSymmetric(usize),
    #[error("guess has {found} values, mesh has {expected} interior nodes")]
    WrongLength { expected: usize, found: usize },
    #[error("guess vanishes identically on the interior nodes")]
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    /// `(b − x)(x − a)` on `(a, b)`.
    Parabola,
    /// `½ (b − x)² (x − a)` on `(a, b)`.
    AsymmetricCubic,
    /// Independent `U(−1, 1)` nodal values.
    Rough { seed: u64 },
    /// `½ (r(x) + r(−x))` for a rough `r`.
    RoughSymmetrized { seed: u64 },
    /// `R² − r²` on a radial mesh over `(0, R)`.
    RadialParabola,
    /// `exp(−coefficient · |x − center|²)`.
    Gaussian2d { center: [f64; 2], coefficient: f64 },
    /// Explicit interior values.
    Values(Vec<f64>),
}

impl InitialGuess {
    pub fn name(&self) -> &'static str {
        match self {
            InitialGuess::Parabola => "parabola",
            InitialGuess::AsymmetricCubic => "asymmetric-cubic",
            InitialGuess::Rough { .. } => "rough",
            InitialGuess::RoughSymmetrized { .. } => "rough-symmetrized",
            InitialGuess::RadialParabola => "radial-parabola",
            InitialGuess::Gaussian2d { .. } => "gaussian-2d",
            InitialGuess::Values(_) => "values",
        }
    }

    /// Default 2D Gaussian bump, centered at `(¼, ¼)` with coefficient 50.
    pub fn default_gaussian() -> Self {
        InitialGuess::Gaussian2d {
            center: [0.25, 0.25],
            coefficient: 50.0,
        }
    }

    pub fn evaluate(&self, mesh: &Mesh) -> Result<Field, GuessError> {
        let field = match self {
            InitialGuess::Parabola => {
                let (a, b) = line_extent(mesh, self.name())?;
                Field::from_fn(mesh, |x| (b - x[0]) * (x[0] - a))
            }
            InitialGuess::AsymmetricCubic => {
                let (a, b) = line_extent(mesh, self.name())?;
                Field::from_fn(mesh, |x| 0.5 * (b - x[0]).powi(2) * (x[0] - a))
            }
            InitialGuess::Rough { seed } => rough(mesh, *seed),
            InitialGuess::RoughSymmetrized { seed } => {
                if mesh.kind() != MeshKind::Interval {
                    return Err(self.wrong_mesh(mesh));
                }
                let r = mesh.expand(&rough(mesh, *seed));
                let n = mesh.n_nodes();
                let (a, b) = line_extent(mesh, self.name())?;
                let scale = (b - a).abs().max(1.0);
                let mut sym = vec![0.0; n];
                for i in 0..n {
                    let j = n - 1 - i;
                    let (xi, xj) = (mesh.node(i)[0], mesh.node(j)[0]);
                    if ((xi - a) - (b - xj)).abs() > 1e-12 * scale {
                        return Err(GuessError::NotSymmetric(i));
                    }
                    sym[i] = 0.5 * (r[i] + r[j]);
                }
                Field::new(mesh.restrict(&sym))
            }
            InitialGuess::RadialParabola => {
                if mesh.kind() != MeshKind::Radial {
                    return Err(self.wrong_mesh(mesh));
                }
                let (_, rmax) = line_extent(mesh, self.name())?;
                Field::from_fn(mesh, |x| rmax * rmax - x[0] * x[0])
            }
            InitialGuess::Gaussian2d {
                center,
                coefficient,
            } => {
                if mesh.kind() != MeshKind::Triangulation {
                    return Err(self.wrong_mesh(mesh));
                }
                Field::from_fn(mesh, |x| {
                    let d2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                    (-coefficient * d2).exp()
                })
            }
            InitialGuess::Values(v) => {
                if v.len() != mesh.n_interior() {
                    return Err(GuessError::WrongLength {
                        expected: mesh.n_interior(),
                        found: v.len(),
                    });
                }
                Field::new(v.clone())
            }
        };
        if field.is_zero() {
            return Err(GuessError::Zero);
        }
        Ok(field)
    }

    fn wrong_mesh(&self, mesh: &Mesh) -> GuessError {
        GuessError::WrongMesh {
            guess: self.name(),
            kind: mesh.kind().name(),
        }
    }
}

fn rough(mesh: &Mesh, seed: u64) -> Field {
    let mut rng = XorShift64Star::new(seed);
    Field::new(
        (0..mesh.n_interior())
            .map(|_| rng.uniform(-1.0, 1.0))
            .collect(),
    )
}

fn line_extent(mesh: &Mesh, guess: &'static str) -> Result<(f64, f64), GuessError> {
    if mesh.kind() == MeshKind::Triangulation {
        return Err(GuessError::WrongMesh {
            guess,
            kind: mesh.kind().name(),
        });
    }
    let n = mesh.n_nodes();
    Ok((mesh.node(0)[0], mesh.node(n - 1)[0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_values() {
        let mesh = Mesh::interval(-2.0, 2.0, 4).unwrap();
        let u = InitialGuess::Parabola.evaluate(&mesh).unwrap();
        assert_eq!(u.values(), &[3.0, 4.0, 3.0]);
        let c = InitialGuess::AsymmetricCubic.evaluate(&mesh).unwrap();
        assert_eq!(c.values(), &[4.5, 4.0, 1.5]);
    }

    #[test]
    fn rough_is_seeded() {
        let mesh = Mesh::interval(-2.0, 2.0, 40).unwrap();
        let a = InitialGuess::Rough { seed: 3 }.evaluate(&mesh).unwrap();
        let b = InitialGuess::Rough { seed: 3 }.evaluate(&mesh).unwrap();
        let c = InitialGuess::Rough { seed: 4 }.evaluate(&mesh).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|v| (-1.0..1.0).contains(v)));
    }

    #[test]
    fn symmetrized_is_even() {
        let mesh = Mesh::interval(-2.0, 2.0, 41).unwrap();
        let u = InitialGuess::RoughSymmetrized { seed: 9 }
            .evaluate(&mesh)
            .unwrap();
        let n = u.len();
        for i in 0..n {
            assert_eq!(u[i], u[n - 1 - i]);
        }
    }

    #[test]
    fn radial_and_gaussian_need_matching_mesh() {
        let line = Mesh::interval(0.0, 1.0, 4).unwrap();
        assert!(matches!(
            InitialGuess::RadialParabola.evaluate(&line),
            Err(GuessError::WrongMesh { .. })
        ));
        assert!(InitialGuess::default_gaussian().evaluate(&line).is_err());
        let radial = Mesh::radial(25.0, 5).unwrap();
        let u = InitialGuess::RadialParabola.evaluate(&radial).unwrap();
        assert_eq!(u[0], 625.0);
        assert_eq!(u.len(), 5);
    }

    #[test]
    fn values_length_checked() {
        let mesh = Mesh::interval(0.0, 1.0, 4).unwrap();
        assert!(InitialGuess::Values(vec![1.0; 2]).evaluate(&mesh).is_err());
        assert!(matches!(
            InitialGuess::Values(vec![0.0; 3]).evaluate(&mesh),
            Err(GuessError::Zero)
        ));
    }
}
