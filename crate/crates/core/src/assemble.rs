//! P1 finite element assembly over the interior degrees of freedom of a
//! [`Mesh`]: the operator ℒ = I − Δ, mass matrices, the nodally interpolated
//! nonlinear load and the norms used by the iteration.
//!
//! Radial meshes use the r-weighted weak form ∫(u′v′ + uv) r dr, which
//! realizes the 1/r term of the radial Laplacian and leaves the origin with a
//! natural (Neumann) condition.

use std::ops::{Deref, DerefMut};

use thiserror::Error;

use crate::mesh::{Mesh, MeshKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssemblyError {
    #[error("field has {found} values, mesh expects {expected}")]
    MeshMismatch { expected: usize, found: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid exponent {0}")]
    InvalidExponent(f64),
}

/// Quadrature used for the nonlinear term and the weighted mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MassKind {
    /// Exact integration of products of P1 functions.
    Consistent,
    /// Nodal (row-sum) quadrature; diagonal mass.
    #[default]
    Lumped,
}

impl MassKind {
    pub fn name(self) -> &'static str {
        match self {
            MassKind::Consistent => "consistent",
            MassKind::Lumped => "lumped",
        }
    }
}

/// Symmetric sparse matrix in compressed-row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n}x{n}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseOperator {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn diagonal_matrix(diag: &[f64]) -> Self {
        let n = diag.len();
        SparseOperator {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal_matrix(&vec![1.0; n])
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let triplets = rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(move |(j, &v)| (i, j, v))
            })
            .collect();
        Self::from_triplets(n, triplets)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `x · (A y)`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>())
            .sum()
    }

    /// Largest `|i - j|` over stored entries.
    pub fn half_bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// `max |A_ij - A_ji| / max |A_ij|` over stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for (i, row) in dense.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        dense
    }
}

/// Nodal coefficients on the interior DOFs of a mesh; Dirichlet nodes are
/// implicitly zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn new(values: Vec<f64>) -> Self {
        Field(values)
    }

    pub fn zeros(n: usize) -> Self {
        Field(vec![0.0; n])
    }

    /// Sample `f` at the interior nodes of `mesh`.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(&[f64]) -> f64) -> Self {
        Field(
            mesh.interior_nodes()
                .iter()
                .map(|&n| f(mesh.node(n)))
                .collect(),
        )
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field(self.0.iter().map(|v| c * v).collect())
    }

    /// `self - other`.
    pub fn sub(&self, other: &Field) -> Field {
        assert_eq!(self.len(), other.len());
        Field(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `self + c * other`, in place.
    pub fn axpy(&mut self, c: f64, other: &Field) {
        assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += c * b;
        }
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        assert_eq!(self.len(), other.len());
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Deref for Field {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Field {
    fn from(values: Vec<f64>) -> Self {
        Field(values)
    }
}

// 5-point Gauss-Legendre rule on [-1, 1]; exact to degree 9.
const GAUSS5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GAUSS5_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Degree-5, 7-point rule on a triangle: barycentric coordinates and weights
/// normalized to sum 1.
fn triangle_rule() -> [([f64; 3], f64); 7] {
    let s15 = 15f64.sqrt();
    let a = (6.0 - s15) / 21.0;
    let b = (6.0 + s15) / 21.0;
    let wa = (155.0 - s15) / 1200.0;
    let wb = (155.0 + s15) / 1200.0;
    let third = 1.0 / 3.0;
    [
        ([third, third, third], 9.0 / 40.0),
        ([a, a, 1.0 - 2.0 * a], wa),
        ([a, 1.0 - 2.0 * a, a], wa),
        ([1.0 - 2.0 * a, a, a], wa),
        ([b, b, 1.0 - 2.0 * b], wb),
        ([b, 1.0 - 2.0 * b, b], wb),
        ([1.0 - 2.0 * b, b, b], wb),
    ]
}

/// Quadrature points of element `e` as (P1 basis values, weight incl. the
/// radial `r` factor).
fn element_quadrature(mesh: &Mesh, e: usize) -> Vec<(Vec<f64>, f64)> {
    let el = mesh.element(e);
    match mesh.kind() {
        MeshKind::Interval | MeshKind::Radial => {
            let (a, b) = (mesh.node(el[0])[0], mesh.node(el[1])[0]);
            let half = 0.5 * (b - a);
            GAUSS5_X
                .iter()
                .zip(GAUSS5_W)
                .map(|(&t, w)| {
                    let s = 0.5 * (t + 1.0);
                    let r = a + s * (b - a);
                    let weight = w
                        * half
                        * if mesh.kind() == MeshKind::Radial {
                            r
                        } else {
                            1.0
                        };
                    (vec![1.0 - s, s], weight)
                })
                .collect()
        }
        MeshKind::Triangulation => {
            let area = mesh.element_measure(e);
            triangle_rule()
                .iter()
                .map(|(bary, w)| (bary.to_vec(), w * area))
                .collect()
        }
    }
}

/// Element stiffness (∫∇φ_i·∇φ_j, radially weighted when applicable) and
/// consistent mass.
fn element_matrices(mesh: &Mesh, e: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let el = mesh.element(e);
    match mesh.kind() {
        MeshKind::Interval => {
            let h = mesh.element_measure(e);
            let k = vec![vec![1.0 / h, -1.0 / h], vec![-1.0 / h, 1.0 / h]];
            let m = vec![vec![h / 3.0, h / 6.0], vec![h / 6.0, h / 3.0]];
            (k, m)
        }
        MeshKind::Radial => {
            let (a, b) = (mesh.node(el[0])[0], mesh.node(el[1])[0]);
            let h = b - a;
            let kr = 0.5 * (a + b) / h;
            let k = vec![vec![kr, -kr], vec![-kr, kr]];
            let m = vec![
                vec![h * (3.0 * a + b) / 12.0, h * (a + b) / 12.0],
                vec![h * (a + b) / 12.0, h * (a + 3.0 * b) / 12.0],
            ];
            (k, m)
        }
        MeshKind::Triangulation => {
            let p: Vec<&[f64]> = el.iter().map(|&n| mesh.node(n)).collect();
            let area = mesh.element_measure(e);
            // Gradient of barycentric λ_i is (y_j - y_k, x_k - x_j) / (2A), cyclic.
            let grads: Vec<[f64; 2]> = (0..3)
                .map(|i| {
                    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                    let signed = crate::mesh::triangle_signed_area(p[0], p[1], p[2]);
                    [
                        (p[j][1] - p[k][1]) / (2.0 * signed),
                        (p[k][0] - p[j][0]) / (2.0 * signed),
                    ]
                })
                .collect();
            let mut k = vec![vec![0.0; 3]; 3];
            let mut m = vec![vec![0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    k[i][j] = area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                    m[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                }
            }
            (k, m)
        }
    }
}

fn scatter(mesh: &Mesh, e: usize, local: &[Vec<f64>], triplets: &mut Vec<(usize, usize, f64)>) {
    let el = mesh.element(e);
    for (a, &na) in el.iter().enumerate() {
        let Some(i) = mesh.interior_index(na) else {
            continue;
        };
        for (b, &nb) in el.iter().enumerate() {
            if let Some(j) = mesh.interior_index(nb) {
                triplets.push((i, j, local[a][b]));
            }
        }
    }
}

/// Stiffness plus consistent mass: the discrete ℒ = I − Δ on interior DOFs.
pub fn assemble_l(mesh: &Mesh) -> SparseOperator {
    let mut triplets = Vec::new();
    for e in 0..mesh.n_elements() {
        let (k, m) = element_matrices(mesh, e);
        let local: Vec<Vec<f64>> = k
            .iter()
            .zip(&m)
            .map(|(kr, mr)| kr.iter().zip(mr).map(|(a, b)| a + b).collect())
            .collect();
        scatter(mesh, e, &local, &mut triplets);
    }
    SparseOperator::from_triplets(mesh.n_interior(), triplets)
}

/// Consistent mass matrix on interior DOFs.
pub fn assemble_mass(mesh: &Mesh) -> SparseOperator {
    let mut triplets = Vec::new();
    for e in 0..mesh.n_elements() {
        let (_, m) = element_matrices(mesh, e);
        scatter(mesh, e, &m, &mut triplets);
    }
    SparseOperator::from_triplets(mesh.n_interior(), triplets)
}

/// Lumped masses `∫ φ_i` (times `r` on radial meshes) of the interior DOFs.
pub fn lumped_masses(mesh: &Mesh) -> Vec<f64> {
    let mut lumped = vec![0.0; mesh.n_interior()];
    for e in 0..mesh.n_elements() {
        let (_, m) = element_matrices(mesh, e);
        for (a, &na) in mesh.element(e).iter().enumerate() {
            if let Some(i) = mesh.interior_index(na) {
                lumped[i] += m[a].iter().sum::<f64>();
            }
        }
    }
    lumped
}

/// `B_ij = ∫ w φ_i φ_j` for nodal weights `w` given on **all** mesh nodes.
///
/// With [`MassKind::Consistent`] the P1 interpolant of `w` is integrated
/// exactly; with [`MassKind::Lumped`] the result is `diag(w_i ∫φ_i)`.
pub fn assemble_weighted_mass(
    mesh: &Mesh,
    weights: &[f64],
    kind: MassKind,
) -> Result<SparseOperator, AssemblyError> {
    if weights.len() != mesh.n_nodes() {
        return Err(AssemblyError::MeshMismatch {
            expected: mesh.n_nodes(),
            found: weights.len(),
        });
    }
    match kind {
        MassKind::Lumped => {
            let diag: Vec<f64> = lumped_masses(mesh)
                .iter()
                .zip(mesh.interior_nodes())
                .map(|(m, &node)| m * weights[node])
                .collect();
            Ok(SparseOperator::diagonal_matrix(&diag))
        }
        MassKind::Consistent => {
            let mut triplets = Vec::new();
            for e in 0..mesh.n_elements() {
                let el = mesh.element(e);
                let k = el.len();
                let mut local = vec![vec![0.0; k]; k];
                for (basis, wq) in element_quadrature(mesh, e) {
                    let w: f64 = basis.iter().zip(el).map(|(b, &n)| b * weights[n]).sum();
                    for a in 0..k {
                        for b in 0..k {
                            local[a][b] += wq * w * basis[a] * basis[b];
                        }
                    }
                }
                scatter(mesh, e, &local, &mut triplets);
            }
            Ok(SparseOperator::from_triplets(mesh.n_interior(), triplets))
        }
    }
}

/// Discretized function space: mesh plus the operators every solve needs.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Mesh,
    l: SparseOperator,
    mass: SparseOperator,
    lumped: Vec<f64>,
    mass_kind: MassKind,
}

impl Discretization {
    pub fn new(mesh: Mesh, mass_kind: MassKind) -> Self {
        let l = assemble_l(&mesh);
        let mass = assemble_mass(&mesh);
        let lumped = lumped_masses(&mesh);
        Discretization {
            mesh,
            l,
            mass,
            lumped,
            mass_kind,
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// The assembled ℒ = I − Δ.
    pub fn l(&self) -> &SparseOperator {
        &self.l
    }

    pub fn mass(&self) -> &SparseOperator {
        &self.mass
    }

    pub fn lumped_masses(&self) -> &[f64] {
        &self.lumped
    }

    pub fn mass_kind(&self) -> MassKind {
        self.mass_kind
    }

    pub fn n(&self) -> usize {
        self.mesh.n_interior()
    }

    pub fn check(&self, u: &[f64]) -> Result<(), AssemblyError> {
        if u.len() != self.n() {
            return Err(AssemblyError::MeshMismatch {
                expected: self.n(),
                found: u.len(),
            });
        }
        Ok(())
    }

    /// Mass-weighted nodal values: `Mass · v` for the configured quadrature.
    pub fn apply_mass(&self, v: &[f64]) -> Vec<f64> {
        match self.mass_kind {
            MassKind::Consistent => self.mass.mul_vec(v),
            MassKind::Lumped => v.iter().zip(&self.lumped).map(|(a, m)| a * m).collect(),
        }
    }

    /// Load vector of the nodally interpolated nonlinearity `|u|^{p-1} u`.
    pub fn nonlinear_load(&self, u: &Field, p: f64) -> Result<Field, AssemblyError> {
        self.check(u)?;
        if !(p > 1.0) {
            return Err(AssemblyError::InvalidExponent(p));
        }
        let g: Vec<f64> = u.iter().map(|&v| v.abs().powf(p - 1.0) * v).collect();
        Ok(Field::new(self.apply_mass(&g)))
    }

    pub fn h1_inner(&self, u: &[f64], v: &[f64]) -> Result<f64, AssemblyError> {
        h1_inner(u, v, &self.l)
    }

    pub fn h1_norm(&self, u: &[f64]) -> f64 {
        self.l.bilinear(u, u).max(0.0).sqrt()
    }

    /// Nodal weights on all mesh nodes (zero on Dirichlet nodes) from
    /// interior values.
    pub fn nodal_weights(&self, interior: &[f64]) -> Vec<f64> {
        self.mesh.expand(interior)
    }
}

/// `u · (L v)`.
pub fn h1_inner(u: &[f64], v: &[f64], l: &SparseOperator) -> Result<f64, AssemblyError> {
    if u.len() != l.dim() || v.len() != l.dim() {
        return Err(AssemblyError::DimensionMismatch {
            left: u.len(),
            right: v.len().max(l.dim()),
        });
    }
    Ok(l.bilinear(u, v))
}

/// `(∫ |u_h|^q)^{1/q}` for the P1 interpolant `u_h` of the interior values
/// `u`, by per-element Gauss quadrature (5 points in 1D, 7 on triangles);
/// radial meshes include the `r` weight.
pub fn lp_norm(mesh: &Mesh, u: &[f64], q: f64) -> Result<f64, AssemblyError> {
    if u.len() != mesh.n_interior() {
        return Err(AssemblyError::MeshMismatch {
            expected: mesh.n_interior(),
            found: u.len(),
        });
    }
    if !(q >= 1.0) {
        return Err(AssemblyError::InvalidExponent(q));
    }
    let full = mesh.expand(u);
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        let el = mesh.element(e);
        for (basis, w) in element_quadrature(mesh, e) {
            let val: f64 = basis.iter().zip(el).map(|(b, &n)| b * full[n]).sum();
            total += w * val.abs().powf(q);
        }
    }
    Ok(total.powf(1.0 / q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn interval(n: usize) -> Mesh {
        Mesh::interval(-2.0, 2.0, n).unwrap()
    }

    #[test]
    fn closed_form_interval_operator() {
        let l = assemble_l(&interval(4));
        assert_eq!(l.dim(), 3);
        for i in 0..3 {
            assert!((l.get(i, i) - 8.0 / 3.0).abs() < 1e-15);
        }
        for i in 0..2 {
            assert!((l.get(i, i + 1) + 5.0 / 6.0).abs() < 1e-15);
            assert!((l.get(i + 1, i) + 5.0 / 6.0).abs() < 1e-15);
        }
        assert_eq!(l.get(0, 2), 0.0);
    }

    #[test]
    fn radial_origin_row_couples_two_nodes() {
        let mesh = Mesh::radial(25.0, 500).unwrap();
        let l = assemble_l(&mesh);
        let row0: Vec<usize> = l.row(0).map(|(j, _)| j).collect();
        assert_eq!(row0, vec![0, 1]);
        assert!(l.symmetry_defect() < 1e-14);
        assert!(l.diagonal().iter().all(|&d| d > 0.0));
    }

    #[test]
    fn weighted_mass_unit_and_zero_weights() {
        let mesh = interval(10);
        let ones = vec![1.0; mesh.n_nodes()];
        let b = assemble_weighted_mass(&mesh, &ones, MassKind::Consistent).unwrap();
        let m = assemble_mass(&mesh);
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                assert!((b.get(i, j) - m.get(i, j)).abs() < 1e-15);
            }
        }
        // interior rows of the consistent mass sum to the lumped masses
        let lumped = lumped_masses(&mesh);
        for i in 1..m.dim() - 1 {
            let s: f64 = m.row(i).map(|(_, v)| v).sum();
            assert!((s - lumped[i]).abs() < 1e-15);
        }
        let zero = vec![0.0; mesh.n_nodes()];
        for kind in [MassKind::Consistent, MassKind::Lumped] {
            let b = assemble_weighted_mass(&mesh, &zero, kind).unwrap();
            assert!((0..b.dim()).all(|i| b.row(i).all(|(_, v)| v == 0.0)));
        }
        assert!(matches!(
            assemble_weighted_mass(&mesh, &[1.0; 3], MassKind::Lumped),
            Err(AssemblyError::MeshMismatch { .. })
        ));
    }

    #[test]
    fn nonlinear_load_of_zero_is_zero() {
        let disc = Discretization::new(interval(8), MassKind::Consistent);
        let load = disc.nonlinear_load(&Field::zeros(7), 3.0).unwrap();
        assert!(load.is_zero());
        assert!(disc.nonlinear_load(&Field::zeros(7), 1.0).is_err());
    }

    #[test]
    fn lp_norm_of_unit_interior_matches_mass_form() {
        let mesh = interval(16);
        let u = vec![1.0; mesh.n_interior()];
        let m = assemble_mass(&mesh);
        let l2 = lp_norm(&mesh, &u, 2.0).unwrap();
        assert!((l2 * l2 - m.bilinear(&u, &u)).abs() < 1e-13);
    }

    #[test]
    fn h1_inner_dimension_mismatch() {
        let l = assemble_l(&interval(4));
        assert!(h1_inner(&[1.0; 3], &[1.0; 2], &l).is_err());
    }

    #[test]
    fn sine_mode_h1_norm() {
        // u = cos(πx/4) vanishes at ±2 and satisfies -u'' = (π/4)² u
        let k2 = (std::f64::consts::PI / 4.0).powi(2);
        let mesh = interval(2000);
        let u = Field::from_fn(&mesh, |x| (std::f64::consts::FRAC_PI_4 * x[0]).cos());
        let l = assemble_l(&mesh);
        let h1 = l.bilinear(&u, &u);
        let l2 = lp_norm(&mesh, &u, 2.0).unwrap().powi(2);
        assert!((h1 / l2 - (1.0 + k2)).abs() < 1e-5);
    }

    #[test]
    fn patch_test_linear_function() {
        // For u = a + b x, (L u)_i = ∫ (u φ_i + u' φ_i') = u(x_i) h on a
        // uniform interior patch, since ∫ φ_i' = 0.
        let mesh = Mesh::interval(0.0, 1.0, 10).unwrap();
        let l = assemble_l(&mesh);
        let full: Vec<f64> = (0..mesh.n_nodes())
            .map(|i| 0.3 + 2.0 * mesh.node(i)[0])
            .collect();
        let h = 0.1;
        for i in 1..mesh.n_interior() - 1 {
            let node = mesh.interior_node(i);
            let mut acc = 0.0;
            for (j, v) in l.row(i) {
                acc += v * full[mesh.interior_node(j)];
            }
            assert!((acc - full[node] * h).abs() < 1e-12);
        }
    }

    #[test]
    fn triangle_operator_properties() {
        let node = "5 2 0 1\n1 0 0 1\n2 1 0 1\n3 1 1 1\n4 0 1 1\n5 0.4 0.6 0\n";
        let ele = "4 3 0\n1 1 2 5\n2 2 3 5\n3 3 4 5\n4 4 1 5\n";
        let mesh = crate::mesh::load_triangulation(node, ele).unwrap();
        let l = assemble_l(&mesh);
        assert_eq!(l.dim(), 1);
        assert!(l.get(0, 0) > 0.0);
        // consistent mass of a full-support hat integrates to area/3 per element
        let lumped = lumped_masses(&mesh);
        assert!((lumped[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn load_is_homogeneous(
            vals in prop::collection::vec(-2.0f64..2.0, 9),
            c in prop::sample::select(vec![0.5, 2.0, 10.0]),
            consistent in any::<bool>(),
        ) {
            let kind = if consistent { MassKind::Consistent } else { MassKind::Lumped };
            let disc = Discretization::new(interval(10), kind);
            let u = Field::new(vals);
            let p = 3.0;
            let a = disc.nonlinear_load(&u.scaled(c), p).unwrap();
            let b = disc.nonlinear_load(&u, p).unwrap().scaled(c.powf(p));
            let scale = b.max_abs().max(1e-300);
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert!((x - y).abs() <= 1e-13 * scale);
            }
        }

        #[test]
        fn h1_inner_symmetric_positive(
            u in prop::collection::vec(-1.0f64..1.0, 15),
            v in prop::collection::vec(-1.0f64..1.0, 15),
        ) {
            let l = assemble_l(&interval(16));
            let uv = h1_inner(&u, &v, &l).unwrap();
            let vu = h1_inner(&v, &u, &l).unwrap();
            prop_assert!((uv - vu).abs() <= 1e-14 * uv.abs().max(1.0));
            if u.iter().any(|&x| x != 0.0) {
                prop_assert!(h1_inner(&u, &u, &l).unwrap() > 0.0);
            }
        }

        #[test]
        fn lp_norm_homogeneous(
            u in prop::collection::vec(-1.0f64..1.0, 9),
            c in -5.0f64..5.0,
            q in 1.0f64..6.0,
        ) {
            let mesh = interval(10);
            let scaled: Vec<f64> = u.iter().map(|x| c * x).collect();
            let a = lp_norm(&mesh, &scaled, q).unwrap();
            let b = c.abs() * lp_norm(&mesh, &u, q).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
        }
    }
}
