//! Computational meshes: uniform 1D intervals, radial segments and
//! triangulations read from Triangle `.node`/`.ele` files.
//!
//! A mesh stores node coordinates, element connectivity and a per-node
//! Dirichlet mask. Unmasked nodes are numbered consecutively as interior
//! degrees of freedom; every [`Field`](crate::Field) lives on that numbering.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

/// Relative size below which an element is treated as degenerate.
const DEGENERATE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("invalid bounds: lower {lo} must be smaller than upper {hi}")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("mesh too coarse: {n_cells} cells requested, at least {min} required")]
    TooCoarse { n_cells: usize, min: usize },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("inconsistent counts: header declares {declared} {what}, body has {found}")]
    InconsistentCounts {
        what: &'static str,
        declared: usize,
        found: usize,
    },
    #[error("element {element} references missing node {node}")]
    DanglingReference { element: usize, node: usize },
    #[error("element {element} is degenerate (measure {measure:e})")]
    DegenerateElement { element: usize, measure: f64 },
    #[error("1D nodes must be strictly increasing (node {index})")]
    Unsorted { index: usize },
    #[error("invalid mesh: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeshKind {
    Interval,
    Radial,
    Triangulation,
}

impl MeshKind {
    pub fn name(self) -> &'static str {
        match self {
            MeshKind::Interval => "Interval",
            MeshKind::Radial => "Radial",
            MeshKind::Triangulation => "Triangulation",
        }
    }

    /// Spatial dimension `d` of the underlying PDE. Radial meshes discretize
    /// the radially symmetric problem in the plane.
    pub fn pde_dimension(self) -> usize {
        match self {
            MeshKind::Interval => 1,
            MeshKind::Radial | MeshKind::Triangulation => 2,
        }
    }

    fn coord_dim(self) -> usize {
        match self {
            MeshKind::Interval | MeshKind::Radial => 1,
            MeshKind::Triangulation => 2,
        }
    }

    fn nodes_per_element(self) -> usize {
        match self {
            MeshKind::Interval | MeshKind::Radial => 2,
            MeshKind::Triangulation => 3,
        }
    }
}

/// An immutable discretization of the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    kind: MeshKind,
    coords: Vec<f64>,
    connectivity: Vec<usize>,
    boundary_mask: Vec<bool>,
    interior_index: Vec<Option<usize>>,
    interior_nodes: Vec<usize>,
}

impl Mesh {
    /// Uniform mesh of `[xmin, xmax]` with both endpoints Dirichlet-masked.
    pub fn interval(xmin: f64, xmax: f64, n_cells: usize) -> Result<Self, MeshError> {
        if !(xmin < xmax) || !xmin.is_finite() || !xmax.is_finite() {
            return Err(MeshError::InvalidBounds { lo: xmin, hi: xmax });
        }
        if n_cells < 2 {
            return Err(MeshError::TooCoarse { n_cells, min: 2 });
        }
        let nodes = uniform_nodes(xmin, xmax, n_cells);
        let mut mask = vec![false; n_cells + 1];
        mask[0] = true;
        mask[n_cells] = true;
        Self::from_1d_nodes(MeshKind::Interval, nodes, mask)
    }

    /// Uniform radial mesh of `[0, rmax]`: Neumann (unmasked) at the origin,
    /// Dirichlet at `rmax`.
    pub fn radial(rmax: f64, n_cells: usize) -> Result<Self, MeshError> {
        Self::radial_segment(0.0, rmax, n_cells, true)
    }

    /// Uniform radial mesh of `[rlo, rhi]`. The left end is left unmasked only
    /// when `neumann_left` is set, which requires `rlo == 0`.
    pub fn radial_segment(
        rlo: f64,
        rhi: f64,
        n_cells: usize,
        neumann_left: bool,
    ) -> Result<Self, MeshError> {
        if !(rlo >= 0.0 && rlo < rhi) || !rhi.is_finite() {
            return Err(MeshError::InvalidBounds { lo: rlo, hi: rhi });
        }
        if neumann_left && rlo != 0.0 {
            return Err(MeshError::Invalid(
                "a Neumann left end is only allowed at the origin".into(),
            ));
        }
        if n_cells < 2 {
            return Err(MeshError::TooCoarse { n_cells, min: 2 });
        }
        let nodes = uniform_nodes(rlo, rhi, n_cells);
        let mut mask = vec![false; n_cells + 1];
        mask[0] = !neumann_left;
        mask[n_cells] = true;
        Self::from_1d_nodes(MeshKind::Radial, nodes, mask)
    }

    /// 1D mesh on arbitrary strictly increasing nodes with an explicit mask.
    pub fn from_1d_nodes(
        kind: MeshKind,
        nodes: Vec<f64>,
        boundary_mask: Vec<bool>,
    ) -> Result<Self, MeshError> {
        if kind == MeshKind::Triangulation {
            return Err(MeshError::Invalid(
                "triangulations need 2D coordinates".into(),
            ));
        }
        if nodes.len() < 2 || nodes.len() != boundary_mask.len() {
            return Err(MeshError::Invalid(format!(
                "{} nodes with {} mask entries",
                nodes.len(),
                boundary_mask.len()
            )));
        }
        for i in 1..nodes.len() {
            if !(nodes[i] > nodes[i - 1]) {
                return Err(MeshError::Unsorted { index: i });
            }
        }
        if kind == MeshKind::Radial {
            if nodes[0] < 0.0 {
                return Err(MeshError::Invalid(
                    "radial nodes must be nonnegative".into(),
                ));
            }
            if nodes[0] > 0.0 && !boundary_mask[0] {
                return Err(MeshError::Invalid(
                    "an unmasked left end is only allowed at r = 0".into(),
                ));
            }
        }
        let connectivity = (0..nodes.len() - 1).flat_map(|e| [e, e + 1]).collect();
        Self::finish(kind, nodes, connectivity, boundary_mask)
    }

    /// Triangulation from flat `[x0, y0, x1, y1, ...]` coordinates and 0-based
    /// triangles.
    pub fn triangulation(
        coords: Vec<f64>,
        triangles: Vec<[usize; 3]>,
        boundary_mask: Vec<bool>,
    ) -> Result<Self, MeshError> {
        let n_nodes = coords.len() / 2;
        if !coords.len().is_multiple_of(2) || n_nodes != boundary_mask.len() {
            return Err(MeshError::Invalid(
                "coordinate and mask lengths disagree".into(),
            ));
        }
        for (e, tri) in triangles.iter().enumerate() {
            if let Some(&node) = tri.iter().find(|&&v| v >= n_nodes) {
                return Err(MeshError::DanglingReference { element: e, node });
            }
        }
        let connectivity = triangles.iter().flatten().copied().collect();
        Self::finish(MeshKind::Triangulation, coords, connectivity, boundary_mask)
    }

    fn finish(
        kind: MeshKind,
        coords: Vec<f64>,
        connectivity: Vec<usize>,
        boundary_mask: Vec<bool>,
    ) -> Result<Self, MeshError> {
        let mut interior_index = vec![None; boundary_mask.len()];
        let mut interior_nodes = Vec::new();
        for (node, &masked) in boundary_mask.iter().enumerate() {
            if !masked {
                interior_index[node] = Some(interior_nodes.len());
                interior_nodes.push(node);
            }
        }
        let mesh = Mesh {
            kind,
            coords,
            connectivity,
            boundary_mask,
            interior_index,
            interior_nodes,
        };
        let scale = mesh.characteristic_measure();
        for e in 0..mesh.n_elements() {
            let measure = mesh.element_measure(e);
            if !(measure > DEGENERATE_TOL * scale) {
                return Err(MeshError::DegenerateElement {
                    element: e,
                    measure,
                });
            }
        }
        Ok(mesh)
    }

    fn characteristic_measure(&self) -> f64 {
        let dim = self.kind.coord_dim();
        let mut extent: f64 = 0.0;
        for axis in 0..dim {
            let vals = self.coords.iter().skip(axis).step_by(dim);
            let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
            extent = extent.max(hi - lo);
        }
        extent.powi(dim as i32) / self.n_elements().max(1) as f64
    }

    pub fn kind(&self) -> MeshKind {
        self.kind
    }

    pub fn n_nodes(&self) -> usize {
        self.boundary_mask.len()
    }

    pub fn n_elements(&self) -> usize {
        self.connectivity.len() / self.kind.nodes_per_element()
    }

    pub fn n_interior(&self) -> usize {
        self.interior_nodes.len()
    }

    /// Coordinates of `node` (one entry for 1D meshes, two for triangulations).
    pub fn node(&self, node: usize) -> &[f64] {
        let dim = self.kind.coord_dim();
        &self.coords[node * dim..(node + 1) * dim]
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.kind.nodes_per_element();
        &self.connectivity[e * k..(e + 1) * k]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.connectivity
            .chunks_exact(self.kind.nodes_per_element())
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary_mask
    }

    pub fn is_masked(&self, node: usize) -> bool {
        self.boundary_mask[node]
    }

    /// Interior-DOF index of `node`, `None` for Dirichlet nodes.
    pub fn interior_index(&self, node: usize) -> Option<usize> {
        self.interior_index[node]
    }

    /// Node id of interior DOF `dof` (inverse of [`Mesh::interior_index`]).
    pub fn interior_node(&self, dof: usize) -> usize {
        self.interior_nodes[dof]
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    /// Length (1D) or area (triangles) of element `e`.
    pub fn element_measure(&self, e: usize) -> f64 {
        let el = self.element(e);
        match self.kind {
            MeshKind::Interval | MeshKind::Radial => self.node(el[1])[0] - self.node(el[0])[0],
            MeshKind::Triangulation => {
                triangle_signed_area(self.node(el[0]), self.node(el[1]), self.node(el[2])).abs()
            }
        }
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.n_elements())
            .map(|e| self.element_measure(e))
            .sum()
    }

    /// Expand interior values to all nodes, writing zero on Dirichlet nodes.
    pub fn expand(&self, interior_values: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_nodes()];
        for (dof, &node) in self.interior_nodes.iter().enumerate() {
            full[node] = interior_values[dof];
        }
        full
    }

    /// Restrict nodal values to interior DOFs.
    pub fn restrict(&self, nodal_values: &[f64]) -> Vec<f64> {
        self.interior_nodes
            .iter()
            .map(|&n| nodal_values[n])
            .collect()
    }

    /// Nodes lying on edges that belong to exactly one triangle.
    pub fn topological_boundary(&self) -> Vec<bool> {
        let mut on_boundary = vec![false; self.n_nodes()];
        match self.kind {
            MeshKind::Interval | MeshKind::Radial => {
                on_boundary[0] = true;
                on_boundary[self.n_nodes() - 1] = true;
            }
            MeshKind::Triangulation => {
                let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
                for tri in self.elements() {
                    for k in 0..3 {
                        let (a, b) = (tri[k], tri[(k + 1) % 3]);
                        *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
                    }
                }
                for ((a, b), count) in edge_count {
                    if count == 1 {
                        on_boundary[a] = true;
                        on_boundary[b] = true;
                    }
                }
            }
        }
        on_boundary
    }

    /// Nodes whose Dirichlet mask disagrees with the topological boundary.
    ///
    /// For radial meshes the origin is expected to be unmasked.
    pub fn marker_mismatches(&self) -> Vec<usize> {
        let mut expected = self.topological_boundary();
        if self.kind == MeshKind::Radial && self.node(0)[0] == 0.0 {
            expected[0] = false;
        }
        expected
            .iter()
            .zip(&self.boundary_mask)
            .enumerate()
            .filter(|(_, (e, m))| e != m)
            .map(|(i, _)| i)
            .collect()
    }

    /// Serialize a triangulation as Triangle `.node` and `.ele` text
    /// (1-based ids, one boundary-marker column).
    pub fn to_triangle_text(&self) -> Result<(String, String), MeshError> {
        if self.kind != MeshKind::Triangulation {
            return Err(MeshError::Invalid(
                "only triangulations have Triangle text".into(),
            ));
        }
        let mut node_text = format!("{} 2 0 1\n", self.n_nodes());
        for i in 0..self.n_nodes() {
            let xy = self.node(i);
            let marker = u8::from(self.boundary_mask[i]);
            let _ = writeln!(node_text, "{} {:?} {:?} {}", i + 1, xy[0], xy[1], marker);
        }
        let mut ele_text = format!("{} 3 0\n", self.n_elements());
        for (e, tri) in self.elements().enumerate() {
            let _ = writeln!(
                ele_text,
                "{} {} {} {}",
                e + 1,
                tri[0] + 1,
                tri[1] + 1,
                tri[2] + 1
            );
        }
        Ok((node_text, ele_text))
    }
}

/// Evaluates P1 functions of a mesh at arbitrary points.
///
/// Triangles are bucketed on a uniform grid over the bounding box; 1D meshes
/// use binary search.
#[derive(Debug, Clone)]
pub struct PointLocator<'a> {
    mesh: &'a Mesh,
    lo: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let mut loc = PointLocator {
            mesh,
            lo: [0.0; 2],
            cell: [1.0; 2],
            dims: [0; 2],
            buckets: Vec::new(),
        };
        if mesh.kind != MeshKind::Triangulation {
            return loc;
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for i in 0..mesh.n_nodes() {
            for a in 0..2 {
                lo[a] = lo[a].min(mesh.node(i)[a]);
                hi[a] = hi[a].max(mesh.node(i)[a]);
            }
        }
        let side = ((mesh.n_elements() as f64).sqrt().ceil() as usize).max(1);
        loc.lo = lo;
        loc.dims = [side, side];
        loc.cell = [
            ((hi[0] - lo[0]) / side as f64).max(f64::MIN_POSITIVE),
            ((hi[1] - lo[1]) / side as f64).max(f64::MIN_POSITIVE),
        ];
        loc.buckets = vec![Vec::new(); side * side];
        for (e, tri) in mesh.elements().enumerate() {
            let (mut blo, mut bhi) = ([usize::MAX; 2], [0usize; 2]);
            for &v in tri {
                let c = loc.cell_of(mesh.node(v));
                for a in 0..2 {
                    blo[a] = blo[a].min(c[a]);
                    bhi[a] = bhi[a].max(c[a]);
                }
            }
            for i in blo[0]..=bhi[0] {
                for j in blo[1]..=bhi[1] {
                    loc.buckets[i * side + j].push(e);
                }
            }
        }
        loc
    }

    fn cell_of(&self, x: &[f64]) -> [usize; 2] {
        let mut c = [0; 2];
        for a in 0..2 {
            let t = ((x[a] - self.lo[a]) / self.cell[a]).floor();
            c[a] = (t.max(0.0) as usize).min(self.dims[a] - 1);
        }
        c
    }

    /// Value at `x` of the P1 function with the given nodal values, or `None`
    /// outside the mesh (a relative tolerance of 1e-10 is allowed).
    pub fn evaluate(&self, nodal: &[f64], x: &[f64]) -> Option<f64> {
        let mesh = self.mesh;
        match mesh.kind {
            MeshKind::Interval | MeshKind::Radial => {
                let n = mesh.n_nodes();
                let (first, last) = (mesh.node(0)[0], mesh.node(n - 1)[0]);
                let tol = 1e-10 * (last - first);
                if x[0] < first - tol || x[0] > last + tol {
                    return None;
                }
                let pos = mesh.coords.partition_point(|&c| c <= x[0]);
                let i = pos.clamp(1, n - 1) - 1;
                let (a, b) = (mesh.coords[i], mesh.coords[i + 1]);
                let t = ((x[0] - a) / (b - a)).clamp(0.0, 1.0);
                Some((1.0 - t) * nodal[i] + t * nodal[i + 1])
            }
            MeshKind::Triangulation => {
                let c = self.cell_of(x);
                let mut best: Option<(f64, [f64; 3], usize)> = None;
                for &e in &self.buckets[c[0] * self.dims[1] + c[1]] {
                    let tri = mesh.element(e);
                    let (p0, p1, p2) = (mesh.node(tri[0]), mesh.node(tri[1]), mesh.node(tri[2]));
                    let area = triangle_signed_area(p0, p1, p2);
                    let l0 = triangle_signed_area(x, p1, p2) / area;
                    let l1 = triangle_signed_area(p0, x, p2) / area;
                    let l2 = 1.0 - l0 - l1;
                    let worst = l0.min(l1).min(l2);
                    if best.is_none_or(|(w, _, _)| worst > w) {
                        best = Some((worst, [l0, l1, l2], e));
                    }
                }
                let (worst, l, e) = best?;
                if worst < -1e-10 {
                    return None;
                }
                let tri = mesh.element(e);
                Some(l[0] * nodal[tri[0]] + l[1] * nodal[tri[1]] + l[2] * nodal[tri[2]])
            }
        }
    }
}

fn uniform_nodes(lo: f64, hi: f64, n_cells: usize) -> Vec<f64> {
    let h = (hi - lo) / n_cells as f64;
    (0..=n_cells)
        .map(|i| if i == n_cells { hi } else { lo + h * i as f64 })
        .collect()
}

pub(crate) fn triangle_signed_area(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Non-comment, non-empty lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let content = line.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

fn parse_tok<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T, MeshError> {
    tok.parse().map_err(|_| MeshError::Parse {
        line,
        message: format!("cannot parse {what} from '{tok}'"),
    })
}

fn field<'a>(
    tokens: &[&'a str],
    idx: usize,
    line: usize,
    what: &str,
) -> Result<&'a str, MeshError> {
    tokens.get(idx).copied().ok_or_else(|| MeshError::Parse {
        line,
        message: format!("missing {what}"),
    })
}

/// Load a triangulation from Triangle `.node` and `.ele` text.
///
/// Node markers (when present) decide the Dirichlet mask: marker != 0 means
/// masked. Without a marker column the mask is taken from the topological
/// boundary. Ids may be 0- or 1-based; the base is read from the first node.
pub fn load_triangulation(node_text: &str, ele_text: &str) -> Result<Mesh, MeshError> {
    let mut lines = data_lines(node_text);
    let (hline, header) = lines.next().ok_or(MeshError::Parse {
        line: 1,
        message: "empty .node file".into(),
    })?;
    let n_nodes: usize = parse_tok(field(&header, 0, hline, "node count")?, hline, "node count")?;
    let dim: usize = parse_tok(field(&header, 1, hline, "dimension")?, hline, "dimension")?;
    let n_attrs: usize = match header.get(2) {
        Some(t) => parse_tok(t, hline, "attribute count")?,
        None => 0,
    };
    let n_markers: usize = match header.get(3) {
        Some(t) => parse_tok(t, hline, "marker count")?,
        None => 0,
    };
    if dim != 2 {
        return Err(MeshError::Parse {
            line: hline,
            message: format!("only 2D node files are supported, got dimension {dim}"),
        });
    }
    if n_markers > 1 {
        return Err(MeshError::Parse {
            line: hline,
            message: format!("boundary marker count must be 0 or 1, got {n_markers}"),
        });
    }

    let mut coords = Vec::with_capacity(2 * n_nodes);
    let mut markers = Vec::with_capacity(n_nodes);
    let mut base = None;
    let mut found = 0usize;
    for (line, tokens) in lines {
        let id: usize = parse_tok(field(&tokens, 0, line, "node id")?, line, "node id")?;
        let base = *base.get_or_insert(id);
        if base > 1 {
            return Err(MeshError::Parse {
                line,
                message: format!("first node id must be 0 or 1, got {id}"),
            });
        }
        if id != base + found {
            return Err(MeshError::Parse {
                line,
                message: format!(
                    "node ids must be consecutive: expected {}, got {id}",
                    base + found
                ),
            });
        }
        let expected_len = 3 + n_attrs + n_markers;
        if tokens.len() < expected_len {
            return Err(MeshError::Parse {
                line,
                message: format!("expected {expected_len} columns, got {}", tokens.len()),
            });
        }
        coords.push(parse_tok::<f64>(tokens[1], line, "x coordinate")?);
        coords.push(parse_tok::<f64>(tokens[2], line, "y coordinate")?);
        if n_markers == 1 {
            markers.push(parse_tok::<i64>(
                tokens[3 + n_attrs],
                line,
                "boundary marker",
            )?);
        }
        found += 1;
    }
    if found != n_nodes {
        return Err(MeshError::InconsistentCounts {
            what: "nodes",
            declared: n_nodes,
            found,
        });
    }
    let base = base.unwrap_or(0);

    let mut lines = data_lines(ele_text);
    let (hline, header) = lines.next().ok_or(MeshError::Parse {
        line: 1,
        message: "empty .ele file".into(),
    })?;
    let n_tris: usize = parse_tok(
        field(&header, 0, hline, "triangle count")?,
        hline,
        "triangle count",
    )?;
    let per_tri: usize = match header.get(1) {
        Some(t) => parse_tok(t, hline, "nodes per triangle")?,
        None => 3,
    };
    if per_tri != 3 {
        return Err(MeshError::Parse {
            line: hline,
            message: format!(
                "only linear triangles are supported, got {per_tri} nodes per triangle"
            ),
        });
    }
    let mut triangles = Vec::with_capacity(n_tris);
    for (line, tokens) in lines {
        if tokens.len() < 4 {
            return Err(MeshError::Parse {
                line,
                message: format!("expected at least 4 columns, got {}", tokens.len()),
            });
        }
        let mut tri = [0usize; 3];
        for k in 0..3 {
            let raw: usize = parse_tok(tokens[k + 1], line, "node reference")?;
            if raw < base || raw - base >= n_nodes {
                return Err(MeshError::DanglingReference {
                    element: triangles.len(),
                    node: raw,
                });
            }
            tri[k] = raw - base;
        }
        triangles.push(tri);
    }
    if triangles.len() != n_tris {
        return Err(MeshError::InconsistentCounts {
            what: "triangles",
            declared: n_tris,
            found: triangles.len(),
        });
    }

    let mask = if n_markers == 1 {
        markers.iter().map(|&m| m != 0).collect()
    } else {
        vec![false; n_nodes]
    };
    let mesh = Mesh::triangulation(coords, triangles, mask)?;
    if n_markers == 0 {
        let mask = mesh.topological_boundary();
        return Mesh::finish(mesh.kind, mesh.coords, mesh.connectivity, mask);
    }
    let mismatches = mesh.marker_mismatches();
    if !mismatches.is_empty() {
        log::warn!(
            "{} node(s) have boundary markers that disagree with the mesh topology (first: node {})",
            mismatches.len(),
            mismatches[0] + base
        );
    }
    Ok(mesh)
}
