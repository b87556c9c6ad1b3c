//! P1 triangulations with Dirichlet edge markers, plus the plain-text mesh format
//!
//! ```text
//! nodes <n> triangles <m> edges <k>
//! x y                 (n lines)
//! i j k               (m lines, counterclockwise, 0-based)
//! i j dirichlet|free  (k lines)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeMarker {
    Dirichlet,
    Free,
}

impl EdgeMarker {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeMarker::Dirichlet => "dirichlet",
            EdgeMarker::Free => "free",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub marker: EdgeMarker,
}

/// Nodal scalar field, one value per node (the phase field).
pub type ScalarField = Vec<f64>;
/// Nodal vector field, interleaved `[x0, y0, x1, y1, ...]` (the displacement).
pub type VectorField = Vec<f64>;

#[derive(Debug, Clone)]
pub struct TriMesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    areas: Vec<f64>,
    /// Constant gradients of the three barycentric basis functions per element.
    grads: Vec<[[f64; 2]; 3]>,
    dirichlet_nodes: Vec<usize>,
}

impl TriMesh {
    pub fn new(
        nodes: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        let n = nodes.len();
        if n < 3 || triangles.is_empty() {
            return Err(Error::InvalidArgument("mesh needs at least one triangle".into()));
        }
        let mut areas = Vec::with_capacity(triangles.len());
        let mut grads = Vec::with_capacity(triangles.len());
        for (e, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::InvalidArgument(format!("triangle {e} references a missing node")));
            }
            let [p0, p1, p2] = tri.map(|v| nodes[v]);
            let two_a = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
            if !(two_a > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "triangle {e} is degenerate or clockwise (2A = {two_a})"
                )));
            }
            areas.push(0.5 * two_a);
            grads.push([
                [(p1[1] - p2[1]) / two_a, (p2[0] - p1[0]) / two_a],
                [(p2[1] - p0[1]) / two_a, (p0[0] - p2[0]) / two_a],
                [(p0[1] - p1[1]) / two_a, (p1[0] - p0[0]) / two_a],
            ]);
        }
        for (k, edge) in boundary_edges.iter().enumerate() {
            if edge.nodes.iter().any(|&v| v >= n) {
                return Err(Error::InvalidArgument(format!("edge {k} references a missing node")));
            }
        }
        let mut dirichlet_nodes: Vec<usize> = boundary_edges
            .iter()
            .filter(|e| e.marker == EdgeMarker::Dirichlet)
            .flat_map(|e| e.nodes)
            .collect();
        dirichlet_nodes.sort_unstable();
        dirichlet_nodes.dedup();
        Ok(TriMesh {
            nodes,
            triangles,
            boundary_edges,
            areas,
            grads,
            dirichlet_nodes,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn area(&self, elem: usize) -> f64 {
        self.areas[elem]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn basis_gradients(&self, elem: usize) -> &[[f64; 2]; 3] {
        &self.grads[elem]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Sorted, deduplicated nodes lying on Dirichlet edges.
    pub fn dirichlet_nodes(&self) -> &[usize] {
        &self.dirichlet_nodes
    }

    /// Per-dof flag for the interleaved displacement layout.
    pub fn dirichlet_dof_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; 2 * self.num_nodes()];
        for &v in &self.dirichlet_nodes {
            mask[2 * v] = true;
            mask[2 * v + 1] = true;
        }
        mask
    }

    /// `(xmin, ymin, xmax, ymax)`.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        self.nodes.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), p| (a.min(p[0]), b.min(p[1]), c.max(p[0]), d.max(p[1])),
        )
    }

    /// Serializes to the plain-text mesh format with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "nodes {} triangles {} edges {}",
            self.nodes.len(),
            self.triangles.len(),
            self.boundary_edges.len()
        );
        for p in &self.nodes {
            let _ = writeln!(s, "{:.16e} {:.16e}", p[0], p[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        for e in &self.boundary_edges {
            let _ = writeln!(s, "{} {} {}", e.nodes[0], e.nodes[1], e.marker.as_str());
        }
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
        Self::parse(&text, &path.as_ref().display().to_string())
    }

    /// Parses the plain-text format. `origin` is used in error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: origin.to_string(),
            line,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (hline, header) = lines.next().ok_or_else(|| err(1, "empty mesh file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 6 || h[0] != "nodes" || h[2] != "triangles" || h[4] != "edges" {
            return Err(err(hline, format!("bad header `{header}`")));
        }
        let count = |tok: &str| {
            tok.parse::<usize>()
                .map_err(|_| err(hline, format!("bad count `{tok}`")))
        };
        let (n, m, k) = (count(h[1])?, count(h[3])?, count(h[5])?);

        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, l) = lines.next().ok_or_else(|| err(hline, "missing node lines".into()))?;
            let v: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| err(ln, format!("bad node coordinates: {e}")))?;
            if v.len() != 2 {
                return Err(err(ln, format!("expected 2 coordinates, got {}", v.len())));
            }
            nodes.push([v[0], v[1]]);
        }
        let mut triangles = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, l) = lines.next().ok_or_else(|| err(hline, "missing triangle lines".into()))?;
            let v: Vec<usize> = l
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| err(ln, format!("bad triangle indices: {e}")))?;
            if v.len() != 3 {
                return Err(err(ln, format!("expected 3 indices, got {}", v.len())));
            }
            triangles.push([v[0], v[1], v[2]]);
        }
        let mut edges = Vec::with_capacity(k);
        for _ in 0..k {
            let (ln, l) = lines.next().ok_or_else(|| err(hline, "missing edge lines".into()))?;
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 3 {
                return Err(err(ln, "expected `i j marker`".into()));
            }
            let i = t[0].parse().map_err(|_| err(ln, format!("bad index `{}`", t[0])))?;
            let j = t[1].parse().map_err(|_| err(ln, format!("bad index `{}`", t[1])))?;
            let marker = match t[2] {
                "dirichlet" => EdgeMarker::Dirichlet,
                "free" => EdgeMarker::Free,
                other => return Err(err(ln, format!("unknown edge marker `{other}`"))),
            };
            edges.push(BoundaryEdge { nodes: [i, j], marker });
        }
        if let Some((ln, _)) = lines.next() {
            return Err(err(ln, "trailing content after edge list".into()));
        }
        TriMesh::new(nodes, triangles, edges).map_err(|e| err(hline, e.to_string()))
    }
}

/// Rectangle `[0, width] × [0, height]` split into `nx × ny` cells, each cut along the
/// lower-left to upper-right diagonal. Boundary edges are marked by `marker` evaluated
/// at the edge midpoint.
pub fn build_structured_mesh(
    nx: usize,
    ny: usize,
    width: f64,
    height: f64,
    marker: impl Fn(f64, f64) -> EdgeMarker,
) -> Result<TriMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(format!("mesh divisions must be ≥ 1, got {nx}×{ny}")));
    }
    if !(width > 0.0 && height > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mesh dimensions must be positive, got {width}×{height}"
        )));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([width * i as f64 / nx as f64, height * j as f64 / ny as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    let mut push = |p: usize, q: usize| {
        let (a, b) = (nodes[p], nodes[q]);
        let marker = marker(0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]));
        boundary.push(BoundaryEdge { nodes: [p, q], marker });
    };
    for i in 0..nx {
        push(id(i, 0), id(i + 1, 0));
    }
    for j in 0..ny {
        push(id(nx, j), id(nx, j + 1));
    }
    for i in (0..nx).rev() {
        push(id(i + 1, ny), id(i, ny));
    }
    for j in (0..ny).rev() {
        push(id(0, j + 1), id(0, j));
    }
    TriMesh::new(nodes, triangles, boundary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_dirichlet(_: f64, _: f64) -> EdgeMarker {
        EdgeMarker::Dirichlet
    }

    #[test]
    fn structured_counts_and_areas() {
        let m = build_structured_mesh(1, 1, 1.0, 1.0, all_dirichlet).unwrap();
        assert_eq!(m.num_nodes(), 4);
        assert_eq!(m.num_triangles(), 2);
        assert!(m.areas().iter().all(|&a| (a - 0.5).abs() < 1e-15));

        let m = build_structured_mesh(2, 1, 1.0, 1.0, all_dirichlet).unwrap();
        assert_eq!((m.num_nodes(), m.num_triangles()), (6, 4));
        assert!((m.total_area() - 1.0).abs() < 1e-15);

        let m = build_structured_mesh(10, 10, 1.0, 1.0, all_dirichlet).unwrap();
        assert!((m.total_area() - 1.0).abs() <= 1e-12);
        assert_eq!(m.boundary_edges().len(), 40);
    }

    #[test]
    fn rejects_zero_dimensions() {
        assert!(build_structured_mesh(0, 3, 1.0, 1.0, all_dirichlet).is_err());
        assert!(build_structured_mesh(3, 3, 0.0, 1.0, all_dirichlet).is_err());
    }

    #[test]
    fn basis_gradients_sum_to_zero() {
        let m = build_structured_mesh(3, 2, 2.0, 1.0, all_dirichlet).unwrap();
        for e in 0..m.num_triangles() {
            let g = m.basis_gradients(e);
            assert!((g[0][0] + g[1][0] + g[2][0]).abs() < 1e-12);
            assert!((g[0][1] + g[1][1] + g[2][1]).abs() < 1e-12);
        }
    }

    #[test]
    fn text_roundtrip() {
        let m = build_structured_mesh(3, 2, 1.5, 1.0, |_, y| {
            if y < 1e-12 {
                EdgeMarker::Dirichlet
            } else {
                EdgeMarker::Free
            }
        })
        .unwrap();
        let back = TriMesh::parse(&m.to_text(), "mem").unwrap();
        assert_eq!(back.num_nodes(), m.num_nodes());
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.boundary_edges(), m.boundary_edges());
        assert_eq!(back.nodes(), m.nodes());
        assert_eq!(back.dirichlet_nodes(), &[0, 1, 2, 3]);
    }

    #[test]
    fn parse_reports_line() {
        let text = "nodes 3 triangles 1 edges 0\n0 0\n1 0\n0 x\n0 1 2\n";
        match TriMesh::parse(text, "bad.mesh") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let cw = "nodes 3 triangles 1 edges 0\n0 0\n1 0\n0 1\n0 2 1\n";
        assert!(TriMesh::parse(cw, "cw").is_err());
    }
}
