//! Conforming triangulations of 2-D polygonal domains.
//!
//! Meshes come from two places: [`generate_square_grid`], the structured
//! square used by every quantitative experiment, and [`import_mesh`], which
//! reads the plain-text format described on [`Mesh::export`]. Both go
//! through [`Mesh::new`], which validates the triangulation and computes the
//! size `h` and shape constant `rho`.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Boundary labels used by the square generator.
pub mod labels {
    pub const BOTTOM: i32 = 1;
    pub const RIGHT: i32 = 2;
    pub const TOP: i32 = 3;
    pub const LEFT: i32 = 4;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub label: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    /// Per-node label; zero for interior nodes.
    pub node_labels: Vec<i32>,
    /// Counterclockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<i32>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Largest element diameter.
    pub h: f64,
    /// max over triangles of (largest vertex-to-barycenter distance) / h.
    pub rho: f64,
}

impl Mesh {
    /// Validates the triangulation and computes `h` and `rho`.
    pub fn new(
        nodes: Vec<Point>,
        node_labels: Vec<i32>,
        triangles: Vec<[usize; 3]>,
        regions: Vec<i32>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        if node_labels.len() != nodes.len() {
            return Err(Error::InvalidMesh(format!("{} node labels for {} nodes", node_labels.len(), nodes.len())));
        }
        if regions.len() != triangles.len() {
            return Err(Error::InvalidMesh(format!(
                "{} region labels for {} triangles",
                regions.len(),
                triangles.len()
            )));
        }
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh has no triangles".into()));
        }
        let nv = nodes.len();
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {t} references node {bad} but there are {nv} nodes")));
            }
        }
        for (e, edge) in boundary_edges.iter().enumerate() {
            if let Some(&bad) = edge.nodes.iter().find(|&&i| i >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge {e} references node {bad} but there are {nv} nodes"
                )));
            }
        }
        if let Some(p) = nodes.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidMesh(format!("node {p} has non-finite coordinates")));
        }

        let mut h: f64 = 0.0;
        for (t, tri) in triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|i| nodes[i]);
            let area = signed_area(a, b, c);
            let scale = diameter(a, b, c);
            if !(area > 1e-14 * scale * scale) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} ({}, {}, {}) has non-positive area {area:e}",
                    tri[0], tri[1], tri[2]
                )));
            }
            h = h.max(scale);
        }
        check_edge_manifold(&triangles)?;

        let mut mesh = Mesh { nodes, node_labels, triangles, regions, boundary_edges, h, rho: 0.0 };
        mesh.rho = (0..mesh.triangles.len()).map(|t| mesh.max_vertex_barycenter_distance(t)).fold(0.0, f64::max) / h;
        Ok(mesh)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|i| self.nodes[i])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.vertices(t);
        signed_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.area(t)).sum()
    }

    pub fn barycenter(&self, t: usize) -> Point {
        let [a, b, c] = self.vertices(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    fn max_vertex_barycenter_distance(&self, t: usize) -> f64 {
        let g = self.barycenter(t);
        self.vertices(t).iter().map(|p| dist(*p, g)).fold(0.0, f64::max)
    }

    /// Bounding box as `(min, max)` corners.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Nodes touched by a boundary edge or carrying a nonzero label.
    pub fn boundary_nodes(&self) -> Vec<bool> {
        let mut on = self.node_labels.iter().map(|&l| l != 0).collect::<Vec<_>>();
        for e in &self.boundary_edges {
            on[e.nodes[0]] = true;
            on[e.nodes[1]] = true;
        }
        on
    }

    /// Writes the mesh in the plain-text format:
    ///
    /// ```text
    /// nv nt nbe
    /// x y label          (nv lines)
    /// i j k region       (nt lines, 1-based)
    /// i j label          (nbe lines, 1-based)
    /// ```
    ///
    /// Coordinates carry 17 significant digits so that re-import is exact.
    pub fn export<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", self.num_nodes(), self.num_triangles(), self.boundary_edges.len())?;
        for (p, label) in self.nodes.iter().zip(&self.node_labels) {
            writeln!(w, "{:.16e} {:.16e} {}", p[0], p[1], label)?;
        }
        for (t, region) in self.triangles.iter().zip(&self.regions) {
            writeln!(w, "{} {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1, region)?;
        }
        for e in &self.boundary_edges {
            writeln!(w, "{} {} {}", e.nodes[0] + 1, e.nodes[1] + 1, e.label)?;
        }
        Ok(())
    }
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn diameter(a: Point, b: Point, c: Point) -> f64 {
    dist(a, b).max(dist(b, c)).max(dist(c, a))
}

/// Each interior edge must be shared by exactly two triangles traversing it
/// in opposite directions; otherwise triangles overlap or fold.
fn check_edge_manifold(triangles: &[[usize; 3]]) -> Result<()> {
    let mut seen: HashMap<(usize, usize), (usize, bool)> = HashMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let forward = a < b;
            match seen.get_mut(&key) {
                None => {
                    seen.insert(key, (1, forward));
                }
                Some((count, dir)) => {
                    if *count >= 2 || *dir == forward {
                        return Err(Error::InvalidMesh(format!(
                            "triangle {t} overlaps a neighbour along edge ({a}, {b})"
                        )));
                    }
                    *count += 1;
                }
            }
        }
    }
    Ok(())
}

/// Structured `N x N` grid on `[0, l]^2`, every cell split along its
/// lower-left to upper-right diagonal. Node `(i, j)` has index `j (N+1) + i`.
pub fn generate_square_grid(l: f64, n: usize) -> Result<Mesh> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::InvalidParameter(format!("square side must be > 0, got {l}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("square grid needs N >= 1".into()));
    }
    let np = n + 1;
    let idx = |i: usize, j: usize| j * np + i;
    let coord = |i: usize| if i == n { l } else { i as f64 * l / n as f64 };

    let mut nodes = Vec::with_capacity(np * np);
    let mut node_labels = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            nodes.push([coord(i), coord(j)]);
            let label = if j == 0 {
                labels::BOTTOM
            } else if i == n {
                labels::RIGHT
            } else if j == n {
                labels::TOP
            } else if i == 0 {
                labels::LEFT
            } else {
                0
            };
            node_labels.push(label);
        }
    }

    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (p00, p10, p11, p01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([p00, p10, p11]);
            triangles.push([p00, p11, p01]);
        }
    }

    let mut boundary_edges = Vec::with_capacity(4 * n);
    for i in 0..n {
        boundary_edges.push(BoundaryEdge { nodes: [idx(i, 0), idx(i + 1, 0)], label: labels::BOTTOM });
    }
    for j in 0..n {
        boundary_edges.push(BoundaryEdge { nodes: [idx(n, j), idx(n, j + 1)], label: labels::RIGHT });
    }
    for i in (0..n).rev() {
        boundary_edges.push(BoundaryEdge { nodes: [idx(i + 1, n), idx(i, n)], label: labels::TOP });
    }
    for j in (0..n).rev() {
        boundary_edges.push(BoundaryEdge { nodes: [idx(0, j + 1), idx(0, j)], label: labels::LEFT });
    }

    let regions = vec![0; triangles.len()];
    Mesh::new(nodes, node_labels, triangles, regions, boundary_edges)
}

/// Reads a mesh in the format written by [`Mesh::export`].
pub fn import_mesh<R: BufRead>(reader: R) -> Result<Mesh> {
    let mut lines =
        reader.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()));

    let mut next = |what: &str| -> Result<(usize, Vec<String>)> {
        match lines.next() {
            Some((n, Ok(s))) => Ok((n, s.split_whitespace().map(str::to_owned).collect())),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(Error::MeshParse { line: 0, msg: format!("unexpected end of input while reading {what}") }),
        }
    };

    fn field<T: std::str::FromStr>(tokens: &[String], k: usize, line: usize, what: &str) -> Result<T> {
        let tok = tokens.get(k).ok_or_else(|| Error::MeshParse { line, msg: format!("missing {what}") })?;
        tok.parse().map_err(|_| Error::MeshParse { line, msg: format!("cannot parse {what} from `{tok}`") })
    }

    let (line, header) = next("header")?;
    let nv: usize = field(&header, 0, line, "node count")?;
    let nt: usize = field(&header, 1, line, "triangle count")?;
    let nbe: usize = field(&header, 2, line, "boundary edge count")?;

    let mut nodes = Vec::with_capacity(nv);
    let mut node_labels = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, t) = next("node")?;
        nodes.push([field(&t, 0, line, "x")?, field(&t, 1, line, "y")?]);
        node_labels.push(field(&t, 2, line, "node label")?);
    }

    let one_based = |v: usize, line: usize, count: usize| -> Result<usize> {
        if v == 0 || v > count {
            Err(Error::MeshParse { line, msg: format!("node index {v} outside 1..={count}") })
        } else {
            Ok(v - 1)
        }
    };

    let mut triangles = Vec::with_capacity(nt);
    let mut regions = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (line, t) = next("triangle")?;
        let mut tri = [0usize; 3];
        for (k, slot) in tri.iter_mut().enumerate() {
            *slot = one_based(field(&t, k, line, "triangle vertex")?, line, nv)?;
        }
        triangles.push(tri);
        regions.push(field(&t, 3, line, "region")?);
    }

    let mut boundary_edges = Vec::with_capacity(nbe);
    for _ in 0..nbe {
        let (line, t) = next("boundary edge")?;
        let a = one_based(field(&t, 0, line, "edge vertex")?, line, nv)?;
        let b = one_based(field(&t, 1, line, "edge vertex")?, line, nv)?;
        boundary_edges.push(BoundaryEdge { nodes: [a, b], label: field(&t, 2, line, "edge label")? });
    }

    Mesh::new(nodes, node_labels, triangles, regions, boundary_edges)
}

pub fn barycenters(mesh: &Mesh) -> Vec<Point> {
    (0..mesh.num_triangles()).map(|t| mesh.barycenter(t)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularity {
    pub holds: bool,
    pub worst_triangle: usize,
    /// Largest vertex-to-barycenter distance divided by `h`.
    pub worst_ratio: f64,
}

/// Checks that every triangle fits in the ball of radius `rho * h` centred at
/// its barycenter.
pub fn check_regularity(mesh: &Mesh, rho: f64) -> Result<Regularity> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be > 0, got {rho}")));
    }
    let (worst_triangle, worst) = (0..mesh.num_triangles())
        .map(|t| (t, mesh.max_vertex_barycenter_distance(t)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    Ok(Regularity { holds: worst <= rho * mesh.h, worst_triangle, worst_ratio: worst / mesh.h })
}

/// Identification of opposite edges of a square `[x0, x0 + l] x [y0, y0 + l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicMap {
    /// slave node -> master node
    pub pairs: std::collections::BTreeMap<usize, usize>,
    pub reduced_dof_count: usize,
    pub period: f64,
}

impl PeriodicMap {
    pub fn master(&self, node: usize) -> usize {
        self.pairs.get(&node).copied().unwrap_or(node)
    }
}

/// Pairs right-edge nodes with left-edge nodes and top with bottom; the three
/// non-origin corners all map to the origin corner.
pub fn periodic_node_map(mesh: &Mesh, l: f64) -> Result<PeriodicMap> {
    if !(l > 0.0) {
        return Err(Error::InvalidParameter(format!("period must be > 0, got {l}")));
    }
    let tol = 1e-9 * l;
    let (lo, hi) = mesh.bounding_box();
    if ((hi[0] - lo[0]) - l).abs() > tol || ((hi[1] - lo[1]) - l).abs() > tol {
        return Err(Error::NoPartner(format!("mesh bounding box {:?}-{:?} does not match period {l}", lo, hi)));
    }
    let boundary = mesh.boundary_nodes();
    let on_boundary: Vec<usize> = (0..mesh.num_nodes()).filter(|&i| boundary[i]).collect();

    let find = |target: Point| -> Option<usize> {
        on_boundary
            .iter()
            .copied()
            .find(|&j| (mesh.nodes[j][0] - target[0]).abs() <= tol && (mesh.nodes[j][1] - target[1]).abs() <= tol)
    };
    let near = |a: f64, b: f64| (a - b).abs() <= tol;

    let mut pairs = std::collections::BTreeMap::new();
    for &i in &on_boundary {
        let p = mesh.nodes[i];
        let (right, top) = (near(p[0], hi[0]), near(p[1], hi[1]));
        let (left, bottom) = (near(p[0], lo[0]), near(p[1], lo[1]));
        if right || top {
            let target = [if right { p[0] - l } else { p[0] }, if top { p[1] - l } else { p[1] }];
            let master = find(target).ok_or_else(|| {
                Error::NoPartner(format!(
                    "node {i} at ({}, {}) has no partner at ({}, {})",
                    p[0], p[1], target[0], target[1]
                ))
            })?;
            pairs.insert(i, master);
        }
        // Left and bottom nodes must have a slave on the opposite edge.
        if (left && !top) || (bottom && !right) {
            let target = [if left { p[0] + l } else { p[0] }, if bottom { p[1] + l } else { p[1] }];
            if left && !top && find([target[0], p[1]]).is_none() {
                return Err(Error::NoPartner(format!("node {i} at ({}, {}) has no right-edge partner", p[0], p[1])));
            }
            if bottom && !right && find([p[0], target[1]]).is_none() {
                return Err(Error::NoPartner(format!("node {i} at ({}, {}) has no top-edge partner", p[0], p[1])));
            }
        }
    }
    let reduced_dof_count = mesh.num_nodes() - pairs.len();
    Ok(PeriodicMap { pairs, reduced_dof_count, period: l })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_triangle() -> Mesh {
        Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![1, 1, 1], vec![[0, 1, 2]], vec![0], vec![]).unwrap()
    }

    #[test]
    fn smallest_grid() {
        let m = generate_square_grid(1.0, 1).unwrap();
        assert_eq!(m.num_nodes(), 4);
        assert_eq!(m.num_triangles(), 2);
        assert!((m.total_area() - 1.0).abs() < 1e-15);
        assert!((m.h - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn grid_counts_and_area() {
        for n in 1..=64 {
            let m = generate_square_grid(1.0, n).unwrap();
            assert_eq!(m.num_nodes(), (n + 1) * (n + 1));
            assert_eq!(m.num_triangles(), 2 * n * n);
            assert!((m.total_area() - 1.0).abs() < 1e-10);
            assert_eq!(m.boundary_edges.len(), 4 * n);
        }
        let m = generate_square_grid(1.0, 5).unwrap();
        assert_eq!(m.num_triangles(), 50);
    }

    #[test]
    fn paper_scale_grid() {
        let m = generate_square_grid(80.0, 50).unwrap();
        assert_eq!(m.num_triangles(), 5000);
        assert_eq!(m.num_nodes(), 2601);
        assert!((m.h - 1.6 * 2f64.sqrt()).abs() < 1e-12);
        assert!((m.total_area() - 6400.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(generate_square_grid(0.0, 3).is_err());
        assert!(generate_square_grid(1.0, 0).is_err());
    }

    #[test]
    fn barycenter_examples() {
        let m = reference_triangle();
        let g = m.barycenter(0);
        assert!((g[0] - 1.0 / 3.0).abs() < 1e-15 && (g[1] - 1.0 / 3.0).abs() < 1e-15);

        let shifted =
            Mesh::new(vec![[2.0, 3.0], [3.0, 3.0], [2.0, 4.0]], vec![0; 3], vec![[0, 1, 2]], vec![0], vec![]).unwrap();
        let g = shifted.barycenter(0);
        assert!((g[0] - (1.0 / 3.0 + 2.0)).abs() < 1e-14);
        assert!((g[1] - (1.0 / 3.0 + 3.0)).abs() < 1e-14);

        let grid = generate_square_grid(1.0, 5).unwrap();
        for g in barycenters(&grid) {
            assert!(g[0] > 0.0 && g[0] < 1.0 && g[1] > 0.0 && g[1] < 1.0);
        }
    }

    #[test]
    fn regularity() {
        let grid = generate_square_grid(1.0, 5).unwrap();
        assert!(check_regularity(&grid, 1.0).unwrap().holds);
        assert!(!check_regularity(&grid, 0.01).unwrap().holds);
        // Right isosceles cell halves: farthest vertex sits at sqrt(5)/3 * (l/N)
        // from the barycenter, and h = sqrt(2) l/N.
        let expected = (5f64.sqrt() / 3.0) / 2f64.sqrt();
        assert!((grid.rho - expected).abs() < 1e-12);

        let t = reference_triangle();
        assert!((t.h - 2f64.sqrt()).abs() < 1e-15);
        let r = check_regularity(&t, 1.0).unwrap();
        assert!(r.holds);
        assert!((r.worst_ratio * t.h - 5f64.sqrt() / 3.0).abs() < 1e-14);
        assert!(check_regularity(&t, 0.0).is_err());
    }

    #[test]
    fn rejects_degenerate_and_out_of_range() {
        let collinear =
            Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], vec![0; 3], vec![[0, 1, 2]], vec![0], vec![]);
        match collinear {
            Err(Error::InvalidMesh(msg)) => assert!(msg.contains("triangle 0")),
            other => panic!("expected invalid mesh, got {other:?}"),
        }
        let clockwise =
            Mesh::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], vec![0; 3], vec![[0, 1, 2]], vec![0], vec![]);
        assert!(clockwise.is_err());
        let out_of_range = Mesh::new(vec![[0.0, 0.0]], vec![0], vec![[0, 1, 2]], vec![0], vec![]);
        assert!(out_of_range.is_err());
    }

    #[test]
    fn rejects_overlap() {
        let doubled = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![0; 3],
            vec![[0, 1, 2], [0, 1, 2]],
            vec![0, 0],
            vec![],
        );
        assert!(matches!(doubled, Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn import_reference_triangle() {
        let text = "3 1 3\n0 0 1\n1 0 1\n0 1 1\n1 2 3 0\n1 2 1\n2 3 1\n3 1 1\n";
        let m = import_mesh(text.as_bytes()).unwrap();
        assert!((m.total_area() - 0.5).abs() < 1e-15);
        assert_eq!(m.boundary_edges.len(), 3);
    }

    #[test]
    fn import_errors_carry_line_numbers() {
        let text = "3 1 0\n0 0 1\n1 zero 1\n0 1 1\n1 2 3 0\n";
        match import_mesh(text.as_bytes()) {
            Err(Error::MeshParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = "3 1 0\n0 0 1\n1 0 1\n0 1 1\n1 2 4 0\n";
        assert!(matches!(import_mesh(text.as_bytes()), Err(Error::MeshParse { line: 5, .. })));
        let truncated = "3 1 0\n0 0 1\n";
        assert!(matches!(import_mesh(truncated.as_bytes()), Err(Error::MeshParse { .. })));
        let collinear = "3 1 0\n0 0 0\n1 0 0\n2 0 0\n1 2 3 0\n";
        assert!(matches!(import_mesh(collinear.as_bytes()), Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn export_import_round_trip() {
        let m = generate_square_grid(1.0, 5).unwrap();
        let mut buf = Vec::new();
        m.export(&mut buf).unwrap();
        let back = import_mesh(buf.as_slice()).unwrap();
        assert_eq!(back.nodes, m.nodes);
        assert_eq!(back.triangles, m.triangles);
        assert_eq!(back.boundary_edges, m.boundary_edges);
        assert_eq!(back, m);
    }

    #[test]
    fn periodic_small_grids() {
        let m = generate_square_grid(1.0, 1).unwrap();
        let p = periodic_node_map(&m, 1.0).unwrap();
        assert_eq!(p.reduced_dof_count, 1);
        assert_eq!(p.pairs.len(), 3);
        assert!(p.pairs.values().all(|&v| v == 0));

        // 3x3 lattice: the right column (2, 5, 8) and top row (6, 7) are slaves,
        // leaving masters 0, 1, 3, 4.
        let m = generate_square_grid(1.0, 2).unwrap();
        let p = periodic_node_map(&m, 1.0).unwrap();
        assert_eq!(p.reduced_dof_count, 4);
        let expected: std::collections::BTreeMap<usize, usize> =
            [(2, 0), (5, 3), (6, 0), (7, 1), (8, 0)].into_iter().collect();
        assert_eq!(p.pairs, expected);
    }

    #[test]
    fn periodic_counts_and_idempotence() {
        for n in 1..=12 {
            let l = 3.5;
            let m = generate_square_grid(l, n).unwrap();
            let p = periodic_node_map(&m, l).unwrap();
            assert_eq!(p.reduced_dof_count, (n + 1) * (n + 1) - (2 * n + 1));
            let boundary = m.boundary_nodes();
            for (&s, &t) in &p.pairs {
                assert!(boundary[s] && boundary[t]);
                assert_eq!(p.master(p.master(s)), p.master(s));
                let (a, b) = (m.nodes[s], m.nodes[t]);
                let shifted = [(a[0] - b[0]).abs() > 1e-9 * l, (a[1] - b[1]).abs() > 1e-9 * l];
                for k in 0..2 {
                    let d = (a[k] - b[k]).abs();
                    assert!(d < 1e-9 * l || (d - l).abs() < 1e-9 * l);
                }
                assert!(shifted[0] || shifted[1]);
            }
        }
    }

    #[test]
    fn periodic_rejects_perturbed_boundary() {
        let mut m = generate_square_grid(1.0, 4).unwrap();
        // node (4, 2) on the right edge, nudged along the edge
        m.nodes[2 * 5 + 4][1] += 0.01;
        let m = Mesh::new(m.nodes, m.node_labels, m.triangles, m.regions, m.boundary_edges).unwrap();
        assert!(matches!(periodic_node_map(&m, 1.0), Err(Error::NoPartner(_))));
    }
}
