//! P1 finite-element operators on a [`Mesh`].
//!
//! Boundary conditions are handled through a [`DofLayout`] that maps mesh
//! nodes to unknowns before assembly: Dirichlet nodes are eliminated and
//! periodic slaves are identified with their masters, so every assembled
//! matrix stays symmetric.

use crate::error::{Error, Result};
use crate::linalg::SparseSymMatrix;
use crate::mesh::{Mesh, PeriodicMap, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    /// Pure Neumann (zero flux): every node is an unknown.
    Free,
    /// Homogeneous Dirichlet: boundary nodes are pinned to zero.
    Dirichlet,
    /// Periodic: opposite-edge nodes share one unknown.
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DofLayout {
    pub kind: DofKind,
    /// mesh node -> unknown, `None` for eliminated Dirichlet nodes
    map: Vec<Option<usize>>,
    /// unknown -> representative mesh node
    representatives: Vec<usize>,
}

impl DofLayout {
    pub fn free(mesh: &Mesh) -> Self {
        let n = mesh.num_nodes();
        DofLayout { kind: DofKind::Free, map: (0..n).map(Some).collect(), representatives: (0..n).collect() }
    }

    pub fn dirichlet(mesh: &Mesh) -> Self {
        let boundary = mesh.boundary_nodes();
        let mut map = vec![None; mesh.num_nodes()];
        let mut representatives = Vec::new();
        for (i, slot) in map.iter_mut().enumerate() {
            if !boundary[i] {
                *slot = Some(representatives.len());
                representatives.push(i);
            }
        }
        DofLayout { kind: DofKind::Dirichlet, map, representatives }
    }

    pub fn periodic(mesh: &Mesh, pmap: &PeriodicMap) -> Self {
        let n = mesh.num_nodes();
        let mut map = vec![None; n];
        let mut representatives = Vec::with_capacity(pmap.reduced_dof_count);
        for (i, slot) in map.iter_mut().enumerate() {
            if !pmap.pairs.contains_key(&i) {
                *slot = Some(representatives.len());
                representatives.push(i);
            }
        }
        for (&slave, &master) in &pmap.pairs {
            map[slave] = map[master];
        }
        DofLayout { kind: DofKind::Periodic, map, representatives }
    }

    pub fn num_dofs(&self) -> usize {
        self.representatives.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.map.len()
    }

    pub fn dof(&self, node: usize) -> Option<usize> {
        self.map[node]
    }

    pub fn representatives(&self) -> &[usize] {
        &self.representatives
    }

    /// Mesh-node vector -> unknowns, summing contributions that share an
    /// unknown and dropping eliminated nodes. This is the transpose of
    /// [`expand`](Self::expand) and maps full load vectors to reduced ones.
    pub fn reduce_sum(&self, full: &[f64]) -> Vec<f64> {
        assert_eq!(full.len(), self.map.len());
        let mut out = vec![0.0; self.num_dofs()];
        for (node, v) in full.iter().enumerate() {
            if let Some(d) = self.map[node] {
                out[d] += v;
            }
        }
        out
    }

    /// Unknowns -> mesh-node values (Dirichlet nodes get zero).
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        assert_eq!(reduced.len(), self.num_dofs());
        self.map.iter().map(|d| d.map_or(0.0, |d| reduced[d])).collect()
    }

    /// Nodal interpolant of `f` in the reduced space.
    pub fn interpolate<F: Fn(Point) -> f64>(&self, mesh: &Mesh, f: F) -> Vec<f64> {
        self.representatives.iter().map(|&i| f(mesh.nodes[i])).collect()
    }
}

/// Gradients of the three barycentric coordinates of triangle `t`.
fn barycentric_gradients(v: [Point; 3], area: f64) -> [[f64; 2]; 3] {
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        g[i] = [(v[j][1] - v[k][1]) / (2.0 * area), (v[k][0] - v[j][0]) / (2.0 * area)];
    }
    g
}

pub fn element_mass(area: f64) -> [[f64; 3]; 3] {
    let d = area / 6.0;
    let o = area / 12.0;
    [[d, o, o], [o, d, o], [o, o, d]]
}

pub fn element_stiffness(v: [Point; 3], area: f64) -> [[f64; 3]; 3] {
    let g = barycentric_gradients(v, area);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
        }
    }
    k
}

fn assemble<F: Fn(usize) -> [[f64; 3]; 3]>(mesh: &Mesh, layout: &DofLayout, element: F) -> SparseSymMatrix {
    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let ke = element(t);
        for a in 0..3 {
            let Some(i) = layout.dof(tri[a]) else { continue };
            for b in 0..3 {
                let Some(j) = layout.dof(tri[b]) else { continue };
                triplets.push((i, j, ke[a][b]));
            }
        }
    }
    SparseSymMatrix::from_triplets(layout.num_dofs(), &triplets)
}

/// Consistent P1 mass matrix `M_ij = (ψ_i, ψ_j)`.
pub fn assemble_mass(mesh: &Mesh, layout: &DofLayout) -> SparseSymMatrix {
    assemble(mesh, layout, |t| element_mass(mesh.area(t)))
}

/// P1 stiffness matrix `A_ij = (∇ψ_i, ∇ψ_j)`.
pub fn assemble_stiffness(mesh: &Mesh, layout: &DofLayout) -> SparseSymMatrix {
    assemble(mesh, layout, |t| element_stiffness(mesh.vertices(t), mesh.area(t)))
}

/// Discrete L2 norm `sqrt(v^T M v)`.
pub fn l2_norm(v: &[f64], mass: &SparseSymMatrix) -> Result<f64> {
    if v.len() != mass.dim() {
        return Err(Error::Dimension { expected: mass.dim(), got: v.len() });
    }
    Ok(mass.bilinear(v, v).max(0.0).sqrt())
}

/// Load vector `(I_h g, ψ_i)` of the P1 interpolant of nodal values `g`,
/// i.e. `M g`.
pub fn nonlinear_load(values: &[f64], mass: &SparseSymMatrix) -> Result<Vec<f64>> {
    if values.len() != mass.dim() {
        return Err(Error::Dimension { expected: mass.dim(), got: values.len() });
    }
    Ok(mass.mul_vec(values))
}

/// Everything a time stepper needs from the spatial discretization.
#[derive(Debug, Clone)]
pub struct FemOperators {
    pub layout: DofLayout,
    pub mass: SparseSymMatrix,
    pub stiffness: SparseSymMatrix,
    /// Mass matrix over all mesh nodes, used to load P1 fields that live on
    /// eliminated nodes too.
    full_mass: SparseSymMatrix,
    areas: Vec<f64>,
    triangles: Vec<[usize; 3]>,
}

impl FemOperators {
    pub fn new(mesh: &Mesh, layout: DofLayout) -> Self {
        let mass = assemble_mass(mesh, &layout);
        let stiffness = assemble_stiffness(mesh, &layout);
        let full_mass = assemble_mass(mesh, &DofLayout::free(mesh));
        FemOperators {
            layout,
            mass,
            stiffness,
            full_mass,
            areas: (0..mesh.num_triangles()).map(|t| mesh.area(t)).collect(),
            triangles: mesh.triangles.clone(),
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.layout.num_dofs()
    }

    /// `((Σ_j w_j ψ_j), ψ_i)` over reduced test functions, for a P1 field
    /// given by its values at every mesh node.
    pub fn load_p1(&self, nodal: &[f64]) -> Result<Vec<f64>> {
        if nodal.len() != self.full_mass.dim() {
            return Err(Error::Dimension { expected: self.full_mass.dim(), got: nodal.len() });
        }
        Ok(self.layout.reduce_sum(&self.full_mass.mul_vec(nodal)))
    }

    /// `((Σ_T c_T 1_T), ψ_i)` for a piecewise-constant field.
    pub fn load_p0(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.areas.len() {
            return Err(Error::Dimension { expected: self.areas.len(), got: coeffs.len() });
        }
        let mut full = vec![0.0; self.layout.num_nodes()];
        for ((tri, area), c) in self.triangles.iter().zip(&self.areas).zip(coeffs) {
            for &i in tri {
                full[i] += c * area / 3.0;
            }
        }
        Ok(self.layout.reduce_sum(&full))
    }

    pub fn l2_norm(&self, v: &[f64]) -> Result<f64> {
        l2_norm(v, &self.mass)
    }
}
