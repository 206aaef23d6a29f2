//! Crouzeix-Raviart and Fortin-Soulie velocity spaces, discontinuous P0/P1
//! pressure spaces, and their global degree-of-freedom maps.
//!
//! Local orderings on a cell with vertices `S_0, S_1, S_2` (facet `i`
//! opposite `S_i`):
//!
//! - CR: `psi_i = 1 - 2 lambda_i`, attached to facet `i`.
//! - FS: vertex functions `lambda_i (2 lambda_i - 1)` for `i = 0..3`, edge
//!   functions `4 lambda_{i+1} lambda_{i+2}` for facet `i`, then the bubble
//!   `2 - 3 sum(lambda_i^2)`, which vanishes at the two Gauss-Legendre points
//!   of every facet.
//! - P1 disc: `lambda_i`.
//! - P0 disc: the constant one.

use std::fmt;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementFamily {
    CrouzeixRaviart,
    FortinSoulie,
    P0Disc,
    P1Disc,
}

impl ElementFamily {
    pub fn local_dim(self) -> usize {
        match self {
            ElementFamily::CrouzeixRaviart => 3,
            ElementFamily::FortinSoulie => 7,
            ElementFamily::P0Disc => 1,
            ElementFamily::P1Disc => 3,
        }
    }

    pub fn is_velocity(self) -> bool {
        matches!(self, ElementFamily::CrouzeixRaviart | ElementFamily::FortinSoulie)
    }

    /// Polynomial degree of the local space.
    pub fn degree(self) -> usize {
        match self {
            ElementFamily::CrouzeixRaviart | ElementFamily::P1Disc => 1,
            ElementFamily::FortinSoulie => 2,
            ElementFamily::P0Disc => 0,
        }
    }

    /// The pressure family that forms a stable pair with this velocity family.
    pub fn pressure_pair(self) -> Option<ElementFamily> {
        match self {
            ElementFamily::CrouzeixRaviart => Some(ElementFamily::P0Disc),
            ElementFamily::FortinSoulie => Some(ElementFamily::P1Disc),
            _ => None,
        }
    }
}

impl fmt::Display for ElementFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementFamily::CrouzeixRaviart => "cr",
            ElementFamily::FortinSoulie => "fs",
            ElementFamily::P0Disc => "p0",
            ElementFamily::P1Disc => "p1disc",
        })
    }
}

/// Basis values and reference gradients at one reference point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisEval {
    len: usize,
    values: [f64; 7],
    gradients: [Point; 7],
}

impl BasisEval {
    pub fn values(&self) -> &[f64] {
        &self.values[..self.len]
    }

    /// Gradients with respect to the reference coordinates.
    pub fn gradients(&self) -> &[Point] {
        &self.gradients[..self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

const GRAD_LAMBDA: [Point; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

fn lambdas(xr: Point) -> [f64; 3] {
    [1.0 - xr[0] - xr[1], xr[0], xr[1]]
}

pub fn cr_basis(xr: Point) -> BasisEval {
    let l = lambdas(xr);
    let mut e = BasisEval {
        len: 3,
        values: [0.0; 7],
        gradients: [[0.0; 2]; 7],
    };
    for i in 0..3 {
        e.values[i] = 1.0 - 2.0 * l[i];
        e.gradients[i] = [-2.0 * GRAD_LAMBDA[i][0], -2.0 * GRAD_LAMBDA[i][1]];
    }
    e
}

pub fn fs_basis(xr: Point) -> BasisEval {
    let l = lambdas(xr);
    let g = GRAD_LAMBDA;
    let mut e = BasisEval {
        len: 7,
        values: [0.0; 7],
        gradients: [[0.0; 2]; 7],
    };
    for i in 0..3 {
        e.values[i] = l[i] * (2.0 * l[i] - 1.0);
        let s = 4.0 * l[i] - 1.0;
        e.gradients[i] = [s * g[i][0], s * g[i][1]];

        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
        e.values[3 + i] = 4.0 * l[a] * l[b];
        e.gradients[3 + i] = [
            4.0 * (l[a] * g[b][0] + l[b] * g[a][0]),
            4.0 * (l[a] * g[b][1] + l[b] * g[a][1]),
        ];
    }
    e.values[6] = 2.0 - 3.0 * (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]);
    e.gradients[6] = [
        -6.0 * (0..3).map(|i| l[i] * g[i][0]).sum::<f64>(),
        -6.0 * (0..3).map(|i| l[i] * g[i][1]).sum::<f64>(),
    ];
    e
}

pub fn p1_basis(xr: Point) -> BasisEval {
    let l = lambdas(xr);
    let mut e = BasisEval {
        len: 3,
        values: [0.0; 7],
        gradients: [[0.0; 2]; 7],
    };
    e.values[..3].copy_from_slice(&l);
    e.gradients[..3].copy_from_slice(&GRAD_LAMBDA);
    e
}

pub fn p0_basis(_xr: Point) -> BasisEval {
    let mut e = BasisEval {
        len: 1,
        values: [0.0; 7],
        gradients: [[0.0; 2]; 7],
    };
    e.values[0] = 1.0;
    e
}

pub fn local_basis(family: ElementFamily, xr: Point) -> BasisEval {
    match family {
        ElementFamily::CrouzeixRaviart => cr_basis(xr),
        ElementFamily::FortinSoulie => fs_basis(xr),
        ElementFamily::P0Disc => p0_basis(xr),
        ElementFamily::P1Disc => p1_basis(xr),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    Vertex,
    Facet,
    Cell,
}

/// Global numbering of a scalar space.
///
/// `free_index` numbers the dofs kept in the Dirichlet-constrained space
/// (all dofs for pressure spaces). Vector velocity spaces use the scalar map
/// per component, component-major: all first-component dofs, then all second.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub family: ElementFamily,
    pub total_dofs: usize,
    cell_dofs: Vec<usize>,
    pub dof_kind: Vec<DofKind>,
    pub boundary_mask: Vec<bool>,
    free_index: Vec<Option<usize>>,
    free_dofs: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, family: ElementFamily) -> DofMap {
        let (nv, nf, nc) = (mesh.num_vertices(), mesh.num_facets(), mesh.num_cells());
        let local = family.local_dim();
        let mut cell_dofs = Vec::with_capacity(nc * local);
        let (dof_kind, boundary_mask): (Vec<DofKind>, Vec<bool>) = match family {
            ElementFamily::CrouzeixRaviart => {
                for c in &mesh.cells {
                    cell_dofs.extend_from_slice(&c.facet_ids);
                }
                mesh.facets
                    .iter()
                    .map(|f| (DofKind::Facet, f.is_boundary()))
                    .unzip()
            }
            ElementFamily::FortinSoulie => {
                for c in &mesh.cells {
                    cell_dofs.extend_from_slice(&c.vertex_ids);
                    cell_dofs.extend(c.facet_ids.iter().map(|f| nv + f));
                    cell_dofs.push(nv + nf + c.id);
                }
                let v = mesh.vertices.iter().map(|v| (DofKind::Vertex, v.boundary));
                let f = mesh.facets.iter().map(|f| (DofKind::Facet, f.is_boundary()));
                let k = (0..nc).map(|_| (DofKind::Cell, false));
                v.chain(f).chain(k).unzip()
            }
            ElementFamily::P0Disc | ElementFamily::P1Disc => {
                cell_dofs.extend(0..nc * local);
                (vec![DofKind::Cell; nc * local], vec![false; nc * local])
            }
        };
        let total_dofs = dof_kind.len();
        let mut free_index = vec![None; total_dofs];
        let mut free_dofs = Vec::new();
        for (d, &b) in boundary_mask.iter().enumerate() {
            if !b {
                free_index[d] = Some(free_dofs.len());
                free_dofs.push(d);
            }
        }
        DofMap {
            family,
            total_dofs,
            cell_dofs,
            dof_kind,
            boundary_mask,
            free_index,
            free_dofs,
        }
    }

    pub fn local_dim(&self) -> usize {
        self.family.local_dim()
    }

    pub fn num_cells(&self) -> usize {
        self.cell_dofs.len() / self.local_dim()
    }

    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        let k = self.local_dim();
        &self.cell_dofs[cell * k..(cell + 1) * k]
    }

    pub fn num_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free_index[dof]
    }

    /// Global dof of each free index.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    fn check_len(&self, coeffs: &[f64], components: usize) -> Result<()> {
        if coeffs.len() != components * self.total_dofs {
            return Err(Error::Dimension {
                expected: components * self.total_dofs,
                got: coeffs.len(),
            });
        }
        Ok(())
    }

    /// Scalar field with full-length coefficients, at reference point `xr` of
    /// `cell`.
    pub fn evaluate(&self, coeffs: &[f64], cell: usize, xr: Point) -> Result<f64> {
        self.check_len(coeffs, 1)?;
        let b = local_basis(self.family, xr);
        Ok(self
            .cell_dofs(cell)
            .iter()
            .zip(b.values())
            .map(|(&d, &v)| coeffs[d] * v)
            .sum())
    }

    /// Vector field with component-major coefficients of length
    /// `2 * total_dofs`.
    pub fn evaluate_vector(&self, coeffs: &[f64], cell: usize, xr: Point) -> Result<Point> {
        self.check_len(coeffs, 2)?;
        Ok(self.eval_vector_unchecked(coeffs, cell, xr))
    }

    pub(crate) fn eval_vector_unchecked(&self, coeffs: &[f64], cell: usize, xr: Point) -> Point {
        let b = local_basis(self.family, xr);
        let n = self.total_dofs;
        let mut out = [0.0; 2];
        for (&d, &v) in self.cell_dofs(cell).iter().zip(b.values()) {
            out[0] += coeffs[d] * v;
            out[1] += coeffs[n + d] * v;
        }
        out
    }

    /// Physical Jacobian `[[du1/dx, du1/dy], [du2/dx, du2/dy]]` of a vector
    /// field on `cell`.
    pub fn vector_jacobian(
        &self,
        mesh: &Mesh,
        coeffs: &[f64],
        cell: usize,
        xr: Point,
    ) -> Result<[[f64; 2]; 2]> {
        self.check_len(coeffs, 2)?;
        let b = local_basis(self.family, xr);
        let map = mesh.affine_map(cell);
        let n = self.total_dofs;
        let mut j = [[0.0; 2]; 2];
        for (&d, &g) in self.cell_dofs(cell).iter().zip(b.gradients()) {
            let g = map.push_gradient(g);
            for c in 0..2 {
                j[c][0] += coeffs[c * n + d] * g[0];
                j[c][1] += coeffs[c * n + d] * g[1];
            }
        }
        Ok(j)
    }

    /// Expands a component-major vector on free dofs (length
    /// `2 * num_free`) to full length, zero on constrained dofs.
    pub fn expand_free_vector(&self, free: &[f64]) -> Result<Vec<f64>> {
        let nf = self.num_free();
        if free.len() != 2 * nf {
            return Err(Error::Dimension {
                expected: 2 * nf,
                got: free.len(),
            });
        }
        let n = self.total_dofs;
        let mut full = vec![0.0; 2 * n];
        for (k, &d) in self.free_dofs.iter().enumerate() {
            full[d] = free[k];
            full[n + d] = free[nf + k];
        }
        Ok(full)
    }
}

/// A vector field that may be discontinuous across cells: evaluation takes
/// the cell whose trace is wanted.
pub trait VectorField {
    fn eval(&self, cell: usize, x: Point) -> Point;
}

impl<F: Fn(Point) -> Point> VectorField for F {
    fn eval(&self, _cell: usize, x: Point) -> Point {
        self(x)
    }
}

/// Scalar counterpart of [`VectorField`].
pub trait ScalarField {
    fn eval(&self, cell: usize, x: Point) -> f64;
}

impl<F: Fn(Point) -> f64> ScalarField for F {
    fn eval(&self, _cell: usize, x: Point) -> f64 {
        self(x)
    }
}

/// Discrete vector field: dof map plus full-length component-major
/// coefficients.
#[derive(Clone, Copy)]
pub struct FeVectorField<'a> {
    pub mesh: &'a Mesh,
    pub dofmap: &'a DofMap,
    pub coeffs: &'a [f64],
}

impl<'a> FeVectorField<'a> {
    pub fn new(mesh: &'a Mesh, dofmap: &'a DofMap, coeffs: &'a [f64]) -> Result<Self> {
        dofmap.check_len(coeffs, 2)?;
        Ok(FeVectorField {
            mesh,
            dofmap,
            coeffs,
        })
    }
}

impl VectorField for FeVectorField<'_> {
    fn eval(&self, cell: usize, x: Point) -> Point {
        let xr = self.mesh.inverse_map(cell, x);
        self.dofmap.eval_vector_unchecked(self.coeffs, cell, xr)
    }
}

/// Discrete scalar field with full-length coefficients.
#[derive(Clone, Copy)]
pub struct FeScalarField<'a> {
    pub mesh: &'a Mesh,
    pub dofmap: &'a DofMap,
    pub coeffs: &'a [f64],
}

impl<'a> FeScalarField<'a> {
    pub fn new(mesh: &'a Mesh, dofmap: &'a DofMap, coeffs: &'a [f64]) -> Result<Self> {
        dofmap.check_len(coeffs, 1)?;
        Ok(FeScalarField {
            mesh,
            dofmap,
            coeffs,
        })
    }
}

impl ScalarField for FeScalarField<'_> {
    fn eval(&self, cell: usize, x: Point) -> f64 {
        let xr = self.mesh.inverse_map(cell, x);
        let b = local_basis(self.dofmap.family, xr);
        self.dofmap
            .cell_dofs(cell)
            .iter()
            .zip(b.values())
            .map(|(&d, &v)| self.coeffs[d] * v)
            .sum()
    }
}
