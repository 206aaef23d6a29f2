//! Sparse assembly of the nonconforming Stokes saddle-point system.
//!
//! Velocity unknowns are the interior (free) dofs of both components,
//! component-major: index `c * num_free + free_index`. Pressure unknowns are
//! all pressure dofs.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fe_spaces::{local_basis, DofMap, ElementFamily, VectorField};
use crate::interp::{rt0_eval, rt0_local, Rt1Reference, RtOrder};
use crate::mesh::Mesh;
use crate::quadrature::triangle_rule;
use crate::Point;

const RHS_DEGREE: usize = 8;
const DIV_DEGREE: usize = 3;

/// Compressed sparse row matrix with sorted, merged entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Merges duplicate coordinates by summation. The result does not depend
    /// on the order of `entries` up to floating-point summation order within
    /// each coordinate, which is kept stable.
    pub fn from_triplets(rows: usize, cols: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<SparseMatrix> {
        if let Some(&(r, c, _)) = entries.iter().find(|(r, c, _)| *r >= rows || *c >= cols) {
            return Err(Error::Dimension {
                expected: if r >= rows { rows } else { cols },
                got: r.max(c),
            });
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; rows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(SparseMatrix { rows, cols, row_ptr, col_idx, values })
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    /// `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension { expected: self.cols, got: x.len() });
        }
        Ok((0..self.rows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect())
    }

    /// `self^T x`.
    pub fn mul_vec_transposed(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::Dimension { expected: self.rows, got: x.len() });
        }
        let mut out = vec![0.0; self.cols];
        for (r, c, v) in self.triplets() {
            out[c] += v * x[r];
        }
        Ok(out)
    }

    pub fn transpose(&self) -> SparseMatrix {
        let t = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        SparseMatrix::from_triplets(self.cols, self.rows, t).expect("in range")
    }

    pub fn scaled(&self, s: f64) -> SparseMatrix {
        SparseMatrix { values: self.values.iter().map(|v| s * v).collect(), ..self.clone() }
    }

    /// `max |A - A^T|`; square matrices only.
    pub fn max_asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// `row col value` lines, 0-based, 17 significant digits.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> Result<()> {
        for (r, c, v) in self.triplets() {
            writeln!(w, "{r} {c} {v:.16e}")?;
        }
        Ok(())
    }
}

fn stiffness_degree(family: ElementFamily) -> usize {
    if family == ElementFamily::CrouzeixRaviart { 1 } else { 2 }
}

fn require_velocity(dm: &DofMap) -> Result<()> {
    if !dm.family.is_velocity() {
        return Err(Error::Config(format!("{} is not a velocity space", dm.family)));
    }
    Ok(())
}

/// Broken gradient Gram matrix times `nu`, on free dofs, block diagonal over
/// the two components.
pub fn assemble_stiffness(mesh: &Mesh, dm: &DofMap, nu: f64) -> Result<SparseMatrix> {
    require_velocity(dm)?;
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Domain(format!("viscosity must be positive, got {nu}")));
    }
    let rule = triangle_rule(stiffness_degree(dm.family))?;
    let nf = dm.num_free();
    let ld = dm.local_dim();
    let mut trip = Vec::with_capacity(mesh.num_cells() * ld * ld * 2);
    let mut local = vec![0.0; ld * ld];
    let mut grads = vec![[0.0; 2]; ld];
    for c in 0..mesh.num_cells() {
        let map = mesh.affine_map(c);
        let area = mesh.cells[c].area;
        local.iter_mut().for_each(|v| *v = 0.0);
        for (xr, w) in rule.reference_points() {
            let b = local_basis(dm.family, xr);
            for (g, &gr) in grads.iter_mut().zip(b.gradients()) {
                *g = map.push_gradient(gr);
            }
            for i in 0..ld {
                for j in 0..ld {
                    local[i * ld + j] += nu * area * w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                }
            }
        }
        let dofs = dm.cell_dofs(c);
        for i in 0..ld {
            let Some(fi) = dm.free_index(dofs[i]) else { continue };
            for j in 0..ld {
                let Some(fj) = dm.free_index(dofs[j]) else { continue };
                let v = local[i * ld + j];
                trip.push((fi, fj, v));
                trip.push((nf + fi, nf + fj, v));
            }
        }
    }
    SparseMatrix::from_triplets(2 * nf, 2 * nf, trip)
}

/// `B[i][j] = (div_h phi_j, q_i)`, pressure rows and free velocity columns.
pub fn assemble_divergence(mesh: &Mesh, vel: &DofMap, pres: &DofMap) -> Result<SparseMatrix> {
    let nf = vel.num_free();
    divergence_with(mesh, vel, pres, 2 * nf, |d, comp| {
        vel.free_index(d).map(|f| comp * nf + f)
    })
}

/// Same as [`assemble_divergence`] with a column for every velocity dof
/// (component-major, `2 * total_dofs` columns).
pub fn assemble_divergence_all_dofs(mesh: &Mesh, vel: &DofMap, pres: &DofMap) -> Result<SparseMatrix> {
    let n = vel.total_dofs;
    divergence_with(mesh, vel, pres, 2 * n, |d, comp| Some(comp * n + d))
}

fn divergence_with(
    mesh: &Mesh,
    vel: &DofMap,
    pres: &DofMap,
    cols: usize,
    column: impl Fn(usize, usize) -> Option<usize>,
) -> Result<SparseMatrix> {
    require_velocity(vel)?;
    if vel.family.pressure_pair() != Some(pres.family) {
        return Err(Error::Config(format!(
            "incompatible element pair {}/{}",
            vel.family, pres.family
        )));
    }
    let rule = triangle_rule(DIV_DEGREE)?;
    let (lv, lp) = (vel.local_dim(), pres.local_dim());
    let mut trip = Vec::new();
    let mut local = vec![[0.0; 2]; lp * lv];
    for c in 0..mesh.num_cells() {
        let map = mesh.affine_map(c);
        let area = mesh.cells[c].area;
        local.iter_mut().for_each(|v| *v = [0.0; 2]);
        for (xr, w) in rule.reference_points() {
            let bv = local_basis(vel.family, xr);
            let bp = local_basis(pres.family, xr);
            for (j, &gr) in bv.gradients().iter().enumerate() {
                let g = map.push_gradient(gr);
                for (i, &q) in bp.values().iter().enumerate() {
                    local[i * lv + j][0] += area * w * q * g[0];
                    local[i * lv + j][1] += area * w * q * g[1];
                }
            }
        }
        let (vd, pd) = (vel.cell_dofs(c), pres.cell_dofs(c));
        for i in 0..lp {
            for j in 0..lv {
                for comp in 0..2 {
                    if let Some(col) = column(vd[j], comp) {
                        trip.push((pd[i], col, local[i * lv + j][comp]));
                    }
                }
            }
        }
    }
    SparseMatrix::from_triplets(pres.total_dofs, cols, trip)
}

pub fn assemble_pressure_mass(mesh: &Mesh, pres: &DofMap) -> Result<SparseMatrix> {
    let rule = triangle_rule(2)?;
    let lp = pres.local_dim();
    let mut trip = Vec::new();
    for c in 0..mesh.num_cells() {
        let area = mesh.cells[c].area;
        let dofs = pres.cell_dofs(c);
        let mut local = vec![0.0; lp * lp];
        for (xr, w) in rule.reference_points() {
            let b = local_basis(pres.family, xr);
            for i in 0..lp {
                for j in 0..lp {
                    local[i * lp + j] += area * w * b.values()[i] * b.values()[j];
                }
            }
        }
        for i in 0..lp {
            for j in 0..lp {
                trip.push((dofs[i], dofs[j], local[i * lp + j]));
            }
        }
    }
    SparseMatrix::from_triplets(pres.total_dofs, pres.total_dofs, trip)
}

/// `m[i] = int q_i`.
pub fn assemble_mean_constraint(mesh: &Mesh, pres: &DofMap) -> Result<Vec<f64>> {
    let rule = triangle_rule(1)?;
    let mut m = vec![0.0; pres.total_dofs];
    for c in 0..mesh.num_cells() {
        let area = mesh.cells[c].area;
        for (xr, w) in rule.reference_points() {
            let b = local_basis(pres.family, xr);
            for (&d, &v) in pres.cell_dofs(c).iter().zip(b.values()) {
                m[d] += area * w * v;
            }
        }
    }
    Ok(m)
}

/// Right-hand side of the momentum equation.
pub enum SourceTerm {
    /// `f = grad(phi)`, given by its analytic gradient. `phi` is kept for
    /// pressure comparisons.
    GradientOfPotential {
        phi: Box<dyn Fn(Point) -> f64 + Send + Sync>,
        grad: Box<dyn Fn(Point) -> Point + Send + Sync>,
    },
    Analytic(Box<dyn Fn(Point) -> Point + Send + Sync>),
}

impl SourceTerm {
    pub fn eval(&self, x: Point) -> Point {
        match self {
            SourceTerm::GradientOfPotential { grad, .. } => grad(x),
            SourceTerm::Analytic(f) => f(x),
        }
    }

    pub fn scaled(self, s: f64) -> SourceTerm {
        match self {
            SourceTerm::GradientOfPotential { phi, grad } => SourceTerm::GradientOfPotential {
                phi: Box::new(move |x| s * phi(x)),
                grad: Box::new(move |x| {
                    let g = grad(x);
                    [s * g[0], s * g[1]]
                }),
            },
            SourceTerm::Analytic(f) => SourceTerm::Analytic(Box::new(move |x| {
                let v = f(x);
                [s * v[0], s * v[1]]
            })),
        }
    }
}

impl VectorField for SourceTerm {
    fn eval(&self, _cell: usize, x: Point) -> Point {
        SourceTerm::eval(self, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Projection {
    None,
    Rt,
}

impl std::fmt::Display for Projection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Projection::None => "none",
            Projection::Rt => "rt",
        })
    }
}

impl std::str::FromStr for Projection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Projection::None),
            "rt" => Ok(Projection::Rt),
            other => Err(Error::Config(format!("unknown projection '{other}'"))),
        }
    }
}

/// Load vector on free velocity dofs: `int f . phi_j`, or with `Rt`,
/// `int f . Pi_RT phi_j`. Basis fields are projected cellwise; their facet
/// moments are single valued, so this is the global interpolant.
pub fn assemble_rhs<F: VectorField + ?Sized>(
    mesh: &Mesh,
    dm: &DofMap,
    source: &F,
    projection: Projection,
) -> Result<Vec<f64>> {
    require_velocity(dm)?;
    let rule = triangle_rule(RHS_DEGREE)?;
    let order = RtOrder::for_velocity(dm.family)?;
    let nf = dm.num_free();
    let ld = dm.local_dim();
    let mut rhs = vec![0.0; 2 * nf];
    let mut local = vec![[0.0; 2]; ld];
    for c in 0..mesh.num_cells() {
        let map = mesh.affine_map(c);
        let area = mesh.cells[c].area;
        let dofs = dm.cell_dofs(c);
        local.iter_mut().for_each(|v| *v = [0.0; 2]);
        match projection {
            Projection::None => {
                for (xr, w) in rule.reference_points() {
                    let f = source.eval(c, map.apply(xr));
                    let b = local_basis(dm.family, xr);
                    for (l, &v) in local.iter_mut().zip(b.values()) {
                        l[0] += area * w * f[0] * v;
                        l[1] += area * w * f[1] * v;
                    }
                }
            }
            Projection::Rt => {
                let pts: Vec<(Point, Point, f64)> = rule
                    .reference_points()
                    .map(|(xr, w)| (xr, map.apply(xr), area * w))
                    .collect();
                let fv: Vec<Point> = pts.iter().map(|&(_, x, _)| source.eval(c, x)).collect();
                for k in 0..ld {
                    if dm.free_index(dofs[k]).is_none() {
                        continue;
                    }
                    for comp in 0..2 {
                        let unit = |v: f64| if comp == 0 { [v, 0.0] } else { [0.0, v] };
                        let projected: Vec<Point> = match order {
                            RtOrder::Rt0 => {
                                let phi = |x: Point| unit(local_basis(dm.family, map.inverse(x)).values()[k]);
                                let fl = rt0_local(mesh, c, phi);
                                pts.iter().map(|&(_, x, _)| rt0_eval(mesh, c, &fl, x)).collect()
                            }
                            RtOrder::Rt1 => {
                                let phi = |xr: Point| unit(local_basis(dm.family, xr).values()[k]);
                                let r = Rt1Reference::new(map, phi);
                                pts.iter().map(|&(xr, _, _)| r.eval(map, xr)).collect()
                            }
                        };
                        local[k][comp] = pts
                            .iter()
                            .zip(&fv)
                            .zip(&projected)
                            .map(|((&(_, _, aw), f), p)| aw * (f[0] * p[0] + f[1] * p[1]))
                            .sum();
                    }
                }
            }
        }
        for k in 0..ld {
            if let Some(fi) = dm.free_index(dofs[k]) {
                rhs[fi] += local[k][0];
                rhs[nf + fi] += local[k][1];
            }
        }
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("load vector"));
    }
    Ok(rhs)
}

/// Blocks of `[[A, -B^T, 0], [-B, 0, m], [0, m^T, 0]]` with load `rhs_u`.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    /// `nu`-scaled stiffness on free velocity dofs.
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub mass_p: SparseMatrix,
    pub mean: Vec<f64>,
    pub rhs_u: Vec<f64>,
    pub nu: f64,
}

impl SaddleSystem {
    pub fn assemble<F: VectorField + ?Sized>(
        mesh: &Mesh,
        vel: &DofMap,
        pres: &DofMap,
        source: &F,
        projection: Projection,
        nu: f64,
    ) -> Result<SaddleSystem> {
        Ok(SaddleSystem {
            a: assemble_stiffness(mesh, vel, nu)?,
            b: assemble_divergence(mesh, vel, pres)?,
            mass_p: assemble_pressure_mass(mesh, pres)?,
            mean: assemble_mean_constraint(mesh, pres)?,
            rhs_u: assemble_rhs(mesh, vel, source, projection)?,
            nu,
        })
    }

    pub fn num_velocity(&self) -> usize {
        self.a.rows
    }

    pub fn num_pressure(&self) -> usize {
        self.b.rows
    }

    /// Velocity, pressure, and one multiplier.
    pub fn size(&self) -> usize {
        self.num_velocity() + self.num_pressure() + 1
    }

    pub fn check_dimensions(&self) -> Result<()> {
        let (nu_, np) = (self.num_velocity(), self.num_pressure());
        let checks = [
            (self.a.cols, nu_),
            (self.b.cols, nu_),
            (self.mass_p.rows, np),
            (self.mass_p.cols, np),
            (self.mean.len(), np),
            (self.rhs_u.len(), nu_),
        ];
        for (got, expected) in checks {
            if got != expected {
                return Err(Error::Dimension { expected, got });
            }
        }
        Ok(())
    }

    /// Full symmetric matrix as triplets.
    pub fn matrix_triplets(&self) -> Vec<(usize, usize, f64)> {
        let nv = self.num_velocity();
        let np = self.num_pressure();
        let mut t: Vec<_> = self.a.triplets().collect();
        for (r, c, v) in self.b.triplets() {
            t.push((nv + r, c, -v));
            t.push((c, nv + r, -v));
        }
        for (i, &m) in self.mean.iter().enumerate() {
            t.push((nv + i, nv + np, m));
            t.push((nv + np, nv + i, m));
        }
        t
    }

    /// `K z` for `z = [u; p; lambda]`.
    pub fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        let (nv, np) = (self.num_velocity(), self.num_pressure());
        if z.len() != nv + np + 1 {
            return Err(Error::Dimension { expected: nv + np + 1, got: z.len() });
        }
        let (u, rest) = z.split_at(nv);
        let (p, lam) = rest.split_at(np);
        let mut out = self.a.mul_vec(u)?;
        for (o, bt) in out.iter_mut().zip(self.b.mul_vec_transposed(p)?) {
            *o -= bt;
        }
        let bu = self.b.mul_vec(u)?;
        out.extend(bu.iter().zip(&self.mean).map(|(b, m)| -b + m * lam[0]));
        out.push(self.mean.iter().zip(p).map(|(m, q)| m * q).sum());
        Ok(out)
    }

    /// Right-hand side `[rhs_u; 0; 0]`.
    pub fn full_rhs(&self) -> Vec<f64> {
        let mut b = self.rhs_u.clone();
        b.resize(self.size(), 0.0);
        b
    }
}
