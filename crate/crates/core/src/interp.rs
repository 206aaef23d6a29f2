//! Interpolation onto the Crouzeix-Raviart, Fortin-Soulie, and
//! Raviart-Thomas (orders 0 and 1) spaces.
//!
//! Facet moments of broken inputs use the average of the two one-sided
//! traces, so the moments are single valued and the RT interpolants are
//! H(div)-conforming. All facet integrals use the 3-point Gauss rule.

use std::sync::OnceLock;

use nalgebra::{Matrix2, SMatrix, SVector, Vector2};

use crate::error::{Error, Result};
use crate::fe_spaces::{fs_basis, DofMap, ElementFamily, ScalarField, VectorField};
use crate::mesh::{AffineMap, Mesh};
use crate::quadrature::{edge_gauss_rule, triangle_rule};
use crate::Point;

const FACET_POINTS: usize = 3;
/// Degree of the cell rule for general (non-polynomial) integrands.
const CELL_DEGREE: usize = 8;

fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn check_finite(v: f64, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what))
    }
}

/// `{v}` on facet `f` at physical point `x`.
fn facet_average<V: VectorField + ?Sized>(mesh: &Mesh, field: &V, f: usize, x: Point) -> Point {
    let facet = &mesh.facets[f];
    let l = field.eval(facet.left_cell, x);
    match facet.right_cell {
        Some(r) => {
            let rv = field.eval(r, x);
            [0.5 * (l[0] + rv[0]), 0.5 * (l[1] + rv[1])]
        }
        None => l,
    }
}

fn facet_average_scalar<S: ScalarField + ?Sized>(mesh: &Mesh, field: &S, f: usize, x: Point) -> f64 {
    let facet = &mesh.facets[f];
    let l = field.eval(facet.left_cell, x);
    match facet.right_cell {
        Some(r) => 0.5 * (l + field.eval(r, x)),
        None => l,
    }
}

/// Mean of `{v}` over facet `f`, per component.
fn facet_mean<V: VectorField + ?Sized>(mesh: &Mesh, field: &V, f: usize) -> Point {
    let rule = edge_gauss_rule(FACET_POINTS).expect("shipped rule");
    let facet = &mesh.facets[f];
    let a = mesh.vertices[facet.vertex_ids[0]].coords;
    let b = mesh.vertices[facet.vertex_ids[1]].coords;
    rule.iter().fold([0.0; 2], |acc, (t, w)| {
        let v = facet_average(mesh, field, f, lerp(a, b, t));
        [acc[0] + w * v[0], acc[1] + w * v[1]]
    })
}

fn facet_mean_scalar<S: ScalarField + ?Sized>(mesh: &Mesh, field: &S, f: usize) -> f64 {
    let rule = edge_gauss_rule(FACET_POINTS).expect("shipped rule");
    let facet = &mesh.facets[f];
    let a = mesh.vertices[facet.vertex_ids[0]].coords;
    let b = mesh.vertices[facet.vertex_ids[1]].coords;
    rule.iter()
        .map(|(t, w)| w * facet_average_scalar(mesh, field, f, lerp(a, b, t)))
        .sum()
}

fn expect_family(dofmap: &DofMap, family: ElementFamily) -> Result<()> {
    if dofmap.family != family {
        return Err(Error::Config(format!(
            "expected a {family} dof map, got {}",
            dofmap.family
        )));
    }
    Ok(())
}

/// Crouzeix-Raviart interpolant of a scalar field: the coefficient of facet
/// `f` is the mean of `{v}` over `f`.
pub fn interpolate_cr_scalar<S: ScalarField + ?Sized>(
    mesh: &Mesh,
    dofmap: &DofMap,
    field: &S,
) -> Result<Vec<f64>> {
    expect_family(dofmap, ElementFamily::CrouzeixRaviart)?;
    (0..mesh.num_facets())
        .map(|f| check_finite(facet_mean_scalar(mesh, field, f), "CR facet mean"))
        .collect()
}

/// Componentwise Crouzeix-Raviart interpolant, component-major.
pub fn interpolate_cr<V: VectorField + ?Sized>(
    mesh: &Mesh,
    dofmap: &DofMap,
    field: &V,
) -> Result<Vec<f64>> {
    expect_family(dofmap, ElementFamily::CrouzeixRaviart)?;
    let n = dofmap.total_dofs;
    let mut out = vec![0.0; 2 * n];
    for f in 0..mesh.num_facets() {
        let m = facet_mean(mesh, field, f);
        out[f] = check_finite(m[0], "CR facet mean")?;
        out[n + f] = check_finite(m[1], "CR facet mean")?;
    }
    Ok(out)
}

/// Normalized mass matrix of the six local P2 Lagrange functions (divide by
/// nothing, multiply by `|K|` for the physical one) and its inverse.
fn p2_mass_inverse() -> &'static SMatrix<f64, 6, 6> {
    static INV: OnceLock<SMatrix<f64, 6, 6>> = OnceLock::new();
    INV.get_or_init(|| {
        let rule = triangle_rule(4).expect("shipped rule");
        let mut m = SMatrix::<f64, 6, 6>::zeros();
        for (xr, w) in rule.reference_points() {
            let b = fs_basis(xr);
            let v = b.values();
            for i in 0..6 {
                for j in 0..6 {
                    m[(i, j)] += w * v[i] * v[j];
                }
            }
        }
        m.try_inverse().expect("P2 mass matrix is invertible")
    })
}

/// Cell choice and dual-basis weights of the Scott-Zhang vertex functionals.
#[derive(Debug, Clone)]
pub struct ScottZhangSelection {
    /// Chosen cell per vertex: the lowest-numbered adjacent cell.
    pub cell: Vec<usize>,
    /// Local index of the vertex within the chosen cell.
    pub local: Vec<usize>,
    /// `dual_weights[v][k]`: coefficient of local P2 function `k` in the
    /// dual function of vertex `v` on its chosen cell.
    pub dual_weights: Vec<[f64; 6]>,
}

impl ScottZhangSelection {
    pub fn new(mesh: &Mesh) -> ScottZhangSelection {
        let inv = p2_mass_inverse();
        let n = mesh.num_vertices();
        let mut sel = ScottZhangSelection {
            cell: Vec::with_capacity(n),
            local: Vec::with_capacity(n),
            dual_weights: Vec::with_capacity(n),
        };
        for v in 0..n {
            let c = mesh.cells_of_vertex(v)[0];
            let j = mesh.cells[c].local_vertex(v).expect("incidence");
            let area = mesh.cells[c].area;
            sel.cell.push(c);
            sel.local.push(j);
            sel.dual_weights
                .push(std::array::from_fn(|k| inv[(j, k)] / area));
        }
        sel
    }

    /// `int_K v * dual_v` on the chosen cell of vertex `v`, using that cell's
    /// trace of the field.
    fn vertex_value<V: VectorField + ?Sized>(&self, mesh: &Mesh, field: &V, v: usize) -> Point {
        let c = self.cell[v];
        let map = mesh.affine_map(c);
        let area = mesh.cells[c].area;
        let rule = triangle_rule(CELL_DEGREE).expect("shipped rule");
        let wts = &self.dual_weights[v];
        let mut out = [0.0; 2];
        for (xr, w) in rule.reference_points() {
            let b = fs_basis(xr);
            let dual: f64 = (0..6).map(|k| wts[k] * b.values()[k]).sum();
            let val = field.eval(c, map.apply(xr));
            out[0] += area * w * dual * val[0];
            out[1] += area * w * dual * val[1];
        }
        out
    }
}

/// Vertex and facet coefficients of the continuous P2 part, per component.
/// Returns full-length component-major coefficients with zero bubbles.
fn fs_lagrange_part<V: VectorField + ?Sized>(
    mesh: &Mesh,
    dofmap: &DofMap,
    field: &V,
) -> Result<Vec<f64>> {
    expect_family(dofmap, ElementFamily::FortinSoulie)?;
    let sel = ScottZhangSelection::new(mesh);
    let (nv, n) = (mesh.num_vertices(), dofmap.total_dofs);
    let mut out = vec![0.0; 2 * n];
    for v in 0..nv {
        let val = sel.vertex_value(mesh, field, v);
        out[v] = check_finite(val[0], "Scott-Zhang vertex value")?;
        out[n + v] = check_finite(val[1], "Scott-Zhang vertex value")?;
    }
    for (f, facet) in mesh.facets.iter().enumerate() {
        let mean = facet_mean(mesh, field, f);
        let [a, b] = facet.vertex_ids;
        for c in 0..2 {
            let vs = out[c * n + a] + out[c * n + b];
            out[c * n + nv + f] = check_finite(1.5 * mean[c] - 0.25 * vs, "FS facet value")?;
        }
    }
    Ok(out)
}

/// Scalar Fortin-Soulie interpolant; the bubble coefficient matches the cell
/// mean.
pub fn interpolate_fs_scalar<S: ScalarField + ?Sized>(
    mesh: &Mesh,
    dofmap: &DofMap,
    field: &S,
) -> Result<Vec<f64>> {
    struct AsVector<'a, S: ?Sized>(&'a S);
    impl<S: ScalarField + ?Sized> VectorField for AsVector<'_, S> {
        fn eval(&self, cell: usize, x: Point) -> Point {
            [self.0.eval(cell, x), 0.0]
        }
    }
    let mut coeffs = fs_lagrange_part(mesh, dofmap, &AsVector(field))?;
    coeffs.truncate(dofmap.total_dofs);
    let rule = triangle_rule(CELL_DEGREE).expect("shipped rule");
    let bubble_base = mesh.num_vertices() + mesh.num_facets();
    for c in 0..mesh.num_cells() {
        let map = mesh.affine_map(c);
        let dofs = dofmap.cell_dofs(c);
        let mut diff = 0.0;
        for (xr, w) in rule.reference_points() {
            let b = fs_basis(xr);
            let tilde: f64 = (0..6).map(|k| coeffs[dofs[k]] * b.values()[k]).sum();
            diff += w * (field.eval(c, map.apply(xr)) - tilde);
        }
        // int_K phi_K = |K| / 2
        coeffs[bubble_base + c] = check_finite(2.0 * diff, "FS bubble")?;
    }
    Ok(coeffs)
}

/// Vector Fortin-Soulie interpolant. The bubble coefficient of each cell is
/// fixed by `int_K x_hat (div Pi v) = int_K x_hat (div v)`, with `x_hat` the
/// reference coordinates of the cell; the right side is evaluated by parts
/// on the cell's own trace, so only values of `v` are needed.
pub fn interpolate_fs<V: VectorField + ?Sized>(
    mesh: &Mesh,
    dofmap: &DofMap,
    field: &V,
) -> Result<Vec<f64>> {
    let mut coeffs = fs_lagrange_part(mesh, dofmap, field)?;
    let n = dofmap.total_dofs;
    let cell_rule = triangle_rule(CELL_DEGREE).expect("shipped rule");
    let low_rule = triangle_rule(4).expect("shipped rule");
    let edge = edge_gauss_rule(FACET_POINTS).expect("shipped rule");

    for c in 0..mesh.num_cells() {
        let map = mesh.affine_map(c);
        let cinv = map.inverse_matrix();
        let area = mesh.cells[c].area;
        let dofs = dofmap.cell_dofs(c);
        let pts = mesh.cell_points(c);

        // int_K x_hat_d div v, by parts on the cell trace
        let mut target = [0.0; 2];
        for i in 0..3 {
            let a = pts[(i + 1) % 3];
            let b = pts[(i + 2) % 3];
            let sn = mesh.scaled_normal(c, i);
            for (t, w) in edge.iter() {
                let x = lerp(a, b, t);
                let xr = map.inverse(x);
                let flux = dot(field.eval(c, x), sn);
                target[0] += w * xr[0] * flux;
                target[1] += w * xr[1] * flux;
            }
        }
        for (xr, w) in cell_rule.reference_points() {
            let v = field.eval(c, map.apply(xr));
            target[0] -= area * w * dot(v, cinv[0]);
            target[1] -= area * w * dot(v, cinv[1]);
        }

        // subtract the P2 part, and build the bubble matrix
        let mut g = Matrix2::<f64>::zeros();
        for (xr, w) in low_rule.reference_points() {
            let b = fs_basis(xr);
            let mut div = 0.0;
            for k in 0..6 {
                let gk = map.push_gradient(b.gradients()[k]);
                div += coeffs[dofs[k]] * gk[0] + coeffs[n + dofs[k]] * gk[1];
            }
            let gb = map.push_gradient(b.gradients()[6]);
            for d in 0..2 {
                target[d] -= area * w * xr[d] * div;
                g[(d, 0)] += area * w * xr[d] * gb[0];
                g[(d, 1)] += area * w * xr[d] * gb[1];
            }
        }
        let sol = g
            .lu()
            .solve(&Vector2::new(target[0], target[1]))
            .ok_or(Error::Singular { pivot: c })?;
        coeffs[dofs[6]] = check_finite(sol[0], "FS bubble")?;
        coeffs[n + dofs[6]] = check_finite(sol[1], "FS bubble")?;
    }
    Ok(coeffs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RtOrder {
    Rt0,
    Rt1,
}

impl RtOrder {
    /// RT0 pairs with CR, RT1 with FS.
    pub fn for_velocity(family: ElementFamily) -> Result<RtOrder> {
        match family {
            ElementFamily::CrouzeixRaviart => Ok(RtOrder::Rt0),
            ElementFamily::FortinSoulie => Ok(RtOrder::Rt1),
            other => Err(Error::Config(format!("{other} is not a velocity space"))),
        }
    }
}

/// `A x + (b . x) x + d` on one cell.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rt1Coeffs {
    /// Row-major.
    pub a: [[f64; 2]; 2],
    pub b: Point,
    pub d: Point,
}

impl Rt1Coeffs {
    pub fn eval(&self, x: Point) -> Point {
        let bx = dot(self.b, x);
        [
            self.a[0][0] * x[0] + self.a[0][1] * x[1] + bx * x[0] + self.d[0],
            self.a[1][0] * x[0] + self.a[1][1] * x[1] + bx * x[1] + self.d[1],
        ]
    }

    pub fn divergence(&self, x: Point) -> f64 {
        self.a[0][0] + self.a[1][1] + 3.0 * dot(self.b, x)
    }
}

/// Raviart-Thomas field, stored per cell.
#[derive(Debug, Clone, PartialEq)]
pub enum RtField {
    /// Outward normal fluxes through the three facets of each cell.
    Rt0(Vec<[f64; 3]>),
    Rt1(Vec<Rt1Coeffs>),
}

impl RtField {
    pub fn order(&self) -> RtOrder {
        match self {
            RtField::Rt0(_) => RtOrder::Rt0,
            RtField::Rt1(_) => RtOrder::Rt1,
        }
    }

    pub fn eval(&self, mesh: &Mesh, cell: usize, x: Point) -> Point {
        match self {
            RtField::Rt0(fluxes) => rt0_eval(mesh, cell, &fluxes[cell], x),
            RtField::Rt1(c) => c[cell].eval(x),
        }
    }

    pub fn divergence(&self, mesh: &Mesh, cell: usize, x: Point) -> f64 {
        match self {
            RtField::Rt0(fluxes) => fluxes[cell].iter().sum::<f64>() / mesh.cells[cell].area,
            RtField::Rt1(c) => c[cell].divergence(x),
        }
    }

    /// Binds the field to its mesh so it can be used as a [`VectorField`].
    pub fn on<'a>(&'a self, mesh: &'a Mesh) -> RtFieldOn<'a> {
        RtFieldOn { field: self, mesh }
    }
}

pub struct RtFieldOn<'a> {
    field: &'a RtField,
    mesh: &'a Mesh,
}

impl VectorField for RtFieldOn<'_> {
    fn eval(&self, cell: usize, x: Point) -> Point {
        self.field.eval(self.mesh, cell, x)
    }
}

/// `sum_i flux_i (x - S_i) / (2 |K|)`.
pub fn rt0_eval(mesh: &Mesh, cell: usize, fluxes: &[f64; 3], x: Point) -> Point {
    let pts = mesh.cell_points(cell);
    let s = 0.5 / mesh.cells[cell].area;
    (0..3).fold([0.0; 2], |acc, i| {
        let k = s * fluxes[i];
        [acc[0] + k * (x[0] - pts[i][0]), acc[1] + k * (x[1] - pts[i][1])]
    })
}

/// Outward fluxes of a field through the facets of `cell`. `trace(i, x)` is
/// the field on facet `i` at `x`.
fn rt0_fluxes(mesh: &Mesh, cell: usize, trace: impl Fn(usize, Point) -> Point) -> [f64; 3] {
    let edge = edge_gauss_rule(FACET_POINTS).expect("shipped rule");
    let pts = mesh.cell_points(cell);
    std::array::from_fn(|i| {
        let a = pts[(i + 1) % 3];
        let b = pts[(i + 2) % 3];
        let sn = mesh.scaled_normal(cell, i);
        edge.iter().map(|(t, w)| w * dot(trace(i, lerp(a, b, t)), sn)).sum()
    })
}

/// RT0 interpolant of a field restricted to one cell (its own trace).
pub fn rt0_local<F: Fn(Point) -> Point>(mesh: &Mesh, cell: usize, v: F) -> [f64; 3] {
    rt0_fluxes(mesh, cell, |_, x| v(x))
}

pub fn interpolate_rt0<V: VectorField + ?Sized>(mesh: &Mesh, field: &V) -> Result<RtField> {
    let mut per_cell = Vec::with_capacity(mesh.num_cells());
    for c in 0..mesh.num_cells() {
        let fl = rt0_fluxes(mesh, c, |i, x| {
            facet_average(mesh, field, mesh.cells[c].facet_ids[i], x)
        });
        for &v in &fl {
            check_finite(v, "RT0 flux")?;
        }
        per_cell.push(fl);
    }
    Ok(RtField::Rt0(per_cell))
}

/// Reference RT1 shape: unknowns `(A00, A01, A10, A11, b0, b1, d0, d1)`.
fn rt1_reference_field(k: usize, x: Point) -> Point {
    match k {
        0 => [x[0], 0.0],
        1 => [x[1], 0.0],
        2 => [0.0, x[0]],
        3 => [0.0, x[1]],
        4 => [x[0] * x[0], x[0] * x[1]],
        5 => [x[1] * x[0], x[1] * x[1]],
        6 => [1.0, 0.0],
        _ => [0.0, 1.0],
    }
}

const REF_VERTICES: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
/// Outward normals of the reference facets scaled by facet length.
const REF_SCALED_NORMALS: [Point; 3] = [[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];

/// The eight moment functionals on the reference cell applied to a field:
/// for each facet `i`, `int w.n lambda_{i+1}` and `int w.n lambda_{i+2}`;
/// then the two components of `int_K w`. `facet(i, x_hat)` supplies the field
/// on facet `i`, `cell(x_hat)` inside.
fn rt1_reference_moments(
    facet: impl Fn(usize, Point) -> Point,
    cell: impl Fn(Point) -> Point,
) -> SVector<f64, 8> {
    let edge = edge_gauss_rule(FACET_POINTS).expect("shipped rule");
    let mut m = SVector::<f64, 8>::zeros();
    for i in 0..3 {
        let a = REF_VERTICES[(i + 1) % 3];
        let b = REF_VERTICES[(i + 2) % 3];
        for (t, w) in edge.iter() {
            let flux = dot(facet(i, lerp(a, b, t)), REF_SCALED_NORMALS[i]);
            m[2 * i] += w * flux * (1.0 - t);
            m[2 * i + 1] += w * flux * t;
        }
    }
    let rule = triangle_rule(6).expect("shipped rule");
    for (xr, w) in rule.reference_points() {
        let v = cell(xr);
        m[6] += 0.5 * w * v[0];
        m[7] += 0.5 * w * v[1];
    }
    m
}

/// Inverse of the reference RT1 moment matrix, computed once.
fn rt1_reference_inverse() -> &'static SMatrix<f64, 8, 8> {
    static INV: OnceLock<SMatrix<f64, 8, 8>> = OnceLock::new();
    INV.get_or_init(|| {
        let mut m = SMatrix::<f64, 8, 8>::zeros();
        for k in 0..8 {
            let col = rt1_reference_moments(
                |_, x| rt1_reference_field(k, x),
                |x| rt1_reference_field(k, x),
            );
            m.set_column(k, &col);
        }
        m.try_inverse().expect("reference RT1 moment matrix is invertible")
    })
}

/// Pushes reference coefficients forward: on the cell,
/// `v(x) = B w_hat(C (x - s))` with `C = B^{-1}` and `s` the map offset.
fn rt1_push_forward(map: &AffineMap, u: &SVector<f64, 8>) -> Rt1Coeffs {
    let bm = map.matrix;
    let c = map.inverse_matrix();
    let s = map.offset;
    let ah = [[u[0], u[1]], [u[2], u[3]]];
    let bh = [u[4], u[5]];
    let dh = [u[6], u[7]];
    // B Ahat C
    let mut bac = [[0.0; 2]; 2];
    for r in 0..2 {
        for col in 0..2 {
            bac[r][col] = (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| bm[r][i] * ah[i][j] * c[j][col])
                .sum();
        }
    }
    let beta = [c[0][0] * bh[0] + c[1][0] * bh[1], c[0][1] * bh[0] + c[1][1] * bh[1]];
    let gamma = dot(beta, s);
    let a = [
        [bac[0][0] - s[0] * beta[0] - gamma, bac[0][1] - s[0] * beta[1]],
        [bac[1][0] - s[1] * beta[0], bac[1][1] - s[1] * beta[1] - gamma],
    ];
    let bacs = [dot(bac[0], s), dot(bac[1], s)];
    let bd = map.mul_vec(dh);
    Rt1Coeffs {
        a,
        b: beta,
        d: [
            -bacs[0] + gamma * s[0] + bd[0],
            -bacs[1] + gamma * s[1] + bd[1],
        ],
    }
}

/// Reference coefficients of the RT1 interpolant on a cell whose map is
/// `map`. The inputs are physical vectors sampled at reference points.
fn rt1_reference_coeffs(
    map: &AffineMap,
    facet: impl Fn(usize, Point) -> Point,
    inside: impl Fn(Point) -> Point,
) -> SVector<f64, 8> {
    let c = map.inverse_matrix();
    let pull = |v: Point| [dot(c[0], v), dot(c[1], v)];
    let moments = rt1_reference_moments(|i, xr| pull(facet(i, xr)), |xr| pull(inside(xr)));
    rt1_reference_inverse() * moments
}

fn rt1_cell(
    mesh: &Mesh,
    cell: usize,
    facet: impl Fn(usize, Point) -> Point,
    inside: impl Fn(Point) -> Point,
) -> Rt1Coeffs {
    let map = mesh.affine_map(cell);
    let u = rt1_reference_coeffs(map, |i, xr| facet(i, map.apply(xr)), |xr| inside(map.apply(xr)));
    rt1_push_forward(map, &u)
}

/// RT1 interpolant of one cell kept in reference form, `v(x) = B w_hat(x_hat)`.
/// Evaluating this way avoids the cancellation of the physical form on small
/// cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rt1Reference {
    pub coeffs: [f64; 8],
}

impl Rt1Reference {
    /// `v_ref(x_hat)` is the physical field at reference point `x_hat`.
    pub fn new<F: Fn(Point) -> Point>(map: &AffineMap, v_ref: F) -> Rt1Reference {
        let u = rt1_reference_coeffs(map, |_, xr| v_ref(xr), &v_ref);
        Rt1Reference { coeffs: std::array::from_fn(|k| u[k]) }
    }

    pub fn eval(&self, map: &AffineMap, xr: Point) -> Point {
        let w = (0..8).fold([0.0; 2], |acc, k| {
            let e = rt1_reference_field(k, xr);
            [acc[0] + self.coeffs[k] * e[0], acc[1] + self.coeffs[k] * e[1]]
        });
        map.mul_vec(w)
    }

    pub fn to_physical(&self, map: &AffineMap) -> Rt1Coeffs {
        rt1_push_forward(map, &SVector::<f64, 8>::from_column_slice(&self.coeffs))
    }
}

/// RT1 interpolant of a field restricted to one cell (its own trace).
pub fn rt1_local<F: Fn(Point) -> Point>(mesh: &Mesh, cell: usize, v: F) -> Rt1Coeffs {
    rt1_cell(mesh, cell, |_, x| v(x), &v)
}

pub fn interpolate_rt1<V: VectorField + ?Sized>(mesh: &Mesh, field: &V) -> Result<RtField> {
    let mut per_cell = Vec::with_capacity(mesh.num_cells());
    for c in 0..mesh.num_cells() {
        let fids = mesh.cells[c].facet_ids;
        let k = rt1_cell(
            mesh,
            c,
            |i, x| facet_average(mesh, field, fids[i], x),
            |x| field.eval(c, x),
        );
        let all = k.a.iter().flatten().chain(&k.b).chain(&k.d);
        for &v in all {
            check_finite(v, "RT1 coefficient")?;
        }
        per_cell.push(k);
    }
    Ok(RtField::Rt1(per_cell))
}

pub fn interpolate_rt<V: VectorField + ?Sized>(
    mesh: &Mesh,
    field: &V,
    order: RtOrder,
) -> Result<RtField> {
    match order {
        RtOrder::Rt0 => interpolate_rt0(mesh, field),
        RtOrder::Rt1 => interpolate_rt1(mesh, field),
    }
}

/// `int_Omega f . Pi_RT(test)`, by cellwise degree-8 quadrature.
pub fn rhs_projection_pairing<F, V>(mesh: &Mesh, f: &F, test: &V, order: RtOrder) -> Result<f64>
where
    F: VectorField + ?Sized,
    V: VectorField + ?Sized,
{
    let rt = interpolate_rt(mesh, test, order)?;
    let rule = triangle_rule(CELL_DEGREE)?;
    let mut total = 0.0;
    for c in 0..mesh.num_cells() {
        let map = mesh.affine_map(c);
        let area = mesh.cells[c].area;
        for (xr, w) in rule.reference_points() {
            let x = map.apply(xr);
            total += area * w * dot(f.eval(c, x), rt.eval(mesh, c, x));
        }
    }
    check_finite(total, "projected load")
}
