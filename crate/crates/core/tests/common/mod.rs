#![allow(dead_code)]

use std::collections::HashMap;

use ncstokes::fe_spaces::{local_basis, DofMap, ElementFamily, FeVectorField};
use ncstokes::interp::{interpolate_cr, interpolate_fs, interpolate_rt0, interpolate_rt1, RtField};
use ncstokes::mesh::Mesh;
use ncstokes::quadrature::{barycentric_monomial_integral, edge_gauss_rule, triangle_rule};
use ncstokes::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CR: ElementFamily = ElementFamily::CrouzeixRaviart;
pub const FS: ElementFamily = ElementFamily::FortinSoulie;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Structured mesh with interior vertices moved by up to `0.15 / n` per
/// coordinate.
pub fn perturbed_mesh(n: usize, rng: &mut ChaCha8Rng) -> Mesh {
    let base = Mesh::structured_unit_square(n).unwrap();
    let h = 1.0 / n as f64;
    let coords = base
        .vertices
        .iter()
        .map(|v| {
            if v.boundary {
                v.coords
            } else {
                [
                    v.coords[0] + rng.random_range(-0.15..0.15) * h,
                    v.coords[1] + rng.random_range(-0.15..0.15) * h,
                ]
            }
        })
        .collect();
    let tris = base.cells.iter().map(|c| c.vertex_ids).collect();
    Mesh::from_raw(coords, tris).unwrap()
}

/// Random vector polynomial `sum c_ab x^a y^b`, coefficients in `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Poly {
    terms: Vec<(i32, i32, [f64; 2])>,
}

impl Poly {
    pub fn random(degree: i32, rng: &mut ChaCha8Rng) -> Poly {
        let mut terms = Vec::new();
        for a in 0..=degree {
            for b in 0..=degree - a {
                terms.push((a, b, [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]));
            }
        }
        Poly { terms }
    }

    pub fn constant(c: Point) -> Poly {
        Poly { terms: vec![(0, 0, c)] }
    }

    pub fn eval(&self, x: Point) -> Point {
        self.terms.iter().fold([0.0; 2], |acc, &(a, b, c)| {
            let m = x[0].powi(a) * x[1].powi(b);
            [acc[0] + c[0] * m, acc[1] + c[1] * m]
        })
    }

    /// `[[du1/dx, du1/dy], [du2/dx, du2/dy]]`.
    pub fn jacobian(&self, x: Point) -> [[f64; 2]; 2] {
        let mut j = [[0.0; 2]; 2];
        for &(a, b, c) in &self.terms {
            let dx = if a > 0 { a as f64 * x[0].powi(a - 1) * x[1].powi(b) } else { 0.0 };
            let dy = if b > 0 { b as f64 * x[0].powi(a) * x[1].powi(b - 1) } else { 0.0 };
            for k in 0..2 {
                j[k][0] += c[k] * dx;
                j[k][1] += c[k] * dy;
            }
        }
        j
    }

    pub fn div(&self, x: Point) -> f64 {
        let j = self.jacobian(x);
        j[0][0] + j[1][1]
    }

    pub fn combine(&self, alpha: f64, other: &Poly, beta: f64) -> Poly {
        let mut terms: Vec<_> = self.terms.iter().map(|&(a, b, c)| (a, b, [alpha * c[0], alpha * c[1]])).collect();
        terms.extend(other.terms.iter().map(|&(a, b, c)| (a, b, [beta * c[0], beta * c[1]])));
        Poly { terms }
    }
}

/// `int_K g` with the degree-8 rule.
pub fn cell_integral(mesh: &Mesh, c: usize, g: impl Fn(Point, Point) -> f64) -> f64 {
    let rule = triangle_rule(8).unwrap();
    let map = mesh.affine_map(c);
    let area = mesh.cells[c].area;
    rule.reference_points().map(|(xr, w)| area * w * g(xr, map.apply(xr))).sum()
}

/// `int_F g(s, x)` with `s in [0, 1]` running from the facet's first vertex.
pub fn facet_integral(mesh: &Mesh, f: usize, g: impl Fn(f64, Point) -> f64) -> f64 {
    let rule = edge_gauss_rule(5).unwrap();
    let facet = &mesh.facets[f];
    let a = mesh.vertices[facet.vertex_ids[0]].coords;
    let b = mesh.vertices[facet.vertex_ids[1]].coords;
    rule.iter().map(|(t, w)| facet.length * w * g(t, lerp(a, b, t))).sum()
}

/// Facet test functions of degree `< degree` of the velocity family.
fn facet_weights(family: ElementFamily) -> Vec<fn(f64) -> f64> {
    match family {
        ElementFamily::CrouzeixRaviart => vec![|_| 1.0],
        _ => vec![|_| 1.0, |s| s - 0.5],
    }
}

pub fn outward(mesh: &Mesh, f: usize, cell: usize) -> Point {
    let n = mesh.facets[f].normal;
    let s = mesh.facets[f].orientation_in(cell);
    [s * n[0], s * n[1]]
}

/// Largest facet moment of a jump (interior facets) or trace (boundary
/// facets, free dofs only) over every scalar basis function.
pub fn patch_test(mesh: &Mesh, family: ElementFamily) -> f64 {
    let dm = DofMap::new(mesh, family);
    let weights = facet_weights(family);
    // (dof, facet, weight) -> left trace minus right trace
    let mut moments: HashMap<(usize, usize, usize), f64> = HashMap::new();
    for c in 0..mesh.num_cells() {
        let dofs = dm.cell_dofs(c);
        for &f in &mesh.cells[c].facet_ids {
            let sign = if mesh.facets[f].left_cell == c { 1.0 } else { -1.0 };
            for (k, &d) in dofs.iter().enumerate() {
                for (qi, q) in weights.iter().enumerate() {
                    let m = facet_integral(mesh, f, |s, x| {
                        q(s) * local_basis(family, mesh.inverse_map(c, x)).values()[k]
                    });
                    *moments.entry((d, f, qi)).or_default() += sign * m;
                }
            }
        }
    }
    moments
        .iter()
        .filter(|(&(d, f, _), _)| !mesh.facets[f].is_boundary() || dm.free_index(d).is_some())
        .map(|(_, m)| m.abs())
        .fold(0.0, f64::max)
}

/// Local P0 or P1 pressure functions on the reference cell.
fn pressure_values(family: ElementFamily, xr: Point) -> Vec<f64> {
    local_basis(family, xr).values().to_vec()
}

/// `sup_q |(div_h Pi v - div v, q)| / ||q||` over the discrete pressures.
pub fn fortin_defect(mesh: &Mesh, family: ElementFamily, v: &Poly) -> f64 {
    let dm = DofMap::new(mesh, family);
    let field = |x: Point| v.eval(x);
    let coeffs = match family {
        ElementFamily::CrouzeixRaviart => interpolate_cr(mesh, &dm, &field).unwrap(),
        _ => interpolate_fs(mesh, &dm, &field).unwrap(),
    };
    let pres = family.pressure_pair().unwrap();
    let mut total = 0.0;
    for c in 0..mesh.num_cells() {
        let np = pres.local_dim();
        let mut d = vec![0.0; np];
        for (i, di) in d.iter_mut().enumerate() {
            *di = cell_integral(mesh, c, |xr, x| {
                let j = dm.vector_jacobian(mesh, &coeffs, c, xr).unwrap();
                (j[0][0] + j[1][1] - v.div(x)) * pressure_values(pres, xr)[i]
            });
        }
        let area = mesh.cells[c].area;
        total += if np == 1 {
            d[0] * d[0] / area
        } else {
            // inverse of the P1 mass matrix (|K| / 12) (1 + delta_ij)
            let s: f64 = d.iter().sum();
            let sq: f64 = d.iter().map(|x| x * x).sum();
            3.0 / area * (4.0 * sq - s * s)
        };
    }
    total.sqrt()
}

/// Largest pointwise error of an interpolant at random points of each cell.
pub fn max_point_error(
    mesh: &Mesh,
    rng: &mut ChaCha8Rng,
    approx: impl Fn(usize, Point) -> Point,
    exact: impl Fn(Point) -> Point,
) -> f64 {
    let mut worst: f64 = 0.0;
    for c in 0..mesh.num_cells() {
        for _ in 0..4 {
            let (mut s, mut t): (f64, f64) = (rng.random(), rng.random());
            if s + t > 1.0 {
                (s, t) = (1.0 - s, 1.0 - t);
            }
            let x = mesh.affine_map(c).apply([s, t]);
            let a = approx(c, x);
            let e = exact(x);
            worst = worst.max((a[0] - e[0]).abs()).max((a[1] - e[1]).abs());
        }
    }
    worst
}

pub fn fe_eval<'a>(mesh: &'a Mesh, dm: &'a DofMap, coeffs: &'a [f64]) -> impl Fn(usize, Point) -> Point + 'a {
    move |c, x| dm.evaluate_vector(coeffs, c, mesh.inverse_map(c, x)).unwrap()
}

/// Reproduction errors of `(CR on P1, FS on P2, RT0 on constants, RT1 on
/// constants)`.
pub fn reproduction(seed: u64) -> [f64; 4] {
    let mut r = rng(seed);
    let mesh = perturbed_mesh(4, &mut r);
    let p1 = Poly::random(1, &mut r);
    let p2 = Poly::random(2, &mut r);
    let c = Poly::random(0, &mut r);
    let cr = DofMap::new(&mesh, CR);
    let fs = DofMap::new(&mesh, FS);
    let f1 = |x: Point| p1.eval(x);
    let f2 = |x: Point| p2.eval(x);
    let fc = |x: Point| c.eval(x);
    let ccr = interpolate_cr(&mesh, &cr, &f1).unwrap();
    let cfs = interpolate_fs(&mesh, &fs, &f2).unwrap();
    let rt0 = interpolate_rt0(&mesh, &fc).unwrap();
    let rt1 = interpolate_rt1(&mesh, &fc).unwrap();
    [
        max_point_error(&mesh, &mut r, fe_eval(&mesh, &cr, &ccr), f1),
        max_point_error(&mesh, &mut r, fe_eval(&mesh, &fs, &cfs), f2),
        max_point_error(&mesh, &mut r, |c, x| rt0.eval(&mesh, c, x), fc),
        max_point_error(&mesh, &mut r, |c, x| rt1.eval(&mesh, c, x), fc),
    ]
}

/// `(||Pi_CR v||_h, ||grad v||)` for a random smooth field.
pub fn cr_stability(seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let n = r.random_range(2..7);
    let mesh = perturbed_mesh(n, &mut r);
    let p = Poly::random(3, &mut r);
    let k = r.random_range(1..4) as f64 * std::f64::consts::PI;
    let amp: f64 = r.random_range(-1.0..1.0);
    let v = |x: Point| {
        let s = amp * (k * x[0]).sin() * (k * x[1]).cos();
        let pv = p.eval(x);
        [pv[0] + s, pv[1] - s]
    };
    let grad = |x: Point| {
        let j = p.jacobian(x);
        let gx = amp * k * (k * x[0]).cos() * (k * x[1]).cos();
        let gy = -amp * k * (k * x[0]).sin() * (k * x[1]).sin();
        [[j[0][0] + gx, j[0][1] + gy], [j[1][0] - gx, j[1][1] - gy]]
    };
    interpolant_and_gradient_norms(&mesh, &v, &grad)
}

pub fn interpolant_and_gradient_norms(
    mesh: &Mesh,
    v: &dyn Fn(Point) -> Point,
    grad: &dyn Fn(Point) -> [[f64; 2]; 2],
) -> (f64, f64) {
    let dm = DofMap::new(mesh, CR);
    let coeffs = interpolate_cr(mesh, &dm, &v).unwrap();
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for c in 0..mesh.num_cells() {
        let j = dm.vector_jacobian(mesh, &coeffs, c, [1.0 / 3.0; 2]).unwrap();
        lhs += mesh.cells[c].area * j.iter().flatten().map(|x| x * x).sum::<f64>();
        rhs += cell_integral(mesh, c, |_, x| grad(x).iter().flatten().map(|g| g * g).sum());
    }
    (lhs.sqrt(), rhs.sqrt())
}

fn rt_facet_mismatch(mesh: &Mesh, rt: &RtField, weights: &[fn(f64) -> f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (f, facet) in mesh.facets.iter().enumerate() {
        let Some(right) = facet.right_cell else { continue };
        let n = facet.normal;
        for q in weights {
            let l = facet_integral(mesh, f, |s, x| q(s) * dot(rt.eval(mesh, facet.left_cell, x), n));
            let r = facet_integral(mesh, f, |s, x| q(s) * dot(rt.eval(mesh, right, x), n));
            worst = worst.max((l - r).abs());
        }
    }
    worst
}

/// Normal-flux mismatch and divergence mismatch of the RT interpolant of a
/// random discrete field (RT0 of CR, RT1 of FS).
pub fn rt_consistency(seed: u64, family: ElementFamily) -> (f64, f64) {
    let mut r = rng(seed);
    let mesh = perturbed_mesh(4, &mut r);
    let dm = DofMap::new(&mesh, family);
    let coeffs: Vec<f64> = (0..2 * dm.total_dofs).map(|_| r.random_range(-1.0..1.0)).collect();
    let field = FeVectorField::new(&mesh, &dm, &coeffs).unwrap();
    let rt = match family {
        ElementFamily::CrouzeixRaviart => interpolate_rt0(&mesh, &field).unwrap(),
        _ => interpolate_rt1(&mesh, &field).unwrap(),
    };
    let flux = rt_facet_mismatch(&mesh, &rt, &facet_weights(family));
    let pres = family.pressure_pair().unwrap();
    let mut div: f64 = 0.0;
    for c in 0..mesh.num_cells() {
        for i in 0..pres.local_dim() {
            let m = cell_integral(&mesh, c, |xr, x| {
                let j = dm.vector_jacobian(&mesh, &coeffs, c, xr).unwrap();
                (rt.divergence(&mesh, c, x) - j[0][0] - j[1][1]) * pressure_values(pres, xr)[i]
            });
            div = div.max(m.abs());
        }
    }
    (flux, div)
}

/// Largest relative error of every shipped triangle rule against the closed
/// form, on a random triangle.
pub fn quadrature_exactness(seed: u64) -> f64 {
    let mut r = rng(seed);
    let pts: Vec<Point> = loop {
        let p: Vec<Point> = (0..3).map(|_| [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)]).collect();
        let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
        if area.abs() > 0.1 {
            break p;
        }
    };
    let mesh = Mesh::from_raw(pts, vec![[0, 1, 2]]).unwrap();
    let area = mesh.cells[0].area;
    let mut worst: f64 = 0.0;
    for degree in 1..=10 {
        let rule = triangle_rule(degree).unwrap();
        for a in 0..=degree as u32 {
            for b in 0..=degree as u32 - a {
                let c = degree as u32 - a - b;
                // integrate on the physical cell through barycentric coordinates
                let approx: f64 = rule
                    .reference_points()
                    .map(|(xr, w)| {
                        let l = mesh.barycentric_coords(0, mesh.affine_map(0).apply(xr));
                        area * w * l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32)
                    })
                    .sum();
                let exact = barycentric_monomial_integral([a, b, c], area);
                worst = worst.max((approx - exact).abs() / exact.abs());
            }
        }
    }
    worst
}

/// Largest `|phi_K|` at the two Gauss-Legendre points of every facet of
/// every cell of a random mesh.
pub fn bubble_at_gauss_points(seed: u64) -> f64 {
    let mut r = rng(seed);
    let mesh = perturbed_mesh(3, &mut r);
    let gl = edge_gauss_rule(2).unwrap();
    let mut worst: f64 = 0.0;
    for c in 0..mesh.num_cells() {
        for &f in &mesh.cells[c].facet_ids {
            let facet = &mesh.facets[f];
            let a = mesh.vertices[facet.vertex_ids[0]].coords;
            let b = mesh.vertices[facet.vertex_ids[1]].coords;
            for (t, _) in gl.iter() {
                let xr = mesh.inverse_map(c, lerp(a, b, t));
                worst = worst.max(local_basis(FS, xr).values()[6].abs());
            }
        }
    }
    worst
}

/// `int_Khat x_hat_d d_e phi_hat` for `d, e in {0, 1}`.
pub fn bubble_reference_identity() -> [[f64; 2]; 2] {
    let rule = triangle_rule(4).unwrap();
    let mut m = [[0.0; 2]; 2];
    for (xr, w) in rule.reference_points() {
        let g = local_basis(FS, xr).gradients()[6];
        for d in 0..2 {
            for e in 0..2 {
                m[d][e] += 0.5 * w * xr[d] * g[e];
            }
        }
    }
    m
}

/// Largest linearity defect of the four interpolants.
pub fn linearity(seed: u64) -> f64 {
    let mut r = rng(seed);
    let mesh = perturbed_mesh(3, &mut r);
    let u = Poly::random(3, &mut r);
    let v = Poly::random(3, &mut r);
    let (alpha, beta): (f64, f64) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
    let w = u.combine(alpha, &v, beta);
    let fu = |x: Point| u.eval(x);
    let fv = |x: Point| v.eval(x);
    let fw = |x: Point| w.eval(x);
    let combine = |a: &[f64], b: &[f64], c: &[f64]| {
        a.iter()
            .zip(b)
            .zip(c)
            .map(|((a, b), c)| (alpha * a + beta * b - c).abs())
            .fold(0.0, f64::max)
    };
    let cr = DofMap::new(&mesh, CR);
    let fs = DofMap::new(&mesh, FS);
    let mut worst = combine(
        &interpolate_cr(&mesh, &cr, &fu).unwrap(),
        &interpolate_cr(&mesh, &cr, &fv).unwrap(),
        &interpolate_cr(&mesh, &cr, &fw).unwrap(),
    );
    worst = worst.max(combine(
        &interpolate_fs(&mesh, &fs, &fu).unwrap(),
        &interpolate_fs(&mesh, &fs, &fv).unwrap(),
        &interpolate_fs(&mesh, &fs, &fw).unwrap(),
    ));
    let rt = |f: &dyn Fn(Point) -> Point, order: usize| {
        let field = if order == 0 { interpolate_rt0(&mesh, &f).unwrap() } else { interpolate_rt1(&mesh, &f).unwrap() };
        (0..mesh.num_cells())
            .flat_map(|c| {
                let x = mesh.affine_map(c).apply([0.2, 0.3]);
                field.eval(&mesh, c, x)
            })
            .collect::<Vec<f64>>()
    };
    for order in 0..2 {
        worst = worst.max(combine(&rt(&fu, order), &rt(&fv, order), &rt(&fw, order)));
    }
    worst
}

/// Largest `||v||_L2 / ||v||_h` over random interior fields.
pub fn poincare_ratio(seed: u64, family: ElementFamily, n: usize) -> f64 {
    use ncstokes::analysis::{broken_h1_norm, l2_norm_vector};
    let mut r = rng(seed);
    let mesh = Mesh::structured_unit_square(n).unwrap();
    let dm = DofMap::new(&mesh, family);
    let free: Vec<f64> = (0..2 * dm.num_free()).map(|_| r.random_range(-1.0..1.0)).collect();
    let full = dm.expand_free_vector(&free).unwrap();
    l2_norm_vector(&mesh, &dm, &full).unwrap() / broken_h1_norm(&mesh, &dm, &full).unwrap()
}
