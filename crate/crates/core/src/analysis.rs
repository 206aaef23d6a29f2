//! Error norms, convergence rates, discrete inf-sup values, and the
//! closed-form stability constants.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::assembly::{assemble_divergence, assemble_pressure_mass, assemble_stiffness};
use crate::error::{Error, Result};
use crate::fe_spaces::DofMap;
use crate::mesh::Mesh;
use crate::quadrature::triangle_rule;
use crate::Point;

const ERROR_DEGREE: usize = 8;

/// Analytic reference solution.
pub struct ExactSolution {
    pub u: Box<dyn Fn(Point) -> Point + Send + Sync>,
    /// `grad_u[i][j] = d u_i / d x_j`.
    pub grad_u: Box<dyn Fn(Point) -> [[f64; 2]; 2] + Send + Sync>,
    /// Zero-mean pressure.
    pub p: Box<dyn Fn(Point) -> f64 + Send + Sync>,
    /// Selects the absolute error metric.
    pub zero_velocity: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    /// `||u_h||` when the exact velocity vanishes, `||u - u_h|| / ||u||`
    /// otherwise.
    pub eps0: f64,
    pub l2_pressure_error: f64,
    pub broken_h1_error: f64,
}

/// `L2` norm of a full-length component-major velocity field.
pub fn l2_norm_vector(mesh: &Mesh, dm: &DofMap, coeffs: &[f64]) -> Result<f64> {
    let zero = |_: Point| [0.0; 2];
    Ok(l2_diff(mesh, dm, coeffs, &zero)?.0.sqrt())
}

/// Broken `H1` seminorm of a full-length component-major velocity field.
pub fn broken_h1_norm(mesh: &Mesh, dm: &DofMap, coeffs: &[f64]) -> Result<f64> {
    let zero = |_: Point| [[0.0; 2]; 2];
    Ok(h1_diff(mesh, dm, coeffs, &zero)?.sqrt())
}

/// Returns `(int |u_h - u|^2, int |u|^2)`.
fn l2_diff(
    mesh: &Mesh,
    dm: &DofMap,
    coeffs: &[f64],
    exact: &dyn Fn(Point) -> Point,
) -> Result<(f64, f64)> {
    let rule = triangle_rule(ERROR_DEGREE)?;
    let (mut diff, mut norm) = (0.0, 0.0);
    for c in 0..mesh.num_cells() {
        let map = mesh.affine_map(c);
        let area = mesh.cells[c].area;
        for (xr, w) in rule.reference_points() {
            let uh = dm.evaluate_vector(coeffs, c, xr)?;
            let u = exact(map.apply(xr));
            diff += area * w * ((uh[0] - u[0]).powi(2) + (uh[1] - u[1]).powi(2));
            norm += area * w * (u[0] * u[0] + u[1] * u[1]);
        }
    }
    Ok((diff, norm))
}

fn h1_diff(
    mesh: &Mesh,
    dm: &DofMap,
    coeffs: &[f64],
    grad: &dyn Fn(Point) -> [[f64; 2]; 2],
) -> Result<f64> {
    let rule = triangle_rule(ERROR_DEGREE)?;
    let mut diff = 0.0;
    for c in 0..mesh.num_cells() {
        let map = mesh.affine_map(c);
        let area = mesh.cells[c].area;
        for (xr, w) in rule.reference_points() {
            let jh = dm.vector_jacobian(mesh, coeffs, c, xr)?;
            let j = grad(map.apply(xr));
            let s: f64 = (0..2)
                .flat_map(|a| (0..2).map(move |b| (a, b)))
                .map(|(a, b)| (jh[a][b] - j[a][b]).powi(2))
                .sum();
            diff += area * w * s;
        }
    }
    Ok(diff)
}

/// `eps0` for a full-length velocity field. Use
/// [`DofMap::expand_free_vector`] on solver output first.
pub fn l2_velocity_error(
    mesh: &Mesh,
    dm: &DofMap,
    u_coeffs: &[f64],
    exact: &ExactSolution,
) -> Result<f64> {
    let (diff, norm) = l2_diff(mesh, dm, u_coeffs, &exact.u)?;
    if exact.zero_velocity {
        Ok(diff.sqrt())
    } else if norm > 0.0 {
        Ok((diff / norm).sqrt())
    } else {
        Err(Error::Domain("exact velocity has zero norm".into()))
    }
}

pub fn error_metrics(
    mesh: &Mesh,
    vel: &DofMap,
    pres: &DofMap,
    u_coeffs: &[f64],
    p_coeffs: &[f64],
    exact: &ExactSolution,
) -> Result<ErrorMetrics> {
    let eps0 = l2_velocity_error(mesh, vel, u_coeffs, exact)?;
    let rule = triangle_rule(ERROR_DEGREE)?;
    let mut perr = 0.0;
    for c in 0..mesh.num_cells() {
        let map = mesh.affine_map(c);
        let area = mesh.cells[c].area;
        for (xr, w) in rule.reference_points() {
            let ph = pres.evaluate(p_coeffs, c, xr)?;
            perr += area * w * (ph - (exact.p)(map.apply(xr))).powi(2);
        }
    }
    Ok(ErrorMetrics {
        eps0,
        l2_pressure_error: perr.sqrt(),
        broken_h1_error: h1_diff(mesh, vel, u_coeffs, &exact.grad_u)?.sqrt(),
    })
}

fn check_series(h: &[f64], e: &[f64]) -> Result<()> {
    if h.len() != e.len() {
        return Err(Error::Dimension { expected: h.len(), got: e.len() });
    }
    if h.len() < 2 {
        return Err(Error::Domain("a rate needs at least two levels".into()));
    }
    if h.iter().chain(e).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Domain("mesh sizes and errors must be positive".into()));
    }
    Ok(())
}

/// Least-squares slope of `log e` against `log h`.
pub fn convergence_rate(h: &[f64], e: &[f64]) -> Result<f64> {
    check_series(h, e)?;
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("mesh sizes must not all coincide".into()));
    }
    Ok(sxy / sxx)
}

/// Rates between successive levels.
pub fn successive_rates(h: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    check_series(h, e)?;
    Ok(h.windows(2)
        .zip(e.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect())
}

/// Discrete inf-sup value: `sqrt` of the smallest eigenvalue of
/// `B A^{-1} B^T q = lambda M_p q` on zero-mean pressures, with `A` the
/// unit-viscosity broken stiffness on interior dofs.
pub fn discrete_infsup(mesh: &Mesh, vel: &DofMap, pres: &DofMap) -> Result<f64> {
    discrete_infsup_with_viscosity(mesh, vel, pres, 1.0)
}

/// [`discrete_infsup`] computed from the `nu`-scaled stiffness and
/// normalized by `sqrt(nu)`, so the value does not depend on `nu`.
pub fn discrete_infsup_with_viscosity(mesh: &Mesh, vel: &DofMap, pres: &DofMap, nu: f64) -> Result<f64> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Domain(format!("viscosity must be positive, got {nu}")));
    }
    let a = assemble_stiffness(mesh, vel, nu)?.to_dense();
    let b = assemble_divergence(mesh, vel, pres)?.to_dense();
    let mp = assemble_pressure_mass(mesh, pres)?.to_dense();
    let a_chol = a.cholesky().ok_or(Error::Singular { pivot: 0 })?;
    // B A^{-1} B^T = (L_a^{-1} B^T)^T (L_a^{-1} B^T)
    let la = a_chol.l();
    let w = la
        .solve_lower_triangular(&b.transpose())
        .ok_or(Error::Singular { pivot: 0 })?;
    let s = w.transpose() * &w;
    let lp = mp.cholesky().ok_or(Error::Singular { pivot: 0 })?.l();
    let x = lp.solve_lower_triangular(&s).ok_or(Error::Singular { pivot: 0 })?;
    let c = lp
        .solve_lower_triangular(&x.transpose())
        .ok_or(Error::Singular { pivot: 0 })?;
    let c = (&c + c.transpose()) * 0.5;
    // lift the constant-pressure direction above the spectrum
    let y: DVector<f64> = lp.transpose() * DVector::from_element(pres.total_dofs, 1.0);
    let lifted: DMatrix<f64> = c + (&y * y.transpose()) * (10.0 / (nu * y.norm_squared()));
    let eig = SymmetricEigen::new(lifted);
    let lmin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(lmin > 0.0) {
        return Err(Error::Solver(format!("non-positive pressure Schur eigenvalue {lmin:e}")));
    }
    Ok((lmin * nu).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    /// Effective `C_div`, including the interpolation constant when given.
    pub c_div: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub c_stab: f64,
    pub nu: f64,
}

/// `c_min = min(c^2, 1) / 2`, `c_max = c (1 + c)`,
/// `c_stab = nu c_min / (2 c_max)` with `c = c_nc c_div` if `c_nc` is given.
pub fn stability_constants(c_div: f64, nu: f64, c_nc: Option<f64>) -> Result<StabilityReport> {
    if !(c_div > 0.0 && c_div.is_finite()) {
        return Err(Error::Domain(format!("C_div must be positive, got {c_div}")));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Domain(format!("viscosity must be positive, got {nu}")));
    }
    let c = match c_nc {
        Some(k) if !(k >= 1.0 && k.is_finite()) => {
            return Err(Error::Domain(format!("interpolation constant must be >= 1, got {k}")))
        }
        Some(k) => k * c_div,
        None => c_div,
    };
    let c_min = (c * c).min(1.0) / 2.0;
    let c_max = c * (1.0 + c);
    Ok(StabilityReport {
        c_div: c,
        c_min,
        c_max,
        c_stab: 0.5 * nu * c_min / c_max,
        nu,
    })
}

/// Piecewise closed form of `c_stab`.
pub fn stability_constant_closed_form(c_div: f64, nu: f64) -> f64 {
    if c_div <= 1.0 {
        0.25 * nu * c_div / (1.0 + c_div)
    } else {
        0.25 * nu / (c_div * (1.0 + c_div))
    }
}

/// Lower bound on `beta` for a planar domain inside a ball of radius `big_r`
/// and star-shaped with respect to a concentric ball of radius `rho`.
pub fn costabel_dauge_beta(rho: f64, big_r: f64) -> Result<f64> {
    if !(rho > 0.0 && big_r.is_finite() && rho <= big_r) {
        return Err(Error::Domain(format!("need 0 < rho <= R, got rho={rho}, R={big_r}")));
    }
    let r = rho / big_r;
    Ok(r / std::f64::consts::SQRT_2 / (1.0 + (1.0 - r * r).sqrt()).sqrt())
}

/// The weaker bound `rho / (2 R)`.
pub fn costabel_dauge_simple(rho: f64, big_r: f64) -> Result<f64> {
    costabel_dauge_beta(rho, big_r)?;
    Ok(rho / (2.0 * big_r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Ball,
    Square,
    Stretched,
    LShape,
    Cross,
}

impl std::str::FromStr for Domain {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ball" | "disk" => Ok(Domain::Ball),
            "square" => Ok(Domain::Square),
            "stretched" => Ok(Domain::Stretched),
            "l-shape" | "lshape" | "l" => Ok(Domain::LShape),
            "cross" => Ok(Domain::Cross),
            other => Err(Error::Config(format!("unknown domain '{other}'"))),
        }
    }
}

/// Known lower bounds on `beta`; `k` is the aspect ratio for stretched,
/// L-shaped and cross-shaped domains.
pub fn named_domain_beta(domain: Domain, k: Option<f64>) -> Result<f64> {
    let aspect = || -> Result<f64> {
        let k = k.ok_or_else(|| Error::Config(format!("{domain:?} needs an aspect ratio k")))?;
        if !(k >= 1.0 && k.is_finite()) {
            return Err(Error::Domain(format!("aspect ratio must be >= 1, got {k}")));
        }
        Ok(k)
    };
    let s2 = std::f64::consts::SQRT_2;
    Ok(match domain {
        Domain::Ball => 0.5,
        Domain::Square => 1.0 / (2.0 * s2),
        Domain::Stretched => 1.0 / (2.0 * aspect()?),
        Domain::LShape => 1.0 / (2.0 * s2 * aspect()?),
        Domain::Cross => 1.0 / (4.0 * aspect()?),
    })
}
