//! The gradient-forcing and trigonometric benchmark sweeps.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::analysis::{convergence_rate, l2_velocity_error, ExactSolution};
use crate::assembly::{assemble_rhs, Projection, SaddleSystem, SourceTerm};
use crate::error::{Error, Result};
use crate::fe_spaces::{DofMap, ElementFamily};
use crate::mesh::Mesh;
use crate::solver::SaddleSolver;
use crate::Point;

/// `p = x^3 + y^3 - 1/2`, `f = grad p`, `u = 0`.
pub fn gradient_problem() -> (SourceTerm, ExactSolution) {
    let phi = |x: Point| x[0].powi(3) + x[1].powi(3) - 0.5;
    let source = SourceTerm::GradientOfPotential {
        phi: Box::new(phi),
        grad: Box::new(|x| [3.0 * x[0] * x[0], 3.0 * x[1] * x[1]]),
    };
    let exact = ExactSolution {
        u: Box::new(|_| [0.0; 2]),
        grad_u: Box::new(|_| [[0.0; 2]; 2]),
        p: Box::new(phi),
        zero_velocity: true,
    };
    (source, exact)
}

const A: f64 = 2.0 * PI;

pub fn trig_velocity(x: Point) -> Point {
    let (sx, cx) = (A * x[0]).sin_cos();
    let (sy, cy) = (A * x[1]).sin_cos();
    [(1.0 - cx) * sy, (cy - 1.0) * sx]
}

pub fn trig_pressure(x: Point) -> f64 {
    (A * x[0]).sin() * (A * x[1]).sin()
}

/// `-Laplacian` of the trigonometric velocity.
pub fn trig_minus_laplacian(x: Point) -> Point {
    let (sx, cx) = (A * x[0]).sin_cos();
    let (sy, cy) = (A * x[1]).sin_cos();
    [-A * A * sy * (2.0 * cx - 1.0), A * A * sx * (2.0 * cy - 1.0)]
}

pub fn trig_pressure_gradient(x: Point) -> Point {
    let (sx, cx) = (A * x[0]).sin_cos();
    let (sy, cy) = (A * x[1]).sin_cos();
    [A * cx * sy, A * sx * cy]
}

pub fn trig_exact() -> ExactSolution {
    ExactSolution {
        u: Box::new(trig_velocity),
        grad_u: Box::new(|x| {
            let (sx, cx) = (A * x[0]).sin_cos();
            let (sy, cy) = (A * x[1]).sin_cos();
            [
                [A * sx * sy, A * (1.0 - cx) * cy],
                [A * (cy - 1.0) * cx, -A * sx * sy],
            ]
        }),
        p: Box::new(trig_pressure),
        zero_velocity: false,
    }
}

/// `f = -nu Laplacian(u) + grad p` for the trigonometric pair.
pub fn trig_source(nu: f64) -> SourceTerm {
    SourceTerm::Analytic(Box::new(move |x| {
        let l = trig_minus_laplacian(x);
        let g = trig_pressure_gradient(x);
        [nu * l[0] + g[0], nu * l[1] + g[1]]
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Benchmark {
    Gradient,
    Trig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub benchmark: Benchmark,
    pub element: ElementFamily,
    pub projections: Vec<Projection>,
    pub nus: Vec<f64>,
    pub levels: Vec<usize>,
}

impl ExperimentConfig {
    pub fn gradient_default(element: ElementFamily) -> Self {
        ExperimentConfig {
            benchmark: Benchmark::Gradient,
            element,
            projections: vec![Projection::None, Projection::Rt],
            nus: vec![1.0, 1e-3, 1e-4],
            levels: vec![20],
        }
    }

    pub fn trig_default(element: ElementFamily) -> Self {
        let levels = match element {
            ElementFamily::FortinSoulie => vec![20, 40, 80],
            _ => vec![20, 40, 80, 160],
        };
        ExperimentConfig {
            benchmark: Benchmark::Trig,
            element,
            projections: vec![Projection::None, Projection::Rt],
            nus: vec![1e-3, 1e-4],
            levels,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.element.is_velocity() {
            return Err(Error::Config(format!("{} is not a velocity element", self.element)));
        }
        if self.projections.is_empty() || self.nus.is_empty() || self.levels.is_empty() {
            return Err(Error::Config("empty projection, viscosity or level list".into()));
        }
        if let Some(nu) = self.nus.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("viscosity must be positive, got {nu}")));
        }
        if self.levels.contains(&0) {
            return Err(Error::Config("grid resolution must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub element: ElementFamily,
    pub projection: Projection,
    pub nu: f64,
    pub n: usize,
    pub h: f64,
    pub eps0: f64,
}

/// Rows of one (projection, viscosity) column, in level order.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub element: ElementFamily,
    pub projection: Projection,
    pub nu: f64,
    pub rows: Vec<ReportRow>,
    /// Least-squares rate, when there are at least two levels.
    pub rate: Option<f64>,
}

impl Series {
    pub fn eps0(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.eps0).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub series: Vec<Series>,
}

/// 17 significant digits.
fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl ExperimentReport {
    pub fn find(&self, projection: Projection, nu: f64) -> Option<&Series> {
        self.series.iter().find(|s| s.projection == projection && s.nu == nu)
    }

    /// `element,projection,nu,n,h,eps0` rows, with a `# rate=` line after
    /// each multi-level series.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("element,projection,nu,n,h,eps0\n");
        for s in &self.series {
            for r in &s.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.element,
                    r.projection,
                    fmt_float(r.nu),
                    r.n,
                    fmt_float(r.h),
                    fmt_float(r.eps0)
                );
            }
            if let Some(rate) = s.rate {
                let _ = writeln!(out, "# rate={}", fmt_float(rate));
            }
        }
        out
    }

    /// One row per mesh size, one column per series.
    pub fn to_table(&self) -> String {
        let mut hs: Vec<(usize, f64)> = Vec::new();
        for r in self.series.iter().flat_map(|s| &s.rows) {
            if !hs.iter().any(|(n, _)| *n == r.n) {
                hs.push((r.n, r.h));
            }
        }
        let heads: Vec<String> = self
            .series
            .iter()
            .map(|s| {
                let p = if s.projection == Projection::Rt { "+rt" } else { "" };
                format!("{}{} nu={:.2e}", s.element, p, s.nu)
            })
            .collect();
        let width = heads.iter().map(|h| h.len()).max().unwrap_or(0).max(10);
        let mut out = format!("{:>10}", "h");
        for h in &heads {
            let _ = write!(out, "  {h:>width$}");
        }
        out.push('\n');
        for (n, h) in &hs {
            let _ = write!(out, "{h:>10.2e}");
            for s in &self.series {
                match s.rows.iter().find(|r| r.n == *n) {
                    Some(r) => {
                        let _ = write!(out, "  {:>width$.2e}", r.eps0);
                    }
                    None => {
                        let _ = write!(out, "  {:>width$}", "-");
                    }
                }
            }
            out.push('\n');
        }
        if self.series.iter().any(|s| s.rate.is_some()) {
            let _ = write!(out, "{:>10}", "rate");
            for s in &self.series {
                let cell = s.rate.map_or("-".to_string(), |r| format!("h^{r:.2}"));
                let _ = write!(out, "  {cell:>width$}");
            }
            out.push('\n');
        }
        out
    }
}

/// Runs the sweep. Each level factorizes one unit-viscosity system and
/// reuses it for every viscosity and load.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let element = config.element;
    let pressure = element.pressure_pair().expect("velocity element");
    let (gsource, gexact) = gradient_problem();
    let texact = trig_exact();
    let visc = SourceTerm::Analytic(Box::new(trig_minus_laplacian));
    let grad = SourceTerm::Analytic(Box::new(trig_pressure_gradient));

    let mut series: Vec<Series> = Vec::new();
    for &projection in &config.projections {
        for &nu in &config.nus {
            series.push(Series { element, projection, nu, rows: Vec::new(), rate: None });
        }
    }

    for &n in &config.levels {
        let mesh = Mesh::structured_unit_square(n)?;
        let h = mesh.stats().h_grid;
        let vel = DofMap::new(&mesh, element);
        let pres = DofMap::new(&mesh, pressure);
        let zero = |_: Point| [0.0; 2];
        let system = SaddleSystem::assemble(&mesh, &vel, &pres, &zero, Projection::None, 1.0)?;
        let solver = SaddleSolver::factor(system)?;
        for &projection in &config.projections {
            let loads = match config.benchmark {
                Benchmark::Gradient => {
                    (None, assemble_rhs(&mesh, &vel, &gsource, projection)?)
                }
                Benchmark::Trig => (
                    Some(assemble_rhs(&mesh, &vel, &visc, projection)?),
                    assemble_rhs(&mesh, &vel, &grad, projection)?,
                ),
            };
            for &nu in &config.nus {
                let rhs: Vec<f64> = match &loads {
                    (Some(v), g) => v.iter().zip(g).map(|(v, g)| nu * v + g).collect(),
                    (None, g) => g.clone(),
                };
                let sol = solver.solve_load(&rhs, nu)?;
                let u = vel.expand_free_vector(&sol.u)?;
                let exact = match config.benchmark {
                    Benchmark::Gradient => &gexact,
                    Benchmark::Trig => &texact,
                };
                let eps0 = l2_velocity_error(&mesh, &vel, &u, exact)?;
                let s = series
                    .iter_mut()
                    .find(|s| s.projection == projection && s.nu == nu)
                    .expect("series exists");
                s.rows.push(ReportRow { element, projection, nu, n, h, eps0 });
            }
        }
    }

    for s in &mut series {
        if s.rows.len() >= 2 {
            let h: Vec<f64> = s.rows.iter().map(|r| r.h).collect();
            s.rate = convergence_rate(&h, &s.eps0()).ok();
        }
    }
    Ok(ExperimentReport { series })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_matches_finite_differences() {
        let hstep = 1e-4;
        for x in [[0.13, 0.71], [0.5, 0.25], [0.9, 0.4]] {
            let l = trig_minus_laplacian(x);
            for comp in 0..2 {
                let f = |p: Point| trig_velocity(p)[comp];
                let lap = (f([x[0] + hstep, x[1]]) + f([x[0] - hstep, x[1]]) + f([x[0], x[1] + hstep])
                    + f([x[0], x[1] - hstep])
                    - 4.0 * f(x))
                    / (hstep * hstep);
                assert!((lap + l[comp]).abs() < 1e-4 * (1.0 + lap.abs()), "{lap} vs {}", -l[comp]);
            }
        }
    }

    #[test]
    fn trig_velocity_is_divergence_free() {
        let e = trig_exact();
        for x in [[0.13, 0.71], [0.5, 0.25]] {
            let g = (e.grad_u)(x);
            assert!((g[0][0] + g[1][1]).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_layout() {
        let cfg = ExperimentConfig {
            levels: vec![2, 4],
            nus: vec![1.0],
            projections: vec![Projection::Rt],
            ..ExperimentConfig::trig_default(ElementFamily::CrouzeixRaviart)
        };
        let rep = run(&cfg).unwrap();
        let csv = rep.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "element,projection,nu,n,h,eps0");
        assert!(lines[1].starts_with("cr,rt,1.0000000000000000e0,2,5.0000000000000000e-1,"));
        assert!(lines[3].starts_with("# rate="));
        assert_eq!(csv, run(&cfg).unwrap().to_csv());
    }
}
