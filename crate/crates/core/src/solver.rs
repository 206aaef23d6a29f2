//! Sparse LU solve of the bordered saddle-point system.
//!
//! A factorization of `K` at viscosity `nu0` serves every viscosity: the
//! system at `nu` is equivalent to the one at `nu0` with the load scaled by
//! `nu0 / nu` and the pressure by `nu / nu0`.
//!
//! The dense mean-value border ruins the sparsity of the factors, so the
//! matrix actually factorized pins the first pressure dof instead. Constant
//! pressures lie in the kernel of `B^T`, which makes the two equivalent: the
//! multiplier follows from the sum of the divergence rows, the pinned solve
//! gives the rest, and a constant shift restores the mean constraint.
//!
//! Residuals for iterative refinement are accumulated with error-free
//! transformations, so refinement converges to the solution of the stored
//! system rather than stalling at the rounding level of `B^T p`, which
//! grows like `1 / nu`.

use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::assembly::{SaddleSystem, SparseMatrix};
use crate::error::{Error, Result};

pub const RESIDUAL_TOL: f64 = 1e-10;
const MAX_REFINEMENT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    pub unknowns: usize,
    pub nonzeros: usize,
    pub factor_seconds: f64,
    pub solve_seconds: f64,
    pub refinement_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Free velocity coefficients, component-major.
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub multiplier: f64,
    /// `||K z - b|| / ||b||`, or `||K z||` for a zero load.
    pub residual_norm: f64,
    pub stats: SolveStats,
}

/// Sum of products carried in two doubles.
#[derive(Clone, Copy, Default)]
struct Acc {
    s: f64,
    c: f64,
}

impl Acc {
    fn add(&mut self, x: f64) {
        let s = self.s + x;
        let bp = s - self.s;
        self.c += (self.s - (s - bp)) + (x - bp);
        self.s = s;
    }

    fn add_prod(&mut self, a: f64, b: f64) {
        let p = a * b;
        self.c += a.mul_add(b, -p);
        self.add(p);
    }

    fn value(self) -> f64 {
        self.s + self.c
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A factorized saddle system.
pub struct SaddleSolver {
    system: SaddleSystem,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    bt: SparseMatrix,
    factor_seconds: f64,
    nonzeros: usize,
}

impl SaddleSolver {
    pub fn factor(system: SaddleSystem) -> Result<SaddleSolver> {
        system.check_dimensions()?;
        let n = system.size();
        let start = Instant::now();
        let nv = system.num_velocity();
        let pin = nv;
        let mut trip: Vec<_> = system
            .matrix_triplets()
            .into_iter()
            .filter(|&(r, c, _)| r < n - 1 && c < n - 1 && r != pin && c != pin)
            .map(|(r, c, v)| Triplet::new(r, c, v))
            .collect();
        trip.push(Triplet::new(pin, pin, 1.0));
        let k = SparseColMat::<usize, f64>::try_new_from_triplets(n - 1, n - 1, &trip)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        let lu = k.sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => Error::Singular { pivot: index },
            other => Error::Solver(format!("{other:?}")),
        })?;
        Ok(SaddleSolver {
            nonzeros: k.compute_nnz(),
            bt: system.b.transpose(),
            system,
            lu,
            factor_seconds: start.elapsed().as_secs_f64(),
        })
    }

    pub fn system(&self) -> &SaddleSystem {
        &self.system
    }

    /// `b - K z`, accurately.
    fn residual(&self, b: &[f64], z: &[f64]) -> Vec<f64> {
        let sys = &self.system;
        let (nv, np) = (sys.num_velocity(), sys.num_pressure());
        let (u, p, lam) = (&z[..nv], &z[nv..nv + np], z[nv + np]);
        let mut r = Vec::with_capacity(z.len());
        for i in 0..nv {
            let mut acc = Acc::default();
            acc.add(b[i]);
            for (j, v) in sys.a.row(i) {
                acc.add_prod(-v, u[j]);
            }
            for (j, v) in self.bt.row(i) {
                acc.add_prod(v, p[j]);
            }
            r.push(acc.value());
        }
        for i in 0..np {
            let mut acc = Acc::default();
            acc.add(b[nv + i]);
            for (j, v) in sys.b.row(i) {
                acc.add_prod(v, u[j]);
            }
            acc.add_prod(-sys.mean[i], lam);
            r.push(acc.value());
        }
        let mut acc = Acc::default();
        acc.add(b[nv + np]);
        for (m, q) in sys.mean.iter().zip(p) {
            acc.add_prod(-m, *q);
        }
        r.push(acc.value());
        r
    }

    /// Solves the bordered system through the pinned factorization.
    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let sys = &self.system;
        let (nv, np) = (sys.num_velocity(), sys.num_pressure());
        let (g, h) = (&b[nv..nv + np], b[nv + np]);
        let volume: f64 = sys.mean.iter().sum();
        let lambda = g.iter().sum::<f64>() / volume;
        let mut rhs = Mat::from_fn(nv + np, 1, |i, _| {
            if i < nv {
                b[i]
            } else {
                g[i - nv] - sys.mean[i - nv] * lambda
            }
        });
        rhs[(nv, 0)] = 0.0;
        let x = self.lu.solve(&rhs);
        let mut z: Vec<f64> = (0..nv + np).map(|i| x[(i, 0)]).collect();
        let mean: f64 = sys.mean.iter().zip(&z[nv..]).map(|(m, q)| m * q).sum();
        let shift = (h - mean) / volume;
        z[nv..].iter_mut().for_each(|q| *q += shift);
        z.push(lambda);
        z
    }

    /// Solves with the factored system's own load.
    pub fn solve(&self) -> Result<Solution> {
        let rhs = self.system.rhs_u.clone();
        self.solve_load(&rhs, self.system.nu)
    }

    /// Solves for velocity load `rhs_u` at viscosity `nu`.
    pub fn solve_load(&self, rhs_u: &[f64], nu: f64) -> Result<Solution> {
        let nv = self.system.num_velocity();
        if rhs_u.len() != nv {
            return Err(Error::Dimension { expected: nv, got: rhs_u.len() });
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::Domain(format!("viscosity must be positive, got {nu}")));
        }
        let start = Instant::now();
        let scale = self.system.nu / nu;
        let mut b: Vec<f64> = rhs_u.iter().map(|v| v * scale).collect();
        b.resize(self.system.size(), 0.0);
        let bnorm = norm(&b);
        let mut z = vec![0.0; b.len()];
        let mut residual = if bnorm == 0.0 { 0.0 } else { f64::INFINITY };
        let mut steps = 0;
        if bnorm > 0.0 {
            z = self.raw_solve(&b);
            let mut last_step = f64::INFINITY;
            for step in 0..MAX_REFINEMENT {
                let r = self.residual(&b, &z);
                residual = norm(&r) / bnorm;
                steps = step;
                if !residual.is_finite() {
                    return Err(Error::Solver("non-finite solution".into()));
                }
                let dz = self.raw_solve(&r);
                let dnorm = norm(&dz);
                z.iter_mut().zip(&dz).for_each(|(z, d)| *z += d);
                // stop once corrections no longer shrink or fall below rounding
                if dnorm <= f64::EPSILON * norm(&z) * 1e-2 || dnorm >= 0.5 * last_step {
                    break;
                }
                last_step = dnorm;
            }
            residual = norm(&self.residual(&b, &z)) / bnorm;
        }
        if residual > RESIDUAL_TOL {
            return Err(Error::Solver(format!(
                "relative residual {residual:e} above {RESIDUAL_TOL:e}"
            )));
        }
        let np = self.system.num_pressure();
        let u = z[..nv].to_vec();
        let p = z[nv..nv + np].iter().map(|v| v / scale).collect();
        Ok(Solution {
            u,
            p,
            multiplier: z[nv + np],
            residual_norm: residual,
            stats: SolveStats {
                unknowns: self.system.size(),
                nonzeros: self.nonzeros,
                factor_seconds: self.factor_seconds,
                solve_seconds: start.elapsed().as_secs_f64(),
                refinement_steps: steps,
            },
        })
    }
}

/// Factorizes and solves in one step.
pub fn solve(system: &SaddleSystem) -> Result<Solution> {
    SaddleSolver::factor(system.clone())?.solve()
}
