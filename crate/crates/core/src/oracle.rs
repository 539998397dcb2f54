//! Uncompressed reference solves used only for verification.
//!
//! Unknowns are all `8M` raw coefficients of every fine cell, column
//! `cell·8M + k`. Rows follow the fine interface ids; an interior interface
//! contributes `4M` continuity rows (upper minus lower trace), a boundary
//! interface its incoming components.

use crate::discretization::Discretization;
use crate::error::{Result, RteError};
use crate::interface_projection::incoming;
use crate::linalg::inverse_with_cond;
use crate::solver::{solve_particular, ProblemData, SolutionField, SteadyProblem, SteadySolver, TimeSeries, TimeSteppingConfig};
use nalgebra::{DMatrix, DVector};

pub const MAX_CELLS_PER_AXIS: usize = 16;
pub const MAX_AZIMUTH: usize = 3;

pub struct DenseTFPSSystem {
    pub matrix: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub condition: f64,
    /// `(fine interface, direction)` per row.
    pub rows: Vec<(usize, usize)>,
}

fn guard(disc: &Discretization) -> Result<()> {
    if disc.mesh.n > MAX_CELLS_PER_AXIS {
        return Err(RteError::SizeGuard { what: "cells per axis".into(), size: disc.mesh.n, limit: MAX_CELLS_PER_AXIS });
    }
    let m = disc.quad.m();
    if m > MAX_AZIMUTH {
        return Err(RteError::SizeGuard { what: "M".into(), size: m, limit: MAX_AZIMUTH });
    }
    Ok(())
}

impl DenseTFPSSystem {
    pub fn new(disc: &Discretization) -> Result<Self> {
        guard(disc)?;
        let n = disc.n_dirs();
        let nm = disc.n_modes();
        let dim = disc.mesh.n_cells() * nm;
        let mut rows = Vec::with_capacity(dim);
        for f in &disc.mesh.interfaces {
            match f.boundary_edge() {
                Some(e) => rows.extend(incoming(&disc.quad, e).into_iter().map(|m| (f.id, m))),
                None => rows.extend((0..n).map(|m| (f.id, m))),
            }
        }
        if rows.len() != dim {
            return Err(RteError::DimensionMismatch { expected: dim, got: rows.len() });
        }
        let mut matrix = DMatrix::zeros(dim, dim);
        for (r, &(i, m)) in rows.iter().enumerate() {
            let f = &disc.mesh.interfaces[i];
            let sides: Vec<(usize, f64)> = match f.sole_cell() {
                Some(c) => vec![(c, 1.0)],
                None => vec![(f.upper.unwrap(), 1.0), (f.lower.unwrap(), -1.0)],
            };
            for (c, sign) in sides {
                let b = &disc.bases[c];
                let e = f.edge_of(c);
                for k in 0..nm {
                    matrix[(r, c * nm + k)] += sign * b.edge_factor(k, e) * b.modes.xi[(m, k)];
                }
            }
        }
        let (inverse, condition) = inverse_with_cond(&matrix).ok_or(RteError::SingularSystem)?;
        if !(condition < 1e14) {
            return Err(RteError::SingularSystem);
        }
        Ok(DenseTFPSSystem { matrix, inverse, condition, rows })
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Boundary rows `Ψ − v`, interior rows `v_lower − v_upper`.
    pub fn rhs(&self, disc: &Discretization, particular: &[f64], boundary: &[Vec<f64>]) -> Vec<f64> {
        let n = disc.n_dirs();
        self.rows
            .iter()
            .map(|&(i, m)| {
                let f = &disc.mesh.interfaces[i];
                match f.sole_cell() {
                    Some(c) => boundary[i][m] - particular[c * n + m],
                    None => particular[f.lower.unwrap() * n + m] - particular[f.upper.unwrap() * n + m],
                }
            })
            .collect()
    }

    /// Coefficients and the relative residual `‖Bx − b‖/‖b‖`.
    pub fn solve(&self, rhs: &[f64]) -> (Vec<f64>, f64) {
        let b = DVector::from_column_slice(rhs);
        let x = &self.inverse * &b;
        let r = (&self.matrix * &x - &b).norm();
        let nb = b.norm();
        let rel = if nb > 0.0 { r / nb } else { r };
        (x.as_slice().to_vec(), rel)
    }
}

/// Full-order TFPS on a discretization; every mode is active whatever `δ` says.
pub struct FullOrderSolver<'a> {
    pub disc: &'a Discretization,
    pub system: DenseTFPSSystem,
}

impl<'a> FullOrderSolver<'a> {
    pub fn new(disc: &'a Discretization) -> Result<Self> {
        Ok(FullOrderSolver { disc, system: DenseTFPSSystem::new(disc)? })
    }
}

impl SteadySolver for FullOrderSolver<'_> {
    fn discretization(&self) -> &Discretization {
        self.disc
    }

    fn fundamental(&self, field: &mut SolutionField, boundary: &[Vec<f64>], _reconstruct: bool, flops: &mut u64) -> Result<()> {
        let rhs = self.system.rhs(self.disc, &field.particular, boundary);
        let (x, _) = self.system.solve(&rhs);
        *flops += 2 * (x.len() * x.len()) as u64;
        field.slow = x;
        field.fast.fill(0.0);
        Ok(())
    }
}

pub fn full_order_steady_solve(disc: &Discretization, problem: &SteadyProblem) -> Result<SolutionField> {
    let system = DenseTFPSSystem::new(disc)?;
    let mut field = SolutionField::zeros(disc.mesh.n_cells(), disc.n_dirs());
    field.particular = solve_particular(disc, &problem.rhs);
    let rhs = system.rhs(disc, &field.particular, &problem.boundary);
    field.slow = system.solve(&rhs).0;
    Ok(field)
}

/// Same midpoint iterations as the online solver with dense steady solves.
pub fn full_order_time_series(disc: &Discretization, data: &dyn ProblemData, cfg: &TimeSteppingConfig) -> Result<TimeSeries> {
    FullOrderSolver::new(disc)?.run_time_series(data, cfg)
}
