//! Everything about a problem that does not change between time steps:
//! mesh, ordinates, per-cell optics and bases, interface projections.

use crate::angular::{build_quadrature, discrete_kernel, KernelMatrix, QuadratureSet};
use crate::error::{Result, RteError};
use crate::interface_projection::{build_projection, InterfaceProjection};
use crate::linalg::inverse_with_cond;
use crate::materials::{cell_average, CellOptics, MaterialField};
use crate::mesh::{build_hierarchy, MeshHierarchy};
use crate::tfps_basis::{build_cell_basis, select_slow_basis, EigenCache, LocalBasisSet};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationParams {
    pub n: usize,
    pub levels: usize,
    pub n_polar: usize,
    pub n_azimuth: usize,
    pub g: f64,
    pub delta: f64,
}

/// Collision matrix `A_C = (σ̄_T/ε̄²)I − (σ̄_T/ε̄² − σ̄_a)KW` and its inverse.
#[derive(Debug)]
pub struct CellSystem {
    pub a: DMatrix<f64>,
    pub a_inv: DMatrix<f64>,
}

pub struct Discretization {
    pub params: DiscretizationParams,
    pub mesh: MeshHierarchy,
    pub quad: QuadratureSet,
    pub kernel: KernelMatrix,
    pub optics: Vec<CellOptics>,
    pub bases: Vec<LocalBasisSet>,
    pub projections: Vec<InterfaceProjection>,
    pub cell_systems: Vec<Arc<CellSystem>>,
    pub material_tag: String,
}

pub fn collision_matrix(optics: &CellOptics, kw: &DMatrix<f64>) -> DMatrix<f64> {
    let n = kw.nrows();
    let mut a = kw * (-optics.scattering());
    for d in 0..n {
        a[(d, d)] += optics.collision();
    }
    a
}

impl Discretization {
    pub fn new(params: DiscretizationParams, field: &MaterialField) -> Result<Self> {
        let mesh = build_hierarchy(params.n, params.levels)?;
        let quad = build_quadrature(params.n_polar, params.n_azimuth)?;
        let kernel = discrete_kernel(&quad, params.g)?;
        if !(params.delta >= 0.0) {
            return Err(RteError::config("compression.delta", "must be nonnegative"));
        }
        let optics: Vec<CellOptics> = (0..mesh.n_cells())
            .map(|c| {
                let g = mesh.cell_geometry(c);
                cell_average(field, c, g.x0, g.y0, g.h)
            })
            .collect();
        Self::from_optics(params, mesh, quad, kernel, optics, field.tag())
    }

    pub fn from_optics(
        params: DiscretizationParams,
        mesh: MeshHierarchy,
        quad: QuadratureSet,
        kernel: KernelMatrix,
        optics: Vec<CellOptics>,
        material_tag: String,
    ) -> Result<Self> {
        let cache = EigenCache::new(&quad, &kernel);
        let bases = optics
            .par_iter()
            .map(|o| {
                let modes = cache.get(o)?;
                let b = build_cell_basis(o, modes, mesh.cell_geometry(o.cell))?;
                Ok(select_slow_basis(&b, params.delta))
            })
            .collect::<Result<Vec<_>>>()?;
        let projections = mesh
            .interfaces
            .par_iter()
            .map(|f| build_projection(f, &bases, &quad))
            .collect::<Result<Vec<_>>>()?;

        let kw = kernel.weighted(&quad);
        let mut memo: HashMap<(u64, u64), Arc<CellSystem>> = HashMap::new();
        let mut cell_systems = Vec::with_capacity(optics.len());
        for o in &optics {
            let key = (o.collision().to_bits(), o.scattering().to_bits());
            if let Some(s) = memo.get(&key) {
                cell_systems.push(s.clone());
                continue;
            }
            let a = collision_matrix(o, &kw);
            let a_inv = match inverse_with_cond(&a) {
                Some((inv, cond)) if cond < 1e14 => inv,
                _ => return Err(RteError::SingularCellSystem { cell: o.cell }),
            };
            let s = Arc::new(CellSystem { a, a_inv });
            memo.insert(key, s.clone());
            cell_systems.push(s);
        }
        Ok(Discretization { params, mesh, quad, kernel, optics, bases, projections, cell_systems, material_tag })
    }

    pub fn n_dirs(&self) -> usize {
        self.quad.len()
    }

    pub fn n_modes(&self) -> usize {
        2 * self.quad.len()
    }

    /// `Σ|V_{δ,C}| / (8M · cells)`.
    pub fn rank_ratio(&self) -> f64 {
        crate::experiments::rank_ratio(&self.bases)
    }
}
