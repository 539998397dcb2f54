//! Per-interface split of the trace space into slow and fast mode spans,
//! and the projection onto the slow coefficients.

use crate::angular::QuadratureSet;
use crate::error::{Result, RteError};
use crate::linalg::inverse_with_cond;
use crate::mesh::FineInterface;
use crate::tfps_basis::{Edge, LocalBasisSet};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct InterfaceProjection {
    pub interface: usize,
    pub sides: usize,
    /// Direction indices the interface space lives on: all `4M` for interior
    /// interfaces, the incoming `2M` on the domain boundary.
    pub components: Vec<usize>,
    /// Slow modes `(cell, mode)`; position is the slot index.
    pub slow_modes: Vec<(usize, usize)>,
    pub fast_modes: Vec<(usize, usize)>,
    pub slow_raw: DMatrix<f64>,
    pub chi_slow: DMatrix<f64>,
    pub chi_fast: DMatrix<f64>,
    pub full_matrix: DMatrix<f64>,
    /// Inverse of `full_matrix`.
    pub expansion: DMatrix<f64>,
    /// Leading `|slow|` rows of `expansion`.
    pub projector: DMatrix<f64>,
    pub condition: f64,
}

/// Incoming directions at a domain edge (`n·u < 0`).
pub fn incoming(quad: &QuadratureSet, e: Edge) -> Vec<usize> {
    (0..quad.len())
        .filter(|&m| match e {
            Edge::Left => quad.c[m] > 0.0,
            Edge::Right => quad.c[m] < 0.0,
            Edge::Bottom => quad.s[m] > 0.0,
            Edge::Top => quad.s[m] < 0.0,
        })
        .collect()
}

fn restricted(v: nalgebra::DVectorView<f64>, comps: &[usize]) -> DVector<f64> {
    DVector::from_iterator(comps.len(), comps.iter().map(|&m| v[m]))
}

/// Modified Gram–Schmidt with one reorthogonalization pass; each result is
/// rescaled to unit max-norm.
pub fn orthogonalize(raw: &DMatrix<f64>, interface: usize) -> Result<DMatrix<f64>> {
    let mut q = raw.clone();
    for j in 0..q.ncols() {
        let mut v = q.column(j).clone_owned();
        for _ in 0..2 {
            for i in 0..j {
                let qi = q.column(i);
                let coef = qi.dot(&v) / qi.dot(&qi);
                v.axpy(-coef, &qi, 1.0);
            }
        }
        let norm = v.norm();
        if norm < 1e-12 {
            return Err(RteError::RankDeficient { interface, norm });
        }
        v /= v.amax();
        q.set_column(j, &v);
    }
    Ok(q)
}

/// `bases` is indexed by fine cell id.
pub fn build_projection(iface: &FineInterface, bases: &[LocalBasisSet], quad: &QuadratureSet) -> Result<InterfaceProjection> {
    let mut sides = Vec::with_capacity(2);
    if let Some(c) = iface.lower {
        sides.push(c);
    }
    if let Some(c) = iface.upper {
        sides.push(c);
    }
    let components = match iface.boundary_edge() {
        Some(e) => incoming(quad, e),
        None => (0..quad.len()).collect(),
    };
    let mut slow_modes = Vec::new();
    let mut fast_modes = Vec::new();
    for &c in &sides {
        let e = iface.edge_of(c) as usize;
        slow_modes.extend(bases[c].by_edge[e].iter().map(|&k| (c, k)));
        fast_modes.extend(bases[c].fast_by_edge[e].iter().map(|&k| (c, k)));
    }
    let dim = components.len();
    let column = |&(c, k): &(usize, usize)| restricted(bases[c].modes.xi.column(k), &components);
    let slow_cols: Vec<_> = slow_modes.iter().map(column).collect();
    let fast_cols: Vec<_> = fast_modes.iter().map(column).collect();
    let slow_raw = if slow_cols.is_empty() { DMatrix::zeros(dim, 0) } else { DMatrix::from_columns(&slow_cols) };
    let chi_fast = if fast_cols.is_empty() { DMatrix::zeros(dim, 0) } else { DMatrix::from_columns(&fast_cols) };
    let chi_slow = orthogonalize(&slow_raw, iface.id)?;
    let ns = chi_slow.ncols();
    if ns + chi_fast.ncols() != dim {
        return Err(RteError::DimensionMismatch { expected: dim, got: ns + chi_fast.ncols() });
    }
    let mut full_matrix = DMatrix::zeros(dim, dim);
    full_matrix.columns_mut(0, ns).copy_from(&chi_slow);
    full_matrix.columns_mut(ns, dim - ns).copy_from(&chi_fast);
    let (expansion, condition) = match inverse_with_cond(&full_matrix) {
        Some((inv, cond)) if cond <= 1e12 => (inv, cond),
        Some((_, cond)) => return Err(RteError::RankDeficient { interface: iface.id, norm: 1.0 / cond }),
        None => return Err(RteError::RankDeficient { interface: iface.id, norm: 0.0 }),
    };
    let projector = expansion.rows(0, ns).clone_owned();
    Ok(InterfaceProjection {
        interface: iface.id,
        sides: sides.len(),
        components,
        slow_modes,
        fast_modes,
        slow_raw,
        chi_slow,
        chi_fast,
        full_matrix,
        expansion,
        projector,
        condition,
    })
}

impl InterfaceProjection {
    pub fn n_slow(&self) -> usize {
        self.slow_modes.len()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Slow expansion coefficients of `l` (already restricted to `components`).
    pub fn project(&self, l: &[f64]) -> Result<Vec<f64>> {
        if l.len() != self.dim() {
            return Err(RteError::DimensionMismatch { expected: self.dim(), got: l.len() });
        }
        let mut out = vec![0.0; self.n_slow()];
        crate::linalg::gemv_acc(&self.projector, l, &mut out, 1.0);
        Ok(out)
    }

    /// Projects a full `4M` vector, restricting it first on boundary interfaces.
    pub fn project_full(&self, v: &[f64]) -> Vec<f64> {
        let r: Vec<f64> = self.components.iter().map(|&m| v[m]).collect();
        let mut out = vec![0.0; self.n_slow()];
        crate::linalg::gemv_acc(&self.projector, &r, &mut out, 1.0);
        out
    }

    /// Full coefficient vector `[slow | fast]` of a (restricted) trace.
    pub fn expand(&self, l: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        crate::linalg::gemv_acc(&self.expansion, l, &mut out, 1.0);
        out
    }

    /// Slot of `(cell, mode)` in the slow list.
    pub fn slot_of(&self, cell: usize, mode: usize) -> Option<usize> {
        self.slow_modes.iter().position(|&p| p == (cell, mode))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::{build_quadrature, discrete_kernel};
    use crate::materials::CellOptics;
    use crate::mesh::build_hierarchy;
    use crate::tfps_basis::{build_cell_basis, select_slow_basis, EigenCache};

    fn bases(n: usize, m: usize, eps: f64, delta: f64) -> (crate::mesh::MeshHierarchy, Vec<LocalBasisSet>, QuadratureSet) {
        let q = build_quadrature(1, m).unwrap();
        let k = discrete_kernel(&q, 0.0).unwrap();
        let cache = EigenCache::new(&q, &k);
        let mesh = build_hierarchy(n, 0).unwrap();
        let b = (0..mesh.n_cells())
            .map(|c| {
                let o = CellOptics::from_means(c, 1.0, 0.5, eps);
                select_slow_basis(&build_cell_basis(&o, cache.get(&o).unwrap(), mesh.cell_geometry(c)).unwrap(), delta)
            })
            .collect();
        (mesh, b, q)
    }

    #[test]
    fn full_retention_interior_uses_one_eigen_system() {
        let (mesh, b, q) = bases(2, 1, 0.5, 0.0);
        let i = mesh.vertical(1, 0);
        let p = build_projection(&mesh.interfaces[i], &b, &q).unwrap();
        assert_eq!(p.n_slow(), 4);
        assert_eq!(p.dim(), 4);
        // span equals all x-system vectors
        let x = &b[0].modes.x.eigenvectors;
        let mut aug = p.chi_slow.clone().insert_columns(4, 4, 0.0);
        aug.columns_mut(4, 4).copy_from(x);
        assert_eq!(aug.rank(1e-9), 4);
        for a in 0..4 {
            for c in 0..a {
                let d = p.chi_slow.column(a).dot(&p.chi_slow.column(c));
                assert!(d.abs() < 1e-10);
            }
            let e = p.project(p.chi_slow.column(a).as_slice()).unwrap();
            for (j, v) in e.iter().enumerate() {
                assert!((v - if j == a { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn boundary_uses_incoming_half() {
        let (mesh, b, q) = bases(2, 3, 0.5, 0.0);
        let p = build_projection(&mesh.interfaces[mesh.vertical(0, 1)], &b, &q).unwrap();
        assert_eq!(p.dim(), 6);
        assert!(p.components.iter().all(|&m| q.c[m] > 0.0));
        assert_eq!(p.sides, 1);
    }

    #[test]
    fn fast_vectors_project_to_zero() {
        let (mesh, b, q) = bases(2, 1, 0.01, 0.05);
        let p = build_projection(&mesh.interfaces[mesh.vertical(1, 1)], &b, &q).unwrap();
        assert!(p.chi_fast.ncols() > 0);
        for j in 0..p.chi_fast.ncols() {
            let e = p.project(p.chi_fast.column(j).as_slice()).unwrap();
            assert!(e.iter().all(|v| v.abs() < 1e-12));
        }
        assert!(p.project(&[1.0]).is_err());
    }

    #[test]
    fn nothing_retained_is_zero_map() {
        let (mesh, b, q) = bases(2, 1, 0.01, 1.0);
        let p = build_projection(&mesh.interfaces[mesh.vertical(1, 0)], &b, &q).unwrap();
        assert_eq!(p.n_slow(), 0);
        assert!(p.project(&[1.0, 2.0, 3.0, 4.0]).unwrap().is_empty());
    }
}
