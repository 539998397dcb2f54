//! Per-cell exponential fundamental solutions and slow-mode selection.
//!
//! In a cell with frozen coefficients the homogeneous discrete-ordinates
//! equation has separable solutions `ξ exp(λ Σ_t (x − x_a))` where `(λ, ξ)` is
//! an eigenpair of `D⁻¹(ρKW − I)` (and `S⁻¹(ρKW − I)` along y). Modes decaying
//! quickly across the cell are boundary/interface layers; the rest are kept.

use crate::angular::{KernelMatrix, QuadratureSet};
use crate::error::{Result, RteError};
use crate::linalg::real_eigen;
use crate::materials::CellOptics;
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

/// Cell edges, in the order used for every per-edge table in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    Left = 0,
    Right = 1,
    Bottom = 2,
    Top = 3,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Left, Edge::Right, Edge::Bottom, Edge::Top];

    pub fn axis(self) -> Axis {
        match self {
            Edge::Left | Edge::Right => Axis::X,
            _ => Axis::Y,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub axis: Axis,
    pub rho: f64,
    pub eigenvalues: Vec<f64>,
    /// Column `k` is `ξ_k`, unit max-norm.
    pub eigenvectors: DMatrix<f64>,
    /// Max-norm residual of `M ξ − λ ξ` over all pairs.
    pub residual: f64,
    /// Zero or defective eigenvalue cluster, e.g. `ρ = 1`.
    pub degenerate: bool,
}

/// `D⁻¹(ρKW − I)` for `Axis::X`, `S⁻¹(ρKW − I)` for `Axis::Y`.
pub fn transport_matrix(axis: Axis, rho: f64, quad: &QuadratureSet, kernel: &KernelMatrix) -> DMatrix<f64> {
    let n = quad.len();
    let mut m = kernel.weighted(quad) * rho;
    for d in 0..n {
        m[(d, d)] -= 1.0;
    }
    for r in 0..n {
        let dir = match axis {
            Axis::X => quad.c[r],
            Axis::Y => quad.s[r],
        };
        m.row_mut(r).scale_mut(1.0 / dir);
    }
    m
}

fn eigen_system(axis: Axis, rho: f64, quad: &QuadratureSet, kernel: &KernelMatrix) -> Result<EigenSystem> {
    let m = transport_matrix(axis, rho, quad, kernel);
    let e = real_eigen(&m);
    let scale = e.values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    // A Jordan block at zero splits into a complex pair of size ~sqrt(eps).
    if e.max_imag > 1e-6 * scale {
        return Err(RteError::NonRealSpectrum { imag: e.max_imag });
    }
    let mut residual = 0.0f64;
    for k in 0..e.values.len() {
        let v = e.vectors.column(k);
        let r = (&m * v - v * e.values[k]).amax();
        residual = residual.max(r);
    }
    let min_abs = e.values.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    Ok(EigenSystem {
        axis,
        rho,
        eigenvalues: e.values,
        eigenvectors: e.vectors,
        residual,
        degenerate: e.defective || min_abs < 1e-12 * scale || e.max_imag > 1e-10 * scale,
    })
}

/// Eigen systems of both transport matrices for the cell's albedo.
pub fn eigen_systems(optics: &CellOptics, quad: &QuadratureSet, kernel: &KernelMatrix) -> Result<(EigenSystem, EigenSystem)> {
    Ok((eigen_system(Axis::X, optics.rho, quad, kernel)?, eigen_system(Axis::Y, optics.rho, quad, kernel)?))
}

/// The 8M modes shared by all cells with the same albedo: x-system first.
#[derive(Debug)]
pub struct ModeTable {
    pub x: EigenSystem,
    pub y: EigenSystem,
    pub lambdas: Vec<f64>,
    pub anchors: Vec<Edge>,
    /// `4M × 8M`, column `k` is `ξ_k`.
    pub xi: DMatrix<f64>,
}

impl ModeTable {
    fn new(x: EigenSystem, y: EigenSystem) -> Self {
        let n = x.eigenvalues.len();
        let mut lambdas = Vec::with_capacity(2 * n);
        let mut anchors = Vec::with_capacity(2 * n);
        let mut xi = DMatrix::zeros(n, 2 * n);
        for (k, &l) in x.eigenvalues.iter().enumerate() {
            lambdas.push(l);
            anchors.push(if l <= 0.0 { Edge::Left } else { Edge::Right });
            xi.set_column(k, &x.eigenvectors.column(k));
        }
        for (k, &l) in y.eigenvalues.iter().enumerate() {
            lambdas.push(l);
            anchors.push(if l <= 0.0 { Edge::Bottom } else { Edge::Top });
            xi.set_column(n + k, &y.eigenvectors.column(k));
        }
        ModeTable { x, y, lambdas, anchors, xi }
    }
}

/// Memo of mode tables keyed by albedo rounded to 12 significant digits.
pub struct EigenCache {
    quad: QuadratureSet,
    kernel: KernelMatrix,
    table: Mutex<HashMap<u64, Arc<ModeTable>>>,
}

fn rho_key(rho: f64) -> u64 {
    let rounded: f64 = format!("{rho:.11e}").parse().unwrap_or(rho);
    rounded.to_bits()
}

impl EigenCache {
    pub fn new(quad: &QuadratureSet, kernel: &KernelMatrix) -> Self {
        EigenCache { quad: quad.clone(), kernel: kernel.clone(), table: Mutex::new(HashMap::new()) }
    }

    pub fn get(&self, optics: &CellOptics) -> Result<Arc<ModeTable>> {
        let key = rho_key(optics.rho);
        if let Some(t) = self.table.lock().unwrap().get(&key) {
            return Ok(t.clone());
        }
        let (x, y) = eigen_systems(optics, &self.quad, &self.kernel)?;
        let t = Arc::new(ModeTable::new(x, y));
        Ok(self.table.lock().unwrap().entry(key).or_insert(t).clone())
    }

    pub fn len(&self) -> usize {
        self.table.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One fundamental solution of one cell.
#[derive(Debug, Clone)]
pub struct BasisFunction {
    pub cell: usize,
    pub axis: Axis,
    pub anchor: Edge,
    pub lambda: f64,
    pub xi: DVector<f64>,
    pub big_sigma_t: f64,
    pub center_magnitude: f64,
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
}

/// Square cell `[x0, x0+h] × [y0, y0+h]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub id: usize,
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
}

impl CellGeometry {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let tol = 1e-12 * self.h.max(1.0);
        x >= self.x0 - tol && x <= self.x0 + self.h + tol && y >= self.y0 - tol && y <= self.y0 + self.h + tol
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x0 + 0.5 * self.h, self.y0 + 0.5 * self.h)
    }

    /// Midpoint of an edge.
    pub fn edge_midpoint(&self, e: Edge) -> (f64, f64) {
        let (cx, cy) = self.center();
        match e {
            Edge::Left => (self.x0, cy),
            Edge::Right => (self.x0 + self.h, cy),
            Edge::Bottom => (cx, self.y0),
            Edge::Top => (cx, self.y0 + self.h),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LocalBasisSet {
    pub geom: CellGeometry,
    pub big_sigma_t: f64,
    pub modes: Arc<ModeTable>,
    /// `|λ_k| Σ_t h`, the decay exponent across the cell.
    pub decay: Vec<f64>,
    pub center_magnitude: Vec<f64>,
    /// Cell means of the factors, `(1 − e^{−a})/a`.
    pub mean: Vec<f64>,
    pub delta: Option<f64>,
    pub retained: Vec<usize>,
    pub by_edge: [Vec<usize>; 4],
    /// Discarded modes per anchor edge.
    pub fast_by_edge: [Vec<usize>; 4],
}

pub fn build_cell_basis(optics: &CellOptics, modes: Arc<ModeTable>, geom: CellGeometry) -> Result<LocalBasisSet> {
    if optics.sigma_a_bar < 1e-12 {
        return Err(RteError::DegenerateSpectrum {
            cell: geom.id,
            reason: format!("mean absorption {:e} below 1e-12", optics.sigma_a_bar),
        });
    }
    if modes.x.degenerate || modes.y.degenerate {
        return Err(RteError::DegenerateSpectrum { cell: geom.id, reason: "zero or defective eigenvalue".into() });
    }
    let decay: Vec<f64> = modes.lambdas.iter().map(|l| l.abs() * optics.big_sigma_t * geom.h).collect();
    let center_magnitude = decay.iter().map(|a| (-0.5 * a).exp()).collect();
    let mean = decay.iter().map(|&a| if a < 1e-300 { 1.0 } else { -(-a).exp_m1() / a }).collect();
    Ok(LocalBasisSet {
        geom,
        big_sigma_t: optics.big_sigma_t,
        modes,
        decay,
        center_magnitude,
        mean,
        delta: None,
        retained: Vec::new(),
        by_edge: Default::default(),
        fast_by_edge: Default::default(),
    })
}

/// Keeps the modes whose value at the cell center exceeds `delta`.
pub fn select_slow_basis(basis: &LocalBasisSet, delta: f64) -> LocalBasisSet {
    let mut b = basis.clone();
    b.delta = Some(delta);
    b.retained.clear();
    b.by_edge = Default::default();
    b.fast_by_edge = Default::default();
    for k in 0..b.decay.len() {
        let e = b.modes.anchors[k] as usize;
        if b.center_magnitude[k] > delta {
            b.retained.push(k);
            b.by_edge[e].push(k);
        } else {
            b.fast_by_edge[e].push(k);
        }
    }
    b
}

impl LocalBasisSet {
    pub fn n_modes(&self) -> usize {
        self.decay.len()
    }

    pub fn n_dirs(&self) -> usize {
        self.modes.xi.nrows()
    }

    pub fn function(&self, k: usize) -> BasisFunction {
        let anchor = self.modes.anchors[k];
        BasisFunction {
            cell: self.geom.id,
            axis: anchor.axis(),
            anchor,
            lambda: self.modes.lambdas[k],
            xi: self.modes.xi.column(k).clone_owned(),
            big_sigma_t: self.big_sigma_t,
            center_magnitude: self.center_magnitude[k],
            x0: self.geom.x0,
            y0: self.geom.y0,
            h: self.geom.h,
        }
    }

    /// Scalar factor `exp(λ Σ_t (coord − anchor))` of mode `k`.
    #[inline]
    pub fn factor(&self, k: usize, x: f64, y: f64) -> f64 {
        let g = &self.geom;
        let d = match self.modes.anchors[k] {
            Edge::Left => x - g.x0,
            Edge::Right => g.x0 + g.h - x,
            Edge::Bottom => y - g.y0,
            Edge::Top => g.y0 + g.h - y,
        };
        (-self.decay[k] * d / g.h).exp()
    }

    /// Factor of mode `k` at the midpoint of edge `e`.
    #[inline]
    pub fn edge_factor(&self, k: usize, e: Edge) -> f64 {
        let a = self.modes.anchors[k];
        if a == e {
            1.0
        } else if a.axis() == e.axis() {
            (-self.decay[k]).exp()
        } else {
            self.center_magnitude[k]
        }
    }

    /// Cell mean of the factor of mode `k`: `(1 − e^{−a})/a`.
    #[inline]
    pub fn mean_factor(&self, k: usize) -> f64 {
        self.mean[k]
    }

    /// `Σ_k coef_k · factor_k · ξ_k` added into `out`.
    pub fn accumulate(&self, coef: &[f64], factors: &[f64], out: &mut [f64]) {
        let n = self.n_dirs();
        let xi = self.modes.xi.as_slice();
        for k in 0..coef.len() {
            let s = coef[k] * factors[k];
            if s != 0.0 {
                for (o, v) in out.iter_mut().zip(&xi[k * n..(k + 1) * n]) {
                    *o += s * v;
                }
            }
        }
    }
}

pub fn evaluate_basis(f: &BasisFunction, x: f64, y: f64) -> Result<DVector<f64>> {
    let geom = CellGeometry { id: f.cell, x0: f.x0, y0: f.y0, h: f.h };
    if !geom.contains(x, y) {
        return Err(RteError::PointOutsideCell { cell: f.cell, x, y });
    }
    let anchor = match f.anchor {
        Edge::Left => f.x0,
        Edge::Right => f.x0 + f.h,
        Edge::Bottom => f.y0,
        Edge::Top => f.y0 + f.h,
    };
    let coord = if f.axis == Axis::X { x } else { y };
    Ok(&f.xi * (f.lambda * f.big_sigma_t * (coord - anchor)).exp())
}
