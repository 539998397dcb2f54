//! Discrete ordinates on the projected unit disc and the discretized
//! Henyey–Greenstein scattering kernel.

use crate::error::{Result, RteError};
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Directions `(c_m, s_m)` with weights summing to one.
///
/// Directions are stored quadrant by quadrant in the order
/// `(+,+)`, `(-,+)`, `(-,-)`, `(+,-)`, each quadrant holding `M` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSet {
    pub n_polar: usize,
    pub n_azimuth: usize,
    pub c: Vec<f64>,
    pub s: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureSet {
    /// Directions per quadrant.
    pub fn m(&self) -> usize {
        self.n_polar * self.n_azimuth
    }

    /// Total number of directions, `4M`.
    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// Index of the direction `(-c_m, -s_m)`.
    pub fn opposite(&self, m: usize) -> usize {
        let q = self.m();
        (m + 2 * q) % (4 * q)
    }

    /// Weighted sum `Σ ω_m ψ_m`.
    pub fn scalar_flux(&self, psi: &[f64]) -> f64 {
        self.weights.iter().zip(psi).map(|(w, p)| w * p).sum()
    }
}

/// Gauss–Legendre nodes and weights on `(0, 1)`, ascending.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Product rule: Gauss–Legendre polar cosines times midpoint azimuths,
/// projected onto the x–y plane.
pub fn build_quadrature(n_polar: usize, n_azimuth: usize) -> Result<QuadratureSet> {
    if n_polar == 0 || n_azimuth == 0 {
        return Err(RteError::InvalidQuadrature(format!(
            "n_polar={n_polar}, n_azimuth={n_azimuth}; both must be positive"
        )));
    }
    let (mu, w) = gauss_legendre_unit(n_polar);
    let mut first = Vec::with_capacity(n_polar * n_azimuth);
    for p in 0..n_polar {
        let r = (1.0 - mu[p] * mu[p]).sqrt();
        for a in 1..=n_azimuth {
            let phi = (2 * a - 1) as f64 * PI / (4 * n_azimuth) as f64;
            first.push((r * phi.cos(), r * phi.sin(), w[p] / (4 * n_azimuth) as f64));
        }
    }
    let mut c = Vec::with_capacity(4 * first.len());
    let mut s = Vec::with_capacity(4 * first.len());
    let mut weights = Vec::with_capacity(4 * first.len());
    for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
        for &(cx, cy, wt) in &first {
            c.push(sx * cx);
            s.push(sy * cy);
            weights.push(wt);
        }
    }
    // Gauss weights on (0,1) sum to one only up to round-off.
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(QuadratureSet { n_polar, n_azimuth, c, s, weights })
}

/// Row-normalized scattering matrix `κ`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub g: f64,
    pub entries: DMatrix<f64>,
}

impl KernelMatrix {
    /// `K · diag(ω)`, the discrete scattering operator.
    pub fn weighted(&self, quad: &QuadratureSet) -> DMatrix<f64> {
        let mut kw = self.entries.clone();
        for (j, w) in quad.weights.iter().enumerate() {
            kw.column_mut(j).scale_mut(*w);
        }
        kw
    }
}

/// Unnormalized HG value for the 2D cosine `u·u'`.
pub fn hg_raw(g: f64, cos: f64) -> f64 {
    (1.0 - g * g) / (1.0 + g * g - 2.0 * g * cos).powf(1.5)
}

pub fn discrete_kernel(quad: &QuadratureSet, g: f64) -> Result<KernelMatrix> {
    if !(g.abs() < 1.0) {
        return Err(RteError::InvalidAnisotropy(g));
    }
    let n = quad.len();
    let mut k = DMatrix::from_fn(n, n, |m, p| {
        hg_raw(g, quad.c[m] * quad.c[p] + quad.s[m] * quad.s[p])
    });
    if g == 0.0 {
        k.fill(1.0);
    }
    for m in 0..n {
        let row: f64 = (0..n).map(|p| k[(m, p)] * quad.weights[p]).sum();
        k.row_mut(m).scale_mut(1.0 / row);
    }
    Ok(KernelMatrix { g, entries: k })
}
