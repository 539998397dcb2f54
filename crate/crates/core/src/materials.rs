//! Optical coefficient fields and their per-cell averages.

use crate::error::{Result, RteError};
use crate::expr::Expr;
use serde::{Deserialize, Serialize};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

/// Spatially varying `(σ_T, σ_a, ε)`.
#[derive(Debug, Clone)]
pub enum MaterialField {
    Constant { sigma_t: f64, sigma_a: f64, epsilon: f64 },
    /// `σ_T=1`, `σ_a=0.5`; `ε=eps_inside` on the rectangles, `eps_outside` elsewhere.
    Lattice { rects: Vec<Rect>, eps_inside: f64, eps_outside: f64 },
    Bufferzone,
    Expression { sigma_t: Expr, sigma_a: Expr, epsilon: Expr },
}

impl MaterialField {
    pub fn constant(sigma_t: f64, sigma_a: f64, epsilon: f64) -> Self {
        MaterialField::Constant { sigma_t, sigma_a, epsilon }
    }

    pub fn lattice(rects: Vec<Rect>) -> Self {
        MaterialField::Lattice { rects, eps_inside: 0.01, eps_outside: 1.0 }
    }

    /// `(σ_T, σ_a, ε)` at a point.
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64, f64) {
        match self {
            MaterialField::Constant { sigma_t, sigma_a, epsilon } => (*sigma_t, *sigma_a, *epsilon),
            MaterialField::Lattice { rects, eps_inside, eps_outside } => {
                let eps = if rects.iter().any(|r| r.contains(x, y)) { *eps_inside } else { *eps_outside };
                (1.0, 0.5, eps)
            }
            MaterialField::Bufferzone => {
                let r2 = x * x + y * y;
                (1.0 + r2, 0.5 + r2, 0.02 * x + 0.001)
            }
            MaterialField::Expression { sigma_t, sigma_a, epsilon } => {
                (sigma_t.eval(x, y, 0.0), sigma_a.eval(x, y, 0.0), epsilon.eval(x, y, 0.0))
            }
        }
    }

    pub fn tag(&self) -> String {
        match self {
            MaterialField::Constant { sigma_t, sigma_a, epsilon } => {
                format!("constant(sigma_t={sigma_t:e},sigma_a={sigma_a:e},epsilon={epsilon:e})")
            }
            MaterialField::Lattice { rects, eps_inside, eps_outside } => {
                let mut s = format!("lattice(in={eps_inside:e},out={eps_outside:e}");
                for r in rects {
                    s.push_str(&format!(";{:e},{:e},{:e},{:e}", r.x0, r.x1, r.y0, r.y1));
                }
                s + ")"
            }
            MaterialField::Bufferzone => "bufferzone".into(),
            MaterialField::Expression { sigma_t, sigma_a, epsilon } => format!(
                "expression({};{};{})",
                sigma_t.source(),
                sigma_a.source(),
                epsilon.source()
            ),
        }
    }

    /// Checks positivity of `σ_T`, nonnegativity of `σ_a` and `ε ∈ (0,1]` on
    /// a sample grid, which is all that can be done for expression fields.
    pub fn validate(&self) -> Result<()> {
        let n = 33;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64);
                let (st, sa, eps) = self.eval(x, y);
                if !(st > 0.0) {
                    return Err(RteError::config("material.sigma_t", format!("must be positive, got {st} at ({x}, {y})")));
                }
                if !(sa >= 0.0) {
                    return Err(RteError::config("material.sigma_a", format!("must be nonnegative, got {sa} at ({x}, {y})")));
                }
                if !(eps > 0.0 && eps <= 1.0) {
                    return Err(RteError::config("material.epsilon", format!("must lie in (0, 1], got {eps} at ({x}, {y})")));
                }
            }
        }
        Ok(())
    }
}

/// Default diffusive blocks for the lattice benchmark: an 8×8 block grid of
/// side 1/8 where interior blocks with even `bx + by` are diffusive.
/// This approximates the published geometry, which is only shown as a figure.
pub fn default_lattice_rects() -> Vec<Rect> {
    let mut rects = Vec::new();
    for by in 1..7 {
        for bx in 1..7 {
            if (bx + by) % 2 == 0 {
                rects.push(Rect {
                    x0: bx as f64 / 8.0,
                    x1: (bx + 1) as f64 / 8.0,
                    y0: by as f64 / 8.0,
                    y1: (by + 1) as f64 / 8.0,
                });
            }
        }
    }
    rects
}

/// Named field constructors. `params` holds `[σ_T, σ_a, ε]` for `constant`
/// and `[σ_T, σ_a, ε]` expression strings for `expression`.
pub fn builtin_fields(name: &str, params: &[String], rects: Option<Vec<Rect>>) -> Result<MaterialField> {
    match name {
        "constant" => {
            if params.len() != 3 {
                return Err(RteError::config("material.params", "constant needs [sigma_t, sigma_a, epsilon]"));
            }
            let v: Vec<f64> = params
                .iter()
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| RteError::config("material.params", e.to_string()))?;
            Ok(MaterialField::constant(v[0], v[1], v[2]))
        }
        "lattice" => Ok(MaterialField::lattice(rects.unwrap_or_else(default_lattice_rects))),
        "bufferzone" => Ok(MaterialField::Bufferzone),
        "expression" => {
            if params.len() != 3 {
                return Err(RteError::config("material.params", "expression needs [sigma_t, sigma_a, epsilon]"));
            }
            Ok(MaterialField::Expression {
                sigma_t: Expr::parse_spatial(&params[0])?,
                sigma_a: Expr::parse_spatial(&params[1])?,
                epsilon: Expr::parse_spatial(&params[2])?,
            })
        }
        other => Err(RteError::config("material.name", format!("unknown material `{other}`"))),
    }
}

/// Cell means and the diffusively scaled cross sections derived from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellOptics {
    pub cell: usize,
    pub sigma_t_bar: f64,
    pub sigma_a_bar: f64,
    pub epsilon_bar: f64,
    /// `σ̄_T/ε̄`
    pub big_sigma_t: f64,
    /// `σ̄_T/ε̄ − ε̄σ̄_a`
    pub big_sigma_s: f64,
    pub rho: f64,
}

impl CellOptics {
    pub fn from_means(cell: usize, sigma_t_bar: f64, sigma_a_bar: f64, epsilon_bar: f64) -> Self {
        let big_sigma_t = sigma_t_bar / epsilon_bar;
        let big_sigma_s = big_sigma_t - epsilon_bar * sigma_a_bar;
        CellOptics {
            cell,
            sigma_t_bar,
            sigma_a_bar,
            epsilon_bar,
            big_sigma_t,
            big_sigma_s,
            rho: big_sigma_s / big_sigma_t,
        }
    }

    /// Collision coefficient `σ̄_T/ε̄²`.
    pub fn collision(&self) -> f64 {
        self.sigma_t_bar / (self.epsilon_bar * self.epsilon_bar)
    }

    /// Scattering coefficient `σ̄_T/ε̄² − σ̄_a`.
    pub fn scattering(&self) -> f64 {
        self.collision() - self.sigma_a_bar
    }
}

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Means over `[x0, x0+h] × [y0, y0+h]` by 3×3 tensor Gauss quadrature.
pub fn cell_average(field: &MaterialField, cell: usize, x0: f64, y0: f64, h: f64) -> CellOptics {
    let (mut st, mut sa, mut eps) = (0.0, 0.0, 0.0);
    for (x, y, w) in gauss_points(x0, y0, h) {
        let (a, b, c) = field.eval(x, y);
        st += w * a;
        sa += w * b;
        eps += w * c;
    }
    if let MaterialField::Constant { sigma_t, sigma_a, epsilon } = field {
        // keep constants bit-exact
        return CellOptics::from_means(cell, *sigma_t, *sigma_a, *epsilon);
    }
    CellOptics::from_means(cell, st, sa, eps)
}

/// The nine tensor Gauss points `(x, y, weight)` of a square cell; weights sum to one.
pub fn gauss_points(x0: f64, y0: f64, h: f64) -> [(f64, f64, f64); 9] {
    let mut pts = [(0.0, 0.0, 0.0); 9];
    let mut k = 0;
    for &(gx, wx) in &GAUSS3 {
        for &(gy, wy) in &GAUSS3 {
            pts[k] = (x0 + 0.5 * h * (1.0 + gx), y0 + 0.5 * h * (1.0 + gy), 0.25 * wx * wy);
            k += 1;
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_diffusive_optics() {
        let f = MaterialField::constant(1.0, 0.5, 0.01);
        let o = cell_average(&f, 0, 0.0, 0.0, 1.0 / 32.0);
        assert!((o.big_sigma_t - 100.0).abs() < 1e-12);
        assert!((o.big_sigma_s - 99.995).abs() < 1e-12);
        assert!((o.rho - 0.99995).abs() < 1e-14);
    }

    #[test]
    fn zero_absorption_gives_unit_albedo() {
        let o = cell_average(&MaterialField::constant(1.0, 0.0, 1.0), 3, 0.5, 0.5, 0.25);
        assert_eq!(o.rho, 1.0);
    }

    #[test]
    fn bufferzone_means_match_polynomial_integrals() {
        let h = 1.0 / 32.0;
        let o = cell_average(&MaterialField::Bufferzone, 0, 0.0, 0.0, h);
        // mean of x² + y² over [0,h]² is 2h²/3
        let r2 = 2.0 * h * h / 3.0;
        assert!((o.sigma_t_bar - (1.0 + r2)).abs() < 1e-15);
        assert!((o.sigma_a_bar - (0.5 + r2)).abs() < 1e-15);
        assert!((o.epsilon_bar - (0.02 * h / 2.0 + 0.001)).abs() < 1e-16);
    }

    #[test]
    fn builtins() {
        let b = builtin_fields("bufferzone", &[], None).unwrap();
        assert!((b.eval(0.0, 0.0).2 - 0.001).abs() < 1e-16);
        assert_eq!(b.eval(1.0, 1.0).0, 3.0);
        let c = builtin_fields("constant", &["1".into(), "0.5".into(), "1".into()], None).unwrap();
        assert_eq!(c.eval(0.3, 0.9), (1.0, 0.5, 1.0));
        assert!(builtin_fields("marble", &[], None).is_err());
        let e = builtin_fields("expression", &["1+x".into(), "0.5".into(), "0.1".into()], None).unwrap();
        assert_eq!(e.eval(1.0, 0.0).0, 2.0);
        e.validate().unwrap();
        let bad = builtin_fields("expression", &["1".into(), "0.5".into(), "2".into()], None).unwrap();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn default_lattice_is_inside_transport_frame() {
        let f = MaterialField::lattice(default_lattice_rects());
        assert_eq!(f.eval(0.01, 0.5).2, 1.0);
        assert_eq!(f.eval(0.2, 0.2).2, 0.01);
        assert_eq!(f.eval(0.3, 0.2).2, 1.0);
        assert_eq!(default_lattice_rects().len(), 18);
    }
}
