//! Manufactured solutions, error norms and parameter studies.

use crate::angular::{build_quadrature, QuadratureSet};
use crate::discretization::{Discretization, DiscretizationParams};
use crate::error::{Result, RteError};
use crate::materials::MaterialField;
use crate::mesh::default_levels;
use crate::solver::{IsotropicInflow, ProblemData, SolutionField, SteadySolver, SteppingMode, TimeSteppingConfig, TransportSolver};
use crate::tfps_basis::LocalBasisSet;
use nalgebra::{DMatrix, DVector};
use std::io::Write;
use std::path::Path;

/// Constant-coefficient exact solution
/// `ψ = t/(1+t)·(1+εx)·ξ·exp(λ(√3/2·x + y/2))` of the isotropic problem.
#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    pub sigma_t: f64,
    pub sigma_a: f64,
    pub epsilon: f64,
    pub quad: QuadratureSet,
    pub lambda_min: f64,
    pub xi_min: DVector<f64>,
    /// The matrix whose eigenpair defines the solution.
    pub matrix: DMatrix<f64>,
}

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

impl ManufacturedCase {
    pub fn new(sigma_t: f64, sigma_a: f64, epsilon: f64, quad: QuadratureSet) -> Result<Self> {
        let n = quad.len();
        let a = sigma_t / epsilon - epsilon * sigma_a;
        let b = sigma_t / epsilon;
        let matrix = DMatrix::from_fn(n, n, |m, p| {
            let v = a * quad.weights[p] - if m == p { b } else { 0.0 };
            v / (SQRT3_2 * quad.c[m] + 0.5 * quad.s[m])
        });
        let eig = matrix.clone().complex_eigenvalues();
        let mut best: Option<f64> = None;
        for z in eig.iter() {
            if z.re < 0.0 && z.im.abs() <= 1e-10 && best.map_or(true, |b| z.re.abs() < b.abs()) {
                best = Some(z.re);
            }
        }
        let lambda_min = best.ok_or(RteError::NonRealSpectrum { imag: f64::NAN })?;
        let mut shifted = matrix.clone();
        for d in 0..n {
            shifted[(d, d)] -= lambda_min;
        }
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.unwrap();
        let j = (0..n)
            .min_by(|&a, &b| svd.singular_values[a].partial_cmp(&svd.singular_values[b]).unwrap())
            .unwrap();
        let mut xi_min: DVector<f64> = v_t.row(j).transpose();
        crate::linalg::normalize_max(&mut xi_min);
        Ok(ManufacturedCase { sigma_t, sigma_a, epsilon, quad, lambda_min, xi_min, matrix })
    }

    fn envelope(&self, x: f64, y: f64) -> f64 {
        (self.lambda_min * (SQRT3_2 * x + 0.5 * y)).exp()
    }

    pub fn reference(&self, x: f64, y: f64, t: f64) -> Vec<f64> {
        let s = t / (1.0 + t) * (1.0 + self.epsilon * x) * self.envelope(x, y);
        self.xi_min.iter().map(|v| s * v).collect()
    }

    pub fn source_at(&self, x: f64, y: f64, t: f64) -> Vec<f64> {
        let e = self.envelope(x, y);
        let a = (1.0 + self.epsilon * x) / ((1.0 + t) * (1.0 + t));
        let b = t / (1.0 + t);
        (0..self.quad.len()).map(|m| (a + b * self.quad.c[m]) * self.xi_min[m] * e).collect()
    }

    /// Eigen residual `‖Aξ − λξ‖_∞`.
    pub fn residual(&self) -> f64 {
        (&self.matrix * &self.xi_min - &self.xi_min * self.lambda_min).amax()
    }
}

impl ProblemData for ManufacturedCase {
    fn source(&self, x: f64, y: f64, t: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.source_at(x, y, t));
    }
    fn boundary(&self, x: f64, y: f64, t: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.reference(x, y, t));
    }
}

/// `(h/√M)·‖samples‖₂` for `I×I` cell-center samples of a `4M` field.
pub fn norm_of_samples(samples: &[f64], n: usize, m: usize) -> f64 {
    let h = 1.0 / n as f64;
    h / (m as f64).sqrt() * samples.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Discrete `‖f‖_{I×I}`; `samples` holds `4M` values per cell center, row-major by cell.
pub fn error_norm(samples: &[f64], n: usize, m: usize) -> Result<f64> {
    if samples.len() != n * n * 4 * m {
        return Err(RteError::DimensionMismatch { expected: n * n * 4 * m, got: samples.len() });
    }
    Ok(norm_of_samples(samples, n, m))
}

/// Scalar flux at cell centers promoted to all `4M` components.
pub fn promote_scalar(samples: &[f64], quad: &QuadratureSet) -> Vec<f64> {
    let n = quad.len();
    samples.chunks(n).flat_map(|c| std::iter::repeat(quad.scalar_flux(c)).take(n)).collect()
}

pub fn rank_ratio(bases: &[LocalBasisSet]) -> f64 {
    let kept: usize = bases.iter().map(|b| b.retained.len()).sum();
    let total: usize = bases.iter().map(|b| b.n_modes()).sum();
    kept as f64 / total as f64
}

/// Relative angular and scalar errors of `field` against cell-center reference samples.
pub fn relative_errors(solver: &TransportSolver, field: &SolutionField, reference: &[f64]) -> (f64, f64) {
    let disc = &solver.disc;
    let (n, m) = (disc.mesh.n, disc.quad.m());
    let num = field.center_values(disc);
    let diff: Vec<f64> = num.iter().zip(reference).map(|(a, b)| a - b).collect();
    let ang = norm_of_samples(&diff, n, m) / norm_of_samples(reference, n, m);
    let ref_s = promote_scalar(reference, &disc.quad);
    let num_s = promote_scalar(&num, &disc.quad);
    let diff_s: Vec<f64> = num_s.iter().zip(&ref_s).map(|(a, b)| a - b).collect();
    let sca = norm_of_samples(&diff_s, n, m) / norm_of_samples(&ref_s, n, m);
    (ang, sca)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub m: usize,
    pub epsilon: f64,
    pub n: usize,
    pub angular: f64,
    pub scalar: f64,
    pub rank_ratio: f64,
    pub iterations: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderRow {
    pub m: usize,
    pub epsilon: f64,
    pub n_coarse: usize,
    pub n_fine: usize,
    pub angular: f64,
    pub scalar: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorReport {
    pub errors: Vec<ErrorRow>,
    pub orders: Vec<OrderRow>,
}

pub fn fitted_order(e_coarse: f64, e_fine: f64, ratio: f64) -> f64 {
    (e_coarse / e_fine).ln() / ratio.ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOptions {
    pub sigma_t: f64,
    pub sigma_a: f64,
    pub delta: f64,
    pub t_final: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub mode: SteppingMode,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            sigma_t: 1.0,
            sigma_a: 0.5,
            delta: 1e-3,
            t_final: 1.0,
            tol: 1e-10,
            max_iters: 10_000,
            mode: SteppingMode::CellAverage,
        }
    }
}

/// One manufactured run at `I = n` with `Δt = 1/n`.
pub fn manufactured_run(m: usize, epsilon: f64, n: usize, opts: &StudyOptions) -> Result<ErrorRow> {
    let start = std::time::Instant::now();
    let quad = build_quadrature(1, m)?;
    let case = ManufacturedCase::new(opts.sigma_t, opts.sigma_a, epsilon, quad)?;
    let params = DiscretizationParams { n, levels: default_levels(n), n_polar: 1, n_azimuth: m, g: 0.0, delta: opts.delta };
    let disc = Discretization::new(params, &MaterialField::constant(opts.sigma_t, opts.sigma_a, epsilon))?;
    let solver = TransportSolver::new(disc)?;
    let mut cfg = TimeSteppingConfig::new(1.0 / n as f64, opts.t_final, opts.mode);
    cfg.tol = opts.tol;
    cfg.max_iters = opts.max_iters;
    let run = solver.run_to_final(&case, &cfg)?;
    let reference: Vec<f64> = (0..n * n)
        .flat_map(|c| {
            let (x, y) = solver.disc.mesh.cell_geometry(c).center();
            case.reference(x, y, opts.t_final)
        })
        .collect();
    let (angular, scalar) = relative_errors(&solver, run.last(), &reference);
    Ok(ErrorRow {
        m,
        epsilon,
        n,
        angular,
        scalar,
        rank_ratio: solver.disc.rank_ratio(),
        iterations: run.total_iterations(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Every `(M, ε, h)` combination, with orders between consecutive `h`.
pub fn convergence_study(ms: &[usize], epsilons: &[f64], ns: &[usize], opts: &StudyOptions) -> Result<ErrorReport> {
    let mut report = ErrorReport::default();
    for &m in ms {
        for &eps in epsilons {
            let rows = ns.iter().map(|&n| manufactured_run(m, eps, n, opts)).collect::<Result<Vec<_>>>()?;
            for w in rows.windows(2) {
                let ratio = w[1].n as f64 / w[0].n as f64;
                report.orders.push(OrderRow {
                    m,
                    epsilon: eps,
                    n_coarse: w[0].n,
                    n_fine: w[1].n,
                    angular: fitted_order(w[0].angular, w[1].angular, ratio),
                    scalar: fitted_order(w[0].scalar, w[1].scalar, ratio),
                });
            }
            report.errors.extend(rows);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    Lattice,
    Bufferzone,
}

impl Benchmark {
    pub fn field(self) -> MaterialField {
        match self {
            Benchmark::Lattice => MaterialField::lattice(crate::materials::default_lattice_rects()),
            Benchmark::Bufferzone => MaterialField::Bufferzone,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub rank_ratio: f64,
    pub angular: f64,
    pub scalar: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Cell-center samples of the δ=0 reference at `T`.
    pub reference: Vec<f64>,
    /// Cell-center samples at `T` per δ, same order as `rows`.
    pub fields: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub n: usize,
    pub m: usize,
    pub dt: f64,
    pub t_final: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub mode: SteppingMode,
}

fn benchmark_run(field: &MaterialField, delta: f64, o: &SweepOptions) -> Result<(TransportSolver, SolutionField, usize)> {
    let params = DiscretizationParams {
        n: o.n,
        levels: default_levels(o.n),
        n_polar: 1,
        n_azimuth: o.m,
        g: 0.0,
        delta,
    };
    let solver = TransportSolver::new(Discretization::new(params, field)?)?;
    let mut cfg = TimeSteppingConfig::new(o.dt, o.t_final, o.mode);
    cfg.tol = o.tol;
    cfg.max_iters = o.max_iters;
    let run = solver.run_to_final(&IsotropicInflow, &cfg)?;
    let iters = run.total_iterations();
    let last = run.fields.into_iter().next_back().unwrap();
    Ok((solver, last, iters))
}

/// Low-rank runs against the δ=0 run of the same discretization.
pub fn rank_sweep(bench: Benchmark, deltas: &[f64], o: &SweepOptions) -> Result<SweepResult> {
    let field = bench.field();
    let (ref_solver, ref_field, _) = benchmark_run(&field, 0.0, o)?;
    let reference = ref_field.center_values(&ref_solver.disc);
    let mut rows = Vec::new();
    let mut fields = Vec::new();
    for &delta in deltas {
        let (solver, last, iterations) = benchmark_run(&field, delta, o)?;
        let (angular, scalar) = relative_errors(&solver, &last, &reference);
        rows.push(SweepRow { delta, rank_ratio: solver.disc.rank_ratio(), angular, scalar, iterations });
        fields.push(last.center_values(&solver.disc));
    }
    Ok(SweepResult { rows, reference, fields })
}

/// Number formatting used by every CSV file: 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{}", header.join(","))?;
    for r in rows {
        writeln!(f, "{}", r.join(","))?;
    }
    f.flush()?;
    Ok(())
}

pub fn write_error_table(path: &Path, report: &ErrorReport) -> Result<()> {
    let rows: Vec<Vec<String>> = report
        .errors
        .iter()
        .map(|r| {
            vec![
                r.m.to_string(),
                fmt_num(r.epsilon),
                fmt_num(1.0 / r.n as f64),
                fmt_num(r.angular),
                fmt_num(r.scalar),
                fmt_num(r.rank_ratio),
                r.iterations.to_string(),
            ]
        })
        .collect();
    write_csv(path, &["M", "epsilon", "h", "angular_error", "scalar_error", "rank_ratio", "iterations"], &rows)
}

pub fn write_order_table(path: &Path, report: &ErrorReport) -> Result<()> {
    let rows: Vec<Vec<String>> = report
        .orders
        .iter()
        .map(|r| {
            vec![
                r.m.to_string(),
                fmt_num(r.epsilon),
                fmt_num(1.0 / r.n_coarse as f64),
                fmt_num(1.0 / r.n_fine as f64),
                fmt_num(r.angular),
                fmt_num(r.scalar),
            ]
        })
        .collect();
    write_csv(path, &["M", "epsilon", "h_coarse", "h_fine", "angular_order", "scalar_order"], &rows)
}

pub fn write_sweep_table(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![fmt_num(r.delta), fmt_num(r.rank_ratio), fmt_num(r.angular), fmt_num(r.scalar), r.iterations.to_string()])
        .collect();
    write_csv(path, &["delta", "rank_ratio", "angular_error", "scalar_error", "iterations"], &rows)
}

/// Scalar flux at cell centers as an `I × I` grid, one row per `y`.
pub fn write_scalar_grid(path: &Path, samples: &[f64], n: usize, quad: &QuadratureSet) -> Result<()> {
    let nd = quad.len();
    let rows: Vec<Vec<String>> = (0..n)
        .map(|iy| (0..n).map(|ix| fmt_num(quad.scalar_flux(&samples[(iy * n + ix) * nd..(iy * n + ix + 1) * nd]))).collect())
        .collect();
    let header: Vec<String> = (0..n).map(|ix| format!("x{ix}")).collect();
    let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    write_csv(path, &header, &rows)
}
