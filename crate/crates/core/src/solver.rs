//! Steady solves in the compressed space and implicit midpoint time stepping.

use crate::discretization::Discretization;
use crate::error::{Result, RteError};
use crate::linalg::gemv_acc;
use crate::materials::gauss_points;
use crate::rsm::MultilevelFactorization;
use crate::tfps_basis::Edge;
use rayon::prelude::*;

/// Piecewise particular constants plus fundamental-solution coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub n_dirs: usize,
    pub n_modes: usize,
    pub time: f64,
    /// `cells × 4M`
    pub particular: Vec<f64>,
    /// `cells × 8M`, nonzero only on retained modes.
    pub slow: Vec<f64>,
    /// `cells × 8M`, nonzero only on discarded modes.
    pub fast: Vec<f64>,
}

impl SolutionField {
    pub fn zeros(n_cells: usize, n_dirs: usize) -> Self {
        SolutionField {
            n_dirs,
            n_modes: 2 * n_dirs,
            time: 0.0,
            particular: vec![0.0; n_cells * n_dirs],
            slow: vec![0.0; n_cells * 2 * n_dirs],
            fast: vec![0.0; n_cells * 2 * n_dirs],
        }
    }

    pub fn n_cells(&self) -> usize {
        self.particular.len() / self.n_dirs
    }

    pub fn v(&self, c: usize) -> &[f64] {
        &self.particular[c * self.n_dirs..(c + 1) * self.n_dirs]
    }

    /// `v_C + Σ_k coef_k · factor(k) · ξ_k` without intermediate buffers.
    fn combine_modes(&self, disc: &Discretization, c: usize, with_fast: bool, factor: impl Fn(usize) -> f64) -> Vec<f64> {
        let b = &disc.bases[c];
        let n = self.n_dirs;
        let xi = b.modes.xi.as_slice();
        let r = c * self.n_modes;
        let mut out = self.v(c).to_vec();
        for k in 0..self.n_modes {
            let coef = if with_fast { self.slow[r + k] + self.fast[r + k] } else { self.slow[r + k] };
            if coef != 0.0 {
                let s = coef * factor(k);
                for (o, v) in out.iter_mut().zip(&xi[k * n..(k + 1) * n]) {
                    *o += s * v;
                }
            }
        }
        out
    }

    /// Value in cell `c` at a point of its closure.
    pub fn evaluate_in_cell(&self, disc: &Discretization, c: usize, x: f64, y: f64) -> Vec<f64> {
        let b = &disc.bases[c];
        self.combine_modes(disc, c, true, |k| b.factor(k, x, y))
    }

    /// Value at a point; points on interfaces take the lower/left cell's value
    /// only at the domain's upper edges.
    pub fn evaluate(&self, disc: &Discretization, x: f64, y: f64) -> Vec<f64> {
        self.evaluate_in_cell(disc, disc.mesh.locate(x, y), x, y)
    }

    /// Trace of cell `c` at the midpoint of edge `e`.
    pub fn edge_trace(&self, disc: &Discretization, c: usize, e: Edge, with_fast: bool) -> Vec<f64> {
        let b = &disc.bases[c];
        self.combine_modes(disc, c, with_fast, |k| b.edge_factor(k, e))
    }

    pub fn cell_average(&self, disc: &Discretization, c: usize) -> Vec<f64> {
        let b = &disc.bases[c];
        self.combine_modes(disc, c, true, |k| b.mean[k])
    }

    pub fn center_value(&self, disc: &Discretization, c: usize) -> Vec<f64> {
        let b = &disc.bases[c];
        self.combine_modes(disc, c, true, |k| b.center_magnitude[k])
    }

    /// All cell-center values, `cells × 4M`.
    pub fn center_values(&self, disc: &Discretization) -> Vec<f64> {
        (0..self.n_cells()).flat_map(|c| self.center_value(disc, c)).collect()
    }

    pub fn cell_averages(&self, disc: &Discretization) -> Vec<f64> {
        (0..self.n_cells()).flat_map(|c| self.cell_average(disc, c)).collect()
    }

    /// `self ← a·self + b·other` on every stored coefficient.
    pub fn combine(&mut self, a: f64, other: &SolutionField, b: f64) {
        for (x, y) in self.particular.iter_mut().zip(&other.particular) {
            *x = a * *x + b * y;
        }
        for (x, y) in self.slow.iter_mut().zip(&other.slow) {
            *x = a * *x + b * y;
        }
        for (x, y) in self.fast.iter_mut().zip(&other.fast) {
            *x = a * *x + b * y;
        }
    }
}

/// Per-cell right-hand sides of `A_C v = rhs` and inflow data at boundary
/// fine-interface midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyProblem {
    /// `cells × 4M`
    pub rhs: Vec<f64>,
    /// Indexed by fine interface; full `4M` vectors on boundary interfaces,
    /// empty elsewhere. Only incoming components are used.
    pub boundary: Vec<Vec<f64>>,
}

/// Source, inflow and initial data of a time-dependent problem.
pub trait ProblemData: Sync {
    fn source(&self, x: f64, y: f64, t: f64, out: &mut [f64]);
    fn boundary(&self, x: f64, y: f64, t: f64, out: &mut [f64]);
    fn initial(&self, x: f64, y: f64, out: &mut [f64]) {
        let _ = (x, y);
        out.fill(0.0);
    }
}

/// Zero source, zero inflow, zero initial state.
pub struct ZeroData;

impl ProblemData for ZeroData {
    fn source(&self, _: f64, _: f64, _: f64, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn boundary(&self, _: f64, _: f64, _: f64, out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Zero source and initial state with isotropic inflow `t/(1+t)`.
pub struct IsotropicInflow;

impl ProblemData for IsotropicInflow {
    fn source(&self, _: f64, _: f64, _: f64, out: &mut [f64]) {
        out.fill(0.0);
    }
    fn boundary(&self, _: f64, _: f64, t: f64, out: &mut [f64]) {
        out.fill(t / (1.0 + t));
    }
}

/// Isotropic data given by expressions in `x`, `y`, `t`.
pub struct ExpressionData {
    pub source: crate::expr::Expr,
    pub boundary: crate::expr::Expr,
    pub initial: crate::expr::Expr,
}

impl ProblemData for ExpressionData {
    fn source(&self, x: f64, y: f64, t: f64, out: &mut [f64]) {
        out.fill(self.source.eval(x, y, t));
    }
    fn boundary(&self, x: f64, y: f64, t: f64, out: &mut [f64]) {
        out.fill(self.boundary.eval(x, y, t));
    }
    fn initial(&self, x: f64, y: f64, out: &mut [f64]) {
        out.fill(self.initial.eval(x, y, 0.0));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteppingMode {
    CellAverage,
    CellCenter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSteppingConfig {
    pub dt: f64,
    pub t_final: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub mode: SteppingMode,
    pub reconstruct: bool,
}

impl TimeSteppingConfig {
    pub fn new(dt: f64, t_final: f64, mode: SteppingMode) -> Self {
        TimeSteppingConfig { dt, t_final, tol: 1e-10, max_iters: 10_000, mode, reconstruct: true }
    }

    /// Number of steps; `T/Δt` must be an integer.
    pub fn steps(&self) -> Result<usize> {
        self.validate()?;
        let n = (self.t_final / self.dt).round();
        if (n * self.dt - self.t_final).abs() > 1e-9 * self.t_final.max(1.0) {
            return Err(RteError::config("time.T", "T/dt must be an integer"));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.dt <= self.t_final) {
            return Err(RteError::config("time.dt", "need 0 < dt <= T"));
        }
        if !(self.tol > 0.0) {
            return Err(RteError::config("time.tol", "must be positive"));
        }
        if self.max_iters == 0 {
            return Err(RteError::config("time.max_iters", "must be positive"));
        }
        if self.mode == SteppingMode::CellAverage && self.dt >= 1.0 {
            return Err(RteError::config(
                "time.dt",
                "cell_average mode relaxes with weight (1 - dt) and needs dt < 1; use mode cell_center",
            ));
        }
        Ok(())
    }
}

/// Iteration record of one time step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub iterations: usize,
    /// Relative successive differences, one per iteration.
    pub residuals: Vec<f64>,
}

/// A discretization with its factorization; the online solver.
pub struct TransportSolver {
    pub disc: Discretization,
    pub fact: MultilevelFactorization,
    has_fast: bool,
}

/// `v_C = A_C⁻¹ rhs_C` for every cell.
pub fn solve_particular(disc: &Discretization, rhs: &[f64]) -> Vec<f64> {
    let n = disc.n_dirs();
    let mut v = vec![0.0; rhs.len()];
    v.par_chunks_mut(n).enumerate().for_each(|(c, out)| {
        gemv_acc(&disc.cell_systems[c].a_inv, &rhs[c * n..(c + 1) * n], out, 1.0);
    });
    v
}

/// `L_h` of the particular part, `A_C v_C` per cell.
pub fn apply_collision(disc: &Discretization, v: &[f64]) -> Vec<f64> {
    let n = disc.n_dirs();
    let mut out = vec![0.0; v.len()];
    out.par_chunks_mut(n).enumerate().for_each(|(c, o)| {
        gemv_acc(&disc.cell_systems[c].a, &v[c * n..(c + 1) * n], o, 1.0);
    });
    out
}

/// Samples inflow data at every boundary fine-interface midpoint.
pub fn sample_boundary(disc: &Discretization, data: &dyn ProblemData, t: f64) -> Vec<Vec<f64>> {
    let n = disc.n_dirs();
    disc.mesh
        .interfaces
        .iter()
        .map(|f| {
            if f.is_boundary() {
                let mut out = vec![0.0; n];
                data.boundary(f.midpoint.0, f.midpoint.1, t, &mut out);
                out
            } else {
                Vec::new()
            }
        })
        .collect()
}

/// 3×3 Gauss cell means of the source at time `t`, `cells × 4M`.
pub fn source_means(disc: &Discretization, data: &dyn ProblemData, t: f64) -> Vec<f64> {
    let n = disc.n_dirs();
    let mut out = vec![0.0; disc.mesh.n_cells() * n];
    out.par_chunks_mut(n).enumerate().for_each(|(c, o)| {
        let g = disc.mesh.cell_geometry(c);
        let mut tmp = vec![0.0; n];
        for (x, y, w) in gauss_points(g.x0, g.y0, g.h) {
            data.source(x, y, t, &mut tmp);
            for (a, b) in o.iter_mut().zip(&tmp) {
                *a += w * b;
            }
        }
    });
    out
}

/// Source at cell centers at time `t`.
pub fn source_centers(disc: &Discretization, data: &dyn ProblemData, t: f64) -> Vec<f64> {
    let n = disc.n_dirs();
    let mut out = vec![0.0; disc.mesh.n_cells() * n];
    out.par_chunks_mut(n).enumerate().for_each(|(c, o)| {
        let (x, y) = disc.mesh.cell_geometry(c).center();
        data.source(x, y, t, o);
    });
    out
}

impl TransportSolver {
    pub fn new(disc: Discretization) -> Result<Self> {
        let fact = crate::rsm::factorize(&disc)?;
        Ok(Self::with_factorization(disc, fact))
    }

    pub fn with_factorization(disc: Discretization, fact: MultilevelFactorization) -> Self {
        let has_fast = disc.bases.iter().any(|b| b.retained.len() < b.n_modes());
        TransportSolver { disc, fact, has_fast }
    }

    /// Level-0 right-hand side for given particular constants and inflow data.
    pub fn interface_rhs(&self, particular: &[f64], boundary: &[Vec<f64>]) -> Vec<f64> {
        let disc = &self.disc;
        let n = disc.n_dirs();
        let lay = &self.fact.bases[0].layout;
        let mut rhs = vec![0.0; lay.n_rows()];
        let mut r = 0;
        while r < lay.rows.len() {
            let (i, _) = lay.rows[r];
            let f = &disc.mesh.interfaces[i];
            let proj = &disc.projections[i];
            let ns = proj.n_slow();
            let l: Vec<f64> = match f.sole_cell() {
                Some(c) => proj.components.iter().map(|&m| boundary[i][m] - particular[c * n + m]).collect(),
                None => {
                    let (lo, up) = (f.lower.unwrap(), f.upper.unwrap());
                    (0..n).map(|m| particular[lo * n + m] - particular[up * n + m]).collect()
                }
            };
            gemv_acc(&proj.projector, &l, &mut rhs[r..r + ns], 1.0);
            r += ns;
        }
        rhs
    }

    /// Slow coefficients for fixed particular constants.
    pub fn solve_fundamental(&self, field: &mut SolutionField, boundary: &[Vec<f64>], flops: &mut u64) -> Result<()> {
        let rhs = self.interface_rhs(&field.particular, boundary);
        let coords = self.fact.apply_inverse_counted(&rhs, flops)?;
        let raw = self.fact.raw_coefficients(&coords);
        let nm = field.n_modes;
        field.slow.fill(0.0);
        for (c, vals) in raw.into_iter().enumerate() {
            for (&k, v) in self.disc.bases[c].retained.iter().zip(vals) {
                field.slow[c * nm + k] = v;
            }
        }
        Ok(())
    }

    /// Cancels the fast components of the midpoint residuals by activating
    /// the discarded modes anchored at each interface.
    pub fn reconstruct_layers(&self, field: &mut SolutionField, boundary: &[Vec<f64>]) {
        field.fast.fill(0.0);
        if !self.has_fast {
            return;
        }
        let disc = &self.disc;
        let nm = field.n_modes;
        let updates: Vec<Vec<(usize, f64)>> = disc
            .mesh
            .interfaces
            .par_iter()
            .map(|f| {
                let proj = &disc.projections[f.id];
                if proj.fast_modes.is_empty() {
                    return Vec::new();
                }
                let resid: Vec<f64> = match f.sole_cell() {
                    Some(c) => {
                        let t = field.edge_trace(disc, c, f.edge_of(c), false);
                        proj.components.iter().map(|&m| boundary[f.id][m] - t[m]).collect()
                    }
                    None => {
                        let (lo, up) = (f.lower.unwrap(), f.upper.unwrap());
                        let tl = field.edge_trace(disc, lo, f.edge_of(lo), false);
                        let tu = field.edge_trace(disc, up, f.edge_of(up), false);
                        tu.iter().zip(&tl).map(|(a, b)| a - b).collect()
                    }
                };
                let beta = proj.expand(&resid);
                let ns = proj.n_slow();
                proj.fast_modes
                    .iter()
                    .enumerate()
                    .map(|(j, &(c, k))| {
                        let sign = if f.sole_cell().is_some() || f.lower == Some(c) { 1.0 } else { -1.0 };
                        (c * nm + k, sign * beta[ns + j])
                    })
                    .collect()
            })
            .collect();
        for list in updates {
            for (idx, v) in list {
                field.fast[idx] = v;
            }
        }
    }
}

/// A way of fixing the fundamental-solution coefficients for given particular
/// constants and inflow data. Time stepping is written once on top of it.
pub trait SteadySolver: Sync {
    fn discretization(&self) -> &Discretization;

    fn fundamental(&self, field: &mut SolutionField, boundary: &[Vec<f64>], reconstruct: bool, flops: &mut u64) -> Result<()>;

    /// Particular part, slow coefficients and (optionally) layer reconstruction.
    fn steady_solve(&self, problem: &SteadyProblem, reconstruct: bool) -> Result<SolutionField> {
        let mut flops = 0;
        self.steady_solve_counted(problem, reconstruct, &mut flops)
    }

    fn steady_solve_counted(&self, problem: &SteadyProblem, reconstruct: bool, flops: &mut u64) -> Result<SolutionField> {
        let mut field = SolutionField::zeros(self.discretization().mesh.n_cells(), self.discretization().n_dirs());
        field.particular = solve_particular(self.discretization(), &problem.rhs);
        self.fundamental(&mut field, &problem.boundary, reconstruct, flops)?;
        Ok(field)
    }

    /// Initial field: particular constants from cell-center samples.
    fn initial_field(&self, data: &dyn ProblemData) -> SolutionField {
        let disc = self.discretization();
        let n = disc.n_dirs();
        let mut field = SolutionField::zeros(disc.mesh.n_cells(), n);
        for c in 0..disc.mesh.n_cells() {
            let (x, y) = disc.mesh.cell_geometry(c).center();
            data.initial(x, y, &mut field.particular[c * n..(c + 1) * n]);
        }
        field
    }

    /// Discrete `‖·‖_{I×I}` of cell-center samples.
    fn center_norm(&self, samples: &[f64]) -> f64 {
        crate::experiments::norm_of_samples(samples, self.discretization().mesh.n, self.discretization().quad.m())
    }

    /// One midpoint step with the relaxed cell-average iteration.
    fn midpoint_step_cell_average(
        &self,
        prev: &SolutionField,
        data: &dyn ProblemData,
        cfg: &TimeSteppingConfig,
        flops: &mut u64,
    ) -> Result<(SolutionField, StepReport)> {
        let disc = self.discretization();
        let dt = cfg.dt;
        let t_new = prev.time + dt;
        let q_bar = source_means(disc, data, prev.time + 0.5 * dt);
        let boundary = sample_boundary(disc, data, t_new);
        let avg_prev = prev.cell_averages(disc);
        let l_prev = apply_collision(disc, &prev.particular);
        let base: Vec<f64> = q_bar.iter().zip(&l_prev).map(|(q, l)| 2.0 * q - l).collect();

        let mut cur = prev.clone();
        cur.time = t_new;
        let mut avg = avg_prev.clone();
        let mut center = prev.center_values(disc);
        let mut report = StepReport::default();
        for _ in 0..cfg.max_iters {
            let rhs: Vec<f64> = base
                .iter()
                .zip(avg.iter().zip(&avg_prev))
                .map(|(b, (a, ap))| b - 2.0 * (a - ap) / dt)
                .collect();
            let ds = self.steady_solve_counted(&SteadyProblem { rhs, boundary: boundary.clone() }, cfg.reconstruct, flops)?;
            let avg_ds = ds.cell_averages(disc);
            let center_ds = ds.center_values(disc);
            cur.combine(1.0 - dt, &ds, dt);
            let mut diff = Vec::with_capacity(center.len());
            for ((c, cd), a) in center.iter_mut().zip(&center_ds).zip(avg.iter_mut().zip(&avg_ds)) {
                let new = (1.0 - dt) * *c + dt * cd;
                diff.push(new - *c);
                *c = new;
                *a.0 = (1.0 - dt) * *a.0 + dt * a.1;
            }
            let res = relative(self.center_norm(&diff), self.center_norm(&center));
            report.iterations += 1;
            report.residuals.push(res);
            if res <= cfg.tol {
                return Ok((cur, report));
            }
            if !res.is_finite() {
                break;
            }
        }
        Err(RteError::NoConvergence { iters: report.iterations, residual: *report.residuals.last().unwrap_or(&f64::NAN) })
    }

    /// One midpoint step with the cell-center iteration.
    fn midpoint_step_cell_center(
        &self,
        prev: &SolutionField,
        data: &dyn ProblemData,
        cfg: &TimeSteppingConfig,
        flops: &mut u64,
    ) -> Result<(SolutionField, StepReport)> {
        let disc = self.discretization();
        let n = disc.n_dirs();
        let nm = 2 * n;
        let dt = cfg.dt;
        let t_new = prev.time + dt;
        let q_c = source_centers(disc, data, prev.time + 0.5 * dt);
        let boundary = sample_boundary(disc, data, t_new);
        let center_prev = prev.center_values(disc);
        let mut cur = prev.clone();
        cur.time = t_new;
        let mut center = center_prev.clone();
        let mut report = StepReport::default();
        let mut first = f64::NAN;
        for _ in 0..cfg.max_iters {
            let sum: Vec<f64> = cur.particular.iter().zip(&prev.particular).map(|(a, b)| 0.5 * (a + b)).collect();
            let l_mid = apply_collision(disc, &sum);
            let mut next = cur.clone();
            for c in 0..disc.mesh.n_cells() {
                let b = &disc.bases[c];
                let mut slow_center = vec![0.0; n];
                b.accumulate(&cur.slow[c * nm..(c + 1) * nm], &b.center_magnitude, &mut slow_center);
                for m in 0..n {
                    let target = center_prev[c * n + m] + dt * (q_c[c * n + m] - l_mid[c * n + m]);
                    next.particular[c * n + m] = target - slow_center[m];
                }
            }
            self.fundamental(&mut next, &boundary, cfg.reconstruct, flops)?;
            let new_center = next.center_values(disc);
            let diff: Vec<f64> = new_center.iter().zip(&center).map(|(a, b)| a - b).collect();
            let res = relative(self.center_norm(&diff), self.center_norm(&new_center));
            center = new_center;
            cur = next;
            report.iterations += 1;
            report.residuals.push(res);
            if report.iterations == 1 {
                first = res;
            }
            if res <= cfg.tol {
                return Ok((cur, report));
            }
            if !res.is_finite() || (report.iterations > 3 && res > 1e3 * first.max(cfg.tol)) {
                break;
            }
        }
        Err(RteError::NoConvergence { iters: report.iterations, residual: *report.residuals.last().unwrap_or(&f64::NAN) })
    }

    fn step(
        &self,
        prev: &SolutionField,
        data: &dyn ProblemData,
        cfg: &TimeSteppingConfig,
        flops: &mut u64,
    ) -> Result<(SolutionField, StepReport)> {
        match cfg.mode {
            SteppingMode::CellAverage => self.midpoint_step_cell_average(prev, data, cfg, flops),
            SteppingMode::CellCenter => self.midpoint_step_cell_center(prev, data, cfg, flops),
        }
    }

    /// Marches from the sampled initial state to `T`; returns every field
    /// (initial included) and the per-step iteration reports.
    fn run_time_series(&self, data: &dyn ProblemData, cfg: &TimeSteppingConfig) -> Result<TimeSeries> {
        let steps = cfg.steps()?;
        let mut fields = vec![self.initial_field(data)];
        let mut reports = Vec::with_capacity(steps);
        let mut flops = 0;
        for _ in 0..steps {
            let (next, rep) = self.step(fields.last().unwrap(), data, cfg, &mut flops)?;
            fields.push(next);
            reports.push(rep);
        }
        Ok(TimeSeries { fields, reports, flops })
    }

    /// Like [`run_time_series`](Self::run_time_series) but keeps only the final field.
    fn run_to_final(&self, data: &dyn ProblemData, cfg: &TimeSteppingConfig) -> Result<TimeSeries> {
        let steps = cfg.steps()?;
        let mut field = self.initial_field(data);
        let mut reports = Vec::with_capacity(steps);
        let mut flops = 0;
        for _ in 0..steps {
            let (next, rep) = self.step(&field, data, cfg, &mut flops)?;
            field = next;
            reports.push(rep);
        }
        Ok(TimeSeries { fields: vec![field], reports, flops })
    }
}

impl SteadySolver for TransportSolver {
    fn discretization(&self) -> &Discretization {
        &self.disc
    }

    fn fundamental(&self, field: &mut SolutionField, boundary: &[Vec<f64>], reconstruct: bool, flops: &mut u64) -> Result<()> {
        self.solve_fundamental(field, boundary, flops)?;
        if reconstruct {
            self.reconstruct_layers(field, boundary);
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub fields: Vec<SolutionField>,
    pub reports: Vec<StepReport>,
    pub flops: u64,
}

impl TimeSeries {
    pub fn last(&self) -> &SolutionField {
        self.fields.last().unwrap()
    }

    pub fn total_iterations(&self) -> usize {
        self.reports.iter().map(|r| r.iterations).sum()
    }
}

fn relative(num: f64, den: f64) -> f64 {
    if den > 0.0 { num / den } else { num }
}
