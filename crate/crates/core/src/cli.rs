//! Command-line front end. The `rte` binary only calls [`main`].

use crate::angular::build_quadrature;
use crate::config::{read_json, ConvergenceConfig, ProblemConfig, RunConfig, SweepConfig, ValidatedRun};
use crate::discretization::{Discretization, DiscretizationParams};
use crate::error::{Result, RteError};
use crate::experiments::{
    self, convergence_study, fmt_num, rank_sweep, write_error_table, write_order_table, write_scalar_grid,
    write_sweep_table, ManufacturedCase,
};
use crate::expr::Expr;
use crate::materials::{CellOptics, MaterialField};
use crate::oracle::full_order_steady_solve;
use crate::rsm::{self, dense_oracle_inverse, MultilevelFactorization};
use crate::solver::{ExpressionData, IsotropicInflow, ProblemData, SteadyProblem, SteadySolver, TransportSolver};
use crate::tfps_basis::eigen_systems;
use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "rte", version, about = "Multiscale time-dependent radiative transfer solver")]
pub struct Cli {
    /// Worker threads, 0 picks the number of cores.
    #[arg(long, default_value_t = 0, global = true)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Time series for one configuration.
    Run { config: PathBuf },
    /// Manufactured-solution error and order tables.
    Convergence { config: PathBuf },
    /// Error against rank ratio on a benchmark.
    Sweep { config: PathBuf },
    /// Oracle, dimension and eigen checks at desk scale.
    Verify {
        #[arg(long = "max-I", default_value_t = 8)]
        max_i: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Exit code for a failed verification.
pub const VERIFY_FAILED: i32 = 3;

pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if cli.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let out = match cli.command {
        Command::Run { config } => read_json::<RunConfig>(&config).and_then(|c| cmd_run(c.validate()?)).map(|_| 0),
        Command::Convergence { config } => read_json::<ConvergenceConfig>(&config).and_then(|c| cmd_convergence(&c)).map(|_| 0),
        Command::Sweep { config } => read_json::<SweepConfig>(&config).and_then(|c| cmd_sweep(&c)).map(|_| 0),
        Command::Verify { max_i, seed } => cmd_verify(max_i, seed).map(|checks| {
            if checks.iter().all(|c| c.pass) { 0 } else { VERIFY_FAILED }
        }),
    };
    match out {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Content key of everything the factorization depends on.
pub fn factorization_key(params: &DiscretizationParams, material_tag: &str) -> String {
    let text = format!(
        "rsmf-v{};I={};L={};np={};na={};g={:e};delta={:e};material={}",
        rsm::FORMAT_VERSION,
        params.n,
        params.levels,
        params.n_polar,
        params.n_azimuth,
        params.g,
        params.delta,
        material_tag
    );
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Loads the factorization from `cache_dir` when a matching file exists,
/// otherwise builds it and stores it there. Returns whether it was a hit.
pub fn cached_factorization(disc: &Discretization, cache_dir: Option<&Path>) -> Result<(MultilevelFactorization, bool)> {
    let Some(dir) = cache_dir else {
        return Ok((rsm::factorize(disc)?, false));
    };
    let key = factorization_key(&disc.params, &disc.material_tag);
    let path = dir.join(format!("{key}.rsmf"));
    if let Ok(f) = std::fs::File::open(&path) {
        // A stale or corrupt file is rebuilt rather than reported.
        if let Ok(fact) = rsm::read_factorization(std::io::BufReader::new(f), Some(&key)) {
            if fact.n == disc.mesh.n && fact.levels == disc.mesh.levels {
                return Ok((fact, true));
            }
        }
    }
    let fact = rsm::factorize(disc)?;
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!("{key}.rsmf.tmp{}", std::process::id()));
    {
        let f = std::fs::File::create(&tmp)?;
        rsm::write_factorization(&fact, &key, std::io::BufWriter::new(f))?;
    }
    std::fs::rename(&tmp, &path)?;
    Ok((fact, false))
}

fn cache_dir() -> Option<PathBuf> {
    std::env::var_os("RTE_CACHE_DIR").filter(|s| !s.is_empty()).map(PathBuf::from)
}

fn problem_data(run: &ValidatedRun, disc: &Discretization) -> Result<(Box<dyn ProblemData>, Option<ManufacturedCase>)> {
    Ok(match &run.config.problem {
        ProblemConfig::Benchmark => (Box::new(IsotropicInflow), None),
        ProblemConfig::Custom { source, boundary, initial } => (
            Box::new(ExpressionData {
                source: Expr::parse(source)?,
                boundary: Expr::parse(boundary)?,
                initial: Expr::parse_spatial(initial)?,
            }),
            None,
        ),
        ProblemConfig::Manufactured => {
            let MaterialField::Constant { sigma_t, sigma_a, epsilon } = run.field else {
                return Err(RteError::config("problem.kind", "manufactured needs a constant material"));
            };
            let case = ManufacturedCase::new(sigma_t, sigma_a, epsilon, disc.quad.clone())?;
            (Box::new(case.clone()), Some(case))
        }
    })
}

pub fn cmd_run(run: ValidatedRun) -> Result<serde_json::Value> {
    let dir = run.config.output.directory.clone();
    std::fs::create_dir_all(&dir)?;
    let t0 = Instant::now();
    let disc = Discretization::new(run.params.clone(), &run.field)?;
    let t_disc = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let (fact, cache_hit) = cached_factorization(&disc, cache_dir().as_deref())?;
    let t_fact = t1.elapsed().as_secs_f64();
    let solver = TransportSolver::with_factorization(disc, fact);
    let (data, case) = problem_data(&run, &solver.disc)?;

    let t2 = Instant::now();
    let cfg = &run.stepping;
    let steps = cfg.steps()?;
    let mut field = solver.initial_field(data.as_ref());
    let mut flops = 0u64;
    let mut iterations = Vec::with_capacity(steps);
    let mut artifacts = Vec::new();
    let mut snapshots = Vec::new();
    for k in 1..=steps {
        let (next, rep) = solver.step(&field, data.as_ref(), cfg, &mut flops)?;
        field = next;
        iterations.push(rep.iterations);
        if run.snapshot_steps.contains(&k) {
            let centers = field.center_values(&solver.disc);
            if run.config.output.scalar_flux {
                let name = format!("scalar_flux_step{k:05}.csv");
                write_scalar_grid(&dir.join(&name), &centers, solver.disc.mesh.n, &solver.disc.quad)?;
                artifacts.push(name);
            }
            let mut snap = json!({"step": k, "time": field.time});
            if let Some(case) = &case {
                let reference: Vec<f64> = (0..solver.disc.mesh.n_cells())
                    .flat_map(|c| {
                        let (x, y) = solver.disc.mesh.cell_geometry(c).center();
                        case.reference(x, y, field.time)
                    })
                    .collect();
                let (a, s) = experiments::relative_errors(&solver, &field, &reference);
                snap["angular_error"] = json!(a);
                snap["scalar_error"] = json!(s);
            }
            snapshots.push(snap);
        }
    }
    let t_solve = t2.elapsed().as_secs_f64();
    let fact = &solver.fact;
    let manifest = json!({
        "I": solver.disc.mesh.n,
        "L": solver.disc.mesh.levels,
        "directions": solver.disc.n_dirs(),
        "dim_F": fact.dim_f,
        "dim_G": fact.dim_g[1..],
        "rank_ratio": solver.disc.rank_ratio(),
        "material": solver.disc.material_tag,
        "steps": steps,
        "iterations": iterations,
        "total_iterations": iterations.iter().sum::<usize>(),
        "flops": flops,
        "storage": fact.storage(),
        "max_local_condition": fact.max_local_condition(),
        "coarse_condition": fact.coarse_condition,
        "factorization_cache_hit": cache_hit,
        "seed": run.config.seed,
        "seconds": {"discretize": t_disc, "factorize": t_fact, "solve": t_solve},
        "snapshots": snapshots,
        "artifacts": artifacts,
    });
    if run.config.output.manifest {
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).unwrap())?;
    }
    println!(
        "{} steps, {} iterations, rank ratio {:.4}, {:.2}s",
        steps,
        manifest["total_iterations"],
        solver.disc.rank_ratio(),
        t_disc + t_fact + t_solve
    );
    Ok(manifest)
}

pub fn cmd_convergence(c: &ConvergenceConfig) -> Result<experiments::ErrorReport> {
    let opts = c.options()?;
    std::fs::create_dir_all(&c.directory)?;
    let report = convergence_study(&c.m, &c.epsilon, &c.cells, &opts)?;
    write_error_table(&c.directory.join("errors.csv"), &report)?;
    write_order_table(&c.directory.join("orders.csv"), &report)?;
    println!("{:>3} {:>12} {:>8} {:>14} {:>14}", "M", "epsilon", "h", "angular", "scalar");
    for r in &report.errors {
        println!("{:>3} {:>12.6e} {:>8.5} {:>14.6e} {:>14.6e}", r.m, r.epsilon, 1.0 / r.n as f64, r.angular, r.scalar);
    }
    for o in &report.orders {
        println!(
            "order M={} eps={:e} h={}->{}: angular {:.3} scalar {:.3}",
            o.m,
            o.epsilon,
            1.0 / o.n_coarse as f64,
            1.0 / o.n_fine as f64,
            o.angular,
            o.scalar
        );
    }
    Ok(report)
}

pub fn cmd_sweep(c: &SweepConfig) -> Result<()> {
    std::fs::create_dir_all(&c.directory)?;
    let tag = match c.benchmark {
        experiments::Benchmark::Lattice => "lattice",
        experiments::Benchmark::Bufferzone => "bufferzone",
    };
    for &m in &c.m {
        let opts = c.options(m)?;
        let res = rank_sweep(c.benchmark, &c.delta, &opts)?;
        let quad = build_quadrature(1, m)?;
        write_sweep_table(&c.directory.join(format!("sweep_{tag}_M{m}.csv")), &res.rows)?;
        write_scalar_grid(&c.directory.join(format!("scalar_flux_{tag}_M{m}_reference.csv")), &res.reference, c.cells, &quad)?;
        for (i, f) in res.fields.iter().enumerate() {
            write_scalar_grid(&c.directory.join(format!("scalar_flux_{tag}_M{m}_delta{i}.csv")), f, c.cells, &quad)?;
        }
        for r in &res.rows {
            println!(
                "{tag} M={m} delta={} rank_ratio={} angular={} scalar={}",
                fmt_num(r.delta),
                fmt_num(r.rank_ratio),
                fmt_num(r.angular),
                fmt_num(r.scalar)
            );
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: String, value: f64, tol: f64) -> Self {
        Check { pass: value <= tol, name, value, tol }
    }
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let den = b.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    if den > 0.0 { num / den } else { num }
}

/// Oracle equivalence, dimension identities and eigen checks; one line per check.
pub fn cmd_verify(max_i: usize, seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for n in [4usize, 8, 16].into_iter().filter(|&n| n <= max_i.min(crate::oracle::MAX_CELLS_PER_AXIS)) {
        for levels in [1usize, 2] {
            if crate::mesh::build_hierarchy(n, levels).is_err() {
                continue;
            }
            let params = DiscretizationParams { n, levels, n_polar: 1, n_azimuth: 1, g: 0.0, delta: 0.0 };
            let disc = Discretization::new(params, &MaterialField::constant(1.0, 0.5, 0.1))?;
            let solver = TransportSolver::new(disc)?;
            let fact = &solver.fact;
            let oracle = dense_oracle_inverse(&solver.disc, &fact.bases[0])?;
            let v: Vec<f64> = (0..fact.n_rows(0)).map(|_| rng.random_range(-1.0..1.0)).collect();
            let e = max_rel(&fact.apply_inverse(&v)?, &oracle.solve(&v)?);
            checks.push(Check::new(format!("apply_inverse vs dense B0 (I={n}, L={levels})"), e, 1e-9));

            let nd = solver.disc.n_dirs();
            let rhs: Vec<f64> = (0..solver.disc.mesh.n_cells() * nd).map(|_| rng.random_range(-1.0..1.0)).collect();
            let boundary: Vec<Vec<f64>> = solver
                .disc
                .mesh
                .interfaces
                .iter()
                .map(|f| if f.is_boundary() { (0..nd).map(|_| rng.random_range(-1.0..1.0)).collect() } else { Vec::new() })
                .collect();
            let problem = SteadyProblem { rhs, boundary };
            let low = solver.steady_solve(&problem, true)?;
            let full = full_order_steady_solve(&solver.disc, &problem)?;
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for f in &solver.disc.mesh.interfaces {
                for c in [f.lower, f.upper].into_iter().flatten() {
                    a.extend(low.edge_trace(&solver.disc, c, f.edge_of(c), true));
                    b.extend(full.edge_trace(&solver.disc, c, f.edge_of(c), true));
                }
            }
            checks.push(Check::new(format!("pipeline vs full-order TFPS (I={n}, L={levels})"), max_rel(&a, &b), 1e-8));

            let mut gap = 0.0f64;
            for l in 1..=levels {
                gap = gap.max((fact.dim_f[l - 1] as f64 - (fact.dim_f[l] + fact.dim_g[l]) as f64).abs());
            }
            checks.push(Check::new(format!("|F(l-1)| = |F(l)| + |G(l)| (I={n}, L={levels})"), gap, 0.0));
        }
    }
    let (mut residual, mut pairing) = (0.0f64, 0.0f64);
    for draw in 0..20 {
        let m = 1 + draw % 3;
        let quad = build_quadrature(1, m)?;
        let g = if draw % 2 == 0 { 0.0 } else { rng.random_range(-0.5..0.5) };
        let kernel = crate::angular::discrete_kernel(&quad, g)?;
        let eps = 10f64.powf(rng.random_range(-2.5..0.0));
        let sigma_t = rng.random_range(0.5..2.0);
        let sigma_a = rng.random_range(0.05..1.0);
        let o = CellOptics::from_means(draw, sigma_t, sigma_a, eps);
        let (x, y) = eigen_systems(&o, &quad, &kernel)?;
        for s in [&x, &y] {
            residual = residual.max(s.residual);
            let mut up = s.eigenvalues.clone();
            let mut down: Vec<f64> = s.eigenvalues.iter().map(|v| -v).collect();
            up.sort_by(f64::total_cmp);
            down.sort_by(f64::total_cmp);
            let scale = up.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            pairing = pairing.max(up.iter().zip(&down).fold(0.0f64, |a, (p, q)| a.max((p - q).abs())) / scale);
        }
    }
    checks.push(Check::new("eigen residual (20 draws)".into(), residual, 1e-10));
    checks.push(Check::new("eigenvalue +/- pairing (20 draws)".into(), pairing, 1e-10));
    for c in &checks {
        println!("{} {}: {:.3e} (tol {:.0e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.tol);
    }
    Ok(checks)
}
