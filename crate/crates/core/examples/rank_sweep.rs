//! Error against rank ratio for the lattice medium.

use rte::experiments::{rank_sweep, Benchmark, SweepOptions};
use rte::solver::SteppingMode;

fn main() -> rte::Result<()> {
    let opts = SweepOptions { n: 8, m: 2, dt: 1.0 / 16.0, t_final: 0.5, tol: 1e-10, max_iters: 10_000, mode: SteppingMode::CellAverage };
    let res = rank_sweep(Benchmark::Lattice, &[0.3, 1e-2, 1e-3, 0.0], &opts)?;
    println!("   delta  rank ratio   angular      scalar   iterations");
    for r in &res.rows {
        println!("{:8.0e}  {:10.4}  {:.3e}  {:.3e}  {:6}", r.delta, r.rank_ratio, r.angular, r.scalar, r.iterations);
    }
    Ok(())
}
