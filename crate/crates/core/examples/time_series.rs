//! Time marching on the bufferzone medium with a switched-on inflow.
//!
//! Prints the iteration count per step and the scalar flux at the center.

use rte::discretization::{Discretization, DiscretizationParams};
use rte::experiments::Benchmark;
use rte::mesh::default_levels;
use rte::solver::{IsotropicInflow, SteadySolver, SteppingMode, TimeSteppingConfig, TransportSolver};

fn main() -> rte::Result<()> {
    let n = 16;
    let params = DiscretizationParams { n, levels: default_levels(n), n_polar: 1, n_azimuth: 2, g: 0.0, delta: 1e-3 };
    let solver = TransportSolver::new(Discretization::new(params, &Benchmark::Bufferzone.field())?)?;
    println!("rank ratio {:.4}", solver.disc.rank_ratio());
    let cfg = TimeSteppingConfig::new(1.0 / 8.0, 1.0, SteppingMode::CellAverage);
    let series = solver.run_time_series(&IsotropicInflow, &cfg)?;
    for (k, (field, rep)) in series.fields.iter().skip(1).zip(&series.reports).enumerate() {
        let phi = solver.disc.quad.scalar_flux(&field.evaluate(&solver.disc, 0.5, 0.5));
        println!("step {:2}  t={:.3}  iterations {:4}  phi(0.5,0.5)={phi:.6}", k + 1, field.time, rep.iterations);
    }
    println!("{} flops in total", series.flops);
    Ok(())
}
