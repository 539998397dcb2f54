//! One steady solve with isotropic inflow on the lattice medium.
//!
//! The low-rank pipeline is compared with the uncompressed reference at
//! every fine interface midpoint.

use rte::discretization::{Discretization, DiscretizationParams};
use rte::experiments::Benchmark;
use rte::oracle::full_order_steady_solve;
use rte::solver::{SteadyProblem, SteadySolver, TransportSolver};

fn main() -> rte::Result<()> {
    let params = DiscretizationParams { n: 8, levels: 2, n_polar: 1, n_azimuth: 1, g: 0.0, delta: 0.0 };
    let solver = TransportSolver::new(Discretization::new(params, &Benchmark::Lattice.field())?)?;
    let disc = &solver.disc;
    let nd = disc.n_dirs();
    let problem = SteadyProblem {
        rhs: vec![0.0; disc.mesh.n_cells() * nd],
        boundary: disc.mesh.interfaces.iter().map(|f| if f.is_boundary() { vec![1.0; nd] } else { Vec::new() }).collect(),
    };
    let low = solver.steady_solve(&problem, true)?;
    let full = full_order_steady_solve(disc, &problem)?;
    let mut worst = 0.0f64;
    for f in &disc.mesh.interfaces {
        for c in [f.lower, f.upper].into_iter().flatten() {
            let a = low.edge_trace(disc, c, f.edge_of(c), true);
            let b = full.edge_trace(disc, c, f.edge_of(c), true);
            worst = a.iter().zip(&b).fold(worst, |m, (p, q)| m.max((p - q).abs()));
        }
    }
    println!("max midpoint difference to the full-order solve: {worst:.2e}");
    for iy in (0..disc.mesh.n).rev() {
        let row: Vec<String> = (0..disc.mesh.n)
            .map(|ix| {
                let c = disc.mesh.cell_id(ix, iy);
                format!("{:.3}", disc.quad.scalar_flux(&low.cell_average(disc, c)))
            })
            .collect();
        println!("  {}", row.join(" "));
    }
    Ok(())
}
