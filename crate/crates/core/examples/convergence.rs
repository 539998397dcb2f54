//! Manufactured-solution convergence on a small grid sequence.
//!
//! Pass `--full` for the complete M, epsilon and h table (several minutes).

use rte::experiments::{convergence_study, StudyOptions};

fn main() -> rte::Result<()> {
    let full = std::env::args().any(|a| a == "--full");
    let (ms, eps, ns): (Vec<usize>, Vec<f64>, Vec<usize>) = if full {
        (vec![1, 3], vec![0.5, 1.0 / 32.0, 1.0 / 512.0], vec![4, 8, 16, 32])
    } else {
        (vec![1], vec![0.5, 1.0 / 512.0], vec![4, 8, 16])
    };
    let report = convergence_study(&ms, &eps, &ns, &StudyOptions::default())?;
    println!("   M   eps      h     angular      scalar  rank");
    for r in &report.errors {
        println!("{:4} {:5.0}^-1 1/{:<3} {:.3e}  {:.3e}  {:.3}", r.m, 1.0 / r.epsilon, r.n, r.angular, r.scalar, r.rank_ratio);
    }
    for o in &report.orders {
        println!("M={} eps=1/{:.0} h=1/{}->1/{}: order {:.2} (angular) {:.2} (scalar)", o.m, 1.0 / o.epsilon, o.n_coarse, o.n_fine, o.angular, o.scalar);
    }
    Ok(())
}
