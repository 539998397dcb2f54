//! Discrete ordinates and the scattering kernel.
//!
//! Prints the 4M directions with their weights, then checks that the
//! weighted Henyey-Greenstein kernel conserves particles row by row.

use rte::angular::{build_quadrature, discrete_kernel};

fn main() -> rte::Result<()> {
    let quad = build_quadrature(1, 3)?;
    println!("{} directions, weight sum {:.15}", quad.len(), quad.weights.iter().sum::<f64>());
    for m in 0..quad.len() {
        println!("  m={m:2}  c={:+.6}  s={:+.6}  w={:.6}  opposite={}", quad.c[m], quad.s[m], quad.weights[m], quad.opposite(m));
    }
    for g in [0.0, 0.5, 0.9] {
        let kw = discrete_kernel(&quad, g)?.weighted(&quad);
        let worst = kw.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max);
        println!("g={g}: max |row sum - 1| = {worst:.2e}");
    }
    Ok(())
}
