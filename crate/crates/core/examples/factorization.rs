//! Multilevel factorization of the interface conditions.
//!
//! Builds the factorization for a diffusive medium, reports level sizes and
//! storage, and compares one solve against a dense LU of the same operator.

use rte::discretization::{Discretization, DiscretizationParams};
use rte::materials::MaterialField;
use rte::mesh::default_levels;
use rte::rsm::{dense_oracle_inverse, factorize};
use std::time::Instant;

fn main() -> rte::Result<()> {
    let n = 16;
    let params = DiscretizationParams { n, levels: default_levels(n), n_polar: 1, n_azimuth: 1, g: 0.0, delta: 1e-3 };
    let disc = Discretization::new(params, &MaterialField::constant(1.0, 0.5, 0.01))?;
    let t = Instant::now();
    let fact = factorize(&disc)?;
    println!("factorized I={n} with {} levels in {:.1} ms", fact.levels, t.elapsed().as_secs_f64() * 1e3);
    for l in 0..=fact.levels {
        println!("  level {l}: |F| = {:5}  |G| = {:5}", fact.dim_f[l], fact.dim_g[l]);
    }
    println!("storage {} entries, {} distinct blocks, worst local condition {:.2e}", fact.storage(), fact.distinct_blocks(), fact.max_local_condition());

    let v: Vec<f64> = (0..fact.n_rows(0)).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
    let mut flops = 0;
    let x = fact.apply_inverse_counted(&v, &mut flops)?;
    let dense = dense_oracle_inverse(&disc, &fact.bases[0])?.solve(&v)?;
    let err = x.iter().zip(&dense).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("apply_inverse: {flops} flops, max difference to dense solve {err:.2e}");
    Ok(())
}
