//! Local exponential bases and threshold selection.
//!
//! For one cell in a transport and a diffusive medium, lists the decay of
//! every mode across the cell and how many survive a range of thresholds.

use rte::angular::{build_quadrature, discrete_kernel};
use rte::materials::CellOptics;
use rte::tfps_basis::{build_cell_basis, select_slow_basis, CellGeometry, EigenCache};

fn main() -> rte::Result<()> {
    let quad = build_quadrature(1, 3)?;
    let kernel = discrete_kernel(&quad, 0.0)?;
    let cache = EigenCache::new(&quad, &kernel);
    let geom = CellGeometry { id: 0, x0: 0.0, y0: 0.0, h: 1.0 / 32.0 };
    for eps in [1.0, 0.01, 1.0 / 512.0] {
        let optics = CellOptics::from_means(0, 1.0, 0.5, eps);
        let basis = build_cell_basis(&optics, cache.get(&optics)?, geom)?;
        let mut mags = basis.center_magnitude.clone();
        mags.sort_by(|a, b| b.total_cmp(a));
        println!("eps={eps}: {} modes, center magnitudes {:.3e} .. {:.3e}", basis.n_modes(), mags[0], mags[mags.len() - 1]);
        for delta in [0.0, 1e-5, 1e-3, 1e-1] {
            let sel = select_slow_basis(&basis, delta);
            println!("  delta={delta:e}: {} retained", sel.retained.len());
        }
    }
    Ok(())
}
