//! Self-checks against the dense references, as run by `rte verify`.

fn main() -> rte::Result<()> {
    let checks = rte::cli::cmd_verify(8, 0)?;
    let mut ok = true;
    for c in &checks {
        println!("{} {}: {:.2e} (tol {:.0e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.tol);
        ok &= c.pass;
    }
    if !ok {
        std::process::exit(3);
    }
    Ok(())
}
