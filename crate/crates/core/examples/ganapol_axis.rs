//! Moment reconstruction on the beam axis, and the l-shells behind it.
use rrf_green::green_ganapol::{green_ganapol, scalar_flux_ganapol, shell_terms};
use rrf_green::{DispersionContext, QuadConfig};

fn main() -> rrf_green::Result<()> {
    let ctx = DispersionContext::new(0.9)?;
    let q = QuadConfig::default();
    let r = [0.0, 0.0, -1.0];
    let (shells, _, _) = shell_terms(r, [0.0, 0.0, 1.0], &ctx, &q.ganapol)?;
    // Alternating and growing: the sum is only meaningful after averaging.
    for (l, s) in shells.iter().enumerate().take(6) {
        println!("shell {l}: {:+.6e}", s.re);
    }
    let g = green_ganapol(r, [0.0, 0.0, 1.0], &ctx, &q)?;
    let s = scalar_flux_ganapol(r, &ctx, &q)?;
    println!("G = {:.10e} (residue {:.1e}), Phi = {:.10e}", g.reported, g.meta["truncation_residue"], s.reported);
    Ok(())
}
