//! Angular and scalar flux from the rotated-frame eigenfunction expansion.
use rrf_green::evaluation::direction;
use rrf_green::green_csf::{green_csf, scalar_flux_csf};
use rrf_green::{DispersionContext, QuadConfig};

fn main() -> rrf_green::Result<()> {
    let ctx = DispersionContext::new(0.9)?;
    let q = QuadConfig::default();
    let z = [0.0, 0.0, 1.0];
    for r in [[0.0, 0.0, -1.0], [0.5, 0.0, -1.0], [0.4, -0.3, -0.9]] {
        let a = green_csf(r, direction(0.6, 0.0), z, &ctx, &q)?;
        let s = scalar_flux_csf(r, z, &ctx, &q)?;
        println!("r={r:?}  G={:.10e} (+-{:.1e})  Phi={:.10e}", a.reported, a.error_estimate, s.reported);
    }
    // Behind the source plane the expansion runs in the growing direction.
    let b = green_csf([0.0, 0.0, 1.0], z, z, &ctx, &q)?;
    println!("r=(0,0,1): degraded = {}", b.degraded);
    Ok(())
}
