//! Flux from the conventional Fourier inversion: kernel, paths and balance.
use rrf_green::green_fourier::{balance_tally, collided_kernel, green_conv, scalar_flux_conv};
use rrf_green::{DispersionContext, QuadConfig};

fn main() -> rrf_green::Result<()> {
    let ctx = DispersionContext::new(0.5)?;
    let q = QuadConfig::default();
    for big_r in [0.1, 1.0, 5.0] {
        let f = collided_kernel(big_r, ctx.albedo, &q.conv)?;
        println!("F({big_r}) = {:.10e} +- {:.1e}", f.value, f.error);
    }
    let z = [0.0, 0.0, 1.0];
    let r = [0.3, 0.2, 0.5];
    let g = green_conv(r, [0.0, 0.6, 0.8], z, &ctx, &q)?;
    let s = scalar_flux_conv(r, z, &ctx, &q)?;
    println!("G = {:.10e}, Phi = {:.10e}, degraded {}", g.reported, s.reported, g.degraded);
    let b = balance_tally(&ctx, &q)?;
    println!("(1 - albedo) * total = {:.8} +- {:.1e}", b.value, b.error);
    Ok(())
}
