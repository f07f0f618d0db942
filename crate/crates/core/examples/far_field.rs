//! Decay of the on-axis scalar flux far from the source.
use rrf_green::green_csf::scalar_flux_csf;
use rrf_green::{DispersionContext, QuadConfig};

fn main() -> rrf_green::Result<()> {
    let ctx = DispersionContext::new(0.9)?;
    let q = QuadConfig::default();
    let mut prev: Option<(f64, f64)> = None;
    for d in [2.0, 4.0, 6.0, 8.0, 10.0] {
        let phi = scalar_flux_csf([0.0, 0.0, -d], [0.0, 0.0, 1.0], &ctx, &q)?.reported;
        if let Some((d0, p0)) = prev {
            let slope = (phi.ln() - p0.ln()) / (d - d0);
            // A point source also spreads: Phi ~ e^{-r/nu0} / r.
            let spread = slope + (d / d0).ln() / (d - d0);
            println!("z=-{d:4}: Phi={phi:.6e}  slope {slope:.4}  without 1/r {spread:.4}  (-1/nu0 = {:.4})", -1.0 / ctx.nu0);
        }
        prev = Some((d, phi));
    }
    Ok(())
}
