//! The three evaluators side by side on the beam axis.
use rrf_green::green_csf::{green_csf, scalar_flux_csf};
use rrf_green::green_fourier::{green_conv, scalar_flux_conv};
use rrf_green::green_ganapol::{green_ganapol, scalar_flux_ganapol};
use rrf_green::{DispersionContext, QuadConfig};

fn main() -> rrf_green::Result<()> {
    let q = QuadConfig::default();
    let z = [0.0, 0.0, 1.0];
    for w in [0.5, 0.9] {
        let ctx = DispersionContext::new(w)?;
        for d in [0.5, 1.0, 2.0] {
            let r = [0.0, 0.0, -d];
            let a = [green_csf(r, z, z, &ctx, &q)?, green_conv(r, z, z, &ctx, &q)?, green_ganapol(r, z, &ctx, &q)?];
            let s = [scalar_flux_csf(r, z, &ctx, &q)?, scalar_flux_conv(r, z, &ctx, &q)?, scalar_flux_ganapol(r, &ctx, &q)?];
            println!(
                "albedo {w} z=-{d}: G csf {:.9e} conv {:.9e} ganapol {:.9e} | Phi csf {:.9e} conv {:.9e} ganapol {:.9e}",
                a[0].reported, a[1].reported, a[2].reported, s[0].reported, s[1].reported, s[2].reported
            );
        }
    }
    Ok(())
}
