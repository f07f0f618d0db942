//! Fourier moments psi_l(k, mu_k) from the recurrence and from the direct form.
use rrf_green::green_ganapol::{moments, moments_direct, moments_with, recurrence_growth, MomentPath};
use rrf_green::DispersionContext;

fn main() -> rrf_green::Result<()> {
    let ctx = DispersionContext::new(0.9)?;
    let l_max = 10;
    for k in [0.3, 1.0, 5.0] {
        let auto = moments(k, 0.3, &ctx, l_max)?;
        let dd = moments_with(k, 0.3, &ctx, l_max, MomentPath::DoubleDouble)?;
        let d = moments_direct(k, 0.3, &ctx, l_max)?;
        let worst = (0..=l_max)
            .map(|l| (dd.psi_tilde[l] - d.psi_tilde[l]).norm() / d.psi_tilde[l].norm())
            .fold(0.0, f64::max);
        println!(
            "k={k:4}  growth {:9.2e}  auto path {:?}  double-double vs direct {:.1e}  psi_10 = {:.6e}",
            recurrence_growth(k, l_max),
            auto.path,
            worst,
            d.psi_tilde[l_max]
        );
    }
    Ok(())
}
