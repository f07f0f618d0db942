//! Discrete eigenvalue nu0 against its diffusion approximation.
use rrf_green::case1d::{big_lambda_real, nu0_diffusion};
use rrf_green::DispersionContext;

fn main() -> rrf_green::Result<()> {
    println!("albedo        nu0     |Lambda(nu0)|  diffusion  rel.err");
    for w in [0.1, 0.3, 0.5, 0.9, 0.99, 0.999] {
        let c = DispersionContext::new(w)?;
        let d = nu0_diffusion(w);
        println!(
            "{w:6}  {:10.7}  {:12.2e}  {:9.5}  {:8.2e}",
            c.nu0,
            big_lambda_real(c.nu0, w).abs(),
            d,
            (d - c.nu0).abs() / c.nu0
        );
    }
    Ok(())
}
