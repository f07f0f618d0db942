//! Chandrasekhar polynomials and the Wronskian identity (l+1)(g_l rho_{l+1} - g_{l+1} rho_l) = z.
use num_complex::Complex64;
use rrf_green::specfun::{chandrasekhar, wronskian_defects};

fn main() -> rrf_green::Result<()> {
    let z = Complex64::new(0.4, 1.3);
    for (l, p) in chandrasekhar(5, z, 0.9).iter().enumerate() {
        println!("l={l}  g={:.6}  rho={:.6}", p.g, p.rho);
    }
    let exact = wronskian_defects(50, z, 0.9, true)?;
    let rounded = wronskian_defects(50, z, 0.9, false)?;
    println!(
        "max defect, l <= 50: exact arithmetic {:.1e}, double-double {:.1e}",
        exact.iter().cloned().fold(0.0, f64::max),
        rounded.iter().cloned().fold(0.0, f64::max)
    );
    Ok(())
}
