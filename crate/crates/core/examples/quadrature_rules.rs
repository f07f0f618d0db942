//! Gauss-Legendre, a principal value and a tapered oscillatory integral.
use rrf_green::quadrature::{gauss_legendre, principal_value, tapered};

fn main() -> rrf_green::Result<()> {
    let g = gauss_legendre(10, 0.0, 1.0)?;
    println!("int_0^1 x^19 dx = {:.15} (exact 0.05)", g.integrate(|x| x.powi(19)));

    // P int_{-1}^{1} dx / (0.3 - x) = ln(1.3 / 0.7)
    let rule = gauss_legendre(40, -1.0, 1.0)?;
    let pv = principal_value(|_| 1.0, 0.3, &rule)?;
    println!("PV = {pv:.15}, exact {:.15}", (1.3f64 / 0.7).ln());

    // int_0^inf sin(k) / k dk = pi / 2, smoothly windowed at k = 200
    let e = tapered(|k: f64| if k == 0.0 { 1.0 } else { k.sin() / k }, 1.0, 10, 200.0)?;
    println!("int sin(k)/k = {:.8} +- {:.1e} (pi/2 = {:.8})", e.value, e.error, std::f64::consts::FRAC_PI_2);
    Ok(())
}
