//! Rotated-frame eigenmodes: sphere averages and orthogonality of +-nu0.
use rrf_green::green_csf::{orthogonality_integral, orthogonality_norm, sphere_average};
use rrf_green::quadrature::product_sphere_rule;
use rrf_green::rrf::build_mode;
use rrf_green::DispersionContext;

fn main() -> rrf_green::Result<()> {
    let ctx = DispersionContext::new(0.9)?;
    let rule = product_sphere_rule(64, 128)?;
    for q in [0.0, 0.5, 1.0] {
        let p = build_mode(ctx.nu0, [q, 0.0])?;
        let m = build_mode(-ctx.nu0, [q, 0.0])?;
        let (avg, cycle) = sphere_average(&p, &rule, &ctx)?;
        let diag = orthogonality_integral(&p, &p, &rule, &ctx)?;
        let off = orthogonality_integral(&p, &m, &rule, &ctx)?;
        println!(
            "q={q}: k_z={:.4}  sphere average {:.12} ({cycle:?})  diagonal/expected {:.12}  off-diagonal {:.1e}",
            p.kz,
            avg.re,
            diag.value.re / orthogonality_norm(&p, &ctx)?,
            off.value.norm()
        );
    }
    Ok(())
}
