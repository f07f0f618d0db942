//! Green's function from rotated singular eigenfunctions.
//!
//! For a point below or above the source plane, the flux is a transverse
//! Fourier integral over q of the discrete pair +-nu0 and the continuum
//! 0 < nu < 1, each weighted by 1 / (k_z N(nu)). Only modes decaying away
//! from the plane appear, so z = 0 is excluded.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::case1d::{lambda_pv, normalization, DispersionContext, ModeKind, SingularEigenfunction};
use crate::error::{Error, Result};
use crate::evaluation::{CsfConfig, GreensEvaluation, Method, QuadConfig};
use crate::quadrature::{composite, composite_on, gauss_legendre, QuadratureRule, SphereRule};
use crate::rrf::{build_mode, pole_on_sphere, sphere_integral, SphereCycle, TransverseMode};
use crate::specfun::bessel_j;

/// A transverse mode together with the side of the source plane it lives on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenmodeSpec {
    pub mode: TransverseMode,
    /// sign(z) of the half-space in which e^{-k.r/nu} decays.
    pub sigma: f64,
}

impl EigenmodeSpec {
    /// The mode sigma * nu_abs with transverse vector q.
    pub fn new(nu_abs: f64, q: [f64; 2], sigma: f64) -> Result<Self> {
        if !(nu_abs > 0.0) || sigma.abs() != 1.0 {
            return Err(Error::InvalidArgument("need nu > 0 and sigma = +-1".into()));
        }
        Ok(EigenmodeSpec { mode: build_mode(sigma * nu_abs, q)?, sigma })
    }
}

/// phi(nu, k.Omega) e^{-k.r/nu}.
pub fn eigenmode(spec: &EigenmodeSpec, r: [f64; 3], omega: [f64; 3], ctx: &DispersionContext) -> Result<Complex64> {
    if r[2] * spec.sigma < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "z = {} is on the growing side of a mode with sigma = {}",
            r[2], spec.sigma
        )));
    }
    let m = &spec.mode;
    let s = m.khat.dot_real(omega);
    let nu = m.nu;
    if nu.abs() < 1.0 && s.im == 0.0 && s.re == nu {
        return Err(Error::SingularPoint(format!("k.Omega = {nu} is the delta support")));
    }
    let phi = 0.5 * ctx.albedo * nu / (nu - s);
    let kr = m.khat.dot_real(r);
    Ok(phi * (-kr / nu).exp())
}

/// Value of a sphere integral together with the cycle that carried it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthogonalityValue {
    pub value: Complex64,
    pub cycle: SphereCycle,
}

/// The integral of mu phi(nu1, k1.Omega) phi(nu2, k2.Omega) over the sphere.
///
/// Discrete modes are integrated with `rule`. When the diagonal integrand has
/// a double pole on the real sphere the rotated cycle is used; for distinct
/// modes the poles are simple and the real-sphere integral is taken. A pair of
/// continuous modes at q = 0 reduces to the one-dimensional overlap.
pub fn orthogonality_integral(
    mode1: &TransverseMode,
    mode2: &TransverseMode,
    rule: &SphereRule,
    ctx: &DispersionContext,
) -> Result<OrthogonalityValue> {
    if mode1.q != mode2.q {
        return Err(Error::InvalidArgument("modes must share q".into()));
    }
    let w = ctx.albedo;
    let discrete1 = mode1.nu.abs() > 1.0;
    let discrete2 = mode2.nu.abs() > 1.0;
    if !(discrete1 && discrete2) {
        if mode1.q_norm() != 0.0 {
            return Err(Error::InvalidArgument(
                "continuous modes are supported only at q = 0".into(),
            ));
        }
        let m1 = SingularEigenfunction::new(mode1.nu, ctx)?;
        let m2 = SingularEigenfunction::new(mode2.nu, ctx)?;
        let mu_rule = gauss_legendre(400, -1.0, 1.0)?;
        let v = crate::case1d::mu_overlap(&m1, &m2, &mu_rule)?;
        return Ok(OrthogonalityValue { value: Complex64::new(2.0 * PI * v, 0.0), cycle: SphereCycle::Real });
    }
    let (n1, n2) = (mode1.nu, mode2.nu);
    let f = |om: &[Complex64; 3]| {
        let a = mode1.khat.dot(om);
        let b = mode2.khat.dot(om);
        om[2] * (0.5 * w * n1 / (n1 - a)) * (0.5 * w * n2 / (n2 - b))
    };
    if n1 == n2 {
        let (value, cycle) = sphere_integral(mode1, rule, f);
        Ok(OrthogonalityValue { value, cycle })
    } else {
        let value = rule.integrate(|d| {
            f(&[Complex64::new(d[0], 0.0), Complex64::new(d[1], 0.0), Complex64::new(d[2], 0.0)])
        });
        Ok(OrthogonalityValue { value, cycle: SphereCycle::Real })
    }
}

/// 2 pi k_z N(nu): the diagonal value of [`orthogonality_integral`].
pub fn orthogonality_norm(mode: &TransverseMode, ctx: &DispersionContext) -> Result<f64> {
    Ok(2.0 * PI * mode.kz * normalization(mode.nu, ctx)?.value)
}

/// Expansion coefficient of the discrete mode sign*nu0 for a beam along omega0.
pub fn discrete_coefficient(sign: f64, q: [f64; 2], omega0: [f64; 3], ctx: &DispersionContext) -> Result<Complex64> {
    let m = build_mode(sign.signum() * ctx.nu0, q)?;
    let phi0 = 0.5 * ctx.albedo * m.nu / (m.nu - m.khat.dot_real(omega0));
    Ok(phi0 / orthogonality_norm(&m, ctx)?)
}

/// A nu node of the continuum with its precomputed factors.
#[derive(Debug, Clone, Copy)]
struct NuNode {
    nu: f64,
    weight: f64,
    norm: f64,
}

/// Nodes on (0, 1): nu = t^2 on (0, 1/2], then panels halving towards 1.
fn continuum_nodes(n: usize, albedo: f64) -> Result<Vec<NuNode>> {
    let t_edges: Vec<f64> = (0..=4).map(|i| 0.5f64.sqrt() * i as f64 / 4.0).collect();
    let t_rule = composite_on(n, &t_edges)?;
    let mut out = Vec::new();
    for (&t, &wt) in t_rule.nodes.iter().zip(&t_rule.weights) {
        out.push((t * t, 2.0 * t * wt));
    }
    let mut edges = vec![0.5];
    for j in 1..=40 {
        edges.push(1.0 - 0.5f64.powi(j + 1));
    }
    let g = composite_on(n, &edges)?;
    out.extend(g.nodes.iter().copied().zip(g.weights.iter().copied()));
    out.into_iter()
        .map(|(nu, weight)| {
            let lam = lambda_pv(nu, albedo)?;
            let b = 0.5 * albedo * PI * nu;
            Ok(NuNode { nu, weight, norm: nu * (lam * lam + b * b) })
        })
        .collect()
}

/// Transverse layout of a CSF evaluation.
struct Layout {
    a: f64,
    sigma: f64,
    rho: [f64; 2],
    q_rule: QuadratureRule,
    q_max: f64,
    /// Azimuthal nodes per q node; None when the integrand does not depend on
    /// the direction of q.
    n_phi: Option<Vec<usize>>,
}

fn layout(r: [f64; 3], dirs: &[[f64; 3]], ctx: &DispersionContext, cfg: &CsfConfig, n_q: usize) -> Result<Layout> {
    let z = r[2];
    if z == 0.0 {
        return Err(Error::JumpPlane);
    }
    if !r.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite position {r:?}")));
    }
    let a = z.abs();
    let rho = [r[0], r[1]];
    let rn = rho[0].hypot(rho[1]);
    let q_max = cfg.q_cut / a;
    let mut width = (1.0 / ctx.nu0).min(1.0 / a);
    if rn > 0.0 {
        width = width.min(PI / (2.0 * rn));
    }
    let q_rule = composite(n_q, 0.0, q_max, width)?;
    let sin_max = dirs.iter().map(|d| d[0].hypot(d[1])).fold(0.0, f64::max);
    let n_phi = if sin_max == 0.0 {
        None
    } else {
        // e^{iq.rho} needs about q rho nodes; the poles of phi in phi_q sit
        // about 1 / (q sin theta) off the real axis.
        let base = cfg.n_phi_q.max(32) as f64;
        Some(
            q_rule
                .nodes
                .iter()
                .map(|&q| {
                    let n = base.max(q * rn + base).max(40.0 * q * sin_max).ceil() as usize;
                    n.div_ceil(4) * 4
                })
                .collect(),
        )
    };
    Ok(Layout { a, sigma: z.signum(), rho, q_rule, q_max, n_phi })
}

/// Angular or (with `omega == None`) scalar integrand for one q vector,
/// without the e^{iq.rho} factor.
fn q_integrand(
    q: [f64; 2],
    lay: &Layout,
    omega: Option<[f64; 3]>,
    omega0: [f64; 3],
    ctx: &DispersionContext,
    nu_nodes: &[NuNode],
    n0: f64,
    n0_scale: f64,
) -> Complex64 {
    let w = ctx.albedo;
    let q2 = q[0] * q[0] + q[1] * q[1];
    let term = |nu: f64, norm: f64| -> Complex64 {
        let s = lay.sigma * nu;
        let kz = (1.0 + nu * nu * q2).sqrt();
        let dot = |d: [f64; 3]| Complex64::new(kz * d[2], -s * (q[0] * d[0] + q[1] * d[1]));
        let phi0 = 0.5 * w * s / (s - dot(omega0));
        let phi = match omega {
            Some(om) => 0.5 * w * s / (s - dot(om)),
            None => Complex64::new(2.0 * PI, 0.0),
        };
        phi * phi0 * ((-kz * lay.a / nu).exp() / (kz * norm))
    };
    let mut acc = term(ctx.nu0, n0 * n0_scale);
    for n in nu_nodes {
        acc += term(n.nu, n.norm) * n.weight;
    }
    acc
}

fn csf_value(
    r: [f64; 3],
    omega: Option<[f64; 3]>,
    omega0: [f64; 3],
    ctx: &DispersionContext,
    cfg: &CsfConfig,
    n_q: usize,
    n_nu: usize,
    n0_scale: f64,
) -> Result<(Complex64, Layout, usize)> {
    let mut dirs = vec![omega0];
    if let Some(o) = omega {
        dirs.push(o);
    }
    let lay = layout(r, &dirs, ctx, cfg, n_q)?;
    let nu_nodes = continuum_nodes(n_nu, ctx.albedo)?;
    let n0 = normalization(ctx.nu0, ctx)?.value;
    let rn = lay.rho[0].hypot(lay.rho[1]);
    let parts: Vec<Complex64> = lay
        .q_rule
        .nodes
        .par_iter()
        .zip(lay.q_rule.weights.par_iter())
        .enumerate()
        .map(|(iq, (&qn, &wq))| {
            let inner = match &lay.n_phi {
                None => {
                    let f = q_integrand([qn, 0.0], &lay, omega, omega0, ctx, &nu_nodes, n0, n0_scale);
                    f * (2.0 * PI * bessel_j(0, qn * rn))
                }
                Some(counts) => {
                    let np = counts[iq];
                    let dphi = 2.0 * PI / np as f64;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..np {
                        let (s, c) = (dphi * j as f64).sin_cos();
                        let q = [qn * c, qn * s];
                        let f = q_integrand(q, &lay, omega, omega0, ctx, &nu_nodes, n0, n0_scale);
                        let phase = Complex64::from_polar(1.0, q[0] * lay.rho[0] + q[1] * lay.rho[1]);
                        acc += f * phase;
                    }
                    acc * dphi
                }
            };
            inner * (qn * wq)
        })
        .collect();
    let total: Complex64 = parts.iter().sum();
    let n_nodes = nu_nodes.len();
    Ok((total / (2.0 * PI).powi(3), lay, n_nodes))
}

fn finish(
    r: [f64; 3],
    omega: Option<[f64; 3]>,
    omega0: [f64; 3],
    ctx: &DispersionContext,
    quad: &QuadConfig,
    n0_scale: f64,
) -> Result<GreensEvaluation> {
    let cfg = &quad.csf;
    let (value, lay, n_nu_total) = csf_value(r, omega, omega0, ctx, cfg, cfg.n_q, cfg.n_nu, n0_scale)?;
    let (coarse, _, _) =
        csf_value(r, omega, omega0, ctx, cfg, cfg.n_q.div_ceil(2).max(2), cfg.n_nu.div_ceil(2).max(2), n0_scale)?;
    // Discrete-mode envelope beyond q_max, integrated with decay length nu0 / (nu0 |z|).
    let kz = (1.0 + (ctx.nu0 * lay.q_max).powi(2)).sqrt();
    let tail = value.norm() * (-kz * lay.a / ctx.nu0).exp() * lay.q_max * ctx.nu0 / lay.a;
    let mut e = GreensEvaluation::new(r, omega, omega0, Method::Csf, value);
    e.error_estimate = (value - coarse).norm() + tail + 1e-14 * value.norm();
    let sigma = lay.sigma;
    e.degraded = sigma * omega0[2] > 0.0 || omega.is_some_and(|o| sigma * o[2] > 0.0);
    e.meta.insert("n_q".into(), lay.q_rule.len() as f64);
    let n_phi_max = lay.n_phi.as_ref().map_or(1, |v| v.iter().copied().max().unwrap_or(1));
    e.meta.insert("n_phi_q".into(), n_phi_max as f64);
    e.meta.insert("n_nu".into(), n_nu_total as f64);
    e.meta.insert("q_max".into(), lay.q_max);
    e.meta.insert("tail".into(), tail);
    Ok(e)
}

/// Angular flux at r in direction omega for a unit beam along omega0.
///
/// Exact when sign(z) mu <= 0 and sign(z) mu0 <= 0; elsewhere the rotated
/// discrete eigenfunction has poles on the q-plane and the result carries
/// `degraded`.
pub fn green_csf(
    r: [f64; 3],
    omega: [f64; 3],
    omega0: [f64; 3],
    ctx: &DispersionContext,
    quad: &QuadConfig,
) -> Result<GreensEvaluation> {
    finish(r, Some(omega), omega0, ctx, quad, 1.0)
}

/// Scalar flux: every rotated eigenfunction integrates to 2 pi over the sphere.
pub fn scalar_flux_csf(r: [f64; 3], omega0: [f64; 3], ctx: &DispersionContext, quad: &QuadConfig) -> Result<GreensEvaluation> {
    finish(r, None, omega0, ctx, quad, 1.0)
}

/// [`green_csf`] with N(nu0) multiplied by `scale`; used by fault injection.
pub fn green_csf_perturbed(
    r: [f64; 3],
    omega: [f64; 3],
    omega0: [f64; 3],
    ctx: &DispersionContext,
    quad: &QuadConfig,
    scale: f64,
) -> Result<GreensEvaluation> {
    finish(r, Some(omega), omega0, ctx, quad, scale)
}

/// The sphere integral of the rotated eigenfunction of `mode`, over 2 pi.
pub fn sphere_average(mode: &TransverseMode, rule: &SphereRule, ctx: &DispersionContext) -> Result<(Complex64, SphereCycle)> {
    if mode.nu.abs() < 1.0 && mode.q_norm() == 0.0 {
        // phi(nu, mu) integrates to one over mu for continuous nu.
        let m = SingularEigenfunction::continuous(mode.nu, ctx.albedo)?;
        debug_assert_eq!(m.kind, ModeKind::Continuous);
        let rule = gauss_legendre(200, -1.0, 1.0)?;
        let pv = crate::quadrature::principal_value(|_| m.pv_coeff, mode.nu, &rule)?;
        return Ok((Complex64::new(pv + m.delta_weight, 0.0), SphereCycle::Real));
    }
    if mode.nu.abs() < 1.0 {
        return Err(Error::InvalidArgument("continuous modes need q = 0".into()));
    }
    let nu = mode.nu;
    let (v, c) = sphere_integral(mode, rule, |om| 0.5 * ctx.albedo * nu / (nu - mode.khat.dot(om)));
    Ok((v / (2.0 * PI), c))
}

/// True when the discrete pole meets the real sphere at this q.
pub fn above_threshold(mode: &TransverseMode) -> bool {
    mode.nu.abs() > 1.0 && pole_on_sphere(mode)
}
