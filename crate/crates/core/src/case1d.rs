//! One-dimensional singular-eigenfunction machinery: the dispersion function,
//! the discrete eigenvalue, the eigenfunctions and their normalisation.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{principal_value, QuadratureRule};
use crate::specfun::legendre_q0;

/// Albedo together with its discrete eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionContext {
    pub albedo: f64,
    pub nu0: f64,
    /// |Lambda(nu0)| reached by the root finder.
    pub root_residual: f64,
}

impl DispersionContext {
    pub fn new(albedo: f64) -> Result<Self> {
        let nu0 = find_nu0(albedo)?;
        let root_residual = big_lambda_real(nu0, albedo).abs();
        Ok(DispersionContext { albedo, nu0, root_residual })
    }
}

fn check_albedo(albedo: f64) -> Result<()> {
    if !(albedo > 0.0 && albedo < 1.0) {
        return Err(Error::AlbedoRange(albedo));
    }
    Ok(())
}

/// atanh(1/nu) for real |nu| > 1, accurate near |nu| = 1.
fn atanh_inv(nu: f64) -> f64 {
    if nu.abs() > 2.0 {
        (1.0 / nu).atanh()
    } else {
        0.5 * ((nu + 1.0) / (nu - 1.0)).ln()
    }
}

/// Lambda(w) = 1 - albedo w Q_0(w), analytic off [-1, 1].
pub fn big_lambda(w: Complex64, albedo: f64) -> Result<Complex64> {
    if w.im == 0.0 && w.re.abs() > 1.0 {
        return Ok(Complex64::new(big_lambda_real(w.re, albedo), 0.0));
    }
    let q0 = legendre_q0(w)?;
    Ok(1.0 - albedo * w * q0)
}

/// Lambda on the real axis outside [-1, 1].
pub fn big_lambda_real(nu: f64, albedo: f64) -> f64 {
    1.0 - albedo * nu * atanh_inv(nu)
}

/// lambda(nu) = 1 - albedo nu atanh(nu) for |nu| < 1.
pub fn lambda_pv(nu: f64, albedo: f64) -> Result<f64> {
    if !(nu.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!("lambda needs |nu| < 1, got {nu}")));
    }
    Ok(1.0 - albedo * nu * nu.atanh())
}

/// Positive root nu0 > 1 of Lambda.
///
/// Lambda increases from -inf at 1+ to 1 - albedo at infinity, so a bracket
/// always exists; the root is polished by safeguarded Newton steps.
pub fn find_nu0(albedo: f64) -> Result<f64> {
    check_albedo(albedo)?;
    let f = |nu: f64| big_lambda_real(nu, albedo);
    let df = |nu: f64| -albedo * (atanh_inv(nu) - nu / (nu * nu - 1.0));
    let mut lo = 1.0 + 2f64.powi(-48);
    if f(lo) >= 0.0 {
        return Err(Error::NonConvergence(format!(
            "discrete eigenvalue for albedo {albedo} is indistinguishable from 1"
        )));
    }
    let mut hi = 2.0;
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NonConvergence("no sign change in Lambda".into()));
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = fx / df(x);
        let mut nx = x - step;
        if !(nx > lo && nx < hi) {
            nx = 0.5 * (lo + hi);
        }
        if (nx - x).abs() <= 4.0 * f64::EPSILON * x || hi - lo <= 4.0 * f64::EPSILON * x {
            x = nx;
            break;
        }
        x = nx;
    }
    // Pick the best of the final neighbours.
    let mut best = x;
    for cand in [x, lo, hi, x.next_up(), x.next_down()] {
        if cand > 1.0 && f(cand).abs() < f(best).abs() {
            best = cand;
        }
    }
    Ok(best)
}

/// Diffusion estimate 1 / sqrt(3 (1 - albedo)) of nu0.
pub fn nu0_diffusion(albedo: f64) -> f64 {
    1.0 / (3.0 * (1.0 - albedo)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ModeKind {
    Discrete,
    Continuous,
}

/// phi(nu, mu) = pv_coeff P 1/(nu - mu) + delta_weight delta(nu - mu).
///
/// The delta part is never evaluated pointwise; integration routines that
/// need it read `delta_weight`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularEigenfunction {
    pub nu: f64,
    pub pv_coeff: f64,
    pub delta_weight: f64,
    pub kind: ModeKind,
}

impl SingularEigenfunction {
    /// The discrete mode +nu0 (sign = +1) or -nu0 (sign = -1).
    pub fn discrete(ctx: &DispersionContext, sign: f64) -> Self {
        let nu = sign.signum() * ctx.nu0;
        SingularEigenfunction {
            nu,
            pv_coeff: 0.5 * ctx.albedo * nu,
            delta_weight: 0.0,
            kind: ModeKind::Discrete,
        }
    }

    pub fn continuous(nu: f64, albedo: f64) -> Result<Self> {
        let lam = lambda_pv(nu, albedo)?;
        Ok(SingularEigenfunction {
            nu,
            pv_coeff: 0.5 * albedo * nu,
            delta_weight: lam,
            kind: ModeKind::Continuous,
        })
    }

    /// Either kind, chosen from nu.
    pub fn new(nu: f64, ctx: &DispersionContext) -> Result<Self> {
        if is_discrete(nu, ctx) {
            Ok(Self::discrete(ctx, nu))
        } else {
            Self::continuous(nu, ctx.albedo)
        }
    }
}

fn is_discrete(nu: f64, ctx: &DispersionContext) -> bool {
    (nu.abs() - ctx.nu0).abs() <= 1e-12 * ctx.nu0
}

/// Pointwise value pv_coeff / (nu - s); the delta is not included.
pub fn phi_eval(mode: &SingularEigenfunction, s: Complex64) -> Result<Complex64> {
    let d = mode.nu - s;
    if d.re == 0.0 && d.im == 0.0 {
        return Err(Error::SingularPoint(format!("phi({}, {s}) sits on its pole", mode.nu)));
    }
    Ok(mode.pv_coeff / d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationFactor {
    pub nu: f64,
    pub value: f64,
}

/// N(nu) for nu = +-nu0 or |nu| < 1.
pub fn normalization(nu: f64, ctx: &DispersionContext) -> Result<NormalizationFactor> {
    let w = ctx.albedo;
    let value = if is_discrete(nu, ctx) {
        let nu = nu.signum() * ctx.nu0;
        0.5 * w * nu.powi(3) * (w / (nu * nu - 1.0) - 1.0 / (nu * nu))
    } else if nu.abs() < 1.0 {
        let lam = lambda_pv(nu, w)?;
        let b = 0.5 * w * PI * nu;
        nu * (lam * lam + b * b)
    } else {
        return Err(Error::InvalidArgument(format!(
            "{nu} is not an eigenvalue (nu0 = {})",
            ctx.nu0
        )));
    };
    Ok(NormalizationFactor { nu, value })
}

/// The distributional integral of mu phi(nu1, mu) phi(nu2, mu) over (-1, 1)
/// for distinct eigenvalues.
///
/// Principal values go through [`principal_value`]; delta parts are consumed
/// analytically. Coincident continuous eigenvalues give a delta in nu and are
/// rejected.
pub fn mu_overlap(
    m1: &SingularEigenfunction,
    m2: &SingularEigenfunction,
    rule: &QuadratureRule,
) -> Result<f64> {
    let (c1, c2) = (m1.pv_coeff, m2.pv_coeff);
    match (m1.kind, m2.kind) {
        (ModeKind::Discrete, ModeKind::Discrete) => {
            // Smooth integrand.
            Ok(rule.integrate(|mu| mu * c1 / (m1.nu - mu) * c2 / (m2.nu - mu)))
        }
        (ModeKind::Discrete, ModeKind::Continuous) => overlap_dc(m1, m2, rule),
        (ModeKind::Continuous, ModeKind::Discrete) => overlap_dc(m2, m1, rule),
        (ModeKind::Continuous, ModeKind::Continuous) => {
            if m1.nu == m2.nu {
                return Err(Error::InvalidArgument(
                    "equal continuous eigenvalues give a delta in nu".into(),
                ));
            }
            let (a, b) = (m1.nu, m2.nu);
            // mu/((a-mu)(b-mu)) = [mu/(a-mu) - mu/(b-mu)] / (b - a)
            let pa = principal_value(|mu| mu, a, rule)?;
            let pb = principal_value(|mu| mu, b, rule)?;
            let pv = c1 * c2 * (pa - pb) / (b - a);
            let d1 = m1.delta_weight * a * c2 / (b - a);
            let d2 = m2.delta_weight * b * c1 / (a - b);
            Ok(pv + d1 + d2)
        }
    }
}

fn overlap_dc(d: &SingularEigenfunction, c: &SingularEigenfunction, rule: &QuadratureRule) -> Result<f64> {
    let pv = principal_value(|mu| mu * d.pv_coeff / (d.nu - mu) * c.pv_coeff, c.nu, rule)?;
    let delta = c.delta_weight * c.nu * d.pv_coeff / (d.nu - c.nu);
    Ok(pv + delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;

    #[test]
    fn lambda_limits() {
        let w = Complex64::new(0.3, 2.0);
        assert!((big_lambda(w, 1e-300).unwrap() - 1.0).norm() < 1e-15);
        let far = big_lambda(Complex64::new(1e6, 0.0), 0.9).unwrap();
        assert!((far.re - 0.1).abs() < 1e-11);
        let v = big_lambda(Complex64::new(2.0, 0.0), 0.9).unwrap();
        assert!((v.re - (1.0 - 1.8 * 0.5f64.atanh())).abs() < 1e-15);
        assert!((v.re - 0.011_248_94).abs() < 1e-8);
        assert!(matches!(big_lambda(Complex64::new(0.2, 0.0), 0.9), Err(Error::BranchCut(_))));
    }

    #[test]
    fn lambda_pv_examples() {
        assert_eq!(lambda_pv(0.0, 0.9).unwrap(), 1.0);
        assert_eq!(lambda_pv(0.7, 0.0).unwrap(), 1.0);
        assert!((lambda_pv(0.5, 0.9).unwrap() - 0.752_812_2).abs() < 1e-7);
        assert!(lambda_pv(1.0, 0.9).is_err());
    }

    #[test]
    fn nu0_examples() {
        assert!((find_nu0(0.9).unwrap() - 1.90320).abs() < 1e-5);
        assert!((find_nu0(0.5).unwrap() - 1.04438).abs() < 1e-5);
        let n = find_nu0(0.99).unwrap();
        assert!((n - nu0_diffusion(0.99)).abs() / n < 0.005);
        assert!(matches!(find_nu0(1.5), Err(Error::AlbedoRange(_))));
        assert!(find_nu0(0.0).is_err());
    }

    #[test]
    fn nu0_residual_is_tiny() {
        for &w in &[0.2, 0.3, 0.5, 0.9, 0.99, 0.999] {
            let c = DispersionContext::new(w).unwrap();
            assert!(c.nu0 > 1.0 && c.root_residual < 1e-13, "{w}: {:?}", c);
        }
    }

    #[test]
    fn phi_examples() {
        let ctx = DispersionContext::new(0.9).unwrap();
        let d = SingularEigenfunction::discrete(&ctx, 1.0);
        let v = phi_eval(&d, Complex64::new(0.0, 0.0)).unwrap();
        assert!((v.re - 0.45).abs() < 1e-15);
        let v = phi_eval(&d, Complex64::new(0.5, 0.0)).unwrap();
        assert!((v.re - 0.610_347_2).abs() < 1e-6);
        let c = SingularEigenfunction::continuous(0.6, 0.9).unwrap();
        assert!(phi_eval(&c, Complex64::new(0.3, -0.4)).unwrap().norm().is_finite());
        assert!(phi_eval(&c, Complex64::new(0.6, 0.0)).is_err());
    }

    #[test]
    fn normalization_examples() {
        let ctx = DispersionContext::new(0.9).unwrap();
        let a = normalization(0.5, &ctx).unwrap().value;
        let b = normalization(-0.5, &ctx).unwrap().value;
        assert_eq!(a, -b);
        assert!((a - 0.533_187).abs() < 1e-6);
        let rule = gauss_legendre(200, -1.0, 1.0).unwrap();
        let d = SingularEigenfunction::discrete(&ctx, 1.0);
        let direct = rule.integrate(|mu| mu * (d.pv_coeff / (d.nu - mu)).powi(2));
        let n0 = normalization(ctx.nu0, &ctx).unwrap().value;
        assert!((direct - n0).abs() < 1e-8 * n0);
        assert!(normalization(1.5, &ctx).is_err());
    }

    #[test]
    fn continuous_normalisation_identity() {
        for i in 0..50 {
            let nu = -0.98 + 1.96 * i as f64 / 49.0;
            let w = 0.73;
            let m = SingularEigenfunction::continuous(nu, w).unwrap();
            // pv_coeff * P int dmu/(nu-mu) = albedo nu atanh(nu)
            let pv = m.pv_coeff * 2.0 * nu.atanh();
            assert!((pv + m.delta_weight - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn one_dimensional_orthogonality() {
        let ctx = DispersionContext::new(0.8).unwrap();
        let rule = gauss_legendre(64, -1.0, 1.0).unwrap();
        let m = |nu| SingularEigenfunction::new(nu, &ctx).unwrap();
        for (a, b) in [(0.3, -0.6), (0.1, 0.75), (ctx.nu0, 0.4), (-ctx.nu0, 0.9), (ctx.nu0, -ctx.nu0)] {
            let v = mu_overlap(&m(a), &m(b), &rule).unwrap();
            assert!(v.abs() < 1e-12, "({a}, {b}) -> {v}");
        }
    }
}
