//! Special functions: Legendre P and Q, Bessel J, Wigner d, spherical
//! harmonics and the Chandrasekhar polynomials of the moment recurrence.

pub mod dd;

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use dd::{CDd, Dd};

/// Degree threshold control for Q_l: upward recurrence is trusted while the
/// growth factor rho^(2l) of its dominant error stays below this value.
pub const Q_UPWARD_GROWTH_MAX: f64 = 1e4;

/// P_l(x) by the three-term recurrence.
pub fn legendre_p(l: usize, x: Complex64) -> Complex64 {
    *legendre_p_all(l, x).last().expect("nonempty")
}

/// P_0(x) ..= P_lmax(x).
pub fn legendre_p_all(l_max: usize, x: Complex64) -> Vec<Complex64> {
    let mut p = Vec::with_capacity(l_max + 1);
    p.push(Complex64::new(1.0, 0.0));
    if l_max >= 1 {
        p.push(x);
    }
    for l in 1..l_max {
        let lf = l as f64;
        let next = (x * p[l] * (2.0 * lf + 1.0) - p[l - 1] * lf) / (lf + 1.0);
        p.push(next);
    }
    p
}

/// Real-argument P_0 ..= P_lmax.
pub fn legendre_p_real(l_max: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(l_max + 1);
    p.push(1.0);
    if l_max >= 1 {
        p.push(x);
    }
    for l in 1..l_max {
        let lf = l as f64;
        p.push(((2.0 * lf + 1.0) * x * p[l] - lf * p[l - 1]) / (lf + 1.0));
    }
    p
}

fn on_cut(z: Complex64) -> bool {
    z.im == 0.0 && z.re.abs() <= 1.0
}

/// atanh(u) for small complex u without the cancellation of the log form.
fn atanh_small(u: Complex64) -> Complex64 {
    let u2 = u * u;
    let mut term = u;
    let mut sum = u;
    for k in 1..40 {
        term *= u2;
        let add = term / (2 * k + 1) as f64;
        sum += add;
        if add.norm() <= 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

/// Q_0(z) = (1/2) ln((z+1)/(z-1)), analytic off [-1, 1].
pub fn legendre_q0(z: Complex64) -> Result<Complex64> {
    if on_cut(z) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::BranchCut(format!("{z}")));
    }
    if z.norm() > 8.0 {
        return Ok(atanh_small(1.0 / z));
    }
    Ok(0.5 * ((z + 1.0) / (z - 1.0)).ln())
}

/// |z + sqrt(z^2 - 1)| on the branch with modulus >= 1.
fn bernstein_radius(z: Complex64) -> f64 {
    let s = (z - 1.0).sqrt() * (z + 1.0).sqrt();
    (z + s).norm().max((z - s).norm())
}

/// Q_l(z) for one degree.
pub fn legendre_q(l: usize, z: Complex64) -> Result<Complex64> {
    Ok(legendre_q_all(l, z)?[l])
}

/// Q_0(z) ..= Q_lmax(z), off the cut [-1, 1].
///
/// Upward recurrence up to the degree where its error growth rho^(2l)
/// reaches [`Q_UPWARD_GROWTH_MAX`]; above that a backward (Miller)
/// recurrence normalised to Q_0.
pub fn legendre_q_all(l_max: usize, z: Complex64) -> Result<Vec<Complex64>> {
    let q0 = legendre_q0(z)?;
    let rho = bernstein_radius(z);
    let lrho = rho.ln();
    let l_up = if lrho > 0.0 {
        (0.5 * Q_UPWARD_GROWTH_MAX.ln() / lrho).floor() as usize
    } else {
        usize::MAX
    };
    let mut q = Vec::with_capacity(l_max + 1);
    q.push(q0);
    if l_max == 0 {
        return Ok(q);
    }
    let upto = l_max.min(l_up.max(1));
    q.push(z * q0 - 1.0);
    for l in 1..upto {
        let lf = l as f64;
        let next = (z * q[l] * (2.0 * lf + 1.0) - q[l - 1] * lf) / (lf + 1.0);
        q.push(next);
    }
    if upto == l_max {
        return Ok(q);
    }
    // Miller: start far enough above l_max that rho^(-2(N - l_max)) < 1e-17.
    let extra = ((17.0 * 10f64.ln() / (2.0 * lrho)).ceil() as usize + 10).min(400_000);
    let n = l_max + extra;
    let mut hi = Complex64::new(0.0, 0.0);
    let mut cur = Complex64::new(1e-30, 0.0);
    let mut tail = vec![Complex64::new(0.0, 0.0); l_max + 1];
    for l in (1..=n).rev() {
        // (l) Q_{l-1} = (2l+1) z Q_l - (l+1) Q_{l+1}
        let lf = l as f64;
        let prev = (z * cur * (2.0 * lf + 1.0) - hi * (lf + 1.0)) / lf;
        hi = cur;
        cur = prev;
        if l <= l_max {
            tail[l] = hi;
        }
        let m = cur.norm();
        if m > 1e100 {
            let s = 1e-100;
            cur *= s;
            hi *= s;
            for t in tail.iter_mut() {
                *t *= s;
            }
        }
    }
    tail[0] = cur;
    let scale = q0 / tail[0];
    for t in tail.iter().skip(upto + 1) {
        q.push(*t * scale);
    }
    Ok(q)
}

/// J_m(x) for integer m >= 0 and x >= 0.
pub fn bessel_j(m: usize, x: f64) -> f64 {
    bessel_j_all(m, x)[m]
}

fn bessel_asymptotic(n: u32, x: f64) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term = 1.0;
    for k in 0..40u32 {
        if k > 0 {
            let j = (2 * k - 1) as f64;
            term *= (mu - j * j) / (k as f64 * 8.0 * x);
        }
        let add = match k % 4 {
            0 => {
                p += term;
                term
            }
            1 => {
                q += term;
                term
            }
            2 => {
                p -= term;
                term
            }
            _ => {
                q -= term;
                term
            }
        };
        if add.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * n as f64 + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// J_0(x) ..= J_mmax(x).
pub fn bessel_j_all(m_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; m_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let x = x.abs();
    if x >= 25.0 && (m_max as f64) < x {
        out[0] = bessel_asymptotic(0, x);
        if m_max >= 1 {
            out[1] = bessel_asymptotic(1, x);
        }
        for m in 1..m_max {
            out[m + 1] = 2.0 * m as f64 / x * out[m] - out[m - 1];
        }
        return out;
    }
    let big = (m_max as f64).max(x.ceil());
    let mut n = (big + 20.0 + (60.0 * big).sqrt()) as usize;
    n += n % 2;
    let mut jp = 0.0;
    let mut j = 1e-300;
    let mut norm = 0.0;
    for k in (1..=n).rev() {
        let jm = 2.0 * k as f64 / x * j - jp;
        jp = j;
        j = jm;
        let idx = k - 1;
        if idx <= m_max {
            out[idx] = j;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            norm *= 1e-250;
            for o in out.iter_mut() {
                *o *= 1e-250;
            }
        }
    }
    norm += j;
    for o in out.iter_mut() {
        *o /= norm;
    }
    out
}

fn binomial(n: i64, k: i64) -> f64 {
    if k < 0 || k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut b = 1.0;
    for i in 0..k {
        b *= (n - i) as f64 / (i + 1) as f64;
    }
    b
}

fn jacobi(n: i64, a: f64, b: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut p0 = 1.0;
    let mut p1 = (a + 1.0) + (a + b + 2.0) * (x - 1.0) / 2.0;
    for k in 1..n {
        let k = k as f64;
        let c = 2.0 * k + a + b;
        let a1 = 2.0 * (k + 1.0) * (k + a + b + 1.0) * c;
        let a2 = (c + 1.0) * (a * a - b * b);
        let a3 = c * (c + 1.0) * (c + 2.0);
        let a4 = 2.0 * (k + a) * (k + b) * (c + 2.0);
        let p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Little Wigner d^l_{m' m}(beta), with D^l_{m'm}(a, b, g) = e^{-i m' a} d^l_{m'm}(b) e^{-i m g}.
pub fn wigner_d(l: i64, m_prime: i64, m: i64, beta: f64) -> Result<f64> {
    if l < 0 || m.abs() > l || m_prime.abs() > l {
        return Err(Error::InvalidArgument(format!(
            "wigner_d indices out of range: l={l}, m'={m_prime}, m={m}"
        )));
    }
    // Jacobi-polynomial form; case split on the smallest of l +/- m, l +/- m'.
    let cands = [(l + m, 0), (l - m, 1), (l + m_prime, 2), (l - m_prime, 3)];
    let (k, case) = cands.iter().copied().min_by_key(|c| c.0).expect("four candidates");
    let (a, lam) = match case {
        0 => (m_prime - m, m_prime - m),
        1 => (m - m_prime, 0),
        2 => (m - m_prime, 0),
        _ => (m_prime - m, m_prime - m),
    };
    let b = 2 * l - 2 * k - a;
    let sign = if lam.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let norm = (binomial(2 * l - k, k + a) / binomial(k + b, b)).sqrt();
    let (s, c) = (0.5 * beta).sin_cos();
    Ok(sign * norm * s.powi(a as i32) * c.powi(b as i32) * jacobi(k, a as f64, b as f64, beta.cos()))
}

/// Orthonormal associated Legendre table: out[l][m] = sqrt((2l+1)/4pi (l-m)!/(l+m)!) P_l^m(x)
/// for 0 <= m <= l <= l_max, Condon-Shortley phase included.
pub fn sph_legendre_table(l_max: usize, x: f64) -> Vec<Vec<f64>> {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut t: Vec<Vec<f64>> = (0..=l_max).map(|l| vec![0.0; l + 1]).collect();
    t[0][0] = 1.0 / (4.0 * PI).sqrt();
    for m in 1..=l_max {
        let mf = m as f64;
        t[m][m] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * t[m - 1][m - 1];
    }
    for m in 0..l_max {
        t[m + 1][m] = (2.0 * m as f64 + 3.0).sqrt() * x * t[m][m];
    }
    for m in 0..=l_max {
        for l in (m + 2)..=l_max {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            t[l][m] = a * (x * t[l - 1][m] - b * t[l - 2][m]);
        }
    }
    t
}

/// Y_lm(theta, phi), orthonormal, Condon-Shortley phase.
pub fn spherical_harmonic(l: usize, m: i64, theta: f64, phi: f64) -> Result<Complex64> {
    if m.unsigned_abs() as usize > l {
        return Err(Error::InvalidArgument(format!("|m| > l for l={l}, m={m}")));
    }
    let ma = m.unsigned_abs() as usize;
    let p = sph_legendre_table(l, theta.cos())[l][ma];
    let y = Complex64::from_polar(p, ma as f64 * phi);
    if m >= 0 {
        Ok(y)
    } else if ma.is_multiple_of(2) {
        Ok(y.conj())
    } else {
        Ok(-y.conj())
    }
}

/// One entry of the Chandrasekhar families at argument z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChandrasekharPair {
    pub l: usize,
    pub g: Complex64,
    pub rho: Complex64,
    pub z: Complex64,
    pub albedo: f64,
}

/// Chandrasekhar polynomials g_l (first kind) and rho_l (second kind), l = 0..=l_max.
///
/// Recurrence z h_l x_l = (l+1) x_{l+1} + l x_{l-1}, h_l = 2l+1 - albedo [l = 0],
/// with g_0 = 1, g_1 = z(1 - albedo), rho_0 = 0, rho_1 = z. For |z| < 1 the
/// recurrence is carried in double-double.
pub fn chandrasekhar(l_max: usize, z: Complex64, albedo: f64) -> Vec<ChandrasekharPair> {
    let (g, rho) = if z.norm() < 1.0 {
        let (g, r) = chandrasekhar_dd(l_max, CDd::from(z), albedo);
        (
            g.iter().map(|v| v.to_c64()).collect::<Vec<_>>(),
            r.iter().map(|v| v.to_c64()).collect::<Vec<_>>(),
        )
    } else {
        chandrasekhar_f64(l_max, z, albedo)
    };
    (0..=l_max)
        .map(|l| ChandrasekharPair { l, g: g[l], rho: rho[l], z, albedo })
        .collect()
}

pub(crate) fn chandrasekhar_f64(l_max: usize, z: Complex64, albedo: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut g = Vec::with_capacity(l_max + 2);
    let mut r = Vec::with_capacity(l_max + 2);
    g.push(Complex64::new(1.0, 0.0));
    r.push(Complex64::new(0.0, 0.0));
    g.push(z * (1.0 - albedo));
    r.push(z);
    for l in 1..l_max {
        let lf = l as f64;
        let h = 2.0 * lf + 1.0;
        g.push((z * g[l] * h - g[l - 1] * lf) / (lf + 1.0));
        r.push((z * r[l] * h - r[l - 1] * lf) / (lf + 1.0));
    }
    g.truncate(l_max + 1);
    r.truncate(l_max + 1);
    (g, r)
}

pub(crate) fn chandrasekhar_dd(l_max: usize, z: CDd, albedo: f64) -> (Vec<CDd>, Vec<CDd>) {
    let mut g = Vec::with_capacity(l_max + 2);
    let mut r = Vec::with_capacity(l_max + 2);
    g.push(CDd::ONE);
    r.push(CDd::ZERO);
    g.push(z.scale(Dd::ONE - Dd::new(albedo)));
    r.push(z);
    for l in 1..l_max {
        let lf = l as f64;
        let h = Dd::new(2.0 * lf + 1.0);
        let inv = Dd::ONE / Dd::new(lf + 1.0);
        let lfd = Dd::new(lf);
        g.push(((z * g[l]).scale(h) - g[l - 1].scale(lfd)).scale(inv));
        r.push(((z * r[l]).scale(h) - r[l - 1].scale(lfd)).scale(inv));
    }
    g.truncate(l_max + 1);
    r.truncate(l_max + 1);
    (g, r)
}

/// x = m 2^e exactly.
fn dyadic(x: f64) -> Result<(BigInt, i64)> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite {x}")));
    }
    if x == 0.0 {
        return Ok((BigInt::zero(), 0));
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 0 { 1i64 } else { -1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & 0xf_ffff_ffff_ffff;
    let (m, e) = if exp == 0 { (frac, -1074) } else { (frac | (1 << 52), exp - 1075) };
    Ok((BigInt::from(sign) * BigInt::from(m), e))
}

/// Integer-scaled exact Chandrasekhar families.
///
/// With z = Z / D, albedo = C / F (D, F powers of two) the scaled values
/// X^g_l = F l! D^l g_l and X^rho_l = l! D^l rho_l obey
/// X_{l+1} = (2l+1) Z X_l - l^2 D^2 X_{l-1} in exact integer arithmetic.
struct ExactChandrasekhar {
    z: Complex<BigInt>,
    d: BigInt,
    f: BigInt,
    g: Vec<Complex<BigInt>>,
    r: Vec<Complex<BigInt>>,
}

fn chandrasekhar_exact(l_max: usize, z: Complex64, albedo: f64) -> Result<ExactChandrasekhar> {
    let (mr, er) = dyadic(z.re)?;
    let (mi, ei) = dyadic(z.im)?;
    let (mc, ec) = dyadic(albedo)?;
    let e = er.min(ei).min(0);
    // z = Z / 2^(-e)
    let shift = |m: BigInt, ex: i64| m << ((ex - e) as usize);
    let zz = Complex::new(shift(mr, er), shift(mi, ei));
    let d = BigInt::one() << ((-e) as usize);
    let fe = ec.min(0);
    let f = BigInt::one() << ((-fe) as usize);
    let c = mc << ((ec - fe) as usize);
    let cz = |v: BigInt| Complex::new(v, BigInt::zero());
    let mut g = vec![cz(f.clone()), zz.clone() * (f.clone() - c)];
    let mut r = vec![cz(BigInt::zero()), zz.clone()];
    let d2 = cz(&d * &d);
    for l in 1..l_max {
        let h = cz(BigInt::from(2 * l + 1));
        let ll = cz(BigInt::from(l * l));
        let gn = zz.clone() * h.clone() * g[l].clone() - ll.clone() * d2.clone() * g[l - 1].clone();
        let rn = zz.clone() * h * r[l].clone() - ll * d2.clone() * r[l - 1].clone();
        g.push(gn);
        r.push(rn);
    }
    g.truncate(l_max + 1);
    r.truncate(l_max + 1);
    Ok(ExactChandrasekhar { z: zz, d, f, g, r })
}

/// Wronskian defects |(l+1)(g_l rho_{l+1} - g_{l+1} rho_l) - z| / |z| for l < l_max.
///
/// `exact` evaluates the chain in rational arithmetic on the exact binary
/// values of z and albedo; otherwise the double-double values are used and
/// the defect is relative to the size of the two products, which measures
/// rounding rather than the identity.
pub fn wronskian_defects(l_max: usize, z: Complex64, albedo: f64, exact: bool) -> Result<Vec<f64>> {
    if exact {
        let ex = chandrasekhar_exact(l_max, z, albedo)?;
        let mut out = Vec::with_capacity(l_max);
        // Expected: X^g_l X^r_{l+1} - X^g_{l+1} X^r_l = F (l!)^2 D^(2l) Z.
        let mut scale = ex.f.clone();
        for l in 0..l_max {
            if l > 0 {
                scale = scale * BigInt::from(l * l) * &ex.d * &ex.d;
            }
            let w = ex.g[l].clone() * ex.r[l + 1].clone() - ex.g[l + 1].clone() * ex.r[l].clone();
            let expect = ex.z.clone() * Complex::new(scale.clone(), BigInt::zero());
            let diff = w - expect.clone();
            let rel = if diff.re.is_zero() && diff.im.is_zero() {
                0.0
            } else {
                // Drop common low bits so both magnitudes fit in f64.
                let bits = expect.re.bits().max(expect.im.bits()).max(diff.re.bits()).max(diff.im.bits());
                let sh = bits.saturating_sub(900) as usize;
                let f = |v: &BigInt| (v >> sh).to_f64().unwrap_or(f64::INFINITY);
                f(&diff.re).hypot(f(&diff.im)) / f(&expect.re).hypot(f(&expect.im))
            };
            out.push(rel);
        }
        return Ok(out);
    }
    let (g, r) = chandrasekhar_dd(l_max, CDd::from(z), albedo);
    let mut out = Vec::with_capacity(l_max);
    for l in 0..l_max {
        let lp = Dd::new((l + 1) as f64);
        let a = (g[l] * r[l + 1]).scale(lp);
        let b = (g[l + 1] * r[l]).scale(lp);
        let d = (a - b - CDd::from(z)).to_c64().norm();
        let size = a.to_c64().norm().max(b.to_c64().norm()).max(z.norm());
        out.push(d / size);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn legendre_p_examples() {
        assert_eq!(legendre_p(0, c(0.3, 0.7)), c(1.0, 0.0));
        assert!((legendre_p(2, c(0.5, 0.0)) - c(-0.125, 0.0)).norm() < 1e-15);
        assert!((legendre_p(3, c(1.0, 0.0)) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn legendre_q_examples() {
        let q0 = legendre_q(0, c(2.0, 0.0)).unwrap();
        assert!((q0.re - 0.549_306_144_334_054_8).abs() < 1e-15 && q0.im == 0.0);
        let q1 = legendre_q(1, c(2.0, 0.0)).unwrap();
        assert!((q1.re - 0.098_612_288_668_109_6).abs() < 1e-15);
        let qi = legendre_q(0, c(0.0, 1.0)).unwrap();
        assert!((qi - c(0.0, -PI / 4.0)).norm() < 1e-15);
        assert!(matches!(legendre_q(0, c(0.5, 0.0)), Err(Error::BranchCut(_))));
    }

    #[test]
    fn q_satisfies_the_p_recurrence() {
        for z in [c(2.0, 0.0), c(1.0, 1.0)] {
            let q = legendre_q_all(21, z).unwrap();
            for l in 1..=20 {
                let lf = l as f64;
                let lhs = q[l] * z * (2.0 * lf + 1.0);
                let rhs = q[l + 1] * (lf + 1.0) + q[l - 1] * lf;
                assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(rhs.norm()), "l={l} z={z}");
            }
        }
    }

    #[test]
    fn q_high_degree_matches_heine_sum() {
        // sum (2l+1) P_l(x) Q_l(z) = 1/(z - x)
        let z = c(0.0, 0.05);
        let x = 0.3;
        let l_max = 4000;
        let q = legendre_q_all(l_max, z).unwrap();
        let p = legendre_p_real(l_max, x);
        let mut s = c(0.0, 0.0);
        for l in 0..=l_max {
            s += q[l] * p[l] * (2 * l + 1) as f64;
        }
        let exact = 1.0 / (z - x);
        assert!((s - exact).norm() < 1e-6 * exact.norm(), "{s} vs {exact}");
    }

    #[test]
    fn bessel_examples() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_j(1, 0.0), 0.0);
        assert!(bessel_j(0, 2.404_825_557_695_773).abs() < 1e-10);
        assert!((bessel_j(1, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((bessel_j(0, 30.0) - (-0.086_367_983_581_040_2)).abs() < 1e-14);
        assert!((bessel_j(5, 10.0) - (-0.234_061_528_186_793_6)).abs() < 1e-14);
    }

    #[test]
    fn bessel_integral_identity() {
        for &x in &[0.5, 3.0, 10.0] {
            let n = 64;
            let mut s = 0.0;
            for j in 0..n {
                let phi = 2.0 * PI * j as f64 / n as f64;
                s += (x * phi.cos()).cos();
            }
            s /= n as f64;
            assert!((s - bessel_j(0, x)).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn wigner_d_examples() {
        assert!((wigner_d(0, 0, 0, 0.4).unwrap() - 1.0).abs() < 1e-15);
        assert!((wigner_d(1, 0, 0, 0.4).unwrap() - 0.4f64.cos()).abs() < 1e-15);
        let p4 = legendre_p_real(4, 0.7f64.cos())[4];
        assert!((wigner_d(4, 0, 0, 0.7).unwrap() - p4).abs() < 1e-14);
        assert!(wigner_d(2, 3, 0, 0.1).is_err());
    }

    #[test]
    fn wigner_d_known_entries() {
        let b: f64 = 0.9;
        // d^1_{1,0} = -sin(b)/sqrt(2), d^1_{1,1} = (1+cos b)/2, d^1_{1,-1} = (1-cos b)/2
        assert!((wigner_d(1, 1, 0, b).unwrap() + b.sin() / 2f64.sqrt()).abs() < 1e-15);
        assert!((wigner_d(1, 1, 1, b).unwrap() - 0.5 * (1.0 + b.cos())).abs() < 1e-15);
        assert!((wigner_d(1, 1, -1, b).unwrap() - 0.5 * (1.0 - b.cos())).abs() < 1e-15);
        assert!((wigner_d(1, 0, 1, b).unwrap() - b.sin() / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn wigner_column_matches_harmonics() {
        let beta: f64 = 1.1;
        for l in 0..8usize {
            let t = sph_legendre_table(l, beta.cos());
            for m in 0..=l {
                let d = wigner_d(l as i64, m as i64, 0, beta).unwrap();
                let y = (4.0 * PI / (2 * l + 1) as f64).sqrt() * t[l][m];
                assert!((d - y).abs() < 1e-13, "l={l} m={m}: {d} vs {y}");
            }
        }
    }

    #[test]
    fn wigner_unitarity() {
        for l in 0..12i64 {
            for m in -l..=l {
                let s: f64 = (-l..=l).map(|mp| wigner_d(l, mp, m, 0.83).unwrap().powi(2)).sum();
                assert!((s - 1.0).abs() < 1e-12, "l={l} m={m}");
            }
        }
    }

    #[test]
    fn harmonic_symmetry() {
        let y = spherical_harmonic(3, 2, 0.7, 0.4).unwrap();
        let ym = spherical_harmonic(3, -2, 0.7, 0.4).unwrap();
        assert!((ym - y.conj()).norm() < 1e-15);
        let y10 = spherical_harmonic(1, 0, 0.7, 0.0).unwrap();
        assert!((y10.re - (3.0 / (4.0 * PI)).sqrt() * 0.7f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn chandrasekhar_examples() {
        let v = chandrasekhar(2, c(2.0, 0.0), 0.9);
        assert_eq!(v[0].g, c(1.0, 0.0));
        assert_eq!(v[0].rho, c(0.0, 0.0));
        assert!((v[1].g - c(0.2, 0.0)).norm() < 1e-15);
        assert!((v[2].g - c(0.1, 0.0)).norm() < 1e-14);
        let z = c(0.4, -1.3);
        let v = chandrasekhar(10, z, 0.0);
        let p = legendre_p_all(10, z);
        for l in 0..=10 {
            assert!((v[l].g - p[l]).norm() < 1e-12 * p[l].norm().max(1.0));
        }
    }

    #[test]
    fn wronskian_chain() {
        for z in [c(0.3, 0.2), c(2.0, -1.0), c(0.0, 5.0), c(-7.1, 6.9)] {
            let exact = wronskian_defects(51, z, 0.7, true).unwrap();
            assert!(exact.iter().all(|&d| d < 1e-10), "{z}: {exact:?}");
            let rounded = wronskian_defects(51, z, 0.7, false).unwrap();
            assert!(rounded.iter().all(|&d| d < 1e-28), "{z}: {rounded:?}");
        }
    }

    #[test]
    fn low_degree_wronskian_in_f64() {
        let z = c(0.3, 0.2);
        let v = chandrasekhar(11, z, 0.9);
        for l in 0..=10 {
            let w = (v[l].g * v[l + 1].rho - v[l + 1].g * v[l].rho) * (l + 1) as f64;
            assert!((w - z).norm() < 1e-10 * z.norm(), "l={l}");
        }
    }
}
