//! Rotated reference frames: complex unit vectors k = (-i nu q, k_z),
//! evaluation of functions of mu in the rotated frame, and Wigner-D rotation
//! of band-limited functions on the sphere.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::SphereRule;
use crate::specfun::{legendre_p, spherical_harmonic, wigner_d};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A complex 3-vector with unit non-conjugated square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexDirection(pub [Complex64; 3]);

impl ComplexDirection {
    pub fn dot_real(&self, v: [f64; 3]) -> Complex64 {
        self.0[0] * v[0] + self.0[1] * v[1] + self.0[2] * v[2]
    }

    pub fn dot(&self, v: &[Complex64; 3]) -> Complex64 {
        self.0[0] * v[0] + self.0[1] * v[1] + self.0[2] * v[2]
    }

    /// k . k without conjugation.
    pub fn self_dot(&self) -> Complex64 {
        self.dot(&self.0)
    }
}

/// Eigenvalue nu with transverse wave vector q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseMode {
    pub nu: f64,
    pub q: [f64; 2],
    pub khat: ComplexDirection,
    pub kz: f64,
}

impl TransverseMode {
    pub fn q_norm(&self) -> f64 {
        self.q[0].hypot(self.q[1])
    }
}

/// k = (-i nu q, sqrt(1 + nu^2 q^2)), positive branch.
pub fn build_mode(nu: f64, q: [f64; 2]) -> Result<TransverseMode> {
    if nu == 0.0 || !nu.is_finite() {
        return Err(Error::InvalidArgument("transverse mode needs nu != 0".into()));
    }
    let q2 = q[0] * q[0] + q[1] * q[1];
    let kz = (1.0 + nu * nu * q2).sqrt();
    let khat = ComplexDirection([
        -I * (nu * q[0]),
        -I * (nu * q[1]),
        Complex64::new(kz, 0.0),
    ]);
    Ok(TransverseMode { nu, q, khat, kz })
}

/// k_z mu - i nu |q| sqrt(1 - mu^2) cos(phi - phi_q).
pub fn rotated_mu(mode: &TransverseMode, omega: [f64; 3]) -> Complex64 {
    let mu = omega[2];
    let s = omega[0].hypot(omega[1]);
    let qn = mode.q_norm();
    let cos = if s == 0.0 || qn == 0.0 {
        0.0
    } else {
        (omega[0] * mode.q[0] + omega[1] * mode.q[1]) / (s * qn)
    };
    Complex64::new(mode.kz * mu, -mode.nu * qn * s * cos)
}

/// The displayed inverse-rotation formula k_z mu - i |nu q| sqrt(1 - mu^2) cos(phi),
/// with phi measured from q. Kept only as a cross-check; for nu < 0 it is the
/// inverse rotation of the mode with q reflected.
pub fn inverse_rotated_mu_display(mode: &TransverseMode, omega: [f64; 3]) -> Complex64 {
    let mu = omega[2];
    let s = omega[0].hypot(omega[1]);
    let qn = mode.q_norm();
    let cos = if s == 0.0 || qn == 0.0 {
        0.0
    } else {
        (omega[0] * mode.q[0] + omega[1] * mode.q[1]) / (s * qn)
    };
    Complex64::new(mode.kz * mu, -(mode.nu * qn).abs() * s * cos)
}

/// P_l(k . Omega).
pub fn rotated_legendre(mode: &TransverseMode, l: usize, omega: [f64; 3]) -> Complex64 {
    legendre_p(l, rotated_mu(mode, omega))
}

/// A complex orthogonal matrix (R^T R = 1) with R z = k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexRotation(pub [[Complex64; 3]; 3]);

impl ComplexRotation {
    pub fn apply(&self, v: [f64; 3]) -> [Complex64; 3] {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }
}

/// R_z(phi_q) R_y(theta) with cos(theta) = k_z and sin(theta) = -i nu |q|.
pub fn complex_rotation(mode: &TransverseMode) -> ComplexRotation {
    let qn = mode.q_norm();
    let (sp, cp) = if qn == 0.0 { (0.0, 1.0) } else { (mode.q[1] / qn, mode.q[0] / qn) };
    let c = Complex64::new(mode.kz, 0.0);
    let s = -I * (mode.nu * qn);
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    // R_y = [[c,0,s],[0,1,0],[-s,0,c]], R_z = [[cp,-sp,0],[sp,cp,0],[0,0,1]]
    let ry = [[c, z, s], [z, one, z], [-s, z, c]];
    let rz = [
        [Complex64::new(cp, 0.0), Complex64::new(-sp, 0.0), z],
        [Complex64::new(sp, 0.0), Complex64::new(cp, 0.0), z],
        [z, z, one],
    ];
    let mut m = [[z; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| rz[i][k] * ry[k][j]).sum();
        }
    }
    ComplexRotation(m)
}

/// Does the pole of phi(nu, k . Omega) lie on the real unit sphere?
///
/// For |nu| > 1 this happens once k_z >= |nu|; continuous eigenvalues
/// always have their support on the sphere.
pub fn pole_on_sphere(mode: &TransverseMode) -> bool {
    mode.nu.abs() < 1.0 || mode.kz >= mode.nu.abs()
}

/// Which 2-cycle carried a sphere integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SphereCycle {
    /// The real unit sphere.
    Real,
    /// The sphere moved by the complex rotation of a mode; equal to the real
    /// sphere by analytic continuation in q.
    Rotated,
}

/// Integrate f(Omega) over the sphere, with Omega possibly complex.
///
/// If `mode` has a pole on the real sphere the integral is taken over
/// R S^2, R the complex rotation of `mode`; the Jacobian is one because R is
/// complex orthogonal.
pub fn sphere_integral(
    mode: &TransverseMode,
    rule: &SphereRule,
    f: impl Fn(&[Complex64; 3]) -> Complex64,
) -> (Complex64, SphereCycle) {
    if pole_on_sphere(mode) && mode.q_norm() > 0.0 {
        let r = complex_rotation(mode);
        let v = rule.integrate(|d| f(&r.apply(d)));
        (v, SphereCycle::Rotated)
    } else {
        let v = rule.integrate(|d| {
            f(&[Complex64::new(d[0], 0.0), Complex64::new(d[1], 0.0), Complex64::new(d[2], 0.0)])
        });
        (v, SphereCycle::Real)
    }
}

/// Spherical-harmonic coefficients f_lm for l <= l_max; entry [l][m + l].
#[derive(Debug, Clone, PartialEq)]
pub struct SphCoeffs {
    pub data: Vec<Vec<Complex64>>,
}

impl SphCoeffs {
    pub fn zeros(l_max: usize) -> Self {
        SphCoeffs { data: (0..=l_max).map(|l| vec![Complex64::new(0.0, 0.0); 2 * l + 1]).collect() }
    }

    pub fn l_max(&self) -> usize {
        self.data.len().saturating_sub(1)
    }

    pub fn set(&mut self, l: usize, m: i64, v: Complex64) {
        self.data[l][(m + l as i64) as usize] = v;
    }

    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        self.data[l][(m + l as i64) as usize]
    }
}

/// (R f)(Omega) = sum f_lm sum_m' D^l_{m'm}(phi_k, theta_k, 0) Y_lm'(Omega)
/// where R carries z to (theta_k, phi_k); equals f(R^{-1} Omega).
pub fn rotate_function(coeffs: &SphCoeffs, theta_k: f64, phi_k: f64, omega: [f64; 3]) -> Result<Complex64> {
    if coeffs.data.is_empty() {
        return Err(Error::InvalidArgument("empty coefficient list".into()));
    }
    let th = omega[2].clamp(-1.0, 1.0).acos();
    let ph = omega[1].atan2(omega[0]);
    let mut acc = Complex64::new(0.0, 0.0);
    for l in 0..=coeffs.l_max() {
        let li = l as i64;
        let ys: Vec<Complex64> = (-li..=li)
            .map(|mp| spherical_harmonic(l, mp, th, ph))
            .collect::<Result<_>>()?;
        for m in -li..=li {
            let f = coeffs.get(l, m);
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut inner = Complex64::new(0.0, 0.0);
            for mp in -li..=li {
                let d = wigner_d(li, mp, m, theta_k)?;
                let phase = Complex64::from_polar(1.0, -(mp as f64) * phi_k);
                inner += phase * d * ys[(mp + li) as usize];
            }
            acc += f * inner;
        }
    }
    Ok(acc)
}

/// Real rotation R_z(phi) R_y(theta).
pub fn real_rotation(theta: f64, phi: f64) -> [[f64; 3]; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [
        [cp * ct, -sp, cp * st],
        [sp * ct, cp, sp * st],
        [-st, 0.0, ct],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::product_sphere_rule;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn build_mode_examples() {
        let m = build_mode(1.3, [0.0, 0.0]).unwrap();
        assert_eq!(m.khat.0, [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let m = build_mode(2.0, [0.5, 0.0]).unwrap();
        assert!((m.khat.0[0] - c(0.0, -1.0)).norm() < 1e-15);
        assert!((m.kz - 2f64.sqrt()).abs() < 1e-15);
        assert!((m.khat.self_dot() - 1.0).norm() < 1e-14);
        assert!(build_mode(0.0, [1.0, 0.0]).is_err());
    }

    #[test]
    fn rotated_mu_examples() {
        let m0 = build_mode(0.7, [0.0, 0.0]).unwrap();
        let om = [0.6, 0.0, 0.8];
        assert!((rotated_mu(&m0, om) - c(0.8, 0.0)).norm() < 1e-15);
        let m = build_mode(2.0, [0.5, 0.0]).unwrap();
        assert!((rotated_mu(&m, [0.0, 0.0, 1.0]) - c(m.kz, 0.0)).norm() < 1e-15);
        assert!((rotated_mu(&m, [1.0, 0.0, 0.0]) - c(0.0, -1.0)).norm() < 1e-15);
        assert!((rotated_legendre(&m, 2, [1.0, 0.0, 0.0]) - c(-2.0, 0.0)).norm() < 1e-14);
        assert_eq!(rotated_legendre(&m, 0, [1.0, 0.0, 0.0]), c(1.0, 0.0));
        assert_eq!(rotated_legendre(&m, 1, [0.6, 0.0, 0.8]), rotated_mu(&m, [0.6, 0.0, 0.8]));
    }

    #[test]
    fn display_formula_agrees_for_positive_nu() {
        let m = build_mode(1.7, [0.3, -0.4]).unwrap();
        let om = [0.48, 0.6, 0.64];
        assert!((inverse_rotated_mu_display(&m, om) - rotated_mu(&m, om)).norm() < 1e-15);
    }

    #[test]
    fn complex_rotation_is_orthogonal() {
        let m = build_mode(-1.9, [0.8, 0.3]).unwrap();
        let r = complex_rotation(&m);
        let z = r.apply([0.0, 0.0, 1.0]);
        for k in 0..3 {
            assert!((z[k] - m.khat.0[k]).norm() < 1e-14);
        }
        for i in 0..3 {
            for j in 0..3 {
                let s: Complex64 = (0..3).map(|k| r.0[k][i] * r.0[k][j]).sum();
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((s - e).norm() < 1e-13, "{i}{j}: {s}");
            }
        }
    }

    #[test]
    fn rotate_mu_gives_dot_product() {
        let mut f = SphCoeffs::zeros(1);
        f.set(1, 0, c((4.0 * PI / 3.0).sqrt(), 0.0));
        let (th, ph) = (0.9, 2.2);
        let r = real_rotation(th, ph);
        let k = [r[0][2], r[1][2], r[2][2]];
        let om = [0.36, -0.48, 0.8];
        let v = rotate_function(&f, th, ph, om).unwrap();
        let dot = k[0] * om[0] + k[1] * om[1] + k[2] * om[2];
        assert!((v - c(dot, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn rotate_examples() {
        let mut f = SphCoeffs::zeros(0);
        f.set(0, 0, c(1.0, 0.0));
        let v = rotate_function(&f, 1.2, 0.3, [0.0, 1.0, 0.0]).unwrap();
        assert!((v - c(1.0 / (4.0 * PI).sqrt(), 0.0)).norm() < 1e-15);
        let mut p2 = SphCoeffs::zeros(2);
        p2.set(2, 0, c((4.0 * PI / 5.0).sqrt(), 0.0));
        let v = rotate_function(&p2, PI / 2.0, 0.0, [1.0, 0.0, 0.0]).unwrap();
        assert!((v - c(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn sphere_average_of_discrete_modes() {
        let rule = product_sphere_rule(64, 128).unwrap();
        for &w in &[0.5, 0.9] {
            let ctx = crate::case1d::DispersionContext::new(w).unwrap();
            for &q in &[0.0, 0.5, 1.0] {
                for &sign in &[1.0, -1.0] {
                    let nu = sign * ctx.nu0;
                    let m = build_mode(nu, [q, 0.0]).unwrap();
                    let (v, _) = sphere_integral(&m, &rule, |om| 0.5 * w * nu / (nu - m.khat.dot(om)));
                    assert!((v / (2.0 * PI) - 1.0).norm() < 1e-10, "w={w} q={q} nu={nu}: {v}");
                }
            }
        }
    }
}
