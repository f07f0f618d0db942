//! The result record shared by the three evaluators and their quadrature settings.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Csf,
    Conv,
    Ganapol,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Csf, Method::Conv, Method::Ganapol];

    pub fn name(self) -> &'static str {
        match self {
            Method::Csf => "csf",
            Method::Conv => "conv",
            Method::Ganapol => "ganapol",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csf" => Ok(Method::Csf),
            "conv" | "fourier" => Ok(Method::Conv),
            "ganapol" => Ok(Method::Ganapol),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

/// One evaluation of the angular flux (or, with `omega == None`, the scalar flux).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreensEvaluation {
    pub r: [f64; 3],
    pub omega: Option<[f64; 3]>,
    pub omega0: [f64; 3],
    pub method: Method,
    #[serde(with = "complex_pair")]
    pub value: Complex64,
    /// Re(value).
    pub reported: f64,
    /// |Im| / |Re|.
    pub imag_residue: f64,
    /// Truncation plus discretisation estimate, absolute.
    pub error_estimate: f64,
    /// Set when the geometry lies outside the region the method is exact in.
    pub degraded: bool,
    /// Quadrature sizes and cutoffs actually used.
    pub meta: BTreeMap<String, f64>,
}

impl GreensEvaluation {
    pub(crate) fn new(
        r: [f64; 3],
        omega: Option<[f64; 3]>,
        omega0: [f64; 3],
        method: Method,
        value: Complex64,
    ) -> Self {
        let imag_residue = if value.re != 0.0 {
            value.im.abs() / value.re.abs()
        } else if value.im == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        GreensEvaluation {
            r,
            omega,
            omega0,
            method,
            value,
            reported: value.re,
            imag_residue,
            error_estimate: 0.0,
            degraded: false,
            meta: BTreeMap::new(),
        }
    }

    pub fn relative_difference(&self, other: &GreensEvaluation) -> f64 {
        (self.reported - other.reported).abs() / self.reported.abs().max(other.reported.abs())
    }
}

mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [v.re, v.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsfConfig {
    /// Gauss nodes per q panel.
    pub n_q: usize,
    /// Azimuthal q nodes; raised to at least 32 and to a multiple of 4.
    pub n_phi_q: usize,
    /// Gauss nodes per nu panel.
    pub n_nu: usize,
    /// q_max = q_cut / |z|; 27.63 makes the discrete factor about 1e-12.
    pub q_cut: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvConfig {
    /// Gauss nodes per k panel.
    pub n_k: usize,
    /// Window scale: k_cut = max(k_cut_min, k_cut_r / R), capped at k_cut_max.
    pub k_cut_r: f64,
    pub k_cut_min: f64,
    pub k_cut_max: f64,
    /// Gauss nodes per unit path length along the beam and line of sight.
    pub n_s: usize,
    /// Path length cutoff in units of the attenuation length nu0.
    pub s_cut: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanapolConfig {
    pub l_max: usize,
    pub n_k: usize,
    pub n_mu: usize,
    /// Window scale: k_cut = clamp(k_cut_r / r, k_cut_min, k_cut_max).
    pub k_cut_r: f64,
    pub k_cut_min: f64,
    pub k_cut_max: f64,
    /// Repeated averaging passes over the partial sums in l.
    pub euler_passes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub csf: CsfConfig,
    pub conv: ConvConfig,
    pub ganapol: GanapolConfig,
    pub sphere_polar: usize,
    pub sphere_azimuth: usize,
    /// Outputs with a larger imag_residue are rejected.
    pub imag_tol: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            csf: CsfConfig { n_q: 10, n_phi_q: 32, n_nu: 10, q_cut: 27.63 },
            conv: ConvConfig {
                n_k: 10,
                k_cut_r: 60.0,
                k_cut_min: 20.0,
                k_cut_max: 2000.0,
                n_s: 4,
                s_cut: 40.0,
            },
            ganapol: GanapolConfig {
                l_max: 15,
                n_k: 6,
                n_mu: 6,
                k_cut_r: 100.0,
                k_cut_min: 20.0,
                k_cut_max: 400.0,
                euler_passes: 3,
            },
            sphere_polar: 64,
            sphere_azimuth: 128,
            imag_tol: 1e-5,
        }
    }
}

impl QuadConfig {
    /// Every node count doubled; cutoffs unchanged.
    pub fn doubled(&self) -> QuadConfig {
        let mut c = self.clone();
        c.csf.n_q *= 2;
        c.csf.n_phi_q *= 2;
        c.csf.n_nu *= 2;
        c.conv.n_k *= 2;
        c.conv.n_s *= 2;
        c.ganapol.n_k *= 2;
        c.ganapol.n_mu *= 2;
        c.sphere_polar *= 2;
        c.sphere_azimuth *= 2;
        c
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("csf.n_q", self.csf.n_q),
            ("csf.n_phi_q", self.csf.n_phi_q),
            ("csf.n_nu", self.csf.n_nu),
            ("conv.n_k", self.conv.n_k),
            ("conv.n_s", self.conv.n_s),
            ("ganapol.n_k", self.ganapol.n_k),
            ("ganapol.n_mu", self.ganapol.n_mu),
            ("sphere.n_polar", self.sphere_polar),
            ("sphere.n_azimuth", self.sphere_azimuth),
        ];
        for (name, v) in sizes {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        let cuts = [
            ("csf.q_cut", self.csf.q_cut),
            ("conv.k_cut_r", self.conv.k_cut_r),
            ("conv.k_cut_min", self.conv.k_cut_min),
            ("conv.k_cut_max", self.conv.k_cut_max),
            ("conv.s_cut", self.conv.s_cut),
            ("ganapol.k_cut_r", self.ganapol.k_cut_r),
            ("ganapol.k_cut_min", self.ganapol.k_cut_min),
            ("ganapol.k_cut_max", self.ganapol.k_cut_max),
            ("imag_tol", self.imag_tol),
        ];
        for (name, v) in cuts {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Accept a direction if it is within 1e-6 of unit length, renormalised.
pub fn unit_vector(v: [f64; 3]) -> Result<[f64; 3]> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !((1.0 - n).abs() < 1e-6) {
        return Err(Error::InvalidArgument(format!("direction {v:?} has norm {n}, expected 1")));
    }
    Ok([v[0] / n, v[1] / n, v[2] / n])
}

/// (sin t cos p, sin t sin p, cos t).
pub fn direction(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}
