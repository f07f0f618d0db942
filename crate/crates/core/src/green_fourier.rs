//! Green's function by Fourier inversion.
//!
//! The scalar flux of a pencil beam has transform K(k) / (1 + i k.Omega0) with
//! K(k) = 1 / (1 - (albedo/k) arctan k). Removing the uncollided part leaves
//! (K - 1) / (1 + i k.Omega0), whose inverse is the beam attenuation e^{-s}
//! convolved with the isotropic kernel
//!
//! F(R) = 1 / (2 pi^2 R) int_0^inf k (K(k) - 1) sin(kR) dk.
//!
//! The angular flux follows by one more attenuated line integral. What is
//! returned pointwise is the part that scattered at least twice for the
//! angular flux and at least once for the scalar flux; the uncollided beam
//! and the once-scattered sheet are distributions and are described, not
//! evaluated.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::case1d::DispersionContext;
use crate::error::{Error, Result};
use crate::evaluation::{ConvConfig, GreensEvaluation, Method, QuadConfig};
use crate::quadrature::{composite, composite_on, tapered, Estimate, QuadratureRule};

/// The factor [1 - (albedo/k) arctan k] at a real wavenumber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteredKernel {
    pub k: f64,
    pub denominator: f64,
}

/// arctan(k) / k, with the series near zero.
fn atan_over_k(k: f64) -> f64 {
    if k.abs() < 1e-3 {
        let k2 = k * k;
        1.0 - k2 / 3.0 + k2 * k2 / 5.0 - k2 * k2 * k2 / 7.0
    } else {
        k.atan() / k
    }
}

pub fn scattered_kernel(k: f64, albedo: f64) -> ScatteredKernel {
    ScatteredKernel { k, denominator: 1.0 - albedo * atan_over_k(k) }
}

/// The uncollided beam, kept as a description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ballistic {
    /// e^{-r} / r^2: the density seen by tallies that integrate over directions.
    pub amplitude: f64,
    /// Unit vector from the source to r.
    pub line_of_sight: [f64; 3],
    /// True when r lies on the beam (r-hat = Omega0).
    pub on_beam: bool,
    /// True when additionally Omega = r-hat, where the flux is a delta.
    pub on_support: bool,
}

impl Ballistic {
    /// Contribution to a pointwise evaluation off the support: zero.
    pub fn pointwise(&self) -> f64 {
        0.0
    }
}

const ALIGN_TOL: f64 = 1e-12;

pub fn ballistic(r: [f64; 3], omega: [f64; 3], omega0: [f64; 3]) -> Result<Ballistic> {
    let rn = norm(r);
    if !(rn > 0.0) {
        return Err(Error::InvalidArgument("ballistic term needs r != 0".into()));
    }
    let rhat = [r[0] / rn, r[1] / rn, r[2] / rn];
    let on_beam = 1.0 - dot(rhat, omega0) < ALIGN_TOL;
    let on_support = on_beam && 1.0 - dot(rhat, omega) < ALIGN_TOL;
    Ok(Ballistic { amplitude: (-rn).exp() / (rn * rn), line_of_sight: rhat, on_beam, on_support })
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(r: [f64; 3], t: f64, om: [f64; 3]) -> [f64; 3] {
    [r[0] - t * om[0], r[1] - t * om[1], r[2] - t * om[2]]
}

/// F(R): the scalar flux, scattered at least once, of an isotropic unit point source.
pub fn collided_kernel(big_r: f64, albedo: f64, cfg: &ConvConfig) -> Result<Estimate<f64>> {
    if !(big_r > 0.0) || !big_r.is_finite() {
        return Err(Error::InvalidArgument(format!("kernel radius must be positive, got {big_r}")));
    }
    let w = albedo;
    let lead = 0.5 * w * PI;
    let c1 = 0.25 * w * w * PI * PI - w;
    // k (K - 1) - lead - c1 k / (1 + k^2) = O(k^-2)
    let rem = |k: f64| {
        let h = w * k * atan_over_k(k) / scattered_kernel(k, w).denominator;
        (h - lead - c1 * k / (1.0 + k * k)) * (k * big_r).sin()
    };
    let k_cut = (cfg.k_cut_r / big_r).max(cfg.k_cut_min).min(cfg.k_cut_max);
    let width = (PI / (2.0 * big_r)).min(1.0);
    let est = tapered(rem, width, cfg.n_k, k_cut)?;
    let scale = 1.0 / (2.0 * PI * PI * big_r);
    let analytic = lead / big_r + c1 * 0.5 * PI * (-big_r).exp();
    Ok(Estimate { value: scale * (analytic + est.value), error: scale * est.error })
}

/// Edges on [0, s_max]: unit panels, refined geometrically around `focus`
/// down to a width of about `scale`.
fn graded_edges(s_max: f64, focus: f64, scale: f64) -> Vec<f64> {
    let mut edges: Vec<f64> = (0..=(s_max.ceil() as usize)).map(|i| (i as f64).min(s_max)).collect();
    if focus > 0.0 && focus < s_max {
        let mut h = scale.max(1e-6);
        while h < 1.0 {
            edges.push(focus - h);
            edges.push(focus + h);
            h *= 2.0;
        }
        edges.push(focus);
    }
    edges.retain(|&e| (0.0..=s_max).contains(&e));
    edges.sort_by(|a, b| a.total_cmp(b));
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    edges
}

/// Rule on the path parameter along `dir` from r, refined at the closest approach.
fn path_rule(r: [f64; 3], dir: [f64; 3], cfg: &ConvConfig) -> Result<(QuadratureRule, f64)> {
    let t_star = dot(r, dir);
    let d = norm(axpy(r, t_star, dir));
    let edges = graded_edges(cfg.s_cut, t_star, 0.25 * d);
    Ok((composite_on(cfg.n_s.max(2) * 2, &edges)?, d))
}

/// Sum of weight * F over the given radii, in parallel with fixed-order reduction.
fn kernel_sum(radii: &[(f64, f64)], albedo: f64, cfg: &ConvConfig) -> Result<(f64, f64)> {
    let parts: Vec<Result<(f64, f64)>> = radii
        .par_iter()
        .map(|&(big_r, wt)| {
            let f = collided_kernel(big_r, albedo, cfg)?;
            Ok((wt * f.value, wt.abs() * f.error))
        })
        .collect();
    let mut v = 0.0;
    let mut e = 0.0;
    for p in parts {
        let (a, b) = p?;
        v += a;
        e += b;
    }
    Ok((v, e))
}

/// Piecewise Chebyshev interpolant of R^2 F(R) on [r_lo, r_hi].
///
/// Panels double in width up to R = 1 and have unit width beyond.
#[derive(Debug, Clone)]
pub struct KernelTable {
    edges: Vec<f64>,
    /// Values at the Chebyshev points of each panel.
    values: Vec<Vec<f64>>,
    error: f64,
}

const TABLE_ORDER: usize = 16;

fn cheb_points() -> ([f64; TABLE_ORDER], [f64; TABLE_ORDER]) {
    let mut x = [0.0; TABLE_ORDER];
    let mut w = [0.0; TABLE_ORDER];
    for j in 0..TABLE_ORDER {
        let th = PI * (j as f64 + 0.5) / TABLE_ORDER as f64;
        x[j] = th.cos();
        w[j] = if j % 2 == 0 { th.sin() } else { -th.sin() };
    }
    (x, w)
}

impl KernelTable {
    pub fn new(albedo: f64, cfg: &ConvConfig, r_lo: f64, r_hi: f64) -> Result<Self> {
        if !(r_lo > 0.0 && r_hi > r_lo) {
            return Err(Error::InvalidArgument(format!("bad table range [{r_lo}, {r_hi}]")));
        }
        let mut edges = vec![r_lo];
        let mut e = r_lo;
        while e < r_hi {
            e = if e < 1.0 { (2.0 * e).min(1.0).max(e + 1e-3 * r_lo) } else { e + 1.0 };
            edges.push(e.min(r_hi));
        }
        let (x, _) = cheb_points();
        let jobs: Vec<(usize, f64)> = (0..edges.len() - 1)
            .flat_map(|p| {
                let (a, b) = (edges[p], edges[p + 1]);
                x.iter().map(move |&t| (p, 0.5 * (a + b) + 0.5 * (b - a) * t)).collect::<Vec<_>>()
            })
            .collect();
        let vals: Vec<Result<(f64, f64)>> = jobs
            .par_iter()
            .map(|&(_, rr)| collided_kernel(rr, albedo, cfg).map(|f| (rr * rr * f.value, rr * rr * f.error)))
            .collect();
        let mut values = vec![Vec::with_capacity(TABLE_ORDER); edges.len() - 1];
        let mut error: f64 = 0.0;
        for (&(p, _), v) in jobs.iter().zip(vals) {
            let (v, e) = v?;
            values[p].push(v);
            error = error.max(e);
        }
        Ok(KernelTable { edges, values, error })
    }

    /// Largest kernel error estimate among the table nodes, for R^2 F.
    pub fn node_error(&self) -> f64 {
        self.error
    }

    /// F(R) by barycentric interpolation.
    pub fn eval(&self, big_r: f64) -> f64 {
        let n = self.edges.len();
        let r = big_r.clamp(self.edges[0], self.edges[n - 1]);
        let p = match self.edges.binary_search_by(|e| e.total_cmp(&r)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let (a, b) = (self.edges[p], self.edges[p + 1]);
        let t = (2.0 * r - a - b) / (b - a);
        let (x, w) = cheb_points();
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..TABLE_ORDER {
            let d = t - x[j];
            if d == 0.0 {
                return self.values[p][j] / (big_r * big_r);
            }
            num += w[j] / d * self.values[p][j];
            den += w[j] / d;
        }
        num / den / (big_r * big_r)
    }
}

/// True when r = t Omega + s Omega0 for some t, s >= 0 (within `tol`).
fn in_cone(r: [f64; 3], om: [f64; 3], om0: [f64; 3], tol: f64) -> bool {
    let c = dot(om, om0);
    let a = dot(r, om);
    let b = dot(r, om0);
    let det = 1.0 - c * c;
    let candidates: Vec<(f64, f64)> = if det > 1e-14 {
        let t = (a - c * b) / det;
        let s = (b - c * a) / det;
        vec![(t.max(0.0), s.max(0.0)), (a.max(0.0), 0.0), (0.0, b.max(0.0))]
    } else {
        vec![(a.max(0.0), 0.0), (0.0, b.max(0.0))]
    };
    candidates.iter().any(|&(t, s)| {
        let p = axpy(axpy(r, t, om), s, om0);
        norm(p) <= tol
    })
}

/// Angular flux scattered at least twice, at r in direction omega.
pub fn green_conv(
    r: [f64; 3],
    omega: [f64; 3],
    omega0: [f64; 3],
    ctx: &DispersionContext,
    quad: &QuadConfig,
) -> Result<GreensEvaluation> {
    let cfg = &quad.conv;
    let b = ballistic(r, omega, omega0)?;
    let w = ctx.albedo;
    let parallel = 1.0 - dot(omega, omega0) < ALIGN_TOL;
    let (value, err, n_nodes) = if parallel {
        // t + s = u with measure u du
        let (rule, _) = path_rule(r, omega0, cfg)?;
        let radii: Vec<(f64, f64)> = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&u, &wu)| (norm(axpy(r, u, omega0)), wu * u * (-u).exp()))
            .collect();
        let (v, e) = kernel_sum(&radii, w, cfg)?;
        (v, e, rule.len())
    } else {
        let (t_rule, _) = path_rule(r, omega, cfg)?;
        let (s_rule, _) = path_rule(r, omega0, cfg)?;
        let mut radii = Vec::with_capacity(t_rule.len() * s_rule.len());
        for (&t, &wt) in t_rule.nodes.iter().zip(&t_rule.weights) {
            for (&s, &ws) in s_rule.nodes.iter().zip(&s_rule.weights) {
                let p = axpy(axpy(r, t, omega), s, omega0);
                radii.push((norm(p), wt * ws * (-t - s).exp()));
            }
        }
        let lo = radii.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
        let hi = radii.iter().map(|x| x.0).fold(0.0, f64::max);
        if !(lo > 0.0) {
            return Err(Error::SingularPoint("path node on the source".into()));
        }
        let table = KernelTable::new(w, cfg, lo, hi * (1.0 + 1e-12))?;
        let mut v = 0.0;
        let mut e = 0.0;
        for &(rr, wt) in &radii {
            v += wt * table.eval(rr);
            e += wt.abs() * table.node_error() / (rr * rr);
        }
        (v, e, radii.len())
    };
    let pref = w / (4.0 * PI);
    let mut g = GreensEvaluation::new(r, Some(omega), omega0, Method::Conv, Complex64::new(pref * value, 0.0));
    g.error_estimate = pref * err + (pref * value).abs() * (-cfg.s_cut).exp() * cfg.s_cut;
    g.degraded = b.on_support || in_cone(r, omega, omega0, 1e-9);
    g.meta.insert("n_path".into(), n_nodes as f64);
    g.meta.insert("n_k".into(), cfg.n_k as f64);
    g.meta.insert("ballistic_amplitude".into(), b.amplitude);
    g.meta.insert("ballistic_on_support".into(), if b.on_support { 1.0 } else { 0.0 });
    Ok(g)
}

/// Scalar flux scattered at least once; the uncollided beam is reported in `meta`.
pub fn scalar_flux_conv(r: [f64; 3], omega0: [f64; 3], ctx: &DispersionContext, quad: &QuadConfig) -> Result<GreensEvaluation> {
    let cfg = &quad.conv;
    let b = ballistic(r, omega0, omega0)?;
    let (rule, d) = path_rule(r, omega0, cfg)?;
    let radii: Vec<(f64, f64)> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&s, &ws)| (norm(axpy(r, s, omega0)), ws * (-s).exp()))
        .collect();
    let (v, e) = kernel_sum(&radii, ctx.albedo, cfg)?;
    let mut g = GreensEvaluation::new(r, None, omega0, Method::Conv, Complex64::new(v, 0.0));
    g.error_estimate = e + v.abs() * (-cfg.s_cut).exp();
    g.degraded = b.on_beam || (d < 1e-9 && dot(r, omega0) > 0.0);
    g.meta.insert("n_path".into(), rule.len() as f64);
    g.meta.insert("n_k".into(), cfg.n_k as f64);
    g.meta.insert("ballistic_amplitude".into(), b.amplitude);
    Ok(g)
}

/// (1 - albedo) times the total flux of a unit source, collided part from F
/// integrated to 20 / sqrt(1 - albedo), uncollided part e^{-r} analytically.
pub fn balance_tally(ctx: &DispersionContext, quad: &QuadConfig) -> Result<Estimate<f64>> {
    let w = ctx.albedo;
    let r_max = 20.0 / (1.0 - w).sqrt();
    let rule = composite(quad.conv.n_k, 0.0, r_max, 1.0)?;
    let radii: Vec<(f64, f64)> =
        rule.nodes.iter().zip(&rule.weights).map(|(&x, &wx)| (x, 4.0 * PI * x * x * wx)).collect();
    let (collided, err) = kernel_sum(&radii, w, &quad.conv)?;
    let uncollided = 1.0 - (-r_max).exp();
    Ok(Estimate { value: (1.0 - w) * (collided + uncollided), error: (1.0 - w) * err })
}
