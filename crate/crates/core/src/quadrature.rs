//! Gauss rules, composite panels, sphere products and principal values.
//!
//! Everything here is deterministic: the same inputs always give the same
//! node and weight arrays, and every reduction runs in ascending node order.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values that can be accumulated by a quadrature sum.
pub trait Scalar: Copy + Default + Add<Output = Self> + Mul<f64, Output = Self> {
    fn magnitude(self) -> f64;
}

impl Scalar for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// A one-dimensional rule on `(a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: (f64, f64),
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<T: Scalar>(&self, mut f: impl FnMut(f64) -> T) -> T {
        let mut acc = T::default();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(x) * w;
        }
        acc
    }

    /// Concatenate rules on adjacent intervals.
    pub fn concat(parts: &[QuadratureRule]) -> QuadratureRule {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for p in parts {
            nodes.extend_from_slice(&p.nodes);
            weights.extend_from_slice(&p.weights);
        }
        let a = parts.first().map_or(0.0, |p| p.interval.0);
        let b = parts.last().map_or(0.0, |p| p.interval.1);
        QuadratureRule { nodes, weights, interval: (a, b) }
    }
}

/// Gauss-Legendre nodes and weights on (-1, 1), ascending.
fn unit_gauss(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() <= 1e-16 * t.abs().max(1.0) {
                let (_, d) = legendre_and_derivative(n, t);
                dp = d;
                break;
            }
        }
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        // t decreases with i; fill symmetric pair.
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_and_derivative(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// n-point Gauss-Legendre rule on (a, b); exact through degree 2n-1.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::InvalidArgument("gauss_legendre needs n >= 1".into()));
    }
    if !(a < b) {
        return Err(Error::InvalidArgument(format!("empty interval ({a}, {b})")));
    }
    let (x, w) = unit_gauss(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    Ok(QuadratureRule {
        nodes: x.iter().map(|&t| c + h * t).collect(),
        weights: w.iter().map(|&v| h * v).collect(),
        interval: (a, b),
    })
}

/// Composite rule on `(a, b)` with equal panels no wider than `width`.
pub fn composite(n: usize, a: f64, b: f64, width: f64) -> Result<QuadratureRule> {
    if !(width > 0.0) {
        return Err(Error::InvalidArgument("panel width must be positive".into()));
    }
    let panels = (((b - a) / width).ceil() as usize).max(1);
    let edges: Vec<f64> = (0..=panels)
        .map(|i| a + (b - a) * i as f64 / panels as f64)
        .collect();
    composite_on(n, &edges)
}

/// Composite rule with explicit panel edges (ascending).
pub fn composite_on(n: usize, edges: &[f64]) -> Result<QuadratureRule> {
    if edges.len() < 2 {
        return Err(Error::InvalidArgument("need at least two panel edges".into()));
    }
    let (x, w) = unit_gauss(n.max(1));
    let mut nodes = Vec::with_capacity(x.len() * (edges.len() - 1));
    let mut weights = Vec::with_capacity(nodes.capacity());
    for e in edges.windows(2) {
        if !(e[0] < e[1]) {
            return Err(Error::InvalidArgument("panel edges must increase".into()));
        }
        let c = 0.5 * (e[0] + e[1]);
        let h = 0.5 * (e[1] - e[0]);
        for (&t, &v) in x.iter().zip(&w) {
            nodes.push(c + h * t);
            weights.push(h * v);
        }
    }
    Ok(QuadratureRule { nodes, weights, interval: (edges[0], edges[edges.len() - 1]) })
}

/// Product rule on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereRule {
    pub directions: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub n_polar: usize,
    pub n_azimuth: usize,
}

impl SphereRule {
    pub fn integrate<T: Scalar>(&self, mut f: impl FnMut([f64; 3]) -> T) -> T {
        let mut acc = T::default();
        for (&d, &w) in self.directions.iter().zip(&self.weights) {
            acc = acc + f(d) * w;
        }
        acc
    }
}

/// Gauss-Legendre in mu times the trapezoid rule in phi.
///
/// Exact for Y_lm with l <= 2 n_polar - 1 and |m| < n_azimuth / 2.
pub fn product_sphere_rule(n_polar: usize, n_azimuth: usize) -> Result<SphereRule> {
    if n_polar == 0 || n_azimuth < 2 {
        return Err(Error::InvalidArgument(format!(
            "sphere rule needs n_polar >= 1 and n_azimuth >= 2, got {n_polar}, {n_azimuth}"
        )));
    }
    let mu = gauss_legendre(n_polar, -1.0, 1.0)?;
    let dphi = 2.0 * PI / n_azimuth as f64;
    let mut directions = Vec::with_capacity(n_polar * n_azimuth);
    let mut weights = Vec::with_capacity(n_polar * n_azimuth);
    for (&m, &w) in mu.nodes.iter().zip(&mu.weights) {
        let s = (1.0 - m * m).sqrt();
        for j in 0..n_azimuth {
            let phi = dphi * j as f64;
            directions.push([s * phi.cos(), s * phi.sin(), m]);
            weights.push(w * dphi);
        }
    }
    Ok(SphereRule { directions, weights, n_polar, n_azimuth })
}

/// A value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
}

/// Composite Gauss on (0, cutoff] with panels of width `decay_scale`.
///
/// The error estimate is the magnitude of the last panel's contribution;
/// if it exceeds `tol` the result is returned inside `NonConvergence`.
pub fn semi_infinite<T: Scalar>(
    f: impl FnMut(f64) -> T,
    decay_scale: f64,
    n: usize,
    cutoff: f64,
    tol: f64,
) -> Result<Estimate<T>> {
    if !(cutoff > 0.0) || !(decay_scale > 0.0) {
        return Err(Error::InvalidArgument("cutoff and decay scale must be positive".into()));
    }
    let mut f = f;
    let panels = ((cutoff / decay_scale).ceil() as usize).max(1);
    let h = cutoff / panels as f64;
    let unit = gauss_legendre(n.max(1), -1.0, 1.0)?;
    let mut acc = T::default();
    let mut last = T::default();
    for p in 0..panels {
        let c = (p as f64 + 0.5) * h;
        let mut part = T::default();
        for (&t, &w) in unit.nodes.iter().zip(&unit.weights) {
            part = part + f(c + 0.5 * h * t) * (0.5 * h * w);
        }
        acc = acc + part;
        last = part;
    }
    let est = Estimate { value: acc, error: last.magnitude() };
    if est.error > tol {
        return Err(Error::NonConvergence(format!(
            "last panel contributes {:.3e} > tolerance {:.1e}",
            est.error, tol
        )));
    }
    Ok(est)
}

/// Principal value of the integral of f(mu) / (pole - mu) over the rule interval.
///
/// Uses subtraction: the smooth part (f(mu) - f(pole)) / (pole - mu) is
/// integrated by the rule, the log term analytically.
pub fn principal_value(mut f: impl FnMut(f64) -> f64, pole: f64, rule: &QuadratureRule) -> Result<f64> {
    let (a, b) = rule.interval;
    if !(pole > a && pole < b) {
        return Err(Error::InvalidArgument(format!(
            "pole {pole} must lie strictly inside ({a}, {b})"
        )));
    }
    let fp = f(pole);
    let mut acc = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let d = pole - x;
        if d != 0.0 {
            acc += w * (f(x) - fp) / d;
        }
        // A node exactly at the pole contributes the derivative times w, which
        // is O(w) and lost only when it sits at the pole to the last bit.
    }
    Ok(acc + fp * ((pole - a) / (b - pole)).ln())
}

/// C-infinity window: 1 for x <= 1, 0 for x >= 2.
pub fn taper(x: f64) -> f64 {
    if x <= 1.0 {
        return 1.0;
    }
    if x >= 2.0 {
        return 0.0;
    }
    let bump = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let s = x - 1.0;
    let a = bump(1.0 - s);
    let b = bump(s);
    a / (a + b)
}

/// Integrate an oscillatory, slowly decaying integrand over (0, inf).
///
/// The integrand is multiplied by `taper(k / k_cut)` and integrated on panels
/// of width at most `width`. The returned error is the spread between the
/// results for two window positions (k_cut and 0.75 k_cut), which costs no
/// extra integrand evaluations.
pub fn tapered<T: Scalar>(
    mut f: impl FnMut(f64) -> T,
    width: f64,
    n: usize,
    k_cut: f64,
) -> Result<Estimate<T>> {
    let rule = composite(n, 0.0, 2.0 * k_cut, width)?;
    let mut a = T::default();
    let mut b = T::default();
    for (&k, &w) in rule.nodes.iter().zip(&rule.weights) {
        let v = f(k) * w;
        a = a + v * taper(k / k_cut);
        b = b + v * taper(k / (0.75 * k_cut));
    }
    let diff = (a + b * -1.0).magnitude();
    Ok(Estimate { value: a, error: diff })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_point_rule_is_midpoint() {
        let r = gauss_legendre(1, -1.0, 1.0).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert!((r.weights[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn two_point_rule() {
        let r = gauss_legendre(2, -1.0, 1.0).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((r.nodes[0] + s).abs() < 1e-15 && (r.nodes[1] - s).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15 && (r.weights[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mu_to_the_fourth() {
        let r = gauss_legendre(3, -1.0, 1.0).unwrap();
        let v = r.integrate(|x| x.powi(4));
        assert!((v - 0.4).abs() < 1e-15);
    }

    #[test]
    fn zero_points_rejected() {
        assert!(gauss_legendre(0, 0.0, 1.0).is_err());
        assert!(gauss_legendre(3, 1.0, 1.0).is_err());
    }

    #[test]
    fn large_rule_is_sane() {
        let r = gauss_legendre(400, -1.0, 1.0).unwrap();
        let s: f64 = r.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-12);
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(r.nodes[0] > -1.0 && r.nodes[399] < 1.0);
    }

    #[test]
    fn sphere_constants() {
        let s = product_sphere_rule(8, 16).unwrap();
        let one = s.integrate(|_| 1.0);
        let mu = s.integrate(|d| d[2]);
        assert!((one - 4.0 * PI).abs() < 1e-13);
        assert!(mu.abs() < 1e-14);
        let y20 = |d: [f64; 3]| (5.0 / (4.0 * PI)).sqrt() * 0.5 * (3.0 * d[2] * d[2] - 1.0);
        let v = s.integrate(|d| y20(d) * y20(d));
        assert!((v - 1.0).abs() < 1e-13);
    }

    #[test]
    fn semi_infinite_examples() {
        let e = semi_infinite(|k| (-k).exp(), 1.0, 10, 40.0, 1e-12).unwrap();
        assert!((e.value - 1.0).abs() < 1e-10);
        let e = semi_infinite(|k| k * (-k * k).exp(), 0.5, 10, 12.0, 1e-12).unwrap();
        assert!((e.value - 0.5).abs() < 1e-10);
        let e = semi_infinite(
            |k| crate::specfun::bessel_j(0, k) * (-k).exp(),
            0.5,
            12,
            45.0,
            1e-12,
        )
        .unwrap();
        assert!((e.value - 0.5f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn semi_infinite_reports_truncation() {
        let r = semi_infinite(|k| (-k).exp(), 1.0, 8, 3.0, 1e-10);
        assert!(matches!(r, Err(Error::NonConvergence(_))));
    }

    #[test]
    fn principal_value_examples() {
        let r = gauss_legendre(40, -1.0, 1.0).unwrap();
        assert!(principal_value(|_| 1.0, 0.0, &r).unwrap().abs() < 1e-14);
        let v = principal_value(|_| 1.0, 0.5, &r).unwrap();
        assert!((v - 3f64.ln()).abs() < 1e-14);
        let v = principal_value(|m| m, 0.0, &r).unwrap();
        assert!((v + 2.0).abs() < 1e-14);
        assert!(principal_value(|_| 1.0, 1.0, &r).is_err());
    }

    #[test]
    fn taper_is_a_partition() {
        assert_eq!(taper(0.3), 1.0);
        assert_eq!(taper(2.5), 0.0);
        assert!((taper(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=100 {
            let t = taper(1.0 + i as f64 / 100.0);
            assert!(t <= prev);
            prev = t;
        }
    }

    #[test]
    fn tapered_sine_transform() {
        // int_0^inf sin(k) k/(1+k^2) dk = (pi/2) e^{-1}
        let e = tapered(|k| k.sin() * k / (1.0 + k * k), 0.5, 10, 200.0).unwrap();
        assert!((e.value - 0.5 * PI * (-1f64).exp()).abs() < 1e-7, "{}", e.value);
    }
}
