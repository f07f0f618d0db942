//! Command-line front end: configuration, batch evaluation and validation.
//!
//! Exit codes: 0 success, 1 computational failure, 2 usage or configuration error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::case1d::{big_lambda_real, lambda_pv, normalization, nu0_diffusion, DispersionContext, SingularEigenfunction};
use crate::error::Error;
use crate::evaluation::{direction, unit_vector, GreensEvaluation, Method, QuadConfig};
use crate::green_csf::{green_csf, green_csf_perturbed, orthogonality_integral, orthogonality_norm, scalar_flux_csf};
use crate::green_fourier::{green_conv, scalar_flux_conv};
use crate::green_ganapol::{
    green_ganapol_oriented, moments_direct, moments_with, psi0_tilde, recurrence_growth, scalar_flux_ganapol_oriented,
    MomentPath, F64_GROWTH_MAX,
};
use crate::quadrature::{gauss_legendre, product_sphere_rule};
use crate::rrf::build_mode;
use crate::specfun::wronskian_defects;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input files: exit code 2.
    Usage(String),
    /// A computation failed or a check did not pass: exit code 1.
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Compute(m) => write!(f, "error: {m}"),
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "rrf-green", version, about = "Infinite-medium transport Green's function with isotropic scattering")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Single-scattering albedo; `nu0` accepts a comma-separated list.
    #[arg(long, global = true)]
    pub albedo: Option<String>,
    /// csf, conv or ganapol.
    #[arg(long, global = true)]
    pub method: Option<String>,
    /// CSV of evaluation points: x,y,z,theta,phi,theta0,phi0 (radians).
    #[arg(long, global = true)]
    pub points: Option<PathBuf>,
    /// Flat key=value configuration file with dotted keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Truncation order of the moment expansion (ganapol).
    #[arg(long = "l-max", global = true)]
    pub l_max: Option<usize>,
    /// Relative tolerance of the cross-method checks.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Extra key=value overrides, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Enables the fault-injection flags.
    #[arg(long = "self-test", global = true)]
    pub self_test: bool,
    /// Multiply N(nu0) by this factor in the CSF evaluator and the orthogonality reference.
    #[arg(long = "perturb-norm", global = true)]
    pub perturb_norm: Option<f64>,
    /// Add a wall-time column to `eval` output (breaks byte-identical reruns).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Discrete eigenvalue and its diffusion approximation.
    Nu0,
    /// Evaluate the Green's function at the points of --points.
    Eval,
    /// Run the consistency suite and write a JSON report.
    Validate,
    /// Moment vector psi_l(k, mu_k) table.
    Moments {
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mu: f64,
    },
    /// Dispersion function and normalization on a nu grid.
    Spectrum {
        #[arg(long = "nu-min", default_value_t = -3.0, allow_hyphen_values = true)]
        nu_min: f64,
        #[arg(long = "nu-max", default_value_t = 3.0, allow_hyphen_values = true)]
        nu_max: f64,
        #[arg(long, default_value_t = 61)]
        n: usize,
    },
}

/// One evaluation request; `omega == None` asks for the scalar flux.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    pub r: [f64; 3],
    /// (theta, phi) as given, echoed into the output.
    pub angles: Option<(f64, f64)>,
    pub angles0: (f64, f64),
    pub omega: Option<[f64; 3]>,
    pub omega0: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub albedo: f64,
    pub method: Method,
    pub points: Vec<EvalPoint>,
    pub points_path: Option<PathBuf>,
    pub quad: QuadConfig,
    pub tolerance: f64,
    pub out: Option<PathBuf>,
    pub perturb_norm: f64,
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            albedo: 0.9,
            method: Method::Csf,
            points: vec![],
            points_path: None,
            quad: QuadConfig::default(),
            tolerance: 1e-3,
            out: None,
            perturb_norm: 1.0,
            timing: false,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, Error> {
    v.trim().parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

impl RunConfig {
    /// Apply one key=value pair. Quadrature keys take an optional `quad.` prefix.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        let k = key.trim();
        let k = k.strip_prefix("quad.").unwrap_or(k);
        let q = &mut self.quad;
        match k {
            "albedo" => self.albedo = parse_num(k, value)?,
            "method" => self.method = value.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
            "points" => self.points_path = Some(PathBuf::from(value.trim())),
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "tolerance" => self.tolerance = parse_num(k, value)?,
            "csf.n_q" | "n_q" => q.csf.n_q = parse_num(k, value)?,
            "csf.n_phi_q" | "n_phi_q" => q.csf.n_phi_q = parse_num(k, value)?,
            "csf.n_nu" | "n_nu" => q.csf.n_nu = parse_num(k, value)?,
            "csf.q_cut" | "q_cut" => q.csf.q_cut = parse_num(k, value)?,
            "conv.n_k" => q.conv.n_k = parse_num(k, value)?,
            "conv.k_cut_r" => q.conv.k_cut_r = parse_num(k, value)?,
            "conv.k_cut_min" => q.conv.k_cut_min = parse_num(k, value)?,
            "conv.k_cut_max" => q.conv.k_cut_max = parse_num(k, value)?,
            "conv.n_s" | "n_s" => q.conv.n_s = parse_num(k, value)?,
            "conv.s_cut" | "s_cut" => q.conv.s_cut = parse_num(k, value)?,
            "ganapol.l_max" | "l_max" => q.ganapol.l_max = parse_num(k, value)?,
            "ganapol.n_k" => q.ganapol.n_k = parse_num(k, value)?,
            "ganapol.n_mu" | "n_mu" => q.ganapol.n_mu = parse_num(k, value)?,
            "ganapol.k_cut_r" => q.ganapol.k_cut_r = parse_num(k, value)?,
            "ganapol.k_cut_min" => q.ganapol.k_cut_min = parse_num(k, value)?,
            "ganapol.k_cut_max" => q.ganapol.k_cut_max = parse_num(k, value)?,
            "ganapol.euler_passes" | "euler_passes" => q.ganapol.euler_passes = parse_num(k, value)?,
            "sphere.n_polar" | "n_polar" => q.sphere_polar = parse_num(k, value)?,
            "sphere.n_azimuth" | "n_azimuth" => q.sphere_azimuth = parse_num(k, value)?,
            "imag_tol" => q.imag_tol = parse_num(k, value)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Parse a key=value text; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), Error> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got '{raw}'", i + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.albedo > 0.0 && self.albedo < 1.0) {
            return Err(Error::AlbedoRange(self.albedo));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        self.quad.validate()
    }

    /// The effective settings as sorted key=value pairs.
    pub fn canonical(&self) -> BTreeMap<String, String> {
        let q = &self.quad;
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("albedo", format!("{:?}", self.albedo));
        put("method", self.method.name().into());
        put("tolerance", format!("{:?}", self.tolerance));
        put("csf.n_q", q.csf.n_q.to_string());
        put("csf.n_phi_q", q.csf.n_phi_q.to_string());
        put("csf.n_nu", q.csf.n_nu.to_string());
        put("csf.q_cut", format!("{:?}", q.csf.q_cut));
        put("conv.n_k", q.conv.n_k.to_string());
        put("conv.k_cut_r", format!("{:?}", q.conv.k_cut_r));
        put("conv.k_cut_min", format!("{:?}", q.conv.k_cut_min));
        put("conv.k_cut_max", format!("{:?}", q.conv.k_cut_max));
        put("conv.n_s", q.conv.n_s.to_string());
        put("conv.s_cut", format!("{:?}", q.conv.s_cut));
        put("ganapol.l_max", q.ganapol.l_max.to_string());
        put("ganapol.n_k", q.ganapol.n_k.to_string());
        put("ganapol.n_mu", q.ganapol.n_mu.to_string());
        put("ganapol.k_cut_r", format!("{:?}", q.ganapol.k_cut_r));
        put("ganapol.k_cut_min", format!("{:?}", q.ganapol.k_cut_min));
        put("ganapol.k_cut_max", format!("{:?}", q.ganapol.k_cut_max));
        put("ganapol.euler_passes", q.ganapol.euler_passes.to_string());
        put("sphere.n_polar", q.sphere_polar.to_string());
        put("sphere.n_azimuth", q.sphere_azimuth.to_string());
        put("imag_tol", format!("{:?}", q.imag_tol));
        if self.perturb_norm != 1.0 {
            put("self_test.perturb_norm", format!("{:?}", self.perturb_norm));
        }
        m
    }

    /// First 16 hex digits of SHA-256 over the canonical settings and the points.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.canonical() {
            h.update(format!("{k}={v}\n").as_bytes());
        }
        for p in &self.points {
            h.update(format!("{:?}\n", (p.r, p.angles, p.angles0)).as_bytes());
        }
        h.finalize().iter().take(8).fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// Parse the points CSV. A header line and `#` comments are skipped; empty
/// theta and phi request the scalar flux; theta0, phi0 default to 0 (beam along z).
pub fn parse_points(text: &str) -> Result<Vec<EvalPoint>, Error> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = vec![];
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::Config(format!("points: {e}")))?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        let f: Vec<&str> = rec.iter().collect();
        if f.iter().all(|s| s.is_empty()) {
            continue;
        }
        if out.is_empty() && f.first().is_some_and(|s| s.parse::<f64>().is_err()) {
            continue;
        }
        if f.len() < 3 || f.len() > 7 {
            return Err(Error::Config(format!("points line {line}: expected 3 to 7 fields, got {}", f.len())));
        }
        let num = |j: usize| -> Result<Option<f64>, Error> {
            match f.get(j) {
                None | Some(&"") => Ok(None),
                Some(s) => s
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(Some)
                    .ok_or_else(|| Error::Config(format!("points line {line}: bad number '{s}'"))),
            }
        };
        let need = |j: usize| num(j)?.ok_or_else(|| Error::Config(format!("points line {line}: missing field {}", j + 1)));
        let r = [need(0)?, need(1)?, need(2)?];
        let angles = match (num(3)?, num(4)?) {
            (Some(t), Some(p)) => Some((t, p)),
            (None, None) => None,
            _ => return Err(Error::Config(format!("points line {line}: theta and phi go together"))),
        };
        let angles0 = (num(5)?.unwrap_or(0.0), num(6)?.unwrap_or(0.0));
        let omega = angles.map(|(t, p)| unit_vector(direction(t, p))).transpose()?;
        let omega0 = unit_vector(direction(angles0.0, angles0.1))?;
        // An exact beam along z keeps the on-axis fast paths.
        let omega0 = if angles0.0 == 0.0 { [0.0, 0.0, 1.0] } else { omega0 };
        let omega = match (omega, angles) {
            (Some(_), Some((0.0, _))) => Some([0.0, 0.0, 1.0]),
            (o, _) => o,
        };
        out.push(EvalPoint { r, angles, angles0, omega, omega0 });
    }
    Ok(out)
}

/// Build the run configuration: defaults, then the config file, then --set,
/// then the dedicated flags.
pub fn load_config(args: &CommonArgs, allow_albedo_list: bool) -> Result<(RunConfig, Vec<f64>), CliError> {
    let mut cfg = RunConfig::default();
    if let Some(p) = &args.config {
        let text = std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
        cfg.apply_text(&text).map_err(usage)?;
    }
    for s in &args.set {
        let (k, v) = s.split_once('=').ok_or_else(|| usage(format!("--set expects KEY=VALUE, got '{s}'")))?;
        cfg.set(k, v).map_err(usage)?;
    }
    let mut albedos = vec![];
    if let Some(a) = &args.albedo {
        for part in a.split(',') {
            albedos.push(part.trim().parse::<f64>().map_err(|_| usage(format!("--albedo: cannot parse '{part}'")))?);
        }
        if albedos.len() > 1 && !allow_albedo_list {
            return Err(usage("--albedo takes a single value here"));
        }
        cfg.albedo = albedos[0];
    }
    if let Some(m) = &args.method {
        cfg.method = m.parse().map_err(usage)?;
    }
    if let Some(p) = &args.points {
        cfg.points_path = Some(p.clone());
    }
    if let Some(p) = &args.out {
        cfg.out = Some(p.clone());
    }
    if let Some(l) = args.l_max {
        cfg.quad.ganapol.l_max = l;
    }
    if let Some(t) = args.tolerance {
        cfg.tolerance = t;
    }
    if let Some(s) = args.perturb_norm {
        if !args.self_test {
            return Err(usage("--perturb-norm requires --self-test"));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(usage(format!("--perturb-norm must be positive, got {s}")));
        }
        cfg.perturb_norm = s;
    }
    cfg.timing = args.timing;
    if albedos.is_empty() {
        albedos.push(cfg.albedo);
    }
    for &a in &albedos {
        if !(a > 0.0 && a < 1.0) {
            return Err(usage(Error::AlbedoRange(a)));
        }
    }
    cfg.validate().map_err(usage)?;
    if let Some(p) = &cfg.points_path {
        let text = std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
        cfg.points = parse_points(&text).map_err(usage)?;
    }
    Ok((cfg, albedos))
}

/// Header row plus records, comma separated, one record per line.
fn csv_table<R: AsRef<[String]>>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().flexible(false).from_writer(vec![]);
    let fail = |e: csv::Error| CliError::Compute(e.to_string());
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(r.as_ref()).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Compute(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Compute(e.to_string()))
}

fn metadata(cfg: &RunConfig) -> String {
    format!("# albedo={:?}\n# version={VERSION}\n# config_hash={}\n", cfg.albedo, cfg.hash())
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Compute(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:.15e}")
}

/// `nu0`: one row per albedo.
pub fn cmd_nu0(cfg: &RunConfig, albedos: &[f64]) -> Result<String, CliError> {
    let mut rows = vec![];
    for &a in albedos {
        let ctx = DispersionContext::new(a).map_err(|e| CliError::Compute(e.to_string()))?;
        let d = nu0_diffusion(a);
        rows.push(vec![
            format!("{a:?}"),
            num(ctx.nu0),
            num(big_lambda_real(ctx.nu0, a).abs()),
            num(d),
            num((d - ctx.nu0).abs() / ctx.nu0),
        ]);
    }
    let header = ["albedo", "nu0", "lambda_residual", "nu0_diffusion", "diffusion_rel_error"];
    Ok(metadata(cfg) + &csv_table(&header, rows)?)
}

pub const EVAL_COLUMNS: [&str; 15] = [
    "x", "y", "z", "theta", "phi", "theta0", "phi0", "method", "value_re", "value_im", "reported", "imag_residue",
    "error_estimate", "degraded", "error",
];

/// Evaluate one point with the configured method.
pub fn evaluate_point(p: &EvalPoint, cfg: &RunConfig, ctx: &DispersionContext) -> Result<GreensEvaluation, Error> {
    let q = &cfg.quad;
    match (cfg.method, p.omega) {
        (Method::Csf, Some(om)) => {
            if cfg.perturb_norm != 1.0 {
                green_csf_perturbed(p.r, om, p.omega0, ctx, q, cfg.perturb_norm)
            } else {
                green_csf(p.r, om, p.omega0, ctx, q)
            }
        }
        (Method::Csf, None) => scalar_flux_csf(p.r, p.omega0, ctx, q),
        (Method::Conv, Some(om)) => green_conv(p.r, om, p.omega0, ctx, q),
        (Method::Conv, None) => scalar_flux_conv(p.r, p.omega0, ctx, q),
        (Method::Ganapol, Some(om)) => green_ganapol_oriented(p.r, om, p.omega0, ctx, q),
        (Method::Ganapol, None) => scalar_flux_ganapol_oriented(p.r, p.omega0, ctx, q),
    }
}

fn eval_row(p: &EvalPoint, cfg: &RunConfig, ctx: &DispersionContext) -> (Vec<String>, bool) {
    let t = Instant::now();
    let res = evaluate_point(p, cfg, ctx);
    let secs = t.elapsed().as_secs_f64();
    let (th, ph) = p.angles.map_or((String::new(), String::new()), |(a, b)| (format!("{a:?}"), format!("{b:?}")));
    let mut row: Vec<String> = vec![
        format!("{:?}", p.r[0]),
        format!("{:?}", p.r[1]),
        format!("{:?}", p.r[2]),
        th,
        ph,
        format!("{:?}", p.angles0.0),
        format!("{:?}", p.angles0.1),
        cfg.method.to_string(),
    ];
    let blank = |row: &mut Vec<String>, tag: &str| {
        row.extend(std::iter::repeat_n(String::new(), 6));
        row.push(tag.to_string());
    };
    let ok = match res {
        Ok(e) if e.value.re.is_finite() && e.value.im.is_finite() && e.error_estimate.is_finite() => {
            let flag = if e.imag_residue > cfg.quad.imag_tol { "imag-residue" } else { "" };
            row.extend([
                num(e.value.re),
                num(e.value.im),
                num(e.reported),
                num(e.imag_residue),
                num(e.error_estimate),
                e.degraded.to_string(),
                flag.to_string(),
            ]);
            flag.is_empty()
        }
        Ok(_) => {
            blank(&mut row, "non-finite");
            false
        }
        Err(e) => {
            blank(&mut row, e.tag());
            false
        }
    };
    if cfg.timing {
        row.push(format!("{secs:.3}"));
    }
    (row, ok)
}

/// `eval`: one CSV row per point, in input order. Fails only if every point fails;
/// the table is returned either way.
pub fn cmd_eval(cfg: &RunConfig) -> Result<(String, bool), CliError> {
    if cfg.points.is_empty() {
        return Err(usage("eval needs --points (or points= in the config)"));
    }
    let ctx = DispersionContext::new(cfg.albedo).map_err(|e| CliError::Compute(e.to_string()))?;
    let rows: Vec<(Vec<String>, bool)> = cfg.points.par_iter().map(|p| eval_row(p, cfg, &ctx)).collect();
    let mut header = EVAL_COLUMNS.to_vec();
    if cfg.timing {
        header.push("wall_time_s");
    }
    let any_ok = rows.iter().any(|(_, ok)| *ok);
    let table = csv_table(&header, rows.into_iter().map(|(r, _)| r))?;
    Ok((metadata(cfg) + &table, any_ok))
}

/// `moments`: psi_l along the recurrence path the evaluator would pick, with the direct form beside it.
pub fn cmd_moments(cfg: &RunConfig, k: f64, mu: f64) -> Result<String, CliError> {
    if !(k > 0.0 && k.is_finite()) || !(-1.0..=1.0).contains(&mu) {
        return Err(usage(format!("need k > 0 and mu in [-1, 1], got k = {k}, mu = {mu}")));
    }
    let ctx = DispersionContext::new(cfg.albedo).map_err(|e| CliError::Compute(e.to_string()))?;
    let l_max = cfg.quad.ganapol.l_max;
    let path = if recurrence_growth(k, l_max) < F64_GROWTH_MAX { MomentPath::F64 } else { MomentPath::DoubleDouble };
    let m = moments_with(k, mu, &ctx, l_max, path).map_err(|e| CliError::Compute(e.to_string()))?;
    let d = moments_direct(k, mu, &ctx, l_max).map_err(|e| CliError::Compute(e.to_string()))?;
    let res = m.recurrence_residuals(ctx.albedo);
    let mut s = metadata(cfg);
    let _ = writeln!(s, "# k={k:?}\n# mu_k={mu:?}\n# path={path:?}");
    let rows = (0..=l_max).map(|l| {
        let p = m.psi_tilde[l];
        let q = d.psi_tilde[l];
        let rr = if l >= 1 && l <= res.len() { num(res[l - 1]) } else { String::new() };
        vec![l.to_string(), num(p.re), num(p.im), num(q.re), num(q.im), num((p - q).norm() / q.norm()), rr]
    });
    let header = ["l", "psi_re", "psi_im", "direct_re", "direct_im", "rel_difference", "recurrence_residual"];
    Ok(s + &csv_table(&header, rows)?)
}

/// `spectrum`: Lambda (|nu| > 1) or lambda (|nu| < 1) and N(nu) on a uniform grid plus the rows +-nu0.
pub fn cmd_spectrum(cfg: &RunConfig, nu_min: f64, nu_max: f64, n: usize) -> Result<String, CliError> {
    if n < 2 || !(nu_min < nu_max) {
        return Err(usage("spectrum needs n >= 2 and nu-min < nu-max"));
    }
    let ctx = DispersionContext::new(cfg.albedo).map_err(|e| CliError::Compute(e.to_string()))?;
    let mut nus: Vec<f64> = (0..n).map(|i| nu_min + (nu_max - nu_min) * i as f64 / (n - 1) as f64).collect();
    for s in [-1.0, 1.0] {
        if (nu_min..=nu_max).contains(&(s * ctx.nu0)) {
            nus.push(s * ctx.nu0);
        }
    }
    nus.sort_by(f64::total_cmp);
    let mut s = metadata(cfg);
    let _ = writeln!(s, "# nu0={:?}", ctx.nu0);
    let mut rows = vec![];
    for nu in nus {
        let (kind, disp) = if nu.abs() < 1.0 {
            ("continuous", lambda_pv(nu, ctx.albedo).ok())
        } else if nu.abs() > 1.0 {
            let kind = if (nu.abs() - ctx.nu0).abs() <= 1e-12 * ctx.nu0 { "discrete" } else { "none" };
            (kind, Some(big_lambda_real(nu, ctx.albedo)))
        } else {
            ("edge", None)
        };
        let norm = if kind == "continuous" || kind == "discrete" { normalization(nu, &ctx).ok().map(|n| n.value) } else { None };
        let f = |v: Option<f64>| v.filter(|x| x.is_finite()).map(num).unwrap_or_default();
        rows.push(vec![num(nu), kind.to_string(), f(disp), f(norm)]);
    }
    Ok(s + &csv_table(&["nu", "kind", "dispersion", "normalization"], rows)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Pass when |value - reference| <= tolerance.
    pub fn abs(name: impl Into<String>, value: f64, reference: f64, tolerance: f64) -> Check {
        let pass = (value - reference).abs() <= tolerance;
        Check { name: name.into(), value, reference, tolerance, pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub albedo: f64,
    pub version: String,
    pub config_hash: String,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn new(cfg: &RunConfig, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        ValidationReport { albedo: cfg.albedo, version: VERSION.into(), config_hash: cfg.hash(), checks, pass }
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{} {:<40} value {:.6e} reference {:.6e} tolerance {:.1e}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.reference,
                c.tolerance
            );
        }
        let n = self.checks.iter().filter(|c| c.pass).count();
        let _ = writeln!(s, "{} of {} checks passed", n, self.checks.len());
        s
    }
}

fn computed<T>(r: crate::error::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Compute(e.to_string()))
}

/// Orthogonality of the discrete modes +-nu0 at q in {0, 0.5, 1}.
pub fn orthogonality_checks(cfg: &RunConfig, ctx: &DispersionContext) -> Result<Vec<Check>, CliError> {
    let rule = computed(product_sphere_rule(cfg.quad.sphere_polar, cfg.quad.sphere_azimuth))?;
    let mut out = vec![];
    for qn in [0.0, 0.5, 1.0] {
        let q = [qn, 0.0];
        let plus = computed(build_mode(ctx.nu0, q))?;
        let minus = computed(build_mode(-ctx.nu0, q))?;
        for (tag, m) in [("+", &plus), ("-", &minus)] {
            let v = computed(orthogonality_integral(m, m, &rule, ctx))?.value;
            let want = computed(orthogonality_norm(m, ctx))? * cfg.perturb_norm;
            out.push(Check::abs(format!("orthogonality_diagonal_{tag}nu0_q{qn}"), (v.re - want).abs() / want.abs(), 0.0, 1e-6));
        }
        let off = computed(orthogonality_integral(&plus, &minus, &rule, ctx))?.value;
        out.push(Check::abs(format!("orthogonality_offdiagonal_q{qn}"), off.norm(), 0.0, 1e-8));
    }
    Ok(out)
}

/// Largest Wronskian defect over 20 seeded random z, l <= 50, in exact arithmetic.
pub fn wronskian_check(albedo: f64) -> Result<Check, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let z = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let d = computed(wronskian_defects(50, z, albedo, true))?;
        worst = d.into_iter().fold(worst, f64::max);
    }
    Ok(Check::abs("wronskian_max_defect", worst, 0.0, 1e-10))
}

/// Recurrence forms against the direct L_l form over a (k, mu_k, l <= 10) grid.
pub fn moment_checks(ctx: &DispersionContext) -> Result<Vec<Check>, CliError> {
    let mut eq: f64 = 0.0;
    let mut res: f64 = 0.0;
    for &k in &[0.3, 0.5, 1.0, 2.0, 5.0, 10.0] {
        for &mu in &[-0.9, -0.3, 0.0, 0.4, 0.8, 1.0] {
            let path = if recurrence_growth(k, 11) < F64_GROWTH_MAX { MomentPath::F64 } else { MomentPath::DoubleDouble };
            let m = computed(moments_with(k, mu, ctx, 11, path))?;
            let d = computed(moments_direct(k, mu, ctx, 11))?;
            for l in 0..=10 {
                eq = eq.max((m.psi_tilde[l] - d.psi_tilde[l]).norm() / d.psi_tilde[l].norm());
            }
            res = m.recurrence_residuals(ctx.albedo).into_iter().fold(res, f64::max);
        }
    }
    Ok(vec![Check::abs("moments_recurrence_vs_direct", eq, 0.0, 1e-9), Check::abs("moments_recurrence_residual", res, 0.0, 1e-9)])
}

/// On-axis scalar and angular flux at z in {-0.5, -1, -2}, all method pairs.
pub fn cross_method_checks(cfg: &RunConfig, ctx: &DispersionContext) -> Result<Vec<Check>, CliError> {
    let mut out = vec![];
    for z in [-0.5, -1.0, -2.0] {
        for angular in [false, true] {
            let p = EvalPoint {
                r: [0.0, 0.0, z],
                angles: angular.then_some((0.0, 0.0)),
                angles0: (0.0, 0.0),
                omega: angular.then_some([0.0, 0.0, 1.0]),
                omega0: [0.0, 0.0, 1.0],
            };
            let vals: Vec<GreensEvaluation> = Method::ALL
                .iter()
                .map(|&m| {
                    let mut c = cfg.clone();
                    c.method = m;
                    computed(evaluate_point(&p, &c, ctx))
                })
                .collect::<Result<_, _>>()?;
            let kind = if angular { "angular" } else { "scalar" };
            for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                let d = vals[i].relative_difference(&vals[j]);
                out.push(Check::abs(format!("{kind}_z{z}_{}_vs_{}", vals[i].method, vals[j].method), d, 0.0, cfg.tolerance));
            }
            for v in &vals {
                out.push(Check::abs(format!("{kind}_z{z}_{}_imag_residue", v.method), v.imag_residue, 0.0, cfg.quad.imag_tol));
            }
        }
    }
    Ok(out)
}

/// The full suite.
pub fn run_validation(cfg: &RunConfig) -> Result<ValidationReport, CliError> {
    let ctx = computed(DispersionContext::new(cfg.albedo))?;
    let mut checks = vec![Check::abs("dispersion_root_residual", ctx.root_residual, 0.0, 1e-12)];
    checks.push(Check::abs("nu0_above_one", (ctx.nu0 > 1.0) as u8 as f64, 1.0, 0.0));
    let n = computed(normalization(ctx.nu0, &ctx))?.value;
    let mode = SingularEigenfunction::discrete(&ctx, 1.0);
    let rule = computed(gauss_legendre(64, -1.0, 1.0))?;
    let ov = computed(crate::case1d::mu_overlap(&mode, &mode, &rule))?;
    checks.push(Check::abs("normalization_discrete", (ov - n).abs() / n.abs(), 0.0, 1e-10));
    checks.extend(orthogonality_checks(cfg, &ctx)?);
    checks.push(wronskian_check(cfg.albedo)?);
    checks.extend(moment_checks(&ctx)?);
    let p0 = computed(psi0_tilde(1e-6, 0.0, &ctx))?;
    checks.push(Check::abs("balance_limit_psi0", p0.re * (1.0 - cfg.albedo), 1.0, 1e-4));
    checks.extend(cross_method_checks(cfg, &ctx)?);
    Ok(ValidationReport::new(cfg, checks))
}

/// Parse and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let list = matches!(cli.command, Command::Nu0);
    let (cfg, albedos) = load_config(&cli.common, list)?;
    match &cli.command {
        Command::Nu0 => emit(&cfg.out, &cmd_nu0(&cfg, &albedos)?),
        Command::Eval => {
            let (table, any_ok) = cmd_eval(&cfg)?;
            emit(&cfg.out, &table)?;
            if any_ok {
                Ok(())
            } else {
                Err(CliError::Compute(format!("all {} points failed", cfg.points.len())))
            }
        }
        Command::Validate => {
            let rep = run_validation(&cfg)?;
            let json = serde_json::to_string_pretty(&rep).map_err(|e| CliError::Compute(e.to_string()))? + "\n";
            match &cfg.out {
                Some(_) => {
                    emit(&cfg.out, &json)?;
                    print!("{}", rep.summary());
                }
                None => {
                    eprint!("{}", rep.summary());
                    print!("{json}");
                }
            }
            if rep.pass {
                Ok(())
            } else {
                Err(CliError::Compute("validation failed".into()))
            }
        }
        Command::Moments { k, mu } => emit(&cfg.out, &cmd_moments(&cfg, *k, *mu)?),
        Command::Spectrum { nu_min, nu_max, n } => emit(&cfg.out, &cmd_spectrum(&cfg, *nu_min, *nu_max, *n)?),
    }
}

/// Read a points file relative to nothing in particular; used by examples.
pub fn read_points(path: &Path) -> Result<Vec<EvalPoint>, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_points(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(extra: &[&str]) -> CommonArgs {
        let mut v = vec!["rrf-green"];
        v.extend_from_slice(extra);
        v.push("nu0");
        Cli::try_parse_from(v).unwrap().common
    }

    #[test]
    fn config_text_and_aliases() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\nalbedo = 0.5\nquad.csf.n_q=12\nquad.n_nu = 7 # trailing\nganapol.l_max=9\nmethod=fourier\n").unwrap();
        assert_eq!(c.albedo, 0.5);
        assert_eq!(c.quad.csf.n_q, 12);
        assert_eq!(c.quad.csf.n_nu, 7);
        assert_eq!(c.quad.ganapol.l_max, 9);
        assert_eq!(c.method, Method::Conv);
        assert!(c.apply_text("nonsense").is_err());
        assert!(c.apply_text("quad.bogus=1").is_err());
        assert!(c.apply_text("csf.n_q=abc").is_err());
    }

    #[test]
    fn points_parsing() {
        let p = parse_points("x,y,z,theta,phi,theta0,phi0\n# c\n0,0,-1,0,0,0,0\n0.5,0,-1,,\n1,2,3\n").unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p[0].omega, Some([0.0, 0.0, 1.0]));
        assert_eq!(p[1].omega, None);
        assert_eq!(p[2].omega0, [0.0, 0.0, 1.0]);
        assert!(parse_points("0,0,-1,0.3\n").is_err());
        assert!(parse_points("0,0,nan\n").is_err());
    }

    #[test]
    fn hash_tracks_settings() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.quad.csf.n_q += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn perturbation_needs_self_test() {
        assert!(matches!(load_config(&args(&["--perturb-norm", "1.1"]), false), Err(CliError::Usage(_))));
        let (c, _) = load_config(&args(&["--self-test", "--perturb-norm", "1.1"]), false).unwrap();
        assert_eq!(c.perturb_norm, 1.1);
    }

    #[test]
    fn albedo_out_of_range_is_usage() {
        let e = load_config(&args(&["--albedo", "1.5"]), true).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("albedo"));
    }

    #[test]
    fn nu0_rows() {
        let (c, a) = load_config(&args(&["--albedo", "0.9,0.99"]), true).unwrap();
        let s = cmd_nu0(&c, &a).unwrap();
        let rows: Vec<&str> = s.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows.len(), 3);
        let f: Vec<f64> = rows[1].split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[1] - 1.903_20).abs() < 1e-5 && f[2] < 1e-12);
        let g: Vec<f64> = rows[2].split(',').map(|x| x.parse().unwrap()).collect();
        assert!(g[4] < 5e-3);
    }

    #[test]
    fn jump_plane_goes_to_error_column() {
        let c = RunConfig {
            points: parse_points("0.3,0,0,0,0,0,0\n0,0,-2,,\n").unwrap(),
            ..Default::default()
        };
        let (s, ok) = cmd_eval(&c).unwrap();
        assert!(ok);
        let rows: Vec<&str> = s.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], EVAL_COLUMNS.join(","));
        assert!(rows[1].ends_with(",jump-plane"), "{}", rows[1]);
        assert!(rows[2].ends_with(",false,"), "{}", rows[2]);
        let (again, _) = cmd_eval(&c).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn report_round_trip() {
        let c = RunConfig::default();
        let r = ValidationReport::new(&c, vec![Check::abs("a", 1.0, 1.0, 0.0), Check::abs("b", 2.0, 1.0, 0.5)]);
        assert!(!r.pass);
        let back: ValidationReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn perturbed_norm_fails_orthogonality() {
        let mut c = RunConfig::default();
        let ctx = DispersionContext::new(0.9).unwrap();
        assert!(orthogonality_checks(&c, &ctx).unwrap().iter().all(|k| k.pass));
        c.perturb_norm = 1.001;
        let checks = orthogonality_checks(&c, &ctx).unwrap();
        assert!(checks.iter().filter(|k| k.name.contains("diagonal_")).any(|k| !k.pass));
    }
}
