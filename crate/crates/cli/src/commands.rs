//! The CSV-emitting and reporting subcommands.
//!
//! Every command is a pure function of the config: rows are produced in a
//! fixed order and floats are printed with 17 significant digits, so equal
//! configs give byte-identical files.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use plate_modes::asymptotics::{predict_eigenvalue, AsymptoticEnvelope, Envelope};
use plate_modes::band::{lowest_branch, rayleigh_quotient_testcase};
use plate_modes::minimum::{find_minimum_with, MinimumConfig, SpectralMinimum};
use plate_modes::model::{log_envelope, mu_quadrature_at, mu_quadrature_batch, mu_series, ordered_spectrum, ModelConstants};
use plate_modes::{RadialProfile, SignedLog};

use crate::config::RunConfig;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass = 0,
    CheckFailed = 1,
    SolverFailed = 2,
}

impl Outcome {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// The more severe of two outcomes.
    pub fn worst(self, other: Outcome) -> Outcome {
        if other.code() > self.code() {
            other
        } else {
            self
        }
    }
}

/// Golden values of the band minimum.
pub const KAPPA_REF: f64 = 0.632138;
pub const LAMBDA_REF: f64 = 1.887837;
pub const Q_REF: f64 = 0.849748;
pub const GOLDEN_TOL: f64 = 1e-4;

pub fn fmt_f(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

fn fmt_log(x: SignedLog) -> String {
    x.to_string()
}

fn writer(cfg: &RunConfig, name: &str) -> std::io::Result<(csv::Writer<fs::File>, PathBuf)> {
    fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join(name);
    Ok((csv::Writer::from_path(&path).map_err(std::io::Error::other)?, path))
}

fn io_fail(e: impl std::fmt::Display) -> Outcome {
    eprintln!("error: {e}");
    Outcome::SolverFailed
}

pub fn minimum_config(cfg: &RunConfig) -> MinimumConfig {
    MinimumConfig {
        scan_points: cfg.scan_points,
        diff_step: cfg.diff_step,
        ..MinimumConfig::default()
    }
}

/// Writes `dispersion.csv`; exit 2 if any row failed.
pub fn dispersion(cfg: &RunConfig) -> Outcome {
    let (mut w, path) = match writer(cfg, "dispersion.csv") {
        Ok(x) => x,
        Err(e) => return io_fail(e),
    };
    let mut outcome = Outcome::Pass;
    let mut rows = vec![["r", "lambda1", "branch", "check1", "status"].map(String::from)];
    for r in cfg.r_grid() {
        let check1 = fmt_f(r * r + 4.0);
        match lowest_branch(r) {
            Ok(p) => rows.push([fmt_f(r), fmt_f(p.lambda), p.branch_tag.to_string(), check1, "ok".into()]),
            Err(e) => {
                outcome = Outcome::SolverFailed;
                rows.push([fmt_f(r), String::new(), String::new(), check1, e.to_string()]);
            }
        }
    }
    for row in rows {
        if let Err(e) = w.write_record(&row) {
            return io_fail(e);
        }
    }
    if let Err(e) = w.flush() {
        return io_fail(e);
    }
    println!("wrote {}", path.display());
    outcome
}

/// Prints the minimum with error bars; exit 0 iff all three match the
/// golden values within `GOLDEN_TOL`.
pub fn minimum(cfg: &RunConfig, out: &mut impl Write) -> Outcome {
    let m = match find_minimum_with(&minimum_config(cfg)) {
        Ok(m) => m,
        Err(e) => return io_fail(e),
    };
    let rq = rayleigh_quotient_testcase();
    let lines = [
        format!("kappa  = {} +- {:.1e}", fmt_f(m.kappa), m.kappa_err),
        format!("Lambda = {} +- {:.1e}", fmt_f(m.lambda_cap), m.lambda_err),
        format!("q      = {} +- {:.1e}", fmt_f(m.q), m.q_err),
        match &rq {
            Ok(v) => format!("rayleigh_testcase = {} (exact 2)", fmt_f(*v)),
            Err(e) => format!("rayleigh_testcase failed: {e}"),
        },
    ];
    for l in lines {
        if writeln!(out, "{l}").is_err() {
            return Outcome::SolverFailed;
        }
    }
    let golden = (m.kappa - KAPPA_REF).abs() <= GOLDEN_TOL
        && (m.lambda_cap - LAMBDA_REF).abs() <= GOLDEN_TOL
        && (m.q - Q_REF).abs() <= GOLDEN_TOL;
    if rq.is_err() {
        Outcome::SolverFailed
    } else if golden {
        Outcome::Pass
    } else {
        Outcome::CheckFailed
    }
}

/// Model constants for the configured profile, with the series-only
/// corruption hook applied to a second copy.
pub fn constants(cfg: &RunConfig, profile: &RadialProfile, m: &SpectralMinimum) -> plate_modes::Result<(ModelConstants, ModelConstants)> {
    let consts = ModelConstants::new(profile, m)?;
    let series = match cfg.corrupt_p2 {
        Some(f) => consts.with_p2(consts.p2 * f),
        None => consts.clone(),
    };
    Ok((consts, series))
}

/// One computed `μ_n` pair.
#[derive(Debug, Clone)]
pub struct ModeRow {
    pub n: usize,
    pub series: Result<SignedLog, String>,
    pub quadrature: Result<SignedLog, String>,
}

impl ModeRow {
    pub fn rel_diff(&self) -> Option<f64> {
        match (&self.series, &self.quadrature) {
            (Ok(s), Ok(q)) => Some(s.rel_diff(q)),
            _ => None,
        }
    }
}

/// Series per `n`; quadrature in one batch, falling back to single `n`
/// so that a failure stays confined to its row.
pub fn mode_rows(cfg: &RunConfig, quad: &ModelConstants, series: &ModelConstants, n_max: usize) -> Vec<ModeRow> {
    let ns: Vec<usize> = (0..=n_max).collect();
    let batch = mu_quadrature_batch(quad, &ns, cfg.precision_bits).ok();
    ns.iter()
        .map(|&n| ModeRow {
            n,
            series: mu_series(series, n, cfg.precision_bits)
                .map(|s| s.value)
                .map_err(|e| e.to_string()),
            quadrature: match &batch {
                Some(b) => Ok(b[n].value),
                None => mu_quadrature_at(quad, n, cfg.precision_bits)
                    .map(|q| q.value)
                    .map_err(|e| e.to_string()),
            },
        })
        .collect()
}

fn setup(cfg: &RunConfig) -> Result<(RadialProfile, SpectralMinimum), Outcome> {
    let profile = cfg.validate().map_err(io_fail)?;
    let m = find_minimum_with(&minimum_config(cfg)).map_err(io_fail)?;
    Ok((profile, m))
}

/// Writes `modes.csv`; exit 2 if any row failed.
pub fn modes(cfg: &RunConfig) -> Outcome {
    let (profile, m) = match setup(cfg) {
        Ok(x) => x,
        Err(o) => return o,
    };
    let (quad, series) = match constants(cfg, &profile, &m) {
        Ok(x) => x,
        Err(e) => return io_fail(e),
    };
    let (mut w, path) = match writer(cfg, "modes.csv") {
        Ok(x) => x,
        Err(e) => return io_fail(e),
    };
    let header = ["n", "mu_series", "mu_quadrature", "rel_diff", "log_envelope", "ratio_to_envelope", "status"];
    if let Err(e) = w.write_record(header) {
        return io_fail(e);
    }
    let mut outcome = Outcome::Pass;
    for row in mode_rows(cfg, &quad, &series, cfg.n_max) {
        let env = if row.n >= 2 { log_envelope(&quad, row.n).ok() } else { None };
        let ratio = match (&row.series, env) {
            (Ok(s), Some(le)) if !s.is_zero() && !s.is_negative() => fmt_f((s.ln_abs - le).exp()),
            _ => String::new(),
        };
        let status: Vec<String> = [&row.series, &row.quadrature]
            .iter()
            .filter_map(|r| r.as_ref().err().cloned())
            .collect();
        if !status.is_empty() {
            outcome = Outcome::SolverFailed;
        }
        let rec = [
            row.n.to_string(),
            row.series.as_ref().map(|v| fmt_log(*v)).unwrap_or_default(),
            row.quadrature.as_ref().map(|v| fmt_log(*v)).unwrap_or_default(),
            row.rel_diff().map(fmt_f).unwrap_or_default(),
            env.map(fmt_f).unwrap_or_default(),
            ratio,
            if status.is_empty() { "ok".into() } else { status.join("; ") },
        ];
        if let Err(e) = w.write_record(&rec) {
            return io_fail(e);
        }
    }
    if let Err(e) = w.flush() {
        return io_fail(e);
    }
    println!("wrote {}", path.display());
    outcome
}

/// Writes `predict.csv` for `l = 1 … 2 n_max + 1`.
pub fn predict(cfg: &RunConfig) -> Outcome {
    let (profile, m) = match setup(cfg) {
        Ok(x) => x,
        Err(o) => return o,
    };
    let consts = match ModelConstants::new(&profile, &m) {
        Ok(c) => c,
        Err(e) => return io_fail(e),
    };
    let mu: Result<Vec<SignedLog>, _> = (0..=cfg.n_max)
        .map(|n| mu_series(&consts, n, cfg.precision_bits).map(|s| s.value))
        .collect();
    let spectrum = match mu.and_then(|mu| ordered_spectrum(&mu)) {
        Ok(s) => s,
        Err(e) => return io_fail(e),
    };
    let env = match AsymptoticEnvelope::new(&profile, &m) {
        Ok(e) => e,
        Err(e) => return io_fail(e),
    };
    let (mut w, path) = match writer(cfg, "predict.csv") {
        Ok(x) => x,
        Err(e) => return io_fail(e),
    };
    let header = ["l", "lambda_l_K", "kappa_l_alpha", "log_gap", "neg2klogk_ratio", "w_minus_env", "w_plus_env"];
    if let Err(e) = w.write_record(header) {
        return io_fail(e);
    }
    for l in 1..=spectrum.len() {
        let p = match predict_eigenvalue(&spectrum, &m, l, cfg.alpha) {
            Ok(p) => p,
            Err(e) => return io_fail(e),
        };
        let lf = l as f64;
        let ratio = if l >= 2 { p.log_gap / (-2.0 * lf * lf.ln()) } else { f64::NAN };
        let wm = env.log_w(Envelope::Minus, (1.0 + cfg.eps) * lf).unwrap_or(f64::NAN);
        let wp = env.log_w(Envelope::Plus, (1.0 - cfg.eps) * lf).unwrap_or(f64::NAN);
        let rec = [
            l.to_string(),
            fmt_log(spectrum.ordered[l - 1]),
            fmt_f(p.predicted),
            fmt_f(p.log_gap),
            fmt_f(ratio),
            fmt_f(wm),
            fmt_f(wp),
        ];
        if let Err(e) = w.write_record(&rec) {
            return io_fail(e);
        }
    }
    if let Err(e) = w.flush() {
        return io_fail(e);
    }
    println!("wrote {}", path.display());
    Outcome::Pass
}
