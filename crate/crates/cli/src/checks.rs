//! The cross-oracle suite behind `verify`.
//!
//! Each check compares two independent routes (secular equation vs finite
//! elements, series vs quadrature) or a computed value against a golden
//! value, with the tolerance pinned here.

use std::f64::consts::LN_10;
use std::fmt;

use plate_modes::asymptotics::{counting_ratio, envelope_check, predict_eigenvalue, varrho_limit_check, AsymptoticEnvelope, Envelope};
use plate_modes::band::{check_eigenvalue, lowest_branch, rayleigh_quotient_testcase};
use plate_modes::fd::{assemble, lowest_eigs, lowest_eigs_banded, Sector};
use plate_modes::minimum::{find_minimum_with, SpectralMinimum};
use plate_modes::model::{bound_check, ordered_spectrum, ModeSpectrum, ModelConstants};
use plate_modes::{RadialProfile, SignedLog};

use crate::commands::{constants, minimum_config, mode_rows, Outcome, KAPPA_REF, LAMBDA_REF, Q_REF};
use crate::config::RunConfig;

pub const DISK: &str = "disk:a=1";
pub const ANNULUS: &str = "annulus:a=1,t1=0.5,t2=1";
pub const BUMP: &str = "bump:a=1";

pub const DUAL_METHOD_TOL: f64 = 1e-6;
pub const DUAL_METHOD_N: usize = 30;
pub const PSD_N: usize = 40;
pub const PSD_TOL: f64 = 1e-13;
pub const CHECK_FD_TOL: f64 = 5e-3;
pub const CHECK_FD_ORDER: f64 = 1.9;
pub const BAND_FD_TOL: f64 = 1e-4;
pub const ALPHA: f64 = 0.1;
pub const ACCUM_BAND: (f64, f64) = (0.5, 1.1);
pub const COUNT_BAND: (f64, f64) = (0.5, 1.5);
pub const VARRHO_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// A solver error prevented the comparison.
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Error => "ERROR",
        };
        write!(f, "{tag} {} {}", self.name, self.detail)
    }
}

fn check(name: &'static str, ok: bool, detail: String) -> Check {
    Check {
        name,
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
    }
}

fn error(name: &'static str, e: impl fmt::Display) -> Check {
    Check {
        name,
        status: Status::Error,
        detail: e.to_string(),
    }
}

pub fn outcome(checks: &[Check]) -> Outcome {
    checks.iter().fold(Outcome::Pass, |acc, c| {
        acc.worst(match c.status {
            Status::Pass => Outcome::Pass,
            Status::Fail => Outcome::CheckFailed,
            Status::Error => Outcome::SolverFailed,
        })
    })
}

fn minimum_golden(m: &SpectralMinimum) -> Check {
    let dk = (m.kappa - KAPPA_REF).abs();
    let dl = (m.lambda_cap - LAMBDA_REF).abs();
    let dq = (m.q - Q_REF).abs();
    check(
        "minimum_golden",
        dk <= 1e-5 && dl <= 1e-5 && dq <= 1e-4,
        format!("|dkappa|={dk:.1e} |dLambda|={dl:.1e} |dq|={dq:.1e}"),
    )
}

fn rayleigh() -> Check {
    match rayleigh_quotient_testcase() {
        Ok(v) => check("rayleigh_testcase", (v - 2.0).abs() <= 1e-10, format!("quotient={v:.16e}")),
        Err(e) => error("rayleigh_testcase", e),
    }
}

fn check_branch_fd() -> Check {
    let name = "check_branch_fd";
    let mut worst_err: f64 = 0.0;
    let mut worst_order = f64::INFINITY;
    for r in [0.0, 1.0] {
        let ev = |n| lowest_eigs(&assemble(r, n, Sector::Check)?, 2);
        let (coarse, fine) = match (ev(256), ev(512)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return error(name, e),
        };
        for k in 1..=2 {
            let exact = check_eigenvalue(r, k);
            let (ec, ef) = ((coarse[k - 1] - exact).abs(), (fine[k - 1] - exact).abs());
            worst_err = worst_err.max(ef);
            worst_order = worst_order.min((ec / ef).log2());
        }
    }
    check(
        name,
        worst_err <= CHECK_FD_TOL && worst_order >= CHECK_FD_ORDER,
        format!("max_err={worst_err:.2e} min_order={worst_order:.3}"),
    )
}

fn band_cross_oracle() -> Check {
    let name = "band_cross_oracle";
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let r = 0.2 + 1.8 * i as f64 / 19.0;
        let secular = match lowest_branch(r) {
            Ok(p) => p.lambda,
            Err(e) => return error(name, e),
        };
        let fd = match assemble(r, 1024, Sector::FullH4).and_then(|d| lowest_eigs_banded(&d, 1)) {
            Ok(v) => v[0],
            Err(e) => return error(name, e),
        };
        worst = worst.max((secular - fd).abs());
    }
    check(name, worst <= BAND_FD_TOL, format!("max_abs_diff={worst:.2e} over 20 r in [0.2, 2]"))
}

/// `μ_0 … μ_{n_max}` of a profile by both routes.
struct ProfileModes {
    spec: &'static str,
    series: Vec<SignedLog>,
    quadrature: Vec<SignedLog>,
    consts: ModelConstants,
}

fn profile_modes(cfg: &RunConfig, spec: &'static str, m: &SpectralMinimum) -> Result<ProfileModes, String> {
    let profile: RadialProfile = spec.parse().map_err(|e: plate_modes::Error| e.to_string())?;
    let (quad, series) = constants(cfg, &profile, m).map_err(|e| e.to_string())?;
    let mut s = Vec::new();
    let mut q = Vec::new();
    for row in mode_rows(cfg, &quad, &series, PSD_N) {
        s.push(row.series.map_err(|e| format!("{spec} n={}: {e}", row.n))?);
        q.push(row.quadrature.map_err(|e| format!("{spec} n={}: {e}", row.n))?);
    }
    Ok(ProfileModes {
        spec,
        series: s,
        quadrature: q,
        consts: quad,
    })
}

fn dual_method(modes: &[ProfileModes]) -> Check {
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for pm in modes.iter().filter(|pm| pm.spec != BUMP) {
        let w = (0..=DUAL_METHOD_N)
            .map(|n| pm.series[n].rel_diff(&pm.quadrature[n]))
            .fold(0.0, f64::max);
        worst = worst.max(w);
        detail.push(format!("{}:{w:.1e}", pm.spec.split(':').next().unwrap_or("")));
    }
    check(
        "modes_dual_method",
        worst <= DUAL_METHOD_TOL,
        format!("max_rel_diff n<={DUAL_METHOD_N} {}", detail.join(" ")),
    )
}

fn psd(modes: &[ProfileModes]) -> Check {
    let min = modes
        .iter()
        .flat_map(|pm| pm.series.iter().chain(&pm.quadrature))
        .map(|v| v.to_f64())
        .fold(f64::INFINITY, f64::min);
    check("psd", min >= -PSD_TOL, format!("min_mu={min:.3e} n<={PSD_N} disk/annulus/bump"))
}

fn appendix_bracket(disk: &ProfileModes) -> Check {
    match bound_check(&disk.consts, &disk.series, 10..=40) {
        Ok(r) => {
            let bad: Vec<usize> = r.rows.iter().filter(|row| !row.within).map(|row| row.n).collect();
            check("appendix_bracket", bad.is_empty(), format!("n in [10, 40], outside: {bad:?}"))
        }
        Err(e) => error("appendix_bracket", e),
    }
}

fn accumulation(spectrum: &ModeSpectrum, env: &AsymptoticEnvelope, m: &SpectralMinimum) -> Check {
    let name = "accumulation_trend";
    let rep = match envelope_check(spectrum, env, m, ALPHA, 0.1, 20..=60) {
        Ok(r) => r,
        Err(e) => return error(name, e),
    };
    let in_band = rep.rows.iter().all(|r| (ACCUM_BAND.0..=ACCUM_BAND.1).contains(&r.ratio));
    let (r20, r60) = (rep.rows[0].ratio, rep.rows[rep.rows.len() - 1].ratio);
    check(
        name,
        in_band && (r60 - 1.0).abs() < (r20 - 1.0).abs(),
        format!("ratio(k=20)={r20:.4} ratio(k=60)={r60:.4}"),
    )
}

fn counting(spectrum: &ModeSpectrum, env: &AsymptoticEnvelope, m: &SpectralMinimum) -> Check {
    let name = "counting_consistency";
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 20..=60 {
        let r = predict_eigenvalue(spectrum, m, k, ALPHA)
            .and_then(|p| counting_ratio(spectrum, env, m, ALPHA, p.log_gap - 1e-9));
        match r {
            Ok(r) => {
                lo = lo.min(r);
                hi = hi.max(r);
            }
            Err(e) => return error(name, e),
        }
    }
    check(
        name,
        lo >= COUNT_BAND.0 && hi <= COUNT_BAND.1,
        format!("ratio range [{lo:.4}, {hi:.4}] for k in [20, 60]"),
    )
}

fn varrho(env: &AsymptoticEnvelope) -> Check {
    let name = "varrho_limit";
    let grid: Vec<f64> = (0..10).map(|i| -50.0 - 50.0 * i as f64).collect();
    let mut detail = Vec::new();
    let mut ok = true;
    for (which, label) in [(Envelope::Minus, "minus"), (Envelope::Plus, "plus")] {
        match varrho_limit_check(env, which, 2.0, &grid) {
            Ok(rep) => {
                let last = (rep.rows[rep.rows.len() - 1].ratio - 1.0).abs();
                ok &= rep.deviation_monotone() && last <= VARRHO_TOL;
                detail.push(format!("{label}:|r-1|(ln tau=-500)={last:.2e}"));
            }
            Err(e) => return error(name, e),
        }
    }
    check(name, ok, detail.join(" "))
}

fn log_gap_shift(spectrum: &ModeSpectrum, m: &SpectralMinimum) -> Check {
    let name = "log_gap_shift";
    let mut worst: f64 = 0.0;
    for l in 1..=spectrum.len() {
        match (predict_eigenvalue(spectrum, m, l, 0.1), predict_eigenvalue(spectrum, m, l, 0.01)) {
            (Ok(a), Ok(b)) => worst = worst.max((a.log_gap - b.log_gap - 2.0 * LN_10).abs()),
            (Err(e), _) | (_, Err(e)) => return error(name, e),
        }
    }
    check(name, worst <= 1e-12, format!("max |shift - 2 ln 10| = {worst:.1e}"))
}

/// Runs the full suite in a fixed order.
pub fn run_all(cfg: &RunConfig) -> Vec<Check> {
    let mut out = Vec::new();
    let m = match find_minimum_with(&minimum_config(cfg)) {
        Ok(m) => m,
        Err(e) => {
            out.push(error("minimum_golden", e));
            return out;
        }
    };
    out.push(minimum_golden(&m));
    out.push(rayleigh());
    out.push(check_branch_fd());
    out.push(band_cross_oracle());

    let mut modes = Vec::new();
    for spec in [DISK, ANNULUS, BUMP] {
        match profile_modes(cfg, spec, &m) {
            Ok(pm) => modes.push(pm),
            Err(e) => {
                out.push(error("modes_dual_method", e));
                return out;
            }
        }
    }
    out.push(dual_method(&modes));
    out.push(psd(&modes));
    let disk = &modes[0];
    out.push(appendix_bracket(disk));

    // The asymptotic checks use the uncorrupted quadrature values.
    let spectrum = match ordered_spectrum(&disk.quadrature) {
        Ok(s) => s,
        Err(e) => {
            out.push(error("accumulation_trend", e));
            return out;
        }
    };
    let env = match AsymptoticEnvelope::new(&disk.consts.profile, &m) {
        Ok(e) => e,
        Err(e) => {
            out.push(error("accumulation_trend", e));
            return out;
        }
    };
    out.push(accumulation(&spectrum, &env, &m));
    out.push(counting(&spectrum, &env, &m));
    out.push(varrho(&env));
    out.push(log_gap_shift(&spectrum, &m));
    out
}
