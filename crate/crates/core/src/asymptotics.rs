//! Small-coupling predictions and accumulation envelopes.
//!
//! Everything here lives in the log domain: `w±(t)` is below `1e-100` by
//! `t = 40` and `τ` is carried as `ln τ` throughout.
//!
//! ```text
//! ln w−(t) = 4 ln t + 2 ln f_t + 2t (ln(aκ) + 1 − ln t)
//! ln w+(t) = 8 ln t + 2 ln f_t + 2t (ln(aκ) + 1 − ln t)
//! ϱ±(τ)    = 1 / w±⁻¹(τ)
//! ```
//!
//! The checks that combine a fixed `α` with large `k` only test that the
//! small-coupling leading term and the accumulation rate are mutually
//! consistent; neither limit is exercised on the true perturbed operator.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::minimum::SpectralMinimum;
use crate::model::ModeSpectrum;
use crate::profile::RadialProfile;
use crate::solve::brent_root;

const T_SCAN_LO: f64 = 3.0;
const T_SCAN_HI: f64 = 1000.0;
const T_SCAN_STEP: f64 = 0.25;
/// Bracket width at which the inverse stops, relative to `max(1, t)`.
pub const INVERSE_XTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Envelope {
    Minus,
    Plus,
}

impl Envelope {
    fn power(self) -> f64 {
        match self {
            Envelope::Minus => 4.0,
            Envelope::Plus => 8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticEnvelope {
    pub profile: RadialProfile,
    pub minimum: SpectralMinimum,
    /// Both `ln w±` are strictly decreasing on `(t0, ∞)`.
    pub t0: f64,
}

impl AsymptoticEnvelope {
    /// Locates `t0` as the last scan point on `(3, 1000]` where either
    /// `ln w±` still increases, plus a 10% margin.
    pub fn new(profile: &RadialProfile, minimum: &SpectralMinimum) -> Result<Self> {
        let mut env = Self {
            profile: profile.clone(),
            minimum: *minimum,
            t0: T_SCAN_LO,
        };
        let steps = ((T_SCAN_HI - T_SCAN_LO) / T_SCAN_STEP).round() as usize;
        let mut last_rise = None;
        let mut prev = None;
        for i in 0..=steps {
            let t = T_SCAN_LO + T_SCAN_STEP * i as f64;
            let cur = (env.raw_log_w(Envelope::Minus, t)?, env.raw_log_w(Envelope::Plus, t)?);
            if let Some((pm, pp)) = prev {
                if cur.0 >= pm || cur.1 >= pp {
                    last_rise = Some(t);
                }
            }
            prev = Some(cur);
        }
        if let Some(t) = last_rise {
            if t >= T_SCAN_HI {
                return Err(Error::Domain(format!("ln w still increasing at t = {T_SCAN_HI}")));
            }
            env.t0 = 1.1 * t;
        }
        Ok(env)
    }

    fn raw_log_w(&self, which: Envelope, t: f64) -> Result<f64> {
        let a_kappa = self.profile.a() * self.minimum.kappa;
        let f = self.profile.moment_f_t(t)?;
        Ok(which.power() * t.ln() + 2.0 * f.ln() + 2.0 * t * (a_kappa.ln() + 1.0 - t.ln()))
    }

    /// `ln w±(t)` for `t > t0`.
    pub fn log_w(&self, which: Envelope, t: f64) -> Result<f64> {
        if !(t > self.t0) {
            return Err(Error::Domain(format!("t = {t} not above t0 = {}", self.t0)));
        }
        self.raw_log_w(which, t)
    }

    /// Supremum of `ln w±` on the invertible range, `ln w±(t0)`.
    pub fn log_tau_max(&self, which: Envelope) -> Result<f64> {
        self.raw_log_w(which, self.t0)
    }

    /// `w±⁻¹(τ)` from `ln τ`.
    pub fn inverse_w(&self, which: Envelope, log_tau: f64) -> Result<f64> {
        let top = self.log_tau_max(which)?;
        if !(log_tau < top) || !log_tau.is_finite() {
            return Err(Error::OutOfRange(format!(
                "ln tau = {log_tau} outside the invertible range (-inf, {top})"
            )));
        }
        let lo = self.t0;
        let mut hi = 2.0 * lo;
        while self.raw_log_w(which, hi)? > log_tau {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::OutOfRange(format!("ln tau = {log_tau} too small to invert")));
            }
        }
        let g = |t: f64| self.raw_log_w(which, t).map(|v| v - log_tau).unwrap_or(f64::NAN);
        brent_root(g, lo, hi, INVERSE_XTOL * hi.max(1.0))
    }

    /// `ln ϱ±(τ) = −ln w±⁻¹(τ)`.
    pub fn log_varrho(&self, which: Envelope, log_tau: f64) -> Result<f64> {
        Ok(-self.inverse_w(which, log_tau)?.ln())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarrhoRow {
    pub log_tau: f64,
    /// `ϱ(τ) / ϱ(cτ)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarrhoReport {
    pub c: f64,
    pub rows: Vec<VarrhoRow>,
    /// `max |ratio − 1|` over the second half of the grid.
    pub tail_max_deviation: f64,
}

impl VarrhoReport {
    /// Whether `|ratio − 1|` never increases along the grid.
    pub fn deviation_monotone(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| (w[1].ratio - 1.0).abs() <= (w[0].ratio - 1.0).abs())
    }
}

/// Tabulates `ϱ(τ) / ϱ(cτ)` along `log_tau_grid`.
pub fn varrho_limit_check(env: &AsymptoticEnvelope, which: Envelope, c: f64, log_tau_grid: &[f64]) -> Result<VarrhoReport> {
    if !(c > 0.0) {
        return Err(Error::Domain(format!("c = {c} must be positive")));
    }
    let ln_c = c.ln();
    let mut rows = Vec::with_capacity(log_tau_grid.len());
    for &lt in log_tau_grid {
        let ratio = if c == 1.0 {
            1.0
        } else {
            (env.log_varrho(which, lt)? - env.log_varrho(which, lt + ln_c)?).exp()
        };
        rows.push(VarrhoRow { log_tau: lt, ratio });
    }
    let tail_max_deviation = rows[rows.len() / 2..]
        .iter()
        .map(|r| (r.ratio - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(VarrhoReport {
        c,
        rows,
        tail_max_deviation,
    })
}

/// Leading small-coupling term `κ_l(α) ≈ Λ − α²(Λπ λ_l(K))²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenvaluePrediction {
    pub l: usize,
    pub alpha: f64,
    pub predicted: f64,
    /// `ln(Λ − predicted)`, kept separately since the gap underflows `Λ`'s ulp.
    pub log_gap: f64,
}

/// Leading term only; the `o(α²)` remainder has no computable form.
pub fn predict_eigenvalue(spectrum: &ModeSpectrum, minimum: &SpectralMinimum, l: usize, alpha: f64) -> Result<EigenvaluePrediction> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} outside [0, 1)")));
    }
    let lam_k = spectrum.lambda(l)?;
    let lambda_cap = minimum.lambda_cap;
    if alpha == 0.0 || lam_k.is_zero() {
        return Ok(EigenvaluePrediction {
            l,
            alpha,
            predicted: lambda_cap,
            log_gap: f64::NEG_INFINITY,
        });
    }
    let log_gap = 2.0 * alpha.ln() + 2.0 * (lambda_cap * PI).ln() + 2.0 * lam_k.ln_abs;
    Ok(EigenvaluePrediction {
        l,
        alpha,
        predicted: lambda_cap - log_gap.exp(),
        log_gap,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeRow {
    pub k: usize,
    /// `ln(Λ − κ_k(α))` from the leading term.
    pub g: f64,
    /// `ln w−((1+ε)k)`.
    pub log_w_minus: f64,
    /// `ln w+((1−ε)k)`, `None` when `(1−ε)k <= t0`.
    pub log_w_plus: Option<f64>,
    pub contained: bool,
    /// `g / (−2k ln k)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub alpha: f64,
    pub eps: f64,
    pub rows: Vec<EnvelopeRow>,
}

impl EnvelopeReport {
    pub fn row(&self, k: usize) -> Option<&EnvelopeRow> {
        self.rows.iter().find(|r| r.k == k)
    }
}

/// Compares the leading-term gaps with the accumulation envelopes.
pub fn envelope_check(
    spectrum: &ModeSpectrum,
    env: &AsymptoticEnvelope,
    minimum: &SpectralMinimum,
    alpha: f64,
    eps: f64,
    k_range: RangeInclusive<usize>,
) -> Result<EnvelopeReport> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain(format!("eps = {eps} outside [0, 1)")));
    }
    let mut rows = Vec::new();
    for k in k_range {
        if k < 2 {
            return Err(Error::Domain("envelope check needs k >= 2".into()));
        }
        let g = predict_eigenvalue(spectrum, minimum, k, alpha)?.log_gap;
        let kf = k as f64;
        let log_w_minus = env.log_w(Envelope::Minus, (1.0 + eps) * kf)?;
        let log_w_plus = env.log_w(Envelope::Plus, (1.0 - eps) * kf).ok();
        let contained = log_w_plus.is_some_and(|p| log_w_minus <= g && g <= p);
        rows.push(EnvelopeRow {
            k,
            g,
            log_w_minus,
            log_w_plus,
            contained,
            ratio: g / (-2.0 * kf * kf.ln()),
        });
    }
    Ok(EnvelopeReport { alpha, eps, rows })
}

/// `#{k : ln(Λ − κ_k(α)) > ln τ} / w+⁻¹(τ)` over the predicted spectrum.
pub fn counting_ratio(
    spectrum: &ModeSpectrum,
    env: &AsymptoticEnvelope,
    minimum: &SpectralMinimum,
    alpha: f64,
    log_tau: f64,
) -> Result<f64> {
    let mut count = 0usize;
    for l in 1..=spectrum.len() {
        if predict_eigenvalue(spectrum, minimum, l, alpha)?.log_gap > log_tau {
            count += 1;
        }
    }
    Ok(count as f64 / env.inverse_w(Envelope::Plus, log_tau)?)
}
