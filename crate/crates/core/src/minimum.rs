//! Location and curvature of the band minimum `Λ = min_r λ1(r)`.
//!
//! A coarse scan brackets the minimum, golden-section search narrows it,
//! and `κ` is then polished as the root of the implicit derivative
//! `dλ/dr = −G_r / G_λ`, which function values alone cannot resolve below
//! about `sqrt(ε)`.

use crate::band::{lowest_branch_in, lowest_hat_root, secular_function, R_MAX};
use crate::error::{Error, Result};
use crate::solve::{brent_root, golden_section};

/// The band minimum: `λ1(κ) = Λ`, `λ1(κ + ε) = Λ + q² ε² + O(ε³)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralMinimum {
    pub kappa: f64,
    pub lambda_cap: f64,
    pub q: f64,
    pub kappa_err: f64,
    pub lambda_err: f64,
    pub q_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimumConfig {
    pub r_max: f64,
    pub scan_points: usize,
    /// Step of the five-point second-difference stencil.
    pub diff_step: f64,
}

impl Default for MinimumConfig {
    fn default() -> Self {
        Self {
            r_max: R_MAX,
            scan_points: 400,
            diff_step: 1e-3,
        }
    }
}

impl MinimumConfig {
    /// Few scan points and a wide stencil; same answer, wider error bars.
    pub fn coarse() -> Self {
        Self {
            r_max: R_MAX,
            scan_points: 20,
            diff_step: 1e-2,
        }
    }
}

// Implicit derivative dλ/dr along the hat branch through (λ, r).
fn branch_slope(lambda: f64, r: f64) -> f64 {
    let dl = 1e-6 * lambda.max(1.0);
    let dr = 1e-6 * r.max(1.0);
    let g_l = secular_function(lambda + dl, r) - secular_function(lambda - dl, r);
    let g_r = secular_function(lambda, r + dr) - secular_function(lambda, r - dr);
    -(g_r / (2.0 * dr)) / (g_l / (2.0 * dl))
}

fn second_difference(f: &impl Fn(f64) -> Result<f64>, x: f64, f0: f64, h: f64) -> Result<f64> {
    Ok((f(x + h)? - 2.0 * f0 + f(x - h)?) / (h * h))
}

pub fn find_minimum() -> Result<SpectralMinimum> {
    find_minimum_with(&MinimumConfig::default())
}

pub fn find_minimum_with(cfg: &MinimumConfig) -> Result<SpectralMinimum> {
    if cfg.scan_points < 4 || !(cfg.r_max > 0.0) || !(cfg.diff_step > 0.0) {
        return Err(Error::Bracket(format!("invalid minimum config {cfg:?}")));
    }
    let spacing = cfg.r_max / cfg.scan_points as f64;
    let grid: Vec<f64> = (1..=cfg.scan_points).map(|i| spacing * i as f64).collect();
    let values = grid
        .iter()
        .map(|&r| lowest_branch_in(r, cfg.r_max).map(|p| p.lambda))
        .collect::<Result<Vec<_>>>()?;
    let (imin, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty scan");
    if imin == 0 || imin + 1 == grid.len() {
        return Err(Error::Bracket(format!(
            "scan minimum at the edge of (0, {}] (r = {})",
            cfg.r_max, grid[imin]
        )));
    }
    let (lo, hi) = (grid[imin - 1], grid[imin + 1]);

    let hat = |r: f64| lowest_hat_root(r);
    let golden_tol = 1e-7 * spacing;
    let (kappa_golden, _) = golden_section(|r| hat(r).unwrap_or(f64::INFINITY), lo, hi, golden_tol)?;

    let slope = |r: f64| hat(r).map(|l| branch_slope(l, r)).unwrap_or(f64::NAN);
    let kappa = brent_root(slope, lo, hi, 1e-13)?;
    let lambda_cap = hat(kappa)?;

    let h = cfg.diff_step;
    let d2_h = second_difference(&hat, kappa, lambda_cap, h)?;
    let d2_2h = second_difference(&hat, kappa, lambda_cap, 2.0 * h)?;
    let curvature = (4.0 * d2_h - d2_2h) / 3.0;
    if !(curvature > 0.0) {
        return Err(Error::DegenerateMinimum(curvature));
    }
    let q = (0.5 * curvature).sqrt();
    let q_plain = (0.5 * d2_h).sqrt();

    let kappa_err = (kappa - kappa_golden).abs().max(1e-12);
    let lambda_err = (hat(kappa_golden)? - lambda_cap).abs() + 1e-13;
    Ok(SpectralMinimum {
        kappa,
        lambda_cap,
        q,
        kappa_err,
        lambda_err,
        q_err: (q - q_plain).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn minimum() -> &'static SpectralMinimum {
        static M: OnceLock<SpectralMinimum> = OnceLock::new();
        M.get_or_init(|| find_minimum().unwrap())
    }

    #[test]
    fn golden_values() {
        let m = minimum();
        assert!((m.kappa - 0.632138).abs() < 1e-5, "{}", m.kappa);
        assert!((m.lambda_cap - 1.887837).abs() < 1e-5, "{}", m.lambda_cap);
        assert!((m.q - 0.849748).abs() < 1e-4, "{}", m.q);
    }

    #[test]
    fn stationarity() {
        let m = minimum();
        let e = 1e-4;
        let lp = lowest_hat_root(m.kappa + e).unwrap();
        let lm = lowest_hat_root(m.kappa - e).unwrap();
        assert!((lp - lm).abs() / (2.0 * e) < 1e-6);
        assert!(lp > m.lambda_cap && lm > m.lambda_cap);
    }

    #[test]
    fn quadratic_coefficient_matches_curvature() {
        let m = minimum();
        for e in [1e-2, 5e-3, 2e-3] {
            let sym = lowest_hat_root(m.kappa + e).unwrap() + lowest_hat_root(m.kappa - e).unwrap()
                - 2.0 * m.lambda_cap;
            let fitted = sym / (2.0 * e * e);
            assert!((fitted / (m.q * m.q) - 1.0).abs() < 1e-2, "eps={e}: {fitted}");
        }
    }

    #[test]
    fn endpoints_lie_above_minimum() {
        let m = minimum();
        assert!(lowest_branch_in(1e-3, R_MAX).unwrap().lambda > m.lambda_cap);
        assert!(lowest_branch_in(R_MAX, R_MAX).unwrap().lambda > m.lambda_cap);
    }

    #[test]
    fn coarse_config_agrees_with_wider_bars() {
        let fine = minimum();
        let coarse = find_minimum_with(&MinimumConfig::coarse()).unwrap();
        assert!((coarse.kappa - fine.kappa).abs() < 1e-8);
        assert!((coarse.lambda_cap - fine.lambda_cap).abs() < 1e-12);
        assert!((coarse.q - fine.q).abs() < 1e-6);
        assert!(coarse.q_err > fine.q_err);
        assert!(coarse.kappa_err >= fine.kappa_err);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = MinimumConfig {
            scan_points: 2,
            ..MinimumConfig::default()
        };
        assert!(find_minimum_with(&cfg).is_err());
        let cfg = MinimumConfig {
            r_max: 0.3,
            ..MinimumConfig::default()
        };
        assert!(matches!(find_minimum_with(&cfg), Err(Error::Bracket(_))));
    }
}
