//! Dispersion branches of the cross-section operator at wavenumber `r`.
//!
//! The hat block acts on `(u2, u3)` with `u2` even and `u3` odd in the
//! thickness variable `t ∈ J = (−π/2, π/2)`. Its eigenfunctions are
//! `(0, i r d1, d2)` where, with `β² = λ − r²` and `γ² = λ/2 − r²`,
//!
//! ```text
//! d1 = A cos(γt) + B cos(βt)
//! d2 = −A γ sin(γt) + (r²/β) B sin(βt)
//! ```
//!
//! and the canonical choice is `A = rβ cos(πβ/2)`, `B = (γ²β/r) cos(πγ/2)`.
//! `d2'(±π/2) = 0` holds for every `λ`; the remaining stress-free condition
//! `d1' + d2 = 0` at `t = π/2` factors as
//!
//! ```text
//! d1'(π/2) + d2(π/2) = −2 (γ²β/r) G(λ, r),
//! G = r² cos(πβ/2) sin(πγ/2)/γ + γ² cos(πγ/2) sin(πβ/2)/β.
//! ```
//!
//! `G` is entire in `λ` and drops the spurious zero at `γ = 0`, which
//! belongs to the constant mode `(0, 1, 0)` outside the zero-mean space.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::fd;
use crate::quadrature::{integrate, Interval};
use crate::solve::brent_root;

/// Default upper end of the wavenumber range.
pub const R_MAX: f64 = 4.0;

const ROOT_XTOL: f64 = 1e-14;
// Mesh of the coarse FD solve that sets the root-scan step.
const SCAN_FD_N: usize = 64;

/// `cos(x t)` as an entire function of `x²` (`cosh(|x| t)` for `x² < 0`).
pub fn trig_even(x_sq: f64, t: f64) -> f64 {
    if x_sq >= 0.0 {
        (x_sq.sqrt() * t).cos()
    } else {
        ((-x_sq).sqrt() * t).cosh()
    }
}

/// `sin(x t) / x` as an entire function of `x²`; equals `t` at `x² = 0`.
pub fn trig_odd(x_sq: f64, t: f64) -> f64 {
    let z = x_sq * t * t;
    if z.abs() < 1e-6 {
        return t * (1.0 - z / 6.0 * (1.0 - z / 20.0));
    }
    if x_sq > 0.0 {
        let x = x_sq.sqrt();
        (x * t).sin() / x
    } else {
        let x = (-x_sq).sqrt();
        (x * t).sinh() / x
    }
}

/// `d1`, `d2` of the hat eigenfunction at `(r, λ)` with coefficients `A`, `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenfunctionData {
    pub r: f64,
    pub lambda: f64,
    pub beta: f64,
    pub gamma_sq: f64,
    pub coef_a: f64,
    pub coef_b: f64,
}

impl EigenfunctionData {
    fn coef_d(&self) -> f64 {
        self.r * self.r / self.beta * self.coef_b
    }

    pub fn d1(&self, t: f64) -> f64 {
        self.coef_a * trig_even(self.gamma_sq, t) + self.coef_b * (self.beta * t).cos()
    }

    pub fn d2(&self, t: f64) -> f64 {
        -self.coef_a * self.gamma_sq * trig_odd(self.gamma_sq, t) + self.coef_d() * (self.beta * t).sin()
    }

    pub fn d1_prime(&self, t: f64) -> f64 {
        -self.coef_a * self.gamma_sq * trig_odd(self.gamma_sq, t) - self.coef_b * self.beta * (self.beta * t).sin()
    }

    pub fn d2_prime(&self, t: f64) -> f64 {
        -self.coef_a * self.gamma_sq * trig_even(self.gamma_sq, t)
            + self.coef_d() * self.beta * (self.beta * t).cos()
    }

    pub fn d1_second(&self, t: f64) -> f64 {
        -self.coef_a * self.gamma_sq * trig_even(self.gamma_sq, t)
            - self.coef_b * self.beta * self.beta * (self.beta * t).cos()
    }

    pub fn d2_second(&self, t: f64) -> f64 {
        let g2 = self.gamma_sq;
        self.coef_a * g2 * g2 * trig_odd(g2, t) - self.coef_d() * self.beta * self.beta * (self.beta * t).sin()
    }

    /// The same eigenfunction multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            coef_a: c * self.coef_a,
            coef_b: c * self.coef_b,
            ..*self
        }
    }

    /// Residual of the hat differential expression applied to
    /// `(i r d1, d2)`: the `u2` row divided by `i` and the `u3` row.
    pub fn ode_residual(&self, t: f64) -> (f64, f64) {
        let (r, l) = (self.r, self.lambda);
        let d1 = self.d1(t);
        let d2 = self.d2(t);
        let row2 = r * (-self.d1_second(t) + 2.0 * r * r * d1 - self.d2_prime(t) - l * d1);
        let row3 = r * r * self.d1_prime(t) - 2.0 * self.d2_second(t) + r * r * d2 - l * d2;
        (row2, row3)
    }

    /// Reduced-form fields `v2 = r d1`, `w3 = −d2` (third component `i w3`).
    pub fn v2(&self, t: f64) -> f64 {
        self.r * self.d1(t)
    }

    pub fn w3(&self, t: f64) -> f64 {
        -self.d2(t)
    }
}

fn check_above_cut(r: f64, lambda: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("wavenumber r = {r} must be positive")));
    }
    if !(lambda > r * r) {
        return Err(Error::Domain(format!(
            "lambda = {lambda} <= r^2 = {}: below branch cut for beta",
            r * r
        )));
    }
    Ok((lambda - r * r).sqrt())
}

/// Canonical `d1`, `d2` at `(r, λ)`; requires `r > 0` and `λ > r²`.
pub fn d_functions(r: f64, lambda: f64) -> Result<EigenfunctionData> {
    let beta = check_above_cut(r, lambda)?;
    let gamma_sq = 0.5 * lambda - r * r;
    Ok(EigenfunctionData {
        r,
        lambda,
        beta,
        gamma_sq,
        coef_a: r * beta * (FRAC_PI_2 * beta).cos(),
        coef_b: gamma_sq * beta / r * trig_even(gamma_sq, FRAC_PI_2),
    })
}

/// `d1`, `d2` at a root of `G`, with `(A, B) ∝ (sin(πβ/2)/β, −sin(πγ/2)/γ)`
/// and `A² + B² = 1`. Unlike [`d_functions`] this stays nonzero where both
/// canonical coefficients vanish (e.g. `r = 1`, `λ = 2`).
pub fn d_functions_on_root(r: f64, lambda: f64) -> Result<EigenfunctionData> {
    let beta = check_above_cut(r, lambda)?;
    let gamma_sq = 0.5 * lambda - r * r;
    let tb = trig_odd(beta * beta, FRAC_PI_2);
    let tg = trig_odd(gamma_sq, FRAC_PI_2);
    let norm = tb.hypot(tg);
    Ok(EigenfunctionData {
        r,
        lambda,
        beta,
        gamma_sq,
        coef_a: tb / norm,
        coef_b: -tg / norm,
    })
}

struct SecularParts {
    term_beta: f64,
    term_gamma: f64,
    scale: f64,
}

fn secular_parts(lambda: f64, r: f64) -> SecularParts {
    let b2 = lambda - r * r;
    let g2 = 0.5 * lambda - r * r;
    let cb = trig_even(b2, FRAC_PI_2);
    let tb = trig_odd(b2, FRAC_PI_2);
    let cg = trig_even(g2, FRAC_PI_2);
    let tg = trig_odd(g2, FRAC_PI_2);
    SecularParts {
        term_beta: r * r * cb * tg,
        term_gamma: g2 * cg * tb,
        // |G| <= scale, and scale > 0 whenever r > 0 or λ != 0.
        scale: (r * r + g2.abs()) * (cb.abs() + tb.abs()) * (cg.abs() + tg.abs()),
    }
}

/// `G(λ, r)` divided by a positive scale bounding it; entire in `λ` and
/// valid on both sides of `λ = r²`.
pub fn secular_function(lambda: f64, r: f64) -> f64 {
    let p = secular_parts(lambda, r);
    (p.term_beta + p.term_gamma) / p.scale
}

/// Unscaled `G(λ, r)`.
pub fn secular_function_raw(lambda: f64, r: f64) -> f64 {
    let p = secular_parts(lambda, r);
    p.term_beta + p.term_gamma
}

/// Normalized secular residual for `λ > r²`; zero exactly at hat eigenvalues.
pub fn secular_residual(lambda: f64, r: f64) -> Result<f64> {
    check_above_cut(r, lambda)?;
    Ok(secular_function(lambda, r))
}

/// The stress-free boundary residual `d1'(π/2) + d2(π/2)` of the canonical
/// d-functions, including the factor `−2 γ²β/r` that [`secular_function`]
/// strips.
pub fn boundary_residual(lambda: f64, r: f64) -> Result<f64> {
    let ef = d_functions(r, lambda)?;
    Ok(ef.d1_prime(FRAC_PI_2) + ef.d2(FRAC_PI_2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchTag {
    Hat(usize),
    Check(usize),
}

impl std::fmt::Display for BranchTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BranchTag::Hat(k) => write!(f, "hat{k}"),
            BranchTag::Check(k) => write!(f, "check{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPoint {
    pub r: f64,
    pub lambda: f64,
    pub branch_tag: BranchTag,
}

/// `λ̌_k(r) = r² + 4k²`.
pub fn check_eigenvalue(r: f64, k: usize) -> f64 {
    r * r + 4.0 * (k * k) as f64
}

/// Root-scan step: half the gap between the two lowest eigenvalues of a
/// coarse FD solve at the same `r`.
pub fn scan_step(r: f64) -> Result<(f64, f64)> {
    let disc = fd::assemble(r, SCAN_FD_N, fd::Sector::Hat)?;
    let ev = fd::lowest_eigs_dense(&disc, 2)?;
    Ok((0.5 * (ev[1] - ev[0]), ev[0]))
}

/// Lowest root of `G(·, r)`. The conforming FD eigenvalue bounds it from
/// above, so the scan runs up to slightly past it. `G(0, r) = 0` for every
/// `r` (both terms coincide at `β² = γ² = −r²`), so the scan starts just
/// above zero.
pub fn lowest_hat_root(r: f64) -> Result<f64> {
    let (step, upper) = scan_step(r)?;
    let limit = upper * (1.0 + 1e-6) + step;
    let f = |l: f64| secular_function(l, r);
    let start = 1e-3 * upper;
    let mut lo = start;
    let mut f_lo = f(lo);
    while lo < limit {
        let hi = (lo + step).min(limit);
        let f_hi = f(hi);
        if f_lo == 0.0 {
            return Ok(lo);
        }
        if f_lo.signum() != f_hi.signum() || f_hi == 0.0 {
            return brent_root(f, lo, hi, ROOT_XTOL);
        }
        lo = hi;
        f_lo = f_hi;
    }
    Err(Error::NoRootBracketed { r, lo: start, hi: limit })
}

/// `λ1(r)`: the smaller of the lowest hat root and `r² + 4`, on `(0, r_max]`.
pub fn lowest_branch_in(r: f64, r_max: f64) -> Result<BranchPoint> {
    if !(r > 0.0 && r <= r_max) {
        return Err(Error::Domain(format!("r = {r} outside (0, {r_max}]")));
    }
    let hat = lowest_hat_root(r)?;
    let check = check_eigenvalue(r, 1);
    Ok(if hat <= check {
        BranchPoint {
            r,
            lambda: hat,
            branch_tag: BranchTag::Hat(1),
        }
    } else {
        BranchPoint {
            r,
            lambda: check,
            branch_tag: BranchTag::Check(1),
        }
    })
}

pub fn lowest_branch(r: f64) -> Result<BranchPoint> {
    lowest_branch_in(r, R_MAX)
}

/// Quotient of the reduced hat form at `r` for fields `v2`, `w3` (third
/// component `i w3`) given with their derivatives.
pub fn form_quotient<V, DV, W, DW>(r: f64, v2: V, dv2: DV, w3: W, dw3: DW) -> Result<f64>
where
    V: Fn(f64) -> f64,
    DV: Fn(f64) -> f64,
    W: Fn(f64) -> f64,
    DW: Fn(f64) -> f64,
{
    let j = Interval::new(-FRAC_PI_2, FRAC_PI_2)?;
    let form = integrate(
        |t| {
            let g = dv2(t) - r * w3(t);
            2.0 * r * r * v2(t).powi(2) + 2.0 * dw3(t).powi(2) + g * g
        },
        j,
        1e-13,
    )?;
    let norm = integrate(|t| v2(t).powi(2) + w3(t).powi(2), j, 1e-13)?;
    Ok(form / norm)
}

/// Form quotient at `r = 1` of `u = (0, 1 − (π/2) cos t, i (π/2) sin t)`,
/// scaled by `scale`.
pub fn rayleigh_quotient_scaled(scale: f64) -> Result<f64> {
    form_quotient(
        1.0,
        |t| scale * (1.0 - FRAC_PI_2 * t.cos()),
        |t| scale * FRAC_PI_2 * t.sin(),
        |t| scale * FRAC_PI_2 * t.sin(),
        |t| scale * FRAC_PI_2 * t.cos(),
    )
}

/// The test-function quotient at `r = 1`; exactly 2.
pub fn rayleigh_quotient_testcase() -> Result<f64> {
    rayleigh_quotient_scaled(1.0)
}

/// Form quotient of the eigenfunction built from `d_functions_on_root` at
/// `(r, λ1(r))`; equals `λ1(r)` on the hat branch.
pub fn eigenfunction_quotient(r: f64) -> Result<f64> {
    let lambda = lowest_hat_root(r)?;
    let ef = d_functions_on_root(r, lambda)?;
    form_quotient(
        r,
        |t| ef.v2(t),
        |t| r * ef.d1_prime(t),
        |t| ef.w3(t),
        |t| -ef.d2_prime(t),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const KAPPA: f64 = 0.632138;
    const LAMBDA: f64 = 1.887837;

    #[test]
    fn trig_special_values() {
        assert_eq!(trig_even(0.0, 3.0), 1.0);
        assert_eq!(trig_odd(0.0, 5.0), 5.0);
        assert!((trig_even(-1.0, 1.0) - 1.0f64.cosh()).abs() < 1e-15);
        assert!((trig_odd(4.0, 1.0) - 2f64.sin() / 2.0).abs() < 1e-15);
        assert!((trig_odd(-4.0, 1.0) - 2f64.sinh() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn trig_odd_is_continuous_through_zero() {
        for t in [0.5, FRAC_PI_2, 3.0] {
            for x2 in [1e-7, -1e-7, 1e-5, -1e-5] {
                let series = trig_odd(x2, t);
                let direct = if x2 > 0.0 {
                    (x2.sqrt() * t).sin() / x2.sqrt()
                } else {
                    ((-x2).sqrt() * t).sinh() / (-x2).sqrt()
                };
                assert!((series - direct).abs() < 1e-12 * t, "x2={x2} t={t}");
            }
        }
    }

    #[test]
    fn d2_prime_vanishes_at_faces() {
        for (r, l) in [(0.3, 1.0), (KAPPA, LAMBDA), (1.0, 2.5), (1.5, 7.0), (0.7, 0.98)] {
            let ef = d_functions(r, l).unwrap();
            let scale = ef.coef_a.abs() + ef.coef_b.abs() + 1.0;
            assert!(ef.d2_prime(FRAC_PI_2).abs() < 1e-14 * scale * l);
            assert!(ef.d2_prime(-FRAC_PI_2).abs() < 1e-14 * scale * l);
        }
    }

    #[test]
    fn parity_of_d_functions() {
        let ef = d_functions(KAPPA, LAMBDA).unwrap();
        for i in 0..100 {
            let t = -FRAC_PI_2 + std::f64::consts::PI * (i as f64 + 0.5) / 100.0;
            assert_eq!(ef.d1(-t), ef.d1(t));
            assert_eq!(ef.d2(-t), -ef.d2(t));
        }
    }

    #[test]
    fn trivial_zero_at_origin() {
        for r in [0.1, 1.0, 3.0] {
            assert!(secular_function(0.0, r).abs() < 1e-15);
        }
    }

    #[test]
    fn domain_is_enforced() {
        assert!(d_functions(1.0, 1.0).is_err());
        assert!(d_functions(0.0, 1.0).is_err());
        assert!(secular_residual(2.0, 2.0).is_err());
    }

    #[test]
    fn boundary_residual_factorization() {
        for (r, l) in [(0.3, 1.0), (KAPPA, 2.2), (1.2, 3.0), (0.9, 1.62)] {
            let ef = d_functions(r, l).unwrap();
            let raw = boundary_residual(l, r).unwrap();
            let factored = -2.0 * ef.gamma_sq * ef.beta / r * secular_function_raw(l, r);
            assert!((raw - factored).abs() < 1e-13 * (1.0 + raw.abs()), "{raw} vs {factored}");
        }
    }

    #[test]
    fn eigenfunction_satisfies_ode_at_minimum() {
        let lambda = lowest_hat_root(KAPPA).unwrap();
        let ef = d_functions(KAPPA, lambda).unwrap();
        let mut max_res: f64 = 0.0;
        let mut max_f: f64 = 0.0;
        for i in 0..=200 {
            let t = -FRAC_PI_2 + std::f64::consts::PI * i as f64 / 200.0;
            let (a, b) = ef.ode_residual(t);
            max_res = max_res.max(a.abs()).max(b.abs());
            max_f = max_f.max((KAPPA * ef.d1(t)).abs()).max(ef.d2(t).abs());
        }
        assert!(max_res <= 1e-8 * max_f, "residual {max_res}");
        let bc = ef.d1_prime(FRAC_PI_2) + ef.d2(FRAC_PI_2);
        assert!(bc.abs() <= 1e-12 * max_f);
    }

    #[test]
    fn ode_residual_small_across_range() {
        for i in 0..=12 {
            let r = 0.3 + 0.1 * i as f64;
            let lambda = lowest_hat_root(r).unwrap();
            let ef = d_functions_on_root(r, lambda).unwrap();
            let mut res: f64 = 0.0;
            let mut size: f64 = 0.0;
            for j in 0..=100 {
                let t = -FRAC_PI_2 + std::f64::consts::PI * j as f64 / 100.0;
                let (a, b) = ef.ode_residual(t);
                res = res.max(a.abs()).max(b.abs());
                size = size.max((r * ef.d1(t)).abs()).max(ef.d2(t).abs());
            }
            assert!(res <= 1e-7 * size, "r={r}: {res} vs {size}");
        }
    }

    #[test]
    fn secular_vanishes_at_minimum() {
        let lambda = lowest_hat_root(KAPPA).unwrap();
        assert!(secular_residual(lambda, KAPPA).unwrap().abs() < 1e-13);
        assert!(secular_residual(LAMBDA, KAPPA).unwrap().abs() < 1e-6);
        assert!((lambda - LAMBDA).abs() < 1e-5);
    }

    #[test]
    fn root_at_one_matches_fd() {
        let root = lowest_hat_root(1.0).unwrap();
        let fd_ev = fd::lowest_eigs(&fd::assemble(1.0, 1024, fd::Sector::Hat).unwrap(), 1).unwrap()[0];
        assert!((root - fd_ev).abs() < 1e-5, "{root} vs {fd_ev}");
        assert!(root <= 2.0 + 1e-12);
    }

    #[test]
    fn bracket_contains_fd_eigenvalue() {
        let r = 0.8;
        let (step, _) = scan_step(r).unwrap();
        let fd_ev = fd::lowest_eigs(&fd::assemble(r, 1024, fd::Sector::Hat).unwrap(), 1).unwrap()[0];
        let root = lowest_hat_root(r).unwrap();
        let lo = (root / step).floor() * step;
        let hi = lo + step;
        assert!(secular_function(lo, r).signum() != secular_function(hi, r).signum());
        assert!(lo < fd_ev && fd_ev < hi);
    }

    #[test]
    fn rayleigh_testcase_is_two() {
        assert!((rayleigh_quotient_testcase().unwrap() - 2.0).abs() < 1e-10);
        assert!((rayleigh_quotient_scaled(3.0).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn eigenfunction_quotient_equals_branch() {
        for r in [0.5, 1.0, 1.3] {
            let q = eigenfunction_quotient(r).unwrap();
            let l = lowest_branch(r).unwrap().lambda;
            assert!((q - l).abs() < 1e-7, "r={r}: {q} vs {l}");
        }
    }

    #[test]
    fn lowest_branch_values() {
        assert!(lowest_branch(1.0).unwrap().lambda <= 2.0 + 1e-12);
        let p = lowest_branch(KAPPA).unwrap();
        assert_eq!(p.branch_tag, BranchTag::Hat(1));
        assert!((p.lambda - LAMBDA).abs() < 1e-5);
        for i in 0..=12 {
            let r = 0.3 + 0.1 * i as f64;
            assert!(lowest_branch(r).unwrap().lambda < check_eigenvalue(r, 1));
        }
        assert!(lowest_branch(0.0).is_err());
        assert!(lowest_branch(4.5).is_err());
    }

    #[test]
    fn small_and_large_wavenumbers() {
        for r in [0.05, 0.1, 2.0, 3.0, 4.0] {
            let root = lowest_hat_root(r).unwrap();
            let fd_ev = fd::lowest_eigs(&fd::assemble(r, 512, fd::Sector::Hat).unwrap(), 1).unwrap()[0];
            assert!((root - fd_ev).abs() < 1e-3 * fd_ev, "r={r}: {root} vs {fd_ev}");
        }
    }

    #[test]
    fn root_normalized_matches_canonical_shape() {
        let lambda = lowest_hat_root(KAPPA).unwrap();
        let a = d_functions(KAPPA, lambda).unwrap();
        let b = d_functions_on_root(KAPPA, lambda).unwrap();
        let c = a.d1(0.3) / b.d1(0.3);
        for t in [-1.2, -0.4, 0.1, 0.9, 1.5] {
            assert!((a.d1(t) - c * b.d1(t)).abs() < 1e-10 * c.abs());
            assert!((a.d2(t) - c * b.d2(t)).abs() < 1e-10 * c.abs());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn d2_prime_zero_everywhere(r in 0.05f64..3.0, excess in 0.01f64..20.0) {
            let ef = d_functions(r, r * r + excess).unwrap();
            let scale = (ef.coef_a.abs() + ef.coef_b.abs()) * (1.0 + ef.lambda);
            prop_assert!(ef.d2_prime(FRAC_PI_2).abs() <= 1e-13 * scale.max(1e-300));
        }

        #[test]
        fn secular_is_bounded_by_one(r in 0.01f64..4.0, l in 0.0f64..30.0) {
            prop_assert!(secular_function(l, r).abs() <= 1.0);
        }
    }
}
