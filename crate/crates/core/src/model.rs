//! The model operator `K` on the minimal circle `|ξ| = κ` for a rotationally
//! symmetric profile.
//!
//! `K` is convolution on `(0, 2π)` with
//!
//! ```text
//! k(s, t) = C1/(2π) Σ_m p_m (κ² c)^m Σ_k (a²κ²(c − 1))^k f̃_k / (2^k (k!)²),
//! c = cos(s − t),  C1 = a²κ/(Λ p q),
//! ```
//!
//! so its eigenvalues are the Fourier coefficients `μ_n = ∫ k(0, t) e^{int} dt`
//! with multiplicity 1 for `n = 0` and 2 otherwise. `μ_n` is evaluated two
//! independent ways: the expanded binomial series (exact integer
//! coefficients, big-float accumulation) and a big-float trapezoid rule on
//! the kernel. Both treat the `f64` moments `f̃_k` as exact inputs.

use std::f64::consts::{LN_2, PI};
use std::ops::RangeInclusive;

use astro_float::{BigFloat, Consts};
use num_bigint::BigUint;

use crate::band::{d_functions, EigenfunctionData};
use crate::error::{Error, Result};
use crate::minimum::SpectralMinimum;
use crate::precision::{big_from_biguint, big_to_f64, big_to_signed_log, new_consts, HighPrecisionSum, Sign, SignedLog, DEFAULT_BITS, RM};
use crate::profile::RadialProfile;
use crate::quadrature::{integrate, Interval};

/// Number of cached moments `f̃_0 … f̃_{len-1}`.
pub const FTILDE_LEN: usize = 320;
/// Relative tolerance of the `p`-constant quadratures.
pub const P_REL_TOL: f64 = 1e-11;
const MAX_QUAD_BITS: usize = 16384;

/// `p`-constants at the band minimum together with the profile moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConstants {
    pub p: f64,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    /// `a²κ / (Λ p q)`.
    pub c1: f64,
    pub minimum: SpectralMinimum,
    pub profile: RadialProfile,
    ftilde: Vec<f64>,
}

fn norm_sq<F: Fn(f64) -> f64>(f: F, rel_tol: f64) -> Result<f64> {
    let j = Interval::new(-PI / 2.0, PI / 2.0)?;
    integrate(|t| f(t).powi(2), j, rel_tol)
}

impl ModelConstants {
    /// Constants from the canonical `d1`, `d2` at `(κ, Λ)`.
    pub fn new(profile: &RadialProfile, minimum: &SpectralMinimum) -> Result<Self> {
        let ef = d_functions(minimum.kappa, minimum.lambda_cap)?;
        Self::with_eigenfunction(profile, minimum, &ef, P_REL_TOL)
    }

    /// Constants from an arbitrary multiple of the eigenfunction.
    pub fn with_eigenfunction(
        profile: &RadialProfile,
        minimum: &SpectralMinimum,
        ef: &EigenfunctionData,
        rel_tol: f64,
    ) -> Result<Self> {
        let kappa = minimum.kappa;
        let d1 = norm_sq(|t| ef.d1(t), rel_tol)?;
        let d2 = norm_sq(|t| ef.d2(t), rel_tol)?;
        let p = kappa * kappa * d1 + d2;
        let p0 = 2.0 * norm_sq(|t| ef.d2_prime(t), rel_tol)?;
        let p1 = norm_sq(|t| ef.d1_prime(t) + ef.d2(t), rel_tol)?;
        let p2 = 2.0 * d1;
        let a = profile.a();
        let c1 = a * a * kappa / (minimum.lambda_cap * p * minimum.q);
        let ftilde = (0..FTILDE_LEN)
            .map(|k| profile.moment_ftilde(k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            p,
            p0,
            p1,
            p2,
            c1,
            minimum: *minimum,
            profile: profile.clone(),
            ftilde,
        })
    }

    /// The same constants with `p2` replaced.
    pub fn with_p2(&self, p2: f64) -> Self {
        Self { p2, ..self.clone() }
    }

    pub fn kappa(&self) -> f64 {
        self.minimum.kappa
    }

    pub fn a_kappa(&self) -> f64 {
        self.profile.a() * self.minimum.kappa
    }

    pub fn p_m(&self) -> [f64; 3] {
        [self.p0, self.p1, self.p2]
    }

    /// `f̃_k` from the cache.
    pub fn ftilde(&self, k: usize) -> Result<f64> {
        self.ftilde.get(k).copied().ok_or(Error::Truncation {
            required: k + 1,
            limit: self.ftilde.len(),
        })
    }

    /// `f_t` for even integer `t = 2k + 4`.
    pub fn f_even(&self, t: usize) -> Result<f64> {
        if t < 4 || t % 2 != 0 {
            return Err(Error::Domain(format!("f_t cached only for even t >= 4, got {t}")));
        }
        self.ftilde((t - 4) / 2)
    }
}

pub fn model_constants(profile: &RadialProfile, minimum: &SpectralMinimum) -> Result<ModelConstants> {
    ModelConstants::new(profile, minimum)
}

// ln((aκ)^{2N} / (N!)²), bounding |x^N f̃_N / (N!)²| for |x| <= (aκ)² and f̃ <= 1.
fn ln_majorant(a_kappa: f64, big_n: usize) -> f64 {
    let lf: f64 = (1..=big_n).map(|i| (i as f64).ln()).sum();
    2.0 * big_n as f64 * a_kappa.ln() - 2.0 * lf
}

/// Smallest `K` for which the kernel series at `(s, t)` has tail below
/// `1e-16` of its partial sum.
pub fn kernel_truncation(consts: &ModelConstants, s: f64, t: f64) -> Result<usize> {
    let x = 0.5 * consts.a_kappa().powi(2) * ((s - t).cos() - 1.0).abs();
    let mut partial = 0.0;
    let mut term = 1.0;
    for k in 0..consts.ftilde.len() - 1 {
        partial += term * consts.ftilde[k];
        // Next term magnitude and a geometric tail factor (f̃ is decreasing).
        let next = term * x / ((k + 1) as f64).powi(2);
        let rho = x / ((k + 2) as f64).powi(2);
        if rho < 1.0 && next * consts.ftilde[k + 1] / (1.0 - rho) < 1e-16 * partial.abs() {
            return Ok(k);
        }
        term = next;
    }
    Err(Error::Truncation {
        required: consts.ftilde.len(),
        limit: consts.ftilde.len(),
    })
}

/// `k(s, t)` summed through `k = truncation_k`; errors when that truncation
/// leaves a tail above `1e-16` of the sum.
pub fn kernel(consts: &ModelConstants, s: f64, t: f64, truncation_k: usize) -> Result<f64> {
    let required = kernel_truncation(consts, s, t)?;
    if truncation_k < required {
        return Err(Error::Truncation {
            required,
            limit: truncation_k,
        });
    }
    let c = (s - t).cos();
    let kappa = consts.kappa();
    let x = 0.5 * consts.a_kappa().powi(2) * (c - 1.0);
    let mut series = 0.0;
    let mut term = 1.0;
    for k in 0..=truncation_k {
        series += term * consts.ftilde(k)?;
        term *= x / ((k + 1) as f64).powi(2);
    }
    let kc = kappa * kappa * c;
    let poly = consts.p0 + consts.p1 * kc + consts.p2 * kc * kc;
    Ok(consts.c1 / (2.0 * PI) * poly * series)
}

/// Exact integer numerator `L` of an inner binomial sum, with the sum equal
/// to `L / 2^shift`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicSum {
    pub numerator: BigUint,
    pub shift: u32,
}

fn binom(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `Σ_{l=l0}^{l1} 2^{−n−2l} C(top, 2l+n−m) C(2l+n, l)` exactly.
fn dyadic_l_sum(top: usize, n: usize, m: usize, l0: i64, l1: i64) -> DyadicSum {
    let mut numerator = BigUint::from(0u32);
    if l1 < l0 {
        return DyadicSum { numerator, shift: 0 };
    }
    for l in l0..=l1 {
        let l = l as usize;
        let lower = 2 * l + n - m;
        numerator += (binom(top, lower) * binom(2 * l + n, l)) << (2 * (l1 as usize - l));
    }
    DyadicSum {
        numerator,
        shift: (n + 2 * l1 as usize) as u32,
    }
}

/// Inner sum of the re-indexed series at `(k, n, m)`, `n >= m`.
pub fn inner_l_sum(k: usize, n: usize, m: usize) -> Result<DyadicSum> {
    if n < m {
        return Err(Error::Domain(format!("re-indexed inner sum needs n >= m, got n={n}, m={m}")));
    }
    Ok(dyadic_l_sum(k + n - m, n, m, 0, (k / 2) as i64))
}

fn pow2(e: i64, p: usize) -> BigFloat {
    let mut x = BigFloat::from_word(1, p);
    x.set_exponent((1 + e) as i32);
    x
}

fn bf(x: f64, p: usize) -> BigFloat {
    BigFloat::from_f64(x, p)
}

/// Which algebraic form of the series to sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesRoute {
    /// Outer index `k` of the Taylor series of the Bessel factor.
    Direct,
    /// Outer index shifted by `n − m`; requires `n >= 2`.
    Reindexed,
}

/// A series evaluation of `μ_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMu {
    pub n: usize,
    pub value: SignedLog,
    pub rel_error_bound: f64,
    /// Number of outer terms per `m`.
    pub truncation_k: usize,
    pub bits: usize,
}

struct TermSpec {
    sign: Sign,
    // Index N of f̃_N and of (aκ)^{2N} / (2^N (N!)²).
    big_n: usize,
    l_sum: DyadicSum,
}

fn term_spec(route: SeriesRoute, n: usize, m: usize, k: usize) -> Option<TermSpec> {
    match route {
        SeriesRoute::Reindexed => Some(TermSpec {
            sign: Sign::alternating(k),
            big_n: n + k - m,
            l_sum: dyadic_l_sum(k + n - m, n, m, 0, (k / 2) as i64),
        }),
        SeriesRoute::Direct => {
            let k0 = n.saturating_sub(m);
            let kk = k0 + k;
            let diff = m as i64 - n as i64;
            let l0 = (diff + 1).div_euclid(2).max(0);
            let l1 = (kk as i64 - n as i64 + m as i64).div_euclid(2);
            if l1 < l0 {
                return None;
            }
            Some(TermSpec {
                sign: Sign::alternating(kk + n + m),
                big_n: kk,
                l_sum: dyadic_l_sum(kk, n, m, l0, l1),
            })
        }
    }
}

fn series_sum(consts: &ModelConstants, n: usize, route: SeriesRoute, kmax: usize, bits: usize) -> Result<(HighPrecisionSum, usize)> {
    let wp = bits + 64;
    let mut acc = HighPrecisionSum::new(bits)?.with_term_rel_error(64.0 * 2f64.powi(-(wp as i32)));
    let ak = bf(consts.a_kappa(), wp);
    let ak2 = ak.mul(&ak, wp, RM);
    let kappa2 = bf(consts.kappa() * consts.kappa(), wp);
    let mut max_n = 0;
    for (m, pm) in consts.p_m().into_iter().enumerate() {
        let weight = bf(pm, wp).mul(&kappa2.powi(m, wp, RM), wp, RM);
        for k in 0..kmax {
            let Some(spec) = term_spec(route, n, m, k) else { continue };
            if spec.l_sum.numerator == BigUint::from(0u32) {
                continue;
            }
            max_n = max_n.max(spec.big_n);
            let ft = bf(consts.ftilde(spec.big_n)?, wp);
            let fact: BigUint = (1..=spec.big_n).map(BigUint::from).product();
            let fact_sq = big_from_biguint(&(&fact * &fact), wp);
            let mut term = weight.mul(&ak2.powi(spec.big_n, wp, RM), wp, RM);
            term = term.mul(&ft, wp, RM);
            term = term.mul(&big_from_biguint(&spec.l_sum.numerator, wp), wp, RM);
            term = term.div(&fact_sq, wp, RM);
            term = term.mul(&pow2(-(spec.big_n as i64) - spec.l_sum.shift as i64, wp), wp, RM);
            if spec.sign == Sign::Minus {
                term.inv_sign();
            }
            acc.push(&term);
        }
    }
    Ok((acc, max_n))
}

// ln of a bound on all omitted terms with outer index >= kmax.
fn ln_tail(consts: &ModelConstants, n: usize, route: SeriesRoute, kmax: usize) -> f64 {
    let ak = consts.a_kappa();
    let mut total = f64::NEG_INFINITY;
    for (m, pm) in consts.p_m().into_iter().enumerate() {
        let first = match route {
            SeriesRoute::Reindexed => n + kmax - m,
            SeriesRoute::Direct => n.saturating_sub(m) + kmax,
        };
        let rho = (ak / (first + 1) as f64).powi(2);
        let ln_ft = consts.ftilde(first).unwrap_or(1.0).ln();
        let ln_term = pm.ln() + 2.0 * m as f64 * consts.kappa().ln() + ln_majorant(ak, first) + ln_ft
            - (1.0 - rho.min(0.5)).ln();
        total = log_add(total, ln_term);
    }
    total
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `μ_n` from the expanded series along `route`, truncated where the
/// rigorous term majorant falls below `2^{−(bits−8)}` of the sum.
pub fn mu_series_route(consts: &ModelConstants, n: usize, route: SeriesRoute, bits: usize) -> Result<SeriesMu> {
    if route == SeriesRoute::Reindexed && n < 2 {
        return Err(Error::Domain("the re-indexed series needs n >= 2".into()));
    }
    let limit = consts.ftilde.len();
    let mut kmax = 16;
    loop {
        let (acc, _) = series_sum(consts, n, route, kmax, bits)?;
        let sum = acc.finish()?;
        let ln_target = sum.value.ln_abs - (bits as f64 - 8.0) * LN_2;
        if ln_tail(consts, n, route, kmax) <= ln_target {
            let c1 = SignedLog::from_f64(consts.c1);
            return Ok(SeriesMu {
                n,
                value: sum.value.mul(&c1),
                rel_error_bound: sum.rel_error_bound + (bits as f64 - 8.0).exp2().recip(),
                truncation_k: kmax,
                bits,
            });
        }
        kmax *= 2;
        if n + kmax >= limit {
            return Err(Error::Truncation { required: n + kmax, limit });
        }
    }
}

/// `μ_n` by the series: the direct index set for `n < 2`, the re-indexed
/// form otherwise.
pub fn mu_series(consts: &ModelConstants, n: usize, bits: usize) -> Result<SeriesMu> {
    let route = if n < 2 { SeriesRoute::Direct } else { SeriesRoute::Reindexed };
    mu_series_route(consts, n, route, bits)
}

/// A trapezoid-rule evaluation of `μ_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureMu {
    pub n: usize,
    pub value: SignedLog,
    /// `|Im ∫ k(0,t) e^{int} dt|`.
    pub imag_abs: f64,
    /// Absolute error bound of the real part.
    pub error_bound: f64,
    pub nodes: usize,
    pub bits: usize,
}

// Nodes, twiddles and kernel values of one trapezoid rule at one precision.
struct Table {
    nodes: usize,
    wp: usize,
    /// `cos(t_j)` for `j = 0 … N/4`; the rest follows by quarter-wave symmetry.
    cos_quarter: Vec<BigFloat>,
    kernel: Vec<BigFloat>,
    ln_bound_rounding: f64,
}

impl Table {
    fn cos_at(&self, j: usize) -> BigFloat {
        let q = self.nodes / 4;
        let j = j % self.nodes;
        match j / q {
            0 => self.cos_quarter[j].clone(),
            1 => self.cos_quarter[2 * q - j].neg(),
            2 => self.cos_quarter[j - 2 * q].neg(),
            _ => self.cos_quarter[4 * q - j].clone(),
        }
    }

    // sin(t_j) = cos(t_{j − N/4}).
    fn sin_at(&self, j: usize) -> BigFloat {
        self.cos_at(j % self.nodes + 3 * self.nodes / 4)
    }
}

fn build_table(consts: &ModelConstants, nodes: usize, bits: usize, cc: &mut Consts) -> Result<Table> {
    let wp = bits + 64;
    let ak = consts.a_kappa();
    // Kernel series length: (aκ)^{2K}/(K!)² below 2^{−wp−16}.
    let mut kk = 1;
    while ln_majorant(ak, kk) > -((wp + 16) as f64) * LN_2 {
        kk += 1;
    }
    let ft = (0..=kk).map(|k| consts.ftilde(k).map(|v| bf(v, wp))).collect::<Result<Vec<_>>>()?;
    let mut inv_fact_sq = Vec::with_capacity(kk + 1);
    let mut f = BigUint::from(1u32);
    for k in 0..=kk {
        if k > 0 {
            f *= k;
        }
        inv_fact_sq.push(big_from_biguint(&(&f * &f), wp).reciprocal(wp, RM));
    }
    let two_pi = cc.pi(wp, RM).mul(&BigFloat::from_word(2, wp), wp, RM);
    let step = two_pi.div(&BigFloat::from_u64(nodes as u64, wp), wp, RM);
    let cos_quarter: Vec<BigFloat> = (0..=nodes / 4)
        .map(|j| step.mul(&BigFloat::from_u64(j as u64, wp), wp, RM).cos(wp, RM, cc))
        .collect();
    let mut table = Table {
        nodes,
        wp,
        cos_quarter,
        kernel: Vec::with_capacity(nodes),
        ln_bound_rounding: 0.0,
    };
    let half_ak2 = bf(0.5 * ak * ak, wp);
    let kappa2 = bf(consts.kappa().powi(2), wp);
    let pm: Vec<BigFloat> = consts.p_m().iter().map(|&v| bf(v, wp)).collect();
    let one = BigFloat::from_word(1, wp);
    let mut kmax_abs = 0.0f64;
    for j in 0..nodes {
        let c = table.cos_at(j);
        let x = half_ak2.mul(&c.sub(&one, wp, RM), wp, RM);
        let mut series = BigFloat::from_word(0, wp);
        let mut xp = one.clone();
        for k in 0..=kk {
            series = series.add(&xp.mul(&ft[k], wp, RM).mul(&inv_fact_sq[k], wp, RM), wp, RM);
            xp = xp.mul(&x, wp, RM);
        }
        let kc = kappa2.mul(&c, wp, RM);
        let poly = pm[0]
            .add(&pm[1].mul(&kc, wp, RM), wp, RM)
            .add(&pm[2].mul(&kc.mul(&kc, wp, RM), wp, RM), wp, RM);
        let kval = poly.mul(&series, wp, RM);
        kmax_abs = kmax_abs.max(big_to_f64(&kval).abs());
        table.kernel.push(kval);
    }
    // Each kernel value and twiddle carries O(K + 8) roundings at wp bits;
    // the Fourier sum adds N more.
    table.ln_bound_rounding = (consts.c1 * kmax_abs * 16.0 * (kk + nodes + 16) as f64).ln() - wp as f64 * LN_2;
    Ok(table)
}

struct TrapezoidOut {
    re: BigFloat,
    im: BigFloat,
    ln_bound: f64,
}

fn trapezoid(consts: &ModelConstants, table: &Table, n: usize) -> TrapezoidOut {
    let wp = table.wp;
    let nodes = table.nodes;
    let mut re = BigFloat::from_word(0, wp);
    let mut im = BigFloat::from_word(0, wp);
    for (j, kval) in table.kernel.iter().enumerate() {
        let idx = (n * j) % nodes;
        re = re.add(&kval.mul(&table.cos_at(idx), wp, RM), wp, RM);
        im = im.add(&kval.mul(&table.sin_at(idx), wp, RM), wp, RM);
    }
    // μ = C1/(2π) · (2π/N) Σ = C1/N · Σ.
    let scale = bf(consts.c1, wp).div(&BigFloat::from_u64(nodes as u64, wp), wp, RM);
    // Aliasing adds μ_{N−n} + μ_{N+n}, bounded through the term majorant.
    let ln_alias = {
        let big = (nodes - n).saturating_sub(2);
        let pm_sum: f64 = consts.p_m().iter().enumerate().map(|(m, p)| p * consts.kappa().powi(2 * m as i32)).sum();
        (consts.c1 * pm_sum * 4.0).ln() + ln_majorant(consts.a_kappa(), big) + 2.0 * big as f64 * LN_2
    };
    TrapezoidOut {
        re: re.mul(&scale, wp, RM),
        im: im.mul(&scale, wp, RM),
        ln_bound: log_add(table.ln_bound_rounding, ln_alias),
    }
}

const QUAD_MARGIN_BITS: f64 = 40.0;

// Starting precision: enough for the envelope e_n plus headroom, so one
// table usually serves the whole batch.
fn initial_bits(consts: &ModelConstants, n: usize, min_bits: usize) -> usize {
    let guess = if n >= 2 { log_envelope(consts, n).unwrap_or(0.0).min(0.0) } else { 0.0 };
    let bits = (-guess / LN_2).ceil() as usize + 128;
    bits.max(min_bits).div_ceil(64) * 64
}

/// `μ_n` for every `n` in `ns` by one `N`-point trapezoid rule,
/// `N = max(256, 8 max(ns))`, in big-float arithmetic. Precision starts at
/// an envelope-based guess (at least `min_bits`) and grows until every
/// result exceeds its error bound by a factor `2^40`.
pub fn mu_quadrature_batch(consts: &ModelConstants, ns: &[usize], min_bits: usize) -> Result<Vec<QuadratureMu>> {
    let n_top = ns.iter().copied().max().unwrap_or(0);
    let nodes = (8 * n_top).max(256);
    let min_bits = min_bits.max(DEFAULT_BITS);
    let mut bits = ns.iter().map(|&n| initial_bits(consts, n, min_bits)).max().unwrap_or(min_bits);
    let mut cc = new_consts();
    let mut out: Vec<Option<QuadratureMu>> = vec![None; ns.len()];
    loop {
        let table = build_table(consts, nodes, bits, &mut cc)?;
        let mut deficit = 0usize;
        let mut last_bound = f64::NEG_INFINITY;
        for (slot, &n) in out.iter_mut().zip(ns) {
            if slot.is_some() {
                continue;
            }
            let t = trapezoid(consts, &table, n);
            let value = big_to_signed_log(&t.re);
            let headroom = (value.ln_abs - t.ln_bound) / LN_2;
            if !value.is_zero() && headroom >= QUAD_MARGIN_BITS {
                *slot = Some(QuadratureMu {
                    n,
                    value,
                    imag_abs: big_to_f64(&t.im).abs(),
                    error_bound: t.ln_bound.exp(),
                    nodes,
                    bits,
                });
            } else {
                let need = if value.is_zero() { bits } else { (QUAD_MARGIN_BITS - headroom).ceil() as usize + 32 };
                deficit = deficit.max(need.max(64));
                last_bound = t.ln_bound;
            }
        }
        if deficit == 0 {
            return Ok(out.into_iter().map(|q| q.expect("all slots filled")).collect());
        }
        bits = (bits + deficit).div_ceil(64) * 64;
        if bits > MAX_QUAD_BITS {
            return Err(Error::Cancellation {
                bits,
                ln_bound: last_bound,
            });
        }
    }
}

/// Single-`n` form of [`mu_quadrature_batch`].
pub fn mu_quadrature_at(consts: &ModelConstants, n: usize, min_bits: usize) -> Result<QuadratureMu> {
    Ok(mu_quadrature_batch(consts, &[n], min_bits)?.remove(0))
}

pub fn mu_quadrature(consts: &ModelConstants, n: usize) -> Result<QuadratureMu> {
    mu_quadrature_at(consts, n, DEFAULT_BITS)
}

/// Eigenvalues of `K`: `μ_n` and the non-increasing relabeling `λ_l(K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    pub mu: Vec<SignedLog>,
    /// `λ_1(K) >= λ_2(K) >= …` with multiplicities.
    pub ordered: Vec<SignedLog>,
    /// The `n` of `μ_n` behind each ordered entry.
    pub ordered_n: Vec<usize>,
}

impl ModeSpectrum {
    /// `λ_l(K)`, one-based.
    pub fn lambda(&self, l: usize) -> Result<SignedLog> {
        if l == 0 || l > self.ordered.len() {
            return Err(Error::OutOfSpectrum {
                index: l,
                len: self.ordered.len(),
            });
        }
        Ok(self.ordered[l - 1])
    }

    pub fn len(&self) -> usize {
        self.ordered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered.is_empty()
    }
}

/// Tolerance below zero accepted (and clipped) as rounding.
pub const PSD_TOL: f64 = 1e-13;

/// Builds the ordered multiset `{μ_0} ∪ {μ_n, μ_n : n >= 1}`; ties go to the
/// lower `n` first.
pub fn ordered_spectrum(mu: &[SignedLog]) -> Result<ModeSpectrum> {
    let mut clipped = Vec::with_capacity(mu.len());
    for (n, &v) in mu.iter().enumerate() {
        if v.ln_abs.is_nan() {
            return Err(Error::Domain(format!("mu[{n}] is NaN")));
        }
        if v.is_negative() {
            if v.to_f64() < -PSD_TOL {
                return Err(Error::PsdViolation { n, value: v.to_f64() });
            }
            clipped.push(SignedLog::ZERO);
        } else {
            clipped.push(v);
        }
    }
    let mut entries: Vec<(SignedLog, usize)> = Vec::new();
    for (n, &v) in clipped.iter().enumerate() {
        entries.push((v, n));
        if n > 0 {
            entries.push((v, n));
        }
    }
    entries.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(ModeSpectrum {
        mu: clipped,
        ordered: entries.iter().map(|e| e.0).collect(),
        ordered_n: entries.iter().map(|e| e.1).collect(),
    })
}

/// Convenience wrapper for plain `f64` eigenvalues.
pub fn ordered_spectrum_f64(mu: &[f64]) -> Result<ModeSpectrum> {
    let logs: Vec<SignedLog> = mu.iter().map(|&x| SignedLog::from_f64(x)).collect();
    ordered_spectrum(&logs)
}

/// One row of the envelope comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub n: usize,
    /// `ln e_n` with `e_n = (2n)³ f_{2n} (aκe/2n)^{2n}`.
    pub log_envelope: f64,
    /// `ln(μ_n / e_n)`.
    pub log_ratio: f64,
    pub lower: f64,
    pub upper: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub c2: f64,
    pub c3: f64,
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn all_within(&self) -> bool {
        self.rows.iter().all(|r| r.within)
    }
}

/// `ln e_n`; needs `n >= 2`.
pub fn log_envelope(consts: &ModelConstants, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("envelope needs n >= 2, got {n}")));
    }
    let two_n = 2.0 * n as f64;
    Ok(3.0 * two_n.ln() + consts.f_even(2 * n)?.ln() + two_n * (consts.a_kappa().ln() + 1.0 - two_n.ln()))
}

/// `C2 = Σ_m p_m 2^m a^{−2m}` and `C3 = p2 κ⁴ (aκ)^{−4}`.
pub fn bracket_constants(consts: &ModelConstants) -> (f64, f64) {
    let a = consts.profile.a();
    let c2 = consts.p0 + consts.p1 * 2.0 / (a * a) + consts.p2 * 4.0 / a.powi(4);
    let c3 = consts.p2 * consts.kappa().powi(4) / consts.a_kappa().powi(4);
    (c2, c3)
}

/// Upper and lower constants bracketing `μ_n / e_n`.
pub fn bracket(consts: &ModelConstants, n: usize) -> (f64, f64) {
    let (c2, c3) = bracket_constants(consts);
    let c1 = consts.c1;
    let ak2 = consts.a_kappa().powi(2);
    let growth = (0.25 + ak2).exp();
    let upper = c1 * c2 * growth / (4.0 * PI);
    let nf = n as f64;
    let lower = (c1 * c3 - 4.0 * c1 * c2 * ak2 * growth / nf) / (16.0 * PI * (1.0 / (6.0 * nf)).exp());
    (lower, upper)
}

/// Compares `μ_n / e_n` with the explicit bracket for each `n` in `range`.
pub fn bound_check(consts: &ModelConstants, mu: &[SignedLog], range: RangeInclusive<usize>) -> Result<BoundReport> {
    let (c2, c3) = bracket_constants(consts);
    let mut rows = Vec::new();
    for n in range {
        let v = mu.get(n).ok_or(Error::OutOfSpectrum { index: n, len: mu.len() })?;
        let log_envelope = log_envelope(consts, n)?;
        let (lower, upper) = bracket(consts, n);
        let (log_ratio, within) = if v.is_negative() || v.is_zero() {
            (f64::NEG_INFINITY, lower <= 0.0 && v.is_zero())
        } else {
            let lr = v.ln_abs - log_envelope;
            (lr, lr <= upper.ln() && (lower <= 0.0 || lr >= lower.ln()))
        };
        rows.push(BoundRow {
            n,
            log_envelope,
            log_ratio,
            lower,
            upper,
            within,
        });
    }
    Ok(BoundReport { c2, c3, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minimum::find_minimum;
    use std::sync::OnceLock;

    fn minimum() -> &'static SpectralMinimum {
        static M: OnceLock<SpectralMinimum> = OnceLock::new();
        M.get_or_init(|| find_minimum().unwrap())
    }

    fn disk() -> &'static ModelConstants {
        static C: OnceLock<ModelConstants> = OnceLock::new();
        C.get_or_init(|| ModelConstants::new(&RadialProfile::disk(1.0).unwrap(), minimum()).unwrap())
    }

    #[test]
    fn constants_are_positive() {
        let c = disk();
        assert!(c.p > 0.0 && c.p0 > 0.0 && c.p1 >= 0.0 && c.p2 > 0.0 && c.c1 > 0.0);
    }

    #[test]
    fn constants_converge_under_tighter_quadrature() {
        let ef = d_functions(minimum().kappa, minimum().lambda_cap).unwrap();
        let prof = RadialProfile::disk(1.0).unwrap();
        let a = ModelConstants::with_eigenfunction(&prof, minimum(), &ef, 1e-11).unwrap();
        let b = ModelConstants::with_eigenfunction(&prof, minimum(), &ef, 1e-13).unwrap();
        for (x, y) in a.p_m().iter().zip(b.p_m().iter()).chain([(&a.p, &b.p)]) {
            assert!((x / y - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn scaled_eigenfunction_leaves_mu_unchanged() {
        let ef = d_functions(minimum().kappa, minimum().lambda_cap).unwrap();
        let prof = RadialProfile::disk(1.0).unwrap();
        let a = ModelConstants::with_eigenfunction(&prof, minimum(), &ef, P_REL_TOL).unwrap();
        let b = ModelConstants::with_eigenfunction(&prof, minimum(), &ef.scaled(10.0), P_REL_TOL).unwrap();
        for n in [0, 1, 3, 12] {
            let x = mu_series(&a, n, 128).unwrap().value;
            let y = mu_series(&b, n, 128).unwrap().value;
            assert!(x.rel_diff(&y) < 1e-10, "n={n}");
        }
    }

    #[test]
    fn kernel_is_translation_invariant() {
        let c = disk();
        let k1 = kernel(c, 0.3, 0.1, 40).unwrap();
        let k2 = kernel(c, 0.9, 0.7, 40).unwrap();
        assert!((k1 - k2).abs() < 1e-14 * k1.abs());
    }

    #[test]
    fn kernel_diagonal_value() {
        let c = disk();
        let k = c.kappa();
        let expected = c.c1 / (2.0 * PI) * (c.p0 + c.p1 * k * k + c.p2 * k.powi(4)) * c.ftilde(0).unwrap();
        assert!((kernel(c, 0.4, 0.4, 0).unwrap() - expected).abs() < 1e-15 * expected);
    }

    #[test]
    fn kernel_rejects_short_truncation() {
        let c = disk();
        match kernel(c, 0.0, 2.0, 1) {
            Err(Error::Truncation { required, limit }) => assert!(required > 1 && limit == 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn kernel_integral_gives_mu0() {
        let c = disk();
        let n = 512;
        let kt = kernel_truncation(c, 0.0, PI).unwrap();
        let sum: f64 = (0..n).map(|j| kernel(c, 0.0, 2.0 * PI * j as f64 / n as f64, kt).unwrap()).sum();
        let integral = 2.0 * PI / n as f64 * sum;
        let mu0 = mu_series(c, 0, 128).unwrap().value.to_f64();
        assert!((integral - mu0).abs() < 1e-10 * mu0);
    }

    #[test]
    fn fourier_coefficients_independent_of_base_point() {
        let c = disk();
        let kt = kernel_truncation(c, 0.0, PI).unwrap() + 2;
        let n = 256;
        for mode in [0usize, 1, 3] {
            let coef = |s0: f64| -> f64 {
                (0..n)
                    .map(|j| {
                        let t = 2.0 * PI * j as f64 / n as f64;
                        kernel(c, s0, t, kt).unwrap() * (mode as f64 * (t - s0)).cos()
                    })
                    .sum::<f64>()
                    * 2.0
                    * PI
                    / n as f64
            };
            let (a, b) = (coef(0.0), coef(1.7));
            assert!((a - b).abs() < 1e-12 * a.abs().max(1e-3), "mode {mode}: {a} {b}");
        }
    }

    #[test]
    fn inner_sum_single_term() {
        let s = inner_l_sum(0, 2, 0).unwrap();
        assert_eq!(s.numerator, BigUint::from(1u32));
        assert_eq!(s.shift, 2);
    }

    #[test]
    fn routes_agree_for_n_at_least_two() {
        let c = disk();
        for n in [2, 3, 7, 20] {
            let a = mu_series_route(c, n, SeriesRoute::Direct, 160).unwrap().value;
            let b = mu_series_route(c, n, SeriesRoute::Reindexed, 160).unwrap().value;
            assert!(a.rel_diff(&b) < 1e-30, "n={n}");
        }
    }

    #[test]
    fn series_matches_quadrature() {
        let c = disk();
        for n in [0, 1, 5, 20] {
            let s = mu_series(c, n, 128).unwrap().value;
            let q = mu_quadrature(c, n).unwrap();
            assert!(s.rel_diff(&q.value) < 1e-8, "n={n}: {s} vs {}", q.value);
            assert!(q.imag_abs < 1e-13);
        }
    }

    #[test]
    fn quadrature_precision_grows_with_n() {
        let c = disk();
        let q20 = mu_quadrature(c, 20).unwrap();
        assert!(q20.bits > 128);
        assert!(q20.nodes == 256);
        assert_eq!(mu_quadrature(c, 40).unwrap().nodes, 320);
    }

    #[test]
    fn mu_is_nonnegative_and_decays() {
        let c = disk();
        let mu: Vec<SignedLog> = (0..=40).map(|n| mu_series(c, n, 128).unwrap().value).collect();
        for (n, v) in mu.iter().enumerate() {
            assert!(!v.is_negative(), "mu[{n}] = {v}");
        }
        for w in mu.windows(2).skip(1) {
            assert!(w[1].ln_abs < w[0].ln_abs);
        }
        for n in 20..=40 {
            let ratio = mu[n].ln_abs / (-2.0 * n as f64 * (2.0 * n as f64).ln());
            assert!((0.5..=1.05).contains(&ratio), "n={n}: {ratio}");
        }
    }

    #[test]
    fn ordering_examples() {
        let s = ordered_spectrum_f64(&[3.0, 5.0, 1.0]).unwrap();
        let want = [5.0, 5.0, 3.0, 1.0, 1.0];
        for (v, w) in s.ordered.iter().zip(want) {
            assert!((v.to_f64() - w).abs() < 1e-14 * w);
        }
        assert_eq!(s.ordered_n, vec![1, 1, 0, 2, 2]);
        let z = ordered_spectrum_f64(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(z.len(), 5);
        assert!(z.ordered.iter().all(|v| v.to_f64() == 0.0));
        assert_eq!(z.ordered_n, vec![0, 1, 1, 2, 2]);
    }

    #[test]
    fn ordering_clips_and_rejects() {
        let s = ordered_spectrum_f64(&[1.0, -1e-14]).unwrap();
        assert_eq!(s.mu[1].to_f64(), 0.0);
        assert!(matches!(ordered_spectrum_f64(&[1.0, -1e-10]), Err(Error::PsdViolation { n: 1, .. })));
    }

    #[test]
    fn lambda_indexing() {
        let s = ordered_spectrum_f64(&[3.0, 5.0]).unwrap();
        assert!((s.lambda(1).unwrap().to_f64() - 5.0).abs() < 1e-14);
        assert!(matches!(s.lambda(4), Err(Error::OutOfSpectrum { .. })));
        assert!(s.lambda(0).is_err());
    }
}
