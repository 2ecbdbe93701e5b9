//! Signed log-magnitude numbers and cancellation-safe high-precision sums.
//!
//! Quantities such as `mu_n` for large `n` underflow `f64`, so they travel
//! through the crate as [`SignedLog`] values. Alternating series whose terms
//! cancel over many orders of magnitude are accumulated with
//! [`HighPrecisionSum`], backed by `astro-float` big floats.

use std::cmp::Ordering;
use std::fmt;

use astro_float::{BigFloat, Consts, RoundingMode, Sign as BigSign};
use num_bigint::BigUint;

use crate::error::{Error, Result};

pub const RM: RoundingMode = RoundingMode::ToEven;

/// Default mantissa precision for series work.
pub const DEFAULT_BITS: usize = 128;
pub const MIN_BITS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn of(x: f64) -> Self {
        if x.is_sign_negative() {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    /// `(-1)^k`.
    pub fn alternating(k: usize) -> Self {
        if k % 2 == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// A real number stored as sign and natural log of its magnitude.
/// Zero is `ln_abs == -inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub sign: Sign,
    pub ln_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        sign: Sign::Plus,
        ln_abs: f64::NEG_INFINITY,
    };

    pub fn new(sign: Sign, ln_abs: f64) -> Self {
        Self { sign, ln_abs }
    }

    pub fn from_f64(x: f64) -> Self {
        Self {
            sign: Sign::of(x),
            ln_abs: x.abs().ln(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    pub fn is_negative(&self) -> bool {
        self.sign == Sign::Minus && !self.is_zero()
    }

    /// Nearest `f64`; underflows to zero and overflows to infinity.
    pub fn to_f64(&self) -> f64 {
        self.sign.factor() * self.ln_abs.exp()
    }

    pub fn mul(&self, other: &SignedLog) -> SignedLog {
        let sign = if self.sign == other.sign {
            Sign::Plus
        } else {
            Sign::Minus
        };
        SignedLog::new(sign, self.ln_abs + other.ln_abs)
    }

    /// Relative difference `|self - other| / |other|`, computed without
    /// leaving the log domain when both have the same sign.
    pub fn rel_diff(&self, other: &SignedLog) -> f64 {
        if self.is_zero() && other.is_zero() {
            return 0.0;
        }
        if self.sign != other.sign {
            return 1.0 + (self.ln_abs - other.ln_abs).exp();
        }
        (self.ln_abs - other.ln_abs).exp_m1().abs()
    }

    /// Orders by value.
    pub fn total_cmp(&self, other: &SignedLog) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => {
                return if other.sign == Sign::Plus {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
            (false, true) => {
                return if self.sign == Sign::Plus {
                    Ordering::Greater
                } else {
                    Ordering::Less
                }
            }
            _ => {}
        }
        match (self.sign, other.sign) {
            (Sign::Plus, Sign::Minus) => Ordering::Greater,
            (Sign::Minus, Sign::Plus) => Ordering::Less,
            (Sign::Plus, Sign::Plus) => self.ln_abs.total_cmp(&other.ln_abs),
            (Sign::Minus, Sign::Minus) => other.ln_abs.total_cmp(&self.ln_abs),
        }
    }
}

impl fmt::Display for SignedLog {
    /// Scientific notation with 17 significant digits, valid far outside
    /// the `f64` exponent range.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0.0000000000000000e0");
        }
        if !self.ln_abs.is_finite() {
            return write!(f, "{}", self.to_f64());
        }
        let x = self.to_f64();
        if x != 0.0 && x.is_finite() && x.abs() >= f64::MIN_POSITIVE {
            return write!(f, "{x:.16e}");
        }
        let log10 = self.ln_abs / std::f64::consts::LN_10;
        let mut exp = log10.floor();
        let mut mant = 10f64.powf(log10 - exp);
        if mant >= 10.0 {
            mant /= 10.0;
            exp += 1.0;
        }
        let sign = if self.sign == Sign::Minus { "-" } else { "" };
        write!(f, "{sign}{mant:.16}e{}", exp as i64)
    }
}

/// Converts a big float to the nearest `f64` (values outside the `f64`
/// range saturate to zero or infinity).
pub fn big_to_f64(x: &BigFloat) -> f64 {
    let l = big_to_signed_log(x);
    l.to_f64()
}

/// Sign and `ln|x|` of a big float, accurate to about one `f64` ulp.
pub fn big_to_signed_log(x: &BigFloat) -> SignedLog {
    if x.is_zero() {
        return SignedLog::ZERO;
    }
    match x.as_raw_parts() {
        Some((words, _, sign, exp, _)) => {
            let top = *words.last().expect("nonzero mantissa");
            let next = if words.len() > 1 { words[words.len() - 2] } else { 0 };
            // Mantissa in [1/2, 1); keeps ln(m) free of cancellation.
            let m = top as f64 * 2f64.powi(-64) + next as f64 * 2f64.powi(-128);
            let ln_abs = m.ln() + exp as f64 * std::f64::consts::LN_2;
            let sign = if sign == BigSign::Neg {
                Sign::Minus
            } else {
                Sign::Plus
            };
            SignedLog::new(sign, ln_abs)
        }
        None => SignedLog::new(Sign::Plus, f64::NAN),
    }
}

/// Exact conversion of a big integer (rounded once to `bits` if it is wider).
pub fn big_from_biguint(n: &BigUint, bits: usize) -> BigFloat {
    let digits = n.to_u64_digits();
    if digits.is_empty() {
        return BigFloat::from_word(0, bits);
    }
    let e = (64 * digits.len()) as i32;
    let mut x = BigFloat::from_words(&digits, BigSign::Pos, e);
    if x.precision().unwrap_or(0) > bits {
        x.set_precision(bits, RM).expect("precision is valid");
    }
    x
}

/// `sign * exp(ln_abs)` at `bits` precision, treating `ln_abs` as exact.
pub fn big_from_signed_log(v: SignedLog, bits: usize, cc: &mut Consts) -> BigFloat {
    if v.is_zero() {
        return BigFloat::from_word(0, bits);
    }
    let mut x = BigFloat::from_f64(v.ln_abs, bits).exp(bits, RM, cc);
    if v.sign == Sign::Minus {
        x.inv_sign();
    }
    x
}

pub fn new_consts() -> Consts {
    Consts::new().expect("astro-float constant cache")
}

/// Outcome of a compensated high-precision summation.
#[derive(Debug, Clone, PartialEq)]
pub struct SumResult {
    pub value: SignedLog,
    /// Bound on `|computed - exact| / |exact|` from the accumulation alone.
    pub rel_error_bound: f64,
    pub terms: usize,
}

/// Deterministic accumulator for signed terms at a fixed mantissa width.
///
/// Terms are added in push order. Each addition is performed with `bits`
/// plus a guard margin, and a running sum of magnitudes bounds the
/// rounding error of the result.
#[derive(Debug, Clone)]
pub struct HighPrecisionSum {
    bits: usize,
    work_bits: usize,
    acc: BigFloat,
    abs_acc: BigFloat,
    count: usize,
    term_rel_error: f64,
}

impl HighPrecisionSum {
    pub fn new(bits: usize) -> Result<Self> {
        if bits < MIN_BITS {
            return Err(Error::Domain(format!(
                "precision {bits} bits below the {MIN_BITS}-bit minimum"
            )));
        }
        let work_bits = bits + 64;
        Ok(Self {
            bits,
            work_bits,
            acc: BigFloat::from_word(0, work_bits),
            abs_acc: BigFloat::from_word(0, work_bits),
            count: 0,
            term_rel_error: 0.0,
        })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn work_bits(&self) -> usize {
        self.work_bits
    }

    /// Declares the relative error each pushed term already carries (for
    /// terms computed with a few roundings at `bits` precision).
    pub fn with_term_rel_error(mut self, rel: f64) -> Self {
        self.term_rel_error = rel;
        self
    }

    pub fn push(&mut self, term: &BigFloat) {
        self.acc = self.acc.add(term, self.work_bits, RM);
        self.abs_acc = self.abs_acc.add(&term.abs(), self.work_bits, RM);
        self.count += 1;
    }

    pub fn push_signed_log(&mut self, term: SignedLog, cc: &mut Consts) {
        let x = big_from_signed_log(term, self.work_bits, cc);
        self.push(&x);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Current partial sum.
    pub fn partial(&self) -> &BigFloat {
        &self.acc
    }

    /// Magnitude of the absolute error bound relative to the sum of |terms|.
    fn ln_abs_error(&self) -> f64 {
        let abs_sum = big_to_signed_log(&self.abs_acc);
        if abs_sum.is_zero() {
            return f64::NEG_INFINITY;
        }
        let rounding = (self.count.max(1) as f64) * 2f64.powi(-(self.work_bits as i32));
        let per_term = self.term_rel_error.max(2f64.powi(-(self.bits as i32)));
        abs_sum.ln_abs + (rounding + per_term).ln()
    }

    pub fn finish(&self) -> Result<SumResult> {
        let value = big_to_signed_log(&self.acc);
        let ln_err = self.ln_abs_error();
        if value.is_zero() || value.ln_abs <= ln_err {
            return Err(Error::Cancellation {
                bits: self.bits,
                ln_bound: ln_err,
            });
        }
        Ok(SumResult {
            value,
            rel_error_bound: (ln_err - value.ln_abs).exp(),
            terms: self.count,
        })
    }

    /// The accumulated value at full working precision.
    pub fn into_big(self) -> BigFloat {
        self.acc
    }
}

/// Sums `(sign, ln|term|)` pairs in input order at `bits` precision.
pub fn log_sum_signed(terms: &[(Sign, f64)], bits: usize) -> Result<SignedLog> {
    let mut cc = new_consts();
    let mut acc = HighPrecisionSum::new(bits)?;
    for &(sign, ln_abs) in terms {
        acc.push_signed_log(SignedLog::new(sign, ln_abs), &mut cc);
    }
    acc.finish().map(|r| r.value)
}
