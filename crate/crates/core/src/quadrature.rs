//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.
//!
//! Bisects the subinterval with the largest error estimate until the summed
//! estimate drops below `rel_tol * |I|`. Subintervals are refined in a fixed
//! order, so results are bit-reproducible.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_SUBINTERVALS: usize = 4000;

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::Domain(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Value and error estimate of a converged integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub subintervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut fv = [(0.0, 0.0); 7];
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut resabs = fc.abs() * WGK[7];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv[j] = (f1, f2);
        kronrod += w * (f1 + f2);
        resabs += w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for (j, &(f1, f2)) in fv.iter().enumerate() {
        resasc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let habs = half.abs();
    resabs *= habs;
    resasc *= habs;

    let mut error = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Segment {
        lo,
        hi,
        value: kronrod * half,
        error,
    }
}

fn check_tol(rel_tol: f64) -> Result<()> {
    if !(rel_tol > 1e-15 && rel_tol < 1e-3) {
        return Err(Error::Domain(format!(
            "rel_tol {rel_tol:e} outside (1e-15, 1e-3)"
        )));
    }
    Ok(())
}

/// Integrates `f` over `iv` to relative tolerance `rel_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, iv: Interval, rel_tol: f64) -> Result<f64> {
    integrate_with_breaks(f, iv, &[], rel_tol).map(|r| r.value)
}

/// Like [`integrate`], but starts from the subdivision given by `breaks`
/// (points strictly inside `iv`; others are ignored) and reports the error
/// estimate.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    iv: Interval,
    breaks: &[f64],
    rel_tol: f64,
) -> Result<QuadResult> {
    check_tol(rel_tol)?;
    let mut points = vec![iv.lo];
    let mut inner: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&b| b > iv.lo && b < iv.hi)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    points.extend(inner);
    points.push(iv.hi);

    let mut segments: Vec<Segment> = points.windows(2).map(|w| gk15(&f, w[0], w[1])).collect();

    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let err: f64 = segments.iter().map(|s| s.error).sum();
        let abs_floor = 1e3 * f64::MIN_POSITIVE;
        if !(total.is_finite() && err.is_finite()) {
            return Err(Error::Quadrature {
                estimate: total,
                error_bound: err,
            });
        }
        if err <= rel_tol * total.abs() || err <= abs_floor {
            return Ok(QuadResult {
                value: total,
                error: err,
                subintervals: segments.len(),
            });
        }
        if segments.len() >= MAX_SUBINTERVALS {
            return Err(Error::Quadrature {
                estimate: total,
                error_bound: err,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .expect("at least one segment");
        let s = segments[worst];
        let mid = 0.5 * (s.lo + s.hi);
        if !(mid > s.lo && mid < s.hi) {
            // Interval exhausted at double resolution; nothing left to refine.
            return Err(Error::Quadrature {
                estimate: total,
                error_bound: err,
            });
        }
        segments[worst] = gk15(&f, s.lo, mid);
        segments.insert(worst + 1, gk15(&f, mid, s.hi));
    }
}
