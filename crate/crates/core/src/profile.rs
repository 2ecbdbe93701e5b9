//! Rotationally symmetric perturbation profiles and their radial moments.
//!
//! A profile is a map `rho -> f(rho)` with values in `[0, 1]` that vanishes
//! outside `[0, a]`, where `a` is the essential support radius. The moments
//!
//! ```text
//! f_t      = ∫_0^1 f(a r) r^(t-3) dr,   t >= 3
//! ftilde_k = ∫_0^1 f(a r) r^(2k+1) dr = f_(2k+4)
//! ```
//!
//! drive the model operator and the accumulation envelopes.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, Interval};

const MOMENT_REL_TOL: f64 = 1e-12;
/// Above this exponent the integrand is a boundary layer at r = 1 and the
/// quadrature runs in the variable s = -(t-2) ln r instead.
const LARGE_T: f64 = 200.0;

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    /// `f = 1` on `[0, a]`.
    Disk,
    /// `f = 1` on `[a t1, a]`.
    Annulus { t1: f64 },
    /// `f(rho) = exp(1 - 1/(1 - (rho/a)^2))` on `[0, a)`.
    Bump,
    /// Piecewise-linear interpolation of samples.
    Table(Tabulated),
}

/// Samples `(rho_i, f_i)` with strictly increasing `rho`, starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    rho: Vec<f64>,
    f: Vec<f64>,
    source: Option<PathBuf>,
}

impl Tabulated {
    pub fn new(rho: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if rho.len() != f.len() || rho.len() < 2 {
            return Err(Error::InvalidProfile(
                "table needs at least two (rho, f) rows".into(),
            ));
        }
        if rho[0] != 0.0 {
            return Err(Error::InvalidProfile("table must start at rho = 0".into()));
        }
        if rho.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidProfile(
                "table rho must be strictly increasing".into(),
            ));
        }
        if f.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidProfile("table f must lie in [0, 1]".into()));
        }
        if f.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidProfile("profile vanishes identically".into()));
        }
        Ok(Self {
            rho,
            f,
            source: None,
        })
    }

    /// Reads a CSV file with header `rho,f`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::InvalidProfile(format!("{}: {e}", path.display())))?;
        let headers = reader
            .headers()
            .map_err(|e| Error::InvalidProfile(e.to_string()))?
            .clone();
        if headers.len() != 2 || &headers[0] != "rho" || &headers[1] != "f" {
            return Err(Error::InvalidProfile(format!(
                "{}: expected header `rho,f`",
                path.display()
            )));
        }
        let (mut rho, mut f) = (Vec::new(), Vec::new());
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::InvalidProfile(e.to_string()))?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidProfile(format!("bad number `{s}`")))
            };
            rho.push(parse(&rec[0])?);
            f.push(parse(&rec[1])?);
        }
        let mut t = Self::new(rho, f)?;
        t.source = Some(path.to_path_buf());
        Ok(t)
    }

    /// Radius beyond which the interpolant vanishes.
    fn support_radius(&self) -> f64 {
        let last = self
            .f
            .iter()
            .rposition(|&v| v > 0.0)
            .expect("validated nonzero");
        if last + 1 < self.rho.len() {
            self.rho[last + 1]
        } else {
            self.rho[last]
        }
    }

    fn eval(&self, rho: f64) -> f64 {
        if rho < 0.0 || rho > *self.rho.last().expect("nonempty") {
            return 0.0;
        }
        let i = self.rho.partition_point(|&x| x <= rho).saturating_sub(1);
        if i + 1 >= self.rho.len() {
            return self.f[i];
        }
        let w = (rho - self.rho[i]) / (self.rho[i + 1] - self.rho[i]);
        self.f[i] + w * (self.f[i + 1] - self.f[i])
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rho.iter().copied().zip(self.f.iter().copied())
    }
}

/// An immutable rotationally symmetric profile.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    a: f64,
    kind: ProfileKind,
}

fn check_radius(a: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidProfile(format!(
            "support radius must be positive, got {a}"
        )));
    }
    Ok(())
}

impl RadialProfile {
    pub fn disk(a: f64) -> Result<Self> {
        check_radius(a)?;
        Ok(Self {
            a,
            kind: ProfileKind::Disk,
        })
    }

    /// `f = 1` for `a t1 <= rho <= a t2`. The radius is rescaled to `a t2`
    /// so that it is the support radius of the profile.
    pub fn annulus(a: f64, t1: f64, t2: f64) -> Result<Self> {
        check_radius(a)?;
        if !(0.0 <= t1 && t1 < t2 && t2 <= 1.0) {
            return Err(Error::InvalidProfile(format!(
                "annulus needs 0 <= t1 < t2 <= 1, got t1 = {t1}, t2 = {t2}"
            )));
        }
        let kind = if t1 == 0.0 {
            ProfileKind::Disk
        } else {
            ProfileKind::Annulus { t1: t1 / t2 }
        };
        Ok(Self { a: a * t2, kind })
    }

    pub fn bump(a: f64) -> Result<Self> {
        check_radius(a)?;
        Ok(Self {
            a,
            kind: ProfileKind::Bump,
        })
    }

    pub fn tabulated(table: Tabulated) -> Result<Self> {
        let a = table.support_radius();
        check_radius(a)?;
        Ok(Self {
            a,
            kind: ProfileKind::Table(table),
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    /// `f(rho)`.
    pub fn eval(&self, rho: f64) -> f64 {
        if !(0.0..=self.a).contains(&rho) {
            return 0.0;
        }
        let r = rho / self.a;
        match &self.kind {
            ProfileKind::Disk => 1.0,
            ProfileKind::Annulus { t1 } => {
                if r >= *t1 {
                    1.0
                } else {
                    0.0
                }
            }
            ProfileKind::Bump => bump_scaled(r),
            ProfileKind::Table(t) => t.eval(rho),
        }
    }

    /// An interval `[a t1, a t2]` and a level `c > 0` with `f >= c` on it.
    pub fn positive_interval(&self) -> (f64, f64, f64) {
        match &self.kind {
            ProfileKind::Disk => (0.0, 1.0, 1.0),
            ProfileKind::Annulus { t1 } => (*t1, 1.0, 1.0),
            ProfileKind::Bump => (0.0, 0.5, bump_scaled(0.5)),
            ProfileKind::Table(t) => {
                let i = t
                    .f
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| i)
                    .expect("nonempty");
                // Within half a cell of the peak sample, f >= f_peak / 2.
                let lo = if i > 0 { 0.5 * (t.rho[i - 1] + t.rho[i]) } else { t.rho[i] };
                let hi = if i + 1 < t.rho.len() {
                    0.5 * (t.rho[i] + t.rho[i + 1])
                } else {
                    t.rho[i]
                };
                (lo / self.a, hi / self.a, 0.5 * t.f[i])
            }
        }
    }

    /// `f_t = ∫_0^1 f(a r) r^(t-3) dr` for `t >= 3`.
    pub fn moment_f_t(&self, t: f64) -> Result<f64> {
        if !(t >= 3.0) || !t.is_finite() {
            return Err(Error::Domain(format!("moment order t = {t} must be >= 3")));
        }
        let p = t - 2.0;
        match &self.kind {
            ProfileKind::Disk => Ok(1.0 / p),
            ProfileKind::Annulus { t1 } => Ok(-(p * t1.ln()).exp_m1() / p),
            _ => self.moment_by_quadrature(t),
        }
    }

    /// `ftilde_k = ∫_0^1 f(a r) r^(2k+1) dr`.
    pub fn moment_ftilde(&self, k: usize) -> Result<f64> {
        self.moment_f_t(2.0 * k as f64 + 4.0)
    }

    /// Breakpoints of `r -> f(a r)` in `(0, 1)`.
    fn breaks(&self) -> Vec<f64> {
        match &self.kind {
            ProfileKind::Annulus { t1 } => vec![*t1],
            ProfileKind::Table(t) => t.rho.iter().map(|&x| x / self.a).collect(),
            _ => Vec::new(),
        }
    }

    fn moment_by_quadrature(&self, t: f64) -> Result<f64> {
        let a = self.a;
        let p = t - 2.0;
        if t <= LARGE_T {
            let iv = Interval::new(0.0, 1.0)?;
            let mut breaks = self.breaks();
            breaks.extend([0.25, 0.5, 0.75, 0.9]);
            let res = integrate_with_breaks(
                |r| self.eval(a * r) * r.powf(t - 3.0),
                iv,
                &breaks,
                MOMENT_REL_TOL,
            )?;
            return check_positive(res.value);
        }
        // r = exp(-s/p): f_t = (1/p) ∫_0^∞ f(a e^{-s/p}) e^{-s} ds.
        let g = |s: f64| self.eval(a * (-s / p).exp()) * (-s).exp();
        let mut breaks: Vec<f64> = self
            .breaks()
            .into_iter()
            .filter(|&r| r > 0.0)
            .map(|r| -p * r.ln())
            .collect();
        breaks.extend([0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
        let mut upper = 64.0;
        loop {
            let iv = Interval::new(0.0, upper)?;
            let res = integrate_with_breaks(g, iv, &breaks, MOMENT_REL_TOL)?;
            // Tail beyond `upper` is at most e^{-upper} since f <= 1.
            let tail = (-upper).exp();
            if res.value > 0.0 && tail <= 1e-3 * MOMENT_REL_TOL * res.value {
                return check_positive(res.value / p);
            }
            if upper > 1e5 {
                return check_positive(res.value / p);
            }
            breaks.push(upper);
            upper *= 2.0;
        }
    }
}

fn check_positive(v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidProfile(format!(
            "moment evaluated to {v:e}; profile is numerically zero"
        )))
    }
}

fn bump_scaled(r: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    (1.0 - 1.0 / (1.0 - r * r)).exp()
}

impl fmt::Display for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ProfileKind::Disk => write!(f, "disk:a={}", self.a),
            ProfileKind::Annulus { t1 } => write!(f, "annulus:a={},t1={},t2=1", self.a, t1),
            ProfileKind::Bump => write!(f, "bump:a={}", self.a),
            ProfileKind::Table(t) => match &t.source {
                Some(p) => write!(f, "table:path={}", p.display()),
                None => write!(f, "table:a={}", self.a),
            },
        }
    }
}

impl FromStr for RadialProfile {
    type Err = Error;

    /// Parses `disk:a=<real>`, `annulus:a=<real>,t1=<real>,t2=<real>`,
    /// `bump:a=<real>` or `table:path=<file>`.
    fn from_str(spec: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidProfile(format!("`{spec}`: {msg}"));
        let (kind, rest) = spec.split_once(':').ok_or_else(|| bad("missing `:`"))?;
        let mut fields = Vec::new();
        for item in rest.split(',').filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| bad("expected key=value"))?;
            fields.push((k.trim(), v.trim()));
        }
        let get = |key: &str| -> Result<&str> {
            fields
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .ok_or_else(|| bad(&format!("missing `{key}`")))
        };
        let num = |key: &str| -> Result<f64> {
            get(key)?
                .parse::<f64>()
                .map_err(|_| bad(&format!("`{key}` is not a number")))
        };
        let allowed: &[&str] = match kind.trim() {
            "disk" | "bump" => &["a"],
            "annulus" => &["a", "t1", "t2"],
            "table" => &["path"],
            other => return Err(bad(&format!("unknown profile kind `{other}`"))),
        };
        if let Some((k, _)) = fields.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(bad(&format!("unexpected key `{k}`")));
        }
        match kind.trim() {
            "disk" => RadialProfile::disk(num("a")?),
            "bump" => RadialProfile::bump(num("a")?),
            "annulus" => RadialProfile::annulus(num("a")?, num("t1")?, num("t2")?),
            _ => RadialProfile::tabulated(Tabulated::from_csv(Path::new(get("path")?))?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn table_profile() -> RadialProfile {
        let rho = vec![0.0, 0.3, 0.6, 0.9, 1.2, 1.5];
        let f = vec![1.0, 0.9, 0.7, 0.4, 0.1, 0.0];
        RadialProfile::tabulated(Tabulated::new(rho, f).unwrap()).unwrap()
    }

    /// Exact moments of a piecewise-linear profile, segment by segment.
    fn piecewise_linear_moment(samples: &[(f64, f64)], a: f64, t: f64) -> f64 {
        let p = t - 2.0;
        samples
            .windows(2)
            .map(|w| {
                let (r0, r1) = (w[0].0 / a, w[1].0 / a);
                let (f0, f1) = (w[0].1, w[1].1);
                let slope = (f1 - f0) / (r1 - r0);
                let c = f0 - slope * r0;
                // ∫ (c + slope r) r^(p-1) dr
                c * (r1.powf(p) - r0.powf(p)) / p + slope * (r1.powf(p + 1.0) - r0.powf(p + 1.0)) / (p + 1.0)
            })
            .sum()
    }

    #[test]
    fn disk_moments() {
        let d = RadialProfile::disk(1.0).unwrap();
        assert_eq!(d.moment_f_t(4.0).unwrap(), 0.5);
        assert_eq!(d.moment_f_t(10.0).unwrap(), 0.125);
        assert_eq!(d.moment_ftilde(0).unwrap(), 0.5);
        assert_eq!(d.moment_ftilde(3).unwrap(), 0.125);
    }

    #[test]
    fn annulus_constant_integrand() {
        let p = RadialProfile::annulus(1.0, 0.5, 1.0).unwrap();
        assert!((p.moment_f_t(3.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn annulus_rescales_radius() {
        let p = RadialProfile::annulus(2.0, 0.25, 0.5).unwrap();
        assert_eq!(p.a(), 1.0);
        assert_eq!(p.eval(0.4), 0.0);
        assert_eq!(p.eval(0.6), 1.0);
        assert_eq!(p.eval(1.01), 0.0);
    }

    #[test]
    fn rejects_small_t() {
        let d = RadialProfile::disk(1.0).unwrap();
        assert!(matches!(d.moment_f_t(2.5), Err(Error::Domain(_))));
        assert!(d.moment_f_t(f64::NAN).is_err());
    }

    #[test]
    fn rejects_zero_profile() {
        let t = Tabulated::new(vec![0.0, 1.0], vec![0.0, 0.0]);
        assert!(matches!(t, Err(Error::InvalidProfile(_))));
        assert!(RadialProfile::disk(0.0).is_err());
        assert!(RadialProfile::annulus(1.0, 0.6, 0.5).is_err());
    }

    #[test]
    fn bump_identity_ftilde_matches_f_t() {
        let b = RadialProfile::bump(1.3).unwrap();
        let lhs = b.moment_ftilde(5).unwrap();
        let rhs = b.moment_f_t(14.0).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn table_matches_exact_piecewise_linear() {
        let p = table_profile();
        let samples: Vec<_> = match p.kind() {
            ProfileKind::Table(t) => t.samples().collect(),
            _ => unreachable!(),
        };
        assert_eq!(p.a(), 1.5);
        for t in [3.0, 4.5, 10.0, 57.0, 150.0, 199.0, 260.0, 1000.0] {
            let exact = piecewise_linear_moment(&samples, p.a(), t);
            let got = p.moment_f_t(t).unwrap();
            assert!(
                (got - exact).abs() <= 1e-11 * exact,
                "t = {t}: {got:e} vs {exact:e}"
            );
        }
    }

    #[test]
    fn large_t_substitution_is_continuous() {
        for p in [RadialProfile::bump(1.0).unwrap(), table_profile()] {
            let below = p.moment_f_t(LARGE_T).unwrap();
            let above = p.moment_f_t(LARGE_T + 1e-9).unwrap();
            assert!((below - above).abs() <= 1e-10 * below, "{p}");
        }
    }

    #[test]
    fn moments_strictly_decrease() {
        let profiles = [
            RadialProfile::disk(1.0).unwrap(),
            RadialProfile::annulus(1.0, 0.3, 1.0).unwrap(),
            RadialProfile::bump(2.0).unwrap(),
            table_profile(),
        ];
        for p in &profiles {
            let mut prev = f64::INFINITY;
            for i in 0..60 {
                let t = 3.0 + 7.3 * i as f64;
                let v = p.moment_f_t(t).unwrap();
                assert!(v > 0.0 && v < prev, "{p} at t = {t}");
                prev = v;
            }
        }
    }

    #[test]
    fn moment_ratio_stays_bounded() {
        let profiles = [
            RadialProfile::disk(1.0).unwrap(),
            RadialProfile::annulus(1.0, 0.5, 1.0).unwrap(),
            RadialProfile::bump(1.0).unwrap(),
            table_profile(),
        ];
        for p in &profiles {
            let (t1, t2, c) = p.positive_interval();
            assert!(t2 > t1 && c > 0.0);
            let ratios: Vec<f64> = (10..=200)
                .map(|t| p.moment_f_t(t as f64).unwrap() / p.moment_f_t(t as f64 + 1.0).unwrap())
                .collect();
            // f_t <= 1/(t-2) and f_{t+1} >= c ∫_{t1}^{t2} r^{t-2} dr.
            for (i, r) in ratios.iter().enumerate() {
                let t = 10.0 + i as f64;
                let lower = c * (t2.powf(t - 1.0) - t1.powf(t - 1.0)) / (t - 1.0);
                let bound = 1.0 / (t - 2.0) / lower;
                assert!(*r >= 1.0 && *r <= bound, "{p} t = {t}: {r}");
            }
            if matches!(p.kind(), ProfileKind::Disk) {
                assert!(ratios.windows(2).all(|w| w[1] <= w[0]));
            }
        }
    }

    #[test]
    fn identity_holds_for_all_kinds() {
        let profiles = [
            RadialProfile::disk(0.7).unwrap(),
            RadialProfile::annulus(1.0, 0.5, 1.0).unwrap(),
            RadialProfile::bump(1.0).unwrap(),
            table_profile(),
        ];
        for p in &profiles {
            for k in (0..=60).step_by(6) {
                let a = p.moment_ftilde(k).unwrap();
                let b = p.moment_f_t(2.0 * k as f64 + 4.0).unwrap();
                assert!((a - b).abs() <= 1e-12 * b);
            }
        }
    }

    #[test]
    fn parses_grammar() {
        let d: RadialProfile = "disk:a=1".parse().unwrap();
        assert_eq!(d, RadialProfile::disk(1.0).unwrap());
        let an: RadialProfile = "annulus:a=1,t1=0.5,t2=1.0".parse().unwrap();
        assert_eq!(an.kind(), &ProfileKind::Annulus { t1: 0.5 });
        let b: RadialProfile = "bump:a=2.5".parse().unwrap();
        assert_eq!(b.a(), 2.5);
        assert!("disk".parse::<RadialProfile>().is_err());
        assert!("disk:a=x".parse::<RadialProfile>().is_err());
        assert!("disk:a=1,t1=0.2".parse::<RadialProfile>().is_err());
        assert!("ring:a=1".parse::<RadialProfile>().is_err());
    }

    #[test]
    fn reads_table_csv() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "rho,f\n0,1\n0.5,1\n1.0,0.25\n2.0,0").unwrap();
        let spec = format!("table:path={}", file.path().display());
        let p: RadialProfile = spec.parse().unwrap();
        assert_eq!(p.a(), 2.0);
        assert!((p.eval(1.5) - 0.125).abs() < 1e-15);
        assert_eq!(p.to_string(), spec);

        let mut bad = tempfile::NamedTempFile::new().unwrap();
        writeln!(bad, "r,value\n0,1\n1,1").unwrap();
        let spec = format!("table:path={}", bad.path().display());
        assert!(spec.parse::<RadialProfile>().is_err());
    }
}
