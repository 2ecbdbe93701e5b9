//! Run configuration: defaults, an optional `key=value` file, then flags.

use std::fs;
use std::path::{Path, PathBuf};

use plate_modes::RadialProfile;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub profile: String,
    pub alpha: f64,
    pub n_max: usize,
    pub r_lo: f64,
    pub r_hi: f64,
    pub r_steps: usize,
    pub out: PathBuf,
    pub precision_bits: usize,
    /// Relative widening of the accumulation envelopes in `predict`.
    pub eps: f64,
    pub scan_points: usize,
    pub diff_step: f64,
    /// Test hook: multiplies `p2` in the series route only.
    pub corrupt_p2: Option<f64>,
}

pub const N_MAX_LIMIT: usize = 200;
pub const MIN_PRECISION_BITS: usize = 100;

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            profile: "disk:a=1".into(),
            alpha: 0.1,
            n_max: 40,
            r_lo: 0.05,
            r_hi: 3.0,
            r_steps: 60,
            out: PathBuf::from("."),
            precision_bits: 128,
            eps: 0.1,
            scan_points: 400,
            diff_step: 1e-3,
            corrupt_p2: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError(format!("`{key}`: cannot parse `{value}`")))
}

impl RunConfig {
    /// Applies one `key = value` setting; keys accept `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "profile" => self.profile = value.to_string(),
            "alpha" => self.alpha = parse(key, value)?,
            "n_max" => self.n_max = parse(key, value)?,
            "r_lo" => self.r_lo = parse(key, value)?,
            "r_hi" => self.r_hi = parse(key, value)?,
            "r_steps" => self.r_steps = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "precision_bits" => self.precision_bits = parse(key, value)?,
            "eps" => self.eps = parse(key, value)?,
            "scan_points" => self.scan_points = parse(key, value)?,
            "diff_step" => self.diff_step = parse(key, value)?,
            other => return Err(ConfigError(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Reads `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<RadialProfile, ConfigError> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(ConfigError(format!("alpha = {} outside [0, 1)", self.alpha)));
        }
        if self.n_max > N_MAX_LIMIT {
            return Err(ConfigError(format!("n_max = {} above {N_MAX_LIMIT}", self.n_max)));
        }
        if self.precision_bits < MIN_PRECISION_BITS {
            return Err(ConfigError(format!(
                "precision_bits = {} below {MIN_PRECISION_BITS}",
                self.precision_bits
            )));
        }
        if self.r_steps == 0 || !(self.r_lo >= 0.0) || !(self.r_hi >= self.r_lo) {
            return Err(ConfigError(format!(
                "invalid r sweep ({}, {}, {})",
                self.r_lo, self.r_hi, self.r_steps
            )));
        }
        if !(0.0..1.0).contains(&self.eps) {
            return Err(ConfigError(format!("eps = {} outside [0, 1)", self.eps)));
        }
        self.profile
            .parse::<RadialProfile>()
            .map_err(|e| ConfigError(e.to_string()))
    }

    /// The sweep points `r_lo … r_hi`, both ends included.
    pub fn r_grid(&self) -> Vec<f64> {
        if self.r_steps == 1 {
            return vec![self.r_lo];
        }
        let span = self.r_hi - self.r_lo;
        (0..self.r_steps)
            .map(|i| self.r_lo + span * i as f64 / (self.r_steps - 1) as f64)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn file_then_override() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# comment\nalpha = 0.2\nn-max=12\nprofile = annulus:a=1,t1=0.5,t2=1").unwrap();
        let mut cfg = RunConfig::default();
        cfg.apply_file(f.path()).unwrap();
        assert_eq!(cfg.alpha, 0.2);
        assert_eq!(cfg.n_max, 12);
        cfg.set("alpha", "0.05").unwrap();
        assert_eq!(cfg.alpha, 0.05);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set("nonsense", "1").is_err());
        cfg.n_max = 201;
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            precision_bits: 64,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            alpha: 1.0,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn grid_includes_both_ends() {
        let cfg = RunConfig {
            r_lo: 0.5,
            r_hi: 1.5,
            r_steps: 3,
            ..RunConfig::default()
        };
        assert_eq!(cfg.r_grid(), vec![0.5, 1.0, 1.5]);
    }
}
