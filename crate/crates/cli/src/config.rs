//! Run configuration: `key=value` files overridden by command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown format {other:?} (json|csv)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Largest stage `K_max`.
    pub stages: usize,
    /// Quadrature tolerance.
    pub tol: f64,
    /// `all`, a suite name, or a criterion id such as `AC4`.
    pub suite: String,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    /// Last stage searched for the preimage-count target.
    pub blowup_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { stages: 12, tol: 1e-10, suite: "all".into(), out: None, format: Format::Json, seed: 1, blowup_cap: 64 }
    }
}

/// Values given explicitly on the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub stages: Option<usize>,
    pub tol: Option<f64>,
    pub suite: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

impl RunConfig {
    /// Applies `key=value` lines. Blank lines and `#` comments are skipped;
    /// unknown keys are errors.
    pub fn apply_text(&mut self, text: &str) -> Result<(), String> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key=value", n + 1))?;
            let (k, v) = (k.trim(), v.trim());
            let bad = |e: &dyn std::fmt::Display| format!("line {}: {k}: {e}", n + 1);
            match k {
                "stages" => self.stages = v.parse().map_err(|e| bad(&e))?,
                "tol" => self.tol = v.parse().map_err(|e| bad(&e))?,
                "suite" => self.suite = v.to_string(),
                "out" => self.out = Some(PathBuf::from(v)),
                "format" => self.format = v.parse().map_err(|e: String| bad(&e))?,
                "seed" => self.seed = v.parse().map_err(|e| bad(&e))?,
                "blowup_cap" => self.blowup_cap = v.parse().map_err(|e| bad(&e))?,
                _ => return Err(format!("line {}: unknown key {k:?}", n + 1)),
            }
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut c = Self::default();
        c.apply_text(&text)?;
        Ok(c)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.stages {
            self.stages = v;
        }
        if let Some(v) = o.tol {
            self.tol = v;
        }
        if let Some(v) = &o.suite {
            self.suite = v.clone();
        }
        if let Some(v) = &o.out {
            self.out = Some(v.clone());
        }
        if let Some(v) = o.format {
            self.format = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(format!("tolerance must be positive, got {}", self.tol));
        }
        if self.stages > ce_core::stagegen::DEFAULT_STAGE_CAP {
            return Err(format!("stages {} exceeds the cap {}", self.stages, ce_core::stagegen::DEFAULT_STAGE_CAP));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let mut c = RunConfig::default();
        c.apply_text("# demo\nstages = 3\ntol=1e-9\nformat=csv\n\nseed=9 # trailing\n").unwrap();
        assert_eq!((c.stages, c.tol, c.format, c.seed), (3, 1e-9, Format::Csv, 9));
        c.apply(&Overrides { stages: Some(5), ..Default::default() });
        assert_eq!(c.stages, 5);
        assert_eq!(c.format, Format::Csv);
        assert!(c.apply_text("colour=red").is_err());
        assert!(c.apply_text("stages").is_err());
        assert!(c.apply_text("format=xml").is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_ok());
        c.tol = 0.0;
        assert!(c.validate().is_err());
    }
}
