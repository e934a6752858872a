//! Experiment configuration: a line-oriented `key = value` format whose keys
//! mirror the command line flags. Unset keys (or the value `auto`) fall back
//! to the default grid of each experiment.

use std::fmt::Write as _;
use std::path::PathBuf;

use degobs_core::spectral::{Method, DEFAULT_ALPHA_CAP};
use degobs_core::{Error, ObservationWindow, Result};
use sha2::{Digest, Sha256};

/// Experiments runnable from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Eig,
    Gram,
    Specineq,
    Interp,
    Control,
    HeatObs,
}

impl Experiment {
    pub const ALL: [Experiment; 6] =
        [Experiment::Eig, Experiment::Gram, Experiment::Specineq, Experiment::Interp, Experiment::Control, Experiment::HeatObs];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Eig => "eig",
            Experiment::Gram => "gram",
            Experiment::Specineq => "specineq",
            Experiment::Interp => "interp",
            Experiment::Control => "control",
            Experiment::HeatObs => "heat-obs",
        }
    }
}

/// Configuration as read from a file and the command line; `None` means
/// "use the experiment default".
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentConfig {
    pub alpha: Option<Vec<f64>>,
    pub n_max: Option<usize>,
    pub horizon: Option<Vec<f64>>,
    pub window: Option<(f64, f64)>,
    pub measurable_set: Option<Vec<(f64, f64)>>,
    pub bits: Option<usize>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub method: Option<Method>,
    /// Largest accepted exponent; raising it past the default trades accuracy for range.
    pub alpha_cap: Option<f64>,
    pub out: Option<PathBuf>,
}

/// Fully resolved settings for one experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub alphas: Vec<f64>,
    pub n_max: usize,
    pub horizons: Vec<f64>,
    pub window: ObservationWindow,
    /// Explicit time set; `None` selects the default set for each horizon.
    pub measurable_set: Option<Vec<(f64, f64)>>,
    pub bits: usize,
    pub seed: u64,
    pub samples: usize,
    pub method: Method,
    pub alpha_cap: f64,
}

pub const DEFAULT_SEED: u64 = 20_240_917;

/// `0, 0.1, ..., 1.9`.
pub fn fine_alpha_grid() -> Vec<f64> {
    (0..20).map(|k| k as f64 / 10.0).collect()
}

/// `0, 0.5, 1, 1.5`.
pub fn coarse_alpha_grid() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 1.5]
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn parse_f64(s: &str, key: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| invalid(format!("{key}: '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(invalid(format!("{key}: value must be finite")));
    }
    Ok(v)
}

pub fn parse_list(s: &str, key: &str) -> Result<Vec<f64>> {
    let v = s.split(',').map(|p| parse_f64(p, key)).collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        return Err(invalid(format!("{key}: empty list")));
    }
    Ok(v)
}

pub fn parse_pair(s: &str, key: &str) -> Result<(f64, f64)> {
    match parse_list(s, key)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(invalid(format!("{key}: expected two comma-separated numbers, got '{s}'"))),
    }
}

/// `t0,t1;t2,t3;...`
pub fn parse_intervals(s: &str, key: &str) -> Result<Vec<(f64, f64)>> {
    s.split(';').map(|p| parse_pair(p, key)).collect()
}

fn parse_int<T: std::str::FromStr>(s: &str, key: &str) -> Result<T> {
    s.trim().parse().map_err(|_| invalid(format!("{key}: '{s}' is not a nonnegative integer")))
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Parse the `key = value` format; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| invalid(format!("line {}: expected 'key = value'", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if value == "auto" {
            match key {
                "alpha" => self.alpha = None,
                "n_max" => self.n_max = None,
                "horizon" => self.horizon = None,
                "window" => self.window = None,
                "measurable_set" => self.measurable_set = None,
                "bits" => self.bits = None,
                "seed" => self.seed = None,
                "samples" => self.samples = None,
                "method" => self.method = None,
                "alpha_cap" => self.alpha_cap = None,
                "out" => self.out = None,
                other => return Err(invalid(format!("unknown key '{other}'"))),
            }
            return Ok(());
        }
        match key {
            "alpha" => self.alpha = Some(parse_list(value, key)?),
            "n_max" => self.n_max = Some(parse_int(value, key)?),
            "horizon" => self.horizon = Some(parse_list(value, key)?),
            "window" => self.window = Some(parse_pair(value, key)?),
            "measurable_set" => self.measurable_set = Some(parse_intervals(value, key)?),
            "bits" => self.bits = Some(parse_int(value, key)?),
            "seed" => self.seed = Some(parse_int(value, key)?),
            "samples" => self.samples = Some(parse_int(value, key)?),
            "method" => self.method = Some(value.parse()?),
            "alpha_cap" => self.alpha_cap = Some(parse_f64(value, key)?),
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(invalid(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Values from `other` take precedence.
    pub fn merged(&self, other: &Self) -> Self {
        Self {
            alpha: other.alpha.clone().or_else(|| self.alpha.clone()),
            n_max: other.n_max.or(self.n_max),
            horizon: other.horizon.clone().or_else(|| self.horizon.clone()),
            window: other.window.or(self.window),
            measurable_set: other.measurable_set.clone().or_else(|| self.measurable_set.clone()),
            bits: other.bits.or(self.bits),
            seed: other.seed.or(self.seed),
            samples: other.samples.or(self.samples),
            method: other.method.or(self.method),
            alpha_cap: other.alpha_cap.or(self.alpha_cap),
            out: other.out.clone().or_else(|| self.out.clone()),
        }
    }

    /// Canonical text form; parsing it gives back the same configuration.
    pub fn render(&self) -> String {
        fn opt<T>(v: &Option<T>, f: impl Fn(&T) -> String) -> String {
            v.as_ref().map_or_else(|| "auto".to_string(), f)
        }
        let mut s = String::new();
        let _ = writeln!(s, "alpha = {}", opt(&self.alpha, |v| fmt_list(v)));
        let _ = writeln!(s, "n_max = {}", opt(&self.n_max, |v| v.to_string()));
        let _ = writeln!(s, "horizon = {}", opt(&self.horizon, |v| fmt_list(v)));
        let _ = writeln!(s, "window = {}", opt(&self.window, |(a, b)| format!("{a},{b}")));
        let _ = writeln!(
            s,
            "measurable_set = {}",
            opt(&self.measurable_set, |v| v.iter().map(|(a, b)| format!("{a},{b}")).collect::<Vec<_>>().join(";"))
        );
        let _ = writeln!(s, "bits = {}", opt(&self.bits, |v| v.to_string()));
        let _ = writeln!(s, "seed = {}", opt(&self.seed, |v| v.to_string()));
        let _ = writeln!(s, "samples = {}", opt(&self.samples, |v| v.to_string()));
        let _ = writeln!(s, "method = {}", opt(&self.method, |m| m.label().to_string()));
        let _ = writeln!(s, "alpha_cap = {}", opt(&self.alpha_cap, |v| v.to_string()));
        let _ = writeln!(s, "out = {}", opt(&self.out, |p| p.display().to_string()));
        s
    }

    /// Short hex digest of the canonical form, excluding the output directory.
    pub fn hash(&self, command: &str) -> String {
        let mut c = self.clone();
        c.out = None;
        let digest = Sha256::digest(format!("command = {command}\n{}", c.render()).as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Settings for `exp`, filling unset keys with its default grid.
    pub fn resolve(&self, exp: Experiment) -> Result<Resolved> {
        let (alphas, n_max, horizons, bits, samples) = match exp {
            Experiment::Eig | Experiment::Gram => (fine_alpha_grid(), 20, vec![1.0], 128, 50),
            Experiment::Specineq => (coarse_alpha_grid(), 14, vec![1.0], 256, 50),
            Experiment::Interp => (vec![0.0, 1.0], 6, vec![1.0], 128, 50),
            Experiment::Control => (coarse_alpha_grid(), 6, vec![0.5, 1.0, 2.0], 256, 50),
            Experiment::HeatObs => (coarse_alpha_grid(), 8, vec![1.0], 128, 50),
        };
        let (a, b) = self.window.unwrap_or((0.2, 0.8));
        let r = Resolved {
            alphas: self.alpha.clone().unwrap_or(alphas),
            n_max: self.n_max.unwrap_or(n_max),
            horizons: self.horizon.clone().unwrap_or(horizons),
            window: ObservationWindow::new(a, b)?,
            measurable_set: self.measurable_set.clone(),
            bits: self.bits.unwrap_or(bits),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            samples: self.samples.unwrap_or(samples),
            method: self.method.unwrap_or(Method::Bessel),
            alpha_cap: self.alpha_cap.unwrap_or(DEFAULT_ALPHA_CAP),
        };
        r.validate(exp)?;
        Ok(r)
    }
}

impl Resolved {
    fn validate(&self, exp: Experiment) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(invalid("alpha grid is empty"));
        }
        if !(self.alpha_cap < 2.0) {
            return Err(invalid(format!("alpha cap {} must stay below 2", self.alpha_cap)));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a >= 0.0 && **a <= self.alpha_cap)) {
            return Err(invalid(format!("alpha = {a} lies outside [0, {}]", self.alpha_cap)));
        }
        if self.n_max == 0 {
            return Err(invalid("n_max must be at least 1: the spectral cut would be empty"));
        }
        if self.horizons.iter().any(|t| !(*t > 0.0)) {
            return Err(invalid("horizons must be positive"));
        }
        if self.samples == 0 {
            return Err(invalid("samples must be at least 1"));
        }
        match exp {
            Experiment::Eig if self.n_max < 2 => Err(invalid("the spectral gap needs n_max >= 2")),
            Experiment::Specineq if self.n_max < 2 => Err(invalid("the scaling fit needs n_max >= 2")),
            Experiment::Interp if self.samples < 20 => Err(invalid("interpolation needs at least 20 samples")),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "alpha = 0,0.5\nn_max = 4 # modes\nwindow = 0.1,0.9\nmeasurable_set = 0.1,0.2;0.5,0.7\nmethod = fem\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.alpha, Some(vec![0.0, 0.5]));
        assert_eq!(cfg.measurable_set, Some(vec![(0.1, 0.2), (0.5, 0.7)]));
        assert_eq!(ExperimentConfig::parse(&cfg.render()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("alpha 0").is_err());
        assert!(ExperimentConfig::parse("colour = red").is_err());
        assert!(ExperimentConfig::parse("window = 0.2").is_err());
        let cfg = ExperimentConfig::parse("n_max = 0").unwrap();
        assert!(cfg.resolve(Experiment::Control).is_err());
        let cfg = ExperimentConfig::parse("alpha = 2.5").unwrap();
        assert!(cfg.resolve(Experiment::Eig).is_err());
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = ExperimentConfig::parse("seed = 3\nout = x").unwrap();
        let b = ExperimentConfig::parse("seed = 3\nout = y").unwrap();
        assert_eq!(a.hash("eig"), b.hash("eig"));
        assert_ne!(a.hash("eig"), a.hash("gram"));
    }
}
