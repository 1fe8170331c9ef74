//! Run configuration: a flat `section.key = value` document.
//!
//! ```text
//! lattice.size = 20
//! lattice.boundary = "periodic"
//! anneal.alpha = 0.9
//! seed = 7
//! ```
//!
//! Every key is optional. The syntax is TOML, so `[section]` headers work
//! too, but [`RunConfig::echo`] always writes the flat form.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::Value;

use crate::error::{Error, Result};
use crate::lattice::{Boundary, LatticeConfig};
use crate::memory::NetParams;

/// Environment variable overriding the configured seed.
pub const SEED_ENV: &str = "QNET_SEED";

/// Settings for the scripted experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExperimentSettings {
    pub k_patterns: usize,
    pub n_seeds: usize,
    /// Fraction of cue bits flipped for noisy recalls.
    pub noise: f64,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings { k_patterns: 5, n_seeds: 20, noise: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub lattice: LatticeConfig,
    pub params: NetParams,
    pub experiment: ExperimentSettings,
    pub seed: u64,
    pub output_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lattice: LatticeConfig::new(20, Boundary::Periodic).expect("default lattice"),
            params: NetParams::default(),
            experiment: ExperimentSettings::default(),
            seed: 0,
            output_dir: "out".to_string(),
        }
    }
}

const KEYS: &[&str] = &[
    "lattice.size",
    "lattice.boundary",
    "lattice.spacing",
    "dynamics.dt",
    "dynamics.kinetic_coeff",
    "dynamics.mu",
    "dynamics.gamma",
    "dynamics.n_steps",
    "anneal.t0",
    "anneal.alpha",
    "anneal.t_min",
    "anneal.sweeps_per_temp",
    "write.b0",
    "write.eta",
    "write.w_max",
    "recall.cue_strength",
    "recall.eps_thr",
    "recall.ambiguity_margin",
    "hybrid.self_feedback",
    "experiment.k_patterns",
    "experiment.n_seeds",
    "experiment.noise",
    "seed",
    "output.dir",
];

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let mut entries = Vec::new();
    flatten("", &table, &mut entries);

    let mut cfg = RunConfig::default();
    let mut size = cfg.lattice.size();
    let mut boundary = cfg.lattice.boundary();
    let mut spacing = cfg.lattice.spacing();
    let mut eps_thr = None;
    for (key, value) in &entries {
        let key = key.as_str();
        if !KEYS.contains(&key) {
            return Err(Error::UnknownKey { key: key.to_string(), line: key_line(text, key) });
        }
        let p = &mut cfg.params;
        match key {
            "lattice.size" => size = int(key, value)?,
            "lattice.boundary" => boundary = string(key, value)?.parse()?,
            "lattice.spacing" => spacing = float(key, value)?,
            "dynamics.dt" => p.dynamics.dt = float(key, value)?,
            "dynamics.kinetic_coeff" => p.dynamics.kinetic_coeff = float(key, value)?,
            "dynamics.mu" => p.dynamics.mu = float(key, value)?,
            "dynamics.gamma" => p.dynamics.gamma = float(key, value)?,
            "dynamics.n_steps" => p.dynamics.n_steps = int(key, value)?,
            "anneal.t0" => p.anneal.t0 = float(key, value)?,
            "anneal.alpha" => p.anneal.alpha = float(key, value)?,
            "anneal.t_min" => p.anneal.t_min = float(key, value)?,
            "anneal.sweeps_per_temp" => p.anneal.sweeps_per_temp = int(key, value)?,
            "write.b0" => p.write.b0 = float(key, value)?,
            "write.eta" => p.write.eta = float(key, value)?,
            "write.w_max" => p.write.w_max = float(key, value)?,
            "recall.cue_strength" => p.recall.cue_strength = float(key, value)?,
            "recall.eps_thr" => eps_thr = Some(float(key, value)?),
            "recall.ambiguity_margin" => p.recall.ambiguity_margin = float(key, value)?,
            "hybrid.self_feedback" => p.self_feedback = float(key, value)?,
            "experiment.k_patterns" => cfg.experiment.k_patterns = int(key, value)?,
            "experiment.n_seeds" => cfg.experiment.n_seeds = int(key, value)?,
            "experiment.noise" => cfg.experiment.noise = float(key, value)?,
            "seed" => cfg.seed = int(key, value)?,
            "output.dir" => cfg.output_dir = string(key, value)?.to_string(),
            _ => unreachable!("key list and match arms out of sync"),
        }
    }
    cfg.params.recall.eps_thr = eps_thr.unwrap_or(0.1 * cfg.params.write.b0);
    cfg.lattice = LatticeConfig::with_spacing(size, boundary, spacing)?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let e = &self.experiment;
        if e.k_patterns == 0 {
            return Err(Error::validation("experiment.k_patterns", "must be >= 1"));
        }
        if e.n_seeds == 0 {
            return Err(Error::validation("experiment.n_seeds", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&e.noise) {
            return Err(Error::validation("experiment.noise", "must lie in [0, 1]"));
        }
        if self.output_dir.is_empty() {
            return Err(Error::validation("output.dir", "must not be empty"));
        }
        let p = &self.params;
        let b_max = p.write.b0 * p.recall.cue_strength.max(1.0);
        let bound = p.dynamics.stability_bound(&self.lattice, b_max);
        if p.dynamics.dt > bound {
            return Err(Error::validation("dynamics.dt", format!("must be <= {bound} for peak field {b_max}")));
        }
        Ok(())
    }

    /// The effective configuration with every key spelled out, one per line.
    pub fn echo(&self) -> String {
        let p = &self.params;
        let lines = [
            format!("lattice.size = {}", self.lattice.size()),
            format!("lattice.boundary = \"{}\"", self.lattice.boundary()),
            format!("lattice.spacing = {:?}", self.lattice.spacing()),
            format!("dynamics.dt = {:?}", p.dynamics.dt),
            format!("dynamics.kinetic_coeff = {:?}", p.dynamics.kinetic_coeff),
            format!("dynamics.mu = {:?}", p.dynamics.mu),
            format!("dynamics.gamma = {:?}", p.dynamics.gamma),
            format!("dynamics.n_steps = {}", p.dynamics.n_steps),
            format!("anneal.t0 = {:?}", p.anneal.t0),
            format!("anneal.alpha = {:?}", p.anneal.alpha),
            format!("anneal.t_min = {:?}", p.anneal.t_min),
            format!("anneal.sweeps_per_temp = {}", p.anneal.sweeps_per_temp),
            format!("write.b0 = {:?}", p.write.b0),
            format!("write.eta = {:?}", p.write.eta),
            format!("write.w_max = {:?}", p.write.w_max),
            format!("recall.cue_strength = {:?}", p.recall.cue_strength),
            format!("recall.eps_thr = {:?}", p.recall.eps_thr),
            format!("recall.ambiguity_margin = {:?}", p.recall.ambiguity_margin),
            format!("hybrid.self_feedback = {:?}", p.self_feedback),
            format!("experiment.k_patterns = {}", self.experiment.k_patterns),
            format!("experiment.n_seeds = {}", self.experiment.n_seeds),
            format!("experiment.noise = {:?}", self.experiment.noise),
            format!("seed = {}", self.seed),
            format!("output.dir = {}", Value::String(self.output_dir.clone())),
        ];
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    /// Copy with one key replaced, re-validated as if loaded from a file.
    pub fn with_override(&self, key: &str, value: &str) -> Result<RunConfig> {
        if !KEYS.contains(&key) {
            return Err(Error::UnknownKey { key: key.to_string(), line: 0 });
        }
        let prefix = format!("{key} = ");
        let text: Vec<String> = self
            .echo()
            .lines()
            .map(|l| if l.starts_with(&prefix) { format!("{prefix}{value}") } else { l.to_string() })
            .collect();
        parse_config(&text.join("\n"))
    }

    /// First 16 hex digits of the SHA-256 of [`RunConfig::echo`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.echo().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Seed precedence: explicit flag, then `QNET_SEED`, then the config.
    pub fn resolve_seed(&self, flag: Option<u64>) -> Result<u64> {
        resolve_seed(self.seed, flag, std::env::var(SEED_ENV).ok().as_deref())
    }
}

pub fn resolve_seed(configured: u64, flag: Option<u64>, env: Option<&str>) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match env {
        Some(text) => text
            .trim()
            .parse()
            .map_err(|_| Error::validation(SEED_ENV, format!("expected an unsigned integer, got `{text}`"))),
        None => Ok(configured),
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(inner) => flatten(&key, inner, out),
            other => out.push((key, other.clone())),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Best-effort line lookup for a key that parsed but is not recognised.
fn key_line(text: &str, key: &str) -> usize {
    let leaf = key.rsplit('.').next().unwrap_or(key);
    text.lines()
        .position(|l| l.trim_start().starts_with(key))
        .or_else(|| text.lines().position(|l| l.split('=').next().is_some_and(|lhs| lhs.trim() == leaf)))
        .map_or(0, |i| i + 1)
}

fn float(key: &str, v: &Value) -> Result<f64> {
    let x = match v {
        Value::Float(x) => *x,
        Value::Integer(i) => *i as f64,
        _ => return Err(Error::validation(key, format!("expected a number, got {v}"))),
    };
    if !x.is_finite() {
        return Err(Error::validation(key, "must be finite"));
    }
    Ok(x)
}

fn int<T: TryFrom<i64>>(key: &str, v: &Value) -> Result<T> {
    match v {
        Value::Integer(i) => T::try_from(*i).map_err(|_| Error::validation(key, format!("{i} is out of range"))),
        _ => Err(Error::validation(key, format!("expected a non-negative integer, got {v}"))),
    }
}

fn string<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::validation(key, format!("expected a quoted string, got {v}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.lattice.size(), 20);
        assert_eq!(cfg.params.recall.eps_thr, 0.1);
    }

    #[test]
    fn alpha_out_of_range() {
        let err = parse_config("anneal.alpha = 1.5\n").unwrap_err();
        match err {
            Error::Validation { key, constraint } => {
                assert_eq!(key, "anneal.alpha");
                assert!(constraint.contains("(0, 1)"), "{constraint}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_config("seed = 1\nlattice.colour = 3\n").unwrap_err();
        assert_eq!(err, Error::UnknownKey { key: "lattice.colour".into(), line: 2 });
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_config("seed = 1\nanneal.t0 = = 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn section_headers_are_accepted() {
        let cfg = parse_config("[lattice]\nsize = 6\nboundary = \"open\"\n").unwrap();
        assert_eq!(cfg.lattice.size(), 6);
        assert_eq!(cfg.lattice.boundary(), Boundary::Open);
    }

    #[test]
    fn eps_thr_follows_b0_unless_set() {
        assert_eq!(parse_config("write.b0 = 0.5").unwrap().params.recall.eps_thr, 0.05);
        assert_eq!(parse_config("write.b0 = 0.5\nrecall.eps_thr = 0").unwrap().params.recall.eps_thr, 0.0);
    }

    #[test]
    fn type_errors_name_the_key() {
        let err = parse_config("dynamics.n_steps = 2.5").unwrap_err();
        assert!(matches!(err, Error::Validation { ref key, .. } if key == "dynamics.n_steps"));
        let err = parse_config("lattice.boundary = \"twisted\"").unwrap_err();
        assert!(matches!(err, Error::Validation { ref key, .. } if key == "lattice.boundary"));
        let err = parse_config("seed = -3").unwrap_err();
        assert!(matches!(err, Error::Validation { ref key, .. } if key == "seed"));
    }

    #[test]
    fn unstable_dt_rejected() {
        let err = parse_config("dynamics.dt = 0.05").unwrap_err();
        assert!(matches!(err, Error::Validation { ref key, .. } if key == "dynamics.dt"));
    }

    #[test]
    fn echo_round_trip() {
        let text = "lattice.size = 8\nanneal.t0 = 1.7\nwrite.eta = 1e-3\nseed = 99\noutput.dir = \"runs/a b\"\n";
        let cfg = parse_config(text).unwrap();
        let again = parse_config(&cfg.echo()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.echo(), cfg.echo());
        assert_eq!(again.hash(), cfg.hash());
        assert_ne!(parse_config("").unwrap().hash(), cfg.hash());
    }

    #[test]
    fn override_one_key() {
        let base = parse_config("seed = 4").unwrap();
        let cfg = base.with_override("dynamics.gamma", "0.5").unwrap();
        assert_eq!(cfg.params.dynamics.gamma, 0.5);
        assert_eq!(cfg.seed, 4);
        assert!(base.with_override("anneal.alpha", "2").is_err());
        assert!(matches!(base.with_override("nope", "1"), Err(Error::UnknownKey { .. })));
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(1, None, None).unwrap(), 1);
        assert_eq!(resolve_seed(1, None, Some("5")).unwrap(), 5);
        assert_eq!(resolve_seed(1, Some(9), Some("5")).unwrap(), 9);
        assert!(resolve_seed(1, None, Some("x")).is_err());
    }
}
