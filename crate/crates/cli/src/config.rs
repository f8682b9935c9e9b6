use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nsvqe::adapt::{AdaptConfig, BackendKind};
use nsvqe::measure::MitigationPolicy;
use nsvqe::{Connectivity, Error, ShellName, SlaterDet, Species};
use serde::Serialize;

/// Every key accepted in a config file or through `--set`.
pub const KEYS: &[&str] = &[
    "shell",
    "species",
    "neutrons",
    "protons",
    "m2",
    "interaction",
    "normalization",
    "backend",
    "connectivity",
    "max_layers",
    "eps_target",
    "grad_tol",
    "gtol",
    "reference",
    "exact_oracle",
    "fd_check",
    "shots",
    "grouped",
    "mitigation",
    "flip_rate",
    "seed",
    "output",
];

/// Fully resolved run settings; recorded verbatim in `summary.json`.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    #[serde(serialize_with = "as_text")]
    pub shell: ShellName,
    #[serde(serialize_with = "as_text")]
    pub species: Species,
    pub neutrons: usize,
    pub protons: usize,
    pub m2: i32,
    pub interaction: String,
    pub normalization: String,
    pub backend: BackendKind,
    pub connectivity: Connectivity,
    pub max_layers: usize,
    pub eps_target: f64,
    pub grad_tol: f64,
    pub gtol: f64,
    pub reference: Option<String>,
    pub exact_oracle: bool,
    pub fd_check: bool,
    pub shots: usize,
    pub grouped: bool,
    pub mitigation: String,
    pub flip_rate: f64,
    pub seed: u64,
    pub output: PathBuf,
}

fn as_text<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Key/value settings collected from a file and command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut s = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected key = value, got '{line}'") })?;
            s.set(k.trim(), v.trim()).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        let key = key.trim().replace('-', "_").to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return Err(config_err(format!("unknown config key '{key}'")));
        }
        self.0.insert(key, value.trim().to_string());
        Ok(())
    }

    /// Parses `key=value`.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), Error> {
        let (k, v) = pair.split_once('=').ok_or_else(|| config_err(format!("expected key=value, got '{pair}'")))?;
        self.set(k, v)
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, Error> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| config_err(format!("invalid value '{v}' for {key}"))),
        }
    }

    fn get_with<T>(&self, key: &str, default: T, parse: impl Fn(&str) -> Result<T, Error>) -> Result<T, Error> {
        self.0.get(key).map_or(Ok(default), |v| parse(v))
    }

    pub fn resolve(&self) -> Result<RunConfig, Error> {
        let shell = self.get_with("shell", ShellName::P, str::parse)?;
        let species = self.get_with("species", Species::Both, str::parse)?;
        let neutrons = self.get("neutrons", 0usize)?;
        let protons = self.get("protons", 0usize)?;
        let m2 = self.get("m2", ((neutrons + protons) % 2) as i32)?;
        let normalization = self.get("normalization", "file".to_string())?.to_ascii_lowercase();
        if !matches!(normalization.as_str(), "file" | "normalized" | "unnormalized") {
            return Err(config_err(format!(
                "normalization must be file|normalized|unnormalized, got '{normalization}'"
            )));
        }
        let mitigation: MitigationPolicy = self.get_with("mitigation", MitigationPolicy::OFF, str::parse)?;
        let cfg = RunConfig {
            shell,
            species,
            neutrons,
            protons,
            m2,
            interaction: self.get("interaction", "random:1".to_string())?,
            normalization,
            backend: self.get_with("backend", BackendKind::Matrix, str::parse)?,
            connectivity: self.get_with("connectivity", Connectivity::All, str::parse)?,
            max_layers: self.get("max_layers", 60usize)?,
            eps_target: self.get("eps_target", 1e-6)?,
            grad_tol: self.get("grad_tol", 1e-6)?,
            gtol: self.get("gtol", 1e-6)?,
            reference: self.0.get("reference").cloned(),
            exact_oracle: self.get("exact_oracle", true)?,
            fd_check: self.get("fd_check", false)?,
            shots: self.get("shots", 0usize)?,
            grouped: self.get("grouped", true)?,
            mitigation: mitigation.to_string(),
            flip_rate: self.get("flip_rate", 0.0)?,
            seed: self.get("seed", 0u64)?,
            output: self.get("output", PathBuf::from("nsvqe-out"))?,
        };
        if cfg.eps_target.is_nan() || cfg.eps_target <= 0.0 {
            return Err(config_err("eps_target must be positive"));
        }
        if !(0.0..=1.0).contains(&cfg.flip_rate) {
            return Err(config_err("flip_rate must lie in [0, 1]"));
        }
        if [cfg.grad_tol, cfg.gtol].iter().any(|t| t.is_nan() || *t <= 0.0) {
            return Err(config_err("gradient tolerances must be positive"));
        }
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn mitigation_policy(&self) -> MitigationPolicy {
        self.mitigation.parse().expect("validated on resolve")
    }

    pub fn adapt_config(&self, n_qubits: usize) -> Result<AdaptConfig, Error> {
        let reference = match &self.reference {
            None => None,
            Some(ket) => {
                if ket.trim().len() != n_qubits {
                    return Err(config_err(format!("reference '{ket}' must have {n_qubits} characters")));
                }
                Some(SlaterDet::parse_ket(ket)?)
            }
        };
        Ok(AdaptConfig {
            max_layers: self.max_layers,
            eps_target: self.exact_oracle.then_some(self.eps_target),
            grad_tol: self.grad_tol,
            gtol: self.gtol,
            backend: self.backend,
            connectivity: self.connectivity,
            reference,
            exact_oracle: self.exact_oracle,
            fd_check: self.fd_check,
            ..AdaptConfig::default()
        })
    }
}
