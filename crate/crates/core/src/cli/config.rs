use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::report::Format;
use crate::error::{Error, Result};
use crate::spin_algebra::{pauli, CMatrix};
use crate::C64;

/// Largest chain for thermal runs (dense diagonalization).
pub const MAX_THERMAL_SITES: usize = 12;
/// Largest chain for ground-state runs (Lanczos).
pub const MAX_GROUND_SITES: usize = 20;
/// Largest chain for the Dyson series checks.
pub const MAX_DYSON_SITES: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Restrict,
    Potential,
    Betamax,
    IsingLdp,
    Locality,
    DysonCheck,
    Fcs,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Restrict => "restrict",
            Command::Potential => "potential",
            Command::Betamax => "betamax",
            Command::IsingLdp => "ising-ldp",
            Command::Locality => "locality",
            Command::DysonCheck => "dyson-check",
            Command::Fcs => "fcs",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundTag {
    Ground,
}

/// Inverse temperature or the ground state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Beta {
    Finite(f64),
    Ground(GroundTag),
}

impl Default for Beta {
    fn default() -> Self {
        Beta::Ground(GroundTag::Ground)
    }
}

impl Beta {
    pub fn finite(self) -> Option<f64> {
        match self {
            Beta::Finite(b) => Some(b),
            Beta::Ground(_) => None,
        }
    }
}

impl std::str::FromStr for Beta {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "ground" {
            return Ok(Beta::default());
        }
        s.parse::<f64>().map(Beta::Finite).map_err(|_| format!("expected a number or \"ground\", got {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ObservableChoice {
    Sx,
    Sy,
    Sz,
    Custom,
}

/// A validated run description. Keys follow the JSON config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(rename = "J", default = "one")]
    pub j: f64,
    #[serde(default = "one")]
    pub h: f64,
    #[serde(default)]
    pub beta: Beta,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<usize>,
    /// Restriction window, defaults to the whole chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Vec<i64>>,
    #[serde(rename = "L", default, skip_serializing_if = "Vec::is_empty")]
    pub l: Vec<usize>,
    #[serde(rename = "X", default, skip_serializing_if = "Option::is_none")]
    pub x: Option<ObservableChoice>,
    /// Rows of `[re, im]` pairs for `X = "custom"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default = "default_quadrature")]
    pub quadrature: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub buffer: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    /// Block sizes (ising-ldp) or ball radii (fcs).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub t: Vec<f64>,
    /// Magnetization grid for the rate function.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub m: Vec<f64>,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_kp_sites")]
    pub kp_sites: usize,
    #[serde(default = "half")]
    pub alpha1: f64,
    #[serde(default = "half")]
    pub alpha2: f64,
    #[serde(default = "half")]
    pub delta1: f64,
    #[serde(default = "half")]
    pub delta2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagrams: Option<PathBuf>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// FCS model file; the AKLT model when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    /// 1-based labels on `V_n`.
    #[serde(rename = "x_V", default, skip_serializing_if = "Option::is_none")]
    pub x_v: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default = "default_format")]
    pub format: Format,
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn default_quadrature() -> usize {
    4096
}

fn default_order() -> usize {
    3
}

fn default_kp_sites() -> usize {
    12
}

fn default_samples() -> usize {
    20
}

fn default_format() -> Format {
    Format::Json
}

fn key_err(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("key `{key}`: {msg}"))
}

fn missing(key: &str, cmd: Command) -> Error {
    Error::Config(format!("missing required key `{key}` for {}", cmd.name()))
}

fn finite(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(key_err(key, format!("{v} is not finite")))
    }
}

impl RunConfig {
    /// Deserializes a JSON object and validates it.
    pub fn from_value(v: Value) -> Result<Self> {
        let cfg: RunConfig = serde_path_to_error::deserialize(v).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                Error::Config(e.into_inner().to_string())
            } else {
                key_err(&path, e.into_inner())
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("config is not valid JSON: {e}")))?;
        Self::from_value(v)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The observable, with the per-command default.
    pub fn observable(&self) -> ObservableChoice {
        self.x.unwrap_or(if self.command == Command::DysonCheck { ObservableChoice::Sx } else { ObservableChoice::Sz })
    }

    pub fn observable_matrix(&self) -> Result<CMatrix> {
        match self.observable() {
            ObservableChoice::Sx => Ok(pauli::x()),
            ObservableChoice::Sy => Ok(pauli::y()),
            ObservableChoice::Sz => Ok(pauli::z()),
            ObservableChoice::Custom => {
                let rows = self.matrix.as_ref().ok_or_else(|| key_err("matrix", "required when X is \"custom\""))?;
                let n = rows.len();
                if n != 2 || rows.iter().any(|r| r.len() != n) {
                    return Err(key_err("matrix", "must be a 2×2 array of [re, im] pairs"));
                }
                let m = CMatrix::from_fn(n, n, |r, c| C64::new(rows[r][c][0], rows[r][c][1]));
                if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(key_err("matrix", "entries must be finite"));
                }
                if (&m - m.adjoint()).norm() > 1e-12 * m.norm().max(1.0) {
                    return Err(key_err("matrix", "observable is not Hermitian"));
                }
                Ok(m)
            }
        }
    }

    /// Epsilon, or `e^{−2κ}` when only `kappa` is given.
    pub fn coupling(&self) -> Option<f64> {
        self.epsilon.or(self.kappa.map(|k| (-2.0 * k).exp()))
    }

    pub fn validate(&self) -> Result<()> {
        let cmd = self.command;
        finite("J", self.j)?;
        finite("h", self.h)?;
        if let Beta::Finite(b) = self.beta {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(key_err("beta", format!("must be finite and non-negative, got {b}")));
            }
        }
        if self.matrix.is_some() && self.observable() != ObservableChoice::Custom {
            return Err(key_err("matrix", "only allowed with X = \"custom\""));
        }
        if self.threads == Some(0) {
            return Err(key_err("threads", "must be positive"));
        }
        match cmd {
            Command::Restrict | Command::Potential => {
                let n = self.sites.ok_or_else(|| missing("N", cmd))?;
                if n == 0 {
                    return Err(key_err("N", "must be positive"));
                }
                let cap = match (cmd, self.beta) {
                    (Command::Potential, _) => crate::mobius_potential::MAX_SITES,
                    (_, Beta::Finite(_)) => MAX_THERMAL_SITES,
                    (_, Beta::Ground(_)) => MAX_GROUND_SITES,
                };
                if n > cap {
                    return Err(Error::Capability(format!("key `N`: {n} sites exceed the cap of {cap} for {}", cmd.name())));
                }
                if let Some(w) = &self.window {
                    if w.is_empty() || w.iter().any(|&s| s < 0 || s >= n as i64) {
                        return Err(key_err("window", format!("sites must lie in 0..{n}")));
                    }
                    let mut sorted = w.clone();
                    sorted.sort_unstable();
                    sorted.dedup();
                    if sorted.len() != w.len() {
                        return Err(key_err("window", "sites must be distinct"));
                    }
                }
                self.observable_matrix()?;
            }
            Command::Betamax => {
                if !(self.a > 0.0 && self.a.is_finite()) {
                    return Err(key_err("a", format!("must be positive, got {}", self.a)));
                }
            }
            Command::IsingLdp => {
                let g = self.g.ok_or_else(|| missing("g", cmd))?;
                finite("g", g)?;
                if (g.abs() - 1.0).abs() < 1e-12 {
                    return Err(key_err("g", "|g| = 1 is the critical point"));
                }
                if g.abs() < 1.0 {
                    return Err(key_err("g", format!("ordered phase |g| < 1 is not supported, got {g}")));
                }
                if self.n.is_empty() {
                    return Err(missing("n", cmd));
                }
                if self.t.is_empty() {
                    return Err(missing("t", cmd));
                }
                for &t in &self.t {
                    finite("t", t)?;
                }
                if let Some(&bad) = self.m.iter().find(|m| !(-1.0..=1.0).contains(*m)) {
                    return Err(key_err("m", format!("{bad} lies outside [−1, 1]")));
                }
                let nmax = *self.n.iter().max().unwrap();
                if self.n.contains(&0) {
                    return Err(key_err("n", "block sizes must be positive"));
                }
                if self.quadrature < 8 * nmax {
                    return Err(key_err("quadrature", format!("{} nodes are too few for n = {nmax} (need ≥ {})", self.quadrature, 8 * nmax)));
                }
            }
            Command::Locality => {
                let e = self.epsilon.ok_or_else(|| missing("epsilon", cmd))?;
                if !(0.0..1.0).contains(&e) {
                    return Err(key_err("epsilon", format!("must lie in [0, 1), got {e}")));
                }
                if self.l.is_empty() {
                    return Err(missing("L", cmd));
                }
                for &l in &self.l {
                    crate::locality_probe::ProbeSpec::new(e, l, self.buffer)
                        .map_err(|err| match err {
                            Error::Capability(m) => Error::Capability(format!("key `L`: {m}")),
                            other => key_err("L", other),
                        })?;
                }
            }
            Command::DysonCheck => {
                let b = self.beta.finite().ok_or_else(|| key_err("beta", "dyson-check needs a finite β"))?;
                if b <= 0.0 {
                    return Err(key_err("beta", "must be positive"));
                }
                let e = self.coupling().ok_or_else(|| missing("epsilon", cmd))?;
                if !(e >= 0.0 && e.is_finite()) {
                    return Err(key_err("epsilon", format!("must be finite and non-negative, got {e}")));
                }
                if !(self.h > 0.0) {
                    return Err(key_err("h", "must be positive"));
                }
                let n = self.sites.unwrap_or(3);
                if !(2..=MAX_DYSON_SITES).contains(&n) {
                    return Err(Error::Capability(format!("key `N`: {n} sites outside 2..={MAX_DYSON_SITES} for dyson-check")));
                }
                if self.order > 5 {
                    return Err(Error::Capability(format!("key `order`: {} exceeds 5", self.order)));
                }
                if self.kp_sites == 0 {
                    return Err(key_err("kp_sites", "must be positive"));
                }
                self.observable_matrix()?;
            }
            Command::Fcs => {
                if self.n.is_empty() {
                    return Err(missing("n", cmd));
                }
                if self.n.contains(&0) {
                    return Err(key_err("n", "ball radii must be positive"));
                }
                if let Some(x) = &self.x_v {
                    if self.n.len() != 1 {
                        return Err(key_err("x_V", "needs exactly one radius in `n`"));
                    }
                    if x.len() != 2 * (self.n[0] - 1) {
                        return Err(key_err("x_V", format!("needs {} labels for n = {}", 2 * (self.n[0] - 1), self.n[0])));
                    }
                    if x.contains(&0) {
                        return Err(key_err("x_V", "labels are 1-based"));
                    }
                } else if self.samples == 0 {
                    return Err(key_err("samples", "must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// Reads the config file (if any) as a JSON object.
pub fn read_config_file(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(Error::Config(format!("{} must contain a JSON object", path.display()))),
        Err(e) => Err(Error::Config(format!("{} is not valid JSON: {e}", path.display()))),
    }
}
