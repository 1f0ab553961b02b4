//! Experiment configuration: flat `key = value` files merged with
//! command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use kuramoto_core::coupling::centered_normal_frequencies;
use kuramoto_core::{FrequencyVector, OrientedGraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::failure::Failure;

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    File(PathBuf),
    Generator { name: String, n: usize },
}

impl GraphSource {
    pub fn parse(s: &str) -> Result<Self, Failure> {
        let Some(spec) = s.strip_prefix("gen:") else {
            return Ok(Self::File(PathBuf::from(s)));
        };
        let (name, n) = spec
            .split_once(':')
            .ok_or_else(|| Failure::config(format!("generator must be gen:<name>:<N>, got {s}")))?;
        if !matches!(name, "complete" | "path" | "cycle" | "star") {
            return Err(Failure::config(format!("unknown generator {name}")));
        }
        let n = n
            .parse()
            .map_err(|_| Failure::config(format!("bad vertex count in {s}")))?;
        Ok(Self::Generator { name: name.to_string(), n })
    }

    pub fn load(&self) -> Result<OrientedGraph, Failure> {
        let g = match self {
            Self::File(path) => OrientedGraph::parse_edge_list(&read(path)?)?,
            Self::Generator { name, n } => match name.as_str() {
                "complete" => OrientedGraph::complete(*n)?,
                "path" => OrientedGraph::path(*n)?,
                "cycle" => OrientedGraph::cycle(*n)?,
                _ => OrientedGraph::star(*n)?,
            },
        };
        Ok(g)
    }
}

impl fmt::Display for GraphSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::File(p) => write!(f, "{}", p.display()),
            Self::Generator { name, n } => write!(f, "gen:{name}:{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OmegaSource {
    Zero,
    Normal(f64),
    Values(Vec<f64>),
    File(PathBuf),
}

impl OmegaSource {
    pub fn parse(s: &str) -> Result<Self, Failure> {
        if s == "zero" {
            return Ok(Self::Zero);
        }
        if let Some(sigma) = s.strip_prefix("normal:") {
            let sigma: f64 = sigma
                .parse()
                .map_err(|_| Failure::config(format!("bad sigma in {s}")))?;
            if !(sigma.is_finite() && sigma >= 0.0) {
                return Err(Failure::config(format!("sigma must be non-negative, got {sigma}")));
            }
            return Ok(Self::Normal(sigma));
        }
        if let Some(list) = s.strip_prefix("values:") {
            return parse_numbers(list).map(Self::Values);
        }
        Ok(Self::File(PathBuf::from(s)))
    }

    pub fn is_random(&self) -> bool {
        matches!(self, Self::Normal(_))
    }

    /// Frequencies for `n` oscillators; random sources draw from `rng`.
    pub fn realize(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<FrequencyVector, Failure> {
        let omega = match self {
            Self::Zero => FrequencyVector::zeros(n),
            Self::Normal(sigma) => centered_normal_frequencies(n, *sigma, rng)?,
            Self::Values(v) => FrequencyVector::new(v.clone())?,
            Self::File(path) => FrequencyVector::new(parse_numbers(&read(path)?)?)?,
        };
        if omega.len() != n {
            return Err(Failure::config(format!(
                "omega has {} entries but the graph has {n} vertices",
                omega.len()
            )));
        }
        Ok(omega)
    }
}

impl fmt::Display for OmegaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "zero"),
            Self::Normal(s) => write!(f, "normal:{s}"),
            Self::Values(v) => {
                let parts: Vec<String> = v.iter().map(f64::to_string).collect();
                write!(f, "values:{}", parts.join(","))
            }
            Self::File(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingSpec {
    Value(f64),
    Range { lo: f64, hi: f64, steps: usize },
}

impl CouplingSpec {
    /// `val`, `lo:hi` (one step per end) or `lo:hi:steps`.
    pub fn parse(s: &str) -> Result<Self, Failure> {
        let bad = || Failure::config(format!("coupling must be <val> or <lo>:<hi>[:<steps>], got {s}"));
        let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
        let parts: Vec<&str> = s.split(':').collect();
        let spec = match parts.as_slice() {
            [v] => Self::Value(num(v)?),
            [lo, hi] => Self::Range { lo: num(lo)?, hi: num(hi)?, steps: 2 },
            [lo, hi, steps] => Self::Range {
                lo: num(lo)?,
                hi: num(hi)?,
                steps: steps.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        match spec {
            Self::Value(k) if !(k.is_finite() && k > 0.0) => Err(Failure::config(format!("K must be positive, got {k}"))),
            Self::Range { lo, hi, steps } if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi && steps >= 1) => {
                Err(Failure::config(format!("invalid coupling range {s}")))
            }
            _ => Ok(spec),
        }
    }

    pub fn single(&self) -> Result<f64, Failure> {
        match self {
            Self::Value(k) => Ok(*k),
            Self::Range { .. } => Err(Failure::config("this command needs a single --k value")),
        }
    }

    /// Evenly spaced grid, endpoints included.
    pub fn grid(&self) -> Vec<f64> {
        match *self {
            Self::Value(k) => vec![k],
            Self::Range { lo, steps: 1, .. } => vec![lo],
            Self::Range { lo, hi, steps } => (0..steps)
                .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
                .collect(),
        }
    }
}

impl fmt::Display for CouplingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Value(k) => write!(f, "{k}"),
            Self::Range { lo, hi, steps } => write!(f, "{lo}:{hi}:{steps}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialPhases {
    Random,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Fully resolved configuration. Every field has a value; `Option` marks
/// quantities derived from the instance when absent.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub omega: OmegaSource,
    pub k: Option<CouplingSpec>,
    pub seed: u64,
    pub h: f64,
    pub t_end: Option<f64>,
    pub record_every: usize,
    pub theta0: InitialPhases,
    pub replicates: usize,
    pub jobs: usize,
    pub tol_k: f64,
    pub tail_fraction: f64,
    pub residual_tol: f64,
    pub infnorm_samples: usize,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
}

const KEYS: [&str; 18] = [
    "graph",
    "omega",
    "k",
    "seed",
    "h",
    "t_end",
    "record_every",
    "theta0",
    "replicates",
    "jobs",
    "tol_k",
    "tail_fraction",
    "residual_tol",
    "infnorm_samples",
    "fp_tol",
    "fp_max_iter",
    "format",
    "out",
];

/// Unresolved `key → value` pairs, later entries overriding earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig(BTreeMap<String, String>);

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Failure::config(format!("config line {}: expected key = value", i + 1)))?;
            let key = key.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(Failure::config(format!("config line {}: unknown key {key}", i + 1)));
            }
            map.insert(key, value.trim().to_string());
        }
        Ok(Self(map))
    }

    pub fn from_file(path: &Path) -> Result<Self, Failure> {
        Self::parse(&read(path)?)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.0.insert(key.to_string(), value.to_string());
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, Failure> {
        self.get(key)
            .map(|v| v.parse().map_err(|_| Failure::config(format!("invalid value for {key}: {v}"))))
            .transpose()
    }

    pub fn resolve(&self) -> Result<ExperimentConfig, Failure> {
        let graph = GraphSource::parse(self.get("graph").ok_or_else(|| Failure::config("no graph source given"))?)?;
        let omega = OmegaSource::parse(self.get("omega").unwrap_or("zero"))?;
        let seed = match self.number("seed")? {
            Some(s) => s,
            None if omega.is_random() => {
                return Err(Failure::config("a seed is required when omega is random"));
            }
            None => 0,
        };
        let theta0 = match self.get("theta0").unwrap_or("random") {
            "random" => InitialPhases::Random,
            "zero" => InitialPhases::Zero,
            other => return Err(Failure::config(format!("theta0 must be random or zero, got {other}"))),
        };
        let format = match self.get("format").unwrap_or("json") {
            "json" => Format::Json,
            "csv" => Format::Csv,
            other => return Err(Failure::config(format!("format must be json or csv, got {other}"))),
        };
        let cfg = ExperimentConfig {
            graph,
            omega,
            k: self.get("k").map(CouplingSpec::parse).transpose()?,
            seed,
            h: self.number("h")?.unwrap_or(kuramoto_core::dynamics::DEFAULT_STEP),
            t_end: self.number("t_end")?,
            record_every: self.number("record_every")?.unwrap_or(1),
            theta0,
            replicates: self.number("replicates")?.unwrap_or(1),
            jobs: self.number("jobs")?.unwrap_or(1),
            tol_k: self.number("tol_k")?.unwrap_or(1e-3),
            tail_fraction: self
                .number("tail_fraction")?
                .unwrap_or(kuramoto_core::observables::DEFAULT_TAIL_FRACTION),
            residual_tol: self
                .number("residual_tol")?
                .unwrap_or(kuramoto_core::observables::DEFAULT_RESIDUAL_TOL),
            infnorm_samples: self.number("infnorm_samples")?.unwrap_or(200),
            fp_tol: self.number("fp_tol")?.unwrap_or(1e-10),
            fp_max_iter: self.number("fp_max_iter")?.unwrap_or(500),
            format,
            out: self.get("out").map(PathBuf::from),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), Failure> {
        let positive = [
            ("h", self.h),
            ("tol_k", self.tol_k),
            ("residual_tol", self.residual_tol),
            ("fp_tol", self.fp_tol),
        ];
        for (key, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Failure::config(format!("{key} must be positive, got {value}")));
            }
        }
        if let Some(t) = self.t_end {
            if !(t.is_finite() && t >= self.h) {
                return Err(Failure::config(format!("t_end must be at least h, got {t}")));
            }
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Failure::config("tail_fraction must be in (0, 1]"));
        }
        let counts = [
            ("record_every", self.record_every),
            ("replicates", self.replicates),
            ("jobs", self.jobs),
            ("infnorm_samples", self.infnorm_samples),
            ("fp_max_iter", self.fp_max_iter),
        ];
        for (key, value) in counts {
            if value == 0 {
                return Err(Failure::config(format!("{key} must be at least 1")));
            }
        }
        Ok(())
    }

    /// Serializes every resolved option, one `key = value` per line.
    pub fn to_kv(&self) -> String {
        let mut lines = vec![
            format!("graph = {}", self.graph),
            format!("omega = {}", self.omega),
        ];
        if let Some(k) = &self.k {
            lines.push(format!("k = {k}"));
        }
        lines.push(format!("seed = {}", self.seed));
        lines.push(format!("h = {}", self.h));
        if let Some(t) = self.t_end {
            lines.push(format!("t_end = {t}"));
        }
        lines.push(format!("record_every = {}", self.record_every));
        lines.push(format!(
            "theta0 = {}",
            match self.theta0 {
                InitialPhases::Random => "random",
                InitialPhases::Zero => "zero",
            }
        ));
        lines.push(format!("replicates = {}", self.replicates));
        lines.push(format!("jobs = {}", self.jobs));
        lines.push(format!("tol_k = {}", self.tol_k));
        lines.push(format!("tail_fraction = {}", self.tail_fraction));
        lines.push(format!("residual_tol = {}", self.residual_tol));
        lines.push(format!("infnorm_samples = {}", self.infnorm_samples));
        lines.push(format!("fp_tol = {}", self.fp_tol));
        lines.push(format!("fp_max_iter = {}", self.fp_max_iter));
        lines.push(format!(
            "format = {}",
            match self.format {
                Format::Json => "json",
                Format::Csv => "csv",
            }
        ));
        if let Some(out) = &self.out {
            lines.push(format!("out = {}", out.display()));
        }
        lines.join("\n") + "\n"
    }

    /// Generator for replicate `index`: frequencies first, then initial phases.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))
}

fn parse_numbers(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Failure::config(format!("not a number: {t}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(text: &str) -> RawConfig {
        RawConfig::parse(text).unwrap()
    }

    #[test]
    fn round_trip_makes_defaults_explicit() {
        let cfg = raw("graph = gen:cycle:6\nomega = normal:0.3\nseed = 7\nk = 0.5:4:8\n").resolve().unwrap();
        let text = cfg.to_kv();
        assert!(text.contains("h = 0.01"));
        assert_eq!(raw(&text).resolve().unwrap(), cfg);
        assert_eq!(raw(&text).resolve().unwrap().to_kv(), text);
    }

    #[test]
    fn round_trip_explicit_values() {
        let cfg = raw("graph = g.txt\nomega = values:1,-0.5,-0.5\nk = 2.5\nt_end = 30\nout = res\n").resolve().unwrap();
        assert_eq!(raw(&cfg.to_kv()).resolve().unwrap(), cfg);
    }

    #[test]
    fn random_omega_needs_seed() {
        assert!(raw("graph = gen:path:3\nomega = normal:1").resolve().is_err());
        assert_eq!(raw("graph = gen:path:3").resolve().unwrap().seed, 0);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(RawConfig::parse("graph gen:path:3").is_err());
        assert!(RawConfig::parse("colour = red").is_err());
        assert!(raw("omega = zero").resolve().is_err());
        assert!(raw("graph = gen:wheel:5").resolve().is_err());
        assert!(raw("graph = gen:path:3\nk = -1").resolve().is_err());
        assert!(raw("graph = gen:path:3\nh = 0").resolve().is_err());
        assert!(raw("graph = gen:path:3\ntheta0 = spiral").resolve().is_err());
    }

    #[test]
    fn coupling_grid() {
        assert_eq!(CouplingSpec::parse("1:2:3").unwrap().grid(), vec![1.0, 1.5, 2.0]);
        assert_eq!(CouplingSpec::parse("3").unwrap().grid(), vec![3.0]);
        assert!(CouplingSpec::parse("1:2:3").unwrap().single().is_err());
        assert!(CouplingSpec::parse("2:1").is_err());
    }

    #[test]
    fn omega_sources() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let w = OmegaSource::parse("values:1, 0 ,-1").unwrap().realize(3, &mut rng).unwrap();
        assert_eq!(w.as_vector().as_slice(), &[1.0, 0.0, -1.0]);
        assert!(OmegaSource::parse("values:1,2").unwrap().realize(3, &mut rng).is_err());
        let w = OmegaSource::parse("normal:0.5").unwrap().realize(4, &mut rng).unwrap();
        assert!(w.is_centered());
    }
}
