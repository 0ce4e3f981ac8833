//! Experiment configuration, read from JSON.

use std::fmt;
use std::path::{Path, PathBuf};

use chemnmf::BarrierParams;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{resolve, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Squared-Euclidean Lee–Seung NMF.
    Regular,
    /// Single-layer α-NMF.
    Alpha,
    /// Multi-layer α-NMF with bounded initialisation.
    Chem,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Regular => "regular",
            Method::Alpha => "alpha",
            Method::Chem => "chem",
        })
    }
}

/// A noise grid entry: `"clean"` or an SNR in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    Clean,
    Db(f64),
}

impl fmt::Display for NoiseLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseLevel::Clean => f.write_str("clean"),
            NoiseLevel::Db(db) => write!(f, "{db}"),
        }
    }
}

impl Serialize for NoiseLevel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            NoiseLevel::Clean => s.serialize_str("clean"),
            NoiseLevel::Db(db) => s.serialize_f64(*db),
        }
    }
}

impl<'de> Deserialize<'de> for NoiseLevel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Num(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Num(db) => Ok(NoiseLevel::Db(db)),
            Raw::Text(t) if t.eq_ignore_ascii_case("clean") => Ok(NoiseLevel::Clean),
            Raw::Text(t) => t
                .trim_end_matches("dB")
                .trim()
                .parse()
                .map(NoiseLevel::Db)
                .map_err(|_| serde::de::Error::custom(format!("bad noise level {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    pub count: usize,
    #[serde(default)]
    pub base: u64,
}

impl SeedSpec {
    pub fn seeds(&self) -> impl Iterator<Item = u64> {
        let base = self.base;
        (0..self.count as u64).map(move |i| base + i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansParams {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

fn default_methods() -> Vec<Method> {
    vec![Method::Regular, Method::Alpha, Method::Chem]
}

fn default_alpha() -> Vec<f64> {
    vec![0.01, 0.25, 0.5, 0.75, 0.99]
}

fn default_bf() -> Vec<f64> {
    vec![0.01, 0.1, 0.5]
}

fn default_noise() -> Vec<NoiseLevel> {
    vec![NoiseLevel::Clean]
}

fn one_or_many<'de, D, T>(d: D) -> Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match Raw::deserialize(d)? {
        Raw::One(v) => vec![v],
        Raw::Many(v) => v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset manifest; relative paths resolve against the config file.
    pub dataset: PathBuf,
    #[serde(default = "default_methods", alias = "method", deserialize_with = "one_or_many")]
    pub methods: Vec<Method>,
    /// Layer ranks, largest first. Defaults to `[4k, 2k, k]` for `k` classes.
    #[serde(default)]
    pub ranks: Option<Vec<usize>>,
    #[serde(default = "default_alpha")]
    pub alpha: Vec<f64>,
    #[serde(default = "default_bf")]
    pub bf: Vec<f64>,
    #[serde(default = "default_noise")]
    pub noise: Vec<NoiseLevel>,
    pub seeds: SeedSpec,
    #[serde(default)]
    pub kmeans: KMeansParams,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub barrier: BarrierParams,
    pub output_dir: PathBuf,
    /// Fill the `ms` column with wall-clock time. Off by default so reruns
    /// produce identical files.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentConfig {
    /// Reads and validates a config, resolving relative paths against its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.dataset = resolve(base, &cfg.dataset);
        cfg.output_dir = resolve(base, &cfg.output_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let empty = [
            ("methods", self.methods.is_empty()),
            ("alpha", self.alpha.is_empty()),
            ("bf", self.bf.is_empty()),
            ("noise", self.noise.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(CliError::config(format!("grid {name} is empty")));
        }
        if self.seeds.count == 0 {
            return Err(CliError::config("seeds.count must be at least 1"));
        }
        for &a in &self.alpha {
            if !a.is_finite() || a == 0.0 {
                return Err(CliError::config(format!("alpha {a} is not usable")));
            }
        }
        for &b in &self.bf {
            if !(0.0..=1.0).contains(&b) {
                return Err(CliError::config(format!("bf {b} outside [0, 1]")));
            }
        }
        for n in &self.noise {
            if let NoiseLevel::Db(db) = n {
                if !db.is_finite() {
                    return Err(CliError::config(format!("noise level {db} is not finite")));
                }
            }
        }
        if let Some(r) = &self.ranks {
            if r.is_empty() || r.contains(&0) || r.windows(2).any(|w| w[1] > w[0]) {
                return Err(CliError::config(format!(
                    "ranks {r:?} must be positive and non-increasing"
                )));
            }
        }
        if self.kmeans.restarts == 0 || self.kmeans.max_iter == 0 {
            return Err(CliError::config("kmeans restarts and max_iter must be positive"));
        }
        if self.solver.max_iter == 0 || self.solver.tol.is_nan() || self.solver.tol <= 0.0 {
            return Err(CliError::config("solver max_iter and tol must be positive"));
        }
        self.barrier.validate()?;
        Ok(())
    }

    pub fn ranks_for(&self, k: usize) -> Vec<usize> {
        self.ranks.clone().unwrap_or_else(|| vec![4 * k, 2 * k, k])
    }
}
