use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::OptimizerConfig;
use crate::povm::{PovmKind, TetraPovm};
use crate::qstate::{BlochVector, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    LiXi,
    LiMoments,
    Ml,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::LiXi => "li-xi",
            Estimator::LiMoments => "li-moments",
            Estimator::Ml => "ml",
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "li-xi" => Ok(Estimator::LiXi),
            "li-moments" => Ok(Estimator::LiMoments),
            "ml" => Ok(Estimator::Ml),
            other => Err(Error::Config(format!("unknown estimator `{other}` (expected li-xi, li-moments or ml)"))),
        }
    }
}

/// The true source used to generate data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceSpec {
    /// Five angles in radians; values outside the canonical box are folded
    /// onto an equivalent canonical source.
    Angles {
        theta0: f64,
        phi0: f64,
        theta1: f64,
        phi1: f64,
        alpha: f64,
    },
    Bloch { a: [f64; 3], b: [f64; 3], p0: f64 },
    /// Bloch vectors given by their projections on the four tetrahedron
    /// directions, `x = (3/4) Σ (x·t_k) t_k`.
    TetraProjections { a_dot_t: [f64; 4], b_dot_t: [f64; 4], p0: f64 },
}

fn from_projections(proj: &[f64; 4], name: &str) -> Result<BlochVector> {
    let sum: f64 = proj.iter().sum();
    if sum.abs() > 1e-9 {
        return Err(Error::Config(format!("{name}: tetrahedron projections must sum to 0, got {sum}")));
    }
    let t = &TetraPovm::get().t;
    let v = (0..4).fold(BlochVector::default(), |acc, k| acc + t[k] * (0.75 * proj[k]));
    if (v.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("{name}: projections give a Bloch vector of length {}", v.norm())));
    }
    Ok(v)
}

fn unit(v: [f64; 3], name: &str) -> Result<BlochVector> {
    let b = BlochVector::from_array(v);
    if (b.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("{name}: Bloch vector length {} is not 1", b.norm())));
    }
    Ok(b)
}

impl SourceSpec {
    pub fn params(&self) -> Result<ParamVector> {
        match self {
            SourceSpec::Angles { theta0, phi0, theta1, phi1, alpha } => {
                let raw = [*theta0, *phi0, *theta1, *phi1, *alpha];
                if raw.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Config("source angles must be finite".into()));
                }
                Ok(ParamVector::from_raw(raw))
            }
            SourceSpec::Bloch { a, b, p0 } => ParamVector::from_bloch(unit(*a, "source.a")?, unit(*b, "source.b")?, *p0)
                .map_err(|e| Error::Config(e.to_string())),
            SourceSpec::TetraProjections { a_dot_t, b_dot_t, p0 } => ParamVector::from_bloch(
                from_projections(a_dot_t, "source.a_dot_t")?,
                from_projections(b_dot_t, "source.b_dot_t")?,
                *p0,
            )
            .map_err(|e| Error::Config(e.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlausibilityConfig {
    pub enabled: bool,
    /// Prior sample size `M`.
    pub samples: u64,
    /// Total counts at which to evaluate; empty means every entry of the schedule.
    pub checkpoints: Vec<u64>,
    pub chunk_size: u64,
}

impl Default for PlausibilityConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            samples: 10_000_000,
            checkpoints: Vec::new(),
            chunk_size: 1 << 16,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown format `{other}` (expected csv or json)"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub povm: PovmKind,
    pub source: SourceSpec,
    pub n_schedule: Vec<u64>,
    pub runs: usize,
    pub estimators: Vec<Estimator>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub plausibility: PlausibilityConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_schedule.is_empty() {
            return Err(Error::Config("n_schedule: must not be empty".into()));
        }
        if self.n_schedule[0] == 0 {
            return Err(Error::Config("n_schedule: entries must be positive".into()));
        }
        if let Some(w) = self.n_schedule.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!("n_schedule: must be strictly increasing ({} then {})", w[0], w[1])));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs: must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("estimators: at least one estimator is required".into()));
        }
        self.optimizer.validate()?;
        self.source.params()?;
        let pl = &self.plausibility;
        if pl.enabled {
            if !self.estimators.contains(&Estimator::Ml) {
                return Err(Error::Config("plausibility: requires the ml estimator".into()));
            }
            if pl.samples == 0 || pl.chunk_size == 0 {
                return Err(Error::Config("plausibility: samples and chunk_size must be positive".into()));
            }
            if let Some(n) = pl.checkpoints.iter().find(|n| !self.n_schedule.contains(n)) {
                return Err(Error::Config(format!("plausibility.checkpoints: {n} is not in n_schedule")));
            }
        }
        Ok(())
    }

    pub fn truth(&self) -> Result<ParamVector> {
        self.source.params()
    }

    pub fn plausibility_checkpoints(&self) -> Vec<u64> {
        if !self.plausibility.enabled {
            Vec::new()
        } else if self.plausibility.checkpoints.is_empty() {
            self.n_schedule.clone()
        } else {
            let mut c = self.plausibility.checkpoints.clone();
            c.sort_unstable();
            c.dedup();
            c
        }
    }
}
