//! Experiment configuration.
//!
//! ```toml
//! trials = 50
//! seed = 1000
//!
//! [model]
//! sizes = [350, 250]
//! counts = [1, 1]
//! p = 0.85
//! q = 0.15
//! epsilon = 0.01
//!
//! [recovery]
//! noise_constant = 0.1
//!
//! [sweep]
//! n = [300, 600]
//!
//! [output]
//! path = "results.csv"
//! format = "csv"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use planted::model::{build_partition, DistributionSpec, ModelParams, PartitionSpec};
use planted::recovery::RecoveryConfig;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Graph,
    General,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default)]
    pub kind: ModelKind,
    /// Defaults to the sum of `sizes`.
    pub n: Option<usize>,
    pub sizes: Vec<usize>,
    pub counts: Vec<usize>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Defaults to the honest separation constant of the spec.
    pub c: Option<f64>,
    pub d1: Option<String>,
    pub d2: Option<String>,
    pub d3: Option<String>,
    #[serde(default = "default_true")]
    pub permute: bool,
}

fn default_epsilon() -> f64 {
    0.01
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverySection {
    /// `nu`; defaults to 7 (graph) or `2 sigma + 6 kappa` (general).
    pub noise_constant: Option<f64>,
    pub uniform: Option<usize>,
    #[serde(default)]
    pub auto_counts: bool,
    /// Fail the run when a sweep point's exact-recovery fraction falls below this.
    pub min_success: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Cluster sizes are rescaled proportionally to each `n`.
    pub n: Option<Vec<usize>>,
    pub p: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    /// Size profiles, paired index by index with `counts`.
    pub sizes: Option<Vec<Vec<usize>>>,
    pub counts: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    #[serde(default)]
    pub allowed_violations: usize,
    /// Largest pooled violation rate for `degree-events`.
    #[serde(default = "default_max_rate")]
    pub max_rate: f64,
}

impl Default for CertifySection {
    fn default() -> Self {
        Self {
            allowed_violations: 0,
            max_rate: default_max_rate(),
        }
    }
}

fn default_max_rate() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSection,
    #[serde(default)]
    pub recovery: RecoverySection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub certify: CertifySection,
}

fn default_trials() -> usize {
    1
}

/// One fully resolved grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub spec: PartitionSpec,
    pub params: ModelParams,
    /// `(d1, d2, d3)` for the general model.
    pub laws: Option<[DistributionSpec; 3]>,
}

impl SweepPoint {
    pub fn recovery_config(&self, section: &RecoverySection) -> RecoveryConfig {
        let cfg = match &self.laws {
            None => RecoveryConfig::bernoulli(self.params.p, self.params.q, self.params.epsilon),
            Some([d1, d2, d3]) => RecoveryConfig::general(d1, d2, d3, self.params.epsilon),
        };
        let cfg = cfg
            .with_counts(self.spec.supercluster_counts())
            .with_separation(self.params.c);
        match section.noise_constant {
            Some(nu) => cfg.with_noise_constant(nu),
            None => cfg,
        }
    }
}

fn config_err(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}

fn non_empty<T>(name: &str, list: &Option<Vec<T>>) -> Result<(), CliError> {
    match list {
        Some(l) if l.is_empty() => Err(config_err(format!("sweep.{name} must not be empty"))),
        _ => Ok(()),
    }
}

/// Sizes scaled from `sum(sizes)` to `n`, flooring and handing the remainder
/// to the largest clusters so the order is preserved.
pub fn rescale(sizes: &[usize], n: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    if total == n || total == 0 {
        return sizes.to_vec();
    }
    let mut out: Vec<usize> = sizes.iter().map(|&s| s * n / total).collect();
    let short = n - out.iter().sum::<usize>();
    for s in out.iter_mut().take(short) {
        *s += 1;
    }
    out
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.trials == 0 {
            return Err(config_err("trials must be at least 1"));
        }
        let s = &self.sweep;
        non_empty("n", &s.n)?;
        non_empty("p", &s.p)?;
        non_empty("q", &s.q)?;
        non_empty("sizes", &s.sizes)?;
        non_empty("counts", &s.counts)?;
        if let (Some(sizes), Some(counts)) = (&s.sizes, &s.counts) {
            if counts.len() != sizes.len() && counts.len() != 1 {
                return Err(config_err("sweep.counts must have one entry per size profile, or exactly one"));
            }
        }
        if self.model.kind == ModelKind::General && (s.p.is_some() || s.q.is_some()) {
            return Err(config_err("p and q cannot be swept for the general model; they are the means of d1 and d2"));
        }
        if let Some(r) = self.recovery.min_success {
            if !(0.0..=1.0).contains(&r) {
                return Err(config_err("recovery.min_success must lie in [0, 1]"));
            }
        }
        self.points().map(|_| ())
    }

    fn laws(&self) -> Result<Option<[DistributionSpec; 3]>, CliError> {
        if self.model.kind == ModelKind::Graph {
            return Ok(None);
        }
        let parse = |name: &str, v: &Option<String>| -> Result<DistributionSpec, CliError> {
            v.as_deref()
                .ok_or_else(|| config_err(format!("model.{name} is required for the general model")))?
                .parse()
                .map_err(|e: planted::model::ModelError| config_err(format!("model.{name}: {e}")))
        };
        Ok(Some([
            parse("d1", &self.model.d1)?,
            parse("d2", &self.model.d2)?,
            parse("d3", &self.model.d3)?,
        ]))
    }

    /// Grid points in a fixed order: size profile, then `n`, then `p`, then `q`.
    pub fn points(&self) -> Result<Vec<SweepPoint>, CliError> {
        let m = &self.model;
        let laws = self.laws()?;
        let (base_p, base_q) = match &laws {
            Some([d1, d2, _]) => (d1.mean(), d2.mean()),
            None => (
                m.p.ok_or_else(|| config_err("model.p is required"))?,
                m.q.ok_or_else(|| config_err("model.q is required"))?,
            ),
        };
        let s = &self.sweep;
        let profiles: Vec<(Vec<usize>, Vec<usize>)> = match &s.sizes {
            None => vec![(m.sizes.clone(), s.counts.as_ref().map_or(m.counts.clone(), |c| c[0].clone()))],
            Some(sizes) => sizes
                .iter()
                .enumerate()
                .map(|(i, sz)| {
                    let counts = match &s.counts {
                        None => m.counts.clone(),
                        Some(c) if c.len() == 1 => c[0].clone(),
                        Some(c) => c[i].clone(),
                    };
                    (sz.clone(), counts)
                })
                .collect(),
        };
        let ns: Vec<Option<usize>> = match &s.n {
            None => vec![m.n],
            Some(ns) => ns.iter().copied().map(Some).collect(),
        };
        let ps = s.p.clone().unwrap_or_else(|| vec![base_p]);
        let qs = s.q.clone().unwrap_or_else(|| vec![base_q]);

        let mut points = Vec::new();
        for (sizes, counts) in &profiles {
            for &n in &ns {
                let sizes = match (n, s.n.is_some()) {
                    (Some(n), true) => rescale(sizes, n),
                    _ => sizes.clone(),
                };
                let n = n.unwrap_or_else(|| sizes.iter().sum());
                let spec = build_partition(n, &sizes, counts).map_err(|e| config_err(format!("model: {e}")))?;
                for &p in &ps {
                    for &q in &qs {
                        let c = m.c.unwrap_or_else(|| spec.separation_constant());
                        let params = ModelParams::new(p, q, m.epsilon, c);
                        if laws.is_none() {
                            params.check_probabilities().map_err(|e| config_err(format!("model: {e}")))?;
                        }
                        points.push(SweepPoint {
                            index: points.len(),
                            spec: spec.clone(),
                            params,
                            laws,
                        });
                    }
                }
            }
        }
        Ok(points)
    }

    /// `base + point * trials + trial`.
    pub fn trial_seed(&self, point: usize, trial: usize) -> u64 {
        self.seed
            .wrapping_add((point * self.trials) as u64)
            .wrapping_add(trial as u64)
    }
}
