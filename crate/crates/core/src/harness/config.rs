use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::regression::{NoiseMode, NoiseModel, Problem};
use crate::rng::{seeded_stream, standard_normal};
use crate::sgd::{random_unit, AlgorithmSpec};

/// Generator stream reserved for drawing per-run initial points.
const INIT_STREAM: u64 = 3;

fn default_scale() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

/// How the target parameter is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum WStarRule {
    Zero,
    Explicit { value: Vec<f64> },
    /// Population optimum of a deterministic-output chain.
    AgnosticOptimum,
    /// A uniformly random unit vector drawn from `seed`.
    RandomUnit { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDescriptor {
    pub chain: ChainSpec,
    pub noise: NoiseModel,
    pub w_star: WStarRule,
    #[serde(default)]
    pub norm_constrained: bool,
}

impl ProblemDescriptor {
    pub fn build(&self) -> Result<Problem> {
        let d = self.chain.dim();
        let problem = match &self.w_star {
            WStarRule::AgnosticOptimum => Problem::agnostic(self.chain.clone())?,
            rule => {
                let w = match rule {
                    WStarRule::Zero => vec![0.0; d],
                    WStarRule::Explicit { value } => value.clone(),
                    WStarRule::RandomUnit { seed } => random_unit(d, &mut seeded_stream(*seed, 0)),
                    WStarRule::AgnosticOptimum => unreachable!(),
                };
                Problem::new(self.chain.clone(), w, self.noise.clone())?
            }
        };
        if matches!(self.w_star, WStarRule::AgnosticOptimum)
            && self.noise != NoiseModel::AgnosticDeterministic
        {
            return Err(Error::invalid(
                "the agnostic_optimum rule needs the agnostic_deterministic noise model",
            ));
        }
        if self.norm_constrained {
            problem.with_norm_constraint()
        } else {
            Ok(problem)
        }
    }
}

/// Starting point of each run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum InitRule {
    #[default]
    Zero,
    Optimum,
    Explicit { value: Vec<f64> },
    /// `N(0, scale^2 I)`, drawn per run.
    RandomNormal {
        #[serde(default = "default_scale")]
        scale: f64,
    },
    /// `w*` plus a uniformly random unit vector, drawn per run.
    OptimumPlusUnit,
}

impl InitRule {
    pub fn initial_point(&self, problem: &Problem, run_seed: u64) -> Result<Vec<f64>> {
        let d = problem.dim();
        let mut rng = seeded_stream(run_seed, INIT_STREAM);
        Ok(match self {
            InitRule::Zero => vec![0.0; d],
            InitRule::Optimum => problem.w_star().to_vec(),
            InitRule::Explicit { value } => {
                if value.len() != d {
                    return Err(Error::invalid("initial point has the wrong dimension"));
                }
                value.clone()
            }
            InitRule::RandomNormal { scale } => {
                (0..d).map(|_| scale * standard_normal(&mut rng)).collect()
            }
            InitRule::OptimumPlusUnit => {
                let u = random_unit(d, &mut rng);
                problem.w_star().iter().zip(&u).map(|(a, b)| a + b).collect()
            }
        })
    }
}

/// Which part of the error a run measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    /// Noisy labels from the configured start.
    #[default]
    Full,
    /// Noise-free labels from the configured start.
    Bias,
    /// Noisy labels from `w*`.
    Variance,
}

impl Component {
    pub fn noise_mode(self) -> NoiseMode {
        match self {
            Component::Bias => NoiseMode::Suppressed,
            Component::Full | Component::Variance => NoiseMode::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub problem: ProblemDescriptor,
    pub algorithms: Vec<AlgorithmSpec>,
    /// Samples per run, `T`.
    pub horizon: usize,
    pub num_runs: usize,
    pub seed: u64,
    #[serde(default)]
    pub init: InitRule,
    #[serde(default)]
    pub component: Component,
    /// Sample counts at which excess risk is recorded; geometric (x1.5 from
    /// 100) when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub svg: bool,
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_runs == 0 {
            return Err(Error::invalid("num_runs must be >= 1"));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be >= 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::invalid("at least one algorithm is required"));
        }
        if let Some(points) = &self.checkpoints {
            if points.is_empty() || points[0] == 0 {
                return Err(Error::invalid("checkpoints must be non-empty and positive"));
            }
            crate::sgd::validate_checkpoints(points, self.horizon)?;
        }
        Ok(())
    }

    pub fn checkpoint_schedule(&self) -> Vec<usize> {
        self.checkpoints
            .clone()
            .unwrap_or_else(|| geometric_checkpoints(self.horizon))
    }

    /// SHA-256 of the canonical JSON form, ignoring the output location.
    pub fn config_hash(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(map) = v.as_object_mut() {
            map.remove("output");
        }
        let mut text = String::new();
        canonical_json(&v, &mut text);
        let digest = Sha256::digest(text.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// `100, 150, 225, ...` (rounded, strictly increasing) up to and including
/// `horizon`.
pub fn geometric_checkpoints(horizon: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut c = 100.0f64;
    while c.round() < horizon as f64 {
        let v = c.round() as usize;
        if out.last() != Some(&v) {
            out.push(v);
        }
        c *= 1.5;
    }
    out.push(horizon);
    out
}

/// JSON with object keys sorted and no whitespace.
pub(crate) fn canonical_json(v: &serde_json::Value, out: &mut String) {
    use serde_json::Value;
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push(':');
                canonical_json(&map[*k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                canonical_json(item, out);
            }
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}
