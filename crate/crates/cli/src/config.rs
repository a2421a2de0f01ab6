use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stpa_harness::analysis::DetectorParams;
use stpa_harness::perturb::{GridAxis, PerturbationSpec};
use stpa_harness::policy::{load_weights, BaselineParams, BaselinePolicy, MlpPolicy, Policy};
use stpa_harness::sim::{make_scenario, ScenarioParams, ScenarioSpec, SubtaskKind};
use stpa_harness::stpa::{default_drone_model, StpaModel};

/// `baseline` or `mlp:<weights file>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicySelector {
    Baseline,
    Mlp(PathBuf),
}

impl FromStr for PolicySelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "baseline" {
            return Ok(Self::Baseline);
        }
        match s.strip_prefix("mlp:") {
            Some(path) if !path.is_empty() => Ok(Self::Mlp(PathBuf::from(path))),
            _ => Err(format!("unknown policy `{s}`; expected `baseline` or `mlp:<path>`")),
        }
    }
}

impl std::fmt::Display for PolicySelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Baseline => f.write_str("baseline"),
            Self::Mlp(path) => write!(f, "mlp:{}", path.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSection {
    #[serde(default = "default_kind")]
    pub kind: SubtaskKind,
    #[serde(flatten)]
    pub params: ScenarioParams,
}

fn default_kind() -> SubtaskKind {
    SubtaskKind::ObstacleAvoidance
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self { kind: default_kind(), params: ScenarioParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Episodes in the main sweep, excluding pilot episodes.
    pub budget: usize,
    /// Pilot episodes per cell; 0 skips the pilot and splits the budget
    /// evenly.
    pub pilot_episodes: usize,
    pub min_replicates: usize,
    pub axes: Vec<GridAxis>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { budget: 20, pilot_episodes: 0, min_replicates: 1, axes: Vec::new() }
    }
}

/// Declarative run configuration, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub base_seed: u64,
    pub policy: String,
    pub threshold: f64,
    pub output_dir: PathBuf,
    /// Full scenario file; overrides `[scenario]` when set.
    pub scenario_file: Option<PathBuf>,
    /// STPA model file; the built-in drone model when unset.
    pub model_file: Option<PathBuf>,
    pub scenario: ScenarioSection,
    pub perturbation: PerturbationSpec,
    pub baseline: BaselineParams,
    pub detector: DetectorParams,
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            base_seed: 0,
            policy: "baseline".into(),
            threshold: 0.95,
            output_dir: PathBuf::from("out"),
            scenario_file: None,
            model_file: None,
            scenario: ScenarioSection::default(),
            perturbation: PerturbationSpec::default(),
            baseline: BaselineParams::default(),
            detector: DetectorParams::default(),
            sweep: SweepSection::default(),
        }
    }
}

pub fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        bail!("threshold must lie in (0, 1], got {threshold}");
    }
    Ok(())
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Everything a command needs, with files loaded and paths resolved
/// against the config file's directory.
pub struct Resolved {
    pub config: RunConfig,
    pub scenario: ScenarioSpec,
    pub model: StpaModel,
    pub policy: Box<dyn Policy>,
    pub config_hash: String,
}

/// What gets hashed: the effective inputs, including file contents.
#[derive(Serialize)]
struct HashInput<'a> {
    config: &'a RunConfig,
    scenario: &'a ScenarioSpec,
    model: &'a StpaModel,
    policy_digest: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Loads referenced files, builds the policy and computes the hash.
    /// `base_dir` anchors relative paths.
    pub fn resolve(mut self, base_dir: &Path) -> Result<Resolved> {
        check_threshold(self.threshold)?;
        self.perturbation.validate().context("invalid [perturbation]")?;

        let scenario = match &self.scenario_file {
            Some(file) => {
                let path = resolve(base_dir, file);
                let text =
                    std::fs::read_to_string(&path).with_context(|| format!("reading scenario {}", path.display()))?;
                let spec = ScenarioSpec::from_toml_str(&text)
                    .with_context(|| format!("parsing scenario {}", path.display()))?;
                spec.validate().context("invalid scenario")?;
                spec
            }
            None => make_scenario(self.scenario.kind, &self.scenario.params).context("invalid [scenario]")?,
        };

        let model = match &self.model_file {
            Some(file) => {
                let path = resolve(base_dir, file);
                StpaModel::load(&path).with_context(|| format!("loading model {}", path.display()))?
            }
            None => default_drone_model(),
        };

        let selector: PolicySelector = self.policy.parse().map_err(anyhow::Error::msg)?;
        let (policy, policy_digest): (Box<dyn Policy>, String) = match &selector {
            PolicySelector::Baseline => {
                let params = BaselineParams { a_max: scenario.dynamics.a_max, ..self.baseline };
                (Box::new(BaselinePolicy::new(params, scenario.lidar.rays())), "baseline".into())
            }
            PolicySelector::Mlp(file) => {
                let path = resolve(base_dir, file);
                let bytes = std::fs::read(&path).with_context(|| format!("reading weights {}", path.display()))?;
                let weights = load_weights(&path).with_context(|| format!("loading weights {}", path.display()))?;
                let policy = MlpPolicy::new(weights, scenario.dynamics.a_max).context("building MLP policy")?;
                (Box::new(policy), sha256_hex(&bytes))
            }
        };

        // The output location does not affect results, so it is not hashed.
        let hashed = RunConfig { output_dir: PathBuf::new(), ..self.clone() };
        let hash_text =
            toml::to_string(&HashInput { config: &hashed, scenario: &scenario, model: &model, policy_digest })
                .context("serializing config for hashing")?;
        let config_hash = sha256_hex(hash_text.as_bytes());
        self.output_dir = resolve(base_dir, &self.output_dir);
        Ok(Resolved { config: self, scenario, model, policy, config_hash })
    }
}
