use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use satstream::{BaselineStrategy, CandidateMode, InnerSearch, PredictorKind, SimConfig, TraceGenConfig, VideoSpec};

/// Environment variable naming the output directory when neither the
/// config file nor `--out` does.
pub const OUT_DIR_ENV: &str = "SATSTREAM_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "satstream-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ControllerSpec {
    Separate(BaselineStrategy),
    Joint(CandidateMode),
    Centralized,
    OfflineOptimal,
}

impl ControllerSpec {
    pub fn is_separate(&self) -> bool {
        matches!(self, Self::Separate(_))
    }

    pub fn is_joint(&self) -> bool {
        matches!(self, Self::Joint(_))
    }
}

impl fmt::Display for ControllerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Separate(s) => write!(f, "separate:{}", s.as_str()),
            Self::Joint(m) => write!(f, "joint:{}", m.as_str()),
            Self::Centralized => f.write_str("centralized"),
            Self::OfflineOptimal => f.write_str("offline-optimal"),
        }
    }
}

impl FromStr for ControllerSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        match s.split_once(':') {
            Some(("separate", b)) => Ok(Self::Separate(b.parse().map_err(|e: satstream::Error| e.to_string())?)),
            Some(("joint", m)) => Ok(Self::Joint(m.parse().map_err(|e: satstream::Error| e.to_string())?)),
            None if s == "centralized" => Ok(Self::Centralized),
            None if s == "offline-optimal" || s == "offline" => Ok(Self::OfflineOptimal),
            _ => Err(format!(
                "unknown controller `{s}` (expected separate:{{mvt|mrss|mb}}, joint:{{dual|manifold}}, centralized or offline-optimal)"
            )),
        }
    }
}

impl Serialize for ControllerSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ControllerSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TraceSource {
    /// One generated trace per repetition, seeded `seed_base + rep`.
    Generate(TraceGenConfig),
    /// Trace CSV files written by `gen-traces` (or by hand).
    Load(Vec<PathBuf>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundConfig {
    pub users: usize,
    /// Per-user demand is uniform in `[0, max_demand)` of capacity.
    pub max_demand: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub traces: TraceSource,
    pub video: VideoSpec,
    pub sim: SimConfig,
    pub controllers: Vec<ControllerSpec>,
    pub predictor: PredictorKind,
    pub users: Vec<usize>,
    pub repetitions: usize,
    pub seed_base: u64,
    pub output_dir: Option<PathBuf>,
    pub horizon: usize,
    pub inner_search: InnerSearch,
    pub background: BackgroundConfig,
    pub dump_candidates: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            traces: TraceSource::Generate(TraceGenConfig::default()),
            video: VideoSpec::default(),
            sim: SimConfig::default(),
            controllers: vec![
                ControllerSpec::Separate(BaselineStrategy::Mb),
                ControllerSpec::Joint(CandidateMode::Dual),
            ],
            predictor: PredictorKind::Robust,
            users: vec![1],
            repetitions: 1,
            seed_base: 0,
            output_dir: None,
            horizon: satstream::plan::DEFAULT_HORIZON,
            inner_search: InnerSearch::default(),
            background: BackgroundConfig::default(),
            dump_candidates: false,
        }
    }
}

/// Values given on the command line; each one that is set wins over the
/// config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub controllers: Vec<ControllerSpec>,
    pub predictor: Option<PredictorKind>,
    pub users: Vec<usize>,
    pub dump_candidates: bool,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Flags beat the file; the environment only fills an output directory
    /// nobody set.
    pub fn apply(mut self, o: &Overrides, env_out: Option<PathBuf>) -> Self {
        if let Some(out) = &o.out {
            self.output_dir = Some(out.clone());
        }
        if self.output_dir.is_none() {
            self.output_dir = Some(env_out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)));
        }
        if let Some(seed) = o.seed {
            self.seed_base = seed;
        }
        if !o.controllers.is_empty() {
            self.controllers = o.controllers.clone();
        }
        if let Some(p) = o.predictor {
            self.predictor = p;
        }
        if !o.users.is_empty() {
            self.users = o.users.clone();
        }
        self.dump_candidates |= o.dump_candidates;
        self
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.controllers.is_empty() {
            bail!("at least one controller is required");
        }
        if self.users.is_empty() || self.users.contains(&0) {
            bail!("user counts must be non-empty and positive");
        }
        if self.repetitions == 0 {
            bail!("repetitions must be at least 1");
        }
        if self.horizon == 0 {
            bail!("horizon must be at least 1");
        }
        if let InnerSearch::Dp { dt_s } = self.inner_search {
            if !(dt_s > 0.0) {
                bail!("inner_search dp dt_s must be positive");
            }
        }
        if !(0.0..1.0).contains(&self.background.max_demand) {
            bail!("background max_demand must lie in [0, 1)");
        }
        match &self.traces {
            TraceSource::Generate(g) => g.validate()?,
            TraceSource::Load(paths) if paths.is_empty() => bail!("traces.load lists no files"),
            TraceSource::Load(_) => {}
        }
        self.video.validate()?;
        self.sim.validate()?;
        Ok(())
    }

    pub fn rep_seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.repetitions as u64).map(move |r| self.seed_base + r)
    }
}
